use wsp_core::fields::{Grid, TimeSeries, VectorField};
use wsp_core::galilean::{displacement, galilean_transform, ShiftOptions};

fn blob(grid: Grid, t: f64) -> VectorField {
    VectorField::from_fn(grid, t, |x| {
        let e = (-(x[0] * x[0] + x[1] * x[1])).exp();
        [x[1] * e, -x[0] * e, 0.0]
    })
}

#[test]
fn displacement_integrates_a_constant_drift() {
    let times = [0.0, 0.5, 1.0, 2.0];
    let d = displacement(&times, &[[1.0, -2.0, 0.0]; 4]).unwrap();
    for (t, e) in times.iter().zip(&d.displacement) {
        assert!((e[0] - t).abs() < 1e-15 && (e[1] + 2.0 * t).abs() < 1e-15);
    }
}

#[test]
fn forward_then_inverse_shift_round_trips() {
    let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.1).collect();
    let mut err = Vec::new();
    for n in [64usize, 128] {
        let grid = Grid::new(2, n, 6.0).unwrap();
        let u = TimeSeries::new(times.iter().map(|&t| blob(grid, t)).collect()).unwrap();
        let g: Vec<[f64; 3]> = times.iter().map(|&t| [t.cos(), 0.5, 0.0]).collect();
        let drift = displacement(&times, &g).unwrap();
        let opts = ShiftOptions::new(0.5);
        let w = galilean_transform(&u, &drift, &opts).unwrap();
        let back = galilean_transform(&w.series, &drift, &opts.inverse()).unwrap();
        let ring = 2 * w.invalid_ring + 2;
        let e = back
            .series
            .frames
            .iter()
            .zip(&u.frames)
            .map(|(a, b)| wsp_core::fields::vector_interior_max(&a.sub(b).unwrap(), ring))
            .fold(0.0, f64::max);
        err.push(e);
    }
    assert!(err[0] / err[1] > 3.0, "{err:?}");
}
