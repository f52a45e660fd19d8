use proptest::prelude::*;
use wsp_core::exec::SERIAL;
use wsp_core::fields::{gradient, Grid, TensorField};
use wsp_core::kernels::CutoffSpec;
use wsp_core::pressure::{phi_change_constant, poisson_residual, PressureSolver};

fn gaussian_source(grid: Grid, a: f64, c: f64) -> TensorField {
    TensorField::from_fn(grid, 0.0, |x| {
        let e = (-a * (x[0] * x[0] + x[1] * x[1])).exp();
        [[e, c * e, 0.0], [c * e, x[0] * e, 0.0], [0.0; 3]]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pressure_is_linear_in_the_source(a in 0.5f64..2.0, c in -1.0f64..1.0, s in -3.0f64..3.0) {
        let grid = Grid::new(2, 32, 4.0).unwrap();
        let solver = PressureSolver::new(CutoffSpec::default(), &SERIAL).unwrap();
        let h = gaussian_source(grid, a, c);
        let p = solver.p_phi_from_source(&h).unwrap();
        let ps = solver.p_phi_from_source(&h.scale(s)).unwrap();
        let err = ps.sub(&p.scale(s)).unwrap().max_abs();
        prop_assert!(err <= 1e-12 * (1.0 + s.abs() * p.max_abs()));
    }

    #[test]
    fn changing_the_cutoff_adds_a_constant(a in 0.5f64..2.0, c in -1.0f64..1.0) {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let s1 = CutoffSpec::new(1.0, 2.0).unwrap();
        let s2 = CutoffSpec::new(1.5, 3.0).unwrap();
        let h = gaussian_source(grid, a, c);
        let p1 = PressureSolver::new(s1, &SERIAL).unwrap().p_phi_from_source(&h).unwrap();
        let p2 = PressureSolver::new(s2, &SERIAL).unwrap().p_phi_from_source(&h).unwrap();
        let k = phi_change_constant(&h, &s1, &s2).unwrap();
        let d = p1.sub(&p2).unwrap();
        let dev = d.values.iter().map(|v| (v - k).abs()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-9 * (1.0 + p1.max_abs()));
        let g = gradient(&d).max_abs();
        prop_assert!(g <= 1e-9);
    }
}

#[test]
fn poisson_residual_is_second_order() {
    let solver = PressureSolver::new(CutoffSpec::default(), &SERIAL).unwrap();
    let r: Vec<f64> = [64usize, 128]
        .iter()
        .map(|&n| {
            let h = gaussian_source(Grid::new(2, n, 8.0).unwrap(), 1.0, 0.5);
            poisson_residual(&solver.p_phi_from_source(&h).unwrap(), &h).unwrap()
        })
        .collect();
    assert!(r[0] / r[1] > 3.0, "{r:?}");
}

#[test]
fn unresolved_cutoff_is_rejected() {
    let solver = PressureSolver::new(CutoffSpec::new(0.1, 0.5).unwrap(), &SERIAL).unwrap();
    assert!(solver.check_resolution(&Grid::new(2, 16, 4.0).unwrap()).is_err());
}
