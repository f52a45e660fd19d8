//! Extended Galilean change of frame
//! `w(t, x) = u(t, x − E(t)) + g(t)`, `E(t) = ∫₀ᵗ g`.

use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::fields::{interpolate, Interp, ScalarField, TimeSeries, VectorField};
use crate::math;

/// Drift `g` and displacement `E` sampled at the frame times.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCurve {
    pub times: Vec<f64>,
    pub g: Vec<[f64; 3]>,
    pub displacement: Vec<[f64; 3]>,
}

/// Fills `E` by the cumulative trapezoid rule, `E(t₀) = 0`.
pub fn displacement(times: &[f64], g: &[[f64; 3]]) -> Result<DriftCurve> {
    if times.is_empty() || times.len() != g.len() {
        bail!(Structural, "drift needs one vector per time");
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        bail!(Parameter, "drift times must increase strictly");
    }
    let mut e = alloc::vec![[0.0; 3]; times.len()];
    for a in 0..3 {
        let col: Vec<f64> = g.iter().map(|v| v[a]).collect();
        for (k, v) in math::cumulative_trapezoid(times, &col).into_iter().enumerate() {
            e[k][a] = v;
        }
    }
    Ok(DriftCurve {
        times: times.to_vec(),
        g: g.to_vec(),
        displacement: e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftOptions {
    /// Largest admissible `max_a |E_a(t)|`.
    pub margin: f64,
    pub interp: Interp,
    /// Undo the change of frame: `u(t, x) = w(t, x + E) − g`.
    pub inverse: bool,
}

impl ShiftOptions {
    pub fn new(margin: f64) -> Self {
        ShiftOptions {
            margin,
            interp: Interp::Multilinear,
            inverse: false,
        }
    }

    pub fn cubic(mut self) -> Self {
        self.interp = Interp::Cubic;
        self
    }

    pub fn inverse(mut self) -> Self {
        self.inverse = true;
        self
    }
}

/// A shifted series. Nodes within `invalid_ring` of the faces may have
/// preimages outside the box, where the data are taken to vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Shifted<T> {
    pub series: TimeSeries<T>,
    pub invalid_ring: usize,
}

fn check_drift<T: crate::fields::Framed>(
    series: &TimeSeries<T>,
    drift: &DriftCurve,
    opts: &ShiftOptions,
) -> Result<usize> {
    if series.times != drift.times {
        bail!(Structural, "drift times do not match the frame times");
    }
    if !(opts.margin >= 0.0) {
        bail!(Parameter, "margin must be non-negative");
    }
    let d = series.grid().dim();
    let frames: Vec<usize> = drift
        .displacement
        .iter()
        .enumerate()
        .filter(|(_, e)| (0..d).any(|a| e[a].abs() > opts.margin))
        .map(|(k, _)| k)
        .collect();
    if !frames.is_empty() {
        return Err(Error::Range { frames });
    }
    let h = series.grid().spacing();
    let extra = if opts.interp == Interp::Cubic { 2 } else { 1 };
    Ok(math::ceil(opts.margin / h) as usize + extra)
}

fn shift_values(f: &ScalarField, e: &[f64; 3], sign: f64, interp: Interp) -> Vec<f64> {
    let g = &f.grid;
    (0..g.len())
        .map(|l| {
            let p = g.point(l);
            let q = [p[0] - sign * e[0], p[1] - sign * e[1], p[2] - sign * e[2]];
            interpolate(g, &f.values, &q, interp).unwrap_or(0.0)
        })
        .collect()
}

/// `w(t, x) = u(t, x − E(t)) + g(t)` (or its inverse).
pub fn galilean_transform(
    u: &TimeSeries<VectorField>,
    drift: &DriftCurve,
    opts: &ShiftOptions,
) -> Result<Shifted<VectorField>> {
    let invalid_ring = check_drift(u, drift, opts)?;
    let sign = if opts.inverse { -1.0 } else { 1.0 };
    let frames = u
        .frames
        .iter()
        .enumerate()
        .map(|(k, uk)| {
            let e = &drift.displacement[k];
            let comps = uk
                .components
                .iter()
                .enumerate()
                .map(|(a, c)| {
                    let off = sign * drift.g[k][a];
                    let v = shift_values(c, e, sign, opts.interp)
                        .into_iter()
                        .map(|x| x + off)
                        .collect();
                    ScalarField::new(uk.grid, uk.time, v)
                })
                .collect::<Result<Vec<_>>>()?;
            VectorField::new(comps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Shifted {
        series: TimeSeries::new(frames)?,
        invalid_ring,
    })
}

/// `q(t, x) = p(t, x − E(t))` (or its inverse).
pub fn galilean_pressure(
    p: &TimeSeries<ScalarField>,
    drift: &DriftCurve,
    opts: &ShiftOptions,
) -> Result<Shifted<ScalarField>> {
    let invalid_ring = check_drift(p, drift, opts)?;
    let sign = if opts.inverse { -1.0 } else { 1.0 };
    let frames = p
        .frames
        .iter()
        .enumerate()
        .map(|(k, pk)| {
            ScalarField::new(
                pk.grid,
                pk.time,
                shift_values(pk, &drift.displacement[k], sign, opts.interp),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Shifted {
        series: TimeSeries::new(frames)?,
        invalid_ring,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, Point};

    fn series(g: Grid, ts: &[f64], f: impl Fn(Point, f64) -> [f64; 3]) -> TimeSeries<VectorField> {
        TimeSeries::new(ts.iter().map(|&t| VectorField::from_fn(g, t, |p| f(p, t))).collect()).unwrap()
    }

    #[test]
    fn displacement_examples() {
        let ts = [0.0, 0.1, 0.3, 0.6, 1.0];
        let zero = displacement(&ts, &[[0.0; 3]; 5]).unwrap();
        assert!(zero.displacement.iter().all(|e| *e == [0.0; 3]));
        let c = displacement(&ts, &[[2.0, -1.0, 0.5]; 5]).unwrap();
        for (k, t) in ts.iter().enumerate() {
            assert!((c.displacement[k][0] - 2.0 * t).abs() < 1e-15);
            assert!((c.displacement[k][1] + t).abs() < 1e-15);
        }
        let fine: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let g: Vec<[f64; 3]> = fine.iter().map(|t| [*t, 0.0, 0.0]).collect();
        let lin = displacement(&fine, &g).unwrap();
        for (k, t) in fine.iter().enumerate() {
            assert!((lin.displacement[k][0] - t * t / 2.0).abs() < 1e-12);
        }
        assert!(displacement(&[0.0, 0.0], &[[0.0; 3]; 2]).is_err());
    }

    #[test]
    fn zero_drift_is_identity_and_zero_field_gives_offset() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let ts = [0.0, 0.5, 1.0];
        let u = series(g, &ts, |p, t| [math::sin(p[0] + t), p[1], 0.0]);
        let still = displacement(&ts, &[[0.0; 3]; 3]).unwrap();
        let w = galilean_transform(&u, &still, &ShiftOptions::new(0.0)).unwrap();
        for (a, b) in w.series.frames.iter().zip(&u.frames) {
            for (x, y) in a.components.iter().zip(&b.components) {
                for (p, q) in x.values.iter().zip(&y.values) {
                    assert!((p - q).abs() < 1e-14);
                }
            }
        }
        let gv = [[0.3, -0.2, 0.0], [0.1, 0.0, 0.0], [-0.4, 0.5, 0.0]];
        let drift = displacement(&ts, &gv).unwrap();
        let zero = series(g, &ts, |_, _| [0.0; 3]);
        let w = galilean_transform(&zero, &drift, &ShiftOptions::new(1.0)).unwrap();
        for (k, f) in w.series.frames.iter().enumerate() {
            for a in 0..2 {
                assert!(f.components[a].values.iter().all(|v| *v == gv[k][a]));
            }
        }
    }

    #[test]
    fn margin_violation_lists_frames() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let ts = [0.0, 1.0, 2.0];
        let drift = displacement(&ts, &[[1.0, 0.0, 0.0]; 3]).unwrap();
        let u = series(g, &ts, |_, _| [0.0; 3]);
        match galilean_transform(&u, &drift, &ShiftOptions::new(1.5)) {
            Err(Error::Range { frames }) => assert_eq!(frames, alloc::vec![2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn radial_peak_moves_with_the_shift() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let ts = [0.0, 1.0, 2.0];
        let p = TimeSeries::new(
            ts.iter()
                .map(|&t| ScalarField::from_fn(g, t, |x| math::exp(-(x[0] * x[0] + x[1] * x[1]))))
                .collect(),
        )
        .unwrap();
        let drift = displacement(&ts, &[[0.75, 0.0, 0.0]; 3]).unwrap();
        let q = galilean_pressure(&p, &drift, &ShiftOptions::new(2.0)).unwrap();
        for (k, f) in q.series.frames.iter().enumerate() {
            let (arg, _) = f
                .values
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |m, (l, v)| if *v > m.1 { (l, *v) } else { m });
            let at = g.point(arg);
            assert!((at[0] - drift.displacement[k][0]).abs() <= g.spacing());
            assert!(at[1].abs() <= g.spacing());
        }
    }
}
