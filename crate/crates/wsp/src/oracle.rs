//! Reference implementations: a periodic spectral pressure solver on an
//! enlarged box and brute-force quadrature of the pressure integrals.
//! Neither shares summation code with `wsp_core`; only the closed-form
//! kernel evaluators are reused.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use wsp_core::fields::{self, interpolate, Grid, Interp, Point, ScalarField, TensorField, VectorField};
use wsp_core::kernels::{self, CutoffSpec, HeatThirdKernel};
use wsp_core::{Error, Result};

fn fft_axis(data: &mut [Complex<f64>], dim: usize, m: usize, axis: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    let stride = m.pow((dim - 1 - axis) as u32);
    let mut line = vec![Complex::new(0.0, 0.0); m];
    for start in 0..data.len() {
        // first element of each line: index with zero coordinate on `axis`
        if (start / stride) % m != 0 {
            continue;
        }
        for (k, v) in line.iter_mut().enumerate() {
            *v = data[start + k * stride];
        }
        fft.process(&mut line);
        for (k, v) in line.iter().enumerate() {
            data[start + k * stride] = *v;
        }
    }
}

fn fft_nd(data: &mut [Complex<f64>], dim: usize, m: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..dim {
        fft_axis(data, dim, m, axis, inverse, &mut planner);
    }
    if inverse {
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Periodic box of `m` nodes per axis sharing origin and spacing with
/// `grid`; the original nodes occupy the leading corner.
fn enlarged(grid: &Grid, enlargement: f64) -> Result<(usize, Grid)> {
    if !(enlargement >= 1.0 && enlargement.is_finite()) {
        return Err(Error::Parameter(format!("enlargement must be >= 1, got {enlargement}")));
    }
    let mut m = (grid.n() as f64 * enlargement).round() as usize;
    m += m % 2;
    let h = grid.spacing();
    let half = 0.5 * m as f64 * h;
    let mut centre = grid.origin();
    for c in centre.iter_mut().take(grid.dim()) {
        *c += half - grid.half_width();
    }
    let big = Grid::new(grid.dim(), m, half)?.with_origin(centre);
    Ok((m, big))
}

fn embed(grid: &Grid, m: usize, values: &[f64]) -> Vec<Complex<f64>> {
    let d = grid.dim();
    let mut out = vec![Complex::new(0.0, 0.0); m.pow(d as u32)];
    for (l, v) in values.iter().enumerate() {
        out[big_index(grid, m, l)] = Complex::new(*v, 0.0);
    }
    out
}

fn big_index(grid: &Grid, m: usize, l: usize) -> usize {
    let idx = grid.multi_index(l);
    let d = grid.dim();
    (0..d).fold(0, |acc, a| acc * m + idx[a])
}

fn wavenumbers(m: usize, h: f64) -> Vec<f64> {
    let len = m as f64 * h;
    (0..m)
        .map(|k| {
            let s = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            2.0 * std::f64::consts::PI * s / len
        })
        .collect()
}

fn xi_at(dim: usize, m: usize, lin: usize, ks: &[f64]) -> [f64; 3] {
    let mut xi = [0.0; 3];
    let mut rest = lin;
    for a in (0..dim).rev() {
        xi[a] = ks[rest % m];
        rest /= m;
    }
    xi
}

/// `p̂ = −Σ ξᵢξⱼ ĥᵢⱼ / |ξ|²` on the periodic box, `p̂(0) = 0`, over every
/// node of the enlarged box.
pub fn spectral_pressure_periodic(h_all: &TensorField, enlargement: f64) -> Result<ScalarField> {
    let grid = h_all.grid;
    let d = grid.dim();
    let (m, big) = enlarged(&grid, enlargement)?;
    let ks = wavenumbers(m, grid.spacing());
    let total = m.pow(d as u32);
    let mut acc = vec![Complex::new(0.0, 0.0); total];
    for i in 0..d {
        for j in 0..d {
            let c = &h_all.components[i * d + j];
            c.validate()?;
            if c.values.iter().all(|v| *v == 0.0) {
                continue;
            }
            let mut buf = embed(&grid, m, &c.values);
            fft_nd(&mut buf, d, m, false);
            for (lin, (a, b)) in acc.iter_mut().zip(&buf).enumerate() {
                let xi = xi_at(d, m, lin, &ks);
                *a -= b * (xi[i] * xi[j]);
            }
        }
    }
    for (lin, a) in acc.iter_mut().enumerate() {
        let xi = xi_at(d, m, lin, &ks);
        let n2: f64 = xi.iter().map(|v| v * v).sum();
        *a = if n2 > 0.0 { *a / n2 } else { Complex::new(0.0, 0.0) };
    }
    fft_nd(&mut acc, d, m, true);
    ScalarField::new(big, h_all.time, acc.iter().map(|c| c.re).collect())
}

/// [`spectral_pressure_periodic`] restricted to the original box.
pub fn spectral_pressure(h_all: &TensorField, enlargement: f64) -> Result<ScalarField> {
    let grid = h_all.grid;
    let big = spectral_pressure_periodic(h_all, enlargement)?;
    let m = big.grid.n();
    let values = (0..grid.len()).map(|l| big.values[big_index(&grid, m, l)]).collect();
    ScalarField::new(grid, h_all.time, values)
}

/// `∂ᵢ∂ⱼf` by spectral differentiation on the periodic box of `f`.
pub fn spectral_second_derivative(f: &ScalarField, i: usize, j: usize) -> Result<ScalarField> {
    let g = f.grid;
    let d = g.dim();
    let m = g.n();
    let ks = wavenumbers(m, g.spacing());
    let mut buf: Vec<Complex<f64>> = f.values.iter().map(|v| Complex::new(*v, 0.0)).collect();
    fft_nd(&mut buf, d, m, false);
    for (lin, b) in buf.iter_mut().enumerate() {
        let xi = xi_at(d, m, lin, &ks);
        *b *= -xi[i] * xi[j];
    }
    fft_nd(&mut buf, d, m, true);
    ScalarField::new(g, f.time, buf.iter().map(|c| c.re).collect())
}

/// Spectral counterpart of `leray_project`: `w − ∇π` with `π` the spectral
/// pressure of `−H` and the same finite-difference divergence and gradient.
pub fn spectral_project(big_h: &TensorField, enlargement: f64) -> Result<VectorField> {
    let w = fields::divergence_tensor(big_h);
    let pi = spectral_pressure(&big_h.scale(-1.0), enlargement)?;
    w.sub(&fields::gradient(&pi))
}

/// Kernels accepted by [`quadrature_conv`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleKernel {
    /// `(φ∂ᵢ∂ⱼG_d) * h` in principal-value form with the Dirac share.
    Near { i: usize, j: usize, spec: CutoffSpec },
    /// `∫ [A_ij(x−y) − A_ij(−y)] h(y) dy`.
    CorrectedFar { i: usize, j: usize, spec: CutoffSpec },
    /// `∫ A_ij(x−y) h(y) dy`.
    PlainFar { i: usize, j: usize, spec: CutoffSpec },
    /// `∫ (e^{τΔ}∂ₖ∂ᵢ∂ⱼG_d)(x−y) h(y) dy`.
    HeatSmoothed { k: usize, i: usize, j: usize, tau: f64 },
}

impl OracleKernel {
    /// Parses `near`, `corrected-far`, `plain-far` or `heat`.
    pub fn from_name(name: &str, idx: [usize; 3], spec: CutoffSpec, tau: f64) -> Result<Self> {
        let [a, b, c] = idx;
        Ok(match name {
            "near" => OracleKernel::Near { i: a, j: b, spec },
            "corrected-far" => OracleKernel::CorrectedFar { i: a, j: b, spec },
            "plain-far" => OracleKernel::PlainFar { i: a, j: b, spec },
            "heat" => OracleKernel::HeatSmoothed { k: a, i: b, j: c, tau },
            other => return Err(Error::Parameter(format!("unknown oracle kernel '{other}'"))),
        })
    }
}

/// The source sampled on a refined lattice: cubic interpolation inside the
/// hull of the nodes, zero outside.
struct Refined<'a> {
    f: &'a ScalarField,
    step: f64,
}

impl Refined<'_> {
    fn at(&self, p: &Point) -> f64 {
        interpolate(&self.f.grid, &self.f.values, p, Interp::Cubic).unwrap_or(0.0)
    }

    /// Every refined node of the hull with its sample.
    fn nodes(&self, k: usize) -> Vec<(Point, f64)> {
        let g = &self.f.grid;
        let d = g.dim();
        let per = (g.n() - 1) * k + 1;
        let o = g.point(0);
        let count = per.pow(d as u32);
        let mut out = Vec::with_capacity(count);
        for lin in 0..count {
            let mut p = [0.0; 3];
            let mut rest = lin;
            for a in (0..d).rev() {
                p[a] = o[a] + (rest % per) as f64 * self.step;
                rest /= per;
            }
            let v = self.at(&p);
            if v != 0.0 {
                out.push((p, v));
            }
        }
        out
    }
}

fn check_ij(d: usize, idx: &[usize]) -> Result<()> {
    if idx.iter().any(|i| *i >= d) {
        return Err(Error::Parameter(format!("index out of range for dimension {d}")));
    }
    Ok(())
}

/// Direct Riemann sums at spacing `h / oversample`.
pub fn quadrature_conv(kernel: &OracleKernel, h: &ScalarField, probes: &[Point], oversample: usize) -> Result<Vec<f64>> {
    if ![1, 2, 4].contains(&oversample) {
        return Err(Error::Parameter(format!("oversample must be 1, 2 or 4, got {oversample}")));
    }
    h.validate()?;
    let g = h.grid;
    let d = g.dim();
    let step = g.spacing() / oversample as f64;
    let vol = step.powi(d as i32);
    let src = Refined { f: h, step };
    let sub = |a: &Point, b: &Point| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    match *kernel {
        OracleKernel::Near { i, j, spec } => {
            check_ij(d, &[i, j])?;
            let r = (spec.r1 / step).ceil() as isize;
            let span = |a: usize| if a < d { -r..=r } else { 0..=0 };
            let mut out = Vec::with_capacity(probes.len());
            for x in probes {
                let hx = src.at(x);
                let mut s = 0.0;
                for a in span(0) {
                    for b in span(1) {
                        for c in span(2) {
                            if a == 0 && b == 0 && c == 0 {
                                continue;
                            }
                            let z = [a as f64 * step, b as f64 * step, c as f64 * step];
                            let y = [x[0] - z[0], x[1] - z[1], x[2] - z[2]];
                            s += kernels::near_kernel(&z, i, j, &spec, d) * (src.at(&y) - hx);
                        }
                    }
                }
                let dirac = if i == j { hx / d as f64 } else { 0.0 };
                out.push(s * vol - dirac);
            }
            Ok(out)
        }
        OracleKernel::CorrectedFar { i, j, spec } | OracleKernel::PlainFar { i, j, spec } => {
            check_ij(d, &[i, j])?;
            let corrected = matches!(kernel, OracleKernel::CorrectedFar { .. });
            let nodes = src.nodes(oversample);
            Ok(probes
                .iter()
                .map(|x| {
                    let mut s = 0.0;
                    for (y, v) in &nodes {
                        let mut k = kernels::far_kernel(&sub(x, y), i, j, &spec, d);
                        if corrected {
                            k -= kernels::far_kernel(&[-y[0], -y[1], -y[2]], i, j, &spec, d);
                        }
                        s += k * v;
                    }
                    s * vol
                })
                .collect())
        }
        OracleKernel::HeatSmoothed { k, i, j, tau } => {
            check_ij(d, &[k, i, j])?;
            let kern = HeatThirdKernel::new(d)?;
            let nodes = src.nodes(oversample);
            probes
                .iter()
                .map(|x| {
                    let mut s = 0.0;
                    for (y, v) in &nodes {
                        s += kern.eval(&sub(x, y), tau, k, i, j)? * v;
                    }
                    Ok(s * vol)
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    pub oversample: usize,
    pub values: Vec<f64>,
    /// `|Q_k − Q_{k/2}|` (`|Q₁ − Q₂|` for `k = 1`).
    pub error_estimate: Vec<f64>,
}

pub fn quadrature_with_estimate(
    kernel: &OracleKernel,
    h: &ScalarField,
    probes: &[Point],
    oversample: usize,
) -> Result<QuadratureEstimate> {
    let values = quadrature_conv(kernel, h, probes, oversample)?;
    let other = quadrature_conv(kernel, h, probes, if oversample == 1 { 2 } else { oversample / 2 })?;
    Ok(QuadratureEstimate {
        oversample,
        error_estimate: values.iter().zip(&other).map(|(a, b)| (a - b).abs()).collect(),
        values,
    })
}

/// Discrepancy of a fast-path vector field against a reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    #[serde(skip)]
    pub reference: VectorField,
    pub relative_l2: f64,
    pub max_abs: f64,
    pub relative_max: f64,
    pub ring: usize,
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub enlargement: f64,
}

/// Compares `fast` with `reference` on interior nodes only.
pub fn compare(fast: &VectorField, reference: VectorField, ring: usize, enlargement: f64) -> Result<OracleResult> {
    let diff = fast.sub(&reference)?;
    let nd = fields::vector_interior_l2(&diff, ring);
    let nr = fields::vector_interior_l2(&reference, ring);
    let md = fields::vector_interior_max(&diff, ring);
    let mr = fields::vector_interior_max(&reference, ring);
    let g = reference.grid;
    Ok(OracleResult {
        relative_l2: if nr > 0.0 { nd / nr } else { nd },
        max_abs: md,
        relative_max: if mr > 0.0 { md / mr } else { md },
        ring,
        dim: g.dim(),
        n: g.n(),
        half_width: g.half_width(),
        enlargement,
        reference,
    })
}

/// `∇p_φ` against the gradient of the spectral pressure.
pub fn compare_pressure(
    solver: &wsp_core::pressure::PressureSolver<'_>,
    h_all: &TensorField,
    enlargement: f64,
    ring: usize,
) -> Result<OracleResult> {
    let fast = fields::gradient(&solver.p_phi_from_source(h_all)?);
    let reference = fields::gradient(&spectral_pressure(h_all, enlargement)?);
    compare(&fast, reference, ring, enlargement)
}

/// `leray_project(H).solenoidal` against [`spectral_project`].
pub fn compare_projection(
    solver: &wsp_core::pressure::PressureSolver<'_>,
    big_h: &TensorField,
    enlargement: f64,
    ring: usize,
) -> Result<OracleResult> {
    let fast = wsp_core::leray::leray_project(solver, big_h)?.solenoidal;
    let reference = spectral_project(big_h, enlargement)?;
    compare(&fast, reference, ring, enlargement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wsp_core::pressure::PressureSolver;
    use wsp_core::SERIAL;

    fn gaussian(grid: Grid, s: f64) -> ScalarField {
        ScalarField::from_fn(grid, 0.0, |p| (-s * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp())
    }

    fn single(grid: Grid, i: usize, j: usize, f: ScalarField) -> TensorField {
        let d = grid.dim();
        let mut c: Vec<ScalarField> = (0..d * d).map(|_| ScalarField::zeros(grid)).collect();
        c[i * d + j] = f;
        TensorField::new(c, i == j).unwrap()
    }

    #[test]
    fn spectral_pressure_of_zero() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let p = spectral_pressure(&TensorField::zeros(g), 2.0).unwrap();
        assert_eq!(p.max_abs(), 0.0);
        assert!(spectral_pressure(&TensorField::zeros(g), 0.5).is_err());
    }

    #[test]
    fn single_mode_is_solved_exactly() {
        let n = 32;
        let l = std::f64::consts::PI;
        let g = Grid::new(2, n, l).unwrap();
        // box length 2π: k = (2, 3)
        let k = [2.0, 3.0];
        let f = ScalarField::from_fn(g, 0.0, |p| (k[0] * p[0] + k[1] * p[1]).cos());
        let p = spectral_pressure(&single(g, 0, 0, f), 1.0).unwrap();
        let k2 = k[0] * k[0] + k[1] * k[1];
        for l in 0..g.len() {
            let x = g.point(l);
            let want = -(k[0] * k[0] / k2) * (k[0] * x[0] + k[1] * x[1]).cos();
            assert!((p.values[l] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_poisson_identity() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let mut c: Vec<ScalarField> = Vec::new();
        for (i, s) in [1.0, 0.7, 0.7, 2.0].iter().enumerate() {
            c.push(gaussian(g, *s).scale(1.0 + i as f64));
        }
        let h = TensorField::new(c, false).unwrap();
        let p = spectral_pressure_periodic(&h, 1.5).unwrap();
        let big = p.grid;
        let mut lap = ScalarField::zeros(big);
        let mut src = ScalarField::zeros(big);
        for a in 0..2 {
            lap = lap.add(&spectral_second_derivative(&p, a, a).unwrap()).unwrap();
        }
        let (m, _) = enlarged(&g, 1.5).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut vals = vec![0.0; big.len()];
                for (l, v) in h.components[i * 2 + j].values.iter().enumerate() {
                    vals[big_index(&g, m, l)] = *v;
                }
                let f = ScalarField::new(big, 0.0, vals).unwrap();
                src = src.add(&spectral_second_derivative(&f, i, j).unwrap()).unwrap();
            }
        }
        let res = lap.add(&src).unwrap().max_abs();
        // the mean of the source is dropped by p̂(0) = 0
        assert!(res <= 1e-10 * src.max_abs(), "{res}");
    }

    #[test]
    fn enlargement_sweep_is_self_consistent() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        let q = gaussian(g, 2.0);
        let iso = TensorField::new(vec![q.clone(), ScalarField::zeros(g), ScalarField::zeros(g), q.clone()], true).unwrap();
        let grad = |h: &TensorField, e: f64| fields::gradient(&spectral_pressure(h, e).unwrap());
        let r = compare(&grad(&iso, 2.0), grad(&iso, 4.0), 2, 4.0).unwrap();
        assert!(r.relative_l2 < 1e-4, "{}", r.relative_l2);
        // a net quadrupole periodizes with images decaying like the period^{-4}
        let h = single(g, 0, 1, q);
        let r24 = compare(&grad(&h, 2.0), grad(&h, 4.0), 2, 4.0).unwrap().relative_l2;
        let r48 = compare(&grad(&h, 4.0), grad(&h, 8.0), 2, 8.0).unwrap().relative_l2;
        assert!(r48 < r24 / 8.0, "{r24} {r48}");
    }

    #[test]
    fn quadrature_trivial_cases() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let spec = CutoffSpec::new(0.5, 1.0).unwrap();
        let probes = [[0.0; 3], [0.5, -0.25, 0.0]];
        let z = ScalarField::zeros(g);
        for k in [
            OracleKernel::Near { i: 0, j: 0, spec },
            OracleKernel::PlainFar { i: 0, j: 1, spec },
            OracleKernel::HeatSmoothed { k: 0, i: 0, j: 0, tau: 1.0 },
        ] {
            assert!(quadrature_conv(&k, &z, &probes, 1).unwrap().iter().all(|v| *v == 0.0));
        }
        let f = gaussian(g, 1.0);
        let c = quadrature_conv(&OracleKernel::CorrectedFar { i: 0, j: 1, spec }, &f, &[[0.0; 3]], 2).unwrap();
        assert_eq!(c[0], 0.0);
        assert!(quadrature_conv(&OracleKernel::Near { i: 0, j: 0, spec }, &f, &probes, 3).is_err());
        assert!(OracleKernel::from_name("bogus", [0; 3], spec, 1.0).is_err());
    }

    #[test]
    fn oversample_one_reproduces_the_fast_path() {
        for dim in [2usize, 3] {
            let g = Grid::new(dim, 16, 2.0).unwrap();
            let spec = CutoffSpec::new(1.0, 1.5).unwrap();
            let sol = PressureSolver::new(spec, &SERIAL).unwrap();
            let f = gaussian(g, 1.5).map(|v| v * 1.0);
            let probes: Vec<Point> = [[8usize, 8, 8], [5, 9, 7], [2, 13, 3]]
                .iter()
                .map(|i| g.point(g.index(*i)))
                .collect();
            let at = |s: &ScalarField| -> Vec<f64> {
                probes
                    .iter()
                    .map(|p| {
                        let mut idx = [0usize; 3];
                        for a in 0..dim {
                            idx[a] = g.fractional(a, p[a]).round() as usize;
                        }
                        s.values[g.index(idx)]
                    })
                    .collect()
            };
            for (i, j) in [(0, 0), (0, 1)] {
                let pairs = [
                    (OracleKernel::Near { i, j, spec }, sol.near_field_conv(&f, i, j).unwrap()),
                    (OracleKernel::CorrectedFar { i, j, spec }, sol.far_field_corrected(&f, i, j).unwrap()),
                ];
                for (k, fast) in pairs {
                    let q = quadrature_conv(&k, &f, &probes, 1).unwrap();
                    for (a, b) in q.iter().zip(at(&fast)) {
                        assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{k:?}: {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn richardson_consistency() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let spec = CutoffSpec::new(0.5, 1.0).unwrap();
        let f = gaussian(g, 1.0);
        let probes = [[0.0; 3], [0.25, 0.5, 0.0]];
        let k = OracleKernel::Near { i: 0, j: 0, spec };
        let e2 = quadrature_with_estimate(&k, &f, &probes, 2).unwrap();
        let q4 = quadrature_conv(&k, &f, &probes, 4).unwrap();
        for ((a, b), e) in q4.iter().zip(&e2.values).zip(&e2.error_estimate) {
            assert!((a - b).abs() <= *e, "{a} {b} {e}");
        }
    }
}
