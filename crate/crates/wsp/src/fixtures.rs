//! Manufactured fields used by the verification suites, the acceptance
//! tests and `gen-fixture`.

use wsp_core::fields::{Grid, Point, ScalarField, TensorField, TimeSeries, VectorField};
use wsp_core::kernels::CutoffSpec;
use wsp_core::Result;

fn r2(p: &Point) -> f64 {
    p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
}

/// Samples `f(t)` at every time.
pub fn series<T: wsp_core::fields::Framed>(times: &[f64], f: impl Fn(f64) -> T) -> Result<TimeSeries<T>> {
    TimeSeries::new(times.iter().map(|&t| f(t)).collect())
}

/// `t_k = k T / steps`, `k = 0..=steps`.
pub fn uniform_times(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect()
}

/// `u = ∇^⊥ e^{−|x|²}` in the plane (the third component is zero).
pub fn gaussian_vortex(grid: Grid) -> VectorField {
    VectorField::from_fn(grid, 0.0, |p| {
        let e = (-r2(&p)).exp();
        [-2.0 * p[1] * e, 2.0 * p[0] * e, 0.0]
    })
}

/// Curl of `(e₂, 0, e₁)` with Gaussians `e₁`, `e₂` centred at
/// `(0.3, 0, 0)` and `(0, −0.2, 0.4)`.
pub fn offset_gaussian_curl(grid: Grid) -> VectorField {
    VectorField::from_fn(grid, 0.0, |p| {
        let e1 = (-((p[0] - 0.3).powi(2) + p[1] * p[1] + p[2] * p[2])).exp();
        let e2 = (-(p[0] * p[0] + (p[1] + 0.2).powi(2) + (p[2] - 0.4).powi(2))).exp();
        let dy_e1 = -2.0 * p[1] * e1;
        let dx_e1 = -2.0 * (p[0] - 0.3) * e1;
        let dz_e2 = -2.0 * (p[2] - 0.4) * e2;
        let dy_e2 = -2.0 * (p[1] + 0.2) * e2;
        [dy_e1, dz_e2 - dx_e1, -dy_e2]
    })
}

/// The smooth divergence-free test field for a dimension.
pub fn vortex(grid: Grid) -> VectorField {
    if grid.dim() == 2 {
        gaussian_vortex(grid)
    } else {
        offset_gaussian_curl(grid)
    }
}

/// Decaying planar vortex `u = ∇^⊥ψ`, `ψ = e^{−|x|²/4s}/s`, `s = t + s0`.
/// `ψ` solves the heat equation and `u·∇u` is a gradient, so `u` is an
/// exact Navier–Stokes solution without forcing, with pressure gradient
/// `∇q = x e^{−|x|²/2s} / (4s⁴)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatVortex {
    pub s0: f64,
}

impl Default for HeatVortex {
    fn default() -> Self {
        HeatVortex { s0: 1.0 }
    }
}

impl HeatVortex {
    fn psi(&self, p: &Point, t: f64) -> (f64, f64) {
        let s = t + self.s0;
        ((-(p[0] * p[0] + p[1] * p[1]) / (4.0 * s)).exp() / s, s)
    }

    pub fn velocity(&self, p: &Point, t: f64) -> [f64; 3] {
        let (psi, s) = self.psi(p, t);
        [p[1] * psi / (2.0 * s), -p[0] * psi / (2.0 * s), 0.0]
    }

    pub fn dt_velocity(&self, p: &Point, t: f64) -> [f64; 3] {
        let (psi, s) = self.psi(p, t);
        let r2 = p[0] * p[0] + p[1] * p[1];
        // ∂ₜ(ψ/2s) = ψ/2s · (r²/4s² − 2/s)
        let c = psi / (2.0 * s) * (r2 / (4.0 * s * s) - 2.0 / s);
        [p[1] * c, -p[0] * c, 0.0]
    }

    pub fn pressure(&self, p: &Point, t: f64) -> f64 {
        let s = t + self.s0;
        -(-(p[0] * p[0] + p[1] * p[1]) / (2.0 * s)).exp() / (4.0 * s.powi(3))
    }

    pub fn pressure_gradient(&self, p: &Point, t: f64) -> [f64; 3] {
        let s = t + self.s0;
        let c = (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * s)).exp() / (4.0 * s.powi(4));
        [p[0] * c, p[1] * c, 0.0]
    }

    pub fn velocity_series(&self, grid: Grid, times: &[f64]) -> Result<TimeSeries<VectorField>> {
        series(times, |t| VectorField::from_fn(grid, t, |p| self.velocity(&p, t)))
    }

    /// `S = Δu − ∇·(u⊗u) − ∂ₜu = ∇q`.
    pub fn source_series(&self, grid: Grid, times: &[f64]) -> Result<TimeSeries<VectorField>> {
        series(times, |t| VectorField::from_fn(grid, t, |p| self.pressure_gradient(&p, t)))
    }

    pub fn pressure_series(&self, grid: Grid, times: &[f64]) -> Result<TimeSeries<ScalarField>> {
        series(times, |t| ScalarField::from_fn(grid, t, |p| self.pressure(&p, t)))
    }

    /// `max |u|`, attained at `|x| = √(2s)`.
    pub fn velocity_scale(&self, t: f64) -> f64 {
        let s = t + self.s0;
        (2.0 * s).sqrt() * (-0.5f64).exp() / (2.0 * s * s)
    }
}

/// A [`HeatVortex`] `w` seen from the frame drifting with
/// `g(t) = (a sin t, 0, 0)`: `u(t, x) = w(t, x + E(t)) − g(t)` with
/// `E(t) = (a(1 − cos t), 0, 0)`. `u` solves the forced system with
/// `S = ∇q(t, x + E) + g′(t)`; the forcing `F = g⊗g` is divergence free and
/// only removes the constant part of `u⊗u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftingVortex {
    pub vortex: HeatVortex,
    pub amplitude: f64,
}

impl Default for DriftingVortex {
    fn default() -> Self {
        DriftingVortex {
            vortex: HeatVortex::default(),
            amplitude: 1.0,
        }
    }
}

impl DriftingVortex {
    pub fn g(&self, t: f64) -> [f64; 3] {
        [self.amplitude * t.sin(), 0.0, 0.0]
    }

    pub fn dt_g(&self, t: f64) -> [f64; 3] {
        [self.amplitude * t.cos(), 0.0, 0.0]
    }

    pub fn displacement(&self, t: f64) -> [f64; 3] {
        [self.amplitude * (1.0 - t.cos()), 0.0, 0.0]
    }

    fn moved(&self, p: &Point, t: f64) -> Point {
        let e = self.displacement(t);
        [p[0] + e[0], p[1] + e[1], p[2] + e[2]]
    }

    pub fn velocity_series(&self, grid: Grid, times: &[f64]) -> Result<TimeSeries<VectorField>> {
        series(times, |t| {
            let g = self.g(t);
            VectorField::from_fn(grid, t, |p| {
                let w = self.vortex.velocity(&self.moved(&p, t), t);
                [w[0] - g[0], w[1] - g[1], w[2] - g[2]]
            })
        })
    }

    pub fn source_series(&self, grid: Grid, times: &[f64]) -> Result<TimeSeries<VectorField>> {
        series(times, |t| {
            let dg = self.dt_g(t);
            VectorField::from_fn(grid, t, |p| {
                let q = self.vortex.pressure_gradient(&self.moved(&p, t), t);
                [q[0] + dg[0], q[1] + dg[1], q[2] + dg[2]]
            })
        })
    }

    pub fn forcing_series(&self, grid: Grid, times: &[f64]) -> Result<TimeSeries<TensorField>> {
        series(times, |t| {
            let g = self.g(t);
            TensorField::from_fn(grid, t, |_| {
                let mut m = [[0.0; 3]; 3];
                for (i, row) in m.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = g[i] * g[j];
                    }
                }
                m
            })
        })
    }

    pub fn drift(&self, times: &[f64]) -> Vec<[f64; 3]> {
        times.iter().map(|&t| self.g(t)).collect()
    }
}

/// Stationary elliptic vortex `u = ∇^⊥ψ`, `ψ = e^{−x²/2 − y²}` (planar).
/// Gaussian decay with a net quadrupole moment of `u⊗u`, so its pressure
/// decays like `|x|^{−d}` and periodization is visible.
pub fn fast_decay(grid: Grid) -> VectorField {
    if grid.dim() == 3 {
        return offset_gaussian_curl(grid);
    }
    VectorField::from_fn(grid, 0.0, |p| {
        let e = (-(0.5 * p[0] * p[0] + p[1] * p[1])).exp();
        [2.0 * p[1] * e, -p[0] * e, 0.0]
    })
}

/// Antisymmetric potential of [`vortex`]: `[[0, ψ], [−ψ, 0]]` with
/// `ψ = e^{−|x|²}` in the plane, `H_ij = ε_ijk A_k` with
/// `A = (e₂, 0, e₁)` in space.
pub fn stream_potential(grid: Grid) -> TensorField {
    if grid.dim() == 2 {
        return TensorField::from_fn(grid, 0.0, |p| {
            let s = (-r2(&p)).exp();
            [[0.0, s, 0.0], [-s, 0.0, 0.0], [0.0; 3]]
        });
    }
    TensorField::from_fn(grid, 0.0, |p| {
        let e1 = (-((p[0] - 0.3).powi(2) + p[1] * p[1] + p[2] * p[2])).exp();
        let e2 = (-(p[0] * p[0] + (p[1] + 0.2).powi(2) + (p[2] - 0.4).powi(2))).exp();
        let a = [e2, 0.0, e1];
        [
            [0.0, a[2], -a[1]],
            [-a[2], 0.0, a[0]],
            [a[1], -a[0], 0.0],
        ]
    })
}

/// `H_ij = ∂ⱼbᵢ` for `b = (2yχ, −2xχ, 0)`, `χ = e^{−|x|²}`: `∇·H = Δb` is
/// divergence free.
pub fn solenoidal_potential(grid: Grid) -> TensorField {
    TensorField::from_fn(grid, 0.0, |p| {
        let c = (-r2(&p)).exp();
        let (x, y, z) = (p[0], p[1], p[2]);
        [
            [-4.0 * x * y * c, (2.0 - 4.0 * y * y) * c, -4.0 * y * z * c],
            [(-2.0 + 4.0 * x * x) * c, 4.0 * x * y * c, 4.0 * x * z * c],
            [0.0; 3],
        ]
    })
}

/// `H = qI`, `q = e^{−|x|²}`: `∇·H = ∇q`.
pub fn gradient_potential(grid: Grid) -> TensorField {
    TensorField::from_fn(grid, 0.0, |p| {
        let q = (-r2(&p)).exp();
        [[q, 0.0, 0.0], [0.0, q, 0.0], [0.0, 0.0, q]]
    })
}

/// Smooth bump `ϕ(|x|)` with the `(0.5, 1)` cutoff profile.
pub fn bump(grid: Grid) -> ScalarField {
    let spec = CutoffSpec::new(0.5, 1.0).expect("valid profile");
    ScalarField::from_fn(grid, 0.0, |p| spec.profile(r2(&p).sqrt()))
}

/// Compactly supported source tensor: `h₁₁ = ϕ`, `h₁₂ = h₂₁ = ϕ/2`.
pub fn compact_source(grid: Grid) -> TensorField {
    let b = bump(grid);
    let d = grid.dim();
    let mut comps: Vec<ScalarField> = (0..d * d).map(|_| ScalarField::zeros(grid)).collect();
    comps[0] = b.clone();
    comps[1] = b.scale(0.5);
    comps[d] = b.scale(0.5);
    TensorField::new(comps, true).expect("consistent components")
}

/// `(1 + |x|)^{(γ−d)/p}`, so that `|f|^p ~ |x|^{γ−d}`.
pub fn borderline_profile(grid: Grid, p: f64, gamma: f64) -> ScalarField {
    let e = (gamma - grid.dim() as f64) / p;
    ScalarField::from_fn(grid, 0.0, |x| (1.0 + r2(&x).sqrt()).powf(e))
}

/// Ten scalar fields of different decay and regularity.
pub fn spaces_family(grid: Grid) -> Vec<(String, ScalarField)> {
    let r = |p: &Point| r2(p).sqrt();
    let mut out: Vec<(String, ScalarField)> = Vec::new();
    out.push(("constant".into(), ScalarField::constant(grid, 1.0)));
    out.push((
        "unit-ball".into(),
        ScalarField::from_fn(grid, 0.0, |p| if r(&p) <= 1.0 { 1.0 } else { 0.0 }),
    ));
    for s in [0.25, 1.0, 4.0] {
        out.push((
            format!("gaussian-{s}"),
            ScalarField::from_fn(grid, 0.0, |p| (-s * r2(&p)).exp()),
        ));
    }
    for a in [0.5, 1.0, 2.0] {
        out.push((
            format!("power-{a}"),
            ScalarField::from_fn(grid, 0.0, |p| (1.0 + r(&p)).powf(-a)),
        ));
    }
    out.push((
        "shell".into(),
        ScalarField::from_fn(grid, 0.0, |p| (-(r(&p) - 3.0).powi(2)).exp()),
    ));
    out.push((
        "oscillating".into(),
        ScalarField::from_fn(grid, 0.0, |p| (2.0 * p[0]).sin() * (1.0 + r(&p)).powf(-0.75)),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use wsp_core::fields::{divergence, vector_laplacian, divergence_tensor, interior_max};

    #[test]
    fn heat_vortex_satisfies_the_momentum_balance() {
        // Δu − ∇·(u⊗u) − ∂ₜu − ∇q vanishes up to the stencil error
        let v = HeatVortex::default();
        for n in [64usize, 128] {
            let grid = Grid::new(2, n, 6.0).unwrap();
            let t = 0.3;
            let u = VectorField::from_fn(grid, t, |p| v.velocity(&p, t));
            let lap = vector_laplacian(&u);
            let adv = divergence_tensor(&TensorField::outer(&u, &u).unwrap());
            let mut worst: f64 = 0.0;
            for l in grid.interior(2) {
                let p = grid.point(l);
                let dt = v.dt_velocity(&p, t);
                let gq = v.pressure_gradient(&p, t);
                for a in 0..2 {
                    let r = lap.components[a].values[l] - adv.components[a].values[l] - dt[a] - gq[a];
                    worst = worst.max(r.abs());
                }
            }
            assert!(worst < 40.0 * grid.spacing().powi(2), "{n}: {worst}");
            let div = interior_max(&grid, &divergence(&u).unwrap().values, 1);
            assert!(div < grid.spacing().powi(2), "{div}");
        }
    }

    #[test]
    fn pressure_gradient_matches_pressure() {
        let v = HeatVortex { s0: 0.7 };
        let p = [0.4, -0.9, 0.0];
        let e = 1e-6;
        let gx = (v.pressure(&[p[0] + e, p[1], 0.0], 0.2) - v.pressure(&[p[0] - e, p[1], 0.0], 0.2)) / (2.0 * e);
        assert!((gx - v.pressure_gradient(&p, 0.2)[0]).abs() < 1e-8);
        let dt = (v.velocity(&p, 0.2 + e)[1] - v.velocity(&p, 0.2 - e)[1]) / (2.0 * e);
        assert!((dt - v.dt_velocity(&p, 0.2)[1]).abs() < 1e-8);
    }

    #[test]
    fn potentials_have_the_advertised_divergence() {
        for dim in [2usize, 3] {
            let grid = Grid::new(dim, 32, 4.0).unwrap();
            let w = divergence_tensor(&solenoidal_potential(grid));
            let div = divergence(&w).unwrap();
            assert!(interior_max(&grid, &div.values, 2) < 0.05 * w.max_abs());
        }
        let grid = Grid::new(2, 32, 4.0).unwrap();
        let w = divergence_tensor(&gradient_potential(grid));
        assert!(w.max_abs() > 0.5);
    }

    #[test]
    fn stream_potential_reproduces_the_vortex() {
        for dim in [2usize, 3] {
            let grid = Grid::new(dim, 32, 3.0).unwrap();
            let w = divergence_tensor(&stream_potential(grid));
            let u = vortex(grid);
            let mut worst: f64 = 0.0;
            for l in grid.interior(1) {
                for a in 0..dim {
                    worst = worst.max((w.components[a].values[l] - u.components[a].values[l]).abs());
                }
            }
            // central differences of the potential against analytic derivatives
            assert!(worst < grid.spacing().powi(2), "{dim}: {worst}");
            assert!(interior_max(&grid, &divergence(&w).unwrap().values, 2) < 1e-12);
        }
    }

    #[test]
    fn drift_is_consistent() {
        let f = DriftingVortex::default();
        for t in [0.0, 0.4, 1.0] {
            let e = 1e-6;
            let de = (f.displacement(t + e)[0] - f.displacement(t - e)[0]) / (2.0 * e);
            assert!((de - f.g(t)[0]).abs() < 1e-8);
        }
        assert_eq!(f.g(0.0), [0.0; 3]);
    }

    #[test]
    fn family_has_ten_members() {
        assert_eq!(spaces_family(Grid::new(2, 16, 4.0).unwrap()).len(), 10);
    }
}
