//! Leray projection of tensor divergences, Navier–Stokes residuals in the
//! pressure and mild forms, and local energy (suitability) pairings.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};
use crate::fields::{self, Grid, Point, ScalarField, TensorField, TimeSeries, VectorField};
use crate::kernels::CutoffSpec;
use crate::math;
use crate::pressure::{source_tensor, PressureSolver};

/// `w = ∇·H` split as `solenoidal + gradient_part`.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeParts {
    pub input: VectorField,
    pub solenoidal: VectorField,
    pub gradient_part: VectorField,
    /// `π` with `∇π = gradient_part`, `Δπ = ∇·w`.
    pub potential: ScalarField,
}

/// `ℙ(∇·H) = ∇·H − ∇π` with `π = p_φ` of the source `−H`, so that
/// `Δπ = ∇·∇·H`.
pub fn leray_project(solver: &PressureSolver<'_>, big_h: &TensorField) -> Result<HodgeParts> {
    let w = fields::divergence_tensor(big_h);
    let pi = solver.p_phi_from_source(&big_h.scale(-1.0))?;
    let grad = fields::gradient(&pi);
    let solenoidal = w.sub(&grad)?;
    Ok(HodgeParts {
        input: w,
        solenoidal,
        gradient_part: grad,
        potential: pi,
    })
}

/// `H − πI`, whose discrete divergence is exactly the solenoidal part.
pub fn solenoidal_tensor(big_h: &TensorField, parts: &HodgeParts) -> Result<TensorField> {
    let d = big_h.dim();
    let mut out = big_h.clone();
    for i in 0..d {
        out.components[i * d + i] = out.components[i * d + i].sub(&parts.potential)?;
    }
    Ok(out)
}

fn series_parts(
    u: &TimeSeries<VectorField>,
    f: Option<&TimeSeries<TensorField>>,
) -> Result<(Vec<VectorField>, Vec<VectorField>)> {
    u.require_frames(3)?;
    if let Some(f) = f {
        u.check_aligned(f)?;
    }
    let dt = fields::vector_time_derivative(u)?;
    let mut base = Vec::with_capacity(u.len());
    for (k, uk) in u.frames.iter().enumerate() {
        // ∂ₜu − Δu + ∇·(u⊗u − F)
        let h = source_tensor(uk, f.map(|f| &f.frames[k]))?;
        let r = dt[k]
            .sub(&fields::vector_laplacian(uk))?
            .add(&fields::divergence_tensor(&h))?;
        base.push(r);
    }
    Ok((dt, base))
}

/// `∂ₜu − Δu + ∇·(u⊗u) + ∇p − ∇·F` per frame.
pub fn ns_residual(
    u: &TimeSeries<VectorField>,
    f: Option<&TimeSeries<TensorField>>,
    p: &TimeSeries<ScalarField>,
) -> Result<Vec<VectorField>> {
    u.check_aligned(p)?;
    let (_, base) = series_parts(u, f)?;
    base.into_iter()
        .zip(&p.frames)
        .map(|(r, pk)| r.add(&fields::gradient(pk)))
        .collect()
}

/// `∂ₜu − Δu + ℙ∇·(u⊗u − F)` per frame.
pub fn mns_residual(
    solver: &PressureSolver<'_>,
    u: &TimeSeries<VectorField>,
    f: Option<&TimeSeries<TensorField>>,
) -> Result<Vec<VectorField>> {
    u.require_frames(3)?;
    if let Some(f) = f {
        u.check_aligned(f)?;
    }
    let dt = fields::vector_time_derivative(u)?;
    let mut out = Vec::with_capacity(u.len());
    for (k, uk) in u.frames.iter().enumerate() {
        let h = source_tensor(uk, f.map(|f| &f.frames[k]))?;
        let parts = leray_project(solver, &h)?;
        out.push(
            dt[k]
                .sub(&fields::vector_laplacian(uk))?
                .add(&parts.solenoidal)?,
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Suitability.

/// Samples of a space-time test function and its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionSamples {
    pub phi: Vec<ScalarField>,
    pub dt: Vec<ScalarField>,
    pub grad: Vec<VectorField>,
    pub lap: Vec<ScalarField>,
}

impl TestFunctionSamples {
    /// Derivatives by the same finite differences as everything else.
    pub fn from_series(phi: &TimeSeries<ScalarField>) -> Result<Self> {
        phi.require_frames(3)?;
        let grid = *phi.grid();
        let refs: Vec<&[f64]> = phi.frames.iter().map(|f| f.values.as_slice()).collect();
        let dt = fields::time_derivative(&phi.times, &refs)?
            .into_iter()
            .zip(&phi.times)
            .map(|(v, t)| ScalarField::new(grid, *t, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(TestFunctionSamples {
            grad: phi.frames.iter().map(fields::gradient).collect(),
            lap: phi.frames.iter().map(fields::laplacian).collect(),
            phi: phi.frames.clone(),
            dt,
        })
    }

    fn validate(&self) -> Result<()> {
        let m = self.phi.len();
        for (k, f) in self.phi.iter().enumerate() {
            let g = &f.grid;
            for (l, v) in f.values.iter().enumerate() {
                if *v < 0.0 {
                    bail!(Parameter, "test function is negative at frame {k}, node {l}");
                }
                if *v != 0.0 && (k == 0 || k == m - 1 || !g.is_interior(g.multi_index(l), 2)) {
                    bail!(Parameter, "test function touches the boundary at frame {k}, node {l}");
                }
            }
        }
        Ok(())
    }
}

/// Separate terms of `μ(ϕ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyTerms {
    /// `∫∫ e ∂ₜϕ`, `e = |u|²/2`.
    pub time: f64,
    /// `∫∫ e Δϕ`.
    pub diffusion: f64,
    /// `−∫∫ |∇u|² ϕ`.
    pub dissipation: f64,
    /// `∫∫ (e + p) u·∇ϕ`.
    pub flux: f64,
    /// `∫∫ u·(∇·F) ϕ`.
    pub forcing: f64,
}

impl EnergyTerms {
    pub fn sum(&self) -> f64 {
        self.time + self.diffusion + self.dissipation + self.flux + self.forcing
    }

    pub fn abs_sum(&self) -> f64 {
        self.time.abs()
            + self.diffusion.abs()
            + self.dissipation.abs()
            + self.flux.abs()
            + self.forcing.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuitabilityReport {
    pub id: String,
    pub center: Point,
    pub radius: f64,
    pub window: (f64, f64),
    pub mu: f64,
    pub terms: EnergyTerms,
    /// `μ − Σ terms`; zero by construction, reported for completeness.
    pub balance_residual: f64,
    /// `(h² + Δt²) · Σ |terms|`.
    pub tolerance: f64,
    /// `μ ≥ −tolerance`.
    pub consistent: bool,
}

/// `μ(ϕ) = ∫∫ e∂ₜϕ + eΔϕ − |∇u|²ϕ + (e+p)u·∇ϕ + u·(∇·F)ϕ`, Riemann sum in
/// space and trapezoid rule in time.
pub fn energy_pairing(
    u: &TimeSeries<VectorField>,
    p: &TimeSeries<ScalarField>,
    f: Option<&TimeSeries<TensorField>>,
    test: &TestFunctionSamples,
) -> Result<EnergyTerms> {
    u.check_aligned(p)?;
    if let Some(f) = f {
        u.check_aligned(f)?;
    }
    if test.phi.len() != u.len() || test.phi.iter().zip(&u.times).any(|(f, t)| f.time != *t) {
        bail!(Structural, "test function frames do not match the velocity frames");
    }
    test.validate()?;
    let grid = *u.grid();
    let d = grid.dim();
    let vol = grid.cell_volume();
    let mut per_frame: Vec<EnergyTerms> = Vec::with_capacity(u.len());
    for (k, uk) in u.frames.iter().enumerate() {
        let grads: Vec<VectorField> = uk.components.iter().map(fields::gradient).collect();
        let divf = f.map(|f| fields::divergence_tensor(&f.frames[k]));
        let mut t = EnergyTerms::default();
        for l in 0..grid.len() {
            let phi = test.phi[k].values[l];
            let gphi: Vec<f64> = (0..d).map(|a| test.grad[k].components[a].values[l]).collect();
            let dtp = test.dt[k].values[l];
            let lap = test.lap[k].values[l];
            if phi == 0.0 && dtp == 0.0 && lap == 0.0 && gphi.iter().all(|v| *v == 0.0) {
                continue;
            }
            let uv: Vec<f64> = (0..d).map(|a| uk.components[a].values[l]).collect();
            let e = 0.5 * uv.iter().map(|v| v * v).sum::<f64>();
            let mut grad2 = 0.0;
            for gi in &grads {
                for c in &gi.components {
                    grad2 += c.values[l] * c.values[l];
                }
            }
            let udg: f64 = (0..d).map(|a| uv[a] * gphi[a]).sum();
            t.time += e * dtp;
            t.diffusion += e * lap;
            t.dissipation -= grad2 * phi;
            t.flux += (e + p.frames[k].values[l]) * udg;
            if let Some(df) = &divf {
                t.forcing += (0..d).map(|a| uv[a] * df.components[a].values[l]).sum::<f64>() * phi;
            }
        }
        per_frame.push(t);
    }
    let times = &u.times;
    let integrate = |sel: fn(&EnergyTerms) -> f64| -> f64 {
        let v: Vec<f64> = per_frame.iter().map(sel).collect();
        *math::cumulative_trapezoid(times, &v).last().unwrap_or(&0.0) * vol
    };
    Ok(EnergyTerms {
        time: integrate(|t| t.time),
        diffusion: integrate(|t| t.diffusion),
        dissipation: integrate(|t| t.dissipation),
        flux: integrate(|t| t.flux),
        forcing: integrate(|t| t.forcing),
    })
}

/// A battery member: radial cutoff profile `(ρ/2, ρ)` about `center`
/// times a smooth bump supported on `window`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionSpec {
    pub id: String,
    pub center: Point,
    pub radius: f64,
    pub window: (f64, f64),
}

fn time_bump(t: f64, window: (f64, f64)) -> f64 {
    let s = (t - window.0) / (window.1 - window.0);
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        // normalized so the peak at s = 1/2 equals 1
        math::exp(4.0 - 1.0 / (s * (1.0 - s)))
    }
}

impl TestFunctionSpec {
    pub fn sample(&self, grid: &Grid, times: &[f64]) -> Result<TimeSeries<ScalarField>> {
        let spec = CutoffSpec::new(0.5 * self.radius, self.radius)?;
        let c = self.center;
        let space = ScalarField::from_fn(*grid, 0.0, |p| {
            spec.profile(math::hypot3(&[p[0] - c[0], p[1] - c[1], p[2] - c[2]]))
        });
        let frames = times
            .iter()
            .map(|&t| space.scale(time_bump(t, self.window)).at_time(t))
            .collect();
        TimeSeries::new(frames)
    }
}

/// Number of members in [`battery`].
pub const BATTERY_SIZE: usize = 28;

/// Three scales at the origin, five off-origin centres at the middle
/// scale, and twenty seeded random members. Every support stays two nodes
/// inside the box and every window strictly inside the time span.
pub fn battery(grid: &Grid, times: &[f64], seed: u64) -> Result<Vec<TestFunctionSpec>> {
    if times.len() < 3 {
        bail!(Structural, "need at least 3 frames");
    }
    let d = grid.dim();
    let reach = grid.half_width() - 3.0 * grid.spacing();
    let o = grid.origin();
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let span = t1 - t0;
    let full = (t0 + 0.05 * span, t1 - 0.05 * span);
    let scales = [0.25 * reach, 0.5 * reach, 0.9 * reach];
    let mid = scales[1];
    if scales[0] < 3.0 * grid.spacing() {
        bail!(Parameter, "box too small for the test-function battery");
    }
    let mut out = Vec::with_capacity(BATTERY_SIZE);
    for (k, r) in scales.iter().enumerate() {
        out.push(TestFunctionSpec {
            id: format!("scale-{k}"),
            center: o,
            radius: *r,
            window: full,
        });
    }
    let off = 0.4 * reach;
    let dirs: [[f64; 3]; 5] = [
        [1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [-0.6, 0.8, 0.0],
        [0.6, 0.0, -0.8],
        [-0.48, -0.6, 0.64],
    ];
    for (k, e) in dirs.iter().enumerate() {
        let mut c = o;
        let n = math::sqrt((0..d).map(|a| e[a] * e[a]).sum());
        for a in 0..d {
            c[a] += off * e[a] / n;
        }
        out.push(TestFunctionSpec {
            id: format!("centre-{k}"),
            center: c,
            radius: mid,
            window: full,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..BATTERY_SIZE - out.len() {
        let radius = rng.gen_range(scales[0]..=scales[1]);
        let room = reach - radius;
        let mut c = o;
        for ca in c.iter_mut().take(d) {
            *ca += rng.gen_range(-room..=room) / math::sqrt(d as f64);
        }
        let a = rng.gen_range(0.0..0.5);
        let b = rng.gen_range(0.1..(1.0_f64 - a).max(0.11));
        let w0 = full.0 + a * (full.1 - full.0);
        let w1 = (w0 + b * (full.1 - full.0)).min(full.1);
        out.push(TestFunctionSpec {
            id: format!("random-{k}"),
            center: c,
            radius,
            window: (w0, w1),
        });
    }
    Ok(out)
}

/// `μ(ϕ)` for one test function, with the default tolerance.
pub fn suitability_residual(
    u: &TimeSeries<VectorField>,
    p: &TimeSeries<ScalarField>,
    f: Option<&TimeSeries<TensorField>>,
    spec: &TestFunctionSpec,
) -> Result<SuitabilityReport> {
    let phi = spec.sample(u.grid(), &u.times)?;
    let samples = TestFunctionSamples::from_series(&phi)?;
    let terms = energy_pairing(u, p, f, &samples)?;
    let h = u.grid().spacing();
    let dt = u
        .times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let mu = terms.sum();
    let tolerance = (h * h + dt * dt) * terms.abs_sum();
    Ok(SuitabilityReport {
        id: spec.id.clone(),
        center: spec.center,
        radius: spec.radius,
        window: spec.window,
        mu,
        balance_residual: mu - terms.sum(),
        terms,
        tolerance,
        consistent: mu >= -tolerance,
    })
}
