//! Closed-form kernels: the fundamental solution `G_d` (`−ΔG_d = δ`), its
//! Hessian, the smooth cutoff `φ`, the far kernel `(1 − φ)∂ᵢ∂ⱼG_d`, the
//! heat kernel and heat-smoothed third derivatives of `G_d`.
//!
//! Points are `[f64; 3]`; in 2D the third coordinate is ignored.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::exec::{for_each_chunk, Executor};
use crate::fields::{Grid, Point, ScalarField};
use crate::math::{self, GaussLegendre, PI};

fn check_dim(d: usize) -> Result<()> {
    if d != 2 && d != 3 {
        bail!(Parameter, "dimension must be 2 or 3, got {d}");
    }
    Ok(())
}

fn norm(x: &Point, d: usize) -> f64 {
    if d == 2 {
        libm::hypot(x[0], x[1])
    } else {
        math::hypot3(x)
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `G_2 = −ln|x| / 2π`, `G_3 = 1 / 4π|x|`.
pub fn green_function(x: &Point, d: usize) -> Result<f64> {
    check_dim(d)?;
    let r = norm(x, d);
    if r == 0.0 {
        bail!(Singularity, "fundamental solution is singular at the origin");
    }
    Ok(if d == 2 {
        -math::ln(r) / (2.0 * PI)
    } else {
        1.0 / (4.0 * PI * r)
    })
}

/// Coefficient `c_d` of `∂ᵢ∂ⱼG_d = c_d (d xᵢxⱼ − δᵢⱼ|x|²) / |x|^{d+2}`.
pub fn hessian_coefficient(d: usize) -> f64 {
    if d == 2 {
        1.0 / (2.0 * PI)
    } else {
        1.0 / (4.0 * PI)
    }
}

/// Hessian without argument checks; 0 at the origin.
#[inline]
pub fn hessian_raw(x: &Point, i: usize, j: usize, d: usize) -> f64 {
    let r2 = if d == 2 {
        x[0] * x[0] + x[1] * x[1]
    } else {
        x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    };
    if r2 == 0.0 {
        return 0.0;
    }
    let num = d as f64 * (x[i] * x[j]) - delta(i, j) * r2;
    let den = if d == 2 {
        r2 * r2
    } else {
        r2 * r2 * math::sqrt(r2)
    };
    hessian_coefficient(d) * num / den
}

/// Pointwise `∂ᵢ∂ⱼG_d` away from the origin.
pub fn hessian_green(x: &Point, i: usize, j: usize, d: usize) -> Result<f64> {
    check_dim(d)?;
    if i >= d || j >= d {
        bail!(Parameter, "index out of range for dimension {d}");
    }
    if norm(x, d) == 0.0 {
        bail!(Singularity, "Hessian of the fundamental solution at the origin");
    }
    Ok(hessian_raw(x, i, j, d))
}

/// Radial cutoff: `φ = 1` on `|x| ≤ r0`, `φ = 0` on `|x| ≥ r1`, smooth and
/// nonincreasing in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub r0: f64,
    pub r1: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec { r0: 1.0, r1: 2.0 }
    }
}

fn bump(s: f64) -> f64 {
    if s > 0.0 {
        math::exp(-1.0 / s)
    } else {
        0.0
    }
}

/// `σ(s) = B(s) / (B(s) + B(1 − s))`, `B(s) = exp(−1/s)`.
fn transition(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = bump(s);
        a / (a + bump(1.0 - s))
    }
}

impl CutoffSpec {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
            bail!(Parameter, "cutoff radii must satisfy 0 < r0 < r1, got ({r0}, {r1})");
        }
        Ok(CutoffSpec { r0, r1 })
    }

    pub fn validate(&self) -> Result<()> {
        CutoffSpec::new(self.r0, self.r1).map(|_| ())
    }

    /// `φ` as a function of the radius.
    pub fn profile(&self, r: f64) -> f64 {
        transition((self.r1 - r) / (self.r1 - self.r0))
    }
}

pub fn cutoff(x: &Point, spec: &CutoffSpec) -> f64 {
    spec.profile(math::hypot3(x))
}

fn cutoff_d(x: &Point, spec: &CutoffSpec, d: usize) -> f64 {
    spec.profile(norm(x, d))
}

/// `A_{ij,φ} = (1 − φ)∂ᵢ∂ⱼG_d`, zero on `|x| ≤ r0`.
pub fn far_kernel(x: &Point, i: usize, j: usize, spec: &CutoffSpec, d: usize) -> f64 {
    let phi = cutoff_d(x, spec, d);
    if phi >= 1.0 {
        0.0
    } else {
        (1.0 - phi) * hessian_raw(x, i, j, d)
    }
}

/// `φ ∂ᵢ∂ⱼG_d` away from the origin, zero at it.
pub fn near_kernel(x: &Point, i: usize, j: usize, spec: &CutoffSpec, d: usize) -> f64 {
    let phi = cutoff_d(x, spec, d);
    if phi <= 0.0 {
        0.0
    } else {
        phi * hessian_raw(x, i, j, d)
    }
}

/// `W_t(x) = (4πt)^{−d/2} exp(−|x|²/4t)`.
pub fn heat_kernel(x: &Point, t: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(t > 0.0) {
        bail!(Parameter, "heat kernel time must be positive, got {t}");
    }
    let r = norm(x, d);
    Ok(math::powf(4.0 * PI * t, -(d as f64) / 2.0) * math::exp(-r * r / (4.0 * t)))
}

/// `∂ₖ∂ᵢ∂ⱼW_s(x)`.
pub fn heat_third_derivative(x: &Point, s: f64, k: usize, i: usize, j: usize, d: usize) -> Result<f64> {
    let w = heat_kernel(x, s, d)?;
    let p1 = delta(i, j) * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i];
    Ok(w * (p1 / (4.0 * s * s) - x[i] * x[j] * x[k] / (8.0 * s * s * s)))
}

/// Relative tolerance of the adaptive quadrature in `s`.
pub const HEAT_RTOL: f64 = 1e-8;

/// Evaluator for `e^{τΔ}∂ₖ∂ᵢ∂ⱼG_d = ∫_τ^∞ ∂ₖ∂ᵢ∂ⱼW_s ds`.
///
/// With `s = τ/σ` the integral becomes
/// `(4πτ)^{−d/2} [P₁/(4τ) I₀ − xᵢxⱼxₖ/(8τ²) I₁]`,
/// `P₁ = δᵢⱼxₖ + δᵢₖxⱼ + δⱼₖxᵢ`, `I_m = ∫₀¹ σ^{d/2+m} e^{−|x|²σ/4τ} dσ`,
/// and the two moments are computed by adaptive Gauss–Legendre with a
/// node-doubling error check.
#[derive(Debug, Clone)]
pub struct HeatThirdKernel {
    coarse: GaussLegendre,
    fine: GaussLegendre,
    dim: usize,
}

/// Tuple-independent factors at one `(x, τ)`.
#[derive(Debug, Clone, Copy)]
pub struct HeatThirdCoefficients {
    pub x: Point,
    pub linear: f64,
    pub cubic: f64,
}

impl HeatThirdCoefficients {
    pub fn value(&self, k: usize, i: usize, j: usize) -> f64 {
        let x = &self.x;
        let p1 = delta(i, j) * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i];
        self.linear * p1 - self.cubic * x[i] * x[j] * x[k]
    }
}

impl HeatThirdKernel {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(HeatThirdKernel {
            coarse: GaussLegendre::new(64),
            fine: GaussLegendre::new(128),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn moment_pair(&self, a: f64) -> (f64, f64) {
        let p = self.dim as f64 / 2.0;
        if a == 0.0 {
            return (1.0 / (p + 1.0), 1.0 / (p + 2.0));
        }
        let f = |s: f64| -> (f64, f64) {
            let base = math::powf(s, p) * math::exp(-a * s);
            (base, base * s)
        };
        let rule = |g: &GaussLegendre, lo: f64, hi: f64| {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let mut acc = (0.0, 0.0);
            for (x, w) in g.nodes.iter().zip(&g.weights) {
                let v = f(mid + half * x);
                acc.0 += w * v.0;
                acc.1 += w * v.1;
            }
            (acc.0 * half, acc.1 * half)
        };
        let scale = rule(&self.fine, 0.0, 1.0);
        let mut total = (0.0, 0.0);
        let mut stack: Vec<(f64, f64, u32)> = alloc::vec![(0.0, 1.0, 0)];
        while let Some((lo, hi, depth)) = stack.pop() {
            let c = rule(&self.coarse, lo, hi);
            let fne = rule(&self.fine, lo, hi);
            let ok0 = (c.0 - fne.0).abs() <= HEAT_RTOL * 1e-3 * scale.0.abs().max(fne.0.abs());
            let ok1 = (c.1 - fne.1).abs() <= HEAT_RTOL * 1e-3 * scale.1.abs().max(fne.1.abs());
            if (ok0 && ok1) || depth >= 60 {
                total.0 += fne.0;
                total.1 += fne.1;
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        total
    }

    pub fn coefficients(&self, x: &Point, tau: f64) -> Result<HeatThirdCoefficients> {
        if !(tau > 0.0 && tau.is_finite()) {
            bail!(Parameter, "smoothing time must be positive, got {tau}");
        }
        let d = self.dim;
        let r = norm(x, d);
        let (i0, i1) = self.moment_pair(r * r / (4.0 * tau));
        let pre = math::powf(4.0 * PI * tau, -(d as f64) / 2.0);
        let mut xx = *x;
        if d == 2 {
            xx[2] = 0.0;
        }
        Ok(HeatThirdCoefficients {
            x: xx,
            linear: pre * i0 / (4.0 * tau),
            cubic: pre * i1 / (8.0 * tau * tau),
        })
    }

    pub fn eval(&self, x: &Point, tau: f64, k: usize, i: usize, j: usize) -> Result<f64> {
        if k >= self.dim || i >= self.dim || j >= self.dim {
            bail!(Parameter, "index out of range for dimension {}", self.dim);
        }
        Ok(self.coefficients(x, tau)?.value(k, i, j))
    }
}

/// One-off evaluation of `e^{τΔ}∂ₖ∂ᵢ∂ⱼG_d` at `x`.
pub fn heat_smoothed_third_kernel(
    x: &Point,
    tau: f64,
    k: usize,
    i: usize,
    j: usize,
    d: usize,
) -> Result<f64> {
    HeatThirdKernel::new(d)?.eval(x, tau, k, i, j)
}

// ---------------------------------------------------------------------------
// Kernel tables.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelId {
    Green,
    Hessian { i: usize, j: usize },
    Far { i: usize, j: usize },
    Near { i: usize, j: usize },
}

impl KernelId {
    pub fn code(&self) -> u32 {
        match self {
            KernelId::Green => 0,
            KernelId::Hessian { .. } => 1,
            KernelId::Far { .. } => 2,
            KernelId::Near { .. } => 3,
        }
    }

    /// Index tuple packed one byte per index.
    pub fn packed_indices(&self) -> u32 {
        match *self {
            KernelId::Green => 0,
            KernelId::Hessian { i, j } | KernelId::Far { i, j } | KernelId::Near { i, j } => {
                i as u32 | (j as u32) << 8
            }
        }
    }

    pub fn from_parts(code: u32, packed: u32) -> Result<Self> {
        let i = (packed & 0xff) as usize;
        let j = ((packed >> 8) & 0xff) as usize;
        Ok(match code {
            0 => KernelId::Green,
            1 => KernelId::Hessian { i, j },
            2 => KernelId::Far { i, j },
            3 => KernelId::Near { i, j },
            _ => bail!(Structural, "unknown kernel id {code}"),
        })
    }

    fn indices(&self) -> Option<(usize, usize)> {
        match *self {
            KernelId::Green => None,
            KernelId::Hessian { i, j } | KernelId::Far { i, j } | KernelId::Near { i, j } => Some((i, j)),
        }
    }
}

/// Kernel samples on a grid; the node at the origin, if any, is flagged and
/// stored as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub id: KernelId,
    pub spec: CutoffSpec,
    pub values: ScalarField,
    pub singular: Option<usize>,
}

impl KernelTable {
    pub fn build(grid: &Grid, id: KernelId, spec: &CutoffSpec, exec: &dyn Executor) -> Result<Self> {
        spec.validate()?;
        let d = grid.dim();
        if let Some((i, j)) = id.indices() {
            if i >= d || j >= d {
                bail!(Parameter, "index out of range for dimension {d}");
            }
        }
        let mut values = alloc::vec![0.0; grid.len()];
        let eval = |p: &Point| -> f64 {
            match id {
                KernelId::Green => {
                    if norm(p, d) == 0.0 {
                        0.0
                    } else {
                        green_function(p, d).unwrap_or(0.0)
                    }
                }
                KernelId::Hessian { i, j } => hessian_raw(p, i, j, d),
                KernelId::Far { i, j } => far_kernel(p, i, j, spec, d),
                KernelId::Near { i, j } => near_kernel(p, i, j, spec, d),
            }
        };
        let row = grid.n();
        for_each_chunk(exec, &mut values, row, &|c, out| {
            for (q, v) in out.iter_mut().enumerate() {
                *v = eval(&grid.point(c * row + q));
            }
        });
        let singular = (0..grid.len()).find(|&l| norm(&grid.point(l), d) == 0.0);
        let singular = match id {
            KernelId::Far { .. } => None,
            _ => singular,
        };
        Ok(KernelTable {
            id,
            spec: *spec,
            values: ScalarField::new(*grid, 0.0, values)?,
            singular,
        })
    }

    /// Least-squares fit of `c` in `values ≈ c · shape` over non-singular
    /// nodes, where `shape` is the homogeneous radial profile of the kernel
    /// (`(d xᵢxⱼ − δᵢⱼ|x|²)/|x|^{d+2}` for the Hessian, `1/|x|` for `G_3`).
    pub fn fitted_radial_coefficient(&self) -> Option<f64> {
        let g = &self.values.grid;
        let d = g.dim();
        let shape = |p: &Point| -> f64 {
            let r = norm(p, d);
            match self.id {
                KernelId::Green => 1.0 / r,
                KernelId::Hessian { i, j } => {
                    (d as f64 * p[i] * p[j] - delta(i, j) * r * r) / math::powi(r, d as i32 + 2)
                }
                _ => 0.0,
            }
        };
        match self.id {
            KernelId::Green if d == 3 => {}
            KernelId::Hessian { .. } => {}
            _ => return None,
        }
        let (mut num, mut den) = (0.0, 0.0);
        for l in 0..g.len() {
            if Some(l) == self.singular {
                continue;
            }
            let p = g.point(l);
            if norm(&p, d) == 0.0 {
                continue;
            }
            let s = shape(&p);
            num += s * self.values.values[l];
            den += s * s;
        }
        (den > 0.0).then(|| num / den)
    }
}

// ---------------------------------------------------------------------------
// Weighted convolution bounds.

/// `I(y) = ∫ (1+|x|)^{−a} (1+|x−y|)^{−b} dx` over `ℝ^d`, for `a + b > d`.
///
/// The space is cut by the bisector plane of `0` and `y`; each half is
/// integrated in polar coordinates about its own peak, with geometric
/// radial panels and composite Gauss–Legendre in the polar angle.
pub fn weighted_convolution_integral(rho: f64, d: usize, a: f64, b: f64) -> Result<f64> {
    check_dim(d)?;
    if !(a + b > d as f64) || !(rho >= 0.0) {
        bail!(Parameter, "integral diverges for a + b = {} in dimension {d}", a + b);
    }
    let gl = GaussLegendre::new(16);
    Ok(half_space_integral(&gl, rho, d, a, b) + half_space_integral(&gl, rho, d, b, a))
}

/// `∫_{x·e < ρ/2} (1+|x|)^{−a}(1+|x−ρe|)^{−b} dx`.
fn half_space_integral(gl: &GaussLegendre, rho: f64, d: usize, a: f64, b: f64) -> f64 {
    let radial = |theta: f64| -> f64 {
        let c = math::cos(theta);
        let rmax = if c > 0.0 { rho / (2.0 * c) } else { f64::INFINITY };
        let f = |r: f64| {
            let dist = math::sqrt((r * r - 2.0 * r * rho * c + rho * rho).max(0.0));
            math::powf(1.0 + r, -a) * math::powf(1.0 + dist, -b) * math::powi(r, d as i32 - 1)
        };
        let end = rmax.min(1e9 * (1.0 + rho));
        let mut total = 0.0;
        let mut lo = 0.0;
        let mut hi = 0.25_f64.min(end);
        while lo < end {
            total += gl.integrate(lo, hi, f);
            lo = hi;
            hi = (2.0 * hi).min(end);
        }
        total
    };
    let panels = 16;
    let mut total = 0.0;
    for (t0, t1) in [(0.0, PI / 2.0), (PI / 2.0, PI)] {
        for p in 0..panels {
            // panels graded towards π/2, where the ray length diverges
            let g = |s: f64| -> f64 {
                if t0 == 0.0 {
                    t1 - (t1 - t0) * (1.0 - s) * (1.0 - s)
                } else {
                    t0 + (t1 - t0) * s * s
                }
            };
            let (s0, s1) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
            let (a0, a1) = (g(s0), g(s1));
            total += gl.integrate(a0.min(a1), a0.max(a1), |th| {
                let jac = if d == 2 { 2.0 } else { 2.0 * PI * math::sin(th) };
                jac * radial(th)
            });
        }
    }
    total
}

/// Bound sweep of `I(y)(1+|y|)^e` over `|y| ∈ {0} ∪ {2^{k/4}}` up to
/// `rho_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSweep {
    pub radii: Vec<f64>,
    pub scaled: Vec<f64>,
    /// `(upper radius, running max up to it)` for each dyadic band
    /// `(2^{k−1}, 2^k]`.
    pub bands: Vec<(f64, f64)>,
    pub bounded: bool,
    /// Relative change of the running max between the last two bands.
    pub last_band_change: f64,
}

pub fn bound_sweep(d: usize, a: f64, b: f64, e: f64, rho_max: f64) -> Result<BoundSweep> {
    if !(rho_max >= 2.0) {
        bail!(Parameter, "sweep radius must be at least 2");
    }
    let mut radii = alloc::vec![0.0];
    let mut k = -8i32;
    loop {
        let r = math::powf(2.0, k as f64 / 4.0);
        if r > rho_max * (1.0 + 1e-12) {
            break;
        }
        radii.push(r);
        k += 1;
    }
    let gl = GaussLegendre::new(16);
    let scaled: Vec<f64> = radii
        .iter()
        .map(|&r| {
            (half_space_integral(&gl, r, d, a, b) + half_space_integral(&gl, r, d, b, a))
                * math::powf(1.0 + r, e)
        })
        .collect();
    let mut bands = Vec::new();
    let mut upper = 1.0;
    while upper <= rho_max * (1.0 + 1e-12) {
        let m = radii
            .iter()
            .zip(&scaled)
            .filter(|(r, _)| **r <= upper * (1.0 + 1e-12))
            .fold(0.0_f64, |m, (_, v)| m.max(*v));
        bands.push((upper, m));
        upper *= 2.0;
    }
    let bounded = scaled.iter().all(|v| v.is_finite());
    let n = bands.len();
    let last_band_change = if n >= 2 {
        (bands[n - 1].1 - bands[n - 2].1).abs() / bands[n - 2].1
    } else {
        f64::INFINITY
    };
    Ok(BoundSweep {
        radii,
        scaled,
        bands,
        bounded,
        last_band_change,
    })
}

/// Decay sweep of `|A(x)|·|x|^d` along rays for `|x| ∈ [r1, rmax]`.
pub fn far_kernel_decay_max(spec: &CutoffSpec, d: usize, rmax: f64, samples: usize) -> f64 {
    let dirs: [Point; 4] = [
        [1.0, 0.0, 0.0],
        [0.6, 0.8, 0.0],
        [0.48, 0.64, 0.6],
        [0.0, 0.0, 1.0],
    ];
    let mut m: f64 = 0.0;
    for dir in dirs.iter().take(if d == 2 { 2 } else { 4 }) {
        for s in 0..=samples {
            let r = spec.r1 + (rmax - spec.r1) * s as f64 / samples as f64;
            let x = [r * dir[0], r * dir[1], r * dir[2]];
            for i in 0..d {
                for j in 0..d {
                    m = m.max(far_kernel(&x, i, j, spec, d).abs() * math::powi(r, d as i32));
                }
            }
        }
    }
    m
}
