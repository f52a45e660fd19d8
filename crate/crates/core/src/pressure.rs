//! Split-kernel pressure on the whole space.
//!
//! With `h_ij = u_i u_j − F_ij` and a cutoff `φ`,
//!
//! `p_φ = Σ (φ∂ᵢ∂ⱼG_d) * h_ij + Σ ∫ (A_ij(x−y) − A_ij(−y)) h_ij(y) dy`,
//! `A_ij = (1 − φ)∂ᵢ∂ⱼG_d`.
//!
//! The near half is the principal value in subtraction form plus the Dirac
//! share `−δᵢⱼ h/d` of the distributional Hessian. Data are taken to vanish
//! outside the box, so every whole-space integral becomes a finite lattice
//! sum; the sums are exact up to rounding whichever engine evaluates them.

use alloc::vec;
use alloc::vec::Vec;

use crate::conv::{self, SumMethod, Term};
use crate::error::{bail, Error, Result};
use crate::exec::{for_each_chunk, Executor};
use crate::fields::{self, Grid, Point, ScalarField, TensorField, TimeSeries, VectorField};
use crate::kernels::{self, CutoffSpec, HeatThirdKernel};
use crate::math;

/// Which weighted class the caller vouches for: `L¹(w_d)` or only
/// `L¹(w_{d+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecayClass {
    #[default]
    Wd,
    WdPlus1,
}

/// Truncation report: the box-to-whole-space gap is at most
/// `bound ~ L^{−exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub exponent: f64,
    pub bound: f64,
    /// The whole-space sum may diverge for the declared class.
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub field: ScalarField,
    pub tail: TailEstimate,
}

/// `sup |A(x)| |x|^d`.
pub fn far_kernel_constant(d: usize) -> f64 {
    (d as f64 - 1.0) * kernels::hessian_coefficient(d)
}

/// `h = u ⊗ u − F`.
pub fn source_tensor(u: &VectorField, f: Option<&TensorField>) -> Result<TensorField> {
    let uu = TensorField::outer(u, u)?;
    let mut h = match f {
        Some(f) => {
            if !f.grid.same_as(&u.grid) {
                bail!(Structural, "velocity and forcing live on different grids");
            }
            uu.sub(f)?
        }
        None => uu,
    };
    h.symmetric = (0..h.dim()).all(|i| (0..i).all(|j| h.get(i, j).values == h.get(j, i).values));
    Ok(h)
}

fn lattice_point(o: [isize; 3], h: f64) -> Point {
    [o[0] as f64 * h, o[1] as f64 * h, o[2] as f64 * h]
}

pub struct PressureSolver<'e> {
    pub spec: CutoffSpec,
    pub method: SumMethod,
    exec: &'e dyn Executor,
}

impl<'e> PressureSolver<'e> {
    pub fn new(spec: CutoffSpec, exec: &'e dyn Executor) -> Result<Self> {
        spec.validate()?;
        Ok(PressureSolver {
            spec,
            method: SumMethod::Auto,
            exec,
        })
    }

    pub fn with_method(mut self, method: SumMethod) -> Self {
        self.method = method;
        self
    }

    pub fn executor(&self) -> &'e dyn Executor {
        self.exec
    }

    /// Spacing must be at most `r0 / 4`.
    pub fn check_resolution(&self, grid: &Grid) -> Result<()> {
        let required = self.spec.r0 / 4.0;
        if grid.spacing() > required * (1.0 + 1e-12) {
            return Err(Error::Resolution {
                spacing: grid.spacing(),
                required,
            });
        }
        Ok(())
    }

    fn near_radius(&self, grid: &Grid) -> usize {
        (math::ceil(self.spec.r1 / grid.spacing()) as usize).min(grid.n() - 1)
    }

    /// `Σ_{y≠0} φK_ij(y)` over the lattice: zero up to rounding by the
    /// cubic symmetry, kept for exactness of the subtraction form.
    fn near_weight(&self, grid: &Grid, i: usize, j: usize) -> f64 {
        let d = grid.dim();
        let h = grid.spacing();
        let r = math::ceil(self.spec.r1 / h) as usize;
        conv::offsets(d, r)
            .map(|o| kernels::near_kernel(&lattice_point(o, h), i, j, &self.spec, d))
            .sum()
    }

    /// `(φ∂ᵢ∂ⱼG_d) * h` as
    /// `Σ_{y≠0} φK_ij(y)[h(x−y) − h(x)] h^d − δᵢⱼ h(x)/d`.
    pub fn near_field_conv(&self, h: &ScalarField, i: usize, j: usize) -> Result<ScalarField> {
        let grid = h.grid;
        check_indices(&grid, i, j)?;
        h.validate()?;
        self.check_resolution(&grid)?;
        let d = grid.dim();
        let sp = grid.spacing();
        let spec = self.spec;
        let kern = move |o: [isize; 3]| kernels::near_kernel(&lattice_point(o, sp), i, j, &spec, d);
        let terms = [Term {
            kernel: &kern,
            field: &h.values,
        }];
        let c = conv::convolve(&grid, &terms, Some(self.near_radius(&grid)), self.method, self.exec);
        let w = self.near_weight(&grid, i, j);
        let vol = grid.cell_volume();
        let dirac = if i == j { 1.0 / d as f64 } else { 0.0 };
        let values = c
            .iter()
            .zip(&h.values)
            .map(|(cv, hv)| (cv - w * hv) * vol - dirac * hv)
            .collect();
        ScalarField::new(grid, h.time, values)
    }

    /// `Σ_y A_ij(−y) h(y) h^d`.
    pub fn far_constant(&self, h: &ScalarField, i: usize, j: usize) -> f64 {
        let g = &h.grid;
        let d = g.dim();
        let mut s = 0.0;
        for (l, hv) in h.values.iter().enumerate() {
            if *hv != 0.0 {
                let p = g.point(l);
                s += kernels::far_kernel(&[-p[0], -p[1], -p[2]], i, j, &self.spec, d) * hv;
            }
        }
        s * g.cell_volume()
    }

    fn far_conv(&self, h: &ScalarField, i: usize, j: usize) -> Vec<f64> {
        let grid = h.grid;
        let d = grid.dim();
        let sp = grid.spacing();
        let spec = self.spec;
        let kern = move |o: [isize; 3]| kernels::far_kernel(&lattice_point(o, sp), i, j, &spec, d);
        let terms = [Term {
            kernel: &kern,
            field: &h.values,
        }];
        let vol = grid.cell_volume();
        conv::convolve(&grid, &terms, None, self.method, self.exec)
            .into_iter()
            .map(|v| v * vol)
            .collect()
    }

    /// `Σ_y [A_ij(x−y) − A_ij(−y)] h(y) h^d`; exactly zero at `x = 0`.
    pub fn far_field_corrected(&self, h: &ScalarField, i: usize, j: usize) -> Result<ScalarField> {
        check_indices(&h.grid, i, j)?;
        h.validate()?;
        let raw = self.far_conv(h, i, j);
        let c = match origin_node(&h.grid) {
            Some(l) => raw[l],
            None => self.far_constant(h, i, j),
        };
        ScalarField::new(h.grid, h.time, raw.iter().map(|v| v - c).collect())
    }

    /// `Σ_y A_ij(x−y) h(y) h^d`. For data only in `L¹(w_{d+1})` the
    /// whole-space integral may diverge logarithmically; the truncated sum
    /// is still returned and the tail report flags it.
    pub fn far_field_plain(
        &self,
        h: &ScalarField,
        i: usize,
        j: usize,
        class: DecayClass,
    ) -> Result<FarField> {
        check_indices(&h.grid, i, j)?;
        h.validate()?;
        let field = ScalarField::new(h.grid, h.time, self.far_conv(h, i, j))?;
        let tail = plain_tail(&[h], class)?;
        Ok(FarField { field, tail })
    }

    fn fused(&self, h: &TensorField, corrected: bool) -> Result<ScalarField> {
        let grid = h.grid;
        let d = grid.dim();
        for c in &h.components {
            c.validate()?;
        }
        self.check_resolution(&grid)?;
        let sp = grid.spacing();
        // pair (i, j) with (j, i): the Hessian is symmetric
        let mut pairs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for i in 0..d {
            for j in i..d {
                let v = if i == j {
                    h.get(i, i).values.clone()
                } else {
                    h.get(i, j)
                        .values
                        .iter()
                        .zip(&h.get(j, i).values)
                        .map(|(a, b)| a + b)
                        .collect()
                };
                if v.iter().any(|x| *x != 0.0) {
                    pairs.push((i, j, v));
                }
            }
        }
        let kerns: Vec<_> = pairs
            .iter()
            .map(|&(i, j, _)| {
                move |o: [isize; 3]| kernels::hessian_raw(&lattice_point(o, sp), i, j, d)
            })
            .collect();
        let terms: Vec<Term<'_>> = pairs
            .iter()
            .zip(&kerns)
            .map(|((_, _, v), k)| Term {
                kernel: k,
                field: v,
            })
            .collect();
        let vol = grid.cell_volume();
        let mut out: Vec<f64> = if terms.is_empty() {
            vec![0.0; grid.len()]
        } else {
            conv::convolve(&grid, &terms, None, self.method, self.exec)
                .into_iter()
                .map(|v| v * vol)
                .collect()
        };
        for (i, j, v) in &pairs {
            let w = self.near_weight(&grid, *i, *j) * vol;
            let dirac = if i == j { 1.0 / d as f64 } else { 0.0 };
            for (o, hv) in out.iter_mut().zip(v) {
                *o -= (w + dirac) * hv;
            }
        }
        if corrected {
            let c: f64 = (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| self.far_constant(h.get(i, j), i, j))
                .sum();
            out.iter_mut().for_each(|v| *v -= c);
        }
        ScalarField::new(grid, h.time, out)
    }

    /// `p_φ` from the source tensor `h`.
    pub fn p_phi_from_source(&self, h: &TensorField) -> Result<ScalarField> {
        self.fused(h, true)
    }

    /// `p_0 = Σ ∂ᵢ∂ⱼG_d * h_ij` (near half plus plain far half) from `h`.
    pub fn p0_from_source(&self, h: &TensorField) -> Result<ScalarField> {
        self.fused(h, false)
    }

    pub fn assemble_p_phi(&self, u: &VectorField, f: Option<&TensorField>) -> Result<ScalarField> {
        self.p_phi_from_source(&source_tensor(u, f)?)
    }

    pub fn assemble_p0(&self, u: &VectorField, f: Option<&TensorField>) -> Result<ScalarField> {
        self.p0_from_source(&source_tensor(u, f)?)
    }

    /// Reference assembly: near and corrected far halves summed term by term.
    pub fn assemble_p_phi_split(&self, h: &TensorField) -> Result<ScalarField> {
        let d = h.dim();
        let mut acc = ScalarField::zeros(h.grid).at_time(h.time);
        for i in 0..d {
            for j in 0..d {
                acc = acc.add(&self.near_field_conv(h.get(i, j), i, j)?)?;
                acc = acc.add(&self.far_field_corrected(h.get(i, j), i, j)?)?;
            }
        }
        Ok(acc)
    }

    /// Truncation report for the corrected far half: the kernel difference
    /// decays like `|y|^{−(d+1)}`, so data beyond the box contribute at most
    /// `C_d ‖h‖_{L¹(w_{d+1})} / L`.
    pub fn tail_estimate(&self, h: &TensorField) -> Result<TailEstimate> {
        let d = h.dim();
        let mut s = 0.0;
        for c in &h.components {
            s += fields::weighted_lp_norm(c, 1.0, d as f64 + 1.0)?;
        }
        Ok(TailEstimate {
            exponent: 1.0,
            bound: far_kernel_constant(d) * s / h.grid.half_width(),
            divergent: false,
        })
    }
}

fn plain_tail(hs: &[&ScalarField], class: DecayClass) -> Result<TailEstimate> {
    let g = hs[0].grid;
    let d = g.dim() as f64;
    let mut s = 0.0;
    for h in hs {
        s += fields::weighted_lp_norm(*h, 1.0, d)?;
    }
    Ok(TailEstimate {
        exponent: 0.0,
        bound: far_kernel_constant(g.dim()) * s,
        divergent: class == DecayClass::WdPlus1,
    })
}

fn check_indices(grid: &Grid, i: usize, j: usize) -> Result<()> {
    if i >= grid.dim() || j >= grid.dim() {
        bail!(Parameter, "index ({i}, {j}) out of range for dimension {}", grid.dim());
    }
    Ok(())
}

/// Node at the physical origin, if the grid has one.
pub fn origin_node(grid: &Grid) -> Option<usize> {
    let mut idx = [0usize; 3];
    for (a, ia) in idx.iter_mut().enumerate().take(grid.dim()) {
        let s = grid.fractional(a, 0.0);
        let k = math::round(s);
        if (s - k).abs() > 1e-9 || k < 0.0 || k >= grid.n() as f64 {
            return None;
        }
        *ia = k as usize;
    }
    Some(grid.index(idx))
}

/// `Σ_ij Σ_y [A_ij,B(−y) − A_ij,A(−y)] h_ij(y) h^d`, which equals
/// `p_A − p_B`.
pub fn phi_change_constant(h: &TensorField, a: &CutoffSpec, b: &CutoffSpec) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    if a == b {
        return Ok(0.0);
    }
    let g = &h.grid;
    let d = g.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            let c = h.get(i, j);
            c.validate()?;
            for (l, hv) in c.values.iter().enumerate() {
                if *hv != 0.0 {
                    let p = g.point(l);
                    let m = [-p[0], -p[1], -p[2]];
                    s += (kernels::far_kernel(&m, i, j, b, d) - kernels::far_kernel(&m, i, j, a, d)) * hv;
                }
            }
        }
    }
    Ok(s * g.cell_volume())
}

/// Discrete `Σ_ij ∂ᵢ∂ⱼ h_ij`.
pub fn source_divergence2(h: &TensorField) -> Vec<f64> {
    let g = &h.grid;
    let d = g.dim();
    let mut out = vec![0.0; g.len()];
    for i in 0..d {
        for j in 0..d {
            for (o, v) in out.iter_mut().zip(fields::mixed(g, &h.get(i, j).values, i, j)) {
                *o += v;
            }
        }
    }
    out
}

/// Interior `L²` norm of `Δp + Σ ∂ᵢ∂ⱼh_ij`, divided by the norm of the
/// source term (or left unnormalized when the source vanishes).
pub fn poisson_residual(p: &ScalarField, h: &TensorField) -> Result<f64> {
    if !p.grid.same_as(&h.grid) {
        bail!(Structural, "pressure and source live on different grids");
    }
    let src = source_divergence2(h);
    let lap = fields::laplacian(p);
    let res: Vec<f64> = lap.values.iter().zip(&src).map(|(a, b)| a + b).collect();
    let num = fields::interior_l2(&p.grid, &res, 1);
    let den = fields::interior_l2(&p.grid, &src, 1);
    Ok(if den > 0.0 { num / den } else { num })
}

/// Where `e^{τΔ}∇p` is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum HeatProbes {
    /// `x = √τ ρ e` for `ρ ∈ {0, 0.25, …, 3}` and `e` along the coordinate
    /// axes and diagonals, so the probe set scales with the heat kernel.
    Parabolic,
    Fixed(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatDecayReport {
    pub taus: Vec<f64>,
    pub max_abs: Vec<f64>,
    /// Least-squares slope of `ln max_abs` against `ln τ`; NaN when any
    /// maximum vanishes.
    pub slope: f64,
    pub expected_slope: f64,
    pub probes_per_tau: usize,
}

fn probe_directions(d: usize) -> Vec<Point> {
    let mut dirs = Vec::new();
    for a in 0..d {
        for s in [1.0, -1.0] {
            let mut e = [0.0; 3];
            e[a] = s;
            dirs.push(e);
        }
    }
    let n = math::sqrt(d as f64);
    let signs = 1usize << d;
    for m in 0..signs {
        let mut e = [0.0; 3];
        for (a, ea) in e.iter_mut().enumerate().take(d) {
            *ea = if m >> a & 1 == 1 { -1.0 / n } else { 1.0 / n };
        }
        dirs.push(e);
    }
    dirs
}

fn probe_points(d: usize, tau: f64, probes: &HeatProbes) -> Vec<Point> {
    match probes {
        HeatProbes::Fixed(p) => p.clone(),
        HeatProbes::Parabolic => {
            let mut pts = vec![[0.0; 3]];
            let s = math::sqrt(tau);
            for e in probe_directions(d) {
                for k in 1..=12 {
                    let r = 0.25 * k as f64 * s;
                    pts.push([r * e[0], r * e[1], r * e[2]]);
                }
            }
            pts
        }
    }
}

/// `max |e^{τΔ}∇p|` over the probes for each `τ`, with
/// `e^{τΔ}∂ₖp(x) = Σ_ij Σ_y (e^{τΔ}∂ₖ∂ᵢ∂ⱼG_d)(x−y) h_ij(y) h^d`.
pub fn heat_normalization(
    h: &TensorField,
    taus: &[f64],
    probes: &HeatProbes,
    exec: &dyn Executor,
) -> Result<HeatDecayReport> {
    if taus.is_empty() {
        bail!(Parameter, "need at least one smoothing time");
    }
    if taus.iter().any(|t| !(*t > 0.0)) || taus.windows(2).any(|w| !(w[1] > w[0])) {
        bail!(Parameter, "smoothing times must be positive and increasing");
    }
    let g = h.grid;
    let d = g.dim();
    for c in &h.components {
        c.validate()?;
    }
    let kernel = HeatThirdKernel::new(d)?;
    let support: Vec<(Point, Vec<f64>)> = (0..g.len())
        .filter_map(|l| {
            let vals: Vec<f64> = h.components.iter().map(|c| c.values[l]).collect();
            vals.iter().any(|v| *v != 0.0).then(|| (g.point(l), vals))
        })
        .collect();
    let vol = g.cell_volume();
    let mut max_abs = Vec::with_capacity(taus.len());
    let mut probes_per_tau = 0;
    for &tau in taus {
        let pts = probe_points(d, tau, probes);
        probes_per_tau = pts.len();
        let mut mags = vec![0.0; pts.len()];
        for_each_chunk(exec, &mut mags, 1, &|q, out| {
            let x = pts[q];
            let mut grad = [0.0; 3];
            for (y, vals) in &support {
                let z = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                let Ok(c) = kernel.coefficients(&z, tau) else {
                    continue;
                };
                for (k, gk) in grad.iter_mut().enumerate().take(d) {
                    for i in 0..d {
                        for j in 0..d {
                            *gk += c.value(k, i, j) * vals[i * d + j];
                        }
                    }
                }
            }
            out[0] = math::sqrt(grad.iter().map(|v| v * v).sum::<f64>()) * vol;
        });
        max_abs.push(mags.iter().fold(0.0, |m: f64, v| m.max(*v)));
    }
    let slope = if taus.len() >= 2 && max_abs.iter().all(|v| *v > 0.0) {
        let lx: Vec<f64> = taus.iter().map(|t| math::ln(*t)).collect();
        let ly: Vec<f64> = max_abs.iter().map(|v| math::ln(*v)).collect();
        math::fit_slope(&lx, &ly)
    } else {
        f64::NAN
    };
    Ok(HeatDecayReport {
        taus: taus.to_vec(),
        max_abs,
        slope,
        expected_slope: -(d as f64 + 1.0) / 2.0,
        probes_per_tau,
    })
}

// ---------------------------------------------------------------------------
// Source decomposition.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Largest accepted `‖curl S‖ / ‖∇S‖` over interior nodes.
    pub curl_tolerance: f64,
    /// Boundary ring excluded from the median and the dispersion.
    pub ring: usize,
    /// Relative dispersion above which the mismatch flag is raised.
    pub dispersion_warning: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            curl_tolerance: 1e-2,
            ring: 2,
            dispersion_warning: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureDecomposition {
    pub times: Vec<f64>,
    pub p_phi: Vec<ScalarField>,
    pub grad_p: Vec<VectorField>,
    /// Spatial median of `S − ∇p_φ` per frame.
    pub dt_g: Vec<[f64; 3]>,
    pub g: Vec<[f64; 3]>,
    /// `E(t) = ∫₀ᵗ g`.
    pub displacement: Vec<[f64; 3]>,
    /// Max interior deviation of `S − ∇p_φ` from its median.
    pub dispersion: Vec<f64>,
    /// `dispersion / max |S|`.
    pub relative_dispersion: Vec<f64>,
    pub curl_ratio: Vec<f64>,
    pub tails: Vec<TailEstimate>,
    pub mismatch_warning: bool,
}

/// `‖curl S‖ / ‖∇S‖` over interior nodes.
pub fn curl_ratio(s: &VectorField, ring: usize) -> Result<f64> {
    let c = fields::curl(s)?.interior_l2(ring);
    let mut dn = 0.0;
    for comp in &s.components {
        for a in 0..s.dim() {
            let n = fields::interior_l2(&s.grid, &fields::d1(&s.grid, &comp.values, a), ring);
            dn += n * n;
        }
    }
    let dn = math::sqrt(dn);
    Ok(if dn > 0.0 { c / dn } else { 0.0 })
}

/// Splits a curl-free source `S = ∇p_φ + ∂ₜg` frame by frame.
pub fn decompose_source(
    solver: &PressureSolver<'_>,
    s: &TimeSeries<VectorField>,
    u: &TimeSeries<VectorField>,
    f: Option<&TimeSeries<TensorField>>,
    opts: &DecomposeOptions,
) -> Result<PressureDecomposition> {
    s.check_aligned(u)?;
    if let Some(f) = f {
        s.check_aligned(f)?;
    }
    let grid = *s.grid();
    let d = grid.dim();
    let interior = grid.interior(opts.ring);
    if interior.is_empty() {
        bail!(Parameter, "boundary ring {} leaves no interior nodes", opts.ring);
    }
    let mut out = PressureDecomposition {
        times: s.times.clone(),
        p_phi: Vec::new(),
        grad_p: Vec::new(),
        dt_g: Vec::new(),
        g: Vec::new(),
        displacement: Vec::new(),
        dispersion: Vec::new(),
        relative_dispersion: Vec::new(),
        curl_ratio: Vec::new(),
        tails: Vec::new(),
        mismatch_warning: false,
    };
    for k in 0..s.len() {
        let sk = &s.frames[k];
        let ratio = curl_ratio(sk, opts.ring)?;
        if ratio > opts.curl_tolerance {
            return Err(Error::NotAGradient {
                curl_ratio: ratio,
                tolerance: opts.curl_tolerance,
            });
        }
        let h = source_tensor(&u.frames[k], f.map(|f| &f.frames[k]))?;
        let p = solver.p_phi_from_source(&h)?;
        let gp = fields::gradient(&p);
        let r = sk.sub(&gp)?;
        let mut dtg = [0.0; 3];
        let mut disp: f64 = 0.0;
        for a in 0..d {
            let mut vals: Vec<f64> = interior.iter().map(|&l| r.components[a].values[l]).collect();
            dtg[a] = math::median(&mut vals);
            for &l in &interior {
                disp = disp.max((r.components[a].values[l] - dtg[a]).abs());
            }
        }
        let scale = sk.max_abs();
        let rel = if scale > 0.0 { disp / scale } else { disp };
        out.mismatch_warning |= rel > opts.dispersion_warning;
        out.curl_ratio.push(ratio);
        out.tails.push(solver.tail_estimate(&h)?);
        out.p_phi.push(p);
        out.grad_p.push(gp);
        out.dt_g.push(dtg);
        out.dispersion.push(disp);
        out.relative_dispersion.push(rel);
    }
    let mut g = vec![[0.0; 3]; s.len()];
    let mut e = vec![[0.0; 3]; s.len()];
    for a in 0..d {
        let col: Vec<f64> = out.dt_g.iter().map(|v| v[a]).collect();
        let ga = math::cumulative_trapezoid(&s.times, &col);
        let ea = math::cumulative_trapezoid(&s.times, &ga);
        for k in 0..s.len() {
            g[k][a] = ga[k];
            e[k][a] = ea[k];
        }
    }
    out.g = g;
    out.displacement = e;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SERIAL;

    fn gauss(grid: Grid, c: f64, s: f64) -> ScalarField {
        ScalarField::from_fn(grid, 0.0, |p| c * math::exp(-s * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])))
    }

    #[test]
    fn near_field_of_zero_and_constant() {
        let sol = PressureSolver::new(CutoffSpec::default(), &SERIAL).unwrap();
        let g = Grid::new(3, 24, 3.0).unwrap();
        let z = sol.near_field_conv(&ScalarField::zeros(g), 0, 0).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        // constant data: only the Dirac share survives away from the faces
        let c = sol.near_field_conv(&ScalarField::constant(g, 3.0), 0, 0).unwrap();
        let mid = g.index([12, 12, 12]);
        assert!((c.values[mid] + 1.0).abs() < 1e-12, "{}", c.values[mid]);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let sol = PressureSolver::new(CutoffSpec::default(), &SERIAL).unwrap();
        let g = Grid::new(2, 8, 4.0).unwrap();
        assert!(matches!(
            sol.near_field_conv(&ScalarField::zeros(g), 0, 0),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn far_field_corrected_vanishes_at_origin_and_is_linear() {
        let sol = PressureSolver::new(CutoffSpec::new(0.5, 1.0).unwrap(), &SERIAL).unwrap();
        let g = Grid::new(2, 32, 4.0).unwrap();
        let a = gauss(g, 1.0, 0.5);
        let b = ScalarField::from_fn(g, 0.0, |p| math::sin(p[0]) * math::exp(-p[1] * p[1]));
        let fa = sol.far_field_corrected(&a, 0, 1).unwrap();
        let fb = sol.far_field_corrected(&b, 0, 1).unwrap();
        let fab = sol.far_field_corrected(&a.add(&b).unwrap(), 0, 1).unwrap();
        let o = origin_node(&g).unwrap();
        assert_eq!(fa.values[o], 0.0);
        for l in 0..g.len() {
            assert!((fab.values[l] - fa.values[l] - fb.values[l]).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_minus_corrected_is_the_far_constant() {
        let sol = PressureSolver::new(CutoffSpec::new(0.5, 1.0).unwrap(), &SERIAL).unwrap();
        let g = Grid::new(2, 32, 4.0).unwrap();
        let a = ScalarField::from_fn(g, 0.0, |p| math::exp(-(p[0] - 1.0).powi(2) - 2.0 * p[1] * p[1]));
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let plain = sol.far_field_plain(&a, i, j, DecayClass::Wd).unwrap();
            let corr = sol.far_field_corrected(&a, i, j).unwrap();
            let c = sol.far_constant(&a, i, j);
            for l in 0..g.len() {
                assert!((plain.field.values[l] - corr.values[l] - c).abs() < 1e-10);
            }
            assert!(!plain.tail.divergent);
        }
        let flagged = sol.far_field_plain(&a, 0, 0, DecayClass::WdPlus1).unwrap();
        assert!(flagged.tail.divergent && flagged.tail.exponent == 0.0);
    }

    #[test]
    fn fused_assembly_matches_split_sum() {
        let sol = PressureSolver::new(CutoffSpec::new(0.5, 1.0).unwrap(), &SERIAL).unwrap();
        for d in [2, 3] {
            let g = Grid::new(d, 16, 1.0).unwrap();
            let u = VectorField::from_fn(g, 0.0, |p| {
                let e = math::exp(-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
                [p[1] * e, -p[0] * e + 0.3 * e, p[0] * e]
            });
            let h = source_tensor(&u, None).unwrap();
            let a = sol.p_phi_from_source(&h).unwrap();
            let b = sol.assemble_p_phi_split(&h).unwrap();
            let scale = a.max_abs();
            for l in 0..g.len() {
                assert!((a.values[l] - b.values[l]).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn zero_and_cancelling_sources_give_zero_pressure() {
        let sol = PressureSolver::new(CutoffSpec::new(0.5, 1.0).unwrap(), &SERIAL).unwrap();
        let g = Grid::new(2, 16, 1.0).unwrap();
        let u = VectorField::from_fn(g, 0.0, |p| [math::exp(-p[0] * p[0]), p[1], 0.0]);
        let f = TensorField::outer(&u, &u).unwrap();
        assert_eq!(sol.assemble_p_phi(&u, Some(&f)).unwrap().max_abs(), 0.0);
        assert_eq!(sol.assemble_p_phi(&VectorField::zeros(g), None).unwrap().max_abs(), 0.0);
        assert_eq!(sol.assemble_p0(&VectorField::zeros(g), None).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn phi_change_constant_trivial_cases() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let a = CutoffSpec::new(0.5, 1.0).unwrap();
        let b = CutoffSpec::new(0.25, 1.5).unwrap();
        assert_eq!(phi_change_constant(&TensorField::zeros(g), &a, &b).unwrap(), 0.0);
        let u = VectorField::from_fn(g, 0.0, |p| [p[0], 1.0, 0.0]);
        let h = source_tensor(&u, None).unwrap();
        assert_eq!(phi_change_constant(&h, &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn poisson_residual_trivial_cases() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        assert_eq!(poisson_residual(&ScalarField::zeros(g), &TensorField::zeros(g)).unwrap(), 0.0);
        let q = ScalarField::from_fn(g, 0.0, |p| p[0] * p[0] + p[1] * p[1]);
        let r = poisson_residual(&q, &TensorField::zeros(g)).unwrap();
        // Δ|x|² = 2d on every interior node
        let side = (g.n() - 2) as f64 * g.spacing();
        assert!((r - 4.0 * side).abs() < 1e-10, "{r}");
    }

    #[test]
    fn heat_normalization_of_zero_and_bad_taus() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let r = heat_normalization(&TensorField::zeros(g), &[1.0, 4.0], &HeatProbes::Parabolic, &SERIAL).unwrap();
        assert!(r.max_abs.iter().all(|v| *v == 0.0));
        assert!(heat_normalization(&TensorField::zeros(g), &[], &HeatProbes::Parabolic, &SERIAL).is_err());
        assert!(heat_normalization(&TensorField::zeros(g), &[4.0, 1.0], &HeatProbes::Parabolic, &SERIAL).is_err());
    }

    #[test]
    fn heat_normalization_decays_monotonically_for_gaussian_data() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let u = VectorField::from_fn(g, 0.0, |p| {
            let e = math::exp(-2.0 * (p[0] * p[0] + p[1] * p[1]));
            [e, 0.5 * e, 0.0]
        });
        let h = source_tensor(&u, None).unwrap();
        let r = heat_normalization(&h, &[1.0, 4.0, 16.0, 64.0], &HeatProbes::Parabolic, &SERIAL).unwrap();
        for w in r.max_abs.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!((r.slope - r.expected_slope).abs() < 0.15, "{}", r.slope);
    }

    #[test]
    fn origin_node_lookup() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        assert_eq!(origin_node(&g), Some(g.index([4, 4, 0])));
        let off = g.with_origin([0.1, 0.0, 0.0]);
        assert_eq!(origin_node(&off), None);
    }
}
