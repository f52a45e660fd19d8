//! Invariant suites behind `wsp verify`.

use serde::Serialize;
use wsp_core::exec::Executor;
use wsp_core::fields::{self, Grid, ScalarField, TimeSeries, VectorField};
use wsp_core::galilean::{self, ShiftOptions};
use wsp_core::kernels::{self, CutoffSpec, KernelId, KernelTable};
use wsp_core::leray::{self, TestFunctionSamples};
use wsp_core::pressure::{self, DecomposeOptions, HeatProbes, PressureSolver};
use wsp_core::spaces::{self, RadiusFamily, SplitTable};

use crate::config::RunConfig;
use crate::error::{Result, WspError};
use crate::fixtures;
use crate::oracle::{self, OracleKernel};
use crate::report::{Check, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernels,
    Pressure,
    Leray,
    Galilean,
    Suitability,
    Spaces,
    Oracle,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Kernels,
        Suite::Pressure,
        Suite::Leray,
        Suite::Galilean,
        Suite::Suitability,
        Suite::Spaces,
        Suite::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Kernels => "kernels",
            Suite::Pressure => "pressure",
            Suite::Leray => "leray",
            Suite::Galilean => "galilean",
            Suite::Suitability => "suitability",
            Suite::Spaces => "spaces",
            Suite::Oracle => "oracle",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = WspError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain([Suite::All].iter())
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| WspError::Config(format!("unknown suite '{s}'")))
    }
}

pub fn run(suite: Suite, cfg: &RunConfig, exec: &dyn Executor) -> Result<Report> {
    cfg.validate()?;
    let mut report = Report::new(&format!("verify {}", suite.name()), cfg);
    let each: Vec<Suite> = if suite == Suite::All {
        Suite::EACH.to_vec()
    } else {
        vec![suite]
    };
    for s in each {
        let part = match s {
            Suite::Kernels => kernel_suite(cfg, exec)?,
            Suite::Pressure => pressure_suite(cfg, exec)?,
            Suite::Leray => leray_suite(cfg, exec)?,
            Suite::Galilean => galilean_suite(cfg, exec)?,
            Suite::Suitability => suitability_suite(cfg, exec)?,
            Suite::Spaces => spaces_suite(cfg)?,
            Suite::Oracle => oracle_suite(cfg, exec)?,
            Suite::All => unreachable!(),
        };
        report.merge(s.name(), part);
    }
    Ok(report)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

/// A second cutoff for the φ-independence checks: `(r0/2, r1 − r0/2)` when
/// the grid resolves it.
pub fn alternate_spec(spec: &CutoffSpec, grid: &Grid) -> Result<CutoffSpec> {
    let r0 = (0.5 * spec.r0).max(4.0 * grid.spacing());
    if r0 < spec.r0 {
        Ok(CutoffSpec::new(r0, spec.r1 - (spec.r0 - r0))?)
    } else {
        Ok(CutoffSpec::new(spec.r0, 0.5 * (spec.r1 + grid.half_width()))?)
    }
}

fn kernel_suite(cfg: &RunConfig, exec: &dyn Executor) -> Result<Report> {
    let mut r = Report::new("kernels", cfg);
    let d = cfg.dim;
    let spec = cfg.spec()?;
    let dirs: [[f64; 3]; 4] = [[1.0, 0.0, 0.0], [0.6, 0.8, 0.0], [0.48, 0.64, 0.6], [-0.36, 0.48, -0.8]];
    let mut trace: f64 = 0.0;
    let mut asym: f64 = 0.0;
    let mut split: f64 = 0.0;
    for rad in [0.3, 0.7, 1.0, 1.3, 1.7, 2.5, 4.0] {
        for e in dirs.iter().take(if d == 2 { 2 } else { 4 }) {
            let x = [rad * e[0], rad * e[1], rad * e[2]];
            let mut t = 0.0;
            for i in 0..d {
                t += kernels::hessian_green(&x, i, i, d)?;
                for j in 0..d {
                    let hij = kernels::hessian_green(&x, i, j, d)?;
                    asym = asym.max((hij - kernels::hessian_green(&x, j, i, d)?).abs());
                    let parts = kernels::near_kernel(&x, i, j, &spec, d) + kernels::far_kernel(&x, i, j, &spec, d);
                    split = split.max((parts - hij).abs() / (1.0 + hij.abs()));
                }
            }
            trace = trace.max(t.abs());
        }
    }
    r.check(Check::at_most("trace_identity", trace, cfg.tol("trace")));
    r.check(Check::at_most("hessian_symmetry", asym, 0.0));
    r.check(Check::at_most("near_far_partition", split, 1e-14));
    let far = kernels::far_kernel_decay_max(&spec, d, 64.0, 256);
    r.value("far_kernel_decay_max", far);
    r.check(Check::holds("far_kernel_decay_finite", far.is_finite()));
    let small = Grid::new(d, 16, 2.0)?;
    let table = KernelTable::build(&small, KernelId::Hessian { i: 0, j: 1 }, &spec, exec)?;
    let c = table.fitted_radial_coefficient().unwrap_or(f64::NAN);
    let cd = kernels::hessian_coefficient(d);
    r.check(Check::at_most("hessian_coefficient_fit", (c - cd).abs() / cd, 1e-12));
    let df = d as f64;
    for (name, a, b, e) in [("bound_d_plus_1", df + 1.0, df + 1.0, df + 1.0), ("bound_d", df, df + 1.0, df)] {
        let s = kernels::bound_sweep(d, a, b, e, 64.0)?;
        r.value(&format!("{name}.bands"), &s.bands);
        r.check(Check::holds(&format!("{name}.bounded"), s.bounded));
        r.check(Check::at_most(&format!("{name}.last_band_change"), s.last_band_change, cfg.tol("bound_band")));
    }
    Ok(r)
}

fn pressure_suite(cfg: &RunConfig, exec: &dyn Executor) -> Result<Report> {
    let mut r = Report::new("pressure", cfg);
    let grid = cfg.grid()?;
    let spec = cfg.spec()?;
    let alt = alternate_spec(&spec, &grid)?;
    let sa = PressureSolver::new(spec, exec)?;
    let sb = PressureSolver::new(alt, exec)?;
    let h = pressure::source_tensor(&fixtures::vortex(grid), None)?;
    let pa = sa.p_phi_from_source(&h)?;
    let pb = sb.p_phi_from_source(&h)?;
    let ga = fields::gradient(&pa);
    let gb = fields::gradient(&pb);
    let gdiff = ratio(fields::vector_interior_max(&ga.sub(&gb)?, 1), ga.max_abs());
    let (mean, std) = mean_std(&pa.sub(&pb)?.values);
    let c = pressure::phi_change_constant(&h, &spec, &alt)?;
    r.value("alternate_spec", [alt.r0, alt.r1]);
    r.check(Check::at_most("phi_independence.gradient", gdiff, cfg.tol("phi_gradient")));
    r.check(Check::at_most("phi_independence.std_over_mean", ratio(std, mean.abs()), cfg.tol("phi_constant_std")));
    r.check(Check::at_most("phi_independence.mean_vs_constant", (mean - c).abs(), cfg.tol("phi_constant_mean")));
    r.check(Check::at_most("poisson_residual", pressure::poisson_residual(&pa, &h)?, cfg.tol("poisson")));
    let tail = sa.tail_estimate(&h)?;
    r.value("tail_bound", tail.bound);

    let hf = pressure::source_tensor(&fixtures::fast_decay(grid), None)?;
    let pphi = sa.p_phi_from_source(&hf)?;
    let p0 = sa.p0_from_source(&hf)?;
    let (_, s) = mean_std(&pphi.sub(&p0)?.values);
    r.check(Check::at_most("p_phi_minus_p0_std", ratio(s, pphi.max_abs()), 1e-12));

    let small = Grid::new(2, 16, 2.0)?;
    let heat = pressure::heat_normalization(
        &fixtures::compact_source(small),
        &[4.0, 16.0, 64.0, 256.0],
        &HeatProbes::Parabolic,
        exec,
    )?;
    r.value("heat.max_abs", &heat.max_abs);
    r.value("heat.slope", heat.slope);
    r.check(Check::at_most("heat.slope_error", (heat.slope - heat.expected_slope).abs(), cfg.tol("heat_slope")));
    Ok(r)
}

fn leray_suite(cfg: &RunConfig, exec: &dyn Executor) -> Result<Report> {
    let mut r = Report::new("leray", cfg);
    let grid = cfg.grid()?;
    let solver = PressureSolver::new(cfg.spec()?, exec)?;
    let tol = cfg.tol("leray");
    let rel = |a: &VectorField, b: &VectorField| ratio(fields::vector_interior_l2(a, 2), fields::vector_interior_l2(b, 2));

    let hs = fixtures::stream_potential(grid);
    let parts = leray::leray_project(&solver, &hs)?;
    let single = rel(&parts.solenoidal.sub(&parts.input)?, &parts.input);
    r.check(Check::at_most("solenoidal_fixed", single, tol));
    let again = leray::leray_project(&solver, &leray::solenoidal_tensor(&hs, &parts)?)?;
    r.check(Check::at_most(
        "idempotence",
        rel(&again.solenoidal.sub(&parts.solenoidal)?, &parts.input),
        2.0 * tol,
    ));
    let recon = parts.solenoidal.add(&parts.gradient_part)?.sub(&parts.input)?;
    r.check(Check::at_most("hodge_reconstruction", ratio(recon.max_abs(), parts.input.max_abs()), 1e-14));

    let hg = fixtures::gradient_potential(grid);
    let pg = leray::leray_project(&solver, &hg)?;
    r.check(Check::at_most("gradient_annihilated", rel(&pg.solenoidal, &pg.input), tol));
    let curl = fields::curl(&pg.gradient_part)?.interior_l2(2);
    r.check(Check::at_most(
        "gradient_part_curl",
        ratio(curl, fields::vector_interior_l2(&pg.gradient_part, 2)),
        tol,
    ));

    let hb = fixtures::solenoidal_potential(grid);
    let pb = leray::leray_project(&solver, &hb)?;
    let div = fields::divergence(&pb.solenoidal)?;
    r.value("symmetric_potential.deviation", rel(&pb.solenoidal.sub(&pb.input)?, &pb.input));
    r.value(
        "symmetric_potential.divergence",
        ratio(fields::interior_l2(&grid, &div.values, 2), fields::vector_interior_l2(&pb.input, 2)),
    );

    // mild form against the pressure form with p = p_φ
    let g2 = Grid::new(2, cfg.n, cfg.half_width)?;
    let v = fixtures::HeatVortex::default();
    let times = fixtures::uniform_times(0.2, 4);
    let u = v.velocity_series(g2, &times)?;
    let s2 = PressureSolver::new(cfg.spec()?, exec)?;
    let p = TimeSeries::new(
        u.frames
            .iter()
            .map(|uk| s2.assemble_p_phi(uk, None))
            .collect::<wsp_core::Result<Vec<_>>>()?,
    )?;
    let ns = leray::ns_residual(&u, None, &p)?;
    let mns = leray::mns_residual(&s2, &u, None)?;
    let mut gap: f64 = 0.0;
    for (a, b) in ns.iter().zip(&mns) {
        gap = gap.max(a.sub(b)?.max_abs());
    }
    r.check(Check::at_most("mild_form_matches", gap, 1e-10));
    Ok(r)
}

fn galilean_suite(cfg: &RunConfig, exec: &dyn Executor) -> Result<Report> {
    let mut r = Report::new("galilean", cfg);
    let grid = Grid::new(2, cfg.n, cfg.half_width)?;
    r.value("grid", [grid.n() as f64, grid.half_width()]);
    let solver = PressureSolver::new(cfg.spec()?, exec)?;
    let fx = fixtures::DriftingVortex::default();
    let times = fixtures::uniform_times(1.0, 40);
    let u = fx.velocity_series(grid, &times)?;
    let drift = galilean::displacement(&times, &fx.drift(&times))?;
    let opts = ShiftOptions::new(0.5).cubic();

    let zero = galilean::displacement(&times, &vec![[0.0; 3]; times.len()])?;
    let same = galilean::galilean_transform(&u, &zero, &opts)?;
    r.check(Check::holds("zero_drift_identity", same.series.frames == u.frames));
    let z = fixtures::series(&times, |t| VectorField::zeros(grid).at_time(t))?;
    let off = galilean::galilean_transform(&z, &drift, &opts)?;
    let mut offset_err: f64 = 0.0;
    for (k, f) in off.series.frames.iter().enumerate() {
        for (a, c) in f.components.iter().enumerate() {
            offset_err = offset_err.max(c.values.iter().map(|v| (v - drift.g[k][a]).abs()).fold(0.0, f64::max));
        }
    }
    r.check(Check::at_most("pure_offset", offset_err, 0.0));

    let s = fx.source_series(grid, &times)?;
    let f = fx.forcing_series(grid, &times)?;
    let opts_dec = DecomposeOptions {
        curl_tolerance: cfg.tol("curl"),
        dispersion_warning: cfg.tol("dispersion"),
        ..DecomposeOptions::default()
    };
    let dec = pressure::decompose_source(&solver, &s, &u, Some(&f), &opts_dec)?;
    let gerr = dec
        .g
        .iter()
        .zip(&times)
        .map(|(g, t)| (g[0] - fx.g(*t)[0]).abs().max(g[1].abs()))
        .fold(0.0, f64::max);
    r.check(Check::at_most("drift_recovery", gerr, cfg.tol("drift")));
    r.value("max_relative_dispersion", dec.relative_dispersion.iter().cloned().fold(0.0, f64::max));
    r.value("mismatch_warning", dec.mismatch_warning);

    let w = galilean::galilean_transform(&u, &drift, &opts)?;
    let q = galilean::galilean_pressure(&TimeSeries::new(dec.p_phi.clone())?, &drift, &opts)?;
    let res = leray::ns_residual(&w.series, None, &q.series)?;
    let ring = w.invalid_ring.max(2);
    let worst = res[1..res.len() - 1]
        .iter()
        .map(|x| fields::vector_interior_max(x, ring))
        .fold(0.0, f64::max);
    r.value("transformed_residual", worst);
    r.value("invalid_ring", w.invalid_ring);
    let back = galilean::galilean_transform(&w.series, &drift, &ShiftOptions { inverse: true, ..opts })?;
    let mut rt: f64 = 0.0;
    for (a, b) in back.series.frames.iter().zip(&u.frames) {
        rt = rt.max(fields::vector_interior_max(&a.sub(b)?, 2 * w.invalid_ring));
    }
    r.value("round_trip_error", rt);

    let hv = fixtures::HeatVortex::default();
    let times = fixtures::uniform_times(1.0, 10);
    let dec = pressure::decompose_source(
        &solver,
        &hv.source_series(grid, &times)?,
        &hv.velocity_series(grid, &times)?,
        None,
        &opts_dec,
    )?;
    let gmax = dec.g.iter().map(|g| g[0].abs().max(g[1].abs())).fold(0.0, f64::max);
    r.check(Check::at_most("wd_regime_drift", gmax, cfg.tol("wd_drift") * hv.velocity_scale(0.0)));
    Ok(r)
}

fn suitability_suite(cfg: &RunConfig, exec: &dyn Executor) -> Result<Report> {
    let mut r = Report::new("suitability", cfg);
    let grid = Grid::new(2, cfg.n, cfg.half_width)?;
    let solver = PressureSolver::new(cfg.spec()?, exec)?;
    let v = fixtures::HeatVortex::default();
    let times = fixtures::uniform_times(1.0, 20);
    let u = v.velocity_series(grid, &times)?;
    let p = TimeSeries::new(
        u.frames
            .iter()
            .map(|uk| solver.assemble_p_phi(uk, None))
            .collect::<wsp_core::Result<Vec<_>>>()?,
    )?;
    let battery = leray::battery(&grid, &times, cfg.seed)?;
    let mut worst: f64 = 0.0;
    let mut mus = Vec::new();
    for spec in &battery {
        let rep = leray::suitability_residual(&u, &p, None, spec)?;
        worst = worst.max(ratio(rep.mu.abs(), rep.tolerance));
        mus.push(rep.mu);
    }
    r.value("mu", &mus);
    r.check(Check::at_most("energy_equality", worst, 1.0));
    let phi = battery[0].sample(&grid, &times)?;
    let twice = TimeSeries::new(phi.frames.iter().map(|f| f.scale(2.0)).collect())?;
    let a = leray::energy_pairing(&u, &p, None, &TestFunctionSamples::from_series(&phi)?)?.sum();
    let b = leray::energy_pairing(&u, &p, None, &TestFunctionSamples::from_series(&twice)?)?.sum();
    r.check(Check::at_most("linearity", ratio((b - 2.0 * a).abs(), a.abs()), 1e-12));
    let z = fixtures::series(&times, |t| VectorField::zeros(grid).at_time(t))?;
    let pz = fixtures::series(&times, |t| ScalarField::zeros(grid).at_time(t))?;
    let mz = leray::suitability_residual(&z, &pz, None, &battery[1])?;
    r.check(Check::at_most("zero_velocity", mz.mu.abs(), 0.0));
    Ok(r)
}

/// Exponents used by the spaces suite and the CLI defaults.
pub const SPACES_P: f64 = 2.0;
pub const SPACES_GAMMA: f64 = 1.5;
pub const SPACES_DELTA: f64 = 3.0;
pub const SPLIT_LEVELS: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

/// `max |c/mean − 1|` over a set of constants.
pub fn spread(c: &[f64]) -> f64 {
    let m = c.iter().sum::<f64>() / c.len() as f64;
    c.iter().map(|v| (v / m - 1.0).abs()).fold(0.0, f64::max)
}

fn spaces_suite(cfg: &RunConfig) -> Result<Report> {
    let mut r = Report::new("spaces", cfg);
    let grid = cfg.grid()?;
    let (p, g, dl) = (SPACES_P, SPACES_GAMMA, SPACES_DELTA);
    let slack = cfg.tol("embedding_slack");
    let mut r1 = Vec::new();
    let mut ok1 = true;
    let mut ok2 = true;
    for (name, f) in fixtures::spaces_family(grid) {
        let e = spaces::embedding_constants(&f, p, g, dl, slack)?;
        ok1 &= e.r1_ok;
        ok2 &= e.r2_ok;
        r1.push((name, e.r1, e.r2));
    }
    r.value("embedding", &r1);
    r.check(Check::holds("embedding_first", ok1));
    r.check(Check::holds("embedding_second", ok2));

    let f = fixtures::borderline_profile(grid, p, g);
    let mut c0 = Vec::new();
    let mut c1 = Vec::new();
    for a in SPLIT_LEVELS {
        let s = spaces::interpolation_split(&f, a, p, g, dl)?;
        c0.push(s.c0);
        c1.push(s.c1);
    }
    r.value("split.c0", &c0);
    r.value("split.c1", &c1);
    r.check(Check::at_most("split.c0_spread", spread(&c0), cfg.tol("split_spread")));
    r.check(Check::at_most("split.c1_spread", spread(&c1), cfg.tol("split_spread")));

    let table = SplitTable::new(&f, p, dl)?;
    let levels: Vec<f64> = (0..=24).map(|k| 2f64.powf(k as f64 / 4.0 - 1.0)).collect();
    let k: Vec<f64> = levels
        .iter()
        .map(|a| table.k(*a, RadiusFamily::AllNodeRadii, p, dl).k)
        .collect();
    let mut concave = true;
    for i in 1..levels.len() - 1 {
        let (a0, a1, a2) = (levels[i - 1], levels[i], levels[i + 1]);
        let chord = k[i - 1] + (k[i + 1] - k[i - 1]) * (a1 - a0) / (a2 - a0);
        concave &= k[i] >= chord * (1.0 - 1e-12) && k[i] >= k[i - 1] * (1.0 - 1e-12);
    }
    r.check(Check::holds("k_functional_concave", concave));
    let b = spaces::b_norm(&f, p, g)?;
    r.value("borderline.b_norm", b.b_norm);
    r.value("borderline.decay_ratio", b.decay_ratio);
    let fast = spaces::b_norm(&fixtures::spaces_family(grid)[2].1, p, g)?;
    r.check(Check::holds("decay_flag.fast", fast.decay_flag));
    r.check(Check::holds("decay_flag.borderline", !b.decay_flag));
    Ok(r)
}

fn oracle_suite(cfg: &RunConfig, exec: &dyn Executor) -> Result<Report> {
    let mut r = Report::new("oracle", cfg);
    let grid = cfg.grid()?;
    let spec = cfg.spec()?;
    let solver = PressureSolver::new(spec, exec)?;
    let h = pressure::source_tensor(&fixtures::fast_decay(grid), None)?;
    let cmp = oracle::compare_pressure(&solver, &h, 2.0, 2)?;
    r.value("pressure.relative_max", cmp.relative_max);
    r.check(Check::at_most("pressure.relative_l2", cmp.relative_l2, cfg.tol("oracle")));
    let hp = fixtures::solenoidal_potential(grid);
    let cmp = oracle::compare_projection(&solver, &hp, 2.0, 2)?;
    r.check(Check::at_most("projection.relative_l2", cmp.relative_l2, cfg.tol("oracle")));

    // brute-force sums on a 16^d grid
    let d = cfg.dim;
    let small = Grid::new(d, 16, 2.0)?;
    let sspec = CutoffSpec::new(1.0, 1.5)?;
    let ssol = PressureSolver::new(sspec, exec)?;
    let f = ScalarField::from_fn(small, 0.0, |x| (-1.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
    let nodes = [[8usize, 8, 8], [5, 9, 7], [3, 12, 10]];
    let probes: Vec<_> = nodes.iter().map(|i| small.point(small.index(*i))).collect();
    let mut same: f64 = 0.0;
    for (i, j) in [(0, 0), (0, 1)] {
        let near = ssol.near_field_conv(&f, i, j)?;
        let far = ssol.far_field_corrected(&f, i, j)?;
        for (kern, fast) in [
            (OracleKernel::Near { i, j, spec: sspec }, &near),
            (OracleKernel::CorrectedFar { i, j, spec: sspec }, &far),
        ] {
            let q = oracle::quadrature_conv(&kern, &f, &probes, 1)?;
            for (v, n) in q.iter().zip(&nodes) {
                let fv = fast.values[small.index(*n)];
                same = same.max((v - fv).abs() / (1.0 + fv.abs()));
            }
        }
    }
    r.check(Check::at_most("quadrature_matches_fast_path", same, 1e-10));
    let kern = OracleKernel::Near { i: 0, j: 0, spec: sspec };
    let e2 = oracle::quadrature_with_estimate(&kern, &f, &probes, 2)?;
    let q4 = oracle::quadrature_conv(&kern, &f, &probes, 4)?;
    let rich = q4
        .iter()
        .zip(&e2.values)
        .zip(&e2.error_estimate)
        .all(|((a, b), e)| (a - b).abs() <= *e);
    r.check(Check::holds("richardson_consistency", rich));
    Ok(r)
}
