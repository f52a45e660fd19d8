//! The `wsp` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use wsp_core::fields::{self, Grid, ScalarField, TensorField, TimeSeries, VectorField};
use wsp_core::galilean::{self, ShiftOptions};
use wsp_core::kernels::{CutoffSpec, KernelId, KernelTable};
use wsp_core::leray;
use wsp_core::pressure::{self, DecomposeOptions, PressureSolver};
use wsp_core::spaces::{self, RadiusFamily};
use wsp_core::exec::Executor;
use wsp_core::Error as CoreError;

use crate::config::{PressureMode, RunConfig};
use crate::error::{Result, WspError};
use crate::fixtures;
use crate::exec::ThreadPool;
use crate::io::{self, Record};
use crate::oracle;
use crate::report::{Check, Report};
use crate::verify::{self, Suite};

#[derive(Debug, Parser)]
#[command(name = "wsp", version, about = "Whole-space pressure for Navier-Stokes data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Run configuration flags. They override `--config`, which overrides the
/// defaults.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Nodes per axis.
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,
    /// Half-width of the box.
    #[arg(long = "l", global = true)]
    pub half_width: Option<f64>,
    #[arg(long, global = true)]
    pub r0: Option<f64>,
    #[arg(long, global = true)]
    pub r1: Option<f64>,
    /// `phi` or `p0`.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; `WSP_WORKERS` takes precedence.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Extra `key=value` settings, e.g. `tol.leray=1e-4`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pressure of a velocity time series.
    Pressure {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        forcing: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Leray projection of `∇·H` for each tensor record.
    Project {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Moves a velocity series into the frame given by a drift file.
    Galilean {
        #[arg(long)]
        input: PathBuf,
        /// CSV rows `t,g1,..,gd`.
        #[arg(long)]
        drift: PathBuf,
        #[arg(long)]
        inverse: bool,
        /// Cubic instead of multilinear interpolation.
        #[arg(long)]
        cubic: bool,
        /// Largest allowed displacement component; sets the invalid boundary ring.
        #[arg(long, default_value_t = 0.5)]
        margin: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Weighted and local Morrey norms.
    Norms {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = verify::SPACES_P)]
        p: f64,
        #[arg(long, default_value_t = verify::SPACES_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = verify::SPACES_DELTA)]
        delta: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Local energy balance against the test-function battery.
    Suitability {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        pressure: PathBuf,
        #[arg(long)]
        forcing: Option<PathBuf>,
        #[arg(long)]
        battery_seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fast path against the spectral reference on an enlarged box.
    OracleCompare {
        #[arg(long, value_enum)]
        op: OracleOp,
        /// Velocity or source tensor for `pressure`, tensor for `project`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        enlargement: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Runs an invariant suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Writes one of the manufactured fields on the configured grid.
    GenFixture {
        #[arg(value_enum)]
        name: FixtureName,
        #[arg(long)]
        out: PathBuf,
        /// End time of series fixtures.
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Time steps of series fixtures.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Also write the drift CSV of `drifting-vortex`.
        #[arg(long)]
        drift_out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleOp {
    Pressure,
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureName {
    Vortex,
    FastDecay,
    HeatVortex,
    HeatVortexPressure,
    DriftingVortex,
    DriftingForcing,
    StreamPotential,
    SolenoidalPotential,
    GradientPotential,
    CompactSource,
    Borderline,
    HessianTable,
}

/// Result of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub report: Option<Report>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match &self.report {
            Some(r) if !r.passed => 1,
            _ => 0,
        }
    }
}

/// Builds the run configuration from defaults, `--config`, flags and
/// `WSP_WORKERS`, in increasing precedence.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        cfg.apply_file(path)?;
    }
    for pair in &g.set {
        cfg.set_pair(pair)?;
    }
    if let Some(v) = g.dim {
        cfg.dim = v;
    }
    if let Some(v) = g.n {
        cfg.n = v;
    }
    if let Some(v) = g.half_width {
        cfg.half_width = v;
    }
    if let Some(v) = g.r0 {
        cfg.r0 = v;
    }
    if let Some(v) = g.r1 {
        cfg.r1 = v;
    }
    if let Some(v) = &g.mode {
        cfg.mode = v.parse()?;
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.workers {
        cfg.workers = v;
    }
    cfg.workers = ThreadPool::from_env(cfg.workers).workers();
    Ok(cfg)
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| WspError::Usage(e.to_string()))?;
    run(&cli)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve_config(&cli.global)?;
    let pool = ThreadPool::new(cfg.workers);
    let report = match &cli.command {
        Command::Pressure {
            input,
            forcing,
            out,
            report,
        } => {
            let r = pressure_cmd(&cfg, &pool, input, forcing.as_deref(), out.as_deref())?;
            finish(r, report.as_deref())?
        }
        Command::Project { tensor, out, report } => {
            let r = project_cmd(&cfg, &pool, tensor, out.as_deref())?;
            finish(r, report.as_deref())?
        }
        Command::Galilean {
            input,
            drift,
            inverse,
            cubic,
            margin,
            out,
            report,
        } => {
            let r = galilean_cmd(&cfg, input, drift, *inverse, *cubic, *margin, out.as_deref())?;
            finish(r, report.as_deref())?
        }
        Command::Norms {
            input,
            p,
            gamma,
            delta,
            report,
        } => {
            let r = norms_cmd(&cfg, input, *p, *gamma, *delta)?;
            finish(r, report.as_deref())?
        }
        Command::Suitability {
            input,
            pressure,
            forcing,
            battery_seed,
            report,
        } => {
            let seed = battery_seed.unwrap_or(cfg.seed);
            let r = suitability_cmd(&cfg, input, pressure, forcing.as_deref(), seed)?;
            finish(r, report.as_deref())?
        }
        Command::OracleCompare {
            op,
            input,
            enlargement,
            report,
        } => {
            let r = oracle_cmd(&cfg, &pool, *op, input, *enlargement)?;
            finish(r, report.as_deref())?
        }
        Command::Verify { suite, report } => {
            let suite: Suite = suite.parse()?;
            let r = verify::run(suite, &cfg, &pool)?;
            finish(r, report.as_deref())?
        }
        Command::GenFixture {
            name,
            out,
            t_end,
            steps,
            drift_out,
        } => {
            gen_fixture(&cfg, &pool, *name, out, *t_end, *steps, drift_out.as_deref())?;
            return Ok(Outcome { report: None });
        }
    };
    Ok(Outcome { report: Some(report) })
}

fn finish(report: Report, path: Option<&Path>) -> Result<Report> {
    if let Some(p) = path {
        report.write(p)?;
    }
    Ok(report)
}

/// Solver for input data: the configured cutoff, checked against the
/// grid of the data rather than the configured one.
fn solver_for<'e>(cfg: &RunConfig, pool: &'e ThreadPool, grid: &Grid) -> Result<PressureSolver<'e>> {
    let s = PressureSolver::new(cfg.spec()?, pool)?;
    s.check_resolution(grid)?;
    Ok(s)
}

fn forcing_series(path: Option<&Path>) -> Result<Option<TimeSeries<TensorField>>> {
    path.map(|p| io::tensor_series(io::read(p)?)).transpose()
}

fn pressure_cmd(
    cfg: &RunConfig,
    pool: &ThreadPool,
    input: &Path,
    forcing: Option<&Path>,
    out: Option<&Path>,
) -> Result<Report> {
    let u = io::vector_series(io::read(input)?)?;
    let f = forcing_series(forcing)?;
    if let Some(f) = &f {
        u.check_aligned(f)?;
    }
    let grid = *u.grid();
    let solver = solver_for(cfg, pool, &grid)?;
    let mut r = Report::new("pressure", cfg);
    r.value("grid", [grid.dim() as f64, grid.n() as f64, grid.half_width()]);
    let mut ps = Vec::with_capacity(u.len());
    let mut residuals = Vec::new();
    let mut tails = Vec::new();
    for (k, uk) in u.frames.iter().enumerate() {
        let h = pressure::source_tensor(uk, f.as_ref().map(|f| &f.frames[k]))?;
        let p = match cfg.mode {
            PressureMode::Phi => solver.p_phi_from_source(&h)?,
            PressureMode::P0 => solver.p0_from_source(&h)?,
        };
        residuals.push(pressure::poisson_residual(&p, &h)?);
        let t = solver.tail_estimate(&h)?;
        tails.push((t.exponent, t.bound, t.divergent));
        ps.push(p);
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    r.value("times", &u.times);
    r.value("poisson_residual", &residuals);
    r.value("tail", &tails);
    r.check(Check::at_most("poisson_residual", worst, cfg.tol("poisson")));
    if cfg.mode == PressureMode::P0 {
        r.check(Check::holds("p0_convergent", tails.iter().all(|t| !t.2)));
    }
    if u.len() >= 3 {
        let zero = TimeSeries::new(
            u.frames
                .iter()
                .map(|uk| ScalarField::zeros(uk.grid).at_time(uk.time))
                .collect(),
        )?;
        let s: Vec<VectorField> = leray::ns_residual(&u, f.as_ref(), &zero)?
            .into_iter()
            .map(|v| v.scale(-1.0))
            .collect();
        let opts = DecomposeOptions {
            curl_tolerance: cfg.tol("curl"),
            dispersion_warning: cfg.tol("dispersion"),
            ..DecomposeOptions::default()
        };
        match pressure::decompose_source(&solver, &TimeSeries::new(s)?, &u, f.as_ref(), &opts) {
            Ok(dec) => {
                r.check(Check::holds("source_is_gradient", true));
                let d = grid.dim();
                r.value("g", dec.g.iter().map(|g| g[..d].to_vec()).collect::<Vec<_>>());
                r.value("relative_dispersion", &dec.relative_dispersion);
                r.value("curl_ratio", &dec.curl_ratio);
                r.value("mismatch_warning", dec.mismatch_warning);
            }
            Err(CoreError::NotAGradient { curl_ratio, .. }) => {
                r.check(Check::at_most("source_is_gradient", curl_ratio, cfg.tol("curl")));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(out) = out {
        io::write(out, &ps.into_iter().map(Record::Scalar).collect::<Vec<_>>())?;
    }
    Ok(r)
}

fn project_cmd(cfg: &RunConfig, pool: &ThreadPool, input: &Path, out: Option<&Path>) -> Result<Report> {
    let hs = io::tensors(io::read(input)?)?;
    let mut r = Report::new("project", cfg);
    let mut records = Vec::new();
    let mut divs = Vec::new();
    let mut worst_recon: f64 = 0.0;
    for h in &hs {
        let solver = solver_for(cfg, pool, &h.grid)?;
        let parts = leray::leray_project(&solver, h)?;
        let div = fields::divergence(&parts.solenoidal)?;
        let scale = fields::vector_interior_l2(&parts.input, 2);
        let dn = fields::interior_l2(&h.grid, &div.values, 2);
        divs.push(if scale > 0.0 { dn / scale } else { dn });
        let recon = parts
            .solenoidal
            .add(&parts.gradient_part)?
            .sub(&parts.input)?
            .max_abs();
        let m = parts.input.max_abs();
        worst_recon = worst_recon.max(if m > 0.0 { recon / m } else { recon });
        records.push(Record::Vector(parts.solenoidal));
    }
    r.value("relative_divergence", &divs);
    r.check(Check::at_most("hodge_reconstruction", worst_recon, 1e-12));
    if let Some(out) = out {
        io::write(out, &records)?;
    }
    Ok(r)
}

/// Reads `t,g1,..,gd` rows; a non-numeric first row is taken as a header.
pub fn read_drift(path: &Path, dim: usize) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| WspError::Config(format!("{}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut g = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| WspError::Config(format!("{}: {e}", path.display())))?;
        let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = match vals {
            Ok(v) => v,
            Err(_) if row == 0 => continue,
            Err(e) => {
                return Err(WspError::Config(format!(
                    "{}: row {}: {e}",
                    path.display(),
                    row + 1
                )))
            }
        };
        if vals.len() != dim + 1 {
            return Err(WspError::Config(format!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                row + 1,
                vals.len(),
                dim + 1
            )));
        }
        let mut v = [0.0; 3];
        v[..dim].copy_from_slice(&vals[1..]);
        times.push(vals[0]);
        g.push(v);
    }
    Ok((times, g))
}

pub fn write_drift(path: &Path, times: &[f64], g: &[[f64; 3]], dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| WspError::Config(format!("{}: {e}", path.display())))?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|a| format!("g{a}")));
    let err = |e: csv::Error| WspError::Config(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(err)?;
    for (t, gk) in times.iter().zip(g) {
        let mut row = vec![format!("{t:e}")];
        row.extend(gk[..dim].iter().map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| WspError::io(path, e))
}

fn galilean_cmd(
    cfg: &RunConfig,
    input: &Path,
    drift: &Path,
    inverse: bool,
    cubic: bool,
    margin: f64,
    out: Option<&Path>,
) -> Result<Report> {
    let u = io::vector_series(io::read(input)?)?;
    let (times, g) = read_drift(drift, u.grid().dim())?;
    if times.len() != u.len() || times.iter().zip(&u.times).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
        return Err(WspError::Config(format!(
            "drift times do not match the {} frame times of the input",
            u.len()
        )));
    }
    let curve = galilean::displacement(&times, &g)?;
    let mut opts = ShiftOptions::new(margin);
    if cubic {
        opts = opts.cubic();
    }
    if inverse {
        opts = opts.inverse();
    }
    let shifted = galilean::galilean_transform(&u, &curve, &opts)?;
    let d = u.grid().dim();
    let mut r = Report::new("galilean", cfg);
    r.value("displacement", curve.displacement.iter().map(|e| e[..d].to_vec()).collect::<Vec<_>>());
    r.value("invalid_ring", shifted.invalid_ring);
    r.check(Check::holds("valid_interior_left", 2 * shifted.invalid_ring < u.grid().n()));
    if let Some(out) = out {
        io::write(out, &shifted.series.frames.into_iter().map(Record::Vector).collect::<Vec<_>>())?;
    }
    Ok(r)
}

fn scalar_inputs(path: &Path) -> Result<Vec<ScalarField>> {
    io::read(path)?
        .into_iter()
        .map(|rec| match rec {
            Record::Scalar(f) => Ok(f),
            Record::Vector(v) => {
                let vals = (0..v.grid.len()).map(|l| v.magnitude_at(l)).collect();
                Ok(ScalarField::new(v.grid, v.time, vals)?)
            }
            other => Err(WspError::Config(format!(
                "norms takes scalar or vector records, got a {}",
                other.kind_name()
            ))),
        })
        .collect()
}

fn norms_cmd(cfg: &RunConfig, input: &Path, p: f64, gamma: f64, delta: f64) -> Result<Report> {
    let mut r = Report::new("norms", cfg);
    for (k, f) in scalar_inputs(input)?.iter().enumerate() {
        let key = |s: &str| format!("record{k}.{s}");
        let n = spaces::b_norm(f, p, gamma)?;
        r.value(&key("lp_wgamma"), n.lp_wgamma);
        r.value(&key("b_norm"), n.b_norm);
        r.value(&key("sup_radius"), n.sup_radius);
        r.value(&key("trend"), &n.trend);
        r.value(&key("decay_ratio"), n.decay_ratio);
        r.value(&key("decay_flag"), n.decay_flag);
        r.value(&key("boundary_error"), n.boundary_error);
        let e = spaces::embedding_constants(f, p, gamma, delta, cfg.tol("embedding_slack"))?;
        r.value(&key("embedding"), [e.r1, e.bound1, e.r2, e.bound2]);
        if !e.undefined {
            r.check(Check::holds(&key("embedding_first"), e.r1_ok));
            r.check(Check::holds(&key("embedding_second"), e.r2_ok));
        }
        let mut split = Vec::new();
        for a in verify::SPLIT_LEVELS {
            let s = spaces::interpolation_split(f, a, p, gamma, delta)?;
            let kv = spaces::k_functional(f, a, p, gamma, delta, RadiusFamily::AllNodeRadii)?;
            split.push([a, s.radius.unwrap_or(0.0), s.c0, s.c1, kv.k]);
        }
        r.value(&key("split"), &split);
    }
    Ok(r)
}

fn suitability_cmd(
    cfg: &RunConfig,
    input: &Path,
    pressure: &Path,
    forcing: Option<&Path>,
    seed: u64,
) -> Result<Report> {
    let u = io::vector_series(io::read(input)?)?;
    let p = TimeSeries::new(io::scalars(io::read(pressure)?)?)?;
    let f = forcing_series(forcing)?;
    let grid = *u.grid();
    let battery = leray::battery(&grid, &u.times, seed)?;
    let mut r = Report::new("suitability", cfg);
    r.value("battery_seed", seed);
    let mut mus = Vec::new();
    let mut worst: f64 = 0.0;
    for spec in &battery {
        let rep = leray::suitability_residual(&u, &p, f.as_ref(), spec)?;
        worst = worst.max(if rep.tolerance > 0.0 {
            rep.mu.abs() / rep.tolerance
        } else {
            rep.mu.abs()
        });
        mus.push([rep.mu, rep.tolerance]);
    }
    r.value("mu_and_tolerance", &mus);
    r.check(Check::at_most("energy_equality", worst, 1.0));
    Ok(r)
}

fn oracle_cmd(cfg: &RunConfig, pool: &ThreadPool, op: OracleOp, input: &Path, e: f64) -> Result<Report> {
    let records = io::read(input)?;
    let mut r = Report::new("oracle-compare", cfg);
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for rec in records {
        let h = match (op, rec) {
            (OracleOp::Pressure, Record::Vector(u)) => pressure::source_tensor(&u, None)?,
            (_, Record::Tensor(h)) => h,
            (_, other) => {
                return Err(WspError::Config(format!(
                    "oracle-compare cannot use a {} record here",
                    other.kind_name()
                )))
            }
        };
        let solver = solver_for(cfg, pool, &h.grid)?;
        let res = match op {
            OracleOp::Pressure => oracle::compare_pressure(&solver, &h, e, 2)?,
            OracleOp::Project => oracle::compare_projection(&solver, &h, e, 2)?,
        };
        worst = worst.max(res.relative_l2);
        rows.push(res);
    }
    r.value("results", &rows);
    r.check(Check::at_most("relative_l2", worst, cfg.tol("oracle")));
    Ok(r)
}

fn gen_fixture(
    cfg: &RunConfig,
    pool: &ThreadPool,
    name: FixtureName,
    out: &Path,
    t_end: f64,
    steps: usize,
    drift_out: Option<&Path>,
) -> Result<()> {
    let grid = cfg.grid()?;
    let times = fixtures::uniform_times(t_end, steps);
    let vecs = |s: TimeSeries<VectorField>| s.frames.into_iter().map(Record::Vector).collect::<Vec<_>>();
    let records = match name {
        FixtureName::Vortex => vec![Record::Vector(fixtures::vortex(grid))],
        FixtureName::FastDecay => vec![Record::Vector(fixtures::fast_decay(grid))],
        FixtureName::HeatVortex => vecs(fixtures::HeatVortex::default().velocity_series(grid, &times)?),
        FixtureName::HeatVortexPressure => fixtures::HeatVortex::default()
            .pressure_series(grid, &times)?
            .frames
            .into_iter()
            .map(Record::Scalar)
            .collect(),
        FixtureName::DriftingVortex => {
            let fx = fixtures::DriftingVortex::default();
            if let Some(p) = drift_out {
                write_drift(p, &times, &fx.drift(&times), grid.dim())?;
            }
            vecs(fx.velocity_series(grid, &times)?)
        }
        FixtureName::DriftingForcing => fixtures::DriftingVortex::default()
            .forcing_series(grid, &times)?
            .frames
            .into_iter()
            .map(Record::Tensor)
            .collect(),
        FixtureName::StreamPotential => vec![Record::Tensor(fixtures::stream_potential(grid))],
        FixtureName::SolenoidalPotential => vec![Record::Tensor(fixtures::solenoidal_potential(grid))],
        FixtureName::GradientPotential => vec![Record::Tensor(fixtures::gradient_potential(grid))],
        FixtureName::CompactSource => vec![Record::Tensor(fixtures::compact_source(grid))],
        FixtureName::Borderline => vec![Record::Scalar(fixtures::borderline_profile(
            grid,
            verify::SPACES_P,
            verify::SPACES_GAMMA,
        ))],
        FixtureName::HessianTable => {
            let spec: CutoffSpec = cfg.spec()?;
            (0..grid.dim())
                .flat_map(|i| (i..grid.dim()).map(move |j| (i, j)))
                .map(|(i, j)| KernelTable::build(&grid, KernelId::Hessian { i, j }, &spec, pool).map(Record::Kernel))
                .collect::<wsp_core::Result<Vec<_>>>()?
        }
    };
    io::write(out, &records)
}
