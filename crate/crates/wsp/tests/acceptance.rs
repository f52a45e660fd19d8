//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line.

use std::process::Command;
use std::time::Instant;

use wsp::fixtures::{self, DriftingVortex, HeatVortex};
use wsp::oracle;
use wsp::verify;
use wsp_core::exec::SERIAL;
use wsp_core::fields::{self, Grid, TimeSeries, VectorField};
use wsp_core::galilean::{self, ShiftOptions};
use wsp_core::kernels::{self, CutoffSpec};
use wsp_core::leray::{self, TestFunctionSamples};
use wsp_core::pressure::{self, DecomposeOptions, HeatProbes, PressureSolver};
use wsp_core::spaces::{self, RadiusFamily, SplitTable};

fn pool() -> wsp::exec::ThreadPool {
    let n = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    wsp::exec::ThreadPool::new(n.min(8))
}

fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    println!("criterion {id:>2} {name:<24} {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn rel_l2(a: &VectorField, b: &VectorField, ring: usize) -> f64 {
    fields::vector_interior_l2(&a.sub(b).unwrap(), ring) / fields::vector_interior_l2(b, ring)
}

#[test]
fn c01_phi_independence() {
    let t = Instant::now();
    let grid = Grid::new(2, 128, 8.0).unwrap();
    let a = CutoffSpec::new(1.0, 2.0).unwrap();
    let b = CutoffSpec::new(0.5, 1.5).unwrap();
    let h = pressure::source_tensor(&fixtures::gaussian_vortex(grid), None).unwrap();
    let pa = PressureSolver::new(a, &SERIAL).unwrap().p_phi_from_source(&h).unwrap();
    let pb = PressureSolver::new(b, &SERIAL).unwrap().p_phi_from_source(&h).unwrap();
    let ga = fields::gradient(&pa);
    let gb = fields::gradient(&pb);
    let grad = fields::vector_interior_max(&ga.sub(&gb).unwrap(), 1) / ga.max_abs();
    let diff = pa.sub(&pb).unwrap().values;
    let n = diff.len() as f64;
    let mean = diff.iter().sum::<f64>() / n;
    let std = (diff.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let c = pressure::phi_change_constant(&h, &a, &b).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = grad <= 1e-3 && std / mean.abs() <= 1e-6 && (mean - c).abs() <= 1e-8 && secs <= 120.0;
    verdict(
        1,
        "phi-independence",
        ok,
        format!(
            "grad {grad:.2e} <= 1e-3, std/|mean| {:.2e} <= 1e-6, |mean-C| {:.2e} <= 1e-8, {secs:.1}s <= 120s",
            std / mean.abs(),
            (mean - c).abs()
        ),
    );
}

#[test]
fn c02_poisson_consistency() {
    let t = Instant::now();
    let exec = pool();
    let solver = PressureSolver::new(CutoffSpec::default(), &exec).unwrap();
    let mut detail = String::new();
    let mut ok = true;
    for (d, coarse, fine) in [(2usize, 128usize, 256usize), (3, 64, 128)] {
        let res: Vec<f64> = [coarse, fine]
            .iter()
            .map(|&n| {
                let grid = Grid::new(d, n, 8.0).unwrap();
                let u = fixtures::vortex(grid);
                let h = pressure::source_tensor(&u, None).unwrap();
                pressure::poisson_residual(&solver.assemble_p_phi(&u, None).unwrap(), &h).unwrap()
            })
            .collect();
        let gain = res[0] / res[1];
        let at128 = if coarse == 128 { res[0] } else { res[1] };
        ok &= gain >= 3.0 && at128 <= 5e-2;
        detail += &format!("d={d}: {:.2e} -> {:.2e} (x{gain:.2} >= 3); ", res[0], res[1]);
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs <= 600.0;
    verdict(2, "poisson-consistency", ok, format!("{detail}N=128 <= 5e-2, {secs:.0}s <= 600s"));
}

#[test]
fn c03_oracle_agreement() {
    let exec = pool();
    let solver = PressureSolver::new(CutoffSpec::default(), &exec).unwrap();
    let at = |n: usize, e: f64| {
        let grid = Grid::new(2, n, 8.0).unwrap();
        let h = pressure::source_tensor(&fixtures::fast_decay(grid), None).unwrap();
        oracle::compare_pressure(&solver, &h, e, 2).unwrap().relative_l2
    };
    let e2 = at(128, 2.0);
    let e4 = at(128, 4.0);
    let fine = at(256, 2.0);
    let ok = e2 <= 2e-2 && e4 <= e2 && fine < e2;
    verdict(
        3,
        "oracle-agreement",
        ok,
        format!("N=128 e=2 {e2:.4e} <= 2e-2, e=4 {e4:.4e} <= e=2, N=256 {fine:.3e} < N=128"),
    );
}

#[test]
fn c04_heat_normalization() {
    let exec = pool();
    let mut ok = true;
    let mut detail = String::new();
    for d in [2usize, 3] {
        let grid = Grid::new(d, 16, 2.0).unwrap();
        let r = pressure::heat_normalization(
            &fixtures::compact_source(grid),
            &[4.0, 16.0, 64.0, 256.0],
            &HeatProbes::Parabolic,
            &exec,
        )
        .unwrap();
        let target = -(d as f64 + 1.0) / 2.0;
        ok &= (r.slope - target).abs() <= 0.15;
        detail += &format!("d={d}: slope {:.4} vs {target} +-0.15; ", r.slope);
    }
    verdict(4, "heat-normalization", ok, detail);
}

#[test]
fn c05_kernel_bound_sweeps() {
    let mut ok = true;
    let mut detail = String::new();
    for d in [2usize, 3] {
        let df = d as f64;
        for (label, a, b, e) in [("d+1", df + 1.0, df + 1.0, df + 1.0), ("d", df, df + 1.0, df)] {
            let s = kernels::bound_sweep(d, a, b, e, 64.0).unwrap();
            let max = s.scaled.iter().cloned().fold(0.0, f64::max);
            ok &= s.bounded && max.is_finite() && s.last_band_change <= 0.05;
            detail += &format!("d={d} (1+|y|)^{label}: max {max:.3}, band change {:.3}; ", s.last_band_change);
        }
    }
    verdict(5, "kernel-bound-sweeps", ok, format!("{detail}limit 0.05"));
}

#[test]
fn c06_leray_projection() {
    let exec = pool();
    let solver = PressureSolver::new(CutoffSpec::default(), &exec).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for (d, n) in [(2usize, 128usize), (3, 64)] {
        let grid = Grid::new(d, n, 8.0).unwrap();
        let hs = fixtures::stream_potential(grid);
        let p = leray::leray_project(&solver, &hs).unwrap();
        let fixed = rel_l2(&p.solenoidal, &p.input, 2);
        let again = leray::leray_project(&solver, &leray::solenoidal_tensor(&hs, &p).unwrap()).unwrap();
        let idem = fields::vector_interior_l2(&again.solenoidal.sub(&p.solenoidal).unwrap(), 2)
            / fields::vector_interior_l2(&p.input, 2);
        let pg = leray::leray_project(&solver, &fixtures::gradient_potential(grid)).unwrap();
        let killed = fields::vector_interior_l2(&pg.solenoidal, 2) / fields::vector_interior_l2(&pg.input, 2);
        ok &= fixed <= 1e-3 && killed <= 1e-3 && idem <= 2e-3;
        detail += &format!("d={d}: solenoidal {fixed:.1e}, gradient {killed:.1e}, idempotence {idem:.1e}; ");
    }
    // divergence of ℙw on a potential with nonzero gradient part
    let div: Vec<f64> = [64usize, 128]
        .iter()
        .map(|&n| {
            let grid = Grid::new(2, n, 8.0).unwrap();
            let p = leray::leray_project(&solver, &fixtures::solenoidal_potential(grid)).unwrap();
            let dv = fields::divergence(&p.solenoidal).unwrap();
            fields::interior_l2(&grid, &dv.values, 2) / fields::vector_interior_l2(&p.input, 2)
        })
        .collect();
    let order = (div[0] / div[1]).log2();
    ok &= order >= 1.8;
    let fine = Grid::new(2, 256, 8.0).unwrap();
    let pb = leray::leray_project(&solver, &fixtures::solenoidal_potential(fine)).unwrap();
    let nontrivial = rel_l2(&pb.solenoidal, &pb.input, 2);
    let hb = fixtures::solenoidal_potential(fine);
    let again = leray::leray_project(&solver, &leray::solenoidal_tensor(&hb, &pb).unwrap()).unwrap();
    let idem = rel_l2(&again.solenoidal, &pb.solenoidal, 2);
    ok &= nontrivial <= 1e-3 && idem <= 2e-3;
    detail += &format!("d=2 N=256 symmetric potential: solenoidal {nontrivial:.2e}, idempotence {idem:.2e}; ");
    verdict(
        6,
        "leray-projection",
        ok,
        format!("{detail}div(Pw) {:.2e} -> {:.2e} (order {order:.2} >= 1.8); limits 1e-3, 2e-3", div[0], div[1]),
    );
}

#[test]
fn c07_galilean_invariance() {
    let exec = pool();
    let solver = PressureSolver::new(CutoffSpec::default(), &exec).unwrap();
    let fx = DriftingVortex::default();
    let mut res = Vec::new();
    let mut gerr = 0.0;
    for (n, steps) in [(64usize, 20usize), (128, 40)] {
        let grid = Grid::new(2, n, 8.0).unwrap();
        let times = fixtures::uniform_times(1.0, steps);
        let u = fx.velocity_series(grid, &times).unwrap();
        let s = fx.source_series(grid, &times).unwrap();
        let f = fx.forcing_series(grid, &times).unwrap();
        let dec = pressure::decompose_source(&solver, &s, &u, Some(&f), &DecomposeOptions::default()).unwrap();
        gerr = dec
            .g
            .iter()
            .zip(&times)
            .map(|(g, t)| (g[0] - t.sin()).abs().max(g[1].abs()))
            .fold(0.0, f64::max);
        let drift = galilean::displacement(&times, &fx.drift(&times)).unwrap();
        let opts = ShiftOptions::new(0.5).cubic();
        let w = galilean::galilean_transform(&u, &drift, &opts).unwrap();
        let q = galilean::galilean_pressure(&TimeSeries::new(dec.p_phi).unwrap(), &drift, &opts).unwrap();
        let r = leray::ns_residual(&w.series, None, &q.series).unwrap();
        let ring = w.invalid_ring.max(2);
        let worst = r[1..r.len() - 1]
            .iter()
            .map(|x| fields::vector_interior_max(x, ring))
            .fold(0.0, f64::max);
        let dt = 1.0 / steps as f64;
        res.push((worst, worst / (grid.spacing().powi(2) + dt * dt)));
    }
    let ratio = res[0].0 / res[1].0;
    let ok = ratio >= 3.0 && gerr <= 1e-4;
    verdict(
        7,
        "galilean-invariance",
        ok,
        format!(
            "residual {:.2e} -> {:.2e} (x{ratio:.2} >= 3, C {:.3} -> {:.3}), g error {gerr:.2e} <= 1e-4",
            res[0].0, res[1].0, res[0].1, res[1].1
        ),
    );
}

#[test]
fn c08_wd_regime() {
    let exec = pool();
    let solver = PressureSolver::new(CutoffSpec::default(), &exec).unwrap();
    let grid = Grid::new(2, 128, 8.0).unwrap();
    let v = HeatVortex::default();
    let times = fixtures::uniform_times(1.0, 20);
    let dec = pressure::decompose_source(
        &solver,
        &v.source_series(grid, &times).unwrap(),
        &v.velocity_series(grid, &times).unwrap(),
        None,
        &DecomposeOptions::default(),
    )
    .unwrap();
    let g = dec.g.iter().map(|g| g[0].abs().max(g[1].abs())).fold(0.0, f64::max);
    let scale = v.velocity_scale(0.0);
    let h = pressure::source_tensor(&fixtures::fast_decay(grid), None).unwrap();
    let gphi = fields::gradient(&solver.p_phi_from_source(&h).unwrap());
    let g0 = fields::gradient(&solver.p0_from_source(&h).unwrap());
    let rel = gphi.sub(&g0).unwrap().max_abs() / gphi.max_abs();
    let ok = g <= 1e-6 * scale && rel <= 1e-6;
    verdict(
        8,
        "wd-regime",
        ok,
        format!("|g| {g:.2e} <= 1e-6 x {scale:.3}, |grad p_phi - grad p0| {rel:.2e} <= 1e-6"),
    );
}

#[test]
fn c09_suitability() {
    let exec = pool();
    let solver = PressureSolver::new(CutoffSpec::default(), &exec).unwrap();
    let v = HeatVortex::default();
    let mut worst = Vec::new();
    let mut lin: f64 = 0.0;
    let mut count = 0;
    for (n, steps) in [(64usize, 20usize), (128, 40)] {
        let grid = Grid::new(2, n, 8.0).unwrap();
        let times = fixtures::uniform_times(1.0, steps);
        let u = v.velocity_series(grid, &times).unwrap();
        let p = TimeSeries::new(
            u.frames
                .iter()
                .map(|uk| solver.assemble_p_phi(uk, None).unwrap())
                .collect(),
        )
        .unwrap();
        let battery = leray::battery(&grid, &times, 7).unwrap();
        count = battery.len();
        let mut w: f64 = 0.0;
        for spec in &battery {
            let r = leray::suitability_residual(&u, &p, None, spec).unwrap();
            w = w.max(r.mu.abs() / r.tolerance);
            let phi = spec.sample(&grid, &times).unwrap();
            let twice = TimeSeries::new(phi.frames.iter().map(|f| f.scale(2.0)).collect()).unwrap();
            let a = leray::energy_pairing(&u, &p, None, &TestFunctionSamples::from_series(&phi).unwrap())
                .unwrap()
                .sum();
            let b = leray::energy_pairing(&u, &p, None, &TestFunctionSamples::from_series(&twice).unwrap())
                .unwrap()
                .sum();
            let scale = a.abs().max(f64::MIN_POSITIVE);
            lin = lin.max((b - 2.0 * a).abs() / scale);
        }
        worst.push(w);
    }
    let ok = count == 28 && worst.iter().all(|w| *w <= 1.0) && lin <= 1e-12;
    verdict(
        9,
        "suitability",
        ok,
        format!(
            "{count} functions, max |mu|/((h^2+dt^2) sum|terms|) {:.3}, {:.3} <= 1, linearity {lin:.1e} <= 1e-12",
            worst[0], worst[1]
        ),
    );
}

#[test]
fn c10_spaces() {
    let grid = Grid::new(2, 128, 8.0).unwrap();
    let (p, gamma, delta) = (verify::SPACES_P, verify::SPACES_GAMMA, verify::SPACES_DELTA);
    let bound = 2f64.powf(gamma / p) * 1.05;
    let family = fixtures::spaces_family(grid);
    let mut r1max: f64 = 0.0;
    for (_, f) in &family {
        let e = spaces::embedding_constants(f, p, gamma, delta, 0.05).unwrap();
        r1max = r1max.max(e.r1);
    }
    let f = fixtures::borderline_profile(grid, p, gamma);
    let mut c0 = Vec::new();
    let mut c1 = Vec::new();
    for a in [2.0, 4.0, 8.0, 16.0] {
        let s = spaces::interpolation_split(&f, a, p, gamma, delta).unwrap();
        c0.push(s.c0);
        c1.push(s.c1);
    }
    let (s0, s1) = (verify::spread(&c0), verify::spread(&c1));
    let table = SplitTable::new(&f, p, delta).unwrap();
    let levels: Vec<f64> = (0..=32).map(|k| 2f64.powf(k as f64 / 4.0 - 2.0)).collect();
    let k: Vec<f64> = levels
        .iter()
        .map(|a| table.k(*a, RadiusFamily::AllNodeRadii, p, delta).k)
        .collect();
    let mut concave = true;
    for i in 1..levels.len() - 1 {
        let chord = k[i - 1] + (k[i + 1] - k[i - 1]) * (levels[i] - levels[i - 1]) / (levels[i + 1] - levels[i - 1]);
        concave &= k[i] >= chord - 1e-12 * k[i].abs() && k[i] >= k[i - 1] - 1e-12 * k[i].abs();
    }
    let ok = family.len() == 10 && r1max <= bound && s0 <= 0.2 && s1 <= 0.2 && concave;
    verdict(
        10,
        "spaces",
        ok,
        format!(
            "p={p} gamma={gamma} delta={delta}: max r1 {r1max:.3} <= {bound:.3}, split spread {s0:.3}, {s1:.3} <= 0.2, K concave at {} levels: {concave}",
            levels.len()
        ),
    );
}

#[test]
fn c11_determinism() {
    let bin = env!("CARGO_BIN_EXE_wsp");
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: usize| {
        let path = dir.path().join(name);
        let status = Command::new(bin)
            .env_remove("WSP_WORKERS")
            .args(["--seed", "7", "--workers", &workers.to_string(), "verify", "--suite", "all", "--report"])
            .arg(&path)
            .status()
            .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        (status.code(), text)
    };
    let (code_a, a) = run("a.json", 1);
    let (code_b, b) = run("b.json", 1);
    let strip = |s: &str| {
        let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
        v["config"]["workers"] = serde_json::Value::Null;
        v
    };
    let mut same_values = true;
    for w in [2usize, 8] {
        let (_, c) = run(&format!("w{w}.json"), w);
        same_values &= strip(&c) == strip(&a);
    }
    let ok = code_a == Some(0) && code_b == Some(0) && a == b && same_values;
    verdict(
        11,
        "determinism",
        ok,
        format!(
            "exit {code_a:?}/{code_b:?}, repeat byte-identical: {}, workers 1/2/8 identical values: {same_values}",
            a == b
        ),
    );
}
