//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout; the
//! process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use landau_radial::coefficients::compute_coefficients;
use landau_radial::diagnostics::{blowup_coherent, classify, concentration_modulus, default_modulus_radii, maxwellian_residual, RunClass};
use landau_radial::grid::{maxwellian_density, monotonicity_defect};
use landau_radial::massflow::{barrier_monitor, fit_barrier, run_mass, supersolution_residual, MassProfile, DEFAULT_LAMBDA_R0};
use landau_radial::oracle::{direct_coefficients_3d, i_direct, uniform_ball_closed_form};
use landau_radial::{kernel_i, make_initial, picard, run, EvolutionSpec, InitialDataSpec, Model, RadialFunction, RadialGrid, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 100_000;
const T_LONG: f64 = 10.0;
const KS_R_MAX: f64 = 24.0;
/// Fine enough that the time interpolation of coefficients in the mass
/// equation stays below the spatial error.
const SNAPSHOT_EVERY: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn uniform(n: usize, r_max: f64) -> Arc<RadialGrid> {
    RadialGrid::uniform(n, r_max).unwrap().into_shared()
}

/// Uniform nodes with `extra` inserted exactly, dropping uniform nodes that
/// would sit closer than a quarter cell to an inserted one.
fn grid_through(n: usize, r_max: f64, extra: &[f64]) -> Arc<RadialGrid> {
    let h = r_max / n as f64;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|i| i as f64 * r_max / n as f64)
        .filter(|x| extra.iter().all(|e| (x - e).abs() > 0.25 * h || x == e))
        .collect();
    nodes.extend_from_slice(extra);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    RadialGrid::from_nodes(nodes).unwrap().into_shared()
}

fn node_of(grid: &RadialGrid, r: f64) -> usize {
    let i = grid.index_at_or_below(r + 1e-9);
    assert!((grid.nodes()[i] - r).abs() < 1e-9, "radius {r} is not a grid node");
    i
}

fn ball(r: f64) -> f64 {
    let h = 3.0 / (4.0 * PI);
    if r < 1.0 {
        h
    } else if r == 1.0 {
        0.5 * h
    } else {
        0.0
    }
}

fn power_tail(r: f64) -> f64 {
    (1.0 + r * r).powf(-3.5)
}

fn maxwellian(r: f64) -> f64 {
    maxwellian_density(r, 1.0, 1.0)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let radii: Vec<f64> = (0..10).map(|j| 0.1 * 40f64.powf(j as f64 / 9.0)).collect();
    // (name, density, support, coarse N, fine N)
    type Family = (&'static str, fn(f64) -> f64, f64, usize, usize);
    let families: [Family; 3] = [
        ("uniform ball", ball, 4.0, 800, 1600),
        ("maxwellian", maxwellian, 10.0, 800, 1600),
        ("power tail", power_tail, 60.0, 2400, 4800),
    ];
    let mut worst = 0.0_f64;
    let mut where_worst = String::new();
    for (k, (name, h, support, coarse, fine)) in families.iter().enumerate() {
        let field = |n: usize| {
            let g = grid_through(n, *support, &radii);
            let f = RadialFunction::from_fn(g.clone(), h).unwrap();
            (g, compute_coefficients(&f))
        };
        let (gc, cc) = field(*coarse);
        let (gf, cf) = field(*fine);
        for (j, &r) in radii.iter().enumerate() {
            let (ic, i) = (node_of(&gc, r), node_of(&gf, r));
            let seed = 1000 * k as u64 + j as u64;
            let (a_mc, s_mc) = direct_coefficients_3d(h, *support, r, SAMPLES, seed).unwrap();
            let za = a_mc.z_score(cf.a[i], (cf.a[i] - cc.a[ic]).abs());
            let zs = s_mc.z_score(cf.astar[i], (cf.astar[i] - cc.astar[ic]).abs());
            for (z, what) in [(za, "a"), (zs, "A*")] {
                if z > worst {
                    worst = z;
                    where_worst = format!("{what} of {name} at r = {r:.3}");
                }
            }
        }
    }
    let pairs = [(1.0, 2.0), (2.0, 1.0), (0.5, 1.5), (1.5, 0.5), (1.0, 1.5), (1.5, 1.0), (0.3, 3.0), (3.0, 0.3), (2.0, 2.5), (2.5, 2.0)];
    let mut worst_i = 0.0_f64;
    for (j, &(r, t)) in pairs.iter().enumerate() {
        let mc = i_direct(r, t, SAMPLES, 5000 + j as u64).unwrap();
        worst_i = worst_i.max(mc.z_score(kernel_i(r, t).unwrap(), 0.0));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 3.0 && worst_i <= 3.0 && secs <= 120.0,
        format!(
            "oracle equivalence: max |z| {worst:.2} over 60 coefficient points ({where_worst}), max |z| {worst_i:.2} over 10 kernel pairs, {secs:.1} s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let err = |n: usize| {
        let g = uniform(n, 4.0);
        let f = RadialFunction::from_fn(g.clone(), ball).unwrap();
        let c = compute_coefficients(&f);
        let mut e = 0.0_f64;
        for (i, &r) in g.nodes().iter().enumerate() {
            let (a, s) = uniform_ball_closed_form(r);
            e = e.max(((c.a[i] - a) / a).abs()).max(((c.astar[i] - s) / s).abs());
        }
        e
    };
    let (e400, e800) = (err(400), err(800));
    let ratio = e400 / e800;
    outcome(
        e400 <= 1e-3 && (3.0..=5.0).contains(&ratio),
        format!("closed-form ball: max relative error {e400:.3e} at N=400, {e800:.3e} at N=800, ratio {ratio:.2}"),
    )
}

fn random_monotone(rng: &mut ChaCha8Rng, grid: &Arc<RadialGrid>) -> RadialFunction {
    let n = grid.len();
    let mut v = vec![0.0; n];
    let mut level = rng.random_range(0.1..10.0);
    for x in v.iter_mut() {
        *x = level;
        if rng.random_bool(0.3) {
            level *= rng.random_range(0.0..1.0);
        }
    }
    RadialFunction::new(grid.clone(), v).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut centre_err = 0.0_f64;
    let mut violations = 0usize;
    for k in 0..100 {
        let g = RadialGrid::new(64 + k, 4.0 + k as f64 / 10.0, 1.0 + k as f64 / 2000.0).unwrap().into_shared();
        let f = random_monotone(&mut rng, &g);
        let c = compute_coefficients(&f);
        centre_err = centre_err.max((c.astar[0] - c.a[0] / 3.0).abs() / c.a[0]);
        for (i, &r) in g.nodes().iter().enumerate().skip(1) {
            let slack = 1e-12 * c.a[i];
            if c.astar[i] > c.a[i] / 3.0 + slack || c.a[i] < c.mass_cum[i] / (4.0 * PI * r) - slack {
                violations += 1;
            }
        }
    }
    outcome(
        centre_err <= 1e-10 && violations == 0,
        format!("structural identities: |A*(0) - a(0)/3| / a(0) = {centre_err:.1e}, {violations} node violations over 100 random profiles"),
    )
}

fn drift(traj: &Trajectory, of: impl Fn(&landau_radial::Snapshot) -> f64) -> f64 {
    let first = of(&traj.snapshots[0]);
    traj.snapshots.iter().map(|s| ((of(s) - first) / first).abs()).fold(0.0, f64::max)
}

fn long_run(model: Model, mass: f64, n: usize, r_max: f64, spec: &InitialDataSpec) -> Trajectory {
    let g = uniform(n, r_max);
    let f = make_initial(&InitialDataSpec { mass, ..spec.clone() }, &g).unwrap();
    let dt = 4.0 / n as f64;
    run(&f, &EvolutionSpec::new(model, dt), T_LONG, SNAPSHOT_EVERY).unwrap()
}

fn criterion_4(runs: &mut Vec<(String, Trajectory)>) -> Outcome {
    let mut mass_drift = 0.0_f64;
    let mut energy = Vec::new();
    let mut ok = true;
    let maxwell = InitialDataSpec::maxwellian(1.0, 1.0);
    for model in [Model::Landau, Model::KsDivergence] {
        for mass in [1.0, 10.0] {
            let mut e = [0.0; 2];
            for (j, n) in [400, 800].into_iter().enumerate() {
                let traj = long_run(model, mass, n, 8.0, &maxwell);
                ok &= traj.termination.is_completed();
                mass_drift = mass_drift.max(drift(&traj, |s| s.mass));
                e[j] = drift(&traj, |s| s.energy);
                runs.push((format!("{model:?} maxwellian mass {mass} N={n}"), traj));
            }
            if model.is_landau() {
                energy.push((mass, e[0], e[1]));
            }
        }
    }
    let energy_ok = energy.iter().all(|&(_, e400, e800)| e400 <= 1e-3 && e800 <= 0.5 * e400);
    let summary: Vec<String> = energy
        .iter()
        .map(|(m, a, b)| format!("mass {m}: {a:.2e} -> {b:.2e}"))
        .collect();
    outcome(
        ok && mass_drift <= 1e-6 && energy_ok,
        format!("conservation: mass drift {mass_drift:.1e}, Landau energy drift N=400 -> 800 ({})", summary.join(", ")),
    )
}

fn criterion_5() -> Outcome {
    let res: Vec<f64> = [100, 200, 400, 800]
        .iter()
        .map(|&n| maxwellian_residual(&uniform(n, 8.0), Model::Landau).unwrap())
        .collect();
    let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    outcome(
        ratios.iter().all(|r| (3.0..=5.0).contains(r)) && res[3] <= 1e-3,
        format!(
            "stationarity: residual {} at N=100..800, ratios {}",
            res.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" "),
            ratios.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn criterion_6(runs: &mut Vec<(String, Trajectory)>) -> Outcome {
    let g = uniform(400, 8.0);
    let mut worst = 0.0_f64;
    let mut secs = 0.0_f64;
    let mut ok = true;
    for model in [Model::Landau, Model::KsDivergence] {
        for f0 in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let mass = f0 * (2.0 * PI).powf(1.5);
            let f = make_initial(&InitialDataSpec::maxwellian(mass, 1.0), &g).unwrap();
            let horizon = 0.8 / f0;
            let start = Instant::now();
            let traj = run(&f, &EvolutionSpec::new(model, horizon / 400.0), horizon, horizon / 40.0).unwrap();
            secs = secs.max(start.elapsed().as_secs_f64());
            ok &= traj.termination.is_completed();
            let f_in0 = f.center();
            for s in &traj.snapshots {
                worst = worst.max(s.center * (1.0 - f_in0 * s.t) / f_in0);
            }
            runs.push((format!("{model:?} majorant f0={f0}"), traj));
        }
    }
    outcome(
        ok && worst <= 1.05,
        format!("majorant: max f(0,t)(1 - f_in(0) t) / f_in(0) = {worst:.4} over 10 runs, slowest run {secs:.2} s"),
    )
}

fn criterion_7() -> Outcome {
    let g = uniform(400, 8.0);
    let f = make_initial(&InitialDataSpec::maxwellian(1.0, 1.0), &g).unwrap();
    let horizon = 0.1 / f.center();
    let spec = EvolutionSpec::new(Model::Landau, horizon / 20.0);
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for delta in [0.1, 0.01] {
        let res = picard(&f, delta, horizon, 6, 20, &spec).unwrap();
        let ratios = res.ratios();
        worst = ratios.iter().copied().fold(worst, f64::max);
        parts.push(format!(
            "delta {delta}: {}",
            ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
        ));
    }
    outcome(worst <= 0.9, format!("Picard contraction: ratios d_k/d_(k-1), k = 2..6, {}", parts.join("; ")))
}

fn criterion_8(runs: &mut Vec<(String, Trajectory)>, ks: &mut Vec<Trajectory>) -> Outcome {
    let data = [
        ("maxwellian", InitialDataSpec::maxwellian(10.0, 1.0)),
        ("power tail q=7", InitialDataSpec::power_tail(10.0, 7.0, 1.0)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, spec) in &data {
        let traj = long_run(Model::KsDivergence, 10.0, 400, KS_R_MAX, spec);
        let f0 = traj.initial().center();
        let sup_ratio = traj.max_sup / f0;
        let cert = barrier_monitor(&traj, DEFAULT_LAMBDA_R0).unwrap();
        let (_, alpha) = fit_barrier(traj.initial()).unwrap();
        let super_min = traj
            .snapshots
            .iter()
            .map(|s| supersolution_residual(1.0 + alpha, &s.f).unwrap())
            .fold(f64::INFINITY, f64::min);
        let run_ok = traj.termination.is_completed() && sup_ratio <= 2.0 && cert.all_pass() && cert.min_margin() >= 0.0 && super_min >= -1e-8;
        ok &= run_ok;
        parts.push(format!(
            "{name}: {}, sup/f0 {sup_ratio:.3}, barrier C {:.3} alpha {:.2} min margin {:.3e}, supersolution min {super_min:.3e}",
            traj.termination.name(),
            cert.c,
            cert.alpha,
            cert.min_margin()
        ));
        ks.push(traj.clone());
        runs.push((format!("KS {name} N=400"), traj));
    }
    outcome(ok, format!("global existence (KS): {}", parts.join("; ")))
}

fn criterion_9(runs: &mut Vec<(String, Trajectory)>, ks: &[Trajectory]) -> Outcome {
    let consistency = |traj: &Trajectory, model: Model| {
        let m = MassProfile::from_function(traj.initial());
        run_mass(&m, traj, model).unwrap().consistency_error
    };
    let mut ok = true;
    let mut parts = Vec::new();
    let cases: [(&str, Model, f64, InitialDataSpec); 2] = [
        ("stationary maxwellian (Landau)", Model::Landau, 8.0, InitialDataSpec::maxwellian(1.0, 1.0)),
        ("KS large data", Model::KsDivergence, KS_R_MAX, InitialDataSpec::maxwellian(10.0, 1.0)),
    ];
    for (k, (name, model, r_max, spec)) in cases.iter().enumerate() {
        let coarse = if k == 1 { ks[0].clone() } else { long_run(*model, spec.mass, 400, *r_max, spec) };
        let fine = long_run(*model, spec.mass, 800, *r_max, spec);
        let (e400, e800) = (consistency(&coarse, *model), consistency(&fine, *model));
        ok &= e400 <= 1e-3 && e800 < e400;
        parts.push(format!("{name}: {e400:.2e} at N=400, {e800:.2e} at N=800"));
        if k == 0 {
            runs.push((format!("{name} N=400"), coarse));
        }
        runs.push((format!("{name} N=800"), fine));
    }
    outcome(ok, format!("mass-PDE consistency: {}", parts.join("; ")))
}

fn criterion_10(runs: &[(String, Trajectory)]) -> Outcome {
    let mut worst = 0.0_f64;
    let mut snapshots = 0usize;
    for (_, traj) in runs {
        for s in &traj.snapshots {
            snapshots += 1;
            if s.sup > 0.0 {
                worst = worst.max(monotonicity_defect(s.f.values()) / s.sup);
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("monotonicity: max defect / sup {worst:.1e} over {snapshots} snapshots of {} runs", runs.len()),
    )
}

fn criterion_11(runs: &[(String, Trajectory)]) -> Outcome {
    let mut incoherent = Vec::new();
    let (mut bounded, mut blowup, mut max_ratio) = (0usize, 0usize, 0.0_f64);
    for (name, traj) in runs {
        let table = concentration_modulus(traj, 1.5, &default_modulus_radii(traj.initial())).unwrap();
        match classify(traj, &table) {
            RunClass::Bounded => {
                bounded += 1;
                max_ratio = max_ratio.max(table.ratio);
            }
            RunClass::BlowUp => blowup += 1,
            RunClass::Unconfirmed => {}
        }
        if !blowup_coherent(traj, &table) {
            incoherent.push(name.clone());
        }
    }
    outcome(
        incoherent.is_empty(),
        format!(
            "blow-up coherence: {bounded} bounded runs (max modulus ratio {max_ratio:.3}), {blowup} blow-up runs, incoherent: [{}]",
            incoherent.join(", ")
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut runs: Vec<(String, Trajectory)> = Vec::new();
    let mut ks: Vec<Trajectory> = Vec::new();
    let mut failed = 0;
    let mut report = |k: usize, o: Outcome| {
        if !o.pass {
            failed += 1;
        }
        println!("criterion {k:>2} {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4(&mut runs));
    report(5, criterion_5());
    report(6, criterion_6(&mut runs));
    report(7, criterion_7());
    report(8, criterion_8(&mut runs, &mut ks));
    report(9, criterion_9(&mut runs, &ks));
    report(10, criterion_10(&runs));
    report(11, criterion_11(&runs));
    println!("acceptance: {} of 11 criteria passed in {:.1} s", 11 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
