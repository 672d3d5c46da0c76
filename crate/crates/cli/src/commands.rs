use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use landau_radial::coefficients::compute_coefficients;
use landau_radial::diagnostics::{
    classify, concentration_modulus, default_modulus_radii, invariants_report, pointwise_bound_check,
    ugamma_report_trajectory, CONCENTRATION_RATIO,
};
use landau_radial::massflow::{barrier_monitor, supersolution_residual, DEFAULT_LAMBDA_R0};
use landau_radial::oracle::{direct_coefficients_3d, i_direct, uniform_ball_closed_form, McEstimate};
use landau_radial::{kernel_i, make_initial, run, RadialFunction, RadialGrid, Trajectory};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

/// Residuals of the power-law supersolutions above this are accepted.
const SUPERSOLUTION_FLOOR: f64 = -1e-8;

const MODULUS_NOTE: &str = "omega(r) is evaluated at resolved radii only; at finite resolution it never reaches 0, \
so `concentrating` compares omega at the smallest tabulated radius with omega(R_max) against a fixed ratio";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Verify,
    Barriers,
    Sweep,
}

/// Whether every run that had to complete did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Incomplete,
}

pub fn execute(config: &RunConfig, command: Command, out: &Path, workers: Option<usize>) -> Result<Status> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match command {
        Command::Run => run_point(config, out).map(|s| s.status(config)),
        Command::Verify => verify(config, out).map(|_| Status::Ok),
        Command::Barriers => barriers(config, out),
        Command::Sweep => sweep(config, out, workers),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn simulate(config: &RunConfig) -> Result<Trajectory> {
    let grid = config.grid()?;
    let f_in = make_initial(&config.initial, &grid)?;
    Ok(run(&f_in, &config.evolution, config.horizon, config.snapshot_every)?)
}

/// Writes `t,i,r,f,a,astar,M` for every snapshot and node.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "t,i,r,f,a,astar,M")?;
    let r = traj.grid().nodes();
    for s in &traj.snapshots {
        let c = compute_coefficients(&s.f);
        for (i, &ri) in r.iter().enumerate() {
            writeln!(
                w,
                "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t,
                i,
                ri,
                s.f.values()[i],
                c.a[i],
                c.astar[i],
                c.mass_cum[i]
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub termination: landau_radial::Termination,
    pub completed: bool,
    pub steps: usize,
    pub max_sup: f64,
    pub blowup_threshold: f64,
    pub clipped_mass: f64,
    pub diagnostics_passed: bool,
    pub classification: landau_radial::diagnostics::RunClass,
    pub modulus: landau_radial::diagnostics::ModulusTable,
    pub concentration_ratio_threshold: f64,
    pub modulus_note: &'static str,
    pub ball_radius: f64,
    pub annulus: [f64; 2],
    pub annulus_fit: Option<(f64, f64)>,
    pub rows: Vec<landau_radial::diagnostics::SnapshotRow>,
}

impl RunSummary {
    fn status(&self, config: &RunConfig) -> Status {
        if config.require_completion && !self.completed {
            Status::Incomplete
        } else {
            Status::Ok
        }
    }
}

fn summarize(config: &RunConfig, traj: &Trajectory, out: &Path) -> Result<RunSummary> {
    let report = invariants_report(traj, &config.diagnostics_options())?;
    write_json(&out.join("diagnostics.json"), &report.checks)?;
    let modulus = concentration_modulus(traj, 1.5, &default_modulus_radii(traj.initial()))?;
    Ok(RunSummary {
        termination: traj.termination,
        completed: traj.termination.is_completed(),
        steps: traj.steps,
        max_sup: traj.max_sup,
        blowup_threshold: traj.blowup_threshold,
        clipped_mass: traj.clipped_mass,
        diagnostics_passed: report.passed(),
        classification: classify(traj, &modulus),
        modulus,
        concentration_ratio_threshold: CONCENTRATION_RATIO,
        modulus_note: MODULUS_NOTE,
        ball_radius: report.ball_radius,
        annulus: report.annulus,
        annulus_fit: report.annulus_fit,
        rows: report.rows,
    })
}

/// `run`: trajectory CSV, diagnostics JSON and a run summary.
pub fn run_point(config: &RunConfig, out: &Path) -> Result<RunSummary> {
    let traj = simulate(config)?;
    write_trajectory_csv(&out.join("trajectory.csv"), &traj)?;
    let summary = summarize(config, &traj, out)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn estimate_json(quadrature: f64, mc: &McEstimate, extra: f64) -> Value {
    let z = mc.z_score(quadrature, extra);
    json!({
        "quadrature": quadrature,
        "quadrature_error": extra,
        "monte_carlo": mc,
        "z": z,
        "pass": z <= 3.0,
    })
}

/// Radii of `grid` nearest to ten log-spaced targets in `[R_max/100, R_max/2]`.
fn verify_indices(grid: &RadialGrid) -> Vec<usize> {
    let r = grid.nodes();
    let (lo, hi) = (grid.r_max() / 100.0, grid.r_max() / 2.0);
    let mut idx: Vec<usize> = (0..10)
        .map(|j| {
            let target = lo * (hi / lo).powf(j as f64 / 9.0);
            let k = grid.index_at_or_below(target);
            if k + 1 < r.len() && (r[k + 1] - target).abs() < (target - r[k]).abs() {
                k + 1
            } else {
                k
            }
        })
        .map(|k| k.max(1))
        .collect();
    idx.dedup();
    idx
}

/// `verify`: the configured datum's coefficients against the Monte Carlo
/// oracle, the sphere kernel against direct sampling, and the quadrature
/// against the uniform-ball closed forms.
pub fn verify(config: &RunConfig, out: &Path) -> Result<Value> {
    let grid = config.grid()?;
    let f = make_initial(&config.initial, &grid)?;
    let shape = config.initial.shape();
    let scale = if shape(0.0) > 0.0 { f.center() / shape(0.0) } else { 0.0 };
    let h = move |r: f64| scale * shape(r);
    let fine_grid = RadialGrid::new(2 * config.grid.n, config.grid.r_max, config.grid.stretch.sqrt())?.into_shared();
    let fine = RadialFunction::from_fn(fine_grid.clone(), &h)?;
    let (cc, cf) = (compute_coefficients(&f), compute_coefficients(&fine));
    let samples = config.verify.samples;

    let coefficient_rows: Vec<Value> = verify_indices(&grid)
        .into_par_iter()
        .enumerate()
        .map(|(j, i)| {
            let r = grid.nodes()[i];
            let k = fine_grid.index_at_or_below(r + 1e-12 * r.max(1.0));
            let seed = config.seed.wrapping_add(j as u64);
            let (a, s) = direct_coefficients_3d(&h, config.grid.r_max, r, samples, seed)?;
            Ok(json!({
                "r": r,
                "a": estimate_json(cc.a[i], &a, (cc.a[i] - cf.a[k]).abs()),
                "astar": estimate_json(cc.astar[i], &s, (cc.astar[i] - cf.astar[k]).abs()),
            }))
        })
        .collect::<Result<_>>()?;

    let pairs = [(0.5, 1.0), (1.0, 0.5), (1.0, 2.0), (2.0, 1.0), (0.8, 1.2), (1.2, 0.8), (0.3, 3.0), (3.0, 0.3), (1.5, 1.9), (1.9, 1.5)];
    let kernel_rows: Vec<Value> = pairs
        .par_iter()
        .enumerate()
        .map(|(j, &(r, t))| {
            let mc = i_direct(r, t, samples, config.seed.wrapping_add(100 + j as u64))?;
            let exact = kernel_i(r, t)?;
            let z = mc.z_score(exact, 0.0);
            Ok(json!({"r": r, "t": t, "closed_form": exact, "monte_carlo": mc, "z": z, "pass": z <= 3.0}))
        })
        .collect::<Result<_>>()?;

    let ball = |n: usize| -> Result<f64> {
        let g = RadialGrid::uniform(n, 4.0)?.into_shared();
        let b = RadialFunction::from_fn(g.clone(), |r| {
            let rho = 3.0 / (4.0 * std::f64::consts::PI);
            if r < 1.0 {
                rho
            } else if r == 1.0 {
                0.5 * rho
            } else {
                0.0
            }
        })?;
        let c = compute_coefficients(&b);
        Ok(g.nodes().iter().enumerate().fold(0.0_f64, |e, (i, &r)| {
            let (a, s) = uniform_ball_closed_form(r);
            e.max(((c.a[i] - a) / a).abs()).max(((c.astar[i] - s) / s).abs())
        }))
    };
    let (e400, e800) = (ball(400)?, ball(800)?);
    let closed_form = json!({
        "max_relative_error_n400": e400,
        "max_relative_error_n800": e800,
        "ratio": e400 / e800,
        "pass": e400 <= 1e-3 && (3.0..=5.0).contains(&(e400 / e800)),
    });

    let passes = |rows: &[Value], keys: &[&str]| {
        rows.iter().all(|row| keys.iter().all(|k| row[k]["pass"].as_bool() == Some(true)))
    };
    let all_pass = passes(&coefficient_rows, &["a", "astar"])
        && kernel_rows.iter().all(|row| row["pass"].as_bool() == Some(true))
        && closed_form["pass"].as_bool() == Some(true);
    let report = json!({
        "seed": config.seed,
        "samples": samples,
        "coefficients": coefficient_rows,
        "kernel": kernel_rows,
        "closed_form": closed_form,
        "all_pass": all_pass,
    });
    write_json(&out.join("verify.json"), &report)?;
    Ok(report)
}

/// `barriers`: power-law supersolution residuals, the `U_γ` scan and the
/// mass barrier certificate along the configured run.
pub fn barriers(config: &RunConfig, out: &Path) -> Result<Status> {
    let traj = simulate(config)?;
    let supersolutions: Vec<Value> = (0..=8)
        .map(|k| {
            let m = 0.25 * k as f64;
            let min = traj
                .snapshots
                .iter()
                .map(|s| supersolution_residual(m, &s.f))
                .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))?;
            Ok(json!({"m": m, "min_residual": min, "pass": min >= SUPERSOLUTION_FLOOR}))
        })
        .collect::<Result<_>>()?;
    let big_r0 = config.grid.r_max.min(1.0);
    let ugamma: Vec<Value> = (1..=9)
        .map(|k| {
            let gamma = 0.1 * k as f64;
            let scan = match ugamma_report_trajectory(&traj, gamma, big_r0) {
                Ok(rep) => json!({"report": rep, "error": null}),
                Err(e) => json!({"report": null, "error": e.to_string()}),
            };
            let pointwise = match pointwise_bound_check(&traj, gamma, big_r0) {
                Ok(rep) => json!(rep),
                Err(e) => json!({"error": e.to_string()}),
            };
            json!({"gamma": gamma, "ugamma": scan, "pointwise": pointwise})
        })
        .collect();
    let certificate = match barrier_monitor(&traj, DEFAULT_LAMBDA_R0) {
        Ok(c) => json!({"all_pass": c.all_pass(), "min_margin": c.min_margin(), "certificate": c, "error": null}),
        Err(e) => json!({"all_pass": false, "certificate": null, "error": e.to_string()}),
    };
    let report = json!({
        "termination": traj.termination,
        "supersolutions": supersolutions,
        "ugamma": ugamma,
        "barrier": certificate,
    });
    write_json(&out.join("barriers.json"), &report)?;
    Ok(if config.require_completion && !traj.termination.is_completed() {
        Status::Incomplete
    } else {
        Status::Ok
    })
}

/// `sweep`: one `point_XXXX` directory per parameter combination, run
/// concurrently, plus an index in `sweep.json`.
pub fn sweep(config: &RunConfig, out: &Path, workers: Option<usize>) -> Result<Status> {
    let points = config.sweep_points()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        builder = builder.num_threads(k);
    }
    let pool = builder.build()?;
    let results: Vec<(Value, RunSummary)> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(k, (params, point))| {
                let dir = out.join(format!("point_{k:04}"));
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                write_json(&dir.join("config.json"), point)?;
                let summary = run_point(point, &dir).with_context(|| format!("sweep point {k}"))?;
                Ok((params.clone(), summary))
            })
            .collect::<Result<_>>()
    })?;
    let index: Vec<Value> = results
        .iter()
        .enumerate()
        .map(|(k, (params, s))| {
            json!({
                "point": format!("point_{k:04}"),
                "params": params,
                "termination": s.termination,
                "classification": s.classification,
                "concentrating": s.modulus.concentrating,
                "diagnostics_passed": s.diagnostics_passed,
                "max_sup": s.max_sup,
            })
        })
        .collect();
    write_json(&out.join("sweep.json"), &index)?;
    let incomplete = config.require_completion && results.iter().any(|(_, s)| !s.completed);
    Ok(if incomplete { Status::Incomplete } else { Status::Ok })
}
