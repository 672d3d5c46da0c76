//! Blow-up criteria and proved inequalities evaluated on trajectories.
//!
//! Every scalar check follows one convention: it passes iff
//! `value <= tolerance`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficients::compute_coefficients;
use crate::dynamics::{rhs, EvolutionSpec, Model, Termination, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::grid::{
    ball_mass, lp_norms_by_node, maxwellian_density, monotonicity_defect, tail_fraction, weak_lp_bound,
    RadialFunction, RadialGrid,
};
use crate::massflow::DEFAULT_LAMBDA_R0;

/// `ω(r_min)/ω(R_max)` above this value flags a run as concentrating.
pub const CONCENTRATION_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusTable {
    pub p: f64,
    pub radii: Vec<f64>,
    /// `ω(r) = sup_t ‖f(t)‖_{L^p(B_r)}`.
    pub omega: Vec<f64>,
    /// `ω(radii[0]) / ω(radii[last])` (zero for `f ≡ 0`).
    pub ratio: f64,
    pub concentrating: bool,
}

/// Share of the initial `L^{3/2}` norm that defines the smallest radius of
/// the modulus table.
pub const BASELINE_FRACTION: f64 = 0.01;

/// Sixteen log-spaced radii from `r_min` to `R_max`, where `r_min` is the
/// largest node with `‖f_in‖_{L^{3/2}(B_r)} <= 1% · ‖f_in‖_{L^{3/2}}`.
pub fn default_modulus_radii(f_in: &RadialFunction) -> Vec<f64> {
    let grid = f_in.grid();
    let norms = lp_norms_by_node(f_in, 1.5);
    let total = norms[norms.len() - 1];
    let k_min = (1..grid.len() - 1)
        .take_while(|_| total > 0.0)
        .take_while(|&i| norms[i] <= BASELINE_FRACTION * total)
        .last()
        .unwrap_or(1);
    let lo = grid.nodes()[k_min];
    let hi = grid.r_max();
    let k = 16;
    (0..k)
        .map(|j| {
            if j == k - 1 {
                hi
            } else {
                lo * (hi / lo).powf(j as f64 / (k - 1) as f64)
            }
        })
        .collect()
}

pub fn concentration_modulus(f_traj: &Trajectory, p: f64, radii: &[f64]) -> Result<ModulusTable> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("exponent must be >= 1, got {p}")));
    }
    let grid = f_traj.grid();
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0) || r > grid.r_max()) {
        return Err(invalid("radii", "radii must be nonempty and lie in (0, R_max]"));
    }
    let idx: Vec<usize> = radii.iter().map(|&r| grid.index_at_or_below(r)).collect();
    let mut omega = vec![0.0_f64; radii.len()];
    for s in &f_traj.snapshots {
        let norms = lp_norms_by_node(&s.f, p);
        for (o, &i) in omega.iter_mut().zip(&idx) {
            *o = o.max(norms[i]);
        }
    }
    let outer = omega[omega.len() - 1];
    let ratio = if outer > 0.0 { omega[0] / outer } else { 0.0 };
    Ok(ModulusTable {
        p,
        radii: radii.to_vec(),
        omega,
        ratio,
        concentrating: ratio > CONCENTRATION_RATIO,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunClass {
    Bounded,
    /// Threshold exceeded and the `L^{3/2}` mass concentrates.
    BlowUp,
    /// Threshold exceeded without concentration.
    Unconfirmed,
}

pub fn classify(f_traj: &Trajectory, modulus: &ModulusTable) -> RunClass {
    match (f_traj.termination, modulus.concentrating) {
        (Termination::BlowupDetected { .. }, true) => RunClass::BlowUp,
        (Termination::BlowupDetected { .. }, false) => RunClass::Unconfirmed,
        _ => RunClass::Bounded,
    }
}

/// Blow-up implies concentration, and a completed run never concentrates.
pub fn blowup_coherent(f_traj: &Trajectory, modulus: &ModulusTable) -> bool {
    match f_traj.termination {
        Termination::BlowupDetected { .. } => modulus.concentrating,
        Termination::Completed { .. } => !modulus.concentrating,
        Termination::DtUnderflow { .. } => true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UGammaReport {
    pub gamma: f64,
    pub delta_floor: f64,
    pub r0: f64,
    /// Largest value of `U_γ(-(1/3)γ(1-γ) a r^{-2} + g)` on `(0, r₀]`.
    pub residual_max: f64,
}

fn smallness_rhs(gamma: f64, delta_floor: f64) -> f64 {
    gamma * (1.0 - gamma) * delta_floor / 3.0
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(invalid("gamma", format!("must lie in (0, 1), got {gamma}")))
    }
}

fn largest_r0(grid: &RadialGrid, omega: &[f64], gamma: f64, delta_floor: f64, r_cap: f64) -> Result<usize> {
    let bound = smallness_rhs(gamma, delta_floor);
    let scale = (3.0 / (4.0 * PI)).powf(2.0 / 3.0);
    let r = grid.nodes();
    let mut best = None;
    for i in 1..grid.len() {
        if r[i] > r_cap {
            break;
        }
        if scale * omega[i] <= bound {
            best = Some(i);
        }
    }
    best.ok_or(Error::NoValidR0 { r_min: r[1] })
}

/// Smallness radius and barrier residual for the profile `g`.
pub fn ugamma_report(g: &RadialFunction, gamma: f64, delta_floor: f64, big_r0: f64) -> Result<UGammaReport> {
    check_gamma(gamma)?;
    if !(delta_floor >= 0.0) {
        return Err(invalid("delta_floor", format!("must be >= 0, got {delta_floor}")));
    }
    if !(big_r0 > 0.0) || big_r0 > g.grid().r_max() {
        return Err(invalid("R0", format!("must lie in (0, R_max], got {big_r0}")));
    }
    let grid = g.grid();
    let r = grid.nodes();
    let c = compute_coefficients(g);
    for i in 1..grid.len() {
        if r[i] > big_r0 {
            break;
        }
        if c.a[i] < delta_floor {
            return Err(Error::LowerBoundFails { r: r[i], a: c.a[i], floor: delta_floor });
        }
    }
    let omega = lp_norms_by_node(g, 1.5);
    let k = largest_r0(grid, &omega, gamma, delta_floor, big_r0)?;
    let weight = smallness_rhs(gamma, 1.0);
    let residual_max = (1..=k)
        .map(|i| r[i].powf(-gamma) * (-weight * c.a[i] / (r[i] * r[i]) + g.values()[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(UGammaReport { gamma, delta_floor, r0: r[k], residual_max })
}

/// `min a` over `(0, R0]` and all snapshots.
pub fn diffusivity_floor(f_traj: &Trajectory, big_r0: f64) -> f64 {
    let r = f_traj.grid().nodes();
    f_traj
        .snapshots
        .iter()
        .map(|s| {
            let c = compute_coefficients(&s.f);
            (1..r.len()).filter(|&i| r[i] <= big_r0).map(|i| c.a[i]).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Trajectory version: `ω` is the sup over snapshots and the floor is
/// [`diffusivity_floor`].
pub fn ugamma_report_trajectory(f_traj: &Trajectory, gamma: f64, big_r0: f64) -> Result<UGammaReport> {
    check_gamma(gamma)?;
    let grid = f_traj.grid();
    if !(big_r0 > 0.0) || big_r0 > grid.r_max() {
        return Err(invalid("R0", format!("must lie in (0, R_max], got {big_r0}")));
    }
    let r = grid.nodes();
    let delta_floor = diffusivity_floor(f_traj, big_r0);
    let mut omega = vec![0.0_f64; grid.len()];
    for s in &f_traj.snapshots {
        for (o, v) in omega.iter_mut().zip(lp_norms_by_node(&s.f, 1.5)) {
            *o = o.max(v);
        }
    }
    let k = largest_r0(grid, &omega, gamma, delta_floor, big_r0)?;
    let weight = smallness_rhs(gamma, 1.0);
    let mut residual_max = f64::NEG_INFINITY;
    for s in &f_traj.snapshots {
        let c = compute_coefficients(&s.f);
        for i in 1..=k {
            let v = r[i].powf(-gamma) * (-weight * c.a[i] / (r[i] * r[i]) + s.f.values()[i]);
            residual_max = residual_max.max(v);
        }
    }
    Ok(UGammaReport { gamma, delta_floor, r0: r[k], residual_max })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub pass: bool,
    /// `min (bound - f)/bound` over `(0, r₀]` and all snapshots.
    pub margin: f64,
    pub worst_t: f64,
    pub worst_r: f64,
    /// `f(r) <= (3/4π) r^{-3} ‖f‖_1` everywhere.
    pub rearrangement_pass: bool,
    pub rearrangement_margin: f64,
}

/// Checks `f <= max{(3/4π) r₀^{γ-3} ‖f‖_1, (3/4π)^{γ/3} ‖f_in‖_{L^{3/γ}_w}} r^{-γ}`
/// on `(0, r₀]`.
pub fn pointwise_bound_check(f_traj: &Trajectory, gamma: f64, r0: f64) -> Result<PointwiseReport> {
    check_gamma(gamma)?;
    let grid = f_traj.grid();
    if !(r0 > 0.0) {
        return Err(invalid("r0", format!("must be positive, got {r0}")));
    }
    let r = grid.nodes();
    let weak = weak_lp_bound(f_traj.initial(), 3.0 / gamma)?;
    let k34 = 3.0 / (4.0 * PI);
    let mut margin = f64::INFINITY;
    let (mut worst_t, mut worst_r) = (0.0, 0.0);
    let mut rearrangement_margin = f64::INFINITY;
    for s in &f_traj.snapshots {
        let l1 = s.mass;
        let prefactor = (k34 * r0.powf(gamma - 3.0) * l1).max(k34.powf(gamma / 3.0) * weak);
        for i in 1..grid.len() {
            let f = s.f.values()[i];
            if r[i] <= r0 {
                let bound = prefactor * r[i].powf(-gamma);
                let m = if bound > 0.0 { (bound - f) / bound } else if f > 0.0 { -1.0 } else { 0.0 };
                if m < margin {
                    margin = m;
                    worst_t = s.t;
                    worst_r = r[i];
                }
            }
            let env = k34 * l1 / r[i].powi(3);
            let m = if env > 0.0 { (env - f) / env } else if f > 0.0 { -1.0 } else { 0.0 };
            rearrangement_margin = rearrangement_margin.min(m);
        }
    }
    Ok(PointwiseReport {
        pass: margin >= 0.0,
        margin,
        worst_t,
        worst_r,
        rearrangement_pass: rearrangement_margin >= -1e-12,
        rearrangement_margin,
    })
}

/// `‖rhs(𝓜, 𝓜)‖_∞ / ‖𝓜‖_∞` for the unit Maxwellian.
pub fn maxwellian_residual(grid: &std::sync::Arc<RadialGrid>, model: Model) -> Result<f64> {
    let m = RadialFunction::from_fn(grid.clone(), |r| maxwellian_density(r, 1.0, 1.0))?;
    let spec = EvolutionSpec::new(model, 1.0);
    let out = rhs(&m, &m, &spec)?;
    Ok(out.iter().fold(0.0_f64, |a, &x| a.max(x.abs())) / m.sup_norm())
}

/// One named inequality with its tolerance and measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check_name: String,
    pub paper_ref: String,
    pub tolerance: f64,
    pub value: f64,
    pub pass: bool,
    /// Informational checks are reported but do not fail the run.
    #[serde(skip)]
    pub required: bool,
}

/// Per-check switch and tolerance override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSetting {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn yes() -> bool {
    true
}

/// Names of the checks emitted by [`invariants_report`].
pub const CHECK_NAMES: [&str; 10] = [
    "mass_drift",
    "energy_drift",
    "majorant",
    "second_moment_bound",
    "ball_mass_lower_bound",
    "annulus_lower_envelope",
    "tail_mass",
    "clipped_mass",
    "monotonicity",
    "rearrangement_envelope",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsOptions {
    pub settings: BTreeMap<String, CheckSetting>,
    /// Fraction of the run used to fit the annulus envelope.
    pub annulus_fit_fraction: f64,
    pub lambda_r0: f64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            settings: BTreeMap::new(),
            annulus_fit_fraction: 0.1,
            lambda_r0: DEFAULT_LAMBDA_R0,
        }
    }
}

impl DiagnosticsOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in &self.settings {
            if !CHECK_NAMES.contains(&name.as_str()) {
                return Err(invalid("diagnostics", format!("unknown check `{name}`")));
            }
            if let Some(t) = s.tolerance {
                if !t.is_finite() {
                    return Err(invalid("diagnostics", format!("tolerance of `{name}` must be finite")));
                }
            }
        }
        Ok(())
    }

    fn setting(&self, name: &str) -> CheckSetting {
        self.settings.get(name).copied().unwrap_or(CheckSetting { enabled: true, tolerance: None })
    }
}

fn default_tolerance(name: &str) -> f64 {
    match name {
        "mass_drift" => 1e-6,
        "energy_drift" => 1e-3,
        "majorant" => 0.05,
        "second_moment_bound" => 1.0,
        "ball_mass_lower_bound" => 0.0,
        "annulus_lower_envelope" => 0.05,
        "tail_mass" => 1e-6,
        "clipped_mass" => 1e-8,
        "monotonicity" => 1e-10,
        "rearrangement_envelope" => 1.0 + 1e-12,
        _ => 0.0,
    }
}

fn reference(name: &str) -> &'static str {
    match name {
        "mass_drift" => "mass is preserved: |M(t) - M_in| / M_in",
        "energy_drift" => "Landau preserves the second moment: |E(t) - E_in| / E_in",
        "majorant" => "f(0,t) <= f_in(0) / (1 - f_in(0) t): max f(0,t)(1 - f_in(0) t)/f_in(0) - 1 for t <= 0.8/f_in(0)",
        "second_moment_bound" => "E(t) <= exp(4t(C(t) + M_in)) (E_in + 4), C(t) = running sup of |f|_inf: max ratio",
        "ball_mass_lower_bound" => "mass of B_R stays >= M_in/2 with R^2 = 2 E_in / M_in: max relative shortfall",
        "annulus_lower_envelope" => "annulus mass on B_4R minus B_R/4 stays above C0 exp(-beta t) fitted on the early run: max relative shortfall",
        "tail_mass" => "initial mass fraction beyond R_max/2",
        "clipped_mass" => "mass removed by clipping negative values, relative to M_in",
        "monotonicity" => "radial monotonicity is preserved: max defect / |f|_inf",
        "rearrangement_envelope" => "f(r) <= (3/4pi) r^-3 |f|_1 for nonincreasing f: max ratio",
        _ => "",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub sup: f64,
    pub center: f64,
    pub majorant_slack: f64,
    pub second_moment_slack: f64,
    pub ball_mass: f64,
    pub annulus_mass: f64,
    pub lambda_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<Check>,
    pub rows: Vec<SnapshotRow>,
    pub ball_radius: f64,
    pub annulus: [f64; 2],
    /// `(C₀, β)` of the fitted annulus envelope, when enough snapshots exist.
    pub annulus_fit: Option<(f64, f64)>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || !c.required)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check_name == name)
    }
}

fn least_squares_log(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, m)| *m > 0.0).map(|&(t, m)| (t, m.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (t, y) in &pts {
        sxx += (t - mt) * (t - mt);
        sxy += (t - mt) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(((my - slope * mt).exp(), -slope))
}

/// Evaluates every logged inequality on a finished trajectory.
pub fn invariants_report(f_traj: &Trajectory, options: &DiagnosticsOptions) -> Result<DiagnosticsReport> {
    options.validate()?;
    let model = f_traj.spec.model;
    let first = &f_traj.snapshots[0];
    let (m_in, e_in, f0) = (first.mass, first.energy, first.center);
    let grid = f_traj.grid();
    let r_max = grid.r_max();
    let ball_radius = if m_in > 0.0 { (2.0 * e_in / m_in).sqrt().min(r_max) } else { 0.0 };
    let annulus = [0.25 * ball_radius, (4.0 * ball_radius).min(r_max)];

    let mut rows = Vec::with_capacity(f_traj.snapshots.len());
    let mut running_sup = 0.0_f64;
    for s in &f_traj.snapshots {
        running_sup = running_sup.max(s.sup);
        let majorant_slack = if f0 > 0.0 && s.t <= 0.8 / f0 {
            s.center * (1.0 - f0 * s.t) / f0 - 1.0
        } else {
            f64::NAN
        };
        let bound = (4.0 * s.t * (running_sup + m_in)).exp() * (e_in + 4.0);
        let c = compute_coefficients(&s.f);
        let r = grid.nodes();
        let lambda_star = (1..grid.len())
            .filter(|&i| r[i] < options.lambda_r0 && c.astar[i] > 0.0)
            .map(|i| c.mass_cum[i] / (r[i] * c.astar[i]))
            .fold(0.0, f64::max);
        rows.push(SnapshotRow {
            t: s.t,
            mass: s.mass,
            energy: s.energy,
            sup: s.sup,
            center: s.center,
            majorant_slack,
            second_moment_slack: s.energy / bound,
            ball_mass: ball_mass(&s.f, ball_radius),
            annulus_mass: ball_mass(&s.f, annulus[1]) - ball_mass(&s.f, annulus[0]),
            lambda_star,
        });
    }

    let rel = |x: f64, x0: f64| if x0 > 0.0 { (x - x0).abs() / x0 } else { x.abs() };
    let max_of = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, f64::max);

    let t_end = f_traj.last().t;
    let fit_end = options.annulus_fit_fraction * t_end;
    let fit_points: Vec<(f64, f64)> = rows.iter().filter(|r| r.t <= fit_end).map(|r| (r.t, r.annulus_mass)).collect();
    let annulus_fit = least_squares_log(&fit_points);
    let annulus_value = annulus_fit.map(|(c0, beta)| {
        rows.iter()
            .filter(|r| r.t > fit_end)
            .map(|r| {
                let env = c0 * (-beta * r.t).exp();
                (env - r.annulus_mass) / env
            })
            .fold(f64::NEG_INFINITY, f64::max)
    });

    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, required: bool| {
        let s = options.setting(name);
        if !s.enabled {
            return;
        }
        let tolerance = s.tolerance.unwrap_or_else(|| default_tolerance(name));
        checks.push(Check {
            check_name: name.to_string(),
            paper_ref: reference(name).to_string(),
            tolerance,
            value,
            pass: value <= tolerance,
            required,
        });
    };

    if model.conserves_mass() {
        push("mass_drift", max_of(&mut rows.iter().map(|r| rel(r.mass, m_in))), true);
    }
    if model.is_landau() {
        push("energy_drift", max_of(&mut rows.iter().map(|r| rel(r.energy, e_in))), true);
    }
    push(
        "majorant",
        rows.iter().map(|r| r.majorant_slack).filter(|x| x.is_finite()).fold(0.0, f64::max),
        true,
    );
    push("second_moment_bound", max_of(&mut rows.iter().map(|r| r.second_moment_slack)), true);
    if m_in > 0.0 {
        let shortfall = rows
            .iter()
            .map(|r| (0.5 * m_in - r.ball_mass) / (0.5 * m_in))
            .fold(f64::NEG_INFINITY, f64::max);
        push("ball_mass_lower_bound", shortfall, model.is_landau());
    }
    if let Some(v) = annulus_value.filter(|v| v.is_finite()) {
        push("annulus_lower_envelope", v, false);
    }
    push("tail_mass", tail_fraction(f_traj.initial(), 0.5 * r_max), false);
    push("clipped_mass", if m_in > 0.0 { f_traj.clipped_mass / m_in } else { f_traj.clipped_mass }, true);
    push(
        "monotonicity",
        max_of(&mut f_traj.snapshots.iter().map(|s| {
            if s.sup > 0.0 { monotonicity_defect(s.f.values()) / s.sup } else { 0.0 }
        })),
        true,
    );
    let rearr = f_traj
        .snapshots
        .iter()
        .map(|s| {
            let r = grid.nodes();
            (1..grid.len())
                .map(|i| {
                    let env = 3.0 * s.mass / (4.0 * PI * r[i].powi(3));
                    if env > 0.0 { s.f.values()[i] / env } else { 0.0 }
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    push("rearrangement_envelope", rearr, true);

    Ok(DiagnosticsReport { checks, rows, ball_radius, annulus, annulus_fit })
}
