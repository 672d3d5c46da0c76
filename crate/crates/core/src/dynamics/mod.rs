//! Time stepping of the radial Landau and Krieger–Strain equations, the
//! frozen-coefficient linear problems and their Picard iteration.

mod picard;
mod stencil;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::{compute_coefficients, CoefficientField};
use crate::error::{invalid, Error, Result};
use crate::grid::{moment, RadialFunction, RadialGrid};

pub use picard::{picard, PicardResult};
pub use stencil::{thomas, FaceGeometry, Stencil};

/// Collision model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `div(A[f]∇f - f∇a[f])`.
    Landau,
    /// `a[f]Δf + α f²`.
    KsAlpha(f64),
    /// `div(a[f]∇f - f∇a[f])`, i.e. `KsAlpha(1)`.
    KsDivergence,
}

impl Model {
    /// Weight of the `f g` term in the non-divergence form.
    pub fn reaction_weight(self) -> f64 {
        match self {
            Model::KsAlpha(alpha) => alpha,
            Model::Landau | Model::KsDivergence => 1.0,
        }
    }

    /// Mass is conserved by the flux form (everything except `KsAlpha(α < 1)`).
    pub fn conserves_mass(self) -> bool {
        self.reaction_weight() == 1.0
    }

    pub fn is_landau(self) -> bool {
        matches!(self, Model::Landau)
    }

    pub fn validate(self) -> Result<()> {
        if let Model::KsAlpha(alpha) = self {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(invalid("model.ks_alpha", format!("alpha must lie in [0, 1], got {alpha}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub model: Model,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_stepper")]
    pub stepper: Stepper,
    pub dt_init: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    /// `None` means `1e6 · f_in(0)`.
    #[serde(default)]
    pub blowup_threshold: Option<f64>,
}

fn default_stepper() -> Stepper {
    Stepper::SemiImplicit
}

fn default_dt_min() -> f64 {
    1e-12
}

fn default_cfl() -> f64 {
    0.5
}

impl EvolutionSpec {
    pub fn new(model: Model, dt_init: f64) -> Self {
        Self {
            model,
            delta: 0.0,
            stepper: default_stepper(),
            dt_init,
            dt_min: default_dt_min(),
            cfl_safety: default_cfl(),
            blowup_threshold: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.blowup_threshold = Some(threshold);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(invalid("delta", format!("must be finite and >= 0, got {}", self.delta)));
        }
        if !(self.dt_init > 0.0) || !self.dt_init.is_finite() {
            return Err(invalid("dt_init", format!("must be positive, got {}", self.dt_init)));
        }
        if !(self.dt_min > 0.0) || self.dt_min > self.dt_init {
            return Err(invalid("dt_min", format!("must lie in (0, dt_init], got {}", self.dt_min)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(invalid("cfl_safety", format!("must lie in (0, 1), got {}", self.cfl_safety)));
        }
        if let Some(th) = self.blowup_threshold {
            if !(th > 0.0) {
                return Err(invalid("blowup_threshold", format!("must be positive, got {th}")));
            }
        }
        Ok(())
    }

    pub fn threshold_for(&self, f_in: &RadialFunction) -> f64 {
        self.blowup_threshold.unwrap_or_else(|| {
            let c = f_in.center();
            if c > 0.0 { 1e6 * c } else { f64::INFINITY }
        })
    }
}

/// Current solution with its cached coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub f: RadialFunction,
    pub t: f64,
    pub step_index: usize,
    pub dt_current: f64,
    pub coeffs: CoefficientField,
    /// Mass removed by clipping negative values so far.
    pub clipped_mass: f64,
}

impl SimulationState {
    pub fn new(f: RadialFunction) -> Self {
        let coeffs = compute_coefficients(&f);
        Self {
            f,
            t: 0.0,
            step_index: 0,
            dt_current: 0.0,
            coeffs,
            clipped_mass: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub f: RadialFunction,
    pub mass: f64,
    pub energy: f64,
    pub sup: f64,
    pub center: f64,
}

impl Snapshot {
    pub fn new(t: f64, f: RadialFunction) -> Self {
        Self {
            t,
            mass: moment(&f, 0),
            energy: moment(&f, 2),
            sup: f.sup_norm(),
            center: f.center(),
            f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed { t: f64 },
    BlowupDetected { t: f64 },
    DtUnderflow { t: f64 },
}

impl Termination {
    pub fn time(self) -> f64 {
        match self {
            Termination::Completed { t }
            | Termination::BlowupDetected { t }
            | Termination::DtUnderflow { t } => t,
        }
    }

    pub fn is_completed(self) -> bool {
        matches!(self, Termination::Completed { .. })
    }

    pub fn name(self) -> &'static str {
        match self {
            Termination::Completed { .. } => "completed",
            Termination::BlowupDetected { .. } => "blowup_detected",
            Termination::DtUnderflow { .. } => "dt_underflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub spec: EvolutionSpec,
    pub blowup_threshold: f64,
    pub clipped_mass: f64,
    pub steps: usize,
    /// Largest `‖f‖_∞` over every accepted step, not just snapshots.
    pub max_sup: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.snapshots[0].f.grid()
    }

    pub fn initial(&self) -> &RadialFunction {
        &self.snapshots[0].f
    }

    pub fn last(&self) -> &Snapshot {
        &self.snapshots[self.snapshots.len() - 1]
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// Discrete `L[g] f` (with `δ Δ f` added) on the shared grid.
pub fn rhs(g: &RadialFunction, f: &RadialFunction, spec: &EvolutionSpec) -> Result<Vec<f64>> {
    if !g.same_grid(f) {
        return Err(Error::GridMismatch);
    }
    spec.model.validate()?;
    let geometry = FaceGeometry::new(f.grid())?;
    let coeffs = compute_coefficients(g);
    let stencil = Stencil::assemble(&geometry, f.grid(), &coeffs, g.values(), spec.model, spec.delta);
    Ok(stencil.apply(f.values()))
}

/// Result of one accepted step.
struct Advance {
    values: Vec<f64>,
    dt: f64,
    clipped: f64,
}

fn advance(
    f: &RadialFunction,
    geometry: &FaceGeometry,
    stencil: &Stencil,
    spec: &EvolutionSpec,
    t: f64,
    cap: f64,
) -> Result<Advance> {
    let reaction = stencil.max_reaction();
    let mut limit = if reaction > 0.0 { spec.cfl_safety / reaction } else { f64::INFINITY };
    if spec.stepper == Stepper::Explicit {
        limit = limit.min(spec.cfl_safety * stencil.explicit_limit());
    }
    if limit < spec.dt_min {
        return Err(Error::DtUnderflow { t, required: limit, dt_min: spec.dt_min });
    }
    let dt = spec.dt_init.min(limit).min(cap);
    let mut values = match spec.stepper {
        Stepper::Explicit => {
            let lf = stencil.apply(f.values());
            f.values().iter().zip(lf).map(|(v, l)| v + dt * l).collect::<Vec<_>>()
        }
        Stepper::SemiImplicit => stencil.solve_implicit(dt, f.values()),
    };
    let mut clipped = 0.0;
    for (i, v) in values.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        if *v < 0.0 {
            clipped += 4.0 * std::f64::consts::PI * geometry.volume[i] * -*v;
            *v = 0.0;
        }
    }
    Ok(Advance { values, dt, clipped })
}

/// One step of the nonlinear problem with coefficients frozen at `state.f`.
pub fn step(state: &SimulationState, spec: &EvolutionSpec) -> Result<SimulationState> {
    spec.validate()?;
    let grid = state.f.grid();
    let geometry = FaceGeometry::new(grid)?;
    let stencil = Stencil::assemble(&geometry, grid, &state.coeffs, state.f.values(), spec.model, spec.delta);
    let adv = advance(&state.f, &geometry, &stencil, spec, state.t, f64::INFINITY)?;
    let f = RadialFunction::new(grid.clone(), adv.values)?;
    let coeffs = compute_coefficients(&f);
    Ok(SimulationState {
        f,
        t: state.t + adv.dt,
        step_index: state.step_index + 1,
        dt_current: adv.dt,
        coeffs,
        clipped_mass: state.clipped_mass + adv.clipped,
    })
}

/// One step of the linear problem with a manufactured coefficient field and
/// drift density `g`.
pub fn step_with_coefficients(
    f: &RadialFunction,
    coeffs: &CoefficientField,
    g: &[f64],
    spec: &EvolutionSpec,
) -> Result<(RadialFunction, f64)> {
    spec.validate()?;
    let grid = f.grid();
    if g.len() != grid.len() || coeffs.grid().nodes() != grid.nodes() {
        return Err(Error::GridMismatch);
    }
    let geometry = FaceGeometry::new(grid)?;
    let stencil = Stencil::assemble(&geometry, grid, coeffs, g, spec.model, spec.delta);
    let adv = advance(f, &geometry, &stencil, spec, 0.0, f64::INFINITY)?;
    Ok((RadialFunction::new(grid.clone(), adv.values)?, adv.dt))
}

/// Where the frozen coefficients come from.
enum Source<'a> {
    /// `g = f` at the start of each step.
    Nonlinear,
    /// Left-continuous piecewise-constant samples of `g`.
    Frozen(&'a [(f64, RadialFunction)]),
}

fn check_horizon(t_end: f64, snapshot_every: f64) -> Result<()> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(invalid("T", format!("horizon must be positive, got {t_end}")));
    }
    if !(snapshot_every > 0.0) || !snapshot_every.is_finite() {
        return Err(invalid("snapshot_every", format!("must be positive, got {snapshot_every}")));
    }
    Ok(())
}

fn drive(
    f_in: &RadialFunction,
    spec: &EvolutionSpec,
    t_end: f64,
    snapshot_every: f64,
    source: Source<'_>,
) -> Result<Trajectory> {
    spec.validate()?;
    check_horizon(t_end, snapshot_every)?;
    let grid = f_in.grid().clone();
    let geometry = FaceGeometry::new(&grid)?;
    let threshold = spec.threshold_for(f_in);
    let eps = 1e-12 * t_end;

    let mut f = f_in.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut clipped = 0.0;
    let mut max_sup = f.sup_norm();
    let mut snapshots = vec![Snapshot::new(0.0, f.clone())];
    let mut next_index = 1usize;
    let mut frozen_index: Option<usize> = None;
    let mut frozen_coeffs: Option<CoefficientField> = None;

    let termination = loop {
        if f.sup_norm() > threshold {
            break Termination::BlowupDetected { t };
        }
        if t >= t_end - eps {
            break Termination::Completed { t: t_end };
        }
        let next_snap = (next_index as f64 * snapshot_every).min(t_end);
        let mut cap = next_snap - t;

        let stencil = match &source {
            Source::Nonlinear => {
                let coeffs = compute_coefficients(&f);
                Stencil::assemble(&geometry, &grid, &coeffs, f.values(), spec.model, spec.delta)
            }
            Source::Frozen(samples) => {
                let k = samples.partition_point(|(ts, _)| *ts <= t + eps).max(1) - 1;
                if frozen_index != Some(k) {
                    frozen_coeffs = Some(compute_coefficients(&samples[k].1));
                    frozen_index = Some(k);
                }
                if let Some((t_next, _)) = samples.get(k + 1) {
                    cap = cap.min(t_next - t);
                }
                let coeffs = frozen_coeffs.as_ref().expect("set above");
                Stencil::assemble(&geometry, &grid, coeffs, samples[k].1.values(), spec.model, spec.delta)
            }
        };

        let adv = match advance(&f, &geometry, &stencil, spec, t, cap) {
            Ok(adv) => adv,
            Err(Error::DtUnderflow { .. }) => break Termination::DtUnderflow { t },
            Err(e) => return Err(e),
        };
        f = RadialFunction::new(grid.clone(), adv.values)?;
        t += adv.dt;
        steps += 1;
        clipped += adv.clipped;
        max_sup = max_sup.max(f.sup_norm());
        if (t - next_snap).abs() <= eps {
            t = next_snap;
            snapshots.push(Snapshot::new(t, f.clone()));
            next_index += 1;
        }
    };

    let t_stop = termination.time();
    if snapshots.last().map(|s| s.t) != Some(t_stop) && t_stop > snapshots.last().map_or(-1.0, |s| s.t) {
        snapshots.push(Snapshot::new(t_stop, f.clone()));
    }
    Ok(Trajectory {
        snapshots,
        termination,
        spec: spec.clone(),
        blowup_threshold: threshold,
        clipped_mass: clipped,
        steps,
        max_sup,
    })
}

/// Integrates the nonlinear equation up to `t_end`, recording snapshots at
/// multiples of `snapshot_every`. Blow-up and step underflow end the run
/// early and are reported through [`Trajectory::termination`].
pub fn run(f_in: &RadialFunction, spec: &EvolutionSpec, t_end: f64, snapshot_every: f64) -> Result<Trajectory> {
    drive(f_in, spec, t_end, snapshot_every, Source::Nonlinear)
}

/// Integrates `∂_t f = δΔf + Q(g(t), f)` with `g` piecewise constant between
/// its samples. Sample times must start at 0 and increase strictly.
pub fn solve_linear_cauchy(
    g_traj: &[(f64, RadialFunction)],
    f_in: &RadialFunction,
    spec: &EvolutionSpec,
    t_end: f64,
    snapshot_every: f64,
) -> Result<Trajectory> {
    if g_traj.is_empty() {
        return Err(invalid("g_traj", "need at least one sample"));
    }
    if g_traj[0].0 != 0.0 {
        return Err(invalid("g_traj", "first sample must be at t = 0"));
    }
    if g_traj.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(invalid("g_traj", "sample times must increase strictly"));
    }
    if g_traj.iter().any(|(_, g)| !g.same_grid(f_in)) {
        return Err(Error::GridMismatch);
    }
    drive(f_in, spec, t_end, snapshot_every, Source::Frozen(g_traj))
}
