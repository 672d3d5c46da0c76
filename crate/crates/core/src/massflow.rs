//! The mass function `M(r,t) = ∫_{B_r} f dv`, its own parabolic equation
//!
//! ```text
//! ∂_t M = K (∂_rr M - (2/r) ∂_r M) + (M_f/(4πr²)) ∂_r M
//! ```
//!
//! (`K = A*` for Landau, `K = a` for Krieger–Strain), power-law
//! supersolutions and the `C r^{1+α}` barrier.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::coefficients::{compute_coefficients, CoefficientField};
use crate::dynamics::{thomas, Model, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::grid::{RadialFunction, RadialGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct MassProfile {
    grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub total: f64,
}

impl MassProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid("values", "mass profile length must match the grid"));
        }
        if values[0] != 0.0 {
            return Err(invalid("values", "M(0) must vanish"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("values", "mass profile must be nondecreasing"));
        }
        let total = values[values.len() - 1];
        Ok(Self { grid, values, total })
    }

    pub fn from_function(f: &RadialFunction) -> Self {
        let c = compute_coefficients(f);
        let total = c.total_mass();
        Self {
            grid: f.grid().clone(),
            values: c.mass_cum,
            total,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
}

fn diffusivity(coeffs: &CoefficientField, model: Model) -> Result<&[f64]> {
    match model {
        Model::Landau => Ok(&coeffs.astar),
        Model::KsDivergence => Ok(&coeffs.a),
        Model::KsAlpha(1.0) => Ok(&coeffs.a),
        Model::KsAlpha(alpha) => Err(invalid(
            "model",
            format!("the mass function has no closed equation for ks_alpha({alpha}) with alpha < 1"),
        )),
    }
}

/// Interior three-point operator; rows 0 and N are Dirichlet and stay zero.
///
/// `∂_rr M - (2/r)∂_r M = r² ∂_r q` with `q = r^{-2} ∂_r M = 3 dM/d(r³)`;
/// `q` is differenced in `r³` on each cell, so both `M = 1` and `M = r³`
/// are annihilated exactly.
struct MassStencil {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl MassStencil {
    fn assemble(grid: &RadialGrid, coeffs: &CoefficientField, model: Model, delta: f64) -> Result<Self> {
        let k = diffusivity(coeffs, model)?;
        let r = grid.nodes();
        let n = grid.len();
        let cube: Vec<f64> = r.iter().map(|x| x * x * x).collect();
        // face j: between nodes j and j+1
        let gain: Vec<f64> = (0..n - 1).map(|j| 3.0 / (cube[j + 1] - cube[j])).collect();
        let centre: Vec<f64> = (0..n - 1).map(|j| (0.5 * (cube[j] + cube[j + 1])).cbrt()).collect();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n - 1 {
            let r2 = r[i] * r[i];
            let width = centre[i] - centre[i - 1];
            let kd = k[i] + delta;
            let adv = -coeffs.da[i];
            let mut lo = kd * r2 * gain[i - 1] / width - 0.5 * adv * r2 * gain[i - 1];
            let mut up = kd * r2 * gain[i] / width + 0.5 * adv * r2 * gain[i];
            if lo < 0.0 || up < 0.0 {
                lo = kd * r2 * gain[i - 1] / width;
                up = kd * r2 * gain[i] / width;
                if adv > 0.0 {
                    up += adv * r2 * gain[i];
                } else {
                    lo -= adv * r2 * gain[i - 1];
                }
            }
            lower[i] = lo;
            upper[i] = up;
        }
        Ok(Self { lower, upper })
    }

    fn apply(&self, m: &[f64]) -> Vec<f64> {
        let n = m.len();
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            out[i] = self.lower[i] * (m[i - 1] - m[i]) + self.upper[i] * (m[i + 1] - m[i]);
        }
        out
    }

    fn solve_implicit(&self, dt: f64, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let lower: Vec<f64> = self.lower.iter().map(|x| -dt * x).collect();
        let upper: Vec<f64> = self.upper.iter().map(|x| -dt * x).collect();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + dt * (self.lower[i] + self.upper[i])).collect();
        thomas(&lower, &diag, &upper, b)
    }
}

/// Right-hand side of the mass equation with coefficients `coeffs`;
/// zero at both Dirichlet ends.
pub fn mass_rhs(m: &MassProfile, coeffs: &CoefficientField, model: Model) -> Result<Vec<f64>> {
    mass_rhs_with_delta(m, coeffs, model, 0.0)
}

pub fn mass_rhs_with_delta(m: &MassProfile, coeffs: &CoefficientField, model: Model, delta: f64) -> Result<Vec<f64>> {
    if m.grid.nodes() != coeffs.grid().nodes() {
        return Err(Error::GridMismatch);
    }
    Ok(MassStencil::assemble(&m.grid, coeffs, model, delta)?.apply(&m.values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassRun {
    pub times: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    /// `max_t ‖M_traj - M_f‖_∞ / M_total` over the snapshots of `f_traj`.
    pub consistency_error: f64,
}

/// Evolves `M_in` with coefficients taken from `f_traj`, linearly
/// interpolated in time between snapshots, by implicit Euler sub-steps no
/// longer than the trajectory's nominal step.
pub fn run_mass(m_in: &MassProfile, f_traj: &Trajectory, model: Model) -> Result<MassRun> {
    let grid = f_traj.grid().clone();
    if m_in.grid.nodes() != grid.nodes() {
        return Err(Error::GridMismatch);
    }
    diffusivity(&CoefficientField::zeros(grid.clone()), model)?;
    let delta = f_traj.spec.delta;
    let dt_nominal = f_traj.spec.dt_init;
    let n = grid.len();
    let total = m_in.total;

    let coeffs: Vec<CoefficientField> = f_traj.snapshots.iter().map(|s| compute_coefficients(&s.f)).collect();
    let mut m = m_in.values.clone();
    let mut profiles = vec![m.clone()];
    let mut times = vec![f_traj.snapshots[0].t];
    let err_at = |m: &[f64], c: &CoefficientField| -> f64 {
        if total == 0.0 {
            return 0.0;
        }
        m.iter().zip(&c.mass_cum).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / total
    };
    let mut consistency_error = err_at(&m, &coeffs[0]);

    for k in 1..f_traj.snapshots.len() {
        let (t0, t1) = (f_traj.snapshots[k - 1].t, f_traj.snapshots[k].t);
        let span = t1 - t0;
        let subs = ((span / dt_nominal) - 1e-9).ceil().max(1.0) as usize;
        let dt = span / subs as f64;
        for j in 1..=subs {
            let s = j as f64 / subs as f64;
            let c = coeffs[k - 1].lerp(&coeffs[k], s);
            let stencil = MassStencil::assemble(&grid, &c, model, delta)?;
            m = stencil.solve_implicit(dt, &m);
            m[0] = 0.0;
            m[n - 1] = total;
        }
        consistency_error = consistency_error.max(err_at(&m, &coeffs[k]));
        profiles.push(m.clone());
        times.push(t1);
    }
    Ok(MassRun { times, profiles, consistency_error })
}

/// `min_r L(r^m)` with `L h = ∂_t h - a ∂_rr h - (2/r)(M/(8πr) - a) ∂_r h`,
/// i.e. `m r^{m-2} [(1-m) a + 2(a - M/(8πr))]` at every node `r > 0`.
pub fn supersolution_residual(m: f64, f: &RadialFunction) -> Result<f64> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(invalid("m", format!("exponent must be >= 0, got {m}")));
    }
    let c = compute_coefficients(f);
    Ok(supersolution_profile(m, f.grid(), &c).into_iter().fold(f64::INFINITY, f64::min))
}

pub(crate) fn supersolution_profile(m: f64, grid: &RadialGrid, c: &CoefficientField) -> Vec<f64> {
    grid.nodes()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &r)| {
            if m == 0.0 {
                return 0.0;
            }
            m * r.powf(m - 2.0) * ((1.0 - m) * c.a[i] + 2.0 * (c.a[i] - c.mass_cum[i] / (8.0 * PI * r)))
        })
        .collect()
}

/// Exponents tried by the barrier fit: 0.05, 0.10, …, 0.95.
pub fn alpha_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

/// Fits `M(r) <= C₀ r^{1+α}` on `(0, min(1, R_max)]`, minimising `C₀` over
/// [`alpha_grid`]. Ties go to the larger exponent.
pub fn fit_barrier(f: &RadialFunction) -> Result<(f64, f64)> {
    let grid = f.grid();
    let c = compute_coefficients(f);
    let r = grid.nodes();
    let limit = grid.r_max().min(1.0);
    let idx: Vec<usize> = (1..grid.len()).filter(|&i| r[i] <= limit).collect();
    if idx.is_empty() {
        return Err(Error::FitFailure("no grid node in (0, 1]".into()));
    }
    if c.total_mass() == 0.0 {
        return Ok((0.0, alpha_grid()[alpha_grid().len() - 1]));
    }
    let mut best: Option<(f64, f64)> = None;
    let mut interior_argmax = false;
    for alpha in alpha_grid() {
        let mut c0 = 0.0_f64;
        let mut at = idx[0];
        for &i in &idx {
            let q = c.mass_cum[i] / r[i].powf(1.0 + alpha);
            if q > c0 {
                c0 = q;
                at = i;
            }
        }
        if !c0.is_finite() {
            continue;
        }
        if at != idx[0] {
            interior_argmax = true;
        }
        if best.is_none_or(|(b, _)| c0 <= b) {
            best = Some((c0, alpha));
        }
    }
    match best {
        Some(found) if interior_argmax => Ok(found),
        Some(_) => Err(Error::FitFailure(
            "the bound is attained at the first grid node for every exponent; data too concentrated to resolve".into(),
        )),
        None => Err(Error::FitFailure("no exponent gives a finite prefactor".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierRow {
    pub t: f64,
    /// `min_{0<r<=1} (C r^{1+α} - M(r,t))`.
    pub margin: f64,
    /// `M(r,t) <= C` for `r > 1`.
    pub outer_ok: bool,
    pub pass: bool,
    /// `max_{0<r<r₀} M/(r A*)`.
    pub lambda_star: f64,
    pub lambda_below_8pi: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierCertificate {
    pub c: f64,
    pub c0: f64,
    pub alpha: f64,
    pub valid_radius: (f64, f64),
    pub r0: f64,
    pub rows: Vec<BarrierRow>,
}

impl BarrierCertificate {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn min_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Relative slack on `M(r,t) <= C` for `r > 1`, which holds exactly up to
/// rounding in the cumulative sums.
const OUTER_ROUNDOFF: f64 = 1e-12;

/// Default `r₀` for the `λ*` scan.
pub const DEFAULT_LAMBDA_R0: f64 = 0.5;

/// Fits `(C₀, α)` at `t = 0`, takes `C = max{C₀, M_total, 1}` and checks
/// `M(r,t) <= C r^{1+α}` on `(0, 1]` at every snapshot, plus `λ*(t)`.
pub fn barrier_monitor(f_traj: &Trajectory, r0: f64) -> Result<BarrierCertificate> {
    if !(r0 > 0.0) {
        return Err(invalid("r0", format!("must be positive, got {r0}")));
    }
    let (c0, alpha) = fit_barrier(f_traj.initial())?;
    let grid = f_traj.grid();
    let r = grid.nodes();
    let total = compute_coefficients(f_traj.initial()).total_mass();
    let c = c0.max(total).max(1.0);
    let limit = grid.r_max().min(1.0);
    let rows = f_traj
        .snapshots
        .iter()
        .map(|s| {
            let co = compute_coefficients(&s.f);
            let mut margin = f64::INFINITY;
            let mut outer_ok = true;
            let mut lambda_star = 0.0_f64;
            for i in 1..grid.len() {
                if r[i] <= limit {
                    margin = margin.min(c * r[i].powf(1.0 + alpha) - co.mass_cum[i]);
                } else if co.mass_cum[i] > c * (1.0 + OUTER_ROUNDOFF) {
                    outer_ok = false;
                }
                if r[i] < r0 && co.astar[i] > 0.0 {
                    lambda_star = lambda_star.max(co.mass_cum[i] / (r[i] * co.astar[i]));
                }
            }
            BarrierRow {
                t: s.t,
                margin,
                outer_ok,
                pass: margin >= 0.0 && outer_ok,
                lambda_star,
                lambda_below_8pi: lambda_star < 8.0 * PI,
            }
        })
        .collect();
    Ok(BarrierCertificate {
        c,
        c0,
        alpha,
        valid_radius: (r[1], limit),
        r0,
        rows,
    })
}
