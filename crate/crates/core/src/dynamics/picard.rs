use crate::error::{invalid, Error, Result};
use crate::grid::{l1_norm_signed, RadialFunction};

use super::{solve_linear_cauchy, EvolutionSpec};

/// Iterates `f_0 ≡ f_in`, `f_k` solving the linear problem driven by
/// `f_{k-1}`, all sampled on one uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    pub times: Vec<f64>,
    /// `iterates[k][n]` is `f_k` at `times[n]`.
    pub iterates: Vec<Vec<RadialFunction>>,
    /// `diffs[k-1] = d_k = sup_t (‖f_k - f_{k-1}‖_∞ + ‖f_k - f_{k-1}‖_1)`.
    pub diffs: Vec<f64>,
}

impl PicardResult {
    /// `d_k / d_{k-1}` for `k = 2..=k_max`; zero once the differences vanish.
    pub fn ratios(&self) -> Vec<f64> {
        self.diffs
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    /// Errors with the first `k >= 2` at which `d_k` fails to decrease.
    pub fn require_monotone(&self) -> Result<()> {
        for (j, ratio) in self.ratios().into_iter().enumerate() {
            if self.diffs[j] > 0.0 && ratio >= 1.0 {
                return Err(Error::NonConvergence { k: j + 2, ratio });
            }
        }
        Ok(())
    }
}

pub fn picard(
    f_in: &RadialFunction,
    delta: f64,
    t_end: f64,
    k_max: usize,
    n_steps: usize,
    spec: &EvolutionSpec,
) -> Result<PicardResult> {
    if k_max < 2 {
        return Err(invalid("k_max", format!("need at least two iterates, got {k_max}")));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps", "need at least one time step"));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(invalid("T", format!("horizon must be positive, got {t_end}")));
    }
    let h = t_end / n_steps as f64;
    let mut spec = spec.clone().with_delta(delta);
    spec.dt_init = spec.dt_init.min(h);
    spec.dt_min = spec.dt_min.min(spec.dt_init);
    spec.validate()?;
    let times: Vec<f64> = (0..=n_steps).map(|n| if n == n_steps { t_end } else { n as f64 * h }).collect();

    let grid = f_in.grid().clone();
    let mut iterates: Vec<Vec<RadialFunction>> = vec![vec![f_in.clone(); times.len()]];
    let mut diffs = Vec::with_capacity(k_max);
    for _ in 1..=k_max {
        let prev = iterates.last().expect("nonempty");
        let g: Vec<(f64, RadialFunction)> = times.iter().copied().zip(prev.iter().cloned()).collect();
        let traj = solve_linear_cauchy(&g, f_in, &spec, t_end, h)?;
        if !traj.termination.is_completed() || traj.snapshots.len() != times.len() {
            return Err(invalid(
                "T",
                format!("iterate stopped early ({}) at t = {}", traj.termination.name(), traj.termination.time()),
            ));
        }
        let next: Vec<RadialFunction> = traj.snapshots.into_iter().map(|s| s.f).collect();
        let d = next
            .iter()
            .zip(prev)
            .map(|(a, b)| {
                let w: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
                let sup = w.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
                sup + l1_norm_signed(&grid, &w)
            })
            .fold(0.0_f64, f64::max);
        diffs.push(d);
        iterates.push(next);
    }
    Ok(PicardResult { times, iterates, diffs })
}
