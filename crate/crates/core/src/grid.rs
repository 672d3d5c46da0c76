//! Radial meshes, sampled radial profiles and their integrals.
//!
//! A radially symmetric density `f(|v|)` on ℝ³ is represented by its samples
//! on a mesh `0 = r_0 < r_1 < … < r_N = R_max`. Every integral over velocity
//! space reduces to `4π ∫ f(r) r² dr`, evaluated with the composite trapezoid
//! rule on the (possibly stretched) mesh.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest node count accepted by [`RadialGrid::new`].
pub const MIN_NODES: usize = 16;

/// Nonuniform radial mesh on `[0, R_max]` with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    stretch: f64,
}

/// Geometric node placement: `Δr_{i+1} = stretch · Δr_i`, rescaled so the
/// last node lands exactly on `r_max`.
pub fn geometric_nodes(n: usize, r_max: f64, stretch: f64) -> Vec<f64> {
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(0.0);
    let mut acc = 0.0;
    let mut step = 1.0;
    for _ in 0..n {
        acc += step;
        nodes.push(acc);
        step *= stretch;
    }
    let scale = r_max / acc;
    for r in nodes.iter_mut() {
        *r *= scale;
    }
    nodes[n] = r_max;
    nodes
}

impl RadialGrid {
    /// Builds a mesh with `n` intervals (`n + 1` nodes).
    pub fn new(n: usize, r_max: f64, stretch: f64) -> Result<Self> {
        if n < MIN_NODES {
            return Err(invalid("n", format!("need at least {MIN_NODES} intervals, got {n}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(invalid("r_max", format!("must be positive, got {r_max}")));
        }
        if !(stretch >= 1.0) || !stretch.is_finite() {
            return Err(invalid("stretch", format!("must be >= 1, got {stretch}")));
        }
        let mut grid = Self::from_nodes(geometric_nodes(n, r_max, stretch))?;
        grid.stretch = stretch;
        Ok(grid)
    }

    /// Uniform mesh shortcut.
    pub fn uniform(n: usize, r_max: f64) -> Result<Self> {
        Self::new(n, r_max, 1.0)
    }

    /// Wraps an explicit node list. Used for small hand-checked meshes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(invalid("nodes", "need at least three nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(invalid("nodes", "first node must be exactly 0"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(invalid("nodes", "nodes must be finite and strictly increasing"));
        }
        let n = nodes.len() - 1;
        let mut weights = vec![0.0; n + 1];
        weights[0] = 0.5 * (nodes[1] - nodes[0]);
        weights[n] = 0.5 * (nodes[n] - nodes[n - 1]);
        for i in 1..n {
            weights[i] = 0.5 * (nodes[i + 1] - nodes[i - 1]);
        }
        let ratio = (nodes[2] - nodes[1]) / (nodes[1] - nodes[0]);
        Ok(Self {
            nodes,
            weights,
            stretch: ratio,
        })
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    /// Number of nodes (`N + 1`).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Largest node index with `r_i <= r` (clamped to the mesh).
    pub fn index_at_or_below(&self, r: f64) -> usize {
        match self.nodes.partition_point(|&x| x <= r) {
            0 => 0,
            k => k - 1,
        }
    }

    /// Running trapezoid integral `∫_0^{r_i} φ dr` at every node.
    pub fn cumulative(&self, integrand: &[f64]) -> Vec<f64> {
        debug_assert_eq!(integrand.len(), self.len());
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..self.len() {
            acc += 0.5 * (self.nodes[i] - self.nodes[i - 1]) * (integrand[i] + integrand[i - 1]);
            out.push(acc);
        }
        out
    }

    /// Tail integral `∫_{r_i}^{R_max} φ dr` at every node, accumulated from
    /// the outer boundary inwards so that it stays nonnegative for φ >= 0.
    pub fn tail_cumulative(&self, integrand: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in (0..n - 1).rev() {
            out[i] = out[i + 1]
                + 0.5 * (self.nodes[i + 1] - self.nodes[i]) * (integrand[i] + integrand[i + 1]);
        }
        out
    }

    /// Trapezoid integral `∫_0^r φ dr` for an arbitrary `r` in `[0, R_max]`,
    /// interpolating the integrand linearly inside the last partial cell.
    pub fn integral_to(&self, integrand: &[f64], r: f64) -> f64 {
        let r = r.clamp(0.0, self.r_max());
        let k = self.index_at_or_below(r);
        let cum = self.cumulative(integrand);
        if k + 1 >= self.len() || r == self.nodes[k] {
            return cum[k];
        }
        let (r0, r1) = (self.nodes[k], self.nodes[k + 1]);
        let s = (r - r0) / (r1 - r0);
        let phi_r = integrand[k] + s * (integrand[k + 1] - integrand[k]);
        cum[k] + 0.5 * (r - r0) * (integrand[k] + phi_r)
    }
}

/// A nonnegative radial profile sampled on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value < 0.0 {
                return Err(Error::Negative { index, value });
            }
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at the origin.
    pub fn center(&self) -> f64 {
        self.values[0]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    pub fn same_grid(&self, other: &RadialFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.nodes() == other.grid.nodes()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * factor).collect())
    }
}

/// `4π Σ w_i f_i r_i^{2+k}`; `k = 0` is the mass, `k = 2` the energy.
///
/// Panics if `k > 4`.
pub fn moment(f: &RadialFunction, k: u32) -> f64 {
    assert!(k <= 4, "moment order must be in 0..=4, got {k}");
    moment_of_values(f.grid(), f.values(), k)
}

pub(crate) fn moment_of_values(grid: &RadialGrid, values: &[f64], k: u32) -> f64 {
    let sum: f64 = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(values)
        .map(|((&r, &w), &f)| w * f * r.powi(2 + k as i32))
        .sum();
    4.0 * PI * sum
}

/// Discrete `L¹` norm of a signed sample vector (`4π Σ w_i |f_i| r_i²`).
pub fn l1_norm_signed(grid: &RadialGrid, values: &[f64]) -> f64 {
    let sum: f64 = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(values)
        .map(|((&r, &w), &f)| w * f.abs() * r * r)
        .sum();
    4.0 * PI * sum
}

/// Mass of the ball `B_r` for arbitrary `r <= R_max`.
pub fn ball_mass(f: &RadialFunction, r: f64) -> f64 {
    let integrand: Vec<f64> = f
        .grid()
        .nodes()
        .iter()
        .zip(f.values())
        .map(|(&t, &v)| v * t * t)
        .collect();
    4.0 * PI * f.grid().integral_to(&integrand, r)
}

/// `‖f‖_{L^p(B_{r_cut})}` on the mesh.
///
/// The ball integral is the running trapezoid sum up to the last node inside
/// `B_{r_cut}`, so `p = 1, r_cut = R_max` reproduces [`moment`]`(f, 0)`.
pub fn lp_norm(f: &RadialFunction, p: f64, r_cut: f64) -> Result<f64> {
    let grid = f.grid();
    if !(p >= 1.0) {
        return Err(invalid("p", format!("exponent must be >= 1, got {p}")));
    }
    if r_cut > grid.r_max() * (1.0 + 1e-12) {
        return Err(invalid(
            "r_cut",
            format!("radius {r_cut} exceeds R_max = {}", grid.r_max()),
        ));
    }
    if r_cut < 0.0 {
        return Err(invalid("r_cut", "radius must be nonnegative"));
    }
    let k = grid.index_at_or_below(r_cut);
    Ok(lp_norms_by_node(f, p)[k])
}

/// `‖f‖_{L^p(B_{r_i})}` for every node `i` in one pass.
pub fn lp_norms_by_node(f: &RadialFunction, p: f64) -> Vec<f64> {
    let grid = f.grid();
    let integrand: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(f.values())
        .map(|(&r, &v)| v.powf(p) * r * r)
        .collect();
    grid.cumulative(&integrand)
        .into_iter()
        .map(|c| (4.0 * PI * c).powf(1.0 / p))
        .collect()
}

/// `max(0, max_i (f_{i+1} - f_i))`.
pub fn monotonicity_defect(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max)
}

/// Smallest `C` with `f(r) <= C (3/4π)^{1/p} r^{-3/p}` on the mesh, i.e. the
/// weak-`L^p` seminorm of a radially nonincreasing profile.
pub fn weak_lp_bound(f: &RadialFunction, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(invalid("p", format!("exponent must be positive, got {p}")));
    }
    let tolerance = 1e-10 * f.sup_norm();
    let defect = monotonicity_defect(f.values());
    if defect > tolerance {
        return Err(Error::MonotonicityViolation { defect, tolerance });
    }
    let scale = (4.0 * PI / 3.0).powf(1.0 / p);
    Ok(f
        .grid()
        .nodes()
        .iter()
        .zip(f.values())
        .skip(1)
        .map(|(&r, &v)| v * scale * r.powf(3.0 / p))
        .fold(0.0, f64::max))
}

/// Fraction of the total mass lying outside `B_r`.
pub fn tail_fraction(f: &RadialFunction, r: f64) -> f64 {
    let total = moment(f, 0);
    if total == 0.0 {
        return 0.0;
    }
    ((total - ball_mass(f, r)) / total).max(0.0)
}

/// One centred Maxwellian component of a [`Profile::MaxwellianSum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxwellianComponent {
    /// Relative weight; components are combined then rescaled to the mass.
    pub weight: f64,
    pub temperature: f64,
}

/// Shape of an initial profile before mass normalisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Maxwellian {
        temperature: f64,
    },
    /// Indicator of `B_radius` smoothed by a `tanh` edge of the given width.
    UniformBallMollified {
        radius: f64,
        width: f64,
    },
    /// `(1 + (r/core_radius)²)^{-q/2}`: bounded plateau near the origin,
    /// `r^{-q}` tail.
    PowerTail {
        q: f64,
        core_radius: f64,
    },
    MaxwellianSum {
        components: Vec<MaxwellianComponent>,
    },
}

/// Admissible initial datum: profile, target mass and the weak-`L^p`
/// exponent it is certified against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    pub profile: Profile,
    pub mass: f64,
    #[serde(default = "default_weak_p")]
    pub weak_p_exponent: f64,
}

fn default_weak_p() -> f64 {
    7.0
}

impl InitialDataSpec {
    pub fn maxwellian(mass: f64, temperature: f64) -> Self {
        Self {
            profile: Profile::Maxwellian { temperature },
            mass,
            weak_p_exponent: default_weak_p(),
        }
    }

    pub fn power_tail(mass: f64, q: f64, core_radius: f64) -> Self {
        Self {
            profile: Profile::PowerTail { q, core_radius },
            mass,
            weak_p_exponent: default_weak_p(),
        }
    }

    pub fn mollified_ball(mass: f64, radius: f64, width: f64) -> Self {
        Self {
            profile: Profile::UniformBallMollified { radius, width },
            mass,
            weak_p_exponent: default_weak_p(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass >= 0.0) || !self.mass.is_finite() {
            return Err(invalid("initial.mass", format!("must be finite and >= 0, got {}", self.mass)));
        }
        if !(self.weak_p_exponent > 6.0) || !self.weak_p_exponent.is_finite() {
            return Err(invalid(
                "initial.weak_p_exponent",
                format!("must exceed 6, got {}", self.weak_p_exponent),
            ));
        }
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {v}")))
            }
        };
        match &self.profile {
            Profile::Maxwellian { temperature } => positive("initial.profile.temperature", *temperature),
            Profile::UniformBallMollified { radius, width } => {
                positive("initial.profile.radius", *radius)?;
                positive("initial.profile.width", *width)
            }
            Profile::PowerTail { q, core_radius } => {
                if !(*q > 6.0) || !q.is_finite() {
                    return Err(invalid("initial.profile.q", format!("tail exponent must exceed 6, got {q}")));
                }
                positive("initial.profile.core_radius", *core_radius)
            }
            Profile::MaxwellianSum { components } => {
                if components.is_empty() {
                    return Err(invalid("initial.profile.components", "need at least one component"));
                }
                for c in components {
                    positive("initial.profile.components.weight", c.weight)?;
                    positive("initial.profile.components.temperature", c.temperature)?;
                }
                Ok(())
            }
        }
    }

    /// Unnormalised shape function.
    pub fn shape(&self) -> impl Fn(f64) -> f64 + '_ {
        move |r: f64| match &self.profile {
            Profile::Maxwellian { temperature } => maxwellian_density(r, 1.0, *temperature),
            Profile::UniformBallMollified { radius, width } => {
                0.5 * (1.0 - ((r - radius) / width).tanh())
            }
            Profile::PowerTail { q, core_radius } => {
                (1.0 + (r / core_radius).powi(2)).powf(-0.5 * q)
            }
            Profile::MaxwellianSum { components } => components
                .iter()
                .map(|c| maxwellian_density(r, c.weight, c.temperature))
                .sum(),
        }
    }
}

/// `mass (2πT)^{-3/2} exp(-r²/2T)`.
pub fn maxwellian_density(r: f64, mass: f64, temperature: f64) -> f64 {
    mass * (2.0 * PI * temperature).powf(-1.5) * (-r * r / (2.0 * temperature)).exp()
}

/// Samples the datum on `grid`, rescales it to the requested mass and checks
/// admissibility (nonnegative, radially nonincreasing, finite weak-`L^p`).
pub fn make_initial(spec: &InitialDataSpec, grid: &Arc<RadialGrid>) -> Result<RadialFunction> {
    spec.validate()?;
    let shape = spec.shape();
    let mut values: Vec<f64> = grid.nodes().iter().map(|&r| shape(r)).collect();
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Admissibility("profile has negative or non-finite samples".into()));
    }
    let raw_mass = moment_of_values(grid, &values, 0);
    if spec.mass > 0.0 {
        if !(raw_mass > 0.0) {
            return Err(Error::Admissibility("profile has no mass on the grid".into()));
        }
        let factor = spec.mass / raw_mass;
        values.iter_mut().for_each(|v| *v *= factor);
    } else {
        values.iter_mut().for_each(|v| *v = 0.0);
    }
    let peak = values.iter().fold(0.0_f64, |m, &v| m.max(v));
    let defect = monotonicity_defect(&values);
    if defect > 1e-12 * peak {
        return Err(Error::Admissibility(format!(
            "profile is not radially nonincreasing (defect {defect:e})"
        )));
    }
    // Remove rounding-level wiggles so the discrete profile is exactly monotone.
    for i in 1..values.len() {
        values[i] = values[i].min(values[i - 1]);
    }
    let f = RadialFunction::new(grid.clone(), values)?;
    let weak = weak_lp_bound(&f, spec.weak_p_exponent)?;
    if !weak.is_finite() {
        return Err(Error::Admissibility("weak-L^p seminorm is not finite".into()));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, r_max: f64) -> Arc<RadialGrid> {
        RadialGrid::uniform(n, r_max).unwrap().into_shared()
    }

    #[test]
    fn uniform_nodes_and_weights() {
        let nodes = geometric_nodes(4, 1.0, 1.0);
        assert_eq!(nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let grid = RadialGrid::from_nodes(nodes).unwrap();
        assert_eq!(grid.weights(), &[0.125, 0.25, 0.25, 0.25, 0.125]);
    }

    #[test]
    fn stretched_grid_hits_r_max() {
        let grid = RadialGrid::new(100, 10.0, 1.02).unwrap();
        assert_eq!(grid.len(), 101);
        assert_eq!(grid.r_max(), 10.0);
        assert_eq!(grid.nodes()[0], 0.0);
        let d0 = grid.nodes()[1] - grid.nodes()[0];
        let d1 = grid.nodes()[2] - grid.nodes()[1];
        assert!((d1 / d0 - 1.02).abs() < 1e-12);
        let total: f64 = grid.weights().iter().sum();
        assert!((total - 10.0).abs() < 1e-12 * 10.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(RadialGrid::new(4, 1.0, 1.0), Err(Error::InvalidArgument { name: "n", .. })));
        assert!(matches!(RadialGrid::new(32, 0.0, 1.0), Err(Error::InvalidArgument { name: "r_max", .. })));
        assert!(matches!(RadialGrid::new(32, 1.0, 0.9), Err(Error::InvalidArgument { name: "stretch", .. })));
        assert!(RadialGrid::from_nodes(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn maxwellian_moments() {
        let grid = uniform(800, 10.0);
        let f = RadialFunction::from_fn(grid, |r| maxwellian_density(r, 1.0, 1.0)).unwrap();
        assert!((moment(&f, 0) - 1.0).abs() < 1e-5);
        assert!((moment(&f, 2) - 3.0).abs() < 1e-4);
    }

    #[test]
    fn zero_profile() {
        let f = RadialFunction::zeros(uniform(32, 2.0));
        for k in 0..=4 {
            assert_eq!(moment(&f, k), 0.0);
        }
        assert_eq!(weak_lp_bound(&f, 3.0).unwrap(), 0.0);
        assert_eq!(monotonicity_defect(f.values()), 0.0);
    }

    #[test]
    fn lp_norm_of_constant_and_ball() {
        let grid = uniform(400, 1.0);
        let c = 2.5;
        let f = RadialFunction::from_fn(grid.clone(), |_| c).unwrap();
        let vol = 4.0 * PI / 3.0;
        assert!((lp_norm(&f, 1.0, 1.0).unwrap() - vol * c).abs() < 1e-4);

        let rho = 3.0 / (4.0 * PI);
        let ball = RadialFunction::from_fn(grid, |_| rho).unwrap();
        let expected = (vol * rho.powf(1.5)).powf(2.0 / 3.0);
        assert!((lp_norm(&ball, 1.5, 1.0).unwrap() - expected).abs() < 1e-5 * expected);
        assert!(lp_norm(&ball, 1.5, 1.5).is_err());
    }

    #[test]
    fn lp_norm_matches_mass() {
        let grid = RadialGrid::new(200, 8.0, 1.01).unwrap().into_shared();
        let f = RadialFunction::from_fn(grid.clone(), |r| (-r).exp()).unwrap();
        let a = lp_norm(&f, 1.0, grid.r_max()).unwrap();
        assert!((a - moment(&f, 0)).abs() <= 1e-12 * a);
    }

    #[test]
    fn weak_bound_identities() {
        let p = 7.0;
        let grid = uniform(64, 3.0);
        let c = (3.0 / (4.0 * PI)).powf(1.0 / p);
        let mut values: Vec<f64> = grid.nodes().iter().map(|&r| c * r.powf(-3.0 / p)).collect();
        values[0] = values[1];
        let f = RadialFunction::new(grid.clone(), values).unwrap();
        assert!((weak_lp_bound(&f, p).unwrap() - 1.0).abs() < 1e-12);

        let grid = uniform(100, 2.0);
        let rho = 3.0 / (4.0 * PI);
        let ball = RadialFunction::from_fn(grid, |r| if r <= 1.0 { rho } else { 0.0 }).unwrap();
        let expected = rho * (4.0 * PI / 3.0f64).sqrt();
        assert!((weak_lp_bound(&ball, 2.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn weak_bound_rejects_increasing_profiles() {
        let grid = uniform(32, 1.0);
        let f = RadialFunction::from_fn(grid, |r| r).unwrap();
        assert!(matches!(weak_lp_bound(&f, 7.0), Err(Error::MonotonicityViolation { .. })));
    }

    #[test]
    fn monotonicity_defect_definition() {
        assert_eq!(monotonicity_defect(&[3.0, 2.0, 2.0, 1.0]), 0.0);
        assert_eq!(monotonicity_defect(&[1.0, 2.0]), 1.0);
    }

    #[test]
    fn initial_maxwellian() {
        let grid = uniform(400, 10.0);
        let f = make_initial(&InitialDataSpec::maxwellian(1.0, 1.0), &grid).unwrap();
        assert!((moment(&f, 0) - 1.0).abs() < 1e-12);
        let m0 = maxwellian_density(0.0, 1.0, 1.0);
        assert!((f.center() - m0).abs() < 1e-4 * m0);
        assert_eq!(monotonicity_defect(f.values()), 0.0);

        let big = make_initial(&InitialDataSpec::maxwellian(10.0, 1.0), &grid).unwrap();
        for (a, b) in big.values().iter().zip(f.values()) {
            assert!((a - 10.0 * b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn initial_power_tail_is_admissible() {
        let grid = RadialGrid::new(400, 20.0, 1.01).unwrap().into_shared();
        let spec = InitialDataSpec::power_tail(1.0, 7.0, 1.0);
        let f = make_initial(&spec, &grid).unwrap();
        assert_eq!(monotonicity_defect(f.values()), 0.0);
        let w = weak_lp_bound(&f, 7.0).unwrap();
        assert!(w.is_finite() && w > 0.0);
        assert!((moment(&f, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_rejects_bad_specs() {
        let grid = uniform(64, 5.0);
        let mut spec = InitialDataSpec::power_tail(1.0, 5.0, 1.0);
        assert!(make_initial(&spec, &grid).is_err());
        spec = InitialDataSpec::maxwellian(1.0, 1.0);
        spec.weak_p_exponent = 4.0;
        assert!(make_initial(&spec, &grid).is_err());
    }

    #[test]
    fn trapezoid_is_second_order() {
        // e^{-r} on [0, 1]; ∫ r² e^{-r} dr = 2 - 5/e
        let exact = 4.0 * PI * (2.0 - 5.0 / std::f64::consts::E);
        let err = |n: usize| {
            let f = RadialFunction::from_fn(uniform(n, 1.0), |r| (-r).exp()).unwrap();
            (moment(&f, 0) - exact).abs()
        };
        let ratio = err(100) / err(200);
        assert!((ratio - 4.0).abs() < 1.2, "ratio {ratio}");
    }
}
