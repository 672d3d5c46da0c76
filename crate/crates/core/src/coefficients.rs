//! Nonlocal Landau coefficients of a radial profile.
//!
//! For radial `f` the Newtonian potential and the radial eigenvalue of the
//! diffusion matrix reduce to one-dimensional integrals
//!
//! ```text
//! a(r)  = (1/r) ∫_0^r f t² dt + ∫_r^R f t dt
//! A*(r) = (1/3r³) ∫_0^r f t⁴ dt + (1/3) ∫_r^R f t dt
//! ```
//!
//! evaluated with trapezoid prefix and suffix sums.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{ball_mass, moment, RadialFunction, RadialGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    grid: Arc<RadialGrid>,
    pub a: Vec<f64>,
    pub astar: Vec<f64>,
    /// `∂_r a = -M/(4πr²)`, zero at the origin.
    pub da: Vec<f64>,
    /// `M(r_i)`, the mass of `B_{r_i}`.
    pub mass_cum: Vec<f64>,
}

impl CoefficientField {
    /// Manufactured coefficients, e.g. for stencil checks with constant `A*`.
    pub fn from_parts(
        grid: Arc<RadialGrid>,
        a: Vec<f64>,
        astar: Vec<f64>,
        mass_cum: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.len();
        if a.len() != n || astar.len() != n || mass_cum.len() != n {
            return Err(invalid("coefficients", "field lengths must match the grid"));
        }
        let da = grid
            .nodes()
            .iter()
            .zip(&mass_cum)
            .map(|(&r, &m)| if r > 0.0 { -m / (4.0 * PI * r * r) } else { 0.0 })
            .collect();
        Ok(Self { grid, a, astar, da, mass_cum })
    }

    /// All-zero coefficients (the field of `f ≡ 0`).
    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            a: vec![0.0; n],
            astar: vec![0.0; n],
            da: vec![0.0; n],
            mass_cum: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_cum[self.mass_cum.len() - 1]
    }

    /// Pointwise convex combination `(1-s)·self + s·other`.
    pub fn lerp(&self, other: &CoefficientField, s: f64) -> CoefficientField {
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(u, v)| u + s * (v - u)).collect()
        };
        CoefficientField {
            grid: self.grid.clone(),
            a: mix(&self.a, &other.a),
            astar: mix(&self.astar, &other.astar),
            da: mix(&self.da, &other.da),
            mass_cum: mix(&self.mass_cum, &other.mass_cum),
        }
    }
}

/// Computes `a`, `A*`, `∂_r a` and `M` for `f` in O(N).
pub fn compute_coefficients(f: &RadialFunction) -> CoefficientField {
    let grid = f.grid();
    let r = grid.nodes();
    let v = f.values();
    let n = grid.len();

    let t2: Vec<f64> = (0..n).map(|i| v[i] * r[i] * r[i]).collect();
    let t4: Vec<f64> = (0..n).map(|i| t2[i] * r[i] * r[i]).collect();
    let t1: Vec<f64> = (0..n).map(|i| v[i] * r[i]).collect();
    let p2 = grid.cumulative(&t2);
    let p4 = grid.cumulative(&t4);
    let s1 = grid.tail_cumulative(&t1);

    let mut a = vec![0.0; n];
    let mut astar = vec![0.0; n];
    let mut da = vec![0.0; n];
    let mut mass_cum = vec![0.0; n];
    a[0] = s1[0];
    astar[0] = s1[0] / 3.0;
    for i in 1..n {
        let ri = r[i];
        a[i] = p2[i] / ri + s1[i];
        astar[i] = p4[i] / (3.0 * ri * ri * ri) + s1[i] / 3.0;
        mass_cum[i] = 4.0 * PI * p2[i];
        da[i] = -p2[i] / (ri * ri);
    }
    CoefficientField {
        grid: grid.clone(),
        a,
        astar,
        da,
        mass_cum,
    }
}

/// `I(r,t) = ∫_{∂B_t} (1 - cos²θ)/|v - w| dw` with `|v| = r`.
///
/// `8π t⁴/(3r³)` for `t <= r` and `8π t/3` for `t >= r`; the two branches
/// agree at `t = r`.
pub fn kernel_i(r: f64, t: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    Ok(if t <= r {
        8.0 * PI * t.powi(4) / (3.0 * r.powi(3))
    } else {
        8.0 * PI * t / 3.0
    })
}

/// `A*` rebuilt node by node as `Σ_j w_j f_j I(r_i, t_j)/(8π)`.
pub fn astar_from_kernel(f: &RadialFunction) -> Vec<f64> {
    let grid = f.grid();
    let r = grid.nodes();
    let w = grid.weights();
    let v = f.values();
    (0..grid.len())
        .map(|i| {
            if i == 0 {
                // I(0,t)/(8π) = t/3
                return (0..grid.len()).map(|j| w[j] * v[j] * r[j] / 3.0).sum();
            }
            let mut s = 0.0;
            for j in 0..grid.len() {
                if r[j] > 0.0 {
                    s += w[j] * v[j] * kernel_i(r[i], r[j]).expect("positive radii") / (8.0 * PI);
                }
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticityReport {
    /// Mass of the annulus `B_{R1} \ B_{R0}`.
    pub delta_annulus: f64,
    pub c0: f64,
    /// `A*(r) >= c0/(1+r³)` at every node.
    pub lower_bound_ok: bool,
    /// `a(r) <= 2(‖f‖_∞ + ‖f‖_1)/(1+r)` at every node.
    pub upper_curve_ok: bool,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

pub fn ellipticity_bounds(f: &RadialFunction, r0: f64, r1: f64) -> Result<EllipticityReport> {
    let grid = f.grid();
    if !(r0 > 0.0) {
        return Err(invalid("R0", format!("must be positive, got {r0}")));
    }
    if !(r0 < r1) {
        return Err(invalid("R0", format!("R0 = {r0} must be below R1 = {r1}")));
    }
    if r1 > grid.r_max() {
        return Err(invalid("R1", format!("R1 = {r1} exceeds R_max = {}", grid.r_max())));
    }
    let tolerance = 1e-10 * f.sup_norm();
    let defect = crate::grid::monotonicity_defect(f.values());
    if defect > tolerance {
        return Err(Error::MonotonicityViolation { defect, tolerance });
    }
    let coeffs = compute_coefficients(f);
    let delta_annulus = (ball_mass(f, r1) - ball_mass(f, r0)).max(0.0);
    let c0 = delta_annulus * r0 * r0 / (12.0 * PI * (1.0 + r1.powi(3)));
    let cap = 2.0 * (f.sup_norm() + moment(f, 0));
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for (i, &r) in grid.nodes().iter().enumerate() {
        lower_margin = lower_margin.min(coeffs.astar[i] - c0 / (1.0 + r.powi(3)));
        upper_margin = upper_margin.min(cap / (1.0 + r) - coeffs.a[i]);
    }
    Ok(EllipticityReport {
        delta_annulus,
        c0,
        lower_bound_ok: lower_margin >= 0.0,
        upper_curve_ok: upper_margin >= 0.0,
        lower_margin,
        upper_margin,
    })
}
