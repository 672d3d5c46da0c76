//! Conservative three-point stencil for the radial flux form
//! `∂_t f = r^{-2} ∂_r (r² (K ∂_r f + f M/(4πr²))) + reaction`.
//!
//! Node `i >= 1` owns the control volume `V_i = w_i r_i²`, so that
//! `4π Σ V_i f_i` is exactly the trapezoid mass. Face radii satisfy
//! `ρ³_{i+1/2} = 3 Σ_{j<=i} V_j`, and face values are interpolated in
//! `s = r²`. The drift face mass is the discrete mass of `g` inside the face,
//! which turns the drift divergence into exactly `f_i g_i` plus two
//! difference terms. Node 0 carries no volume; it is a point value driven by
//! the limit of the operator at the origin.

use std::f64::consts::PI;

use crate::coefficients::CoefficientField;
use crate::error::{invalid, Result};
use crate::grid::RadialGrid;

use super::Model;

/// Control volumes and face placement of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceGeometry {
    /// `V_i = w_i r_i²` (zero at the origin).
    pub volume: Vec<f64>,
    /// `ρ_{i+1/2}` for `i = 0..N-1`; `ρ_{1/2} = 0`.
    pub rho: Vec<f64>,
    /// Interpolation weight of the outer node at each face.
    pub theta: Vec<f64>,
}

impl FaceGeometry {
    pub fn new(grid: &RadialGrid) -> Result<Self> {
        let r = grid.nodes();
        let n = grid.len();
        let volume: Vec<f64> = r
            .iter()
            .zip(grid.weights())
            .map(|(&ri, &wi)| wi * ri * ri)
            .collect();
        let mut rho = vec![0.0; n - 1];
        let mut theta = vec![0.0; n - 1];
        let mut acc = 0.0;
        for i in 1..n - 1 {
            acc += volume[i];
            let rf = (3.0 * acc).cbrt();
            if !(rf > r[i] && rf < r[i + 1]) {
                return Err(invalid(
                    "stretch",
                    format!("control-volume face {rf} escapes cell [{}, {}]", r[i], r[i + 1]),
                ));
            }
            rho[i] = rf;
            theta[i] = (rf * rf - r[i] * r[i]) / (r[i + 1] * r[i + 1] - r[i] * r[i]);
        }
        Ok(Self { volume, rho, theta })
    }
}

/// `(Lf)_i = up_i (f_{i+1} - f_i) + down_i (f_{i-1} - f_i) + reaction_i f_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub reaction: Vec<f64>,
}

impl Stencil {
    /// Frozen-coefficient operator `L[g]` for the given model.
    pub fn assemble(
        geometry: &FaceGeometry,
        grid: &RadialGrid,
        coeffs: &CoefficientField,
        g: &[f64],
        model: Model,
        delta: f64,
    ) -> Self {
        let r = grid.nodes();
        let n = grid.len();
        let vol = &geometry.volume;
        let k: &[f64] = match model {
            Model::Landau => &coeffs.astar,
            Model::KsAlpha(_) | Model::KsDivergence => &coeffs.a,
        };
        let alpha = model.reaction_weight();

        let mut up = vec![0.0; n];
        let mut down = vec![0.0; n];
        let mut reaction = vec![0.0; n];

        up[0] = 6.0 * (k[0] + delta) / (r[1] * r[1]);
        reaction[0] = alpha * g[0];

        let mut face_mass = 0.0;
        for i in 1..n - 1 {
            face_mass += 4.0 * PI * vol[i] * g[i];
            let rho = geometry.rho[i];
            let ds = r[i + 1] * r[i + 1] - r[i] * r[i];
            let mut theta = geometry.theta[i];
            let kf = k[i] + theta * (k[i + 1] - k[i]) + delta;
            let conductance = rho * rho * kf * 2.0 * rho / ds;
            let drift = face_mass / (4.0 * PI);
            if conductance - drift * (1.0 - theta) < 0.0 {
                theta = 1.0;
            }
            up[i] = (conductance + drift * theta) / vol[i];
            down[i + 1] = (conductance - drift * (1.0 - theta)) / vol[i + 1];
            reaction[i] = alpha * g[i];
        }
        reaction[n - 1] = -face_mass / (4.0 * PI * vol[n - 1]) - (1.0 - alpha) * g[n - 1];
        Self { up, down, reaction }
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|i| {
                let mut out = self.reaction[i] * f[i];
                if i + 1 < n {
                    out += self.up[i] * (f[i + 1] - f[i]);
                }
                if i > 0 {
                    out += self.down[i] * (f[i - 1] - f[i]);
                }
                out
            })
            .collect()
    }

    pub fn max_reaction(&self) -> f64 {
        self.reaction.iter().fold(0.0, |m, &x| m.max(x))
    }

    /// Largest forward-Euler step keeping both `f` and its first differences
    /// in the positive cone, before the safety factor.
    pub fn explicit_limit(&self) -> f64 {
        let n = self.len();
        let neg = |x: f64| (-x).max(0.0);
        let mut rate: f64 = 0.0;
        for i in 0..n {
            rate = rate.max(self.up[i] + self.down[i] + neg(self.reaction[i]));
            if i + 1 < n {
                rate = rate.max(self.up[i] + self.down[i + 1] + neg(self.reaction[i + 1]));
            }
        }
        if rate > 0.0 { 1.0 / rate } else { f64::INFINITY }
    }

    /// Solves `(I - dt L) x = b`.
    pub fn solve_implicit(&self, dt: f64, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let lower: Vec<f64> = (0..n).map(|i| -dt * self.down[i]).collect();
        let upper: Vec<f64> = (0..n).map(|i| -dt * self.up[i]).collect();
        let diag: Vec<f64> = (0..n)
            .map(|i| 1.0 + dt * (self.up[i] + self.down[i] - self.reaction[i]))
            .collect();
        thomas(&lower, &diag, &upper, b)
    }
}

/// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { upper[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        if i + 1 < n {
            c[i] = upper[i] / m;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}
