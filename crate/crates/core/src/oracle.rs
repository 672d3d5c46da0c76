//! Brute-force Monte Carlo in ℝ³ for the Newtonian potential `a`, the radial
//! eigenvalue `A*` and the sphere kernel `I(r,t)`.
//!
//! Samples are drawn in fixed-size chunks, each with its own ChaCha stream,
//! and pooled in chunk order, so results depend only on the seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub const MIN_SAMPLES: usize = 10_000;
const CHUNK: usize = 8192;
const BINS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl McEstimate {
    /// `|mean - target| / sqrt(se² + extra²)`.
    pub fn z_score(&self, target: f64, extra: f64) -> f64 {
        let err = (self.standard_error.powi(2) + extra.powi(2)).sqrt();
        (self.mean - target).abs() / err
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments { n: self.n + o.n, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }

    fn estimate(self, seed: u64) -> McEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        McEstimate { mean, standard_error: (var / n).sqrt(), sample_count: self.n, seed }
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(invalid("samples", format!("need at least {MIN_SAMPLES}, got {samples}")));
    }
    Ok(())
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Uniform point on the unit sphere.
fn direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [z, s * phi.cos(), s * phi.sin()]
}

/// Runs `per_sample` in deterministic chunks and pools the moments of each
/// returned component.
fn pooled<const K: usize>(
    samples: usize,
    seed: u64,
    per_sample: impl Fn(&mut ChaCha8Rng) -> [f64; K] + Sync,
) -> [Moments; K] {
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<[Moments; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut m = [Moments::default(); K];
            for _ in 0..count {
                let x = per_sample(&mut rng);
                for k in 0..K {
                    m[k].push(x[k]);
                }
            }
            m
        })
        .collect();
    parts.into_iter().fold([Moments::default(); K], |acc, p| {
        let mut out = acc;
        for k in 0..K {
            out[k] = acc[k].merge(p[k]);
        }
        out
    })
}

/// Tabulated proposal for a one-dimensional law on `[0, support]`.
#[derive(Debug, Clone)]
pub struct RadialLaw {
    edges: Vec<f64>,
    cumulative: Vec<f64>,
    density: Vec<f64>,
}

impl RadialLaw {
    /// Proposal for `t² h(t)`, the radial law of the density `h`.
    pub fn new(h: &(dyn Fn(f64) -> f64 + Sync), support: f64) -> Result<Self> {
        Self::from_law(&|t| t * t * h(t), support)
    }

    pub fn from_law(law: &dyn Fn(f64) -> f64, support: f64) -> Result<Self> {
        if !(support > 0.0) || !support.is_finite() {
            return Err(Error::SamplingFailure(format!("support radius must be positive, got {support}")));
        }
        let dr = support / BINS as f64;
        let edges: Vec<f64> = (0..=BINS).map(|k| k as f64 * dr).collect();
        let mut weight: Vec<f64> = (0..BINS)
            .map(|k| {
                let (l, rr) = (edges[k], edges[k + 1]);
                law(l).max(law(0.5 * (l + rr))).max(law(rr)) * dr
            })
            .collect();
        if weight.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::SamplingFailure("radial law is negative or not finite".into()));
        }
        let raw: f64 = weight.iter().sum();
        if !(raw > 0.0) {
            return Err(Error::SamplingFailure("radial law has zero mass".into()));
        }
        let floor = 1e-3 * raw / BINS as f64;
        weight.iter_mut().for_each(|w| *w += floor);
        let total: f64 = weight.iter().sum();
        let mut cumulative = Vec::with_capacity(BINS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in &weight {
            acc += w / total;
            cumulative.push(acc);
        }
        let density = weight.iter().map(|w| w / (total * dr)).collect();
        Ok(Self { edges, cumulative, density })
    }

    /// Draws `t` and returns it with the proposal density `q(t)`.
    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let u: f64 = rng.random::<f64>() * self.cumulative[BINS];
        let k = (self.cumulative.partition_point(|&c| c <= u).max(1) - 1).min(BINS - 1);
        let t = self.edges[k] + rng.random::<f64>() * (self.edges[k + 1] - self.edges[k]);
        (t, self.density[k])
    }
}

/// Monte Carlo estimates of `a = (1/4π)∫ h(w)/|v-w| dw` and
/// `A* = (1/8π)∫ h(w)(1 - cos²θ)/|v-w| dw` at `v = r ê₁`, with `h` set to
/// zero outside `B_support`.
///
/// Samples the displacement `w - v = ρu` with `u` uniform on the sphere and
/// `ρ` drawn in proportion to `ρ h(max(ρ - r, 0))`. The Jacobian `ρ²`
/// cancels the singularity, and for nonincreasing `h` the weights are
/// bounded.
pub fn direct_coefficients_3d(
    h: &(dyn Fn(f64) -> f64 + Sync),
    support: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    check_samples(samples)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(invalid("r", format!("must be finite and >= 0, got {r}")));
    }
    let inside = |t: f64| if t <= support { h(t) } else { 0.0 };
    let law = RadialLaw::from_law(&|rho| rho * inside((rho - r).max(0.0)), r + support)?;
    let [ma, ms] = pooled::<2>(samples, seed, |rng| {
        let (rho, q) = law.sample(rng);
        let u = direction(rng);
        let w = [r + rho * u[0], rho * u[1], rho * u[2]];
        let t = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        let x = rho * inside(t) / q;
        [x, 0.5 * x * (1.0 - u[0] * u[0])]
    });
    Ok((ma.estimate(seed), ms.estimate(seed)))
}

/// Monte Carlo estimate of `I(r,t) = ∫_{∂B_t} (1 - cos²θ)/|v-w| dw`.
pub fn i_direct(r: f64, t: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    check_samples(samples)?;
    if !(r > 0.0) || !(t > 0.0) {
        return Err(invalid("r", "radii must be positive"));
    }
    if r == t {
        return Err(invalid("t", "the integrand is singular at r = t"));
    }
    let area = 4.0 * PI * t * t;
    let [m] = pooled::<1>(samples, seed, |rng| {
        let u = direction(rng);
        let d = [r - t * u[0], -t * u[1], -t * u[2]];
        let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        [area * (d[1] * d[1] + d[2] * d[2]) / (d2 * d2.sqrt())]
    });
    Ok(m.estimate(seed))
}

/// `(a, A*)` for the unit-mass uniform ball of radius 1.
pub fn uniform_ball_closed_form(r: f64) -> (f64, f64) {
    let k = 3.0 / (4.0 * PI);
    if r <= 1.0 {
        (k * (0.5 - r * r / 6.0), k * (1.0 / 6.0 - r * r / 10.0))
    } else {
        (1.0 / (4.0 * PI * r), 1.0 / (20.0 * PI * r.powi(3)))
    }
}
