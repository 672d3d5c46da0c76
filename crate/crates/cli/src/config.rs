use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use landau_radial::diagnostics::{CheckSetting, DiagnosticsOptions};
use landau_radial::oracle::MIN_SAMPLES;
use landau_radial::{EvolutionSpec, InitialDataSpec, Model, RadialGrid};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA: u32 = 1;

/// Configuration problem detected before any compute starts.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

fn fail<T>(field: &str, err: impl fmt::Display) -> Result<T, ValidationError> {
    Err(ValidationError(format!("{field}: {err}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub r_max: f64,
    #[serde(default = "unit_stretch")]
    pub stretch: f64,
}

fn unit_stretch() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    100_000
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { samples: default_samples() }
    }
}

/// Parameter lists whose Cartesian product defines a sweep. Empty lists
/// keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub model: Vec<Model>,
    /// Shorthand for `model = ks_alpha(α)`; overrides `model` when both are set.
    #[serde(default)]
    pub ks_alpha: Vec<f64>,
    #[serde(default)]
    pub mass: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub grid: GridConfig,
    pub initial: InitialDataSpec,
    pub evolution: EvolutionSpec,
    pub horizon: f64,
    pub snapshot_every: f64,
    #[serde(default)]
    pub require_completion: bool,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, CheckSetting>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ValidationError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ValidationError(format!("config: {e}")))?;
        match value.get("schema") {
            Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA as u64) => {}
            Some(other) => return fail("schema", format!("unsupported schema {other}, expected {SCHEMA}")),
            None => return fail("schema", format!("missing; expected \"schema\": {SCHEMA}")),
        }
        serde_json::from_value(value).map_err(|e| ValidationError(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ValidationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValidationError(format!("config: cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>, ValidationError> {
        match RadialGrid::new(self.grid.n, self.grid.r_max, self.grid.stretch) {
            Ok(g) => Ok(g.into_shared()),
            Err(e) => fail("grid", e),
        }
    }

    pub fn diagnostics_options(&self) -> DiagnosticsOptions {
        DiagnosticsOptions { settings: self.diagnostics.clone(), ..DiagnosticsOptions::default() }
    }

    /// Checks every field against the preconditions of the operation that
    /// consumes it.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let grid = self.grid()?;
        if let Err(e) = landau_radial::dynamics::FaceGeometry::new(&grid) {
            return fail("grid", e);
        }
        if let Err(e) = self.initial.validate() {
            return fail("initial", e);
        }
        if let Err(e) = self.evolution.validate() {
            return fail("evolution", e);
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return fail("horizon", format!("must be positive, got {}", self.horizon));
        }
        if !(self.snapshot_every > 0.0) || !self.snapshot_every.is_finite() {
            return fail("snapshot_every", format!("must be positive, got {}", self.snapshot_every));
        }
        if let Err(e) = self.diagnostics_options().validate() {
            return fail("diagnostics", e);
        }
        if self.verify.samples < MIN_SAMPLES {
            return fail("verify.samples", format!("need at least {MIN_SAMPLES}, got {}", self.verify.samples));
        }
        if let Err(e) = landau_radial::make_initial(&self.initial, &grid) {
            return fail("initial", e);
        }
        Ok(())
    }

    /// Cartesian product of the sweep lists, in a fixed order (model,
    /// mass, n, delta), each point validated.
    pub fn sweep_points(&self) -> Result<Vec<(Value, RunConfig)>, ValidationError> {
        let models: Vec<Option<Model>> = if !self.sweep.ks_alpha.is_empty() {
            self.sweep.ks_alpha.iter().map(|&a| Some(Model::KsAlpha(a))).collect()
        } else if !self.sweep.model.is_empty() {
            self.sweep.model.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let masses = options(&self.sweep.mass);
        let sizes = options(&self.sweep.n);
        let deltas = options(&self.sweep.delta);
        let mut points = Vec::new();
        for model in &models {
            for mass in &masses {
                for n in &sizes {
                    for delta in &deltas {
                        let mut point = self.clone();
                        point.sweep = SweepConfig::default();
                        let mut params = serde_json::Map::new();
                        if let Some(m) = model {
                            point.evolution.model = *m;
                            params.insert("model".into(), json!(m));
                        }
                        if let Some(m) = mass {
                            point.initial.mass = *m;
                            params.insert("mass".into(), json!(m));
                        }
                        if let Some(n) = n {
                            point.grid.n = *n;
                            params.insert("n".into(), json!(n));
                        }
                        if let Some(d) = delta {
                            point.evolution.delta = *d;
                            params.insert("delta".into(), json!(d));
                        }
                        let index = points.len();
                        point
                            .validate()
                            .map_err(|e| ValidationError(format!("sweep point {index}: {e}")))?;
                        points.push((Value::Object(params), point));
                    }
                }
            }
        }
        Ok(points)
    }
}

fn options<T: Copy>(list: &[T]) -> Vec<Option<T>> {
    if list.is_empty() {
        vec![None]
    } else {
        list.iter().copied().map(Some).collect()
    }
}
