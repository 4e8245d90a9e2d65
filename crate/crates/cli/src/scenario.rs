//! Declarative scenario configs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use surfhj::lagrangians::{builtin_model, LagrangianModel, ModelSpec};

/// What a scenario runs; mirrors the subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    VerifyLegendre,
    VerifyActionVariation,
    VerifyHj,
    VerifyCauchy,
    VerifyQuasiclassics,
    RunCharacteristics,
    RunField,
    Sweep,
}

impl Operation {
    pub fn label(self) -> &'static str {
        match self {
            Operation::VerifyLegendre => "verify-legendre",
            Operation::VerifyActionVariation => "verify-action-variation",
            Operation::VerifyHj => "verify-hj",
            Operation::VerifyCauchy => "verify-cauchy",
            Operation::VerifyQuasiclassics => "verify-quasiclassics",
            Operation::RunCharacteristics => "run-characteristics",
            Operation::RunField => "run-field",
            Operation::Sweep => "sweep",
        }
    }

    /// Command-line words that select this operation.
    pub fn argv(self) -> Vec<&'static str> {
        match self {
            Operation::VerifyLegendre => vec!["verify", "legendre"],
            Operation::VerifyActionVariation => vec!["verify", "action-variation"],
            Operation::VerifyHj => vec!["verify", "hj"],
            Operation::VerifyCauchy => vec!["verify", "cauchy"],
            Operation::VerifyQuasiclassics => vec!["verify", "quasiclassics"],
            Operation::RunCharacteristics => vec!["run", "characteristics"],
            Operation::RunField => vec!["run", "field"],
            Operation::Sweep => vec!["sweep"],
        }
    }
}

/// Refinement target of a `sweep` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepTarget {
    /// Direct solver against the standing wave, `m² = 1`.
    ElStandingWave,
    /// Direct solver against d'Alembert's solution, `m² = 0`.
    ElDalembert,
    /// Both Hamilton–Jacobi lines under K-refinement.
    Hj,
    /// Finite-difference error of the action variation in ε.
    ActionVariationEps,
    /// Floor-subtracted first Schrödinger line in h.
    QuasiclassicsH,
    /// Transport residual of the pullback amplitude under K-refinement.
    Transport,
    /// Characteristics flow against the direct solver.
    Characteristics,
    /// Drift of `∫H² ds` along the characteristics flow.
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// Nodes on the curve.
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    /// Levels of a sampled patch.
    #[serde(rename = "L", default = "default_l")]
    pub l: usize,
    /// Refinement levels in K.
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
}

fn default_k() -> usize {
    64
}

fn default_l() -> usize {
    17
}

fn default_levels() -> Vec<usize> {
    vec![32, 64, 128]
}

impl Default for Grid {
    fn default() -> Self {
        Self { k: default_k(), l: default_l(), levels: default_levels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub target: SweepTarget,
    /// Number of log-spaced `h` values for `quasiclassics-h`.
    #[serde(default = "default_h_points")]
    pub h_points: usize,
    /// Number of log-spaced ε values for `action-variation-eps`.
    #[serde(default = "default_eps_points")]
    pub eps_points: usize,
    /// Expected slope and half-width of the acceptance band.
    pub expect: Option<f64>,
    pub band: Option<f64>,
    /// Lower bound instead of a band.
    pub at_least: Option<f64>,
}

fn default_h_points() -> usize {
    7
}

fn default_eps_points() -> usize {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub operation: Operation,
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    /// Extra models for the Legendre suite; defaults to the three built-ins.
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub seed: u64,
    /// Random draws per check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Threshold overrides by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub sweep: Option<SweepSpec>,
    /// Parallel node sweeps inside a check.
    #[serde(default)]
    pub parallel: bool,
    /// Output directory, relative to the working directory.
    pub out: Option<String>,
}

fn default_model() -> ModelSpec {
    ModelSpec { model: "scalar_field_2d".into(), m2: 1.0, lambda: 0.0, k: 0.0, dim: 1 }
}

fn default_samples() -> usize {
    20
}

/// Problems that make a scenario unusable; these map to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub levels: Option<usize>,
    pub out: Option<String>,
    pub parallel: bool,
}

impl Scenario {
    pub fn default_for(operation: Operation) -> Self {
        Self {
            name: operation.label().into(),
            operation,
            model: default_model(),
            models: Vec::new(),
            grid: Grid::default(),
            seed: 0,
            samples: default_samples(),
            tolerances: BTreeMap::new(),
            sweep: None,
            parallel: false,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("{e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    /// Applies command-line overrides; `--levels n` keeps doubling from the
    /// coarsest level until there are `n` of them.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(k) = o.grid {
            self.grid.k = k;
        }
        if let Some(n) = o.levels {
            let start = self.grid.levels.iter().copied().min().unwrap_or(self.grid.k);
            self.grid.levels = (0..n).map(|i| start << i).collect();
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        self.parallel |= o.parallel;
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(ConfigError(format!("invalid scenario name {:?}", self.name)));
        }
        let model = self.build_model()?;
        if self.operation != Operation::VerifyLegendre && model.name() != "scalar_field_2d" {
            return Err(ConfigError(format!("{} runs on scalar_field_2d, not {}", self.operation.label(), model.name())));
        }
        for spec in &self.models {
            builtin_model(spec).map_err(|e| ConfigError(format!("model {:?}: {e}", spec.model)))?;
        }
        if self.grid.k < 8 {
            return Err(ConfigError(format!("K = {} below the minimum of 8", self.grid.k)));
        }
        if self.grid.l < 2 {
            return Err(ConfigError("L must be at least 2".into()));
        }
        if self.samples == 0 {
            return Err(ConfigError("samples must be positive".into()));
        }
        let refines = matches!(
            self.operation,
            Operation::VerifyHj | Operation::VerifyQuasiclassics | Operation::RunCharacteristics | Operation::Sweep
        );
        if refines {
            if self.grid.levels.len() < 3 {
                return Err(ConfigError("refinement needs at least three levels".into()));
            }
            if let Some(k) = self.grid.levels.iter().find(|k| !k.is_power_of_two() || **k < 16) {
                return Err(ConfigError(format!("level K = {k} is not a power of two >= 16")));
            }
            if self.grid.levels.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError("levels must increase".into()));
            }
        }
        match (self.operation, &self.sweep) {
            (Operation::Sweep, None) => return Err(ConfigError("sweep scenario without a \"sweep\" block".into())),
            (Operation::Sweep, Some(s)) => {
                if s.h_points < 4 || s.eps_points < 3 {
                    return Err(ConfigError("sweep needs h_points >= 4 and eps_points >= 3".into()));
                }
                if s.band.is_some() != s.expect.is_some() {
                    return Err(ConfigError("\"expect\" and \"band\" go together".into()));
                }
            }
            (_, Some(_)) => return Err(ConfigError("\"sweep\" block only applies to sweep scenarios".into())),
            _ => {}
        }
        if self.tolerances.values().any(|v| !v.is_finite()) {
            return Err(ConfigError("tolerances must be finite".into()));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<LagrangianModel, ConfigError> {
        builtin_model(&self.model).map_err(|e| ConfigError(format!("model {:?}: {e}", self.model.model)))
    }

    /// Threshold of a check, honoring overrides.
    pub fn tol(&self, check: &str, default: f64) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(default)
    }
}
