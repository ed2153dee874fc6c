//! Experiment configuration documents.

use std::path::Path;

use serde::{Deserialize, Deserializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::{NoiseModel, PresetSpec};
use crate::kernel::{Feedback, KernelSpec};
use crate::policy::PolicyKind;

/// Named parameter generators accepted in place of an explicit vector.
pub const NAMED_THETAS: [&str; 1] = ["laser-truth"];

/// A full experiment description, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub policy: PolicyKind,
    pub horizon: usize,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Confidence parameter; `1 / horizon` when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Hidden parameter of linear and contextual games.
    #[serde(default)]
    pub theta: Option<ThetaSpec>,
    /// Overrides the game's default noise.
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub out_path: Option<String>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Vector(Vec<f64>),
    Named(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameSpec {
    Linear(PresetSpec),
    Contextual(ContextualSpec),
    Kernel(KernelGameSpec),
}

/// Contexts drawn i.i.d. from `nu` every round.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextualSpec {
    pub contexts: Vec<PresetSpec>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelGameSpec {
    pub kernel: KernelSpec,
    pub ground: Vec<Vec<f64>>,
    pub feedback: Feedback,
    pub truth: TruthSpec,
}

/// `f = sum_i weights_i k(., centers_i)`, rescaled to unit RKHS norm if
/// larger.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl<'de> Deserialize<'de> for GameSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = Value::deserialize(de)?;
        let single = value
            .as_object()
            .filter(|m| m.len() == 1)
            .and_then(|m| m.iter().next());
        match single {
            Some((k, inner)) if k == "contextual" => ContextualSpec::deserialize(inner.clone())
                .map(GameSpec::Contextual)
                .map_err(D::Error::custom),
            Some((k, inner)) if k == "kernel" => KernelGameSpec::deserialize(inner.clone())
                .map(GameSpec::Kernel)
                .map_err(D::Error::custom),
            _ => PresetSpec::deserialize(value)
                .map(GameSpec::Linear)
                .map_err(D::Error::custom),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if self.reps < 1 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::Config(format!("delta must lie in (0, 1], got {d}")));
            }
        }
        if let Some(noise) = self.noise {
            noise.validate()?;
        }
        match (&self.game, &self.theta) {
            (GameSpec::Kernel(_), Some(_)) => Err(Error::Config(
                "kernel games take their truth from the game spec, not theta".into(),
            )),
            (GameSpec::Linear(_) | GameSpec::Contextual(_), None) => {
                Err(Error::Config("theta is required".into()))
            }
            (_, Some(ThetaSpec::Named(name))) if !NAMED_THETAS.contains(&name.as_str()) => {
                Err(Error::Config(format!("unknown theta generator {name:?}")))
            }
            _ => Ok(()),
        }
    }

    /// The confidence parameter in effect.
    pub fn effective_delta(&self) -> f64 {
        self.delta.unwrap_or(1.0 / self.horizon as f64)
    }

    /// Same experiment at another horizon. An explicit delta is kept; the
    /// default follows the new horizon.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }
}
