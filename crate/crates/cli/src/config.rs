//! Plan configuration files (TOML).
//!
//! ```toml
//! seed = 2024
//! trials = 10000
//! eta = 1.0
//! t2 = ["inf", "1e10pi", "1e4pi"]
//! n_values = [16, 20, 24]          # optional, default 16..=124 step 4
//!
//! [output]
//! dir = "out/full_sweep"
//! format = "csv"                   # or "json"
//! plot = true
//!
//! [[strategies]]
//! name = "exp(9/8)"
//! kind = "exponential"
//! base = 1.125
//! ```
//!
//! Times are dimensionless (radians per unit frequency). `t2` entries are
//! numbers, `inf`, or a number followed by `pi`, e.g. `1e4pi`.

use std::fmt;
use std::path::PathBuf;

use qfreq_core::harness::{default_n_values, ExperimentPlan, StrategyBinding};
use qfreq_core::strategies::DEFAULT_WARMUP;
use qfreq_core::{DecayTime, EstimatorKind, StrategyKind};
use serde::{Deserialize, Serialize};

/// A configuration problem, reported with exit code 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parses `inf`, a plain number, or `<number>pi`.
pub fn parse_t2(text: &str) -> Result<DecayTime<f64>, ConfigError> {
    let s = text.trim().to_ascii_lowercase();
    if matches!(s.as_str(), "inf" | "infinity" | "+inf") {
        return Ok(DecayTime::Infinite);
    }
    let (number, scale) = match s.strip_suffix("pi") {
        Some("") => ("1", std::f64::consts::PI),
        Some(rest) => (rest.trim_end_matches('*').trim(), std::f64::consts::PI),
        None => (s.as_str(), 1.0),
    };
    let value: f64 = number.parse().map_err(|_| invalid(format!("t2: cannot parse {text:?}; use a number, `inf`, or e.g. `1e4pi`")))?;
    let t2 = value * scale;
    if t2.is_infinite() && t2 > 0.0 {
        return Ok(DecayTime::Infinite);
    }
    if !(t2 > 0.0) {
        return Err(invalid(format!("t2 must be positive, got {text:?}")));
    }
    Ok(DecayTime::Finite(t2))
}

/// A `T₂` entry as written: a bare number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum T2Spec {
    Number(f64),
    Text(String),
}

impl T2Spec {
    pub fn value(&self) -> Result<DecayTime<f64>, ConfigError> {
        match self {
            T2Spec::Number(x) => parse_t2(&x.to_string()),
            T2Spec::Text(s) => parse_t2(s),
        }
    }

    /// File-name-safe label, e.g. `inf`, `1e4pi`.
    pub fn label(&self) -> String {
        let raw = match self {
            T2Spec::Number(x) => x.to_string(),
            T2Spec::Text(s) => s.trim().to_ascii_lowercase(),
        };
        raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
    }
}

impl fmt::Display for T2Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            T2Spec::Number(x) => write!(f, "{x}"),
            T2Spec::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    Fixed,
    Linear,
    Exponential,
    Adaptive,
}

/// One `[[strategies]]` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: KindName,
    /// Exponential strategies only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    /// Adaptive strategies only; default 15.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorKind>,
}

impl StrategyConfig {
    pub fn binding(&self, index: usize) -> Result<StrategyBinding, ConfigError> {
        let at = |msg: String| invalid(format!("strategies[{index}]: {msg}"));
        if self.base.is_some() && self.kind != KindName::Exponential {
            return Err(at("`base` is only valid for kind = \"exponential\"".into()));
        }
        if self.warmup.is_some() && self.kind != KindName::Adaptive {
            return Err(at("`warmup` is only valid for kind = \"adaptive\"".into()));
        }
        let kind = match self.kind {
            KindName::Fixed => StrategyKind::Fixed,
            KindName::Linear => StrategyKind::LinearGrid,
            KindName::Exponential => StrategyKind::Exponential {
                base: self.base.ok_or_else(|| at("exponential strategy needs `base`".into()))?,
            },
            KindName::Adaptive => StrategyKind::AdaptiveGaussian { warmup: self.warmup.unwrap_or(DEFAULT_WARMUP) },
        };
        kind.validate().map_err(|e| at(e.to_string()))?;
        let estimator = self.estimator.unwrap_or(kind.default_estimator());
        kind.check_estimator(estimator).map_err(|e| at(e.to_string()))?;
        let name = self.name.clone().unwrap_or_else(|| kind.label());
        if name.is_empty() {
            return Err(at("name must not be empty".into()));
        }
        Ok(StrategyBinding { name, kind, estimator })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub plot: bool,
}

fn default_eta() -> f64 {
    1.0
}

fn default_t2() -> Vec<T2Spec> {
    vec![T2Spec::Text("inf".into())]
}

fn default_parallel() -> bool {
    true
}

/// Declarative form of an experiment: one risk table per `t2` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub seed: u64,
    pub trials: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_t2")]
    pub t2: Vec<T2Spec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    #[serde(default)]
    pub output: OutputConfig,
    pub strategies: Vec<StrategyConfig>,
}

impl PlanConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: PlanConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.t2.is_empty() {
            return Err(invalid("t2 must list at least one value"));
        }
        if self.strategies.is_empty() {
            return Err(invalid("at least one [[strategies]] entry is required"));
        }
        let bindings = self.bindings()?;
        for (i, b) in bindings.iter().enumerate() {
            if bindings[..i].iter().any(|o| o.name == b.name) {
                return Err(invalid(format!("duplicate strategy name {:?}", b.name)));
            }
        }
        for spec in &self.t2 {
            self.plan(spec)?;
        }
        Ok(())
    }

    pub fn bindings(&self) -> Result<Vec<StrategyBinding>, ConfigError> {
        self.strategies.iter().enumerate().map(|(i, s)| s.binding(i)).collect()
    }

    pub fn n_values(&self) -> Vec<usize> {
        self.n_values.clone().unwrap_or_else(default_n_values)
    }

    /// The harness plan for one `t2` entry.
    pub fn plan(&self, t2: &T2Spec) -> Result<ExperimentPlan, ConfigError> {
        let plan = ExperimentPlan {
            strategies: self.bindings()?,
            n_values: self.n_values(),
            trials: self.trials,
            eta: self.eta,
            t2: t2.value()?,
            seed: self.seed,
            parallel: self.parallel,
        };
        plan.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(plan)
    }
}
