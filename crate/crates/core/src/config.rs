//! TOML configuration documents for custom instances and sweeps.
//!
//! ```toml
//! arms = ["pareto(shape=3,scale=0.6)", "exp(mean=1)"]
//!
//! [objective]
//! xi1 = 0.0
//! xi2 = 1.0
//! alpha = 0.95
//!
//! [[algorithm]]
//! label = "oblivious"
//! kind = "sr"
//! trunc_mean = "none"
//! trunc_cvar = "grow:0.45"
//!
//! [experiment]
//! t_grid = [500, 1500]
//! runs = 2000
//! seed = 7
//! ```
//!
//! Parsing never panics; every problem is reported with the line and column
//! of the offending value (when known) and the field it belongs to.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::bandit::BanditInstance;
use crate::distributions::ArmDistribution;
use crate::experiments::{
    AlgorithmConfig, AlgorithmKind, ExperimentError, ExperimentSpec, DEFAULT_RUNS,
};
use crate::risk::{ConfidenceLevel, RiskObjective, TruncationSchedule, TruncationTarget};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based (line, column) of the offending text.
    pub position: Option<(usize, usize)>,
    /// Dotted path of the field, e.g. `algorithm[1].trunc_cvar`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((line, col)) = self.position {
            write!(f, "line {line}, column {col}: ")?;
        }
        if !self.field.is_empty() {
            write!(f, "{}: ", self.field)?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, col)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    arms: Vec<Spanned<String>>,
    objective: RawObjective,
    #[serde(default)]
    algorithm: Vec<RawAlgorithm>,
    experiment: Option<RawExperiment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    xi1: Spanned<f64>,
    xi2: Spanned<f64>,
    alpha: Spanned<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    label: Spanned<String>,
    kind: Spanned<String>,
    trunc_mean: Option<Spanned<String>>,
    trunc_cvar: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    t_grid: Spanned<Vec<u64>>,
    runs: Option<Spanned<u64>>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveBlock {
    pub xi1: f64,
    pub xi2: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmBlock {
    pub label: String,
    pub kind: AlgorithmKind,
    pub trunc_mean: TruncationSchedule,
    pub trunc_cvar: TruncationSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentBlock {
    pub t_grid: Vec<u64>,
    pub runs: u64,
    pub seed: u64,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigDocument {
    pub arms: Vec<ArmDistribution>,
    pub objective: ObjectiveBlock,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgorithmBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentBlock>,
}

struct Collector<'a> {
    text: &'a str,
    errors: Vec<ConfigError>,
}

impl Collector<'_> {
    fn push(
        &mut self,
        span: Option<Range<usize>>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.errors.push(ConfigError {
            position: span.map(|s| line_col(self.text, s.start)),
            field: field.into(),
            message: message.into(),
        });
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<ConfigDocument, Vec<ConfigError>> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| {
        vec![ConfigError {
            position: e.span().map(|s| line_col(text, s.start)),
            field: String::new(),
            message: e.message().trim().to_string(),
        }]
    })?;
    let mut c = Collector {
        text,
        errors: Vec::new(),
    };

    let mut arms = Vec::new();
    for (i, lit) in raw.arms.iter().enumerate() {
        match lit.get_ref().parse::<ArmDistribution>() {
            Ok(d) => arms.push(d),
            Err(e) => c.push(Some(lit.span()), format!("arms[{i}]"), e.to_string()),
        }
    }
    if raw.arms.len() < 2 {
        c.push(
            None,
            "arms",
            format!("need at least 2 arms, got {}", raw.arms.len()),
        );
    }

    let o = &raw.objective;
    let alpha = match ConfidenceLevel::new(*o.alpha.get_ref()) {
        Ok(a) => Some(a),
        Err(_) => {
            c.push(
                Some(o.alpha.span()),
                "objective.alpha",
                format!("alpha must lie in (0,1), got {}", o.alpha.get_ref()),
            );
            None
        }
    };
    let (xi1, xi2) = (*o.xi1.get_ref(), *o.xi2.get_ref());
    for (name, v, span) in [("xi1", xi1, o.xi1.span()), ("xi2", xi2, o.xi2.span())] {
        if !(v >= 0.0 && v.is_finite()) {
            c.push(
                Some(span),
                format!("objective.{name}"),
                format!("weight must be nonnegative, got {v}"),
            );
        }
    }
    if xi1 >= 0.0 && xi2 >= 0.0 && xi1 + xi2 <= 0.0 {
        c.push(
            Some(o.xi1.span()),
            "objective",
            "xi1 + xi2 must be positive",
        );
    }

    let mut algorithms = Vec::new();
    let mut labels = HashSet::new();
    for (i, a) in raw.algorithm.iter().enumerate() {
        let field = |name: &str| format!("algorithm[{i}].{name}");
        if !labels.insert(a.label.get_ref().clone()) {
            c.push(
                Some(a.label.span()),
                field("label"),
                format!("duplicate label `{}`", a.label.get_ref()),
            );
        }
        if a.label.get_ref().is_empty() {
            c.push(
                Some(a.label.span()),
                field("label"),
                "label must not be empty",
            );
        }
        let kind = a
            .kind
            .get_ref()
            .parse::<AlgorithmKind>()
            .map_err(|e| c.push(Some(a.kind.span()), field("kind"), e))
            .ok();
        let mut trunc = |raw: &Option<Spanned<String>>, name: &str, target| {
            let Some(s) = raw else {
                return Some(TruncationSchedule::None);
            };
            match s.get_ref().parse::<TruncationSchedule>() {
                Ok(t) => match t.validate_for(target) {
                    Ok(()) => Some(t),
                    Err(e) => {
                        c.push(Some(s.span()), field(name), e.to_string());
                        None
                    }
                },
                Err(e) => {
                    c.push(Some(s.span()), field(name), e.to_string());
                    None
                }
            }
        };
        let mean = trunc(&a.trunc_mean, "trunc_mean", TruncationTarget::Mean);
        let cvar = trunc(&a.trunc_cvar, "trunc_cvar", TruncationTarget::Cvar);
        if let (Some(kind), Some(trunc_mean), Some(trunc_cvar)) = (kind, mean, cvar) {
            algorithms.push(AlgorithmBlock {
                label: a.label.get_ref().clone(),
                kind,
                trunc_mean,
                trunc_cvar,
            });
        }
    }

    let experiment = raw.experiment.as_ref().map(|e| {
        let grid = e.t_grid.get_ref();
        if grid.first() == Some(&0) || grid.windows(2).any(|w| w[0] >= w[1]) {
            c.push(
                Some(e.t_grid.span()),
                "experiment.t_grid",
                "budgets must be positive and strictly increasing",
            );
        }
        let runs = e.runs.as_ref().map_or(DEFAULT_RUNS, |r| *r.get_ref());
        if runs == 0 {
            c.push(
                e.runs.as_ref().map(|r| r.span()),
                "experiment.runs",
                "runs must be positive",
            );
        }
        ExperimentBlock {
            t_grid: grid.clone(),
            runs,
            seed: e.seed.unwrap_or(0),
        }
    });

    if c.errors.is_empty() {
        let alpha = alpha.expect("checked above");
        let objective = RiskObjective::new(xi1, xi2, alpha).expect("checked above");
        if let Err(e) = BanditInstance::new(arms.clone(), objective) {
            c.push(None, "arms", e.to_string());
        }
    }

    if c.errors.is_empty() {
        Ok(ConfigDocument {
            arms,
            objective: ObjectiveBlock {
                xi1,
                xi2,
                alpha: *o.alpha.get_ref(),
            },
            algorithms,
            experiment,
        })
    } else {
        Err(c.errors)
    }
}

impl ConfigDocument {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config document serializes")
    }

    pub fn risk_objective(&self) -> RiskObjective {
        RiskObjective::new(
            self.objective.xi1,
            self.objective.xi2,
            ConfidenceLevel::new(self.objective.alpha).expect("validated"),
        )
        .expect("validated")
    }

    pub fn instance(&self) -> BanditInstance {
        BanditInstance::new(self.arms.clone(), self.risk_objective()).expect("validated")
    }

    pub fn algorithm_configs(&self) -> Vec<AlgorithmConfig> {
        self.algorithms
            .iter()
            .map(|a| AlgorithmConfig::new(a.label.clone(), a.kind, a.trunc_mean, a.trunc_cvar))
            .collect()
    }

    /// The sweep described by the document; `seed_override` replaces the
    /// experiment seed.
    pub fn experiment_spec(
        &self,
        seed_override: Option<u64>,
    ) -> Result<ExperimentSpec, ConfigError> {
        let block = self.experiment.as_ref().ok_or_else(|| ConfigError {
            position: None,
            field: "experiment".into(),
            message: "missing [experiment] block".into(),
        })?;
        if self.algorithms.is_empty() {
            return Err(ConfigError {
                position: None,
                field: "algorithm".into(),
                message: "at least one [[algorithm]] block is required".into(),
            });
        }
        ExperimentSpec::new(
            self.instance(),
            self.algorithm_configs(),
            block.t_grid.clone(),
            block.runs,
            seed_override.unwrap_or(block.seed),
        )
        .map_err(|e: ExperimentError| ConfigError {
            position: None,
            field: "experiment".into(),
            message: e.to_string(),
        })
    }
}
