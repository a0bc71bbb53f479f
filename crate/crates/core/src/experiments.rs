//! Seeded Monte-Carlo estimation of the misidentification probability over
//! budget grids, the figure presets, and CSV persistence.
//!
//! Run `r` of configuration `label` at budget `T` uses the seed
//! `mix(mix(mix(master, fnv1a(label)), T), r)` (see [`crate::rng`]), so every
//! grid point is independent of every other and of the worker count.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{
    run_gsr, sr_schedule, ue_schedule, BanditError, BanditInstance, GsrSettings, PhaseSchedule,
};
use crate::bounds::{nonoblivious_settings, GapProfile, MomentAssumption};
use crate::distributions::ArmDistribution;
use crate::risk::{
    ConfidenceLevel, RiskError, RiskObjective, TruncationSchedule, TruncationTarget,
};
use crate::rng::{fnv1a, Seed};

/// Exact CSV header.
pub const CSV_HEADER: &str = "label,algo,T,runs,errors,p_e,stderr,master_seed";
/// Header of the per-label plot-data files.
pub const PLOT_HEADER: &str = "T,p_e,stderr";
/// Desk-scale default number of runs per grid point.
pub const DEFAULT_RUNS: u64 = 2000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("duplicate configuration label `{0}`")]
    DuplicateLabel(String),
    #[error("budget grid must be strictly increasing and positive: {0:?}")]
    InvalidGrid(Vec<u64>),
    #[error("runs per point must be positive")]
    NoRuns,
    #[error("configuration `{label}`: {source}")]
    Truncation {
        label: String,
        #[source]
        source: RiskError,
    },
    #[error("configuration `{label}` at T={budget}: {source}")]
    Infeasible {
        label: String,
        budget: u64,
        #[source]
        source: BanditError,
    },
    #[error("malformed results file {path}: {reason}")]
    MalformedCsv { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    /// Uniform exploration.
    Ue,
    /// Successive rejects.
    Sr,
}

impl AlgorithmKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ue => "ue",
            Self::Sr => "sr",
        }
    }

    pub fn schedule(self, arms: usize, budget: u64) -> Result<PhaseSchedule, BanditError> {
        match self {
            Self::Ue => ue_schedule(arms, budget),
            Self::Sr => sr_schedule(arms, budget),
        }
    }
}

impl std::str::FromStr for AlgorithmKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ue" => Ok(Self::Ue),
            "sr" => Ok(Self::Sr),
            other => Err(format!("unknown algorithm `{other}`; expected ue or sr")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub label: String,
    pub kind: AlgorithmKind,
    pub mean_truncation: TruncationSchedule,
    pub cvar_truncation: TruncationSchedule,
}

impl AlgorithmConfig {
    pub fn new(
        label: impl Into<String>,
        kind: AlgorithmKind,
        mean_truncation: TruncationSchedule,
        cvar_truncation: TruncationSchedule,
    ) -> Self {
        Self {
            label: label.into(),
            kind,
            mean_truncation,
            cvar_truncation,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let wrap = |source| ExperimentError::Truncation {
            label: self.label.clone(),
            source,
        };
        self.mean_truncation
            .validate_for(TruncationTarget::Mean)
            .map_err(wrap)?;
        self.cvar_truncation
            .validate_for(TruncationTarget::Cvar)
            .map_err(wrap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub instance: BanditInstance,
    pub configs: Vec<AlgorithmConfig>,
    pub t_grid: Vec<u64>,
    pub runs: u64,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn new(
        instance: BanditInstance,
        configs: Vec<AlgorithmConfig>,
        t_grid: Vec<u64>,
        runs: u64,
        master_seed: u64,
    ) -> Result<Self, ExperimentError> {
        let mut seen = HashSet::new();
        for c in &configs {
            if !seen.insert(c.label.as_str()) {
                return Err(ExperimentError::DuplicateLabel(c.label.clone()));
            }
            c.validate()?;
        }
        if t_grid.first().is_some_and(|&t| t == 0) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::InvalidGrid(t_grid));
        }
        if runs == 0 {
            return Err(ExperimentError::NoRuns);
        }
        Ok(Self {
            instance,
            configs,
            t_grid,
            runs,
            master_seed,
        })
    }

    pub fn with_runs(mut self, runs: u64) -> Result<Self, ExperimentError> {
        if runs == 0 {
            return Err(ExperimentError::NoRuns);
        }
        self.runs = runs;
        Ok(self)
    }

    pub fn with_grid(self, t_grid: Vec<u64>) -> Result<Self, ExperimentError> {
        Self::new(
            self.instance,
            self.configs,
            t_grid,
            self.runs,
            self.master_seed,
        )
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// Every (config, T) pair that cannot run, with the reason.
    pub fn infeasible_points(&self) -> Vec<ExperimentError> {
        self.configs
            .iter()
            .flat_map(|c| self.t_grid.iter().map(move |&t| (c, t)))
            .filter_map(|(c, t)| check_feasible(&self.instance, c, t).err())
            .collect()
    }
}

/// Misidentification count at one (config, T).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub label: String,
    pub algo: String,
    pub budget: u64,
    pub runs: u64,
    pub errors: u64,
    pub master_seed: u64,
}

impl ErrorPoint {
    pub fn p_e(&self) -> f64 {
        self.errors as f64 / self.runs as f64
    }

    /// `√(p̂(1−p̂)/runs)`.
    pub fn stderr(&self) -> f64 {
        let p = self.p_e();
        (p * (1.0 - p) / self.runs as f64).sqrt()
    }
}

/// `√(se_a² + se_b²)`, for comparing two independent estimates.
pub fn combined_stderr(a: &ErrorPoint, b: &ErrorPoint) -> f64 {
    (a.stderr().powi(2) + b.stderr().powi(2)).sqrt()
}

/// Seed of run `run` for `label` at budget `budget`.
pub fn run_seed(master: u64, label: &str, budget: u64, run: u64) -> Seed {
    Seed::new(master)
        .derive(fnv1a(label.as_bytes()))
        .derive(budget)
        .derive(run)
}

fn check_feasible(
    instance: &BanditInstance,
    config: &AlgorithmConfig,
    budget: u64,
) -> Result<PhaseSchedule, ExperimentError> {
    let infeasible = |source| ExperimentError::Infeasible {
        label: config.label.clone(),
        budget,
        source,
    };
    let schedule = config
        .kind
        .schedule(instance.num_arms(), budget)
        .map_err(infeasible)?;
    let objective = instance.objective();
    let needed = if objective.uses_cvar() {
        objective.alpha.min_samples() as u64
    } else {
        1
    };
    if schedule.counts()[0] < needed {
        return Err(infeasible(BanditError::InsufficientPhaseBudget {
            needed,
            got: schedule.counts()[0],
        }));
    }
    Ok(schedule)
}

/// Run `runs` seeded GSR executions and count selections that differ from
/// the true optimal arm. Feasibility is checked before any run starts.
pub fn estimate_error_probability(
    instance: &BanditInstance,
    config: &AlgorithmConfig,
    budget: u64,
    runs: u64,
    master_seed: u64,
) -> Result<ErrorPoint, ExperimentError> {
    config.validate()?;
    let schedule = check_feasible(instance, config, budget)?;
    let settings = GsrSettings {
        schedule: &schedule,
        mean_truncation: config.mean_truncation,
        cvar_truncation: config.cvar_truncation,
    };
    let best = instance.optimal_arm();
    let errors = (0..runs)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(master_seed, &config.label, budget, r);
            run_gsr(instance, &settings, seed).map(|t| u64::from(t.selected != best))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
        .map_err(|source| ExperimentError::Infeasible {
            label: config.label.clone(),
            budget,
            source,
        })?;
    Ok(ErrorPoint {
        label: config.label.clone(),
        algo: config.kind.as_str().to_string(),
        budget,
        runs,
        errors,
        master_seed,
    })
}

/// Outcome of a sweep: computed points plus the grid points that could not run.
#[derive(Debug, Default)]
pub struct SweepResult {
    pub points: Vec<ErrorPoint>,
    pub infeasible: Vec<ExperimentError>,
}

/// Evaluate the whole grid. Points already present in `done` (same label, T,
/// runs and master seed) are reused instead of recomputed.
pub fn sweep_resuming(spec: &ExperimentSpec, done: &[ErrorPoint]) -> SweepResult {
    let mut result = SweepResult::default();
    for config in &spec.configs {
        for &t in &spec.t_grid {
            let cached = done.iter().find(|p| {
                p.label == config.label
                    && p.budget == t
                    && p.runs == spec.runs
                    && p.master_seed == spec.master_seed
            });
            if let Some(p) = cached {
                result.points.push(p.clone());
                continue;
            }
            match estimate_error_probability(&spec.instance, config, t, spec.runs, spec.master_seed)
            {
                Ok(p) => result.points.push(p),
                Err(e) => result.infeasible.push(e),
            }
        }
    }
    result
}

pub fn sweep(spec: &ExperimentSpec) -> SweepResult {
    sweep_resuming(spec, &[])
}

/// Run `f` on a dedicated pool of `workers` threads (`None`: rayon default).
pub fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    match workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| ExperimentError::Pool(e.to_string())),
    }
}

/// A real with at most 10 significant digits, `.` as decimal separator.
pub fn format_real(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn csv_row(p: &ErrorPoint) -> [String; 8] {
    [
        p.label.clone(),
        p.algo.clone(),
        p.budget.to_string(),
        p.runs.to_string(),
        p.errors.to_string(),
        format_real(p.p_e()),
        format_real(p.stderr()),
        p.master_seed.to_string(),
    ]
}

/// Serialize points under [`CSV_HEADER`] with LF line endings.
pub fn write_csv<W: Write>(out: W, points: &[ErrorPoint]) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    w.write_record(&header).map_err(csv_io)?;
    for p in points {
        w.write_record(csv_row(p)).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> ExperimentError {
    ExperimentError::Io(io::Error::other(e))
}

pub fn csv_string(points: &[ErrorPoint]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, points).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Read points back from a results CSV.
pub fn read_csv(path: &Path) -> Result<Vec<ErrorPoint>, ExperimentError> {
    let malformed = |reason: String| ExperimentError::MalformedCsv {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let header = r.headers().map_err(|e| malformed(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(malformed(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let int = |i: usize| -> Result<u64, ExperimentError> {
            rec[i].parse().map_err(|_| {
                malformed(format!(
                    "row {}: column {} is not an integer",
                    line + 2,
                    i + 1
                ))
            })
        };
        let point = ErrorPoint {
            label: rec[0].to_string(),
            algo: rec[1].to_string(),
            budget: int(2)?,
            runs: int(3)?,
            errors: int(4)?,
            master_seed: int(7)?,
        };
        if point.errors > point.runs || point.runs == 0 {
            return Err(malformed(format!("row {}: errors exceed runs", line + 2)));
        }
        points.push(point);
    }
    Ok(points)
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// `T,p_e,stderr` rows for one label.
pub fn plot_data(points: &[ErrorPoint], label: &str) -> String {
    let mut s = format!("{PLOT_HEADER}\n");
    for p in points.iter().filter(|p| p.label == label) {
        s.push_str(&format!(
            "{},{},{}\n",
            p.budget,
            format_real(p.p_e()),
            format_real(p.stderr())
        ));
    }
    s
}

/// Path of the plot-data companion of `csv_path` for `label`.
pub fn plot_path(csv_path: &Path, label: &str) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    csv_path.with_file_name(format!("{stem}.{}.plot.csv", file_safe(label)))
}

/// Write the results CSV (atomically, through a sibling temp file) and one
/// plot-data file per label.
pub fn persist(csv_path: &Path, points: &[ErrorPoint]) -> Result<Vec<PathBuf>, ExperimentError> {
    let tmp = csv_path.with_extension("csv.partial");
    {
        let file = fs::File::create(&tmp)?;
        write_csv(io::BufWriter::new(file), points)?;
    }
    fs::rename(&tmp, csv_path)?;
    let mut labels: Vec<&str> = Vec::new();
    for p in points {
        if !labels.contains(&p.label.as_str()) {
            labels.push(&p.label);
        }
    }
    let mut written = vec![csv_path.to_path_buf()];
    for label in labels {
        let path = plot_path(csv_path, label);
        fs::write(&path, plot_data(points, label))?;
        written.push(path);
    }
    Ok(written)
}

/// Group points by label, each sorted by T.
pub fn curves(points: &[ErrorPoint]) -> BTreeMap<String, Vec<ErrorPoint>> {
    let mut map: BTreeMap<String, Vec<ErrorPoint>> = BTreeMap::new();
    for p in points {
        map.entry(p.label.clone()).or_default().push(p.clone());
    }
    for v in map.values_mut() {
        v.sort_by_key(|p| p.budget);
    }
    map
}

// ---------------------------------------------------------------------------
// Presets

/// Confidence level of the first preset.
pub const FIG1_ALPHA: f64 = 0.95;
/// Moment assumption handed to the non-oblivious comparators of the first preset.
pub const FIG1_P: f64 = 2.0;
pub const FIG1_B: f64 = 2.0;
/// Mean gap the non-oblivious mean comparator is told.
pub const FIG1_MEAN_GAP: f64 = 0.1;
/// CVaR gap the non-oblivious CVaR comparator is told.
pub const FIG1_CVAR_GAP: f64 = 0.25;
/// Oblivious growth exponents.
pub const FIG1_Q_MEAN: f64 = 0.75;
pub const FIG1_Q_CVAR: f64 = 0.45;
/// Default budget grid for both presets' first figure.
pub const FIG1_GRID: [u64; 4] = [500, 1500, 5000, 15000];
pub const PRESET_SEED: u64 = 20_200_806;

/// Arm 1 Pareto(3) with mean 0.9, arms 2–5 Pareto(3) with mean 1, arms 6–10
/// exponential with mean 1.
pub fn fig1_arms() -> Vec<ArmDistribution> {
    let mut arms = vec![ArmDistribution::pareto_with_mean(3.0, 0.9).expect("valid")];
    arms.extend((0..4).map(|_| ArmDistribution::pareto_with_mean(3.0, 1.0).expect("valid")));
    arms.extend((0..5).map(|_| ArmDistribution::exponential(1.0).expect("valid")));
    arms
}

fn fig1_alpha() -> ConfidenceLevel {
    ConfidenceLevel::new(FIG1_ALPHA).expect("valid")
}

/// Static CVaR truncation of the non-oblivious comparator in the first
/// preset: `(4B/(Δ[2]β))^{1/(p−1)}`.
pub fn fig1_nonoblivious_cvar_level() -> f64 {
    (4.0 * FIG1_B / (FIG1_CVAR_GAP * fig1_alpha().beta())).powf(1.0 / (FIG1_P - 1.0))
}

/// Mean-minimization half of the first preset.
pub fn preset_fig1_mean() -> ExperimentSpec {
    let objective = RiskObjective::mean(fig1_alpha());
    let instance = BanditInstance::new(fig1_arms(), objective).expect("valid preset");
    let assumption = MomentAssumption::new(FIG1_P, FIG1_B).expect("valid");
    let told = GapProfile::new(vec![FIG1_MEAN_GAP]).expect("valid");
    let b_mean = nonoblivious_settings(&objective, &told, &assumption)
        .b_mean
        .expect("mean weight is positive");
    let configs = vec![
        AlgorithmConfig::new(
            "mean-oblivious",
            AlgorithmKind::Sr,
            TruncationSchedule::Growth { q: FIG1_Q_MEAN },
            TruncationSchedule::None,
        ),
        AlgorithmConfig::new(
            "mean-nonoblivious",
            AlgorithmKind::Sr,
            TruncationSchedule::Fixed { b: b_mean },
            TruncationSchedule::None,
        ),
    ];
    ExperimentSpec::new(
        instance,
        configs,
        FIG1_GRID.to_vec(),
        DEFAULT_RUNS,
        PRESET_SEED,
    )
    .expect("valid preset")
}

/// CVaR-minimization half of the first preset.
pub fn preset_fig1_cvar() -> ExperimentSpec {
    let objective = RiskObjective::cvar(fig1_alpha());
    let instance = BanditInstance::new(fig1_arms(), objective).expect("valid preset");
    let configs = vec![
        AlgorithmConfig::new(
            "cvar-oblivious",
            AlgorithmKind::Sr,
            TruncationSchedule::None,
            TruncationSchedule::Growth { q: FIG1_Q_CVAR },
        ),
        AlgorithmConfig::new(
            "cvar-nonoblivious",
            AlgorithmKind::Sr,
            TruncationSchedule::None,
            TruncationSchedule::Fixed {
                b: fig1_nonoblivious_cvar_level(),
            },
        ),
    ];
    ExperimentSpec::new(
        instance,
        configs,
        FIG1_GRID.to_vec(),
        DEFAULT_RUNS,
        PRESET_SEED,
    )
    .expect("valid preset")
}

/// Both halves of the first preset: mean family, then CVaR family.
pub fn preset_fig1() -> [ExperimentSpec; 2] {
    [preset_fig1_mean(), preset_fig1_cvar()]
}

/// Moment assumption for the non-oblivious comparator of the heavy-tail
/// preset; `p` must stay below the Pareto shape 1.9.
pub const FIG3_P: f64 = 1.5;
pub const FIG3_B: f64 = 2.0;
pub const FIG3_GAP: f64 = 0.1;
pub const FIG3_Q_MEANS: [f64; 3] = [0.4, 0.5, 0.7];
pub const FIG3_GRID: [u64; 6] = [100, 300, 1000, 3000, 10000, 30000];

/// Arm 1 Pareto(1.9) with mean 1.0, arm 2 exponential with mean 0.9.
pub fn fig3_arms() -> Vec<ArmDistribution> {
    vec![
        ArmDistribution::pareto_with_mean(1.9, 1.0).expect("valid"),
        ArmDistribution::exponential(0.9).expect("valid"),
    ]
}

pub fn fig3_label(q: f64) -> String {
    format!("mean-oblivious-q{q}")
}

pub const FIG3_NONOBLIVIOUS_LABEL: &str = "mean-nonoblivious";

pub fn preset_fig3() -> ExperimentSpec {
    let objective = RiskObjective::mean(ConfidenceLevel::new(FIG1_ALPHA).expect("valid"));
    let instance = BanditInstance::new(fig3_arms(), objective).expect("valid preset");
    let assumption = MomentAssumption::new(FIG3_P, FIG3_B).expect("valid");
    let told = GapProfile::new(vec![FIG3_GAP]).expect("valid");
    let b_mean = nonoblivious_settings(&objective, &told, &assumption)
        .b_mean
        .expect("mean weight is positive");
    let mut configs: Vec<AlgorithmConfig> = FIG3_Q_MEANS
        .iter()
        .map(|&q| {
            AlgorithmConfig::new(
                fig3_label(q),
                AlgorithmKind::Sr,
                TruncationSchedule::Growth { q },
                TruncationSchedule::None,
            )
        })
        .collect();
    configs.push(AlgorithmConfig::new(
        FIG3_NONOBLIVIOUS_LABEL,
        AlgorithmKind::Sr,
        TruncationSchedule::Fixed { b: b_mean },
        TruncationSchedule::None,
    ));
    ExperimentSpec::new(
        instance,
        configs,
        FIG3_GRID.to_vec(),
        DEFAULT_RUNS,
        PRESET_SEED,
    )
    .expect("valid preset")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_constants() -> BanditInstance {
        BanditInstance::new(
            vec![
                ArmDistribution::constant(1.0).unwrap(),
                ArmDistribution::constant(0.5).unwrap(),
            ],
            RiskObjective::mean(ConfidenceLevel::new(0.9).unwrap()),
        )
        .unwrap()
    }

    fn plain(label: &str) -> AlgorithmConfig {
        AlgorithmConfig::new(
            label,
            AlgorithmKind::Sr,
            TruncationSchedule::None,
            TruncationSchedule::None,
        )
    }

    #[test]
    fn constant_arms_never_err() {
        let p = estimate_error_probability(&two_constants(), &plain("c"), 4, 100, 1).unwrap();
        assert_eq!(p.errors, 0);
        assert_eq!(p.p_e(), 0.0);
        assert_eq!(p.stderr(), 0.0);
    }

    #[test]
    fn infeasible_detected_before_running() {
        let spec =
            ExperimentSpec::new(two_constants(), vec![plain("c")], vec![1, 2, 10], 5, 0).unwrap();
        assert_eq!(spec.infeasible_points().len(), 2);
        let r = sweep(&spec);
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.infeasible.len(), 2);
    }

    #[test]
    fn spec_validation() {
        let inst = two_constants();
        assert!(matches!(
            ExperimentSpec::new(inst.clone(), vec![plain("a"), plain("a")], vec![10], 5, 0),
            Err(ExperimentError::DuplicateLabel(_))
        ));
        assert!(ExperimentSpec::new(inst.clone(), vec![plain("a")], vec![10, 10], 5, 0).is_err());
        assert!(ExperimentSpec::new(inst.clone(), vec![plain("a")], vec![10], 0, 0).is_err());
        let bad = AlgorithmConfig::new(
            "x",
            AlgorithmKind::Sr,
            TruncationSchedule::None,
            TruncationSchedule::Growth { q: 0.6 },
        );
        assert!(ExperimentSpec::new(inst, vec![bad], vec![10], 5, 0).is_err());
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let spec = ExperimentSpec::new(two_constants(), vec![plain("c")], vec![], 5, 0).unwrap();
        let r = sweep(&spec);
        assert!(r.points.is_empty());
        assert_eq!(csv_string(&r.points), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn cardinality() {
        let spec = ExperimentSpec::new(
            two_constants(),
            vec![plain("a"), plain("b")],
            vec![4, 8, 16],
            3,
            0,
        )
        .unwrap();
        let r = sweep(&spec);
        assert_eq!(r.points.len(), 6);
        assert_eq!(csv_string(&r.points).lines().count(), 7);
    }

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(1.0 / 3.0), "0.3333333333");
        assert_eq!(format_real(2.0 / 3.0), "0.6666666667");
        assert_eq!(format_real(1234.5), "1234.5");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let points = vec![
            ErrorPoint {
                label: "x".into(),
                algo: "sr".into(),
                budget: 500,
                runs: 2000,
                errors: 37,
                master_seed: 9,
            },
            ErrorPoint {
                label: "y".into(),
                algo: "ue".into(),
                budget: 1500,
                runs: 2000,
                errors: 0,
                master_seed: 9,
            },
        ];
        let written = persist(&path, &points).unwrap();
        assert_eq!(written.len(), 3);
        assert_eq!(read_csv(&path).unwrap(), points);
        let plot = fs::read_to_string(plot_path(&path, "x")).unwrap();
        assert_eq!(plot, "T,p_e,stderr\n500,0.0185,0.003013117157\n");
    }

    #[test]
    fn stderr_formula() {
        let p = ErrorPoint {
            label: "l".into(),
            algo: "sr".into(),
            budget: 1,
            runs: 400,
            errors: 100,
            master_seed: 0,
        };
        assert_abs_diff_eq!(p.stderr(), (0.25f64 * 0.75 / 400.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn preset_shapes() {
        let [mean, cvar] = preset_fig1();
        assert_eq!(mean.instance.num_arms(), 10);
        assert_eq!(mean.instance.optimal_arm(), 0);
        assert_eq!(cvar.instance.optimal_arm(), 0);
        assert_abs_diff_eq!(fig1_nonoblivious_cvar_level(), 640.0, epsilon = 1e-9);
        assert_eq!(
            mean.configs[1].mean_truncation,
            TruncationSchedule::Fixed { b: 240.0 }
        );
        let fig3 = preset_fig3();
        assert_eq!(fig3.instance.optimal_arm(), 1);
        match fig3.instance.arms()[0] {
            ArmDistribution::Pareto { shape, scale } => {
                assert_eq!(shape, 1.9);
                assert_abs_diff_eq!(scale, 0.9 / 1.9, epsilon = 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(fig3.instance.arms()[0].moment_bound(1.89).is_finite());
        assert!(fig3.instance.arms()[0].moment_bound(1.9).is_infinite());
    }
}
