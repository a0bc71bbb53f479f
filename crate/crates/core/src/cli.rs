//! The `riskbandit` command line.
//!
//! Exit status: 0 on success, 1 on a user error (bad flags, bad input,
//! infeasible request), 2 on an internal error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bandit::{run_gsr, BanditInstance, GsrSettings, RunTrace};
use crate::bounds::{
    is_vacuous, min_truncation_terms, nonoblivious_settings, oblivious_cvar_dev_bound,
    oblivious_mean_dev_bound, sr_error_bound, thm1_bounded_cvar_bound, thm2_ht_cvar_bound,
    truncated_mean_dev_bound, ue_error_bound, var_magnitude_bound, GapProfile, Magnitude,
    MomentAssumption,
};
use crate::config::{parse_config, ConfigDocument};
use crate::experiments::{
    combined_stderr, curves, persist, preset_fig1, preset_fig3, read_csv, sweep_resuming,
    with_workers, AlgorithmKind, ErrorPoint, ExperimentSpec,
};
use crate::risk::{
    empirical_var, scheduled_cvar, scheduled_mean, truncate_clamp, ConfidenceLevel, RiskObjective,
    TruncationSchedule,
};
use crate::rng::Seed;

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "RISKBANDIT_SEED";

#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    fn user(msg: impl std::fmt::Display) -> Self {
        Self::User(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::User(_) => 1,
            Self::Internal(_) => 2,
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "riskbandit",
    version,
    about = "Risk-aware best-arm identification with truncated estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate mean, VaR, CVaR and the objective from newline-delimited numbers.
    Estimate(EstimateArgs),
    /// Evaluate a concentration or error-probability bound.
    Bound(BoundArgs),
    /// Run one GSR execution on a configured instance and print its trace.
    Run(RunArgs),
    /// Estimate error probabilities over a budget grid from a config file.
    Sweep(SweepArgs),
    /// Run a built-in experiment preset.
    Preset(PresetArgs),
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Input file; reads standard input when omitted or `-`.
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    xi1: f64,
    #[arg(long, default_value_t = 1.0)]
    xi2: f64,
    /// Truncation applied to both estimators: none | fixed:<b> | grow:<q>.
    #[arg(long, default_value = "none")]
    trunc: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundKind {
    /// Bounded-support CVaR concentration.
    Thm1,
    /// Heavy-tailed truncated CVaR concentration.
    Thm2,
    /// Minimum truncation level for the heavy-tailed CVaR bound.
    MinTrunc,
    /// Upper bound on |VaR| from the moment assumption.
    VarMag,
    /// Uniform-exploration error probability.
    Ue,
    /// Successive-rejects error probability.
    Sr,
    /// Oblivious truncated-mean deviation.
    OblMean,
    /// Oblivious truncated-CVaR deviation.
    OblCvar,
    /// High-probability radius of the truncated mean.
    TruncMean,
    /// Static truncation levels for a non-oblivious algorithm.
    Nonobl,
}

#[derive(Debug, Args)]
struct BoundArgs {
    kind: BoundKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Truncation level.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Deviation or gap.
    #[arg(long)]
    delta: Option<f64>,
    /// Moment order of the assumption E|X|^p <= B.
    #[arg(long)]
    p: Option<f64>,
    /// Moment bound of the assumption E|X|^p <= B.
    #[arg(long = "B")]
    moment: Option<f64>,
    /// Known |VaR|; defaults to the moment-based bound.
    #[arg(long)]
    v_abs: Option<f64>,
    #[arg(long = "T")]
    budget: Option<u64>,
    #[arg(long = "K")]
    arms: Option<usize>,
    /// Comma-separated gaps Δ[2] <= ... <= Δ[K].
    #[arg(long, value_delimiter = ',')]
    gaps: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    xi1: f64,
    #[arg(long, default_value_t = 1.0)]
    xi2: f64,
    #[arg(long)]
    q_m: Option<f64>,
    #[arg(long)]
    q_c: Option<f64>,
    /// Growth exponent of a truncation schedule.
    #[arg(long)]
    q: Option<f64>,
    /// Failure probability of a high-probability radius.
    #[arg(long)]
    conf_delta: Option<f64>,
    /// Print CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "sr")]
    algo: AlgoArg,
    #[arg(long = "T")]
    budget: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    xi1: Option<f64>,
    #[arg(long)]
    xi2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value = "none")]
    trunc_mean: String,
    #[arg(long, default_value = "none")]
    trunc_cvar: String,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Ue,
    Sr,
}

impl From<AlgoArg> for AlgorithmKind {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Ue => Self::Ue,
            AlgoArg::Sr => Self::Sr,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Results CSV path; plot-data files are written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated budget grid overriding the default.
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<u64>>,
    /// Reuse rows already present in --out.
    #[arg(long)]
    resume: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetName {
    Fig1,
    Fig3,
}

#[derive(Debug, Args)]
struct PresetArgs {
    name: PresetName,
    #[command(flatten)]
    output: OutputArgs,
}

/// Parse `argv` (including the program name), run, and return the exit status.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = panic::catch_unwind(AssertUnwindSafe(|| execute(cli, out)));
    let outcome = result.unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(CliError::Internal(msg))
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::User(m) => ("error", m),
                CliError::Internal(m) => ("internal error", m),
            };
            let _ = writeln!(err, "{kind}: {msg}");
            e.exit_code()
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    dispatch(argv, &mut stdout.lock(), &mut stderr.lock())
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Estimate(a) => estimate(a, out),
        Command::Bound(a) => bound(a, out),
        Command::Run(a) => run(a, out),
        Command::Sweep(a) => sweep_cmd(a, out),
        Command::Preset(a) => preset(a, out),
    }
}

fn io_err(e: io::Error) -> CliError {
    CliError::user(e)
}

/// `%g`-style rendering with `sig` significant digits.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..(sig as i32)).contains(&exp) {
        return format!("{:.*e}", sig - 1, x);
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new digit (9.999995 -> 10.00000).
    let digits = s
        .chars()
        .filter(|c| c.is_ascii_digit())
        .skip_while(|c| *c == '0')
        .count();
    if digits > sig && decimals > 0 {
        format!("{:.*}", decimals - 1, x)
    } else {
        s
    }
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| CliError::user(format!("line {}: `{t}` is not a number", i + 1)))?;
        if !v.is_finite() {
            return Err(CliError::user(format!(
                "line {}: value must be finite",
                i + 1
            )));
        }
        values.push(v);
    }
    Ok(values)
}

fn estimate(a: EstimateArgs, out: &mut dyn Write) -> CliResult {
    let text = match a.input.as_deref() {
        Some(p) if p != Path::new("-") => {
            fs::read_to_string(p).map_err(|e| CliError::user(format!("{}: {e}", p.display())))?
        }
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(io_err)?;
            s
        }
    };
    let samples = parse_numbers(&text)?;
    if samples.is_empty() {
        return Err(CliError::user("no samples in input"));
    }
    let alpha = ConfidenceLevel::new(a.alpha).map_err(CliError::user)?;
    let objective = RiskObjective::new(a.xi1, a.xi2, alpha).map_err(CliError::user)?;
    let trunc: TruncationSchedule = a.trunc.parse().map_err(CliError::user)?;
    trunc
        .validate_for(crate::risk::TruncationTarget::Mean)
        .map_err(CliError::user)?;
    let n = samples.len();
    let mean = scheduled_mean(&samples, &trunc).map_err(CliError::user)?;
    let clamped: Vec<f64> = match trunc.level(n) {
        Some(b) => samples.iter().map(|&x| truncate_clamp(x, b)).collect(),
        None => samples.clone(),
    };
    let var = empirical_var(&clamped, alpha).ok();
    let cvar = scheduled_cvar(&samples, alpha, &trunc).ok();
    let objective_value = match (objective.uses_cvar(), cvar) {
        (true, None) => {
            return Err(CliError::user(format!(
                "need at least {} samples for CVaR at alpha={}, got {n}",
                alpha.min_samples(),
                a.alpha
            )))
        }
        (true, Some(c)) => objective.xi1 * mean + objective.xi2 * c,
        (false, _) => objective.xi1 * mean,
    };
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format_sig(x, 6));
    writeln!(out, "n          {n}").map_err(io_err)?;
    writeln!(out, "mean       {}", format_sig(mean, 6)).map_err(io_err)?;
    writeln!(out, "VaR        {}", show(var)).map_err(io_err)?;
    writeln!(out, "CVaR       {}", show(cvar)).map_err(io_err)?;
    writeln!(out, "objective  {}", format_sig(objective_value, 6)).map_err(io_err)?;
    Ok(())
}

struct BoundRow {
    term: String,
    value: String,
    valid: String,
    threshold: String,
}

fn row(term: &str, value: f64, valid: Option<bool>, threshold: Option<String>) -> BoundRow {
    BoundRow {
        term: term.to_string(),
        value: format_sig(value, 6),
        valid: valid.map_or("-".into(), |v| v.to_string()),
        threshold: threshold.unwrap_or_else(|| "-".into()),
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::user(format!("missing required flag --{flag}")))
}

fn bound(a: BoundArgs, out: &mut dyn Write) -> CliResult {
    let alpha = ConfidenceLevel::new(a.alpha).map_err(CliError::user)?;
    let assumption = || -> Result<MomentAssumption, CliError> {
        MomentAssumption::new(need(a.p, "p")?, need(a.moment, "B")?).map_err(CliError::user)
    };
    let gaps = || -> Result<GapProfile, CliError> {
        GapProfile::new(
            a.gaps
                .clone()
                .ok_or_else(|| CliError::user("missing required flag --gaps"))?,
        )
        .map_err(CliError::user)
    };
    let objective = || RiskObjective::new(a.xi1, a.xi2, alpha).map_err(CliError::user);
    let vac = |v: f64| Some(!is_vacuous(v));
    let mut rows = Vec::new();
    match a.kind {
        BoundKind::Thm1 => {
            let v = thm1_bounded_cvar_bound(
                need(a.n, "n")?,
                alpha,
                need(a.b, "b")?,
                need(a.eps, "eps")?,
            );
            rows.push(row("thm1", v, vac(v), None));
        }
        BoundKind::Thm2 => {
            let v = thm2_ht_cvar_bound(
                need(a.n, "n")?,
                alpha,
                need(a.b, "b")?,
                need(a.delta, "delta")?,
            );
            rows.push(row("thm2", v, vac(v), None));
        }
        BoundKind::MinTrunc => {
            let delta = need(a.delta, "delta")?;
            let terms = min_truncation_terms(delta, alpha, &assumption()?, a.v_abs);
            for (name, v) in ["delta/2", "|VaR|", "bias"].iter().zip(terms) {
                rows.push(row(name, v, None, None));
            }
            rows.push(row(
                "min_truncation",
                terms.into_iter().fold(f64::NEG_INFINITY, f64::max),
                None,
                None,
            ));
        }
        BoundKind::VarMag => {
            rows.push(row(
                "var_magnitude",
                var_magnitude_bound(&assumption()?, alpha),
                None,
                None,
            ));
        }
        BoundKind::Ue | BoundKind::Sr => {
            let g = gaps()?;
            let k = a.arms.unwrap_or(g.arms());
            let t = need(a.budget, "T")?;
            let obj = objective()?;
            let q_m = if obj.uses_mean() {
                need(a.q_m, "q-m")?
            } else {
                a.q_m.unwrap_or(0.5)
            };
            let q_c = if obj.uses_cvar() {
                need(a.q_c, "q-c")?
            } else {
                a.q_c.unwrap_or(0.25)
            };
            let f = if a.kind == BoundKind::Ue {
                ue_error_bound
            } else {
                sr_error_bound
            };
            let r = f(t, k, &g, &obj, &assumption()?, q_m, q_c).map_err(CliError::user)?;
            let th = Some(magnitude_cell(r.threshold));
            if obj.uses_mean() {
                rows.push(row("mean_term", r.mean_term, Some(r.valid), th.clone()));
            }
            if obj.uses_cvar() {
                rows.push(row("cvar_term", r.cvar_term, Some(r.valid), th.clone()));
            }
            rows.push(row("bound", r.bound, Some(r.valid && !r.vacuous()), th));
            rows.push(BoundRow {
                term: "n_star".into(),
                value: magnitude_cell(r.n_star),
                valid: "-".into(),
                threshold: "-".into(),
            });
        }
        BoundKind::OblMean => {
            let n = need(a.n, "n")?;
            let r = oblivious_mean_dev_bound(
                n,
                need(a.q, "q")?,
                need(a.delta, "delta")?,
                &assumption()?,
            );
            rows.push(row(
                "obl_mean",
                r.bound,
                Some(r.n_star.exceeded_by(n as f64)),
                Some(magnitude_cell(r.n_star)),
            ));
        }
        BoundKind::OblCvar => {
            let n = need(a.n, "n")?;
            let r = oblivious_cvar_dev_bound(
                n,
                need(a.q, "q")?,
                need(a.delta, "delta")?,
                alpha,
                &assumption()?,
            );
            rows.push(row(
                "obl_cvar",
                r.bound,
                Some(r.n_star.exceeded_by(n as f64)),
                Some(magnitude_cell(r.n_star)),
            ));
        }
        BoundKind::TruncMean => {
            let n = need(a.n, "n")?;
            let levels: Vec<f64> = match (a.b, a.q) {
                (Some(b), None) => vec![b; n],
                (None, Some(q)) => (1..=n).map(|i| (i as f64).powf(q)).collect(),
                _ => {
                    return Err(CliError::user(
                        "give exactly one of --b (constant level) or --q (growth)",
                    ))
                }
            };
            let r = truncated_mean_dev_bound(
                &levels,
                need(a.conf_delta, "conf-delta")?,
                &assumption()?,
            )
            .map_err(CliError::user)?;
            rows.push(row("radius", r, None, None));
        }
        BoundKind::Nonobl => {
            let g = gaps()?;
            let obj = objective()?;
            let s = nonoblivious_settings(&obj, &g, &assumption()?);
            if let Some(bm) = s.b_mean {
                rows.push(row("b_mean", bm, None, None));
                if let Some(n) = a.n {
                    let v = s.mean_dev_bound(n, g.smallest()).expect("b_mean present");
                    rows.push(row("mean_dev", v, vac(v), None));
                }
            }
            if let Some(bc) = s.b_cvar {
                rows.push(row("b_cvar", bc, None, None));
                if let Some(n) = a.n {
                    let v = s
                        .cvar_dev_bound(n, g.smallest(), alpha)
                        .expect("b_cvar present");
                    rows.push(row("cvar_dev", v, vac(v), None));
                }
            }
        }
    }
    print_rows(&rows, a.csv, out)
}

fn print_rows(rows: &[BoundRow], csv: bool, out: &mut dyn Write) -> CliResult {
    if csv {
        writeln!(out, "term,value,valid,threshold").map_err(io_err)?;
        for r in rows {
            writeln!(out, "{},{},{},{}", r.term, r.value, r.valid, r.threshold).map_err(io_err)?;
        }
        return Ok(());
    }
    let header = BoundRow {
        term: "term".into(),
        value: "value".into(),
        valid: "valid".into(),
        threshold: "threshold".into(),
    };
    let all: Vec<&BoundRow> = std::iter::once(&header).chain(rows).collect();
    let w0 = all.iter().map(|r| r.term.len()).max().unwrap_or(0);
    let w1 = all.iter().map(|r| r.value.len()).max().unwrap_or(0);
    let w2 = all.iter().map(|r| r.valid.len()).max().unwrap_or(0);
    for r in all {
        writeln!(
            out,
            "{:<w0$}  {:>w1$}  {:<w2$}  {}",
            r.term, r.value, r.valid, r.threshold
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<ConfigDocument, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|errs| {
        let lines: Vec<String> = errs
            .iter()
            .map(|e| format!("{}: {e}", path.display()))
            .collect();
        CliError::User(lines.join("\n"))
    })
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::user(format!("{SEED_ENV}=`{s}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

#[derive(Serialize)]
struct PhaseView {
    phase: usize,
    surviving: Vec<usize>,
    samples_per_arm: u64,
    estimates: Vec<f64>,
    rejected: usize,
}

#[derive(Serialize)]
struct TraceView {
    algorithm: &'static str,
    budget: u64,
    seed: u64,
    schedule: Vec<u64>,
    optimal_arm: usize,
    selected_arm: usize,
    correct: bool,
    total_pulls: u64,
    phases: Vec<PhaseView>,
}

fn trace_view(
    trace: &RunTrace,
    instance: &BanditInstance,
    kind: AlgorithmKind,
    schedule: &[u64],
    seed: u64,
) -> TraceView {
    TraceView {
        algorithm: kind.as_str(),
        budget: trace.budget,
        seed,
        schedule: schedule.to_vec(),
        optimal_arm: instance.optimal_arm() + 1,
        selected_arm: trace.selected + 1,
        correct: trace.selected == instance.optimal_arm(),
        total_pulls: trace.total_pulls,
        phases: trace
            .phases
            .iter()
            .map(|p| PhaseView {
                phase: p.phase,
                surviving: p.surviving.iter().map(|a| a + 1).collect(),
                samples_per_arm: p.samples,
                estimates: p.estimates.clone(),
                rejected: p.rejected + 1,
            })
            .collect(),
    }
}

fn run(a: RunArgs, out: &mut dyn Write) -> CliResult {
    let doc = load_config(&a.config)?;
    let alpha =
        ConfidenceLevel::new(a.alpha.unwrap_or(doc.objective.alpha)).map_err(CliError::user)?;
    let objective = RiskObjective::new(
        a.xi1.unwrap_or(doc.objective.xi1),
        a.xi2.unwrap_or(doc.objective.xi2),
        alpha,
    )
    .map_err(CliError::user)?;
    let instance = BanditInstance::new(doc.arms.clone(), objective).map_err(CliError::user)?;
    let mean_truncation: TruncationSchedule = a.trunc_mean.parse().map_err(CliError::user)?;
    let cvar_truncation: TruncationSchedule = a.trunc_cvar.parse().map_err(CliError::user)?;
    mean_truncation
        .validate_for(crate::risk::TruncationTarget::Mean)
        .map_err(CliError::user)?;
    cvar_truncation
        .validate_for(crate::risk::TruncationTarget::Cvar)
        .map_err(CliError::user)?;
    let kind = AlgorithmKind::from(a.algo);
    let schedule = kind
        .schedule(instance.num_arms(), a.budget)
        .map_err(CliError::user)?;
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?
            .or(doc.experiment.as_ref().map(|e| e.seed))
            .unwrap_or(0),
    };
    let settings = GsrSettings {
        schedule: &schedule,
        mean_truncation,
        cvar_truncation,
    };
    let trace = run_gsr(&instance, &settings, Seed::new(seed)).map_err(CliError::user)?;
    let view = trace_view(&trace, &instance, kind, schedule.counts(), seed);
    if a.json {
        let s =
            serde_json::to_string_pretty(&view).map_err(|e| CliError::Internal(e.to_string()))?;
        writeln!(out, "{s}").map_err(io_err)?;
        return Ok(());
    }
    writeln!(
        out,
        "algorithm {} | T={} | seed={} | schedule n_k={:?}",
        view.algorithm, view.budget, view.seed, view.schedule
    )
    .map_err(io_err)?;
    writeln!(
        out,
        "objective xi1={} xi2={} alpha={} | optimal arm {}",
        objective.xi1,
        objective.xi2,
        alpha.alpha(),
        view.optimal_arm
    )
    .map_err(io_err)?;
    for p in &view.phases {
        let est: Vec<String> = p
            .surviving
            .iter()
            .zip(&p.estimates)
            .map(|(arm, e)| format!("{arm}:{}", format_sig(*e, 6)))
            .collect();
        writeln!(
            out,
            "phase {}: n={} estimates [{}] rejected {}",
            p.phase,
            p.samples_per_arm,
            est.join(", "),
            p.rejected
        )
        .map_err(io_err)?;
    }
    writeln!(
        out,
        "selected arm {} ({}) | pulls {}/{}",
        view.selected_arm,
        if view.correct { "correct" } else { "incorrect" },
        view.total_pulls,
        view.budget
    )
    .map_err(io_err)?;
    Ok(())
}

fn adjust(
    mut spec: ExperimentSpec,
    o: &OutputArgs,
    seed: Option<u64>,
) -> Result<ExperimentSpec, CliError> {
    if let Some(r) = o.runs {
        spec = spec.with_runs(r).map_err(CliError::user)?;
    }
    if let Some(g) = &o.t_grid {
        spec = spec.with_grid(g.clone()).map_err(CliError::user)?;
    }
    if let Some(s) = seed {
        spec = spec.with_seed(s);
    }
    Ok(spec)
}

fn run_specs(specs: Vec<ExperimentSpec>, o: &OutputArgs, out: &mut dyn Write) -> CliResult {
    let mut problems = Vec::new();
    let mut labels = std::collections::HashSet::new();
    for s in &specs {
        for c in &s.configs {
            if !labels.insert(c.label.clone()) {
                problems.push(format!("duplicate label `{}`", c.label));
            }
        }
        problems.extend(s.infeasible_points().iter().map(|e| e.to_string()));
    }
    if !problems.is_empty() {
        return Err(CliError::User(format!(
            "infeasible grid points:\n  {}",
            problems.join("\n  ")
        )));
    }
    if let Some(dir) = o.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::user(format!("{}: {e}", dir.display())))?;
    }
    let done = if o.resume && o.out.exists() {
        read_csv(&o.out).map_err(CliError::user)?
    } else {
        Vec::new()
    };
    let mut points: Vec<ErrorPoint> = Vec::new();
    with_workers(o.workers, || {
        for s in &specs {
            let r = sweep_resuming(s, &done);
            if !r.infeasible.is_empty() {
                return Err(CliError::Internal(r.infeasible[0].to_string()));
            }
            points.extend(r.points);
        }
        Ok(())
    })
    .map_err(CliError::user)??;
    let written = persist(&o.out, &points).map_err(CliError::user)?;
    writeln!(
        out,
        "{:<28} {:>8} {:>8} {:>12} {:>12}",
        "label", "T", "errors", "p_e", "stderr"
    )
    .map_err(io_err)?;
    for (label, curve) in curves(&points) {
        for p in curve {
            writeln!(
                out,
                "{:<28} {:>8} {:>8} {:>12} {:>12}",
                label,
                p.budget,
                p.errors,
                format_sig(p.p_e(), 6),
                format_sig(p.stderr(), 6)
            )
            .map_err(io_err)?;
        }
    }
    for w in written {
        writeln!(out, "wrote {}", w.display()).map_err(io_err)?;
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs, out: &mut dyn Write) -> CliResult {
    let doc = load_config(&a.config)?;
    let seed = a.output.seed.or(env_seed()?);
    let spec = doc.experiment_spec(None).map_err(CliError::user)?;
    let spec = adjust(spec, &a.output, seed)?;
    run_specs(vec![spec], &a.output, out)
}

fn preset(a: PresetArgs, out: &mut dyn Write) -> CliResult {
    let seed = a.output.seed.or(env_seed()?);
    let specs: Vec<ExperimentSpec> = match a.name {
        PresetName::Fig1 => preset_fig1().into_iter().collect(),
        PresetName::Fig3 => vec![preset_fig3()],
    };
    let specs = specs
        .into_iter()
        .map(|s| adjust(s, &a.output, seed))
        .collect::<Result<Vec<_>, _>>()?;
    run_specs(specs, &a.output, out)
}

/// Difference between two curves' estimates at T in units of their combined
/// standard error.
pub fn separation(a: &ErrorPoint, b: &ErrorPoint) -> f64 {
    let se = combined_stderr(a, b);
    if se == 0.0 {
        if a.p_e() == b.p_e() {
            0.0
        } else {
            f64::INFINITY.copysign(a.p_e() - b.p_e())
        }
    } else {
        (a.p_e() - b.p_e()) / se
    }
}

fn magnitude_cell(m: Magnitude) -> String {
    let v = m.value();
    if v.is_finite() && v <= crate::bounds::LOG_DISPLAY_CUTOFF {
        format_sig(v, 6)
    } else {
        m.to_string()
    }
}
