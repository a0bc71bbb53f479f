//! Generalized successive rejects (GSR) for fixed-budget best-arm
//! identification under the objective `ξ₁·E[X] + ξ₂·c_α(X)`.
//!
//! GSR runs `K−1` phases. In phase `k` every surviving arm is topped up to
//! `n_k` samples, each arm's objective is re-estimated from all of its
//! samples with truncation levels resolved at `n_k`, and the arm with the
//! largest estimate (the worst, since losses are minimized) is rejected.
//! Uniform exploration and classical successive rejects differ only in the
//! phase schedule.

use serde::Serialize;
use thiserror::Error;

use crate::bounds::GapProfile;
use crate::distributions::{ArmDistribution, DistributionError};
use crate::risk::{objective_estimate, RiskError, RiskObjective, TruncationSchedule};
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BanditError {
    #[error("need at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("arms {first} and {second} share the optimal objective value {value}")]
    NonUniqueOptimum {
        first: usize,
        second: usize,
        value: f64,
    },
    #[error("arm {arm}: {source}")]
    Distribution {
        arm: usize,
        #[source]
        source: DistributionError,
    },
    #[error("budget T={budget} too small for K={arms} arms")]
    BudgetTooSmall { arms: usize, budget: u64 },
    #[error("phase schedule invalid: {0}")]
    InvalidSchedule(String),
    #[error("phase 1 gives each arm {got} samples but the estimators need at least {needed}")]
    InsufficientPhaseBudget { needed: u64, got: u64 },
    #[error(transparent)]
    Estimator(#[from] RiskError),
}

// Objective values closer than this (relative) count as tied.
const OPTIMUM_TIE_TOL: f64 = 1e-12;

/// The population value of the objective for one arm.
///
/// A constant arm is not C1, so its CVaR has no quantile-based closed form;
/// its CVaR is taken to be the constant itself, the limit of any continuous
/// approximation.
pub fn arm_objective(
    dist: &ArmDistribution,
    objective: &RiskObjective,
) -> Result<f64, DistributionError> {
    let mut value = 0.0;
    if objective.uses_mean() {
        value += objective.xi1 * dist.analytic_mean()?;
    }
    if objective.uses_cvar() {
        let cvar = match *dist {
            ArmDistribution::Constant { c } => c,
            _ => dist.analytic_cvar(objective.alpha)?,
        };
        value += objective.xi2 * cvar;
    }
    Ok(value)
}

/// The index of the arm minimizing the population objective.
pub fn true_best_arm(
    arms: &[ArmDistribution],
    objective: &RiskObjective,
) -> Result<usize, BanditError> {
    let values = arms
        .iter()
        .enumerate()
        .map(|(arm, d)| {
            arm_objective(d, objective).map_err(|source| BanditError::Distribution { arm, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    best_of(&values)
}

fn best_of(values: &[f64]) -> Result<usize, BanditError> {
    let (best, &min) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(BanditError::TooFewArms(0))?;
    let tol = OPTIMUM_TIE_TOL * min.abs().max(1.0);
    if let Some((other, _)) = values
        .iter()
        .enumerate()
        .find(|(i, v)| *i != best && (**v - min).abs() <= tol)
    {
        return Err(BanditError::NonUniqueOptimum {
            first: best.min(other),
            second: best.max(other),
            value: min,
        });
    }
    Ok(best)
}

/// Arms plus the objective used to rank them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanditInstance {
    arms: Vec<ArmDistribution>,
    objective: RiskObjective,
    values: Vec<f64>,
    optimal_arm: usize,
}

impl BanditInstance {
    pub fn new(arms: Vec<ArmDistribution>, objective: RiskObjective) -> Result<Self, BanditError> {
        if arms.len() < 2 {
            return Err(BanditError::TooFewArms(arms.len()));
        }
        let values = arms
            .iter()
            .enumerate()
            .map(|(arm, d)| {
                arm_objective(d, &objective)
                    .map_err(|source| BanditError::Distribution { arm, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let optimal_arm = best_of(&values)?;
        Ok(Self {
            arms,
            objective,
            values,
            optimal_arm,
        })
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn objective(&self) -> &RiskObjective {
        &self.objective
    }

    /// Population objective value of each arm.
    pub fn objective_values(&self) -> &[f64] {
        &self.values
    }

    pub fn optimal_arm(&self) -> usize {
        self.optimal_arm
    }

    /// Ordered gaps `Δ[2] ≤ … ≤ Δ[K]` relative to the optimal arm.
    pub fn gaps(&self) -> GapProfile {
        let best = self.values[self.optimal_arm];
        let mut gaps: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.optimal_arm)
            .map(|(_, v)| v - best)
            .collect();
        gaps.sort_by(f64::total_cmp);
        GapProfile::new(gaps).expect("unique optimum implies positive gaps")
    }

    /// The same instance with the arms reordered: arm `j` of the result is
    /// arm `order[j]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self, BanditError> {
        Self::new(
            order.iter().map(|&i| self.arms[i]).collect(),
            self.objective,
        )
    }
}

/// `1/2 + Σ_{i=2}^{K} 1/i`.
pub fn log_bar(arms: usize) -> f64 {
    0.5 + (2..=arms).map(|i| 1.0 / i as f64).sum::<f64>()
}

/// Cumulative per-arm pull counts `n_1 ≤ … ≤ n_{K−1}` for a budget `T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseSchedule {
    counts: Vec<u64>,
    budget: u64,
}

impl PhaseSchedule {
    /// Checks monotonicity and `Σ_{i<K−1} n_i + 2·n_{K−1} ≤ T`.
    pub fn new(counts: Vec<u64>, budget: u64) -> Result<Self, BanditError> {
        if counts.is_empty() {
            return Err(BanditError::InvalidSchedule("no phases".into()));
        }
        if counts.windows(2).any(|w| w[0] > w[1]) {
            return Err(BanditError::InvalidSchedule(format!(
                "counts must be nondecreasing: {counts:?}"
            )));
        }
        let used = budget_used(&counts);
        if used > budget {
            return Err(BanditError::InvalidSchedule(format!(
                "schedule needs {used} pulls but the budget is {budget}"
            )));
        }
        Ok(Self { counts, budget })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Number of arms the schedule is built for.
    pub fn arms(&self) -> usize {
        self.counts.len() + 1
    }

    /// Pulls consumed when every phase runs to completion.
    pub fn pulls(&self) -> u64 {
        budget_used(&self.counts)
    }
}

fn budget_used(counts: &[u64]) -> u64 {
    counts.iter().sum::<u64>() + counts.last().copied().unwrap_or(0)
}

/// Uniform exploration: `n_k = ⌊T/K⌋` for every phase.
pub fn ue_schedule(arms: usize, budget: u64) -> Result<PhaseSchedule, BanditError> {
    if arms < 2 {
        return Err(BanditError::TooFewArms(arms));
    }
    let per_arm = budget / arms as u64;
    if per_arm == 0 {
        return Err(BanditError::BudgetTooSmall { arms, budget });
    }
    PhaseSchedule::new(vec![per_arm; arms - 1], budget)
}

/// Successive rejects: `n_k = ⌈(T−K) / (loḡ(K)·(K+1−k))⌉`, repaired if the
/// rounding overshoots the budget.
pub fn sr_schedule(arms: usize, budget: u64) -> Result<PhaseSchedule, BanditError> {
    if arms < 2 {
        return Err(BanditError::TooFewArms(arms));
    }
    if budget <= arms as u64 {
        return Err(BanditError::BudgetTooSmall { arms, budget });
    }
    let lb = log_bar(arms);
    let spare = (budget - arms as u64) as f64;
    let mut counts: Vec<u64> = (1..arms)
        .map(|k| (spare / (lb * (arms + 1 - k) as f64)).ceil() as u64)
        .collect();
    repair_budget(&mut counts, budget).ok_or(BanditError::BudgetTooSmall { arms, budget })?;
    PhaseSchedule::new(counts, budget)
}

/// Decrement counts, latest phase first, until the budget constraint holds
/// without breaking monotonicity. `None` if the first phase would hit zero.
fn repair_budget(counts: &mut [u64], budget: u64) -> Option<()> {
    while budget_used(counts) > budget {
        let j = (0..counts.len())
            .rev()
            .find(|&j| j == 0 || counts[j] > counts[j - 1])?;
        if counts[j] == 0 {
            return None;
        }
        counts[j] -= 1;
    }
    (counts[0] > 0).then_some(())
}

/// One GSR phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRecord {
    /// 1-based phase number.
    pub phase: usize,
    /// Arms alive at the start of the phase (0-based indices).
    pub surviving: Vec<usize>,
    /// Samples held by each surviving arm once the phase's pulls are done.
    pub samples: u64,
    /// Estimated objective of each surviving arm, aligned with `surviving`.
    pub estimates: Vec<f64>,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub phases: Vec<PhaseRecord>,
    pub selected: usize,
    pub total_pulls: u64,
    pub budget: u64,
}

/// Schedule plus truncation for the two estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct GsrSettings<'a> {
    pub schedule: &'a PhaseSchedule,
    pub mean_truncation: TruncationSchedule,
    pub cvar_truncation: TruncationSchedule,
}

/// Run GSR with arm `i` drawing from stream `(i, 0, 0)` of `seed`.
pub fn run_gsr(
    instance: &BanditInstance,
    settings: &GsrSettings<'_>,
    seed: Seed,
) -> Result<RunTrace, BanditError> {
    let labels: Vec<u64> = (0..instance.num_arms() as u64).collect();
    run_gsr_labeled(instance, settings, seed, &labels)
}

/// Run GSR with arm `i` drawing from stream `(labels[i], 0, 0)` of `seed`.
pub fn run_gsr_labeled(
    instance: &BanditInstance,
    settings: &GsrSettings<'_>,
    seed: Seed,
    labels: &[u64],
) -> Result<RunTrace, BanditError> {
    let k = instance.num_arms();
    let counts = settings.schedule.counts();
    if settings.schedule.arms() != k {
        return Err(BanditError::InvalidSchedule(format!(
            "schedule has {} phases, instance needs {}",
            counts.len(),
            k - 1
        )));
    }
    if labels.len() != k {
        return Err(BanditError::InvalidSchedule(format!(
            "{} stream labels for {k} arms",
            labels.len()
        )));
    }
    let objective = instance.objective();
    let needed = if objective.uses_cvar() {
        objective.alpha.min_samples() as u64
    } else {
        1
    };
    if counts[0] < needed {
        return Err(BanditError::InsufficientPhaseBudget {
            needed,
            got: counts[0],
        });
    }

    let mut rngs: Vec<_> = labels.iter().map(|&l| seed.stream(l, 0, 0)).collect();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut alive: Vec<usize> = (0..k).collect();
    let mut phases = Vec::with_capacity(k - 1);
    let mut total_pulls = 0u64;
    let mut previous = 0u64;

    for (phase, &target) in counts.iter().enumerate() {
        let step = (target - previous) as usize;
        let mut estimates = Vec::with_capacity(alive.len());
        for &arm in &alive {
            instance.arms()[arm].draw_into(&mut rngs[arm], step, &mut samples[arm]);
            estimates.push(objective_estimate(
                &samples[arm],
                objective,
                &settings.mean_truncation,
                &settings.cvar_truncation,
            )?);
        }
        total_pulls += step as u64 * alive.len() as u64;
        // Worst estimate; ties go to the smallest arm index.
        let mut worst = 0;
        for (pos, est) in estimates.iter().enumerate().skip(1) {
            if *est > estimates[worst] {
                worst = pos;
            }
        }
        let rejected = alive[worst];
        phases.push(PhaseRecord {
            phase: phase + 1,
            surviving: alive.clone(),
            samples: target,
            estimates,
            rejected,
        });
        alive.remove(worst);
        previous = target;
    }

    Ok(RunTrace {
        phases,
        selected: alive[0],
        total_pulls,
        budget: settings.schedule.budget(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::ConfidenceLevel;
    use approx::assert_abs_diff_eq;

    fn level(a: f64) -> ConfidenceLevel {
        ConfidenceLevel::new(a).unwrap()
    }

    fn constants(values: &[f64], objective: RiskObjective) -> BanditInstance {
        BanditInstance::new(
            values
                .iter()
                .map(|&c| ArmDistribution::constant(c).unwrap())
                .collect(),
            objective,
        )
        .unwrap()
    }

    #[test]
    fn log_bar_values() {
        assert_eq!(log_bar(2), 1.0);
        assert_abs_diff_eq!(log_bar(3), 0.5 + 0.5 + 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(log_bar(10), 2.428_968_253_968_254, epsilon = 1e-12);
    }

    #[test]
    fn ue_schedules() {
        assert_eq!(ue_schedule(10, 5000).unwrap().counts(), &[500; 9]);
        let s = ue_schedule(3, 10).unwrap();
        assert_eq!(s.counts(), &[3, 3]);
        assert_eq!(s.pulls(), 9);
        assert_eq!(
            ue_schedule(10, 5),
            Err(BanditError::BudgetTooSmall {
                arms: 10,
                budget: 5
            })
        );
    }

    #[test]
    fn sr_schedules() {
        let s = sr_schedule(2, 100).unwrap();
        assert_eq!(s.counts(), &[49]);
        assert_eq!(s.pulls(), 98);

        let s = sr_schedule(10, 5000).unwrap();
        assert_eq!(s.counts(), &[206, 229, 257, 294, 343, 411, 514, 685, 1028]);
        assert_eq!(s.pulls(), 4995);

        let s = sr_schedule(10, 11).unwrap();
        assert_eq!(s.counts(), &[1; 9]);
        assert!(s.pulls() <= 11);

        assert!(sr_schedule(10, 10).is_err());
    }

    #[test]
    fn sr_schedule_always_feasible() {
        for k in 2..=12 {
            for t in (k as u64 + 1)..400 {
                let s = sr_schedule(k, t).unwrap();
                assert!(s.pulls() <= t, "K={k} T={t}");
                assert!(s.counts().windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn repair_keeps_monotone() {
        let mut c = vec![3, 5, 5];
        repair_budget(&mut c, 14).unwrap();
        assert!(budget_used(&c) <= 14);
        assert!(c.windows(2).all(|w| w[0] <= w[1]));
        let mut c = vec![1, 1];
        assert!(repair_budget(&mut c, 1).is_none());
    }

    #[test]
    fn schedule_validation() {
        assert!(PhaseSchedule::new(vec![3, 2], 100).is_err());
        assert!(PhaseSchedule::new(vec![3, 5], 12).is_err());
        assert!(PhaseSchedule::new(vec![3, 5], 13).is_ok());
    }

    #[test]
    fn constant_arms_mean() {
        let inst = constants(&[0.9, 1.0], RiskObjective::mean(level(0.9)));
        let sched = sr_schedule(2, 50).unwrap();
        let settings = GsrSettings {
            schedule: &sched,
            mean_truncation: TruncationSchedule::None,
            cvar_truncation: TruncationSchedule::None,
        };
        for s in 0..20 {
            assert_eq!(run_gsr(&inst, &settings, Seed::new(s)).unwrap().selected, 0);
        }
    }

    #[test]
    fn constant_arms_cvar() {
        let inst = constants(&[1.0, 0.9], RiskObjective::cvar(level(0.8)));
        let sched = PhaseSchedule::new(vec![5], 10).unwrap();
        let settings = GsrSettings {
            schedule: &sched,
            mean_truncation: TruncationSchedule::None,
            cvar_truncation: TruncationSchedule::None,
        };
        let trace = run_gsr(&inst, &settings, Seed::new(7)).unwrap();
        assert_eq!(trace.selected, 1);
        assert_eq!(trace.phases[0].rejected, 0);
    }

    #[test]
    fn phase_one_too_short_for_cvar() {
        let inst = constants(&[1.0, 0.9], RiskObjective::cvar(level(0.95)));
        let sched = PhaseSchedule::new(vec![10], 20).unwrap();
        let settings = GsrSettings {
            schedule: &sched,
            mean_truncation: TruncationSchedule::None,
            cvar_truncation: TruncationSchedule::None,
        };
        assert_eq!(
            run_gsr(&inst, &settings, Seed::new(1)),
            Err(BanditError::InsufficientPhaseBudget {
                needed: 20,
                got: 10
            })
        );
    }

    #[test]
    fn ties_reject_smallest_index() {
        // Three equal arms and a better one: arms 0, 1, 2 go in index order.
        let inst = BanditInstance::new(
            vec![
                ArmDistribution::constant(2.0).unwrap(),
                ArmDistribution::constant(2.0).unwrap(),
                ArmDistribution::constant(2.0).unwrap(),
                ArmDistribution::constant(1.0).unwrap(),
            ],
            RiskObjective::mean(level(0.9)),
        )
        .unwrap();
        let sched = ue_schedule(4, 40).unwrap();
        let settings = GsrSettings {
            schedule: &sched,
            mean_truncation: TruncationSchedule::None,
            cvar_truncation: TruncationSchedule::None,
        };
        let trace = run_gsr(&inst, &settings, Seed::new(3)).unwrap();
        let rejected: Vec<usize> = trace.phases.iter().map(|p| p.rejected).collect();
        assert_eq!(rejected, vec![0, 1, 2]);
        assert_eq!(trace.selected, 3);
    }

    #[test]
    fn identical_arms_rejected() {
        let e = ArmDistribution::exponential(1.0).unwrap();
        assert!(matches!(
            BanditInstance::new(vec![e, e], RiskObjective::mean(level(0.9))),
            Err(BanditError::NonUniqueOptimum {
                first: 0,
                second: 1,
                ..
            })
        ));
        // Duplicates among the suboptimal arms are fine.
        let better = ArmDistribution::exponential(0.5).unwrap();
        assert!(BanditInstance::new(vec![e, better, e], RiskObjective::mean(level(0.9))).is_ok());
    }

    #[test]
    fn trace_accounting() {
        let inst = BanditInstance::new(
            vec![
                ArmDistribution::uniform(0.0, 1.0).unwrap(),
                ArmDistribution::uniform(0.2, 1.2).unwrap(),
                ArmDistribution::exponential(0.8).unwrap(),
                ArmDistribution::pareto(3.0, 0.6).unwrap(),
            ],
            RiskObjective::new(1.0, 0.5, level(0.9)).unwrap(),
        )
        .unwrap();
        let sched = sr_schedule(4, 400).unwrap();
        let settings = GsrSettings {
            schedule: &sched,
            mean_truncation: TruncationSchedule::Growth { q: 0.75 },
            cvar_truncation: TruncationSchedule::Growth { q: 0.4 },
        };
        let trace = run_gsr(&inst, &settings, Seed::new(11)).unwrap();
        assert_eq!(trace.phases.len(), 3);
        let mut expected = 0;
        let mut prev = 0;
        for (rec, &n) in trace.phases.iter().zip(sched.counts()) {
            assert_eq!(rec.surviving.len(), 4 + 1 - rec.phase);
            assert!(rec.surviving.contains(&rec.rejected));
            assert_eq!(rec.samples, n);
            expected += rec.surviving.len() as u64 * (n - prev);
            prev = n;
        }
        assert_eq!(trace.total_pulls, expected);
        assert!(trace.total_pulls <= 400);
        assert_eq!(trace, run_gsr(&inst, &settings, Seed::new(11)).unwrap());
    }
}
