//! Empirical and truncated estimators of the mean, VaR and CVaR.
//!
//! Two kinds of truncation appear here and they are not interchangeable:
//! the CVaR estimator *clamps* samples onto `[-b, b]`, while the mean
//! estimator *drops* (zeroes) samples with `|x| > b`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("confidence level must lie in (0,1), got {0}")]
    InvalidConfidence(f64),
    #[error("need floor(n(1-alpha)) >= 1: n={n}, alpha={alpha}")]
    InsufficientSamples { n: usize, alpha: f64 },
    #[error("no samples")]
    EmptySample,
    #[error("truncation level must be positive, got {0}")]
    InvalidTruncation(f64),
    #[error("growth exponent {q} outside {range} for the {target} estimator")]
    ExponentOutOfRange {
        q: f64,
        target: &'static str,
        range: &'static str,
    },
    #[error("objective weights must be nonnegative with a positive sum, got ({xi1}, {xi2})")]
    InvalidWeights { xi1: f64, xi2: f64 },
    #[error("cannot parse truncation `{0}`; expected none | fixed:<b> | grow:<q>")]
    TruncationSyntax(String),
}

// Slack for products like n·(1-0.8) that land a few ulps below an integer.
const COUNT_SLACK: f64 = 1e-9;

/// Confidence level α ∈ (0,1), carrying its tail mass β = 1−α.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConfidenceLevel(f64);

impl ConfidenceLevel {
    pub fn new(alpha: f64) -> Result<Self, RiskError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(RiskError::InvalidConfidence(alpha))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn beta(self) -> f64 {
        1.0 - self.0
    }

    /// `⌊nβ⌋`, the number of order statistics averaged by the CVaR estimator.
    pub fn tail_count(self, n: usize) -> usize {
        (n as f64 * self.beta() + COUNT_SLACK).floor() as usize
    }

    /// `⌈nβ⌉`.
    pub fn tail_count_ceil(self, n: usize) -> usize {
        (n as f64 * self.beta() - COUNT_SLACK).ceil().max(0.0) as usize
    }

    /// Smallest n with `⌊nβ⌋ ≥ 1`.
    pub fn min_samples(self) -> usize {
        let mut n = (1.0 / self.beta() - COUNT_SLACK).ceil().max(1.0) as usize;
        while self.tail_count(n) < 1 {
            n += 1;
        }
        n
    }
}

impl TryFrom<f64> for ConfidenceLevel {
    type Error = RiskError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ConfidenceLevel> for f64 {
    fn from(c: ConfidenceLevel) -> f64 {
        c.0
    }
}

/// Which estimator a truncation schedule feeds; the admissible growth
/// exponents differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationTarget {
    Mean,
    Cvar,
}

/// How the truncation level `b` depends on the sample count `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationSchedule {
    /// `b(n) = n^q`, oblivious to the distribution.
    Growth {
        q: f64,
    },
    /// A static level chosen with distributional knowledge.
    Fixed {
        b: f64,
    },
    None,
}

impl TruncationSchedule {
    /// The level to use with `n` samples; `None` means no truncation.
    pub fn level(&self, n: usize) -> Option<f64> {
        match *self {
            Self::Growth { q } => Some((n as f64).powf(q)),
            Self::Fixed { b } => Some(b),
            Self::None => None,
        }
    }

    /// Check the exponent range for `target`: (0,1) for the mean, (0,1/2)
    /// for the CVaR.
    pub fn validate_for(&self, target: TruncationTarget) -> Result<(), RiskError> {
        match *self {
            Self::Growth { q } => {
                let (hi, range, name) = match target {
                    TruncationTarget::Mean => (1.0, "(0,1)", "mean"),
                    TruncationTarget::Cvar => (0.5, "(0,1/2)", "CVaR"),
                };
                if q > 0.0 && q < hi {
                    Ok(())
                } else {
                    Err(RiskError::ExponentOutOfRange {
                        q,
                        target: name,
                        range,
                    })
                }
            }
            Self::Fixed { b } => {
                if b > 0.0 && b.is_finite() {
                    Ok(())
                } else {
                    Err(RiskError::InvalidTruncation(b))
                }
            }
            Self::None => Ok(()),
        }
    }
}

impl fmt::Display for TruncationSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Growth { q } => write!(f, "grow:{q}"),
            Self::Fixed { b } => write!(f, "fixed:{b}"),
            Self::None => f.write_str("none"),
        }
    }
}

impl FromStr for TruncationSchedule {
    type Err = RiskError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || RiskError::TruncationSyntax(s.to_string());
        if t == "none" {
            return Ok(Self::None);
        }
        let (kind, value) = t.split_once(':').ok_or_else(bad)?;
        let v: f64 = value.trim().parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        match kind.trim() {
            "fixed" => Ok(Self::Fixed { b: v }),
            "grow" => Ok(Self::Growth { q: v }),
            _ => Err(bad()),
        }
    }
}

impl Serialize for TruncationSchedule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TruncationSchedule {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The goodness metric `ξ₁·E[X] + ξ₂·c_α(X)`; smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskObjective {
    pub xi1: f64,
    pub xi2: f64,
    pub alpha: ConfidenceLevel,
}

impl RiskObjective {
    pub fn new(xi1: f64, xi2: f64, alpha: ConfidenceLevel) -> Result<Self, RiskError> {
        let ok = xi1.is_finite() && xi2.is_finite() && xi1 >= 0.0 && xi2 >= 0.0 && xi1 + xi2 > 0.0;
        if ok {
            Ok(Self { xi1, xi2, alpha })
        } else {
            Err(RiskError::InvalidWeights { xi1, xi2 })
        }
    }

    /// Mean minimization, `(1, 0)`.
    pub fn mean(alpha: ConfidenceLevel) -> Self {
        Self {
            xi1: 1.0,
            xi2: 0.0,
            alpha,
        }
    }

    /// CVaR minimization, `(0, 1)`.
    pub fn cvar(alpha: ConfidenceLevel) -> Self {
        Self {
            xi1: 0.0,
            xi2: 1.0,
            alpha,
        }
    }

    pub fn uses_mean(&self) -> bool {
        self.xi1 > 0.0
    }

    pub fn uses_cvar(&self) -> bool {
        self.xi2 > 0.0
    }
}

fn check_tail(n: usize, alpha: ConfidenceLevel) -> Result<usize, RiskError> {
    let k = alpha.tail_count(n);
    if k == 0 {
        Err(RiskError::InsufficientSamples {
            n,
            alpha: alpha.alpha(),
        })
    } else {
        Ok(k)
    }
}

/// Move the `k` largest values of `buf` to its front (unordered).
fn partition_top(buf: &mut [f64], k: usize) {
    if k < buf.len() {
        buf.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
}

/// `X_[⌊nβ⌋]`, the ⌊nβ⌋-th largest sample.
pub fn empirical_var(samples: &[f64], alpha: ConfidenceLevel) -> Result<f64, RiskError> {
    let k = check_tail(samples.len(), alpha)?;
    let mut buf = samples.to_vec();
    partition_top(&mut buf, k);
    Ok(buf[..k].iter().copied().fold(f64::INFINITY, f64::min))
}

fn cvar_in_place(buf: &mut [f64], alpha: ConfidenceLevel) -> Result<f64, RiskError> {
    let n = buf.len();
    let k = check_tail(n, alpha)?;
    partition_top(buf, k);
    let top: f64 = buf[..k].iter().sum();
    Ok(top / (n as f64 * alpha.beta()))
}

/// `(1/(nβ))·Σ_{i ≤ ⌊nβ⌋} X_[i]`: exactly the top ⌊nβ⌋ order statistics,
/// which is well defined under ties.
pub fn empirical_cvar(samples: &[f64], alpha: ConfidenceLevel) -> Result<f64, RiskError> {
    let mut buf = samples.to_vec();
    cvar_in_place(&mut buf, alpha)
}

/// Projection of `x` onto `[-b, b]`.
pub fn truncate_clamp(x: f64, b: f64) -> f64 {
    x.clamp(-b, b)
}

/// Empirical CVaR of the clamp-truncated samples.
pub fn truncated_cvar(samples: &[f64], alpha: ConfidenceLevel, b: f64) -> Result<f64, RiskError> {
    if b.is_nan() || b <= 0.0 {
        return Err(RiskError::InvalidTruncation(b));
    }
    let mut buf: Vec<f64> = samples.iter().map(|&x| truncate_clamp(x, b)).collect();
    cvar_in_place(&mut buf, alpha)
}

/// `(1/n)·Σ X_j·1{|X_j| ≤ b}`: samples beyond `b` in magnitude count as zero.
pub fn truncated_mean(samples: &[f64], b: f64) -> Result<f64, RiskError> {
    if samples.is_empty() {
        return Err(RiskError::EmptySample);
    }
    if b.is_nan() || b <= 0.0 {
        return Err(RiskError::InvalidTruncation(b));
    }
    let kept: f64 = samples.iter().filter(|x| x.abs() <= b).sum();
    Ok(kept / samples.len() as f64)
}

pub fn sample_mean(samples: &[f64]) -> Result<f64, RiskError> {
    if samples.is_empty() {
        return Err(RiskError::EmptySample);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Mean term under a schedule resolved at `n = samples.len()`.
pub fn scheduled_mean(samples: &[f64], schedule: &TruncationSchedule) -> Result<f64, RiskError> {
    match schedule.level(samples.len()) {
        Some(b) => truncated_mean(samples, b),
        None => sample_mean(samples),
    }
}

/// CVaR term under a schedule resolved at `n = samples.len()`.
pub fn scheduled_cvar(
    samples: &[f64],
    alpha: ConfidenceLevel,
    schedule: &TruncationSchedule,
) -> Result<f64, RiskError> {
    match schedule.level(samples.len()) {
        Some(b) => truncated_cvar(samples, alpha, b),
        None => empirical_cvar(samples, alpha),
    }
}

/// `ξ₁·μ†(b_m(n)) + ξ₂·ĉ(b_c(n))`; a term with zero weight is not evaluated.
pub fn objective_estimate(
    samples: &[f64],
    objective: &RiskObjective,
    mean_schedule: &TruncationSchedule,
    cvar_schedule: &TruncationSchedule,
) -> Result<f64, RiskError> {
    let mut total = 0.0;
    if objective.uses_mean() {
        total += objective.xi1 * scheduled_mean(samples, mean_schedule)?;
    }
    if objective.uses_cvar() {
        total += objective.xi2 * scheduled_cvar(samples, objective.alpha, cvar_schedule)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn level(a: f64) -> ConfidenceLevel {
        ConfidenceLevel::new(a).unwrap()
    }

    fn one_to_ten() -> Vec<f64> {
        (1..=10).map(f64::from).collect()
    }

    #[test]
    fn confidence_level_bounds() {
        assert!(ConfidenceLevel::new(0.0).is_err());
        assert!(ConfidenceLevel::new(1.0).is_err());
        assert!(ConfidenceLevel::new(f64::NAN).is_err());
        let c = level(0.95);
        assert_eq!(c.beta(), 1.0 - 0.95);
        assert_eq!(c.min_samples(), 20);
        assert_eq!(level(0.8).tail_count(10), 2);
        assert_eq!(level(0.8).tail_count(100), 20);
    }

    #[test]
    fn var_examples() {
        assert_eq!(empirical_var(&one_to_ten(), level(0.8)), Ok(9.0));
        assert_eq!(empirical_var(&[3.5; 20], level(0.9)), Ok(3.5));
        assert_eq!(
            empirical_var(&[5.0], level(0.95)),
            Err(RiskError::InsufficientSamples { n: 1, alpha: 0.95 })
        );
    }

    #[test]
    fn cvar_examples() {
        assert_abs_diff_eq!(
            empirical_cvar(&one_to_ten(), level(0.8)).unwrap(),
            9.5,
            epsilon = 1e-12
        );
        // 25·0.1 = 2.5, so the top-2 average is rescaled by 2/2.5.
        let c = 4.0;
        let v = empirical_cvar(&[c; 25], level(0.9)).unwrap();
        assert_abs_diff_eq!(v, c * 2.0 / 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            empirical_cvar(&[c; 20], level(0.9)).unwrap(),
            c,
            epsilon = 1e-12
        );
        assert!(empirical_cvar(&[1.0, 2.0], level(0.95)).is_err());
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(truncate_clamp(10.0, 5.0), 5.0);
        assert_eq!(truncate_clamp(-7.0, 5.0), -5.0);
        assert_eq!(truncate_clamp(3.0, 5.0), 3.0);
    }

    #[test]
    fn truncated_cvar_examples() {
        let s = one_to_ten();
        assert_abs_diff_eq!(
            truncated_cvar(&s, level(0.8), 100.0).unwrap(),
            9.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            truncated_cvar(&s, level(0.8), 8.0).unwrap(),
            8.0,
            epsilon = 1e-12
        );
        assert!(truncated_cvar(&s, level(0.8), 0.0).is_err());
    }

    #[test]
    fn truncated_mean_examples() {
        assert_abs_diff_eq!(
            truncated_mean(&[1.0, -2.0, 10.0], 5.0).unwrap(),
            -1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(truncated_mean(&[7.0, 9.0], 5.0), Ok(0.0));
        assert_abs_diff_eq!(
            truncated_mean(&[1.0, 2.0, 3.0], 3.0).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert_eq!(truncated_mean(&[], 1.0), Err(RiskError::EmptySample));
    }

    #[test]
    fn objective_examples() {
        let none = TruncationSchedule::None;
        let mean = RiskObjective::new(1.0, 0.0, level(0.8)).unwrap();
        assert_abs_diff_eq!(
            objective_estimate(&[1.0, 2.0, 3.0], &mean, &none, &none).unwrap(),
            2.0
        );
        let cvar = RiskObjective::new(0.0, 1.0, level(0.8)).unwrap();
        assert_abs_diff_eq!(
            objective_estimate(&one_to_ten(), &cvar, &none, &none).unwrap(),
            9.5,
            epsilon = 1e-12
        );
        let both = RiskObjective::new(1.0, 1.0, level(0.8)).unwrap();
        assert_abs_diff_eq!(
            objective_estimate(&one_to_ten(), &both, &none, &none).unwrap(),
            15.0,
            epsilon = 1e-12
        );
        // Mean-only never asks for a CVaR tail.
        assert!(objective_estimate(&[1.0], &mean, &none, &none).is_ok());
        assert!(objective_estimate(&[1.0], &both, &none, &none).is_err());
    }

    #[test]
    fn schedule_levels_and_ranges() {
        assert_abs_diff_eq!(
            TruncationSchedule::Growth { q: 0.5 }.level(100).unwrap(),
            10.0
        );
        assert_eq!(TruncationSchedule::Fixed { b: 3.0 }.level(7), Some(3.0));
        assert_eq!(TruncationSchedule::None.level(7), None);
        let g = TruncationSchedule::Growth { q: 0.6 };
        assert!(g.validate_for(TruncationTarget::Mean).is_ok());
        assert!(g.validate_for(TruncationTarget::Cvar).is_err());
        assert!(TruncationSchedule::Growth { q: 1.0 }
            .validate_for(TruncationTarget::Mean)
            .is_err());
        assert!(TruncationSchedule::Fixed { b: -1.0 }
            .validate_for(TruncationTarget::Mean)
            .is_err());
    }

    #[test]
    fn schedule_syntax() {
        assert_eq!("none".parse(), Ok(TruncationSchedule::None));
        assert_eq!(
            " Fixed:640 ".parse(),
            Ok(TruncationSchedule::Fixed { b: 640.0 })
        );
        assert_eq!(
            "grow:0.75".parse(),
            Ok(TruncationSchedule::Growth { q: 0.75 })
        );
        assert!("grow".parse::<TruncationSchedule>().is_err());
        assert!("clip:3".parse::<TruncationSchedule>().is_err());
        for s in [
            TruncationSchedule::None,
            TruncationSchedule::Fixed { b: 1280.0 },
            TruncationSchedule::Growth { q: 0.45 },
        ] {
            assert_eq!(s.to_string().parse(), Ok(s));
        }
    }

    #[test]
    fn weights_validated() {
        assert!(RiskObjective::new(0.0, 0.0, level(0.9)).is_err());
        assert!(RiskObjective::new(-1.0, 2.0, level(0.9)).is_err());
    }

    fn samples_and_alpha() -> impl Strategy<Value = (Vec<f64>, f64)> {
        (
            prop::collection::vec(-1e3f64..1e3, 20..200),
            prop::sample::select(vec![0.8, 0.9, 0.95]),
        )
    }

    proptest! {
        #[test]
        fn clamp_beyond_support_is_identity((s, a) in samples_and_alpha()) {
            let alpha = level(a);
            let b = s.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 1.0;
            prop_assert_eq!(truncated_cvar(&s, alpha, b).unwrap(), empirical_cvar(&s, alpha).unwrap());
            prop_assert_eq!(truncated_mean(&s, b).unwrap(), sample_mean(&s).unwrap());
        }

        #[test]
        fn translation((s, a) in samples_and_alpha(), c in -100.0f64..100.0) {
            let alpha = level(a);
            let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
            let k = alpha.tail_count(s.len()) as f64;
            let nb = s.len() as f64 * alpha.beta();
            // Exact translation when nβ is integral; otherwise shifts by c·⌊nβ⌋/(nβ).
            let expected = empirical_cvar(&s, alpha).unwrap() + c * k / nb;
            prop_assert!((empirical_cvar(&shifted, alpha).unwrap() - expected).abs() < 1e-8);
        }

        #[test]
        fn positive_homogeneity((s, a) in samples_and_alpha(), lambda in 0.01f64..100.0) {
            let alpha = level(a);
            let scaled: Vec<f64> = s.iter().map(|x| x * lambda).collect();
            let lhs = empirical_cvar(&scaled, alpha).unwrap();
            let rhs = lambda * empirical_cvar(&s, alpha).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn cvar_at_least_var_on_nonnegative_data(s in prop::collection::vec(0.0f64..1e3, 20..200)) {
            // With nβ integral the estimator is an average of values ≥ the VaR estimate.
            let alpha = level(0.95);
            let n = s.len() - s.len() % 20;
            let s = &s[..n];
            prop_assert!(empirical_cvar(s, alpha).unwrap() >= empirical_var(s, alpha).unwrap() - 1e-9);
        }
    }
}
