//! Closed-form concentration inequalities, error-probability bounds and the
//! sample-size thresholds beyond which they hold.
//!
//! Bounds are returned verbatim even when they exceed 1 (see
//! [`is_vacuous`]). Thresholds can be astronomically large, so they are
//! carried in log space as [`Magnitude`].

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bandit::log_bar;
use crate::risk::{ConfidenceLevel, RiskObjective};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("expected {expected} gaps for K={arms} arms, got {got}")]
    GapCountMismatch {
        arms: usize,
        expected: usize,
        got: usize,
    },
    #[error("gaps must be positive and nondecreasing: {0:?}")]
    InvalidGaps(Vec<f64>),
    #[error("moment assumption needs p > 1 and 0 < B < inf, got p={p}, B={b}")]
    InvalidAssumption { p: f64, b: f64 },
    #[error("{0}")]
    InvalidArgument(String),
}

/// `E|X|^p ≤ B` for every arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentAssumption {
    pub p: f64,
    pub b: f64,
}

impl MomentAssumption {
    pub fn new(p: f64, b: f64) -> Result<Self, BoundsError> {
        if p > 1.0 && b > 0.0 && b.is_finite() && p.is_finite() {
            Ok(Self { p, b })
        } else {
            Err(BoundsError::InvalidAssumption { p, b })
        }
    }
}

/// Ordered suboptimality gaps `Δ[2] ≤ … ≤ Δ[K]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapProfile(Vec<f64>);

impl GapProfile {
    pub fn new(gaps: Vec<f64>) -> Result<Self, BoundsError> {
        let ok = !gaps.is_empty()
            && gaps.iter().all(|g| *g > 0.0 && g.is_finite())
            && gaps.windows(2).all(|w| w[0] <= w[1]);
        if ok {
            Ok(Self(gaps))
        } else {
            Err(BoundsError::InvalidGaps(gaps))
        }
    }

    /// Number of arms, `K = gaps + 1`.
    pub fn arms(&self) -> usize {
        self.0.len() + 1
    }

    /// `Δ[2]`.
    pub fn smallest(&self) -> f64 {
        self.0[0]
    }

    /// `Δ[i]` for `i ∈ 2..=K`.
    pub fn gap(&self, i: usize) -> f64 {
        self.0[i - 2]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn check_arms(&self, k: usize) -> Result<(), BoundsError> {
        if self.arms() == k {
            Ok(())
        } else {
            Err(BoundsError::GapCountMismatch {
                arms: k,
                expected: k.saturating_sub(1),
                got: self.0.len(),
            })
        }
    }
}

/// A positive quantity stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Magnitude {
    pub ln: f64,
}

/// Above this, magnitudes print as powers of ten.
pub const LOG_DISPLAY_CUTOFF: f64 = 1e15;

impl Magnitude {
    pub fn from_ln(ln: f64) -> Self {
        Self { ln }
    }

    pub fn from_value(v: f64) -> Self {
        Self { ln: v.ln() }
    }

    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn log10(self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }

    /// `ln(e^a + e^b)` without overflow.
    fn add(self, other: Self) -> Self {
        let (hi, lo) = if self.ln >= other.ln {
            (self.ln, other.ln)
        } else {
            (other.ln, self.ln)
        };
        if hi == f64::NEG_INFINITY {
            return self;
        }
        Self {
            ln: hi + (lo - hi).exp().ln_1p(),
        }
    }

    /// Whether `x` strictly exceeds this magnitude.
    pub fn exceeded_by(self, x: f64) -> bool {
        x > 0.0 && x.ln() > self.ln
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value() > LOG_DISPLAY_CUTOFF {
            write!(f, "10^{:.4}", self.log10())
        } else {
            write!(f, "{:.6}", self.value())
        }
    }
}

/// A probability bound above 1 carries no information.
pub fn is_vacuous(bound: f64) -> bool {
    bound > 1.0
}

/// Bounded-support CVaR concentration:
/// `6·exp(−nβ·(ε/b)² / (10 + 1.6ε/b))`.
pub fn thm1_bounded_cvar_bound(n: usize, alpha: ConfidenceLevel, b: f64, eps: f64) -> f64 {
    let r = eps / b;
    6.0 * (-(n as f64) * alpha.beta() * r * r / (10.0 + 1.6 * r)).exp()
}

/// Heavy-tailed CVaR concentration for the clamp-truncated estimator:
/// `6·exp(−nβ·Δ² / (48b²))`. Only meaningful when `b` exceeds
/// [`min_truncation`].
pub fn thm2_ht_cvar_bound(n: usize, alpha: ConfidenceLevel, b: f64, delta: f64) -> f64 {
    6.0 * (-(n as f64) * alpha.beta() * delta * delta / (48.0 * b * b)).exp()
}

/// `(B / min(α, β))^{1/p}`, an upper bound on `|v_α(X)|`.
pub fn var_magnitude_bound(assumption: &MomentAssumption, alpha: ConfidenceLevel) -> f64 {
    (assumption.b / alpha.alpha().min(alpha.beta())).powf(1.0 / assumption.p)
}

/// The three lower limits on `b` for the heavy-tailed CVaR bound:
/// `(Δ/2, |v_α|, [2B/(Δβ)]^{1/(p−1)})`.
pub fn min_truncation_terms(
    delta: f64,
    alpha: ConfidenceLevel,
    assumption: &MomentAssumption,
    v_abs: Option<f64>,
) -> [f64; 3] {
    let var_term = v_abs.unwrap_or_else(|| var_magnitude_bound(assumption, alpha));
    let bias_term = (2.0 * assumption.b / (delta * alpha.beta())).powf(1.0 / (assumption.p - 1.0));
    [delta / 2.0, var_term, bias_term]
}

/// The smallest admissible truncation level: the max of
/// [`min_truncation_terms`].
pub fn min_truncation(
    delta: f64,
    alpha: ConfidenceLevel,
    assumption: &MomentAssumption,
    v_abs: Option<f64>,
) -> f64 {
    min_truncation_terms(delta, alpha, assumption, v_abs)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Result of a GSR error-probability bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBound {
    /// Total bound (mean term + CVaR term).
    pub bound: f64,
    pub mean_term: f64,
    pub cvar_term: f64,
    /// Per-arm sample threshold `n*`.
    pub n_star: Magnitude,
    /// Budget beyond which the bound holds.
    pub threshold: Magnitude,
    /// `T` exceeds the threshold.
    pub valid: bool,
    /// Powers of the budget in the mean and CVaR rates: `1−q_m`, `1−2q_c`.
    pub rate_exponents: (f64, f64),
}

impl ErrorBound {
    pub fn vacuous(&self) -> bool {
        is_vacuous(self.bound)
    }
}

/// The four-term `n*` shared by the uniform-exploration and successive-rejects
/// bounds. The mean term is dropped when `ξ₁ = 0` and the three CVaR terms
/// when `ξ₂ = 0`.
pub fn gsr_n_star(
    objective: &RiskObjective,
    gap2: f64,
    assumption: &MomentAssumption,
    q_m: f64,
    q_c: f64,
) -> Magnitude {
    let MomentAssumption { p, b } = *assumption;
    let alpha = objective.alpha;
    let beta = alpha.beta();
    let mut ln = f64::NEG_INFINITY;
    if objective.uses_mean() {
        let xi1 = objective.xi1;
        ln = ln.max((12.0 * xi1 * b / gap2).ln() / (q_m * (p - 1.0).min(1.0)));
    }
    if objective.uses_cvar() {
        let xi2 = objective.xi2;
        ln = ln
            .max((8.0 * xi2 * b / (beta * gap2)).ln() / (q_c * (p - 1.0)))
            .max((b / alpha.alpha().min(beta)).ln() / (q_c * p))
            .max((gap2 / (8.0 * xi2)).ln() / q_c);
    }
    Magnitude::from_ln(ln)
}

fn check_exponents(objective: &RiskObjective, q_m: f64, q_c: f64) -> Result<(), BoundsError> {
    if objective.uses_mean() && !(q_m > 0.0 && q_m < 1.0) {
        return Err(BoundsError::InvalidArgument(format!(
            "q_m must lie in (0,1), got {q_m}"
        )));
    }
    if objective.uses_cvar() && !(q_c > 0.0 && q_c < 0.5) {
        return Err(BoundsError::InvalidArgument(format!(
            "q_c must lie in (0,1/2), got {q_c}"
        )));
    }
    Ok(())
}

/// Uniform-exploration error bound:
/// `2K·exp(−(T/K)^{1−q_m}·Δ[2]/(16ξ₁)) + 6K·exp(−(T/K)^{1−2q_c}·βΔ[2]²/(768ξ₂²))`,
/// valid for `T > K·n*`.
pub fn ue_error_bound(
    budget: u64,
    arms: usize,
    gaps: &GapProfile,
    objective: &RiskObjective,
    assumption: &MomentAssumption,
    q_m: f64,
    q_c: f64,
) -> Result<ErrorBound, BoundsError> {
    gaps.check_arms(arms)?;
    check_exponents(objective, q_m, q_c)?;
    if arms < 2 || budget < arms as u64 {
        return Err(BoundsError::InvalidArgument(format!(
            "need K >= 2 and T >= K, got K={arms}, T={budget}"
        )));
    }
    let k = arms as f64;
    let per_arm = budget as f64 / k;
    let gap2 = gaps.smallest();
    let beta = objective.alpha.beta();
    let mean_term = if objective.uses_mean() {
        2.0 * k * (-per_arm.powf(1.0 - q_m) * gap2 / (16.0 * objective.xi1)).exp()
    } else {
        0.0
    };
    let cvar_term = if objective.uses_cvar() {
        let xi2 = objective.xi2;
        6.0 * k * (-per_arm.powf(1.0 - 2.0 * q_c) * beta * gap2 * gap2 / (768.0 * xi2 * xi2)).exp()
    } else {
        0.0
    };
    let n_star = gsr_n_star(objective, gap2, assumption, q_m, q_c);
    let threshold = Magnitude::from_ln(k.ln() + n_star.ln);
    Ok(ErrorBound {
        bound: mean_term + cvar_term,
        mean_term,
        cvar_term,
        n_star,
        threshold,
        valid: threshold.exceeded_by(budget as f64),
        rate_exponents: (1.0 - q_m, 1.0 - 2.0 * q_c),
    })
}

/// Successive-rejects error bound: two sums over `i = 2..=K` weighted by
/// `(K+1−i)`, valid for `T > K + K·loḡ(K)·n*`.
pub fn sr_error_bound(
    budget: u64,
    arms: usize,
    gaps: &GapProfile,
    objective: &RiskObjective,
    assumption: &MomentAssumption,
    q_m: f64,
    q_c: f64,
) -> Result<ErrorBound, BoundsError> {
    gaps.check_arms(arms)?;
    check_exponents(objective, q_m, q_c)?;
    if arms < 2 || budget <= arms as u64 {
        return Err(BoundsError::InvalidArgument(format!(
            "need K >= 2 and T > K, got K={arms}, T={budget}"
        )));
    }
    let k = arms as f64;
    let lb = log_bar(arms);
    let scale = (budget as f64 - k) / lb;
    let beta = objective.alpha.beta();
    let mut mean_term = 0.0;
    let mut cvar_term = 0.0;
    for i in 2..=arms {
        let weight = (arms + 1 - i) as f64;
        let gap = gaps.gap(i);
        let fi = i as f64;
        if objective.uses_mean() {
            let e = 1.0 - q_m;
            mean_term += weight
                * 2.0
                * (-(1.0 / (16.0 * objective.xi1)) * scale.powf(e) * gap / fi.powf(e)).exp();
        }
        if objective.uses_cvar() {
            let e = 1.0 - 2.0 * q_c;
            let xi2 = objective.xi2;
            cvar_term += weight
                * 6.0
                * (-(beta / (768.0 * xi2 * xi2)) * scale.powf(e) * gap * gap / fi.powf(e)).exp();
        }
    }
    let n_star = gsr_n_star(objective, gaps.smallest(), assumption, q_m, q_c);
    let threshold = Magnitude::from_ln(k.ln()).add(Magnitude::from_ln((k * lb).ln() + n_star.ln));
    Ok(ErrorBound {
        bound: mean_term + cvar_term,
        mean_term,
        cvar_term,
        n_star,
        threshold,
        valid: threshold.exceeded_by(budget as f64),
        rate_exponents: (1.0 - q_m, 1.0 - 2.0 * q_c),
    })
}

/// A deviation bound together with the sample count beyond which it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationBound {
    pub bound: f64,
    pub n_star: Magnitude,
}

/// Truncated mean with `b = n^q`: `P(|μ − μ†| ≥ Δ) ≤ 2·exp(−n^{1−q}·Δ/4)`
/// for `n > (3B/Δ)^{1/(q·min(1,p−1))}`.
pub fn oblivious_mean_dev_bound(
    n: usize,
    q: f64,
    delta: f64,
    assumption: &MomentAssumption,
) -> DeviationBound {
    let bound = 2.0 * (-(n as f64).powf(1.0 - q) * delta / 4.0).exp();
    let ln = (3.0 * assumption.b / delta).ln() / (q * (assumption.p - 1.0).min(1.0));
    DeviationBound {
        bound,
        n_star: Magnitude::from_ln(ln),
    }
}

/// Truncated CVaR with `b = n^q`: `6·exp(−n^{1−2q}·βΔ²/48)` for `n > n*`,
/// `n* = max((2B/(βΔ))^{1/(q(p−1))}, (B/min(α,β))^{1/(qp)}, (Δ/2)^{1/q})`.
pub fn oblivious_cvar_dev_bound(
    n: usize,
    q: f64,
    delta: f64,
    alpha: ConfidenceLevel,
    assumption: &MomentAssumption,
) -> DeviationBound {
    let beta = alpha.beta();
    let MomentAssumption { p, b } = *assumption;
    let bound = 6.0 * (-(n as f64).powf(1.0 - 2.0 * q) * beta * delta * delta / 48.0).exp();
    let ln = ((2.0 * b / (beta * delta)).ln() / (q * (p - 1.0)))
        .max((b / alpha.alpha().min(beta)).ln() / (q * p))
        .max((delta / 2.0).ln() / q);
    DeviationBound {
        bound,
        n_star: Magnitude::from_ln(ln),
    }
}

/// High-probability deviation radius of the drop-truncated mean when the
/// i-th sample is truncated at `levels[i]` (nondecreasing), holding with
/// probability at least `1 − confidence_delta`.
pub fn truncated_mean_dev_bound(
    levels: &[f64],
    confidence_delta: f64,
    assumption: &MomentAssumption,
) -> Result<f64, BoundsError> {
    if levels.is_empty() || !(confidence_delta > 0.0 && confidence_delta < 1.0) {
        return Err(BoundsError::InvalidArgument(
            "need at least one level and delta in (0,1)".into(),
        ));
    }
    if levels.iter().any(|b| b.is_nan() || *b <= 0.0) || levels.windows(2).any(|w| w[0] > w[1]) {
        return Err(BoundsError::InvalidArgument(
            "truncation levels must be positive and nondecreasing".into(),
        ));
    }
    let MomentAssumption { p, b } = *assumption;
    let n = levels.len() as f64;
    let last = levels[levels.len() - 1];
    let bias_sum: f64 = levels.iter().map(|bi| b / bi.powf(p - 1.0)).sum::<f64>() / n;
    let deviation = 2.0 * last * (2.0 / confidence_delta).ln() / n;
    let tail = if p <= 2.0 {
        b / (2.0 * last.powf(p - 1.0))
    } else {
        b.powf(2.0 / p) / (2.0 * last)
    };
    Ok(bias_sum + deviation + tail)
}

/// Static truncation levels for an algorithm that knows `(p, B, Δ[2])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonObliviousSettings {
    /// `(12Bξ₁/Δ[2])^{1/min(1,p−1)}`; absent when `ξ₁ = 0`.
    pub b_mean: Option<f64>,
    /// `max((8ξ₂B/(βΔ[2]))^{1/(p−1)}, (B/min(α,β))^{1/p})`; absent when `ξ₂ = 0`.
    pub b_cvar: Option<f64>,
}

impl NonObliviousSettings {
    /// `2·exp(−nΔ/(4b_m))`.
    pub fn mean_dev_bound(&self, n: usize, delta: f64) -> Option<f64> {
        self.b_mean
            .map(|bm| 2.0 * (-(n as f64) * delta / (4.0 * bm)).exp())
    }

    /// `6·exp(−nβΔ²/(48b_c²))`.
    pub fn cvar_dev_bound(&self, n: usize, delta: f64, alpha: ConfidenceLevel) -> Option<f64> {
        self.b_cvar
            .map(|bc| thm2_ht_cvar_bound(n, alpha, bc, delta))
    }
}

pub fn nonoblivious_settings(
    objective: &RiskObjective,
    gaps: &GapProfile,
    assumption: &MomentAssumption,
) -> NonObliviousSettings {
    let MomentAssumption { p, b } = *assumption;
    let gap2 = gaps.smallest();
    let alpha = objective.alpha;
    let b_mean = objective
        .uses_mean()
        .then(|| (12.0 * b * objective.xi1 / gap2).powf(1.0 / (p - 1.0).min(1.0)));
    let b_cvar = objective.uses_cvar().then(|| {
        (8.0 * objective.xi2 * b / (alpha.beta() * gap2))
            .powf(1.0 / (p - 1.0))
            .max(var_magnitude_bound(assumption, alpha))
    });
    NonObliviousSettings { b_mean, b_cvar }
}
