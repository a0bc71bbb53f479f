//! Parametric arm loss models.
//!
//! Each model samples by inverse transform from one open-interval uniform
//! per draw, so a stream of draws is prefix-stable and a positive rescaling
//! of the model rescales every draw. Closed-form mean, VaR and CVaR serve as
//! oracles for the estimators in [`crate::risk`].

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::quadrature::{integrate_real_line, DEFAULT_REL_TOL};
use crate::risk::ConfidenceLevel;
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mean is undefined for this distribution (Pareto shape must exceed 1)")]
    MeanUndefined,
    #[error("distribution is not continuous with a strictly increasing CDF")]
    NotC1,
    #[error("cannot parse distribution literal `{literal}`: {reason}")]
    Parse { literal: String, reason: String },
}

/// A loss distribution for one arm.
///
/// Construct through the checked constructors or by parsing a literal such
/// as `pareto(shape=3,scale=0.6)`; the enum fields are public for matching
/// only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmDistribution {
    /// Pareto on `[scale, ∞)` with tail index `shape`.
    Pareto {
        shape: f64,
        scale: f64,
    },
    Exponential {
        mean: f64,
    },
    Gaussian {
        mean: f64,
        std: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Constant {
        c: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<f64, DistributionError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(DistributionError::InvalidParameter(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<f64, DistributionError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DistributionError::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

impl ArmDistribution {
    pub fn pareto(shape: f64, scale: f64) -> Result<Self, DistributionError> {
        Ok(Self::Pareto {
            shape: positive("shape", shape)?,
            scale: positive("scale", scale)?,
        })
    }

    /// Pareto with the given shape whose mean equals `mean`
    /// (scale = mean·(shape−1)/shape).
    pub fn pareto_with_mean(shape: f64, mean: f64) -> Result<Self, DistributionError> {
        if shape.is_nan() || shape <= 1.0 {
            return Err(DistributionError::MeanUndefined);
        }
        Self::pareto(shape, positive("mean", mean)? * (shape - 1.0) / shape)
    }

    pub fn exponential(mean: f64) -> Result<Self, DistributionError> {
        Ok(Self::Exponential {
            mean: positive("mean", mean)?,
        })
    }

    pub fn gaussian(mean: f64, std: f64) -> Result<Self, DistributionError> {
        Ok(Self::Gaussian {
            mean: finite("mean", mean)?,
            std: positive("std", std)?,
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DistributionError> {
        finite("lo", lo)?;
        finite("hi", hi)?;
        if lo >= hi {
            return Err(DistributionError::InvalidParameter(format!(
                "uniform requires lo < hi, got lo={lo}, hi={hi}"
            )));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn constant(c: f64) -> Result<Self, DistributionError> {
        Ok(Self::Constant { c: finite("c", c)? })
    }

    /// Multiply every draw by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, DistributionError> {
        let f = positive("factor", factor)?;
        match *self {
            Self::Pareto { shape, scale } => Self::pareto(shape, scale * f),
            Self::Exponential { mean } => Self::exponential(mean * f),
            Self::Gaussian { mean, std } => Self::gaussian(mean * f, std * f),
            Self::Uniform { lo, hi } => Self::uniform(lo * f, hi * f),
            Self::Constant { c } => Self::constant(c * f),
        }
    }

    /// Continuous with a strictly increasing CDF on the support.
    pub fn is_c1(&self) -> bool {
        !matches!(self, Self::Constant { .. })
    }

    /// Inverse CDF at `u ∈ (0,1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Pareto { shape, scale } => scale * (-(-u).ln_1p() / shape).exp(),
            Self::Exponential { mean } => -mean * (-u).ln_1p(),
            Self::Gaussian { mean, std } => mean + std * std_normal().inverse_cdf(u),
            Self::Uniform { lo, hi } => lo + (hi - lo) * u,
            Self::Constant { c } => c,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { shape, scale } => {
                if x <= scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(shape)
                }
            }
            Self::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            Self::Gaussian { mean, std } => std_normal().cdf((x - mean) / std),
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Constant { c } => {
                if x < c {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// `P(X > x)`, computed without cancellation in the upper tail.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { shape, scale } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(shape)
                }
            }
            Self::Exponential { mean } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            Self::Gaussian { mean, std } => std_normal().sf((x - mean) / std),
            _ => 1.0 - self.cdf(x),
        }
    }

    /// One draw.
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open_unit(rng))
    }

    /// Append `n` draws from `rng` to `out`.
    pub fn draw_into<R: RngCore + ?Sized>(&self, rng: &mut R, n: usize, out: &mut Vec<f64>) {
        out.reserve(n);
        for _ in 0..n {
            out.push(self.draw(rng));
        }
    }

    /// `n` draws from the (0,0,0) stream of `seed`.
    pub fn sample(&self, seed: Seed, n: usize) -> Vec<f64> {
        let mut rng = seed.stream(0, 0, 0);
        let mut out = Vec::with_capacity(n);
        self.draw_into(&mut rng, n, &mut out);
        out
    }

    pub fn analytic_mean(&self) -> Result<f64, DistributionError> {
        match *self {
            Self::Pareto { shape, scale } => {
                if shape <= 1.0 {
                    Err(DistributionError::MeanUndefined)
                } else {
                    Ok(shape * scale / (shape - 1.0))
                }
            }
            Self::Exponential { mean } => Ok(mean),
            Self::Gaussian { mean, .. } => Ok(mean),
            Self::Uniform { lo, hi } => Ok(0.5 * (lo + hi)),
            Self::Constant { c } => Ok(c),
        }
    }

    /// The α-quantile `F⁻¹(α)`.
    pub fn analytic_var(&self, alpha: ConfidenceLevel) -> Result<f64, DistributionError> {
        if !self.is_c1() {
            return Err(DistributionError::NotC1);
        }
        Ok(self.quantile(alpha.alpha()))
    }

    /// `c_α = v_α + E[X − v_α]⁺ / (1−α)` in closed form.
    pub fn analytic_cvar(&self, alpha: ConfidenceLevel) -> Result<f64, DistributionError> {
        let v = self.analytic_var(alpha)?;
        let beta = alpha.beta();
        match *self {
            Self::Pareto { shape, .. } => {
                if shape <= 1.0 {
                    Err(DistributionError::MeanUndefined)
                } else {
                    Ok(shape / (shape - 1.0) * v)
                }
            }
            Self::Exponential { mean } => Ok(v + mean),
            Self::Gaussian { mean, std } => {
                let z = (v - mean) / std;
                Ok(mean + std * std_normal().pdf(z) / beta)
            }
            Self::Uniform { hi, .. } => Ok(0.5 * (hi + v)),
            Self::Constant { .. } => Err(DistributionError::NotC1),
        }
    }

    /// `E|X|^p`, or `+∞` when the moment diverges.
    pub fn moment_bound(&self, p: f64) -> f64 {
        match *self {
            Self::Pareto { shape, scale } => {
                if p >= shape {
                    f64::INFINITY
                } else {
                    shape * scale.powf(p) / (shape - p)
                }
            }
            Self::Exponential { mean } => mean.powf(p) * gamma(p + 1.0),
            Self::Gaussian { mean, std } => {
                let n = std_normal();
                integrate_real_line(
                    |x| x.abs().powf(p) * n.pdf((x - mean) / std) / std,
                    mean,
                    DEFAULT_REL_TOL * 1e-2,
                )
                .value
            }
            Self::Uniform { lo, hi } => {
                let anti = |x: f64| x.signum() * x.abs().powf(p + 1.0) / (p + 1.0);
                (anti(hi) - anti(lo)) / (hi - lo)
            }
            Self::Constant { c } => c.abs().powf(p),
        }
    }
}

/// Uniform on the open interval (0,1) from the top 53 bits of one `u64`.
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

impl fmt::Display for ArmDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Pareto { shape, scale } => write!(f, "pareto(shape={shape},scale={scale})"),
            Self::Exponential { mean } => write!(f, "exp(mean={mean})"),
            Self::Gaussian { mean, std } => write!(f, "gauss(mean={mean},std={std})"),
            Self::Uniform { lo, hi } => write!(f, "uniform(lo={lo},hi={hi})"),
            Self::Constant { c } => write!(f, "const(c={c})"),
        }
    }
}

impl FromStr for ArmDistribution {
    type Err = DistributionError;

    /// Parse `name(key=value,...)`; case- and whitespace-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: String| DistributionError::Parse {
            literal: s.to_string(),
            reason,
        };
        let compact: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        let open = compact
            .find('(')
            .ok_or_else(|| fail("expected `name(key=value,...)`".into()))?;
        if !compact.ends_with(')') {
            return Err(fail("missing closing `)`".into()));
        }
        let name = &compact[..open];
        let body = &compact[open + 1..compact.len() - 1];
        let mut params: Vec<(&str, f64)> = Vec::new();
        if !body.is_empty() {
            for item in body.split(',') {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| fail(format!("expected key=value, got `{item}`")))?;
                let v: f64 = v
                    .parse()
                    .map_err(|_| fail(format!("`{v}` is not a number")))?;
                if params.iter().any(|(seen, _)| *seen == k) {
                    return Err(fail(format!("duplicate key `{k}`")));
                }
                params.push((k, v));
            }
        }
        let keys: &[&str] = match name {
            "pareto" => &["shape", "scale"],
            "exp" | "exponential" => &["mean"],
            "gauss" | "gaussian" | "normal" => &["mean", "std"],
            "uniform" => &["lo", "hi"],
            "const" | "constant" => &["c"],
            other => return Err(fail(format!("unknown distribution `{other}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !keys.contains(k)) {
            return Err(fail(format!("unexpected key `{k}` for {name}")));
        }
        let get = |key: &str| {
            params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| fail(format!("missing key `{key}`")))
        };
        match name {
            "pareto" => Self::pareto(get("shape")?, get("scale")?),
            "exp" | "exponential" => Self::exponential(get("mean")?),
            "gauss" | "gaussian" | "normal" => Self::gaussian(get("mean")?, get("std")?),
            "uniform" => Self::uniform(get("lo")?, get("hi")?),
            _ => Self::constant(get("c")?),
        }
    }
}

impl Serialize for ArmDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ArmDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
