//! Globally adaptive 7/15-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Default relative tolerance for every integral in the crate.
pub const DEFAULT_REL_TOL: f64 = 1e-6;

const MAX_SUBINTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrate `f` over the finite interval `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Integral {
    if lo == hi {
        return Integral {
            value: 0.0,
            abs_error: 0.0,
            converged: true,
        };
    }
    if hi < lo {
        let r = integrate(f, hi, lo, rel_tol);
        return Integral {
            value: -r.value,
            ..r
        };
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, lo, hi);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let done = |v: f64, e: f64| e <= (rel_tol * v.abs()).max(1e-300) || !e.is_finite();
    while !done(value, error) && heap.len() < MAX_SUBINTERVALS {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.lo, mid);
        let right = gk15(&f, mid, worst.hi);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift from incremental updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Integral {
        value,
        abs_error: error,
        converged: error <= rel_tol * value.abs() || error == 0.0,
    }
}

/// Integrate `f` over `[lo, ∞)` through the substitution `x = lo + t/(1-t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, lo: f64, rel_tol: f64) -> Integral {
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = lo + t / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, rel_tol)
}

/// Integrate `f` over the whole real line, split at `split`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, split: f64, rel_tol: f64) -> Integral {
    let right = integrate_to_infinity(&f, split, rel_tol);
    let left = integrate_to_infinity(|y| f(2.0 * split - y), split, rel_tol);
    Integral {
        value: left.value + right.value,
        abs_error: left.abs_error + right.abs_error,
        converged: left.converged && right.converged,
    }
}
