//! Hand-derived reference values shared by the bound tests and the
//! acceptance harness.

#![allow(dead_code)]

use riskbandit::bandit::log_bar;
use riskbandit::bounds::{
    min_truncation, min_truncation_terms, nonoblivious_settings, oblivious_cvar_dev_bound,
    oblivious_mean_dev_bound, thm1_bounded_cvar_bound, thm2_ht_cvar_bound,
    truncated_mean_dev_bound, ue_error_bound, var_magnitude_bound, GapProfile, MomentAssumption,
};
use riskbandit::{ConfidenceLevel, RiskObjective};

pub struct SpotValue {
    pub name: &'static str,
    pub computed: f64,
    pub expected: f64,
}

impl SpotValue {
    pub fn relative_error(&self) -> f64 {
        ((self.computed - self.expected) / self.expected).abs()
    }
}

fn level(a: f64) -> ConfidenceLevel {
    ConfidenceLevel::new(a).unwrap()
}

fn assumption(p: f64, b: f64) -> MomentAssumption {
    MomentAssumption::new(p, b).unwrap()
}

/// Every closed-form reference value, with expectations evaluated by hand
/// (30-digit arithmetic) rather than through the crate.
pub fn spot_values() -> Vec<SpotValue> {
    let a95 = level(0.95);
    let two_two = assumption(2.0, 2.0);
    let mut out = Vec::new();
    let mut push = |name, computed, expected| {
        out.push(SpotValue {
            name,
            computed,
            expected,
        })
    };

    push(
        "thm1 n=100 b=1 eps=0.5",
        thm1_bounded_cvar_bound(100, a95, 1.0, 0.5),
        5.344_236_703_041_886_7,
    );
    push(
        "thm1 eps=0",
        thm1_bounded_cvar_bound(100, a95, 1.0, 0.0),
        6.0,
    );
    push(
        "thm2 n=1e4 b=10 delta=1",
        thm2_ht_cvar_bound(10_000, a95, 10.0, 1.0),
        5.406_450_634_327_744,
    );
    push(
        "min truncation delta=0.2",
        min_truncation(0.2, a95, &two_two, None),
        400.0,
    );
    push(
        "min truncation bias term p=3",
        min_truncation_terms(0.2, a95, &assumption(3.0, 2.0), None)[2],
        20.0,
    );
    push(
        "var magnitude B=2 p=2",
        var_magnitude_bound(&two_two, a95),
        6.324_555_320_336_759,
    );
    push(
        "var magnitude alpha=0.5",
        var_magnitude_bound(&two_two, level(0.5)),
        2.0,
    );

    let cvar_obj = RiskObjective::cvar(a95);
    let ue = ue_error_bound(
        10_000,
        10,
        &GapProfile::new(vec![0.25; 9]).unwrap(),
        &cvar_obj,
        &two_two,
        0.5,
        0.2,
    )
    .unwrap();
    push("ue bound K=10 T=1e4", ue.bound, 59.984_597_745_207_516);
    push("ue n* = 1280^5 (ln)", ue.n_star.ln, 35.773_076_784_568_32);
    push(
        "ue n* = 1280^5 (log10)",
        ue.n_star.log10(),
        15.536_049_848_239_342,
    );

    let om = oblivious_mean_dev_bound(100, 0.5, 4.0, &two_two);
    push("oblivious mean bound", om.bound, 9.079_985_952_496_971e-5);
    let om = oblivious_mean_dev_bound(100, 0.75, 0.1, &two_two);
    push(
        "oblivious mean n* = 60^(4/3)",
        om.n_star.value(),
        234.892_058_470_131_81,
    );
    let om3 = oblivious_mean_dev_bound(100, 0.75, 0.1, &assumption(3.0, 2.0));
    push(
        "oblivious mean n* p=3",
        om3.n_star.value(),
        234.892_058_470_131_81,
    );

    let oc = oblivious_cvar_dev_bound(10_000, 0.2, 1.0, a95, &two_two);
    push("oblivious cvar bound", oc.bound, 4.618_660_059_486_308);
    let oc = oblivious_cvar_dev_bound(10_000, 0.2, 0.25, a95, &two_two);
    push(
        "oblivious cvar n* = 320^5 (ln)",
        oc.n_star.ln,
        28.841_604_978_968_86,
    );

    let levels = vec![10.0; 100];
    push(
        "truncated mean radius p=2",
        truncated_mean_dev_bound(&levels, 0.05, &two_two).unwrap(),
        1.037_775_890_822_787_3,
    );
    push(
        "truncated mean radius p=3",
        truncated_mean_dev_bound(&levels, 0.05, &assumption(3.0, 2.0)).unwrap(),
        0.837_145_943_421_197_2,
    );

    let mean_obj = RiskObjective::mean(a95);
    let s = nonoblivious_settings(&mean_obj, &GapProfile::new(vec![0.1]).unwrap(), &two_two);
    push("non-oblivious b_m", s.b_mean.unwrap(), 240.0);
    let s = nonoblivious_settings(&cvar_obj, &GapProfile::new(vec![0.25]).unwrap(), &two_two);
    push("non-oblivious b_c", s.b_cvar.unwrap(), 1280.0);
    let s = nonoblivious_settings(
        &mean_obj,
        &GapProfile::new(vec![0.1]).unwrap(),
        &assumption(1.5, 2.0),
    );
    push("non-oblivious b_m p=1.5", s.b_mean.unwrap(), 57_600.0);

    push("log_bar(10)", log_bar(10), 2.428_968_253_968_253_8);
    out
}

/// Plain successive rejects on sample means: every arm draws its whole
/// sample path up front, and phase `k` compares the means of the first `n_k`
/// draws. Returns the surviving arm.
pub fn naive_successive_rejects(
    arms: &[riskbandit::ArmDistribution],
    counts: &[u64],
    seed: riskbandit::Seed,
) -> usize {
    let longest = *counts.last().unwrap() as usize;
    let paths: Vec<Vec<f64>> = arms
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rng = seed.stream(i as u64, 0, 0);
            (0..longest).map(|_| d.draw(&mut rng)).collect()
        })
        .collect();
    let mut alive: Vec<usize> = (0..arms.len()).collect();
    for &n in counts {
        let n = n as usize;
        let means: Vec<f64> = alive
            .iter()
            .map(|&i| paths[i][..n].iter().sum::<f64>() / n as f64)
            .collect();
        let mut worst = 0;
        for j in 1..alive.len() {
            if means[j] > means[worst] {
                worst = j;
            }
        }
        alive.remove(worst);
    }
    alive[0]
}
