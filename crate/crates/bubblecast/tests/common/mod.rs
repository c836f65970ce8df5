#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use bubblecast_core::lppl::{evaluate, LpplParams};
use bubblecast_core::timeseries::{date_from_ordinal, day_ordinal, PriceSeries};
use bubblecast_core::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn origin() -> f64 {
    day_ordinal(NaiveDate::from_ymd_opt(2009, 1, 1).unwrap())
}

/// The reference bubble: A=4.6, B=-0.05, C=0.008, alpha=0.5, omega=8,
/// phi=1 with the critical time `lead` days after the last of `n` daily
/// observations.
pub fn reference_params(n: usize, lead: f64) -> LpplParams {
    LpplParams {
        a: 4.6,
        b: -0.05,
        c: 0.008,
        alpha: 0.5,
        omega: 8.0,
        phi: 1.0,
        tc: origin() + (n - 1) as f64 + lead,
    }
}

/// Daily closes of `p` with Gaussian ln-price noise drawn from a ChaCha8
/// stream seeded with `seed`.
pub fn bubble_series(p: &LpplParams, n: usize, noise: f64, seed: u64) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, noise).unwrap();
    let t0 = origin();
    PriceSeries::from_pairs(
        "synthetic",
        (0..n).map(|i| {
            let t = t0 + i as f64;
            (
                date_from_ordinal(t),
                (evaluate(p, t).unwrap() + dist.sample(&mut rng)).exp(),
            )
        }),
    )
    .unwrap()
}

/// A bubble followed by `after` days of steady decline.
pub fn bubble_then_decline(n: usize, after: usize, seed: u64) -> PriceSeries {
    let p = reference_params(n, 30.0);
    let base = bubble_series(&p, n, 0.005, seed);
    let last = base.observations()[n - 1].price;
    let t0 = origin() + n as f64;
    let tail = (0..after).map(|i| (date_from_ordinal(t0 + i as f64), last * (-0.002 * (i + 1) as f64).exp()));
    PriceSeries::from_pairs(
        "synthetic",
        base.observations().iter().map(|o| (o.date, o.price)).chain(tail),
    )
    .unwrap()
}

pub fn write_series(series: &PriceSeries, path: &Path) {
    std::fs::write(path, bubblecast::ingest::to_csv_string(series)).unwrap();
}

pub fn bubblecast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubblecast"))
        .args(args)
        .output()
        .unwrap()
}
