use bubblecast_core::lppl::{evaluate, FilterConfig, Interval, LpplParams, SearchConfig};
use bubblecast_core::scanner::{generate_windows, nominal_windows, scan, WindowGrid};
use bubblecast_core::timeseries::{date_from_ordinal, day_ordinal, PriceSeries};
use bubblecast_core::NaiveDate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn origin() -> f64 {
    day_ordinal(NaiveDate::from_ymd_opt(2009, 1, 1).unwrap())
}

fn daily(lp: impl Iterator<Item = f64>) -> PriceSeries {
    let t0 = origin();
    PriceSeries::from_pairs(
        "s",
        lp.enumerate().map(|(i, v)| (date_from_ordinal(t0 + i as f64), v.exp())),
    )
    .unwrap()
}

fn closed_form(span: i64, g: &WindowGrid) -> usize {
    let (dt1, dt2, lo, hi, t2s) = (
        g.dt1 as i64,
        g.dt2 as i64,
        g.min_len as i64,
        g.max_len as i64,
        g.t2_span as i64,
    );
    (0..=t2s / dt2)
        .map(|k| span - k * dt2)
        .filter(|&h| h >= lo)
        .map(|h| ((h.min(hi) - lo) / dt1 + 1) as usize)
        .sum()
}

#[test]
fn window_count_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..50 {
        let min_len = rng.random_range(20..200) as f64;
        let grid = WindowGrid {
            dt1: rng.random_range(1..=min_len as i64) as f64,
            dt2: rng.random_range(1..30) as f64,
            min_len,
            max_len: min_len + rng.random_range(1..600) as f64,
            t2_span: rng.random_range(0..90) as f64,
        };
        let n = rng.random_range(min_len as usize + 1..1200);
        let s = daily((0..n).map(|i| 1.0 + 0.001 * i as f64));
        let got = nominal_windows(&s, &grid).unwrap();
        assert_eq!(
            got.len(),
            closed_form(n as i64 - 1, &grid),
            "case {case}: {grid:?} n={n}"
        );
        let last = day_ordinal(s.last_date());
        for (t1, t2) in &got {
            let len = t2 - t1;
            assert!(len >= grid.min_len && len <= grid.max_len);
            assert!(*t2 <= last && *t2 >= last - grid.t2_span);
        }
        // Daily data: every nominal window is fully populated.
        assert_eq!(generate_windows(&s, &grid, 5).unwrap().len(), got.len());
    }
}

fn bubble(seed: u64, noise: f64) -> (PriceSeries, f64) {
    let n = 200;
    let tc = origin() + (n - 1) as f64 + 60.0;
    let p = LpplParams {
        a: 4.6,
        b: -0.05,
        c: 0.008,
        alpha: 0.5,
        omega: 8.0,
        phi: 1.0,
        tc,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, noise).unwrap();
    let t0 = origin();
    let s = daily((0..n).map(|i| evaluate(&p, t0 + i as f64).unwrap() + dist.sample(&mut rng)));
    (s, tc)
}

#[test]
fn synthetic_bubble_clusters_near_true_tc() {
    let (s, tc) = bubble(1, 0.002);
    let r = scan(
        &s,
        &WindowGrid::default(),
        &SearchConfig::default(),
        &FilterConfig::default(),
    )
    .unwrap();
    assert!(r.n_found >= 1);
    assert_eq!(r.n_tested, r.fits.len());
    let mut dev: Vec<f64> = r.qualified().map(|(_, f)| f.params.tc - tc).collect();
    dev.sort_by(f64::total_cmp);
    let median = dev[dev.len() / 2];
    let near = dev.iter().filter(|d| d.abs() <= 15.0).count();
    assert!(median.abs() <= 15.0, "median deviation {median}");
    assert!(
        near * 5 >= dev.len() * 4,
        "{near}/{} within 15 days: {dev:?}",
        dev.len()
    );
}

#[test]
fn random_walk_false_positive_rate() {
    let (mut found, mut tested) = (0, 0);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let dist = Normal::new(0.0, 0.01).unwrap();
        let mut lp = 4.6;
        let s = daily((0..200).map(|_| {
            lp += dist.sample(&mut rng);
            lp
        }));
        let r = scan(
            &s,
            &WindowGrid::default(),
            &SearchConfig::default(),
            &FilterConfig::default(),
        )
        .unwrap();
        found += r.n_found;
        tested += r.n_tested;
    }
    let rate = found as f64 / tested as f64;
    assert!(rate < 0.10, "false-positive rate {rate}");
}

#[test]
fn impossible_filter_finds_nothing() {
    let (s, _) = bubble(2, 0.01);
    let filter = FilterConfig {
        alpha_range: Interval::new(0.99990, 0.99995),
        ..FilterConfig::default()
    };
    let r = scan(&s, &WindowGrid::default(), &SearchConfig::default(), &filter).unwrap();
    assert_eq!(r.n_found, 0);
    assert!(r.n_tested > 0);
}

#[test]
fn scan_is_deterministic_and_serializable() {
    let (s, _) = bubble(3, 0.01);
    let grid = WindowGrid {
        t2_span: 10.0,
        ..WindowGrid::default()
    };
    let a = scan(&s, &grid, &SearchConfig::default(), &FilterConfig::default()).unwrap();
    let b = scan(&s, &grid, &SearchConfig::default(), &FilterConfig::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.peak_date, s.peak_date());
    assert_eq!(a.last_obs_date, s.last_date());
    assert!(a.n_found <= a.n_tested);
}

#[test]
fn scan_rejects_short_series() {
    let s = daily((0..50).map(|i| i as f64 * 0.01));
    assert!(scan(
        &s,
        &WindowGrid::default(),
        &SearchConfig::default(),
        &FilterConfig::default()
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windows_sorted_and_inside_bounds(
        n in 120usize..600, gap_seed in 0u64..1000, span in 0.0..60.0f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(gap_seed);
        let mut t = origin();
        let s = PriceSeries::from_pairs("g", (0..n).map(|_| {
            t += rng.random_range(1..4) as f64;
            (date_from_ordinal(t), 10.0)
        })).unwrap();
        let grid = WindowGrid { t2_span: span, ..WindowGrid::default() };
        let times = s.times();
        let ws = generate_windows(&s, &grid, 30).unwrap();
        for pair in ws.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            prop_assert!(a.nominal_t2 > b.nominal_t2 || (a.nominal_t2 == b.nominal_t2 && a.len_days() < b.len_days()));
        }
        for w in &ws {
            prop_assert!(w.population() >= 30);
            prop_assert!(times[w.first] >= w.nominal_t1 && times[w.last] <= w.nominal_t2);
        }
    }
}
