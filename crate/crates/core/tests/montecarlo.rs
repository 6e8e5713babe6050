//! Sampling, batch reproducibility and summary statistics.

use losguide::montecarlo::{sample_initial_conditions, trial_rng, MetricStats};
use losguide::{aggregate, ecdf, run_batch, CaseId, GuidanceLaw, Outcome, ScenarioSpec, StatsScope, TrialRecord};
use proptest::prelude::*;
use rand::Rng;

fn ks_uniform(values: &mut [f64], lo: f64, hi: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let cdf = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn ra_marginals_are_uniform_over_table_ranges() {
    let spec = ScenarioSpec::canonical(CaseId::RA);
    let n = 100_000;
    let mut cols: Vec<Vec<f64>> = (0..12).map(|_| Vec::with_capacity(n)).collect();
    let mut rng = trial_rng(2024, 0);
    for _ in 0..n {
        let d = sample_initial_conditions(&spec, &mut rng).unwrap();
        for (k, pose) in [d.pursuer, d.evader].iter().enumerate() {
            let b = pose.body().unwrap();
            let vals = [
                b.speed,
                b.theta.to_degrees(),
                b.psi.to_degrees(),
                pose.position.x / 1e3,
                pose.position.y / 1e3,
                pose.altitude() / 1e3,
            ];
            for (j, v) in vals.iter().enumerate() {
                cols[6 * k + j].push(*v);
            }
        }
    }
    let ranges = [spec.pursuer_ranges, spec.evader_ranges];
    for (k, r) in ranges.iter().enumerate() {
        let intervals = [r.speed, r.theta_deg, r.psi_deg, r.north_km, r.east_km, r.altitude_km];
        for (j, iv) in intervals.iter().enumerate() {
            let col = &mut cols[6 * k + j];
            let (min, max) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            assert!(min >= iv.lo - 1e-9 && max <= iv.hi + 1e-9, "vehicle {k} column {j}");
            if iv.is_point() {
                assert!(col.iter().all(|v| (v - iv.lo).abs() < 1e-9));
            } else {
                let d = ks_uniform(col, iv.lo, iv.hi);
                assert!(d < 0.01, "vehicle {k} column {j}: KS {d}");
            }
        }
    }
}

#[test]
fn pursuer_speed_stays_in_range() {
    let spec = ScenarioSpec::canonical(CaseId::RA);
    for i in 0..1000 {
        let d = sample_initial_conditions(&spec, &mut trial_rng(1, i)).unwrap();
        let v = d.pursuer.velocity.norm();
        assert!((400.0..=600.0).contains(&v));
        assert_eq!(d.resampled, 0);
    }
}

#[test]
fn batch_is_independent_of_parallelism() {
    let spec = ScenarioSpec::canonical(CaseId::FA);
    let a = run_batch(&spec, 100, 77, 1, StatsScope::All).unwrap();
    let b = run_batch(&spec, 100, 77, 8, StatsScope::All).unwrap();
    assert_eq!(a, b);
    assert!(a
        .records
        .iter()
        .enumerate()
        .all(|(i, r)| r.trial == i as u64 && r.seed == 77));
}

#[test]
fn single_trial_batch_has_zero_spread() {
    let spec = ScenarioSpec::canonical(CaseId::RA).with_law(GuidanceLaw::Pn);
    let r = run_batch(&spec, 1, 3, 1, StatsScope::All).unwrap();
    assert_eq!(r.stats.n_trials, 1);
    assert_eq!(r.stats.miss.std, 0.0);
    assert_eq!(r.stats.time.std, 0.0);
    assert_eq!(r.stats.miss.mean, r.records[0].miss_distance);
    assert!(run_batch(&spec, 0, 3, 1, StatsScope::All).is_err());
}

fn synthetic(i: u64) -> TrialRecord {
    TrialRecord {
        trial: i,
        seed: 0,
        intercept_time: 10.0 + i as f64 * 0.01,
        miss_distance: i as f64,
        closing_velocity: -500.0,
        outcome: if i < 990 { Outcome::Intercept } else { Outcome::Miss },
        branch_history: Vec::new(),
    }
}

#[test]
fn aggregate_matches_closed_form_moments() {
    let records: Vec<TrialRecord> = (0..1000).map(synthetic).collect();
    let s = aggregate(&records, StatsScope::All).unwrap();
    // 0..n-1: mean (n-1)/2, sample variance n(n+1)/12
    assert!((s.miss.mean - 499.5).abs() < 1e-12);
    assert!((s.miss.std - (1000.0f64 * 1001.0 / 12.0).sqrt()).abs() < 1e-12 * 300.0);
    assert!((s.time.mean - 14.995).abs() < 1e-12);
    assert!((s.time.std - 0.01 * (1000.0f64 * 1001.0 / 12.0).sqrt()).abs() < 1e-12);
    assert_eq!(s.closing_velocity.std, 0.0);
    assert!((s.fail_rate - 0.01).abs() < 1e-15);
    assert_eq!((s.miss.min, s.miss.max), (0.0, 999.0));

    let ok = aggregate(&records, StatsScope::SuccessesOnly).unwrap();
    assert_eq!(ok.n_used, 990);
    assert!((ok.miss.mean - 494.5).abs() < 1e-12);
    assert_eq!(ok.fail_rate, s.fail_rate);
}

#[test]
fn ecdf_of_uniform_samples_tracks_identity() {
    let mut rng = trial_rng(8, 0);
    let values: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let e = ecdf(&values).unwrap();
    let worst = e.points.iter().map(|(v, f)| (f - v).abs()).fold(0.0, f64::max);
    assert!(worst < 0.02, "{worst}");
    assert_eq!(e.points.last().unwrap().1, 1.0);
}

proptest! {
    #[test]
    fn ecdf_is_monotone(values in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let e = ecdf(&values).unwrap();
        prop_assert_eq!(e.points.len(), values.len());
        for pair in e.points.windows(2) {
            prop_assert!(pair[0].0 <= pair[1].0 && pair[0].1 < pair[1].1);
        }
        prop_assert_eq!(e.points.last().unwrap().1, 1.0);
    }

    #[test]
    fn stats_are_well_formed(values in prop::collection::vec(-1e3f64..1e3, 1..100)) {
        let m = MetricStats::from_values(&values).unwrap();
        prop_assert!(m.std >= 0.0);
        prop_assert!(m.min <= m.mean + 1e-9 && m.mean <= m.max + 1e-9);
    }
}
