use gapkit_core::gap_stats::min_gap;
use gapkit_core::harmonic::{sample_fejer, FejerCdf};
use gapkit_core::metric_mc::*;
use gapkit_core::{Error, SequenceSpec, SpacingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_experiment(spec: SequenceSpec) -> McExperiment {
    let mut e = McExperiment::new(spec);
    e.n_schedule = vec![8, 16, 32];
    e.m_rule = MRule::Power { exponent: 1.5 };
    e.samples = 300;
    e.seed = 99;
    e
}

#[test]
fn sandwich_and_positivity_per_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.random_range(2..30);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let alpha = sample_fejer(&mut rng);
        let m = rng.random_range(2..300u64);
        let x = x_statistic(&v, alpha, m, StatKind::Indicator).unwrap();
        let lo = x_statistic(&v, alpha, m, StatKind::Minus).unwrap();
        let hi = x_statistic(&v, alpha, m, StatKind::Plus).unwrap();
        let tol = 1e-9 * (n * n) as f64;
        assert!(lo <= x + tol && x <= hi + tol, "{lo} {x} {hi}");
        let delta = min_gap(&v, alpha).unwrap().delta;
        if (delta - 1.0 / m as f64).abs() > 1e-12 {
            assert_eq!(x > 0.0, delta <= 1.0 / m as f64);
        }
    }
}

#[test]
fn records_agree_with_summary() {
    let mut e = small_experiment(SequenceSpec::power(1.0));
    e.keep_records = true;
    let s = expectation_mc(&e, StatKind::Minus).unwrap();
    for row in &s.per_n {
        let xs: Vec<f64> = s.records.iter().filter(|r| r.n == row.n).map(|r| r.x_minus.unwrap()).collect();
        assert_eq!(xs.len(), e.samples);
        let (mean, var, se) = moments(&xs);
        assert_eq!((mean, var, se), (row.mean, row.variance, row.stderr));
        assert!((se - (var / e.samples as f64).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn same_seed_same_summary_across_pools() {
    let e = small_experiment(SequenceSpec::quadratic(1.0, 2f64.sqrt(), 0.0));
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (expectation_mc(&e, StatKind::Plus).unwrap(), min_gap_distribution(&e, 0.5).unwrap()))
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn huge_window_parameter_drives_expectation_to_zero() {
    let mut e = small_experiment(SequenceSpec::power(1.0));
    e.n_schedule = vec![16];
    e.m_rule = MRule::Fixed { m: 1 << 14 };
    let s = expectation_mc(&e, StatKind::Minus).unwrap();
    assert!(s.per_n[0].mean.abs() < 0.05, "{}", s.per_n[0].mean);
}

#[test]
fn spacing_hypothesis_is_enforced() {
    let mut e = small_experiment(SequenceSpec::power(0.5));
    e.hypothesis = Some((SpacingMode::UnitGap, 1.0));
    assert!(matches!(expectation_mc(&e, StatKind::Minus), Err(Error::Precondition(_))));
    assert!(matches!(min_gap_distribution(&e, 0.5), Err(Error::Precondition(_))));
}

#[test]
fn variance_ratio_is_bounded_for_quadratic() {
    let mut e = McExperiment::new(SequenceSpec::quadratic(1.0, 2f64.sqrt(), 0.0));
    e.n_schedule = vec![64];
    e.m_rule = MRule::Fixed { m: 256 };
    e.samples = 400;
    e.seed = 3;
    let s = variance_mc(&e).unwrap();
    let r = s.per_n[0].variance_ratio.unwrap();
    assert!(r > 0.0 && r <= 10.0, "{r}");
}

#[test]
fn chebyshev_consistency() {
    let mut e = small_experiment(SequenceSpec::power(1.0));
    e.samples = 1000;
    let s = expectation_mc(&e, StatKind::Minus).unwrap();
    for row in &s.per_n {
        let p = row.nonpositive_fraction.unwrap();
        let se = (p * (1.0 - p) / e.samples as f64).sqrt();
        assert!(p <= row.variance / (row.mean * row.mean) + 5.0 * se, "N={}", row.n);
    }
}

#[test]
fn geometric_path_matches_direct_doubling() {
    let mut e = McExperiment::new(SequenceSpec::geometric(vec![2.0]));
    e.n_schedule = vec![20, 40];
    e.samples = 50;
    e.keep_records = true;
    let s = min_gap_distribution(&e, 0.5).unwrap();
    for r in &s.records {
        let v: Vec<f64> = (1..=r.n as i32).map(|k| 2f64.powi(k)).collect();
        let direct = min_gap(&v, r.alpha).unwrap().delta;
        // the completed low bits of alpha move each point by at most 2^(n-64)
        assert!((direct - r.delta.unwrap()).abs() < 2f64.powi(r.n as i32 - 60), "{direct} {:?}", r.delta);
    }
}

#[test]
fn fejer_sampler_ks() {
    let cdf = FejerCdf::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut xs: Vec<f64> = (0..100_000).map(|_| sample_fejer(&mut rng)).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.0055, "KS {ks}");
}

#[test]
fn khinchin_examples() {
    assert!(khinchin_filter(2f64.sqrt(), 70, 1 << 40).unwrap());
    let liouville: f64 = (1..=4).map(|k: i32| 10f64.powi(-(1..=k).product::<i32>())).sum();
    assert!(!khinchin_filter(liouville, 2, 1 << 40).unwrap());
    assert!(!khinchin_filter(0.3, 2, 1 << 40).unwrap());
    assert!(khinchin_filter(0.3, 1, 10).is_err());
}

#[test]
fn coarse_batch_counts_are_consistent() {
    let s = coarse_scale_batch(1024, 0.05, 5.0, 100, 2, true).unwrap();
    assert_eq!(s.records.len(), 100);
    assert_eq!(s.applicable, s.satisfied + s.violated);
    assert!(s.small_q_measure <= s.small_q_bound);
    for r in &s.records {
        assert!(r.witness.q <= 1024 / 3);
    }
}
