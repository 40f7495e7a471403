mod common;

use chrono::NaiveDate;
use hsa_core::hsa::{simulate_account, HsaParams};
use hsa_core::markov::{complete_model, FallbackPolicy, Order2Matrix};
use hsa_core::report::{balance_snapshots, ci_usage_table, level_share_table};
use hsa_core::sampler::{InitialLife, InitialPool};
use hsa_core::sim::{run_study, LifeSummary, ReplicationResult, ReplicationSummary, SimInputs, SimulationParams, StudyResult};
use hsa_core::stats::{skewness, Moments};
use hsa_core::{AgeRange, ExpenseLevel, LevelBreaks, Money, Sex, Stratum};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use ExpenseLevel::{F1, F2, F3, F4};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

#[test]
fn usage_counts_zero_one_one_three() {
    let params = SimulationParams {
        n_lives: 4,
        n_replications: 1,
        hsa: HsaParams { years: 4, deposits: 4, ..HsaParams::default() },
        ..SimulationParams::default()
    };
    // A 6,000 expense against a fresh 2,500 deposit sends 3,500 to insurance;
    // in the second year the account holds 5,000 and only 1,000 goes over.
    let paths = [[0, 0, 0, 0], [6_000, 0, 0, 0], [0, 6_000, 0, 0], [6_000, 6_000, 6_000, 0]];
    let lives: Vec<LifeSummary> = paths
        .iter()
        .map(|p| {
            let path = p.map(|u| {
                let m = Money::from_units(u);
                (ExpenseLevel::classify(m), m)
            });
            LifeSummary::from(&simulate_account(Sex::Female, 25, path, &params.hsa).unwrap())
        })
        .collect();
    assert_eq!(lives.iter().map(|l| l.ci_use_count).collect::<Vec<_>>(), vec![0, 1, 1, 3]);
    let r = ReplicationResult { index: 0, seed: 0, lives };
    let s = ReplicationSummary::from_result(&r, &params).unwrap();
    let study = StudyResult::assemble(params, vec![(s, None)]);
    let t = ci_usage_table(&study).unwrap();

    assert_eq!(t.iter().map(|r| r.uses).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    let pct: Vec<f64> = t.iter().map(|r| r.pct_lives).collect();
    assert_eq!(pct, vec![25.0, 50.0, 0.0, 25.0]);
    let cum: Vec<f64> = t.iter().map(|r| r.cum_pct_lives).collect();
    assert_eq!(cum, vec![25.0, 75.0, 75.0, 100.0]);
    // Insurance: 3,500 + 1,000 at one use, 10,500 at three; 15,000 in all.
    assert_eq!(t[0].pct_ci, Some(0.0));
    assert!(close(t[1].pct_ci.unwrap(), 30.0));
    assert!(close(t[3].pct_ci.unwrap(), 70.0));
    assert_eq!(t[3].cum_pct_ci, Some(100.0));
    assert!(close(t[1].ci_per_life.unwrap().mean, 2_250.0));
    assert!(t[2].ci_per_life.is_none());
}

#[test]
fn level_shares_over_three_strata() {
    let young = NaiveDate::from_ymd_opt(1980, 6, 15).unwrap();
    let mid = NaiveDate::from_ymd_opt(1965, 6, 15).unwrap();
    let rows = vec![
        (Sex::Female, young, vec![F1, F1, F2]),
        (Sex::Female, young, vec![F1, F3, F4]),
        (Sex::Male, young, vec![F2, F2, F2]),
        (Sex::Male, mid, vec![F4, F4, F1]),
    ];
    let c = common::cohort_from_levels(vec![2007, 2008, 2009], &rows);
    let t = level_share_table(&c);
    assert_eq!(t.len(), 4);
    assert_eq!(t[0].stratum, Some(Stratum::new(Sex::Female, AgeRange::A25To30)));
    assert_eq!(t[0].counts, [3, 1, 1, 1]);
    assert!(close(t[0].pct[0], 50.0));
    assert_eq!(t[1].stratum, Some(Stratum::new(Sex::Male, AgeRange::A25To30)));
    assert_eq!(t[1].counts, [0, 3, 0, 0]);
    assert_eq!(t[2].stratum, Some(Stratum::new(Sex::Male, AgeRange::A41To45)));
    assert_eq!(t[2].counts, [1, 0, 0, 2]);
    assert_eq!(t[3].stratum, None);
    assert_eq!(t[3].counts, [4, 4, 1, 3]);
    assert!(close(t[3].pct.iter().sum::<f64>(), 100.0));
}

#[test]
fn zero_expense_snapshots_are_exact() {
    let raw = Stratum::simulation_strata()
        .map(|s| Order2Matrix::from_counts(s, [[3, 0, 0, 0]; 16]))
        .collect();
    let model = complete_model(raw, [2007, 2008, 2009], LevelBreaks::default(), FallbackPolicy::default()).unwrap();
    let dists = common::one_value_per_level([0, 500, 2_000, 8_000]);
    let pool = InitialPool {
        year: 2009,
        lives: vec![
            InitialLife { sex: Sex::Female, history: (F1, F1), first_expense: Money::ZERO },
            InitialLife { sex: Sex::Male, history: (F2, F1), first_expense: Money::ZERO },
        ],
    };
    let params = SimulationParams { n_lives: 25, n_replications: 4, ..SimulationParams::default() };
    let inputs = SimInputs::new(&model, &dists, &pool, &params).unwrap();
    let study = run_study(&inputs).unwrap();
    let ages = [25, 30, 40, 50, 65];
    for row in balance_snapshots(&study, &ages).unwrap() {
        let want = 2_500.0 * f64::from(row.age - 24);
        let s = &row.summary;
        assert_eq!(s.n_zero.mean, 0.0);
        for (rank, v) in &s.percentiles {
            let v = v.unwrap();
            assert_eq!(v.mean, want, "age {} p{rank}", row.age);
            assert_eq!(v.sd, Some(0.0));
        }
        assert_eq!(s.mean.unwrap().mean, want);
        assert_eq!(s.sd.unwrap().mean, 0.0);
    }
    assert_eq!(study.totals.ci_paid, Money::ZERO);
}

#[test]
fn symmetric_sample_has_near_zero_skewness() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let normal = Normal::new(50_000.0, 8_000.0).unwrap();
    let v: Vec<f64> = (0..200_000).map(|_| normal.sample(&mut rng)).collect();
    let g = skewness(&v).unwrap();
    assert!(g.abs() <= 0.05, "skewness {g}");
    // Merging per-chunk moments gives the pooled value.
    let mut m = Moments::default();
    for chunk in v.chunks(7_919) {
        m.merge(&Moments::from_values(chunk));
    }
    assert!((m.skewness().unwrap() - g).abs() < 1e-9);
    // Mirror images have opposite skewness.
    let skewed: Vec<f64> = (1..=50).map(|i| f64::from(i * i)).collect();
    let mirrored: Vec<f64> = skewed.iter().map(|x| -x).collect();
    assert!(close(skewness(&skewed).unwrap(), -skewness(&mirrored).unwrap()));
}
