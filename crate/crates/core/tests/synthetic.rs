use std::collections::HashMap;

use chrono::NaiveDate;
use hsa_core::ingest::{filter_cohort, parse_person_years, CohortFilter};
use hsa_core::model::age_at;
use hsa_core::synth::{generate_dataset, SynthCalibration};
use hsa_core::{AgeRange, Sex};

/// Zero share and positive median per stratum, measured in the reference
/// year. The tolerances hold for large cohorts: at the default size the
/// smallest strata have a few hundred persons and a binomial standard error
/// near 1.3 points, so the check runs on 300,000 persons.
#[test]
fn large_cohort_hits_stratum_targets() {
    let cal = SynthCalibration { persons: 300_000, ..SynthCalibration::default() };
    let ds = generate_dataset(&cal).unwrap();
    let reference = NaiveDate::from_ymd_opt(cal.reference_year, 7, 1).unwrap();

    let mut by: HashMap<(Sex, AgeRange), Vec<f64>> = HashMap::new();
    for r in ds.records.iter().filter(|r| r.year == cal.reference_year) {
        let age = age_at(r.birth_date, reference).unwrap();
        if let Some(range) = AgeRange::from_age(age) {
            by.entry((r.sex, range)).or_default().push(r.expense.as_f64());
        }
    }
    let mut zeros = 0usize;
    let mut total = 0usize;
    for s in &cal.strata {
        let v = by.get(&(s.sex, s.age_range)).expect("stratum populated");
        let n_zero = v.iter().filter(|x| **x == 0.0).count();
        zeros += n_zero;
        total += v.len();
        let zero_pct = 100.0 * n_zero as f64 / v.len() as f64;
        assert!(
            (zero_pct - 100.0 * s.zero_probability).abs() <= 1.5,
            "{:?} {:?}: zero share {zero_pct:.2}% vs {:.2}%",
            s.sex,
            s.age_range,
            100.0 * s.zero_probability
        );
        let mut pos: Vec<f64> = v.iter().copied().filter(|x| *x > 0.0).collect();
        pos.sort_by(f64::total_cmp);
        let median = hsa_core::stats::percentile_sorted(&pos, 50.0);
        assert!(
            (median / s.median - 1.0).abs() <= 0.25,
            "{:?} {:?}: median {median:.0} vs {:.0}",
            s.sex,
            s.age_range,
            s.median
        );
    }
    let overall = 100.0 * zeros as f64 / total as f64;
    assert!((4.0..=8.0).contains(&overall), "overall zero share {overall:.2}%");
}

#[test]
fn default_cohort_zero_share_in_range() {
    let ds = generate_dataset(&SynthCalibration::default()).unwrap();
    for year in 2005..=2009 {
        let v: Vec<_> = ds.records.iter().filter(|r| r.year == year).collect();
        let pct = 100.0 * v.iter().filter(|r| r.expense.is_zero()).count() as f64 / v.len() as f64;
        assert!((4.0..=8.0).contains(&pct), "{year}: {pct:.2}%");
    }
}

#[test]
fn synthetic_data_loads_through_ingest() {
    let cal = SynthCalibration { persons: 2_000, seed: 3, ..SynthCalibration::default() };
    let ds = generate_dataset(&cal).unwrap();
    let mut bytes = Vec::new();
    ds.write_csv(&mut bytes).unwrap();
    let back = parse_person_years(bytes.as_slice()).unwrap();
    assert_eq!(back, ds);
    let cohort = filter_cohort(&back, CohortFilter::default()).unwrap();
    assert!(cohort.report.kept > 1_000, "kept {}", cohort.report.kept);
    assert!(cohort.report.kept < cohort.report.input_persons);
    assert_eq!(cohort.study_years, (2005..=2009).collect::<Vec<_>>());
}

#[test]
fn generator_is_deterministic_per_seed() {
    let cal = SynthCalibration { persons: 500, ..SynthCalibration::default() };
    assert_eq!(generate_dataset(&cal).unwrap(), generate_dataset(&cal).unwrap());
    let other = SynthCalibration { seed: cal.seed + 1, ..cal.clone() };
    assert_ne!(generate_dataset(&cal).unwrap(), generate_dataset(&other).unwrap());
}
