#![allow(dead_code)]

use chrono::{Datelike, NaiveDate};
use hsa_core::ingest::{filter_cohort, Cohort, CohortFilter, CohortPerson, FilterReport};
use hsa_core::markov::{estimate_model, FallbackPolicy, TransitionModel};
use hsa_core::model::dominant_age_range;
use hsa_core::sampler::{DistributionSet, InitialPool};
use hsa_core::synth::{generate_dataset, SynthCalibration};
use hsa_core::{AgeRange, ExpenseLevel, LevelBreaks, Money, Sex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn synthetic_cohort(persons: u32, seed: u64) -> Cohort {
    let cal = SynthCalibration {
        persons,
        seed,
        ..SynthCalibration::default()
    };
    let ds = generate_dataset(&cal).expect("synthetic dataset");
    filter_cohort(&ds, CohortFilter::default()).expect("cohort")
}

pub struct Fitted {
    pub cohort: Cohort,
    pub model: TransitionModel,
    pub dists: DistributionSet,
    pub pool: InitialPool,
}

pub fn fitted(persons: u32, seed: u64) -> Fitted {
    let cohort = synthetic_cohort(persons, seed);
    let model = estimate_model(&cohort, FallbackPolicy::default()).expect("model");
    let dists = DistributionSet::from_cohort(&cohort).expect("distributions");
    let pool = InitialPool::from_cohort(&cohort).expect("pool");
    Fitted {
        cohort,
        model,
        dists,
        pool,
    }
}

/// Completed years by comparing (month, day) pairs; a Feb 29 birthday counts
/// from Mar 1 in common years.
fn completed_age(birth: NaiveDate, on: NaiveDate) -> i32 {
    let mut age = on.year() - birth.year();
    let (bm, bd) = (birth.month(), birth.day());
    let reached = if bm == 2 && bd == 29 && !on.leap_year() {
        (on.month(), on.day()) >= (3, 1)
    } else {
        (on.month(), on.day()) >= (bm, bd)
    };
    if !reached {
        age -= 1;
    }
    age
}

/// Month-by-month count over the window: each month is credited to the age
/// range of the completed age on its first day; ties go to the older range.
pub fn dominant_range_oracle(birth: NaiveDate, first_year: i32, last_year: i32) -> Option<AgeRange> {
    let mut counts = [0u32; 9];
    for y in first_year..=last_year {
        for m in 1..=12 {
            let d = NaiveDate::from_ymd_opt(y, m, 1).unwrap();
            if d < birth {
                continue;
            }
            let age = completed_age(birth, d);
            for (i, r) in AgeRange::ALL.iter().enumerate() {
                let (lo, hi) = r.bounds();
                if age >= lo as i32 && age <= hi as i32 {
                    counts[i] += 1;
                }
            }
        }
    }
    let best = *counts.iter().max().unwrap();
    if best == 0 {
        return None;
    }
    let i = counts.iter().rposition(|&c| c == best).unwrap();
    Some(AgeRange::ALL[i])
}

/// A hand-style fixture: `n` persons over 2005-2009 with levels drawn so that
/// every level and most pairs occur. Expenses sit in the middle of each level.
pub fn fixture_cohort(n: usize, seed: u64) -> Cohort {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mid = [150u64, 650, 3_000, 12_000];
    let persons = (0..n)
        .map(|i| {
            let sex = if rng.random::<bool>() { Sex::Female } else { Sex::Male };
            let year = rng.random_range(1944..=1978);
            let birth = NaiveDate::from_ymd_opt(year, rng.random_range(1..=12), rng.random_range(1..=28)).unwrap();
            let mut level = rng.random_range(0..4usize);
            let levels: Vec<ExpenseLevel> = (0..5)
                .map(|_| {
                    if rng.random::<f64>() < 0.4 {
                        level = rng.random_range(0..4);
                    }
                    ExpenseLevel::ALL[level]
                })
                .collect();
            CohortPerson {
                id: format!("f{i:03}"),
                sex,
                birth_date: birth,
                expenses: levels.iter().map(|l| Money::from_units(mid[l.index()])).collect(),
                levels,
                age_range: dominant_age_range(birth, 2007, 2009).unwrap(),
            }
        })
        .collect();
    Cohort {
        study_years: (2005..=2009).collect(),
        persons,
        breaks: LevelBreaks::default(),
        filter: CohortFilter::default(),
        report: FilterReport::default(),
    }
}

/// Every stratum holds exactly one value per level.
pub fn one_value_per_level(values: [u64; 4]) -> DistributionSet {
    use hsa_core::sampler::{EmpiricalDistribution, LevelSlices};
    use hsa_core::Stratum;
    let strata = Stratum::simulation_strata()
        .map(|s| {
            Some(EmpiricalDistribution {
                stratum: s,
                persons: 1,
                slices: LevelSlices::new(values.map(Money::from_units).to_vec(), &LevelBreaks::default()),
            })
        })
        .collect();
    DistributionSet::new(LevelBreaks::default(), strata).expect("distribution set")
}

/// Deterministic chain: history (k, m) always moves to level (k + m) mod 4.
pub fn recurrence_model() -> TransitionModel {
    use hsa_core::markov::{complete_model, row_pair, Order2Matrix};
    use hsa_core::Stratum;
    let mut counts = [[0u64; 4]; 16];
    for (row, c) in counts.iter_mut().enumerate() {
        let (k, m) = row_pair(row);
        c[(k.index() + m.index()) % 4] = 5;
    }
    let raw = Stratum::simulation_strata()
        .map(|s| Order2Matrix::from_counts(s, counts))
        .collect();
    complete_model(raw, [2007, 2008, 2009], LevelBreaks::default(), FallbackPolicy::default())
        .expect("model")
}

/// Cohort built from explicit per-year levels; expenses sit mid-level.
pub fn cohort_from_levels(years: Vec<i32>, rows: &[(Sex, NaiveDate, Vec<ExpenseLevel>)]) -> Cohort {
    let mid = [150u64, 650, 3_000, 12_000];
    let last = *years.last().unwrap();
    let persons = rows
        .iter()
        .enumerate()
        .map(|(i, (sex, birth, levels))| CohortPerson {
            id: format!("h{i:02}"),
            sex: *sex,
            birth_date: *birth,
            expenses: levels.iter().map(|l| Money::from_units(mid[l.index()])).collect(),
            levels: levels.clone(),
            age_range: dominant_age_range(*birth, (last - 2).max(years[0]), last).unwrap(),
        })
        .collect();
    Cohort {
        study_years: years,
        persons,
        breaks: LevelBreaks::default(),
        filter: CohortFilter::default(),
        report: FilterReport::default(),
    }
}
