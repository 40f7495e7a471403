//! Synthetic longitudinal claims data.
//!
//! Positive annual expenses are lognormal around each stratum's median. The
//! log-scale deviation of a person-year mixes three standard normal parts:
//! a permanent frailty, a stationary AR(1) shock that fades with the gap
//! between years, and independent noise. Cross-year persistence therefore
//! decays with the gap but never vanishes. Zero years are independent draws
//! with the stratum's zero probability.

use chrono::{Datelike, Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::model::{age_at, AgeRange, PersonYearRecord, Sex, Stratum};
use crate::money::Money;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumCalibration {
    pub sex: Sex,
    pub age_range: AgeRange,
    /// Relative weight of the stratum when drawing persons.
    pub weight: f64,
    pub zero_probability: f64,
    /// Median of positive annual expenses, in currency units.
    pub median: f64,
    /// Standard deviation of log positive expenses.
    pub log_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthCalibration {
    pub seed: u64,
    pub persons: u32,
    pub first_year: i32,
    pub last_year: i32,
    /// Persons are placed in their stratum's age range on 1 July of this year.
    pub reference_year: i32,
    /// Share of the log variance that is permanent per person.
    pub frailty_share: f64,
    /// Share of the log variance carried by the AR(1) shock.
    pub shock_share: f64,
    pub shock_autocorrelation: f64,
    /// Probability that a person leaves the portfolio before the last year.
    pub dropout_rate: f64,
    pub strata: Vec<StratumCalibration>,
}

/// (weight, zero %, p25, median, p75) per stratum from the 2007 column of the
/// portfolio's descriptive statistics by sex and age range. Weights are the
/// person counts of that column; log_sd is ln(p75 / p25) / 1.349.
const DEFAULT_TARGETS: [(Sex, AgeRange, f64, f64, f64, f64, f64); 16] = [
    (Sex::Female, AgeRange::A25To30, 1267.0, 3.95, 330.0, 769.0, 1797.0),
    (Sex::Female, AgeRange::A31To35, 1707.0, 4.98, 393.0, 863.0, 1909.0),
    (Sex::Female, AgeRange::A36To40, 2126.0, 6.40, 346.0, 791.0, 1802.0),
    (Sex::Female, AgeRange::A41To45, 2454.0, 5.30, 434.0, 912.0, 1887.0),
    (Sex::Female, AgeRange::A46To50, 2464.0, 5.24, 545.0, 1121.0, 2259.0),
    (Sex::Female, AgeRange::A51To55, 1847.0, 4.44, 584.0, 1207.0, 2547.0),
    (Sex::Female, AgeRange::A56To60, 1098.0, 5.19, 685.0, 1432.0, 2863.0),
    (Sex::Female, AgeRange::A61To65, 366.0, 5.19, 643.0, 1509.0, 3455.0),
    (Sex::Male, AgeRange::A25To30, 915.0, 8.09, 180.0, 433.0, 906.0),
    (Sex::Male, AgeRange::A31To35, 1664.0, 8.17, 188.0, 475.0, 1106.0),
    (Sex::Male, AgeRange::A36To40, 2139.0, 6.69, 214.0, 500.0, 1098.0),
    (Sex::Male, AgeRange::A41To45, 2376.0, 6.02, 230.0, 566.0, 1280.0),
    (Sex::Male, AgeRange::A46To50, 2767.0, 5.35, 281.0, 674.0, 1477.0),
    (Sex::Male, AgeRange::A51To55, 2552.0, 5.21, 330.0, 789.0, 1785.0),
    (Sex::Male, AgeRange::A56To60, 1255.0, 5.58, 421.0, 1019.0, 2353.0),
    (Sex::Male, AgeRange::A61To65, 424.0, 8.25, 411.0, 1026.0, 2449.0),
];

/// Interquartile range of the standard normal.
const NORMAL_IQR: f64 = 1.349;

impl Default for SynthCalibration {
    fn default() -> Self {
        SynthCalibration {
            seed: 20_050_101,
            // Size of the five-year cohort of 25 to 65 year olds.
            persons: 27_780,
            first_year: 2005,
            last_year: 2009,
            reference_year: 2007,
            frailty_share: 0.35,
            shock_share: 0.30,
            shock_autocorrelation: 0.6,
            // Roughly 11,000 of about 39,000 members were not followed for
            // the whole period.
            dropout_rate: 0.28,
            strata: DEFAULT_TARGETS
                .iter()
                .map(|&(sex, age_range, weight, zero_pct, p25, median, p75)| StratumCalibration {
                    sex,
                    age_range,
                    weight,
                    zero_probability: zero_pct / 100.0,
                    median,
                    log_sd: (p75 / p25).ln() / NORMAL_IQR,
                })
                .collect(),
        }
    }
}

impl SynthCalibration {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.persons == 0 {
            return bad("persons must be positive".into());
        }
        if self.first_year > self.last_year {
            return bad("first_year after last_year".into());
        }
        let shares = [self.frailty_share, self.shock_share];
        if shares.iter().any(|s| !(0.0..=1.0).contains(s)) || shares.iter().sum::<f64>() > 1.0 {
            return bad("frailty_share and shock_share must be in [0, 1] and sum to at most 1".into());
        }
        if !(0.0..1.0).contains(&self.shock_autocorrelation) {
            return bad("shock_autocorrelation must be in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must be in [0, 1]".into());
        }
        if self.strata.is_empty() || self.strata.iter().map(|s| s.weight).sum::<f64>() <= 0.0 {
            return bad("at least one stratum with positive weight is required".into());
        }
        for s in &self.strata {
            let st = Stratum::new(s.sex, s.age_range);
            if !(0.0..=1.0).contains(&s.zero_probability) {
                return bad(format!("{st}: zero_probability outside [0, 1]"));
            }
            if !(s.weight >= 0.0 && s.median > 0.0 && s.log_sd > 0.0) {
                return bad(format!("{st}: weight must be non-negative, median and log_sd positive"));
            }
        }
        let mut seen: Vec<Stratum> = self.strata.iter().map(|s| Stratum::new(s.sex, s.age_range)).collect();
        seen.sort();
        seen.dedup();
        if seen.len() != self.strata.len() {
            return bad("duplicate stratum in calibration".into());
        }
        Ok(())
    }

    fn find(&self, sex: Sex, range: AgeRange) -> Option<&StratumCalibration> {
        self.strata
            .iter()
            .find(|s| s.sex == sex && s.age_range == range)
    }

    /// Calibration for a person of `sex` aged `age`. Ages outside every
    /// calibrated range borrow the nearest calibrated range of that sex.
    fn for_age(&self, sex: Sex, age: u32) -> &StratumCalibration {
        let exact = AgeRange::from_age(age).and_then(|r| self.find(sex, r));
        exact.unwrap_or_else(|| {
            self.strata
                .iter()
                .filter(|s| s.sex == sex)
                .chain(self.strata.iter())
                .min_by_key(|s| {
                    let (lo, hi) = s.age_range.bounds();
                    (s.sex != sex, lo.saturating_sub(age).max(age.saturating_sub(hi)))
                })
                .expect("validated non-empty")
        })
    }
}

fn pick_weighted<'a>(strata: &'a [StratumCalibration], rng: &mut impl Rng) -> &'a StratumCalibration {
    let total: f64 = strata.iter().map(|s| s.weight).sum();
    let mut u = rng.random::<f64>() * total;
    for s in strata {
        if u < s.weight {
            return s;
        }
        u -= s.weight;
    }
    strata.iter().rev().find(|s| s.weight > 0.0).expect("positive weight")
}

fn to_money(units: f64) -> Money {
    let cents = (units * 100.0).round();
    if cents >= u64::MAX as f64 {
        Money::from_cents(u64::MAX / 4)
    } else {
        Money::from_cents(cents.max(1.0) as u64)
    }
}

/// Generates a dataset in the ingest format. The output depends only on the
/// calibration, including its seed.
pub fn generate_dataset(cal: &SynthCalibration) -> Result<Dataset> {
    cal.validate()?;
    let mut rng = rng_from_seed(cal.seed);
    let years: Vec<i32> = (cal.first_year..=cal.last_year).collect();
    let reference = NaiveDate::from_ymd_opt(cal.reference_year, 7, 1)
        .ok_or_else(|| Error::InvalidParams("bad reference_year".into()))?;
    let wf = cal.frailty_share.sqrt();
    let wa = cal.shock_share.sqrt();
    let we = (1.0 - cal.frailty_share - cal.shock_share).max(0.0).sqrt();
    let phi = cal.shock_autocorrelation;
    let innovation = (1.0 - phi * phi).sqrt();
    let width = (cal.persons.max(1) as f64).log10().ceil() as usize + 1;

    let mut records = Vec::with_capacity(cal.persons as usize * years.len());
    for i in 0..cal.persons {
        let home = pick_weighted(&cal.strata, &mut rng);
        let (lo, hi) = home.age_range.bounds();
        let age = rng.random_range(lo..=hi);
        // Uniform birth date giving completed age `age` on the reference day.
        let latest = NaiveDate::from_ymd_opt(reference.year() - age as i32, 7, 1).expect("date");
        let birth = latest - Duration::days(rng.random_range(0..365));
        debug_assert_eq!(age_at(birth, reference).ok(), Some(age));

        let last_kept = if rng.random::<f64>() < cal.dropout_rate && years.len() > 1 {
            rng.random_range(0..years.len() - 1)
        } else {
            years.len() - 1
        };

        let frailty: f64 = StandardNormal.sample(&mut rng);
        let mut shock: f64 = StandardNormal.sample(&mut rng);
        for (t, &year) in years.iter().enumerate() {
            if t > 0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                shock = phi * shock + innovation * z;
            }
            let noise: f64 = StandardNormal.sample(&mut rng);
            let zero_draw: f64 = rng.random();
            if t > last_kept {
                continue;
            }
            let mid_year = NaiveDate::from_ymd_opt(year, 7, 1).expect("date");
            let age_now = age_at(birth, mid_year).unwrap_or(0);
            let c = cal.for_age(home.sex, age_now);
            let expense = if zero_draw < c.zero_probability {
                Money::ZERO
            } else {
                let dev = wf * frailty + wa * shock + we * noise;
                to_money(c.median * (c.log_sd * dev).exp())
            };
            records.push(PersonYearRecord {
                person_id: format!("s{i:0width$}"),
                sex: home.sex,
                birth_date: birth,
                year,
                expense,
            });
        }
    }
    Dataset::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(persons: u32) -> SynthCalibration {
        SynthCalibration {
            persons,
            ..SynthCalibration::default()
        }
    }

    #[test]
    fn default_log_sd_from_iqr() {
        let c = SynthCalibration::default();
        let f25 = &c.strata[0];
        assert!((f25.log_sd - (1797.0f64 / 330.0).ln() / 1.349).abs() < 1e-12);
        assert_eq!(c.strata.len(), 16);
        c.validate().unwrap();
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_dataset(&small(300)).unwrap();
        let b = generate_dataset(&small(300)).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&SynthCalibration { seed: 1, ..small(300) }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn all_zero_when_zero_probability_is_one() {
        let mut cal = small(200);
        for s in &mut cal.strata {
            s.zero_probability = 1.0;
        }
        let ds = generate_dataset(&cal).unwrap();
        assert!(ds.records.iter().all(|r| r.expense.is_zero()));
    }

    #[test]
    fn dropouts_leave_gaps() {
        let ds = generate_dataset(&small(1000)).unwrap();
        let persons = ds.distinct_persons();
        assert_eq!(persons, 1000);
        assert!(ds.records.len() < 5 * persons);
        let none = generate_dataset(&SynthCalibration { dropout_rate: 0.0, ..small(100) }).unwrap();
        assert_eq!(none.records.len(), 500);
    }

    #[test]
    fn rejects_invalid_calibration() {
        let mut cal = small(10);
        cal.strata[3].zero_probability = 1.5;
        assert!(generate_dataset(&cal).is_err());
        let cal = SynthCalibration { frailty_share: 0.8, shock_share: 0.3, ..small(10) };
        assert!(cal.validate().is_err());
        let mut cal = small(10);
        cal.strata.push(cal.strata[0].clone());
        assert!(cal.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = SynthCalibration::default();
        let back: SynthCalibration = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let partial: SynthCalibration = serde_json::from_str(r#"{"persons": 12}"#).unwrap();
        assert_eq!(partial.persons, 12);
        assert_eq!(partial.strata.len(), 16);
    }
}
