//! Pooled empirical expense distributions and initial-life sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Cohort;
use crate::model::{dominant_age_range, AgeRange, ExpenseLevel, LevelBreaks, Sex, Stratum};
use crate::money::Money;

/// Sorted values with the contiguous slice belonging to each level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSlices {
    pub values: Vec<Money>,
    /// Level `k` occupies `values[offsets[k]..offsets[k + 1]]`.
    pub offsets: [usize; 5],
}

impl LevelSlices {
    pub fn new(mut values: Vec<Money>, breaks: &LevelBreaks) -> LevelSlices {
        values.sort_unstable();
        let mut offsets = [0; 5];
        for (k, &upper) in breaks.upper.iter().enumerate() {
            offsets[k + 1] = values.partition_point(|&v| v <= upper);
        }
        offsets[4] = values.len();
        LevelSlices { values, offsets }
    }

    pub fn slice(&self, level: ExpenseLevel) -> &[Money] {
        let k = level.index();
        &self.values[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn is_consistent(&self, breaks: &LevelBreaks) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
            && self.offsets[0] == 0
            && self.offsets[4] == self.values.len()
            && self.offsets.windows(2).all(|w| w[0] <= w[1])
            && ExpenseLevel::ALL
                .iter()
                .all(|&l| self.slice(l).iter().all(|&v| breaks.classify(v) == l))
    }
}

fn draw(slice: &[Money], rng: &mut impl Rng) -> Option<Money> {
    (!slice.is_empty()).then(|| slice[rng.random_range(0..slice.len())])
}

/// All expense values of one stratum's members, pooled over the study years.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub stratum: Stratum,
    pub persons: usize,
    #[serde(flatten)]
    pub slices: LevelSlices,
}

impl EmpiricalDistribution {
    pub fn slice(&self, level: ExpenseLevel) -> &[Money] {
        self.slices.slice(level)
    }

    /// Uniform draw from the level's slice, `None` if it is empty.
    pub fn sample(&self, level: ExpenseLevel, rng: &mut impl Rng) -> Option<Money> {
        draw(self.slice(level), rng)
    }
}

/// Stratum membership is the person's sex and dominant age range over the
/// last three study years, the same rule the order-2 estimator uses.
pub fn build_empirical(cohort: &Cohort, stratum: Stratum) -> Result<EmpiricalDistribution> {
    let members: Vec<_> = cohort
        .persons
        .iter()
        .filter(|p| p.stratum() == stratum)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyStratum(stratum));
    }
    let values = members
        .iter()
        .flat_map(|p| p.expenses.iter().copied())
        .collect();
    Ok(EmpiricalDistribution {
        stratum,
        persons: members.len(),
        slices: LevelSlices::new(values, &cohort.breaks),
    })
}

/// Where a within-level draw came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DrawSource {
    Stratum,
    AdjacentRange(AgeRange),
    SexPooled,
    AllPooled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DistributionSetRaw {
    breaks: LevelBreaks,
    strata: Vec<Option<EmpiricalDistribution>>,
}

/// Distributions for all 16 simulation strata plus the pools used when a
/// stratum has nothing at the requested level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSetRaw", into = "DistributionSetRaw")]
pub struct DistributionSet {
    pub breaks: LevelBreaks,
    /// Indexed by [`Stratum::index`]; `None` for strata without members.
    pub strata: Vec<Option<EmpiricalDistribution>>,
    by_sex: Vec<LevelSlices>,
    all: LevelSlices,
}

impl TryFrom<DistributionSetRaw> for DistributionSet {
    type Error = Error;

    fn try_from(raw: DistributionSetRaw) -> Result<Self> {
        DistributionSet::new(raw.breaks, raw.strata)
    }
}

impl From<DistributionSet> for DistributionSetRaw {
    fn from(d: DistributionSet) -> Self {
        DistributionSetRaw {
            breaks: d.breaks,
            strata: d.strata,
        }
    }
}

impl DistributionSet {
    pub fn new(breaks: LevelBreaks, strata: Vec<Option<EmpiricalDistribution>>) -> Result<Self> {
        if strata.len() != Stratum::COUNT {
            return Err(Error::InvalidParams(format!(
                "{} stratum distributions, expected {}",
                strata.len(),
                Stratum::COUNT
            )));
        }
        for (i, d) in strata.iter().enumerate() {
            if let Some(d) = d {
                if d.stratum.index() != Some(i) || !d.slices.is_consistent(&breaks) {
                    return Err(Error::InvalidParams(format!(
                        "distribution {i} ({}) is inconsistent",
                        d.stratum
                    )));
                }
            }
        }
        let pool = |keep: &dyn Fn(&Stratum) -> bool| {
            let values = strata
                .iter()
                .flatten()
                .filter(|d| keep(&d.stratum))
                .flat_map(|d| d.slices.values.iter().copied())
                .collect();
            LevelSlices::new(values, &breaks)
        };
        let by_sex = Sex::ALL.iter().map(|&s| pool(&|st| st.sex == s)).collect();
        let all = pool(&|_| true);
        Ok(DistributionSet {
            breaks,
            strata,
            by_sex,
            all,
        })
    }

    pub fn from_cohort(cohort: &Cohort) -> Result<Self> {
        let strata = Stratum::simulation_strata()
            .map(|s| match build_empirical(cohort, s) {
                Ok(d) => Ok(Some(d)),
                Err(Error::EmptyStratum(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        DistributionSet::new(cohort.breaks, strata)
    }

    pub fn get(&self, stratum: Stratum) -> Option<&EmpiricalDistribution> {
        self.strata.get(stratum.index()?)?.as_ref()
    }

    pub fn sex_pool(&self, sex: Sex) -> &LevelSlices {
        &self.by_sex[sex as usize]
    }

    pub fn pooled(&self) -> &LevelSlices {
        &self.all
    }

    /// Draws uniformly from the stratum's slice for `level`. If that slice is
    /// empty, tries in order the same sex's adjacent age ranges (older first),
    /// the same-sex pool, and the pool over all strata.
    pub fn sample_within_level(
        &self,
        stratum: Stratum,
        level: ExpenseLevel,
        rng: &mut impl Rng,
    ) -> Result<(Money, DrawSource)> {
        if let Some(v) = self.get(stratum).and_then(|d| d.sample(level, rng)) {
            return Ok((v, DrawSource::Stratum));
        }
        if let Some(r) = stratum.age_range.simulation_index() {
            let candidates = [r.checked_add(1), r.checked_sub(1)];
            for c in candidates.into_iter().flatten() {
                let Some(&range) = AgeRange::SIMULATION.get(c) else {
                    continue;
                };
                let near = Stratum::new(stratum.sex, range);
                if let Some(v) = self.get(near).and_then(|d| d.sample(level, rng)) {
                    return Ok((v, DrawSource::AdjacentRange(range)));
                }
            }
        }
        if let Some(v) = draw(self.sex_pool(stratum.sex).slice(level), rng) {
            return Ok((v, DrawSource::SexPooled));
        }
        if let Some(v) = draw(self.all.slice(level), rng) {
            return Ok((v, DrawSource::AllPooled));
        }
        Err(Error::SamplerExhausted { stratum, level })
    }

    /// Per stratum, natural logs of the positive values and the number of
    /// zeros left out of the log view.
    pub fn log_expenses(&self) -> Vec<LogExpenses> {
        self.strata
            .iter()
            .flatten()
            .map(|d| {
                let zeros = d.slices.values.iter().filter(|v| v.is_zero()).count();
                LogExpenses {
                    stratum: d.stratum,
                    zeros,
                    log_values: d
                        .slices
                        .values
                        .iter()
                        .filter(|v| !v.is_zero())
                        .map(|v| v.as_f64().ln())
                        .collect(),
                }
            })
            .collect()
    }
}

pub fn sample_within_level(
    set: &DistributionSet,
    stratum: Stratum,
    level: ExpenseLevel,
    rng: &mut impl Rng,
) -> Result<Money> {
    set.sample_within_level(stratum, level, rng).map(|(v, _)| v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogExpenses {
    pub stratum: Stratum,
    pub zeros: usize,
    pub log_values: Vec<f64>,
}

/// Starting state of a simulated life: sex, the two most recent levels and
/// the first simulated year's expense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialLife {
    pub sex: Sex,
    pub history: (ExpenseLevel, ExpenseLevel),
    pub first_expense: Money,
}

/// Source persons for initial lives: cohort members whose age range over
/// the final study year is 25-30.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialPool {
    pub year: i32,
    pub lives: Vec<InitialLife>,
}

impl InitialPool {
    pub fn from_cohort(cohort: &Cohort) -> Result<InitialPool> {
        let n = cohort.study_years.len();
        if n < 2 {
            return Err(Error::InvalidYears(
                "initial lives need two study years".into(),
            ));
        }
        let year = cohort.last_year();
        let lives: Vec<InitialLife> = cohort
            .persons
            .iter()
            .filter(|p| {
                matches!(dominant_age_range(p.birth_date, year, year), Ok(AgeRange::A25To30))
            })
            .map(|p| InitialLife {
                sex: p.sex,
                history: (p.levels[n - 2], p.levels[n - 1]),
                first_expense: p.expenses[n - 1],
            })
            .collect();
        if lives.is_empty() {
            return Err(Error::EmptyInitialPool);
        }
        Ok(InitialPool { year, lives })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> InitialLife {
        self.lives[rng.random_range(0..self.lives.len())]
    }
}

pub fn sample_initial_life(cohort: &Cohort, rng: &mut impl Rng) -> Result<InitialLife> {
    Ok(InitialPool::from_cohort(cohort)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CohortFilter, CohortPerson, FilterReport};
    use crate::seed::rng_from_seed;
    use chrono::NaiveDate;

    fn person(id: &str, sex: Sex, birth: &str, expenses: [u64; 5]) -> CohortPerson {
        let birth_date = NaiveDate::parse_from_str(birth, "%Y-%m-%d").unwrap();
        let expenses: Vec<Money> = expenses.iter().map(|&u| Money::from_units(u)).collect();
        CohortPerson {
            id: id.into(),
            sex,
            birth_date,
            levels: expenses.iter().map(|&e| ExpenseLevel::classify(e)).collect(),
            expenses,
            age_range: dominant_age_range(birth_date, 2007, 2009).unwrap(),
        }
    }

    fn cohort(persons: Vec<CohortPerson>) -> Cohort {
        Cohort {
            study_years: (2005..=2009).collect(),
            persons,
            breaks: LevelBreaks::default(),
            filter: CohortFilter::default(),
            report: FilterReport::default(),
        }
    }

    #[test]
    fn two_person_stratum_has_ten_values() {
        let c = cohort(vec![
            person("a", Sex::Female, "1970-01-01", [0, 300, 301, 1000, 5001]),
            person("b", Sex::Female, "1970-05-05", [7, 6, 5, 4, 3]),
        ]);
        let s = Stratum::new(Sex::Female, AgeRange::A36To40);
        let d = build_empirical(&c, s).unwrap();
        assert_eq!(d.slices.len(), 10);
        assert_eq!(d.persons, 2);
        let f1: Vec<u64> = d.slice(ExpenseLevel::F1).iter().map(|m| m.cents() / 100).collect();
        assert_eq!(f1, vec![0, 3, 4, 5, 6, 7, 300]);
        assert_eq!(d.slice(ExpenseLevel::F2).len(), 2);
        assert!(d.slice(ExpenseLevel::F3).is_empty());
        assert_eq!(d.slice(ExpenseLevel::F4), &[Money::from_units(5001)]);
        assert!(build_empirical(&c, Stratum::new(Sex::Male, AgeRange::A36To40)).is_err());
    }

    #[test]
    fn singleton_slice_always_drawn() {
        let c = cohort(vec![person("a", Sex::Male, "1960-01-01", [9000, 0, 0, 0, 0])]);
        let set = DistributionSet::from_cohort(&c).unwrap();
        let s = Stratum::new(Sex::Male, AgeRange::A46To50);
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let (v, src) = set.sample_within_level(s, ExpenseLevel::F4, &mut rng).unwrap();
            assert_eq!(v, Money::from_units(9000));
            assert_eq!(src, DrawSource::Stratum);
        }
    }

    #[test]
    fn fallback_chain_order() {
        // Male 46-50 has F4 values, male 51-55 only F1, female 41-45 only F2.
        let c = cohort(vec![
            person("a", Sex::Male, "1960-01-01", [9000, 0, 0, 0, 0]),
            person("b", Sex::Male, "1955-01-01", [1, 1, 1, 1, 1]),
            person("c", Sex::Female, "1965-01-01", [500, 500, 500, 500, 500]),
        ]);
        let set = DistributionSet::from_cohort(&c).unwrap();
        let mut rng = rng_from_seed(2);
        let m51 = Stratum::new(Sex::Male, AgeRange::A51To55);
        assert_eq!(
            set.sample_within_level(m51, ExpenseLevel::F4, &mut rng).unwrap(),
            (Money::from_units(9000), DrawSource::AdjacentRange(AgeRange::A46To50))
        );
        // Two ranges away: same-sex pool.
        let m56 = Stratum::new(Sex::Male, AgeRange::A56To60);
        assert_eq!(
            set.sample_within_level(m56, ExpenseLevel::F4, &mut rng).unwrap().1,
            DrawSource::SexPooled
        );
        // No female F4 anywhere: global pool.
        let f25 = Stratum::new(Sex::Female, AgeRange::A25To30);
        assert_eq!(
            set.sample_within_level(f25, ExpenseLevel::F4, &mut rng).unwrap(),
            (Money::from_units(9000), DrawSource::AllPooled)
        );
        // No F3 anywhere.
        let e = set.sample_within_level(f25, ExpenseLevel::F3, &mut rng).unwrap_err();
        assert!(matches!(e, Error::SamplerExhausted { .. }));
    }

    #[test]
    fn older_neighbour_preferred() {
        let c = cohort(vec![
            person("a", Sex::Male, "1960-01-01", [9000; 5]),
            person("b", Sex::Male, "1970-01-01", [8000; 5]),
        ]);
        let set = DistributionSet::from_cohort(&c).unwrap();
        let between = Stratum::new(Sex::Male, AgeRange::A41To45);
        let mut rng = rng_from_seed(3);
        let (v, src) = set.sample_within_level(between, ExpenseLevel::F4, &mut rng).unwrap();
        assert_eq!(v, Money::from_units(9000));
        assert_eq!(src, DrawSource::AdjacentRange(AgeRange::A46To50));
    }

    #[test]
    fn serde_round_trip_rebuilds_pools() {
        let c = cohort(vec![
            person("a", Sex::Male, "1960-01-01", [9000, 0, 0, 0, 0]),
            person("c", Sex::Female, "1965-01-01", [500, 500, 500, 500, 500]),
        ]);
        let set = DistributionSet::from_cohort(&c).unwrap();
        let json = serde_json::to_string(&set).unwrap();
        let back: DistributionSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.pooled().len(), 10);
    }

    #[test]
    fn tampered_distribution_rejected() {
        let c = cohort(vec![person("a", Sex::Male, "1960-01-01", [9000, 0, 0, 0, 0])]);
        let set = DistributionSet::from_cohort(&c).unwrap();
        let mut raw: serde_json::Value = serde_json::to_value(&set).unwrap();
        let idx = Stratum::new(Sex::Male, AgeRange::A46To50).index().unwrap();
        raw["strata"][idx]["offsets"] = serde_json::json!([0, 0, 0, 0, 5]);
        assert!(serde_json::from_value::<DistributionSet>(raw).is_err());
    }

    #[test]
    fn initial_pool_single_person() {
        // Born 1982-06-01: 27 in mid-2009, so 25-30 over the final year.
        let c = cohort(vec![
            person("a", Sex::Female, "1982-06-01", [0, 0, 0, 400, 600]),
            person("b", Sex::Male, "1960-01-01", [0; 5]),
        ]);
        let pool = InitialPool::from_cohort(&c).unwrap();
        assert_eq!(pool.lives.len(), 1);
        let mut rng = rng_from_seed(4);
        let life = pool.sample(&mut rng);
        assert_eq!(
            life,
            InitialLife {
                sex: Sex::Female,
                history: (ExpenseLevel::F2, ExpenseLevel::F2),
                first_expense: Money::from_units(600),
            }
        );
    }

    #[test]
    fn empty_initial_pool() {
        let c = cohort(vec![person("b", Sex::Male, "1960-01-01", [0; 5])]);
        assert!(matches!(
            InitialPool::from_cohort(&c),
            Err(Error::EmptyInitialPool)
        ));
    }

    #[test]
    fn log_view_excludes_zeros() {
        let c = cohort(vec![person("a", Sex::Male, "1960-01-01", [0, 0, 1, 10, 100])]);
        let set = DistributionSet::from_cohort(&c).unwrap();
        let logs = set.log_expenses();
        assert_eq!(logs.len(), 1);
        assert_eq!(logs[0].zeros, 2);
        assert_eq!(logs[0].log_values.len(), 3);
        assert!((logs[0].log_values[2] - 100f64.ln()).abs() < 1e-12);
    }
}
