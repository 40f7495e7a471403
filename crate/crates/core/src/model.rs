//! Domain vocabulary: expense levels, sexes, age ranges and strata.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

/// One of the four annual-expense bands.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ExpenseLevel {
    F1,
    F2,
    F3,
    F4,
}

impl ExpenseLevel {
    pub const ALL: [ExpenseLevel; 4] = [
        ExpenseLevel::F1,
        ExpenseLevel::F2,
        ExpenseLevel::F3,
        ExpenseLevel::F4,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ExpenseLevel> {
        Self::ALL.get(i).copied()
    }

    /// Level under the standard 300 / 1,000 / 5,000 break points.
    pub fn classify(expense: Money) -> ExpenseLevel {
        LevelBreaks::default().classify(expense)
    }
}

impl fmt::Display for ExpenseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.index() + 1)
    }
}

/// Shorthand for [`ExpenseLevel::classify`].
pub fn classify_level(expense: Money) -> ExpenseLevel {
    ExpenseLevel::classify(expense)
}

/// Upper bounds (inclusive) of levels F1, F2 and F3. F4 is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelBreaks {
    pub upper: [Money; 3],
}

impl Default for LevelBreaks {
    fn default() -> Self {
        LevelBreaks {
            upper: [
                Money::from_units(300),
                Money::from_units(1_000),
                Money::from_units(5_000),
            ],
        }
    }
}

impl LevelBreaks {
    pub fn new(upper: [Money; 3]) -> Result<Self> {
        if !(upper[0] < upper[1] && upper[1] < upper[2]) {
            return Err(Error::InvalidParams(
                "level break points must be strictly increasing".into(),
            ));
        }
        Ok(LevelBreaks { upper })
    }

    pub fn classify(&self, expense: Money) -> ExpenseLevel {
        match self.upper.iter().position(|&u| expense <= u) {
            Some(i) => ExpenseLevel::ALL[i],
            None => ExpenseLevel::F4,
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub const ALL: [Sex; 2] = [Sex::Female, Sex::Male];

    pub fn code(self) -> &'static str {
        match self {
            Sex::Female => "F",
            Sex::Male => "M",
        }
    }

    pub fn from_code(code: &str) -> Option<Sex> {
        match code {
            "F" => Some(Sex::Female),
            "M" => Some(Sex::Male),
            _ => None,
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::Female => "female",
            Sex::Male => "male",
        })
    }
}

/// Age bands. `A21To24` only appears in persistence analysis, never as a
/// simulation stratum.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum AgeRange {
    A21To24,
    A25To30,
    A31To35,
    A36To40,
    A41To45,
    A46To50,
    A51To55,
    A56To60,
    A61To65,
}

impl AgeRange {
    pub const ALL: [AgeRange; 9] = [
        AgeRange::A21To24,
        AgeRange::A25To30,
        AgeRange::A31To35,
        AgeRange::A36To40,
        AgeRange::A41To45,
        AgeRange::A46To50,
        AgeRange::A51To55,
        AgeRange::A56To60,
        AgeRange::A61To65,
    ];

    pub const SIMULATION: [AgeRange; 8] = [
        AgeRange::A25To30,
        AgeRange::A31To35,
        AgeRange::A36To40,
        AgeRange::A41To45,
        AgeRange::A46To50,
        AgeRange::A51To55,
        AgeRange::A56To60,
        AgeRange::A61To65,
    ];

    pub const fn bounds(self) -> (u32, u32) {
        match self {
            AgeRange::A21To24 => (21, 24),
            AgeRange::A25To30 => (25, 30),
            AgeRange::A31To35 => (31, 35),
            AgeRange::A36To40 => (36, 40),
            AgeRange::A41To45 => (41, 45),
            AgeRange::A46To50 => (46, 50),
            AgeRange::A51To55 => (51, 55),
            AgeRange::A56To60 => (56, 60),
            AgeRange::A61To65 => (61, 65),
        }
    }

    pub fn from_age(age: u32) -> Option<AgeRange> {
        Self::ALL.into_iter().find(|r| r.contains(age))
    }

    pub fn contains(self, age: u32) -> bool {
        let (lo, hi) = self.bounds();
        (lo..=hi).contains(&age)
    }

    pub fn is_simulation_range(self) -> bool {
        self != AgeRange::A21To24
    }

    /// Position among the simulation ranges (0 for 25-30 .. 7 for 61-65).
    pub fn simulation_index(self) -> Option<usize> {
        Self::SIMULATION.iter().position(|&r| r == self)
    }

    pub fn label(self) -> String {
        let (lo, hi) = self.bounds();
        format!("{lo}-{hi}")
    }
}

impl fmt::Display for AgeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A (sex, age range) cell.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Stratum {
    pub sex: Sex,
    pub age_range: AgeRange,
}

impl Stratum {
    pub const COUNT: usize = 16;

    pub const fn new(sex: Sex, age_range: AgeRange) -> Self {
        Stratum { sex, age_range }
    }

    /// The 16 simulation strata, female first, ranges ascending.
    pub fn simulation_strata() -> impl Iterator<Item = Stratum> {
        Sex::ALL.into_iter().flat_map(|sex| {
            AgeRange::SIMULATION
                .into_iter()
                .map(move |r| Stratum::new(sex, r))
        })
    }

    /// Index into [`Stratum::simulation_strata`] order, `None` for 21-24.
    pub fn index(self) -> Option<usize> {
        let r = self.age_range.simulation_index()?;
        Some(self.sex as usize * AgeRange::SIMULATION.len() + r)
    }

    pub fn from_index(i: usize) -> Option<Stratum> {
        let n = AgeRange::SIMULATION.len();
        let sex = *Sex::ALL.get(i / n)?;
        Some(Stratum::new(sex, AgeRange::SIMULATION[i % n]))
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.sex, self.age_range)
    }
}

/// One person's aggregate expense for one calendar year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonYearRecord {
    pub person_id: String,
    pub sex: Sex,
    pub birth_date: NaiveDate,
    pub year: i32,
    pub expense: Money,
}

/// Completed years of age at `reference`. A 29 February birthday is
/// reached on 1 March in non-leap years.
pub fn age_at(birth: NaiveDate, reference: NaiveDate) -> Result<u32> {
    if reference < birth {
        return Err(Error::ReferenceBeforeBirth { birth, reference });
    }
    let mut years = reference.year() - birth.year();
    if (reference.month(), reference.day()) < (birth.month(), birth.day()) {
        years -= 1;
    }
    Ok(years as u32)
}

/// The age range a person occupies for the most months of the calendar
/// years `first_year..=last_year`.
///
/// A month counts toward the range containing the person's completed age
/// on its first day. Months outside 21-65 count toward nothing. Ties go
/// to the older range.
pub fn dominant_age_range(birth: NaiveDate, first_year: i32, last_year: i32) -> Result<AgeRange> {
    if first_year > last_year {
        return Err(Error::InvalidYears(format!(
            "window {first_year}-{last_year} is empty"
        )));
    }
    let mut months = [0u32; AgeRange::ALL.len()];
    for year in first_year..=last_year {
        for month in 1..=12 {
            let first_day = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month start");
            let age = age_at(birth, first_day)?;
            if let Some(r) = AgeRange::from_age(age) {
                months[r as usize] += 1;
            }
        }
    }
    let mut best: Option<(AgeRange, u32)> = None;
    for r in AgeRange::ALL {
        let m = months[r as usize];
        if m > 0 && best.is_none_or(|(_, b)| m >= b) {
            best = Some((r, m));
        }
    }
    best.map(|(r, _)| r).ok_or(Error::NoAgeRange {
        birth,
        first_year,
        last_year,
    })
}
