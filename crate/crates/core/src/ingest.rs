//! Person-year claims files and the follow-up / age-window cohort filter.
//!
//! File format: UTF-8 CSV with header `person_id,sex,birth_date,year,expense`,
//! sex `F` or `M`, ISO-8601 birth date, and a decimal expense with at most
//! two fractional digits. One row per person-year.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    age_at, dominant_age_range, AgeRange, ExpenseLevel, LevelBreaks, PersonYearRecord, Sex,
    Stratum,
};
use crate::money::Money;

pub const HEADER: [&str; 5] = ["person_id", "sex", "birth_date", "year", "expense"];

/// Raw person-year records plus the consecutive calendar years they span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<PersonYearRecord>,
    pub study_years: Vec<i32>,
}

impl Dataset {
    /// Builds a dataset, checking record-level invariants. The study window
    /// is the span from the earliest to the latest year present.
    pub fn new(records: Vec<PersonYearRecord>) -> Result<Dataset> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen: HashMap<(&str, i32), ()> = HashMap::with_capacity(records.len());
        let mut people: HashMap<&str, (Sex, NaiveDate)> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if seen.insert((r.person_id.as_str(), r.year), ()).is_some() {
                return Err(Error::DuplicatePersonYear {
                    line: i as u64 + 2,
                    person_id: r.person_id.clone(),
                    year: r.year,
                });
            }
            let who = people
                .entry(r.person_id.as_str())
                .or_insert((r.sex, r.birth_date));
            if *who != (r.sex, r.birth_date) {
                return Err(Error::InconsistentPerson {
                    person_id: r.person_id.clone(),
                });
            }
        }
        let first = records.iter().map(|r| r.year).min().unwrap_or_default();
        let last = records.iter().map(|r| r.year).max().unwrap_or_default();
        Ok(Dataset {
            records,
            study_years: (first..=last).collect(),
        })
    }

    pub fn distinct_persons(&self) -> usize {
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.person_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_person_years(&self.records, out)
    }
}

pub fn load_person_years(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_person_years(file)
}

pub fn parse_person_years<R: Read>(input: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}, found {:?}", HEADER.join(","), header),
        });
    }

    let mut records = Vec::new();
    let mut seen: HashMap<(String, i32), ()> = HashMap::new();
    let mut people: HashMap<String, (Sex, NaiveDate)> = HashMap::new();
    let mut row = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut row).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| Error::Parse { line, message };
        if row.len() != HEADER.len() {
            return Err(bad(format!("expected 5 fields, found {}", row.len())));
        }
        let person_id = row[0].to_string();
        if person_id.is_empty() {
            return Err(bad("empty person_id".into()));
        }
        let sex = Sex::from_code(&row[1])
            .ok_or_else(|| bad(format!("sex must be F or M, found {:?}", &row[1])))?;
        let birth_date = NaiveDate::parse_from_str(&row[2], "%Y-%m-%d")
            .map_err(|e| bad(format!("birth_date {:?}: {e}", &row[2])))?;
        let year: i32 = row[3]
            .parse()
            .map_err(|_| bad(format!("year {:?} is not an integer", &row[3])))?;
        let expense = Money::parse(&row[4]).map_err(|e| bad(e.to_string()))?;

        if seen.insert((person_id.clone(), year), ()).is_some() {
            return Err(Error::DuplicatePersonYear {
                line,
                person_id,
                year,
            });
        }
        let who = people
            .entry(person_id.clone())
            .or_insert((sex, birth_date));
        if *who != (sex, birth_date) {
            return Err(Error::InconsistentPerson { person_id });
        }
        records.push(PersonYearRecord {
            person_id,
            sex,
            birth_date,
            year,
            expense,
        });
    }
    Dataset::new(records)
}

pub fn write_person_years<W: Write>(records: &[PersonYearRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.person_id.as_str(),
            r.sex.code(),
            &r.birth_date.format("%Y-%m-%d").to_string(),
            &r.year.to_string(),
            &r.expense.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortFilter {
    /// Minimum completed age on 1 January of the first study year.
    pub min_age_at_start: u32,
    /// Maximum completed age on 31 December of the last study year.
    pub max_age_at_end: u32,
}

impl Default for CohortFilter {
    fn default() -> Self {
        CohortFilter {
            min_age_at_start: 25,
            max_age_at_end: 65,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DropReason {
    IncompleteFollowUp,
    AgeWindow,
}

impl DropReason {
    pub fn label(self) -> &'static str {
        match self {
            DropReason::IncompleteFollowUp => "incomplete follow-up",
            DropReason::AgeWindow => "age window",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_persons: usize,
    pub kept: usize,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl FilterReport {
    pub fn dropped_for(&self, reason: DropReason) -> usize {
        self.dropped.get(&reason).copied().unwrap_or(0)
    }
}

/// A cohort member with one expense per study year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortPerson {
    pub id: String,
    pub sex: Sex,
    pub birth_date: NaiveDate,
    pub expenses: Vec<Money>,
    pub levels: Vec<ExpenseLevel>,
    /// Dominant age range over the last (up to) three study years.
    pub age_range: AgeRange,
}

impl CohortPerson {
    pub fn stratum(&self) -> Stratum {
        Stratum::new(self.sex, self.age_range)
    }
}

/// Persons followed for the whole study window and inside the age window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cohort {
    pub study_years: Vec<i32>,
    pub persons: Vec<CohortPerson>,
    pub breaks: LevelBreaks,
    pub filter: CohortFilter,
    pub report: FilterReport,
}

impl Cohort {
    pub fn first_year(&self) -> i32 {
        self.study_years[0]
    }

    pub fn last_year(&self) -> i32 {
        *self.study_years.last().expect("non-empty study window")
    }

    pub fn year_index(&self, year: i32) -> Option<usize> {
        self.study_years.iter().position(|&y| y == year)
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    /// The person-year records backing this cohort.
    pub fn to_dataset(&self) -> Dataset {
        let records = self
            .persons
            .iter()
            .flat_map(|p| {
                self.study_years
                    .iter()
                    .zip(&p.expenses)
                    .map(|(&year, &expense)| PersonYearRecord {
                        person_id: p.id.clone(),
                        sex: p.sex,
                        birth_date: p.birth_date,
                        year,
                        expense,
                    })
            })
            .collect();
        Dataset {
            records,
            study_years: self.study_years.clone(),
        }
    }
}

pub fn filter_cohort(dataset: &Dataset, filter: CohortFilter) -> Result<Cohort> {
    filter_cohort_with_breaks(dataset, filter, LevelBreaks::default())
}

pub fn filter_cohort_with_breaks(
    dataset: &Dataset,
    filter: CohortFilter,
    breaks: LevelBreaks,
) -> Result<Cohort> {
    if dataset.records.is_empty() || dataset.study_years.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let years = &dataset.study_years;
    let first = years[0];
    let last = *years.last().expect("non-empty");
    let start = NaiveDate::from_ymd_opt(first, 1, 1).expect("valid date");
    let end = NaiveDate::from_ymd_opt(last, 12, 31).expect("valid date");
    let triple_first = years[years.len().saturating_sub(3)];

    struct Acc {
        sex: Sex,
        birth: NaiveDate,
        by_year: Vec<Option<Money>>,
    }
    let mut people: BTreeMap<&str, Acc> = BTreeMap::new();
    for r in &dataset.records {
        let acc = people.entry(r.person_id.as_str()).or_insert_with(|| Acc {
            sex: r.sex,
            birth: r.birth_date,
            by_year: vec![None; years.len()],
        });
        let idx = (r.year - first) as usize;
        acc.by_year[idx] = Some(r.expense);
    }

    let mut report = FilterReport {
        input_persons: people.len(),
        ..Default::default()
    };
    let mut persons = Vec::new();
    for (id, acc) in people {
        let Some(expenses) = acc.by_year.iter().copied().collect::<Option<Vec<Money>>>() else {
            *report.dropped.entry(DropReason::IncompleteFollowUp).or_default() += 1;
            continue;
        };
        let in_window = matches!(age_at(acc.birth, start), Ok(a) if a >= filter.min_age_at_start)
            && matches!(age_at(acc.birth, end), Ok(a) if a <= filter.max_age_at_end);
        let range = dominant_age_range(acc.birth, triple_first, last);
        let (true, Ok(age_range)) = (in_window, range) else {
            *report.dropped.entry(DropReason::AgeWindow).or_default() += 1;
            continue;
        };
        persons.push(CohortPerson {
            id: id.to_string(),
            sex: acc.sex,
            birth_date: acc.birth,
            levels: expenses.iter().map(|&e| breaks.classify(e)).collect(),
            expenses,
            age_range,
        });
    }
    report.kept = persons.len();
    if persons.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok(Cohort {
        study_years: years.clone(),
        persons,
        breaks,
        filter,
        report,
    })
}
