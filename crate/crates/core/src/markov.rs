//! Expense-level transition matrices.
//!
//! Pairwise matrices count persons by (level in year i, level in year j).
//! Order-2 matrices count persons by (level in y-2, level in y-1, level in y)
//! within one stratum; under time homogeneity the last three study years
//! give the matrix used for simulation. Counts are the source of truth and
//! probabilities are derived from them by row normalisation.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Cohort, CohortPerson};
use crate::model::{age_at, dominant_age_range, ExpenseLevel, LevelBreaks, Sex, Stratum};

const L: usize = 4;
/// Number of ordered (previous, current) level pairs.
pub const PAIR_ROWS: usize = L * L;

/// Row index of the ordered pair (level two years back, level last year).
pub fn pair_row(prev: ExpenseLevel, current: ExpenseLevel) -> usize {
    prev.index() * L + current.index()
}

pub fn row_pair(row: usize) -> (ExpenseLevel, ExpenseLevel) {
    (ExpenseLevel::ALL[row / L], ExpenseLevel::ALL[row % L])
}

fn normalise(counts: &[u64; L]) -> Option<[f64; L]> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let t = total as f64;
    Some(counts.map(|c| c as f64 / t))
}

/// Which persons enter an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PersonFilter {
    All,
    /// Completed age at least `min` on 1 January of the first study year and
    /// at most `max` on 31 December of the last.
    AgeWithin { min: u32, max: u32 },
    Sex(Sex),
    /// Sex plus dominant age range over the last three study years.
    Stratum(Stratum),
}

impl PersonFilter {
    pub fn label(&self) -> String {
        match self {
            PersonFilter::All => "all".into(),
            PersonFilter::AgeWithin { min, max } => format!("ages {min}-{max}"),
            PersonFilter::Sex(s) => s.to_string(),
            PersonFilter::Stratum(s) => s.to_string(),
        }
    }

    pub fn accepts(&self, cohort: &Cohort, person: &CohortPerson) -> bool {
        match *self {
            PersonFilter::All => true,
            PersonFilter::AgeWithin { min, max } => {
                let start = NaiveDate::from_ymd_opt(cohort.first_year(), 1, 1).expect("date");
                let end = NaiveDate::from_ymd_opt(cohort.last_year(), 12, 31).expect("date");
                matches!(age_at(person.birth_date, start), Ok(a) if a >= min)
                    && matches!(age_at(person.birth_date, end), Ok(a) if a <= max)
            }
            PersonFilter::Sex(s) => person.sex == s,
            PersonFilter::Stratum(s) => person.stratum() == s,
        }
    }
}

/// Order-1 transition counts between two (not necessarily adjacent) years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub origin_year: i32,
    pub destination_year: i32,
    pub counts: [[u64; L]; L],
    /// Row-normalised counts; rows with no persons are all zero and flagged
    /// in `empty_rows`.
    pub probs: [[f64; L]; L],
    pub empty_rows: [bool; L],
}

impl PairwiseMatrix {
    pub fn from_counts(origin_year: i32, destination_year: i32, counts: [[u64; L]; L]) -> Self {
        let mut probs = [[0.0; L]; L];
        let mut empty_rows = [false; L];
        for (k, row) in counts.iter().enumerate() {
            match normalise(row) {
                Some(p) => probs[k] = p,
                None => empty_rows[k] = true,
            }
        }
        PairwiseMatrix {
            origin_year,
            destination_year,
            counts,
            probs,
            empty_rows,
        }
    }

    pub fn gap(&self) -> i32 {
        self.destination_year - self.origin_year
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Mean of the diagonal probabilities over non-empty rows.
    pub fn diagonal_mass(&self) -> f64 {
        let diag: Vec<f64> = (0..L)
            .filter(|&k| !self.empty_rows[k])
            .map(|k| self.probs[k][k])
            .collect();
        if diag.is_empty() {
            0.0
        } else {
            diag.iter().sum::<f64>() / diag.len() as f64
        }
    }
}

pub fn estimate_pairwise(
    cohort: &Cohort,
    year_i: i32,
    year_j: i32,
    filter: PersonFilter,
) -> Result<PairwiseMatrix> {
    if year_i >= year_j {
        return Err(Error::InvalidYears(format!(
            "origin year {year_i} must precede destination year {year_j}"
        )));
    }
    let (Some(i), Some(j)) = (cohort.year_index(year_i), cohort.year_index(year_j)) else {
        return Err(Error::InvalidYears(format!(
            "{year_i}/{year_j} outside study window {}-{}",
            cohort.first_year(),
            cohort.last_year()
        )));
    };
    let mut counts = [[0u64; L]; L];
    let mut n = 0usize;
    for p in cohort.persons.iter().filter(|p| filter.accepts(cohort, p)) {
        counts[p.levels[i].index()][p.levels[j].index()] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyEstimationSet);
    }
    Ok(PairwiseMatrix::from_counts(year_i, year_j, counts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowProvenance {
    Observed,
    /// Empty in a raw estimate; never present after completion.
    Unobserved,
    FallbackOrder1,
    FallbackPooled,
    FallbackUniform,
}

/// Order-2 transition matrix for one stratum: 16 (prev, current) rows by 4
/// next levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order2Matrix {
    pub stratum: Stratum,
    pub counts: [[u64; L]; PAIR_ROWS],
    pub probs: [[f64; L]; PAIR_ROWS],
    pub provenance: [RowProvenance; PAIR_ROWS],
}

impl Order2Matrix {
    pub fn from_counts(stratum: Stratum, counts: [[u64; L]; PAIR_ROWS]) -> Self {
        let mut probs = [[0.0; L]; PAIR_ROWS];
        let mut provenance = [RowProvenance::Unobserved; PAIR_ROWS];
        for (r, row) in counts.iter().enumerate() {
            if let Some(p) = normalise(row) {
                probs[r] = p;
                provenance[r] = RowProvenance::Observed;
            }
        }
        Order2Matrix {
            stratum,
            counts,
            probs,
            provenance,
        }
    }

    pub fn row(&self, prev: ExpenseLevel, current: ExpenseLevel) -> &[f64; L] {
        &self.probs[pair_row(prev, current)]
    }

    pub fn is_complete(&self) -> bool {
        !self.provenance.contains(&RowProvenance::Unobserved)
    }

    pub fn members(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Order-1 counts for the last transition (current level -> next level),
    /// obtained by summing out the level two years back.
    pub fn order1_counts(&self) -> [[u64; L]; L] {
        let mut out = [[0u64; L]; L];
        for (r, row) in self.counts.iter().enumerate() {
            let m = r % L;
            for l in 0..L {
                out[m][l] += row[l];
            }
        }
        out
    }
}

fn check_triple(cohort: &Cohort, triple: [i32; 3]) -> Result<[usize; 3]> {
    if triple[1] != triple[0] + 1 || triple[2] != triple[1] + 1 {
        return Err(Error::InvalidYears(format!(
            "{triple:?} are not three consecutive years"
        )));
    }
    let idx = triple.map(|y| cohort.year_index(y));
    match idx {
        [Some(a), Some(b), Some(c)] => Ok([a, b, c]),
        _ => Err(Error::InvalidYears(format!(
            "{triple:?} outside study window {}-{}",
            cohort.first_year(),
            cohort.last_year()
        ))),
    }
}

/// Raw order-2 counts for `stratum` over the consecutive years in `triple`.
///
/// Membership is by sex and by the age range the person occupies for most
/// months of the triple's three years. Rows may be empty.
pub fn estimate_order2(cohort: &Cohort, triple: [i32; 3], stratum: Stratum) -> Result<Order2Matrix> {
    let [a, b, c] = check_triple(cohort, triple)?;
    let mut counts = [[0u64; L]; PAIR_ROWS];
    for p in &cohort.persons {
        if p.sex != stratum.sex {
            continue;
        }
        let Ok(range) = dominant_age_range(p.birth_date, triple[0], triple[2]) else {
            continue;
        };
        if range != stratum.age_range {
            continue;
        }
        counts[pair_row(p.levels[a], p.levels[b])][p.levels[c].index()] += 1;
    }
    Ok(Order2Matrix::from_counts(stratum, counts))
}

/// Which fallbacks may fill unobserved rows. The uniform row is always the
/// last resort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackPolicy {
    pub order1: bool,
    pub pooled: bool,
}

impl Default for FallbackPolicy {
    fn default() -> Self {
        FallbackPolicy {
            order1: true,
            pooled: true,
        }
    }
}

/// Completed order-2 matrices for all 16 simulation strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    /// The three consecutive years the counts come from.
    pub window: [i32; 3],
    pub breaks: LevelBreaks,
    pub policy: FallbackPolicy,
    /// Indexed by [`Stratum::index`].
    pub matrices: Vec<Order2Matrix>,
}

impl TransitionModel {
    pub fn matrix(&self, stratum: Stratum) -> Option<&Order2Matrix> {
        self.matrices.get(stratum.index()?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.matrices.len() != Stratum::COUNT {
            return Err(Error::InvalidParams(format!(
                "transition model has {} strata, expected {}",
                self.matrices.len(),
                Stratum::COUNT
            )));
        }
        for (i, m) in self.matrices.iter().enumerate() {
            if m.stratum.index() != Some(i) {
                return Err(Error::InvalidParams(format!(
                    "matrix {i} belongs to {}",
                    m.stratum
                )));
            }
            if !m.is_complete() {
                return Err(Error::InvalidParams(format!(
                    "matrix for {} has unobserved rows",
                    m.stratum
                )));
            }
            for row in &m.probs {
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-9 || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::InvalidParams(format!(
                        "matrix for {} has a non-stochastic row",
                        m.stratum
                    )));
                }
            }
        }
        Ok(())
    }

    /// Counts of rows per provenance, over all strata.
    pub fn provenance_summary(&self) -> Vec<(RowProvenance, usize)> {
        let kinds = [
            RowProvenance::Observed,
            RowProvenance::FallbackOrder1,
            RowProvenance::FallbackPooled,
            RowProvenance::FallbackUniform,
        ];
        kinds
            .into_iter()
            .map(|k| {
                let n = self
                    .matrices
                    .iter()
                    .flat_map(|m| m.provenance.iter())
                    .filter(|&&p| p == k)
                    .count();
                (k, n)
            })
            .collect()
    }
}

/// Fills every unobserved row, trying in order the stratum's own order-1
/// row for the current level, the order-2 row pooled over all strata, and
/// finally the uniform row.
pub fn complete_model(
    raw: Vec<Order2Matrix>,
    window: [i32; 3],
    breaks: LevelBreaks,
    policy: FallbackPolicy,
) -> Result<TransitionModel> {
    let mut by_index: Vec<Option<Order2Matrix>> = vec![None; Stratum::COUNT];
    for m in raw {
        let i = m.stratum.index().ok_or_else(|| {
            Error::InvalidParams(format!("{} is not a simulation stratum", m.stratum))
        })?;
        if by_index[i].replace(m).is_some() {
            return Err(Error::InvalidParams(format!(
                "duplicate matrix for {}",
                Stratum::from_index(i).expect("index")
            )));
        }
    }
    let mut matrices: Vec<Order2Matrix> = by_index
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            m.ok_or_else(|| {
                Error::InvalidParams(format!(
                    "missing matrix for {}",
                    Stratum::from_index(i).expect("index")
                ))
            })
        })
        .collect::<Result<_>>()?;

    let mut pooled = [[0u64; L]; PAIR_ROWS];
    for m in &matrices {
        for (r, row) in m.counts.iter().enumerate() {
            for l in 0..L {
                pooled[r][l] += row[l];
            }
        }
    }

    for m in &mut matrices {
        let order1 = m.order1_counts();
        for (r, pooled_row) in pooled.iter().enumerate() {
            if m.provenance[r] != RowProvenance::Unobserved {
                continue;
            }
            let current = r % L;
            let (probs, prov) = if let Some(p) = normalise(&order1[current]).filter(|_| policy.order1)
            {
                (p, RowProvenance::FallbackOrder1)
            } else if let Some(p) = normalise(pooled_row).filter(|_| policy.pooled) {
                (p, RowProvenance::FallbackPooled)
            } else {
                ([1.0 / L as f64; L], RowProvenance::FallbackUniform)
            };
            m.probs[r] = probs;
            m.provenance[r] = prov;
        }
    }
    Ok(TransitionModel {
        window,
        breaks,
        policy,
        matrices,
    })
}

/// Estimates and completes the simulation model from the cohort's last three
/// study years. Strata are counted in parallel and merged in stratum order.
pub fn estimate_model(cohort: &Cohort, policy: FallbackPolicy) -> Result<TransitionModel> {
    let n = cohort.study_years.len();
    if n < 3 {
        return Err(Error::InvalidYears(format!(
            "order-2 estimation needs three study years, cohort has {n}"
        )));
    }
    let window = [
        cohort.study_years[n - 3],
        cohort.study_years[n - 2],
        cohort.study_years[n - 1],
    ];
    let strata: Vec<Stratum> = Stratum::simulation_strata().collect();
    let raw = strata
        .par_iter()
        .map(|&s| estimate_order2(cohort, window, s))
        .collect::<Result<Vec<_>>>()?;
    complete_model(raw, window, cohort.breaks, policy)
}

/// All pairwise matrices between distinct study years, ordered by origin then
/// destination year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub filter: PersonFilter,
    pub matrices: Vec<PairwiseMatrix>,
}

impl PersistenceReport {
    /// Mean diagonal mass of the matrices whose years are `gap` apart.
    pub fn mean_diagonal(&self, gap: i32) -> Option<f64> {
        let d: Vec<f64> = self
            .matrices
            .iter()
            .filter(|m| m.gap() == gap)
            .map(PairwiseMatrix::diagonal_mass)
            .collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }

    /// For each gap, the mean absolute difference between the probabilities
    /// of every pair of matrices with that gap. Small values are consistent
    /// with a time-homogeneous chain; no threshold is implied.
    pub fn homogeneity_diagnostic(&self) -> Vec<GapSimilarity> {
        let max_gap = self.matrices.iter().map(PairwiseMatrix::gap).max().unwrap_or(0);
        (1..=max_gap)
            .map(|gap| {
                let ms: Vec<&PairwiseMatrix> =
                    self.matrices.iter().filter(|m| m.gap() == gap).collect();
                let mut diffs = Vec::new();
                for (i, a) in ms.iter().enumerate() {
                    for b in &ms[i + 1..] {
                        let mut sum = 0.0;
                        let mut cells = 0usize;
                        for k in 0..L {
                            if a.empty_rows[k] || b.empty_rows[k] {
                                continue;
                            }
                            for l in 0..L {
                                sum += (a.probs[k][l] - b.probs[k][l]).abs();
                                cells += 1;
                            }
                        }
                        if cells > 0 {
                            diffs.push(sum / cells as f64);
                        }
                    }
                }
                GapSimilarity {
                    gap,
                    matrices: ms.len(),
                    mean_abs_difference: (!diffs.is_empty())
                        .then(|| diffs.iter().sum::<f64>() / diffs.len() as f64),
                }
            })
            .collect()
    }

    /// Flat (origin year, destination year, origin level, destination level,
    /// probability) rows for heatmaps.
    pub fn heatmap_rows(&self) -> Vec<HeatmapCell> {
        self.matrices
            .iter()
            .flat_map(|m| {
                (0..L).flat_map(move |k| {
                    (0..L).map(move |l| HeatmapCell {
                        origin_year: m.origin_year,
                        destination_year: m.destination_year,
                        origin: ExpenseLevel::ALL[k],
                        destination: ExpenseLevel::ALL[l],
                        count: m.counts[k][l],
                        probability: (!m.empty_rows[k]).then_some(m.probs[k][l]),
                    })
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSimilarity {
    pub gap: i32,
    pub matrices: usize,
    pub mean_abs_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub origin_year: i32,
    pub destination_year: i32,
    pub origin: ExpenseLevel,
    pub destination: ExpenseLevel,
    pub count: u64,
    pub probability: Option<f64>,
}

pub fn persistence_report(cohort: &Cohort, filter: PersonFilter) -> Result<PersistenceReport> {
    let years = &cohort.study_years;
    let mut matrices = Vec::new();
    for (a, &yi) in years.iter().enumerate() {
        for &yj in &years[a + 1..] {
            matrices.push(estimate_pairwise(cohort, yi, yj, filter)?);
        }
    }
    Ok(PersistenceReport { filter, matrices })
}
