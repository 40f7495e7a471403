//! Report tables computed from cohorts and study results.
//!
//! Account tables aggregate per-replication statistics into a mean and a
//! sample standard deviation across replications, so every cell can be
//! recomputed from the exported replication summaries. Monetary cells are
//! computed from cents and only rounded to whole units when rendered.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Cohort;
use crate::model::{dominant_age_range, Stratum};
use crate::seed::{GENERATOR, SEED_MIXING};
use crate::sim::StudyResult;
use crate::stats::{
    descriptive_stats, MeanSd, StatsSummary, ACCOUNT_RANKS, EXPENSE_RANKS, OUTLIER_METHOD,
    PERCENTILE_METHOD, SKEWNESS_METHOD,
};

pub const SYNTHETIC_CALIBRATED: &str = "synthetic-calibrated";

/// Method disclosures attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// `synthetic-calibrated` when the input came from the generator.
    pub data_origin: String,
    pub percentile_method: String,
    pub skewness_method: String,
    pub outlier_method: String,
    pub generator: String,
    pub seed_mixing: String,
    pub monetary_rendering: String,
}

impl ReportMetadata {
    pub fn new(data_origin: impl Into<String>) -> Self {
        ReportMetadata {
            data_origin: data_origin.into(),
            percentile_method: PERCENTILE_METHOD.into(),
            skewness_method: SKEWNESS_METHOD.into(),
            outlier_method: OUTLIER_METHOD.into(),
            generator: GENERATOR.into(),
            seed_mixing: SEED_MIXING.into(),
            monetary_rendering: "computed in cents, rendered rounded to whole units".into(),
        }
    }

    pub fn is_synthetic(&self) -> bool {
        self.data_origin == SYNTHETIC_CALIBRATED
    }
}

// ---------------------------------------------------------------- cohort

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelShareRow {
    /// `None` for the all-strata total row.
    pub stratum: Option<Stratum>,
    pub person_years: u64,
    pub counts: [u64; 4],
    pub pct: [f64; 4],
}

impl LevelShareRow {
    fn from_counts(stratum: Option<Stratum>, counts: [u64; 4]) -> Self {
        let person_years: u64 = counts.iter().sum();
        let pct = counts.map(|c| {
            if person_years == 0 {
                0.0
            } else {
                100.0 * c as f64 / person_years as f64
            }
        });
        LevelShareRow {
            stratum,
            person_years,
            counts,
            pct,
        }
    }
}

/// Person-year counts per level for each stratum present in the cohort,
/// followed by a total row. Strata are assigned as for estimation.
pub fn level_share_table(cohort: &Cohort) -> Vec<LevelShareRow> {
    let mut by: BTreeMap<Stratum, [u64; 4]> = BTreeMap::new();
    for p in &cohort.persons {
        let c = by.entry(p.stratum()).or_default();
        for l in &p.levels {
            c[l.index()] += 1;
        }
    }
    let mut total = [0u64; 4];
    let mut rows: Vec<LevelShareRow> = by
        .into_iter()
        .map(|(s, c)| {
            for k in 0..4 {
                total[k] += c[k];
            }
            LevelShareRow::from_counts(Some(s), c)
        })
        .collect();
    rows.push(LevelShareRow::from_counts(None, total));
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpenseGrouping {
    All,
    Sex,
    /// Sex and the age range occupied for most of each calendar year.
    Stratum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpenseStatsRow {
    pub group: String,
    pub year: i32,
    pub summary: StatsSummary,
}

/// Annual expense statistics per group and year, percentiles over positive
/// expenses only.
pub fn expense_table(cohort: &Cohort, grouping: ExpenseGrouping) -> Result<Vec<ExpenseStatsRow>> {
    let mut groups: BTreeMap<(u8, String, i32), Vec<f64>> = BTreeMap::new();
    for p in &cohort.persons {
        for (i, &year) in cohort.study_years.iter().enumerate() {
            let key = match grouping {
                ExpenseGrouping::All => (0, "all".to_string()),
                ExpenseGrouping::Sex => (p.sex as u8, p.sex.to_string()),
                ExpenseGrouping::Stratum => {
                    let Ok(range) = dominant_age_range(p.birth_date, year, year) else {
                        continue;
                    };
                    let s = Stratum::new(p.sex, range);
                    (p.sex as u8 * 16 + range as u8, s.to_string())
                }
            };
            groups
                .entry((key.0, key.1, year))
                .or_default()
                .push(p.expenses[i].as_f64());
        }
    }
    groups
        .into_iter()
        .map(|((_, group, year), values)| {
            Ok(ExpenseStatsRow {
                group,
                year,
                summary: descriptive_stats(&values, true, &EXPENSE_RANKS)?,
            })
        })
        .collect()
}

/// Mean, sample sd and group size of positive expenses per stratum and year,
/// for error-bar profile plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub group: String,
    pub year: i32,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

pub fn expense_profile(cohort: &Cohort) -> Result<Vec<ProfilePoint>> {
    Ok(expense_table(cohort, ExpenseGrouping::Stratum)?
        .into_iter()
        .map(|r| ProfilePoint {
            group: r.group,
            year: r.year,
            n: r.summary.stats.as_ref().map_or(0, |s| s.n),
            mean: r.summary.stats.as_ref().map(|s| s.mean),
            sd: r.summary.stats.as_ref().and_then(|s| s.sd),
        })
        .collect())
}

// ----------------------------------------------------------------- study

/// Cross-replication aggregate of one account-table column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedSummary {
    pub n: MeanSd,
    pub n_zero: MeanSd,
    pub pct_zero: MeanSd,
    /// `None` where no replication had a positive value.
    pub percentiles: Vec<(f64, Option<MeanSd>)>,
    pub max: Option<MeanSd>,
    pub mean: Option<MeanSd>,
    pub sd: Option<MeanSd>,
}

fn over<'a, T: 'a>(items: &'a [T], f: impl Fn(&T) -> Option<f64>) -> Option<MeanSd> {
    let v: Vec<f64> = items.iter().filter_map(f).collect();
    MeanSd::from_values(&v)
}

pub fn aggregate_summaries(summaries: &[&StatsSummary], ranks: &[f64]) -> Result<AggregatedSummary> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput);
    }
    let all = |f: fn(&StatsSummary) -> f64| over(summaries, |s| Some(f(s))).expect("non-empty");
    Ok(AggregatedSummary {
        n: all(|s| s.n as f64),
        n_zero: all(|s| s.n_zero as f64),
        pct_zero: all(|s| s.pct_zero),
        percentiles: ranks
            .iter()
            .map(|&r| (r, over(summaries, |s| s.stats.as_ref()?.percentile(r))))
            .collect(),
        max: over(summaries, |s| Some(s.stats.as_ref()?.max)),
        mean: over(summaries, |s| Some(s.stats.as_ref()?.mean)),
        sd: over(summaries, |s| s.stats.as_ref()?.sd),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub age: u32,
    pub summary: AggregatedSummary,
}

pub const DEFAULT_SNAPSHOT_AGES: [u32; 8] = [30, 35, 40, 45, 50, 55, 60, 65];

/// Balance statistics at the given ages, positive balances only.
pub fn balance_snapshots(study: &StudyResult, ages: &[u32]) -> Result<Vec<SnapshotRow>> {
    let p = &study.params;
    ages.iter()
        .map(|&age| {
            if !p.ages().contains(&age) {
                return Err(Error::SnapshotAge {
                    age,
                    first: p.start_age,
                    last: p.last_age(),
                });
            }
            let i = (age - p.start_age) as usize;
            let cells: Vec<&StatsSummary> = study
                .replications
                .iter()
                .map(|r| &r.balance_by_age[i].summary)
                .collect();
            Ok(SnapshotRow {
                age,
                summary: aggregate_summaries(&cells, &ACCOUNT_RANKS)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiUsageRow {
    pub uses: u32,
    pub lives: MeanSd,
    pub pct_lives: f64,
    pub cum_pct_lives: f64,
    /// Insurance paid to lives with this many uses, in currency units.
    pub ci_total: MeanSd,
    /// `None` when the insurance paid nothing in the whole study.
    pub pct_ci: Option<f64>,
    pub cum_pct_ci: Option<f64>,
    /// Over replications in which some life had this many uses.
    pub ci_per_life: Option<MeanSd>,
}

/// Insurance frequency and severity by number of uses, from 0 to the largest
/// count observed in any replication. Percentages come from exact study-wide
/// sums, so cumulative columns end at exactly 100.
pub fn ci_usage_table(study: &StudyResult) -> Result<Vec<CiUsageRow>> {
    let reps = &study.replications;
    if reps.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max_uses = reps
        .iter()
        .flat_map(|r| r.ci_usage.iter().filter(|c| c.lives > 0).map(|c| c.uses))
        .max()
        .unwrap_or(0);
    let total_lives: u64 = reps.iter().map(|r| r.totals.lives).sum();
    let total_ci: u64 = reps.iter().map(|r| r.totals.ci_paid.cents()).sum();
    let mut cum_lives = 0u64;
    let mut cum_ci = 0u64;
    (0..=max_uses)
        .map(|u| {
            let cell = |r: &crate::sim::ReplicationSummary| {
                r.ci_usage
                    .get(u as usize)
                    .copied()
                    .unwrap_or(crate::sim::CiUsageCell {
                        uses: u,
                        lives: 0,
                        ci_total: crate::money::Money::ZERO,
                    })
            };
            let lives: u64 = reps.iter().map(|r| cell(r).lives).sum();
            let ci: u64 = reps.iter().map(|r| cell(r).ci_total.cents()).sum();
            cum_lives += lives;
            cum_ci += ci;
            let pct = |a: u64, b: u64| (b > 0).then(|| 100.0 * a as f64 / b as f64);
            Ok(CiUsageRow {
                uses: u,
                lives: over(reps, |r| Some(cell(r).lives as f64)).expect("non-empty"),
                pct_lives: pct(lives, total_lives).unwrap_or(0.0),
                cum_pct_lives: pct(cum_lives, total_lives).unwrap_or(0.0),
                ci_total: over(reps, |r| Some(cell(r).ci_total.as_f64())).expect("non-empty"),
                pct_ci: pct(ci, total_ci),
                cum_pct_ci: pct(cum_ci, total_ci),
                ci_per_life: over(reps, |r| {
                    let c = cell(r);
                    (c.lives > 0).then(|| c.ci_total.as_f64() / c.lives as f64)
                }),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageColumn {
    pub name: String,
    pub summary: AggregatedSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    /// Outliers counted within each replication.
    pub per_replication: MeanSd,
    pub total: usize,
    pub upper_fence: MeanSd,
    pub lower_fence: MeanSd,
    /// Outlying final balances of replication 0.
    pub first_replication_low: Vec<f64>,
    pub first_replication_high: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub columns: Vec<CoverageColumn>,
    /// Skewness of all final balances of all replications.
    pub skewness_pooled: Option<f64>,
    pub skewness_per_replication: Option<MeanSd>,
    pub outliers: OutlierReport,
}

pub fn coverage_summary(study: &StudyResult) -> Result<CoverageSummary> {
    let reps = &study.replications;
    let first = reps.first().ok_or(Error::EmptyInput)?;
    let column = |name: &str, f: fn(&crate::sim::CoverageStats) -> &StatsSummary| {
        let cells: Vec<&StatsSummary> = reps.iter().map(|r| f(&r.coverage)).collect();
        Ok::<_, Error>(CoverageColumn {
            name: name.into(),
            summary: aggregate_summaries(&cells, &ACCOUNT_RANKS)?,
        })
    };
    Ok(CoverageSummary {
        columns: vec![
            column("balance at final age", |c| &c.final_balance)?,
            column("covered by account", |c| &c.hsa_covered)?,
            column("covered by insurance", |c| &c.ci_covered)?,
        ],
        skewness_pooled: study.pooled_skewness(),
        skewness_per_replication: over(reps, |r| r.skewness),
        outliers: OutlierReport {
            per_replication: over(reps, |r| Some((r.outliers.low.len() + r.outliers.high.len()) as f64))
                .expect("non-empty"),
            total: reps
                .iter()
                .map(|r| r.outliers.low.len() + r.outliers.high.len())
                .sum(),
            upper_fence: over(reps, |r| Some(r.outliers.upper_fence)).expect("non-empty"),
            lower_fence: over(reps, |r| Some(r.outliers.lower_fence)).expect("non-empty"),
            first_replication_low: first.outliers.low.clone(),
            first_replication_high: first.outliers.high.clone(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistogramKind {
    FinalBalance,
    CiTotal,
    CiTotalLog10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub start: f64,
    pub end: f64,
    pub total: u64,
    pub per_replication: MeanSd,
}

/// Histogram bins summed over replications, with overflow as a last open
/// bin. Values below the first bin (insurance totals under 1.00 in the log
/// view) are left out.
pub fn histogram_feed(study: &StudyResult, kind: HistogramKind) -> Result<Vec<HistogramBin>> {
    let reps = &study.replications;
    let pick = |r: &crate::sim::ReplicationSummary| match kind {
        HistogramKind::FinalBalance => r.histograms.final_balance.clone(),
        HistogramKind::CiTotal => r.histograms.ci_total.clone(),
        HistogramKind::CiTotalLog10 => r.histograms.ci_total_log10.clone(),
    };
    let hs: Vec<_> = reps.iter().map(pick).collect();
    let h0 = hs.first().ok_or(Error::EmptyInput)?;
    let bins = h0.counts.len();
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| {
            let v: Vec<f64> = hs.iter().map(|h| h.counts[i] as f64).collect();
            HistogramBin {
                start: h0.bin_start(i),
                end: h0.bin_start(i + 1),
                total: hs.iter().map(|h| h.counts[i]).sum(),
                per_replication: MeanSd::from_values(&v).expect("non-empty"),
            }
        })
        .collect();
    let v: Vec<f64> = hs.iter().map(|h| h.overflow as f64).collect();
    out.push(HistogramBin {
        start: h0.bin_start(bins),
        end: f64::INFINITY,
        total: hs.iter().map(|h| h.overflow).sum(),
        per_replication: MeanSd::from_values(&v).expect("non-empty"),
    });
    Ok(out)
}

/// Everything derived from a study, ready to serialise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub metadata: ReportMetadata,
    pub snapshots: Vec<SnapshotRow>,
    pub ci_usage: Vec<CiUsageRow>,
    pub coverage: CoverageSummary,
    pub totals: crate::sim::Totals,
    pub ci_share_of_expenses_pct: Option<f64>,
}

pub fn study_report(study: &StudyResult, metadata: ReportMetadata, ages: &[u32]) -> Result<StudyReport> {
    let t = study.totals;
    Ok(StudyReport {
        metadata,
        snapshots: balance_snapshots(study, ages)?,
        ci_usage: ci_usage_table(study)?,
        coverage: coverage_summary(study)?,
        totals: t,
        ci_share_of_expenses_pct: (!t.expenses.is_zero())
            .then(|| 100.0 * t.ci_paid.as_f64() / t.expenses.as_f64()),
    })
}

/// Snapshot ages among the defaults that the study covers.
pub fn covered_snapshot_ages(study: &StudyResult) -> Vec<u32> {
    DEFAULT_SNAPSHOT_AGES
        .into_iter()
        .filter(|a| study.params.ages().contains(a))
        .collect()
}

// ------------------------------------------------------------- rendering

/// Whole units with thousands separators.
pub fn fmt_units(x: f64) -> String {
    if !x.is_finite() {
        return "inf".into();
    }
    let r = x.round();
    let neg = r < 0.0;
    let digits = format!("{:.0}", r.abs());
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    if neg && out != "0" {
        out.insert(0, '-');
    }
    out
}

fn fmt_pct(x: f64) -> String {
    format!("{x:.2}")
}

fn fmt_opt(x: Option<MeanSd>, f: fn(f64) -> String) -> (String, String) {
    match x {
        Some(m) => (f(m.mean), m.sd.map_or("-".into(), f)),
        None => ("-".into(), "-".into()),
    }
}

/// A titled grid rendered with right-aligned columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextTable {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl TextTable {
    pub fn new(title: impl Into<String>, header: &[&str]) -> Self {
        TextTable {
            title: title.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut w = vec![0usize; cols];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in row.iter().enumerate().take(cols) {
                w[i] = w[i].max(c.chars().count());
            }
        }
        let mut out = format!("{}\n", self.title);
        let line = |row: &Vec<String>| {
            let cells: Vec<String> = (0..cols)
                .map(|i| {
                    let c = row.get(i).map(String::as_str).unwrap_or("");
                    if i == 0 {
                        format!("{c:<width$}", width = w[i])
                    } else {
                        format!("{c:>width$}", width = w[i])
                    }
                })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        out.push_str(&line(&self.header));
        out.push('\n');
        let total: usize = w.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        for n in &self.notes {
            let _ = writeln!(out, "{n}");
        }
        out
    }
}

fn rank_label(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("p{r:.0}")
    } else {
        format!("p{}", r.to_string().replace('.', ""))
    }
}

pub fn render_level_shares(rows: &[LevelShareRow]) -> TextTable {
    let mut t = TextTable::new(
        "Share of person-years in each expense level (%)",
        &["stratum", "person-years", "F1", "F2", "F3", "F4"],
    );
    for r in rows {
        let mut row = vec![
            r.stratum.map_or("all".into(), |s| s.to_string()),
            r.person_years.to_string(),
        ];
        row.extend(r.pct.iter().map(|&p| fmt_pct(p)));
        t.rows.push(row);
    }
    t
}

/// Groups as columns, statistics as rows, one table per group set and year.
pub fn render_expense_table(title: &str, rows: &[ExpenseStatsRow]) -> TextTable {
    let mut header = vec!["statistic".to_string()];
    header.extend(rows.iter().map(|r| format!("{} {}", r.group, r.year)));
    let mut t = TextTable {
        title: title.into(),
        header,
        rows: Vec::new(),
        notes: vec!["Percentiles, mean and sd over positive expenses only.".into()],
    };
    let stat = |f: &dyn Fn(&crate::stats::SampleStats) -> Option<f64>| -> Vec<String> {
        rows.iter()
            .map(|r| r.summary.stats.as_ref().and_then(f).map_or("-".into(), fmt_units))
            .collect()
    };
    let mut push = |name: String, cells: Vec<String>| {
        let mut row = vec![name];
        row.extend(cells);
        t.rows.push(row);
    };
    push("n".into(), rows.iter().map(|r| r.summary.n.to_string()).collect());
    push("PctNoExpense".into(), rows.iter().map(|r| fmt_pct(r.summary.pct_zero)).collect());
    for &rank in &EXPENSE_RANKS {
        push(rank_label(rank), stat(&|s| s.percentile(rank)));
    }
    push("max".into(), stat(&|s| Some(s.max)));
    push("mean".into(), stat(&|s| Some(s.mean)));
    push("sd".into(), stat(&|s| s.sd));
    t
}

fn push_aggregate_rows(t: &mut TextTable, cols: &[&AggregatedSummary]) {
    let mut push = |name: String, cells: Vec<Option<MeanSd>>, f: fn(f64) -> String| {
        let mut row = vec![name];
        for c in cells {
            let (m, s) = fmt_opt(c, f);
            row.push(m);
            row.push(s);
        }
        t.rows.push(row);
    };
    push("n0".into(), cols.iter().map(|c| Some(c.n_zero)).collect(), fmt_units);
    push("pctnul".into(), cols.iter().map(|c| Some(c.pct_zero)).collect(), fmt_pct);
    let ranks: Vec<f64> = cols[0].percentiles.iter().map(|p| p.0).collect();
    for (i, r) in ranks.iter().enumerate() {
        push(rank_label(*r), cols.iter().map(|c| c.percentiles[i].1).collect(), fmt_units);
    }
    push("max".into(), cols.iter().map(|c| c.max).collect(), fmt_units);
    push("mean".into(), cols.iter().map(|c| c.mean).collect(), fmt_units);
    push("sd".into(), cols.iter().map(|c| c.sd).collect(), fmt_units);
}

fn mu_sigma_header(first: &str, names: &[String]) -> Vec<String> {
    let mut h = vec![first.to_string()];
    for n in names {
        h.push(format!("{n} mu"));
        h.push(format!("{n} sigma"));
    }
    h
}

pub fn render_snapshots(rows: &[SnapshotRow]) -> TextTable {
    let names: Vec<String> = rows.iter().map(|r| format!("age {}", r.age)).collect();
    let mut t = TextTable {
        title: "Account balance at selected ages (mean and sd over replications)".into(),
        header: mu_sigma_header("statistic", &names),
        rows: Vec::new(),
        notes: vec!["Percentiles, max, mean and sd over positive balances only.".into()],
    };
    if !rows.is_empty() {
        let cols: Vec<&AggregatedSummary> = rows.iter().map(|r| &r.summary).collect();
        push_aggregate_rows(&mut t, &cols);
    }
    t
}

pub fn render_ci_usage(rows: &[CiUsageRow]) -> TextTable {
    let mut t = TextTable::new(
        "Catastrophic insurance use: frequency and severity",
        &[
            "uses", "lives mu", "lives sigma", "% lives", "cum % lives", "total mu",
            "total sigma", "% total", "cum % total", "per life mu", "per life sigma",
        ],
    );
    for r in rows {
        let opt_pct = |x: Option<f64>| x.map_or("-".into(), fmt_pct);
        let (pm, ps) = fmt_opt(r.ci_per_life, fmt_units);
        t.rows.push(vec![
            r.uses.to_string(),
            fmt_units(r.lives.mean),
            r.lives.sd.map_or("-".into(), fmt_units),
            fmt_pct(r.pct_lives),
            fmt_pct(r.cum_pct_lives),
            fmt_units(r.ci_total.mean),
            r.ci_total.sd.map_or("-".into(), fmt_units),
            opt_pct(r.pct_ci),
            opt_pct(r.cum_pct_ci),
            pm,
            ps,
        ]);
    }
    t
}

pub fn render_coverage(c: &CoverageSummary) -> TextTable {
    let names: Vec<String> = c.columns.iter().map(|x| x.name.clone()).collect();
    let mut t = TextTable {
        title: "Final balance and coverage over the working life".into(),
        header: mu_sigma_header("statistic", &names),
        rows: Vec::new(),
        notes: Vec::new(),
    };
    let cols: Vec<&AggregatedSummary> = c.columns.iter().map(|x| &x.summary).collect();
    push_aggregate_rows(&mut t, &cols);
    t.notes.push("Percentiles, max, mean and sd over values greater than zero.".into());
    t.notes.push(format!(
        "Skewness of final balances (all replications): {}",
        c.skewness_pooled.map_or("-".into(), |s| format!("{s:.4}"))
    ));
    t.notes.push(format!(
        "Outliers of final balances per replication: mean {:.2}, total {}",
        c.outliers.per_replication.mean, c.outliers.total
    ));
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_formatting() {
        assert_eq!(fmt_units(0.4), "0");
        assert_eq!(fmt_units(999.5), "1,000");
        assert_eq!(fmt_units(1_234_567.0), "1,234,567");
        assert_eq!(fmt_units(-0.2), "0");
        assert_eq!(fmt_units(-1500.0), "-1,500");
        assert_eq!(rank_label(99.5), "p995");
        assert_eq!(rank_label(5.0), "p5");
    }

    #[test]
    fn text_table_alignment() {
        let mut t = TextTable::new("T", &["a", "bb"]);
        t.rows.push(vec!["xyz".into(), "1".into()]);
        let r = t.render();
        assert_eq!(r, "T\na    bb\n-------\nxyz   1\n");
    }
}
