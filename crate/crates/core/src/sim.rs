//! Two-step Monte Carlo simulation of lives and replications.
//!
//! Each simulated year after the first predicts a level from the order-2
//! matrix of the stratum for the age being simulated, then draws an exact
//! expense inside that level from the stratum's empirical distribution.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hsa::{simulate_account, HsaParams, LifeTrajectory};
use crate::markov::{Order2Matrix, TransitionModel};
use crate::model::{AgeRange, ExpenseLevel, LevelBreaks, Sex, Stratum};
use crate::money::Money;
use crate::sampler::{DistributionSet, InitialLife, InitialPool};
use crate::seed::{life_seed, replication_seed, rng_from_seed};
use crate::stats::{
    descriptive_stats, tukey_outliers, Histogram, Moments, StatsSummary, ACCOUNT_RANKS,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationParams {
    pub n_lives: u32,
    pub n_replications: u32,
    pub hsa: HsaParams,
    pub master_seed: u64,
    pub start_age: u32,
    pub level_breaks: LevelBreaks,
}

impl Default for SimulationParams {
    fn default() -> Self {
        SimulationParams {
            n_lives: 10_000,
            n_replications: 1_000,
            hsa: HsaParams::default(),
            master_seed: 2_009,
            start_age: 25,
            level_breaks: LevelBreaks::default(),
        }
    }
}

impl SimulationParams {
    /// 10,000 lives, 1,000 replications, 41 years with 40 deposits.
    pub fn paper() -> Self {
        SimulationParams {
            hsa: HsaParams::paper(),
            ..SimulationParams::default()
        }
    }

    pub fn last_age(&self) -> u32 {
        self.start_age + self.hsa.years - 1
    }

    pub fn ages(&self) -> std::ops::RangeInclusive<u32> {
        self.start_age..=self.last_age()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lives == 0 || self.n_replications == 0 {
            return Err(Error::InvalidParams(
                "n_lives and n_replications must be at least 1".into(),
            ));
        }
        self.hsa.validate()?;
        let first = AgeRange::SIMULATION[0].bounds().0;
        let last = AgeRange::SIMULATION[AgeRange::SIMULATION.len() - 1].bounds().1;
        if self.start_age < first || self.last_age() > last {
            return Err(Error::InvalidParams(format!(
                "simulated ages {}-{} fall outside {first}-{last}",
                self.start_age,
                self.last_age()
            )));
        }
        Ok(())
    }
}

/// Categorical draw from a probability row by cumulative sums.
pub fn draw_level(row: &[f64; 4], rng: &mut impl Rng) -> ExpenseLevel {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return ExpenseLevel::ALL[k];
        }
    }
    // Rounding left u at or above the total: take the last level with mass.
    let k = row.iter().rposition(|&p| p > 0.0).unwrap_or(3);
    ExpenseLevel::ALL[k]
}

pub fn predict_next_level(
    matrix: &Order2Matrix,
    history: (ExpenseLevel, ExpenseLevel),
    rng: &mut impl Rng,
) -> ExpenseLevel {
    draw_level(matrix.row(history.0, history.1), rng)
}

/// Model, distributions and parameters checked for mutual consistency.
#[derive(Debug, Clone, Copy)]
pub struct SimInputs<'a> {
    pub model: &'a TransitionModel,
    pub distributions: &'a DistributionSet,
    pub pool: &'a InitialPool,
    pub params: &'a SimulationParams,
}

impl<'a> SimInputs<'a> {
    pub fn new(
        model: &'a TransitionModel,
        distributions: &'a DistributionSet,
        pool: &'a InitialPool,
        params: &'a SimulationParams,
    ) -> Result<Self> {
        params.validate()?;
        model.validate()?;
        if model.breaks != params.level_breaks || distributions.breaks != params.level_breaks {
            return Err(Error::InvalidParams(
                "level break points differ between model, distributions and parameters".into(),
            ));
        }
        if pool.lives.is_empty() {
            return Err(Error::EmptyInitialPool);
        }
        Ok(SimInputs {
            model,
            distributions,
            pool,
            params,
        })
    }

    fn stratum_for(&self, sex: Sex, age: u32) -> Stratum {
        let range = AgeRange::from_age(age).expect("validated age");
        Stratum::new(sex, range)
    }
}

/// A trajectory plus the stratum used for each year (`None` for the
/// initial year, which comes from the initial life).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracedLife {
    pub initial: InitialLife,
    pub trajectory: LifeTrajectory,
    pub strata: Vec<Option<Stratum>>,
}

pub fn simulate_life_traced(
    inputs: &SimInputs<'_>,
    initial: InitialLife,
    rng: &mut impl Rng,
) -> Result<TracedLife> {
    let p = inputs.params;
    let n = p.hsa.years as usize;
    let mut path = Vec::with_capacity(n);
    let mut strata = Vec::with_capacity(n);
    path.push((initial.history.1, initial.first_expense));
    strata.push(None);
    let mut history = initial.history;
    for year in 1..n {
        let age = p.start_age + year as u32;
        let stratum = inputs.stratum_for(initial.sex, age);
        let matrix = inputs.model.matrix(stratum).expect("validated model");
        let level = predict_next_level(matrix, history, rng);
        let expense = inputs
            .distributions
            .sample_within_level(stratum, level, rng)?
            .0;
        path.push((level, expense));
        strata.push(Some(stratum));
        history = (history.1, level);
    }
    let trajectory = simulate_account(initial.sex, p.start_age, path, &p.hsa)?;
    Ok(TracedLife {
        initial,
        trajectory,
        strata,
    })
}

pub fn simulate_life(
    inputs: &SimInputs<'_>,
    initial: InitialLife,
    rng: &mut impl Rng,
) -> Result<LifeTrajectory> {
    simulate_life_traced(inputs, initial, rng).map(|t| t.trajectory)
}

/// Simulates life `life` of replication `replication`, drawing the initial
/// life and the path from the life's own stream.
pub fn simulate_indexed_life(
    inputs: &SimInputs<'_>,
    replication: u64,
    life: u64,
) -> Result<TracedLife> {
    let seed = life_seed(replication_seed(inputs.params.master_seed, replication), life);
    let mut rng = rng_from_seed(seed);
    let initial = inputs.pool.sample(&mut rng);
    simulate_life_traced(inputs, initial, &mut rng)
}

/// The parts of a trajectory that replication summaries need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifeSummary {
    pub sex: Sex,
    pub final_balance: Money,
    pub ci_use_count: u32,
    pub ci_total: Money,
    pub hsa_total: Money,
    pub deposits_total: Money,
    pub total_expense: Money,
    /// End-of-year balance for each simulated age.
    pub balances: Vec<Money>,
}

impl From<&LifeTrajectory> for LifeSummary {
    fn from(t: &LifeTrajectory) -> Self {
        LifeSummary {
            sex: t.sex,
            final_balance: t.final_balance,
            ci_use_count: t.ci_use_count,
            ci_total: t.ci_total,
            hsa_total: t.hsa_total,
            deposits_total: t.deposits_total,
            total_expense: t.total_expense(),
            balances: t.years.iter().map(|y| y.balance_after).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub index: u64,
    pub seed: u64,
    pub lives: Vec<LifeSummary>,
}

impl ReplicationResult {
    pub fn scatter(&self) -> Vec<ScatterPoint> {
        self.lives
            .iter()
            .map(|l| ScatterPoint {
                sex: l.sex,
                total_expense: l.total_expense,
                ci_total: l.ci_total,
                ci_use_count: l.ci_use_count,
                final_balance: l.final_balance,
            })
            .collect()
    }
}

pub fn run_replication(inputs: &SimInputs<'_>, index: u64) -> Result<ReplicationResult> {
    let lives = (0..u64::from(inputs.params.n_lives))
        .into_par_iter()
        .map(|life| simulate_indexed_life(inputs, index, life).map(|t| LifeSummary::from(&t.trajectory)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicationResult {
        index,
        seed: replication_seed(inputs.params.master_seed, index),
        lives,
    })
}

/// Exact sums over lives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub lives: u64,
    pub expenses: Money,
    pub hsa_paid: Money,
    pub ci_paid: Money,
    pub deposits: Money,
    pub final_balance: Money,
}

impl Totals {
    pub fn add(&mut self, other: &Totals) {
        self.lives += other.lives;
        self.expenses += other.expenses;
        self.hsa_paid += other.hsa_paid;
        self.ci_paid += other.ci_paid;
        self.deposits += other.deposits;
        self.final_balance += other.final_balance;
    }

    pub fn conserves(&self) -> bool {
        self.expenses == self.hsa_paid + self.ci_paid
            && self.deposits == self.hsa_paid + self.final_balance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBalance {
    pub age: u32,
    /// Statistics over positive balances; zero balances are counted.
    pub summary: StatsSummary,
}

/// Lives and insurance payments grouped by the number of years the
/// insurance paid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiUsageCell {
    pub uses: u32,
    pub lives: u64,
    pub ci_total: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub final_balance: StatsSummary,
    pub hsa_covered: StatsSummary,
    pub ci_covered: StatsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSummary {
    pub q1: f64,
    pub q3: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    /// Final balances in bins of 1,000.
    pub final_balance: Histogram,
    /// Positive insurance totals in bins of 5,000 up to 1,000,000.
    pub ci_total: Histogram,
    /// log10 of insurance totals of at least 1.00, bins of 0.1; smaller
    /// totals are counted in `underflow`.
    pub ci_total_log10: Histogram,
}

/// Everything the report tables need from one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub index: u64,
    pub seed: u64,
    pub totals: Totals,
    pub balance_by_age: Vec<AgeBalance>,
    /// Indexed by number of uses, 0 through the number of simulated years.
    pub ci_usage: Vec<CiUsageCell>,
    pub coverage: CoverageStats,
    pub final_balance_moments: Moments,
    pub skewness: Option<f64>,
    pub outliers: OutlierSummary,
    pub histograms: Histograms,
}

fn units(m: Money) -> f64 {
    m.as_f64()
}

impl ReplicationSummary {
    pub fn from_result(r: &ReplicationResult, params: &SimulationParams) -> Result<Self> {
        if r.lives.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut totals = Totals::default();
        for l in &r.lives {
            totals.add(&Totals {
                lives: 1,
                expenses: l.total_expense,
                hsa_paid: l.hsa_total,
                ci_paid: l.ci_total,
                deposits: l.deposits_total,
                final_balance: l.final_balance,
            });
        }

        let years = params.hsa.years as usize;
        let balance_by_age = (0..years)
            .map(|i| {
                let v: Vec<f64> = r.lives.iter().map(|l| units(l.balances[i])).collect();
                Ok(AgeBalance {
                    age: params.start_age + i as u32,
                    summary: descriptive_stats(&v, true, &ACCOUNT_RANKS)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut ci_usage: Vec<CiUsageCell> = (0..=params.hsa.years)
            .map(|uses| CiUsageCell {
                uses,
                lives: 0,
                ci_total: Money::ZERO,
            })
            .collect();
        for l in &r.lives {
            let cell = &mut ci_usage[l.ci_use_count as usize];
            cell.lives += 1;
            cell.ci_total += l.ci_total;
        }

        let finals: Vec<f64> = r.lives.iter().map(|l| units(l.final_balance)).collect();
        let hsa: Vec<f64> = r.lives.iter().map(|l| units(l.hsa_total)).collect();
        let ci: Vec<f64> = r.lives.iter().map(|l| units(l.ci_total)).collect();
        let coverage = CoverageStats {
            final_balance: descriptive_stats(&finals, true, &ACCOUNT_RANKS)?,
            hsa_covered: descriptive_stats(&hsa, true, &ACCOUNT_RANKS)?,
            ci_covered: descriptive_stats(&ci, true, &ACCOUNT_RANKS)?,
        };
        let moments = Moments::from_values(&finals);
        let t = tukey_outliers(&finals).expect("non-empty");

        let max_balance = params
            .hsa
            .annual_deposit
            .checked_mul(u64::from(params.hsa.deposits))
            .expect("validated")
            .as_f64();
        let mut histograms = Histograms {
            final_balance: Histogram::new(0.0, 1_000.0, (max_balance / 1_000.0).floor() as usize + 1),
            ci_total: Histogram::new(0.0, 5_000.0, 200),
            ci_total_log10: Histogram::new(0.0, 0.1, 80),
        };
        for l in &r.lives {
            histograms.final_balance.add(units(l.final_balance));
            let c = units(l.ci_total);
            if c > 0.0 {
                histograms.ci_total.add(c);
            }
            if c >= 1.0 {
                histograms.ci_total_log10.add(c.log10());
            } else {
                histograms.ci_total_log10.underflow += 1;
            }
        }

        Ok(ReplicationSummary {
            index: r.index,
            seed: r.seed,
            totals,
            balance_by_age,
            ci_usage,
            coverage,
            final_balance_moments: moments,
            skewness: moments.skewness(),
            outliers: OutlierSummary {
                q1: t.q1,
                q3: t.q3,
                lower_fence: t.lower_fence,
                upper_fence: t.upper_fence,
                low: t.low,
                high: t.high,
            },
            histograms,
        })
    }
}

/// One point of the total-expense versus insurance-share scatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub sex: Sex,
    pub total_expense: Money,
    pub ci_total: Money,
    pub ci_use_count: u32,
    pub final_balance: Money,
}

impl ScatterPoint {
    pub fn ci_share_pct(&self) -> Option<f64> {
        (!self.total_expense.is_zero())
            .then(|| 100.0 * self.ci_total.as_f64() / self.total_expense.as_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub params: SimulationParams,
    /// Ordered by replication index.
    pub replications: Vec<ReplicationSummary>,
    /// Exact totals over every life of every replication.
    pub totals: Totals,
    /// Final-balance moments over every life, merged in replication order.
    pub final_balance_moments: Moments,
    /// Lives of replication 0, for the scatter plot.
    pub scatter: Vec<ScatterPoint>,
}

impl StudyResult {
    /// Pooled skewness of final balances over all replications.
    pub fn pooled_skewness(&self) -> Option<f64> {
        self.final_balance_moments.skewness()
    }
}

/// Runs every replication, in parallel, merging in index order. The result
/// depends only on the inputs, not on the number of worker threads.
pub fn run_study(inputs: &SimInputs<'_>) -> Result<StudyResult> {
    let params = inputs.params;
    let per_rep = (0..u64::from(params.n_replications))
        .into_par_iter()
        .map(|i| {
            let r = run_replication(inputs, i)?;
            let summary = ReplicationSummary::from_result(&r, params)?;
            let scatter = (i == 0).then(|| r.scatter());
            Ok((summary, scatter))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(StudyResult::assemble(params.clone(), per_rep))
}

impl StudyResult {
    /// Builds a study from per-replication summaries given in index order;
    /// the first scatter set supplied is kept.
    pub fn assemble(
        params: SimulationParams,
        per_rep: Vec<(ReplicationSummary, Option<Vec<ScatterPoint>>)>,
    ) -> StudyResult {
        let mut totals = Totals::default();
        let mut moments = Moments::default();
        let mut scatter = None;
        let mut replications = Vec::with_capacity(per_rep.len());
        for (s, sc) in per_rep {
            totals.add(&s.totals);
            moments.merge(&s.final_balance_moments);
            if scatter.is_none() {
                scatter = sc;
            }
            replications.push(s);
        }
        StudyResult {
            params,
            replications,
            totals,
            final_balance_moments: moments,
            scatter: scatter.unwrap_or_default(),
        }
    }
}
