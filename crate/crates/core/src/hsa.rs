//! Account rules: annual deposit, capped withdrawal, insurance overflow.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExpenseLevel, Sex};
use crate::money::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HsaParams {
    pub annual_deposit: Money,
    pub annual_cap: Money,
    /// Simulated years, starting at age 25.
    pub years: u32,
    /// Number of leading years that receive a deposit.
    pub deposits: u32,
}

impl Default for HsaParams {
    fn default() -> Self {
        HsaParams {
            annual_deposit: Money::from_units(2_500),
            annual_cap: Money::from_units(5_000),
            years: 41,
            deposits: 41,
        }
    }
}

impl HsaParams {
    /// 41 simulated years with 40 deposits, which is what a zero-expense
    /// balance of 100,000 at 65 implies.
    pub fn paper() -> Self {
        HsaParams {
            deposits: 40,
            ..HsaParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.annual_deposit.is_zero() {
            return bad("annual_deposit must be positive");
        }
        if self.annual_cap.is_zero() {
            return bad("annual_cap must be positive");
        }
        if self.years == 0 || self.deposits == 0 {
            return bad("years and deposits must be positive");
        }
        if self.deposits > self.years {
            return bad("deposits must not exceed years");
        }
        if self
            .annual_deposit
            .checked_mul(u64::from(self.deposits))
            .is_none()
        {
            return bad("total deposits overflow");
        }
        Ok(())
    }

    pub fn deposit_for_year(&self, year_index: u32) -> Money {
        if year_index < self.deposits {
            self.annual_deposit
        } else {
            Money::ZERO
        }
    }
}

/// One account year. `balance_before` already includes this year's deposit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearOutcome {
    pub expense: Money,
    pub deposit: Money,
    pub balance_before: Money,
    pub hsa_paid: Money,
    pub insurance_paid: Money,
    pub balance_after: Money,
    pub insurance_used: bool,
}

/// Applies the withdrawal rule to a balance that has already been credited
/// with the year's deposit.
pub fn apply_year(balance_before: Money, expense: Money, params: &HsaParams) -> YearOutcome {
    let hsa_paid = expense.min(params.annual_cap).min(balance_before);
    let insurance_paid = expense - hsa_paid;
    YearOutcome {
        expense,
        deposit: Money::ZERO,
        balance_before,
        hsa_paid,
        insurance_paid,
        balance_after: balance_before - hsa_paid,
        insurance_used: !insurance_paid.is_zero(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifeTrajectory {
    pub sex: Sex,
    pub start_age: u32,
    pub levels: Vec<ExpenseLevel>,
    pub years: Vec<YearOutcome>,
    pub final_balance: Money,
    pub ci_use_count: u32,
    pub ci_total: Money,
    pub hsa_total: Money,
    pub deposits_total: Money,
}

impl LifeTrajectory {
    pub fn total_expense(&self) -> Money {
        self.years.iter().map(|y| y.expense).sum()
    }

    pub fn age_of(&self, year_index: usize) -> u32 {
        self.start_age + year_index as u32
    }

    /// Both exact identities: deposits = withdrawals + final balance and
    /// expenses = withdrawals + insurance.
    pub fn conserves(&self) -> bool {
        self.deposits_total == self.hsa_total + self.final_balance
            && self.total_expense() == self.hsa_total + self.ci_total
    }
}

/// Runs the account over `params.years` (level, expense) pairs. Each year the
/// deposit, if any, is credited before the expense is paid.
pub fn simulate_account(
    sex: Sex,
    start_age: u32,
    path: impl IntoIterator<Item = (ExpenseLevel, Money)>,
    params: &HsaParams,
) -> Result<LifeTrajectory> {
    let n = params.years as usize;
    let mut levels = Vec::with_capacity(n);
    let mut years = Vec::with_capacity(n);
    let mut balance = Money::ZERO;
    let mut t = LifeTrajectory {
        sex,
        start_age,
        levels: Vec::new(),
        years: Vec::new(),
        final_balance: Money::ZERO,
        ci_use_count: 0,
        ci_total: Money::ZERO,
        hsa_total: Money::ZERO,
        deposits_total: Money::ZERO,
    };
    for (i, (level, expense)) in path.into_iter().take(n).enumerate() {
        let deposit = params.deposit_for_year(i as u32);
        balance += deposit;
        let mut y = apply_year(balance, expense, params);
        y.deposit = deposit;
        balance = y.balance_after;
        t.deposits_total += deposit;
        t.hsa_total += y.hsa_paid;
        t.ci_total += y.insurance_paid;
        t.ci_use_count += u32::from(y.insurance_used);
        levels.push(level);
        years.push(y);
    }
    if years.len() != n {
        return Err(Error::InvalidParams(format!(
            "expense path has {} years, expected {n}",
            years.len()
        )));
    }
    t.final_balance = balance;
    t.levels = levels;
    t.years = years;
    Ok(t)
}

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "replication",
    "life",
    "sex",
    "age",
    "level",
    "expense",
    "deposit",
    "balance_before",
    "hsa_paid",
    "insurance_paid",
    "balance_after",
    "insurance_used",
    "stratum",
];

/// One row per life-year. `strata` optionally labels the stratum each year
/// was drawn from (empty for the initial year).
pub fn write_trajectories<W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (u64, u64, LifeTrajectory, Vec<String>)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for (rep, life, t, strata) in rows {
        for (i, y) in t.years.iter().enumerate() {
            w.write_record([
                rep.to_string(),
                life.to_string(),
                t.sex.code().to_string(),
                t.age_of(i).to_string(),
                t.levels[i].to_string(),
                y.expense.to_string(),
                y.deposit.to_string(),
                y.balance_before.to_string(),
                y.hsa_paid.to_string(),
                y.insurance_paid.to_string(),
                y.balance_after.to_string(),
                u8::from(y.insurance_used).to_string(),
                strata.get(i).cloned().unwrap_or_default(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("trajectory output", e))?;
    Ok(())
}
