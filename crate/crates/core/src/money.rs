//! Exact non-negative currency amounts.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-negative amount of money held as an integer count of cents.
///
/// All account arithmetic is done on this type so that conservation
/// identities (deposits = withdrawals + balance, expenses = account share +
/// insurance share) hold exactly.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_cents(cents: u64) -> Self {
        Money(cents)
    }

    /// Whole currency units, e.g. `Money::from_units(2_500)` is 2,500.00.
    pub const fn from_units(units: u64) -> Self {
        Money(units * 100)
    }

    pub const fn cents(self) -> u64 {
        self.0
    }

    /// Value in currency units as a float, for statistics only.
    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_sub(self, rhs: Money) -> Option<Money> {
        self.0.checked_sub(rhs.0).map(Money)
    }

    pub fn saturating_sub(self, rhs: Money) -> Money {
        Money(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_mul(self, factor: u64) -> Option<Money> {
        self.0.checked_mul(factor).map(Money)
    }

    /// Parse a decimal string with at most two fractional digits.
    pub fn parse(text: &str) -> Result<Money> {
        let err = |reason| Error::Money {
            text: text.to_string(),
            reason,
        };
        let s = text.trim();
        if s.is_empty() {
            return Err(err("empty"));
        }
        if s.starts_with('-') {
            return Err(err("negative amount"));
        }
        let s = s.strip_prefix('+').unwrap_or(s);
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(err("no digits"));
        }
        if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err("not a decimal number"));
        }
        if frac.len() > 2 {
            return Err(err("expense precision exceeds cents"));
        }
        let units: u64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| err("amount too large"))?
        };
        let mut cents: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| err("not a decimal number"))?
        };
        if frac.len() == 1 {
            cents *= 10;
        }
        units
            .checked_mul(100)
            .and_then(|c| c.checked_add(cents))
            .map(Money)
            .ok_or_else(|| err("amount too large"))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Money {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Money::parse(s)
    }
}

impl Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

/// Panics on underflow; use [`Money::checked_sub`] where a negative result is possible.
impl Sub for Money {
    type Output = Money;

    fn sub(self, rhs: Money) -> Money {
        Money(
            self.0
                .checked_sub(rhs.0)
                .expect("money subtraction underflow"),
        )
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_exact_cents() {
        assert_eq!(Money::parse("300").unwrap(), Money::from_cents(30_000));
        assert_eq!(Money::parse("300.01").unwrap(), Money::from_cents(30_001));
        assert_eq!(Money::parse("0.5").unwrap(), Money::from_cents(50));
        assert_eq!(Money::parse(".75").unwrap(), Money::from_cents(75));
        assert_eq!(Money::parse("12.").unwrap(), Money::from_cents(1_200));
        assert_eq!(Money::parse(" 7 ").unwrap(), Money::from_cents(700));
    }

    #[test]
    fn rejects_bad_amounts() {
        let e = Money::parse("1234.567").unwrap_err().to_string();
        assert!(e.contains("expense precision exceeds cents"), "{e}");
        assert!(Money::parse("-1").is_err());
        assert!(Money::parse("").is_err());
        assert!(Money::parse(".").is_err());
        assert!(Money::parse("1e3").is_err());
        assert!(Money::parse("1,000").is_err());
        assert!(Money::parse("99999999999999999999").is_err());
    }

    #[test]
    fn displays_two_decimals() {
        assert_eq!(Money::from_cents(5).to_string(), "0.05");
        assert_eq!(Money::from_units(2_500).to_string(), "2500.00");
    }

    proptest! {
        #[test]
        fn decimal_text_round_trip(cents in 0u64..10_000_000_000_000) {
            let m = Money::from_cents(cents);
            let text = m.to_string();
            prop_assert_eq!(text.split('.').nth(1).map(str::len), Some(2));
            prop_assert_eq!(Money::parse(&text).unwrap(), m);
        }
    }
}
