//! Descriptive statistics used by the report tables.
//!
//! Percentiles interpolate linearly between the closest order statistics
//! (sample quantile type 7): for sorted `x` of length `n` and rank `p`, the
//! position is `h = (n - 1) p` and the value `x[⌊h⌋] + (h - ⌊h⌋)(x[⌊h⌋+1] - x[⌊h⌋])`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ranks for expense tables, in percent.
pub const EXPENSE_RANKS: [f64; 11] = [
    25.0, 50.0, 75.0, 90.0, 95.0, 96.0, 97.0, 98.0, 99.0, 99.5, 99.9,
];

/// Ranks for account tables (balances and coverage), in percent.
pub const ACCOUNT_RANKS: [f64; 10] = [5.0, 10.0, 15.0, 25.0, 40.0, 50.0, 75.0, 85.0, 95.0, 98.0];

pub const PERCENTILE_METHOD: &str = "linear interpolation between closest order statistics (type 7)";
pub const SKEWNESS_METHOD: &str = "adjusted Fisher-Pearson standardized moment coefficient G1";
pub const OUTLIER_METHOD: &str = "Tukey fences at 1.5 x IQR beyond the quartiles";

/// Percentile of already sorted data; `rank` is in percent.
pub fn percentile_sorted(sorted: &[f64], rank: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * (rank / 100.0).clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sort_f64(values: &mut [f64]) {
    values.sort_by(f64::total_cmp);
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Arithmetic mean; exact when all values are equal.
pub fn mean(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    if all_equal(values) {
        return Some(first);
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation with the n - 1 denominator; `None` below two values.
pub fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    if all_equal(values) {
        return Some(0.0);
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentile {
    pub rank: f64,
    pub value: f64,
}

/// Statistics over the values that were summarised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub percentiles: Vec<Percentile>,
    pub max: f64,
    pub mean: f64,
    pub sd: Option<f64>,
}

impl SampleStats {
    pub fn from_values(mut values: Vec<f64>, ranks: &[f64]) -> Option<SampleStats> {
        if values.is_empty() {
            return None;
        }
        sort_f64(&mut values);
        Some(SampleStats {
            n: values.len(),
            percentiles: ranks
                .iter()
                .map(|&rank| Percentile {
                    rank,
                    value: percentile_sorted(&values, rank),
                })
                .collect(),
            max: *values.last().expect("non-empty"),
            mean: mean(&values).expect("non-empty"),
            sd: sample_sd(&values),
        })
    }

    pub fn percentile(&self, rank: f64) -> Option<f64> {
        self.percentiles
            .iter()
            .find(|p| p.rank == rank)
            .map(|p| p.value)
    }
}

/// A table column: counts over all values, statistics over the summarised subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n: usize,
    pub n_zero: usize,
    pub pct_zero: f64,
    pub positive_only: bool,
    /// `None` when the summarised subset is empty.
    pub stats: Option<SampleStats>,
}

pub fn descriptive_stats(values: &[f64], positive_only: bool, ranks: &[f64]) -> Result<StatsSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n_zero = values.iter().filter(|&&v| v == 0.0).count();
    let subset: Vec<f64> = if positive_only {
        values.iter().copied().filter(|&v| v > 0.0).collect()
    } else {
        values.to_vec()
    };
    Ok(StatsSummary {
        n: values.len(),
        n_zero,
        pct_zero: 100.0 * n_zero as f64 / values.len() as f64,
        positive_only,
        stats: SampleStats::from_values(subset, ranks),
    })
}

/// Central moments that can be merged exactly in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
}

impl Moments {
    pub fn from_values(values: &[f64]) -> Moments {
        let mut m = Moments::default();
        for &v in values {
            m.push(v);
        }
        m
    }

    pub fn push(&mut self, x: f64) {
        self.merge(&Moments {
            n: 1,
            mean: x,
            m2: 0.0,
            m3: 0.0,
        });
    }

    /// Pairwise update of the first three central moments.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let m2 = self.m2 + other.m2 + delta * delta * na * nb / n;
        let m3 = self.m3
            + other.m3
            + delta.powi(3) * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        self.mean += delta * nb / n;
        self.m2 = m2;
        self.m3 = m3;
        self.n += other.n;
    }

    /// Adjusted Fisher-Pearson skewness; `None` below three values or with
    /// zero variance.
    pub fn skewness(&self) -> Option<f64> {
        if self.n < 3 || self.m2 <= 0.0 {
            return None;
        }
        let n = self.n as f64;
        let g1 = (self.m3 / n) / (self.m2 / n).powf(1.5);
        Some(g1 * (n * (n - 1.0)).sqrt() / (n - 2.0))
    }
}

pub fn skewness(values: &[f64]) -> Option<f64> {
    Moments::from_values(values).skewness()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyOutliers {
    pub q1: f64,
    pub q3: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl TukeyOutliers {
    pub fn count(&self) -> usize {
        self.low.len() + self.high.len()
    }
}

pub fn tukey_outliers(values: &[f64]) -> Option<TukeyOutliers> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sort_f64(&mut sorted);
    let q1 = percentile_sorted(&sorted, 25.0);
    let q3 = percentile_sorted(&sorted, 75.0);
    let iqr = q3 - q1;
    let lower_fence = q1 - 1.5 * iqr;
    let upper_fence = q3 + 1.5 * iqr;
    Some(TukeyOutliers {
        q1,
        q3,
        lower_fence,
        upper_fence,
        low: sorted.iter().copied().filter(|&v| v < lower_fence).collect(),
        high: sorted.iter().copied().filter(|&v| v > upper_fence).collect(),
    })
}

/// Mean and sample sd of one statistic across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// `None` when fewer than two values are available.
    pub sd: Option<f64>,
    pub n: usize,
}

impl MeanSd {
    pub fn from_values(values: &[f64]) -> Option<MeanSd> {
        Some(MeanSd {
            mean: mean(values)?,
            sd: sample_sd(values),
            n: values.len(),
        })
    }
}

/// Equal-width bins starting at `origin`; values past the last bin land in
/// `overflow`, values below `origin` in `underflow`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub origin: f64,
    pub width: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(origin: f64, width: f64, bins: usize) -> Histogram {
        assert!(width > 0.0 && bins > 0);
        Histogram {
            origin,
            width,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn add(&mut self, x: f64) {
        if x < self.origin {
            self.underflow += 1;
            return;
        }
        let b = ((x - self.origin) / self.width).floor() as usize;
        match self.counts.get_mut(b) {
            Some(c) => *c += 1,
            None => self.overflow += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.width
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolated_percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_sorted(&v, 0.0), 1.0);
        assert_eq!(percentile_sorted(&v, 50.0), 2.5);
        assert_eq!(percentile_sorted(&v, 25.0), 1.75);
        assert_eq!(percentile_sorted(&v, 100.0), 4.0);
        assert_eq!(percentile_sorted(&[7.0], 99.9), 7.0);
    }

    #[test]
    fn positive_only_summary() {
        let s = descriptive_stats(&[0.0, 0.0, 100.0, 300.0], true, &EXPENSE_RANKS).unwrap();
        assert_eq!(s.n, 4);
        assert_eq!(s.n_zero, 2);
        assert_eq!(s.pct_zero, 50.0);
        let st = s.stats.unwrap();
        assert_eq!(st.n, 2);
        assert_eq!(st.mean, 200.0);
        assert_eq!(st.max, 300.0);
        assert_eq!(st.percentile(50.0), Some(200.0));
    }

    #[test]
    fn constant_values() {
        let s = descriptive_stats(&[42.0; 9], false, &EXPENSE_RANKS).unwrap();
        let st = s.stats.unwrap();
        assert!(st.percentiles.iter().all(|p| p.value == 42.0));
        assert_eq!(st.sd, Some(0.0));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(descriptive_stats(&[], true, &EXPENSE_RANKS).is_err());
        let all_zero = descriptive_stats(&[0.0, 0.0], true, &EXPENSE_RANKS).unwrap();
        assert_eq!(all_zero.stats, None);
        assert_eq!(all_zero.pct_zero, 100.0);
    }

    #[test]
    fn tukey_single_outlier() {
        let mut v: Vec<f64> = (1..=100).map(f64::from).collect();
        v.push(10_000.0);
        let t = tukey_outliers(&v).unwrap();
        assert_eq!(t.q1, 26.0);
        assert_eq!(t.q3, 76.0);
        assert_eq!(t.upper_fence, 151.0);
        assert_eq!(t.high, vec![10_000.0]);
        assert!(t.low.is_empty());
    }

    #[test]
    fn skewness_known_values() {
        let v = [1.0, 1.0, 1.0, 5.0];
        // Mean 2, deviations -1,-1,-1,3: m2 = 12/4 = 3, m3 = 24/4 = 6.
        let g1 = 6.0 / 3f64.powf(1.5);
        let expected = g1 * (4.0f64 * 3.0).sqrt() / 2.0;
        assert!((skewness(&v).unwrap() - expected).abs() < 1e-12);
        assert!(skewness(&[1.0, 2.0, 3.0]).unwrap().abs() < 1e-12);
        assert_eq!(skewness(&[1.0, 2.0]), None);
        assert_eq!(skewness(&[4.0; 5]), None);
    }

    #[test]
    fn histogram_bins() {
        let mut h = Histogram::new(0.0, 10.0, 3);
        for x in [-1.0, 0.0, 9.99, 10.0, 29.0, 30.0] {
            h.add(x);
        }
        assert_eq!(h.counts, vec![2, 1, 1]);
        assert_eq!((h.underflow, h.overflow), (1, 1));
        assert_eq!(h.total(), 6);
    }

    #[test]
    fn mean_sd_single_value() {
        let m = MeanSd::from_values(&[3.0]).unwrap();
        assert_eq!(m.sd, None);
        assert_eq!(MeanSd::from_values(&[2.0, 2.0]).unwrap().sd, Some(0.0));
        let tenth = MeanSd::from_values(&[0.1; 3]).unwrap();
        assert_eq!((tenth.mean, tenth.sd), (0.1, Some(0.0)));
        assert_eq!(MeanSd::from_values(&[]), None);
    }

    fn sort_index_oracle(values: &[f64], rank: f64) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = rank / 100.0 * (v.len() - 1) as f64;
        let i = pos as usize;
        if i + 1 >= v.len() {
            return v[v.len() - 1];
        }
        v[i] * (1.0 - (pos - i as f64)) + v[i + 1] * (pos - i as f64)
    }

    proptest! {
        #[test]
        fn percentiles_match_sort_oracle(values in prop::collection::vec(0.0f64..1e6, 1..1000)) {
            let s = SampleStats::from_values(values.clone(), &EXPENSE_RANKS).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for p in &s.percentiles {
                let o = sort_index_oracle(&values, p.rank);
                prop_assert!((p.value - o).abs() <= 1e-9 * o.abs().max(1.0));
                prop_assert!(p.value >= prev);
                prev = p.value;
            }
            prop_assert!(s.max >= prev);
        }

        #[test]
        fn merged_moments_equal_direct(
            a in prop::collection::vec(-1e3f64..1e3, 0..200),
            b in prop::collection::vec(-1e3f64..1e3, 0..200),
        ) {
            let mut m = Moments::from_values(&a);
            m.merge(&Moments::from_values(&b));
            let all: Vec<f64> = a.iter().chain(&b).copied().collect();
            let d = Moments::from_values(&all);
            // Direct two-pass reference.
            if !all.is_empty() {
                let mu = all.iter().sum::<f64>() / all.len() as f64;
                let m2: f64 = all.iter().map(|x| (x - mu).powi(2)).sum();
                let m3: f64 = all.iter().map(|x| (x - mu).powi(3)).sum();
                prop_assert!((m.mean - mu).abs() < 1e-9);
                prop_assert!((m.m2 - m2).abs() <= 1e-7 * m2.max(1.0));
                prop_assert!((m.m3 - m3).abs() <= 1e-6 * m2.powf(1.5).max(1.0));
            }
            prop_assert_eq!(m.n, d.n);
        }
    }
}
