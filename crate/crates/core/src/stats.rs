//! Statistical kernels: average ranks, sample skewness, Spearman rank
//! correlation with significance, and qualitative correlation bands.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transforms::IndicatorSeries;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("skewness is undefined: {0}")]
    UndefinedSkewness(String),
    #[error("insufficient pairs: n = {n}, need at least 3")]
    InsufficientPairs { n: usize },
    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(String),
}

/// Largest n for which `PValueMethod::Auto` enumerates all permutations.
pub const EXACT_P_MAX_N: usize = 10;

/// 1-based ranks, ties get the average of the positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Sample skewness. `b1 = m3 / m2^1.5` from central moments; with `adjusted`
/// the bias-corrected `G1 = b1 * sqrt(n(n-1)) / (n-2)`.
pub fn skewness(values: &[f64], adjusted: bool) -> Result<f64, StatsError> {
    let n = values.len();
    if n < 3 {
        return Err(StatsError::UndefinedSkewness(format!("n = {n}, need at least 3")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::UndefinedSkewness("non-finite value".into()));
    }
    if values.iter().all(|v| *v == values[0]) {
        return Err(StatsError::UndefinedSkewness("zero variance".into()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
    }
    m2 /= nf;
    m3 /= nf;
    if m2 <= 0.0 {
        return Err(StatsError::UndefinedSkewness("zero variance".into()));
    }
    let b1 = m3 / m2.powf(1.5);
    Ok(if adjusted {
        b1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
    } else {
        b1
    })
}

/// Qualitative strength of a correlation, by |rho| with closed lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    VeryWeak,
    Weak,
    Moderate,
    Strong,
    VeryStrong,
}

impl Band {
    pub fn from_rho(rho: f64) -> Band {
        let a = rho.abs();
        if a >= 0.8 {
            Band::VeryStrong
        } else if a >= 0.6 {
            Band::Strong
        } else if a >= 0.4 {
            Band::Moderate
        } else if a >= 0.2 {
            Band::Weak
        } else {
            Band::VeryWeak
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Band::VeryWeak => "very weak",
            Band::Weak => "weak",
            Band::Moderate => "moderate",
            Band::Strong => "strong",
            Band::VeryStrong => "very strong",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Exact permutation for n <= 10, Student-t otherwise.
    #[default]
    Auto,
    StudentT,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub n: usize,
    pub p_value: f64,
    pub exact_p: bool,
    pub band: Band,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p from t = rho * sqrt((n-2)/(1-rho^2)) with n-2 degrees of freedom.
pub fn t_test_p(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let r2 = rho * rho;
    if r2 >= 1.0 {
        return 0.0;
    }
    let t2 = r2 * df / (1.0 - r2);
    statrs::function::beta::beta_reg(df / 2.0, 0.5, df / (df + t2)).clamp(0.0, 1.0)
}

/// Two-sided exact permutation p: share of all n! pairings whose |rho| is at
/// least the observed one. Feasible for n <= ~10.
pub fn exact_permutation_p(rank_x: &[f64], rank_y: &[f64]) -> f64 {
    let n = rank_x.len();
    let mean = (n as f64 + 1.0) / 2.0;
    let centre = n as f64 * mean * mean;
    let observed: f64 = rank_x.iter().zip(rank_y).map(|(a, b)| a * b).sum();
    let target = (observed - centre).abs() - 1e-9;

    let mut y = rank_y.to_vec();
    let mut s = observed;
    let mut hits: u64 = 1; // identity permutation
    let mut total: u64 = 1;
    // Heap's algorithm; each swap changes the statistic by (x_i - x_j)(y_j - y_i).
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            s += (rank_x[i] - rank_x[j]) * (y[j] - y[i]);
            y.swap(i, j);
            total += 1;
            if (s - centre).abs() >= target {
                hits += 1;
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

/// Spearman correlation of two aligned samples; ties take average ranks.
pub fn spearman_values(x: &[f64], y: &[f64], method: PValueMethod) -> Result<CorrelationResult, StatsError> {
    assert_eq!(x.len(), y.len(), "samples must be aligned");
    let n = x.len();
    if n < 3 {
        return Err(StatsError::InsufficientPairs { n });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rho = pearson(&rx, &ry)
        .ok_or_else(|| StatsError::UndefinedCorrelation("zero rank variance".into()))?;
    let exact = match method {
        PValueMethod::Exact => true,
        PValueMethod::StudentT => false,
        PValueMethod::Auto => n <= EXACT_P_MAX_N,
    };
    let p_value = if exact {
        exact_permutation_p(&rx, &ry)
    } else {
        t_test_p(rho, n)
    };
    Ok(CorrelationResult {
        rho,
        n,
        p_value,
        exact_p: exact,
        band: Band::from_rho(rho),
    })
}

/// Pairwise-complete, orientation-aware samples of two series: institutions
/// missing in either are dropped, lower-is-better values are negated.
pub fn paired_values(x: &IndicatorSeries, y: &IndicatorSeries) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (id, a) in x.present() {
        if let Some(b) = y.get(id) {
            xs.push(x.oriented(a));
            ys.push(y.oriented(b));
        }
    }
    (xs, ys)
}

pub fn spearman(x: &IndicatorSeries, y: &IndicatorSeries) -> Result<CorrelationResult, StatsError> {
    spearman_with(x, y, PValueMethod::Auto)
}

pub fn spearman_with(
    x: &IndicatorSeries,
    y: &IndicatorSeries,
    method: PValueMethod,
) -> Result<CorrelationResult, StatsError> {
    let (xs, ys) = paired_values(x, y);
    spearman_values(&xs, &ys, method)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixCell {
    pub row: usize,
    pub col: usize,
    pub result: Option<CorrelationResult>,
    /// Why `result` is absent.
    pub reason: Option<String>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub alpha: f64,
    /// Upper triangle, row-major, `row < col`.
    pub cells: Vec<MatrixCell>,
}

impl CorrelationMatrix {
    pub fn cell(&self, row: usize, col: usize) -> Option<&MatrixCell> {
        let (r, c) = if row < col { (row, col) } else { (col, row) };
        self.cells.iter().find(|m| m.row == r && m.col == c)
    }
}

pub fn correlation_matrix(
    series: &[IndicatorSeries],
    min_n: usize,
    alpha: f64,
    method: PValueMethod,
) -> CorrelationMatrix {
    let min_n = min_n.max(3);
    let mut cells = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let (xs, ys) = paired_values(&series[i], &series[j]);
            let cell = if xs.len() < min_n {
                MatrixCell {
                    row: i,
                    col: j,
                    result: None,
                    reason: Some(format!("insufficient pairs (n = {})", xs.len())),
                    significant: false,
                }
            } else {
                match spearman_values(&xs, &ys, method) {
                    Ok(r) => MatrixCell {
                        row: i,
                        col: j,
                        significant: r.p_value < alpha,
                        result: Some(r),
                        reason: None,
                    },
                    Err(e) => MatrixCell {
                        row: i,
                        col: j,
                        result: None,
                        reason: Some(e.to_string()),
                        significant: false,
                    },
                }
            };
            cells.push(cell);
        }
    }
    CorrelationMatrix {
        labels: series.iter().map(|s| s.indicator.to_string()).collect(),
        alpha,
        cells,
    }
}

/// Skewness of every series' non-missing values, keyed by label.
pub fn skewness_table(series: &[IndicatorSeries], adjusted: bool) -> BTreeMap<String, (usize, Result<f64, StatsError>)> {
    series
        .iter()
        .map(|s| {
            let v: Vec<f64> = s.present().map(|(_, v)| v.as_f64()).collect();
            (s.indicator.to_string(), (v.len(), skewness(&v, adjusted)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn skewness_of_symmetric_sample_is_zero() {
        assert_eq!(skewness(&[1.0, 2.0, 3.0], true).unwrap(), 0.0);
        assert_eq!(skewness(&[1.0, 2.0, 3.0], false).unwrap(), 0.0);
    }

    #[test]
    fn skewness_of_one_one_one_ten() {
        // mean 3.25; deviations -2.25 x3, 6.75; m2 = 15.1875, m3 = 68.34375
        let b1 = 68.34375 / 15.1875f64.powf(1.5);
        let got = skewness(&[1.0, 1.0, 1.0, 10.0], false).unwrap();
        assert!((got - b1).abs() < 1e-12);
        assert!((got - 1.1547005383792515).abs() < 1e-12);
        let g1 = skewness(&[1.0, 1.0, 1.0, 10.0], true).unwrap();
        assert!((g1 - 2.0).abs() < 1e-12, "{g1}");
    }

    #[test]
    fn skewness_errors() {
        assert!(skewness(&[1.0, 2.0], true).is_err());
        assert!(skewness(&[4.0, 4.0, 4.0, 4.0], true).is_err());
    }

    #[test]
    fn spearman_identity_and_reversal() {
        let x = [1.0, 5.0, 2.0, 8.0, 3.0];
        let r = spearman_values(&x, &x, PValueMethod::Auto).unwrap();
        assert_eq!(r.rho, 1.0);
        assert_eq!(r.band, Band::VeryStrong);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(spearman_values(&x, &y, PValueMethod::Auto).unwrap().rho, -1.0);
    }

    #[test]
    fn spearman_errors() {
        assert_eq!(
            spearman_values(&[1.0, 2.0], &[1.0, 2.0], PValueMethod::Auto),
            Err(StatsError::InsufficientPairs { n: 2 })
        );
        assert!(matches!(
            spearman_values(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], PValueMethod::Auto),
            Err(StatsError::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn band_boundaries_take_upper_band() {
        assert_eq!(Band::from_rho(0.8), Band::VeryStrong);
        assert_eq!(Band::from_rho(-0.8), Band::VeryStrong);
        assert_eq!(Band::from_rho(0.4), Band::Moderate);
        assert_eq!(Band::from_rho(0.3999), Band::Weak);
        assert_eq!(Band::from_rho(0.0), Band::VeryWeak);
        assert_eq!(Band::from_rho(0.6), Band::Strong);
        assert_eq!(Band::from_rho(0.2), Band::Weak);
    }

    #[test]
    fn exact_p_small_cases() {
        // n = 3 perfect order: 1 of 6 permutations has rho = 1, 1 has rho = -1.
        let r = spearman_values(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], PValueMethod::Exact).unwrap();
        assert!((r.p_value - 2.0 / 6.0).abs() < 1e-15);
        // n = 4 perfect order: 2 of 24.
        let r = spearman_values(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0], PValueMethod::Auto).unwrap();
        assert!(r.exact_p);
        assert!((r.p_value - 2.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn t_p_value_reference() {
        // rho = 0.5, n = 30: t = 3.0550504633, two-sided p = 0.0048999337 (scipy)
        let p = t_test_p(0.5, 30);
        assert!((p - 0.004899933667068092).abs() < 1e-10, "{p}");
        assert_eq!(t_test_p(1.0, 30), 0.0);
        assert!((t_test_p(0.0, 30) - 1.0).abs() < 1e-12);
    }
}
