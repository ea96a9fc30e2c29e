//! Score-construction methods used by ranking systems to turn raw indicator
//! data into scores: normalization by the maximum, percentile ranks, classes
//! by distance to the median, and quantification of those classes.
//!
//! Every transform preserves missingness exactly: an institution that is
//! missing on input is missing on output, and no institution is dropped.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CanonicalId, IndicatorKind, IndicatorRef, PerfClass, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("series {0} has no non-missing values")]
    EmptySeries(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series {series} is {actual}, expected {expected}")]
    KindMismatch {
        series: String,
        expected: IndicatorKind,
        actual: IndicatorKind,
    },
    #[error("invalid class thresholds: {0}")]
    InvalidThresholds(String),
}

/// One indicator's values over a set of canonical institutions.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub indicator: IndicatorRef,
    pub kind: IndicatorKind,
    pub higher_is_better: bool,
    pub values: BTreeMap<CanonicalId, Option<Value>>,
}

impl IndicatorSeries {
    pub fn new(indicator: IndicatorRef, kind: IndicatorKind, higher_is_better: bool) -> Self {
        Self {
            indicator,
            kind,
            higher_is_better,
            values: BTreeMap::new(),
        }
    }

    /// Convenience constructor for numeric series keyed `i0, i1, ...`.
    pub fn from_numbers(indicator: IndicatorRef, values: &[Option<f64>]) -> Self {
        let mut s = Self::new(indicator, IndicatorKind::Numeric, true);
        for (i, v) in values.iter().enumerate() {
            s.values
                .insert(CanonicalId(format!("i{i:05}")), v.map(Value::Number));
        }
        s
    }

    pub fn get(&self, id: &CanonicalId) -> Option<Value> {
        self.values.get(id).copied().flatten()
    }

    pub fn present(&self) -> impl Iterator<Item = (&CanonicalId, Value)> {
        self.values.iter().filter_map(|(k, v)| v.map(|v| (k, v)))
    }

    pub fn non_missing(&self) -> usize {
        self.values.values().filter(|v| v.is_some()).count()
    }

    pub fn missing(&self) -> usize {
        self.values.len() - self.non_missing()
    }

    /// Numeric reading with "higher is better" orientation applied.
    pub fn oriented(&self, v: Value) -> f64 {
        let x = v.as_f64();
        if self.higher_is_better {
            x
        } else {
            -x
        }
    }

    fn require_kind(&self, expected: IndicatorKind) -> Result<(), TransformError> {
        if self.kind != expected {
            return Err(TransformError::KindMismatch {
                series: self.indicator.to_string(),
                expected,
                actual: self.kind,
            });
        }
        Ok(())
    }

    fn require_non_empty(&self) -> Result<(), TransformError> {
        if self.non_missing() == 0 {
            return Err(TransformError::EmptySeries(self.indicator.to_string()));
        }
        Ok(())
    }

    fn map_present(&self, kind: IndicatorKind, mut f: impl FnMut(&CanonicalId, Value) -> Value) -> IndicatorSeries {
        IndicatorSeries {
            indicator: self.indicator.clone(),
            kind,
            higher_is_better: true,
            values: self
                .values
                .iter()
                .map(|(k, v)| (k.clone(), v.map(|v| f(k, v))))
                .collect(),
        }
    }
}

/// `100 * v / max`; with a cap, values at or above the cap pin to 100 and the
/// rest scale by the cap instead of the maximum.
pub fn normalize_by_max_values(values: &[f64], cap: Option<f64>) -> Result<Vec<f64>, TransformError> {
    if values.is_empty() {
        return Err(TransformError::EmptySeries("<values>".into()));
    }
    let divisor = match cap {
        Some(c) if !(c > 0.0 && c.is_finite()) => {
            return Err(TransformError::Domain(format!("cap must be positive, got {c}")))
        }
        Some(c) => c,
        None => {
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max <= 0.0 {
                return Err(TransformError::Domain(format!("maximum must be positive, got {max}")));
            }
            max
        }
    };
    Ok(values
        .iter()
        .map(|&v| match cap {
            Some(c) if v >= c => 100.0,
            _ => 100.0 * v / divisor,
        })
        .collect())
}

pub fn normalize_by_max(series: &IndicatorSeries, cap: Option<f64>) -> Result<IndicatorSeries, TransformError> {
    series.require_kind(IndicatorKind::Numeric)?;
    series.require_non_empty()?;
    let raw: Vec<f64> = series.present().map(|(_, v)| v.as_f64()).collect();
    let scaled = normalize_by_max_values(&raw, cap)?;
    let mut it = scaled.into_iter();
    let mut out = series.map_present(IndicatorKind::Numeric, |_, _| Value::Number(it.next().expect("aligned")));
    out.higher_is_better = series.higher_is_better;
    Ok(out)
}

/// Percentile-rank convention. All use average ranks for ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PercentileMethod {
    /// `100 (r - 0.5) / n`, strictly inside (0, 100).
    #[default]
    Hazen,
    /// `100 r / n`.
    RankOverN,
    /// `100 (r - 1) / (n - 1)`; a single value maps to 50.
    Linear,
}

pub fn percentile_ranks(values: &[f64], method: PercentileMethod) -> Vec<f64> {
    let n = values.len() as f64;
    crate::stats::average_ranks(values)
        .into_iter()
        .map(|r| match method {
            PercentileMethod::Hazen => 100.0 * (r - 0.5) / n,
            PercentileMethod::RankOverN => 100.0 * r / n,
            PercentileMethod::Linear if n > 1.0 => 100.0 * (r - 1.0) / (n - 1.0),
            PercentileMethod::Linear => 50.0,
        })
        .collect()
}

/// Percentile rank of each non-missing value among the non-missing values.
/// Lower-is-better series are oriented first so the best institution always
/// gets the highest percentile.
pub fn percentile_rank(series: &IndicatorSeries, method: PercentileMethod) -> Result<IndicatorSeries, TransformError> {
    series.require_non_empty()?;
    let oriented: Vec<f64> = series.present().map(|(_, v)| series.oriented(v)).collect();
    let mut it = percentile_ranks(&oriented, method).into_iter();
    Ok(series.map_present(IndicatorKind::Numeric, |_, _| Value::Number(it.next().expect("aligned"))))
}

/// Ratio cut points `value / median` for classes A..D; below `d` is E.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassThresholds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for ClassThresholds {
    /// Placeholder cut points; real systems do not publish theirs.
    fn default() -> Self {
        Self {
            a: 2.0,
            b: 1.25,
            c: 0.75,
            d: 0.25,
        }
    }
}

impl ClassThresholds {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, TransformError> {
        let t = Self { a, b, c, d };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        let ok = [self.a, self.b, self.c, self.d].iter().all(|x| x.is_finite())
            && self.a > self.b
            && self.b > self.c
            && self.c > self.d
            && self.d > 0.0;
        if ok {
            Ok(())
        } else {
            Err(TransformError::InvalidThresholds(format!(
                "need a > b > c > d > 0, got {self:?}"
            )))
        }
    }

    pub fn classify_ratio(&self, ratio: f64) -> PerfClass {
        if ratio >= self.a {
            PerfClass::A
        } else if ratio >= self.b {
            PerfClass::B
        } else if ratio >= self.c {
            PerfClass::C
        } else if ratio >= self.d {
            PerfClass::D
        } else {
            PerfClass::E
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

pub fn median_classes(values: &[f64], thresholds: &ClassThresholds) -> Result<Vec<PerfClass>, TransformError> {
    thresholds.validate()?;
    let med = median(values).ok_or_else(|| TransformError::EmptySeries("<values>".into()))?;
    if med <= 0.0 {
        return Err(TransformError::Domain(format!("median must be positive, got {med}")));
    }
    Ok(values.iter().map(|v| thresholds.classify_ratio(v / med)).collect())
}

/// Classes A..E by the ratio of each value to the series median.
pub fn distance_to_median_classes(
    series: &IndicatorSeries,
    thresholds: &ClassThresholds,
) -> Result<IndicatorSeries, TransformError> {
    series.require_kind(IndicatorKind::Numeric)?;
    series.require_non_empty()?;
    let raw: Vec<f64> = series.present().map(|(_, v)| v.as_f64()).collect();
    let mut it = median_classes(&raw, thresholds)?.into_iter();
    Ok(series.map_present(IndicatorKind::ClassAToE, |_, _| Value::Class(it.next().expect("aligned"))))
}

/// A=5, B=4, C=3, D=2, E=1.
pub fn quantify_classes(series: &IndicatorSeries) -> Result<IndicatorSeries, TransformError> {
    series.require_kind(IndicatorKind::ClassAToE)?;
    Ok(series.map_present(IndicatorKind::Numeric, |_, v| Value::Number(v.as_f64())))
}

/// Mean quantified class over survey fields, for institutions with at least
/// `min_fields` non-missing fields; missing otherwise.
pub fn teaching_score(
    per_field: &[IndicatorSeries],
    min_fields: usize,
    indicator: IndicatorRef,
) -> Result<IndicatorSeries, TransformError> {
    if per_field.is_empty() {
        return Err(TransformError::EmptySeries("no field series given".into()));
    }
    for s in per_field {
        s.require_kind(IndicatorKind::ClassAToE)?;
    }
    let ids: BTreeSet<&CanonicalId> = per_field.iter().flat_map(|s| s.values.keys()).collect();
    let mut out = IndicatorSeries::new(indicator, IndicatorKind::Numeric, true);
    for id in ids {
        let scores: Vec<f64> = per_field
            .iter()
            .filter_map(|s| s.get(id))
            .map(|v| v.as_f64())
            .collect();
        let v = if !scores.is_empty() && scores.len() >= min_fields {
            Some(Value::Number(scores.iter().sum::<f64>() / scores.len() as f64))
        } else {
            None
        };
        out.values.insert(id.clone(), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r() -> IndicatorRef {
        IndicatorRef::new("t", "x")
    }

    fn numbers(s: &IndicatorSeries) -> Vec<Option<f64>> {
        s.values.values().map(|v| v.map(|v| v.as_f64())).collect()
    }

    fn classes(s: &[Option<PerfClass>]) -> IndicatorSeries {
        let mut out = IndicatorSeries::new(r(), IndicatorKind::ClassAToE, true);
        for (i, c) in s.iter().enumerate() {
            out.values.insert(CanonicalId(format!("i{i}")), c.map(Value::Class));
        }
        out
    }

    #[test]
    fn normalize_by_max_examples() {
        let s = IndicatorSeries::from_numbers(r(), &[Some(2.0), Some(4.0)]);
        assert_eq!(numbers(&normalize_by_max(&s, None).unwrap()), vec![Some(50.0), Some(100.0)]);
        let s = IndicatorSeries::from_numbers(r(), &[Some(50.0), Some(100.0), Some(25.0)]);
        assert_eq!(
            numbers(&normalize_by_max(&s, None).unwrap()),
            vec![Some(50.0), Some(100.0), Some(25.0)]
        );
    }

    #[test]
    fn normalize_by_max_keeps_missing_and_errors() {
        let s = IndicatorSeries::from_numbers(r(), &[Some(2.0), None, Some(8.0)]);
        assert_eq!(numbers(&normalize_by_max(&s, None).unwrap()), vec![Some(25.0), None, Some(100.0)]);
        let empty = IndicatorSeries::from_numbers(r(), &[None, None]);
        assert!(matches!(normalize_by_max(&empty, None), Err(TransformError::EmptySeries(_))));
        let neg = IndicatorSeries::from_numbers(r(), &[Some(-1.0), Some(0.0)]);
        assert!(matches!(normalize_by_max(&neg, None), Err(TransformError::Domain(_))));
    }

    #[test]
    fn cap_pins_top_values() {
        let vals: Vec<Option<f64>> = (1..=30).map(|v| Some(v as f64)).collect();
        let s = IndicatorSeries::from_numbers(r(), &vals);
        let out = normalize_by_max(&s, Some(21.0)).unwrap();
        let at_100 = out.present().filter(|(_, v)| v.as_f64() == 100.0).count();
        assert_eq!(at_100, 10);
        assert_eq!(out.values.values().next().unwrap().unwrap().as_f64(), 100.0 / 21.0);
    }

    #[test]
    fn hazen_examples() {
        assert_eq!(
            percentile_ranks(&[10.0, 20.0, 30.0, 40.0], PercentileMethod::Hazen),
            vec![12.5, 37.5, 62.5, 87.5]
        );
        assert_eq!(percentile_ranks(&[5.0, 5.0, 5.0], PercentileMethod::Hazen), vec![50.0; 3]);
        assert_eq!(percentile_ranks(&[3.0, 1.0], PercentileMethod::RankOverN), vec![100.0, 50.0]);
        assert_eq!(percentile_ranks(&[3.0, 1.0, 2.0], PercentileMethod::Linear), vec![100.0, 0.0, 50.0]);
        assert_eq!(percentile_ranks(&[3.0], PercentileMethod::Linear), vec![50.0]);
    }

    #[test]
    fn percentile_rank_is_a_fixed_point_on_distinct_values() {
        let s = IndicatorSeries::from_numbers(r(), &[Some(3.0), Some(9.0), None, Some(1.0), Some(4.0)]);
        let once = percentile_rank(&s, PercentileMethod::Hazen).unwrap();
        let twice = percentile_rank(&once, PercentileMethod::Hazen).unwrap();
        assert_eq!(once, twice);
        assert_eq!(numbers(&once)[2], None);
    }

    #[test]
    fn percentile_rank_orients_lower_is_better() {
        let mut s = IndicatorSeries::from_numbers(r(), &[Some(1.0), Some(2.0)]);
        s.higher_is_better = false;
        assert_eq!(numbers(&percentile_rank(&s, PercentileMethod::Hazen).unwrap()), vec![Some(75.0), Some(25.0)]);
    }

    #[test]
    fn median_class_table() {
        let t = ClassThresholds::default();
        // (ratio, expected)
        let cases = [
            (3.0, PerfClass::A),
            (2.0, PerfClass::A),
            (1.999, PerfClass::B),
            (1.25, PerfClass::B),
            (1.0, PerfClass::C),
            (0.75, PerfClass::C),
            (0.5, PerfClass::D),
            (0.25, PerfClass::D),
            (0.1, PerfClass::E),
        ];
        for (ratio, want) in cases {
            assert_eq!(t.classify_ratio(ratio), want, "ratio {ratio}");
        }
    }

    #[test]
    fn value_at_median_is_c() {
        let s = IndicatorSeries::from_numbers(r(), &[Some(1.0), Some(10.0), Some(30.0), None]);
        let c = distance_to_median_classes(&s, &ClassThresholds::default()).unwrap();
        let got: Vec<Option<PerfClass>> = c
            .values
            .values()
            .map(|v| v.map(|v| match v {
                Value::Class(c) => c,
                _ => unreachable!(),
            }))
            .collect();
        assert_eq!(got, vec![Some(PerfClass::E), Some(PerfClass::C), Some(PerfClass::A), None]);
    }

    #[test]
    fn non_positive_median_is_domain_error() {
        let s = IndicatorSeries::from_numbers(r(), &[Some(-1.0), Some(0.0), Some(5.0)]);
        assert!(matches!(
            distance_to_median_classes(&s, &ClassThresholds::default()),
            Err(TransformError::Domain(_))
        ));
    }

    #[test]
    fn thresholds_must_decrease() {
        assert!(ClassThresholds::new(2.0, 2.0, 1.0, 0.5).is_err());
        assert!(ClassThresholds::new(2.0, 1.0, 0.5, 0.0).is_err());
        assert!(ClassThresholds::new(2.0, 1.0, 0.5, 0.1).is_ok());
    }

    #[test]
    fn quantify_examples() {
        let s = classes(&[Some(PerfClass::A), Some(PerfClass::E), None]);
        assert_eq!(numbers(&quantify_classes(&s).unwrap()), vec![Some(5.0), Some(1.0), None]);
        let n = IndicatorSeries::from_numbers(r(), &[Some(1.0)]);
        assert!(matches!(quantify_classes(&n), Err(TransformError::KindMismatch { .. })));
    }

    #[test]
    fn teaching_score_examples() {
        let f1 = classes(&[Some(PerfClass::A), Some(PerfClass::C), Some(PerfClass::E)]);
        let f2 = classes(&[Some(PerfClass::B), None, Some(PerfClass::E)]);
        let f3 = classes(&[None, None, Some(PerfClass::E)]);
        let out = teaching_score(&[f1, f2, f3], 2, IndicatorRef::new("t", "teaching")).unwrap();
        assert_eq!(numbers(&out), vec![Some(4.5), None, Some(1.0)]);
        assert!(teaching_score(&[], 2, r()).is_err());
    }
}
