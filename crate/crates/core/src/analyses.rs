//! Analyses over a [`LinkedCorpus`]: overlap, top-N structure, geographic
//! preference, missing-value coverage, per-country correlation, and
//! discrepancies between two indicators.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::country::Country;
use crate::entity_link::{LinkError, LinkedCorpus};
use crate::model::{CanonicalId, IndicatorRef};
use crate::stats::{spearman_values, CorrelationResult, PValueMethod};
use crate::transforms::{percentile_ranks, IndicatorSeries, PercentileMethod};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("indicator {0} has no non-missing values")]
    EmptyIndicator(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn name_of<'a>(corpus: &'a LinkedCorpus, id: &CanonicalId) -> &'a str {
    corpus.institution(id).map(|i| i.name.as_str()).unwrap_or("")
}

/// Order by canonical name, then id.
fn by_name(corpus: &LinkedCorpus, a: &CanonicalId, b: &CanonicalId) -> Ordering {
    name_of(corpus, a).cmp(name_of(corpus, b)).then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapMatrix {
    pub systems: Vec<String>,
    /// `counts[i][j]`: institutions present in both systems; diagonal is size.
    pub counts: Vec<Vec<usize>>,
}

pub fn overlap_matrix(corpus: &LinkedCorpus) -> OverlapMatrix {
    let k = corpus.systems().len();
    let counts = (0..k)
        .map(|i| (0..k).map(|j| corpus.members(i).filter(|id| corpus.is_present(j, id)).count()).collect())
        .collect();
    OverlapMatrix {
        systems: corpus.system_ids().into_iter().map(String::from).collect(),
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopList {
    pub system_id: String,
    pub indicator: IndicatorRef,
    pub n: usize,
    /// Best first.
    pub entries: Vec<CanonicalId>,
    /// The N-th and (N+1)-th values tie, so the cut is decided by name.
    pub boundary_tie_warning: bool,
}

impl TopList {
    pub fn label(&self) -> String {
        self.indicator.to_string()
    }

    pub fn contains(&self, id: &CanonicalId) -> bool {
        self.entries.contains(id)
    }
}

/// Best `n` institutions by one indicator; ties broken by canonical name.
pub fn build_top_list(corpus: &LinkedCorpus, indicator: &IndicatorRef, n: usize) -> Result<TopList, AnalysisError> {
    let series = corpus.series(indicator)?;
    let mut scored: Vec<(&CanonicalId, f64)> = series.present().map(|(id, v)| (id, series.oriented(v))).collect();
    if scored.is_empty() {
        return Err(AnalysisError::EmptyIndicator(indicator.to_string()));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| by_name(corpus, a.0, b.0)));
    let cut = n.min(scored.len());
    let boundary_tie_warning = cut > 0 && cut < scored.len() && scored[cut - 1].1 == scored[cut].1;
    Ok(TopList {
        system_id: indicator.system_id.clone(),
        indicator: indicator.clone(),
        n,
        entries: scored[..cut].iter().map(|(id, _)| (*id).clone()).collect(),
        boundary_tie_warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopOverlap {
    pub labels: Vec<String>,
    /// Pairwise intersection sizes; diagonal is list length.
    pub pairwise: Vec<Vec<usize>>,
    pub union_count: usize,
    pub all_count: usize,
}

pub fn top_overlap(lists: &[TopList]) -> TopOverlap {
    let sets: Vec<BTreeSet<&CanonicalId>> = lists.iter().map(|l| l.entries.iter().collect()).collect();
    let pairwise = sets
        .iter()
        .map(|a| sets.iter().map(|b| a.intersection(b).count()).collect())
        .collect();
    let union: BTreeSet<&CanonicalId> = sets.iter().flatten().copied().collect();
    let all_count = match sets.split_first() {
        Some((first, rest)) => first.iter().filter(|id| rest.iter().all(|s| s.contains(*id))).count(),
        None => 0,
    };
    TopOverlap {
        labels: lists.iter().map(TopList::label).collect(),
        pairwise,
        union_count: union.len(),
        all_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OtherStatus {
    /// Member of the other list's system but below its cut.
    LowerRanked,
    /// Not covered by the other list's system at all.
    Absent,
}

impl OtherStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            OtherStatus::LowerRanked => "lower_ranked",
            OtherStatus::Absent => "absent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniqueEntry {
    pub id: CanonicalId,
    pub name: String,
    pub country: Country,
    /// Status in every other list, keyed by that list's label.
    pub status: BTreeMap<String, OtherStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniqueInTop {
    pub label: String,
    /// In list order (best first).
    pub uniques: Vec<UniqueEntry>,
    pub country_tally: BTreeMap<Country, usize>,
    /// Uniques absent from every other list's system.
    pub absent_everywhere: usize,
}

/// Entries of each list that appear in no other list. Every list is treated
/// the same way, including several lists drawn from one system.
pub fn unique_in_top(lists: &[TopList], corpus: &LinkedCorpus) -> Result<Vec<UniqueInTop>, AnalysisError> {
    let mut sys_of = Vec::with_capacity(lists.len());
    for l in lists {
        let (sys, _) = corpus.resolve(&l.indicator)?;
        sys_of.push(sys);
    }
    let mut out = Vec::with_capacity(lists.len());
    for (i, list) in lists.iter().enumerate() {
        let mut uniques = Vec::new();
        let mut country_tally = BTreeMap::new();
        let mut absent_everywhere = 0;
        for id in &list.entries {
            let elsewhere = lists.iter().enumerate().any(|(j, o)| j != i && o.contains(id));
            if elsewhere {
                continue;
            }
            let inst = corpus
                .institution(id)
                .ok_or_else(|| AnalysisError::InvalidParameter(format!("{id} is not in the corpus")))?;
            let status: BTreeMap<String, OtherStatus> = lists
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(j, o)| {
                    let s = if corpus.is_present(sys_of[j], id) {
                        OtherStatus::LowerRanked
                    } else {
                        OtherStatus::Absent
                    };
                    (o.label(), s)
                })
                .collect();
            if !status.is_empty() && status.values().all(|s| *s == OtherStatus::Absent) {
                absent_everywhere += 1;
            }
            *country_tally.entry(inst.country).or_insert(0) += 1;
            uniques.push(UniqueEntry {
                id: id.clone(),
                name: inst.name.clone(),
                country: inst.country,
                status,
            });
        }
        out.push(UniqueInTop {
            label: list.label(),
            uniques,
            country_tally,
            absent_everywhere,
        });
    }
    Ok(out)
}

/// `P[i][j] = (n_ij / N_j) / (M_i / T)` with `N_j` the column total, `M_i` the
/// row total and `T` the grand total. Zero denominators give 0.
pub fn preference_from_counts(counts: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let cols = counts.first().map_or(0, Vec::len);
    let row_tot: Vec<f64> = counts.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let col_tot: Vec<f64> = (0..cols).map(|j| counts.iter().map(|r| r[j]).sum::<usize>() as f64).collect();
    let total: f64 = row_tot.iter().sum();
    counts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, &n)| {
                    if col_tot[j] == 0.0 || row_tot[i] == 0.0 {
                        0.0
                    } else {
                        (n as f64 / col_tot[j]) / (row_tot[i] / total)
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceTable {
    pub systems: Vec<String>,
    pub countries: Vec<Country>,
    /// `counts[country][system]`.
    pub counts: Vec<Vec<usize>>,
    pub preference: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preferred {
    pub country: Country,
    pub n: usize,
    pub preference: f64,
}

impl PreferenceTable {
    /// Countries most over-represented in system `j`, among those with at
    /// least `min_count` institutions there.
    pub fn top_preferred(&self, j: usize, k: usize, min_count: usize) -> Vec<Preferred> {
        let mut rows: Vec<Preferred> = self
            .countries
            .iter()
            .enumerate()
            .filter(|(i, _)| self.counts[*i][j] >= min_count)
            .map(|(i, c)| Preferred {
                country: *c,
                n: self.counts[i][j],
                preference: self.preference[i][j],
            })
            .collect();
        rows.sort_by(|a, b| b.preference.total_cmp(&a.preference).then(a.country.cmp(&b.country)));
        rows.truncate(k);
        rows
    }
}

pub fn preference_table(corpus: &LinkedCorpus) -> PreferenceTable {
    let k = corpus.systems().len();
    let mut by_country: BTreeMap<Country, Vec<usize>> = BTreeMap::new();
    for sys in 0..k {
        for id in corpus.members(sys) {
            let c = corpus.country_of(id).expect("members are institutions");
            by_country.entry(c).or_insert_with(|| vec![0; k])[sys] += 1;
        }
    }
    let countries: Vec<Country> = by_country.keys().copied().collect();
    let counts: Vec<Vec<usize>> = by_country.into_values().collect();
    PreferenceTable {
        systems: corpus.system_ids().into_iter().map(String::from).collect(),
        preference: preference_from_counts(&counts),
        countries,
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub indicator: IndicatorRef,
    pub present: usize,
    pub non_missing: usize,
    /// `non_missing / present`; 0 for an empty system.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstitutionCoverage {
    pub id: CanonicalId,
    pub name: String,
    pub systems: usize,
    /// Indicators declared by the systems the institution is in.
    pub declared: usize,
    pub available: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingReport {
    pub coverage: Vec<Coverage>,
    pub institutions: Vec<InstitutionCoverage>,
}

pub fn missing_report(corpus: &LinkedCorpus) -> Result<MissingReport, AnalysisError> {
    let mut coverage = Vec::new();
    let mut avail: BTreeMap<&CanonicalId, (usize, usize, usize)> = BTreeMap::new();
    for (sys, m) in corpus.systems().iter().enumerate() {
        for id in corpus.members(sys) {
            let e = avail.entry(id).or_default();
            e.0 += 1;
            e.1 += m.indicators.len();
        }
        for def in &m.indicators {
            let r = IndicatorRef::new(&m.system_id, &def.name);
            let s = corpus.series(&r)?;
            for (id, _) in s.present() {
                if let Some(e) = avail.get_mut(id) {
                    e.2 += 1;
                }
            }
            let present = s.values.len();
            let non_missing = s.non_missing();
            coverage.push(Coverage {
                indicator: r,
                present,
                non_missing,
                coverage: if present == 0 { 0.0 } else { non_missing as f64 / present as f64 },
            });
        }
    }
    let institutions = avail
        .into_iter()
        .map(|(id, (systems, declared, available))| InstitutionCoverage {
            id: id.clone(),
            name: name_of(corpus, id).to_string(),
            systems,
            declared,
            available,
        })
        .collect();
    Ok(MissingReport { coverage, institutions })
}

/// Pairwise-complete (id, oriented a, oriented b), in id order.
fn paired(corpus: &LinkedCorpus, a: &IndicatorRef, b: &IndicatorRef) -> Result<Vec<(CanonicalId, f64, f64)>, AnalysisError> {
    let sa = corpus.series(a)?;
    let sb = corpus.series(b)?;
    Ok(paired_series(&sa, &sb))
}

fn paired_series(sa: &IndicatorSeries, sb: &IndicatorSeries) -> Vec<(CanonicalId, f64, f64)> {
    sa.present()
        .filter_map(|(id, x)| sb.get(id).map(|y| (id.clone(), sa.oriented(x), sb.oriented(y))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryCorrelation {
    pub a: IndicatorRef,
    pub b: IndicatorRef,
    pub min_n: usize,
    pub results: BTreeMap<Country, CorrelationResult>,
    /// Countries left out, with their pair count and the reason.
    pub excluded: BTreeMap<Country, (usize, String)>,
}

pub fn per_country_correlation(
    corpus: &LinkedCorpus,
    a: &IndicatorRef,
    b: &IndicatorRef,
    min_n: usize,
    method: PValueMethod,
) -> Result<CountryCorrelation, AnalysisError> {
    let mut groups: BTreeMap<Country, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (id, x, y) in paired(corpus, a, b)? {
        let c = corpus.country_of(&id).expect("paired ids are institutions");
        let g = groups.entry(c).or_default();
        g.0.push(x);
        g.1.push(y);
    }
    let mut results = BTreeMap::new();
    let mut excluded = BTreeMap::new();
    for (c, (xs, ys)) in groups {
        let n = xs.len();
        if n < min_n {
            excluded.insert(c, (n, format!("fewer than {min_n} pairs")));
            continue;
        }
        match spearman_values(&xs, &ys, method) {
            Ok(r) => {
                results.insert(c, r);
            }
            Err(e) => {
                excluded.insert(c, (n, e.to_string()));
            }
        }
    }
    Ok(CountryCorrelation {
        a: a.clone(),
        b: b.clone(),
        min_n,
        results,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyEntry {
    pub id: CanonicalId,
    pub name: String,
    pub pr_a: f64,
    pub pr_b: f64,
    /// `pr_a - pr_b`.
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyList {
    pub a: IndicatorRef,
    pub b: IndicatorRef,
    pub k_requested: usize,
    pub k: usize,
    pub n_pairs: usize,
    pub warning: Option<String>,
    /// Largest `diff` first.
    pub top: Vec<DiscrepancyEntry>,
    /// Smallest `diff` first.
    pub bottom: Vec<DiscrepancyEntry>,
}

fn discrepancy_entries(
    corpus: &LinkedCorpus,
    pairs: &[(CanonicalId, f64, f64)],
    method: PercentileMethod,
) -> Vec<DiscrepancyEntry> {
    let xs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let pa = percentile_ranks(&xs, method);
    let pb = percentile_ranks(&ys, method);
    pairs
        .iter()
        .zip(pa.into_iter().zip(pb))
        .map(|((id, _, _), (pr_a, pr_b))| DiscrepancyEntry {
            id: id.clone(),
            name: name_of(corpus, id).to_string(),
            pr_a,
            pr_b,
            diff: pr_a - pr_b,
        })
        .collect()
}

/// Institutions with the largest and smallest differences between the
/// percentile ranks of two indicators. Percentile ranks are taken over the
/// pairwise-complete set so both sides share one population.
pub fn discrepancy_lists(
    corpus: &LinkedCorpus,
    a: &IndicatorRef,
    b: &IndicatorRef,
    k: usize,
    method: PercentileMethod,
) -> Result<DiscrepancyList, AnalysisError> {
    let pairs = paired(corpus, a, b)?;
    let n = pairs.len();
    let kk = k.min(n / 2);
    let warning = (n < 2 * k).then(|| format!("only {n} complete pairs; lists shrunk from {k} to {kk}"));
    let mut entries = discrepancy_entries(corpus, &pairs, method);
    let tie = |x: &DiscrepancyEntry, y: &DiscrepancyEntry| x.name.cmp(&y.name).then_with(|| x.id.cmp(&y.id));
    entries.sort_by(|x, y| y.diff.total_cmp(&x.diff).then_with(|| tie(x, y)));
    let top = entries[..kk].to_vec();
    entries.sort_by(|x, y| x.diff.total_cmp(&y.diff).then_with(|| tie(x, y)));
    let bottom = entries[..kk].to_vec();
    Ok(DiscrepancyList {
        a: a.clone(),
        b: b.clone(),
        k_requested: k,
        k: kk,
        n_pairs: n,
        warning,
        top,
        bottom,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", content = "k", rename_all = "snake_case")]
pub enum LabelRule {
    All,
    #[default]
    None,
    /// Label the `k` largest and `k` smallest percentile-rank differences.
    TopBottom(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterScale {
    #[default]
    Raw,
    /// Percentile ranks over the plotted points.
    Percentile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub id: CanonicalId,
    pub name: String,
    pub country: Country,
    pub x: f64,
    pub y: f64,
    pub labeled: bool,
}

/// Pairwise-complete points of two indicators, optionally restricted to a set
/// of countries, sorted by name then id. Raw values are plotted as published
/// (not oriented).
pub fn scatter_data(
    corpus: &LinkedCorpus,
    a: &IndicatorRef,
    b: &IndicatorRef,
    countries: Option<&BTreeSet<Country>>,
    label: LabelRule,
    scale: ScatterScale,
) -> Result<Vec<ScatterPoint>, AnalysisError> {
    let sa = corpus.series(a)?;
    let sb = corpus.series(b)?;
    let keep = |id: &CanonicalId| match countries {
        Some(set) => corpus.country_of(id).is_some_and(|c| set.contains(&c)),
        None => true,
    };
    let pairs: Vec<(CanonicalId, f64, f64)> =
        paired_series(&sa, &sb).into_iter().filter(|p| keep(&p.0)).collect();
    let entries = discrepancy_entries(corpus, &pairs, PercentileMethod::Hazen);

    let labeled: BTreeSet<CanonicalId> = match label {
        LabelRule::All => pairs.iter().map(|p| p.0.clone()).collect(),
        LabelRule::None => BTreeSet::new(),
        LabelRule::TopBottom(k) => {
            let mut e = entries.clone();
            let tie = |x: &DiscrepancyEntry, y: &DiscrepancyEntry| x.name.cmp(&y.name).then_with(|| x.id.cmp(&y.id));
            e.sort_by(|x, y| y.diff.total_cmp(&x.diff).then_with(|| tie(x, y)));
            let kk = k.min(e.len());
            let mut set: BTreeSet<CanonicalId> = e[..kk].iter().map(|d| d.id.clone()).collect();
            e.sort_by(|x, y| x.diff.total_cmp(&y.diff).then_with(|| tie(x, y)));
            set.extend(e[..kk].iter().map(|d| d.id.clone()));
            set
        }
    };

    let mut points: Vec<ScatterPoint> = pairs
        .iter()
        .zip(&entries)
        .map(|((id, _, _), d)| {
            let (x, y) = match scale {
                ScatterScale::Raw => (
                    sa.get(id).expect("paired").as_f64(),
                    sb.get(id).expect("paired").as_f64(),
                ),
                ScatterScale::Percentile => (d.pr_a, d.pr_b),
            };
            ScatterPoint {
                id: id.clone(),
                name: d.name.clone(),
                country: corpus.country_of(id).expect("paired ids are institutions"),
                x,
                y,
                labeled: labeled.contains(id),
            }
        })
        .collect();
    points.sort_by(|p, q| p.name.cmp(&q.name).then_with(|| p.id.cmp(&q.id)));
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity_link::{link, NormalizationRules, Thesaurus};
    use crate::ingest::{InstitutionRecord, RankingDataset};
    use crate::model::{IndicatorDef, SystemManifest, Value};

    type Row<'a> = (&'a str, &'a str, &'a [(&'a str, f64)]);

    fn ds(id: &str, indicators: &[IndicatorDef], rows: &[Row]) -> RankingDataset {
        RankingDataset {
            manifest: SystemManifest {
                system_id: id.into(),
                display_name: id.into(),
                year: 2016,
                indicators: indicators.to_vec(),
            },
            records: rows
                .iter()
                .enumerate()
                .map(|(i, (name, c, vals))| InstitutionRecord {
                    local_id: format!("{i}"),
                    raw_name: name.to_string(),
                    country: Country::parse(c).unwrap(),
                    values: vals.iter().map(|(k, v)| (k.to_string(), Value::Number(*v))).collect(),
                })
                .collect(),
        }
    }

    fn corpus(sets: &[RankingDataset]) -> LinkedCorpus {
        link(sets, &Thesaurus::new(), &NormalizationRules::default()).unwrap()
    }

    fn score() -> Vec<IndicatorDef> {
        vec![IndicatorDef::numeric("s")]
    }

    #[test]
    fn overlap_single_and_pair() {
        let names = ["A", "B", "C", "D", "E", "F", "G"];
        let rows: Vec<Row> = names.iter().map(|n| (*n, "US", &[][..])).collect();
        let m = overlap_matrix(&corpus(&[ds("x", &score(), &rows)]));
        assert_eq!(m.counts, vec![vec![7]]);

        let a = ds("a", &score(), &[("A", "US", &[]), ("B", "US", &[]), ("C", "US", &[])]);
        let b = ds("b", &score(), &[("A", "US", &[]), ("B", "US", &[]), ("X", "US", &[]), ("Y", "US", &[])]);
        let m = overlap_matrix(&corpus(&[a, b]));
        assert_eq!(m.counts, vec![vec![3, 2], vec![2, 4]]);
    }

    #[test]
    fn top_list_tie_at_cut() {
        let a = ds(
            "a",
            &score(),
            &[("Zeta", "US", &[("s", 9.0)]), ("Beta", "US", &[("s", 5.0)]), ("Alpha", "US", &[("s", 5.0)])],
        );
        let c = corpus(&[a]);
        let r = IndicatorRef::new("a", "s");
        let t = build_top_list(&c, &r, 2).unwrap();
        assert!(t.boundary_tie_warning);
        assert_eq!(name_of(&c, &t.entries[1]), "Alpha");
        let all = build_top_list(&c, &r, 10).unwrap();
        assert_eq!(all.entries.len(), 3);
        assert!(!all.boundary_tie_warning);
        assert!(build_top_list(&c, &IndicatorRef::new("a", "nope"), 2).is_err());
    }

    #[test]
    fn top_list_respects_lower_is_better() {
        let defs = vec![IndicatorDef::new("rank", crate::model::IndicatorKind::Numeric, false)];
        let a = ds("a", &defs, &[("One", "US", &[("rank", 1.0)]), ("Two", "US", &[("rank", 2.0)])]);
        let c = corpus(&[a]);
        let t = build_top_list(&c, &IndicatorRef::new("a", "rank"), 1).unwrap();
        assert_eq!(name_of(&c, &t.entries[0]), "One");
    }

    fn list(label: &str, ids: &[&str]) -> TopList {
        TopList {
            system_id: label.into(),
            indicator: IndicatorRef::new(label, "s"),
            n: ids.len(),
            entries: ids.iter().map(|s| CanonicalId(s.to_string())).collect(),
            boundary_tie_warning: false,
        }
    }

    #[test]
    fn top_overlap_identical_and_disjoint() {
        let same = top_overlap(&[list("a", &["1", "2"]), list("b", &["1", "2"])]);
        assert_eq!((same.pairwise[0][1], same.union_count, same.all_count), (2, 2, 2));
        let disj = top_overlap(&[list("a", &["1", "2"]), list("b", &["3", "4"])]);
        assert_eq!((disj.pairwise[0][1], disj.union_count, disj.all_count), (0, 4, 0));
    }

    #[test]
    fn uniques_and_status() {
        let a = ds("a", &score(), &[("P", "US", &[("s", 3.0)]), ("Q", "IT", &[("s", 2.0)]), ("R", "US", &[("s", 1.0)])]);
        let b = ds("b", &score(), &[("P", "US", &[("s", 3.0)]), ("R", "US", &[("s", 2.0)]), ("S", "US", &[("s", 1.0)])]);
        let c = corpus(&[a, b]);
        let la = build_top_list(&c, &IndicatorRef::new("a", "s"), 2).unwrap();
        let lb = build_top_list(&c, &IndicatorRef::new("b", "s"), 2).unwrap();
        let u = unique_in_top(&[la.clone(), lb], &c).unwrap();
        assert_eq!(u[0].uniques.len(), 1);
        assert_eq!(u[0].uniques[0].name, "Q");
        assert_eq!(u[0].uniques[0].status["b:s"], OtherStatus::Absent);
        assert_eq!(u[0].absent_everywhere, 1);
        assert_eq!(u[1].uniques[0].name, "R");
        assert_eq!(u[1].uniques[0].status["a:s"], OtherStatus::LowerRanked);
        let same = unique_in_top(&[la.clone(), la], &c).unwrap();
        assert!(same.iter().all(|x| x.uniques.is_empty()));
    }

    #[test]
    fn preference_examples() {
        let p = preference_from_counts(&[vec![10, 10], vec![10, 10]]);
        assert!(p.iter().flatten().all(|&x| x == 1.0));
        let p = preference_from_counts(&[vec![2, 0], vec![0, 2]]);
        assert_eq!(p[0], vec![2.0, 0.0]);
        let p = preference_from_counts(&[vec![0, 0], vec![1, 3]]);
        assert_eq!(p[0], vec![0.0, 0.0]);
    }

    #[test]
    fn preference_top_five_filters_small_counts() {
        let t = PreferenceTable {
            systems: vec!["a".into(), "b".into()],
            countries: ["US", "IT", "DE"].iter().map(|c| Country::parse(c).unwrap()).collect(),
            counts: vec![vec![20, 10], vec![5, 30], vec![12, 12]],
            preference: preference_from_counts(&[vec![20, 10], vec![5, 30], vec![12, 12]]),
        };
        let top = t.top_preferred(0, 5, 10);
        assert_eq!(top.len(), 2);
        assert_eq!(top[0].country.as_str(), "US");
    }

    #[test]
    fn coverage_is_fraction_of_members() {
        let rows: Vec<Row> = (0..9)
            .map(|i| (["A", "B", "C", "D", "E", "F", "G", "H", "I"][i], "US", if i < 4 { &[("s", 1.0)][..] } else { &[][..] }))
            .collect();
        let m = missing_report(&corpus(&[ds("a", &score(), &rows)])).unwrap();
        assert_eq!(m.coverage[0].coverage, 4.0 / 9.0);
        assert_eq!(m.institutions.iter().filter(|i| i.available == 1).count(), 4);
    }

    #[test]
    fn per_country_threshold() {
        let defs = vec![IndicatorDef::numeric("x"), IndicatorDef::numeric("y")];
        type Owned<'a> = (String, &'a str, Vec<(&'a str, f64)>);
        let mut rows: Vec<Owned> = Vec::new();
        for i in 0..12 {
            rows.push((format!("US{i}"), "US", vec![("x", i as f64), ("y", 2.0 * i as f64)]));
        }
        for i in 0..5 {
            rows.push((format!("IT{i}"), "IT", vec![("x", i as f64), ("y", i as f64)]));
        }
        let rr: Vec<Row> = rows.iter().map(|(n, c, v)| (n.as_str(), *c, v.as_slice())).collect();
        let c = corpus(&[ds("a", &defs, &rr)]);
        let r = per_country_correlation(&c, &IndicatorRef::new("a", "x"), &IndicatorRef::new("a", "y"), 11, PValueMethod::Auto)
            .unwrap();
        assert_eq!(r.results.len(), 1);
        assert_eq!(r.results[&Country::parse("US").unwrap()].rho, 1.0);
        assert_eq!(r.excluded[&Country::parse("IT").unwrap()].0, 5);
    }

    #[test]
    fn discrepancy_outlier_first_and_self_pair() {
        let defs = vec![IndicatorDef::numeric("x"), IndicatorDef::numeric("y")];
        let names: Vec<String> = (0..10).map(|i| format!("N{i}")).collect();
        let mut vals: Vec<Vec<(&str, f64)>> = (0..10).map(|i| vec![("x", i as f64), ("y", i as f64)]).collect();
        vals[9] = vec![("x", 100.0), ("y", -5.0)];
        let rr: Vec<Row> = names.iter().zip(&vals).map(|(n, v)| (n.as_str(), "US", v.as_slice())).collect();
        let c = corpus(&[ds("a", &defs, &rr)]);
        let (x, y) = (IndicatorRef::new("a", "x"), IndicatorRef::new("a", "y"));
        let d = discrepancy_lists(&c, &x, &y, 3, PercentileMethod::Hazen).unwrap();
        assert_eq!(d.top[0].name, "N9");
        assert_eq!(d.top[0].diff, 95.0 - 5.0);
        let same = discrepancy_lists(&c, &x, &x, 3, PercentileMethod::Hazen).unwrap();
        assert!(same.top.iter().all(|e| e.diff == 0.0));
        assert_eq!(same.top.iter().map(|e| e.name.as_str()).collect::<Vec<_>>(), ["N0", "N1", "N2"]);
        let shrunk = discrepancy_lists(&c, &x, &y, 8, PercentileMethod::Hazen).unwrap();
        assert_eq!(shrunk.k, 5);
        assert!(shrunk.warning.is_some());
    }

    #[test]
    fn scatter_labels_and_filter() {
        let defs = vec![IndicatorDef::numeric("x"), IndicatorDef::numeric("y")];
        let names: Vec<String> = (0..50).map(|i| format!("N{i:02}")).collect();
        let vals: Vec<Vec<(&str, f64)>> = (0..50).map(|i| vec![("x", i as f64), ("y", ((i * 37) % 50) as f64)]).collect();
        let rr: Vec<Row> = names
            .iter()
            .zip(&vals)
            .enumerate()
            .map(|(i, (n, v))| (n.as_str(), if i % 2 == 0 { "US" } else { "IT" }, v.as_slice()))
            .collect();
        let c = corpus(&[ds("a", &defs, &rr)]);
        let (x, y) = (IndicatorRef::new("a", "x"), IndicatorRef::new("a", "y"));
        let pts = scatter_data(&c, &x, &y, None, LabelRule::TopBottom(20), ScatterScale::Raw).unwrap();
        assert_eq!(pts.len(), 50);
        assert!(pts.iter().filter(|p| p.labeled).count() <= 40);
        let none: BTreeSet<Country> = [Country::parse("JP").unwrap()].into();
        assert!(scatter_data(&c, &x, &y, Some(&none), LabelRule::All, ScatterScale::Raw).unwrap().is_empty());
        let it: BTreeSet<Country> = [Country::parse("IT").unwrap()].into();
        let pts = scatter_data(&c, &x, &y, Some(&it), LabelRule::All, ScatterScale::Percentile).unwrap();
        assert_eq!(pts.len(), 25);
        assert!(pts.iter().all(|p| p.labeled && p.x > 0.0 && p.x < 100.0));
    }
}
