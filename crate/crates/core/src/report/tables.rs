//! Conversion of analysis results into [`AnalysisReport`] tables.

use crate::analyses::{
    CountryCorrelation, DiscrepancyList, MissingReport, OverlapMatrix, PreferenceTable, ScatterPoint, TopList,
    TopOverlap, UniqueInTop,
};
use crate::entity_link::{LinkedCorpus, MatchReport};
use crate::ingest::RankingDataset;
use crate::stats::{CorrelationMatrix, CorrelationResult, StatsError};

use super::{AnalysisReport, Cell};

fn corr_cells(r: &CorrelationResult, alpha: f64) -> Vec<Cell> {
    vec![
        r.n.into(),
        r.rho.into(),
        r.p_value.into(),
        r.band.label().into(),
        (r.p_value < alpha).into(),
        (if r.exact_p { "exact" } else { "t" }).into(),
    ]
}

pub fn ingest_summary(datasets: &[RankingDataset]) -> AnalysisReport {
    let mut t = AnalysisReport::new("ingest_check", "ingest_check", &["system", "display_name", "year", "records", "indicators", "missing_cells"]);
    for d in datasets {
        t.push(vec![
            d.system_id().into(),
            d.manifest.display_name.as_str().into(),
            Cell::Int(d.manifest.year as i64),
            d.records.len().into(),
            d.manifest.indicators.len().into(),
            d.missing_count().into(),
        ]);
    }
    t
}

pub fn link_summary(corpus: &LinkedCorpus, report: &MatchReport) -> AnalysisReport {
    let mut t = AnalysisReport::new("link", "link_summary", &["metric", "value"]);
    t.push(vec!["canonical_institutions".into(), corpus.len().into()]);
    t.push(vec!["auto_links".into(), report.auto_links.len().into()]);
    t.push(vec!["review_candidates".into(), report.candidates.len().into()]);
    t.push(vec!["unlinked".into(), report.unlinked.len().into()]);
    t
}

pub fn candidates(report: &MatchReport) -> AnalysisReport {
    let mut t = AnalysisReport::new(
        "link",
        "review_candidates",
        &["system", "local_id", "raw_name", "canonical_id", "canonical_name", "similarity", "reason"],
    );
    for c in &report.candidates {
        let reason = serde_json::to_value(c.reason).expect("enum serializes");
        t.push(vec![
            c.system_id.as_str().into(),
            c.local_id.as_str().into(),
            c.raw_name.as_str().into(),
            c.canonical_id.as_str().into(),
            c.canonical_name.as_str().into(),
            c.similarity.into(),
            reason.as_str().unwrap_or_default().into(),
        ]);
    }
    t
}

pub fn overlap(m: &OverlapMatrix) -> AnalysisReport {
    let mut cols = vec!["system"];
    cols.extend(m.systems.iter().map(String::as_str));
    let mut t = AnalysisReport::new("overlap", "overlap", &cols);
    for (i, s) in m.systems.iter().enumerate() {
        let mut row: Vec<Cell> = vec![s.as_str().into()];
        row.extend(m.counts[i].iter().map(|&c| Cell::from(c)));
        t.push(row);
    }
    t
}

pub fn top_overlap(lists: &[TopList], o: &TopOverlap) -> [AnalysisReport; 2] {
    let mut cols = vec!["list"];
    cols.extend(o.labels.iter().map(String::as_str));
    let mut m = AnalysisReport::new("top_overlap", "top_overlap", &cols);
    for (i, l) in o.labels.iter().enumerate() {
        let mut row: Vec<Cell> = vec![l.as_str().into()];
        row.extend(o.pairwise[i].iter().map(|&c| Cell::from(c)));
        m.push(row);
    }
    let mut s = AnalysisReport::new("top_overlap", "top_overlap_summary", &["metric", "value"]);
    s.push(vec!["lists".into(), lists.len().into()]);
    s.push(vec!["n".into(), lists.iter().map(|l| l.n).max().unwrap_or(0).into()]);
    s.push(vec!["union".into(), o.union_count.into()]);
    s.push(vec!["in_all".into(), o.all_count.into()]);
    for l in lists {
        s.push(vec![format!("boundary_tie:{}", l.label()).into(), l.boundary_tie_warning.into()]);
    }
    [m, s]
}

pub fn unique_in_top(u: &[UniqueInTop]) -> [AnalysisReport; 3] {
    let mut e = AnalysisReport::new(
        "unique_in_top",
        "unique_in_top",
        &["list", "canonical_id", "name", "country", "other_list", "status"],
    );
    let mut c = AnalysisReport::new("unique_in_top", "unique_in_top_countries", &["list", "country", "n"]);
    let mut s = AnalysisReport::new("unique_in_top", "unique_in_top_summary", &["list", "uniques", "absent_everywhere"]);
    for list in u {
        s.push(vec![list.label.as_str().into(), list.uniques.len().into(), list.absent_everywhere.into()]);
        for entry in &list.uniques {
            for (other, status) in &entry.status {
                e.push(vec![
                    list.label.as_str().into(),
                    entry.id.as_str().into(),
                    entry.name.as_str().into(),
                    entry.country.as_str().into(),
                    other.as_str().into(),
                    status.as_str().into(),
                ]);
            }
        }
        for (country, n) in &list.country_tally {
            c.push(vec![list.label.as_str().into(), country.as_str().into(), (*n).into()]);
        }
    }
    [e, c, s]
}

pub fn preference(p: &PreferenceTable, top_k: usize, min_count: usize) -> [AnalysisReport; 2] {
    let mut full = AnalysisReport::new("geo", "preference", &["country", "system", "n", "preference"]);
    for (i, c) in p.countries.iter().enumerate() {
        for (j, s) in p.systems.iter().enumerate() {
            full.push(vec![c.as_str().into(), s.as_str().into(), p.counts[i][j].into(), p.preference[i][j].into()]);
        }
    }
    let mut top = AnalysisReport::new("geo", "preference_top", &["system", "position", "country", "n", "preference"]);
    top.meta("top_k", top_k);
    top.meta("min_count", min_count);
    for (j, s) in p.systems.iter().enumerate() {
        for (k, row) in p.top_preferred(j, top_k, min_count).iter().enumerate() {
            top.push(vec![
                s.as_str().into(),
                (k + 1).into(),
                row.country.as_str().into(),
                row.n.into(),
                row.preference.into(),
            ]);
        }
    }
    [full, top]
}

pub fn missing(m: &MissingReport) -> [AnalysisReport; 2] {
    let mut cov = AnalysisReport::new("missing", "coverage", &["system", "indicator", "present", "non_missing", "coverage"]);
    for c in &m.coverage {
        cov.push(vec![
            c.indicator.system_id.as_str().into(),
            c.indicator.indicator.as_str().into(),
            c.present.into(),
            c.non_missing.into(),
            c.coverage.into(),
        ]);
    }
    let mut inst = AnalysisReport::new(
        "missing",
        "institution_coverage",
        &["canonical_id", "name", "systems", "declared", "available"],
    );
    for i in &m.institutions {
        inst.push(vec![
            i.id.as_str().into(),
            i.name.as_str().into(),
            i.systems.into(),
            i.declared.into(),
            i.available.into(),
        ]);
    }
    [cov, inst]
}

pub fn skewness(rows: &[(String, usize, Result<f64, StatsError>)], adjusted: bool) -> AnalysisReport {
    let mut t = AnalysisReport::new("skew", "skewness", &["indicator", "n", "skewness", "note"]);
    t.meta("estimator", if adjusted { "G1 (adjusted)" } else { "b1 (moment)" });
    for (label, n, r) in rows {
        let (v, note) = match r {
            Ok(v) => (Cell::Float(*v), Cell::Empty),
            Err(e) => (Cell::Empty, Cell::Text(e.to_string())),
        };
        t.push(vec![label.as_str().into(), (*n).into(), v, note]);
    }
    t
}

pub fn correlation(name: &str, m: &CorrelationMatrix) -> AnalysisReport {
    let mut t = AnalysisReport::new(
        "corr",
        name,
        &["row", "col", "n", "rho", "p_value", "band", "significant", "p_method", "reason"],
    );
    t.meta("alpha", m.alpha);
    for c in &m.cells {
        let mut row: Vec<Cell> = vec![m.labels[c.row].as_str().into(), m.labels[c.col].as_str().into()];
        match &c.result {
            Some(r) => {
                row.extend(corr_cells(r, m.alpha));
                row.push(Cell::Empty);
            }
            None => {
                row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, false.into(), Cell::Empty]);
                row.push(c.reason.clone().into());
            }
        }
        t.push(row);
    }
    t
}

pub fn country_correlation(name: &str, c: &CountryCorrelation, alpha: f64) -> AnalysisReport {
    let mut t = AnalysisReport::new(
        "country_corr",
        name,
        &["country", "n", "rho", "p_value", "band", "significant", "p_method", "excluded"],
    );
    t.meta("a", &c.a);
    t.meta("b", &c.b);
    t.meta("min_n", c.min_n);
    t.meta("alpha", alpha);
    let mut rows: Vec<(String, Vec<Cell>)> = Vec::new();
    for (country, r) in &c.results {
        let mut row: Vec<Cell> = vec![country.as_str().into()];
        row.extend(corr_cells(r, alpha));
        row.push(Cell::Empty);
        rows.push((country.as_str().to_string(), row));
    }
    for (country, (n, why)) in &c.excluded {
        rows.push((
            country.as_str().to_string(),
            vec![
                country.as_str().into(),
                (*n).into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                false.into(),
                Cell::Empty,
                why.as_str().into(),
            ],
        ));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    for (_, r) in rows {
        t.push(r);
    }
    t
}

pub fn discrepancy(name: &str, d: &DiscrepancyList) -> AnalysisReport {
    let mut t = AnalysisReport::new(
        "compare_pair",
        name,
        &["list", "position", "canonical_id", "name", "pr_a", "pr_b", "diff"],
    );
    t.meta("a", &d.a);
    t.meta("b", &d.b);
    t.meta("pairs", d.n_pairs);
    t.meta("k", d.k);
    if let Some(w) = &d.warning {
        t.meta("warning", w);
    }
    for (label, list) in [("top", &d.top), ("bottom", &d.bottom)] {
        for (i, e) in list.iter().enumerate() {
            t.push(vec![
                label.into(),
                (i + 1).into(),
                e.id.as_str().into(),
                e.name.as_str().into(),
                e.pr_a.into(),
                e.pr_b.into(),
                e.diff.into(),
            ]);
        }
    }
    t
}

pub fn scatter_points(name: &str, points: &[ScatterPoint]) -> AnalysisReport {
    let mut t = AnalysisReport::new("compare_pair", name, &["canonical_id", "name", "country", "x", "y", "labeled"]);
    for p in points {
        t.push(vec![
            p.id.as_str().into(),
            p.name.as_str().into(),
            p.country.as_str().into(),
            p.x.into(),
            p.y.into(),
            p.labeled.into(),
        ]);
    }
    t
}
