//! Cross-system entity resolution of institutions.
//!
//! Names are normalized with editable rule tables, then a variant → canonical
//! thesaurus is grown system by system: the first dataset seeds it and every
//! later dataset either matches an existing variant exactly (auto-link) or
//! adds a new canonical institution. Near matches are never merged; they go
//! to a review queue in the [`MatchReport`].

mod corpus;
mod normalize;
mod thesaurus;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::country::Country;
use crate::ingest::RankingDataset;
use crate::model::CanonicalId;

pub use corpus::{link, LinkedCorpus};
pub use normalize::{normalize_name, token_jaccard, NormalizationRules};
pub use thesaurus::{canonical_id_for, CanonEntry, Thesaurus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("invalid rules: {0}")]
    Rules(String),
    #[error("thesaurus line {line}: {message}")]
    ThesaurusFormat { line: usize, message: String },
    #[error("thesaurus: {0}")]
    Thesaurus(String),
    #[error("linkage conflict: {0}")]
    Conflict(String),
    #[error("unknown indicator {0}")]
    UnknownIndicator(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutoLink {
    pub system_id: String,
    pub local_id: String,
    pub raw_name: String,
    pub normalized: String,
    pub canonical_id: CanonicalId,
    pub canonical_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateReason {
    /// Token-set similarity at or above the threshold.
    SimilarName,
    /// Shared stem, different campus qualifier.
    CampusQualifier,
    /// Identical normalized name in a different country.
    CountryConflict,
    /// Identical normalized name appears twice within one system.
    DuplicateInSystem,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub system_id: String,
    pub local_id: String,
    pub raw_name: String,
    pub canonical_id: CanonicalId,
    pub canonical_name: String,
    pub similarity: f64,
    pub reason: CandidateReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unlinked {
    pub system_id: String,
    pub local_id: String,
    pub raw_name: String,
    pub normalized: String,
    /// Canonical id the record receives on its own.
    pub assigned_id: CanonicalId,
}

/// Outcome of thesaurus construction; candidates await human confirmation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchReport {
    pub auto_links: Vec<AutoLink>,
    pub candidates: Vec<Candidate>,
    pub unlinked: Vec<Unlinked>,
}

impl MatchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Grow a thesaurus over `datasets` in the given order.
pub fn build_thesaurus(
    datasets: &[RankingDataset],
    rules: &NormalizationRules,
    prior: Option<Thesaurus>,
) -> (Thesaurus, MatchReport) {
    let mut thes = prior.unwrap_or_default();
    let mut report = MatchReport::default();
    // canonical id -> systems that contributed a record to it during this run
    let mut contributors: BTreeMap<CanonicalId, BTreeSet<String>> = BTreeMap::new();

    for ds in datasets {
        let system_id = ds.system_id().to_string();
        // Variants known before this system; new names are compared against these.
        let snapshot: Vec<(String, CanonicalId)> =
            thes.entries().map(|(v, id)| (v.clone(), id.clone())).collect();

        let mut rows: Vec<(String, &crate::ingest::InstitutionRecord)> = ds
            .records
            .iter()
            .map(|r| (rules.normalize(&r.raw_name), r))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.local_id.cmp(&b.1.local_id)));

        for (normalized, rec) in rows {
            match thes.lookup(&normalized).cloned() {
                Some(id) => {
                    let entry = thes.canon(&id).expect("entries point into canon").clone();
                    if entry.country == rec.country {
                        let seen = contributors.entry(id.clone()).or_default();
                        if seen.contains(&system_id) {
                            report.candidates.push(Candidate {
                                system_id: system_id.clone(),
                                local_id: rec.local_id.clone(),
                                raw_name: rec.raw_name.clone(),
                                canonical_id: id.clone(),
                                canonical_name: entry.name.clone(),
                                similarity: 1.0,
                                reason: CandidateReason::DuplicateInSystem,
                            });
                        }
                        seen.insert(system_id.clone());
                        report.auto_links.push(AutoLink {
                            system_id: system_id.clone(),
                            local_id: rec.local_id.clone(),
                            raw_name: rec.raw_name.clone(),
                            normalized,
                            canonical_id: id,
                            canonical_name: entry.name,
                        });
                    } else {
                        report.candidates.push(Candidate {
                            system_id: system_id.clone(),
                            local_id: rec.local_id.clone(),
                            raw_name: rec.raw_name.clone(),
                            canonical_id: id,
                            canonical_name: entry.name,
                            similarity: 1.0,
                            reason: CandidateReason::CountryConflict,
                        });
                        report.unlinked.push(Unlinked {
                            system_id: system_id.clone(),
                            local_id: rec.local_id.clone(),
                            raw_name: rec.raw_name.clone(),
                            assigned_id: canonical_id_for(&normalized, rec.country),
                            normalized,
                        });
                    }
                }
                None => {
                    let id = thes.add_seed(&normalized, rec.raw_name.trim(), rec.country);
                    contributors.entry(id.clone()).or_default().insert(system_id.clone());
                    for c in review_candidates(&normalized, rec.country, &snapshot, &thes, rules) {
                        let entry = thes.canon(&c.0).expect("snapshot ids exist");
                        report.candidates.push(Candidate {
                            system_id: system_id.clone(),
                            local_id: rec.local_id.clone(),
                            raw_name: rec.raw_name.clone(),
                            canonical_id: c.0.clone(),
                            canonical_name: entry.name.clone(),
                            similarity: c.1,
                            reason: c.2,
                        });
                    }
                    report.unlinked.push(Unlinked {
                        system_id: system_id.clone(),
                        local_id: rec.local_id.clone(),
                        raw_name: rec.raw_name.clone(),
                        normalized,
                        assigned_id: id,
                    });
                }
            }
        }
    }
    (thes, report)
}

/// Near matches of `name` among known variants, best per canonical id.
fn review_candidates(
    name: &str,
    country: Country,
    known: &[(String, CanonicalId)],
    thes: &Thesaurus,
    rules: &NormalizationRules,
) -> Vec<(CanonicalId, f64, CandidateReason)> {
    let len = name.split_whitespace().count().max(1) as f64;
    let mut best: BTreeMap<CanonicalId, (f64, CandidateReason)> = BTreeMap::new();
    for (variant, id) in known {
        if thes.canon(id).map(|e| e.country) != Some(country) {
            continue;
        }
        let reason = if rules.qualifier_variants(name, variant) {
            Some(CandidateReason::CampusQualifier)
        } else {
            let other = variant.split_whitespace().count().max(1) as f64;
            // Jaccard can never exceed the ratio of the two set sizes.
            if len.min(other) / len.max(other) < rules.similarity_threshold {
                None
            } else if token_jaccard(name, variant) >= rules.similarity_threshold {
                Some(CandidateReason::SimilarName)
            } else {
                None
            }
        };
        if let Some(reason) = reason {
            let sim = token_jaccard(name, variant);
            let slot = best.entry(id.clone()).or_insert((sim, reason));
            if sim > slot.0 {
                *slot = (sim, reason);
            }
        }
    }
    best.into_iter().map(|(id, (s, r))| (id, s, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::InstitutionRecord;
    use crate::model::{IndicatorDef, SystemManifest};

    fn dataset(id: &str, rows: &[(&str, &str, &str)]) -> RankingDataset {
        RankingDataset {
            manifest: SystemManifest {
                system_id: id.into(),
                display_name: id.into(),
                year: 2016,
                indicators: vec![IndicatorDef::numeric("score")],
            },
            records: rows
                .iter()
                .map(|(lid, name, c)| InstitutionRecord {
                    local_id: lid.to_string(),
                    raw_name: name.to_string(),
                    country: Country::parse(c).unwrap(),
                    values: Default::default(),
                })
                .collect(),
        }
    }

    #[test]
    fn exact_normalized_match_links_across_systems() {
        let a = dataset("a", &[("1", "University of X", "US")]);
        let b = dataset("b", &[("9", "Univ. of X", "US")]);
        let rules = NormalizationRules::default();
        let (thes, report) = build_thesaurus(&[a, b], &rules, None);
        assert_eq!(thes.canon_len(), 1);
        assert_eq!(report.auto_links.len(), 1);
        assert_eq!(report.auto_links[0].system_id, "b");
        assert!(report.candidates.is_empty());
    }

    #[test]
    fn campus_qualifier_is_candidate_not_link() {
        let a = dataset("arwu", &[("1", "U Arkansas at Fayetteville", "US")]);
        let b = dataset("qs", &[("1", "U Arkansas", "US")]);
        let rules = NormalizationRules::default();
        let (thes, report) = build_thesaurus(&[a, b], &rules, None);
        assert_eq!(thes.canon_len(), 2);
        assert!(report.auto_links.is_empty());
        assert_eq!(report.candidates.len(), 1);
        assert_eq!(report.candidates[0].reason, CandidateReason::CampusQualifier);
    }

    #[test]
    fn similar_names_are_queued() {
        let a = dataset("a", &[("1", "National Taiwan University of Science and Technology", "TW")]);
        let b = dataset("b", &[("1", "National Taiwan University Science and Technology", "TW")]);
        let (thes, report) = build_thesaurus(&[a, b], &NormalizationRules::default(), None);
        assert_eq!(thes.canon_len(), 2);
        assert_eq!(report.candidates.len(), 1);
        assert_eq!(report.candidates[0].reason, CandidateReason::SimilarName);
        assert!(report.candidates[0].similarity >= 0.8);
    }

    #[test]
    fn country_conflict_never_links() {
        let a = dataset("a", &[("1", "Catholic University", "BE")]);
        let b = dataset("b", &[("1", "Catholic University", "CL")]);
        let (thes, report) = build_thesaurus(&[a, b], &NormalizationRules::default(), None);
        assert_eq!(thes.canon_len(), 1);
        assert!(report.auto_links.is_empty());
        assert_eq!(report.candidates[0].reason, CandidateReason::CountryConflict);
        assert_eq!(report.unlinked.len(), 2);
    }

    #[test]
    fn duplicate_in_one_system_is_flagged() {
        let a = dataset("a", &[("1", "Univ X", "US"), ("2", "University X", "US")]);
        let (_, report) = build_thesaurus(&[a], &NormalizationRules::default(), None);
        assert_eq!(report.candidates.len(), 1);
        assert_eq!(report.candidates[0].reason, CandidateReason::DuplicateInSystem);
    }

    #[test]
    fn report_json_has_three_arrays() {
        let a = dataset("a", &[("1", "U X", "US")]);
        let (_, report) = build_thesaurus(&[a], &NormalizationRules::default(), None);
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        for key in ["auto_links", "candidates", "unlinked"] {
            assert!(v[key].is_array(), "{key}");
        }
    }
}
