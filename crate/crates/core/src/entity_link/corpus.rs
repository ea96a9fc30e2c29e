use std::collections::{BTreeMap, BTreeSet};

use super::{canonical_id_for, LinkError, NormalizationRules, Thesaurus};
use crate::country::Country;
use crate::ingest::RankingDataset;
use crate::model::{CanonicalId, CanonicalInstitution, IndicatorDef, IndicatorRef, SystemManifest, Value};
use crate::transforms::IndicatorSeries;

/// Immutable cross-system join of institutions and their indicator values.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkedCorpus {
    systems: Vec<SystemManifest>,
    institutions: BTreeMap<CanonicalId, CanonicalInstitution>,
    /// Per system (same order as `systems`): member id -> contributing local ids.
    members: Vec<BTreeMap<CanonicalId, Vec<String>>>,
    /// (system index, indicator) -> non-missing values.
    values: BTreeMap<(usize, String), BTreeMap<CanonicalId, Value>>,
}

/// Join `datasets` through the thesaurus. Names without a usable thesaurus
/// entry become canonical institutions of their own, keyed by normalized name
/// and country.
pub fn link(
    datasets: &[RankingDataset],
    thesaurus: &Thesaurus,
    rules: &NormalizationRules,
) -> Result<LinkedCorpus, LinkError> {
    let mut ids_seen = BTreeSet::new();
    for ds in datasets {
        if !ids_seen.insert(ds.system_id()) {
            return Err(LinkError::Conflict(format!("system '{}' supplied twice", ds.system_id())));
        }
    }
    let mut corpus = LinkedCorpus {
        systems: datasets.iter().map(|d| d.manifest.clone()).collect(),
        institutions: BTreeMap::new(),
        members: vec![BTreeMap::new(); datasets.len()],
        values: BTreeMap::new(),
    };

    for (sys, ds) in datasets.iter().enumerate() {
        let mut records: Vec<_> = ds.records.iter().collect();
        records.sort_by(|a, b| a.local_id.cmp(&b.local_id));
        for rec in records {
            let normalized = rules.normalize(&rec.raw_name);
            let (id, name) = match thesaurus.lookup(&normalized) {
                Some(id) => {
                    let entry = thesaurus.canon(id).expect("thesaurus invariant");
                    if entry.country == rec.country {
                        (id.clone(), entry.name.clone())
                    } else {
                        (canonical_id_for(&normalized, rec.country), rec.raw_name.trim().to_string())
                    }
                }
                None => (canonical_id_for(&normalized, rec.country), rec.raw_name.trim().to_string()),
            };
            match corpus.institutions.get(&id) {
                Some(inst) if inst.country != rec.country => {
                    return Err(LinkError::Conflict(format!(
                        "{id} is located in {} but {}:{} says {}",
                        inst.country, ds.system_id(), rec.local_id, rec.country
                    )));
                }
                Some(_) => {}
                None => {
                    corpus.institutions.insert(
                        id.clone(),
                        CanonicalInstitution {
                            id: id.clone(),
                            name,
                            country: rec.country,
                        },
                    );
                }
            }
            corpus.members[sys].entry(id.clone()).or_default().push(rec.local_id.clone());
            for (indicator, value) in &rec.values {
                let slot = corpus.values.entry((sys, indicator.clone())).or_default();
                match slot.get(&id) {
                    Some(existing) if existing != value => {
                        return Err(LinkError::Conflict(format!(
                            "{id} receives two values for {}:{indicator} ({} and {})",
                            ds.system_id(),
                            existing.to_cell(),
                            value.to_cell()
                        )));
                    }
                    _ => {
                        slot.insert(id.clone(), *value);
                    }
                }
            }
        }
    }
    Ok(corpus)
}

impl LinkedCorpus {
    pub fn systems(&self) -> &[SystemManifest] {
        &self.systems
    }

    pub fn system_ids(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.system_id.as_str()).collect()
    }

    pub fn system_index(&self, system_id: &str) -> Option<usize> {
        self.systems.iter().position(|s| s.system_id == system_id)
    }

    pub fn institutions(&self) -> impl Iterator<Item = &CanonicalInstitution> {
        self.institutions.values()
    }

    pub fn institution(&self, id: &CanonicalId) -> Option<&CanonicalInstitution> {
        self.institutions.get(id)
    }

    pub fn len(&self) -> usize {
        self.institutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.institutions.is_empty()
    }

    pub fn members(&self, system: usize) -> impl Iterator<Item = &CanonicalId> {
        self.members[system].keys()
    }

    pub fn member_count(&self, system: usize) -> usize {
        self.members[system].len()
    }

    pub fn is_present(&self, system: usize, id: &CanonicalId) -> bool {
        self.members[system].contains_key(id)
    }

    /// Local ids in `system` that were linked to `id`.
    pub fn local_ids(&self, system: usize, id: &CanonicalId) -> &[String] {
        self.members[system].get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn country_of(&self, id: &CanonicalId) -> Option<Country> {
        self.institutions.get(id).map(|i| i.country)
    }

    pub fn resolve(&self, r: &IndicatorRef) -> Result<(usize, &IndicatorDef), LinkError> {
        let sys = self
            .system_index(&r.system_id)
            .ok_or_else(|| LinkError::UnknownIndicator(r.to_string()))?;
        let def = self.systems[sys]
            .indicator(&r.indicator)
            .ok_or_else(|| LinkError::UnknownIndicator(r.to_string()))?;
        Ok((sys, def))
    }

    /// Values of one indicator over all members of its system, with explicit
    /// missingness.
    pub fn series(&self, r: &IndicatorRef) -> Result<IndicatorSeries, LinkError> {
        let (sys, def) = self.resolve(r)?;
        let mut s = IndicatorSeries::new(r.clone(), def.kind, def.higher_is_better);
        let vals = self.values.get(&(sys, def.name.clone()));
        for id in self.members[sys].keys() {
            s.values.insert(id.clone(), vals.and_then(|v| v.get(id)).copied());
        }
        Ok(s)
    }

    /// New corpus with a derived indicator (e.g. a teaching score) attached to
    /// an existing system. Values for non-members are ignored.
    pub fn with_derived(&self, system_id: &str, def: IndicatorDef, series: &IndicatorSeries) -> Result<LinkedCorpus, LinkError> {
        let sys = self
            .system_index(system_id)
            .ok_or_else(|| LinkError::UnknownIndicator(format!("{system_id}:{}", def.name)))?;
        if self.systems[sys].indicator(&def.name).is_some() {
            return Err(LinkError::Conflict(format!(
                "system '{system_id}' already has an indicator named '{}'",
                def.name
            )));
        }
        let mut out = self.clone();
        let slot = out.values.entry((sys, def.name.clone())).or_default();
        for (id, v) in series.present() {
            if self.members[sys].contains_key(id) {
                slot.insert(id.clone(), v);
            }
        }
        out.systems[sys].indicators.push(def);
        Ok(out)
    }
}
