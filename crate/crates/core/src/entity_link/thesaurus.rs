use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::LinkError;
use crate::country::Country;
use crate::model::CanonicalId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonEntry {
    pub name: String,
    pub country: Country,
}

/// Variant (normalized name) → canonical institution.
///
/// Every variant maps to exactly one canonical id and every canonical id has
/// an entry in `canon`. Serialized as TSV
/// `variant<TAB>canonical_id<TAB>canonical_name<TAB>country`, sorted by variant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Thesaurus {
    entries: BTreeMap<String, CanonicalId>,
    canon: BTreeMap<CanonicalId, CanonEntry>,
}

/// Stable id derived from the first-seen normalized name and the country.
pub fn canonical_id_for(normalized: &str, country: Country) -> CanonicalId {
    let mut h = Sha256::new();
    h.update(normalized.as_bytes());
    h.update([0x1f]);
    h.update(country.as_str().as_bytes());
    let digest = h.finalize();
    CanonicalId(format!("I{}", hex::encode(&digest[..6])))
}

fn clean_field(s: &str) -> String {
    s.chars()
        .map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c })
        .collect()
}

impl Thesaurus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, variant: &str) -> Option<&CanonicalId> {
        self.entries.get(variant)
    }

    pub fn canon(&self, id: &CanonicalId) -> Option<&CanonEntry> {
        self.canon.get(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &CanonicalId)> {
        self.entries.iter()
    }

    pub fn canonicals(&self) -> impl Iterator<Item = (&CanonicalId, &CanonEntry)> {
        self.canon.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn canon_len(&self) -> usize {
        self.canon.len()
    }

    /// Register a new canonical institution seeded by `normalized`; returns its id.
    pub(crate) fn add_seed(&mut self, normalized: &str, display: &str, country: Country) -> CanonicalId {
        let mut id = canonical_id_for(normalized, country);
        let mut salt = 1;
        while self.canon.contains_key(&id) {
            // Only reachable on a hash collision between different seeds.
            id = canonical_id_for(&format!("{normalized}#{salt}"), country);
            salt += 1;
        }
        self.canon.insert(
            id.clone(),
            CanonEntry {
                name: clean_field(display),
                country,
            },
        );
        self.entries.insert(normalized.to_string(), id.clone());
        id
    }

    /// Attach an additional variant to an existing canonical institution.
    pub fn add_variant(&mut self, variant: &str, id: &CanonicalId) -> Result<(), LinkError> {
        if !self.canon.contains_key(id) {
            return Err(LinkError::Thesaurus(format!("unknown canonical id {id}")));
        }
        match self.entries.get(variant) {
            Some(existing) if existing != id => Err(LinkError::Thesaurus(format!(
                "variant '{variant}' already maps to {existing}"
            ))),
            _ => {
                self.entries.insert(variant.to_string(), id.clone());
                Ok(())
            }
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (variant, id) in &self.entries {
            let c = &self.canon[id];
            out.push_str(&format!("{variant}\t{id}\t{}\t{}\n", c.name, c.country));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, LinkError> {
        let mut t = Thesaurus::new();
        let mut prev: Option<&str> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| LinkError::ThesaurusFormat { line: line_no, message };
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
            }
            let (variant, id, name, country) = (fields[0], fields[1], fields[2], fields[3]);
            if variant.is_empty() || id.is_empty() {
                return Err(err("empty variant or canonical id".into()));
            }
            if let Some(p) = prev {
                if p >= variant {
                    return Err(err(format!("variants must be unique and sorted ('{p}' before '{variant}')")));
                }
            }
            prev = Some(variant);
            let country = Country::parse(country).map_err(|e| err(e.to_string()))?;
            let id = CanonicalId(id.to_string());
            let entry = CanonEntry {
                name: name.to_string(),
                country,
            };
            match t.canon.get(&id) {
                Some(existing) if *existing != entry => {
                    return Err(err(format!("canonical {id} has conflicting name or country")));
                }
                Some(_) => {}
                None => {
                    t.canon.insert(id.clone(), entry);
                }
            }
            t.entries.insert(variant.to_string(), id);
        }
        Ok(t)
    }
}
