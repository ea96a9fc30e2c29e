//! Institution name normalization.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::LinkError;

const DEFAULT_RULES: &str = include_str!("../../data/default_rules.json");

fn yes() -> bool {
    true
}

fn default_threshold() -> f64 {
    0.8
}

/// Editable rule tables driving name normalization and candidate detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRules {
    /// Organizational and disciplinary terms, e.g. `univ -> university`.
    #[serde(default)]
    pub term_map: BTreeMap<String, String>,
    /// City spellings, e.g. `roma -> rome`.
    #[serde(default)]
    pub city_map: BTreeMap<String, String>,
    #[serde(default = "yes")]
    pub strip_punctuation: bool,
    #[serde(default = "yes")]
    pub fold_diacritics: bool,
    /// Jaccard similarity at or above which a non-identical pair is queued for review.
    #[serde(default = "default_threshold")]
    pub similarity_threshold: f64,
    /// Tokens that start a campus/branch qualifier (`at`, `campus`, ...).
    #[serde(default)]
    pub qualifier_tokens: BTreeSet<String>,
    /// City tokens that may trail a shared stem as a campus suffix.
    #[serde(default)]
    pub cities: BTreeSet<String>,
    /// Function words; a stem never ends in one.
    #[serde(default)]
    pub connector_tokens: BTreeSet<String>,
}

impl Default for NormalizationRules {
    fn default() -> Self {
        Self::from_json(DEFAULT_RULES).expect("bundled rules are valid")
    }
}

impl NormalizationRules {
    pub fn from_json(text: &str) -> Result<Self, LinkError> {
        let rules: NormalizationRules =
            serde_json::from_str(text).map_err(|e| LinkError::Rules(format!("line {}: {e}", e.line())))?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn load(path: &Path) -> Result<Self, LinkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LinkError::Rules(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Rule tables must produce already-normalized tokens that no rule rewrites
    /// again; otherwise normalization would not be idempotent.
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err(LinkError::Rules(format!(
                "similarity_threshold must be in (0, 1], got {}",
                self.similarity_threshold
            )));
        }
        for (table, map) in [("term_map", &self.term_map), ("city_map", &self.city_map)] {
            for (key, value) in map {
                if key.split_whitespace().count() != 1 {
                    return Err(LinkError::Rules(format!("{table}: key '{key}' must be a single token")));
                }
                if value.trim().is_empty() {
                    return Err(LinkError::Rules(format!("{table}: '{key}' maps to an empty value")));
                }
                for tok in value.split_whitespace() {
                    if self.basic(tok) != tok {
                        return Err(LinkError::Rules(format!(
                            "{table}: replacement '{value}' is not in normalized form"
                        )));
                    }
                    if self.rewrite(tok).is_some_and(|r| r != tok) {
                        return Err(LinkError::Rules(format!(
                            "{table}: replacement token '{tok}' would be rewritten again"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn rewrite(&self, token: &str) -> Option<&str> {
        self.term_map
            .get(token)
            .or_else(|| self.city_map.get(token))
            .map(String::as_str)
    }

    /// Case folding, diacritics and punctuation, without the token tables.
    fn basic(&self, raw: &str) -> String {
        let mut s = raw.to_lowercase();
        if self.fold_diacritics {
            s = fold(&s).to_lowercase();
        }
        if self.strip_punctuation {
            let mut out = String::with_capacity(s.len());
            for c in s.chars() {
                match c {
                    '\'' | '\u{2019}' | '`' | '\u{00b4}' => {}
                    '&' => out.push_str(" and "),
                    c if c.is_alphanumeric() || (!self.fold_diacritics && is_combining_mark(c)) => out.push(c),
                    _ => out.push(' '),
                }
            }
            s = out;
        }
        s
    }

    pub fn normalize(&self, raw: &str) -> String {
        let basic = self.basic(raw);
        let mut out: Vec<&str> = Vec::new();
        for tok in basic.split_whitespace() {
            match self.rewrite(tok) {
                Some(r) => out.extend(r.split_whitespace()),
                None => out.push(tok),
            }
        }
        out.join(" ")
    }

    fn is_city(&self, token: &str) -> bool {
        self.cities.contains(token) || self.city_map.values().any(|c| c == token)
    }

    /// The part of a normalized name before any campus qualifier.
    pub fn stem<'a>(&self, tokens: &'a [&'a str]) -> &'a [&'a str] {
        if let Some(i) = tokens
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, t)| self.qualifier_tokens.contains(**t))
            .map(|(i, _)| i)
        {
            return &tokens[..i];
        }
        let mut end = tokens.len();
        while end > 0 && self.is_city(tokens[end - 1]) {
            end -= 1;
        }
        if end < tokens.len() && end >= 2 && !self.connector_tokens.contains(tokens[end - 1]) {
            return &tokens[..end];
        }
        tokens
    }

    /// True when the two normalized names share a stem and at least one of
    /// them carries a campus qualifier, e.g. `university arkansas` and
    /// `university arkansas at fayetteville`.
    pub fn qualifier_variants(&self, a: &str, b: &str) -> bool {
        if a == b {
            return false;
        }
        let ta: Vec<&str> = a.split_whitespace().collect();
        let tb: Vec<&str> = b.split_whitespace().collect();
        let sa = self.stem(&ta);
        let sb = self.stem(&tb);
        !sa.is_empty() && sa == sb && (sa.len() < ta.len() || sb.len() < tb.len())
    }
}

fn fold(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.nfkd() {
        if is_combining_mark(c) {
            continue;
        }
        match c {
            'ß' => out.push_str("ss"),
            'æ' | 'Æ' => out.push_str("ae"),
            'œ' | 'Œ' => out.push_str("oe"),
            'ø' | 'Ø' => out.push('o'),
            'đ' | 'Đ' => out.push('d'),
            'ł' | 'Ł' => out.push('l'),
            'ı' => out.push('i'),
            'þ' | 'Þ' => out.push_str("th"),
            c => out.push(c),
        }
    }
    out
}

/// Normalize an institution name with the given rules.
pub fn normalize_name(raw: &str, rules: &NormalizationRules) -> String {
    rules.normalize(raw)
}

/// Jaccard similarity of the token sets of two normalized names.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let sa: BTreeSet<&str> = a.split_whitespace().collect();
    let sb: BTreeSet<&str> = b.split_whitespace().collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn abbreviations_and_city_names() {
        let r = NormalizationRules::default();
        assert_eq!(normalize_name("Univ. of Roma ", &r), "university of rome");
        assert_eq!(normalize_name("U Arkansas, Fayetteville", &r), "university arkansas fayetteville");
        assert_eq!(normalize_name("Technische Universität München", &r), "technische universitat munich");
        assert_eq!(normalize_name("King's College London", &r), "kings college london");
        assert_eq!(normalize_name("Texas A&M Univ", &r), "texas a and m university");
    }

    #[test]
    fn diacritics_fold_and_lowercase() {
        let r = NormalizationRules::default();
        assert_eq!(normalize_name("UNIVERSITÄT X", &r), "universitat x");
        assert_eq!(normalize_name("Université de Montréal", &r), "universite de montreal");
        assert_eq!(normalize_name("Łódź  Straße", &r), "lodz strasse");
    }

    #[test]
    fn non_idempotent_rules_are_rejected() {
        let mut r = NormalizationRules::default();
        r.term_map.insert("x".into(), "univ".into());
        assert!(r.validate().is_err());
        let mut r = NormalizationRules::default();
        r.city_map.insert("rom".into(), "Rome".into());
        assert!(r.validate().is_err());
    }

    #[test]
    fn qualifier_detection() {
        let r = NormalizationRules::default();
        let base = normalize_name("U Arkansas", &r);
        let at = normalize_name("U Arkansas at Fayetteville", &r);
        let comma = normalize_name("U Arkansas, Fayetteville", &r);
        let lr = normalize_name("U Arkansas at Little Rock", &r);
        assert!(r.qualifier_variants(&base, &at));
        assert!(r.qualifier_variants(&at, &base));
        assert!(r.qualifier_variants(&base, &comma));
        assert!(r.qualifier_variants(&at, &lr));
        // a city that *is* the identity is not a qualifier
        let rome = normalize_name("University of Rome", &r);
        let milan = normalize_name("University of Milano", &r);
        assert!(!r.qualifier_variants(&rome, &milan));
    }

    #[test]
    fn jaccard() {
        assert_eq!(token_jaccard("a b c", "a b c"), 1.0);
        assert_eq!(token_jaccard("a b", "a b c d"), 0.5);
        assert_eq!(token_jaccard("a", "b"), 0.0);
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "\\PC{1,40}") {
            let r = NormalizationRules::default();
            let once = normalize_name(&s, &r);
            prop_assert_eq!(normalize_name(&once, &r), once.clone());
        }

        #[test]
        fn idempotent_without_folding(s in "\\PC{1,40}", strip in any::<bool>()) {
            let r = NormalizationRules { fold_diacritics: false, strip_punctuation: strip, ..NormalizationRules::default() };
            let once = normalize_name(&s, &r);
            prop_assert_eq!(normalize_name(&once, &r), once.clone());
        }

        #[test]
        fn idempotent_on_name_like_input(
            words in proptest::collection::vec(prop_oneof![
                Just("Univ."), Just("U"), Just("of"), Just("Roma"), Just("München"),
                Just("Inst"), Just("Technol."), Just("A&M"), Just("King's"), Just("ÉCOLE"),
            ], 1..6)
        ) {
            let r = NormalizationRules::default();
            let s = words.join(" ");
            let once = normalize_name(&s, &r);
            prop_assert_eq!(normalize_name(&once, &r), once.clone());
        }
    }
}
