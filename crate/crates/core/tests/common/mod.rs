//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unirank::country::Country;
use unirank::entity_link::{build_thesaurus, link, LinkedCorpus, NormalizationRules};
use unirank::ingest::{InstitutionRecord, RankingDataset, SyntheticSpec};
use unirank::model::{IndicatorDef, SystemManifest, Value};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn bundled_spec() -> SyntheticSpec {
    let text = std::fs::read_to_string(data_dir().join("synthetic_spec.json")).unwrap();
    SyntheticSpec::from_json(&text).unwrap()
}

pub fn country(code: &str) -> Country {
    Country::parse(code).unwrap()
}

/// A dataset with numeric indicators; `rows` are `(name, country, values)`.
pub fn dataset(system_id: &str, indicators: &[&str], rows: &[(&str, &str, Vec<Option<f64>>)]) -> RankingDataset {
    let manifest = SystemManifest {
        system_id: system_id.to_string(),
        display_name: system_id.to_uppercase(),
        year: 2016,
        indicators: indicators.iter().map(|n| IndicatorDef::numeric(*n)).collect(),
    };
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, (name, c, vals))| InstitutionRecord {
            local_id: format!("{system_id}-{:04}", i + 1),
            raw_name: name.to_string(),
            country: country(c),
            values: indicators
                .iter()
                .zip(vals)
                .filter_map(|(n, v)| v.map(|v| (n.to_string(), Value::Number(v))))
                .collect(),
        })
        .collect();
    RankingDataset { manifest, records }
}

pub fn link_default(datasets: &[RankingDataset]) -> LinkedCorpus {
    let rules = NormalizationRules::default();
    let (thes, _) = build_thesaurus(datasets, &rules, None);
    link(datasets, &thes, &rules).unwrap()
}

/// Distinct, normalization-stable institution name for pool index `i`.
pub fn pool_name(i: usize) -> String {
    const SYL: [&str; 12] = ["ka", "lo", "mi", "ne", "ru", "sa", "te", "vo", "za", "pe", "di", "gu"];
    let mut word = String::new();
    let mut k = i;
    loop {
        word.push_str(SYL[k % SYL.len()]);
        k /= SYL.len();
        if k == 0 {
            break;
        }
    }
    let mut w = word.chars();
    let cap: String = w.next().unwrap().to_uppercase().chain(w).collect();
    format!("University of {cap}")
}

const POOL_COUNTRIES: [&str; 5] = ["US", "GB", "DE", "IT", "JP"];

/// A random corpus drawn from a pool of institutions. Every system covers a
/// random subset of the pool; indicator values are small integers so ties
/// are common. Returns the datasets and, per system, the pool indices it holds.
pub struct RandomCorpus {
    pub datasets: Vec<RankingDataset>,
    pub membership: Vec<Vec<usize>>,
    pub names: Vec<String>,
}

pub fn random_corpus(rng: &mut ChaCha8Rng, systems: usize, pool: usize, indicators: &[&str]) -> RandomCorpus {
    let names: Vec<String> = (0..pool).map(pool_name).collect();
    let countries: Vec<&str> = (0..pool).map(|_| POOL_COUNTRIES[rng.random_range(0..POOL_COUNTRIES.len())]).collect();
    let mut datasets = Vec::new();
    let mut membership = Vec::new();
    for s in 0..systems {
        let mut idx: Vec<usize> = (0..pool).collect();
        idx.shuffle(rng);
        let size = rng.random_range(1..=pool);
        let mut chosen = idx[..size].to_vec();
        chosen.sort_unstable();
        let rows: Vec<(&str, &str, Vec<Option<f64>>)> = chosen
            .iter()
            .map(|&i| {
                let vals = indicators
                    .iter()
                    .map(|_| (rng.random_bool(0.9)).then(|| rng.random_range(0..12) as f64))
                    .collect();
                (names[i].as_str(), countries[i], vals)
            })
            .collect();
        datasets.push(dataset(&format!("s{s}"), indicators, &rows));
        membership.push(chosen);
    }
    RandomCorpus {
        datasets,
        membership,
        names,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random vector of length `n` drawn from `levels` distinct values, so ties occur.
pub fn tied_vector(rng: &mut ChaCha8Rng, n: usize, levels: i64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-levels..=levels) as f64).collect()
}

/// Group `(key, value)` pairs.
pub fn group<K: Ord, V>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<K, Vec<V>> {
    let mut m: BTreeMap<K, Vec<V>> = BTreeMap::new();
    for (k, v) in pairs {
        m.entry(k).or_default().push(v);
    }
    m
}
