//! Seeded synthetic ranking corpora with known ground truth.
//!
//! A "world" of institutions is generated first; each system then covers a
//! shared core plus institutions exclusive to it. Names are rendered in a
//! per-system style (abbreviated, upper-case, accented, ...) that the default
//! normalization rules undo, and a few campus-qualified look-alikes are
//! planted as distinct institutions. Indicator values come from latent normal
//! scores; a follower indicator mixes the source's latent scores with
//! orthogonal noise, with the mixing weight tuned per group so that the
//! sample rank correlation hits the target. Values are monotone transforms of
//! the latents, so the planted rank structure survives. Everything is a pure
//! function of `(seed, spec)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{write_dataset, IngestError, InstitutionRecord, RankingDataset};
use crate::country::Country;
use crate::model::{IndicatorDef, IndicatorKind, IndicatorRef, SystemManifest, Value};
use crate::transforms::{median_classes, ClassThresholds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryWeight {
    pub code: Country,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Uniform { low: f64, high: f64 },
}

impl Default for Distribution {
    fn default() -> Self {
        Distribution::Normal { mean: 50.0, sd: 15.0 }
    }
}

impl Distribution {
    fn apply(&self, z: f64) -> f64 {
        match *self {
            Distribution::Normal { mean, sd } => mean + sd * z,
            Distribution::LogNormal { mu, sigma } => (mu + sigma * z).exp(),
            Distribution::Uniform { low, high } => {
                let phi = 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2);
                low + (high - low) * phi
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Follows {
    pub source: IndicatorRef,
    /// Target Spearman correlation with the source.
    pub rho: f64,
    /// Per-country target overriding `rho` inside that country.
    #[serde(default)]
    pub per_country: BTreeMap<Country, f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticIndicator {
    pub name: String,
    pub kind: IndicatorKind,
    pub higher_is_better: bool,
    #[serde(default)]
    pub distribution: Distribution,
    /// Fraction of the system's institutions with a value.
    #[serde(default = "one")]
    pub coverage: f64,
    #[serde(default)]
    pub follows: Option<Follows>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameStyle {
    #[default]
    Full,
    Abbreviated,
    Short,
    Upper,
    Accented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSystem {
    pub system_id: String,
    pub display_name: String,
    pub year: i32,
    pub size: usize,
    #[serde(default)]
    pub name_style: NameStyle,
    pub indicators: Vec<SyntheticIndicator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub countries: Vec<CountryWeight>,
    /// Share of the smallest system that every system has in common.
    pub shared_fraction: f64,
    #[serde(default)]
    pub campus_lookalikes: usize,
    /// Decimal places values are rounded to.
    #[serde(default = "default_decimals")]
    pub decimals: u32,
    pub systems: Vec<SyntheticSystem>,
}

fn default_decimals() -> u32 {
    3
}

impl SyntheticSpec {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        serde_json::from_str(text).map_err(|e| IngestError::Parse {
            origin: "synthetic spec".into(),
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::Validation(format!("synthetic spec: {m}")));
        if !(0.0..=1.0).contains(&self.shared_fraction) {
            return bad(format!("shared_fraction must be within [0, 1], got {}", self.shared_fraction));
        }
        if self.countries.is_empty() || self.countries.iter().any(|c| !c.weight.is_finite() || c.weight <= 0.0) {
            return bad("need at least one country, all weights positive".into());
        }
        if self.systems.is_empty() {
            return bad("need at least one system".into());
        }
        if self.systems.iter().any(|s| s.size == 0) {
            return bad("system sizes must be positive".into());
        }
        if self.decimals > 9 {
            return bad("decimals must be <= 9".into());
        }
        let mut declared: BTreeSet<IndicatorRef> = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for s in &self.systems {
            if !ids.insert(s.system_id.as_str()) {
                return bad(format!("system '{}' declared twice", s.system_id));
            }
            for ind in &s.indicators {
                if !(0.0..=1.0).contains(&ind.coverage) {
                    return bad(format!("{}:{} coverage must be within [0, 1]", s.system_id, ind.name));
                }
                if let Some(f) = &ind.follows {
                    if !declared.contains(&f.source) {
                        return bad(format!(
                            "{}:{} follows {}, which must be declared earlier",
                            s.system_id, ind.name, f.source
                        ));
                    }
                    if std::iter::once(&f.rho).chain(f.per_country.values()).any(|r| !(-1.0..=1.0).contains(r)) {
                        return bad(format!("{}:{} target rho must be within [-1, 1]", s.system_id, ind.name));
                    }
                }
                declared.insert(IndicatorRef::new(&s.system_id, &ind.name));
            }
        }
        Ok(())
    }
}

/// Generated datasets plus the ground-truth identity of every record.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub datasets: Vec<RankingDataset>,
    /// (system_id, local_id) -> ground-truth institution id.
    pub truth: BTreeMap<(String, String), String>,
}

impl SyntheticCorpus {
    pub fn truth_of(&self, system_id: &str, local_id: &str) -> Option<&str> {
        self.truth
            .get(&(system_id.to_string(), local_id.to_string()))
            .map(String::as_str)
    }

    /// `system_id<TAB>local_id<TAB>truth_id` lines, sorted.
    pub fn truth_tsv(&self) -> String {
        self.truth
            .iter()
            .map(|((s, l), t)| format!("{s}\t{l}\t{t}\n"))
            .collect()
    }

    /// Write every dataset plus `truth.tsv` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        for ds in &self.datasets {
            write_dataset(ds, dir)?;
        }
        fs::write(dir.join("truth.tsv"), self.truth_tsv())
    }
}

struct WorldInstitution {
    truth: String,
    country: Country,
    /// Words of the full name, e.g. ["University", "of", "Kerlin"].
    words: Vec<String>,
}

const SYLLABLES: &[&str] = &[
    "ba", "ker", "lin", "dor", "mar", "ven", "tal", "ros", "fen", "gar", "hol", "mir", "sal", "tor",
    "vel", "nor", "kas", "lem", "pra", "dun", "bel", "cor", "ash", "wick", "ton", "ham", "ford",
    "vil", "burg", "sten", "quil", "rad", "zen", "pol", "gan", "tri",
];

const PATTERNS: &[&[&str]] = &[
    &["University", "of", "{}"],
    &["{}", "Institute", "of", "Technology"],
    &["{}", "State", "University"],
    &["Technical", "University", "of", "{}"],
    &["{}", "Medical", "University"],
    &["{}", "University", "of", "Science"],
    &["College", "of", "{}"],
    &["{}", "Polytechnic", "Institute"],
];

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn city_name(rng: &mut ChaCha8Rng) -> String {
    let parts = rng.random_range(2..=3);
    let mut s = String::new();
    for _ in 0..parts {
        s.push_str(SYLLABLES[rng.random_range(0..SYLLABLES.len())]);
    }
    let mut c = s.chars();
    let first = c.next().expect("non-empty").to_ascii_uppercase();
    std::iter::once(first).chain(c).collect()
}

fn render(words: &[String], style: NameStyle) -> String {
    let map = |w: &str| -> String {
        match (style, w) {
            (NameStyle::Abbreviated, "University") => "Univ.".into(),
            (NameStyle::Abbreviated, "Institute") => "Inst.".into(),
            (NameStyle::Abbreviated, "Technology") => "Technol.".into(),
            (NameStyle::Abbreviated, "College") => "Coll.".into(),
            (NameStyle::Abbreviated, "Science") => "Sci.".into(),
            (NameStyle::Short, "University") => "U".into(),
            (NameStyle::Short, "Institute") => "Inst".into(),
            (NameStyle::Short, "Polytechnic") => "Polytech".into(),
            (NameStyle::Upper, w) => w.to_uppercase(),
            (NameStyle::Accented, w) if w.chars().next().is_some_and(|c| c.is_uppercase()) && !is_fixed_word(w) => {
                w.replacen('e', "é", 1).replacen('a', "ä", 1)
            }
            (_, w) => w.to_string(),
        }
    };
    words.iter().map(|w| map(w)).collect::<Vec<_>>().join(" ")
}

fn is_fixed_word(w: &str) -> bool {
    PATTERNS.iter().any(|p| p.contains(&w)) || w == "at"
}

/// Largest-remainder allocation of `total` over `weights`.
fn allocate(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in &order {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

fn round_to(x: f64, decimals: u32) -> f64 {
    let f = 10f64.powi(decimals as i32);
    (x * f).round() / f
}

/// Spearman correlation of two tie-free vectors, `1 - 6 sum d^2 / (n(n^2 - 1))`.
fn rank_correlation(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Overwrite `target[i]` for `i in group` with `w a + sqrt(1 - w^2) b`, where
/// `a` is the standardized source and `b` fresh noise orthogonal to it. The
/// weight is chosen by bisection so that the sample rank correlation over the
/// group is as close to `rho` as the group size allows.
fn plant_correlation(group: &[usize], source: &[f64], target: &mut [f64], rho: f64, rng: &mut ChaCha8Rng) {
    let n = group.len();
    let fresh: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    if n < 3 {
        let r = pearson_for_spearman(rho);
        for (k, &i) in group.iter().enumerate() {
            target[i] = r * source[i] + (1.0 - r * r).sqrt() * fresh[k];
        }
        return;
    }
    let centred = |v: Vec<f64>| -> Vec<f64> {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.into_iter().map(|x| x - m).collect()
    };
    let unit = |v: Vec<f64>| -> Option<Vec<f64>> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (norm > 1e-12).then(|| v.into_iter().map(|x| x / norm).collect())
    };
    let Some(a) = unit(centred(group.iter().map(|&i| source[i]).collect())) else {
        for (k, &i) in group.iter().enumerate() {
            target[i] = fresh[k];
        }
        return;
    };
    let e = centred(fresh.clone());
    let dot: f64 = a.iter().zip(&e).map(|(x, y)| x * y).sum();
    let ortho: Vec<f64> = e.iter().zip(&a).map(|(x, y)| x - dot * y).collect();
    let Some(b) = unit(ortho) else {
        for (k, &i) in group.iter().enumerate() {
            target[i] = a[k];
        }
        return;
    };
    let mix = |w: f64| -> Vec<f64> {
        let s = (1.0 - w * w).max(0.0).sqrt();
        a.iter().zip(&b).map(|(x, y)| w * x + s * y).collect()
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut best = (f64::INFINITY, pearson_for_spearman(rho));
    for _ in 0..60 {
        let w = 0.5 * (lo + hi);
        let got = rank_correlation(&a, &mix(w));
        if (got - rho).abs() < best.0 {
            best = ((got - rho).abs(), w);
        }
        if got < rho {
            lo = w;
        } else {
            hi = w;
        }
    }
    let scale = (n as f64).sqrt();
    for (k, v) in mix(best.1).into_iter().enumerate() {
        target[group[k]] = scale * v;
    }
}

/// Pearson correlation of bivariate normal scores whose Spearman is `rho`.
fn pearson_for_spearman(rho: f64) -> f64 {
    2.0 * (std::f64::consts::PI * rho / 6.0).sin()
}

pub fn generate_synthetic_corpus(seed: u64, spec: &SyntheticSpec) -> Result<SyntheticCorpus, IngestError> {
    spec.validate()?;
    let min_size = spec.systems.iter().map(|s| s.size).min().expect("validated non-empty");
    let shared = (spec.shared_fraction * min_size as f64).round() as usize;
    let exclusive: Vec<usize> = spec.systems.iter().map(|s| s.size - shared).collect();
    let world_size = shared + exclusive.iter().sum::<usize>();

    // Countries: exact proportional counts, shuffled over the world.
    let mut crng = stream_rng(seed, 1);
    let weights: Vec<f64> = spec.countries.iter().map(|c| c.weight).collect();
    let mut countries: Vec<Country> = allocate(world_size, &weights)
        .into_iter()
        .zip(&spec.countries)
        .flat_map(|(n, c)| std::iter::repeat_n(c.code, n))
        .collect();
    countries.shuffle(&mut crng);

    // Names, unique after normalization.
    let rules = crate::entity_link::NormalizationRules::default();
    let mut nrng = stream_rng(seed, 2);
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut world: Vec<WorldInstitution> = Vec::with_capacity(world_size);
    for (i, country) in countries.iter().enumerate() {
        let words = loop {
            let city = city_name(&mut nrng);
            let pattern = PATTERNS[nrng.random_range(0..PATTERNS.len())];
            let words: Vec<String> = pattern.iter().map(|w| w.replace("{}", &city)).collect();
            let city_tok = city.to_lowercase();
            if rules.term_map.contains_key(&city_tok)
                || rules.city_map.contains_key(&city_tok)
                || rules.cities.contains(&city_tok)
            {
                continue;
            }
            if used.insert(rules.normalize(&words.join(" "))) {
                break words;
            }
        };
        world.push(WorldInstitution {
            truth: format!("T{i:05}"),
            country: *country,
            words,
        });
    }

    // Membership: shared core [0, shared), then each system's exclusive block.
    let mut membership: Vec<Vec<usize>> = Vec::new();
    let mut next = shared;
    for &ex in &exclusive {
        let mut m: Vec<usize> = (0..shared).collect();
        m.extend(next..next + ex);
        next += ex;
        membership.push(m);
    }

    // Campus look-alikes: exclusive institutions of the second system renamed
    // "<shared name> at <city>". They are distinct institutions.
    if spec.systems.len() >= 2 && shared > 0 {
        let start = shared + exclusive[0];
        let count = spec.campus_lookalikes.min(exclusive[1]).min(shared);
        for k in 0..count {
            let target = start + k;
            let base = k;
            let words = loop {
                let mut w = world[base].words.clone();
                w.push("at".into());
                w.push(city_name(&mut nrng));
                if used.insert(rules.normalize(&w.join(" "))) {
                    break w;
                }
            };
            world[target].words = words;
            world[target].country = world[base].country;
        }
    }

    // Latent scores per indicator over the whole world.
    let mut lrng = stream_rng(seed, 3);
    let mut mrng = stream_rng(seed, 4);
    let mut latents: BTreeMap<IndicatorRef, Vec<f64>> = BTreeMap::new();
    let mut present: BTreeMap<IndicatorRef, BTreeSet<usize>> = BTreeMap::new();
    for (sys, s) in spec.systems.iter().enumerate() {
        for ind in &s.indicators {
            let r = IndicatorRef::new(&s.system_id, &ind.name);
            let mut members = membership[sys].clone();
            members.shuffle(&mut mrng);
            let keep = (ind.coverage * members.len() as f64).round() as usize;
            let have: BTreeSet<usize> = members[..keep].iter().copied().collect();

            let mut z: Vec<f64> = (0..world_size).map(|_| lrng.sample(StandardNormal)).collect();
            if let Some(f) = &ind.follows {
                let src = &latents[&f.source];
                let src_have = &present[&f.source];
                let mut groups: BTreeMap<Option<Country>, Vec<usize>> = BTreeMap::new();
                for &i in have.intersection(src_have) {
                    let c = world[i].country;
                    let key = f.per_country.contains_key(&c).then_some(c);
                    groups.entry(key).or_default().push(i);
                }
                for (key, group) in groups {
                    let target = key.map(|c| f.per_country[&c]).unwrap_or(f.rho);
                    plant_correlation(&group, src, &mut z, target, &mut lrng);
                }
            }
            latents.insert(r.clone(), z);
            present.insert(r, have);
        }
    }

    // Records.
    let mut datasets = Vec::new();
    let mut truth = BTreeMap::new();
    let mut orng = stream_rng(seed, 5);
    for (sys, s) in spec.systems.iter().enumerate() {
        let manifest = SystemManifest {
            system_id: s.system_id.clone(),
            display_name: s.display_name.clone(),
            year: s.year,
            indicators: s
                .indicators
                .iter()
                .map(|i| IndicatorDef::new(&i.name, i.kind, i.higher_is_better))
                .collect(),
        };
        let mut order = membership[sys].clone();
        order.shuffle(&mut orng);
        let width = order.len().to_string().len().max(4);
        let local_of: BTreeMap<usize, String> = order
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, format!("{}-{:0width$}", s.system_id, k + 1)))
            .collect();

        let mut values: BTreeMap<usize, BTreeMap<String, Value>> = BTreeMap::new();
        for ind in &s.indicators {
            let r = IndicatorRef::new(&s.system_id, &ind.name);
            let z = &latents[&r];
            let have: Vec<usize> = present[&r].iter().copied().collect();
            let assigned: Vec<Value> = match ind.kind {
                IndicatorKind::Numeric => have
                    .iter()
                    .map(|&i| Value::Number(round_to(ind.distribution.apply(z[i]), spec.decimals)))
                    .collect(),
                IndicatorKind::Rank => {
                    let mut by_score = have.clone();
                    by_score.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
                    let pos: BTreeMap<usize, u32> =
                        by_score.iter().enumerate().map(|(k, &i)| (i, k as u32 + 1)).collect();
                    let rank = |i: usize| if ind.higher_is_better { have.len() as u32 + 1 - pos[&i] } else { pos[&i] };
                    have.iter().map(|&i| Value::Rank(rank(i))).collect()
                }
                IndicatorKind::ClassAToE => {
                    let raw: Vec<f64> = have.iter().map(|&i| ind.distribution.apply(z[i])).collect();
                    median_classes(&raw, &ClassThresholds::default())
                        .map_err(|e| IngestError::Validation(format!("{r}: {e}")))?
                        .into_iter()
                        .map(Value::Class)
                        .collect()
                }
            };
            for (&i, v) in have.iter().zip(assigned) {
                values.entry(i).or_default().insert(ind.name.clone(), v);
            }
        }

        let mut records: Vec<InstitutionRecord> = membership[sys]
            .iter()
            .map(|&i| InstitutionRecord {
                local_id: local_of[&i].clone(),
                raw_name: render(&world[i].words, s.name_style),
                country: world[i].country,
                values: values.remove(&i).unwrap_or_default(),
            })
            .collect();
        records.sort_by(|a, b| a.local_id.cmp(&b.local_id));
        for &i in &membership[sys] {
            truth.insert((s.system_id.clone(), local_of[&i].clone()), world[i].truth.clone());
        }
        let ds = RankingDataset { manifest, records };
        ds.validate()?;
        datasets.push(ds);
    }
    Ok(SyntheticCorpus { datasets, truth })
}
