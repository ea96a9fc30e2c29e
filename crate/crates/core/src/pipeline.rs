//! Pipeline configuration and orchestration: ingest, link, derive, analyse,
//! render. Every artifact is rendered in memory before anything is written.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyses::{self, LabelRule, ScatterScale};
use crate::country::Country;
use crate::entity_link::{build_thesaurus, link, LinkedCorpus, MatchReport, NormalizationRules, Thesaurus};
use crate::error::Error;
use crate::ingest::{load_dataset, RankingDataset};
use crate::model::{IndicatorDef, IndicatorKind, IndicatorRef};
use crate::report::{svg, tables, AnalysisReport, Format};
use crate::stats::{correlation_matrix, skewness, PValueMethod};
use crate::transforms::{self, ClassThresholds, PercentileMethod};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub manifest: PathBuf,
    pub table: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Derived {
    NormalizeByMax {
        source: IndicatorRef,
        name: String,
        #[serde(default)]
        cap: Option<f64>,
    },
    PercentileRank {
        source: IndicatorRef,
        name: String,
    },
    MedianClasses {
        source: IndicatorRef,
        name: String,
    },
    Quantify {
        source: IndicatorRef,
        name: String,
    },
    TeachingScore {
        system: String,
        name: String,
        sources: Vec<IndicatorRef>,
        #[serde(default = "two")]
        min_fields: usize,
    },
}

fn two() -> usize {
    2
}
fn hundred() -> usize {
    100
}
fn five() -> usize {
    5
}
fn ten() -> usize {
    10
}
fn three() -> usize {
    3
}
fn eleven() -> usize {
    11
}
fn twenty() -> usize {
    20
}
fn alpha() -> f64 {
    0.001
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopOverlapConfig {
    pub indicators: Vec<IndicatorRef>,
    #[serde(default = "hundred")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoConfig {
    #[serde(default = "five")]
    pub top_k: usize,
    #[serde(default = "ten")]
    pub min_count: usize,
}

impl Default for GeoConfig {
    fn default() -> Self {
        Self { top_k: 5, min_count: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewConfig {
    /// All numeric and rank indicators when absent.
    #[serde(default)]
    pub indicators: Option<Vec<IndicatorRef>>,
    #[serde(default = "yes")]
    pub adjusted: bool,
}

impl Default for SkewConfig {
    fn default() -> Self {
        Self {
            indicators: None,
            adjusted: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrConfig {
    pub name: String,
    pub indicators: Vec<IndicatorRef>,
    #[serde(default = "three")]
    pub min_n: usize,
    #[serde(default = "alpha")]
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountryCorrConfig {
    pub a: IndicatorRef,
    pub b: IndicatorRef,
    #[serde(default = "eleven")]
    pub min_n: usize,
    #[serde(default = "alpha")]
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparePairConfig {
    pub a: IndicatorRef,
    pub b: IndicatorRef,
    #[serde(default = "twenty")]
    pub k: usize,
    #[serde(default)]
    pub countries: Option<Vec<Country>>,
    /// Defaults to labelling the top and bottom `k`.
    #[serde(default)]
    pub label: Option<LabelRule>,
    #[serde(default = "percentile_scale")]
    pub scale: ScatterScale,
}

fn percentile_scale() -> ScatterScale {
    ScatterScale::Percentile
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysesConfig {
    #[serde(default)]
    pub overlap: bool,
    #[serde(default)]
    pub top_overlap: Option<TopOverlapConfig>,
    #[serde(default)]
    pub geo: Option<GeoConfig>,
    #[serde(default)]
    pub missing: bool,
    #[serde(default)]
    pub skew: Option<SkewConfig>,
    #[serde(default)]
    pub corr: Vec<CorrConfig>,
    #[serde(default)]
    pub country_corr: Vec<CountryCorrConfig>,
    #[serde(default)]
    pub compare_pair: Vec<ComparePairConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub datasets: Vec<DatasetPaths>,
    #[serde(default)]
    pub rules: Option<PathBuf>,
    /// Prior thesaurus to extend.
    #[serde(default)]
    pub thesaurus: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub p_value: PValueMethod,
    #[serde(default)]
    pub percentile: PercentileMethod,
    #[serde(default)]
    pub thresholds: ClassThresholds,
    #[serde(default)]
    pub derived: Vec<Derived>,
    #[serde(default)]
    pub analyses: AnalysesConfig,
    /// Directory relative paths are resolved against; the config file's own.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, Error> {
        let mut cfg: PipelineConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}: {e}", e.line())))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Parameter ranges and path existence.
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        if self.datasets.is_empty() {
            return bad("no datasets configured".into());
        }
        let mut paths: Vec<(&str, &PathBuf)> = Vec::new();
        for d in &self.datasets {
            paths.push(("dataset manifest", &d.manifest));
            paths.push(("dataset table", &d.table));
        }
        if let Some(r) = &self.rules {
            paths.push(("rules file", r));
        }
        if let Some(t) = &self.thesaurus {
            paths.push(("thesaurus file", t));
        }
        for (what, p) in paths {
            if !self.resolve(p).is_file() {
                return bad(format!("{what} not found: {}", self.resolve(p).display()));
            }
        }
        self.thresholds.validate().map_err(|e| Error::Config(e.to_string()))?;
        let a = &self.analyses;
        if let Some(t) = &a.top_overlap {
            if t.n == 0 || t.indicators.is_empty() {
                return bad("top_overlap needs n >= 1 and at least one indicator".into());
            }
        }
        for c in &a.corr {
            if c.min_n < 3 || !(c.alpha > 0.0 && c.alpha < 1.0) || c.indicators.len() < 2 {
                return bad(format!("corr '{}': need min_n >= 3, 0 < alpha < 1 and >= 2 indicators", c.name));
            }
        }
        for c in &a.country_corr {
            if c.min_n < 3 || !(c.alpha > 0.0 && c.alpha < 1.0) {
                return bad(format!("country_corr {} vs {}: need min_n >= 3 and 0 < alpha < 1", c.a, c.b));
            }
        }
        for c in &a.compare_pair {
            if c.k == 0 {
                return bad(format!("compare_pair {} vs {}: k must be >= 1", c.a, c.b));
            }
        }
        for d in &self.derived {
            if let Derived::NormalizeByMax { cap: Some(c), .. } = d {
                if !(*c > 0.0 && c.is_finite()) {
                    return bad(format!("normalize_by_max cap must be positive, got {c}"));
                }
            }
            if let Derived::TeachingScore { min_fields: 0, .. } = d {
                return bad("teaching_score min_fields must be >= 1".into());
            }
        }
        Ok(())
    }

    /// Content hash of the effective configuration; the output directory is
    /// left out so that the same analysis hashes alike wherever it is written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }
}

/// Which part of the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    IngestCheck,
    Link,
    Overlap,
    TopOverlap,
    Geo,
    Missing,
    Skew,
    Corr,
    CountryCorr,
    ComparePair,
    All,
}

/// A rendered output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

/// Loaded and linked state shared by every analysis.
pub struct Prepared {
    pub datasets: Vec<RankingDataset>,
    pub rules: NormalizationRules,
    pub thesaurus: Thesaurus,
    pub match_report: MatchReport,
    pub corpus: LinkedCorpus,
    /// Input path as configured -> sha256 of its content.
    pub input_hashes: BTreeMap<String, String>,
}

fn hash_file(cfg: &PipelineConfig, p: &Path, out: &mut BTreeMap<String, String>) -> Result<Vec<u8>, Error> {
    let bytes = fs::read(cfg.resolve(p)).map_err(|e| {
        Error::Ingest(crate::ingest::IngestError::Io {
            path: cfg.resolve(p),
            source: e,
        })
    })?;
    out.insert(p.display().to_string(), sha256_hex(&bytes));
    Ok(bytes)
}

pub fn prepare(cfg: &PipelineConfig, with_derived: bool) -> Result<Prepared, Error> {
    cfg.validate()?;
    let mut input_hashes = BTreeMap::new();
    let mut datasets = Vec::new();
    for d in &cfg.datasets {
        hash_file(cfg, &d.manifest, &mut input_hashes)?;
        hash_file(cfg, &d.table, &mut input_hashes)?;
        datasets.push(load_dataset(&cfg.resolve(&d.manifest), &cfg.resolve(&d.table))?);
    }
    let rules = match &cfg.rules {
        Some(p) => {
            let bytes = hash_file(cfg, p, &mut input_hashes)?;
            NormalizationRules::from_json(&String::from_utf8_lossy(&bytes))?
        }
        None => NormalizationRules::default(),
    };
    let prior = match &cfg.thesaurus {
        Some(p) => {
            let bytes = hash_file(cfg, p, &mut input_hashes)?;
            Some(Thesaurus::from_tsv(&String::from_utf8_lossy(&bytes))?)
        }
        None => None,
    };
    let (thesaurus, match_report) = build_thesaurus(&datasets, &rules, prior);
    let mut corpus = link(&datasets, &thesaurus, &rules)?;
    if with_derived {
        for d in &cfg.derived {
            corpus = apply_derived(&corpus, d, &cfg.thresholds)?;
        }
    }
    Ok(Prepared {
        datasets,
        rules,
        thesaurus,
        match_report,
        corpus,
        input_hashes,
    })
}

fn apply_derived(corpus: &LinkedCorpus, d: &Derived, thresholds: &ClassThresholds) -> Result<LinkedCorpus, Error> {
    let (system, name, series, kind) = match d {
        Derived::NormalizeByMax { source, name, cap } => (
            &source.system_id,
            name,
            transforms::normalize_by_max(&corpus.series(source)?, *cap)?,
            IndicatorKind::Numeric,
        ),
        Derived::PercentileRank { source, name } => (
            &source.system_id,
            name,
            transforms::percentile_rank(&corpus.series(source)?, PercentileMethod::Hazen)?,
            IndicatorKind::Numeric,
        ),
        Derived::MedianClasses { source, name } => (
            &source.system_id,
            name,
            transforms::distance_to_median_classes(&corpus.series(source)?, thresholds)?,
            IndicatorKind::ClassAToE,
        ),
        Derived::Quantify { source, name } => (
            &source.system_id,
            name,
            transforms::quantify_classes(&corpus.series(source)?)?,
            IndicatorKind::Numeric,
        ),
        Derived::TeachingScore {
            system,
            name,
            sources,
            min_fields,
        } => {
            let fields = sources
                .iter()
                .map(|s| corpus.series(s))
                .collect::<Result<Vec<_>, _>>()?;
            let r = IndicatorRef::new(system, name);
            (system, name, transforms::teaching_score(&fields, *min_fields, r)?, IndicatorKind::Numeric)
        }
    };
    Ok(corpus.with_derived(system, IndicatorDef::new(name, kind, true), &series)?)
}

fn file_stem(parts: &[&str]) -> String {
    parts
        .join("_")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

/// Everything the stage produces, rendered but not yet written.
pub fn run(cfg: &PipelineConfig, stage: Stage) -> Result<Vec<Artifact>, Error> {
    let prep = prepare(cfg, !matches!(stage, Stage::IngestCheck | Stage::Link))?;
    let corpus = &prep.corpus;
    let a = &cfg.analyses;
    let all = stage == Stage::All;
    let mut reports: Vec<AnalysisReport> = Vec::new();
    let mut extra: Vec<Artifact> = Vec::new();

    if stage == Stage::IngestCheck || all {
        reports.push(tables::ingest_summary(&prep.datasets));
    }
    if stage == Stage::Link || all {
        reports.push(tables::link_summary(corpus, &prep.match_report));
        reports.push(tables::candidates(&prep.match_report));
        extra.push(Artifact {
            file_name: "thesaurus.tsv".into(),
            bytes: prep.thesaurus.to_tsv().into_bytes(),
        });
        extra.push(Artifact {
            file_name: "match_report.json".into(),
            bytes: prep.match_report.to_json().into_bytes(),
        });
    }
    if stage == Stage::Overlap || (all && a.overlap) {
        reports.push(tables::overlap(&analyses::overlap_matrix(corpus)));
    }
    if stage == Stage::TopOverlap || (all && a.top_overlap.is_some()) {
        let t = a
            .top_overlap
            .as_ref()
            .ok_or_else(|| Error::Config("top-overlap needs an analyses.top_overlap section or --indicators".into()))?;
        let lists = t
            .indicators
            .iter()
            .map(|r| analyses::build_top_list(corpus, r, t.n))
            .collect::<Result<Vec<_>, _>>()?;
        let o = analyses::top_overlap(&lists);
        reports.extend(tables::top_overlap(&lists, &o));
        reports.extend(tables::unique_in_top(&analyses::unique_in_top(&lists, corpus)?));
    }
    if stage == Stage::Geo || (all && a.geo.is_some()) {
        let g = a.geo.clone().unwrap_or_default();
        reports.extend(tables::preference(&analyses::preference_table(corpus), g.top_k, g.min_count));
    }
    if stage == Stage::Missing || (all && a.missing) {
        reports.extend(tables::missing(&analyses::missing_report(corpus)?));
    }
    if stage == Stage::Skew || (all && a.skew.is_some()) {
        let s = a.skew.clone().unwrap_or_default();
        let refs: Vec<IndicatorRef> = match &s.indicators {
            Some(v) => v.clone(),
            None => corpus
                .systems()
                .iter()
                .flat_map(|m| {
                    m.indicators
                        .iter()
                        .filter(|d| d.kind != IndicatorKind::ClassAToE)
                        .map(|d| IndicatorRef::new(&m.system_id, &d.name))
                })
                .collect(),
        };
        let mut rows = Vec::new();
        for r in &refs {
            let series = corpus.series(r)?;
            let v: Vec<f64> = series.present().map(|(_, v)| v.as_f64()).collect();
            rows.push((r.to_string(), v.len(), skewness(&v, s.adjusted)));
        }
        reports.push(tables::skewness(&rows, s.adjusted));
    }
    if stage == Stage::Corr || all {
        if stage == Stage::Corr && a.corr.is_empty() {
            return Err(Error::Config("corr needs at least one analyses.corr entry".into()));
        }
        for c in &a.corr {
            let series = c
                .indicators
                .iter()
                .map(|r| corpus.series(r))
                .collect::<Result<Vec<_>, _>>()?;
            let m = correlation_matrix(&series, c.min_n, c.alpha, cfg.p_value);
            reports.push(tables::correlation(&file_stem(&["corr", &c.name]), &m));
        }
    }
    if stage == Stage::CountryCorr || all {
        if stage == Stage::CountryCorr && a.country_corr.is_empty() {
            return Err(Error::Config("country-corr needs an analyses.country_corr entry or --a/--b".into()));
        }
        for c in &a.country_corr {
            let r = analyses::per_country_correlation(corpus, &c.a, &c.b, c.min_n, cfg.p_value)?;
            let name = file_stem(&["country_corr", &c.a.to_string(), "vs", &c.b.to_string()]);
            reports.push(tables::country_correlation(&name, &r, c.alpha));
        }
    }
    if stage == Stage::ComparePair || all {
        if stage == Stage::ComparePair && a.compare_pair.is_empty() {
            return Err(Error::Config("compare-pair needs an analyses.compare_pair entry or --a/--b".into()));
        }
        for c in &a.compare_pair {
            let stem = file_stem(&["compare", &c.a.to_string(), "vs", &c.b.to_string()]);
            let d = analyses::discrepancy_lists(corpus, &c.a, &c.b, c.k, cfg.percentile)?;
            reports.push(tables::discrepancy(&format!("{stem}_discrepancy"), &d));
            let countries: Option<BTreeSet<Country>> = c.countries.as_ref().map(|v| v.iter().copied().collect());
            let label = c.label.unwrap_or(LabelRule::TopBottom(c.k));
            let points = analyses::scatter_data(corpus, &c.a, &c.b, countries.as_ref(), label, c.scale)?;
            // Point dumps are for external plotting tools and are always CSV.
            extra.push(Artifact {
                file_name: format!("{stem}_points.csv"),
                bytes: tables::scatter_points(&format!("{stem}_points"), &points).to_csv().into_bytes(),
            });
            let suffix = match c.scale {
                ScatterScale::Raw => "",
                ScatterScale::Percentile => " (percentile rank)",
            };
            let mut title = format!("{} vs {}", c.b, c.a);
            if let Some(set) = &countries {
                let names: Vec<&str> = set.iter().map(Country::as_str).collect();
                title.push_str(&format!(" [{}]", names.join(", ")));
            }
            let plot = svg::scatter_svg(
                &points,
                &format!("{}{suffix}", c.a),
                &format!("{}{suffix}", c.b),
                &title,
            )?;
            extra.push(Artifact {
                file_name: format!("{stem}.svg"),
                bytes: plot.into_bytes(),
            });
        }
    }

    let config_hash = cfg.hash();
    let mut out = Vec::new();
    for r in &mut reports {
        r.meta("config_sha256", &config_hash);
        for (p, h) in &prep.input_hashes {
            r.meta(&format!("input_sha256:{p}"), h);
        }
        out.push(Artifact {
            file_name: format!("{}.{}", r.name, cfg.format.extension()),
            bytes: r.render(cfg.format).into_bytes(),
        });
    }
    out.extend(extra);
    let mut names = BTreeSet::new();
    for a in &out {
        if !names.insert(a.file_name.as_str()) {
            return Err(Error::Config(format!("two outputs would be written to {}", a.file_name)));
        }
    }
    out.push(run_manifest(&config_hash, &prep.input_hashes, &out));
    Ok(out)
}

fn run_manifest(config_hash: &str, inputs: &BTreeMap<String, String>, outputs: &[Artifact]) -> Artifact {
    #[derive(Serialize)]
    struct Manifest<'a> {
        config_sha256: &'a str,
        inputs: &'a BTreeMap<String, String>,
        outputs: BTreeMap<&'a str, String>,
    }
    let m = Manifest {
        config_sha256: config_hash,
        inputs,
        outputs: outputs.iter().map(|a| (a.file_name.as_str(), sha256_hex(&a.bytes))).collect(),
    };
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    Artifact {
        file_name: "run_manifest.json".into(),
        bytes: s.into_bytes(),
    }
}

/// Write all artifacts into `dir`; on failure, files written so far are removed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, Error> {
    let io = |path: &Path, source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.file_name);
        if let Err(e) = fs::write(&path, &a.bytes) {
            for w in &written {
                let _ = fs::remove_file(w);
            }
            let _ = fs::remove_file(&path);
            return Err(io(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}
