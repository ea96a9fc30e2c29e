use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unirank::ingest::{generate_synthetic_corpus, SyntheticSpec};
use unirank::model::IndicatorRef;
use unirank::pipeline::{
    self, ComparePairConfig, CountryCorrConfig, PipelineConfig, Stage, TopOverlapConfig,
};
use unirank::report::Format;
use unirank::Error;

const DEFAULT_SPEC: &str = include_str!("../data/synthetic_spec.json");

#[derive(Parser)]
#[command(name = "unirank", version, about = "Link institutions across university rankings and compare them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format; overrides the config.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Clone)]
struct PairArgs {
    /// First indicator, `system:indicator`.
    #[arg(long, requires = "b")]
    a: Option<IndicatorRef>,
    /// Second indicator, `system:indicator`.
    #[arg(long, requires = "a")]
    b: Option<IndicatorRef>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate every configured dataset.
    IngestCheck(Common),
    /// Build the thesaurus and match report.
    Link(Common),
    /// Institutional overlap between systems.
    Overlap(Common),
    /// Overlap of top-N lists, with institutions unique to one list.
    TopOverlap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        top_n: Option<usize>,
        /// Comma-separated `system:indicator` list to rank by.
        #[arg(long, value_delimiter = ',')]
        indicators: Option<Vec<IndicatorRef>>,
    },
    /// Country preference per system.
    Geo(Common),
    /// Missing-value coverage.
    Missing(Common),
    /// Skewness of indicator distributions.
    Skew(Common),
    /// Spearman correlation matrices.
    Corr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        min_n: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Spearman correlation of two indicators within each country.
    CountryCorr {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        min_n: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Percentile-rank discrepancy lists and scatterplot for indicator pairs.
    ComparePair {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        k: Option<usize>,
        /// Also copy the scatter points (CSV) to this file; needs a single pair.
        #[arg(long)]
        points_out: Option<PathBuf>,
    },
    /// Every configured analysis.
    ReportAll {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        top_n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        min_n: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Generate a seeded synthetic corpus with ground truth.
    Synth {
        /// Synthetic spec (JSON); the bundled one when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 2016)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<PipelineConfig, Error> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(f) = common.format {
        cfg.format = f;
    }
    Ok(cfg)
}

fn output_dir(common: &Common, cfg: &PipelineConfig) -> PathBuf {
    match &common.out {
        Some(p) => p.clone(),
        None => cfg.resolve(&cfg.output_dir),
    }
}

fn set_min_n_alpha(cfg: &mut PipelineConfig, min_n: Option<usize>, alpha: Option<f64>) {
    for c in &mut cfg.analyses.corr {
        c.min_n = min_n.unwrap_or(c.min_n);
        c.alpha = alpha.unwrap_or(c.alpha);
    }
    for c in &mut cfg.analyses.country_corr {
        c.min_n = min_n.unwrap_or(c.min_n);
        c.alpha = alpha.unwrap_or(c.alpha);
    }
}

fn set_k(cfg: &mut PipelineConfig, k: Option<usize>) {
    if let Some(k) = k {
        cfg.analyses.compare_pair.iter_mut().for_each(|c| c.k = k);
    }
}

fn set_top_n(cfg: &mut PipelineConfig, n: Option<usize>) {
    if let (Some(n), Some(t)) = (n, cfg.analyses.top_overlap.as_mut()) {
        t.n = n;
    }
}

fn run_stage(common: &Common, cfg: &PipelineConfig, stage: Stage) -> Result<Vec<PathBuf>, Error> {
    let artifacts = pipeline::run(cfg, stage)?;
    let dir = output_dir(common, cfg);
    pipeline::write_artifacts(&dir, &artifacts)
}

fn synth(spec: Option<&Path>, seed: u64, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let text = match spec {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read spec {}: {e}", p.display())))?,
        None => DEFAULT_SPEC.to_string(),
    };
    let spec = SyntheticSpec::from_json(&text).map_err(|e| Error::Config(e.to_string()))?;
    let corpus = generate_synthetic_corpus(seed, &spec)?;
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    corpus.write(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = corpus
        .datasets
        .iter()
        .flat_map(|d| [out.join(format!("{}.json", d.system_id())), out.join(format!("{}.csv", d.system_id()))])
        .collect();
    files.push(out.join("truth.tsv"));
    Ok(files)
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    match cli.command {
        Command::IngestCheck(c) => run_stage(&c, &load(&c)?, Stage::IngestCheck),
        Command::Link(c) => run_stage(&c, &load(&c)?, Stage::Link),
        Command::Overlap(c) => run_stage(&c, &load(&c)?, Stage::Overlap),
        Command::Geo(c) => run_stage(&c, &load(&c)?, Stage::Geo),
        Command::Missing(c) => run_stage(&c, &load(&c)?, Stage::Missing),
        Command::Skew(c) => run_stage(&c, &load(&c)?, Stage::Skew),
        Command::TopOverlap {
            common,
            top_n,
            indicators,
        } => {
            let mut cfg = load(&common)?;
            if let Some(ind) = indicators {
                cfg.analyses.top_overlap = Some(TopOverlapConfig {
                    indicators: ind,
                    n: top_n.unwrap_or(100),
                });
            }
            set_top_n(&mut cfg, top_n);
            run_stage(&common, &cfg, Stage::TopOverlap)
        }
        Command::Corr { common, min_n, alpha } => {
            let mut cfg = load(&common)?;
            set_min_n_alpha(&mut cfg, min_n, alpha);
            run_stage(&common, &cfg, Stage::Corr)
        }
        Command::CountryCorr {
            common,
            pair,
            min_n,
            alpha,
        } => {
            let mut cfg = load(&common)?;
            if let (Some(a), Some(b)) = (pair.a, pair.b) {
                cfg.analyses.country_corr = vec![CountryCorrConfig {
                    a,
                    b,
                    min_n: 11,
                    alpha: 0.001,
                }];
            }
            set_min_n_alpha(&mut cfg, min_n, alpha);
            run_stage(&common, &cfg, Stage::CountryCorr)
        }
        Command::ComparePair {
            common,
            pair,
            k,
            points_out,
        } => {
            let mut cfg = load(&common)?;
            if let (Some(a), Some(b)) = (pair.a, pair.b) {
                cfg.analyses.compare_pair = vec![ComparePairConfig {
                    a,
                    b,
                    k: 20,
                    countries: None,
                    label: None,
                    scale: unirank::analyses::ScatterScale::Percentile,
                }];
            }
            set_k(&mut cfg, k);
            if points_out.is_some() && cfg.analyses.compare_pair.len() != 1 {
                return Err(Error::Config("--points-out needs exactly one indicator pair".into()));
            }
            let mut written = run_stage(&common, &cfg, Stage::ComparePair)?;
            if let Some(dest) = points_out {
                let src = written
                    .iter()
                    .find(|p| p.to_string_lossy().ends_with("_points.csv"))
                    .cloned()
                    .expect("compare-pair always writes a point dump");
                fs::copy(&src, &dest).map_err(|e| Error::Io {
                    path: dest.clone(),
                    source: e,
                })?;
                written.push(dest);
            }
            Ok(written)
        }
        Command::ReportAll {
            common,
            top_n,
            k,
            min_n,
            alpha,
        } => {
            let mut cfg = load(&common)?;
            set_top_n(&mut cfg, top_n);
            set_k(&mut cfg, k);
            set_min_n_alpha(&mut cfg, min_n, alpha);
            run_stage(&common, &cfg, Stage::All)
        }
        Command::Synth { spec, seed, out } => synth(spec.as_deref(), seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.one_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
