use std::path::PathBuf;

use thiserror::Error;

use crate::analyses::AnalysisError;
use crate::entity_link::LinkError;
use crate::ingest::IngestError;
use crate::report::svg::NonFinitePoint;
use crate::stats::StatsError;
use crate::transforms::TransformError;

/// Any failure of a pipeline run, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("entity_link: {0}")]
    Link(#[from] LinkError),
    #[error("transforms: {0}")]
    Transform(#[from] TransformError),
    #[error("stats: {0}")]
    Stats(#[from] StatsError),
    #[error("analyses: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("cli_report: {0}")]
    Plot(#[from] NonFinitePoint),
    #[error("config: {0}")]
    Config(String),
    #[error("io: cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// 1 analysis error, 2 usage or configuration error, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } | Error::Ingest(IngestError::Io { .. }) => 3,
            _ => 1,
        }
    }

    /// The message on a single line.
    pub fn one_line(&self) -> String {
        let mut s = self.to_string();
        let mut src = std::error::Error::source(self);
        while let Some(e) = src {
            let m = e.to_string();
            if !s.contains(&m) {
                s.push_str(": ");
                s.push_str(&m);
            }
            src = e.source();
        }
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}
