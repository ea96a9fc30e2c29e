//! Parsing of ranking dumps: a JSON manifest describing the system and a CSV
//! table with one row per institution.

pub mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::country::Country;
use crate::model::{is_missing_literal, IndicatorDef, SystemManifest, Value};

pub use synthetic::{generate_synthetic_corpus, SyntheticCorpus, SyntheticSpec};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Validation(String),
}

/// One institution row of a ranking dump.
#[derive(Debug, Clone, PartialEq)]
pub struct InstitutionRecord {
    pub local_id: String,
    pub raw_name: String,
    pub country: Country,
    /// Non-missing values only; an absent key means the value is missing.
    pub values: BTreeMap<String, Value>,
}

impl InstitutionRecord {
    pub fn value(&self, indicator: &str) -> Option<Value> {
        self.values.get(indicator).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    pub manifest: SystemManifest,
    pub records: Vec<InstitutionRecord>,
}

impl RankingDataset {
    pub fn system_id(&self) -> &str {
        &self.manifest.system_id
    }

    /// Number of (record, declared indicator) cells without a value.
    pub fn missing_count(&self) -> usize {
        let declared = self.manifest.indicators.len();
        self.records
            .iter()
            .map(|r| declared - r.values.len())
            .sum()
    }

    /// Check every dataset invariant; used by the loader and the generator.
    pub fn validate(&self) -> Result<(), IngestError> {
        validate_manifest(&self.manifest)?;
        let mut seen = HashSet::new();
        for rec in &self.records {
            if rec.local_id.trim().is_empty() {
                return Err(IngestError::Validation("empty local_id".into()));
            }
            if !seen.insert(rec.local_id.as_str()) {
                return Err(IngestError::Validation(format!(
                    "duplicate local_id '{}'",
                    rec.local_id
                )));
            }
            if rec.raw_name.trim().is_empty() {
                return Err(IngestError::Validation(format!(
                    "record '{}' has an empty name",
                    rec.local_id
                )));
            }
            for (name, value) in &rec.values {
                let def = self.manifest.indicator(name).ok_or_else(|| {
                    IngestError::Validation(format!("undeclared indicator '{name}'"))
                })?;
                if value.kind() != def.kind {
                    return Err(IngestError::Validation(format!(
                        "record '{}': value for '{name}' is not of kind {}",
                        rec.local_id, def.kind
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn validate_manifest(manifest: &SystemManifest) -> Result<(), IngestError> {
    let id = &manifest.system_id;
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == ':') {
        return Err(IngestError::Validation(format!(
            "system_id '{id}' must be a non-empty token without whitespace or ':'"
        )));
    }
    let mut names = HashSet::new();
    for def in &manifest.indicators {
        if def.name.trim().is_empty() {
            return Err(IngestError::Validation(format!(
                "system '{id}' declares an indicator with an empty name"
            )));
        }
        if matches!(def.name.as_str(), "local_id" | "name" | "country") {
            return Err(IngestError::Validation(format!(
                "indicator name '{}' collides with a fixed column",
                def.name
            )));
        }
        if !names.insert(def.name.as_str()) {
            return Err(IngestError::Validation(format!(
                "system '{id}' declares indicator '{}' twice",
                def.name
            )));
        }
    }
    Ok(())
}

pub fn parse_manifest(text: &str, origin: &str) -> Result<SystemManifest, IngestError> {
    let manifest: SystemManifest = serde_json::from_str(text).map_err(|e| IngestError::Parse {
        origin: origin.to_string(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    validate_manifest(&manifest)?;
    Ok(manifest)
}

/// Parse a data table against an already-validated manifest.
pub fn parse_table(
    manifest: SystemManifest,
    text: &str,
    origin: &str,
) -> Result<RankingDataset, IngestError> {
    let parse_err = |line: u64, message: String| IngestError::Parse {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(csv_line(&e).unwrap_or(1), e.to_string()))?
        .clone();

    let fixed = ["local_id", "name", "country"];
    for (i, want) in fixed.iter().enumerate() {
        if headers.get(i) != Some(*want) {
            return Err(parse_err(
                1,
                format!("header must start with local_id,name,country (column {} is {:?})", i + 1, headers.get(i)),
            ));
        }
    }
    let mut columns: Vec<&IndicatorDef> = Vec::new();
    for col in headers.iter().skip(fixed.len()) {
        let def = manifest.indicator(col).ok_or_else(|| {
            IngestError::Validation(format!(
                "{origin}: column '{col}' is not an indicator declared by system '{}'",
                manifest.system_id
            ))
        })?;
        if columns.iter().any(|d| d.name == col) {
            return Err(IngestError::Validation(format!("{origin}: column '{col}' appears twice")));
        }
        columns.push(def);
    }
    for def in &manifest.indicators {
        if !columns.iter().any(|d| d.name == def.name) {
            return Err(IngestError::Validation(format!(
                "{origin}: declared indicator '{}' has no column",
                def.name
            )));
        }
    }

    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(csv_line(&e).unwrap_or(0), e.to_string()))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let local_id = row[0].trim().to_string();
        if local_id.is_empty() {
            return Err(parse_err(line, "empty local_id".into()));
        }
        if !seen.insert(local_id.clone()) {
            return Err(IngestError::Validation(format!(
                "{origin}:{line}: duplicate local_id '{local_id}'"
            )));
        }
        let raw_name = row[1].to_string();
        if raw_name.trim().is_empty() {
            return Err(IngestError::Validation(format!(
                "{origin}:{line}: record '{local_id}' has an empty name"
            )));
        }
        let country = Country::parse(&row[2])
            .map_err(|e| IngestError::Validation(format!("{origin}:{line}: {e}")))?;
        let mut values = BTreeMap::new();
        for (def, cell) in columns.iter().zip(row.iter().skip(fixed.len())) {
            if is_missing_literal(cell) {
                continue;
            }
            let v = Value::parse(cell, def.kind)
                .map_err(|m| parse_err(line, format!("column '{}': {m}", def.name)))?;
            values.insert(def.name.clone(), v);
        }
        records.push(InstitutionRecord {
            local_id,
            raw_name,
            country,
            values,
        });
    }
    Ok(RankingDataset { manifest, records })
}

fn csv_line(e: &csv::Error) -> Option<u64> {
    e.position().map(|p| p.line())
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_dataset(manifest_path: &Path, table_path: &Path) -> Result<RankingDataset, IngestError> {
    let manifest = parse_manifest(&read(manifest_path)?, &manifest_path.display().to_string())?;
    parse_table(manifest, &read(table_path)?, &table_path.display().to_string())
}

pub fn manifest_to_json(manifest: &SystemManifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    s
}

/// Serialize the data table. Missing values are written as empty cells.
pub fn table_to_csv(dataset: &RankingDataset) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let mut header = vec!["local_id", "name", "country"];
    header.extend(dataset.manifest.indicators.iter().map(|d| d.name.as_str()));
    w.write_record(&header).expect("in-memory write");
    for rec in &dataset.records {
        let mut row = vec![
            rec.local_id.clone(),
            rec.raw_name.clone(),
            rec.country.to_string(),
        ];
        row.extend(
            dataset
                .manifest
                .indicators
                .iter()
                .map(|d| rec.value(&d.name).map(|v| v.to_cell()).unwrap_or_default()),
        );
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Write `<system_id>.json` and `<system_id>.csv` into `dir`; returns both paths.
pub fn write_dataset(dataset: &RankingDataset, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let m = dir.join(format!("{}.json", dataset.system_id()));
    let t = dir.join(format!("{}.csv", dataset.system_id()));
    fs::write(&m, manifest_to_json(&dataset.manifest))?;
    fs::write(&t, table_to_csv(dataset))?;
    Ok((m, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IndicatorKind, PerfClass};

    const MANIFEST: &str = r#"{
  "system_id": "demo",
  "display_name": "Demo Ranking",
  "year": 2016,
  "indicators": [
    {"name": "citations", "kind": "numeric", "higher_is_better": true},
    {"name": "world_rank", "kind": "rank", "higher_is_better": false},
    {"name": "teaching", "kind": "class_A_to_E", "higher_is_better": true}
  ]
}"#;

    fn manifest() -> SystemManifest {
        parse_manifest(MANIFEST, "demo.json").unwrap()
    }

    #[test]
    fn loads_well_formed_table() {
        let csv = "local_id,name,country,citations,world_rank,teaching\n\
                   1,Univ. of Roma,IT,55.5,3,A\n\
                   2,\"Harvard, University\",US,99,1,B\n\
                   3,Kyoto U,Japan,70.25,2,C\n";
        let ds = parse_table(manifest(), csv, "t.csv").unwrap();
        assert_eq!(ds.records.len(), 3);
        assert_eq!(ds.missing_count(), 0);
        assert_eq!(ds.records[1].raw_name, "Harvard, University");
        assert_eq!(ds.records[2].country.as_str(), "JP");
        assert_eq!(ds.records[0].value("teaching"), Some(Value::Class(PerfClass::A)));
        assert_eq!(ds.records[0].value("world_rank"), Some(Value::Rank(3)));
    }

    #[test]
    fn empty_cell_is_missing_not_zero() {
        let csv = "local_id,name,country,citations,world_rank,teaching\n\
                   1,A,IT,,3,NA\n2,B,US,0,n/a,B\n";
        let ds = parse_table(manifest(), csv, "t.csv").unwrap();
        assert_eq!(ds.records[0].value("citations"), None);
        assert_eq!(ds.records[1].value("citations"), Some(Value::Number(0.0)));
        assert_eq!(ds.missing_count(), 3);
    }

    #[test]
    fn unknown_country_is_rejected() {
        let csv = "local_id,name,country,citations,world_rank,teaching\n1,A,XX,1,1,A\n";
        let err = parse_table(manifest(), csv, "t.csv").unwrap_err();
        assert!(matches!(err, IngestError::Validation(_)));
        assert!(err.to_string().contains("XX"), "{err}");
    }

    #[test]
    fn duplicate_local_id_is_rejected() {
        let csv = "local_id,name,country,citations,world_rank,teaching\n1,A,IT,1,1,A\n1,B,IT,2,2,B\n";
        let err = parse_table(manifest(), csv, "t.csv").unwrap_err();
        assert!(matches!(err, IngestError::Validation(_)));
        assert!(err.to_string().contains("duplicate local_id"));
    }

    #[test]
    fn undeclared_column_is_rejected() {
        let csv = "local_id,name,country,citations,world_rank,teaching,income\n1,A,IT,1,1,A,5\n";
        let err = parse_table(manifest(), csv, "t.csv").unwrap_err();
        assert!(matches!(err, IngestError::Validation(_)));
        assert!(err.to_string().contains("income"));
    }

    #[test]
    fn malformed_cell_reports_line() {
        let csv = "local_id,name,country,citations,world_rank,teaching\n1,A,IT,1,1,A\n2,B,IT,abc,2,B\n";
        match parse_table(manifest(), csv, "t.csv").unwrap_err() {
            IngestError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "local_id,name,country,citations,world_rank,teaching\n1,A,IT,1\n";
        match parse_table(manifest(), ragged, "t.csv").unwrap_err() {
            IngestError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_manifest_reports_line() {
        let err = parse_manifest("{\n \"system_id\": \"x\",\n oops\n}", "m.json").unwrap_err();
        match err {
            IngestError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let dup = r#"{"system_id":"x","display_name":"X","year":1,"indicators":[
            {"name":"a","kind":"numeric","higher_is_better":true},
            {"name":"a","kind":"rank","higher_is_better":false}]}"#;
        assert!(matches!(parse_manifest(dup, "m.json"), Err(IngestError::Validation(_))));
    }

    #[test]
    fn serialize_then_load_is_identity() {
        let csv = "local_id,name,country,citations,world_rank,teaching\n\
                   1,\"Quote \"\"Q\"\" U\",IT,0.1,3,\n2,B,GB,,1,E\n";
        let ds = parse_table(manifest(), csv, "t.csv").unwrap();
        let again = parse_table(
            parse_manifest(&manifest_to_json(&ds.manifest), "m").unwrap(),
            &table_to_csv(&ds),
            "t2",
        )
        .unwrap();
        assert_eq!(ds, again);
        assert_eq!(table_to_csv(&ds), table_to_csv(&again));
        assert_eq!(ds.manifest.indicators[2].kind, IndicatorKind::ClassAToE);
    }
}
