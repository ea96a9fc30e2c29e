mod common;

use std::fs;

use unirank::ingest::{
    generate_synthetic_corpus, load_dataset, manifest_to_json, parse_manifest, parse_table, table_to_csv, IngestError,
};
use unirank::model::{IndicatorKind, PerfClass, Value};

const MANIFEST: &str = r#"{
  "system_id": "demo",
  "display_name": "Demo",
  "year": 2016,
  "indicators": [
    {"name": "score", "kind": "numeric", "higher_is_better": true},
    {"name": "rank", "kind": "rank", "higher_is_better": false},
    {"name": "teaching", "kind": "class_A_to_E", "higher_is_better": true}
  ]
}"#;

fn table(body: &str) -> Result<unirank::ingest::RankingDataset, IngestError> {
    let m = parse_manifest(MANIFEST, "demo.json").unwrap();
    parse_table(m, &format!("local_id,name,country,score,rank,teaching\n{body}"), "demo.csv")
}

#[test]
fn bundled_corpus_loads_and_round_trips_byte_for_byte() {
    let dir = common::data_dir().join("corpus");
    for (sys, n) in [("arwu", 500), ("leiden", 840), ("qs", 900), ("the", 800), ("umr", 1300)] {
        let m = dir.join(format!("{sys}.json"));
        let t = dir.join(format!("{sys}.csv"));
        let ds = load_dataset(&m, &t).unwrap();
        assert_eq!(ds.records.len(), n, "{sys}");
        assert_eq!(table_to_csv(&ds), fs::read_to_string(&t).unwrap(), "{sys}");
        assert_eq!(manifest_to_json(&ds.manifest), fs::read_to_string(&m).unwrap(), "{sys}");
    }
}

#[test]
fn bundled_corpus_is_the_seeded_generator_output() {
    let sc = generate_synthetic_corpus(2016, &common::bundled_spec()).unwrap();
    let dir = common::data_dir().join("corpus");
    for ds in &sc.datasets {
        let on_disk = fs::read_to_string(dir.join(format!("{}.csv", ds.system_id()))).unwrap();
        assert_eq!(table_to_csv(ds), on_disk, "{}", ds.system_id());
    }
    assert_eq!(sc.truth_tsv(), fs::read_to_string(dir.join("truth.tsv")).unwrap());
}

#[test]
fn values_parse_by_kind() {
    let ds = table("d1,Alpha University,US,12.5,3,B\n").unwrap();
    let r = &ds.records[0];
    assert_eq!(r.value("score"), Some(Value::Number(12.5)));
    assert_eq!(r.value("rank"), Some(Value::Rank(3)));
    assert_eq!(r.value("teaching"), Some(Value::Class(PerfClass::B)));
    assert_eq!(ds.manifest.indicator("teaching").unwrap().kind, IndicatorKind::ClassAToE);
}

#[test]
fn missing_literals_are_missing_not_zero() {
    let ds = table("d1,Alpha,US,,NA,n/a\nd2,Beta,GB,0,1,A\nd3,Gamma,DE,na,,C\n").unwrap();
    assert_eq!(ds.missing_count(), 5);
    assert!(ds.records[0].values.is_empty());
    assert_eq!(ds.records[1].value("score"), Some(Value::Number(0.0)));
    assert_eq!(ds.records[2].value("score"), None);
}

#[test]
fn unknown_country_is_rejected_with_its_line() {
    let err = table("d1,Alpha,US,1,1,A\nd2,Beta,XX,1,2,A\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("demo.csv:3"), "{msg}");
    assert!(msg.contains("XX"), "{msg}");
}

#[test]
fn malformed_rows_are_rejected() {
    assert!(table("d1,Alpha,US,abc,1,A\n").unwrap_err().to_string().contains("score"));
    assert!(table("d1,Alpha,US,1,1.5,A\n").is_err());
    assert!(table("d1,Alpha,US,1,1,F\n").is_err());
    assert!(table("d1,Alpha,US,1,1,A\nd1,Beta,US,2,2,B\n").unwrap_err().to_string().contains("duplicate"));
    assert!(table("d1, ,US,1,1,A\n").is_err());
    assert!(table(",Alpha,US,1,1,A\n").is_err());
}

#[test]
fn header_must_match_the_manifest() {
    let m = parse_manifest(MANIFEST, "demo.json").unwrap();
    let err = parse_table(m.clone(), "local_id,name,country,score,rank\nd1,A,US,1,1\n", "t.csv").unwrap_err();
    assert!(err.to_string().contains("teaching"));
    let err = parse_table(m.clone(), "local_id,name,country,score,rank,teaching,extra\n", "t.csv").unwrap_err();
    assert!(err.to_string().contains("extra"));
    assert!(parse_table(m, "name,local_id,country,score,rank,teaching\n", "t.csv").is_err());
}

#[test]
fn manifest_errors() {
    assert!(parse_manifest("{", "m.json").is_err());
    let bad_id = MANIFEST.replace("\"demo\"", "\"de mo\"");
    assert!(parse_manifest(&bad_id, "m.json").is_err());
    let dup = MANIFEST.replace("\"rank\", \"kind\"", "\"score\", \"kind\"");
    assert!(parse_manifest(&dup, "m.json").is_err());
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_dataset(&dir.path().join("none.json"), &dir.path().join("none.csv")).unwrap_err();
    assert!(matches!(err, IngestError::Io { .. }));
    assert!(err.to_string().contains("none.json"));
}
