//! Schema stability of emitted reports. Set `UPDATE_GOLDEN=1` to rewrite.

mod common;

use bes_core::config::{load_config, Format};
use bes_core::report::{emit, run};
use common::{golden_dir, read_golden, schema_texts};

fn check_golden(name: &str, actual: &str) {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_dir().join(name), actual).unwrap();
        return;
    }
    assert_eq!(
        actual,
        read_golden(name),
        "{name} drifted; rerun with UPDATE_GOLDEN=1 if intended"
    );
}

#[test]
fn csv_headers_and_json_schema() {
    let cfg = load_config(golden_dir().join("schema.toml")).unwrap();
    let (headers, schema) = schema_texts(&run(&cfg).unwrap());
    check_golden("csv_headers.txt", &headers);
    check_golden("bundle_schema.txt", &schema);
}

#[test]
fn bounds_csv_header_is_fixed() {
    let cfg = load_config(golden_dir().join("schema.toml")).unwrap();
    let bundle = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit(&bundle, Format::Csv, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "n,K,theta,m0,cheng,eq_2_3,optimized"
    );
}
