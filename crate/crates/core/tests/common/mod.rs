//! Helpers shared by the golden and acceptance tests.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use bes_core::config::Format;
use bes_core::report::{emit, ReportBundle};
use serde_json::Value;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Every key path with the set of JSON types seen there. Map keys that are
/// data (model names, parameters) collapse to `*`.
fn walk(v: &Value, path: String, out: &mut BTreeMap<String, BTreeSet<&'static str>>) {
    out.entry(path.clone()).or_default().insert(kind(v));
    match v {
        Value::Object(m) => {
            let data_keys = path.ends_with(".certificates")
                || path.ends_with(".models")
                || path.ends_with(".params");
            for (k, x) in m {
                let key = if data_keys { "*" } else { k.as_str() };
                walk(x, format!("{path}.{key}"), out);
            }
        }
        Value::Array(a) => {
            for x in a {
                walk(x, format!("{path}[]"), out);
            }
        }
        _ => {}
    }
}

/// `(csv_headers.txt, bundle_schema.txt)` contents for a bundle.
pub fn schema_texts(bundle: &ReportBundle) -> (String, String) {
    let dir = tempfile::tempdir().unwrap();
    let mut headers = String::new();
    let mut files = emit(bundle, Format::Csv, dir.path()).unwrap();
    files.sort();
    for f in files
        .iter()
        .filter(|f| f.extension().is_some_and(|e| e == "csv"))
    {
        let text = std::fs::read_to_string(f).unwrap();
        let first = text.lines().next().unwrap_or_default();
        headers.push_str(&format!(
            "{}: {first}\n",
            f.file_name().unwrap().to_string_lossy()
        ));
    }

    emit(bundle, Format::Json, dir.path()).unwrap();
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bundle.json")).unwrap())
            .unwrap();
    let mut schema = BTreeMap::new();
    walk(&v, "$".into(), &mut schema);
    let text = schema
        .iter()
        .map(|(p, k)| format!("{p}: {}\n", k.iter().copied().collect::<Vec<_>>().join("|")))
        .collect();
    (headers, text)
}

pub fn read_golden(name: &str) -> String {
    let path = golden_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
