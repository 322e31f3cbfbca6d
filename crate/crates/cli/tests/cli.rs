use std::path::{Path, PathBuf};
use std::process::Command;

fn bes() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bes"))
}

fn sharp_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sharp.toml")
}

fn run_into(dir: &Path, format: &str, seed: &str) -> i32 {
    bes()
        .args(["run", "--config"])
        .arg(sharp_config())
        .arg("--out")
        .arg(dir)
        .args(["--format", format, "--seed", seed, "--jobs", "2"])
        .status()
        .unwrap()
        .code()
        .unwrap()
}

#[test]
fn same_config_and_seed_give_identical_files() {
    for format in ["csv", "json", "md"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(run_into(a.path(), format, "3"), 0);
        assert_eq!(run_into(b.path(), format, "3"), 0);
        let mut names: Vec<_> = std::fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n != "run_meta.json")
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            let x = std::fs::read(a.path().join(&n)).unwrap();
            let y = std::fs::read(b.path().join(&n)).unwrap();
            assert_eq!(x, y, "{n:?} differs");
        }
    }
}

#[test]
fn report_reemits_a_saved_bundle() {
    let a = tempfile::tempdir().unwrap();
    assert_eq!(run_into(a.path(), "json", "0"), 0);
    let out = a.path().join("md");
    let status = bes()
        .args(["report", "--bundle"])
        .arg(a.path().join("bundle.json"))
        .arg("--out")
        .arg(&out)
        .args(["--format", "md"])
        .status()
        .unwrap();
    assert!(status.success());
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains("## bounds"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bes()
        .args(["bounds", "--config", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(3));

    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(sharp_config())
        .unwrap()
        .replace("m0 = 3.0", "m0 = 2.0");
    std::fs::write(&bad, text).unwrap();
    let out = bes()
        .args(["bounds", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m0 must exceed n"));

    // a numerically infeasible check fails its unit without aborting the run
    let infeasible = dir.path().join("infeasible.toml");
    let text = std::fs::read_to_string(sharp_config()).unwrap().replace(
        "K = 1.0\ntheta = 1.0\nclosed_form",
        "K = 0.0\ntheta = 0.0\nclosed_form",
    );
    std::fs::write(&infeasible, text).unwrap();
    let out = bes()
        .args(["verify", "--config"])
        .arg(&infeasible)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
