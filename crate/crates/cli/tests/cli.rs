use std::path::Path;
use std::process::{Command, Output};

use fvpad::metrics::{det_curve, ScoreSet};
use fvpad::pipeline::report_from_score_dir;

fn fvpad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fvpad")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    assert_eq!(fvpad(&[]).status.code(), Some(2));
    assert_eq!(fvpad(&["train", "--manifest", "m.csv"]).status.code(), Some(2));
    assert_eq!(fvpad(&["train", "--manifest", "m", "--out", "o", "--svm-c", "-1"]).status.code(), Some(2));
    assert_eq!(fvpad(&["eval", "--descriptor", "hog"]).status.code(), Some(2));
    assert_eq!(fvpad(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = fvpad(&["train", "--manifest", s(&missing), "--out", s(&dir.path().join("b"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not,a,manifest\n").unwrap();
    let out = fvpad(&["train", "--manifest", s(&bad), "--out", s(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pipeline_outputs_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let (data, bundle, eval, det) = (
        dir.path().join("data"),
        dir.path().join("bundle"),
        dir.path().join("eval"),
        dir.path().join("det"),
    );
    let ok = |args: &[&str]| {
        let out = fvpad(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    ok(&["synth", "--subjects", "6", "--width", "96", "--height", "64", "--out", s(&data)]);
    let manifest = data.join("manifest.csv");
    let split = ["--train-subjects", "3", "--test-subjects", "3"];
    let mut args = vec!["train", "--manifest", s(&manifest), "--out", s(&bundle), "--descriptor", "lpq"];
    args.extend(split);
    ok(&args);

    // A second train into the same non-empty directory must refuse.
    assert_eq!(fvpad(&args).status.code(), Some(3));

    let printed = ok(&["eval", "--manifest", s(&manifest), "--bundle", s(&bundle), "--out", s(&eval)]);
    let report = std::fs::read_to_string(eval.join("report.txt")).unwrap();
    assert_eq!(printed, report);
    // The report is a pure function of the score files.
    assert_eq!(report_from_score_dir(&eval, "lpq / proposed").unwrap(), report);
    assert!(report.contains("normal,") && report.contains("diffuse,"));

    let fused = eval.join("fused.csv");
    let scores = ScoreSet::read_csv(&fused).unwrap();
    assert_eq!(scores.len(), 12);
    ok(&["det", "--out", s(&det), s(&fused)]);
    let table = std::fs::read_to_string(det.join("fused.det.csv")).unwrap();
    assert_eq!(table, det_curve(&scores).unwrap().to_table());
    assert!(std::fs::read_to_string(det.join("det.svg")).unwrap().starts_with("<svg"));

    let features = dir.path().join("features.csv");
    ok(&["extract", "--manifest", s(&manifest), "--out", s(&features), "--descriptor", "lbp", "--mode", "baseline"]);
    let text = std::fs::read_to_string(&features).unwrap();
    assert_eq!(text.lines().count(), 1 + 72);
    assert_eq!(text.lines().nth(1).unwrap().split(',').nth(4).unwrap().split(' ').count(), 59);

    let decomposed = dir.path().join("dec");
    let image = data.join("images").join("s001_s1_i1_bonafide.pgm");
    ok(&["decompose", "--image", s(&image), "--out", s(&decomposed)]);
    for suffix in ["normal.pfm", "albedo.pgm", "shading.pgm", "diffuse.pgm"] {
        assert!(decomposed.join(format!("s001_s1_i1_bonafide_{suffix}")).is_file(), "{suffix}");
    }
}
