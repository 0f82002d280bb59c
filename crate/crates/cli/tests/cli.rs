use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn recon(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recon"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth_corpus(root: &Path, k: &str) {
    let out = recon(&["synth", "--out", "corpus", "--count", "4", "--k", k, "--seed", "11"], root);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(recon(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(recon(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one_and_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), "1");
    let cases: [&[&str]; 5] = [
        &["search", "--corpus", "corpus", "--out", "o", "--width", "0"],
        &["search", "--corpus", "corpus", "--out", "o", "--strategy", "annealing"],
        &["search", "--corpus", "corpus", "--out", "o", "--wr", "-1"],
        &["search", "--corpus", "corpus"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = recon(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    let out = recon(&["search", "--corpus", "corpus", "--out", "o", "--temperature", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--temperature"));
}

#[test]
fn data_errors_exit_two_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = recon(&["search", "--corpus", "missing", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    synth_corpus(dir.path(), "1");
    fs::write(dir.path().join("corpus/case-0002/initial.json"), "{ not json").unwrap();
    let out = recon(&["search", "--corpus", "corpus", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("case-0002/initial.json"));

    // the raster scorer needs score rasters that synth does not write
    let out = recon(&["search", "--corpus", "corpus", "--out", "o", "--scorer", "raster"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corner_score.pgm"));
}

#[test]
fn uncorrupted_corpus_is_left_alone() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth_corpus(root, "0");
    let out = recon(&["search", "--corpus", "corpus", "--out", "pred", "--strategy", "beam", "--width", "5", "--depth", "12"], root);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 4);
    for case in ["case-0000", "case-0001", "case-0002", "case-0003"] {
        let pred = fs::read_to_string(root.join("pred").join(case).join("pred.json")).unwrap();
        let input = fs::read_to_string(root.join("corpus").join(case).join("initial.json")).unwrap();
        assert_eq!(pred, input);
    }
    let out = recon(&["eval", "--pred", "pred", "--gt", "corpus", "--out", "eval"], root);
    assert!(out.status.success());
    let report = fs::read_to_string(root.join("eval/report.txt")).unwrap();
    for level in ["corner", "edge", "region"] {
        assert!(report.contains(&format!("{level}.f1 1.000000")), "{report}");
    }
}

#[test]
fn eval_of_ground_truth_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth_corpus(root, "3");
    let out = recon(&["eval", "--pred", "corpus", "--pred-name", "gt.json", "--gt", "corpus", "--out", "eval"], root);
    assert!(out.status.success());
    let line: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    for key in ["corner_f1", "edge_f1", "region_f1"] {
        assert_eq!(line[key], 1.0);
    }
}

#[test]
fn repair_improves_corrupted_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth_corpus(root, "2");
    assert!(recon(&["search", "--corpus", "corpus", "--out", "pred", "--profile", "nauata"], root).status.success());
    let before = recon(&["eval", "--pred", "corpus", "--pred-name", "initial.json", "--gt", "corpus", "--out", "e0"], root);
    let after = recon(&["eval", "--pred", "pred", "--gt", "corpus", "--out", "e1"], root);
    let f1 = |o: &Output| serde_json::from_str::<serde_json::Value>(stdout(o).trim()).unwrap()["edge_f1"].as_f64().unwrap();
    assert!(f1(&after) >= f1(&before));
    assert_eq!(f1(&after), 1.0);
}

#[test]
fn manifest_records_outputs_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth_corpus(root, "1");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("corpus/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "synth");
    assert_eq!(manifest["outputs"].as_object().unwrap().len(), 4 * 6);
    assert!(manifest["outputs"]["case-0000/gt.json"].as_str().unwrap().len() == 64);

    let out = recon(&["replay", "corpus/manifest.json", "--out", "again"], root);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(root.join("corpus/case-0003/meta.json")).unwrap(),
        fs::read(root.join("again/case-0003/meta.json")).unwrap()
    );
    // replaying into a non-empty directory is refused
    let out = recon(&["replay", "corpus/manifest.json", "--out", "again"], root);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn label_render_and_score_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth_corpus(root, "2");
    let g = "corpus/case-0001/initial.json";
    let gt = "corpus/case-0001/gt.json";
    assert!(recon(&["label", "--graph", g, "--gt", gt, "--out", "label"], root).status.success());
    for f in ["labels.json", "corner_target.pgm", "edge_target.pgm", "manifest.json"] {
        assert!(root.join("label").join(f).is_file(), "{f}");
    }
    assert!(recon(&["render", "--graph", g, "--gt", gt, "--out", "render"], root).status.success());
    let svg = fs::read_to_string(root.join("render/graph.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("#d62728"));

    // target rasters double as score rasters; where primitives overlap the
    // incorrect label wins, so pooling never exceeds the exact rewards
    fs::copy(root.join("label/corner_target.pgm"), root.join("corpus/case-0001/corner_score.pgm")).unwrap();
    fs::copy(root.join("label/edge_target.pgm"), root.join("corpus/case-0001/edge_score.pgm")).unwrap();
    let out = recon(&["score", "--graph", g, "--case", "corpus/case-0001", "--scorer", "raster", "--out", "score"], root);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let oracle = recon(&["score", "--graph", g, "--case", "corpus/case-0001", "--out", "score-oracle"], root);
    let total = |o: &Output| serde_json::from_str::<serde_json::Value>(stdout(o).trim()).unwrap()["total"].as_f64().unwrap();
    assert!(total(&out) <= total(&oracle) + 1e-9);
}
