use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn caal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caal")).args(args).output().expect("spawn caal")
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn features_of_constant_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("features.csv");
    let input = manifest_dir().join("tests/fixtures/constant_1000ms.csv");
    let o = caal(&["features", "--input", path(&input), "--output", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "sdnn").unwrap();
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows.iter().all(|r| r[col].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn unknown_config_key_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"classifier": {"n_trees": 5, "n_tress": 6}}"#).unwrap();
    let o = caal(&["pretrain", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("n_tress"), "{}", stderr(&o));
}

#[test]
fn missing_checkpoint_names_producer() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = caal(&["run", "--artifacts", path(&empty), "--out", path(&dir.path().join("o"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("caal pretrain"), "{}", stderr(&o));

    let o = caal(&["train-agent", "--out", path(&empty)]);
    assert!(stderr(&o).contains("caal pretrain"), "{}", stderr(&o));
}

#[test]
fn manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = manifest_dir().join("examples/configs/quick.json");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let o = caal(&[
        "--parallel", "2", "run", "--config", path(&cfg), "--policy", "random", "--out", path(&first),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = first.join("manifest.json");
    let o = caal(&["--parallel", "1", "--manifest", path(&manifest), "--out", path(&second)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["results.csv", "summary.csv", "trajectory.csv", "response_rates.csv"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn pipeline_sweep_reports_knee() {
    let dir = tempfile::tempdir().unwrap();
    let o = caal(&["pipeline-sim", "--users", "100,200,300,400,500,600", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("knee at"));
    let text = fs::read_to_string(dir.path().join("latency.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
}

#[test]
fn gen_data_writes_streams() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"scenario": {"n_pretrain_subjects": 2, "pretrain_slots_per_subject": 100,
            "pretrain_labels_per_subject": 20, "stream_length_slots": 100}}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = caal(&["gen-data", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("manifest.json").exists());
    assert!(fs::read_dir(&out).unwrap().count() > 3);
}

#[test]
fn no_subcommand_is_an_error() {
    assert!(!caal(&[]).status.success());
}

#[test]
fn compare_writes_three_policy_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = manifest_dir().join("examples/configs/quick.json");
    let out = dir.path().join("cmp");
    let o = caal(&["compare", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(out.join("summary.csv"))
        .unwrap();
    let policies: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(policies, ["random", "al_noncontext", "al_context"]);
    for f in ["forest.json", "qnet_context.json", "qnet_noncontext.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn manifest_and_subcommand_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("manifest.json");
    let o = caal(&["--manifest", path(&m), "pipeline-sim", "--out", path(dir.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--manifest"), "{}", stderr(&o));
}
