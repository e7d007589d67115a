use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

fn afb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afb"))
        .args(args)
        .env_remove("AFB_DATA_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A desk-sized synthetic corpus shared by the tests that train.
fn corpus() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("corpus");
        let o = afb(&["synth", "--preset", "desk", "--seed", "3", "--out", root.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        dir
    })
    .path()
}

#[test]
fn power_reports_the_typical_to_tiny_ratio() {
    let o = afb(&["power", "--a", "typical", "--b", "tiny"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("ratio 33.60"), "{text}");
    assert!(text.contains("1344000"), "{text}");
}

#[test]
fn design_lists_every_channel() {
    let o = afb(&["design"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.contains(" Hz")).collect();
    assert_eq!(lines.len(), 24, "{text}");
    assert!(lines[0].contains("100.00") && lines[23].contains("7000.00"), "{text}");

    let o = afb(&["design", "--n", "4", "--fmax", "8000"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("inactive"));
}

#[test]
fn invalid_parameters_exit_with_usage_status() {
    let o = afb(&["design", "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_filters"), "{}", stderr(&o));

    let o = afb(&["power", "--a", "3,100,0"]);
    assert_eq!(o.status.code(), Some(2));

    let o = afb(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[filterbank]\nnum_filters = 12\n").unwrap();
    let o = afb(&["design", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("num_filters"), "{}", stderr(&o));
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["design", "extract", "power", "splits", "train", "eval", "sweep", "compare", "plot", "synth"] {
        let o = afb(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}

#[test]
fn missing_corpus_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = afb(&["splits", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("AFB_DATA_ROOT") || stderr(&o).contains("root"), "{}", stderr(&o));
}

#[test]
fn extract_writes_a_spectrogram() {
    let root = corpus().join("corpus");
    let clip = std::fs::read_dir(root.join("yes")).unwrap().next().unwrap().unwrap().path();
    let out = tempfile::tempdir().unwrap();
    let o = afb(&[
        "extract",
        "--clip",
        clip.to_str().unwrap(),
        "--bank",
        "tiny",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = std::fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".afbs")), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with(".svg")), "{names:?}");
}

#[test]
fn training_and_sweeps_are_reproducible_from_the_seed() {
    let root = corpus().join("corpus");
    let root = root.to_str().unwrap();
    let run = |name: &str, seed: &str| {
        let out = corpus().join(name);
        let o = afb(&[
            "sweep", "--root", root, "--seed", seed, "--values", "1,10", "--trials", "1", "--bank", "tiny", "--epochs", "1",
            "--train-preset", "desk", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let a = run("sweep-a", "4");
    let b = run("sweep-b", "4");
    let results = std::fs::read(a.join("results.csv")).unwrap();
    assert_eq!(results, std::fs::read(b.join("results.csv")).unwrap());
    let text = String::from_utf8(results).unwrap();
    assert!(text.starts_with("sweep_param,point_value,trial,seed,accuracy,relative_power,ci_low,ci_high\n"));
    assert_eq!(text.lines().count(), 3);
    assert!(a.join("sweep_n_filters.svg").exists());

    let model = corpus().join("model");
    let o = afb(&[
        "train", "--root", root, "--seed", "4", "--bank", "tiny", "--epochs", "1", "--train-preset", "desk", "--out",
        model.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let checkpoint = std::fs::read(model.join("model.afbm")).unwrap();
    assert_eq!(&checkpoint[..4], b"AFBM");
    let report = corpus().join("eval");
    let o = afb(&["eval", "--model", model.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(report.join("confusion.csv").exists() && report.join("confusion.svg").exists());
}
