use std::path::Path;
use std::process::{Command, Output};

fn moseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moseg"))
        .args(args)
        .env_remove("MOSEG_JOBS")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_then_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    let out = moseg(&["synth", "--out", arg(&d), "--objects", "2"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let config = d.join("config");
    assert!(config.is_file());

    let out = moseg(&["pipeline", "--config", arg(&config)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("mean_jaccard=")));
    let o = d.join("out");
    for f in [
        "trajectories.trj",
        "graph.grf",
        "gru.grup",
        "graph_learned.grf",
        "labels.spl",
        "report.txt",
        "metrics.txt",
    ] {
        assert!(o.join(f).is_file(), "{f}");
    }
    for t in 0..12 {
        assert!(o.join(format!("dense/synth_{t:05}.pgm")).is_file());
        assert!(o.join(format!("dense/synth_{t:05}.ppm")).is_file());
        assert!(o.join(format!("sparse/synth_{t:05}.pgm")).is_file());
    }
}

#[test]
fn translational_run_finds_both_objects() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    assert!(moseg(&["synth", "--out", arg(&d)]).status.success());
    let out = moseg(&[
        "pipeline",
        "--config",
        arg(&d.join("config")),
        "--set",
        "cost_model=translational",
        "--jobs",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.lines().any(|l| l == "extracted_objects=2"),
        "{stdout}"
    );
}

#[test]
fn missing_flow_dir_names_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    assert!(moseg(&["synth", "--out", arg(&d)]).status.success());
    std::fs::remove_dir_all(d.join("flow_fwd")).unwrap();
    let out = moseg(&["pipeline", "--config", arg(&d.join("config"))]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr
        .lines()
        .find(|l| l.starts_with("error "))
        .expect("error line");
    assert!(line.starts_with("error stage=track kind=io msg="), "{line}");
    assert!(line.contains("flow_fwd"));
}

#[test]
fn bad_override_is_a_config_error() {
    let out = moseg(&["track", "--set", "sampling_step=zero"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("stage=config kind=config"), "{stderr}");
}

#[test]
fn stages_rerun_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    assert!(moseg(&["synth", "--out", arg(&d), "--objects", "1"])
        .status
        .success());
    let config = d.join("config");
    let run = |jobs: &str| {
        let out = moseg(&["pipeline", "--config", arg(&config), "--jobs", jobs]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        read_tree(&d.join("out"))
    };
    let first = run("1");
    let second = run("3");
    assert_eq!(first.len(), second.len());
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a.0, b.0);
        assert!(a.1 == b.1, "{} differs", a.0);
    }

    // single stages replayed from their inputs alone
    let labels = std::fs::read(d.join("out/labels.spl")).unwrap();
    assert!(moseg(&["cluster", "--config", arg(&config)])
        .status
        .success());
    assert_eq!(std::fs::read(d.join("out/labels.spl")).unwrap(), labels);
    let map = std::fs::read(d.join("out/dense/synth_00004.pgm")).unwrap();
    assert!(
        moseg(&["densify", "--config", arg(&config), "--lambda", "50"])
            .status
            .success()
    );
    assert_eq!(
        std::fs::read(d.join("out/dense/synth_00004.pgm")).unwrap(),
        map
    );
}
