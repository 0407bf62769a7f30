use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use marl_lab_cli::{parse_config, preset, PRESETS};

fn marl_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marl-lab"))
        .args(args)
        .env("MARL_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_ARENA: &str = r#"
mode = "arena"
[arena]
game = "matching-pennies"
algo = "wpl"
steps = 300
runs = 2
init = [[0.1, 0.9], [0.9, 0.1]]
"#;

#[test]
fn arena_csv_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_ARENA);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = marl_lab(&[
            "--config",
            &cfg,
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = fs::read(a.join("trajectory.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("trajectory.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("step,run,player,action,prob,sampled,reward")
    );
    // 300 steps x 2 runs x 2 players x 2 actions.
    assert_eq!(lines.count(), 2400);

    let c = tmp.path().join("c");
    marl_lab(&[
        "--config",
        &cfg,
        "--seed",
        "10",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_ne!(
        fs::read(c.join("trajectory.csv")).unwrap(),
        fs::read(a.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn arena_json_format() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_ARENA);
    let o = marl_lab(&[
        "--config",
        &cfg,
        "--format",
        "json",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2400);
    assert!(rows[0].get("sampled").unwrap().is_boolean());
}

#[test]
fn dynamics_reports_equilibrium() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "mode = \"dynamics\"\n[dynamics]\nu = [0.5, -0.45, -0.5, 0.45]\nalgorithms = [\"wpl\", \"iga\", \"iga-wolf\"]\nstarts = [[0.2, 0.5], [0.5, 0.1]]\nhorizon = 5.0\n",
    );
    let o = marl_lab(&["--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    let ne = summary["ne"].as_array().unwrap();
    assert!((ne[0].as_f64().unwrap() - 0.9).abs() < 1e-12);
    assert!((ne[1].as_f64().unwrap() - 0.9).abs() < 1e-12);
    let csv = fs::read_to_string(tmp.path().join("phase_1.csv")).unwrap();
    assert!(csv.starts_with("t,p,q,algorithm\n"));
    for algo in ["wpl", "iga", "iga-wolf"] {
        assert!(csv.lines().any(|l| l.ends_with(&format!(",{algo}"))));
    }
}

#[test]
fn dtap_windows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "mode = \"dtap\"\n[dtap]\nwidth = 4\nheight = 4\nsources = { x = 1, y = 1, width = 2, height = 2 }\narrival_rate = 0.05\nhorizon = 2000\ntau = 200\n",
    );
    let o = marl_lab(&["--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("atst.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "window_end,atst,completed,max_hops");
    assert_eq!(lines.len(), 11);
    assert!(lines[10].starts_with("2000,"));
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "mode = \"sweep\"\n[sweep]\nalgos = [\"wpl\", \"giga-wolf\"]\nseeds = [1, 2]\n[sweep.arena]\ngame = \"tricky\"\nsteps = 100\nruns = 1\n",
    );
    let o = marl_lab(&["--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for algo in ["wpl", "giga-wolf"] {
        for seed in [1, 2] {
            let dir = tmp
                .path()
                .join(format!("{algo}_alpha0.1_eta0.002_seed{seed}"));
            assert!(dir.join("trajectory.csv").is_file(), "{}", dir.display());
        }
    }
}

#[test]
fn bad_configs_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "mode = \"arena\"\n[arena]\nsteps = -1\nruns = 0\ngame = \"nope\"\n",
    );
    let o = marl_lab(&["--config", &cfg]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("steps") && err.contains("runs") && err.contains("nope"),
        "{err}"
    );

    let cfg = write_config(tmp.path(), "mode = \"arena\"\n[arena]\ngame = [\n");
    let o = marl_lab(&["--config", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    assert!(!marl_lab(&["--preset", "nope"]).status.success());
    assert!(!marl_lab(&[]).status.success());
}

#[test]
fn unwritable_output_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_ARENA);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = marl_lab(&[
        "--config",
        &cfg,
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

#[test]
fn presets_dump_and_list() {
    let o = marl_lab(&["presets"]);
    assert!(o.status.success());
    let listing = String::from_utf8(o.stdout).unwrap();
    for (name, _) in PRESETS {
        assert!(listing.contains(name));
    }
    let o = marl_lab(&["--preset", "fig12b", "--seed", "5", "--dump"]);
    assert!(o.status.success());
    let cfg = parse_config(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let mut want = preset("fig12b").unwrap();
    want.seed = 5;
    assert_eq!(cfg, want);
}

#[test]
fn validate_passes() {
    let o = marl_lab(&["validate"]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(o.status.success(), "{out}");
    assert_eq!(
        out.lines().filter(|l| l.starts_with("PASS")).count(),
        4,
        "{out}"
    );
}
