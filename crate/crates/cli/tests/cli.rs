//! End-to-end runs of the `oscbc` binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

fn scratch() -> PathBuf {
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "oscbc-cli-{}-{}",
        std::process::id(),
        NEXT.fetch_add(1, Ordering::SeqCst)
    ));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn oscbc(dir: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscbc"))
        .current_dir(dir)
        .args(["--jobs", "1"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(o: &[u8]) -> String {
    String::from_utf8_lossy(o).into_owned()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_CELL: [&str; 8] = [
    "--depth",
    "2",
    "--h",
    "1/16",
    "--translates",
    "2",
    "--richardson",
    "false",
];

#[test]
fn verify_passes_and_reports_each_check() {
    let d = scratch();
    let o = oscbc(&d, &["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let s = text(&o.stdout);
    assert!(s.contains("10 of 10 checks passed"), "{s}");
    assert!(s.lines().filter(|l| l.starts_with("PASS")).count() == 10);
    let v = json(d.join("out/verify.json"));
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn linear_cell_identifies_the_average() {
    let d = scratch();
    let mut args = vec![
        "cell",
        "--psi",
        "cos(1, 0)",
        "--operator",
        "laplacian",
        "--nu",
        "1,sqrt2",
        "--svg",
    ];
    args.extend(SMALL_CELL);
    let o = oscbc(&d, &args);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let v = json(d.join("out/cell.json"));
    assert_eq!(v["schema_version"], 1);
    assert!(v["mu_bar"].as_f64().unwrap().abs() < 0.05, "{v}");
    let profile = fs::read_to_string(d.join("out/cell_profile.csv")).unwrap();
    assert!(profile.starts_with("depth,min,max\n"));
    assert!(fs::read_to_string(d.join("out/cell_profile.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let d = scratch();
    let o = oscbc(&d, &["cell", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("Usage"), "{}", text(&o.stderr));
    let o = oscbc(&d, &["transmogrify"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let d = scratch();
    let o = oscbc(&d, &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in [
        "discrepancy",
        "lattice",
        "cell",
        "sweep",
        "beta0",
        "epsilon",
        "verify",
    ] {
        assert!(text(&o.stdout).contains(sub), "{sub}");
    }
}

#[test]
fn invalid_values_exit_one() {
    let d = scratch();
    for args in [
        vec!["beta0", "--lambda", "2", "--big-lambda", "1"],
        vec!["cell", "--operator", "heat"],
        vec!["cell", "--psi", "cos(1, 0"],
        vec!["cell", "--psi", "x1"],
        vec!["epsilon", "--h", "1/8", "--eps", "1/2"],
        vec!["discrepancy", "--n", "0"],
        vec!["lattice", "--n", "1"],
        vec!["--jobs", "0", "verify"],
    ] {
        let o = oscbc(&d, &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", text(&o.stderr));
        assert!(text(&o.stderr).starts_with("error"), "{args:?}");
    }
}

#[test]
fn solver_failure_exits_two() {
    let d = scratch();
    let o = oscbc(&d, &["beta0", "--big-lambda", "100", "--tol", "1e-3"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("no sign change"));
    assert!(!d.join("out/beta0.json").exists());
}

#[test]
fn outputs_are_deterministic() {
    let d = scratch();
    let mut sweep = vec!["sweep", "--uniform", "6", "--golden", "3"];
    sweep.extend(SMALL_CELL);
    for args in [
        vec!["discrepancy", "--x", "sqrt2", "--n", "10,500"],
        vec!["lattice"],
        sweep,
    ] {
        let a = oscbc(&d, &[&["--out", "a"][..], &args].concat());
        let b = oscbc(&d, &[&["--out", "b"][..], &args].concat());
        assert_eq!(a.status.code(), Some(0), "{}", text(&a.stderr));
        assert_eq!(b.status.code(), Some(0));
        for entry in fs::read_dir(d.join("a")).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(
                fs::read(d.join("a").join(&name)).unwrap(),
                fs::read(d.join("b").join(&name)).unwrap(),
                "{name:?}"
            );
        }
    }
}

#[test]
fn discrepancy_rows_satisfy_the_sandwich() {
    let d = scratch();
    let o = oscbc(&d, &["discrepancy", "--x", "phi", "--n", "10,100,1000"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(d.join("out/discrepancy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,d_star,d,bound"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(v[1] <= v[2] && v[2] <= v[3], "{line}");
        assert!(v[1] <= 10.0 * v[0].ln() / v[0]);
    }
}

#[test]
fn lattice_rows_are_dominated_by_oracle() {
    let d = scratch();
    let o = oscbc(
        &d,
        &[
            "lattice", "--nu", "1,phi", "--x0", "0.3,0.7", "--n", "10,100",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = fs::read_to_string(d.join("out/lattice.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(v[2] <= v[1] + 1e-12 && v[1] < v[3], "{line}");
    }
}

#[test]
fn beta0_writes_profile_vanishing_at_ends() {
    let d = scratch();
    let o = oscbc(&d, &["beta0", "--big-lambda", "1", "--samples", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let v = json(d.join("out/beta0.json"));
    assert!((v["beta0"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let csv = fs::read_to_string(d.join("out/beta0_profile.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][2], 0.0);
    assert_eq!(rows[10][2], 0.0);
    assert!((rows[5][2] - 1.0).abs() < 1e-9);
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let d = scratch();
    fs::write(
        d.join("run.toml"),
        "[beta0]\nbig_lambda = \"1\"\ntol = 1e-6\nsamples = 3\n",
    )
    .unwrap();
    let o = oscbc(&d, &["--config", "run.toml", "beta0"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!((json(d.join("out/beta0.json"))["beta0"].as_f64().unwrap() - 1.0).abs() < 1e-5);
    let o = oscbc(&d, &["--config", "run.toml", "beta0", "--big-lambda", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(d.join("out/beta0.json"))["beta0"].as_f64().unwrap() < 0.5);
    assert_eq!(
        fs::read_to_string(d.join("out/beta0_profile.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );
}

#[test]
fn config_rejects_unknown_keys_and_sections() {
    let d = scratch();
    fs::write(d.join("a.toml"), "[beta0]\nbig_lamda = 2\n").unwrap();
    let o = oscbc(&d, &["--config", "a.toml", "beta0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("big_lamda"));
    fs::write(d.join("b.toml"), "[solver]\ntol = 1\n").unwrap();
    let o = oscbc(&d, &["--config", "b.toml", "beta0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = oscbc(&d, &["--config", "missing.toml", "beta0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_writes_table_plot_and_continuity() {
    let d = scratch();
    let mut args = vec![
        "sweep",
        "--uniform",
        "8",
        "--golden",
        "6",
        "--spread",
        "0.05",
        "--continuity-radius",
        "0.05",
    ];
    args.extend(SMALL_CELL);
    let o = oscbc(&d, &args);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let t = json(d.join("out/table.json"));
    assert_eq!(t["schema_version"], 1);
    assert_eq!(t["entries"].as_array().unwrap().len(), 14);
    let c = json(d.join("out/continuity.json"));
    assert_eq!(c["schema_version"], 1);
    assert!(c["neighbors"].as_u64().unwrap() >= 3);
    assert!(fs::read_to_string(d.join("out/table.svg"))
        .unwrap()
        .contains("<circle"));
    assert_eq!(
        fs::read_to_string(d.join("out/table.csv"))
            .unwrap()
            .lines()
            .count(),
        15
    );
}

#[test]
fn epsilon_uses_a_saved_table() {
    let d = scratch();
    let mut args = vec!["--out", "t", "sweep", "--uniform", "16", "--offset", "0"];
    args.extend(SMALL_CELL);
    assert_eq!(oscbc(&d, &args).status.code(), Some(0));
    let o = oscbc(
        &d,
        &[
            "epsilon",
            "--table",
            "t/table.json",
            "--h",
            "1/32",
            "--eps",
            "1/2,1/4",
            "--radius",
            "0.25",
            "--fields",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let r = json(d.join("out/convergence.json"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["rows"].as_array().unwrap().len(), 2);
    assert!(fs::read(d.join("out/u_bar.bin"))
        .unwrap()
        .starts_with(b"OSCF"));
    assert!(fs::read_to_string(d.join("out/diameter.svg"))
        .unwrap()
        .contains("u_bar"));
    // a table for other data is refused
    let o = oscbc(
        &d,
        &[
            "epsilon",
            "--table",
            "t/table.json",
            "--g",
            "sin(1, 0)",
            "--h",
            "1/32",
            "--eps",
            "1/2",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}
