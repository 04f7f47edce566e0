use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_layered-epi"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, scenario: &str, out: &Path) -> std::path::PathBuf {
    let path = dir.join(format!("{scenario}.conf"));
    let text = format!(
        "# small run\nscenario = {scenario}\nn = 200\nreps = 5\nseed = 3\ntau_grid = 0.4,0.5\nout = {}\n",
        out.display()
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cfg = write_config(dir.path(), "clique_fixed_density", &a);
    let o = run(&["generate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--workers",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    for file in ["manifest.csv", "series.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    // 6 sizes, 2 rates, 5 replications
    let manifest = fs::read_to_string(a.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 60);
    assert!(fs::read_to_string(a.join("config.txt"))
        .unwrap()
        .contains("seed = 3"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let cfg = write_config(dir.path(), "clique_fixed_density", &out);
    let o = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--reps",
        "1",
        "--scenario",
        "poly",
    ]);
    assert_eq!(code(&o), 0);
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    // 10 triplets, 2 rates, 1 replication
    assert_eq!(manifest.lines().count(), 1 + 20);
    assert!(manifest.lines().nth(1).unwrap().contains(",poly,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["generate", "--scenario", "tree"])), 2);
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "scenario = poly\nbogus = 1\n").unwrap();
    assert_eq!(
        code(&run(&["generate", "--config", cfg.to_str().unwrap()])),
        2
    );
    fs::write(&cfg, "scenario poly\n").unwrap();
    assert_eq!(
        code(&run(&["generate", "--config", cfg.to_str().unwrap()])),
        2
    );
    let out = dir.path().join("x");
    assert_eq!(
        code(&run(&[
            "generate",
            "--n",
            "0",
            "--out",
            out.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    assert_eq!(
        code(&run(&["evaluate", "--dataset", missing.to_str().unwrap()])),
        3
    );
    assert_eq!(
        code(&run(&["table", "--results", missing.to_str().unwrap()])),
        3
    );
    assert_eq!(
        code(&run(&["--config", missing.to_str().unwrap(), "generate"])),
        3
    );
}

#[test]
fn evaluate_table_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("poly");
    let cfg = write_config(dir.path(), "poly", &data);
    assert_eq!(
        code(&run(&[
            "generate",
            "--config",
            cfg.to_str().unwrap(),
            "--reps",
            "2"
        ])),
        0
    );
    let o = run(&[
        "evaluate",
        "--dataset",
        data.to_str().unwrap(),
        "--times",
        "1,4",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let printed = stdout(&o);
    assert!(printed.contains("t=1") && printed.contains("t=4"));
    let results = fs::read_to_string(data.join("results.csv")).unwrap();
    assert!(results.starts_with("method,T,rmse,n_used,n_missing"));
    for m in ["ml_exact", "ml_static", "ml_dynamic"] {
        assert!(results.contains(m), "{m}");
    }
    let predictions = fs::read_to_string(data.join("predictions.csv")).unwrap();
    assert!(predictions.starts_with("run_id,T,method,tau_hat"));

    let o = run(&["table", "--results", data.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table = stdout(&o);
    assert!(table.lines().next().unwrap().starts_with("method"));
    assert!(table.lines().any(|l| l.starts_with("ML, E_SI_o known")));

    let o = run(&[
        "evaluate",
        "--dataset",
        data.to_str().unwrap(),
        "--methods",
        "ml_exact",
        "--out",
        dir.path().join("e2").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let second = dir.path().join("e2/results.csv");
    assert!(!fs::read_to_string(&second).unwrap().contains("ml_static"));

    let curves = dir.path().join("plots");
    let list = format!(
        "{},{}",
        data.join("results.csv").display(),
        second.display()
    );
    let o = run(&[
        "plotdata",
        "--results",
        &list,
        "--out",
        curves.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(curves.join("curves.csv")).unwrap();
    assert!(text.starts_with("label,t,rmse"));
    assert!(text.contains("poly:ml_static") && text.contains("e2:ml_exact"));

    assert_eq!(
        code(&run(&[
            "evaluate",
            "--dataset",
            data.to_str().unwrap(),
            "--methods",
            "gbt_all"
        ])),
        2
    );
}

#[test]
fn leave_one_out_cases() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("family");
    let cfg = write_config(dir.path(), "clique_leave_one_out", &data);
    assert_eq!(
        code(&run(&["generate", "--config", cfg.to_str().unwrap()])),
        0
    );
    let o = run(&[
        "loo",
        "--dataset",
        data.to_str().unwrap(),
        "--omit",
        "8",
        "--test-on",
        "8",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let case = dir.path().join("loo/omit8_test8");
    let train = fs::read_to_string(case.join("train/manifest.csv")).unwrap();
    let test = fs::read_to_string(case.join("test/manifest.csv")).unwrap();
    let column = |line: &str, i: usize| line.split(',').nth(i).unwrap().to_string();
    assert!(train
        .lines()
        .skip(1)
        .all(|l| column(l, 7) != "8" && column(l, 15) == "train"));
    assert!(test.lines().count() > 1);
    assert!(test
        .lines()
        .skip(1)
        .all(|l| column(l, 7) == "8" && column(l, 15) == "test"));
    assert!(case.join("results.csv").exists());

    let o = run(&["loo", "--dataset", data.to_str().unwrap(), "--fw"]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("loo/fw/results.csv").exists());

    assert_eq!(
        code(&run(&[
            "loo",
            "--dataset",
            data.to_str().unwrap(),
            "--omit",
            "8"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "loo",
            "--dataset",
            data.to_str().unwrap(),
            "--omit",
            "3",
            "--test-on",
            "3"
        ])),
        2
    );
}
