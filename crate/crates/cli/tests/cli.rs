use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn probedim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probedim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn order_table_for_exchange() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "x.toml",
        "[model]\ncoupling_type = \"exchange\"\nqubits = { from = 2, to = 6 }\n",
    );
    let out = dir.path().join("out");
    let o = probedim(&["order-table", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("order_table.csv")).unwrap();
    let orders: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(orders, ["2", "3", "4", "5", "6"]);
    assert_eq!(stdout(&o), csv);
}

#[test]
fn estimate_noiseless_exchange_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "x.toml",
        "[model]\ncoupling_type = \"exchange\"\nqubits = 4\n[noise]\nvariances = []\ndraws = 1\n",
    );
    let out = dir.path().join("out");
    let o = probedim(&["estimate", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("n_hat = 4\n") && text.contains("dim = 16\n"), "{text}");
    assert!(out.join("estimate/report.txt").exists());
    assert!(out.join("estimate/ratios.csv").exists());
}

#[test]
fn estimate_from_series_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "x.toml", "[model]\ncoupling_type = \"exchange\"\nqubits = 3\n");
    let mut csv = String::from("j,t,y\n");
    for j in 0..199 {
        csv.push_str(&format!("{j},{},0.25\n", j as f64 * 0.01));
    }
    let series = dir.path().join("s.csv");
    fs::write(&series, csv).unwrap();
    let out = dir.path().join("out");
    let o = probedim(&["estimate", &cfg, "--series", series.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("N_hat = 1\n"));

    fs::write(&series, "j,t\n0,0\n").unwrap();
    let o = probedim(&["estimate", &cfg, "--series", series.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad = write_config(dir.path(), "bad.toml", "[model]\ncoupling_type = \"exchange\"\nqubits = 3\n[sampling]\nn_max = 10\ncoupling_max = 100.0\nhankel_rows = 100\nhankel_cols = 100\nsamples = 150\n");
    let o = probedim(&["sweep", &bad, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("199"));

    let missing = dir.path().join("nope.toml");
    assert_eq!(probedim(&["order-table", missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(probedim(&["frobnicate"]).status.code(), Some(2));

    let ising = write_config(
        dir.path(),
        "ising.toml",
        "[model]\ncoupling_type = \"ising\"\nqubits = 3\n[noise]\nvariances = []\ndraws = 1\n",
    );
    let o = probedim(&["estimate", &ising, "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-invertible") || String::from_utf8_lossy(&o.stderr).contains("correlate"));

    let capped = write_config(
        dir.path(),
        "cap.toml",
        "[model]\ncoupling_type = \"heisenberg\"\nqubits = { from = 2, to = 4 }\n[estimation]\nmethod = \"auto\"\nthreshold = 5.0\nsearch_fraction = 0.5\nn_limit = 10\nscan_order_max = 30\nclosure_cap = 20\nrealization_cap = 4096\n",
    );
    let o = probedim(&["order-table", &capped, "--out", out]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("N=4"));
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        "[model]\ncoupling_type = \"exchange\"\nqubits = 3\n\
         [sampling]\nn_max = 10\ncoupling_max = 100.0\nhankel_rows = 30\nhankel_cols = 30\nsamples = 59\n\
         [noise]\nvariances = [1e-7, 1e-5]\ndraws = 3\n[ensemble]\ninstances = 4\nseed = 11\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = probedim(&["sweep", &cfg, "--out", a.to_str().unwrap()]);
    let ob = probedim(&["sweep", &cfg, "--out", b.to_str().unwrap(), "--sequential"]);
    assert!(oa.status.success() && ob.status.success());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n:?}");
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.starts_with("N,sigma2,n_true,n_hat_mode,success_rate,median_margin\n3,1e-7,3,3,"));

    let c = dir.path().join("c");
    probedim(&["sweep", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(fs::read(a.join("metadata.txt")).unwrap(), fs::read(c.join("metadata.txt")).unwrap());
    assert!(fs::read_to_string(c.join("metadata.txt")).unwrap().contains("master_seed = 12"));
}

#[test]
fn verify_reports_every_check() {
    let o = probedim(&["verify"]);
    let text = stdout(&o);
    for needle in ["exchange n = N [N=6]", "appendixB n = 2N-2 [N=5]", "oracle heisenberg+field [N=4]", "ising table flagged non-invertible"] {
        assert!(text.contains(needle), "missing {needle}\n{text}");
    }
    let failed = text.lines().filter(|l| l.starts_with("FAIL")).count();
    assert_eq!(o.status.success(), failed == 0);
}
