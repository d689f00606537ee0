use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfm")).args(args).output().expect("spawn kfm")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_RATE: &str = "n = [16, 32, 64]\nm = 32\nrepeats = 2\n";

#[test]
fn successful_run_writes_csv_summary_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rate.toml", SMALL_RATE);
    let out = dir.path().join("out");
    let o = kfm(&["rate", "--config", &cfg, "--out", out.to_str().unwrap(), "--plots"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("rate.csv")).unwrap();
    assert!(csv.starts_with("experiment,repeat,n,sigma_min,metric_name,value,seed\n"));
    assert!(out.join("rate_summary.json").exists());
    assert!(out.join("rate.svg").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("kde_slope"));
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rate.toml", SMALL_RATE);
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let o = kfm(&["rate", "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("rate.csv")).unwrap()
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a, run("c", "6"));
}

#[test]
fn print_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = kfm(&["tv-example", "--print-config", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 9"));
    let cfg = write_config(dir.path(), "tv.toml", &text);
    let again = kfm(&["tv-example", "--config", &cfg, "--print-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn bad_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("zero.toml", "repeats = 0\n"),
        ("unknown.toml", "bogus = 1\n"),
        ("syntax.toml", "n = [1,\n"),
        ("sigma.toml", "[sigma]\npolicy = \"explicit\"\nvalues = [-0.1]\n"),
    ] {
        let cfg = write_config(dir.path(), name, body);
        let o = kfm(&["rate", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = kfm(&["rate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(kfm(&["rate", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn oversized_flow_comparison_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "big.toml", "n = [5000]\nm = 16\nrepeats = 1\n");
    let o = kfm(&["flow-vs-kde", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solver_step_cap_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cap.toml", "n = [20]\nm = 8\nrepeats = 1\n[ode]\nmax_steps = 2\n");
    let o = kfm(&["flow-vs-kde", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not reach t=1"));
}
