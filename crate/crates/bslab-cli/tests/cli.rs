use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("bslab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

fn bslab(args: &[&str], out: &PathBuf, threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bslab"));
    c.args(args).arg("--out").arg(out);
    match threads {
        Some(t) => c.env("BSLAB_THREADS", t),
        None => c.env_remove("BSLAB_THREADS"),
    };
    c.output().expect("binary runs")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn manifest_holds(dir: &PathBuf) {
    let text = fs::read_to_string(dir.join("manifest.sha256")).unwrap();
    assert!(text.contains("  config.resolved\n"));
    for line in text.lines() {
        let (sum, name) = line.split_once("  ").unwrap();
        assert_eq!(hex::encode(Sha256::digest(fs::read(dir.join(name)).unwrap())), sum, "{name}");
    }
}

#[test]
fn spectrum_preset_reports_critical_point() {
    let out = scratch("spectrum");
    let o = bslab(&["spectrum", "--preset", "fig2", "--set", "nk=41"], &out, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(out.join("summary.json"));
    assert_eq!(s["C_c"].as_f64(), Some(0.1));
    assert_eq!(s["k_c"].as_f64(), Some(1.0));
    assert!(fs::read_to_string(out.join("spectrum.csv")).unwrap().starts_with("kx,ky,re1,im1,re2,im2,re3,im3,max_re,class\n"));
    manifest_holds(&out);
}

#[test]
fn override_reaches_resolved_config() {
    let out = scratch("override");
    let dir = scratch("override-cfg");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    fs::write(&cfg, r#"{"preset": "fig2", "nk": 21}"#).unwrap();
    let o = bslab(&["spectrum", "--config", cfg.to_str().unwrap(), "--set", "C=0.08"], &out, None);
    assert!(o.status.success());
    let r = json(out.join("config.resolved"));
    assert_eq!(r["parameters"]["C"].as_f64(), Some(0.08));
    assert_eq!(r["parameters"]["nk"].as_u64(), Some(21));
    assert_eq!(r["preset"], "fig2");
    assert!(json(out.join("summary.json"))["n_unstable"].as_u64().unwrap() > 0);
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let out = scratch("bad");
    let o = bslab(&["simulate", "--set", "dt=-1"], &out, None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dt"));
    let o = bslab(&["simulate", "--set", "nope=3"], &out, None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
    let o = bslab(&["growth", "--set", "b1=0.5", "--set", "b2=0.5"], &out, None);
    assert_eq!(o.status.code(), Some(2));
    let o = bslab(&["modes"], &out, Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_one() {
    let out = scratch("diverge");
    let o = bslab(&["simulate", "--set", "b1=5", "--set", "b2=5", "--set", "d1=0", "--set", "d2=0", "--set", "n=16", "--set", "t_end=200"], &out, None);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    manifest_holds(&out);
}

#[test]
fn growth_preset_writes_pass_flags() {
    let out = scratch("growth");
    let o = bslab(&["growth", "--preset", "thm43", "--set", "seeds=2", "--set", "t_end=2"], &out, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(out.join("growth_report.json"));
    assert_eq!(r["bounds_hold"], true);
    assert_eq!(r["reports"].as_array().unwrap().len(), 2);
    assert!(r["reports"][0]["pass_large_bound"].is_boolean());
}

#[test]
fn identical_runs_are_byte_identical() {
    let run = |name: &str, threads: Option<&str>| {
        let out = scratch(name);
        let o = bslab(&["simulate", "--set", "n=16", "--set", "t_end=1", "--set", "dt=0.01", "--set", "seed=3"], &out, threads);
        assert!(o.status.success());
        out
    };
    let (a, b, c) = (run("det-a", None), run("det-b", Some("1")), run("det-c", Some("3")));
    for f in ["diagnostics.csv", "final_field.json", "summary.json", "manifest.sha256"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(x, fs::read(c.join(f)).unwrap(), "{f}");
    }
    let diag = fs::read_to_string(a.join("diagnostics.csv")).unwrap();
    assert!(diag.lines().nth(1).unwrap().starts_with("0,"));
}

#[test]
fn bifurcation_amplitudes_and_branch() {
    let out = scratch("amps");
    assert!(bslab(&["bifurcate", "--preset", "fig6", "--set", "n_alpha=5"], &out, None).status.success());
    let csv = fs::read_to_string(out.join("amplitudes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let out = scratch("branch");
    let o = bslab(&["bifurcate", "--preset", "fig7", "--set", "steps=3"], &out, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(out.join("summary.json"));
    assert_eq!(s["unstable_complex_pair"], true);
    assert_eq!(s["points"].as_u64(), Some(4));
}

#[test]
fn flows_modes_and_verify_run() {
    let out = scratch("flows");
    assert!(bslab(&["flows", "--preset", "fig3", "--set", "nk=31"], &out, None).status.success());
    assert!(json(out.join("summary.json"))["n_steady"].as_u64().unwrap() > 0);
    let out = scratch("modes");
    assert!(bslab(&["modes", "--preset", "fig2"], &out, None).status.success());
    assert_eq!(fs::read_to_string(out.join("modes.csv")).unwrap().lines().count(), 1 + 3 + 2 + 1);
    let out = scratch("verify");
    let o = bslab(&["verify"], &out, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    manifest_holds(&out);
}
