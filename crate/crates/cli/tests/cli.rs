use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heislab::config::ExperimentConfig;
use heislab::inequalities::{parse_reports, Verdict};
use heislab::CarnotSpec;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn heislab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heislab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HEISLAB_SEED")
        .env_remove("HEISLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn quick() -> String {
    repo("configs/quick.toml").display().to_string()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn shipped_files_parse() {
    let default = ExperimentConfig::parse(&std::fs::read_to_string(repo("configs/default.toml")).unwrap()).unwrap();
    assert_eq!(default, ExperimentConfig::default());
    ExperimentConfig::parse(&std::fs::read_to_string(repo("configs/quick.toml")).unwrap()).unwrap();
    assert_eq!(CarnotSpec::load(repo("configs/specs/heisenberg.spec")).unwrap(), CarnotSpec::heisenberg());
    assert_eq!(
        CarnotSpec::load(repo("configs/specs/free_d3.spec")).unwrap(),
        CarnotSpec::free_rank_two(3).unwrap()
    );
    assert_eq!(
        CarnotSpec::load(repo("configs/specs/d4_m2.spec")).unwrap(),
        heislab::selftest::mixed_spec()
    );
}

#[test]
fn selftest_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = heislab(&["selftest"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    assert!(dir.path().join("selftest.json").exists());
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(heislab(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(heislab(&["lsi", "--beta", "abc"], dir.path()).status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n\n[paths]\nn_paths = 0\n").unwrap();
    let o = heislab(&["--config", bad.to_str().unwrap(), "selftest"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");

    std::fs::write(&bad, "seed = \"x\"\n").unwrap();
    let o = heislab(&["--config", bad.to_str().unwrap(), "selftest"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let o = heislab(&["--config", &quick(), "lsi", "--name", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = heislab(&["--config", &quick(), "lsi", "--beta", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical_across_repeats_and_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = ["--config", &quick(), "lsi", "--name", "theorem1", "--name", "li_sym"];
    for (dir, threads) in [(&a, "0"), (&b, "0"), (&c, "1")] {
        let mut v = args.to_vec();
        v.extend(["--threads", threads]);
        let o = heislab(&v, dir.path());
        assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["lsi_theorem1.json", "lsi_li_sym.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f));
        assert_eq!(read(a.path(), f), read(c.path(), f));
    }
    for sub in ["curvature", "clt"] {
        heislab(&["--config", &quick(), sub], a.path());
        heislab(&["--config", &quick(), sub, "--threads", "1"], c.path());
        let file = if sub == "clt" { "clt.csv" } else { "curvature.csv" };
        assert_eq!(read(a.path(), file), read(c.path(), file));
    }
}

#[test]
fn bank_round_trip_reproduces_reports() {
    let dir = tempfile::tempdir().unwrap();
    let bank = dir.path().join("paths.bank");
    let direct = tempfile::tempdir().unwrap();
    let args = ["--config", &quick(), "lsi", "--name", "poincare"];
    heislab(&args, direct.path());
    let mut w = args.to_vec();
    w.extend(["--write-bank", bank.to_str().unwrap()]);
    let o = heislab(&w, dir.path());
    assert!(bank.exists(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = read(dir.path(), "lsi_poincare.json");
    let mut r = args.to_vec();
    r.extend(["--read-bank", bank.to_str().unwrap()]);
    heislab(&r, dir.path());
    assert_eq!(first, read(dir.path(), "lsi_poincare.json"));
    assert_eq!(first, read(direct.path(), "lsi_poincare.json"));
}

#[test]
fn report_merges_and_flags_violations() {
    let dir = tempfile::tempdir().unwrap();
    heislab(&["--config", &quick(), "lsi", "--name", "poincare"], dir.path());
    let file = dir.path().join("lsi_poincare.json");
    let text = std::fs::read_to_string(&file).unwrap();
    let mut reports = parse_reports(&text).unwrap();
    let n = reports.len();

    let merged = tempfile::tempdir().unwrap();
    let f = file.to_str().unwrap();
    let o = heislab(&["report", f, f], merged.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(parse_reports(&read(merged.path(), "report.json")).unwrap().len(), 2 * n);

    reports[0].verdict = Verdict::Violated;
    let bad = dir.path().join("violated.json");
    std::fs::write(&bad, serde_json_string(&reports)).unwrap();
    let o = heislab(&["report", bad.to_str().unwrap()], merged.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("violated"));
}

fn serde_json_string(reports: &[heislab::inequalities::InequalityReport]) -> String {
    heislab::inequalities::reports_json(reports).unwrap()
}

#[test]
fn carnot_and_bridge_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = repo("configs/specs/free_d3.spec");
    let o = heislab(&["--config", &quick(), "carnot", "--spec", spec.to_str().unwrap()], dir.path());
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&o.stderr));
    let reports = parse_reports(&read(dir.path(), "carnot.json")).unwrap();
    assert!(reports.iter().all(|r| r.name == "carnot_theorem"));
    let o = heislab(&["--config", &quick(), "bridge"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(dir.path(), "bridge.csv").starts_with("estimator,params,value,ci,n,seed\n"));
}

#[test]
fn env_overrides_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--config", &quick(), "lsi", "--name", "poincare"];
    heislab(&args, a.path());
    Command::new(env!("CARGO_BIN_EXE_heislab"))
        .args(args)
        .env("HEISLAB_SEED", "99")
        .env("HEISLAB_OUT_DIR", b.path())
        .output()
        .unwrap();
    let ra = parse_reports(&read(a.path(), "lsi_poincare.json")).unwrap();
    let rb = parse_reports(&read(b.path(), "lsi_poincare.json")).unwrap();
    assert_eq!(ra[0].lhs.seed, 7);
    assert_eq!(rb[0].lhs.seed, 99);
}

/// The shipped default configuration at `beta = 0`: one report per suite
/// function and no violations.
#[test]
fn default_theorem1_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo("configs/default.toml");
    let o = heislab(
        &["--config", cfg.to_str().unwrap(), "lsi", "--name", "theorem1", "--beta", "0"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let reports = parse_reports(&read(dir.path(), "lsi_theorem1.json")).unwrap();
    assert_eq!(reports.len(), 20);
    assert!(reports.iter().all(|r| r.verdict != Verdict::Violated));
}
