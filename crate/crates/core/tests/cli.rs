use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_privgan-lab");

fn lab(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("PRIVGAN_LAB_THREADS", "1")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

struct Setup {
    dir: TempDir,
}

impl Setup {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    /// Writes a small privGAN config; `extra` lines are appended verbatim.
    fn config(&self, name: &str, attacks: &str, extra: &str) -> PathBuf {
        let text = format!(
            r#"output_dir = "out-{name}"
seeds = [0]
family = "privgan"
dataset.kind = "mixture"
dataset.n = 400
dataset.centers = 4
dataset.radius = 0.6
dataset.sigma = 0.05
dataset.seed = 1
split.f = 0.5
arch.latent_dim = 4
arch.gen_hidden = [16]
arch.disc_hidden = [16]
train.epochs = 3
train.batch_size = 32
privgan.n = 2
privgan.lambda = 1.0
privgan.dp_init_epochs = 2
privgan.co_train_delay = 2
attacks.list = {attacks}
attacks.mc.m = 5
attacks.mc.n = 200
attacks.mc.repeats = 3
{extra}
"#
        );
        let path = self.path(&format!("{name}.toml"));
        fs::write(&path, text).unwrap();
        path
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_manifest_checkpoint_and_report() {
    let t = Setup::new();
    let cfg = t.config("smoke", r#"["wb", "tvd", "mc"]"#, "");
    let out = lab(&["run", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let run = t.path("out-smoke/seed-0");
    for f in [
        "manifest.json",
        "checkpoint.json",
        "attack_report.json",
        "histogram.csv",
        "config.toml",
    ] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn same_config_twice_gives_identical_bytes() {
    let t = Setup::new();
    let cfg = t.config("det", r#"["wb", "tvd", "mc"]"#, "");
    let run = t.path("out-det/seed-0");
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        assert_eq!(code(&lab(&["run", s(&cfg)])), 0);
        snapshots
            .push(["checkpoint.json", "attack_report.json", "histogram.csv"].map(|f| fs::read(run.join(f)).unwrap()));
    }
    assert!(snapshots[0] == snapshots[1]);
}

#[test]
fn missing_lambda_exits_2_with_field_path() {
    let t = Setup::new();
    let cfg = t.config("nolambda", r#"["wb"]"#, "");
    let text = fs::read_to_string(&cfg).unwrap().replace("privgan.lambda = 1.0\n", "");
    fs::write(&cfg, text).unwrap();
    let out = lab(&["run", s(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("privgan.lambda"), "{}", stderr(&out));
    assert!(!t.path("out-nolambda").exists());
}

#[test]
fn unknown_key_is_rejected() {
    let t = Setup::new();
    let cfg = t.config("unknown", r#"["wb"]"#, "train.momentum = 0.9");
    let out = lab(&["run", s(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("train.momentum"), "{}", stderr(&out));
}

#[test]
fn infeasible_n_sweep_exits_2() {
    let t = Setup::new();
    let cfg = t.config("nsweep", r#"["wb"]"#, "");
    // 200 training rows and batch 32 allow at most 6 parts
    let out = lab(&["sweep", s(&cfg), "--axis", "N", "--values", "2,7"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("privgan.n"), "{}", stderr(&out));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn lambda_sweep_has_one_row_per_value_and_seed() {
    let t = Setup::new();
    let cfg = t.config("lsweep", r#"["wb", "tvd"]"#, "");
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("seeds = [0]", "seeds = [0, 1]");
    fs::write(&cfg, text).unwrap();
    let out = lab(&["sweep", s(&cfg), "--axis", "lambda", "--values", "0.1,1,10"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = read_csv(&t.path("out-lsweep/sweep.csv"));
    assert_eq!(&header[..4], ["run_id", "axis", "value", "seed"]);
    assert_eq!(rows.len(), 6);
    let wb = header.iter().position(|h| h == "whitebox_accuracy").unwrap();
    assert!(rows.iter().all(|r| r[wb].parse::<f64>().is_ok()));
    let (mheader, medians) = read_csv(&t.path("out-lsweep/sweep_medians.csv"));
    assert_eq!(medians.len(), 3);
    let mwb = mheader.iter().position(|h| h == "whitebox_accuracy").unwrap();
    // each median of two seeds is their midpoint
    for m in &medians {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r[2] == m[1])
            .map(|r| r[wb].parse().unwrap())
            .collect();
        let mid = 0.5 * (vals[0] + vals[1]);
        assert!((m[mwb].parse::<f64>().unwrap() - mid).abs() < 1e-12);
    }
    // every row traces back to a manifest
    for r in &rows {
        let dir = t.path(&format!("out-lsweep/lambda-{}/seed-{}", r[2], r[3]));
        let manifest = fs::read_to_string(dir.join("manifest.json")).unwrap();
        assert!(manifest.contains(&r[0]), "{}", r[0]);
    }
}

#[test]
fn epochs_sweep_column_is_monotone() {
    let t = Setup::new();
    let cfg = t.config("esweep", r#"["wb"]"#, "");
    let out = lab(&["sweep", s(&cfg), "--axis", "epochs", "--values", "1,2,4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (_, rows) = read_csv(&t.path("out-esweep/sweep.csv"));
    let epochs: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(epochs.len(), 3);
    assert!(epochs.windows(2).all(|w| w[0] <= w[1]), "{epochs:?}");
}

#[test]
fn report_verifies_hashes() {
    let t = Setup::new();
    let cfg = t.config("rep", r#"["wb", "tvd"]"#, "");
    assert_eq!(code(&lab(&["run", s(&cfg)])), 0);
    let root = t.path("out-rep");
    let out = lab(&["report", s(&root)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("privgan.lambda = 1.0") || text.contains("lambda = 1.0"),
        "{text}"
    );
    assert!(text.contains("whitebox"));
    assert!(root.join("metrics.csv").is_file());

    let report = root.join("seed-0/attack_report.json");
    let mut bytes = fs::read(&report).unwrap();
    bytes.push(b' ');
    fs::write(&report, bytes).unwrap();
    let out = lab(&["report", s(&root)]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("integrity"), "{}", stderr(&out));
}

#[test]
fn report_on_edited_config_exits_4() {
    let t = Setup::new();
    let cfg = t.config("edit", r#"["wb"]"#, "");
    assert_eq!(code(&lab(&["run", s(&cfg)])), 0);
    let echo = t.path("out-edit/seed-0/config.toml");
    let text = fs::read_to_string(&echo).unwrap().replace("1.0", "2.0");
    fs::write(&echo, text).unwrap();
    assert_eq!(code(&lab(&["report", s(&t.path("out-edit"))])), 4);
}

#[test]
fn report_without_manifest_exits_4() {
    let t = Setup::new();
    fs::create_dir_all(t.path("empty")).unwrap();
    assert_eq!(code(&lab(&["report", s(&t.path("empty"))])), 4);
    assert_eq!(code(&lab(&["report", s(&t.path("absent"))])), 4);
}

#[test]
fn empty_attack_list_reports_metrics_only() {
    let t = Setup::new();
    let cfg = t.config("noattack", "[]", "");
    assert_eq!(code(&lab(&["run", s(&cfg)])), 0);
    let run = t.path("out-noattack/seed-0");
    assert!(run.join("checkpoint.json").is_file());
    let out = lab(&["report", s(&t.path("out-noattack"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("whitebox - | tvd - | mc -"), "{}", stdout(&out));
}

#[test]
fn attack_subcommand_matches_run_report() {
    let t = Setup::new();
    let cfg = t.config("att", r#"["wb", "tvd", "mc"]"#, "");
    assert_eq!(code(&lab(&["run", s(&cfg)])), 0);
    let run = t.path("out-att/seed-0");
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("attack_report.json")).unwrap()).unwrap();
    let ck = run.join("checkpoint.json");
    for (flag, key) in [("wb", "whitebox"), ("tvd", "tvd"), ("mc", "mc")] {
        let out = lab(&["attack", s(&ck), "--attack", flag]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let got: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(got[key], saved[key], "{flag}");
    }
}

#[test]
fn attack_on_missing_checkpoint_exits_4() {
    let t = Setup::new();
    let out = lab(&["attack", s(&t.path("nope.json")), "--attack", "wb"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn theory_prints_json_with_oracle_agreement() {
    let t = Setup::new();
    let vectors = t.path("v.csv");
    fs::write(&vectors, "# adversary instance\np,0.5,0.3,0.2\nq,0.2,0.2,0.6\nf,0.1\n").unwrap();
    let out = lab(&["theory", "adversary", s(&vectors)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["oracle_agreement"]["agree"], true);

    fs::write(&vectors, "p,0.5,0.6\nq,0.5,0.5\n").unwrap();
    assert_eq!(code(&lab(&["theory", "adversary", s(&vectors)])), 2);
    assert_eq!(code(&lab(&["theory", "nonsense", s(&vectors)])), 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&lab(&[])), 2);
    assert_eq!(code(&lab(&["attack", "x.json", "--attack", "shadow"])), 2);
}
