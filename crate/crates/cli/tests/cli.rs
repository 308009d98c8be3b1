use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aiou";

struct Fixture {
    dir: TempDir,
}

/// Small deterministic generator so the fixtures need no RNG crate.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = Lcg(7);
        let mut train = String::from("id\tcorpus\tsentence\ttoken\tcomplexity\n");
        let mut test = String::from("id\tcorpus\tsentence\ttoken\n");
        let mut freq = String::new();
        let mut aoa = String::new();
        for i in 0..160 {
            let syll = 1 + rng.below(4);
            let word: String = (0..syll)
                .flat_map(|_| {
                    [
                        CONSONANTS[rng.below(CONSONANTS.len() as u64) as usize] as char,
                        VOWELS[rng.below(VOWELS.len() as u64) as usize] as char,
                    ]
                })
                .collect();
            let count = rng.below(5000);
            let y = (0.1 * syll as f64 + 0.03 * (8.5 - (count as f64).ln_1p())).clamp(0.0, 1.0);
            train.push_str(&format!("r{i}\tbiomed\tthe {word} was here\t{word}\t{y:.4}\n"));
            if i < 25 {
                test.push_str(&format!("t{i}\teuroparl\twe saw {word} today\t{word}\n"));
            }
            freq.push_str(&format!("{word}\t{count}\n"));
            if i % 2 == 0 {
                aoa.push_str(&format!("{word}\t{}\n", 2.0 + syll as f64));
            }
        }
        let f = Fixture { dir };
        f.write("train.tsv", &train);
        f.write("test.tsv", &test);
        f.write("frequency.tsv", &freq);
        f.write("aoa.tsv", &aoa);
        f.write(
            "run.toml",
            "[data]\ntrain = \"train.tsv\"\ntest = \"test.tsv\"\n\n[forest]\nn_trees = 15\n\n\
             [lexicon.frequency]\npath = \"frequency.tsv\"\n\n[lexicon.aoa_1981]\npath = \"aoa.tsv\"\n",
        );
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }

    fn lcp(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_lcp"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), stdout(o), stderr(o));
}

fn assert_single_line_error(o: &Output, code: i32) -> String {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let err = stderr(o);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error:")).collect();
    assert_eq!(lines.len(), 1, "stderr: {err}");
    lines[0].to_string()
}

fn table_row<'a>(report: &'a str, label: &str) -> &'a str {
    report
        .lines()
        .find(|l| l.starts_with(&format!("| {label} |")))
        .unwrap_or_else(|| panic!("no row {label} in\n{report}"))
}

#[test]
fn train_is_deterministic_and_writes_artifacts() {
    let f = Fixture::new();
    for name in ["a.lcp", "b.lcp"] {
        assert_ok(&f.lcp(&["--config", "run.toml", "--seed", "42", "--quiet", "train", "--model", name]));
    }
    assert_eq!(f.read("a.lcp"), f.read("b.lcp"));
    assert_eq!(f.read("a.lcp.schema.json"), f.read("b.lcp.schema.json"));
    let model = f.read("a.lcp");
    assert!(model.starts_with("LCPMODEL 1\n"));
    assert_eq!(model.lines().filter(|l| l.starts_with("[tree ")).count(), 15);

    let manifest: serde_json::Value = serde_json::from_str(&f.read("a.lcp.manifest")).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert!(manifest["config"].as_str().unwrap().contains("n_trees = 15"));
    let roles: Vec<&str> = manifest["inputs"].as_array().unwrap().iter().map(|i| i["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["train", "lexicon aoa_1981", "lexicon frequency"]);
    assert!(manifest["outputs"][0]["sha256"].as_str().unwrap().len() == 64);

    // a different thread count gives the same bytes
    assert_ok(&f.lcp(&["--config", "run.toml", "--seed", "42", "--threads", "1", "--quiet", "train", "--model", "c.lcp"]));
    assert_eq!(f.read("a.lcp"), f.read("c.lcp"));

    // flags alone reproduce the config-file run
    let flags = [
        "--seed", "42", "--quiet", "train", "--model", "d.lcp", "--train", "train.tsv", "--lexicon",
        "frequency=frequency.tsv", "--lexicon", "aoa_1981=aoa.tsv", "--n-trees", "15",
    ];
    assert_ok(&f.lcp(&flags));
    assert_eq!(f.read("a.lcp"), f.read("d.lcp"));

    assert_ok(&f.lcp(&["--config", "run.toml", "--seed", "43", "--quiet", "train", "--model", "e.lcp"]));
    assert_ne!(f.read("a.lcp"), f.read("e.lcp"));
}

#[test]
fn missing_prevalence_is_a_resource_error() {
    let f = Fixture::new();
    let o = f.lcp(&["--config", "run.toml", "train", "--preset", "lcp_rit", "--model", "m.lcp"]);
    let line = assert_single_line_error(&o, 3);
    assert!(line.contains("prevalence"), "{line}");
    assert!(!f.path("m.lcp").exists());
}

#[test]
fn bad_usage_exits_one() {
    let f = Fixture::new();
    assert_single_line_error(&f.lcp(&["train", "--bogus"]), 1);
    assert_single_line_error(&f.lcp(&["--config", "run.toml", "train", "--model", "m", "--preset", "huge"]), 1);
    assert_single_line_error(&f.lcp(&["train", "--model", "m"]), 1);
    f.write("bad.toml", "[forest]\nn_tress = 3\n");
    assert_single_line_error(&f.lcp(&["--config", "bad.toml", "train", "--model", "m"]), 1);
    assert_single_line_error(&f.lcp(&["--config", "run.toml", "train", "--model", "m", "--n-trees", "0"]), 1);
}

#[test]
fn help_lists_flags_with_defaults() {
    let f = Fixture::new();
    let o = f.lcp(&["train", "--help"]);
    assert_ok(&o);
    let help = stdout(&o);
    for flag in ["--config", "--seed", "--threads", "--quiet", "--model", "--n-trees", "--preset", "--dev-fraction"] {
        assert!(help.contains(flag), "{flag} missing from\n{help}");
    }
    assert!(help.contains("[default: 120]") && help.contains("[default: 0.2]"), "{help}");
    for cmd in ["predict", "evaluate", "ablate", "coverage"] {
        assert_ok(&f.lcp(&[cmd, "--help"]));
    }
}

#[test]
fn data_errors_exit_two() {
    let f = Fixture::new();
    f.write("header_only.tsv", "id\tcorpus\tsentence\ttoken\tcomplexity\n");
    let o = f.lcp(&["--config", "run.toml", "train", "--train", "header_only.tsv", "--model", "m"]);
    assert_single_line_error(&o, 2);
    f.write("broken.tsv", "id\tcorpus\tsentence\ttoken\tcomplexity\nx\tbible\ta b\tb\t1.5\n");
    let o = f.lcp(&["--config", "run.toml", "train", "--train", "broken.tsv", "--model", "m"]);
    assert_single_line_error(&o, 2);
}

#[test]
fn predict_writes_clamped_banded_rows() {
    let f = Fixture::new();
    assert_ok(&f.lcp(&["--config", "run.toml", "--quiet", "train", "--model", "m.lcp"]));
    assert_ok(&f.lcp(&["--config", "run.toml", "--quiet", "predict", "--model", "m.lcp", "--output", "p.tsv"]));
    let text = f.read("p.tsv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id\tprediction\tband"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 25);
    for r in &rows {
        let v: f64 = r[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert_eq!(r[1].split('.').nth(1).unwrap().len(), 3);
        assert!(["very_easy", "easy", "neutral", "difficult", "very_difficult"].contains(&r[2]));
    }
    assert!(f.path("p.tsv.manifest").exists());

    // the sidecar is enough without the config, from any working directory
    let model = f.path("m.lcp");
    let input = f.path("test.tsv");
    let out = f.path("p2.tsv");
    let o = Command::new(env!("CARGO_BIN_EXE_lcp"))
        .current_dir(std::env::temp_dir())
        .args(["--quiet", "predict", "--model"])
        .args([&model, Path::new("--input"), &input, Path::new("--output"), &out])
        .output()
        .unwrap();
    assert_ok(&o);
    assert_eq!(f.read("p2.tsv"), text);
}

#[test]
fn predict_on_header_only_input_is_empty() {
    let f = Fixture::new();
    assert_ok(&f.lcp(&["--config", "run.toml", "--quiet", "train", "--model", "m.lcp"]));
    f.write("empty.tsv", "id\tcorpus\tsentence\ttoken\n");
    let o = f.lcp(&["--quiet", "predict", "--model", "m.lcp", "--input", "empty.tsv"]);
    assert_ok(&o);
    assert_eq!(stdout(&o), "id\tprediction\tband\n");
}

#[test]
fn predict_rejects_mismatched_schema() {
    let f = Fixture::new();
    assert_ok(&f.lcp(&["--config", "run.toml", "--quiet", "train", "--model", "a.lcp"]));
    assert_ok(&f.lcp(&["--config", "run.toml", "--quiet", "train", "--model", "b.lcp", "--families", "length,syllables"]));
    let o = f.lcp(&["--quiet", "predict", "--model", "a.lcp", "--schema", "b.lcp.schema.json", "--input", "test.tsv"]);
    assert_single_line_error(&o, 3);
}

#[test]
fn evaluate_self_check_and_missing_ids() {
    let f = Fixture::new();
    let train = f.read("train.tsv");
    let mut pred = String::from("id\tprediction\n");
    for line in train.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        pred.push_str(&format!("{}\t{}\n", cols[0], cols[4]));
    }
    f.write("self.tsv", &pred);
    let o = f.lcp(&["evaluate", "--predictions", "self.tsv", "--gold", "train.tsv", "--format", "csv", "--report", "r.csv"]);
    assert_ok(&o);
    assert_eq!(f.read("r.csv"), "label,r,rho,mae,mse\nPredictions,1.000,1.000,0.000,0.000\n");
    assert!(f.path("r.csv.manifest").exists());

    let partial: String = pred.lines().filter(|l| !l.starts_with("r7\t") && !l.starts_with("r42\t")).map(|l| format!("{l}\n")).collect();
    f.write("partial.tsv", &partial);
    let o = f.lcp(&["evaluate", "--predictions", "partial.tsv", "--gold", "train.tsv"]);
    let line = assert_single_line_error(&o, 2);
    assert!(line.contains("r7") && line.contains("r42"), "{line}");
}

#[test]
fn ablation_baseline_matches_train() {
    let f = Fixture::new();
    let t = f.lcp(&["--config", "run.toml", "--seed", "5", "train", "--model", "m.lcp"]);
    assert_ok(&t);
    let a = f.lcp(&["--config", "run.toml", "--seed", "5", "ablate", "--candidates", "aoa", "--report", "abl.md"]);
    assert_ok(&a);
    let report = f.read("abl.md");
    let train_row = table_row(&stdout(&t), "Baseline Features").to_string();
    assert_eq!(table_row(&report, "Baseline Features"), train_row);
    table_row(&report, "Average AoAs");
    assert_eq!(report.lines().count(), 4);

    let a2 = f.lcp(&["--config", "run.toml", "--seed", "5", "--quiet", "ablate", "--candidates", "aoa", "--report", "abl2.md"]);
    assert_ok(&a2);
    assert_eq!(f.read("abl2.md"), report);

    let dup = f.lcp(&["--config", "run.toml", "ablate", "--candidates", "length"]);
    assert_single_line_error(&dup, 1);
}

#[test]
fn coverage_reports_fractions() {
    let f = Fixture::new();
    let o = f.lcp(&["--config", "run.toml", "--quiet", "coverage", "--name", "frequency"]);
    assert_ok(&o);
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("frequency\t") && row.ends_with("\t100.00%"), "{out}");

    let o = f.lcp(&["--config", "run.toml", "--quiet", "coverage"]);
    assert_ok(&o);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("aoa\t")), "{out}");
    assert_single_line_error(&f.lcp(&["--config", "run.toml", "coverage", "--name", "arousal"]), 3);
}
