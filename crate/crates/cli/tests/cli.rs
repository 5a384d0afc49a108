//! CLI behaviour: exit codes, JSON outputs against the shipped schemas,
//! and seeded reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cswitch"))
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn validate(schema_file: &str, instance: &serde_json::Value) {
    let schema: serde_json::Value =
        serde_json::from_slice(&fs::read(schema_dir().join(schema_file)).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{e}"))
        .collect();
    assert!(
        errors.is_empty(),
        "{schema_file} violations: {errors:?}\ninstance: {instance}"
    );
}

fn json_stdout(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let corpus = "\
# langs: en zu
u1 spkA 4.0 the/en inja/zu runs/en
u2 spkB 3.0 dog/en igijima/zu
u3 spkC 5.0 ikati/zu big/en the/en
u4 spkA 2.0 hamba/zu inja/zu
";
        let hyp = "\
# langs: en zu
u1 spkA 4.0 the/en inja/zu runs/en
u2 spkB 3.0 dog/en hamba/zu
u3 spkC 5.0 ikati/zu the/en
u4 spkA 2.0 hamba/zu
";
        let hyp_b = "\
# langs: en zu
u1 spkA 4.0 the/en cat/en runs/en
u2 spkB 3.0 dog/en hamba/zu hamba/zu
u3 spkC 5.0 the/en
u4 spkA 2.0 inja/zu inja/zu
";
        fs::write(dir.path().join("ref.txt"), corpus).unwrap();
        fs::write(dir.path().join("hyp.txt"), hyp).unwrap();
        fs::write(dir.path().join("hypb.txt"), hyp_b).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn stats_json_matches_schema() {
    let f = Fixture::new();
    let out = bin()
        .args(["--json", "stats", "--format", "tagged-text"])
        .arg("--corpus")
        .arg(f.path("ref.txt"))
        .output()
        .unwrap();
    validate("stats.schema.json", &json_stdout(&out));
}

#[test]
fn stats_table_has_the_reference_columns() {
    let f = Fixture::new();
    let out = bin()
        .args(["stats", "--format", "tagged-text"])
        .arg("--corpus")
        .arg(f.path("ref.txt"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let header = text
        .lines()
        .find(|l| l.starts_with("Language"))
        .expect("stats table header");
    for col in [
        "Mono (m)",
        "CS (m)",
        "Subtotal (m)",
        "Word tokens",
        "Word types",
    ] {
        assert!(header.contains(col), "missing column `{col}` in `{header}`");
    }
    assert!(text.lines().any(|l| l.starts_with("Total")));
}

#[test]
fn train_and_perplexity_json_match_schemas() {
    let f = Fixture::new();
    let out = bin()
        .args([
            "--json",
            "train-lm",
            "--format",
            "tagged-text",
            "--order",
            "2",
        ])
        .arg("--corpus")
        .arg(f.path("ref.txt"))
        .arg("--out")
        .arg(f.path("m.arpa"))
        .arg("--write-vocab")
        .arg(f.path("m.vocab"))
        .output()
        .unwrap();
    validate("train_lm.schema.json", &json_stdout(&out));

    let out = bin()
        .args(["--json", "perplexity", "--format", "tagged-text", "--cs"])
        .arg("--model")
        .arg(f.path("m.arpa"))
        .arg("--vocab")
        .arg(f.path("m.vocab"))
        .arg("--text")
        .arg(f.path("ref.txt"))
        .output()
        .unwrap();
    let report = json_stdout(&out);
    validate("perplexity.schema.json", &report);
    assert!(
        report["cs"]["cpp"].is_object(),
        "mixed text has switch points"
    );
}

#[test]
fn interpolate_json_matches_schema_and_loads_back() {
    let f = Fixture::new();
    for (name, order) in [("a.arpa", 1), ("b.arpa", 2)] {
        let out = bin()
            .args(["train-lm", "--format", "tagged-text"])
            .args(["--order", &order.to_string()])
            .arg("--corpus")
            .arg(f.path("ref.txt"))
            .arg("--out")
            .arg(f.path(name))
            .arg("--write-vocab")
            .arg(f.path("shared.vocab"))
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let out = bin()
        .args(["--json", "interpolate", "--format", "tagged-text"])
        .arg("--models")
        .arg(format!(
            "{},{}",
            f.path("a.arpa").display(),
            f.path("b.arpa").display()
        ))
        .arg("--vocab")
        .arg(f.path("shared.vocab"))
        .arg("--dev")
        .arg(f.path("ref.txt"))
        .arg("--out")
        .arg(f.path("mix.json"))
        .output()
        .unwrap();
    validate("mixture.schema.json", &json_stdout(&out));

    // The mixture file is itself a loadable model.
    let out = bin()
        .args(["--json", "perplexity", "--format", "tagged-text"])
        .arg("--model")
        .arg(f.path("mix.json"))
        .arg("--vocab")
        .arg(f.path("shared.vocab"))
        .arg("--text")
        .arg(f.path("ref.txt"))
        .output()
        .unwrap();
    validate("perplexity.schema.json", &json_stdout(&out));
}

#[test]
fn score_and_bootstrap_json_match_schemas() {
    let f = Fixture::new();
    let out = bin()
        .args([
            "--json",
            "score",
            "--format",
            "tagged-text",
            "--switch-metrics",
        ])
        .arg("--ref")
        .arg(f.path("ref.txt"))
        .arg("--hyp")
        .arg(f.path("hyp.txt"))
        .output()
        .unwrap();
    validate("score.schema.json", &json_stdout(&out));

    let out = bin()
        .args(["--json", "bootstrap", "--format", "tagged-text"])
        .args(["--seed", "7", "--resamples", "1000"])
        .arg("--ref")
        .arg(f.path("ref.txt"))
        .arg("--hyp-a")
        .arg(f.path("hyp.txt"))
        .arg("--hyp-b")
        .arg(f.path("hypb.txt"))
        .output()
        .unwrap();
    validate("bootstrap.schema.json", &json_stdout(&out));
}

#[test]
fn select_json_matches_schema() {
    let f = Fixture::new();
    // Decode dump over the fixture utterances via the simulator.
    let out = bin()
        .args([
            "simulate",
            "decode",
            "--format",
            "tagged-text",
            "--seed",
            "3",
        ])
        .arg("--truth")
        .arg(f.path("ref.txt"))
        .arg("--out")
        .arg(f.path("decodes.jsonl"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = bin()
        .args(["--json", "select", "--format", "tagged-text"])
        .args(["--threshold-mode", "tp1", "--pass", "1"])
        .arg("--decodes")
        .arg(f.path("decodes.jsonl"))
        .arg("--corpus")
        .arg(f.path("ref.txt"))
        .arg("--out-dir")
        .arg(f.path("sel"))
        .output()
        .unwrap();
    validate("pass_report.schema.json", &json_stdout(&out));
    assert!(f.path("sel/autot.pass1.manifest").exists());
    assert!(f.path("sel/autot.pass1.jsonl").exists());
}

#[test]
fn exit_codes_cover_usage_data_and_success() {
    let f = Fixture::new();
    // 0: success.
    let ok = bin()
        .args(["stats", "--format", "tagged-text"])
        .arg("--corpus")
        .arg(f.path("ref.txt"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));

    // 1: usage errors (unknown subcommand; missing required seed).
    let usage = bin().arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
    let noseed = bin()
        .args(["bootstrap", "--format", "tagged-text"])
        .arg("--ref")
        .arg(f.path("ref.txt"))
        .arg("--hyp-a")
        .arg(f.path("hyp.txt"))
        .arg("--hyp-b")
        .arg(f.path("hypb.txt"))
        .output()
        .unwrap();
    assert_eq!(
        noseed.status.code(),
        Some(1),
        "missing --seed is a usage error"
    );

    // 2: data errors (missing file; malformed corpus).
    let missing = bin()
        .args(["stats", "--corpus", "/nonexistent/corpus.jsonl"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    fs::write(f.path("bad.txt"), "# langs: en\nu1 spk notanumber x/en\n").unwrap();
    let malformed = bin()
        .args(["stats", "--format", "tagged-text"])
        .arg("--corpus")
        .arg(f.path("bad.txt"))
        .output()
        .unwrap();
    assert_eq!(malformed.status.code(), Some(2));

    // --help exits 0.
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn seeded_commands_are_reproducible() {
    let f = Fixture::new();
    let run = |seed: &str| {
        bin()
            .args(["--json", "bootstrap", "--format", "tagged-text"])
            .args(["--seed", seed, "--resamples", "1000"])
            .arg("--ref")
            .arg(f.path("ref.txt"))
            .arg("--hyp-a")
            .arg(f.path("hyp.txt"))
            .arg("--hyp-b")
            .arg(f.path("hypb.txt"))
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("11"), run("11"));
    assert_ne!(run("11"), run("12"));

    let sim = |seed: &str| -> Vec<u8> {
        let out = bin()
            .args([
                "simulate",
                "decode",
                "--format",
                "tagged-text",
                "--seed",
                seed,
            ])
            .arg("--truth")
            .arg(f.path("ref.txt"))
            .args(["--out", "-"])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(sim("5"), sim("5"));
    assert_ne!(sim("5"), sim("6"));
}

#[test]
fn unknown_lang_in_corpus_names_the_line() {
    let f = Fixture::new();
    fs::write(f.path("qq.txt"), "# langs: en\nu1 spk 1.0 sawubona/qq\n").unwrap();
    let out = bin()
        .args(["stats", "--format", "tagged-text"])
        .arg("--corpus")
        .arg(f.path("qq.txt"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("qq") && err.contains("2"), "stderr: {err}");
}
