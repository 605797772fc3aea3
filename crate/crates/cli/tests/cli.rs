use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self { dir: tempfile::tempdir().unwrap() };
        let mut csv = String::from("x,y,label\n");
        for i in 0..120u32 {
            let label = i % 2;
            let x = f64::from(i % 17) + 20.0 * f64::from(label);
            let y = f64::from((i * 7) % 13);
            csv += &format!("{x},{y},{label}\n");
        }
        fs::write(ws.path("raw.csv"), csv).unwrap();
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_ethereal")).args(args).output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn err(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
        String::from_utf8(out.stderr).unwrap()
    }

    fn booleanize(&self) {
        self.ok(&[
            "booleanize", "--input", &self.arg("raw.csv"), "--header", "--bins", "4", "--encoding", "thermometer",
            "--test-fraction", "0.25", "--split-seed", "1", "--out", &self.arg("train.lit"),
            "--test-out", &self.arg("test.lit"),
        ]);
    }

    fn train(&self, extra: &[&str]) -> String {
        self.train_seeded("5", extra)
    }

    fn train_seeded(&self, seed: &str, extra: &[&str]) -> String {
        let mut args = vec![
            "train".to_string(), "--data".into(), self.arg("train.lit"), "--test".into(), self.arg("test.lit"),
            "--clauses".into(), "8".into(), "--T".into(), "4".into(), "--s".into(), "3".into(),
            "--epochs".into(), "6".into(), "--seed".into(), seed.into(), "--out".into(), self.arg("m.ethl"),
            "--trace".into(), self.arg("trace.csv"), "--bank-dump".into(), self.arg("bank.bin"), "--quiet".into(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        self.ok(&refs)
    }
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn pipeline_end_to_end() {
    let ws = Workspace::new();
    ws.booleanize();
    assert!(ws.path("train.lit.manifest").is_file());
    ws.train(&["--ethereal", "--warmup", "2", "--interval", "2"]);

    let eval = ws.ok(&["eval", "--model", &ws.arg("m.ethl"), "--data", &ws.arg("test.lit")]);
    for key in ["accuracy:", "includes_per_clause:", "size_bytes:", "literal_reads:"] {
        assert!(eval.contains(key), "{eval}");
    }
    let size: usize = eval.lines().find_map(|l| l.strip_prefix("size_bytes: ")).unwrap().parse().unwrap();
    assert_eq!(size, fs::metadata(ws.path("m.ethl")).unwrap().len() as usize);

    ws.ok(&["infer", "--model", &ws.arg("m.ethl"), "--data", &ws.arg("test.lit"), "--out", &ws.arg("p.csv")]);
    let preds = lines(&ws.path("p.csv"));
    assert_eq!(preds[0], "sample,label,predicted,sum_0,sum_1");
    assert_eq!(preds.len(), 31);

    ws.ok(&["heatmap", "--bank-dump", &ws.arg("bank.bin"), "--class", "1", "--out", &ws.arg("h.csv")]);
    assert_eq!(lines(&ws.path("h.csv"))[0], "literal_index,positive_count,negative_count");

    ws.ok(&["tradeoff", "--trace", &ws.arg("trace.csv"), "--out", &ws.arg("t.csv")]);
    let rows = lines(&ws.path("t.csv"));
    assert_eq!(rows[0], "epoch,phase,includes_per_clause,accuracy");
    let phases: Vec<&str> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    // Exclusions follow epochs 2 and 4; none after the final epoch.
    assert_eq!(phases.iter().filter(|p| **p == "after-exclusion").count(), 2);
    assert_eq!(phases.len(), 8);
}

#[test]
fn vanilla_trace_has_only_training_rows() {
    let ws = Workspace::new();
    ws.booleanize();
    ws.train(&[]);
    let rows = lines(&ws.path("trace.csv"));
    assert_eq!(rows.len(), 7);
    assert!(rows[1..].iter().all(|r| r.contains(",after-training,")));
}

#[test]
fn repeated_training_is_byte_identical() {
    let ws = Workspace::new();
    ws.booleanize();
    let read = || ["m.ethl", "trace.csv", "bank.bin"].map(|f| fs::read(ws.path(f)).unwrap());
    ws.train(&["--ethereal"]);
    let first = read();
    ws.train(&["--ethereal"]);
    assert_eq!(first, read());
    ws.train_seeded("6", &["--ethereal"]);
    assert_ne!(first[0..2], read()[0..2]);
}

#[test]
fn config_values_yield_to_flags() {
    let ws = Workspace::new();
    ws.booleanize();
    fs::write(ws.path("run.conf"), "# example\nclauses = 4\nepochs = 2\n").unwrap();
    let conf = ws.arg("run.conf");
    ws.train(&["--config", &conf]);
    let manifest = fs::read_to_string(ws.path("m.ethl.manifest")).unwrap();
    assert!(manifest.contains("clauses = 8\n"), "{manifest}");
    assert!(manifest.contains("epochs = 6\n"));
    assert!(manifest.contains("data-sha256 = "));
}

#[test]
fn manifest_detects_changed_inputs() {
    let ws = Workspace::new();
    ws.booleanize();
    ws.train(&[]);
    let manifest = ws.arg("m.ethl.manifest");
    ws.ok(&["train", "--config", &manifest]);
    let mut data = fs::read_to_string(ws.path("train.lit")).unwrap();
    data.push('\n');
    fs::write(ws.path("train.lit"), data).unwrap();
    let err = ws.err(&["train", "--config", &manifest]);
    assert!(err.contains("changed since the manifest"), "{err}");
}

#[test]
fn bad_invocations_fail_with_a_message() {
    let ws = Workspace::new();
    ws.booleanize();
    assert!(!ws.err(&["train", "--bogus"]).is_empty());
    assert!(ws.err(&["eval", "--model", &ws.arg("none.ethl"), "--data", &ws.arg("test.lit")]).contains("none.ethl"));

    fs::write(ws.path("bad.conf"), "clauses 8\n").unwrap();
    assert!(ws.err(&["train", "--config", &ws.arg("bad.conf")]).contains("key = value"));
    fs::write(ws.path("dup.conf"), "seed = 1\nseed = 2\n").unwrap();
    assert!(ws.err(&["train", "--config", &ws.arg("dup.conf")]).contains("duplicate"));
    fs::write(ws.path("unknown.conf"), "colour = blue\n").unwrap();
    assert!(ws.err(&["eval", "--config", &ws.arg("unknown.conf"), "--model", "x", "--data", "y"]).contains("colour"));

    fs::write(ws.path("junk.ethl"), b"ETHL\x02").unwrap();
    assert!(!ws.err(&["eval", "--model", &ws.arg("junk.ethl"), "--data", &ws.arg("test.lit")]).is_empty());
    let err = ws.err(&["train", "--data", &ws.arg("train.lit"), "--clauses", "3", "--T", "4", "--s", "3",
        "--epochs", "1", "--seed", "0", "--out", &ws.arg("m.ethl")]);
    assert!(err.contains("even"), "{err}");
}

fn idx_file(dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut out = vec![0, 0, 0x08, dims.len() as u8];
    for d in dims {
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(payload);
    out
}

#[test]
fn booleanizes_idx_images() {
    let ws = Workspace::new();
    let pixels: Vec<u8> = (0..3 * 4).map(|i| (i * 20) as u8).collect();
    fs::write(ws.path("img.idx"), idx_file(&[3, 2, 2], &pixels)).unwrap();
    fs::write(ws.path("lbl.idx"), idx_file(&[3], &[0, 1, 2])).unwrap();
    ws.ok(&["booleanize", "--idx", &ws.arg("img.idx"), &ws.arg("lbl.idx"), "--threshold", "75", "--out", &ws.arg("i.lit")]);
    let rows = lines(&ws.path("i.lit"));
    assert_eq!(rows[0], "LITv1 3 8 3");
    // Pixels 0,20,40,60 | 80,100,120,140 | 160,180,200,220 against 75.
    assert_eq!(rows[1], "00001111 0");
    assert_eq!(rows[2], "11110000 1");
    assert_eq!(rows[3], "11110000 2");
}
