//! The `brainnet` binary against small EDF files written on the fly.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use brainnet::edf::{write_edf, EdfHeader, EdfSynthSignal, SignalHeader};
use brainnet::STANDARD_CHANNELS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SOURCE_RATE: usize = 500;
const SECONDS: usize = 110;

/// One EDF with the given channels at 500 Hz, 1 s records.
fn write_recording(path: &Path, labels: &[&str], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signals: Vec<EdfSynthSignal> = labels
        .iter()
        .map(|l| EdfSynthSignal {
            header: SignalHeader {
                label: (*l).into(),
                transducer: String::new(),
                physical_dimension: "uV".into(),
                physical_min: -500.0,
                physical_max: 500.0,
                digital_min: -32768,
                digital_max: 32767,
                prefiltering: String::new(),
                samples_per_record: SOURCE_RATE,
                reserved: String::new(),
            },
            digital: (0..SOURCE_RATE * SECONDS).map(|_| rng.random_range(-3000..3000)).collect(),
        })
        .collect();
    let header = EdfHeader {
        version: "0".into(),
        patient_info: "X X X X".into(),
        recording_info: "Startdate X X X X".into(),
        start_datetime: chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
        header_bytes: 256 * (labels.len() + 1),
        reserved: String::new(),
        n_data_records: SECONDS as i64,
        record_duration: 1.0,
        n_signals: labels.len(),
    };
    std::fs::write(path, write_edf(&header, &signals)).unwrap();
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    /// Two usable recordings plus a manifest listing them.
    fn new() -> Self {
        let f = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        let mut with_extra: Vec<&str> = STANDARD_CHANNELS.to_vec();
        with_extra.insert(2, "ECG1-ECG2");
        write_recording(&f.path("ins1.edf"), &with_extra, 1);
        write_recording(&f.path("n1.edf"), &STANDARD_CHANNELS, 2);
        f.manifest("manifest.csv", &[("ins1.edf", "ins1", "insomnia"), ("n1.edf", "n1", "control")]);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn manifest(&self, name: &str, rows: &[(&str, &str, &str)]) -> PathBuf {
        let mut text = String::from("file_path,subject_id,class_label\n");
        for (file, subject, label) in rows {
            text.push_str(&format!("{file},{subject},{label}\n"));
        }
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_brainnet"))
            .args(args)
            .arg("--output-dir")
            .arg(self.path("out"))
            .env_remove("BRAINNET_OUTPUT_DIR")
            .output()
            .unwrap()
    }
}

fn caches(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn preprocess_writes_caches_and_log_deterministically() {
    let f = Fixture::new();
    let manifest = f.path("manifest.csv");
    let args = ["preprocess", "--manifest", manifest.to_str().unwrap(), "--window", "50"];
    let out = f.run(&args);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let files = caches(&f.path("out/cache"));
    assert_eq!(files.len(), 2);
    let first: Vec<Vec<u8>> = files.iter().map(|p| std::fs::read(p).unwrap()).collect();

    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(f.path("out/preprocess_log.json")).unwrap()).unwrap();
    let recs = log["recordings"].as_array().unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0]["variants"][0]["windows"], 2);
    assert_eq!(recs[0]["source_rates_hz"][0], 500.0);
    assert_eq!(recs[0]["channels"].as_array().unwrap().len(), 5);

    let again = f.run(&args);
    assert!(again.status.success());
    assert_eq!(caches(&f.path("out/cache")), files);
    let second: Vec<Vec<u8>> = files.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert_eq!(first, second);
}

#[test]
fn other_window_lengths_get_separate_caches() {
    let f = Fixture::new();
    let manifest = f.path("manifest.csv");
    for w in ["50", "30"] {
        let out = f.run(&["preprocess", "--manifest", manifest.to_str().unwrap(), "--window", w]);
        assert!(out.status.success());
    }
    assert_eq!(caches(&f.path("out/cache")).len(), 4);
}

#[test]
fn preprocess_missing_file_exits_2_naming_it() {
    let f = Fixture::new();
    let manifest = f.manifest(
        "broken.csv",
        &[("ins1.edf", "ins1", "insomnia"), ("gone.edf", "n9", "control")],
    );
    let out = f.run(&["preprocess", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("gone.edf"), "{}", text(&out.stderr));
    let left = f.path("out/cache");
    assert!(!left.exists() || caches(&left).is_empty(), "partial outputs left: {:?}", caches(&left));
}

#[test]
fn validate_reports_status_per_recording() {
    let f = Fixture::new();
    let good = f.path("manifest.csv");
    let out = f.run(&["validate", "--manifest", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert_eq!(text(&out.stdout).matches("usable ").count(), 2);

    write_recording(&f.path("partial.edf"), &STANDARD_CHANNELS[..3], 3);
    let mixed = f.manifest(
        "mixed.csv",
        &[("ins1.edf", "ins1", "insomnia"), ("partial.edf", "n2", "control")],
    );
    let out = f.run(&["validate", "--manifest", mixed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("unusable  n2"), "{stdout}");
    assert!(stdout.contains("missing channel P4-O2"), "{stdout}");

    let empty = f.manifest("empty.csv", &[]);
    let out = f.run(&["validate", "--manifest", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stdout).contains("no recordings"));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let f = Fixture::new();
    let cfg = f.path("run.toml");
    std::fs::write(&cfg, "manifest = \"manifest.csv\"\nwindow_seconds = 30\n").unwrap();
    let out = f.run(&["--config", cfg.to_str().unwrap(), "preprocess", "--window", "50"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let log = std::fs::read_to_string(f.path("out/preprocess_log.json")).unwrap();
    let log: serde_json::Value = serde_json::from_str(&log).unwrap();
    assert_eq!(log["config"]["window_seconds"], 50.0);
    assert_eq!(log["recordings"][0]["variants"][0]["windows"], 2);

    std::fs::write(&cfg, "windw = 3\n").unwrap();
    let out = f.run(&["--config", cfg.to_str().unwrap(), "validate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_dumps_cached_graphs() {
    let f = Fixture::new();
    let manifest = f.path("manifest.csv");
    assert!(f.run(&["preprocess", "--manifest", manifest.to_str().unwrap()]).status.success());
    let cache = f.path("out/cache");

    let csv_path = f.path("graphs.csv");
    let out = f.run(&["export", "--format", "csv", "--input", cache.to_str().unwrap(), "--output", csv_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("subject_id,window_index,class_label,matrix,row,col,value"));
    // 4 graphs, 5x5 connectivity plus 5x6 features each
    assert_eq!(lines.count(), 4 * (25 + 30));

    let out = f.run(&["export", "--format", "json", "--input", caches(&cache)[0].to_str().unwrap()]);
    assert!(out.status.success());
    let graphs: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(graphs.as_array().unwrap().len(), 2);

    let out = f.run(&["export", "--input", f.path("manifest.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
