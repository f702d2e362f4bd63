//! Regenerates the trace CSVs under `data/scenarios`.
//!
//! Usage: `cargo run --example gen_traces [out-dir]`

use std::fs::File;
use std::path::PathBuf;

use migplan::workload::generate::{periodic, uniform, BurstyPair};
use migplan::workload::{write_trace_csv, InferenceTrace};

fn write(dir: &PathBuf, name: &str, models: &[&str], trace: &InferenceTrace) {
    let path = dir.join(name);
    let names: Vec<String> = models.iter().map(|s| s.to_string()).collect();
    write_trace_csv(File::create(&path).expect("create trace file"), &names, trace).expect("write trace");
    println!("wrote {}", path.display());
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios"));
    std::fs::create_dir_all(&dir).expect("create output directory");

    let bursty = BurstyPair {
        seconds: 800,
        phase: 25,
        offset: 0,
        high: [36, 60],
        low: [6, 8],
        jitter: 3,
        seed: 11,
    };
    write(&dir, "bursty.csv", &["vit", "resnet"], &bursty.generate());

    write(&dir, "uniform.csv", &["vit", "resnet"], &uniform(2, 400, 5, 30, 7));

    let day = BurstyPair { seconds: 200, phase: 40, offset: 10, high: [30, 50], low: [8, 10], jitter: 2, seed: 5 };
    write(&dir, "periodic.csv", &["vit", "resnet"], &periodic(&day.generate().counts, 3));
}
