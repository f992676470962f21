//! Command-line driver: reads a JSON experiment config, runs it, and writes
//! CSV/JSON outputs plus a `manifest.json` into the output directory.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config error, 3 numerical failure.
//! Failures print a single JSON error record on stderr.

pub mod config;
pub mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

pub use config::{Experiment, RunConfig, Violation};
pub use experiments::Artifact;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "intent-markets", version, about = "Run intent-market solver competition experiments")]
pub struct Args {
    /// Experiment config (JSON)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the config
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed, overriding the config
    #[arg(long)]
    pub seed: Option<u64>,
    /// List the available experiments and exit
    #[arg(long)]
    pub list: bool,
}

pub fn catalog() -> String {
    let mut s = String::from("experiments:\n");
    for e in Experiment::ALL {
        s.push_str(&format!("  {:<18} -> {}\n", e.name(), e.reproduces()));
        s.push_str(&format!("  {:<18}    parameters: {}\n", "", e.parameters()));
    }
    s
}

fn report(kind: &str, body: serde_json::Value) {
    let mut record = json!({ "error": kind });
    if let (Some(r), Some(b)) = (record.as_object_mut(), body.as_object()) {
        r.extend(b.clone());
    }
    eprintln!("{record}");
}

/// Writes the artifacts and then the manifest that lists them.
pub fn write_outputs(cfg: &RunConfig, artifacts: &[Artifact]) -> std::io::Result<PathBuf> {
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.bytes)?;
    }
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = json!({
        "experiment": cfg.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": cfg.echo,
        "outputs": artifacts.iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
        "created_unix": created,
    });
    let path = dir.join(MANIFEST);
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    fs::write(&path, bytes)?;
    Ok(path)
}

fn load(path: &Path, args: &Args) -> Result<RunConfig, Vec<Violation>> {
    let text = fs::read_to_string(path).map_err(|e| {
        vec![Violation {
            field: "<file>".into(),
            reason: format!("{}: {e}", path.display()),
        }]
    })?;
    config::parse(&text, args.out.clone(), args.seed)
}

pub fn run(args: &Args) -> i32 {
    if args.list {
        print!("{}", catalog());
        return 0;
    }
    let Some(path) = &args.config else {
        report(
            "config",
            json!({"violations": [{"field": "--config", "reason": "is required unless --list is given"}]}),
        );
        return EXIT_CONFIG;
    };
    let cfg = match load(path, args) {
        Ok(c) => c,
        Err(violations) => {
            report("config", json!({ "violations": violations }));
            return EXIT_CONFIG;
        }
    };
    let artifacts = match experiments::run(&cfg) {
        Ok(a) => a,
        Err(e) => {
            report("numerical", json!({"experiment": cfg.experiment.name(), "message": e.to_string()}));
            return EXIT_NUMERICAL;
        }
    };
    match write_outputs(&cfg, &artifacts) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            0
        }
        Err(e) => {
            report("io", json!({"message": e.to_string()}));
            EXIT_IO
        }
    }
}

pub fn main() -> i32 {
    run(&Args::parse())
}
