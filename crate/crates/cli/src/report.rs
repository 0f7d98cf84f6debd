use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

/// Wall-clock time of each named stage, in order.
pub struct Timings {
    start: Instant,
    stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
            stages: Vec::new(),
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages
            .push((stage.to_string(), t.elapsed().as_secs_f64()));
        out
    }

    fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for (k, v) in &self.stages {
            m.insert(format!("{k}_seconds"), json!(v));
        }
        m.insert(
            "total_seconds".into(),
            json!(self.start.elapsed().as_secs_f64()),
        );
        Value::Object(m)
    }
}

/// Writes `name` into `dir`: the argument vector, versions, thread count,
/// the effective configuration, stage timings and command results.
pub fn write_report(
    dir: &Path,
    name: &str,
    command: &str,
    config: &impl Serialize,
    timings: &Timings,
    result: Value,
) -> anyhow::Result<PathBuf> {
    let report = json!({
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "config": config,
        "timings": timings.to_json(),
        "result": result,
    });
    write_json(&dir.join(name), &report)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<PathBuf> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path.to_path_buf())
}
