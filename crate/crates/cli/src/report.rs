use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

/// JSON summary of one command run.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    pub stages: Vec<Stage>,
    pub outputs: Vec<PathBuf>,
    pub version: &'static str,
    pub result: Value,
}

#[derive(Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().collect(),
            config: Value::Null,
            stages: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION"),
            result: Value::Null,
        }
    }

    /// Runs `f` as a named stage, logging its duration to stderr.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let seconds = start.elapsed().as_secs_f64();
        eprintln!("[{}] {name}: {seconds:.3}s", self.command);
        self.stages.push(Stage {
            name: name.to_string(),
            seconds,
        });
        out
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }
}

/// `<prefix><suffix>`, e.g. `runs/star` + `_trace.csv`.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
