//! Output directory, CSV tables and the run manifest.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub type AnyResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

pub struct Output {
    pub dir: PathBuf,
    start: Instant,
    started_unix: f64,
    files: Vec<String>,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// A CSV table whose last column is the wall clock at the time each row was added.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(cols: &[&str]) -> Table {
        let mut header: Vec<String> = cols.iter().map(|s| s.to_string()).collect();
        header.push("wall_clock".into());
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, out: &Output, values: Vec<String>) {
        assert_eq!(values.len() + 1, self.header.len(), "row width does not match the header");
        let mut v = values;
        v.push(num(out.elapsed()));
        self.rows.push(v);
    }
}

/// Shortest round-trip representation; always uses `.` as decimal separator.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn int<T: ToString>(x: T) -> String {
    x.to_string()
}

impl Output {
    pub fn new(dir: &Path) -> AnyResult<Output> {
        std::fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf(), start: Instant::now(), started_unix: unix_now(), files: Vec::new() })
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> AnyResult<()> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(&table.header)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> AnyResult<()> {
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(self.path(name), text + "\n")?;
        Ok(())
    }

    /// manifest.json: hashes of the effective configuration (and of the
    /// config file when one was given), git revision and timings.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C, config_file: Option<&[u8]>, threads: usize, status: &str) -> AnyResult<()> {
        let resolved = serde_json::to_string(config)?;
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": serde_json::from_str::<serde_json::Value>(&resolved)?,
            "config_sha256": sha256_hex(resolved.as_bytes()),
            "config_file_sha256": config_file.map(sha256_hex),
            "git_rev": git_rev(),
            "threads": threads,
            "parallel": cfg!(feature = "parallel"),
            "status": status,
            "started_unix": self.started_unix,
            "finished_unix": unix_now(),
            "wall_clock": self.elapsed(),
            "outputs": self.files.clone(),
        });
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.path("manifest.json"), text + "\n")?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// HEAD of the repository containing the working directory, else of the
/// source tree this binary was built from.
fn git_rev() -> String {
    let try_dir = |dir: &Path| -> Option<String> {
        let out = std::process::Command::new("git").arg("rev-parse").arg("HEAD").current_dir(dir).output().ok()?;
        if !out.status.success() {
            return None;
        }
        Some(String::from_utf8_lossy(&out.stdout).trim().to_string())
    };
    std::env::current_dir()
        .ok()
        .and_then(|d| try_dir(&d))
        .or_else(|| try_dir(Path::new(env!("CARGO_MANIFEST_DIR"))))
        .unwrap_or_else(|| "unknown".into())
}
