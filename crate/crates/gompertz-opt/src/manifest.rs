//! One provenance record per run.

use std::path::{Path, PathBuf};

use crate::error::AppResult;
use crate::io::write_text;

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    /// Empty when the configuration could not be resolved.
    pub config_hash: String,
    pub outputs: Vec<PathBuf>,
    pub wall_time: f64,
    pub exit_code: i32,
    /// Resolved configuration, sorted by key.
    pub config: Vec<(String, String)>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = format!("command={}\nconfig_hash={}\n", self.command, self.config_hash);
        let outputs: Vec<String> = self.outputs.iter().map(|p| p.display().to_string()).collect();
        out.push_str(&format!("outputs={}\n", outputs.join(",")));
        out.push_str(&format!("wall_time={:.6}\n", self.wall_time));
        out.push_str(&format!("exit_code={}\n", self.exit_code));
        for (k, v) in &self.config {
            out.push_str(&format!("config.{k}={v}\n"));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> AppResult<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        write_text(&path, &self.render())?;
        Ok(path)
    }
}
