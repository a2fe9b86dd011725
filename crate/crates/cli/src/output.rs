use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use star_core::pipeline::PipelineConfig;
use star_core::{Error, Result};

/// Bumped whenever a summary field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub fn out_dir(cfg: &PipelineConfig) -> Result<PathBuf> {
    let dir = cfg.paths.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Write with `write`, then flush, mapping failures to the path.
pub fn write_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = create(path)?;
    write(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_with(path, |w| w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e)))
}

/// Summary JSON: `{"schema_version", "command", ...fields}`.
pub fn write_summary<T: Serialize>(dir: &Path, command: &str, fields: T) -> Result<()> {
    let mut value = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    let extra = serde_json::to_value(fields).map_err(|e| Error::Unsupported(format!("json: {e}")))?;
    if let (Value::Object(base), Value::Object(more)) = (&mut value, extra) {
        base.extend(more);
    }
    let text = serde_json::to_string_pretty(&value).map_err(|e| Error::Unsupported(format!("json: {e}")))?;
    write_text(&dir.join(format!("{command}_summary.json")), &(text + "\n"))
}

/// The configuration as run, loadable with `--config` to repeat it.
pub fn write_effective_config(dir: &Path, cfg: &PipelineConfig) -> Result<()> {
    write_text(&dir.join("effective_config.toml"), &cfg.to_toml_string()?)
}
