//! Deterministic output files. Every CSV starts with a `#` header
//! block naming the tool version, the command, the config hash, and
//! the seed, so any file can be traced back to the run that produced
//! it; identical configs and seeds produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

/// Provenance stamped into every output file.
#[derive(Debug, Clone)]
pub struct Meta {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Extra `# key: value` lines (e.g. state counts, parameter
    /// snapshots), in the order given.
    pub extra: Vec<(String, String)>,
}

impl Meta {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        Meta {
            command: command.to_owned(),
            config_hash: config_hash.to_owned(),
            seed,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.extra.push((key.to_owned(), value.into()));
        self
    }

    fn header_block(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# aspire {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# command: {}", self.command);
        let _ = writeln!(out, "# config_hash: {}", self.config_hash);
        let _ = writeln!(out, "# seed: {}", self.seed);
        for (k, v) in &self.extra {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }
}

/// Quote a field when it contains a comma, quote, or newline
/// (doubling embedded quotes).
fn escape_field(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

/// Shortest-roundtrip decimal rendering of a float (the `Display`
/// form), so values survive a parse round trip and files stay
/// deterministic.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else if v == 0.0 {
        // Fold negative zero into "0".
        "0".to_owned()
    } else {
        format!("{v}")
    }
}

/// Write a CSV with the provenance header block, one column-name row,
/// and the given body rows.
pub fn write_csv(path: &Path, meta: &Meta, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = meta.header_block();
    out.push_str(
        &columns
            .iter()
            .map(|c| escape_field(c))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len(), "row width mismatch");
        out.push_str(
            &row.iter()
                .map(|f| escape_field(f))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Write a JSON document (pretty, sorted keys) with the provenance
/// embedded under a `meta` object.
pub fn write_json(path: &Path, meta: &Meta, body: serde_json::Value) -> Result<()> {
    let mut root = serde_json::Map::new();
    let mut m = serde_json::Map::new();
    m.insert(
        "artifact".into(),
        format!("aspire {}", env!("CARGO_PKG_VERSION")).into(),
    );
    m.insert("command".into(), meta.command.clone().into());
    m.insert("config_hash".into(), meta.config_hash.clone().into());
    m.insert("seed".into(), meta.seed.into());
    for (k, v) in &meta.extra {
        m.insert(k.clone(), v.clone().into());
    }
    root.insert("meta".into(), serde_json::Value::Object(m));
    match body {
        serde_json::Value::Object(obj) => {
            for (k, v) in obj {
                root.insert(k, v);
            }
        }
        other => {
            root.insert("result".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(root))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create directory {}", dir.display()))?;
        }
    }
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// JSON value for a float, rendering non-finite values as strings
/// (JSON has no NaN/∞ literals).
pub fn json_f64(v: f64) -> serde_json::Value {
    match serde_json::Number::from_f64(v) {
        Some(n) => serde_json::Value::Number(n),
        None => serde_json::Value::String(fmt_f64(v)),
    }
}

pub fn json_f64_slice(vs: &[f64]) -> serde_json::Value {
    serde_json::Value::Array(vs.iter().map(|&v| json_f64(v)).collect())
}
