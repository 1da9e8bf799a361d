//! CSV tables with `#` metadata and the JSON summary envelope.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Column {
    pub name: String,
    pub unit: &'static str,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: &'static str, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit,
            values,
        }
    }
}

/// Column-oriented numeric table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    /// Extra `# key = value` lines, after the config echo.
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            meta: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn to_csv(&self, command: &str, cfg: &RunConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# otoc-criticality {command}");
        let _ = writeln!(s, "# schema_version = {SCHEMA_VERSION}");
        for (k, v) in cfg.echo() {
            let _ = writeln!(s, "# config.{k} = {v}");
        }
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let units: Vec<String> = self.columns.iter().map(|c| format!("{}[{}]", c.name, c.unit)).collect();
        let _ = writeln!(s, "# units = {}", units.join(","));
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for i in 0..self.rows() {
            let row: Vec<String> = self.columns.iter().map(|c| c.values[i].to_string()).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let columns: Vec<Value> = self
            .columns
            .iter()
            .map(|c| json!({ "name": c.name, "unit": c.unit }))
            .collect();
        let mut data = Map::new();
        for c in &self.columns {
            data.insert(c.name.clone(), json!(c.values));
        }
        json!({ "columns": columns, "data": data })
    }
}

/// RFC 3339 UTC; `SOURCE_DATE_EPOCH` pins it for reproducible builds.
pub fn produced_at() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok());
    let when = match secs {
        Some(s) => chrono::DateTime::from_timestamp(s, 0).unwrap_or_default(),
        None => chrono::Utc::now(),
    };
    when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn envelope(command: &str, cfg: &RunConfig, tables: &[(&str, &Table)], summary: impl Serialize) -> Value {
    let config: Map<String, Value> = cfg
        .echo()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let mut t = Map::new();
    for (name, table) in tables {
        t.insert(name.to_string(), table.to_json());
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "produced_at": produced_at(),
        "tables": t,
        "summary": summary,
    })
}

pub struct Writer {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, command: &str, cfg: &RunConfig, table: &Table) -> Result<(), CliError> {
        self.put(name, &table.to_csv(command, cfg))
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
        text.push('\n');
        self.put(name, &text)
    }
}

/// Reads back the `# config.key = value` lines of a CSV written by [`Table::to_csv`].
pub fn config_from_csv(text: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.strip_prefix("# config.") {
            if let Some((k, v)) = rest.split_once(" = ") {
                cfg.set(k, v)?;
            }
        }
    }
    Ok(cfg)
}

/// Reads back the `config` object of a JSON envelope.
pub fn config_from_json(value: &Value) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let obj = value
        .get("config")
        .and_then(Value::as_object)
        .ok_or_else(|| CliError::config("config", "envelope has no config object"))?;
    for (k, v) in obj {
        let v = v
            .as_str()
            .ok_or_else(|| CliError::config(k, "echoed value is not a string"))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}
