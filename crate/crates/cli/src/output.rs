use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

/// A rectangular table of already formatted cells.
#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, cfg: &RunConfig, extra: &[(String, String)]) -> String {
        match cfg.format {
            Format::Csv => {
                let mut out = String::new();
                for (k, v) in cfg.header().iter().chain(extra) {
                    let _ = writeln!(out, "# {k}={v}");
                }
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for r in &self.rows {
                    out.push_str(&r.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), cell_value(v)))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut doc = json!({ "meta": meta(cfg, extra), "rows": rows });
                pretty(&mut doc)
            }
        }
    }

    pub fn extension(cfg: &RunConfig) -> &'static str {
        match cfg.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn cell_value(s: &str) -> Value {
    s.parse::<f64>()
        .ok()
        .and_then(|x| serde_json::Number::from_f64(x).map(Value::Number))
        .unwrap_or_else(|| Value::String(s.to_string()))
}

pub fn meta(cfg: &RunConfig, extra: &[(String, String)]) -> Value {
    let obj: Map<String, Value> = cfg
        .header()
        .into_iter()
        .chain(extra.iter().cloned())
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    Value::Object(obj)
}

pub fn pretty(v: &mut Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    s
}

/// Shortest round-trip representation; stable across runs.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
