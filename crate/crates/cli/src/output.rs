//! Tables and their on-disk form.
//!
//! CSV files start with `#` lines holding the tool version, the command, the
//! table name and the resolved recipe as one line of JSON; a JSON artifact
//! carries the same in its `header` object. Either is enough to rerun the
//! experiment with `sshh --replay <file>`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliError;
use crate::recipe::{Format, Recipe};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }
}

/// Everything one command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub recipe: Recipe,
    /// The first table is the main one.
    pub tables: Vec<Table>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn file_name(command: &str, table: &str, index: usize, ext: &str) -> String {
    if index == 0 {
        format!("{command}.{ext}")
    } else {
        format!("{command}_{table}.{ext}")
    }
}

impl Artifact {
    fn header_lines(&self, table: &str) -> Vec<String> {
        vec![
            format!("# sshh {TOOL_VERSION}"),
            format!("# command: {}", self.recipe.command.name()),
            format!("# table: {table}"),
            "# units: energies in J, times in 1/J".to_string(),
            format!("# recipe: {}", self.recipe.to_json()),
        ]
    }

    /// `(file name, contents)` for every file of the artifact.
    pub fn render(&self, format: Format) -> Result<Vec<(String, Vec<u8>)>, CliError> {
        let command = self.recipe.command.name();
        match format {
            Format::Csv => self
                .tables
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let mut buf = Vec::new();
                    for line in self.header_lines(&t.name) {
                        writeln!(buf, "{line}")?;
                    }
                    let mut w = csv::Writer::from_writer(buf);
                    w.write_record(&t.columns)?;
                    for row in &t.rows {
                        w.write_record(row.iter().map(cell))?;
                    }
                    let buf = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
                    Ok((file_name(command, &t.name, i, "csv"), buf))
                })
                .collect(),
            Format::Json => {
                let tables: serde_json::Map<String, Value> = self
                    .tables
                    .iter()
                    .map(|t| (t.name.clone(), json!({ "columns": t.columns, "rows": t.rows })))
                    .collect();
                let doc = json!({
                    "header": {
                        "sshh": TOOL_VERSION,
                        "command": command,
                        "units": "energies in J, times in 1/J",
                        "recipe": serde_json::to_value(&self.recipe).expect("recipes serialize"),
                    },
                    "tables": tables,
                });
                let mut text = serde_json::to_vec_pretty(&doc).expect("artifacts serialize");
                text.push(b'\n');
                Ok(vec![(format!("{command}.json"), text)])
            }
        }
    }

    /// Write every file to a temporary name in `dir`, then rename them all.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let files = self.render(format)?;
        fs::create_dir_all(dir)?;
        let mut staged = Vec::new();
        for (name, bytes) in &files {
            let mut tmp = tempfile::Builder::new().prefix(".sshh-").tempfile_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            staged.push((tmp, dir.join(name)));
        }
        let mut paths = Vec::new();
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| CliError::Io(e.to_string()))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Recipe stored in the header of an output file.
pub fn recipe_from_artifact(text: &str) -> Result<Recipe, CliError> {
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        let recipe = doc
            .get("header")
            .and_then(|h| h.get("recipe"))
            .ok_or_else(|| CliError::Schema("JSON artifact has no header.recipe".into()))?;
        return Recipe::from_json(&recipe.to_string());
    }
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(json) = line.strip_prefix("# recipe: ") {
            return Recipe::from_json(json);
        }
    }
    Err(CliError::Schema("no `# recipe:` line in the file header".into()))
}
