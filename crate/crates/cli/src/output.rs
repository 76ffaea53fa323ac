//! Table, manifest and plot-script writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::config::OutputFormat;

/// Numeric table with optional cells; `None` is written as an empty cell
/// in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    /// Leading `# ` comment lines of the CSV.
    pub comments: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), comments: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().copied().map(Some).collect());
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_json(&self, path: &Path) -> Result<()> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, v)| (k.clone(), v.and_then(Number::from_f64).map_or(Value::Null, Value::Number)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({ "comments": self.comments, "records": records });
        write_json(path, &doc)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Collects the files a command writes under one directory.
#[derive(Debug)]
pub struct OutputSet {
    pub directory: PathBuf,
    formats: Vec<OutputFormat>,
    pub files: Vec<PathBuf>,
    /// Tables in the order written, for the plot script.
    pub tables: Vec<(PathBuf, Table)>,
}

impl OutputSet {
    pub fn create(directory: &Path, formats: &[OutputFormat]) -> Result<Self> {
        std::fs::create_dir_all(directory).with_context(|| format!("creating {}", directory.display()))?;
        Ok(Self { directory: directory.to_path_buf(), formats: formats.to_vec(), files: Vec::new(), tables: Vec::new() })
    }

    /// Writes `<stem>.csv` and/or `<stem>.json` depending on the formats.
    pub fn table(&mut self, stem: &str, table: Table) -> Result<()> {
        let mut csv_path = None;
        for f in &self.formats {
            let path = match f {
                OutputFormat::Csv => {
                    let p = self.directory.join(format!("{stem}.csv"));
                    table.write_csv(&p).with_context(|| format!("writing {}", p.display()))?;
                    csv_path = Some(p.clone());
                    p
                }
                OutputFormat::Json => {
                    let p = self.directory.join(format!("{stem}.json"));
                    table.write_json(&p)?;
                    p
                }
            };
            self.files.push(path);
        }
        if let Some(p) = csv_path {
            self.tables.push((p, table));
        }
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let p = self.directory.join(name);
        write_json(&p, value)?;
        self.files.push(p);
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.directory.join(name);
        std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        self.files.push(p);
        Ok(())
    }

    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.directory).unwrap_or(path).display().to_string()
    }
}

fn column(table: &Table, name: &str) -> Option<usize> {
    table.columns.iter().position(|c| c == name).map(|i| i + 1)
}

/// Gnuplot script plotting every CSV written so far. Tables with a
/// (chirp, area) or (δ, Ω) grid become heat maps; others are line plots of
/// every column against the first.
pub fn gnuplot_script(set: &OutputSet, command: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!("# gnuplot script for `dressed-thermo {command}`; run from this directory.\n"));
    s.push_str("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 900,650\n\n");
    for (path, table) in &set.tables {
        let file = set.relative(path);
        let png = file.trim_end_matches(".csv").to_string() + ".png";
        s.push_str(&format!("set output '{png}'\n"));
        let grid = [("chirp_a_ps2", "theta0_over_pi"), ("delta_ps_inv", "omega_ps_inv")]
            .into_iter()
            .find_map(|(x, y)| Some((x, y, column(table, x)?, column(table, y)?)));
        match grid {
            Some((xn, yn, x, y)) => {
                let z = table.columns.len();
                s.push_str(&format!(
                    "set xlabel '{xn}'\nset ylabel '{yn}'\nset view map\nsplot '{file}' using {x}:{y}:{z} with points pointtype 5 palette notitle\nunset view\n\n"
                ));
            }
            None => {
                let xn = &table.columns[0];
                let curves: Vec<String> =
                    (2..=table.columns.len()).map(|c| format!("'{file}' using 1:{c} with lines")).collect();
                s.push_str(&format!("set xlabel '{xn}'\nunset ylabel\nplot {}\n\n", curves.join(", \\\n     ")));
            }
        }
    }
    s.push_str("unset output\n");
    s
}
