//! Result files and the run manifest.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use kred_core::simulate::{Comparison, EnsembleSummary, ScalingRow};

use crate::CliError;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything needed to repeat a run: the command, its inputs and every
/// option value, including defaults.
#[derive(Serialize)]
pub struct Manifest {
    command: &'static str,
    models: Vec<String>,
    config: serde_json::Value,
    seed: Option<u64>,
    version: &'static str,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, models: &[&Path], config: serde_json::Value, seed: Option<u64>) -> Self {
        Manifest {
            command,
            models: models.iter().map(|p| p.display().to_string()).collect(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs: Vec::new(),
        }
    }
}

/// `inf` and `NaN` are written as Rust prints them.
fn num(v: f64) -> String {
    v.to_string()
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Writes named outputs into a directory, or to standard output when no
/// directory is given. Per-observable tables are merged into one long
/// table with a leading `observable` column on standard output.
pub struct Sink {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d).map_err(|source| CliError::Write { path: d.display().to_string(), source })?;
        }
        Ok(Sink { dir: dir.map(Path::to_path_buf), written: Vec::new() })
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                std::fs::write(&path, content)
                    .map_err(|source| CliError::Write { path: path.display().to_string(), source })?;
                self.written.push(name.to_string());
            }
            None => print!("{content}"),
        }
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).expect("results serialize");
        s.push('\n');
        self.text(name, &s)
    }

    fn tables(&mut self, prefix: &str, header: &[String], tables: Vec<(String, Vec<Vec<String>>)>) -> Result<(), CliError> {
        if self.dir.is_some() {
            for (name, rows) in tables {
                self.text(&format!("{prefix}{}.csv", file_stem(&name)), &csv_text(header, &rows))?;
            }
            return Ok(());
        }
        let mut long_header = vec!["observable".to_string()];
        long_header.extend_from_slice(header);
        let rows: Vec<Vec<String>> = tables
            .into_iter()
            .flat_map(|(name, rows)| {
                rows.into_iter().map(move |r| std::iter::once(name.clone()).chain(r).collect())
            })
            .collect();
        self.text("", &csv_text(&long_header, &rows))
    }

    pub fn summary(&mut self, s: &EnsembleSummary, format: Format) -> Result<(), CliError> {
        if format == Format::Json {
            return self.json("summary.json", s);
        }
        let tables = s
            .observables
            .iter()
            .map(|o| {
                let rows = (0..s.grid.len())
                    .map(|t| vec![num(s.grid[t]), num(o.mean[t]), num(o.std[t])])
                    .collect();
                (o.name.clone(), rows)
            })
            .collect();
        self.tables("", &strings(&["time", "mean", "std"]), tables)
    }

    pub fn comparison(&mut self, c: &Comparison, format: Format) -> Result<(), CliError> {
        if format == Format::Json {
            return self.json("comparison.json", c);
        }
        let tables = c
            .observables
            .iter()
            .map(|o| {
                let rows = (0..c.grid.len())
                    .map(|t| {
                        vec![
                            num(c.grid[t]),
                            num(o.mean_orig[t]),
                            num(o.std_orig[t]),
                            num(o.mean_red[t]),
                            num(o.std_red[t]),
                            num(o.distance[t]),
                        ]
                    })
                    .collect();
                (o.name.clone(), rows)
            })
            .collect();
        let header = strings(&["time", "mean_orig", "std_orig", "mean_red", "std_red", "bhattacharyya"]);
        self.tables("", &header, tables)
    }

    /// One distance column per factor for every observable, then a table
    /// of time-averaged, early and late distances.
    pub fn scaling(&mut self, rows: &[ScalingRow], format: Format) -> Result<(), CliError> {
        if format == Format::Json {
            return self.json("scaling.json", &rows);
        }
        let Some(first) = rows.first() else { return Ok(()) };
        let grid = &first.comparison.grid;
        let mut header = vec!["time".to_string()];
        header.extend(rows.iter().map(|r| format!("N={}", r.factor)));
        let tables = first
            .comparison
            .observables
            .iter()
            .enumerate()
            .map(|(o, obs)| {
                let body = (0..grid.len())
                    .map(|t| {
                        std::iter::once(num(grid[t]))
                            .chain(rows.iter().map(|r| num(r.comparison.observables[o].distance[t])))
                            .collect()
                    })
                    .collect();
                (obs.name.clone(), body)
            })
            .collect();
        if self.dir.is_some() {
            self.tables("scaling_", &header, tables)?;
        }
        let mut summary = Vec::new();
        for r in rows {
            for o in &r.comparison.observables {
                let (early, late) = o.early_late();
                summary.push(vec![o.name.clone(), num(r.factor), num(o.time_averaged()), num(early), num(late)]);
            }
        }
        let header = strings(&["observable", "factor", "time_averaged", "early", "late"]);
        self.text("scaling.csv", &csv_text(&header, &summary))
    }

    /// Writes `manifest.json` next to the outputs.
    pub fn finish(mut self, mut manifest: Manifest) -> Result<(), CliError> {
        if self.dir.is_none() {
            return Ok(());
        }
        manifest.outputs = std::mem::take(&mut self.written);
        manifest.outputs.sort();
        self.json("manifest.json", &manifest)
    }
}
