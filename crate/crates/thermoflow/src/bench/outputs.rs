//! Table and report emission: CSV tables, a JSON run report and VTK fields
//! under deterministic file names.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::solver::SolveReport;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

fn write_file(path: &Path, content: &str) -> Result<(), OutputError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| OutputError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, content).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One row per refinement level; EOC_n = log2(E_{n-1}/E_n).
#[derive(Debug, Clone, Default, Serialize)]
pub struct EocTable {
    pub field_names: Vec<String>,
    pub rows: Vec<EocRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EocRow {
    pub h: f64,
    pub dofs: usize,
    pub errors: Vec<f64>,
    pub eocs: Vec<Option<f64>>,
}

impl EocTable {
    pub fn new(field_names: &[&str]) -> Self {
        Self {
            field_names: field_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_level(&mut self, h: f64, dofs: usize, errors: Vec<f64>) {
        assert_eq!(errors.len(), self.field_names.len());
        let eocs = if let Some(prev) = self.rows.last() {
            errors
                .iter()
                .zip(&prev.errors)
                .map(|(&e, &ep)| {
                    if e > 0.0 && ep > 0.0 {
                        Some((ep / e).log2())
                    } else {
                        None
                    }
                })
                .collect()
        } else {
            vec![None; errors.len()]
        };
        self.rows.push(EocRow {
            h,
            dofs,
            errors,
            eocs,
        });
    }

    /// EOC of one field at the finest ratio.
    pub fn finest_eoc(&self, field: &str) -> Option<f64> {
        let idx = self.field_names.iter().position(|f| f == field)?;
        self.rows.last()?.eocs[idx]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,dofs");
        for name in &self.field_names {
            write!(out, ",E_{name},EOC_{name}").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            write!(out, "{:.6e},{}", row.h, row.dofs).unwrap();
            for (e, eoc) in row.errors.iter().zip(&row.eocs) {
                match eoc {
                    Some(v) => write!(out, ",{e:.6e},{v:.4}").unwrap(),
                    None => write!(out, ",{e:.6e},").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Iteration table: one row per continuation step.
pub fn iters_csv(report: &SolveReport) -> String {
    let mut out = String::from("param,dofs,newton_iters,avg_krylov\n");
    for s in &report.steps {
        if s.converged {
            write!(out, "{:.6e},{},{},{:.4}\n", s.param, s.dofs, s.newton_iters, s.avg_krylov)
                .unwrap();
        } else {
            write!(out, "{:.6e},{},*,*\n", s.param, s.dofs).unwrap();
        }
    }
    out
}

/// Config echo plus solver steps plus scalar diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, serde_json::Value>,
    pub steps: Vec<crate::solver::StepReport>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            version: format!("thermoflow-v{}", env!("CARGO_PKG_VERSION")),
            command: command.into(),
            seed,
            config: BTreeMap::new(),
            steps: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn set_config(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.config.insert(key.into(), value.into());
    }

    pub fn diag(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.into(), value);
    }
}

pub struct OutputDir {
    pub dir: PathBuf,
}

impl OutputDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_eoc(&self, table: &EocTable) -> Result<(), OutputError> {
        write_file(&self.path("eoc.csv"), &table.to_csv())
    }

    pub fn write_iters(&self, report: &SolveReport) -> Result<(), OutputError> {
        write_file(&self.path("iters.csv"), &iters_csv(report))
    }

    pub fn write_report(&self, report: &RunReport) -> Result<(), OutputError> {
        let text = serde_json::to_string_pretty(report)?;
        write_file(&self.path("report.json"), &(text + "\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_csv_header_and_recompute() {
        let mut t = EocTable::new(&["u", "p"]);
        t.push_level(0.5, 100, vec![1.0e-2, 2.0e-2]);
        t.push_level(0.25, 400, vec![1.25e-3, 5.0e-3]);
        let csv = t.to_csv();
        assert!(csv.starts_with("h,dofs,E_u,EOC_u,E_p,EOC_p\n"));
        assert_eq!(csv.lines().count(), 3);
        // EOC recomputable from the errors
        let eoc_u = t.rows[1].eocs[0].unwrap();
        assert!((eoc_u - (1.0e-2f64 / 1.25e-3).log2()).abs() < 1e-12);
        assert!((eoc_u - 3.0).abs() < 1e-12);
        assert_eq!(t.finest_eoc("p").unwrap(), 2.0);
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = RunReport::new("cavity", 42);
        let text = serde_json::to_string(&r).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(parsed["steps"].as_array().unwrap().is_empty());
        assert!(parsed["version"].as_str().unwrap().starts_with("thermoflow-v"));
    }

    #[test]
    fn failure_marked_in_iters_table() {
        let mut rep = SolveReport::default();
        rep.steps.push(crate::solver::StepReport {
            param: 1e-3,
            dofs: 10,
            newton_iters: 4,
            krylov_per_newton: vec![2, 2, 3, 2],
            avg_krylov: 2.25,
            residual_norms: vec![1.0, 1e-9],
            final_residual: 1e-9,
            wall_time_s: 0.0,
            converged: true,
        });
        rep.steps.push(crate::solver::StepReport {
            param: 1e-4,
            dofs: 10,
            newton_iters: 50,
            krylov_per_newton: vec![],
            avg_krylov: 0.0,
            residual_norms: vec![1.0],
            final_residual: 1.0,
            wall_time_s: 0.0,
            converged: false,
        });
        let csv = iters_csv(&rep);
        assert!(csv.contains("*,*"));
        assert!(csv.lines().nth(1).unwrap().contains("2.2500"));
    }
}
