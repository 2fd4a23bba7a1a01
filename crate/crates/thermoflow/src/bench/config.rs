//! Run configuration: CLI flags merged over an optional flat key-value
//! config file (TOML syntax); flags override the file.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub form: Option<String>,
    #[serde(rename = "Ra")]
    pub ra: Option<f64>,
    #[serde(rename = "Pr")]
    pub pr: Option<f64>,
    #[serde(rename = "Di")]
    pub di: Option<f64>,
    #[serde(rename = "Theta")]
    pub theta: Option<f64>,
    #[serde(rename = "Gr")]
    pub gr: Option<f64>,
    #[serde(rename = "Re")]
    pub re: Option<f64>,
    #[serde(rename = "Pe")]
    pub pe: Option<f64>,
    #[serde(rename = "Bn")]
    pub bn: Option<f64>,
    #[serde(rename = "Br")]
    pub br: Option<f64>,
    pub pair: Option<String>,
    pub k: Option<usize>,
    pub nref: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub gamma: Option<f64>,
    pub eps_schedule: Option<Vec<f64>>,
    pub gr_schedule: Option<Vec<f64>>,
    pub model: Option<String>,
    pub model_params: Option<Vec<f64>>,
    pub fields: Option<usize>,
    pub problem: Option<String>,
    pub grading: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub theta_hot: Option<f64>,
}

/// Fully resolved run specification shared by the benchmark drivers.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub form: String,
    pub ra: f64,
    pub pr: f64,
    pub di: f64,
    pub theta: f64,
    pub gr: f64,
    pub re: f64,
    pub pe: f64,
    pub bn: f64,
    pub br: f64,
    pub pair: String,
    pub k: usize,
    pub nref: usize,
    pub nx: usize,
    pub ny: usize,
    pub gamma: f64,
    pub eps_schedule: Vec<f64>,
    pub gr_schedule: Vec<f64>,
    pub model: String,
    pub model_params: Vec<f64>,
    pub fields: usize,
    pub problem: String,
    pub grading: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub theta_hot: f64,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            form: "rayleigh".into(),
            ra: 1e4,
            pr: 1.0,
            di: 0.3,
            theta: 0.0,
            gr: 1e6,
            re: 1.0,
            pe: 10.0,
            bn: 1.5,
            br: 0.1,
            pair: "th".into(),
            k: 2,
            nref: 4,
            nx: 8,
            ny: 8,
            gamma: 1e4,
            eps_schedule: vec![1e-3, 3e-4, 1e-4],
            gr_schedule: vec![5e4, 3e5, 1e6],
            model: "powerlaw".into(),
            model_params: vec![3.5],
            fields: 3,
            problem: "p1".into(),
            grading: 0.0,
            seed: 42,
            out: PathBuf::from("out"),
            theta_hot: 10.0,
        }
    }
}

impl RunSpec {
    /// Layer a config file under the defaults.
    pub fn apply_file(&mut self, f: &FileConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &f.$field { self.$field = v.clone().into(); })*
            };
        }
        take!(ra, pr, di, theta, gr, re, pe, bn, br, k, nref, nx, ny, gamma, grading, seed, theta_hot);
        if let Some(v) = &f.form {
            self.form = v.clone();
        }
        if let Some(v) = &f.pair {
            self.pair = v.clone();
        }
        if let Some(v) = &f.eps_schedule {
            self.eps_schedule = v.clone();
        }
        if let Some(v) = &f.gr_schedule {
            self.gr_schedule = v.clone();
        }
        if let Some(v) = &f.model {
            self.model = v.clone();
        }
        if let Some(v) = &f.model_params {
            self.model_params = v.clone();
        }
        if let Some(v) = f.fields {
            self.fields = v;
        }
        if let Some(v) = &f.problem {
            self.problem = v.clone();
        }
        if let Some(v) = &f.out {
            self.out = PathBuf::from(v);
        }
    }

    pub fn echo_into(&self, report: &mut super::outputs::RunReport) {
        let v = serde_json::to_value(self).expect("spec serializes");
        if let serde_json::Value::Object(map) = v {
            for (k, val) in map {
                report.config.insert(k, val);
            }
        }
    }
}

pub fn load_file(path: &std::path::Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("cannot parse config {}: {e}", path.display()))
}
