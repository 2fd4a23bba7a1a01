//! Benchmark drivers behind the `thermoflow` CLI: convergence study, heated
//! cavity, cooling channel and the Bingham-Euler transition channel.

use clap::{Args, Parser, Subcommand};

pub mod bingham_euler;
pub mod cavity;
pub mod channel;
pub mod config;
pub mod conv_study;
pub mod fields;
pub mod mms;
pub mod outputs;

pub use bingham_euler::run_bingham_euler;
pub use cavity::run_cavity;
pub use channel::run_channel;
pub use config::{FileConfig, RunSpec};
pub use conv_study::run_conv_study;
pub use outputs::{EocTable, OutputDir, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("output failed: {0}")]
    Output(String),
}

#[derive(Parser, Debug)]
#[command(
    name = "thermoflow",
    about = "2D finite element benchmarks for anisothermal non-Newtonian flow",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Manufactured-solution convergence study (Taylor-Hood, power law)
    ConvStudy(CommonArgs),
    /// Heated cavity with Scott-Vogelius elements and AL-preconditioned
    /// Newton over a Grashof ramp
    Cavity(CommonArgs),
    /// Bingham fluid in a cooling channel with secant continuation in the
    /// regularization parameter
    Channel(CommonArgs),
    /// Bingham to activated-Euler transition channel (4-field P1-P1)
    BinghamEuler(CommonArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// flat key-value config file (TOML syntax); flags override it
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    #[arg(long)]
    form: Option<String>,
    #[arg(long = "Ra")]
    ra: Option<f64>,
    #[arg(long = "Pr")]
    pr: Option<f64>,
    #[arg(long = "Di")]
    di: Option<f64>,
    #[arg(long = "Theta")]
    theta: Option<f64>,
    #[arg(long = "Gr")]
    gr: Option<f64>,
    #[arg(long = "Re")]
    re: Option<f64>,
    #[arg(long = "Pe")]
    pe: Option<f64>,
    #[arg(long = "Bn")]
    bn: Option<f64>,
    #[arg(long = "Br")]
    br: Option<f64>,
    /// element pair: th | sv | p1p1
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// refinement count (levels for conv-study)
    #[arg(long)]
    nref: Option<usize>,
    /// base mesh cells in x
    #[arg(long)]
    nx: Option<usize>,
    /// base mesh cells in y
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "eps-schedule", value_delimiter = ',')]
    eps_schedule: Option<Vec<f64>>,
    #[arg(long = "gr-schedule", value_delimiter = ',')]
    gr_schedule: Option<Vec<f64>>,
    /// rheology: newtonian | powerlaw | bingham | bingham-euler
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "model-params", value_delimiter = ',')]
    model_params: Option<Vec<f64>>,
    /// 3-field or 4-field formulation
    #[arg(long)]
    fields: Option<usize>,
    /// cavity: p1|p2|p3; channel: q1|q2
    #[arg(long)]
    problem: Option<String>,
    /// wall-clustering strength of the structured mesh
    #[arg(long)]
    grading: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "theta-hot")]
    theta_hot: Option<f64>,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

impl CommonArgs {
    fn resolve(&self, defaults: RunSpec) -> Result<RunSpec, String> {
        let mut spec = defaults;
        if let Some(path) = &self.config {
            let file = config::load_file(path)?;
            spec.apply_file(&file);
        }
        macro_rules! over {
            ($($f:ident),*) => { $(if let Some(v) = &self.$f { spec.$f = v.clone().into(); })* };
        }
        over!(
            form, ra, pr, di, theta, gr, re, pe, bn, br, pair, k, nref, nx, ny, gamma, model,
            fields, problem, grading, seed, theta_hot
        );
        if let Some(v) = &self.eps_schedule {
            spec.eps_schedule = v.clone();
        }
        if let Some(v) = &self.gr_schedule {
            spec.gr_schedule = v.clone();
        }
        if let Some(v) = &self.model_params {
            spec.model_params = v.clone();
        }
        if let Some(v) = &self.out {
            spec.out = v.clone();
        }
        Ok(spec)
    }
}

/// Per-subcommand desk-scale defaults.
pub fn defaults_for(command: &str) -> RunSpec {
    let mut spec = RunSpec::default();
    match command {
        "conv-study" => {
            spec.nref = 4;
        }
        "cavity" => {
            spec.form = "grashof".into();
            spec.pair = "sv".into();
            spec.di = 0.0;
            spec.nref = 0;
        }
        "channel" => {
            spec.form = "bingham".into();
            spec.pair = "sv".into();
            spec.problem = "q1".into();
            spec.nx = 120;
            spec.ny = 8;
            spec.nref = 0;
            spec.gamma = 1e5;
        }
        "bingham-euler" => {
            spec.form = "forced".into();
            spec.pair = "p1p1".into();
            spec.fields = 4;
            spec.nx = 120;
            spec.ny = 8;
            spec.nref = 0;
            spec.gamma = 0.0;
            spec.eps_schedule = vec![1e-2, 1e-3, 1e-4];
            spec.model_params = vec![0.5, 0.1, 0.025];
        }
        _ => {}
    }
    spec
}

pub fn cli_main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ConvStudy(args) => args.resolve(defaults_for("conv-study")).and_then(|spec| {
            run_conv_study(&spec)
                .map_err(|e| e.to_string())
                .and_then(|(table, report)| {
                    let dir = OutputDir::new(&spec.out);
                    dir.write_eoc(&table).map_err(|e| e.to_string())?;
                    dir.write_report(&report).map_err(|e| e.to_string())?;
                    print!("{}", table.to_csv());
                    Ok(())
                })
        }),
        Command::Cavity(args) => args.resolve(defaults_for("cavity")).and_then(|spec| {
            run_cavity(&spec).map_err(|e| e.to_string()).map(|out| {
                println!(
                    "cavity done: {} steps, max divergence {:.2e}",
                    out.report.steps.len(),
                    out.max_divergence
                );
            })
        }),
        Command::Channel(args) => args.resolve(defaults_for("channel")).and_then(|spec| {
            run_channel(&spec).map_err(|e| e.to_string()).map(|out| {
                println!("channel done: {} steps", out.report.steps.len());
            })
        }),
        Command::BinghamEuler(args) => {
            args.resolve(defaults_for("bingham-euler")).and_then(|spec| {
                run_bingham_euler(&spec).map_err(|e| e.to_string()).map(|out| {
                    println!(
                        "bingham-euler done: mu_eff range 10^{:.2}",
                        out.mu_eff_range_log10
                    );
                })
            })
        }
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
