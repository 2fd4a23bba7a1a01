//! Heated-cavity benchmark: Scott-Vogelius discretization on a barycentric
//! mesh hierarchy, AL-preconditioned Newton, Grashof continuation, and
//! per-step divergence diagnostics.

use std::sync::Arc;
use std::time::Instant;

use crate::fem::output::VtkField;
use crate::formulation::{
    divergence_check, BcSet, Discretization, FieldConfig, Formulation, Pair, ProblemForm,
    StabilizationConfig, TemperatureBc, VelocityBc,
};
use crate::mesh::{generate_rect_mesh, BoundaryMarker};
use crate::rheology::{RheologyModel, ScalarLaw};
use crate::solver::{newton_solve, KrylovConfig, LinearStrategy, NewtonConfig, SolveReport};

use super::config::RunSpec;
use super::fields;
use super::outputs::{OutputDir, RunReport};
use super::DriverError;

/// Material laws for the cavity problems: constant (p1), temperature-thinning
/// viscosity (p2), and additionally quadratic conductivity (p3).
pub fn cavity_laws(problem: &str) -> Result<(ScalarLaw<f64>, ScalarLaw<f64>), DriverError> {
    let mu_var = ScalarLaw::Exponential { a: 1.0, b: -0.1 };
    let kappa_var = ScalarLaw::Quadratic {
        c0: 0.5,
        c1: 0.5,
        c2: 1.0,
    };
    match problem {
        "p1" => Ok((ScalarLaw::Constant(1.0), ScalarLaw::Constant(1.0))),
        "p2" => Ok((mu_var, ScalarLaw::Constant(1.0))),
        "p3" => Ok((mu_var, kappa_var)),
        other => Err(DriverError::Setup(format!(
            "unknown cavity problem {other}; use p1|p2|p3"
        ))),
    }
}

pub fn cavity_bcs() -> BcSet<f64> {
    let zero: crate::formulation::VecFn<f64> = Arc::new(|_, _| [0.0, 0.0]);
    BcSet {
        velocity: [
            BoundaryMarker::Left,
            BoundaryMarker::Right,
            BoundaryMarker::Top,
            BoundaryMarker::Bottom,
        ]
        .iter()
        .map(|&m| (m, VelocityBc::Dirichlet(zero.clone())))
        .collect(),
        temperature: vec![
            (
                BoundaryMarker::Left,
                TemperatureBc::Dirichlet(Arc::new(|_, _| 1.0)),
            ),
            (
                BoundaryMarker::Right,
                TemperatureBc::Dirichlet(Arc::new(|_, _| 0.0)),
            ),
            (BoundaryMarker::Top, TemperatureBc::Insulated),
            (BoundaryMarker::Bottom, TemperatureBc::Insulated),
        ],
    }
}

/// Assemble the cavity problem at the first Grashof target.
pub fn cavity_discretization(spec: &RunSpec) -> Result<Discretization<f64>, DriverError> {
    let (mu, kappa) = cavity_laws(&spec.problem)?;
    let mut mesh = generate_rect_mesh(spec.nx, spec.ny, (1.0, 1.0), spec.grading)
        .map_err(|e| DriverError::Setup(e.to_string()))?;
    for _ in 0..spec.nref {
        mesh = mesh.uniform_refine();
    }
    let mesh = Arc::new(mesh.barycentric_refine());
    let config = FieldConfig {
        formulation: Formulation::ThreeField,
        pair: Pair::ScottVogelius { k: spec.k },
        temp_degree: spec.k,
        stress_traceless: true,
    };
    let gr0 = *spec.gr_schedule.first().unwrap_or(&spec.gr);
    let form = ProblemForm::Grashof {
        gr: gr0,
        pr: spec.pr,
        di: spec.di,
        theta_ref: spec.theta,
    };
    let c = StabilizationConfig::<f64>::ip_default_coefficient();
    Discretization::new(
        mesh,
        config,
        form,
        kappa,
        RheologyModel::Newtonian { mu },
        StabilizationConfig {
            velocity_ip: Some(c),
            temperature_ip: Some(c),
            pressure_p1p1: false,
        },
        cavity_bcs(),
    )
    .map_err(|e| DriverError::Setup(e.to_string()))
}

pub struct CavityOutcome {
    pub report: SolveReport,
    pub run_report: RunReport,
    pub state: Vec<f64>,
    pub max_divergence: f64,
    pub all_converged: bool,
}

pub fn run_cavity(spec: &RunSpec) -> Result<CavityOutcome, DriverError> {
    let start = Instant::now();
    let mut disc = cavity_discretization(spec)?;
    let mut run_report = RunReport::new("cavity", spec.seed);
    spec.echo_into(&mut run_report);

    let strategy = LinearStrategy::AlKrylov {
        gamma: spec.gamma,
        krylov: KrylovConfig {
            rtol: 1e-10,
            ..KrylovConfig::default()
        },
    };
    let newton = NewtonConfig {
        atol: 1e-8,
        max_iter: 50,
    };
    let mut report = SolveReport::default();
    let mut state = disc.lifted_zero_state();
    let mut max_div = 0.0f64;
    let mut all_converged = true;
    for (i, &gr) in spec.gr_schedule.iter().enumerate() {
        if let ProblemForm::Grashof { gr: g, .. } = &mut disc.form {
            *g = gr;
        }
        let out = newton_solve(&disc, &state, &newton, &strategy)
            .map_err(|e| DriverError::Solver(e.to_string()))?;
        let mut step = out.report;
        step.param = gr;
        println!(
            "cavity {} Gr = {gr:.3e}: newton = {}, avg krylov = {:.2}, converged = {}",
            spec.problem, step.newton_iters, step.avg_krylov, step.converged
        );
        state = out.state;
        let div = divergence_check(&disc, &state);
        run_report.diag(&format!("div_check_step_{i}"), div);
        max_div = max_div.max(div);
        let ok = step.converged;
        report.steps.push(step);
        if !ok {
            all_converged = false;
            break;
        }
    }
    run_report.diag("max_divergence", max_div);
    run_report.diag("runtime_s", start.elapsed().as_secs_f64());
    run_report.steps = report.steps.clone();

    let out_dir = OutputDir::new(&spec.out);
    out_dir
        .write_iters(&report)
        .map_err(|e| DriverError::Output(e.to_string()))?;
    out_dir
        .write_report(&run_report)
        .map_err(|e| DriverError::Output(e.to_string()))?;
    let vel: Vec<[f64; 2]> = {
        let ux = fields::vertex_component(&disc, &state, disc.u_idx, 0);
        let uy = fields::vertex_component(&disc, &state, disc.u_idx, 1);
        ux.into_iter().zip(uy).map(|(a, b)| [a, b]).collect()
    };
    let theta = fields::vertex_component(&disc, &state, disc.theta_idx, 0);
    crate::fem::output::write_vtk_fields(
        &out_dir.path("fields_cavity.vtk"),
        &disc.mesh,
        &[
            VtkField::Vector {
                name: "velocity".into(),
                values: vel,
            },
            VtkField::Scalar {
                name: "theta".into(),
                values: theta,
            },
        ],
    )
    .map_err(|e| DriverError::Output(e.to_string()))?;

    Ok(CavityOutcome {
        report,
        run_report,
        state,
        max_divergence: max_div,
        all_converged,
    })
}
