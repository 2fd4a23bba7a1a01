//! Cooling-channel benchmark: Bingham fluid with temperature-dependent
//! viscosity or yield stress, Scott-Vogelius elements, AL preconditioning
//! and secant continuation in the regularization parameter.

use std::sync::Arc;
use std::time::Instant;

use crate::fem::output::VtkField;
use crate::formulation::{
    BcSet, Discretization, FieldConfig, Formulation, Pair, ProblemForm, StabilizationConfig,
    TemperatureBc, VelocityBc,
};
use crate::mesh::{generate_rect_mesh, BoundaryMarker};
use crate::rheology::{bingham_poiseuille, RheologyModel, ScalarLaw};
use crate::solver::{
    continuation_run, newton_solve, ContinuationParam, ContinuationSchedule, KrylovConfig,
    LinearStrategy, NewtonConfig, Predictor, SolveReport,
};

use super::config::RunSpec;
use super::fields;
use super::outputs::{OutputDir, RunReport};
use super::DriverError;

/// Viscosity and yield laws for problems Q1 and Q2: Q1 has viscosity rising
/// by a factor 20 over the temperature drop, Q2 has the yield stress rising
/// so the effective Bingham number reaches 9 over a drop of 15.
pub fn channel_laws(
    problem: &str,
    theta_hot: f64,
) -> Result<(ScalarLaw<f64>, ScalarLaw<f64>, f64), DriverError> {
    match problem {
        "q1" | "p1" => Ok((
            ScalarLaw::Affine {
                a: (1.0 - 20.0) / theta_hot,
                b: 20.0,
            },
            ScalarLaw::Constant(1.0),
            0.1,
        )),
        "q2" | "p2" => Ok((
            ScalarLaw::Constant(1.0),
            ScalarLaw::Affine {
                a: -1.0 / 3.0,
                b: 6.0,
            },
            0.0,
        )),
        other => Err(DriverError::Setup(format!(
            "unknown channel problem {other}; use q1|q2"
        ))),
    }
}

pub fn channel_bcs(theta_hot: f64, bn: f64, mu_inlet: f64) -> BcSet<f64> {
    let inflow: crate::formulation::VecFn<f64> =
        Arc::new(move |_, y| [bingham_poiseuille(y, bn, mu_inlet), 0.0]);
    let zero: crate::formulation::VecFn<f64> = Arc::new(|_, _| [0.0, 0.0]);
    let wall_theta: crate::formulation::ScalFn<f64> =
        Arc::new(move |x, _| if x <= 10.0 { theta_hot } else { 0.0 });
    BcSet {
        velocity: vec![
            (BoundaryMarker::Left, VelocityBc::Dirichlet(inflow)),
            (BoundaryMarker::Right, VelocityBc::Outflow),
            (BoundaryMarker::Top, VelocityBc::Dirichlet(zero.clone())),
            (BoundaryMarker::Bottom, VelocityBc::Dirichlet(zero)),
        ],
        temperature: vec![
            (
                BoundaryMarker::Left,
                TemperatureBc::Dirichlet(Arc::new(move |_, _| theta_hot)),
            ),
            (BoundaryMarker::Top, TemperatureBc::Dirichlet(wall_theta.clone())),
            (BoundaryMarker::Bottom, TemperatureBc::Dirichlet(wall_theta)),
            (BoundaryMarker::Right, TemperatureBc::Insulated),
        ],
    }
}

pub fn channel_discretization(spec: &RunSpec) -> Result<Discretization<f64>, DriverError> {
    let (mu_law, tau_law, br) = channel_laws(&spec.problem, spec.theta_hot)?;
    let mut mesh = generate_rect_mesh(spec.nx, spec.ny, (40.0, 2.0), 0.0)
        .map_err(|e| DriverError::Setup(e.to_string()))?
        .translated(0.0, -1.0);
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
    let eps0 = *spec.eps_schedule.first().unwrap_or(&1e-3);
    let form = ProblemForm::BinghamChannel {
        re: spec.re,
        pe: spec.pe,
        bn: spec.bn,
        br,
    };
    Discretization::new(
        mesh,
        config,
        form,
        ScalarLaw::Constant(1.0),
        RheologyModel::BinghamRegularized {
            mu: mu_law,
            tau: tau_law,
            bn: spec.bn,
            eps: eps0,
        },
        StabilizationConfig::default(),
        channel_bcs(spec.theta_hot, spec.bn, 1.0),
    )
    .map_err(|e| DriverError::Setup(e.to_string()))
}

pub struct ChannelOutcome {
    pub report: SolveReport,
    pub run_report: RunReport,
    pub state: Vec<f64>,
    pub all_converged: bool,
}

pub fn run_channel(spec: &RunSpec) -> Result<ChannelOutcome, DriverError> {
    let start = Instant::now();
    let mut disc = channel_discretization(spec)?;
    let mut run_report = RunReport::new("channel", spec.seed);
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

    // Newtonian warm start at the inlet viscosity scale
    let saved_model = disc.model.clone();
    let (mu_law, _, _) = channel_laws(&spec.problem, spec.theta_hot)?;
    disc.model = RheologyModel::Newtonian { mu: mu_law };
    let init = disc.lifted_zero_state();
    let warm = newton_solve(&disc, &init, &newton, &strategy)
        .map_err(|e| DriverError::Solver(e.to_string()))?;
    if !warm.converged {
        return Err(DriverError::Solver("Newtonian warm start failed".into()));
    }
    disc.model = saved_model;

    let schedule = ContinuationSchedule {
        param: ContinuationParam::Eps,
        targets: spec.eps_schedule.clone(),
        predictor: Predictor::Secant,
    };
    let (state, report) = continuation_run(&mut disc, &warm.state, &schedule, &newton, &strategy)
        .map_err(|e| DriverError::Solver(e.to_string()))?;
    let all_converged = report.steps.iter().all(|s| s.converged)
        && report.steps.len() == spec.eps_schedule.len();
    for s in &report.steps {
        println!(
            "channel {} eps = {:.2e}: newton = {}, avg krylov = {:.2}, converged = {}",
            spec.problem, s.param, s.newton_iters, s.avg_krylov, s.converged
        );
    }

    // yield diagnostic: |D(u)| along the centerline of the cold region
    let mut plug = 0usize;
    let samples = 50;
    for i in 0..samples {
        let x = 25.0 + 14.0 * (i as f64 + 0.5) / samples as f64;
        if let Some(dn) = fields::strain_magnitude_at(&disc, &state, x, 0.0) {
            if dn < 0.05 {
                plug += 1;
            }
        }
    }
    let plug_fraction = plug as f64 / samples as f64;
    run_report.diag("centerline_plug_fraction", plug_fraction);
    run_report.diag(
        "divergence",
        crate::formulation::divergence_check(&disc, &state),
    );
    run_report.diag("runtime_s", start.elapsed().as_secs_f64());
    run_report.steps = report.steps.clone();

    let out_dir = OutputDir::new(&spec.out);
    out_dir
        .write_iters(&report)
        .map_err(|e| DriverError::Output(e.to_string()))?;
    out_dir
        .write_report(&run_report)
        .map_err(|e| DriverError::Output(e.to_string()))?;
    // |D(u)| per cell, vertex averaged for export
    let per_cell: Vec<f64> = (0..disc.mesh.cells.len())
        .map(|c| {
            let (d, _, _) = fields::cell_centroid_data(&disc, &state, c);
            crate::rheology::frob(&d)
        })
        .collect();
    let dmag = fields::vertex_average_cell_scalar(&disc, &per_cell);
    let vel: Vec<[f64; 2]> = {
        let ux = fields::vertex_component(&disc, &state, disc.u_idx, 0);
        let uy = fields::vertex_component(&disc, &state, disc.u_idx, 1);
        ux.into_iter().zip(uy).map(|(a, b)| [a, b]).collect()
    };
    let theta = fields::vertex_component(&disc, &state, disc.theta_idx, 0);
    crate::fem::output::write_vtk_fields(
        &out_dir.path("fields_channel.vtk"),
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
            VtkField::Scalar {
                name: "strain_magnitude".into(),
                values: dmag,
            },
        ],
    )
    .map_err(|e| DriverError::Output(e.to_string()))?;

    Ok(ChannelOutcome {
        report,
        run_report,
        state,
        all_converged,
    })
}
