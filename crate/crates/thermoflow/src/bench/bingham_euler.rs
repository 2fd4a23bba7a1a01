//! Bingham-to-activated-Euler transition channel: 4-field P1-P1 formulation
//! with piecewise-constant stress, pressure stabilization, monolithic direct
//! solves and continuation in the regularization parameter. The effective
//! viscosity range is the headline diagnostic.

use std::sync::Arc;
use std::time::Instant;

use crate::fem::output::VtkField;
use crate::fem::space::CellGeometry;
use crate::formulation::{
    BcSet, Discretization, FieldConfig, Formulation, Pair, ProblemForm, StabilizationConfig,
    TemperatureBc, VelocityBc,
};
use crate::mesh::{generate_rect_mesh, BoundaryMarker};
use crate::rheology::{bingham_poiseuille, effective_viscosity, RheologyModel, ScalarLaw};
use crate::solver::{newton_solve, LinearStrategy, NewtonConfig, SolveReport};

use super::config::RunSpec;
use super::fields;
use super::outputs::{OutputDir, RunReport};
use super::DriverError;

/// Rheological parameters of the transition problem.
pub struct TransitionParams {
    pub mu_star: f64,
    pub sigma_star: f64,
    pub tau_star: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub theta_hot: f64,
}

impl Default for TransitionParams {
    fn default() -> Self {
        Self {
            mu_star: 0.5,
            sigma_star: 0.1,
            tau_star: 0.025,
            theta1: 3.0,
            theta2: 1.0,
            theta3: 7.0,
            theta4: 9.0,
            theta_hot: 10.0,
        }
    }
}

impl TransitionParams {
    pub fn model(&self, eps: f64) -> RheologyModel<f64> {
        RheologyModel::ImplicitBinghamEuler {
            mu: ScalarLaw::Constant(self.mu_star),
            tau: ScalarLaw::SmoothedRamp {
                level: self.tau_star,
                s_on: self.theta3,
                s_off: self.theta4,
                eps,
            },
            sigma: ScalarLaw::SmoothedRamp {
                level: self.sigma_star,
                s_on: self.theta1,
                s_off: self.theta2,
                eps,
            },
            eps,
        }
    }

    /// Boundary ramp: hot up to x=10, linear down to zero at x=20.
    pub fn wall_theta(&self, x: f64) -> f64 {
        let th = self.theta_hot;
        if x <= 10.0 {
            th
        } else if x >= 20.0 {
            0.0
        } else {
            -th / 10.0 * x + 2.0 * th
        }
    }
}

fn transition_bcs(p: &TransitionParams) -> BcSet<f64> {
    let (mu, tau) = (p.mu_star, p.tau_star);
    let inflow: crate::formulation::VecFn<f64> =
        Arc::new(move |_, y| [bingham_poiseuille(y, tau, mu), 0.0]);
    let zero: crate::formulation::VecFn<f64> = Arc::new(|_, _| [0.0, 0.0]);
    let th = p.theta_hot;
    let ramp = {
        let p = TransitionParams {
            theta_hot: th,
            ..TransitionParams::default()
        };
        let f: crate::formulation::ScalFn<f64> = Arc::new(move |x, _| p.wall_theta(x));
        f
    };
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
                TemperatureBc::Dirichlet(Arc::new(move |_, _| th)),
            ),
            (BoundaryMarker::Top, TemperatureBc::Dirichlet(ramp.clone())),
            (BoundaryMarker::Bottom, TemperatureBc::Dirichlet(ramp)),
            (
                BoundaryMarker::Right,
                TemperatureBc::Dirichlet(Arc::new(|_, _| 0.0)),
            ),
        ],
    }
}

pub fn transition_discretization(
    spec: &RunSpec,
    params: &TransitionParams,
    eps: f64,
) -> Result<Discretization<f64>, DriverError> {
    let mut mesh = generate_rect_mesh(spec.nx, spec.ny, (30.0, 2.0), 0.0)
        .map_err(|e| DriverError::Setup(e.to_string()))?
        .translated(0.0, -1.0);
    for _ in 0..spec.nref {
        mesh = mesh.uniform_refine();
    }
    Discretization::new(
        Arc::new(mesh),
        FieldConfig {
            formulation: Formulation::FourField,
            pair: Pair::P1P1Stabilized,
            temp_degree: 1,
            stress_traceless: false,
        },
        ProblemForm::Forced,
        ScalarLaw::Constant(1.0),
        params.model(eps),
        StabilizationConfig {
            velocity_ip: None,
            temperature_ip: None,
            pressure_p1p1: true,
        },
        transition_bcs(params),
    )
    .map_err(|e| DriverError::Setup(e.to_string()))
}

/// Developed-flow initial state: the inflow profile extended along the
/// channel, the wall temperature ramp extended across it, and the cellwise
/// stress consistent with the constitutive graph.
fn initial_state(disc: &Discretization<f64>, params: &TransitionParams) -> Vec<f64> {
    let mut state = vec![0.0; disc.ndof()];
    let uf = &disc.layout.fields[disc.u_idx];
    let (mu, tau) = (params.mu_star, params.tau_star);
    let ucoeffs = uf
        .space
        .interpolate(&|_, y| [bingham_poiseuille(y, tau, mu), 0.0, 0.0]);
    state[uf.offset..uf.offset + uf.space.ndof()].copy_from_slice(&ucoeffs);
    let tf = &disc.layout.fields[disc.theta_idx];
    let tcoeffs = tf.space.interpolate(&|x, _| [params.wall_theta(x), 0.0, 0.0]);
    state[tf.offset..tf.offset + tf.space.ndof()].copy_from_slice(&tcoeffs);
    // cellwise stress from the graph solved along the strain direction
    if let Some(si) = disc.stress_idx {
        let sf = &disc.layout.fields[si];
        let ncs = sf.space.elem.ncomp();
        for cell in 0..disc.mesh.cells.len() {
            let (d, th, _) = fields::cell_centroid_data(disc, &state, cell);
            let s = disc.model.stress_for_dissipation(&d, th);
            let geo = CellGeometry::new(&disc.mesh, cell);
            let _ = geo;
            for (_i, &sd) in sf.space.cell_scalar_dofs(cell).iter().enumerate() {
                if ncs == 3 {
                    state[sf.offset + sd * 3] = s[0];
                    state[sf.offset + sd * 3 + 1] = s[1];
                    state[sf.offset + sd * 3 + 2] = s[2];
                } else {
                    state[sf.offset + sd * 2] = s[0];
                    state[sf.offset + sd * 2 + 1] = s[2];
                }
            }
        }
    }
    disc.lift(&mut state);
    state
}

pub struct TransitionOutcome {
    pub report: SolveReport,
    pub run_report: RunReport,
    pub state: Vec<f64>,
    pub mu_eff_range_log10: f64,
    pub flux_error: f64,
    pub all_converged: bool,
}

pub fn run_bingham_euler(spec: &RunSpec) -> Result<TransitionOutcome, DriverError> {
    let start = Instant::now();
    let mut params = TransitionParams::default();
    params.theta_hot = spec.theta_hot;
    if let [mu, sigma, tau] = spec.model_params[..] {
        params.mu_star = mu;
        params.sigma_star = sigma;
        params.tau_star = tau;
    }
    let eps_final = *spec.eps_schedule.last().unwrap_or(&1e-4);
    let mut disc = transition_discretization(spec, &params, spec.eps_schedule[0])?;
    let mut run_report = RunReport::new("bingham-euler", spec.seed);
    spec.echo_into(&mut run_report);

    let newton = NewtonConfig {
        atol: 1e-8,
        max_iter: 60,
    };
    let strategy = LinearStrategy::MonolithicDirect;
    let mut state = initial_state(&disc, &params);
    let mut report = SolveReport::default();
    let mut all_converged = true;
    for &eps in &spec.eps_schedule {
        disc.model = params.model(eps);
        let out = newton_solve(&disc, &state, &newton, &strategy)
            .map_err(|e| DriverError::Solver(e.to_string()))?;
        let mut step = out.report;
        step.param = eps;
        println!(
            "bingham-euler eps = {eps:.2e}: newton = {}, converged = {}",
            step.newton_iters, step.converged
        );
        state = out.state;
        let ok = step.converged;
        report.steps.push(step);
        if !ok {
            all_converged = false;
            break;
        }
    }
    let _ = eps_final;

    let (lo, hi) = fields::effective_viscosity_range(&disc, &state);
    let range = (hi / lo).log10();
    let influx = fields::axial_flux(&disc, &state, BoundaryMarker::Left);
    let outflux = fields::axial_flux(&disc, &state, BoundaryMarker::Right);
    let flux_error = ((outflux - influx) / influx).abs();
    run_report.diag("mu_eff_min", lo);
    run_report.diag("mu_eff_max", hi);
    run_report.diag("mu_eff_range_log10", range);
    run_report.diag("inflow_flux", influx);
    run_report.diag("outflow_flux", outflux);
    run_report.diag("flux_error", flux_error);
    run_report.diag("runtime_s", start.elapsed().as_secs_f64());
    run_report.steps = report.steps.clone();
    println!(
        "bingham-euler: mu_eff range 10^{range:.2}, flux error {flux_error:.2e}"
    );

    let out_dir = OutputDir::new(&spec.out);
    out_dir
        .write_iters(&report)
        .map_err(|e| DriverError::Output(e.to_string()))?;
    out_dir
        .write_report(&run_report)
        .map_err(|e| DriverError::Output(e.to_string()))?;
    let speed: Vec<f64> = {
        let ux = fields::vertex_component(&disc, &state, disc.u_idx, 0);
        let uy = fields::vertex_component(&disc, &state, disc.u_idx, 1);
        ux.iter().zip(&uy).map(|(a, b)| (a * a + b * b).sqrt()).collect()
    };
    let theta = fields::vertex_component(&disc, &state, disc.theta_idx, 0);
    let mu_eff_cells: Vec<f64> = (0..disc.mesh.cells.len())
        .map(|c| {
            let (d, th, s) = fields::cell_centroid_data(&disc, &state, c);
            effective_viscosity(&disc.model, &s, &d, th)
        })
        .collect();
    let mu_eff = fields::vertex_average_cell_scalar(&disc, &mu_eff_cells);
    crate::fem::output::write_vtk_fields(
        &out_dir.path("fields_bingham_euler.vtk"),
        &disc.mesh,
        &[
            VtkField::Scalar {
                name: "theta".into(),
                values: theta,
            },
            VtkField::Scalar {
                name: "speed".into(),
                values: speed,
            },
            VtkField::Scalar {
                name: "mu_eff".into(),
                values: mu_eff,
            },
        ],
    )
    .map_err(|e| DriverError::Output(e.to_string()))?;

    Ok(TransitionOutcome {
        report,
        run_report,
        state,
        mu_eff_range_log10: range,
        flux_error,
        all_converged,
    })
}
