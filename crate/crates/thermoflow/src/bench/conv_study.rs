//! Manufactured-solution convergence study on uniformly refined meshes:
//! Taylor-Hood velocity/pressure with the buoyant power-law system, errors
//! in L^r / L^r' / L^2 and experimental orders of convergence.

use std::sync::Arc;
use std::time::Instant;

use crate::fem::Norm;
use crate::formulation::{
    BcSet, Discretization, FieldConfig, Formulation, Pair, ProblemForm, StabilizationConfig,
    TemperatureBc, VelocityBc,
};
use crate::mesh::{generate_rect_mesh, BoundaryMarker};
use crate::rheology::{RheologyModel, ScalarLaw};
use crate::solver::{newton_solve, LinearStrategy, NewtonConfig, SolveReport};

use super::config::RunSpec;
use super::mms;
use super::outputs::{EocTable, RunReport};
use super::DriverError;

fn mms_bcs() -> BcSet<f64> {
    let u_e: crate::formulation::VecFn<f64> = Arc::new(|x, y| {
        let (a, b) = mms::exact_velocity(x, y);
        [a, b]
    });
    let th_e: crate::formulation::ScalFn<f64> = Arc::new(|x, y| mms::exact_temperature(x, y));
    BcSet {
        velocity: [
            BoundaryMarker::Left,
            BoundaryMarker::Right,
            BoundaryMarker::Top,
            BoundaryMarker::Bottom,
        ]
        .iter()
        .map(|&m| (m, VelocityBc::Dirichlet(u_e.clone())))
        .collect(),
        temperature: [
            BoundaryMarker::Left,
            BoundaryMarker::Right,
            BoundaryMarker::Top,
            BoundaryMarker::Bottom,
        ]
        .iter()
        .map(|&m| (m, TemperatureBc::Dirichlet(th_e.clone())))
        .collect(),
    }
}

fn power_law(r: f64) -> RheologyModel<f64> {
    RheologyModel::PowerLaw {
        r,
        k: ScalarLaw::Exponential { a: 1.0, b: -0.25 },
    }
}

/// Interpolant of the manufactured fields: the standard warm start that
/// places Newton inside its quadratic basin on every level.
fn interpolant_state(disc: &Discretization<f64>, r: f64) -> Vec<f64> {
    let mut state = vec![0.0; disc.ndof()];
    let uf = &disc.layout.fields[disc.u_idx];
    let coeffs = uf.space.interpolate(&|x, y| {
        let (a, b) = mms::exact_velocity(x, y);
        [a, b, 0.0]
    });
    state[uf.offset..uf.offset + uf.space.ndof()].copy_from_slice(&coeffs);
    let tf = &disc.layout.fields[disc.theta_idx];
    let coeffs = tf
        .space
        .interpolate(&|x, y| [mms::exact_temperature(x, y), 0.0, 0.0]);
    state[tf.offset..tf.offset + tf.space.ndof()].copy_from_slice(&coeffs);
    let pf = &disc.layout.fields[disc.p_idx];
    let coeffs = pf
        .space
        .interpolate(&|x, y| [mms::exact_pressure(x, y), 0.0, 0.0]);
    state[pf.offset..pf.offset + pf.space.ndof()].copy_from_slice(&coeffs);
    if let Some(si) = disc.stress_idx {
        let sf = &disc.layout.fields[si];
        let coeffs = sf.space.interpolate(&|x, y| {
            let (s11, s22, s12) = mms::exact_stress(x, y, r);
            [s11, s22, s12]
        });
        state[sf.offset..sf.offset + sf.space.ndof()].copy_from_slice(&coeffs);
    }
    disc.lift(&mut state);
    state
}

/// Solve one level from the interpolant warm start.
fn solve_level(
    disc: &mut Discretization<f64>,
    r_target: f64,
    report: &mut SolveReport,
) -> Result<Vec<f64>, DriverError> {
    let cfg = NewtonConfig {
        atol: 1e-8,
        max_iter: 30,
    };
    let strategy = LinearStrategy::MonolithicDirect;
    disc.model = power_law(r_target);
    let init = interpolant_state(disc, r_target);
    let out = newton_solve(disc, &init, &cfg, &strategy)
        .map_err(|e| DriverError::Solver(e.to_string()))?;
    if !out.converged {
        return Err(DriverError::Solver(format!(
            "Newton stalled at r={r_target}: residuals {:?}",
            out.report.residual_norms
        )));
    }
    let mut step = out.report;
    step.param = r_target;
    report.steps.push(step);
    Ok(out.state)
}

pub fn run_conv_study(spec: &RunSpec) -> Result<(EocTable, RunReport), DriverError> {
    let start = Instant::now();
    let r = *spec.model_params.first().unwrap_or(&3.5);
    let (ra, pr, di, theta_ref) = (spec.ra, spec.pr, spec.di, spec.theta);
    let four_field = spec.fields == 4;
    let rp = r / (r - 1.0);
    let mut report = RunReport::new("conv-study", spec.seed);
    spec.echo_into(&mut report);

    let fields: Vec<&str> = if four_field {
        vec!["u", "p", "theta", "S"]
    } else {
        vec!["u", "p", "theta"]
    };
    let mut table = EocTable::new(&fields);
    let mut solve_report = SolveReport::default();

    let levels = spec.nref.max(2);
    let mut base = generate_rect_mesh(spec.nx, spec.ny, (1.0, 1.0), 0.0)
        .map_err(|e| DriverError::Setup(e.to_string()))?;
    for level in 0..levels {
        if level > 0 {
            base = base.uniform_refine();
        }
        let mesh = Arc::new(base.clone());
        let h = mesh.metrics().h_max;
        let config = FieldConfig {
            formulation: if four_field {
                Formulation::FourField
            } else {
                Formulation::ThreeField
            },
            pair: Pair::TaylorHood { k: 2 },
            temp_degree: 2,
            stress_traceless: false,
        };
        let form = ProblemForm::Rayleigh {
            ra,
            pr,
            di,
            theta_ref,
        };
        let mut disc = Discretization::new(
            mesh,
            config,
            form,
            ScalarLaw::Exponential { a: 1.0, b: 4.0 },
            power_law(r),
            StabilizationConfig::default(),
            mms_bcs(),
        )
        .map_err(|e| DriverError::Setup(e.to_string()))?
        .with_sources(
            Some(Arc::new(move |x, y| {
                let (f1, f2) = mms::forcing_momentum(x, y, r, ra, pr);
                [f1, f2]
            })),
            Some(Arc::new(move |x, y| {
                mms::forcing_energy_shifted(x, y, r, ra, di, theta_ref)
            })),
        );

        let state = solve_level(&mut disc, r, &mut solve_report)?;

        let uf = &disc.layout.fields[disc.u_idx];
        let e_u = crate::fem::error_norm(
            &uf.space,
            &state[uf.offset..uf.offset + uf.space.ndof()],
            &|x, y| {
                let (a, b) = mms::exact_velocity(x, y);
                [a, b, 0.0]
            },
            None,
            Norm::Lp(r),
        )
        .map_err(|e| DriverError::Setup(e.to_string()))?;
        let pf = &disc.layout.fields[disc.p_idx];
        let e_p = crate::fem::error_norm(
            &pf.space,
            &state[pf.offset..pf.offset + pf.space.ndof()],
            &|x, y| [mms::exact_pressure(x, y), 0.0, 0.0],
            None,
            Norm::Lp(rp),
        )
        .map_err(|e| DriverError::Setup(e.to_string()))?;
        let tf = &disc.layout.fields[disc.theta_idx];
        let e_t = crate::fem::error_norm(
            &tf.space,
            &state[tf.offset..tf.offset + tf.space.ndof()],
            &|x, y| [mms::exact_temperature(x, y), 0.0, 0.0],
            None,
            Norm::Lp(2.0),
        )
        .map_err(|e| DriverError::Setup(e.to_string()))?;
        let mut errors = vec![e_u, e_p, e_t];
        if let Some(si) = disc.stress_idx {
            let sf = &disc.layout.fields[si];
            let e_s = crate::fem::error_norm(
                &sf.space,
                &state[sf.offset..sf.offset + sf.space.ndof()],
                &|x, y| {
                    let (s11, s22, s12) = mms::exact_stress(x, y, r);
                    [s11, s22, s12]
                },
                None,
                Norm::Lp(rp),
            )
            .map_err(|e| DriverError::Setup(e.to_string()))?;
            errors.push(e_s);
        }
        table.push_level(h, disc.ndof(), errors);
        println!(
            "conv-study level {level}: h = {h:.4e}, dofs = {}, E_u = {:.3e}",
            disc.ndof(),
            table.rows.last().unwrap().errors[0]
        );
    }

    report.steps = solve_report.steps.clone();
    report.diag("runtime_s", start.elapsed().as_secs_f64());
    for name in &fields.iter().map(|s| s.to_string()).collect::<Vec<_>>()[..] {
        if let Some(eoc) = table.finest_eoc(name) {
            report.diag(&format!("eoc_{name}_finest"), eoc);
        }
    }
    Ok((table, report))
}
