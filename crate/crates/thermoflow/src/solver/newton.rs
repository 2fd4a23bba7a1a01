//! Undamped Newton iteration with direct or AL-preconditioned Krylov linear
//! solves, and parameter continuation with simple or secant predictors.

use serde::Serialize;

use crate::formulation::{augment, Discretization, ProblemForm};
use crate::rheology::RheologyModel;
use crate::Real;

use super::al::build_al_preconditioner;
use super::gmres::{gmres, KrylovConfig};
use super::{lu_solve, sparse_lu, SolverError};

#[derive(Debug, Clone)]
pub struct NewtonConfig<T> {
    pub atol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self {
            atol: T::of(1e-8),
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub enum LinearStrategy<T> {
    MonolithicDirect,
    AlKrylov { gamma: T, krylov: KrylovConfig<T> },
}

/// Per-continuation-step record; averages are recomputable from the raw
/// Krylov counts.
#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub param: f64,
    pub dofs: usize,
    pub newton_iters: usize,
    pub krylov_per_newton: Vec<usize>,
    pub avg_krylov: f64,
    pub residual_norms: Vec<f64>,
    pub final_residual: f64,
    pub wall_time_s: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct SolveReport {
    pub steps: Vec<StepReport>,
}

pub struct NewtonOutcome<T> {
    pub state: Vec<T>,
    pub report: StepReport,
    pub converged: bool,
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Full undamped updates z <- z + dz until ||F(z)||_2 <= atol.
pub fn newton_solve<T: Real>(
    disc: &Discretization<T>,
    init: &[T],
    config: &NewtonConfig<T>,
    strategy: &LinearStrategy<T>,
) -> Result<NewtonOutcome<T>, SolverError> {
    let start = std::time::Instant::now();
    let mut z = init.to_vec();
    disc.lift(&mut z);
    let mut residual_norms: Vec<f64> = Vec::new();
    let mut krylov_counts: Vec<usize> = Vec::new();
    let mut converged = false;
    let nullspace = if disc.pressure_nullspace {
        Some(disc.nullspace_vector())
    } else {
        None
    };

    let mut iter = 0usize;
    loop {
        let (mut sys, residual) = disc.assemble_raw(&z);
        let rnorm = norm2(&residual);
        residual_norms.push(rnorm.as_f64());
        if rnorm <= config.atol {
            converged = true;
            break;
        }
        if iter >= config.max_iter {
            break;
        }
        let mut rhs: Vec<T> = residual.iter().map(|&v| -v).collect();
        let delta = match strategy {
            LinearStrategy::MonolithicDirect => {
                disc.constrain(&mut sys, &mut rhs, &z);
                if disc.pressure_nullspace {
                    // pin one pressure dof; the mean is shifted afterwards
                    sys.matrix
                        .eliminate_dirichlet(&mut rhs, &[(disc.pressure_offset(), T::zero())]);
                }
                let fact = sparse_lu(&sys.matrix)?;
                krylov_counts.push(0);
                lu_solve(&fact, &rhs)
            }
            LinearStrategy::AlKrylov { gamma, krylov } => {
                augment(disc, &mut sys, *gamma, &mut rhs)
                    .map_err(|e| SolverError::InvalidArgument(e.to_string()))?;
                disc.constrain(&mut sys, &mut rhs, &z);
                let nu_ref = disc.active_coeffs().nu_ref;
                let pre = build_al_preconditioner(disc, &sys, *gamma, nu_ref)?;
                let res = gmres(
                    &sys.matrix,
                    &pre,
                    &rhs,
                    krylov,
                    nullspace.as_deref(),
                );
                krylov_counts.push(res.iterations);
                if !res.converged {
                    // non-convergence: stop with the best iterate recorded
                    residual_norms.push(f64::NAN);
                    break;
                }
                res.x
            }
        };
        for (zi, di) in z.iter_mut().zip(&delta) {
            *zi += *di;
        }
        iter += 1;
    }

    let mut state = z;
    if disc.pressure_nullspace {
        disc.shift_pressure_mean(&mut state);
    }
    let newton_iters = iter;
    let avg = if newton_iters > 0 {
        krylov_counts.iter().sum::<usize>() as f64 / newton_iters as f64
    } else {
        0.0
    };
    let final_residual = residual_norms
        .iter()
        .rev()
        .find(|v| v.is_finite())
        .copied()
        .unwrap_or(f64::NAN);
    Ok(NewtonOutcome {
        state,
        report: StepReport {
            param: f64::NAN,
            dofs: disc.ndof(),
            newton_iters,
            krylov_per_newton: krylov_counts,
            avg_krylov: avg,
            residual_norms,
            final_residual,
            wall_time_s: start.elapsed().as_secs_f64(),
            converged,
        },
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuationParam {
    Gr,
    Ra,
    Eps,
    BoundaryScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    /// reuse the last converged solution
    Simple,
    /// linear extrapolation through the last two converged solutions
    Secant,
}

#[derive(Debug, Clone)]
pub struct ContinuationSchedule<T> {
    pub param: ContinuationParam,
    pub targets: Vec<T>,
    pub predictor: Predictor,
}

impl<T: Real> ContinuationSchedule<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.targets.is_empty() {
            return Err(SolverError::InvalidArgument(
                "continuation schedule must be nonempty".into(),
            ));
        }
        let inc = self.targets.windows(2).all(|w| w[1] >= w[0]);
        let dec = self.targets.windows(2).all(|w| w[1] <= w[0]);
        if !(inc || dec) {
            return Err(SolverError::InvalidArgument(
                "continuation targets must be monotone".into(),
            ));
        }
        Ok(())
    }
}

/// Apply a continuation parameter value to the problem bundle.
pub fn set_parameter<T: Real>(disc: &mut Discretization<T>, param: ContinuationParam, value: T) {
    match param {
        ContinuationParam::Gr => {
            if let ProblemForm::Grashof { gr, .. } = &mut disc.form {
                *gr = value;
            } else {
                panic!("Gr continuation requires the Grashof form");
            }
        }
        ContinuationParam::Ra => {
            if let ProblemForm::Rayleigh { ra, .. } = &mut disc.form {
                *ra = value;
            } else {
                panic!("Ra continuation requires the Rayleigh form");
            }
        }
        ContinuationParam::Eps => match &mut disc.model {
            RheologyModel::BinghamRegularized { eps, .. } => *eps = value,
            RheologyModel::ImplicitBinghamEuler { eps, .. } => *eps = value,
            _ => panic!("eps continuation requires a regularized model"),
        },
        ContinuationParam::BoundaryScale => {
            panic!("boundary-scale continuation is applied by the driver");
        }
    }
}

/// Run the schedule; each converged state seeds the next solve, secant
/// prediction kicks in once two converged states exist. A Newton failure
/// aborts the schedule and returns the partial reports.
pub fn continuation_run<T: Real>(
    disc: &mut Discretization<T>,
    init: &[T],
    schedule: &ContinuationSchedule<T>,
    config: &NewtonConfig<T>,
    strategy: &LinearStrategy<T>,
) -> Result<(Vec<T>, SolveReport), SolverError> {
    schedule.validate()?;
    let mut report = SolveReport::default();
    let mut prev: Option<(T, Vec<T>)> = None; // (param, state)
    let mut prev2: Option<(T, Vec<T>)> = None;
    let mut state = init.to_vec();
    for &target in &schedule.targets {
        set_parameter(disc, schedule.param, target);
        let guess = match (schedule.predictor, &prev, &prev2) {
            (Predictor::Secant, Some((p2, z2)), Some((p1, z1))) if *p2 != *p1 => {
                let f = (target - *p2) / (*p2 - *p1);
                z2.iter()
                    .zip(z1)
                    .map(|(&a, &b)| a + f * (a - b))
                    .collect::<Vec<T>>()
            }
            _ => state.clone(),
        };
        let out = newton_solve(disc, &guess, config, strategy)?;
        let mut step = out.report;
        step.param = target.as_f64();
        let ok = out.converged;
        report.steps.push(step);
        state = out.state;
        if !ok {
            return Ok((state, report));
        }
        prev2 = prev.take();
        prev = Some((target, state.clone()));
    }
    Ok((state, report))
}
