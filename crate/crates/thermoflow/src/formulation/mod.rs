//! Nonlinear residuals and Newton Jacobians for the 3-field (θ,u,p) and
//! 4-field (S,θ,u,p) discrete formulations across the nondimensional problem
//! forms, with convection, buoyancy, dissipation, adiabatic heating, interior
//! penalty and pressure stabilizations, and the augmented-Lagrangian algebra.

use std::sync::Arc;

use crate::fem::{ElementSpec, Family, FemError, FieldLayout, FunctionSpace, Shape};
use crate::mesh::{BoundaryMarker, Mesh};
use crate::rheology::{RheologyModel, ScalarLaw};
use crate::Real;

mod assemble;
mod augment;

pub use assemble::{skew_convection_energy, skew_temperature_energy};
pub use augment::{augment, divergence_check};

#[derive(Debug, thiserror::Error)]
pub enum FormulationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Nondimensional problem form selecting the coefficients of the weak form.
#[derive(Debug, Clone)]
pub enum ProblemForm<T> {
    Rayleigh { ra: T, pr: T, di: T, theta_ref: T },
    Grashof { gr: T, pr: T, di: T, theta_ref: T },
    BinghamChannel { re: T, pe: T, bn: T, br: T },
    Forced,
}

/// Weak-form coefficients: residuals read
///   momentum: visc*(S,D(v)) + conv_u*B(u,u,v) - (p,div v) - buoy*(θ,v·e2) - (f,v)
///   energy:   diff_t*(κ(θ)∇θ,∇η) + conv_t*C(u,θ,η) + adiab*((θ+shift) u·e2, η)
///             - diss*(S:D(u), η) - (g,η)
#[derive(Debug, Clone, Copy)]
pub struct FormCoeffs<T> {
    pub visc: T,
    pub conv_u: T,
    pub buoy: T,
    pub diff_t: T,
    pub conv_t: T,
    pub adiab: T,
    pub theta_shift: T,
    pub diss: T,
    /// reference momentum diffusion scale entering the Schur approximation
    pub nu_ref: T,
}

impl<T: Real> ProblemForm<T> {
    pub fn validate(&self) -> Result<(), FormulationError> {
        let pos = |v: T, name: &str| {
            if v > T::zero() {
                Ok(())
            } else {
                Err(FormulationError::InvalidArgument(format!(
                    "{name} must be positive"
                )))
            }
        };
        let nonneg = |v: T, name: &str| {
            if v >= T::zero() {
                Ok(())
            } else {
                Err(FormulationError::InvalidArgument(format!(
                    "{name} must be non-negative"
                )))
            }
        };
        match *self {
            ProblemForm::Rayleigh {
                ra,
                pr,
                di,
                theta_ref,
            } => {
                pos(ra, "Ra")?;
                pos(pr, "Pr")?;
                nonneg(di, "Di")?;
                nonneg(theta_ref, "Theta")
            }
            ProblemForm::Grashof {
                gr,
                pr,
                di,
                theta_ref,
            } => {
                pos(gr, "Gr")?;
                pos(pr, "Pr")?;
                nonneg(di, "Di")?;
                nonneg(theta_ref, "Theta")
            }
            ProblemForm::BinghamChannel { re, pe, bn, br } => {
                pos(re, "Re")?;
                pos(pe, "Pe")?;
                nonneg(bn, "Bn")?;
                nonneg(br, "Br")
            }
            ProblemForm::Forced => Ok(()),
        }
    }

    pub fn coeffs(&self) -> FormCoeffs<T> {
        let one = T::one();
        match *self {
            ProblemForm::Rayleigh {
                ra,
                pr,
                di,
                theta_ref,
            } => FormCoeffs {
                visc: pr,
                conv_u: one,
                buoy: ra * pr,
                diff_t: one,
                conv_t: one,
                adiab: di,
                theta_shift: theta_ref,
                diss: di / ra,
                nu_ref: pr,
            },
            ProblemForm::Grashof {
                gr,
                pr,
                di,
                theta_ref,
            } => {
                let sg = gr.sqrt();
                FormCoeffs {
                    visc: one / sg,
                    conv_u: one,
                    buoy: one,
                    diff_t: one / (pr * sg),
                    conv_t: one,
                    adiab: di,
                    theta_shift: theta_ref,
                    diss: di / sg,
                    nu_ref: one / sg,
                }
            }
            ProblemForm::BinghamChannel { re, pe, br, .. } => FormCoeffs {
                visc: one,
                conv_u: re,
                buoy: T::zero(),
                diff_t: one / pe,
                conv_t: one,
                adiab: T::zero(),
                theta_shift: T::zero(),
                diss: br / pe,
                nu_ref: one,
            },
            ProblemForm::Forced => FormCoeffs {
                visc: one,
                conv_u: one,
                buoy: T::zero(),
                diff_t: one,
                conv_t: one,
                adiab: T::zero(),
                theta_shift: T::zero(),
                diss: one,
                nu_ref: one,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    ThreeField,
    FourField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    TaylorHood { k: usize },
    ScottVogelius { k: usize },
    P1P1Stabilized,
}

/// Field configuration: formulation, velocity-pressure pair, temperature
/// degree and the stress shape for 4-field runs.
#[derive(Debug, Clone, Copy)]
pub struct FieldConfig {
    pub formulation: Formulation,
    pub pair: Pair,
    pub temp_degree: usize,
    /// traceless stress storage (2 components) vs full symmetric (3)
    pub stress_traceless: bool,
}

impl FieldConfig {
    pub fn velocity_degree(&self) -> usize {
        match self.pair {
            Pair::TaylorHood { k } | Pair::ScottVogelius { k } => k,
            Pair::P1P1Stabilized => 1,
        }
    }

    pub fn stress_degree(&self) -> usize {
        match self.pair {
            Pair::TaylorHood { k } | Pair::ScottVogelius { k } => k - 1,
            Pair::P1P1Stabilized => 0,
        }
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        if let Pair::ScottVogelius { k } = self.pair {
            if k < 2 {
                return Err(FormulationError::InvalidArgument(
                    "Scott-Vogelius requires k >= 2".into(),
                ));
            }
        }
        if let Pair::TaylorHood { k } = self.pair {
            if k < 2 {
                return Err(FormulationError::InvalidArgument(
                    "Taylor-Hood requires k >= 2".into(),
                ));
            }
        }
        Ok(())
    }
}

pub type VecFn<T> = Arc<dyn Fn(T, T) -> [T; 2] + Send + Sync>;
pub type ScalFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum VelocityBc<T> {
    Dirichlet(VecFn<T>),
    /// traction-free in x, u·e2 = 0 (x-normal outlets)
    Outflow,
}

#[derive(Clone)]
pub enum TemperatureBc<T> {
    Dirichlet(ScalFn<T>),
    Insulated,
}

/// Boundary conditions per marker.
#[derive(Clone, Default)]
pub struct BcSet<T> {
    pub velocity: Vec<(BoundaryMarker, VelocityBc<T>)>,
    pub temperature: Vec<(BoundaryMarker, TemperatureBc<T>)>,
}

impl<T: Real> BcSet<T> {
    pub fn validate(&self) -> Result<(), FormulationError> {
        if !self
            .temperature
            .iter()
            .any(|(_, bc)| matches!(bc, TemperatureBc::Dirichlet(_)))
        {
            return Err(FormulationError::InvalidArgument(
                "at least one temperature Dirichlet marker is required".into(),
            ));
        }
        Ok(())
    }

    /// True when velocity is constrained on the entire boundary (no outflow),
    /// leaving the constant-pressure nullspace.
    pub fn pressure_nullspace(&self) -> bool {
        !self
            .velocity
            .iter()
            .any(|(_, bc)| matches!(bc, VelocityBc::Outflow))
    }
}

/// Interior-penalty and pressure stabilization switches.
#[derive(Debug, Clone, Copy)]
pub struct StabilizationConfig<T> {
    /// jump-penalty coefficient rule delta_K = c * max |u| over K, applied
    /// to the velocity gradient jumps; None disables
    pub velocity_ip: Option<T>,
    pub temperature_ip: Option<T>,
    /// cellwise 2 h_K^2 pressure stabilization on the divergence row
    pub pressure_p1p1: bool,
}

impl<T: Real> Default for StabilizationConfig<T> {
    fn default() -> Self {
        Self {
            velocity_ip: None,
            temperature_ip: None,
            pressure_p1p1: false,
        }
    }
}

impl<T: Real> StabilizationConfig<T> {
    pub fn ip_default_coefficient() -> T {
        T::of(5e-3)
    }
}

/// Monolithic Jacobian with the pressure block isolated at the tail.
#[derive(Debug, Clone)]
pub struct BlockSystem<T> {
    pub matrix: crate::fem::CsrMatrix<T>,
    pub p_offset: usize,
    pub ndof: usize,
}

/// An assembled problem: spaces, physics, boundary conditions and sources.
pub struct Discretization<T> {
    pub mesh: Arc<Mesh<T>>,
    pub layout: FieldLayout<T>,
    pub config: FieldConfig,
    pub form: ProblemForm<T>,
    pub kappa: ScalarLaw<T>,
    pub model: RheologyModel<T>,
    pub stab: StabilizationConfig<T>,
    pub bcs: BcSet<T>,
    pub momentum_source: Option<VecFn<T>>,
    pub energy_source: Option<ScalFn<T>>,
    /// (global dof, boundary value), deduplicated and sorted
    pub dirichlet: Vec<(usize, T)>,
    pub pressure_nullspace: bool,
    /// standard convective form (exactly divergence-free elements) vs skew
    pub standard_convection: bool,
    /// test and driver hook replacing the form coefficients (for plain
    /// Stokes sub-problems and initialization sweeps)
    pub coeffs_override: Option<FormCoeffs<T>>,
    pub quad_exactness: usize,
    pub stress_idx: Option<usize>,
    pub theta_idx: usize,
    pub u_idx: usize,
    pub p_idx: usize,
}

impl<T: Real> Discretization<T> {
    pub fn new(
        mesh: Arc<Mesh<T>>,
        config: FieldConfig,
        form: ProblemForm<T>,
        kappa: ScalarLaw<T>,
        model: RheologyModel<T>,
        stab: StabilizationConfig<T>,
        bcs: BcSet<T>,
    ) -> Result<Self, FormulationError> {
        form.validate()?;
        config.validate()?;
        bcs.validate()?;
        if config.formulation == Formulation::ThreeField && !model.is_explicit() {
            return Err(FormulationError::InvalidArgument(
                "the 3-field formulation needs an explicit stress model".into(),
            ));
        }
        let k = config.velocity_degree();
        let mut fields: Vec<(String, FunctionSpace<T>)> = Vec::new();
        if config.formulation == Formulation::FourField {
            let stress_elem = ElementSpec::new(
                Family::Discontinuous,
                config.stress_degree(),
                Shape::SymTensor {
                    traceless: config.stress_traceless,
                },
            )?;
            fields.push((
                "stress".into(),
                FunctionSpace::new(mesh.clone(), stress_elem)?,
            ));
        }
        fields.push((
            "theta".into(),
            FunctionSpace::new(
                mesh.clone(),
                ElementSpec::scalar(Family::Continuous, config.temp_degree),
            )?,
        ));
        fields.push((
            "velocity".into(),
            FunctionSpace::new(mesh.clone(), ElementSpec::vector(Family::Continuous, k))?,
        ));
        let pressure_elem = match config.pair {
            Pair::TaylorHood { k } => ElementSpec::scalar(Family::Continuous, k - 1),
            Pair::ScottVogelius { k } => ElementSpec::scalar(Family::Discontinuous, k - 1),
            Pair::P1P1Stabilized => ElementSpec::scalar(Family::Continuous, 1),
        };
        fields.push((
            "pressure".into(),
            FunctionSpace::new(mesh.clone(), pressure_elem)?,
        ));
        let layout = FieldLayout::new(fields, "pressure")?;
        let stress_idx = if config.formulation == Formulation::FourField {
            Some(0)
        } else {
            None
        };
        let base = stress_idx.map_or(0, |_| 1);
        let theta_idx = base;
        let u_idx = base + 1;
        let p_idx = base + 2;

        let mut disc = Self {
            mesh,
            layout,
            config,
            form,
            kappa,
            model,
            stab,
            pressure_nullspace: bcs.pressure_nullspace(),
            standard_convection: matches!(config.pair, Pair::ScottVogelius { .. }),
            quad_exactness: (2 * k + 6).min(20),
            bcs,
            momentum_source: None,
            energy_source: None,
            dirichlet: Vec::new(),
            coeffs_override: None,
            stress_idx,
            theta_idx,
            u_idx,
            p_idx,
        };
        disc.rebuild_dirichlet()?;
        Ok(disc)
    }

    pub fn with_sources(mut self, momentum: Option<VecFn<T>>, energy: Option<ScalFn<T>>) -> Self {
        self.momentum_source = momentum;
        self.energy_source = energy;
        self
    }

    fn rebuild_dirichlet(&mut self) -> Result<(), FormulationError> {
        let mut bc: Vec<(usize, T)> = Vec::new();
        let uf = &self.layout.fields[self.u_idx];
        for (marker, vbc) in &self.bcs.velocity {
            match vbc {
                VelocityBc::Dirichlet(g) => {
                    for comp in 0..2 {
                        let gc = g.clone();
                        let pairs = uf
                            .space
                            .dirichlet_component(*marker, comp, &move |x, y| gc(x, y)[comp])?;
                        bc.extend(pairs.into_iter().map(|(d, v)| (d + uf.offset, v)));
                    }
                }
                VelocityBc::Outflow => {
                    let pairs = uf
                        .space
                        .dirichlet_component(*marker, 1, &|_, _| T::zero())?;
                    bc.extend(pairs.into_iter().map(|(d, v)| (d + uf.offset, v)));
                }
            }
        }
        let tf = &self.layout.fields[self.theta_idx];
        for (marker, tbc) in &self.bcs.temperature {
            if let TemperatureBc::Dirichlet(g) = tbc {
                let pairs = tf.space.dirichlet_component(*marker, 0, &**g)?;
                bc.extend(pairs.into_iter().map(|(d, v)| (d + tf.offset, v)));
            }
        }
        bc.sort_by(|a, b| a.0.cmp(&b.0));
        bc.dedup_by_key(|e| e.0);
        self.dirichlet = bc;
        Ok(())
    }

    pub fn ndof(&self) -> usize {
        self.layout.ndof
    }

    /// Active weak-form coefficients (override, when set, wins).
    pub fn active_coeffs(&self) -> FormCoeffs<T> {
        self.coeffs_override.unwrap_or_else(|| self.form.coeffs())
    }

    /// Zero state with Dirichlet data lifted in.
    pub fn lifted_zero_state(&self) -> Vec<T> {
        let mut z = vec![T::zero(); self.ndof()];
        self.lift(&mut z);
        z
    }

    /// Overwrite Dirichlet dofs of `state` with the boundary data.
    pub fn lift(&self, state: &mut [T]) {
        for &(d, v) in &self.dirichlet {
            state[d] = v;
        }
    }

    pub fn pressure_offset(&self) -> usize {
        self.layout.fields[self.p_idx].offset
    }

    /// Constant-pressure nullspace vector (ones on the pressure block).
    pub fn nullspace_vector(&self) -> Vec<T> {
        let mut v = vec![T::zero(); self.ndof()];
        let p = &self.layout.fields[self.p_idx];
        for i in p.offset..p.offset + p.space.ndof() {
            v[i] = T::one();
        }
        v
    }

    /// Shift the pressure block to zero mean.
    pub fn shift_pressure_mean(&self, state: &mut [T]) {
        let mean = self.pressure_mean(state);
        let p = &self.layout.fields[self.p_idx];
        for i in p.offset..p.offset + p.space.ndof() {
            state[i] -= mean;
        }
    }

    /// Maximum relative finite-difference error of the constrained Jacobian
    /// against central differences of the residual over `ntrials` random
    /// interior directions at step `h`. Diagnostic used by the verification
    /// suites.
    pub fn fd_jacobian_error(&self, state: &[T], ntrials: usize, h: T, seed: u64) -> T {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = self.ndof();
        let mut is_bc = vec![false; n];
        for &(d, _) in &self.dirichlet {
            is_bc[d] = true;
        }
        let sys = self.assemble_jacobian(state);
        let mut worst = T::zero();
        for _ in 0..ntrials {
            let mut dir = vec![T::zero(); n];
            for (i, d) in dir.iter_mut().enumerate() {
                if !is_bc[i] {
                    *d = T::of(rng.gen_range(-1.0..1.0));
                }
            }
            let mut zp = state.to_vec();
            let mut zm = state.to_vec();
            for i in 0..n {
                zp[i] += h * dir[i];
                zm[i] -= h * dir[i];
            }
            let fp = self.assemble_residual(&zp);
            let fm = self.assemble_residual(&zm);
            let mut jd = vec![T::zero(); n];
            sys.matrix.matvec(&dir, &mut jd);
            let mut err2 = T::zero();
            let mut ref2 = T::zero();
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (T::of(2.0) * h);
                err2 += (fd - jd[i]) * (fd - jd[i]);
                ref2 += jd[i] * jd[i];
            }
            let rel = err2.sqrt() / ref2.sqrt().max(T::of(1e-30));
            worst = worst.max(rel);
        }
        worst
    }

    /// Area-weighted mean of the pressure field.
    pub fn pressure_mean(&self, state: &[T]) -> T {
        let p = &self.layout.fields[self.p_idx];
        let coeffs = &state[p.offset..p.offset + p.space.ndof()];
        let (integral, area) = assemble::field_integral(&p.space, coeffs);
        integral / area
    }
}
