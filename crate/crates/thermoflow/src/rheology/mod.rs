//! Constitutive law evaluators: explicit, regularized-implicit and truncated
//! approximation forms, with exact derivatives for Newton linearization and
//! sampling-based graph-property checks.
//!
//! Symmetric 2x2 tensors are stored in Voigt order `(a11, a22, a12)`; the
//! inner product `A:B` carries weight 2 on the off-diagonal component so the
//! Frobenius contraction is preserved. Magnitudes are Frobenius norms with a
//! uniform floor of 1e-12 on denominators.

use crate::Real;

pub mod properties;

pub use properties::{check_graph_properties, GraphReport};

/// Voigt components (a11, a22, a12) of a symmetric 2x2 tensor.
pub type Sym2<T> = [T; 3];

/// Denominator floor shared by all relations.
pub fn magnitude_floor<T: Real>() -> T {
    T::of(1e-12)
}

/// Frobenius norm |A| = sqrt(a11^2 + a22^2 + 2 a12^2).
pub fn frob<T: Real>(a: &Sym2<T>) -> T {
    (a[0] * a[0] + a[1] * a[1] + T::of(2.0) * a[2] * a[2]).sqrt()
}

/// Frobenius contraction A:B with the Voigt weight.
pub fn contract<T: Real>(a: &Sym2<T>, b: &Sym2<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + T::of(2.0) * a[2] * b[2]
}

/// Regularized maximum (x + y + sqrt((x-y)^2 + eps^2))/2.
pub fn smooth_max<T: Real>(x: T, y: T, eps: T) -> T {
    (x + y + ((x - y) * (x - y) + eps * eps).sqrt()) / T::of(2.0)
}

/// Regularized minimum (x + y - sqrt((x-y)^2 + eps^2))/2.
pub fn smooth_min<T: Real>(x: T, y: T, eps: T) -> T {
    (x + y - ((x - y) * (x - y) + eps * eps).sqrt()) / T::of(2.0)
}

/// smooth_max(0, x) and its derivative in x.
fn smax0<T: Real>(x: T, eps: T) -> (T, T) {
    let q = (x * x + eps * eps).sqrt();
    if q == T::zero() {
        // eps = 0 at the kink; one-sided value, midpoint slope
        return (T::zero(), T::of(0.5));
    }
    ((x + q) / T::of(2.0), (T::one() + x / q) / T::of(2.0))
}

/// Scalar material parameter laws with first derivatives.
#[derive(Debug, Clone)]
pub enum ScalarLaw<T> {
    Constant(T),
    /// a * exp(b s)
    Exponential { a: T, b: T },
    /// a s + b
    Affine { a: T, b: T },
    /// c0 + c1 s + c2 s^2
    Quadratic { c0: T, c1: T, c2: T },
    /// max_eps{0, min_eps{level, level*(s - s_on)/(s_off - s_on)}}
    SmoothedRamp {
        level: T,
        s_on: T,
        s_off: T,
        eps: T,
    },
}

impl<T: Real> ScalarLaw<T> {
    pub fn eval(&self, s: T) -> (T, T) {
        match *self {
            ScalarLaw::Constant(c) => (c, T::zero()),
            ScalarLaw::Exponential { a, b } => {
                let v = a * (b * s).exp();
                (v, b * v)
            }
            ScalarLaw::Affine { a, b } => (a * s + b, a),
            ScalarLaw::Quadratic { c0, c1, c2 } => {
                (c0 + c1 * s + c2 * s * s, c1 + T::of(2.0) * c2 * s)
            }
            ScalarLaw::SmoothedRamp {
                level,
                s_on,
                s_off,
                eps,
            } => {
                debug_assert!(s_on != s_off);
                let slope = level / (s_off - s_on);
                let ramp = slope * (s - s_on);
                // min_eps{level, ramp}
                let q1 = ((level - ramp) * (level - ramp) + eps * eps).sqrt();
                let inner = (level + ramp - q1) / T::of(2.0);
                let dinner = (T::one() + (level - ramp) / q1) / T::of(2.0) * slope;
                // max_eps{0, inner}
                let q2 = (inner * inner + eps * eps).sqrt();
                let v = (inner + q2) / T::of(2.0);
                let dv = (T::one() + inner / q2) / T::of(2.0) * dinner;
                (v, dv)
            }
        }
    }

    pub fn value(&self, s: T) -> T {
        self.eval(s).0
    }
}

/// Stress and its derivatives at one evaluation point.
#[derive(Debug, Clone)]
pub struct StressEval<T> {
    pub s: Sym2<T>,
    /// action on Voigt strain directions
    pub ds_dd: [[T; 3]; 3],
    pub ds_dtheta: Sym2<T>,
}

/// Implicit relation residual G and its derivatives.
#[derive(Debug, Clone)]
pub struct GEval<T> {
    pub g: Sym2<T>,
    pub dg_ds: [[T; 3]; 3],
    pub dg_dd: [[T; 3]; 3],
    pub dg_dtheta: Sym2<T>,
}

#[derive(Debug, Clone)]
pub enum RheologyModel<T> {
    /// S = 2 mu(theta) D
    Newtonian { mu: ScalarLaw<T> },
    /// S = K(theta) |D|^(r-2) D, r > 1
    PowerLaw { r: T, k: ScalarLaw<T> },
    /// sqrt(eps^2 + |D|^2) S = (Bn tau(theta) + 2 mu(theta) |D|) D,
    /// rearranged to the explicit S(D, theta)
    BinghamRegularized {
        mu: ScalarLaw<T>,
        tau: ScalarLaw<T>,
        bn: T,
        eps: T,
    },
    /// G(S, D, theta) = 2 mu (max_eps{0,|D|-sigma}/|D|) D
    ///                  - (max_eps{0,|S|-tau}/|S|) S
    ImplicitBinghamEuler {
        mu: ScalarLaw<T>,
        tau: ScalarLaw<T>,
        sigma: ScalarLaw<T>,
        eps: T,
    },
    /// truncated explicit stress approximation
    TruncatedStress {
        n: T,
        mu: ScalarLaw<T>,
        tau: ScalarLaw<T>,
        sigma: ScalarLaw<T>,
    },
    /// truncated explicit strain approximation (stress-to-strain map)
    TruncatedStrain {
        n: T,
        mu: ScalarLaw<T>,
        tau: ScalarLaw<T>,
        sigma: ScalarLaw<T>,
    },
}

/// phi*A plus the derivative operator phi*I + (phi_m/m) A (W A)^T, the exact
/// linearization of isotropic maps A -> phi(|A|, theta) A.
fn isotropic_eval<T: Real>(
    a: &Sym2<T>,
    m: T,
    floored: bool,
    phi: T,
    phi_m: T,
    phi_theta: T,
) -> ([T; 3], [[T; 3]; 3], [T; 3]) {
    let val = [phi * a[0], phi * a[1], phi * a[2]];
    let mut jac = [[T::zero(); 3]; 3];
    for i in 0..3 {
        jac[i][i] = phi;
    }
    if !floored && m > T::zero() {
        let wa = [a[0], a[1], T::of(2.0) * a[2]];
        let c = phi_m / m;
        for i in 0..3 {
            for j in 0..3 {
                jac[i][j] += c * a[i] * wa[j];
            }
        }
    }
    let dtheta = [phi_theta * a[0], phi_theta * a[1], phi_theta * a[2]];
    (val, jac, dtheta)
}

impl<T: Real> RheologyModel<T> {
    pub fn is_explicit(&self) -> bool {
        matches!(
            self,
            RheologyModel::Newtonian { .. }
                | RheologyModel::PowerLaw { .. }
                | RheologyModel::BinghamRegularized { .. }
                | RheologyModel::TruncatedStress { .. }
        )
    }

    /// Explicit stress evaluation S(D, theta) with derivatives.
    pub fn eval_stress(&self, d: &Sym2<T>, theta: T) -> StressEval<T> {
        let floor = magnitude_floor::<T>();
        let m_raw = frob(d);
        let floored = m_raw < floor;
        let m = m_raw.max(floor);
        let (phi, phi_m, phi_theta) = match self {
            RheologyModel::Newtonian { mu } => {
                let (muv, dmu) = mu.eval(theta);
                (T::of(2.0) * muv, T::zero(), T::of(2.0) * dmu)
            }
            RheologyModel::PowerLaw { r, k } => {
                let (kv, dk) = k.eval(theta);
                let p = *r - T::of(2.0);
                let mp = m.powf(p);
                (kv * mp, kv * p * m.powf(p - T::one()), dk * mp)
            }
            RheologyModel::BinghamRegularized { mu, tau, bn, eps } => {
                let (muv, dmu) = mu.eval(theta);
                let (tv, dt) = tau.eval(theta);
                let q = (*eps * *eps + m * m).sqrt();
                let num = *bn * tv + T::of(2.0) * muv * m;
                let phi = num / q;
                let phi_m = T::of(2.0) * muv / q - num * m / (q * q * q);
                let phi_theta = (*bn * dt + T::of(2.0) * dmu * m) / q;
                (phi, phi_m, phi_theta)
            }
            RheologyModel::TruncatedStress { n, mu, tau, sigma } => {
                let (muv, dmu) = mu.eval(theta);
                let (tv, dt) = tau.eval(theta);
                let (sv, ds) = sigma.eval(theta);
                let cap = *n + T::of(2.0) * muv;
                let excess = m - sv;
                let (plus, h) = if excess > T::zero() {
                    (excess, T::one())
                } else {
                    (T::zero(), T::zero())
                };
                let b = (T::of(2.0) * muv * plus + tv) / m;
                if b <= cap {
                    let b_m =
                        (T::of(2.0) * muv * h * m - (T::of(2.0) * muv * plus + tv)) / (m * m);
                    let b_theta = (T::of(2.0) * dmu * plus - T::of(2.0) * muv * h * ds + dt) / m;
                    (b, b_m, b_theta)
                } else {
                    (cap, T::zero(), T::of(2.0) * dmu)
                }
            }
            _ => panic!("eval_stress requires an explicit model variant"),
        };
        let (s, ds_dd, ds_dtheta) = isotropic_eval(d, m, floored, phi, phi_m, phi_theta);
        StressEval {
            s,
            ds_dd,
            ds_dtheta,
        }
    }

    /// Scalar multiplier of the strain-to-stress dual D(S) = phi(|S|) S,
    /// with derivatives, where the model provides one.
    fn dual_phi(&self, s_mag: T, theta: T) -> Option<(T, T, T)> {
        match self {
            RheologyModel::PowerLaw { r, k } => {
                let (kv, dk) = k.eval(theta);
                let rp = *r / (*r - T::one());
                let p = rp - T::of(2.0);
                let kpow = kv.powf(T::one() - rp);
                let phi = kpow * s_mag.powf(p);
                let phi_s = kpow * p * s_mag.powf(p - T::one());
                let phi_theta = (T::one() - rp) * kv.powf(-rp) * dk * s_mag.powf(p);
                Some((phi, phi_s, phi_theta))
            }
            RheologyModel::TruncatedStrain { n, mu, tau, sigma } => {
                let (muv, dmu) = mu.eval(theta);
                let (tv, dt) = tau.eval(theta);
                let (sv, ds) = sigma.eval(theta);
                let half_inv_mu = T::one() / (T::of(2.0) * muv);
                let cap = *n + half_inv_mu;
                let excess = s_mag - tv;
                let (plus, h) = if excess > T::zero() {
                    (excess, T::one())
                } else {
                    (T::zero(), T::zero())
                };
                let b = (plus * half_inv_mu + sv) / s_mag;
                if b <= cap {
                    let b_s =
                        (h * half_inv_mu * s_mag - (plus * half_inv_mu + sv)) / (s_mag * s_mag);
                    let dhalf = -dmu / (T::of(2.0) * muv * muv);
                    let b_theta = (-h * dt * half_inv_mu + plus * dhalf + ds) / s_mag;
                    Some((b, b_s, b_theta))
                } else {
                    let dcap = -dmu / (T::of(2.0) * muv * muv);
                    Some((cap, T::zero(), dcap))
                }
            }
            _ => None,
        }
    }

    /// Implicit residual G(S, D, theta) with derivatives for the 4-field
    /// stress rows: the regularized relation for `ImplicitBinghamEuler`,
    /// `D(S) - D` for dual models, `S - S(D)` for explicit ones.
    pub fn eval_g(&self, s: &Sym2<T>, d: &Sym2<T>, theta: T) -> GEval<T> {
        let floor = magnitude_floor::<T>();
        match self {
            RheologyModel::ImplicitBinghamEuler {
                mu,
                tau,
                sigma,
                eps,
            } => {
                let (muv, dmu) = mu.eval(theta);
                let (tv, dt) = tau.eval(theta);
                let (sv, dsg) = sigma.eval(theta);
                let md_raw = frob(d);
                let ms_raw = frob(s);
                let md_fl = md_raw < floor;
                let ms_fl = ms_raw < floor;
                let md = md_raw.max(floor);
                let ms = ms_raw.max(floor);
                let (pa, dpa) = smax0(md - sv, *eps);
                let (pb, dpb) = smax0(ms - tv, *eps);
                let a = pa / md;
                let b = pb / ms;
                let a_m = (dpa * md - pa) / (md * md);
                let b_s = (dpb * ms - pb) / (ms * ms);
                let two_mu = T::of(2.0) * muv;
                let (gd, dg_dd, _) =
                    isotropic_eval(d, md, md_fl, two_mu * a, two_mu * a_m, T::zero());
                let (gs, dg_ds_pos, _) = isotropic_eval(s, ms, ms_fl, b, b_s, T::zero());
                let mut g = [T::zero(); 3];
                let mut dg_ds = [[T::zero(); 3]; 3];
                for i in 0..3 {
                    g[i] = gd[i] - gs[i];
                    for j in 0..3 {
                        dg_ds[i][j] = -dg_ds_pos[i][j];
                    }
                }
                let a_sv = -dpa / md;
                let b_tv = -dpb / ms;
                let mut dg_dtheta = [T::zero(); 3];
                for i in 0..3 {
                    dg_dtheta[i] = (T::of(2.0) * dmu * a + two_mu * a_sv * dsg) * d[i]
                        - b_tv * dt * s[i];
                }
                GEval {
                    g,
                    dg_ds,
                    dg_dd,
                    dg_dtheta,
                }
            }
            RheologyModel::PowerLaw { .. } | RheologyModel::TruncatedStrain { .. } => {
                let ms_raw = frob(s);
                let ms_fl = ms_raw < floor;
                let ms = ms_raw.max(floor);
                let (phi, phi_s, phi_theta) = self.dual_phi(ms, theta).unwrap();
                let (ds_val, dg_ds, dg_dtheta) =
                    isotropic_eval(s, ms, ms_fl, phi, phi_s, phi_theta);
                let mut g = [T::zero(); 3];
                let mut dg_dd = [[T::zero(); 3]; 3];
                for i in 0..3 {
                    g[i] = ds_val[i] - d[i];
                    dg_dd[i][i] = -T::one();
                }
                GEval {
                    g,
                    dg_ds,
                    dg_dd,
                    dg_dtheta,
                }
            }
            _ => {
                let se = self.eval_stress(d, theta);
                let mut g = [T::zero(); 3];
                let mut dg_ds = [[T::zero(); 3]; 3];
                let mut dg_dd = [[T::zero(); 3]; 3];
                let mut dg_dtheta = [T::zero(); 3];
                for i in 0..3 {
                    g[i] = s[i] - se.s[i];
                    dg_ds[i][i] = T::one();
                    dg_dtheta[i] = -se.ds_dtheta[i];
                    for j in 0..3 {
                        dg_dd[i][j] = -se.ds_dd[i][j];
                    }
                }
                GEval {
                    g,
                    dg_ds,
                    dg_dd,
                    dg_dtheta,
                }
            }
        }
    }

    /// Model stress for dissipation terms and diagnostics: explicit when
    /// available, otherwise the implicit graph solved along the D direction.
    pub fn stress_for_dissipation(&self, d: &Sym2<T>, theta: T) -> Sym2<T> {
        if self.is_explicit() {
            self.eval_stress(d, theta).s
        } else {
            let m = frob(d).max(magnitude_floor());
            let s_mag = properties::solve_graph_stress_magnitude(self, m, theta);
            [d[0] / m * s_mag, d[1] / m * s_mag, d[2] / m * s_mag]
        }
    }
}

/// Effective viscosity diagnostic
/// 2 mu(theta) (max_eps{0,|D|-sigma}/|D|) / (1e-12 + max_eps{0,|S|-tau}/|S|).
pub fn effective_viscosity<T: Real>(
    model: &RheologyModel<T>,
    s: &Sym2<T>,
    d: &Sym2<T>,
    theta: T,
) -> T {
    match model {
        RheologyModel::ImplicitBinghamEuler {
            mu,
            tau,
            sigma,
            eps,
        } => {
            let floor = magnitude_floor::<T>();
            let md = frob(d).max(floor);
            let ms = frob(s).max(floor);
            let muv = mu.value(theta);
            let tv = tau.value(theta);
            let sv = sigma.value(theta);
            let (pa, _) = smax0(md - sv, *eps);
            let (pb, _) = smax0(ms - tv, *eps);
            T::of(2.0) * muv * (pa / md) / (floor + pb / ms)
        }
        _ => panic!("effective viscosity is defined for the implicit Bingham-Euler model"),
    }
}

/// Fully developed Bingham channel profile on y in [-1, 1], normalized so
/// the Newtonian limit (Bn = 0) has unit maximum velocity. The driving
/// pressure gradient is G = 2 mu and the yield stress is Bn, so the shear
/// stress is S12(y) = -G y with |S12| <= Bn inside the plug |y| <= Bn/(2 mu).
pub fn bingham_poiseuille<T: Real>(y: T, bn: T, mu: T) -> T {
    let yc = (bn / (T::of(2.0) * mu)).min(T::one());
    let ya = y.abs().min(T::one());
    if ya <= yc {
        (T::one() - yc) * (T::one() - yc)
    } else {
        T::one() - ya * ya - bn / mu * (T::one() - ya)
    }
}

#[cfg(test)]
mod tests;
