//! Sampling-based monotonicity and coercivity checks on constitutive graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Real;

use super::{contract, frob, magnitude_floor, smax0, RheologyModel, Sym2};

/// Report of the sampled graph properties: the monotonicity product
/// (S1-S2):(D1-D2) over pairs at equal temperature, and a fitted coercivity
/// margin S:D >= alpha (|S|^2 + |D|^2) - beta.
#[derive(Debug, Clone)]
pub struct GraphReport<T> {
    pub samples: usize,
    pub min_monotonicity: T,
    pub alpha: T,
    pub beta: T,
    /// pairs whose product fell below -1e-10
    pub violations: usize,
}

/// Solve the scalar on-graph relation for |S| given |D| = m at temperature
/// theta: smooth_max(0,|S|-tau) = 2 mu smooth_max(0,|D|-sigma), monotone in
/// |S|, by bisection.
pub fn solve_graph_stress_magnitude<T: Real>(model: &RheologyModel<T>, m: T, theta: T) -> T {
    let RheologyModel::ImplicitBinghamEuler {
        mu,
        tau,
        sigma,
        eps,
    } = model
    else {
        panic!("scalar graph solve applies to the implicit Bingham-Euler model");
    };
    let muv = mu.value(theta);
    let tv = tau.value(theta);
    let sv = sigma.value(theta);
    let rhs = T::of(2.0) * muv * smax0(m - sv, *eps).0;
    let f = |s: T| smax0(s - tv, *eps).0 - rhs;
    let mut lo = T::zero();
    let mut hi = tv + T::of(2.0) * rhs + T::one();
    let mut guard = 0;
    while f(hi) < T::zero() {
        hi = hi * T::of(2.0);
        guard += 1;
        assert!(guard < 200, "graph solve bracket failed");
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < T::of(1e-15) * (T::one() + hi) {
            break;
        }
    }
    (lo + hi) / T::of(2.0)
}

fn random_sym<T: Real>(rng: &mut ChaCha8Rng, mag_range: (T, T)) -> Sym2<T> {
    // random direction with log-uniform magnitude
    let raw: [f64; 3] = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ];
    let mut a = [T::of(raw[0]), T::of(raw[1]), T::of(raw[2])];
    let n = frob(&a).max(magnitude_floor());
    let (lo, hi) = mag_range;
    let t = T::of(rng.gen_range(0.0..1.0));
    let mag = lo * (hi / lo).powf(t);
    for c in a.iter_mut() {
        *c = *c / n * mag;
    }
    a
}

/// On-graph sample (D, S) at temperature theta.
fn sample_point<T: Real>(
    model: &RheologyModel<T>,
    rng: &mut ChaCha8Rng,
    mag_range: (T, T),
    theta: T,
) -> (Sym2<T>, Sym2<T>) {
    match model {
        RheologyModel::ImplicitBinghamEuler { .. } => {
            let d = random_sym(rng, mag_range);
            let m = frob(&d).max(magnitude_floor());
            let smag = solve_graph_stress_magnitude(model, m, theta);
            let s = [d[0] / m * smag, d[1] / m * smag, d[2] / m * smag];
            (d, s)
        }
        RheologyModel::TruncatedStrain { .. } => {
            let s = random_sym(rng, mag_range);
            let g = model.eval_g(&s, &[T::zero(); 3], theta);
            // G = D(S) - D with D = 0 passed, so D(S) = g
            (g.g, s)
        }
        _ => {
            let d = random_sym(rng, mag_range);
            let s = model.eval_stress(&d, theta).s;
            (d, s)
        }
    }
}

/// Sample `count` on-graph pairs at equal temperature and report the
/// minimum monotonicity product and a fitted coercivity pair (alpha, beta).
/// Violations beyond tolerance are reported, never thrown.
pub fn check_graph_properties<T: Real>(
    model: &RheologyModel<T>,
    count: usize,
    theta_range: (T, T),
    mag_range: (T, T),
    seed: u64,
) -> GraphReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_mono = T::infinity();
    let mut violations = 0usize;
    let mut min_sd = T::infinity();
    let mut points: Vec<(T, T)> = Vec::with_capacity(2 * count);
    for _ in 0..count {
        let t = rng.gen_range(0.0..1.0);
        let theta = theta_range.0 + (theta_range.1 - theta_range.0) * T::of(t);
        let (d1, s1) = sample_point(model, &mut rng, mag_range, theta);
        let (d2, s2) = sample_point(model, &mut rng, mag_range, theta);
        let ds = [s1[0] - s2[0], s1[1] - s2[1], s1[2] - s2[2]];
        let dd = [d1[0] - d2[0], d1[1] - d2[1], d1[2] - d2[2]];
        let prod = contract(&ds, &dd);
        min_mono = min_mono.min(prod);
        if prod < T::of(-1e-10) {
            violations += 1;
        }
        for (d, s) in [(d1, s1), (d2, s2)] {
            let sd = contract(&s, &d);
            min_sd = min_sd.min(sd);
            let norm2 = contract(&s, &s) + contract(&d, &d);
            points.push((sd, norm2));
        }
    }
    let beta = (-min_sd).max(T::zero()) + T::of(1e-14);
    let mut alpha = T::infinity();
    for &(sd, n2) in &points {
        if n2 > T::zero() {
            alpha = alpha.min((sd + beta) / n2);
        }
    }
    GraphReport {
        samples: count,
        min_monotonicity: min_mono,
        alpha,
        beta,
        violations,
    }
}
