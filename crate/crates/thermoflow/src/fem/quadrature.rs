//! Symmetric quadrature on the reference triangle {(x,y): x,y >= 0, x+y <= 1}.
//!
//! Rules are built from a collapsed Gauss-Legendre grid (Duffy transform) and
//! symmetrized over the six affine symmetries of the triangle, so exactness
//! for the requested total degree holds by construction and the rule is
//! invariant under permutations of the barycentric coordinates.

use crate::mesh::Point2;
use crate::Real;

#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    /// Points in reference coordinates (x, y); barycentric (1-x-y, x, y).
    pub points: Vec<Point2<T>>,
    /// Weights summing to the reference area 1/2.
    pub weights: Vec<T>,
    pub exactness: usize,
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre_01<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); m];
    let mut weights = vec![T::zero(); m];
    let mf = T::of(m as f64);
    for k in 0..m {
        // Newton iteration on P_m from the Chebyshev-like initial guess
        let mut x = (T::of(std::f64::consts::PI) * (T::of(k as f64) + T::of(0.75))
            / (mf + T::of(0.5)))
        .cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let dx = p / dp;
            x = x - dx;
            if dx.abs() < T::of(1e-16) {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        nodes[k] = (x + T::one()) / T::of(2.0);
        weights[k] = T::one() / ((T::one() - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial P_m and derivative at x via the three-term recurrence.
fn legendre<T: Real>(m: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if m == 0 {
        return (p0, T::zero());
    }
    for n in 1..m {
        let nf = T::of(n as f64);
        let p2 = ((T::of(2.0) * nf + T::one()) * x * p1 - nf * p0) / (nf + T::one());
        p0 = p1;
        p1 = p2;
    }
    let mf = T::of(m as f64);
    let dp = mf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Symmetric rule exact for polynomials of total degree `exactness`.
pub fn quadrature_rule<T: Real>(exactness: usize) -> Result<QuadratureRule<T>, super::FemError> {
    if exactness < 1 || exactness > 20 {
        return Err(super::FemError::InvalidArgument(format!(
            "quadrature exactness {exactness} outside supported range 1..=20"
        )));
    }
    let m = (exactness + 3) / 2; // Gauss degree 2m-1 >= exactness + 1 (Duffy Jacobian)
    let (nu, wu) = gauss_legendre_01::<T>(m);
    let (nv, wv) = gauss_legendre_01::<T>(m);
    let mut raw: Vec<(T, T, T)> = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let v = nv[j];
            let x = nu[i] * (T::one() - v);
            let w = wu[i] * wv[j] * (T::one() - v);
            raw.push((x, v, w));
        }
    }
    // symmetrize over the six barycentric permutations and merge duplicates
    let mut pts: Vec<(T, T)> = Vec::new();
    let mut wts: Vec<T> = Vec::new();
    let sixth = T::of(1.0 / 6.0);
    let tol = T::of(1e-13);
    for (x, y, w) in raw {
        let b = [T::one() - x - y, x, y];
        let perms = [
            [0usize, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for p in perms {
            let (px, py) = (b[p[1]], b[p[2]]);
            let mut merged = false;
            for (q, wq) in pts.iter().zip(wts.iter_mut()) {
                if (q.0 - px).abs() < tol && (q.1 - py).abs() < tol {
                    *wq += w * sixth;
                    merged = true;
                    break;
                }
            }
            if !merged {
                pts.push((px, py));
                wts.push(w * sixth);
            }
        }
    }
    Ok(QuadratureRule {
        points: pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
        weights: wts,
        exactness,
    })
}

/// Gauss rule on the unit interval, used for facet integrals.
pub fn gauss_rule_1d<T: Real>(npoints: usize) -> (Vec<T>, Vec<T>) {
    gauss_legendre_01::<T>(npoints.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &QuadratureRule<f64>, f: impl Fn(f64, f64) -> f64) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, &w)| w * f(p.x, p.y))
            .sum()
    }

    #[test]
    fn constant_integrates_to_half() {
        for deg in 1..=20 {
            let r = quadrature_rule::<f64>(deg).unwrap();
            assert!((integrate(&r, |_, _| 1.0) - 0.5).abs() < 1e-14, "deg {deg}");
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn bubble_expected_value() {
        // symbolic oracle: int l1*l2*l3 = 2*|T|*1!1!1!/(1+1+1+2)! = 1/120
        let r = quadrature_rule::<f64>(3).unwrap();
        let got = integrate(&r, |x, y| (1.0 - x - y) * x * y);
        assert!((got - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unsupported_degree() {
        assert!(quadrature_rule::<f64>(0).is_err());
        assert!(quadrature_rule::<f64>(21).is_err());
    }

    #[test]
    fn cross_rule_comparison() {
        // rule of exactness 2k+2 vs exactness+2 rule on random polynomials
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in 1..=4 {
            let deg = 2 * k + 2;
            let lo = quadrature_rule::<f64>(deg).unwrap();
            let hi = quadrature_rule::<f64>(deg + 2).unwrap();
            // random polynomial of total degree `deg`
            let mut coeffs = Vec::new();
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    coeffs.push((a, b, rng.gen_range(-1.0..1.0)));
                }
            }
            let f = |x: f64, y: f64| {
                coeffs
                    .iter()
                    .map(|&(a, b, c)| c * x.powi(a as i32) * y.powi(b as i32))
                    .sum::<f64>()
            };
            let (il, ih) = (integrate(&lo, f), integrate(&hi, f));
            assert!((il - ih).abs() <= 1e-14, "k={k}: {il} vs {ih}");
        }
    }

    #[test]
    fn symmetric_under_barycentric_permutation() {
        let r = quadrature_rule::<f64>(7).unwrap();
        // integral of f(l1,l2,l3) equals integral of f over any permutation
        let f = |a: f64, b: f64, c: f64| a * a * b + 0.3 * c * c * c;
        let perms: [fn(f64, f64, f64) -> (f64, f64, f64); 3] = [
            |a, b, c| (a, b, c),
            |a, b, c| (b, c, a),
            |a, b, c| (c, a, b),
        ];
        let vals: Vec<f64> = perms
            .iter()
            .map(|perm| {
                integrate(&r, |x, y| {
                    let (a, b, c) = perm(1.0 - x - y, x, y);
                    f(a, b, c)
                })
            })
            .collect();
        assert!((vals[0] - vals[1]).abs() < 1e-15);
        assert!((vals[0] - vals[2]).abs() < 1e-15);
    }

    #[test]
    fn gauss_1d_exactness() {
        let (n, w) = gauss_rule_1d::<f64>(4);
        let int: f64 = n.iter().zip(&w).map(|(&x, &wi)| wi * x.powi(7)).sum();
        assert!((int - 1.0 / 8.0).abs() < 1e-15);
    }
}
