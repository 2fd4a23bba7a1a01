use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn sec53_model(eps: f64) -> RheologyModel<f64> {
    // Bingham-to-Euler ramp configuration: sigma active below theta=3,
    // tau active above theta=7, mu constant 1/2
    RheologyModel::ImplicitBinghamEuler {
        mu: ScalarLaw::Constant(0.5),
        tau: ScalarLaw::SmoothedRamp {
            level: 0.025,
            s_on: 7.0,
            s_off: 9.0,
            eps,
        },
        sigma: ScalarLaw::SmoothedRamp {
            level: 0.1,
            s_on: 3.0,
            s_off: 1.0,
            eps,
        },
        eps,
    }
}

#[test]
fn smooth_max_min_formula_identities() {
    assert!((smooth_max(0.0f64, 0.0, 0.2) - 0.1).abs() < 1e-14);
    assert_eq!(smooth_max(3.0f64, 1.0, 0.0), 3.0);
    let want = (4.0 - 4.04f64.sqrt()) / 2.0;
    assert!((smooth_min(3.0, 1.0, 0.2) - want).abs() < 1e-14);
    assert!((want - 0.99501).abs() < 1e-5);
    // bounds
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-5.0..5.0);
        let y = rng.gen_range(-5.0..5.0);
        let e = rng.gen_range(0.0..0.5);
        assert!(smooth_max(x, y, e) >= x.max(y) - 1e-14);
        assert!(smooth_min(x, y, e) <= x.min(y) + 1e-14);
    }
}

#[test]
fn newtonian_half_viscosity_is_identity() {
    let model = RheologyModel::Newtonian {
        mu: ScalarLaw::Constant(0.5),
    };
    let d = [0.3f64, -0.3, 0.7];
    let se = model.eval_stress(&d, 1.2);
    for i in 0..3 {
        assert!((se.s[i] - d[i]).abs() < 1e-15);
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((se.ds_dd[i][j] - want).abs() < 1e-15);
        }
    }
}

#[test]
fn power_law_r2_is_newtonian() {
    let model = RheologyModel::PowerLaw {
        r: 2.0,
        k: ScalarLaw::Constant(1.0),
    };
    let d = [0.1f64, 0.2, -0.4];
    let se = model.eval_stress(&d, 0.0);
    for i in 0..3 {
        assert!((se.s[i] - d[i]).abs() < 1e-14);
    }
}

#[test]
fn bingham_regularized_vanishes_at_rest() {
    let model = RheologyModel::BinghamRegularized {
        mu: ScalarLaw::Constant(1.0),
        tau: ScalarLaw::Constant(1.0),
        bn: 1.5,
        eps: 1e-3,
    };
    let se = model.eval_stress(&[0.0f64; 3], 0.5);
    assert!(frob(&se.s) == 0.0);
}

#[test]
fn g_vanishes_at_origin() {
    let eps = 1e-4;
    let model = sec53_model(eps);
    let g = model.eval_g(&[0.0f64; 3], &[0.0; 3], 5.0);
    assert!(frob(&g.g) <= eps, "{}", frob(&g.g));
}

#[test]
fn g_newtonian_limit() {
    // tau = sigma = 0, tiny eps: G = 0 iff S = 2 mu D
    let model = RheologyModel::ImplicitBinghamEuler {
        mu: ScalarLaw::Constant(1.0),
        tau: ScalarLaw::Constant(0.0),
        sigma: ScalarLaw::Constant(0.0),
        eps: 1e-12,
    };
    let d = [1.0f64, -1.0, 0.0];
    let s = [2.0f64, -2.0, 0.0];
    let g = model.eval_g(&s, &d, 0.0);
    assert!(frob(&g.g) < 1e-9, "{}", frob(&g.g));
    let g_bad = model.eval_g(&[1.0, -1.0, 0.0], &d, 0.0);
    assert!(frob(&g_bad.g) > 0.5);
}

#[test]
fn g_root_matches_explicit_bingham() {
    // hot temperature: tau = tau*, sigma ~ 0; solve G = 0 along D for |D|=1
    let model = sec53_model(1e-4);
    let theta = 10.0;
    let m = 1.0;
    let smag = properties::solve_graph_stress_magnitude(&model, m, theta);
    // unregularized Bingham: |S| = 2 mu |D| + tau*
    let want = 2.0 * 0.5 * m + 0.025;
    assert!((smag - want).abs() < 1e-3, "{smag} vs {want}");
    // and the residual there is small
    let d = [(0.5f64).sqrt(), -(0.5f64).sqrt(), 0.0]; // |D| = 1
    let s = [d[0] * smag, d[1] * smag, d[2] * smag];
    let g = model.eval_g(&s, &d, theta);
    assert!(frob(&g.g) < 1e-10);
}

#[test]
fn effective_viscosity_regimes() {
    let eps = 1e-6;
    // Newtonian regime: tau = sigma = 0
    let newt = RheologyModel::ImplicitBinghamEuler {
        mu: ScalarLaw::Constant(0.7),
        tau: ScalarLaw::Constant(0.0),
        sigma: ScalarLaw::Constant(0.0),
        eps,
    };
    let d = [0.5f64, -0.5, 0.2];
    let s = [0.7f64, -0.7, 0.28];
    let me = effective_viscosity(&newt, &s, &d, 0.0);
    assert!((me - 2.0 * 0.7).abs() < 1e-4, "{me}");

    // Euler regime: |D| >> sigma with sigma active, |S| tiny below tau floor
    let model = sec53_model(1e-4);
    let theta = 0.0; // sigma = 0.1, tau = 0
    let d_big = [10.0f64, -10.0, 0.0];
    let s_tiny = [1e-9f64, -1e-9, 0.0];
    let me2 = effective_viscosity(&model, &s_tiny, &d_big, theta);
    // numerator ~ 2 mu, denominator ~ (1e-12 + smax0(|S|)/|S| ~ O(1e4 eps))
    assert!(me2 > 1e-5 && me2 < 10.0, "{me2}");

    // plug regime: |S| < tau at a sample point with small |D|; oracle is
    // the direct evaluation of the defining formula
    let theta_hot = 10.0;
    let dm = 1e-4;
    let d_small = [dm / 2f64.sqrt(), -dm / 2f64.sqrt(), 0.0];
    let s_plug = [0.01f64, -0.01, 0.0];
    let me3 = effective_viscosity(&model, &s_plug, &d_small, theta_hot);
    let RheologyModel::ImplicitBinghamEuler { tau, sigma, .. } = &model else {
        unreachable!()
    };
    let (mu_h, tau_h, sigma_h, e) = (0.5, tau.value(theta_hot), sigma.value(theta_hot), 1e-4);
    let ms = 0.01f64 * 2f64.sqrt();
    let pa = smooth_max(0.0, dm - sigma_h, e);
    let pb = smooth_max(0.0, ms - tau_h, e);
    let want = 2.0 * mu_h * (pa / dm) / (1e-12 + pb / ms);
    assert!((me3 - want).abs() <= 1e-12 * want, "{me3} vs {want}");
    assert!(me3 > 1e3 && me3 < 1e13, "{me3}");
}

#[test]
fn derivative_consistency_fd() {
    // central differences at step 1e-6, relative tolerance 1e-6
    let models: Vec<RheologyModel<f64>> = vec![
        RheologyModel::Newtonian {
            mu: ScalarLaw::Exponential { a: 1.0, b: -0.1 },
        },
        RheologyModel::PowerLaw {
            r: 3.5,
            k: ScalarLaw::Exponential { a: 1.0, b: -0.25 },
        },
        RheologyModel::PowerLaw {
            r: 1.6,
            k: ScalarLaw::Exponential { a: 1.0, b: -0.25 },
        },
        RheologyModel::BinghamRegularized {
            mu: ScalarLaw::Affine { a: -1.9, b: 20.0 },
            tau: ScalarLaw::Constant(1.0),
            bn: 1.5,
            eps: 1e-3,
        },
        RheologyModel::TruncatedStress {
            n: 10.0,
            mu: ScalarLaw::Constant(1.0),
            tau: ScalarLaw::Constant(0.3),
            sigma: ScalarLaw::Constant(0.0),
        },
        RheologyModel::TruncatedStrain {
            n: 10.0,
            mu: ScalarLaw::Constant(1.0),
            tau: ScalarLaw::Constant(0.3),
            sigma: ScalarLaw::Constant(0.0),
        },
        sec53_model(1e-4),
    ];
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for model in &models {
        for _ in 0..100 {
            let theta = rng.gen_range(-1.0..11.0);
            let mut d = [0.0f64; 3];
            let mut s = [0.0f64; 3];
            for c in 0..3 {
                d[c] = rng.gen_range(-1.0..1.0);
                s[c] = rng.gen_range(-1.0..1.0);
            }
            let g0 = model.eval_g(&s, &d, theta);
            // directional derivatives vs finite differences
            let mut dir_d = [0.0f64; 3];
            let mut dir_s = [0.0f64; 3];
            for c in 0..3 {
                dir_d[c] = rng.gen_range(-1.0..1.0);
                dir_s[c] = rng.gen_range(-1.0..1.0);
            }
            let perturb = |s: &Sym2<f64>, dir: &Sym2<f64>, t: f64| {
                [s[0] + t * dir[0], s[1] + t * dir[1], s[2] + t * dir[2]]
            };
            let gp = model.eval_g(&perturb(&s, &dir_s, h), &d, theta);
            let gm = model.eval_g(&perturb(&s, &dir_s, -h), &d, theta);
            for i in 0..3 {
                let fd = (gp.g[i] - gm.g[i]) / (2.0 * h);
                let an: f64 = (0..3).map(|j| g0.dg_ds[i][j] * dir_s[j]).sum();
                let scale = 1.0 + fd.abs().max(an.abs());
                assert!(
                    (fd - an).abs() <= 1e-6 * scale,
                    "dg_ds mismatch {fd} vs {an} for {model:?}"
                );
            }
            let gp = model.eval_g(&s, &perturb(&d, &dir_d, h), theta);
            let gm = model.eval_g(&s, &perturb(&d, &dir_d, -h), theta);
            for i in 0..3 {
                let fd = (gp.g[i] - gm.g[i]) / (2.0 * h);
                let an: f64 = (0..3).map(|j| g0.dg_dd[i][j] * dir_d[j]).sum();
                let scale = 1.0 + fd.abs().max(an.abs());
                assert!(
                    (fd - an).abs() <= 1e-6 * scale,
                    "dg_dd mismatch {fd} vs {an} for {model:?}"
                );
            }
            let gp = model.eval_g(&s, &d, theta + h);
            let gm = model.eval_g(&s, &d, theta - h);
            for i in 0..3 {
                let fd = (gp.g[i] - gm.g[i]) / (2.0 * h);
                let an = g0.dg_dtheta[i];
                let scale = 1.0 + fd.abs().max(an.abs());
                assert!(
                    (fd - an).abs() <= 2e-6 * scale,
                    "dg_dtheta mismatch {fd} vs {an} for {model:?}"
                );
            }
        }
    }
}

#[test]
fn frame_indifference_of_magnitude() {
    // |S(Q D Q^T)| = |S(D)| for random rotations Q in SO(2)
    let models: Vec<RheologyModel<f64>> = vec![
        RheologyModel::PowerLaw {
            r: 1.6,
            k: ScalarLaw::Constant(1.0),
        },
        RheologyModel::BinghamRegularized {
            mu: ScalarLaw::Constant(1.0),
            tau: ScalarLaw::Constant(1.0),
            bn: 1.5,
            eps: 1e-3,
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for model in &models {
        for _ in 0..100 {
            let d = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let (c, s) = (a.cos(), a.sin());
            // Q D Q^T in Voigt components
            let d11 = c * c * d[0] - 2.0 * c * s * d[2] + s * s * d[1];
            let d22 = s * s * d[0] + 2.0 * c * s * d[2] + c * c * d[1];
            let d12 = c * s * (d[0] - d[1]) + (c * c - s * s) * d[2];
            let rd = [d11, d22, d12];
            let s1 = model.eval_stress(&d, 0.3).s;
            let s2 = model.eval_stress(&rd, 0.3).s;
            assert!((frob(&s1) - frob(&s2)).abs() <= 1e-12 * (1.0 + frob(&s1)));
        }
    }
}

#[test]
fn truncation_duality() {
    // D^n(S^n(D)) = D below truncation, tau*sigma = 0
    let mk = |tau: f64, sigma: f64| {
        (
            RheologyModel::TruncatedStress {
                n: 1.0,
                mu: ScalarLaw::Constant(1.0),
                tau: ScalarLaw::Constant(tau),
                sigma: ScalarLaw::Constant(sigma),
            },
            RheologyModel::TruncatedStrain {
                n: 1.0,
                mu: ScalarLaw::Constant(1.0),
                tau: ScalarLaw::Constant(tau),
                sigma: ScalarLaw::Constant(sigma),
            },
        )
    };
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    // sample |D| above the activation thresholds and inside the untruncated
    // branch of both maps: |D| >= tau/n for the stress map, and for the
    // strain map's cap, |D| >= sigma (n + 1/(2mu)) 2mu / (2mu n + 1)
    for (tau, sigma, lo) in [(0.0, 0.0, 0.1), (0.5, 0.0, 0.6), (0.0, 0.3, 0.5)] {
        let (fwd, dual) = mk(tau, sigma);
        for _ in 0..200 {
            let mut d = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let m = frob(&d);
            let target = rng.gen_range(lo..(lo + 0.9));
            for c in d.iter_mut() {
                *c *= target / m;
            }
            let s = fwd.eval_stress(&d, 0.0).s;
            let g = dual.eval_g(&s, &[0.0; 3], 0.0);
            let dd = g.g; // D^n(S)
            for i in 0..3 {
                assert!(
                    (dd[i] - d[i]).abs() < 1e-10,
                    "duality failed: {dd:?} vs {d:?} (tau={tau}, sigma={sigma})"
                );
            }
        }
    }
}

#[test]
fn smoothed_ramp_compatibility() {
    // tau(theta) * sigma(theta) <= eps across the transition
    let eps = 1e-4;
    let model = sec53_model(eps);
    let RheologyModel::ImplicitBinghamEuler { tau, sigma, .. } = &model else {
        unreachable!()
    };
    for i in 0..=1000 {
        let theta = -2.0 + 14.0 * (i as f64) / 1000.0;
        let product = tau.value(theta) * sigma.value(theta);
        assert!(product <= eps, "theta {theta}: {product}");
    }
}

#[test]
fn graph_monotonicity_newtonian_exact() {
    let model = RheologyModel::Newtonian {
        mu: ScalarLaw::Constant(1.0),
    };
    let rep = check_graph_properties(&model, 1000, (0.0, 1.0), (1e-3, 1e1), 7);
    assert!(rep.min_monotonicity >= 0.0);
    assert_eq!(rep.violations, 0);
}

#[test]
fn graph_monotonicity_truncated_and_power_law() {
    let trunc = RheologyModel::TruncatedStress {
        n: 1.0,
        mu: ScalarLaw::Constant(1.0),
        tau: ScalarLaw::Constant(0.0),
        sigma: ScalarLaw::Constant(0.0),
    };
    let rep = check_graph_properties(&trunc, 10_000, (0.0, 1.0), (1e-4, 1e2), 11);
    assert!(rep.min_monotonicity >= -1e-10, "{}", rep.min_monotonicity);
    assert_eq!(rep.violations, 0);

    let pl: RheologyModel<f64> = RheologyModel::PowerLaw {
        r: 1.6,
        k: ScalarLaw::Constant(1.0),
    };
    let rep = check_graph_properties(&pl, 10_000, (0.0, 1.0), (1e-4, 1e2), 13);
    assert!(rep.min_monotonicity >= -1e-10, "{}", rep.min_monotonicity);
    assert_eq!(rep.violations, 0);
    assert!(rep.alpha.is_finite());
}

#[test]
fn poiseuille_newtonian_limit() {
    for i in 0..=10 {
        let y = -1.0 + 0.2 * (i as f64);
        let u: f64 = bingham_poiseuille(y, 0.0, 1.0);
        assert!((u - (1.0 - y * y)).abs() < 1e-14);
    }
}

#[test]
fn poiseuille_no_slip_and_symmetry() {
    for bn in [0.0f64, 0.5, 1.5] {
        assert!(bingham_poiseuille(1.0f64, bn, 1.0).abs() < 1e-14);
        assert!(bingham_poiseuille(-1.0f64, bn, 1.0).abs() < 1e-14);
        for i in 0..=50 {
            let y = i as f64 / 50.0;
            let a: f64 = bingham_poiseuille(y, bn, 1.0);
            let b = bingham_poiseuille(-y, bn, 1.0);
            assert!((a - b).abs() < 1e-14);
        }
    }
}

#[test]
fn poiseuille_momentum_balance_oracle() {
    // S12(y) from the 1D constitutive relation has constant slope -2 mu and
    // stays below the yield stress inside the plug
    let (bn, mu) = (1.5, 1.0);
    let yc = bn / (2.0 * mu);
    let g = 2.0 * mu;
    let du = |y: f64| {
        // analytic derivative of the implemented profile
        if y.abs() <= yc {
            0.0
        } else {
            -2.0 * y + bn / mu * y.signum()
        }
    };
    for i in 0..=1000 {
        let y = -1.0 + 2.0 * (i as f64) / 1000.0;
        if y.abs() > yc {
            // yielded: S12 = mu u' - Bn sign(y) ... sign(u') = -sign(y)
            let s12 = mu * du(y) - bn * y.signum();
            assert!((s12 - (-g * y)).abs() <= 1e-10, "y={y}");
            assert!(s12.abs() >= bn - 1e-12);
        } else {
            // plug: the momentum balance continues S12 = -G y with |S12| <= Bn
            let s12 = -g * y;
            assert!(s12.abs() <= bn + 1e-12);
            assert!(du(y).abs() <= 1e-14);
        }
        // finite-difference check of the profile derivative away from kinks
        let h = 1e-7;
        if (y.abs() - yc).abs() > 1e-3 && y.abs() < 1.0 - 1e-3 {
            let fd = (bingham_poiseuille(y + h, bn, mu) - bingham_poiseuille(y - h, bn, mu))
                / (2.0 * h);
            assert!((fd - du(y)).abs() < 1e-6, "y={y}: {fd} vs {}", du(y));
        }
    }
}

#[test]
fn scalar_law_derivatives() {
    let laws: Vec<ScalarLaw<f64>> = vec![
        ScalarLaw::Constant(2.0),
        ScalarLaw::Exponential { a: 1.0, b: 4.0 },
        ScalarLaw::Affine { a: -1.9, b: 20.0 },
        ScalarLaw::Quadratic {
            c0: 0.5,
            c1: 0.5,
            c2: 1.0,
        },
        ScalarLaw::SmoothedRamp {
            level: 0.1,
            s_on: 3.0,
            s_off: 1.0,
            eps: 1e-4,
        },
    ];
    let h = 1e-6;
    for law in &laws {
        for i in 0..50 {
            let s = -1.0 + 0.25 * i as f64;
            let (_, d) = law.eval(s);
            let fd = (law.value(s + h) - law.value(s - h)) / (2.0 * h);
            assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()), "{law:?} at {s}");
        }
    }
}
