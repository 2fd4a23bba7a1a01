//! Manufactured solution for the convergence studies: a divergence-free
//! velocity from a polynomial-trigonometric stream function, quadratic
//! pressure and temperature fields, and the body/heat forcing terms that
//! make them solve the buoyant power-law system exactly. The closed-form
//! derivatives were generated symbolically and are validated against
//! finite differences in the tests below.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

pub fn exact_velocity(x: f64, y: f64) -> (f64, f64) {
    let x0: f64 = (PI)*(x);
    let x1: f64 = x0.sin();
    let x2: f64 = (PI)*(y);
    let x3: f64 = (PI)*(x2.cos());
    let x4: f64 = x2.sin();
    let x5: f64 = (2.0)*(x4)*(y);
    let x6: f64 = (x).powi(2);
    let x7: f64 = (x3)*(x6);
    let x8: f64 = (y).powi(2);
    let x9: f64 = x0.cos();
    let x10: f64 = (PI)*(x9);
    let v1: f64 = (x1)*((-1.0)*(x3)*(x8) + x3 + (x5)*(x6) + (-1.0)*(x5) + (x7)*(x8) + (-1.0)*(x7));
    let v2: f64 = (x4)*((-1.0)*(2.0)*(x)*(x1)*(x8) + (2.0)*(x)*(x1) + (-1.0)*(x10)*(x6)*(x8) + (-1.0)*(x10) + (PI)*(x6)*(x9) + (PI)*(x8)*(x9));
    (v1, v2)
}

pub fn exact_pressure(x: f64, y: f64) -> f64 {
    let q: f64 = (-1.0)*((x).powi(2)) + (y).powi(2);
    q
}

pub fn exact_temperature(x: f64, y: f64) -> f64 {
    let t: f64 = (x).powi(2) + (-1.0)*((y).powi(4));
    t
}

pub fn exact_stress(x: f64, y: f64, r: f64) -> (f64, f64, f64) {
    let x0: f64 = (PI)*(x);
    let x1: f64 = x0.cos();
    let x2: f64 = (PI)*(y);
    let x3: f64 = x2.cos();
    let x4: f64 = ((PI).powi(2))*(x1)*(x3);
    let x5: f64 = x0.sin();
    let x6: f64 = (x3)*(x5);
    let x7: f64 = (2.0)*(x0);
    let x8: f64 = (x6)*(x7);
    let x9: f64 = (2.0)*(x2);
    let x10: f64 = x2.sin();
    let x11: f64 = (x1)*(x10);
    let x12: f64 = (x11)*(x9);
    let x13: f64 = (x10)*(x5);
    let x14: f64 = (y).powi(2);
    let x15: f64 = (x).powi(2);
    let x16: f64 = (x15)*(x4);
    let x17: f64 = (4.0)*(x)*(x13)*(y) + (x12)*(x15) + (-1.0)*(x12) + (x14)*(x16) + (-1.0)*(x14)*(x4) + (x14)*(x8) + (-1.0)*(x16) + x4 + (-1.0)*(x8);
    let x18: f64 = (x11)*(x7);
    let x19: f64 = (x6)*(x9);
    let x20: f64 = (-1.0)*(x13)*(x14) + (x13)*(x15) + (-1.0)*(x14)*(x18) + (x15)*(x19) + x18 + (-1.0)*(x19);
    let x21: f64 = (((2.0)*((x17).powi(2)) + (2.0)*((x20).powi(2))).powf((1_f64/2.0)*(r) - 1.0))*(((-1.0)*(1_f64/4.0)*(x15) + (1_f64/4.0)*((y).powi(4))).exp());
    let x22: f64 = (x17)*(x21);
    let s11: f64 = x22;
    let s22: f64 = (-1.0)*(x22);
    let s12: f64 = (x20)*(x21);
    (s11, s22, s12)
}

pub fn forcing_momentum(x: f64, y: f64, r: f64, ra: f64, pr: f64) -> (f64, f64) {
    let x0: f64 = (2.0)*(x);
    let x1: f64 = (PI)*(x);
    let x2: f64 = x1.sin();
    let x3: f64 = (PI)*(y);
    let x4: f64 = x3.sin();
    let x5: f64 = x1.cos();
    let x6: f64 = (PI)*(x5);
    let x7: f64 = (x0)*(x2);
    let x8: f64 = (x).powi(2);
    let x9: f64 = (x6)*(x8);
    let x10: f64 = (y).powi(2);
    let x11: f64 = (x10)*(x6);
    let x12: f64 = (x10)*(x7) + (x10)*(x9) + (-1.0)*(x11) + x6 + (-1.0)*(x7) + (-1.0)*(x9);
    let x13: f64 = (2.0)*(x4);
    let x14: f64 = (PI).powi(2);
    let x15: f64 = (x14)*(x4);
    let x16: f64 = x3.cos();
    let x17: f64 = (x16)*(x3);
    let x18: f64 = (4.0)*(x17);
    let x19: f64 = (x13)*(x8);
    let x20: f64 = (x15)*(x8);
    let x21: f64 = (x10)*(x15);
    let x22: f64 = (PI)*(x16);
    let x23: f64 = (x13)*(y);
    let x24: f64 = (x22)*(x8);
    let x25: f64 = (x10)*(x22);
    let x26: f64 = (x10)*(x24) + x22 + (x23)*(x8) + (-1.0)*(x23) + (-1.0)*(x24) + (-1.0)*(x25);
    let x27: f64 = (x14)*(x16)*(x5);
    let x28: f64 = (x3)*(x5);
    let x29: f64 = (x2)*(x4);
    let x30: f64 = (4.0)*(x29);
    let x31: f64 = (x30)*(y);
    let x32: f64 = (x27)*(x8);
    let x33: f64 = (x10)*(x27);
    let x34: f64 = (x)*(x31) + (x10)*(x32) + (-1.0)*(x13)*(x28) + (x19)*(x28) + (-1.0)*(x22)*(x7) + (x25)*(x7) + x27 + (-1.0)*(x32) + (-1.0)*(x33);
    let x35: f64 = (2.0)*(x2);
    let x36: f64 = (x17)*(x35);
    let x37: f64 = (x11)*(x4);
    let x38: f64 = (-1.0)*(x0)*(x37) + (x0)*(x4)*(x6) + (-1.0)*(x10)*(x29) + (x29)*(x8) + (x36)*(x8) + (-1.0)*(x36);
    let x39: f64 = (2.0)*((y).powi(3));
    let x40: f64 = (8.0)*(x2);
    let x41: f64 = (PI).powi(3);
    let x42: f64 = (x16)*(x41);
    let x43: f64 = (x35)*(x42);
    let x44: f64 = (x10)*(x35);
    let x45: f64 = (x42)*(x44);
    let x46: f64 = (x13)*(x6);
    let x47: f64 = (x15)*(x7);
    let x48: f64 = (2.0)*(y);
    let x49: f64 = (x21)*(x7);
    let x50: f64 = (x2)*(x42);
    let x51: f64 = (x22)*(x35);
    let x52: f64 = (x50)*(x8);
    let x53: f64 = (x14)*(x2);
    let x54: f64 = (x23)*(x53);
    let x55: f64 = (x53)*(x8);
    let x56: f64 = (x23)*(x55);
    let x57: f64 = (4.0)*(x27);
    let x58: f64 = (x)*(x4);
    let x59: f64 = (4.0)*(x)*(x33) + (-1.0)*(x)*(x57) + (x25)*(x35) + (8.0)*(x28)*(x58) + x31;
    let x60: f64 = (x34)*((x10)*(x50) + (-1.0)*(x10)*(x52) + (-1.0)*(x50) + (-1.0)*(x51) + x52 + x54 + (-1.0)*(x56) + x59) + (x38)*((x)*(x18)*(x2) + (-1.0)*(x27)*(x48) + (x32)*(x48) + (-1.0)*(3.0)*(x37) + (x4)*(x7) + (x4)*(x9) + x46 + (-1.0)*(x47) + x49);
    let x61: f64 = (x34).powi(2) + (x38).powi(2);
    let x62: f64 = (x61).powi(-1);
    let x63: f64 = r - 2.0;
    let x64: f64 = (2.0)*(x62)*(x63);
    let x65: f64 = (x34)*(x64);
    let x66: f64 = (4.0)*(x5);
    let x67: f64 = (x2)*(x24);
    let x68: f64 = (x41)*(x5);
    let x69: f64 = (x4)*(x68);
    let x70: f64 = (x69)*(x8);
    let x71: f64 = (x)*(x17)*(x40) + (x)*(x30) + (x13)*(x9) + (4.0)*(x32)*(y) + (-1.0)*(x57)*(y);
    let x72: f64 = (x34)*((x10)*(x69) + (-1.0)*(x10)*(x70) + (-1.0)*(x46) + x47 + (-1.0)*(x49) + (-1.0)*(x69) + x70 + x71) + (-1.0)*(x38)*((-1.0)*(x0)*(x27) + (x0)*(x33) + (x2)*(x23) + (x2)*(x25) + (x3)*(x58)*(x66) + x51 + (-1.0)*(x54) + x56 + (-1.0)*(3.0)*(x67));
    let x73: f64 = (x15)*(x40);
    let x74: f64 = (y).powi(4);
    let x75: f64 = (1_f64/2.0)*(pr)*(((2.0)*(x61)).powf((1_f64/2.0)*(r) - 1.0))*(((1_f64/4.0)*(x74) + (-1.0)*(1_f64/4.0)*(x8)).exp());
    let x76: f64 = (x1)*(x66);
    let f1: f64 = (-1.0)*(x0) + (x12)*(x2)*(x4)*((x10)*(x20) + x13 + x15 + (-1.0)*(x18)*(x8) + x18 + (-1.0)*(x19) + (-1.0)*(x20) + (-1.0)*(x21)) + (x2)*(x26)*(x34) + (-1.0)*(x75)*((-1.0)*(x)*(x34) + (-1.0)*(x20)*(x40)*(y) + (-1.0)*(x22)*(x40) + (x38)*(x39) + (x38)*(x64)*(x72) + (x43)*(x8) + (-1.0)*(x43) + (-1.0)*(x45)*(x8) + x45 + x59 + (x60)*(x65) + (6.0)*(x67) + (x73)*(y));
    let f2: f64 = (-1.0)*(pr)*(ra)*((-1.0)*(x74) + x8) + (x12)*(x34)*(x4) + (x2)*(x26)*(x4)*((-1.0)*(x10)*(x53) + (x10)*(x55) + (-1.0)*(x10)*(x76) + x35 + (-1.0)*(x44) + x53 + (-1.0)*(x55) + x76) + x48 + (-1.0)*(x75)*((8.0)*(x)*(x10)*(x14)*(x2)*(x4) + (-1.0)*(x)*(x38) + (-1.0)*(x)*(x73) + (-1.0)*(x10)*(x13)*(x68) + (2.0)*(x10)*(x4)*(x41)*(x5)*(x8) + (-1.0)*(x19)*(x68) + (-1.0)*(x34)*(x39) + (-1.0)*(6.0)*(x37) + (2.0)*(x38)*(x60)*(x62)*(x63) + (2.0)*(x4)*(x41)*(x5) + (8.0)*(PI)*(x4)*(x5) + (-1.0)*(x65)*(x72) + (-1.0)*(x71));
    (f1, f2)
}

pub fn forcing_energy(x: f64, y: f64, r: f64, ra: f64, di: f64) -> f64 {
    let x0: f64 = (x).powi(2);
    let x1: f64 = (y).powi(4);
    let x2: f64 = ((4.0)*(x0) + (-1.0)*(4.0)*(x1)).exp();
    let x3: f64 = (y).powi(2);
    let x4: f64 = (PI)*(x);
    let x5: f64 = x4.sin();
    let x6: f64 = (PI)*(y);
    let x7: f64 = x6.cos();
    let x8: f64 = (PI)*(x7);
    let x9: f64 = x6.sin();
    let x10: f64 = (2.0)*(x9);
    let x11: f64 = (x10)*(y);
    let x12: f64 = (x0)*(x8);
    let x13: f64 = (x3)*(x8);
    let x14: f64 = x4.cos();
    let x15: f64 = (PI)*(x14);
    let x16: f64 = (2.0)*(x5);
    let x17: f64 = (x)*(x16);
    let x18: f64 = (x0)*(x15);
    let x19: f64 = (-1.0)*(x15)*(x3) + x15 + (x17)*(x3) + (-1.0)*(x17) + (x18)*(x3) + (-1.0)*(x18);
    let x20: f64 = (x5)*(x9);
    let x21: f64 = (x10)*(x14);
    let x22: f64 = (x21)*(x4);
    let x23: f64 = (x16)*(x6)*(x7);
    let x24: f64 = ((PI).powi(2))*(x14)*(x7);
    let x25: f64 = (x21)*(x6);
    let x26: f64 = (x0)*(x24);
    let x27: f64 = ((x0)*(x20) + (x0)*(x23) + (-1.0)*(x20)*(x3) + (-1.0)*(x22)*(x3) + x22 + (-1.0)*(x23)).powi(2) + ((4.0)*(x)*(x20)*(y) + (x0)*(x25) + (x13)*(x17) + (-1.0)*(x17)*(x8) + (-1.0)*(x24)*(x3) + x24 + (-1.0)*(x25) + (x26)*(x3) + (-1.0)*(x26)).powi(2);
    let ft: f64 = (-1.0)*(di)*(x19)*(x9)*(x0 + (-1.0)*(x1)) + (-1.0)*(2.0)*(di)*((ra).powi(-1))*(x27)*(((2.0)*(x27)).powf((1_f64/2.0)*(r) - 1.0))*(((-1.0)*(1_f64/4.0)*(x0) + (1_f64/4.0)*(x1)).exp()) + (2.0)*(x)*(x5)*((x0)*(x11) + (-1.0)*(x11) + (x12)*(x3) + (-1.0)*(x12) + (-1.0)*(x13) + x8) + (-1.0)*(16.0)*(x0)*(x2) + (4.0)*(x19)*(x9)*((y).powi(3)) + (12.0)*(x2)*(x3) + (-1.0)*(64.0)*(x2)*((y).powi(6)) + (-1.0)*(2.0)*(x2);
    ft
}


/// Energy forcing including the adiabatic reference shift:
/// the shift enters linearly as di * theta_ref * u2.
pub fn forcing_energy_shifted(
    x: f64,
    y: f64,
    r: f64,
    ra: f64,
    di: f64,
    theta_ref: f64,
) -> f64 {
    let (_, u2) = exact_velocity(x, y);
    forcing_energy(x, y, r, ra, di) + di * theta_ref * u2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_is_divergence_free() {
        let h = 1e-6;
        for &(x, y) in &[(0.3, 0.4), (0.71, 0.13), (0.5, 0.9), (0.05, 0.62)] {
            let (up, _) = exact_velocity(x + h, y);
            let (um, _) = exact_velocity(x - h, y);
            let (_, vp) = exact_velocity(x, y + h);
            let (_, vm) = exact_velocity(x, y - h);
            let div = (up - um) / (2.0 * h) + (vp - vm) / (2.0 * h);
            assert!(div.abs() < 1e-8, "div u = {div} at ({x},{y})");
        }
    }

    #[test]
    fn velocity_normal_trace_vanishes() {
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!(exact_velocity(0.0, t).0.abs() < 1e-13);
            assert!(exact_velocity(1.0, t).0.abs() < 1e-13);
            assert!(exact_velocity(t, 0.0).1.abs() < 1e-13);
            assert!(exact_velocity(t, 1.0).1.abs() < 1e-13);
        }
    }

    #[test]
    fn stress_matches_power_law_of_strain() {
        // S = K(theta)|D|^(r-2) D with D from finite differences of u
        let h = 1e-6;
        let r = 3.5;
        for &(x, y) in &[(0.3, 0.4), (0.77, 0.21)] {
            let d11 = (exact_velocity(x + h, y).0 - exact_velocity(x - h, y).0) / (2.0 * h);
            let d22 = (exact_velocity(x, y + h).1 - exact_velocity(x, y - h).1) / (2.0 * h);
            let d12 = ((exact_velocity(x, y + h).0 - exact_velocity(x, y - h).0) / (2.0 * h)
                + (exact_velocity(x + h, y).1 - exact_velocity(x - h, y).1) / (2.0 * h))
                / 2.0;
            let th = exact_temperature(x, y);
            let k = (-th / 4.0).exp();
            let dn = (d11 * d11 + d22 * d22 + 2.0 * d12 * d12).sqrt();
            let mul = k * dn.powf(r - 2.0);
            let (s11, s22, s12) = exact_stress(x, y, r);
            assert!((s11 - mul * d11).abs() < 1e-6 * (1.0 + s11.abs()));
            assert!((s22 - mul * d22).abs() < 1e-6 * (1.0 + s22.abs()));
            assert!((s12 - mul * d12).abs() < 1e-6 * (1.0 + s12.abs()));
        }
    }

    #[test]
    fn momentum_forcing_matches_strong_form_fd() {
        // independent oracle: -Pr div S + div(u x u) + grad p - Ra Pr theta e2
        // with div S from high-order differences of the closed-form stress
        let (r, ra, pr) = (3.5, 1.0e4, 1.0);
        let h = 2e-3;
        // 6th-order central first-derivative stencil
        let c = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let d1 = |f: &dyn Fn(f64) -> f64, t: f64| -> f64 {
            let mut acc = 0.0;
            for (i, ci) in c.iter().enumerate() {
                let o = (i as f64 - 3.0) * h;
                acc += ci * f(t + o);
            }
            acc / h
        };
        for &(x, y) in &[(0.35, 0.41), (0.67, 0.77)] {
            let ds11_dx = d1(&|t| exact_stress(t, y, r).0, x);
            let ds12_dy = d1(&|t| exact_stress(x, t, r).2, y);
            let ds12_dx = d1(&|t| exact_stress(t, y, r).2, x);
            let ds22_dy = d1(&|t| exact_stress(x, t, r).1, y);
            let conv1 = d1(&|t| exact_velocity(t, y).0 * exact_velocity(t, y).0, x)
                + d1(&|t| exact_velocity(x, t).0 * exact_velocity(x, t).1, y);
            let conv2 = d1(&|t| exact_velocity(t, y).0 * exact_velocity(t, y).1, x)
                + d1(&|t| exact_velocity(x, t).1 * exact_velocity(x, t).1, y);
            let th = exact_temperature(x, y);
            let want1 = -pr * (ds11_dx + ds12_dy) + conv1 - 2.0 * x;
            let want2 = -pr * (ds12_dx + ds22_dy) + conv2 + 2.0 * y - ra * pr * th;
            let (f1, f2) = forcing_momentum(x, y, r, ra, pr);
            assert!((f1 - want1).abs() < 1e-5 * (1.0 + want1.abs()), "{f1} vs {want1}");
            assert!((f2 - want2).abs() < 1e-5 * (1.0 + want2.abs()), "{f2} vs {want2}");
        }
    }

    #[test]
    fn energy_forcing_matches_strong_form_fd() {
        let (r, ra, di) = (3.5, 1.0e4, 0.3);
        let h = 2e-3;
        let c = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let d1 = |f: &dyn Fn(f64) -> f64, t: f64| -> f64 {
            let mut acc = 0.0;
            for (i, ci) in c.iter().enumerate() {
                let o = (i as f64 - 3.0) * h;
                acc += ci * f(t + o);
            }
            acc / h
        };
        let kgx = |x: f64, y: f64| {
            let th = exact_temperature(x, y);
            (4.0 * th).exp() * 2.0 * x
        };
        let kgy = |x: f64, y: f64| {
            let th = exact_temperature(x, y);
            (4.0 * th).exp() * (-4.0 * y * y * y)
        };
        for &(x, y) in &[(0.35, 0.41), (0.67, 0.77)] {
            let diff = d1(&|t| kgx(t, y), x) + d1(&|t| kgy(x, t), y);
            let conv = d1(&|t| exact_velocity(t, y).0 * exact_temperature(t, y), x)
                + d1(&|t| exact_velocity(x, t).1 * exact_temperature(x, t), y);
            let th = exact_temperature(x, y);
            let (_, u2) = exact_velocity(x, y);
            let (s11, s22, s12) = exact_stress(x, y, r);
            let d11 = d1(&|t| exact_velocity(t, y).0, x);
            let d22 = d1(&|t| exact_velocity(x, t).1, y);
            let d12 = (d1(&|t| exact_velocity(x, t).0, y) + d1(&|t| exact_velocity(t, y).1, x)) / 2.0;
            let sdotd = s11 * d11 + s22 * d22 + 2.0 * s12 * d12;
            let want = -diff + conv + di * th * u2 - di / ra * sdotd;
            let got = forcing_energy(x, y, r, ra, di);
            assert!((got - want).abs() < 1e-5 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }
}
