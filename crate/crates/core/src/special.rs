//! The hypergeometric function `F(1/2, 1/2; 1; x)`, its logarithmic
//! companion near `x = 1`, the arithmetic-geometric mean and the complex
//! Gamma function.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::C64;

const SERIES_TOL: f64 = 1e-17;
const MAX_TERMS: usize = 2000;

/// `c_k = ((1/2)_k / k!)^2`, the Taylor coefficients of `F` at 0.
pub fn f_coefficients(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut c = 1.0;
    for k in 0..=n {
        out.push(c);
        let r = (k as f64 + 0.5) / (k as f64 + 1.0);
        c *= r * r;
    }
    out
}

/// `d_k = 2 psi(k + 1) - 2 psi(k + 1/2)`.
pub fn d_coefficients(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut d = 4.0 * LN_2;
    for k in 0..=n {
        out.push(d);
        let j = k as f64 + 1.0;
        d += 2.0 / j - 2.0 / (j - 0.5);
    }
    out
}

fn taylor(x: C64) -> C64 {
    let mut sum = C64::new(1.0, 0.0);
    let mut c = 1.0;
    let mut p = C64::new(1.0, 0.0);
    for k in 0..MAX_TERMS {
        let r = (k as f64 + 0.5) / (k as f64 + 1.0);
        c *= r * r;
        p *= x;
        let t = p * c;
        sum += t;
        if t.norm() < SERIES_TOL * sum.norm() {
            break;
        }
    }
    sum
}

/// `D(x) = sum_k c_k d_k x^k`, so that `pi F(1 - x) = D(x) - F(x) ln x`.
pub fn log_companion(x: C64) -> C64 {
    let mut sum = C64::new(4.0 * LN_2, 0.0);
    let (mut c, mut d) = (1.0, 4.0 * LN_2);
    let mut p = C64::new(1.0, 0.0);
    for k in 0..MAX_TERMS {
        let j = k as f64 + 1.0;
        let r = (k as f64 + 0.5) / j;
        c *= r * r;
        d += 2.0 / j - 2.0 / (j - 0.5);
        p *= x;
        let t = p * (c * d);
        sum += t;
        if t.norm() < SERIES_TOL * sum.norm() {
            break;
        }
    }
    sum
}

/// Arithmetic-geometric mean with the branch of the geometric mean chosen
/// closest to the arithmetic one at every step.
pub fn agm(a: C64, b: C64) -> C64 {
    let (mut a, mut b) = (a, b);
    for _ in 0..100 {
        let an = (a + b) * 0.5;
        let mut bn = (a * b).sqrt();
        if (an - bn).norm() > (an + bn).norm() {
            bn = -bn;
        }
        a = an;
        b = bn;
        if (a - b).norm() <= 1e-16 * a.norm() {
            break;
        }
    }
    (a + b) * 0.5
}

/// `F(1/2, 1/2; 1; x) = 1 / AGM(1, sqrt(1 - x))` on the cut plane.
pub fn hypergeometric_agm(x: C64) -> C64 {
    1.0 / agm(C64::new(1.0, 0.0), (1.0 - x).sqrt())
}

/// `F(1/2, 1/2; 1; x)` on the plane cut along `[1, inf)`.
///
/// Taylor series for `|x| <= 1/2`, the logarithmic expansion at 1 for
/// `|1 - x| <= 1/2`, the Pfaff transformation where `|x / (x - 1)| <= 1/2`,
/// and the AGM elsewhere.
pub fn hypergeometric(x: C64) -> Result<C64> {
    let s = 1.0 - x;
    if s.norm() < 1e-12 {
        return Err(Error::NearSingularity);
    }
    if x.norm() <= 0.5 {
        return Ok(taylor(x));
    }
    if s.norm() <= 0.5 {
        return Ok((log_companion(s) - taylor(s) * s.ln()) / PI);
    }
    let w = x / (x - 1.0);
    if w.norm() <= 0.5 {
        return Ok(taylor(w) / s.sqrt());
    }
    Ok(hypergeometric_agm(x))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex Gamma function (Lanczos, with reflection for `Re z < 1/2`).
pub fn gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        return PI / ((PI * z).sin() * gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut s = C64::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * s
}
