//! Extended-precision complex arithmetic on top of `astro-float`.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::C64;

/// Working precision in bits (about 77 decimal digits).
pub const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

fn with_cc<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Extended-precision real.
#[derive(Debug, Clone)]
pub struct XReal(pub BigFloat);

impl XReal {
    pub fn from_f64(v: f64) -> Self {
        XReal(BigFloat::from_f64(v, PREC))
    }

    pub fn zero() -> Self {
        XReal::from_f64(0.0)
    }

    pub fn to_f64(&self) -> f64 {
        let Some((words, _, sign, exp, _)) = self.0.as_raw_parts() else {
            return if self.0.is_nan() {
                f64::NAN
            } else if self.0.is_inf_neg() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
        };
        // Mantissa is a fraction in [1/2, 1) stored little-endian.
        let n = words.len();
        if n == 0 {
            return 0.0;
        }
        let top = words[n - 1] as f64;
        let next = if n > 1 { words[n - 2] as f64 } else { 0.0 };
        let m = top / 2f64.powi(64) + next / 2f64.powi(128);
        let v = m * 2f64.powi(exp);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn sqrt(&self) -> Self {
        XReal(self.0.sqrt(PREC, RM))
    }

    pub fn exp(&self) -> Self {
        XReal(with_cc(|cc| self.0.exp(PREC, RM, cc)))
    }

    pub fn ln(&self) -> Self {
        XReal(with_cc(|cc| self.0.ln(PREC, RM, cc)))
    }

    pub fn sin(&self) -> Self {
        XReal(with_cc(|cc| self.0.sin(PREC, RM, cc)))
    }

    pub fn cos(&self) -> Self {
        XReal(with_cc(|cc| self.0.cos(PREC, RM, cc)))
    }

    pub fn pi() -> Self {
        XReal(with_cc(|cc| cc.pi(PREC, RM)))
    }

    /// Four-quadrant arctangent of `self / x`.
    pub fn atan2(&self, x: &XReal) -> Self {
        let y = self;
        if x.is_zero() {
            let half = XReal(XReal::pi().0.div(&BigFloat::from_f64(2.0, PREC), PREC, RM));
            return if y.0.is_negative() { -half } else { half };
        }
        let base = XReal(with_cc(|cc| y.0.div(&x.0, PREC, RM).atan(PREC, RM, cc)));
        if x.0.is_positive() {
            base
        } else if y.0.is_negative() {
            base - XReal::pi()
        } else {
            base + XReal::pi()
        }
    }
}

impl Add for XReal {
    type Output = XReal;
    fn add(self, o: XReal) -> XReal {
        XReal(self.0.add(&o.0, PREC, RM))
    }
}

impl Sub for XReal {
    type Output = XReal;
    fn sub(self, o: XReal) -> XReal {
        XReal(self.0.sub(&o.0, PREC, RM))
    }
}

impl Mul for XReal {
    type Output = XReal;
    fn mul(self, o: XReal) -> XReal {
        XReal(self.0.mul(&o.0, PREC, RM))
    }
}

impl Div for XReal {
    type Output = XReal;
    fn div(self, o: XReal) -> XReal {
        XReal(self.0.div(&o.0, PREC, RM))
    }
}

impl Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal(self.0.neg())
    }
}

/// Extended-precision complex number.
#[derive(Debug, Clone)]
pub struct XC64 {
    pub re: XReal,
    pub im: XReal,
}

impl XC64 {
    pub fn new(re: XReal, im: XReal) -> Self {
        XC64 { re, im }
    }

    pub fn from_c64(z: C64) -> Self {
        XC64 { re: XReal::from_f64(z.re), im: XReal::from_f64(z.im) }
    }

    pub fn from_f64(v: f64) -> Self {
        XC64::from_c64(C64::new(v, 0.0))
    }

    pub fn zero() -> Self {
        XC64::from_f64(0.0)
    }

    pub fn one() -> Self {
        XC64::from_f64(1.0)
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm_sqr(&self) -> XReal {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt().to_f64()
    }

    pub fn conj(&self) -> Self {
        XC64 { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn exp(&self) -> Self {
        let m = self.re.exp();
        XC64 { re: m.clone() * self.im.cos(), im: m * self.im.sin() }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        XC64 { re: self.norm_sqr().ln() * XReal::from_f64(0.5), im: self.im.atan2(&self.re) }
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Self {
        if self.re.is_zero() && self.im.is_zero() {
            return XC64::zero();
        }
        (self.ln() * XC64::from_f64(0.5)).exp()
    }

    pub fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return XC64::one() / self.powi(-n);
        }
        let mut out = XC64::one();
        let mut base = self.clone();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                out = out * base.clone();
            }
            base = base.clone() * base;
            k >>= 1;
        }
        out
    }

    pub fn scale(&self, v: f64) -> Self {
        self.clone() * XC64::from_f64(v)
    }
}

impl Add for XC64 {
    type Output = XC64;
    fn add(self, o: XC64) -> XC64 {
        XC64 { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for XC64 {
    type Output = XC64;
    fn sub(self, o: XC64) -> XC64 {
        XC64 { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for XC64 {
    type Output = XC64;
    fn mul(self, o: XC64) -> XC64 {
        let re = self.re.clone() * o.re.clone() - self.im.clone() * o.im.clone();
        let im = self.re * o.im + self.im * o.re;
        XC64 { re, im }
    }
}

impl Div for XC64 {
    type Output = XC64;
    fn div(self, o: XC64) -> XC64 {
        let d = o.norm_sqr();
        let n = self * o.conj();
        XC64 { re: n.re / d.clone(), im: n.im / d }
    }
}

impl Neg for XC64 {
    type Output = XC64;
    fn neg(self) -> XC64 {
        XC64 { re: -self.re, im: -self.im }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip() {
        for v in [1.0, -3.25, 1e-300, 6.02e23, std::f64::consts::PI, -1e-5] {
            assert_eq!(XReal::from_f64(v).to_f64(), v);
        }
        assert_eq!(XReal::zero().to_f64(), 0.0);
    }

    #[test]
    fn elementary_functions() {
        let z = C64::new(0.3, -1.7);
        let x = XC64::from_c64(z);
        assert!((x.exp().to_c64() - z.exp()).norm() < 1e-15);
        assert!((x.ln().to_c64() - z.ln()).norm() < 1e-15);
        assert!((x.sqrt().to_c64() - z.sqrt()).norm() < 1e-15);
        assert!((x.powi(-3).to_c64() - z.powi(-3)).norm() < 1e-14);
        let w = C64::new(-2.0, -0.5);
        assert!((XC64::from_c64(w).ln().to_c64() - w.ln()).norm() < 1e-15);
    }

    #[test]
    fn precision_beyond_f64() {
        // (1 + 1e-30) - 1 survives in extended precision.
        let one = XReal::from_f64(1.0);
        let tiny = XReal::from_f64(1e-30);
        let d = (one.clone() + tiny) - one;
        assert!((d.to_f64() - 1e-30).abs() < 1e-45);
    }
}
