//! The representation `y = P(nu1 w1 + nu2 w2 + v; w1, w2) + (1 + x) / 3`
//! with hypergeometric half-periods, and the Weierstrass kernel behind it.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::lattice::{CoveringPoint, Lattice, Series, ThreeSums};
use crate::params::Theta;
use crate::series::solve_by_probing;
use crate::special::{d_coefficients, f_coefficients, hypergeometric, log_companion};
use crate::C64;

const LN_16: f64 = 4.0 * LN_2;
const Q_TOL: f64 = 1e-18;
const MAX_TERMS: usize = 100_000;

/// Half-periods `w1 = (pi/2) F(x)`, `w2 = i (pi/2) F(1 - x)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HalfPeriods {
    pub omega1: C64,
    pub omega2: C64,
}

impl HalfPeriods {
    pub fn tau(&self) -> C64 {
        self.omega2 / self.omega1
    }
}

/// Half-periods on the principal sheet, `-pi < arg x, arg(1 - x) < pi`.
pub fn half_periods(x: C64) -> Result<HalfPeriods> {
    let f1 = hypergeometric(x)?;
    let f2 = hypergeometric(1.0 - x)?;
    Ok(HalfPeriods { omega1: 0.5 * PI * f1, omega2: C64::i() * 0.5 * PI * f2 })
}

/// Half-periods continued along the covering of `0 < |x| < 1`:
/// `w2 = (i/2)(D(x) - F(x) ln x)`, so each turn around 0 adds `2 w1`.
pub fn half_periods_covering(x: CoveringPoint) -> Result<HalfPeriods> {
    let xc = x.to_complex();
    if x.ln_abs < (0.5f64).ln() {
        let f = hypergeometric(xc)?;
        let d = log_companion(xc);
        return Ok(HalfPeriods { omega1: 0.5 * PI * f, omega2: 0.5 * C64::i() * (d - f * x.log()) });
    }
    let turns = ((x.arg - xc.arg()) / (2.0 * PI)).round();
    if turns != 0.0 && x.ln_abs >= 0.0 {
        return Err(Error::Invalid("covering points off the principal sheet need |x| < 1".into()));
    }
    let h = half_periods(xc)?;
    Ok(HalfPeriods { omega1: h.omega1, omega2: h.omega2 + 2.0 * turns * h.omega1 })
}

/// Reduces `z` modulo `2 w1 Z + 2 w2 Z` towards the origin and returns the
/// reduced argument `u = pi z / (2 w1)`, the nome and `U = pi / (2 w1)`.
fn reduce(z: C64, w1: C64, w2: C64) -> Result<(C64, C64, C64)> {
    let tau = w2 / w1;
    if tau.im <= 1e-12 {
        return Err(Error::DegenerateLattice);
    }
    let t0 = z / (2.0 * w1);
    let t = (t0.im / tau.im).round();
    let s = (t0.re - t * tau.re).round();
    let zr = z - 2.0 * s * w1 - 2.0 * t * w2;
    if zr.norm() < 1e-14 * w1.norm().max(w2.norm()) {
        return Err(Error::LatticePoint);
    }
    let big_u = PI / (2.0 * w1);
    Ok((big_u * zr, (C64::i() * PI * tau).exp(), big_u))
}

/// `E = exp(2 i u)` or its inverse, whichever has modulus at most one, and
/// the sign `+1` / `-1` telling which.
fn bounded_phase(u: C64) -> (C64, f64) {
    let e = (2.0 * C64::i() * u).exp();
    if e.norm() <= 1.0 {
        (e, 1.0)
    } else {
        ((-2.0 * C64::i() * u).exp(), -1.0)
    }
}

/// Weierstrass `P(z; w1, w2)` for the lattice `2 w1 Z + 2 w2 Z`, from the
/// nome expansion `U^2 [-1/3 + 8 sum n q^2n / (1 - q^2n) + csc^2 u
/// - 8 sum n q^2n / (1 - q^2n) cos 2nu]`.
pub fn weierstrass_p(z: C64, w1: C64, w2: C64) -> Result<C64> {
    let (u, q, big_u) = reduce(z, w1, w2)?;
    let (e, _) = bounded_phase(u);
    let csc2 = -4.0 * e / ((1.0 - e) * (1.0 - e));
    let q2 = q * q;
    let (mut lambert, mut cos_sum) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let mut qn = C64::new(1.0, 0.0);
    let (mut ep, mut em) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    for n in 1..MAX_TERMS {
        qn *= q2;
        ep *= q2 * e;
        em *= q2 / e;
        let nf = n as f64;
        let l = nf / (1.0 - qn);
        lambert += l * qn;
        let t = l * (ep + em);
        cos_sum += t;
        if qn.norm() < Q_TOL && t.norm() < Q_TOL * (1.0 + cos_sum.norm()) {
            break;
        }
    }
    Ok(big_u * big_u * (-1.0 / 3.0 + 8.0 * lambert + csc2 - 4.0 * cos_sum))
}

/// Derivative of [`weierstrass_p`].
pub fn weierstrass_p_prime(z: C64, w1: C64, w2: C64) -> Result<C64> {
    let (u, q, big_u) = reduce(z, w1, w2)?;
    let (e, sgn) = bounded_phase(u);
    let csc2 = -4.0 * e / ((1.0 - e) * (1.0 - e));
    let cot = sgn * C64::i() * (e + 1.0) / (e - 1.0);
    let q2 = q * q;
    let mut sin_sum = C64::new(0.0, 0.0);
    let mut qn = C64::new(1.0, 0.0);
    let (mut ep, mut em) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    for n in 1..MAX_TERMS {
        qn *= q2;
        ep *= q2 * e;
        em *= q2 / e;
        let nf = n as f64;
        // q^2n sin 2nu = (E^n - E^-n) q^2n / 2i, in the bounded phase.
        let t = nf * nf / (1.0 - qn) * sgn * (ep - em) / (2.0 * C64::i());
        sin_sum += t;
        if qn.norm() < Q_TOL && t.norm() < Q_TOL * (1.0 + sin_sum.norm()) {
            break;
        }
    }
    Ok(big_u.powi(3) * (-2.0 * csc2 * cot + 16.0 * sin_sum))
}

/// Symmetric lattice sums over `|j|, |k| <= m`: `P(z)`, `sum' w^-4`, `sum' w^-6`.
fn lattice_sums(z: C64, w1: C64, w2: C64, m: i64) -> (C64, C64, C64) {
    let mut p = 1.0 / (z * z);
    let (mut s4, mut s6) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for j in -m..=m {
        for k in -m..=m {
            if j == 0 && k == 0 {
                continue;
            }
            let w = 2.0 * j as f64 * w1 + 2.0 * k as f64 * w2;
            let w2i = 1.0 / (w * w);
            let d = z - w;
            p += 1.0 / (d * d) - w2i;
            let w4i = w2i * w2i;
            s4 += w4i;
            s6 += w4i * w2i;
        }
    }
    (p, s4, s6)
}

/// Reference values `(P(z), g2, g3)` from direct lattice sums over boxes of
/// half-width `m, 2m, 4m, 8m`, with the truncation error (powers 2, 3, 4 of
/// `1/m`) removed by Richardson extrapolation. Slow; intended as an
/// independent check of the nome expansions.
pub fn lattice_reference(z: C64, w1: C64, w2: C64, m: i64) -> (C64, C64, C64) {
    let s: Vec<_> = [m, 2 * m, 4 * m, 8 * m].iter().map(|&k| lattice_sums(z, w1, w2, k)).collect();
    let rich = |f: &dyn Fn(&(C64, C64, C64)) -> C64| {
        let mut col: Vec<C64> = s.iter().map(f).collect();
        for p in [2, 3, 4] {
            let g = 2f64.powi(p);
            col = col.windows(2).map(|w| (g * w[1] - w[0]) / (g - 1.0)).collect();
        }
        col[0]
    };
    (rich(&|t| t.0), 60.0 * rich(&|t| t.1), 140.0 * rich(&|t| t.2))
}

/// A transcendent in the elliptic representation.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticBranch {
    pub nu1: C64,
    pub nu2: C64,
    pub theta: Theta,
    pub order: i32,
    /// `v` on the grade lattice of `T = e^(i pi nu1) (x/16)^nu2` and
    /// `S = e^(-i pi nu1) (x/16)^(1 - nu2)`; key `(i, j)` is `T^i S^j`.
    pub v: Series,
    pub r: f64,
}

/// The generators `T` and `S`, with `x = 16 T S`.
pub fn elliptic_lattice(nu1: C64, nu2: C64) -> Lattice {
    let ipn = C64::i() * PI * nu1;
    Lattice::grade(nu2, ipn - nu2 * LN_16, -ipn - (1.0 - nu2) * LN_16, C64::new(16.0, 0.0))
}

fn x_poly(lat: Lattice, max_w: i32, coeffs: &[f64]) -> Series {
    let x = Series::x(lat, max_w);
    let mut out = Series::zero(lat, max_w);
    let mut p = Series::constant(lat, max_w, C64::new(1.0, 0.0));
    for (k, c) in coeffs.iter().enumerate() {
        if k > 0 {
            p = p.mul(&x);
        }
        out = out.add(&p.scale(C64::new(*c, 0.0)));
    }
    out
}

fn divisor_sigma(m: usize) -> f64 {
    (1..=m).filter(|d| m.is_multiple_of(*d)).sum::<usize>() as f64
}

/// `y` as a series in `T, S` for a given `v`, from the nome expansion with
/// `q = x exp(-D/F)`, `E = exp(2 i u) = T 16^nu2 exp(-nu2 D/F + 2 i v/F)`.
fn y_of_v(nu2: C64, v: &Series) -> Series {
    let (lat, w) = (v.lat, v.max_w);
    let n = (w / 2).max(0) as usize;
    let cs = f_coefficients(n);
    let ds: Vec<f64> = cs.iter().zip(d_coefficients(n)).map(|(c, d)| c * d).collect();
    let f = x_poly(lat, w, &cs);
    let inv_f = f.reciprocal().expect("F(0) = 1");
    let d_over_f = x_poly(lat, w, &ds).mul(&inv_f);
    let two_i_v = v.mul(&inv_f).scale(2.0 * C64::i());
    let e = Series::monomial(lat, w, (1, 0, 0), C64::new(1.0, 0.0))
        .mul(&d_over_f.scale(-nu2).add_const(nu2 * LN_16).add(&two_i_v).exp());
    let p = Series::monomial(lat, w, (1, 2, 0), C64::new(256.0, 0.0))
        .mul(&d_over_f.scale(nu2 - 2.0).add_const(-nu2 * LN_16).sub(&two_i_v).exp());
    let x = Series::x(lat, w);
    let q2 = x.mul(&x).mul(&d_over_f.scale(C64::new(-2.0, 0.0)).exp());
    let one = Series::constant(lat, w, C64::new(1.0, 0.0));

    let mut csc2 = Series::zero(lat, w);
    let mut ek = one.clone();
    for k in 1..=w.max(0) {
        ek = ek.mul(&e);
        csc2 = csc2.add(&ek.scale(C64::new(-4.0 * k as f64, 0.0)));
    }
    let mut lambert = Series::zero(lat, w);
    let mut q2m = one.clone();
    for m in 1..=(w / 4).max(0) as usize {
        q2m = q2m.mul(&q2);
        lambert = lambert.add(&q2m.scale(C64::new(divisor_sigma(m), 0.0)));
    }
    let mut cos_sum = Series::zero(lat, w);
    let (q2e, mut q2en, mut pn, mut q2n) = (q2.mul(&e), one.clone(), one.clone(), one.clone());
    for k in 1..=(w / 3).max(0) {
        q2en = q2en.mul(&q2e);
        pn = pn.mul(&p);
        q2n = q2n.mul(&q2);
        let geo = one.sub(&q2n).reciprocal().expect("1 - q^2n has unit constant term");
        cos_sum = cos_sum.add(&geo.mul(&q2en.add(&pn)).scale(C64::new(k as f64, 0.0)));
    }
    let bracket = lambert
        .scale(C64::new(8.0, 0.0))
        .add(&csc2)
        .sub(&cos_sum.scale(C64::new(4.0, 0.0)))
        .add_const(C64::new(-1.0 / 3.0, 0.0));
    inv_f.mul(&inv_f).mul(&bracket).add(&x.scale(C64::new(1.0 / 3.0, 0.0))).add_const(C64::new(1.0 / 3.0, 0.0))
}

/// Coefficients of `v` through total grade `order`.
pub fn v_elliptic_coefficients(nu1: C64, nu2: C64, theta: &Theta, order: i32) -> Result<Series> {
    check_nu2(nu2)?;
    solve_by_probing(*theta, elliptic_lattice(nu1, nu2), order, &|v: &Series| y_of_v(nu2, v))
}

fn check_nu2(nu2: C64) -> Result<()> {
    if nu2.im == 0.0 && !(nu2.re > 0.0 && nu2.re < 1.0) {
        return Err(Error::Invalid(format!("real nu2 = {} must lie in (0, 1); use (-nu1, 2 - nu2) for (1, 2)", nu2.re)));
    }
    Ok(())
}

/// The exponent `sigma = 1 - nu2` and constant `a = -4 e^(i pi nu1) 16^(-nu2)`
/// of the equivalent power-type behaviour.
pub fn power_dictionary(nu1: C64, nu2: C64) -> (C64, C64) {
    let a = -4.0 * (C64::i() * PI * nu1 - nu2 * LN_16).exp();
    (1.0 - nu2, a)
}

/// Inverse of [`power_dictionary`] with `nu1` taken on the principal branch
/// of `ln(-a / 4) / (i pi)`, shifted by `nu2 ln 16`.
pub fn nu_from_power(sigma: C64, a: C64) -> (C64, C64) {
    let nu2 = 1.0 - sigma;
    let nu1 = ((-a / 4.0).ln() + nu2 * LN_16) / (C64::i() * PI);
    (nu1, nu2)
}

impl EllipticBranch {
    pub fn new(nu1: C64, nu2: C64, theta: &Theta, order: i32, r: f64) -> Result<Self> {
        let v = v_elliptic_coefficients(nu1, nu2, theta, order)?;
        Ok(EllipticBranch { nu1, nu2, theta: *theta, order, v, r })
    }

    /// `|x| < r`, `|T| < r`, `|S| < r`.
    pub fn contains(&self, x: CoveringPoint) -> bool {
        let lx = x.log();
        let t = self.v.monomial_value(&(1, 0, 0), lx).norm();
        let s = self.v.monomial_value(&(0, 1, 0), lx).norm();
        x.abs() < self.r && t < self.r && s < self.r
    }

    /// The three sums of `v` in powers of `x`, `S` and `T`: `a_n` keyed by
    /// `n`, `b_nm` (with `x^n S^m`) and `c_nm` (with `x^n T^m`) keyed by `(n, m)`.
    pub fn three_sums(&self) -> ThreeSums {
        let (mut a, mut b, mut c) = (vec![], vec![], vec![]);
        for (&(i, j, _), &v) in &self.v.terms {
            let n = i.min(j);
            let v = v / 16f64.powi(n);
            match i.cmp(&j) {
                std::cmp::Ordering::Equal => a.push((n, v)),
                std::cmp::Ordering::Less => b.push(((n, j - i), v)),
                std::cmp::Ordering::Greater => c.push(((n, i - j), v)),
            }
        }
        (a, b, c)
    }

    /// `u(x) = nu1 w1 + nu2 w2 + v(x)`.
    pub fn argument(&self, x: CoveringPoint) -> Result<(C64, HalfPeriods)> {
        let h = half_periods_covering(x)?;
        Ok((self.nu1 * h.omega1 + self.nu2 * h.omega2 + self.v.eval(x.log()), h))
    }

    pub fn value(&self, x: CoveringPoint) -> Result<C64> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain);
        }
        let (u, h) = self.argument(x)?;
        Ok(weierstrass_p(u, h.omega1, h.omega2)? + (1.0 + x.to_complex()) / 3.0)
    }

    /// The induced expansion of `y` through grade `order + 1`.
    pub fn y_series(&self) -> Series {
        y_of_v(self.nu2, &self.v.with_max(self.order + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shimomura::ShimomuraBranch;
    use crate::special::hypergeometric_agm;
    use proptest::prelude::*;

    fn cl(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn theta() -> Theta {
        Theta::new(cl(0.4, 0.0), cl(0.5, 0.0), cl(0.23, 0.0), cl(1.37, 0.0))
    }

    #[test]
    fn half_period_values() {
        assert_eq!(0.5 * PI * hypergeometric(cl(0.0, 0.0)).unwrap(), cl(PI / 2.0, 0.0));
        let h = half_periods(cl(0.5, 0.0)).unwrap();
        assert!(rel(h.omega2, C64::i() * h.omega1) < 1e-15);
        for x in [0.1, 0.37, 0.8] {
            let a = half_periods(cl(x, 0.0)).unwrap();
            let b = half_periods(cl(1.0 - x, 0.0)).unwrap();
            assert!(rel(b.omega2, C64::i() * a.omega1) < 1e-15);
            assert!(a.omega1.im == 0.0 && a.omega1.re > 0.0);
            assert!(a.omega2.re.abs() < 1e-15 && a.omega2.im > 0.0);
        }
    }

    #[test]
    fn covering_half_periods_agree_with_principal_and_wind() {
        for x in [cl(0.2, 0.1), cl(-0.3, 0.2), cl(0.7, -0.1)] {
            let p = CoveringPoint::from_complex(x);
            let a = half_periods_covering(p).unwrap();
            let b = half_periods(x).unwrap();
            assert!(rel(a.omega2, b.omega2) < 1e-14, "{x}");
            let turned = half_periods_covering(CoveringPoint::new(p.ln_abs, p.arg + 2.0 * PI)).unwrap();
            assert!(rel(turned.omega2, a.omega2 + 2.0 * a.omega1) < 1e-14);
        }
    }

    #[test]
    fn omega1_matches_agm() {
        for k in 1..90 {
            let x = cl(k as f64 / 100.0, 0.0);
            let h = half_periods(x).unwrap();
            assert!(rel(h.omega1, 0.5 * PI * hypergeometric_agm(x)) < 1e-12);
        }
    }

    #[test]
    fn p_matches_lattice_sums_and_its_equation() {
        let (w1, w2) = (cl(1.1, 0.2), cl(0.3, 1.4));
        let (_, g2, g3) = lattice_reference(cl(0.1, 0.0), w1, w2, 20);
        for z in [cl(0.37, 0.21), cl(-0.8, 0.5), cl(1.9, 2.2)] {
            let (p_ref, _, _) = lattice_reference(z, w1, w2, 20);
            let p = weierstrass_p(z, w1, w2).unwrap();
            assert!(rel(p, p_ref) < 1e-8, "{p} {p_ref}");
            let dp = weierstrass_p_prime(z, w1, w2).unwrap();
            let ode = dp * dp - (4.0 * p * p * p - g2 * p - g3);
            assert!(ode.norm() < 1e-8 * (dp * dp).norm().max(1.0), "{ode}");
        }
    }

    #[test]
    fn p_symmetries_and_errors() {
        let (w1, w2) = (cl(1.0, 0.0), cl(0.2, 0.9));
        let z = cl(0.31, -0.17);
        let p = weierstrass_p(z, w1, w2).unwrap();
        assert!(rel(weierstrass_p(-z, w1, w2).unwrap(), p) < 1e-13);
        assert!(rel(weierstrass_p(z + 2.0 * w1, w1, w2).unwrap(), p) < 1e-13);
        assert!(rel(weierstrass_p(z - 6.0 * w2, w1, w2).unwrap(), p) < 1e-12);
        assert_eq!(weierstrass_p(2.0 * w2, w1, w2), Err(Error::LatticePoint));
        assert_eq!(weierstrass_p(z, w1, cl(2.0, 0.0)), Err(Error::DegenerateLattice));
    }

    #[test]
    fn dictionary_round_trip() {
        let (nu1, nu2) = (cl(0.2, 0.1), cl(0.6, 0.05));
        let (s, a) = power_dictionary(nu1, nu2);
        let (m1, m2) = nu_from_power(s, a);
        assert!((m2 - nu2).norm() < 1e-15);
        let (_, a2) = power_dictionary(m1, m2);
        assert!(rel(a2, a) < 1e-14);
    }

    #[test]
    fn agrees_with_shimomura_under_dictionary() {
        let th = theta();
        let (nu1, nu2) = (cl(0.15, -0.05), cl(0.65, 0.1));
        let e = EllipticBranch::new(nu1, nu2, &th, 6, 0.1).unwrap();
        let (s, a) = power_dictionary(nu1, nu2);
        let sh = ShimomuraBranch::new(s, a, &th, 6, 0.1).unwrap();
        let mut n = 0;
        for l in [-6.0, -8.0, -10.0, -12.0] {
            let c = sh.domain.central_point(l);
            for da in [-1.0, 0.0, 1.0] {
                let x = CoveringPoint::new(l, c.arg + da);
                if !(e.contains(x) && sh.domain.contains(x)) {
                    continue;
                }
                let ye = e.value(x).unwrap();
                let ys = sh.value(x).unwrap();
                assert!(rel(ye, ys) < 1e-8, "{x:?} {ye} {ys}");
                n += 1;
            }
        }
        assert!(n >= 6, "{n}");
    }

    #[test]
    fn leading_behaviour_is_power_law() {
        let (nu1, nu2) = (cl(0.1, 0.0), cl(0.4, 0.0));
        let lat = elliptic_lattice(nu1, nu2);
        let b = EllipticBranch { nu1, nu2, theta: theta(), order: 0, v: Series::zero(lat, 0), r: 0.5 };
        let (s, a) = power_dictionary(nu1, nu2);
        for x in [1e-8, 1e-10] {
            let p = CoveringPoint::from_polar(x, 0.3);
            let y = b.value(p).unwrap();
            let lead = a * ((1.0 - s) * p.log()).exp();
            assert!(rel(y, lead) < 10.0 * x.powf(0.2));
        }
    }

    #[test]
    fn real_nu2_outside_unit_interval_is_rejected() {
        assert!(v_elliptic_coefficients(cl(0.1, 0.0), cl(1.5, 0.0), &theta(), 2).is_err());
    }

    proptest! {
        #[test]
        fn p_is_even_and_periodic(zr in -2.0..2.0f64, zi in -2.0..2.0f64) {
            let (w1, w2) = (cl(0.8, -0.1), cl(0.4, 1.2));
            let z = cl(zr, zi);
            prop_assume!(reduce(z, w1, w2).is_ok());
            let p = weierstrass_p(z, w1, w2).unwrap();
            prop_assert!(rel(weierstrass_p(-z, w1, w2).unwrap(), p) < 1e-11);
            prop_assert!(rel(weierstrass_p(z + 2.0 * w2, w1, w2).unwrap(), p) < 1e-11);
        }
    }
}
