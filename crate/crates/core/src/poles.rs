//! Pole lattices of the inverse-oscillatory branch near `x = 0`.
//!
//! The branch is written as `1/y = sum_n x^(n-1) sum_m A_nm e^(i m phi) x^(2 i m nu)`.
//! Zeros of the first level form two geometric sequences; the poles sit
//! next to them, displaced by a series in the zero itself.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ext::{XReal, XC64};
use crate::lattice::{CoveringPoint, Series};
use crate::params::Theta;
use crate::series::{expand_branch, ClassTag, Constants};
use crate::special::gamma;
use crate::{CriticalPoint, C64};

const NEWTON_MAX: usize = 50;

/// `1/y` of the inverse-oscillatory branch with its `phi`-free coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalExpansion {
    pub nu: f64,
    pub phi: C64,
    pub theta: Theta,
    pub order: i32,
    /// `A_nm` keyed by `(n, m)`, `n >= 1`, `|m| <= n`.
    pub coefficients: BTreeMap<(i32, i32), C64>,
    /// The same sum on the level lattice `x^k x^(2 i nu m)` with the phases
    /// included: key `(n - 1, m)`.
    pub series: Series,
}

/// Expansion of `1/y` through level `order` (powers `x^(order - 1)`).
///
/// The level-one amplitude is the positive root
/// `A = +sqrt(alpha / (2 nu^2) + B^2)`.
pub fn reciprocal_coefficients(nu: f64, phi: C64, theta: &Theta, order: i32) -> Result<ReciprocalExpansion> {
    if nu == 0.0 || !nu.is_finite() {
        return Err(Error::Invalid("nu must be real and nonzero".into()));
    }
    let consts: Constants = [
        ("nu".to_string(), C64::new(nu, 0.0)),
        ("phi".to_string(), phi),
        ("amp".to_string(), C64::new(1.0, 0.0)),
    ]
    .into_iter()
    .collect();
    let b = expand_branch(ClassTag::InvOscNuPhi, &consts, theta, CriticalPoint::Zero, order.max(1))?;
    let mut coefficients = BTreeMap::new();
    for (&(k, m, l), &v) in &b.series.terms {
        if l == 0 && k < order {
            coefficients.insert((k + 1, m), v * (-C64::i() * m as f64 * phi).exp());
        }
    }
    let series = b.series.with_max(order - 1);
    Ok(ReciprocalExpansion { nu, phi, theta: *theta, order, coefficients, series })
}

impl ReciprocalExpansion {
    pub fn a(&self, n: i32, m: i32) -> C64 {
        self.coefficients.get(&(n, m)).copied().unwrap_or_default()
    }

    /// `(s, h)` with `h = A_10 / (2 A_11)` and `s = sqrt(h^2 - A_1,-1 / A_11)`.
    fn radical(&self) -> Result<(C64, C64)> {
        let a11 = self.a(1, 1);
        if a11.norm() == 0.0 {
            return Err(Error::DegenerateRadical);
        }
        let h = self.a(1, 0) / (2.0 * a11);
        let arg = h * h - self.a(1, -1) / a11;
        if arg.norm() < 1e-14 * (h * h).norm().max(1.0) {
            return Err(Error::DegenerateRadical);
        }
        Ok((arg.sqrt(), h))
    }

    /// The root `w_j = (-1)^j s - h` of `A_11 w^2 + A_10 w + A_1,-1 = 0`.
    pub fn root(&self, j: u8) -> Result<C64> {
        let (s, h) = self.radical()?;
        Ok(if j == 1 { -s - h } else { s - h })
    }

    /// Level-one coefficient of `x^(n-1) x^(2 i nu m)` in extended precision,
    /// exactly as stored in `series` (phases included).
    fn phased(&self, n: i32, m: i32) -> XC64 {
        XC64::from_c64(self.series.get((n - 1, m, 0)))
    }

    /// `w_j` in extended precision: the root `u` of
    /// `sum_m A_1m e^(i m phi) u^m` nearest `w_j e^(-i phi)`, polished by
    /// Newton on the stored f64 coefficients, times `e^(i phi)`.
    pub fn root_ext(&self, j: u8) -> Result<XC64> {
        let (a2, a1, a0) = (self.phased(1, 1), self.phased(1, 0), self.phased(1, -1));
        let phase = XC64::from_c64(C64::i() * self.phi).exp();
        let mut u = XC64::from_c64(self.root(j)?) / phase.clone();
        for _ in 0..4 {
            let f = (a2.clone() * u.clone() + a1.clone()) * u.clone() + a0.clone();
            let df = a2.clone() * u.clone().scale(2.0) + a1.clone();
            u = u - f / df;
        }
        Ok(u * phase)
    }

    /// `1/y` truncated, at a covering point.
    pub fn value(&self, x: CoveringPoint) -> C64 {
        self.series.eval(x.log())
    }

    /// First level `y_1 = sum_m A_1m e^(i m phi) x^(2 i m nu)`.
    pub fn first_level(&self, x: CoveringPoint) -> C64 {
        let w = (C64::i() * (self.phi + 2.0 * self.nu * x.log())).exp();
        self.a(1, -1) / w + self.a(1, 0) + self.a(1, 1) * w
    }
}

/// A zero `x_k(j)` of the first level.
#[derive(Debug, Clone)]
pub struct LatticeZero {
    pub k: i32,
    pub j: u8,
    /// `ln x_k(j)` in extended precision.
    pub ln_x: XC64,
    pub point: CoveringPoint,
}

/// `x_k(j) = exp(-phi/(2 nu) - i ln(w_j)/(2 nu) - k pi / nu)` for `j = 1, 2`
/// and `k` in `ks`, principal logarithm.
pub fn zero_lattice(rec: &ReciprocalExpansion, ks: std::ops::RangeInclusive<i32>) -> Result<Vec<LatticeZero>> {
    let mut out = vec![];
    let two_nu = XC64::from_f64(2.0 * rec.nu);
    let i = XC64::from_c64(C64::i());
    for j in [1u8, 2] {
        let w = rec.root_ext(j)?;
        let base = (XC64::zero() - XC64::from_c64(rec.phi) - i.clone() * w.ln()) / two_nu.clone();
        for k in ks.clone() {
            let shift = XReal::pi() * XReal::from_f64(k as f64) / XReal::from_f64(rec.nu);
            let ln_x = base.clone() - XC64::new(shift, XReal::zero());
            let c = ln_x.to_c64();
            out.push(LatticeZero { k, j, point: CoveringPoint::new(c.re, c.im), ln_x });
        }
    }
    Ok(out)
}

/// `exp(a)` for a power series with `a[0] = 0`.
fn ps_exp(a: &[XC64]) -> Vec<XC64> {
    let n = a.len();
    let mut out = vec![XC64::zero(); n];
    out[0] = XC64::one();
    // e' = a' e, coefficient by coefficient.
    for k in 1..n {
        let mut s = XC64::zero();
        for j in 1..=k {
            s = s + (a[j].clone() * out[k - j].clone()).scale(j as f64);
        }
        out[k] = s.scale(1.0 / k as f64);
    }
    out
}

/// Displacement series `xi = sum_N d_N x_k^N` of the poles next to the
/// zeros `x_k(j)`, through `N = n_order`; `d_1 = 1`, `d_2 = -1/2` when
/// `theta0 = thetax = 0`, `d_N = Delta_N(j)` for `N >= 3`.
///
/// Obtained by reversion: with `x = x_k e^t`, the equation
/// `sum_n x_k^(n-1) sum_m A_nm w_j^m e^(((n-1) + 2 i nu m) t) = 0` is solved
/// for `t` as a power series in `x_k`.
pub fn pole_corrections(rec: &ReciprocalExpansion, j: u8, n_order: usize) -> Result<Vec<C64>> {
    Ok(pole_corrections_ext(rec, j, n_order)?.iter().map(XC64::to_c64).collect())
}

/// [`pole_corrections`] carried out in extended precision on the f64
/// coefficients.
pub fn pole_corrections_ext(rec: &ReciprocalExpansion, j: u8, n_order: usize) -> Result<Vec<XC64>> {
    if n_order < 2 || (rec.order as usize) < n_order {
        return Err(Error::Invalid(format!("need 2 <= order <= {} for the reciprocal expansion", rec.order)));
    }
    // u = x_k^(2 i nu), the same for every k.
    let u = rec.root_ext(j)? / XC64::from_c64(C64::i() * rec.phi).exp();
    // Powers eps^0 .. eps^(n_order - 1) of the equation.
    let len = n_order;
    let lam = |n: i32, m: i32| XC64::from_c64(C64::new((n - 1) as f64, 2.0 * rec.nu * m as f64));
    let terms: Vec<(usize, XC64, XC64)> = rec
        .coefficients
        .keys()
        .filter(|&&(n, _)| ((n - 1) as usize) < len)
        .map(|&(n, m)| ((n - 1) as usize, rec.phased(n, m) * u.powi(m), lam(n, m)))
        .collect();
    let jac = terms.iter().filter(|t| t.0 == 0).fold(XC64::zero(), |s, t| s + t.1.clone() * t.2.clone());
    if jac.norm() < 1e-14 * rec.a(1, 1).norm().max(1.0) {
        return Err(Error::ReversionBreakdown);
    }
    let mut t = vec![XC64::zero(); len];
    for order in 1..len {
        let mut g = XC64::zero();
        for (shift, c, l) in &terms {
            if *shift > order {
                continue;
            }
            let lt: Vec<XC64> = t[..=order - shift].iter().map(|v| v.clone() * l.clone()).collect();
            g = g + c.clone() * ps_exp(&lt)[order - shift].clone();
        }
        t[order] = -(g / jac.clone());
    }
    // xi / x_k = exp(t).
    let mut d = vec![XC64::zero()];
    d.extend(ps_exp(&t));
    Ok(d)
}

/// Predicted pole `sum_{N=1}^{n} d_N x^N` at a lattice zero, in extended
/// precision.
pub fn predicted_pole(d: &[XC64], zero: &LatticeZero, through: usize) -> XC64 {
    let x = zero.ln_x.exp();
    let mut out = XC64::zero();
    for (n, c) in d.iter().enumerate().take(through + 1).skip(1) {
        out = out + c.clone() * x.powi(n as i32);
    }
    out
}

/// A Newton-refined zero of the truncated `1/y`.
#[derive(Debug, Clone)]
pub struct RefinedPole {
    pub ln_xi: XC64,
    pub point: CoveringPoint,
    /// `|1/y|` at the refined point.
    pub residual: f64,
    pub iterations: usize,
}

impl RefinedPole {
    pub fn xi(&self) -> XC64 {
        self.ln_xi.exp()
    }
}

/// Newton iteration on `1/y` in the variable `ln x`, in extended precision.
pub fn refine_pole(rec: &ReciprocalExpansion, seed: &XC64) -> Result<RefinedPole> {
    let d = rec.series.theta();
    let mut s = seed.clone();
    for it in 1..=NEWTON_MAX {
        let f = rec.series.eval_ext(&s);
        let df = d.eval_ext(&s);
        let step = f / df;
        s = s - step.clone();
        if step.norm() < 1e-60 {
            let c = s.to_c64();
            let residual = rec.series.eval_ext(&s).norm();
            return Ok(RefinedPole { ln_xi: s, point: CoveringPoint::new(c.re, c.im), residual, iterations: it });
        }
    }
    Err(Error::NoConvergence(NEWTON_MAX))
}

/// `phi` after `loops` turns `x -> x e^(2 pi i)` around the origin: the
/// phase enters through `2 nu ln x + phi`, so each loop adds `4 pi i nu`.
pub fn continue_branch(nu: f64, phi: C64, loops: i32) -> C64 {
    phi + C64::new(0.0, 4.0 * PI * nu * loops as f64)
}

/// Upper bound on the convergence radius of `1/y`:
/// `min(1 / |s - h|, 1 / |s + h|)`.
pub fn radius_upper_bound(rec: &ReciprocalExpansion) -> Result<f64> {
    let (s, h) = rec.radical()?;
    Ok((1.0 / (s - h).norm()).min(1.0 / (s + h).norm()))
}

/// Integration constants of the quantum cohomology branch of `CP^2`
/// (`alpha = 9/2`, `beta = gamma = 0`, `delta = 1/2`).
pub fn cp2_reference_constants() -> (f64, C64, Theta) {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let nu = 2.0 * g.ln() / PI;
    let i = C64::i();
    let inu = i * nu;
    let z = -PI * PI * (g.powi(4) + 1.0).powi(2) / (g * g + 1.0).powi(2)
        * (16.0 * inu * 2f64.ln()).exp()
        * ((1.0 - 2.0 * inu) / (1.0 + 2.0 * inu)).powi(2)
        * nu
        * nu
        * gamma(1.0 - 2.0 * inu).powi(4)
        / gamma(1.0 - inu).powi(8);
    let phi = i * z.ln();
    let c = |v: f64| C64::new(v, 0.0);
    (nu, phi, Theta::new(c(0.0), c(0.0), c(0.0), c(4.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PviParameters;

    fn cp2(order: i32) -> ReciprocalExpansion {
        let (nu, phi, th) = cp2_reference_constants();
        reciprocal_coefficients(nu, phi, &th, order).unwrap()
    }

    #[test]
    fn cp2_constants() {
        let (nu, phi, th) = cp2_reference_constants();
        assert!((nu - 0.30634).abs() < 1e-5);
        assert!((phi.im / nu - PI).abs() < 1e-12);
        assert!(phi.re >= 0.0 && phi.re <= PI);
        let p = PviParameters::from_theta(th);
        assert!((p.alpha - C64::new(4.5, 0.0)).norm() < 1e-15);
        assert!((p.delta - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn first_level_structure() {
        let rec = cp2(4);
        let p = PviParameters::from_theta(rec.theta);
        let nu2 = rec.nu * rec.nu;
        let b = (2.0 * nu2 + p.gamma - p.alpha) / (4.0 * nu2);
        assert!((rec.a(1, 0) - b).norm() < 1e-13);
        let amp = (p.alpha / (2.0 * nu2) + b * b).sqrt();
        assert!((rec.a(1, 1) - amp / (2.0 * C64::i())).norm() < 1e-13);
        assert!((rec.a(1, -1) + amp / (2.0 * C64::i())).norm() < 1e-13);
        assert_eq!(rec.coefficients.keys().filter(|k| k.0 == 1).count(), 3);
    }

    #[test]
    fn coefficients_do_not_depend_on_phi() {
        let (nu, phi, th) = cp2_reference_constants();
        let a = reciprocal_coefficients(nu, phi, &th, 4).unwrap();
        let b = reciprocal_coefficients(nu, phi + C64::new(0.4, -0.2), &th, 4).unwrap();
        for (k, v) in &a.coefficients {
            assert!((b.coefficients[k] - v).norm() < 1e-10 * (1.0 + v.norm()), "{k:?}");
        }
    }

    #[test]
    fn zeros_are_geometric_and_on_the_negative_imaginary_axis() {
        let rec = cp2(3);
        let zs = zero_lattice(&rec, 0..=3).unwrap();
        for z in &zs {
            assert!((z.point.arg + PI / 2.0).abs() < 1e-10, "{:?}", z.point);
            assert!(rec.first_level(z.point).norm() < 1e-10);
        }
        for pair in zs.windows(2).filter(|p| p[0].j == p[1].j) {
            assert!((pair[1].point.ln_abs - pair[0].point.ln_abs + PI / rec.nu).abs() < 1e-13);
        }
    }

    #[test]
    fn cp2_displacement_coefficients() {
        let rec = cp2(5);
        let nu2 = rec.nu * rec.nu;
        let den = 1024.0 * (nu2 + 1.0).powi(2);
        let closed = [
            [(176.0 * nu2 * nu2 + 185.0 + 352.0 * nu2) / den, -(57.0 + 48.0 * nu2 * nu2 + 96.0 * nu2) / den],
            [(401.0 + 176.0 * nu2 * nu2 + 352.0 * nu2) / den, -(273.0 + 48.0 * nu2 * nu2 + 96.0 * nu2) / den],
        ];
        for j in [1u8, 2] {
            let d = pole_corrections(&rec, j, 5).unwrap();
            assert!((d[1] - 1.0).norm() < 1e-14);
            assert!((d[2] + 0.5).norm() < 1e-12);
            assert!((d[3] - closed[j as usize - 1][0]).norm() < 1e-10, "{j} {}", d[3]);
            assert!((d[4] - closed[j as usize - 1][1]).norm() < 1e-8, "{j} {}", d[4]);
        }
    }

    #[test]
    fn quadratic_coefficient_with_theta0_thetax_zero() {
        for (t1, ti, nu, phi) in [(0.3, 1.7, 0.7, C64::new(1.0, 0.3)), (0.0, 3.2, 0.45, C64::new(-0.4, 0.1)), (1.1, 0.6, 1.3, C64::new(2.0, -0.5))] {
            let th = Theta::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(t1, 0.0), C64::new(ti, 0.0));
            let rec = reciprocal_coefficients(nu, phi, &th, 3).unwrap();
            for j in [1u8, 2] {
                let d = pole_corrections(&rec, j, 3).unwrap();
                assert!((d[2] + 0.5).norm() < 1e-12, "{t1} {ti} {j}: {}", d[2]);
            }
        }
    }

    #[test]
    fn quadratic_coefficient_moves_off_the_symmetric_slice() {
        // Exchanging theta0 and thetax mirrors the shift about -1/2.
        let d2 = |t0: f64, tx: f64| {
            let th = Theta::new(C64::new(t0, 0.0), C64::new(tx, 0.0), C64::new(0.0, 0.0), C64::new(1.7, 0.0));
            let rec = reciprocal_coefficients(0.7, C64::new(1.0, 0.3), &th, 3).unwrap();
            pole_corrections(&rec, 2, 3).unwrap()[2]
        };
        let (a, b) = (d2(0.2, 0.0), d2(0.0, 0.2));
        assert!((a + 0.5).norm() > 1e-3);
        assert!((a + b + 1.0).norm() < 1e-6);
    }

    #[test]
    fn newton_agrees_with_displacement_series() {
        let rec = cp2(6);
        let d = pole_corrections_ext(&rec, 1, 5).unwrap();
        for z in zero_lattice(&rec, 1..=3).unwrap().iter().filter(|z| z.j == 1) {
            let p = refine_pole(&rec, &z.ln_x).unwrap();
            assert!(p.residual < 1e-40);
            let pred = predicted_pole(&d, z, 4);
            let xk = z.point.abs();
            let rel = (p.xi() - pred.clone()).norm() / pred.norm();
            assert!(rel < 10.0 * xk.powi(3), "k={} rel={rel:e}", z.k);
            assert!((p.xi() - z.ln_x.exp()).norm() < xk * xk);
        }
    }

    #[test]
    fn continuation_identity() {
        let rec = cp2(4);
        assert_eq!(continue_branch(rec.nu, rec.phi, 0), rec.phi);
        let phi1 = continue_branch(rec.nu, rec.phi, 1);
        let moved = reciprocal_coefficients(rec.nu, phi1, &rec.theta, 4).unwrap();
        for (l, a) in [(-6.0, 0.3), (-8.0, -1.0), (-7.0, 2.0)] {
            let turned = CoveringPoint::new(l, a + 2.0 * PI);
            let lhs = rec.value(turned);
            let rhs = moved.value(CoveringPoint::new(l, a));
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
        }
        let z0 = &zero_lattice(&rec, 0..=0).unwrap()[0];
        let z1 = &zero_lattice(&moved, 0..=0).unwrap()[0];
        assert!((z1.point.arg - z0.point.arg + 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn radius_bound() {
        let rec = cp2(2);
        let r = radius_upper_bound(&rec).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        for z in zero_lattice(&rec, 0..=2).unwrap() {
            assert!(2.0 * rec.nu * z.point.arg >= -rec.phi.im + r.ln() - 1e-12);
        }
        // |B / A| > 1 in the symmetric case: bound decreases as |B/A| grows.
        let mut last = f64::INFINITY;
        for t in [1.1, 1.5, 2.0] {
            let th = Theta::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(t, 0.0), C64::new(1.5, 0.0));
            let rec = reciprocal_coefficients(0.3, C64::new(0.5, 0.0), &th, 2).unwrap();
            let ratio = (rec.a(1, 0) / (2.0 * C64::i() * rec.a(1, 1))).norm();
            let r = radius_upper_bound(&rec).unwrap();
            if ratio > 1.0 {
                assert!(r < last);
                last = r;
            }
        }
    }
}
