//! The representation `y = 1 / cosh^2((sigma - 1)/2 ln x - ln a / 2 + ln 2 + v / 2)`
//! with a convergent correction `v`, its spiral domains and the path
//! families approaching the critical point.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CoveringPoint, Key, Lattice, Series, ThreeSums};
use crate::params::{PviParameters, Theta};
use crate::residual::ResidualForm;
use crate::series::solve_by_probing;
use crate::C64;

/// Default truncation grade of `v`.
pub const DEFAULT_ORDER: i32 = 8;
/// Default radius of the domain; the existence theory gives no value.
pub const DEFAULT_RADIUS: f64 = 0.1;

/// The domain `D_s(r; sigma, a)` on the universal covering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalDomain {
    pub sigma: C64,
    pub a: C64,
    pub r: f64,
}

impl CriticalDomain {
    pub fn new(sigma: C64, a: C64, r: f64) -> Self {
        CriticalDomain { sigma, a, r }
    }

    /// Bounds on `Im sigma * arg x` at `ln|x| = l`.
    pub fn bounds(&self, l: f64) -> (f64, f64) {
        let la = self.a.norm().ln();
        let lower = self.sigma.re * l - la - (self.r / 4.0).ln();
        let upper = (self.sigma.re - 1.0) * l - la + (4.0 * self.r).ln();
        (lower, upper)
    }

    /// Strict membership; boundary points are excluded.
    pub fn contains(&self, x: CoveringPoint) -> bool {
        if x.ln_abs >= self.r.ln() {
            return false;
        }
        if self.sigma.im == 0.0 {
            return true;
        }
        let (lo, hi) = self.bounds(x.ln_abs);
        let t = self.sigma.im * x.arg;
        lo < t && t < hi
    }

    /// A point on the bisector of the strip at `ln|x| = l`.
    pub fn central_point(&self, l: f64) -> CoveringPoint {
        if self.sigma.im == 0.0 {
            return CoveringPoint::new(l, 0.0);
        }
        let (lo, hi) = self.bounds(l);
        CoveringPoint::new(l, 0.5 * (lo + hi) / self.sigma.im)
    }

    /// Boundary polylines in the `(ln|x|, Im sigma arg x)` plane for
    /// `ln|x|` from `l_min` up to `ln r`: lower line, upper line, and the
    /// closing segment on `|x| = r`.
    pub fn boundary(&self, l_min: f64) -> [Vec<(f64, f64)>; 3] {
        let lr = self.r.ln();
        let (lo0, hi0) = self.bounds(l_min);
        let (lo1, hi1) = self.bounds(lr);
        [vec![(l_min, lo0), (lr, lo1)], vec![(l_min, hi0), (lr, hi1)], vec![(lr, lo1), (lr, hi1)]]
    }
}

/// True when `x` lies within `|x| < r` but in neither domain.
pub fn in_separating_region(plus: &CriticalDomain, minus: &CriticalDomain, x: CoveringPoint) -> bool {
    x.ln_abs < plus.r.ln().min(minus.r.ln()) && !plus.contains(x) && !minus.contains(x)
}

/// The domain of the branch with exponent `sign * sigma + 2 n`, the
/// constant `a` taken from `a_rule` at that exponent.
pub fn domain_for_n(
    sigma: C64,
    a_rule: &dyn Fn(C64) -> Result<C64>,
    n: i32,
    sign: f64,
    r: f64,
) -> Result<CriticalDomain> {
    let s = sign * sigma + 2.0 * n as f64;
    Ok(CriticalDomain::new(s, a_rule(s)?, r))
}

/// The path `arg x = arg x0 + (Re sigma - Sigma) / Im sigma (ln|x| - ln|x0|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPath {
    pub x0: CoveringPoint,
    pub big_sigma: f64,
    pub sigma: C64,
}

impl SigmaPath {
    pub fn new(x0: CoveringPoint, big_sigma: f64, sigma: C64) -> Result<Self> {
        if !(0.0..=1.0).contains(&big_sigma) {
            return Err(Error::Invalid(format!("path parameter {big_sigma} outside [0, 1]")));
        }
        Ok(SigmaPath { x0, big_sigma, sigma })
    }

    pub fn at(&self, ln_abs: f64) -> CoveringPoint {
        if self.sigma.im == 0.0 {
            return CoveringPoint::new(ln_abs, self.x0.arg);
        }
        let slope = (self.sigma.re - self.big_sigma) / self.sigma.im;
        CoveringPoint::new(ln_abs, self.x0.arg + slope * (ln_abs - self.x0.ln_abs))
    }
}

/// Behaviour along a straight approach in the `(ln|x|, Im sigma arg x)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Approach {
    /// Slope `Re sigma + 2n`.
    Oscillatory { n: i32 },
    /// Slope `Re sigma + 2n - 1`; poles may accumulate along it.
    InverseOscillatory { n: i32, pole_line: bool },
    Power,
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Approach::Oscillatory { n } => write!(f, "oscillatory (N = {n})"),
            Approach::InverseOscillatory { n, pole_line } => {
                write!(f, "inverse-oscillatory (N = {n}{})", if *pole_line { ", pole line" } else { "" })
            }
            Approach::Power => write!(f, "power"),
        }
    }
}

pub fn classify_approach(slope: f64, sigma: C64) -> Approach {
    let d = slope - sigma.re;
    let k = d.round();
    if (d - k).abs() > 1e-9 {
        return Approach::Power;
    }
    let k = k as i32;
    if k.rem_euclid(2) == 0 {
        Approach::Oscillatory { n: k / 2 }
    } else {
        Approach::InverseOscillatory { n: (k + 1) / 2, pole_line: true }
    }
}

fn check_sigma(sigma: C64) -> Result<()> {
    if sigma.im == 0.0 && (sigma.re <= 0.0 || sigma.re >= 1.0) {
        return Err(Error::Invalid(format!("sigma = {sigma} on an excluded half-line")));
    }
    Ok(())
}

/// Generators `g1 = a x^(1 - sigma)`, `g2 = x^sigma / a`, so `x = g1 g2`.
fn shimomura_lattice(sigma: C64, a: C64) -> Lattice {
    let la = a.ln();
    Lattice::grade(1.0 - sigma, la, -la, C64::new(1.0, 0.0))
}

/// `y = 4 w / (1 + w)^2` with `w = g1 exp(-v) / 4`.
fn y_of_v(v: &Series) -> Series {
    let w = Series::monomial(v.lat, v.max_w, (1, 0, 0), C64::new(0.25, 0.0)).mul(&v.scale(C64::new(-1.0, 0.0)).exp());
    let mut y = Series::zero(v.lat, v.max_w);
    let mut p = Series::constant(v.lat, v.max_w, C64::new(1.0, 0.0));
    for k in 1..=v.max_w {
        p = p.mul(&w);
        let s = if k % 2 == 1 { 4.0 } else { -4.0 };
        y = y.add(&p.scale(C64::new(s * k as f64, 0.0)));
    }
    y
}

/// A solution in the Shimomura representation with its truncated `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShimomuraBranch {
    pub sigma: C64,
    pub a: C64,
    pub theta: Theta,
    pub order: i32,
    /// `v` on the grade lattice: key `(i, j)` is `g1^i g2^j`.
    pub v: Series,
    pub domain: CriticalDomain,
}

/// Coefficients of `v` through total grade `order`.
pub fn v_coefficients(sigma: C64, a: C64, theta: &Theta, order: i32) -> Result<Series> {
    check_sigma(sigma)?;
    if a.norm() == 0.0 {
        return Err(Error::Invalid("a must be nonzero".into()));
    }
    solve_by_probing(*theta, shimomura_lattice(sigma, a), order, &y_of_v)
}

impl ShimomuraBranch {
    pub fn new(sigma: C64, a: C64, theta: &Theta, order: i32, r: f64) -> Result<Self> {
        let v = v_coefficients(sigma, a, theta, order)?;
        Ok(ShimomuraBranch { sigma, a, theta: *theta, order, v, domain: CriticalDomain::new(sigma, a, r) })
    }

    /// The three sums of `v`: `a_n` (pure powers of `x`), `b_nm` (with
    /// `(a x^(1-sigma))^m`) and `c_nm` (with `(x^sigma / a)^m`), keyed by `(n, m)`.
    pub fn three_sums(&self) -> ThreeSums {
        let (mut a, mut b, mut c) = (vec![], vec![], vec![]);
        for (&(i, j, _), &v) in &self.v.terms {
            match i.cmp(&j) {
                std::cmp::Ordering::Equal => a.push((i, v)),
                std::cmp::Ordering::Greater => b.push(((j, i - j), v)),
                std::cmp::Ordering::Less => c.push(((i, j - i), v)),
            }
        }
        (a, b, c)
    }

    /// The induced expansion of `y` on the grade lattice.
    pub fn y_series(&self) -> Series {
        y_of_v(&self.v.with_max(self.order + 1))
    }

    /// The induced expansion written on the level lattice `x^(n + m sigma)`,
    /// keyed `(n, m)`, through total grade `order + 1`.
    pub fn level_coefficients(&self) -> Vec<((i32, i32), C64)> {
        self.y_series()
            .terms
            .iter()
            .map(|(&(i, j, _), &c)| ((i, j - i), c * self.a.powi(i - j)))
            .collect()
    }

    pub fn value(&self, x: CoveringPoint) -> Result<C64> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain);
        }
        shimomura_value(self.sigma, self.a, &self.v, x)
    }

    /// Relative defect `|y'' - F(x, y, y')| / |y''|` from the truncated
    /// series and its derivatives.
    pub fn relative_defect(&self, x: CoveringPoint) -> Result<f64> {
        let ys = self.y_series();
        let (t1, t2) = (ys.theta(), ys.theta().theta());
        let lx = x.log();
        let xc = x.to_complex();
        let y = ys.eval(lx);
        let dy = t1.eval(lx) / xc;
        let d2y = (t2.eval(lx) - t1.eval(lx)) / (xc * xc);
        let form = ResidualForm::new(&PviParameters::from_theta(self.theta));
        let rhs = form.second_derivative(xc, y, dy);
        Ok((d2y - rhs).norm() / d2y.norm().max(f64::MIN_POSITIVE))
    }

    /// Largest radius in `0.5 * 2^-k` whose central points at `|x| = r / 2`
    /// keep the relative defect below `tol`.
    pub fn probe_radius(&self, tol: f64) -> f64 {
        let mut r = 0.5;
        while r > 1e-8 {
            let d = CriticalDomain::new(self.sigma, self.a, r);
            let p = d.central_point((0.5 * r).ln());
            if matches!(self.relative_defect(p), Ok(e) if e < tol) {
                return r;
            }
            r *= 0.5;
        }
        r
    }
}

/// `1 / cosh^2(z)` at `x`, computed as `4 u / (1 + u)^2` with `u = exp(-2z)`
/// or `exp(2z)`, whichever is bounded, so the argument never overflows.
pub fn shimomura_value(sigma: C64, a: C64, v: &Series, x: CoveringPoint) -> Result<C64> {
    check_sigma(sigma)?;
    let lx = x.log();
    let e = a.ln() - 2.0 * LN_2 + (1.0 - sigma) * lx - v.eval(lx);
    let u = if e.re <= 0.0 { e.exp() } else { (-e).exp() };
    let den = (1.0 + u) * (1.0 + u);
    if den.norm() < 1e-14 {
        return Err(Error::DenominatorNearZero(den.norm()));
    }
    Ok(4.0 * u / den)
}

/// Key set helper for tests and callers reading `v` by grade.
pub fn grade_keys(k: i32) -> Vec<Key> {
    (0..=k).map(|i| (i, k - i, 0)).collect()
}
