//! The equation with denominators cleared:
//!
//! `R = D y'' + G2 y'^2 + G1 y' + G0`, with `D = 2 y (y-1) (y-x) x^2 (x-1)^2`,
//! a polynomial in `(x, y, y', y'')`. The same polynomial is also kept in
//! Euler form, in terms of `(y, theta y, theta^2 y)` with `theta = x d/dx`,
//! which is what series arithmetic uses.

use std::collections::BTreeMap;

use crate::lattice::Series;
use crate::ext::XC64;
use crate::params::PviParameters;
use crate::C64;

/// Polynomial in `(x, y)`: `coef[(i, j)]` multiplies `x^i y^j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly2 {
    pub coef: BTreeMap<(u32, u32), C64>,
}

impl Poly2 {
    fn term(c: C64, i: u32, j: u32) -> Poly2 {
        let mut p = Poly2::default();
        p.coef.insert((i, j), c);
        p
    }
    fn one() -> Poly2 {
        Poly2::term(C64::new(1.0, 0.0), 0, 0)
    }
    fn x() -> Poly2 {
        Poly2::term(C64::new(1.0, 0.0), 1, 0)
    }
    fn y() -> Poly2 {
        Poly2::term(C64::new(1.0, 0.0), 0, 1)
    }
    fn add(&self, o: &Poly2) -> Poly2 {
        let mut p = self.clone();
        for (k, v) in &o.coef {
            *p.coef.entry(*k).or_default() += v;
        }
        p.coef.retain(|_, v| *v != C64::new(0.0, 0.0));
        p
    }
    fn sub(&self, o: &Poly2) -> Poly2 {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }
    fn scale(&self, c: C64) -> Poly2 {
        Poly2 { coef: self.coef.iter().map(|(k, v)| (*k, v * c)).collect() }
    }
    fn mul(&self, o: &Poly2) -> Poly2 {
        let mut p = Poly2::default();
        for (ka, va) in &self.coef {
            for (kb, vb) in &o.coef {
                *p.coef.entry((ka.0 + kb.0, ka.1 + kb.1)).or_default() += va * vb;
            }
        }
        p.coef.retain(|_, v| *v != C64::new(0.0, 0.0));
        p
    }
    fn pow(&self, n: u32) -> Poly2 {
        (0..n).fold(Poly2::one(), |acc, _| acc.mul(self))
    }
    /// Exact division by `x^k`; panics if a lower power is present.
    fn div_x(&self, k: u32) -> Poly2 {
        Poly2 {
            coef: self
                .coef
                .iter()
                .map(|(key, v)| {
                    assert!(key.0 >= k, "polynomial not divisible by x^{k}");
                    ((key.0 - k, key.1), *v)
                })
                .collect(),
        }
    }
    /// Partial derivative in `y`.
    pub fn dy(&self) -> Poly2 {
        Poly2 {
            coef: self
                .coef
                .iter()
                .filter(|(k, _)| k.1 > 0)
                .map(|(k, v)| ((k.0, k.1 - 1), v * k.1 as f64))
                .collect(),
        }
    }

    pub fn degree_y(&self) -> u32 {
        self.coef.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn eval(&self, x: C64, y: C64) -> C64 {
        self.coef.iter().map(|(k, v)| v * x.powu(k.0) * y.powu(k.1)).sum()
    }

    /// Coefficients of `y^j` as polynomials in `x`.
    fn by_y(&self) -> Vec<Vec<(u32, C64)>> {
        let mut out = vec![Vec::new(); self.degree_y() as usize + 1];
        for (k, v) in &self.coef {
            out[k.1 as usize].push((k.0, *v));
        }
        out
    }

    /// Value in extended precision.
    pub fn eval_ext(&self, x: &XC64, y: &XC64) -> XC64 {
        let mut out = XC64::zero();
        for (&(i, j), v) in &self.coef {
            out = out + XC64::from_c64(*v) * x.powi(i as i32) * y.powi(j as i32);
        }
        out
    }

    /// Value on a series `y`, by Horner's rule in `y`.
    pub fn eval_series(&self, y: &Series) -> Series {
        let xpoly = |cs: &[(u32, C64)]| {
            let mut s = Series::zero(y.lat, y.max_w);
            for (p, v) in cs {
                s = s.add(&Series::constant(y.lat, y.max_w, *v).shift_x(*p as i32).with_max(y.max_w));
            }
            s
        };
        let rows = self.by_y();
        let mut acc = xpoly(&rows[rows.len() - 1]);
        for j in (0..rows.len() - 1).rev() {
            acc = acc.mul(y).add(&xpoly(&rows[j]));
        }
        acc
    }
}

/// The cleared equation in both forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualForm {
    pub params: PviParameters,
    /// Coefficient of `y''`.
    pub d: Poly2,
    /// Coefficient of `y'^2`.
    pub g2: Poly2,
    /// Coefficient of `y'`.
    pub g1: Poly2,
    /// Free term.
    pub g0: Poly2,
    /// Euler form: coefficients of `theta^2 y`, `(theta y)^2`, `theta y`, 1.
    pub h2: Poly2,
    pub h11: Poly2,
    pub h1: Poly2,
    pub h0: Poly2,
}

/// Pieces of `R` evaluated on a series, before summation.
pub struct ResidualParts {
    pub parts: [Series; 4],
}

impl ResidualParts {
    pub fn total(&self) -> Series {
        self.parts[1..].iter().fold(self.parts[0].clone(), |a, b| a.add(b))
    }

    /// Largest single-part modulus at weight `w`: the cancellation scale.
    pub fn scale_at(&self, w: i32) -> f64 {
        self.parts.iter().map(|p| p.max_abs_at_weight(w)).fold(0.0, f64::max)
    }
}

impl ResidualForm {
    pub fn new(params: &PviParameters) -> Self {
        let (x, y, one) = (Poly2::x(), Poly2::y(), Poly2::one());
        let cst = |v: C64| Poly2::term(v, 0, 0);
        let two = C64::new(2.0, 0.0);
        let ym1 = y.sub(&one);
        let ymx = y.sub(&x);
        let xm1 = x.sub(&one);
        let yyy = y.mul(&ym1).mul(&ymx);
        let d = yyy.mul(&x.pow(2)).mul(&xm1.pow(2)).scale(two);
        let bracket = ym1.mul(&ymx).add(&y.mul(&ymx)).add(&y.mul(&ym1));
        let g2 = x.pow(2).mul(&xm1.pow(2)).mul(&bracket).scale(C64::new(-1.0, 0.0));
        let g1 = yyy
            .mul(&x)
            .mul(&xm1)
            .mul(&x.scale(two).sub(&one))
            .add(&y.mul(&ym1).mul(&x.pow(2)).mul(&xm1.pow(2)))
            .scale(two);
        let p = params;
        let g0 = cst(p.alpha)
            .mul(&y.pow(2))
            .mul(&ym1.pow(2))
            .mul(&ymx.pow(2))
            .add(&cst(p.beta).mul(&x).mul(&ym1.pow(2)).mul(&ymx.pow(2)))
            .add(&cst(p.gamma).mul(&xm1).mul(&y.pow(2)).mul(&ymx.pow(2)))
            .add(&cst(p.delta).mul(&x).mul(&xm1).mul(&y.pow(2)).mul(&ym1.pow(2)))
            .scale(C64::new(-2.0, 0.0));
        // x y' = theta y and x^2 y'' = theta^2 y - theta y.
        let h2 = d.div_x(2);
        let h11 = g2.div_x(2);
        let h1 = g1.div_x(1).sub(&h2);
        let h0 = g0.clone();
        ResidualForm { params: *params, d, g2, g1, g0, h2, h11, h1, h0 }
    }

    /// `R(x, y, y', y'')`.
    pub fn eval(&self, x: C64, y: C64, dy: C64, d2y: C64) -> C64 {
        self.d.eval(x, y) * d2y + self.g2.eval(x, y) * dy * dy + self.g1.eval(x, y) * dy + self.g0.eval(x, y)
    }

    /// `R` in extended precision.
    pub fn eval_ext(&self, x: &XC64, y: &XC64, dy: &XC64, d2y: &XC64) -> XC64 {
        self.d.eval_ext(x, y) * d2y.clone()
            + self.g2.eval_ext(x, y) * dy.clone() * dy.clone()
            + self.g1.eval_ext(x, y) * dy.clone()
            + self.g0.eval_ext(x, y)
    }

    /// Solves the equation for `y''` (the right-hand side of the ODE).
    pub fn second_derivative(&self, x: C64, y: C64, dy: C64) -> C64 {
        -(self.g2.eval(x, y) * dy * dy + self.g1.eval(x, y) * dy + self.g0.eval(x, y)) / self.d.eval(x, y)
    }

    /// The four parts `h2 th2 + h11 th1^2 + h1 th1 + h0` on a series.
    pub fn eval_series_parts(&self, y: &Series) -> ResidualParts {
        let t1 = y.theta();
        let t2 = t1.theta();
        ResidualParts {
            parts: [
                self.h2.eval_series(y).mul(&t2),
                self.h11.eval_series(y).mul(&t1).mul(&t1),
                self.h1.eval_series(y).mul(&t1),
                self.h0.eval_series(y),
            ],
        }
    }

    pub fn eval_series(&self, y: &Series) -> Series {
        self.eval_series_parts(y).total()
    }

    /// Partial derivatives of the Euler form with respect to
    /// `(y, theta y, theta^2 y)`, evaluated on `y`.
    pub fn jacobian(&self, y: &Series) -> [Series; 3] {
        let t1 = y.theta();
        let t2 = t1.theta();
        let j0 = self
            .h2
            .dy()
            .eval_series(y)
            .mul(&t2)
            .add(&self.h11.dy().eval_series(y).mul(&t1).mul(&t1))
            .add(&self.h1.dy().eval_series(y).mul(&t1))
            .add(&self.h0.dy().eval_series(y));
        let j1 = self.h11.eval_series(y).mul(&t1).scale(C64::new(2.0, 0.0)).add(&self.h1.eval_series(y));
        let j2 = self.h2.eval_series(y);
        [j0, j1, j2]
    }
}
