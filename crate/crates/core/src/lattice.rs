//! Truncated series on a two-generator exponent lattice with log powers.
//!
//! A key `(i, j, l)` stands for the monomial `g1^i g2^j (ln x)^l`, where
//! `g_k = exp(e_k ln x + c_k)`. Each monomial carries the integer weight
//! `w1 i + w2 j`, which is additive under multiplication; products are
//! truncated at a maximal weight.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ext::XC64;
use crate::C64;

pub type Key = (i32, i32, u32);

/// Exponents, log offsets and weights of the two generators, and the
/// representation of `x` itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub e1: C64,
    pub e2: C64,
    pub c1: C64,
    pub c2: C64,
    pub w1: i32,
    pub w2: i32,
    /// `x = x_scale * g1^x_key.0 * g2^x_key.1`.
    pub x_key: (i32, i32),
    pub x_scale: C64,
}

impl Lattice {
    /// `g1 = x`, `g2 = x^lambda`, weight counts powers of `x` only.
    pub fn level(lambda: C64) -> Self {
        Lattice {
            e1: C64::new(1.0, 0.0),
            e2: lambda,
            c1: C64::new(0.0, 0.0),
            c2: C64::new(0.0, 0.0),
            w1: 1,
            w2: 0,
            x_key: (1, 0),
            x_scale: C64::new(1.0, 0.0),
        }
    }

    /// Two small generators with `g1 g2 = x / x_scale`, weight is total degree.
    pub fn grade(e1: C64, c1: C64, c2: C64, x_scale: C64) -> Self {
        Lattice {
            e1,
            e2: C64::new(1.0, 0.0) - e1,
            c1,
            c2,
            w1: 1,
            w2: 1,
            x_key: (1, 1),
            x_scale,
        }
    }

    pub fn weight(&self, i: i32, j: i32) -> i32 {
        self.w1 * i + self.w2 * j
    }

    pub fn x_weight(&self) -> i32 {
        self.weight(self.x_key.0, self.x_key.1)
    }

    pub fn exponent(&self, i: i32, j: i32) -> C64 {
        self.e1 * i as f64 + self.e2 * j as f64
    }
}

/// A point of the universal covering of the punctured plane, stored as
/// `(ln|x|, arg x)` with unbounded argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringPoint {
    pub ln_abs: f64,
    pub arg: f64,
}

impl CoveringPoint {
    pub fn new(ln_abs: f64, arg: f64) -> Self {
        CoveringPoint { ln_abs, arg }
    }

    /// Principal-sheet point for a nonzero complex number.
    pub fn from_complex(x: C64) -> Self {
        CoveringPoint { ln_abs: x.norm().ln(), arg: x.arg() }
    }

    pub fn from_polar(r: f64, arg: f64) -> Self {
        CoveringPoint { ln_abs: r.ln(), arg }
    }

    /// The covering logarithm `ln|x| + i arg x`.
    pub fn log(&self) -> C64 {
        C64::new(self.ln_abs, self.arg)
    }

    pub fn to_complex(&self) -> C64 {
        self.log().exp()
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs.exp()
    }
}

/// The `a_n`, `b_nm` and `c_nm` sums of a power-type representation, keyed
/// by `n` or `(n, m)`.
pub type ThreeSums = (Vec<(i32, C64)>, Vec<((i32, i32), C64)>, Vec<((i32, i32), C64)>);

/// A truncated lattice series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub lat: Lattice,
    pub max_w: i32,
    pub terms: BTreeMap<Key, C64>,
}

impl Series {
    pub fn zero(lat: Lattice, max_w: i32) -> Self {
        Series { lat, max_w, terms: BTreeMap::new() }
    }

    pub fn constant(lat: Lattice, max_w: i32, c: C64) -> Self {
        let mut s = Series::zero(lat, max_w);
        s.add_term((0, 0, 0), c);
        s
    }

    pub fn monomial(lat: Lattice, max_w: i32, key: Key, c: C64) -> Self {
        let mut s = Series::zero(lat, max_w);
        s.add_term(key, c);
        s
    }

    /// `x` as a series.
    pub fn x(lat: Lattice, max_w: i32) -> Self {
        Series::monomial(lat, max_w, (lat.x_key.0, lat.x_key.1, 0), lat.x_scale)
    }

    pub fn weight_of(&self, k: &Key) -> i32 {
        self.lat.weight(k.0, k.1)
    }

    pub fn add_term(&mut self, key: Key, c: C64) {
        if self.lat.weight(key.0, key.1) > self.max_w || c == C64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(key).or_insert(C64::new(0.0, 0.0)) += c;
    }

    pub fn set(&mut self, key: Key, c: C64) {
        self.terms.insert(key, c);
    }

    pub fn get(&self, key: Key) -> C64 {
        self.terms.get(&key).copied().unwrap_or_default()
    }

    pub fn with_max(&self, max_w: i32) -> Series {
        let mut s = Series::zero(self.lat, max_w);
        for (k, v) in &self.terms {
            s.add_term(*k, *v);
        }
        s
    }

    pub fn scale(&self, c: C64) -> Series {
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v *= c;
        }
        s
    }

    pub fn add(&self, o: &Series) -> Series {
        let mut s = self.with_max(self.max_w.min(o.max_w));
        for (k, v) in &o.terms {
            s.add_term(*k, *v);
        }
        s
    }

    pub fn sub(&self, o: &Series) -> Series {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn add_const(&self, c: C64) -> Series {
        let mut s = self.clone();
        s.add_term((0, 0, 0), c);
        s
    }

    pub fn mul(&self, o: &Series) -> Series {
        let max_w = self.max_w.min(o.max_w);
        let mut s = Series::zero(self.lat, max_w);
        let wo_min = o.min_weight().unwrap_or(0);
        for (ka, va) in &self.terms {
            let wa = self.weight_of(ka);
            if wa + wo_min > max_w {
                continue;
            }
            for (kb, vb) in &o.terms {
                if wa + o.weight_of(kb) > max_w {
                    continue;
                }
                s.add_term((ka.0 + kb.0, ka.1 + kb.1, ka.2 + kb.2), va * vb);
            }
        }
        s
    }

    /// Multiplication by `x^p` (p may be negative).
    pub fn shift_x(&self, p: i32) -> Series {
        let (xi, xj) = self.lat.x_key;
        let f = self.lat.x_scale.powi(p);
        let mut s = Series::zero(self.lat, self.max_w + p * self.lat.x_weight());
        for (k, v) in &self.terms {
            s.add_term((k.0 + p * xi, k.1 + p * xj, k.2), v * f);
        }
        s
    }

    /// The Euler operator `x d/dx`.
    pub fn theta(&self) -> Series {
        let mut s = Series::zero(self.lat, self.max_w);
        for (k, v) in &self.terms {
            s.add_term(*k, v * self.lat.exponent(k.0, k.1));
            if k.2 > 0 {
                s.add_term((k.0, k.1, k.2 - 1), v * k.2 as f64);
            }
        }
        s
    }

    pub fn min_weight(&self) -> Option<i32> {
        self.terms.keys().map(|k| self.weight_of(k)).min()
    }

    /// Terms of exactly weight `w`.
    pub fn at_weight(&self, w: i32) -> Vec<(Key, C64)> {
        self.terms.iter().filter(|(k, _)| self.weight_of(k) == w).map(|(k, v)| (*k, *v)).collect()
    }

    pub fn max_abs_at_weight(&self, w: i32) -> f64 {
        self.at_weight(w).iter().map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|v| *v == C64::new(0.0, 0.0))
    }

    /// Drops coefficients smaller than `tol` in modulus.
    pub fn pruned(&self, tol: f64) -> Series {
        let mut s = self.clone();
        s.terms.retain(|_, v| v.norm() > tol);
        s
    }

    /// Value of the monomial `key` at covering logarithm `lx`.
    pub fn monomial_value(&self, key: &Key, lx: C64) -> C64 {
        let lg1 = self.lat.e1 * lx + self.lat.c1;
        let lg2 = self.lat.e2 * lx + self.lat.c2;
        (lg1 * key.0 as f64 + lg2 * key.1 as f64).exp() * lx.powu(key.2)
    }

    /// Sum of all terms and, separately, the modulus of the highest
    /// retained weight.
    pub fn eval_with_tail(&self, lx: C64) -> (C64, f64) {
        let mut total = C64::new(0.0, 0.0);
        let mut per_w: BTreeMap<i32, C64> = BTreeMap::new();
        for (k, v) in &self.terms {
            let t = v * self.monomial_value(k, lx);
            total += t;
            *per_w.entry(self.weight_of(k)).or_default() += t;
        }
        let tail = per_w.values().next_back().map(|v| v.norm()).unwrap_or(0.0);
        (total, tail)
    }

    pub fn eval(&self, lx: C64) -> C64 {
        self.eval_with_tail(lx).0
    }

    /// Sum in extended precision, the coefficients taken as exact.
    pub fn eval_ext(&self, lx: &XC64) -> XC64 {
        let c = XC64::from_c64;
        let (e1, e2) = (c(self.lat.e1), c(self.lat.e2));
        let (c1, c2) = (c(self.lat.c1), c(self.lat.c2));
        let lg1 = e1 * lx.clone() + c1;
        let lg2 = e2 * lx.clone() + c2;
        let mut total = XC64::zero();
        for (k, v) in &self.terms {
            let e = (lg1.clone() * XC64::from_f64(k.0 as f64) + lg2.clone() * XC64::from_f64(k.1 as f64)).exp();
            total = total + c(*v) * e * lx.powi(k.2 as i32);
        }
        total
    }

    /// `exp(self)` for a series whose non-constant part has positive weight
    /// and carries no logarithms.
    pub fn exp(&self) -> Series {
        let c0 = self.get((0, 0, 0));
        let mut rest = self.clone();
        rest.terms.remove(&(0, 0, 0));
        let mut sum = Series::constant(self.lat, self.max_w, C64::new(1.0, 0.0));
        let mut term = sum.clone();
        let w = rest.min_weight().unwrap_or(self.max_w + 1).max(1);
        let mut k = 1;
        while k * w <= self.max_w {
            term = term.mul(&rest).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
            k += 1;
        }
        sum.scale(c0.exp())
    }

    /// `ln(self)` for a series `c0 (1 + u)` with `u` of positive weight.
    pub fn ln(&self) -> Series {
        let c0 = self.get((0, 0, 0));
        let u = self.scale(1.0 / c0).add_const(C64::new(-1.0, 0.0));
        let w = u.min_weight().unwrap_or(self.max_w + 1).max(1);
        let mut sum = Series::constant(self.lat, self.max_w, c0.ln());
        let mut term = Series::constant(self.lat, self.max_w, C64::new(1.0, 0.0));
        let mut k = 1;
        while k * w <= self.max_w {
            term = term.mul(&u);
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum = sum.add(&term.scale(C64::new(sign / k as f64, 0.0)));
            k += 1;
        }
        sum
    }

    /// Reciprocal of a series whose lowest-weight part is a single monomial
    /// without logarithms, by Newton iteration `r <- r (2 - s r)`.
    pub fn reciprocal(&self) -> Option<Series> {
        let w0 = self.min_weight()?;
        let lead: Vec<_> = self.at_weight(w0).into_iter().filter(|(_, v)| v.norm() > 0.0).collect();
        if lead.len() != 1 || lead[0].0 .2 != 0 {
            return None;
        }
        let (k0, c0) = lead[0];
        // Work with s = m (1 + u), m the leading monomial, then shift back.
        let inv_key = (-k0.0, -k0.1, 0);
        let max_w = self.max_w - w0;
        let normalized = {
            let mut s = Series::zero(self.lat, self.max_w - w0);
            for (k, v) in &self.terms {
                s.add_term((k.0 - k0.0, k.1 - k0.1, k.2), v / c0);
            }
            s
        };
        let mut r = Series::constant(self.lat, max_w.max(0), C64::new(1.0, 0.0));
        let mut prec = 1;
        loop {
            let sr = normalized.with_max(max_w).mul(&r);
            let corr = Series::constant(self.lat, max_w, C64::new(2.0, 0.0)).sub(&sr);
            r = r.mul(&corr);
            if prec > max_w.max(1) {
                break;
            }
            prec *= 2;
        }
        let mut out = Series::zero(self.lat, self.max_w - 2 * w0);
        for (k, v) in &r.terms {
            out.add_term((k.0 + inv_key.0, k.1 + inv_key.1, k.2), v / c0);
        }
        Some(out)
    }
}
