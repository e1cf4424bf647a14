//! Okamoto symmetries: `Permute01` (x -> 1-x, y -> 1-y), `InvertX`
//! (x -> 1/x, y -> y/x) and `SwapXY` (x -> x, y -> x/y), acting on points,
//! theta, traces and expansions.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CoveringPoint;
use crate::monodromy::MonodromyData;
use crate::params::{trace_from_theta, Theta};
use crate::series::{BranchExpansion, Form};
use crate::{CriticalPoint, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryOp {
    Permute01,
    InvertX,
    SwapXY,
}

impl FromStr for SymmetryOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "permute01" => Ok(SymmetryOp::Permute01),
            "invx" | "invertx" => Ok(SymmetryOp::InvertX),
            "swapxy" => Ok(SymmetryOp::SwapXY),
            other => Err(Error::Invalid(format!("unknown symmetry {other}"))),
        }
    }
}

pub fn apply_to_theta(op: SymmetryOp, t: &Theta) -> Theta {
    match op {
        SymmetryOp::Permute01 => Theta::new(t.theta1, t.thetax, t.theta0, t.theta_inf),
        SymmetryOp::InvertX => Theta::new(t.theta0, t.theta1, t.thetax, t.theta_inf),
        SymmetryOp::SwapXY => Theta::new(t.theta_inf - 1.0, t.theta1, t.thetax, t.theta0 + 1.0),
    }
}

/// Image of the independent variable alone (each map is an involution).
pub fn apply_to_x(op: SymmetryOp, x: C64) -> Result<C64> {
    match op {
        SymmetryOp::Permute01 => Ok(1.0 - x),
        SymmetryOp::InvertX => {
            if x.norm() == 0.0 {
                Err(Error::DivisionByZero("InvertX at x = 0"))
            } else {
                Ok(1.0 / x)
            }
        }
        SymmetryOp::SwapXY => Ok(x),
    }
}

/// Image on the covering; `Permute01` goes through the principal sheet.
pub fn apply_to_covering(op: SymmetryOp, x: CoveringPoint) -> CoveringPoint {
    match op {
        SymmetryOp::Permute01 => CoveringPoint::from_complex(1.0 - x.to_complex()),
        SymmetryOp::InvertX => CoveringPoint::new(-x.ln_abs, -x.arg),
        SymmetryOp::SwapXY => x,
    }
}

pub fn apply_to_point(op: SymmetryOp, x: C64, y: C64) -> Result<(C64, C64)> {
    match op {
        SymmetryOp::Permute01 => Ok((1.0 - x, 1.0 - y)),
        SymmetryOp::InvertX => {
            if x.norm() == 0.0 {
                return Err(Error::DivisionByZero("InvertX at x = 0"));
            }
            Ok((1.0 / x, y / x))
        }
        SymmetryOp::SwapXY => {
            if y.norm() == 0.0 {
                return Err(Error::DivisionByZero("SwapXY at y = 0"));
            }
            Ok((x, x / y))
        }
    }
}

/// Image of a 2-jet `(x, y, y', y'')` of a solution curve.
pub fn apply_to_jet(op: SymmetryOp, x: C64, y: C64, dy: C64, d2y: C64) -> Result<(C64, C64, C64, C64)> {
    let (xn, yn) = apply_to_point(op, x, y)?;
    Ok(match op {
        // Y(X) = 1 - y(1 - X).
        SymmetryOp::Permute01 => (xn, yn, dy, -d2y),
        // Y(X) = X y(1/X): Y' = y - y'/x, Y'' = x^3 y''.
        SymmetryOp::InvertX => (xn, yn, y - x * dy, x * x * x * d2y),
        // Y = x / y.
        SymmetryOp::SwapXY => {
            let d1 = 1.0 / y - x * dy / (y * y);
            let d2 = -2.0 * dy / (y * y) + 2.0 * x * dy * dy / (y * y * y) - x * d2y / (y * y);
            (xn, yn, d1, d2)
        }
    })
}

/// Image of a 1-jet `(x, y, y')`.
pub fn apply_to_state(op: SymmetryOp, x: C64, y: C64, dy: C64) -> Result<(C64, C64, C64)> {
    let (a, b, c, _) = apply_to_jet(op, x, y, dy, C64::new(0.0, 0.0))?;
    Ok((a, b, c))
}

pub fn apply_to_traces(op: SymmetryOp, d: &MonodromyData) -> MonodromyData {
    let [p0, px, p1, pi] = d.p_mu();
    let (p0x, px1, p01) = (d.p0x, d.px1, d.p01);
    match op {
        SymmetryOp::Permute01 => {
            let p01n = -p01 - p0x * px1 + pi * px + p1 * p0;
            MonodromyData::new([p1, px, p0, pi], px1, p0x, p01n)
        }
        SymmetryOp::InvertX => {
            let p0xn = -p01 - p0x * px1 + pi * px + p0 * p1;
            MonodromyData::new([p0, p1, px, pi], p0xn, px1, p0x)
        }
        SymmetryOp::SwapXY => MonodromyData::new([-pi, p1, px, -p0], -p0x, px1, -p01),
    }
}

/// Traces for a theta after a symmetry: recomputes `p_mu` from theta.
pub fn apply_to_traces_with_theta(op: SymmetryOp, d: &MonodromyData, theta: &Theta) -> MonodromyData {
    let mut out = apply_to_traces(op, d);
    let [p0, px, p1, pi] = trace_from_theta(&apply_to_theta(op, theta));
    out.p0 = p0;
    out.px = px;
    out.p1 = p1;
    out.p_inf = pi;
    out
}

pub fn map_critical_point(op: SymmetryOp, p: CriticalPoint) -> CriticalPoint {
    use CriticalPoint::*;
    match (op, p) {
        (SymmetryOp::Permute01, Zero) => One,
        (SymmetryOp::Permute01, One) => Zero,
        (SymmetryOp::InvertX, Zero) => Infinity,
        (SymmetryOp::InvertX, Infinity) => Zero,
        (_, p) => p,
    }
}

/// Pulls an expansion back along a symmetry.
///
/// `SwapXY` on an untransported expansion is carried out on the series
/// itself: a direct series `S` becomes `x S^{-1}` when its leading part is a
/// single monomial and the reciprocal form `1 / (S / x)` otherwise; a
/// reciprocal form `1 / D` becomes the direct series `x D`. Every other case
/// records the map, and evaluation composes it with the point action.
pub fn transport_expansion(op: SymmetryOp, b: &BranchExpansion) -> Result<BranchExpansion> {
    let mut out = b.clone();
    out.theta = apply_to_theta(op, &b.theta);
    out.point = map_critical_point(op, b.point);
    out.residual = None;
    if op == SymmetryOp::SwapXY && b.ops.is_empty() {
        if b.series.is_zero() {
            return Err(Error::ReciprocalOfZeroSeries);
        }
        match b.form {
            Form::Inverse => {
                out.form = Form::Direct;
                out.series = b.series.shift_x(1);
            }
            Form::Direct => match b.series.reciprocal() {
                Some(r) => {
                    out.form = Form::Direct;
                    out.series = r.shift_x(1);
                }
                None => {
                    out.form = Form::Inverse;
                    out.series = b.series.shift_x(-1);
                }
            },
        }
        return Ok(out);
    }
    if let Some(last) = out.ops.last() {
        if *last == op {
            out.ops.pop();
            return Ok(out);
        }
    }
    out.ops.push(op);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::{fricke_residual, PairTrace};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cr(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn theta_examples() {
        let t = Theta::real(0.1, 0.2, 0.3, 1.4);
        let s = apply_to_theta(SymmetryOp::SwapXY, &apply_to_theta(SymmetryOp::SwapXY, &t));
        for (a, b) in s.to_array().iter().zip(t.to_array()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
        let cp2 = Theta::real(0.0, 0.0, 0.0, 4.0);
        assert_eq!(apply_to_theta(SymmetryOp::Permute01, &cp2), cp2);
        assert_eq!(apply_to_theta(SymmetryOp::SwapXY, &cp2), Theta::real(3.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn point_examples() {
        let (x, y) = apply_to_point(SymmetryOp::Permute01, cr(0.3), cr(0.7)).unwrap();
        assert_abs_diff_eq!((x - cr(0.7)).norm() + (y - cr(0.3)).norm(), 0.0, epsilon = 1e-15);
        let (x, y) = apply_to_point(SymmetryOp::InvertX, cr(0.5), cr(0.2)).unwrap();
        assert_abs_diff_eq!((x - cr(2.0)).norm() + (y - cr(0.4)).norm(), 0.0, epsilon = 1e-15);
        let (x, y) = apply_to_point(SymmetryOp::SwapXY, cr(0.5), cr(0.2)).unwrap();
        assert_abs_diff_eq!((x - cr(0.5)).norm() + (y - cr(2.5)).norm(), 0.0, epsilon = 1e-15);
        assert!(apply_to_point(SymmetryOp::SwapXY, cr(0.5), cr(0.0)).is_err());
        assert!(apply_to_point(SymmetryOp::InvertX, cr(0.0), cr(0.3)).is_err());
    }

    #[test]
    fn trace_examples() {
        let d = MonodromyData::new([cr(2.0), cr(2.0), cr(2.0), cr(-2.0)], cr(1.0), cr(1.0), cr(1.0));
        let e = apply_to_traces(SymmetryOp::Permute01, &d);
        assert_abs_diff_eq!((e.p0x - cr(1.0)).norm(), 0.0);
        assert_abs_diff_eq!((e.px1 - cr(1.0)).norm(), 0.0);
        assert_abs_diff_eq!((e.p01 - cr(-2.0)).norm(), 0.0);
        assert_abs_diff_eq!(fricke_residual(&e).norm(), 0.0);
        let d = MonodromyData::new([cr(0.0); 4], cr(0.0), cr(-3.0), cr(5.0));
        let e = apply_to_traces(SymmetryOp::SwapXY, &d);
        assert_eq!(e.pairs(), [cr(0.0), cr(-5.0), cr(-3.0)]);
        assert_eq!(apply_to_traces(SymmetryOp::SwapXY, &e), d);
    }

    #[test]
    fn jet_maps_are_involutions() {
        let (x, y, d1, d2) = (C64::new(0.3, 0.2), C64::new(0.6, -0.1), C64::new(0.4, 0.3), C64::new(-0.7, 0.5));
        for op in [SymmetryOp::Permute01, SymmetryOp::InvertX, SymmetryOp::SwapXY] {
            let (a, b, c, d) = apply_to_jet(op, x, y, d1, d2).unwrap();
            let (a, b, c, d) = apply_to_jet(op, a, b, c, d).unwrap();
            assert!((a - x).norm() + (b - y).norm() + (c - d1).norm() + (d - d2).norm() < 1e-12, "{op:?}");
        }
    }

    fn cplx() -> impl Strategy<Value = C64> {
        (-2.0..2.0f64, -0.5..0.5f64).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #[test]
        fn fricke_invariance(t0 in cplx(), tx in cplx(), t1 in cplx(), ti in cplx(), u in cplx(), v in cplx()) {
            let th = Theta::new(t0, tx, t1, ti);
            let d = MonodromyData::complete(trace_from_theta(&th), PairTrace::P01, u, v)[0];
            prop_assert!(fricke_residual(&d).norm() < 1e-10);
            for op in [SymmetryOp::Permute01, SymmetryOp::InvertX, SymmetryOp::SwapXY] {
                let e = apply_to_traces_with_theta(op, &d, &th);
                let scale = 1.0 + d.pairs().iter().map(|p| p.norm()).fold(0.0, f64::max).powi(3);
                prop_assert!(fricke_residual(&e).norm() < 1e-12 * scale, "{:?}", op);
            }
        }

        #[test]
        fn swap_is_involution_on_traces(t0 in cplx(), tx in cplx(), t1 in cplx(), ti in cplx(), u in cplx(), v in cplx()) {
            let th = Theta::new(t0, tx, t1, ti);
            let d = MonodromyData::complete(trace_from_theta(&th), PairTrace::P01, u, v)[0];
            let e = apply_to_traces(SymmetryOp::SwapXY, &apply_to_traces(SymmetryOp::SwapXY, &d));
            prop_assert_eq!(e, d);
        }
    }
}
