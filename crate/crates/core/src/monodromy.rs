//! Trace coordinates on the Fricke cubic and the explicit trace formulae.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{trace_from_theta, Theta};
use crate::{CriticalPoint, C64};

/// Tolerance for membership of the cubic.
pub const FRICKE_TOL: f64 = 1e-10;

/// The seven trace coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyData {
    pub p0: C64,
    pub px: C64,
    pub p1: C64,
    pub p_inf: C64,
    pub p0x: C64,
    pub px1: C64,
    pub p01: C64,
}

/// Which of the three pair traces is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairTrace {
    P0x,
    Px1,
    P01,
}

impl MonodromyData {
    pub fn new(p_mu: [C64; 4], p0x: C64, px1: C64, p01: C64) -> Self {
        let [p0, px, p1, p_inf] = p_mu;
        MonodromyData { p0, px, p1, p_inf, p0x, px1, p01 }
    }

    pub fn p_mu(&self) -> [C64; 4] {
        [self.p0, self.px, self.p1, self.p_inf]
    }

    /// Order `(p0x, p01, px1)`, as used by the symmetry maps.
    pub fn pairs(&self) -> [C64; 3] {
        [self.p0x, self.p01, self.px1]
    }

    /// Completes the data from two pair traces by solving the cubic as a
    /// quadratic in the missing one. Both roots are returned; choosing one is
    /// branch data that belongs to the caller.
    pub fn complete(p_mu: [C64; 4], missing: PairTrace, u: C64, v: C64) -> [MonodromyData; 2] {
        let [p0, px, p1, pi] = p_mu;
        // Linear coefficients of p0x, p01, px1 in the cubic.
        let l0x = -(p0 * px + p1 * pi);
        let l01 = -(p0 * p1 + px * pi);
        let lx1 = -(px * p1 + p0 * pi);
        let k = p0 * p0 + p1 * p1 + px * px + pi * pi + p0 * px * p1 * pi - 4.0;
        // u, v are the known traces in the order (p0x, p01, px1) with the
        // missing one removed.
        let (lm, lu, lv) = match missing {
            PairTrace::P0x => (l0x, l01, lx1),
            PairTrace::P01 => (l01, l0x, lx1),
            PairTrace::Px1 => (lx1, l0x, l01),
        };
        let b = u * v + lm;
        let c0 = u * u + v * v + lu * u + lv * v + k;
        let disc = (b * b - 4.0 * c0).sqrt();
        let roots = [(-b + disc) / 2.0, (-b - disc) / 2.0];
        roots.map(|r| match missing {
            PairTrace::P0x => MonodromyData::new(p_mu, r, v, u),
            PairTrace::P01 => MonodromyData::new(p_mu, u, v, r),
            PairTrace::Px1 => MonodromyData::new(p_mu, u, r, v),
        })
    }
}

/// Left-hand side of the Fricke cubic.
pub fn fricke_residual(d: &MonodromyData) -> C64 {
    let MonodromyData { p0, px, p1, p_inf: pi, p0x, px1, p01 } = *d;
    p0x * p0x + p01 * p01 + px1 * px1 + p0x * p01 * px1
        - (p0 * px + p1 * pi) * p0x
        - (p0 * p1 + px * pi) * p01
        - (px * p1 + p0 * pi) * px1
        + p0 * p0
        + p1 * p1
        + px * px
        + pi * pi
        + p0 * px * p1 * pi
        - 4.0
}

/// A critical exponent attached to a pair trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSigma {
    pub sigma: C64,
    pub point: CriticalPoint,
}

impl ExponentSigma {
    /// The solution family `sign * sigma + 2n`, all with the same trace.
    pub fn family(&self, n: i32, positive: bool) -> C64 {
        let s = if positive { self.sigma } else { -self.sigma };
        s + 2.0 * n as f64
    }

    pub fn trace(&self) -> C64 {
        2.0 * (PI * self.sigma).cos()
    }
}

/// Solves `2 cos(pi sigma) = p` in the strip `0 <= Re sigma < 1`.
///
/// `p = 2` and real `p <= -2` are boundary classes (Taylor/logarithmic and
/// inverse oscillatory regimes); the error carries the boundary exponent.
pub fn sigma_from_trace(p: C64, point: CriticalPoint) -> Result<ExponentSigma> {
    let mut sigma = (p / 2.0).acos() / PI;
    if sigma.re.abs() < 1e-15 && sigma.im < 0.0 {
        sigma = -sigma;
    }
    if sigma.re > 1.0 - 1e-12 {
        // Re sigma = 1: pick Im sigma >= 0, as in sigma = 1 + 2 i nu.
        sigma = C64::new(1.0, sigma.im.abs());
        return Err(Error::BoundaryClass { trace: p, sigma });
    }
    if sigma.norm() < 1e-12 {
        return Err(Error::BoundaryClass { trace: p, sigma: C64::new(0.0, 0.0) });
    }
    Ok(ExponentSigma { sigma, point })
}

fn taylor_cos_product(theta: &Theta) -> C64 {
    let s = theta.sqrt_2alpha();
    let g = theta.sqrt_2gamma();
    (PI / 2.0 * (s + g)).cos() * (PI / 2.0 * (s - g)).cos()
}

/// Integration constant `a` of the Taylor branch `y = a x + ...` in terms
/// of `p01`.
pub fn taylor_branch_connection(theta: &Theta, p01: C64) -> Result<C64> {
    let cc = taylor_cos_product(theta);
    if cc.norm() < 1e-14 {
        return Err(Error::DegenerateDenominator);
    }
    let num = 2.0 * (PI * theta.sqrt_2gamma()).cos() - p01;
    Ok(num / (4.0 * cc))
}

/// Pair traces `(p0x, p01, px1)` of the Taylor branch `y = a x + ...`
/// (requires `theta0 = thetax = 0`).
pub fn taylor_branch_traces(theta: &Theta, a: C64) -> (C64, C64, C64) {
    let cc = taylor_cos_product(theta);
    let c1 = 2.0 * (PI * theta.sqrt_2gamma()).cos();
    (C64::new(2.0, 0.0), c1 - 4.0 * a * cc, c1 + 4.0 * (a - 1.0) * cc)
}

/// Full monodromy data of the Taylor branch (`theta0 = thetax = 0`).
pub fn taylor_branch_data(theta: &Theta, a: C64) -> MonodromyData {
    let (p0x, p01, px1) = taylor_branch_traces(theta, a);
    MonodromyData::new(trace_from_theta(theta), p0x, px1, p01)
}

/// `A^2(sigma^2)` of the three-term leading behaviour at `Re sigma = 0`.
pub fn a_squared(sigma: C64, theta: &Theta) -> C64 {
    let s2 = sigma * sigma;
    let dm = theta.theta0 - theta.thetax;
    let dp = theta.theta0 + theta.thetax;
    (s2 - dm * dm) * (s2 - dp * dp) / (4.0 * s2)
}

/// `B(sigma^2)` of the same leading behaviour.
pub fn b_coefficient(sigma: C64, theta: &Theta) -> C64 {
    let s2 = sigma * sigma;
    (theta.theta0 * theta.theta0 - theta.thetax * theta.thetax + s2) / (2.0 * s2)
}

/// The product `a(sigma) a(-sigma) = 4 sigma^2 / A^2(sigma^2)`.
pub fn a_sigma_product(sigma: C64, theta: &Theta) -> Result<C64> {
    if sigma.norm() < 1e-15 {
        return Err(Error::SingularA(sigma));
    }
    let a2 = a_squared(sigma, theta);
    if a2.norm() < 1e-14 {
        return Err(Error::SingularA(sigma));
    }
    Ok(4.0 * sigma * sigma / a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn real(p: [f64; 4], q: [f64; 3]) -> MonodromyData {
        MonodromyData::new(p.map(C64::from), q[0].into(), q[1].into(), q[2].into())
    }

    #[test]
    fn fricke_examples() {
        assert_abs_diff_eq!(fricke_residual(&real([2.0; 4], [2.0; 3])).norm(), 0.0);
        assert_abs_diff_eq!(fricke_residual(&real([2.0, 2.0, 2.0, -2.0], [1.0; 3])).norm(), 0.0);
        assert_abs_diff_eq!(fricke_residual(&real([2.0; 4], [0.0; 3])).re, 28.0);
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_from_trace(0.0.into(), CriticalPoint::Zero).unwrap();
        assert_abs_diff_eq!(s.sigma.re, 0.5, epsilon = 1e-15);
        let s = sigma_from_trace((2.0 * (0.3 * PI).cos()).into(), CriticalPoint::Zero).unwrap();
        assert_abs_diff_eq!(s.sigma.re, 0.3, epsilon = 1e-14);
        let nu: f64 = 0.30634;
        let p = -2.0 * (2.0 * PI * nu).cosh();
        assert_abs_diff_eq!(p, -7.0, epsilon = 1e-3);
        match sigma_from_trace(p.into(), CriticalPoint::Zero) {
            Err(Error::BoundaryClass { sigma, .. }) => {
                assert_abs_diff_eq!(sigma.re, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(sigma.im, 2.0 * nu, epsilon = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(sigma_from_trace(2.0.into(), CriticalPoint::Zero).is_err());
    }

    #[test]
    fn taylor_connection_examples() {
        let th = Theta::real(0.3, 0.2, 0.4, 1.7);
        let p01 = 2.0 * (PI * th.theta1).cos();
        assert_abs_diff_eq!(taylor_branch_connection(&th, p01).unwrap().norm(), 0.0);
        // alpha = 1/2, gamma = 0: cos(pi/2)^2 = 0.
        let th = Theta::real(0.0, 0.0, 0.0, 2.0);
        assert_eq!(
            taylor_branch_connection(&th, (-2.0).into()),
            Err(Error::DegenerateDenominator)
        );
        let th = Theta::real(0.3, 0.2, 0.4, 1.7);
        let (_, p01, px1) = taylor_branch_traces(&th, 0.0.into());
        let c1 = 2.0 * (PI * th.theta1).cos();
        assert_abs_diff_eq!((p01 - c1).norm(), 0.0);
        assert_abs_diff_eq!((px1 - c1 + 4.0 * taylor_cos_product(&th)).norm(), 0.0, epsilon = 1e-15);
        let (_, _, px1) = taylor_branch_traces(&th, 1.0.into());
        assert_abs_diff_eq!((px1 - c1).norm(), 0.0);
    }

    #[test]
    fn a_sigma_examples() {
        let th = Theta::real(0.0, 0.0, 0.3, 1.2);
        let p = a_sigma_product(0.5.into(), &th).unwrap();
        assert_abs_diff_eq!(p.re, 16.0, epsilon = 1e-12);
        let th = Theta::real(0.2, 0.3, 0.0, 1.0);
        assert!(matches!(a_sigma_product(0.5.into(), &th), Err(Error::SingularA(_))));
    }

    #[test]
    fn complete_recovers_missing_trace() {
        let d = real([0.3, -0.4, 1.1, 0.7], [0.2, -1.3, 0.5]);
        let p = d.p_mu();
        let mut d = d;
        // Make d lie on the cubic by solving for p01.
        d = MonodromyData::complete(p, PairTrace::P01, d.p0x, d.px1)[0];
        assert!(fricke_residual(&d).norm() < 1e-12);
        for missing in [PairTrace::P0x, PairTrace::Px1, PairTrace::P01] {
            let (u, v) = match missing {
                PairTrace::P0x => (d.p01, d.px1),
                PairTrace::P01 => (d.p0x, d.px1),
                PairTrace::Px1 => (d.p0x, d.p01),
            };
            let roots = MonodromyData::complete(p, missing, u, v);
            assert!(roots.iter().any(|r| (r.pairs()[0] - d.p0x).norm()
                + (r.pairs()[1] - d.p01).norm()
                + (r.pairs()[2] - d.px1).norm()
                < 1e-10));
            for r in roots {
                assert!(fricke_residual(&r).norm() < 1e-10);
            }
        }
    }

    fn cplx() -> impl Strategy<Value = C64> {
        (-1.5..1.5f64, -0.5..0.5f64).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #[test]
        fn sigma_round_trip(re in 0.01..0.99f64, im in -1.0..1.0f64) {
            let s = C64::new(re, im);
            let got = sigma_from_trace(2.0 * (PI * s).cos(), CriticalPoint::Zero).unwrap();
            prop_assert!((got.sigma - s).norm() < 1e-12);
        }

        #[test]
        fn taylor_traces_on_cubic(t1 in cplx(), ti in cplx(), a in cplx()) {
            let th = Theta::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), t1, ti);
            let d = taylor_branch_data(&th, a);
            prop_assert!(fricke_residual(&d).norm() < FRICKE_TOL);
            if taylor_cos_product(&th).norm() > 1e-3 {
                let back = taylor_branch_connection(&th, d.p01).unwrap();
                prop_assert!((back - a).norm() < 1e-13 * (1.0 + a.norm()) / taylor_cos_product(&th).norm().min(1.0));
            }
        }

        #[test]
        fn a_sigma_even(s in cplx(), t0 in cplx(), tx in cplx()) {
            let th = Theta::new(t0, tx, 0.0.into(), 1.0.into());
            if let (Ok(p), Ok(q)) = (a_sigma_product(s, &th), a_sigma_product(-s, &th)) {
                prop_assert!((p - q).norm() <= 1e-12 * p.norm().max(1.0));
            }
        }
    }
}
