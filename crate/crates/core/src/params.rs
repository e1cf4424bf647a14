//! Coefficients `(alpha, beta, gamma, delta)` and their theta form.

use serde::{Deserialize, Serialize};

use crate::C64;

/// Exponents `(theta0, thetax, theta1, theta_inf)`, determined up to
/// `theta_k -> -theta_k` (k = 0, x, 1) and `theta_inf -> 2 - theta_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub theta0: C64,
    pub thetax: C64,
    pub theta1: C64,
    pub theta_inf: C64,
}

/// Whether the generic-parameter condition of the local theory has been
/// checked. It is never checked by this library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Genericity {
    Unchecked,
}

/// Both parameter sets of the equation, kept consistent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PviParameters {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
    pub theta: Theta,
    pub genericity: Genericity,
}

/// Picks the representative of `{z, -z}` with `Re >= 0`, ties by `Im >= 0`.
pub fn sign_normalize(z: C64) -> C64 {
    // Adding zero turns -0.0 into 0.0.
    let z = z + C64::new(0.0, 0.0);
    if z.re > 0.0 || (z.re == 0.0 && z.im >= 0.0) {
        z
    } else {
        -z
    }
}

impl Theta {
    pub fn new(theta0: C64, thetax: C64, theta1: C64, theta_inf: C64) -> Self {
        let theta_inf = if theta_inf == C64::new(0.0, 0.0) {
            C64::new(2.0, 0.0)
        } else {
            theta_inf
        };
        Theta { theta0, thetax, theta1, theta_inf }
    }

    pub fn real(t0: f64, tx: f64, t1: f64, tinf: f64) -> Self {
        Theta::new(t0.into(), tx.into(), t1.into(), tinf.into())
    }

    /// The canonical representative of the equivalence class.
    pub fn canonicalize(&self) -> Theta {
        Theta {
            theta0: sign_normalize(self.theta0),
            thetax: sign_normalize(self.thetax),
            theta1: sign_normalize(self.theta1),
            theta_inf: C64::new(1.0, 0.0) + sign_normalize(self.theta_inf - 1.0),
        }
    }

    /// The equivalent representative `(-theta0, -thetax, -theta1, 2 - theta_inf)`.
    pub fn flipped(&self) -> Theta {
        Theta {
            theta0: -self.theta0,
            thetax: -self.thetax,
            theta1: -self.theta1,
            theta_inf: 2.0 - self.theta_inf,
        }
    }

    pub fn to_array(&self) -> [C64; 4] {
        [self.theta0, self.thetax, self.theta1, self.theta_inf]
    }

    /// `sqrt(2 alpha) = theta_inf - 1`.
    pub fn sqrt_2alpha(&self) -> C64 {
        self.theta_inf - 1.0
    }

    /// `sqrt(2 gamma) = theta1`.
    pub fn sqrt_2gamma(&self) -> C64 {
        self.theta1
    }
}

/// Theta exponents from the coefficients, canonical branch.
pub fn theta_from_coefficients(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Theta {
    let theta0 = (-2.0 * beta).sqrt();
    let thetax = (1.0 - 2.0 * delta).sqrt();
    let theta1 = (2.0 * gamma).sqrt();
    let theta_inf = 1.0 + (2.0 * alpha).sqrt();
    Theta::new(theta0, thetax, theta1, theta_inf).canonicalize()
}

/// Coefficients from any representative of a theta class.
pub fn coefficients_from_theta(theta: &Theta) -> PviParameters {
    let t = theta;
    PviParameters {
        alpha: (t.theta_inf - 1.0).powi(2) / 2.0,
        beta: -t.theta0 * t.theta0 / 2.0,
        gamma: t.theta1 * t.theta1 / 2.0,
        delta: 0.5 - t.thetax * t.thetax / 2.0,
        theta: *t,
        genericity: Genericity::Unchecked,
    }
}

/// Local monodromy traces `p_mu = 2 cos(pi theta_mu)` for `mu = 0, x, 1, inf`.
pub fn trace_from_theta(theta: &Theta) -> [C64; 4] {
    theta.to_array().map(|t| 2.0 * (std::f64::consts::PI * t).cos())
}

impl PviParameters {
    pub fn from_coefficients(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Self {
        let theta = theta_from_coefficients(alpha, beta, gamma, delta);
        PviParameters { alpha, beta, gamma, delta, theta, genericity: Genericity::Unchecked }
    }

    pub fn from_theta(theta: Theta) -> Self {
        coefficients_from_theta(&theta)
    }

    pub fn coefficients(&self) -> [C64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }
}
