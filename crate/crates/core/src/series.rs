//! Order-by-order expansions of the behaviour classes at `x = 0`.
//!
//! Every class is a lattice series with a few fixed leading coefficients.
//! Level `n` collects the terms with `n` powers of `x`; its unknowns solve a
//! linear least-squares system extracted from the cleared equation at weight
//! `n + shift`. Behaviours at `x = 1, inf` are pulled back by symmetries.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ext::{XReal, XC64};
use crate::lattice::{CoveringPoint, Key, Lattice, Series};
use crate::monodromy::{a_squared, b_coefficient};
use crate::params::{PviParameters, Theta};
use crate::residual::ResidualForm;
use crate::symmetry::{apply_to_covering, apply_to_point, apply_to_theta, transport_expansion, SymmetryOp};
use crate::{CriticalPoint, C64};

/// Named integration constants and derived exponents.
pub type Constants = BTreeMap<String, C64>;

/// Default radius of the heuristic convergence disc.
pub const DEFAULT_RADIUS: f64 = 0.1;

const RANK_TOL: f64 = 1e-9;
const CONSISTENCY_TOL: f64 = 1e-6;
const LEADING_TOL: f64 = 1e-8;
const INTEGER_TOL: f64 = 1e-9;
/// Weights of the formal residual kept beyond the first nonzero one.
const FORMAL_WEIGHTS: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassTag {
    PowerGeneric,
    PowerRho,
    PowerNegOmega,
    InvOscNuPhi,
    InvOscA,
    TaylorRow1,
    TaylorRow2,
    TaylorRow3,
    TaylorRow4,
    TaylorRow5,
    TaylorRow6,
    LogRow1,
    LogRow2,
    LogRow3,
    InvLogRow1,
    InvLogRow2,
}

impl ClassTag {
    pub const ALL: [ClassTag; 16] = [
        ClassTag::PowerGeneric,
        ClassTag::PowerRho,
        ClassTag::PowerNegOmega,
        ClassTag::InvOscNuPhi,
        ClassTag::InvOscA,
        ClassTag::TaylorRow1,
        ClassTag::TaylorRow2,
        ClassTag::TaylorRow3,
        ClassTag::TaylorRow4,
        ClassTag::TaylorRow5,
        ClassTag::TaylorRow6,
        ClassTag::LogRow1,
        ClassTag::LogRow2,
        ClassTag::LogRow3,
        ClassTag::InvLogRow1,
        ClassTag::InvLogRow2,
    ];

    /// Short name used on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            ClassTag::PowerGeneric => "power",
            ClassTag::PowerRho => "powerrho",
            ClassTag::PowerNegOmega => "powernegomega",
            ClassTag::InvOscNuPhi => "invosc",
            ClassTag::InvOscA => "invosca",
            ClassTag::TaylorRow1 => "taylor1",
            ClassTag::TaylorRow2 => "taylor2",
            ClassTag::TaylorRow3 => "taylor3",
            ClassTag::TaylorRow4 => "taylor4",
            ClassTag::TaylorRow5 => "taylor5",
            ClassTag::TaylorRow6 => "taylor6",
            ClassTag::LogRow1 => "log1",
            ClassTag::LogRow2 => "log2",
            ClassTag::LogRow3 => "log3",
            ClassTag::InvLogRow1 => "invlog1",
            ClassTag::InvLogRow2 => "invlog2",
        }
    }

    /// Names of the constants the class needs.
    pub fn required_constants(self) -> &'static [&'static str] {
        match self {
            ClassTag::PowerGeneric => &["sigma", "a"],
            ClassTag::PowerRho => &["sign", "a"],
            ClassTag::PowerNegOmega => &["a"],
            ClassTag::InvOscNuPhi => &["nu", "phi"],
            ClassTag::InvOscA => &["nu", "a"],
            ClassTag::TaylorRow1 | ClassTag::TaylorRow4 => &["sign"],
            ClassTag::TaylorRow2 | ClassTag::TaylorRow5 => &["sign", "a"],
            ClassTag::TaylorRow3 | ClassTag::TaylorRow6 => &["a"],
            ClassTag::LogRow1 | ClassTag::LogRow3 | ClassTag::InvLogRow1 => &["sign", "a"],
            ClassTag::LogRow2 | ClassTag::InvLogRow2 => &["a"],
        }
    }

    pub fn is_logarithmic(self) -> bool {
        matches!(
            self,
            ClassTag::LogRow1 | ClassTag::LogRow2 | ClassTag::LogRow3 | ClassTag::InvLogRow1 | ClassTag::InvLogRow2
        )
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ClassTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        ClassTag::ALL
            .into_iter()
            .find(|t| t.short_name() == lower || format!("{t:?}").to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::Invalid(format!("unknown class {s}")))
    }
}

/// Whether the stored series is `y` itself or the denominator `D` of
/// `y = 1 / D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    Direct,
    Inverse,
}

/// The first weight at which the truncated series fails to solve the
/// equation, with its leading terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualOrder {
    /// Equation of the direct series the record refers to.
    pub theta: Theta,
    /// Formal residual from the first nonzero weight on, over a few weights.
    pub leading: Series,
    /// Smallest real part of the exponents at the first nonzero weight.
    pub exponent: f64,
    pub log_degree: u32,
    /// The record is for `Y = x D` (the swapped equation) of an inverse form.
    pub via_swap: bool,
}

/// A truncated expansion of one behaviour class.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchExpansion {
    pub point: CriticalPoint,
    pub class: ClassTag,
    pub constants: Constants,
    pub theta: Theta,
    pub order: i32,
    pub form: Form,
    pub series: Series,
    /// Symmetries applied after the expansion at zero, in order.
    pub ops: Vec<SymmetryOp>,
    pub residual: Option<ResidualOrder>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Warning {
    OutsideDomain,
    AsymptoticOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: C64,
    /// Modulus of the last retained level, propagated to the value.
    pub error: f64,
    pub warnings: Vec<Warning>,
}

/// Leading-level parameters of the oscillatory form
/// `x (A sin(i sigma ln x + phi) + B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinForm {
    pub amplitude: C64,
    pub phase: C64,
    pub b: C64,
}

fn constant(consts: &Constants, name: &str) -> Result<C64> {
    consts.get(name).copied().ok_or_else(|| Error::Invalid(format!("missing constant {name}")))
}

fn sign_of(consts: &Constants) -> Result<f64> {
    let s = constant(consts, "sign")?;
    if (s - 1.0).norm() < 1e-12 {
        Ok(1.0)
    } else if (s + 1.0).norm() < 1e-12 {
        Ok(-1.0)
    } else {
        Err(Error::Invalid("sign must be +1 or -1".into()))
    }
}

fn nonzero(z: C64, what: &str) -> Result<()> {
    if z.norm() < 1e-14 {
        Err(Error::ConditionViolation(format!("{what} must be nonzero")))
    } else {
        Ok(())
    }
}

/// Nearest integer if `z` is one within tolerance.
fn as_integer(z: C64) -> Option<i32> {
    let n = z.re.round();
    if (z - n).norm() < INTEGER_TOL {
        Some(n as i32)
    } else {
        None
    }
}

/// Sign of a complex number by its real part, ties by the imaginary part.
fn csgn(z: C64) -> f64 {
    if z.re > 0.0 || (z.re == 0.0 && z.im >= 0.0) {
        1.0
    } else {
        -1.0
    }
}

/// Constant term of the Taylor-type rows at `x = 0`.
fn taylor_constant(theta: &Theta, s: f64) -> Result<C64> {
    let sa = theta.sqrt_2alpha();
    if sa.norm() < 1e-14 {
        return Err(Error::ConditionViolation("alpha must be nonzero".into()));
    }
    Ok(1.0 + s * theta.sqrt_2gamma() / sa)
}

type Unknowns = Box<dyn Fn(i32) -> Vec<Key>>;

/// A class reduced to data for the engine.
struct Setup {
    theta: Theta,
    lat: Lattice,
    fixed: Vec<(Key, C64)>,
    start: i32,
    end: i32,
    unknowns: Unknowns,
    inverse: bool,
    derived: Constants,
}

fn cr(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn level_keys(n: i32, ms: std::ops::RangeInclusive<i32>) -> Vec<Key> {
    ms.map(|m| (n, m, 0)).collect()
}

fn log_keys(n: i32) -> Vec<Key> {
    (0..=(2 * n.max(0)) as u32).map(|l| (n, 0, l)).collect()
}

fn power_generic_setup(theta: Theta, sigma: C64, a: C64, order: i32) -> Result<Setup> {
    if sigma.norm() < 1e-14 || sigma.re < -1e-14 || sigma.re >= 1.0 {
        return Err(Error::ConditionViolation("need 0 <= Re sigma < 1 and sigma != 0".into()));
    }
    nonzero(a, "a")?;
    let lat = Lattice::level(sigma);
    let fixed = vec![
        ((1, -1, 0), a),
        ((1, 0, 0), b_coefficient(sigma, &theta)),
        ((1, 1, 0), a_squared(sigma, &theta) / (4.0 * sigma * sigma * a)),
    ];
    Ok(Setup {
        theta,
        lat,
        fixed,
        start: 2,
        end: order,
        unknowns: Box::new(|n| level_keys(n, -n..=n)),
        inverse: false,
        derived: Constants::new(),
    })
}

/// `Y` of the oscillatory classes, on the swapped equation.
fn inv_osc_setup(theta: Theta, nu: C64, phi: C64, amp_sign: f64, order: i32) -> Result<Setup> {
    nonzero(nu, "nu")?;
    let th = apply_to_theta(SymmetryOp::SwapXY, &theta);
    let p = PviParameters::from_theta(theta);
    let nu2 = nu * nu;
    let b = (2.0 * nu2 + p.gamma - p.alpha) / (4.0 * nu2);
    let amp = amp_sign * (p.alpha / (2.0 * nu2) + b * b).sqrt();
    let i = C64::i();
    let lat = Lattice::level(2.0 * i * nu);
    let fixed = vec![
        ((1, 1, 0), amp * (i * phi).exp() / (2.0 * i)),
        ((1, -1, 0), -amp * (-i * phi).exp() / (2.0 * i)),
        ((1, 0, 0), b),
    ];
    let mut derived = Constants::new();
    derived.insert("A".into(), amp);
    derived.insert("B".into(), b);
    Ok(Setup {
        theta: th,
        lat,
        fixed,
        start: 2,
        end: order + 1,
        unknowns: Box::new(|n| level_keys(n, -n..=n)),
        inverse: true,
        derived,
    })
}

fn class_setup(tag: ClassTag, theta: Theta, consts: &Constants, order: i32) -> Result<Setup> {
    let p = PviParameters::from_theta(theta);
    let taylor = |fixed: Vec<(Key, C64)>, start: i32, skip: Option<i32>| Setup {
        theta,
        lat: Lattice::level(cr(0.0)),
        fixed,
        start,
        end: order,
        unknowns: Box::new(move |n| if Some(n) == skip { vec![] } else { vec![(n, 0, 0)] }),
        inverse: false,
        derived: Constants::new(),
    };
    let logs = |fixed: Vec<(Key, C64)>, start: i32, skip: Option<Key>| Setup {
        theta,
        lat: Lattice::level(cr(0.0)),
        fixed,
        start,
        end: order,
        unknowns: Box::new(move |n| log_keys(n).into_iter().filter(|k| Some(*k) != skip).collect()),
        inverse: false,
        derived: Constants::new(),
    };
    let setup = match tag {
        ClassTag::PowerGeneric => {
            power_generic_setup(theta, constant(consts, "sigma")?, constant(consts, "a")?, order)?
        }
        ClassTag::PowerRho => {
            let s = sign_of(consts)?;
            let a = constant(consts, "a")?;
            let y0 = taylor_constant(&theta, s)?;
            let big_s = theta.sqrt_2alpha() + s * theta.sqrt_2gamma();
            let rho = big_s * csgn(big_s) - 1.0;
            if as_integer(rho).is_some() {
                return Err(Error::ConditionViolation("rho must not be an integer".into()));
            }
            let mut st = Setup {
                theta,
                lat: Lattice::level(rho),
                fixed: vec![((0, 0, 0), y0), ((1, 1, 0), a)],
                start: 1,
                end: order,
                unknowns: Box::new(|n| level_keys(n, 0..=n).into_iter().filter(|k| *k != (1, 1, 0)).collect()),
                inverse: false,
                derived: Constants::new(),
            };
            st.derived.insert("rho".into(), rho);
            st
        }
        ClassTag::PowerNegOmega => {
            let a = constant(consts, "a")?;
            nonzero(a, "a")?;
            if theta.sqrt_2alpha().norm() > 1e-12 {
                return Err(Error::ConditionViolation("alpha must vanish".into()));
            }
            let omega = theta.theta1 * csgn(theta.theta1);
            if omega.re <= 0.0 {
                return Err(Error::ConditionViolation("need Re omega > 0".into()));
            }
            let mut st = Setup {
                theta,
                lat: Lattice::level(omega),
                fixed: vec![((0, -1, 0), 1.0 / a)],
                start: 1,
                end: order,
                unknowns: Box::new(|n| level_keys(n, -1..=n - 1)),
                inverse: false,
                derived: Constants::new(),
            };
            st.derived.insert("omega".into(), omega);
            st
        }
        ClassTag::InvOscNuPhi => {
            let amp = match consts.get("amp") {
                Some(v) if v.re > 0.0 => 1.0,
                _ => -1.0,
            };
            inv_osc_setup(theta, constant(consts, "nu")?, constant(consts, "phi")?, amp, order)?
        }
        ClassTag::InvOscA => {
            let nu = constant(consts, "nu")?;
            let a = constant(consts, "a")?;
            nonzero(nu, "nu")?;
            let th = apply_to_theta(SymmetryOp::SwapXY, &theta);
            let sigma = 2.0 * C64::i() * nu;
            let a2 = a_squared(sigma, &th);
            let scale = th.to_array().iter().map(|t| t.norm_sqr()).sum::<f64>() + sigma.norm_sqr();
            if a2.norm() > 1e-9 * scale.max(1.0) {
                return Err(Error::ConditionViolation("one-sided oscillation needs A^2 = 0".into()));
            }
            Setup {
                theta: th,
                lat: Lattice::level(-sigma),
                fixed: vec![((1, 0, 0), b_coefficient(sigma, &th)), ((1, 1, 0), a)],
                start: 2,
                end: order + 1,
                unknowns: Box::new(|n| level_keys(n, 0..=n)),
                inverse: true,
                derived: Constants::new(),
            }
        }
        ClassTag::TaylorRow1 => {
            let s = sign_of(consts)?;
            let y0 = taylor_constant(&theta, s)?;
            if as_integer(theta.sqrt_2alpha() + s * theta.sqrt_2gamma()).is_some() {
                return Err(Error::ConditionViolation("sqrt(2 alpha) + sign sqrt(2 gamma) must not be an integer".into()));
            }
            taylor(vec![((0, 0, 0), y0)], 1, None)
        }
        ClassTag::TaylorRow2 => {
            let s = sign_of(consts)?;
            let a = constant(consts, "a")?;
            let y0 = taylor_constant(&theta, s)?;
            let n = match as_integer(theta.sqrt_2alpha() + s * theta.sqrt_2gamma()) {
                Some(n) if n != 0 => n.abs(),
                _ => return Err(Error::ConditionViolation("need an integer N != 0".into())),
            };
            taylor(vec![((0, 0, 0), y0), ((n, 0, 0), a)], 1, Some(n))
        }
        ClassTag::TaylorRow3 => {
            let a = constant(consts, "a")?;
            if p.alpha.norm() > 1e-12 || p.gamma.norm() > 1e-12 {
                return Err(Error::ConditionViolation("alpha and gamma must vanish".into()));
            }
            taylor(vec![((0, 0, 0), a), ((1, 0, 0), (1.0 - a) * (p.delta - p.beta))], 2, None)
        }
        ClassTag::TaylorRow4 => {
            let s = sign_of(consts)?;
            let t = theta.theta0 + s * theta.thetax;
            if as_integer(t).is_some() {
                return Err(Error::ConditionViolation("theta0 + sign thetax must not be an integer".into()));
            }
            taylor(vec![((1, 0, 0), theta.theta0 / t)], 2, None)
        }
        ClassTag::TaylorRow5 => {
            let s = sign_of(consts)?;
            let a = constant(consts, "a")?;
            let n = match as_integer(theta.theta0 + s * theta.thetax) {
                Some(n) if n != 0 => n,
                _ => return Err(Error::ConditionViolation("need an integer N != 0".into())),
            };
            let k = n.abs() + 1;
            taylor(vec![((1, 0, 0), theta.theta0 / n as f64), ((k, 0, 0), a)], 2, Some(k))
        }
        ClassTag::TaylorRow6 => {
            let a = constant(consts, "a")?;
            if theta.theta0.norm() > 1e-12 || theta.thetax.norm() > 1e-12 {
                return Err(Error::ConditionViolation("theta0 and thetax must vanish".into()));
            }
            taylor(vec![((1, 0, 0), a), ((2, 0, 0), a * (a - 1.0) * (p.gamma - p.alpha - 0.5))], 3, None)
        }
        ClassTag::LogRow1 | ClassTag::InvLogRow1 => {
            let th = if tag == ClassTag::InvLogRow1 { apply_to_theta(SymmetryOp::SwapXY, &theta) } else { theta };
            let s = sign_of(consts)?;
            let a = constant(consts, "a")?;
            let n = as_integer(th.theta0 + s * th.thetax)
                .ok_or_else(|| Error::ConditionViolation("theta0 + sign thetax must be an integer".into()))?;
            let mut st = if n == 0 {
                logs(vec![((1, 0, 0), a), ((1, 0, 1), s * th.theta0)], 2, None)
            } else {
                let k = n.abs() + 1;
                logs(vec![((1, 0, 0), th.theta0 / n as f64), ((k, 0, 0), a)], 2, Some((k, 0, 0)))
            };
            st.theta = th;
            if tag == ClassTag::InvLogRow1 {
                st.inverse = true;
                st.end = order + 1;
            }
            st
        }
        ClassTag::LogRow2 | ClassTag::InvLogRow2 => {
            let th = if tag == ClassTag::InvLogRow2 { apply_to_theta(SymmetryOp::SwapXY, &theta) } else { theta };
            let a = constant(consts, "a")?;
            let d = th.theta0 * th.theta0 - th.thetax * th.thetax;
            if d.norm() < 1e-12 {
                return Err(Error::ConditionViolation("need theta0^2 != thetax^2".into()));
            }
            let c = -d / 4.0;
            let fixed = vec![
                ((1, 0, 2), c),
                ((1, 0, 1), 2.0 * a * c),
                ((1, 0, 0), c * a * a + th.theta0 * th.theta0 / d),
            ];
            let mut st = logs(fixed, 2, None);
            st.theta = th;
            if tag == ClassTag::InvLogRow2 {
                st.inverse = true;
                st.end = order + 1;
            }
            st
        }
        ClassTag::LogRow3 => {
            let s = sign_of(consts)?;
            let a = constant(consts, "a")?;
            let y0 = taylor_constant(&theta, s)?;
            let n = match as_integer(theta.sqrt_2alpha() + s * theta.sqrt_2gamma()) {
                Some(n) if n != 0 => n.abs(),
                _ => return Err(Error::ConditionViolation("need an integer N != 0".into())),
            };
            logs(vec![((0, 0, 0), y0), ((n, 0, 0), a)], 1, Some((n, 0, 0)))
        }
    };
    Ok(setup)
}

/// Solves `sum_j c_j col_j = -rhs` in the least-squares sense.
///
/// Columns are normalised before the SVD; a relative singular value below
/// `RANK_TOL` is a resonance, a residual above `CONSISTENCY_TOL` relative to
/// the right-hand side an obstruction.
pub(crate) fn solve_level(level: i32, cols: &[Vec<(Key, C64)>], rhs: &[(Key, C64)], floor: f64) -> Result<Vec<C64>> {
    let mut rows: BTreeMap<Key, usize> = BTreeMap::new();
    for (k, _) in rhs.iter().chain(cols.iter().flatten()) {
        let n = rows.len();
        rows.entry(*k).or_insert(n);
    }
    let b_norm = rhs.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt();
    if cols.is_empty() {
        if b_norm > CONSISTENCY_TOL * floor.max(f64::MIN_POSITIVE) {
            return Err(Error::Resonance { level, detail: "obstruction with no free coefficient".into() });
        }
        return Ok(vec![]);
    }
    let (nr, nc) = (rows.len(), cols.len());
    let mut m = DMatrix::<C64>::zeros(nr, nc);
    let mut norms = vec![0.0; nc];
    for (j, col) in cols.iter().enumerate() {
        norms[j] = col.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt();
        if norms[j] == 0.0 {
            return Err(Error::Resonance { level, detail: format!("coefficient {j} does not enter the equations") });
        }
        for (k, v) in col {
            m[(rows[k], j)] += v / norms[j];
        }
    }
    let mut b = DVector::<C64>::zeros(nr);
    for (k, v) in rhs {
        b[rows[k]] -= v;
    }
    if nr < nc {
        return Err(Error::Resonance { level, detail: "underdetermined level".into() });
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin < RANK_TOL * smax {
        return Err(Error::Resonance { level, detail: format!("singular level system ({smin:.3e}/{smax:.3e})") });
    }
    let sol = svd.solve(&b, 0.0).map_err(|e| Error::Resonance { level, detail: e.to_string() })?;
    let res = (&m * &sol - &b).norm();
    if res > CONSISTENCY_TOL * b_norm.max(floor) {
        return Err(Error::Resonance { level, detail: format!("inconsistent level system (residual {res:.3e})") });
    }
    Ok(sol.iter().zip(&norms).map(|(v, n)| v / n).collect())
}

/// Finds the offset between a level and the weight of the equation that
/// determines it, from the lowest weight touched by the level's unknowns.
fn detect_shift(form: &ResidualForm, y: &Series, level: i32, unknowns: &[Key]) -> i32 {
    let probe_max = level + 6;
    let yy = y.with_max(probe_max);
    let jac = form.jacobian(&yy);
    let mut best = i32::MAX;
    for u in unknowns {
        let e = Series::monomial(yy.lat, probe_max, *u, cr(1.0));
        let col = column(&jac, &e);
        let scale = col.terms.values().map(|v| v.norm()).fold(0.0, f64::max);
        if let Some(w) = col.terms.iter().filter(|(_, v)| v.norm() > 1e-10 * scale).map(|(k, _)| col.weight_of(k)).min() {
            best = best.min(w - level);
        }
    }
    if best == i32::MAX {
        0
    } else {
        best
    }
}

fn column(jac: &[Series; 3], e: &Series) -> Series {
    let t1 = e.theta();
    let t2 = t1.theta();
    jac[0].mul(e).add(&jac[1].mul(&t1)).add(&jac[2].mul(&t2))
}

/// Runs the level recursion for a direct series.
fn run_engine(setup: &Setup) -> Result<(Series, Option<ResidualOrder>)> {
    let form = ResidualForm::new(&PviParameters::from_theta(setup.theta));
    let mut y = Series::zero(setup.lat, setup.end);
    for (k, v) in &setup.fixed {
        y.add_term(*k, *v);
    }
    // All fixed terms, whatever the truncation order.
    let mut full = Series::zero(setup.lat, setup.end.max(setup.start) + 8);
    for (k, v) in &setup.fixed {
        full.add_term(*k, *v);
    }
    let shift = (setup.start..=setup.start + 2)
        .filter_map(|n| {
            let u = (setup.unknowns)(n);
            (!u.is_empty()).then(|| detect_shift(&form, &full, n, &u))
        })
        .min()
        .unwrap_or(0);
    // Weights below the first solved one must vanish on the fixed terms.
    let first_w = setup.start + shift;
    let parts = form.eval_series_parts(&full.with_max(first_w + 1));
    let total = parts.total();
    let global = parts.parts.iter().flat_map(|p| p.terms.values()).map(|v| v.norm()).fold(0.0, f64::max);
    for w in total.min_weight().unwrap_or(first_w)..first_w {
        let r = total.max_abs_at_weight(w);
        let scale = parts.scale_at(w);
        if r > LEADING_TOL * scale && r > 1e-13 * global {
            return Err(Error::ConditionViolation(format!(
                "leading terms leave a residual {r:.3e} at weight {w} (scale {scale:.3e})"
            )));
        }
    }
    for n in setup.start..=setup.end {
        let w = n + shift;
        let yn = y.with_max(w);
        let parts = form.eval_series_parts(&yn);
        let total = parts.total();
        let rhs = total.at_weight(w);
        let unknowns = (setup.unknowns)(n);
        let jac = form.jacobian(&yn);
        let cols: Vec<Vec<(Key, C64)>> = unknowns
            .iter()
            .map(|u| column(&jac, &Series::monomial(yn.lat, w, *u, cr(1.0))).at_weight(w))
            .collect();
        let sol = solve_level(n, &cols, &rhs, 1e-9 * parts.scale_at(w))?;
        let big = sol.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (u, v) in unknowns.iter().zip(sol) {
            if v.norm() > 1e-14 * big {
                y.add_term(*u, v);
            }
        }
    }
    let residual = residual_order(&form, &y, setup.end + shift, setup.theta, setup.inverse);
    Ok((y, residual))
}

fn residual_order(form: &ResidualForm, y: &Series, last: i32, theta: Theta, via_swap: bool) -> Option<ResidualOrder> {
    let parts = form.eval_series_parts(&y.with_max(last + 3 + FORMAL_WEIGHTS));
    let total = parts.total();
    let significant = |w: i32| -> Vec<(Key, C64)> {
        let scale = parts.scale_at(w);
        total.at_weight(w).into_iter().filter(|(_, v)| v.norm() > 1e-13 * scale).collect()
    };
    let first = (last + 1..=last + 3).find(|w| !significant(*w).is_empty())?;
    let terms = significant(first);
    let mut leading = Series::zero(y.lat, first + FORMAL_WEIGHTS);
    for w in first..=first + FORMAL_WEIGHTS {
        for (k, v) in significant(w) {
            leading.add_term(k, v);
        }
    }
    let exponent = terms.iter().map(|(k, _)| y.lat.exponent(k.0, k.1).re).fold(f64::INFINITY, f64::min);
    let log_degree = terms.iter().map(|(k, _)| k.2).max().unwrap_or(0);
    Some(ResidualOrder { theta, leading, exponent, log_degree, via_swap })
}

const PROBE_POINTS: usize = 8;
const PROBE_RADIUS: f64 = 0.1;

/// Linear response of the residual to `v -> v + t e`, extracted exactly (up
/// to aliasing of degree `PROBE_POINTS`) from samples on a circle in `t`.
fn probe_column(form: &ResidualForm, ymap: &dyn Fn(&Series) -> Series, v: &Series, e: &Series) -> Series {
    let mut acc = Series::zero(v.lat, v.max_w);
    for j in 0..PROBE_POINTS {
        let t = C64::from_polar(PROBE_RADIUS, 2.0 * std::f64::consts::PI * j as f64 / PROBE_POINTS as f64);
        let r = form.eval_series(&ymap(&v.add(&e.scale(t))));
        acc = acc.add(&r.scale(1.0 / (t * PROBE_POINTS as f64)));
    }
    acc
}

/// Solves for a correction series `v` with unknowns at every key of total
/// grade `1..=end`, such that `ymap(v)` satisfies the equation weight by
/// weight. `ymap` must preserve the truncation weight of its argument.
///
/// The map may be nonlinear in `v`; each grade is solved by Newton steps
/// with Jacobian columns probed from the full map.
pub(crate) fn solve_by_probing(theta: Theta, lat: Lattice, end: i32, ymap: &dyn Fn(&Series) -> Series) -> Result<Series> {
    let form = ResidualForm::new(&PviParameters::from_theta(theta));
    let unknowns = |k: i32| -> Vec<Key> { (0..=k).map(|i| (i, k - i, 0)).collect() };
    let probe_w = 8;
    let v0 = Series::zero(lat, probe_w);
    let mut shift = i32::MAX;
    for u in unknowns(1) {
        let col = probe_column(&form, ymap, &v0, &Series::monomial(lat, probe_w, u, cr(1.0)));
        let scale = col.terms.values().map(|v| v.norm()).fold(0.0, f64::max);
        if let Some(w) = col.terms.iter().filter(|(_, v)| v.norm() > 1e-10 * scale).map(|(k, _)| col.weight_of(k)).min() {
            shift = shift.min(w - 1);
        }
    }
    if shift == i32::MAX {
        return Err(Error::Resonance { level: 1, detail: "correction does not enter the equation".into() });
    }
    let first_w = 1 + shift;
    let parts = form.eval_series_parts(&ymap(&Series::zero(lat, first_w)));
    let total = parts.total();
    for w in total.min_weight().unwrap_or(first_w)..first_w {
        let r = total.max_abs_at_weight(w);
        let scale = parts.scale_at(w);
        if r > LEADING_TOL * scale {
            return Err(Error::ConditionViolation(format!(
                "leading terms leave a residual {r:.3e} at weight {w} (scale {scale:.3e})"
            )));
        }
    }
    let mut v = Series::zero(lat, end);
    for k in 1..=end {
        let w = k + shift;
        let keys = unknowns(k);
        let mut converged = false;
        for _ in 0..8 {
            let vk = v.with_max(w);
            let parts = form.eval_series_parts(&ymap(&vk));
            let scale = parts.scale_at(w);
            let rhs = parts.total().at_weight(w);
            let size = rhs.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
            if size <= 1e-13 * scale {
                converged = true;
                break;
            }
            let cols: Vec<Vec<(Key, C64)>> = keys
                .iter()
                .map(|u| probe_column(&form, ymap, &vk, &Series::monomial(lat, w, *u, cr(1.0))).at_weight(w))
                .collect();
            let sol = solve_level(k, &cols, &rhs, 1e-9 * scale)?;
            for (u, c) in keys.iter().zip(sol) {
                v.add_term(*u, c);
            }
        }
        if !converged {
            return Err(Error::NoConvergence(8));
        }
    }
    Ok(v)
}

/// Computes the expansion of class `tag` at `point` up to level `order`.
pub fn expand_branch(
    tag: ClassTag,
    constants: &Constants,
    theta: &Theta,
    point: CriticalPoint,
    order: i32,
) -> Result<BranchExpansion> {
    if order < 0 {
        return Err(Error::Invalid("order must be nonnegative".into()));
    }
    let op = match point {
        CriticalPoint::Zero => None,
        CriticalPoint::One => Some(SymmetryOp::Permute01),
        CriticalPoint::Infinity => Some(SymmetryOp::InvertX),
    };
    if let Some(op) = op {
        let at_zero = expand_branch(tag, constants, &apply_to_theta(op, theta), CriticalPoint::Zero, order)?;
        return transport_expansion(op, &at_zero);
    }
    let setup = class_setup(tag, *theta, constants, order)?;
    let (y, residual) = run_engine(&setup)?;
    let mut consts = constants.clone();
    consts.extend(setup.derived.clone());
    let (form, series) = if setup.inverse { (Form::Inverse, y.shift_x(-1)) } else { (Form::Direct, y) };
    let radius = constants.get("r").map(|r| r.re).unwrap_or(DEFAULT_RADIUS);
    Ok(BranchExpansion {
        point,
        class: tag,
        constants: consts,
        theta: *theta,
        order,
        form,
        series,
        ops: vec![],
        residual,
        radius,
    })
}

/// `(A, phi, B)` of the oscillatory form of the `Re sigma = 0` branch with
/// gauge constant `a`, so that `a = A e^{i phi} / (2i)`.
pub fn sin_form_from_cosh_form(sigma: C64, a: C64, theta: &Theta) -> Result<SinForm> {
    if sigma.re.abs() > 1e-12 || sigma.norm() < 1e-14 {
        return Err(Error::ConditionViolation("need Re sigma = 0 and sigma != 0".into()));
    }
    nonzero(a, "a")?;
    let amplitude = (a_squared(sigma, theta) / (sigma * sigma)).sqrt();
    nonzero(amplitude, "A")?;
    let i = C64::i();
    let phase = -i * (2.0 * i * a / amplitude).ln();
    Ok(SinForm { amplitude, phase, b: b_coefficient(sigma, theta) })
}

impl SinForm {
    /// `A sin(i sigma ln x + phi) + B` at the covering logarithm `lx`.
    pub fn value(&self, sigma: C64, lx: C64) -> C64 {
        self.amplitude * (C64::i() * sigma * lx + self.phase).sin() + self.b
    }
}

impl BranchExpansion {
    pub fn constant(&self, name: &str) -> Option<C64> {
        self.constants.get(name).copied()
    }

    /// The coefficient table, sorted by key.
    pub fn coefficients(&self) -> Vec<(Key, C64)> {
        self.series.terms.iter().map(|(k, v)| (*k, *v)).collect()
    }

    /// Point at which the untransported expansion is evaluated.
    pub fn inner_point(&self, x: CoveringPoint) -> CoveringPoint {
        self.ops.iter().rev().fold(x, |p, op| apply_to_covering(*op, p))
    }

    fn in_domain(&self, x: CoveringPoint) -> bool {
        if self.class == ClassTag::PowerGeneric && self.ops.is_empty() {
            if let (Some(s), Some(a)) = (self.constant("sigma"), self.constant("a")) {
                return crate::shimomura::CriticalDomain::new(s, a, self.radius).contains(x);
            }
        }
        x.abs() < self.radius
    }

    /// Value of the untransported series and its tail at the inner point.
    fn inner_value(&self, x: CoveringPoint) -> Result<(C64, f64)> {
        let lx = x.log();
        let (s, tail) = self.series.eval_with_tail(lx);
        match self.form {
            Form::Direct => Ok((s, tail)),
            Form::Inverse => {
                let scale = self.series.terms.values().map(|v| v.norm()).fold(0.0, f64::max);
                if s.norm() < 1e-12 * scale.max(1.0) {
                    return Err(Error::DenominatorNearZero(s.norm()));
                }
                Ok((1.0 / s, tail / s.norm_sqr()))
            }
        }
    }

    /// Sums the truncated expansion at a covering point.
    pub fn evaluate(&self, x: CoveringPoint) -> Result<Evaluation> {
        let x0 = self.inner_point(x);
        let mut warnings = vec![];
        if !self.in_domain(x0) {
            warnings.push(Warning::OutsideDomain);
        }
        if self.class.is_logarithmic() {
            warnings.push(Warning::AsymptoticOnly);
        }
        let (mut y, mut err) = self.inner_value(x0)?;
        let mut xc = x0;
        for op in &self.ops {
            let xv = xc.to_complex();
            let (_, yn) = apply_to_point(*op, xv, y)?;
            err *= match op {
                SymmetryOp::Permute01 => 1.0,
                SymmetryOp::InvertX => 1.0 / xv.norm(),
                SymmetryOp::SwapXY => xv.norm() / y.norm_sqr(),
            };
            y = yn;
            xc = apply_to_covering(*op, xc);
        }
        Ok(Evaluation { value: y, error: err, warnings })
    }

    pub fn evaluate_complex(&self, x: C64) -> Result<Evaluation> {
        self.evaluate(CoveringPoint::from_complex(x))
    }

    /// `(y, y', y'')` of an untransported expansion.
    pub fn jet(&self, x: CoveringPoint) -> Result<(C64, C64, C64)> {
        if !self.ops.is_empty() {
            return Err(Error::Invalid("jet of a transported expansion".into()));
        }
        let lx = x.log();
        let xv = x.to_complex();
        let t1 = self.series.theta();
        let t2 = t1.theta();
        let (s, s1, s2) = (self.series.eval(lx), t1.eval(lx), t2.eval(lx));
        let d1 = s1 / xv;
        let d2 = (s2 - s1) / (xv * xv);
        match self.form {
            Form::Direct => Ok((s, d1, d2)),
            Form::Inverse => {
                if s.norm() == 0.0 {
                    return Err(Error::DenominatorNearZero(0.0));
                }
                Ok((1.0 / s, -d1 / (s * s), (2.0 * d1 * d1 - s * d2) / (s * s * s)))
            }
        }
    }

    /// Residual of the equation on the truncated expansion.
    pub fn residual_at(&self, x: CoveringPoint) -> Result<C64> {
        let (y, d1, d2) = self.jet(x)?;
        let form = ResidualForm::new(&PviParameters::from_theta(self.theta));
        Ok(form.eval(x.to_complex(), y, d1, d2))
    }

    /// Residual in extended precision, the truncated series taken as exact.
    pub fn residual_at_ext(&self, x: CoveringPoint) -> Result<C64> {
        if !self.ops.is_empty() {
            return Err(Error::Invalid("residual of a transported expansion".into()));
        }
        let lx = XC64::new(XReal::from_f64(x.ln_abs), XReal::from_f64(x.arg));
        let xv = lx.exp();
        let t1 = self.series.theta();
        let t2 = t1.theta();
        let (s, s1, s2) = (self.series.eval_ext(&lx), t1.eval_ext(&lx), t2.eval_ext(&lx));
        let d1 = s1.clone() / xv.clone();
        let d2 = (s2 - s1) / (xv.clone() * xv.clone());
        let (y, dy, d2y) = match self.form {
            Form::Direct => (s, d1, d2),
            Form::Inverse => {
                let s2 = s.clone() * s.clone();
                let y = XC64::one() / s.clone();
                let dy = -(d1.clone() / s2.clone());
                let d2y = (d1.clone() * d1.scale(2.0) - s.clone() * d2) / (s2 * s);
                (y, dy, d2y)
            }
        };
        let form = ResidualForm::new(&PviParameters::from_theta(self.theta));
        Ok(form.eval_ext(&xv, &y, &dy, &d2y).to_c64())
    }

    /// Leading residual predicted by the recursion at `x`, its exponent
    /// `Re p` and log degree.
    pub fn predicted_residual(&self, x: CoveringPoint) -> Option<(C64, f64, u32)> {
        let r = self.residual.as_ref()?;
        if !self.ops.is_empty() {
            return None;
        }
        let lx = x.log();
        let lead = r.leading.eval(lx);
        if !r.via_swap {
            return Some((lead, r.exponent, r.log_degree));
        }
        // R(x / Y) = -x^3 Y^{-6} R'(Y) with Y = x D.
        let d = self.series.eval(lx);
        let xv = x.to_complex();
        Some((-lead / (xv * xv * xv * d.powi(6)), r.exponent - 3.0, r.log_degree))
    }

    /// Value with the first level summed in oscillatory form, for the
    /// `Re sigma = 0` generic class.
    pub fn evaluate_sin_form(&self, x: CoveringPoint) -> Result<C64> {
        let (sigma, a) = match (self.class, self.constant("sigma"), self.constant("a")) {
            (ClassTag::PowerGeneric, Some(s), Some(a)) if self.ops.is_empty() => (s, a),
            _ => return Err(Error::Invalid("sin form needs an untransported generic class".into())),
        };
        let sf = sin_form_from_cosh_form(sigma, a, &self.theta)?;
        let lx = x.log();
        let mut rest = self.series.clone();
        rest.terms.retain(|k, _| k.0 != 1);
        Ok(x.to_complex() * sf.value(sigma, lx) + rest.eval(lx))
    }

    pub fn to_json(&self) -> Value {
        let cj = |z: &C64| json!([z.re, z.im]);
        let coeffs: serde_json::Map<String, Value> =
            self.series.terms.iter().map(|(k, v)| (format!("{},{},{}", k.0, k.1, k.2), cj(v))).collect();
        let consts: serde_json::Map<String, Value> = self.constants.iter().map(|(k, v)| (k.clone(), cj(v))).collect();
        json!({
            "class": self.class,
            "point": self.point,
            "theta": self.theta.to_array().iter().map(cj).collect::<Vec<_>>(),
            "constants": consts,
            "order": self.order,
            "form": self.form,
            "ops": self.ops,
            "lattice": self.series.lat,
            "max_weight": self.series.max_w,
            "radius": self.radius,
            "coefficients": coeffs,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        fn de<T: serde::de::DeserializeOwned>(v: &Value, name: &str) -> Result<T> {
            let f = v.get(name).ok_or_else(|| Error::Invalid(format!("bad expansion json: {name}")))?;
            serde_json::from_value(f.clone()).map_err(|e| Error::Invalid(format!("bad expansion json: {name}: {e}")))
        }
        let bad = |what: &str| Error::Invalid(format!("bad expansion json: {what}"));
        let cz = |v: &Value| -> Result<C64> {
            let a = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("complex"))?;
            Ok(C64::new(a[0].as_f64().ok_or_else(|| bad("re"))?, a[1].as_f64().ok_or_else(|| bad("im"))?))
        };
        let field = |name: &str| v.get(name).ok_or_else(|| bad(name));
        let th: Vec<C64> = field("theta")?.as_array().ok_or_else(|| bad("theta"))?.iter().map(cz).collect::<Result<_>>()?;
        if th.len() != 4 {
            return Err(bad("theta"));
        }
        let mut constants = Constants::new();
        for (k, c) in field("constants")?.as_object().ok_or_else(|| bad("constants"))? {
            constants.insert(k.clone(), cz(c)?);
        }
        let lat: Lattice = de(v, "lattice")?;
        let max_w = field("max_weight")?.as_i64().ok_or_else(|| bad("max_weight"))? as i32;
        let mut series = Series::zero(lat, max_w);
        for (k, c) in field("coefficients")?.as_object().ok_or_else(|| bad("coefficients"))? {
            let parts: Vec<&str> = k.split(',').collect();
            if parts.len() != 3 {
                return Err(bad("coefficient key"));
            }
            let key: Key = (
                parts[0].trim().parse().map_err(|_| bad("key"))?,
                parts[1].trim().parse().map_err(|_| bad("key"))?,
                parts[2].trim().parse().map_err(|_| bad("key"))?,
            );
            series.set(key, cz(c)?);
        }
        Ok(BranchExpansion {
            point: de(v, "point")?,
            class: de(v, "class")?,
            constants,
            theta: Theta::new(th[0], th[1], th[2], th[3]),
            order: field("order")?.as_i64().ok_or_else(|| bad("order"))? as i32,
            form: de(v, "form")?,
            series,
            ops: de(v, "ops")?,
            residual: None,
            radius: field("radius")?.as_f64().ok_or_else(|| bad("radius"))?,
        })
    }
}
