//! Adaptive Dormand-Prince 5(4) integration of the equation along complex
//! polylines, with chart switching through poles and power-law and
//! oscillation fits near `x = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{PviParameters, Theta};
use crate::symmetry::{apply_to_state, apply_to_theta, SymmetryOp};
use crate::C64;

/// Closest admissible approach to `x = 0, 1`.
pub const SINGULAR_DISTANCE: f64 = 1e-6;
/// The working variable is abandoned once its modulus exceeds this.
pub const CHART_BOUND: f64 = 1e3;
/// A chart entered to pass a pole hands back to `y` once `|y|` drops below this.
const RETURN_BOUND: f64 = 1e2;
pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_STEPS: usize = 2_000_000;

/// Right-hand side `y''` of the equation with coefficients
/// `c = [alpha, beta, gamma, delta]`.
pub fn second_derivative(c: &[C64; 4], x: C64, y: C64, dy: C64) -> C64 {
    let [alpha, beta, gamma, delta] = *c;
    let (ym1, ymx, xm1) = (y - 1.0, y - x, x - 1.0);
    let quad = 0.5 * (1.0 / y + 1.0 / ym1 + 1.0 / ymx) * dy * dy;
    let lin = (1.0 / x + 1.0 / xm1 + 1.0 / ymx) * dy;
    let bracket = alpha + beta * x / (y * y) + gamma * xm1 / (ym1 * ym1) + delta * x * xm1 / (ymx * ymx);
    quad - lin + y * ym1 * ymx / (x * x * xm1 * xm1) * bracket
}

/// Working variable of the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// `w = y`.
    Y,
    /// `w = x / y`, a solution of the swapped equation.
    SwapXY,
    /// `w = 1 / y`.
    InvY,
    /// `w = y - 1`.
    ShiftY,
}

impl Chart {
    pub fn tag(self) -> &'static str {
        match self {
            Chart::Y => "y",
            Chart::SwapXY => "x/y",
            Chart::InvY => "1/y",
            Chart::ShiftY => "y-1",
        }
    }

    /// Chart taken over when `|w|` exceeds [`CHART_BOUND`].
    fn escape(self) -> Chart {
        match self {
            Chart::Y | Chart::ShiftY => Chart::SwapXY,
            Chart::SwapXY | Chart::InvY => Chart::Y,
        }
    }

    /// `(w, w')` from `(y, y')`.
    pub fn to_working(self, x: C64, y: C64, dy: C64) -> Result<(C64, C64)> {
        match self {
            Chart::Y => Ok((y, dy)),
            Chart::ShiftY => Ok((y - 1.0, dy)),
            Chart::SwapXY => apply_to_state(SymmetryOp::SwapXY, x, y, dy).map(|(_, w, dw)| (w, dw)),
            Chart::InvY => {
                if y.norm() == 0.0 {
                    return Err(Error::DivisionByZero("1/y chart at y = 0"));
                }
                Ok((1.0 / y, -dy / (y * y)))
            }
        }
    }

    /// `(y, y')` from `(w, w')`; every map is an involution up to the shift.
    pub fn from_working(self, x: C64, w: C64, dw: C64) -> Result<(C64, C64)> {
        match self {
            Chart::ShiftY => Ok((w + 1.0, dw)),
            other => other.to_working(x, w, dw),
        }
    }
}

/// Working-chart equation: `w'' = f(x, w, w')`.
struct ChartRhs {
    plain: [C64; 4],
    swapped: [C64; 4],
}

impl ChartRhs {
    fn new(theta: &Theta) -> Self {
        let swapped = PviParameters::from_theta(apply_to_theta(SymmetryOp::SwapXY, theta));
        ChartRhs { plain: PviParameters::from_theta(*theta).coefficients(), swapped: swapped.coefficients() }
    }

    fn eval(&self, chart: Chart, x: C64, w: C64, dw: C64) -> C64 {
        match chart {
            Chart::Y => second_derivative(&self.plain, x, w, dw),
            Chart::ShiftY => second_derivative(&self.plain, x, w + 1.0, dw),
            Chart::SwapXY => second_derivative(&self.swapped, x, w, dw),
            Chart::InvY => {
                let y = 1.0 / w;
                let ypp = second_derivative(&self.plain, x, y, -dw * y * y);
                -w * w * ypp + 2.0 * dw * dw / w
            }
        }
    }
}

/// One accepted integration point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: C64,
    pub y: C64,
    pub dy: C64,
    pub chart: Chart,
    pub w: C64,
    pub dw: C64,
}

/// A change of working variable at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartSwitch {
    pub x: C64,
    pub from: Chart,
    pub to: Chart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub theta: Theta,
    pub tol: f64,
    pub samples: Vec<Sample>,
    pub switches: Vec<ChartSwitch>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory holds its initial point")
    }

    /// Cubic Hermite interpolant of `y` at fraction `s` of the way from
    /// sample `i` to sample `i + 1`; `None` across a chart switch.
    pub fn dense(&self, i: usize, s: f64) -> Option<(C64, C64)> {
        let (a, b) = (self.samples.get(i)?, self.samples.get(i + 1)?);
        if a.chart != b.chart {
            return None;
        }
        let h = b.x - a.x;
        let (s2, s3) = (s * s, s * s * s);
        let w = a.w * (2.0 * s3 - 3.0 * s2 + 1.0)
            + a.dw * h * (s3 - 2.0 * s2 + s)
            + b.w * (-2.0 * s3 + 3.0 * s2)
            + b.dw * h * (s3 - s2);
        let x = a.x + h * s;
        let (y, _) = a.chart.from_working(x, w, C64::new(0.0, 0.0)).ok()?;
        Some((x, y))
    }

    /// Image of the trajectory under a symmetry, in the `y` chart of the
    /// transformed equation.
    pub fn map(&self, op: SymmetryOp) -> Result<Trajectory> {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let (x, y, dy) = apply_to_state(op, s.x, s.y, s.dy)?;
                Ok(Sample { x, y, dy, chart: Chart::Y, w: y, dw: dy })
            })
            .collect::<Result<_>>()?;
        Ok(Trajectory { theta: apply_to_theta(op, &self.theta), tol: self.tol, samples, switches: vec![] })
    }
}

fn distance_to_segment(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn check_path(x0: C64, path: &[C64]) -> Result<()> {
    if path.is_empty() {
        return Err(Error::Invalid("empty path".into()));
    }
    let mut a = x0;
    for &b in path {
        for s in [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] {
            if distance_to_segment(s, a, b) < SINGULAR_DISTANCE {
                return Err(Error::SingularityOnPath(s));
            }
        }
        a = b;
    }
    Ok(())
}

/// Integrates from `(x0, y0, y0')` along the polyline `x0 -> path[0] -> ...`
/// with local tolerance `tol`, starting in the `y` chart.
pub fn integrate(params: &PviParameters, x0: C64, y0: C64, dy0: C64, path: &[C64], tol: f64) -> Result<Trajectory> {
    let scale = 1e-14 * (1.0 + x0.norm());
    for (v, name) in [(y0, "0"), (y0 - 1.0, "1"), (y0 - x0, "x0")] {
        if v.norm() < scale {
            return Err(Error::Invalid(format!("y0 coincides with {name}; start in another chart")));
        }
    }
    integrate_in_chart(&params.theta, Chart::Y, x0, y0, dy0, path, tol)
}

/// Integrates starting from working-chart data `(w0, w0')`.
pub fn integrate_in_chart(
    theta: &Theta,
    chart: Chart,
    x0: C64,
    w0: C64,
    dw0: C64,
    path: &[C64],
    tol: f64,
) -> Result<Trajectory> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Invalid("tol must lie in (0, 1)".into()));
    }
    check_path(x0, path)?;
    let rhs = ChartRhs::new(theta);
    let (y, dy) = chart.from_working(x0, w0, dw0)?;
    let mut traj = Trajectory {
        theta: *theta,
        tol,
        samples: vec![Sample { x: x0, y, dy, chart, w: w0, dw: dw0 }],
        switches: vec![],
    };
    let mut state = Stepper { chart, x: x0, w: w0, dw: dw0, h: 0.0, steps: 0, escaped: false };
    let mut a = x0;
    for &b in path {
        state.segment(&rhs, a, b, tol, &mut traj)?;
        a = b;
    }
    Ok(traj)
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

struct Stepper {
    chart: Chart,
    x: C64,
    w: C64,
    dw: C64,
    /// Last accepted step length, carried across segments.
    h: f64,
    steps: usize,
    /// The current chart was entered through a pole of `y`.
    escaped: bool,
}

impl Stepper {
    /// One trial step of arclength `h` in direction `e`: returns the new
    /// state and the scaled error estimate.
    fn trial(&self, rhs: &ChartRhs, e: C64, h: f64, tol: f64) -> (C64, C64, f64) {
        let mut k = [[C64::new(0.0, 0.0); 2]; 7];
        for i in 0..7 {
            let (mut w, mut dw) = (self.w, self.dw);
            for j in 0..i {
                w += h * A[i][j] * k[j][0];
                dw += h * A[i][j] * k[j][1];
            }
            let x = self.x + e * (C[i] * h);
            k[i] = [e * dw, e * rhs.eval(self.chart, x, w, dw)];
        }
        let (mut w5, mut dw5, mut ew, mut edw) = (self.w, self.dw, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for i in 0..7 {
            w5 += h * B5[i] * k[i][0];
            dw5 += h * B5[i] * k[i][1];
            ew += h * (B5[i] - B4[i]) * k[i][0];
            edw += h * (B5[i] - B4[i]) * k[i][1];
        }
        let sw = tol * (1.0 + self.w.norm().max(w5.norm()));
        let sdw = tol * (1.0 + self.dw.norm().max(dw5.norm()));
        let err = (ew.norm() / sw).max(edw.norm() / sdw);
        (w5, dw5, if err.is_finite() { err } else { f64::INFINITY })
    }

    fn segment(&mut self, rhs: &ChartRhs, a: C64, b: C64, tol: f64, traj: &mut Trajectory) -> Result<()> {
        let len = (b - a).norm();
        if len == 0.0 {
            return Ok(());
        }
        let e = (b - a) / len;
        let mut s = 0.0;
        if self.h == 0.0 {
            self.h = (0.01 * self.x.norm().max(1e-3)).min(len);
        }
        while s < len {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::NoConvergence(MAX_STEPS));
            }
            let last = len - s <= self.h;
            let h = if last { len - s } else { self.h };
            let (w, dw, err) = self.trial(rhs, e, h, tol);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err > 1.0 {
                self.h = h * factor;
                if self.h < 1e-14 * self.x.norm().max(1e-300) {
                    return Err(Error::StepUnderflow(self.x));
                }
                continue;
            }
            s = if last { len } else { s + h };
            self.x = if last { b } else { a + e * s };
            self.w = w;
            self.dw = dw;
            if !last || factor < 1.0 {
                self.h = h * factor;
            }
            let (y, dy) = self.chart.from_working(self.x, self.w, self.dw)?;
            let to = if self.w.norm() > CHART_BOUND {
                Some(self.chart.escape())
            } else if self.escaped && y.norm() < RETURN_BOUND {
                Some(Chart::Y)
            } else {
                None
            };
            if let Some(to) = to {
                let (nw, ndw) = to.to_working(self.x, y, dy)?;
                traj.switches.push(ChartSwitch { x: self.x, from: self.chart, to });
                self.escaped = to != Chart::Y;
                self.chart = to;
                self.w = nw;
                self.dw = ndw;
            }
            traj.samples.push(Sample { x: self.x, y, dy, chart: self.chart, w: self.w, dw: self.dw });
        }
        Ok(())
    }
}

/// Root-mean-square misfit above which a trajectory is not a power law.
pub const POWER_LAW_TOL: f64 = 1e-3;

/// Slope of `ln y` against `ln |x|` over the last decade of samples
/// approaching `x = 0`: an estimate of `1 - sigma`.
pub fn fit_critical_exponent(traj: &Trajectory) -> Result<C64> {
    let rmin = traj.samples.iter().map(|s| s.x.norm()).fold(f64::INFINITY, f64::min);
    let mut pts = vec![];
    let mut prev: Option<C64> = None;
    for s in &traj.samples {
        if s.y.norm() == 0.0 || !s.y.is_finite() {
            continue;
        }
        // Continuous branch of ln y along the trajectory.
        let mut ly = s.y.ln();
        if let Some(p) = prev {
            let turns = ((p.im - ly.im) / (2.0 * std::f64::consts::PI)).round();
            ly.im += turns * 2.0 * std::f64::consts::PI;
        }
        prev = Some(ly);
        if s.x.norm() <= 10.0 * rmin {
            pts.push((s.x.norm().ln(), ly));
        }
    }
    if pts.len() < 4 {
        return Err(Error::Invalid("fewer than four samples in the last decade".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<C64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("samples do not spread in |x|".into()));
    }
    let slope = pts.iter().map(|p| (p.1 - my) * (p.0 - mx)).sum::<C64>() / sxx;
    let rms = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).norm_sqr()).sum::<f64>() / n).sqrt();
    if rms > POWER_LAW_TOL {
        return Err(Error::NonPowerLaw(rms));
    }
    Ok(slope)
}

/// `y / x = A sin(2 nu ln x + phi) + B` fitted to a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationFit {
    pub nu: f64,
    /// Determined modulo `pi`; `Re phi` in `[0, pi)`.
    pub phi: C64,
    pub amplitude: C64,
    pub b: C64,
    /// Relative root-mean-square misfit.
    pub residual: f64,
}

const NU_GRID: (f64, f64, usize) = (0.02, 4.0, 800);
const OSCILLATION_TOL: f64 = 1e-2;

/// Linear least squares in `(P, Q, B)` of `z = P sin(2 nu L) + Q cos(2 nu L) + B`.
fn oscillation_lsq(data: &[(C64, C64)], nu: f64) -> Option<([C64; 3], f64)> {
    let m = DMatrix::<C64>::from_fn(data.len(), 3, |i, j| {
        let arg = 2.0 * nu * data[i].0;
        match j {
            0 => arg.sin(),
            1 => arg.cos(),
            _ => C64::new(1.0, 0.0),
        }
    });
    let rhs = DVector::<C64>::from_iterator(data.len(), data.iter().map(|d| d.1));
    let sol = m.clone().svd(true, true).solve(&rhs, 1e-14).ok()?;
    let misfit = (m * &sol - &rhs).norm();
    Some(([sol[0], sol[1], sol[2]], misfit))
}

/// Nonlinear fit of `y / x` to `A sin(2 nu ln x + phi) + B` with real
/// `nu > 0`: a grid in `nu`, refined by golden-section search.
pub fn fit_oscillation(traj: &Trajectory) -> Result<OscillationFit> {
    let mut lx_prev: Option<C64> = None;
    let data: Vec<(C64, C64)> = traj
        .samples
        .iter()
        .filter(|s| s.y.is_finite())
        .map(|s| {
            // Continuous ln x along the path.
            let mut l = s.x.ln();
            if let Some(p) = lx_prev {
                l.im += ((p.im - l.im) / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI;
            }
            lx_prev = Some(l);
            (l, s.y / s.x)
        })
        .collect();
    if data.len() < 8 {
        return Err(Error::Invalid("too few samples for an oscillation fit".into()));
    }
    let norm = data.iter().map(|d| d.1.norm_sqr()).sum::<f64>().sqrt();
    let cost = |nu: f64| oscillation_lsq(&data, nu).map_or(f64::INFINITY, |r| r.1);
    let (lo, hi, n) = NU_GRID;
    let step = (hi - lo) / n as f64;
    let (best, _) = (0..=n)
        .map(|i| lo + step * i as f64)
        .map(|nu| (nu, cost(nu)))
        .fold((lo, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
    if best <= lo || best >= hi {
        return Err(Error::FitDivergence);
    }
    let (mut a, mut b) = (best - step, best + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let nu = 0.5 * (a + b);
    let ([p, q, bb], misfit) = oscillation_lsq(&data, nu).ok_or(Error::FitDivergence)?;
    let residual = misfit / norm;
    if residual.is_nan() || residual >= OSCILLATION_TOL {
        return Err(Error::FitDivergence);
    }
    // P + iQ = A e^(i phi), P - iQ = A e^(-i phi).
    let i = C64::i();
    let (plus, minus) = (p + i * q, p - i * q);
    let mut phi = (plus / minus).ln() / (2.0 * i);
    phi.re = phi.re.rem_euclid(std::f64::consts::PI);
    let amplitude = plus * (-i * phi).exp();
    Ok(OscillationFit { nu, phi, amplitude, b: bb, residual })
}
