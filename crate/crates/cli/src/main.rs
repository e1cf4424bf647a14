//! Command-line front end for the pvi library.

mod check;
mod parse;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pvi::elliptic::{half_periods, half_periods_covering, power_dictionary, EllipticBranch};
use pvi::lattice::CoveringPoint;
use pvi::monodromy::{fricke_residual, PairTrace, FRICKE_TOL};
use pvi::ode::{integrate, DEFAULT_TOL};
use pvi::params::trace_from_theta;
use pvi::poles::{
    cp2_reference_constants, pole_corrections, radius_upper_bound, reciprocal_coefficients, refine_pole, zero_lattice,
};
use pvi::series::{expand_branch, Constants};
use pvi::shimomura::{classify_approach, CriticalDomain, DEFAULT_RADIUS};
use pvi::symmetry::{apply_to_point, apply_to_theta, apply_to_traces_with_theta, map_critical_point};
use pvi::{BranchExpansion, ClassTag, CriticalPoint, Error, MonodromyData, PviParameters, Result, SymmetryOp, Theta, C64};

use output::{cjson, num, render, Csv};

/// Environment variable holding the default integration tolerance.
const TOL_ENV: &str = "PVI_TOL";

#[derive(Parser)]
#[command(name = "pvi", version, about = "Critical behaviours of Painleve VI transcendents")]
struct Cli {
    /// Output file, `-` for standard output.
    #[arg(long, global = true, default_value = "-")]
    out: String,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct ParamArgs {
    /// Exponents `theta0,thetax,theta1,theta_inf`.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Coefficients `alpha,beta,gamma,delta`.
    #[arg(long, allow_hyphen_values = true)]
    coeffs: Option<String>,
    /// JSON file with a `theta` array or `alpha`, `beta`, `gamma`, `delta` entries.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct PointArgs {
    /// A point of the plane, principal sheet.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// `ln |x|` of a covering point (with `--arg`).
    #[arg(long, allow_hyphen_values = true)]
    ln_abs: Option<f64>,
    /// `arg x` of a covering point, unbounded.
    #[arg(long, allow_hyphen_values = true)]
    arg: Option<f64>,
}

#[derive(Args, Clone)]
struct ExpandArgs {
    /// Behaviour class, e.g. `power`, `invosc`, `taylor6`, `log2`.
    #[arg(long)]
    class: Option<String>,
    /// Integration constants `name=value`, repeatable.
    #[arg(long = "const", allow_hyphen_values = true)]
    constants: Vec<String>,
    #[arg(long, default_value_t = 4)]
    order: i32,
    /// Critical point: `zero`, `one` or `inf`.
    #[arg(long, default_value = "zero")]
    point: String,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Subcommand)]
enum Cmd {
    /// Converts between the coefficient and exponent forms of the parameters.
    Params(ParamArgs),
    /// Evaluates the Fricke cubic, or completes a missing pair trace.
    Fricke {
        /// `p0,px,p1,pinf,p0x,px1,p01`, or six values with `--complete`.
        #[arg(long, allow_hyphen_values = true)]
        traces: Option<String>,
        /// Uses the identity monodromy (all traces 2).
        #[arg(long)]
        identity: bool,
        /// JSON payload with the seven traces as `[re, im]` pairs.
        #[arg(long)]
        payload: Option<PathBuf>,
        /// Pair trace to solve for: `p0x`, `px1` or `p01`.
        #[arg(long)]
        complete: Option<String>,
    },
    /// Applies a symmetry to parameters, traces and points.
    Symmetry {
        /// `permute01`, `invertx` or `swapxy`.
        #[arg(long)]
        op: String,
        #[command(flatten)]
        params: ParamArgs,
        /// Pair traces `p0x,px1,p01` to transform with the parameters.
        #[arg(long, allow_hyphen_values = true)]
        pairs: Option<String>,
        /// A point `x,y` to transform.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
    },
    /// Computes the truncated expansion of a behaviour class.
    Expand(ExpandArgs),
    /// Evaluates an expansion, from a file or built inline.
    Eval {
        /// Expansion JSON written by `expand`.
        #[arg(long)]
        expansion: Option<PathBuf>,
        #[command(flatten)]
        build: ExpandArgs,
        #[command(flatten)]
        at: PointArgs,
    },
    /// Convergence domain of the power representation on the covering.
    Domain {
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        r: f64,
        #[command(flatten)]
        at: PointArgs,
        /// Emits the boundary polylines as CSV from this `ln|x|` up to `ln r`.
        #[arg(long, allow_hyphen_values = true)]
        boundary: Option<f64>,
    },
    /// Classifies a straight approach to zero in the `(ln|x|, Im sigma arg x)` plane.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[arg(long, allow_hyphen_values = true)]
        slope: f64,
    },
    /// Evaluates the elliptic representation.
    Elliptic {
        #[arg(long, allow_hyphen_values = true)]
        nu1: String,
        #[arg(long, allow_hyphen_values = true)]
        nu2: String,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 6)]
        order: i32,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        r: f64,
        #[command(flatten)]
        at: PointArgs,
    },
    /// Half-periods `omega1 = (pi/2) F(x)`, `omega2 = i (pi/2) F(1 - x)`.
    Halfperiods {
        #[command(flatten)]
        at: PointArgs,
    },
    /// Zero and pole lattices of the inverse-oscillatory branch, as CSV.
    Poles {
        /// `cp2` for the quantum-cohomology branch.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        nu: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Lattice indices, `a..b` or a single `k`.
        #[arg(long, default_value = "0..3")]
        k: String,
    },
    /// Integrates the equation along a polyline, as CSV.
    Integrate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, allow_hyphen_values = true)]
        y0: String,
        #[arg(long, allow_hyphen_values = true)]
        dy0: String,
        /// Waypoints `x1,x2,...`.
        #[arg(long, allow_hyphen_values = true)]
        path: String,
        /// Local tolerance; defaults to the `PVI_TOL` environment variable or 1e-10.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Cross-module consistency suites, and golden examples with `--golden`.
    Check {
        #[arg(long)]
        golden: bool,
    },
}

/// Failure of a command: validation errors exit with 2, numerical ones with 1.
struct Failure {
    kind: String,
    message: String,
    code: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("Error").to_string();
        let code = match e {
            Error::Invalid(_)
            | Error::ConditionViolation(_)
            | Error::ThetaInfZero
            | Error::BoundaryClass { .. }
            | Error::DivisionByZero(_)
            | Error::OutsideDomain
            | Error::SingularityOnPath(_)
            | Error::DegenerateDenominator => 2,
            _ => 1,
        };
        Failure { kind, message: e.to_string(), code }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { kind: "Io".into(), message: e.to_string(), code: 2 }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn read_json(path: &PathBuf) -> CmdResult<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())).into())
}

fn json_complex(v: &Value) -> Result<C64> {
    if let Some(x) = v.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    let a = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| invalid("complex numbers are [re, im] pairs"))?;
    match (a[0].as_f64(), a[1].as_f64()) {
        (Some(re), Some(im)) => Ok(C64::new(re, im)),
        _ => Err(invalid("complex numbers are [re, im] pairs")),
    }
}

impl ParamArgs {
    fn resolve_or(&self, default: Option<Theta>) -> CmdResult<PviParameters> {
        let given = [self.theta.is_some(), self.coeffs.is_some(), self.params.is_some()].iter().filter(|b| **b).count();
        if given > 1 {
            return Err(invalid("give only one of --theta, --coeffs, --params").into());
        }
        if let Some(t) = &self.theta {
            let [a, b, c, d] = parse::complex_array::<4>(t, "--theta")?;
            return Ok(PviParameters::from_theta(Theta::new(a, b, c, d)));
        }
        if let Some(c) = &self.coeffs {
            let [a, b, g, d] = parse::complex_array::<4>(c, "--coeffs")?;
            return Ok(PviParameters::from_coefficients(a, b, g, d));
        }
        if let Some(p) = &self.params {
            let v = read_json(p)?;
            if let Some(t) = v.get("theta").and_then(Value::as_array) {
                let t: Vec<C64> = t.iter().map(json_complex).collect::<Result<_>>()?;
                if t.len() != 4 {
                    return Err(invalid("theta needs four entries").into());
                }
                return Ok(PviParameters::from_theta(Theta::new(t[0], t[1], t[2], t[3])));
            }
            let get = |k: &str| v.get(k).ok_or_else(|| invalid(format!("missing {k}"))).and_then(json_complex);
            return Ok(PviParameters::from_coefficients(get("alpha")?, get("beta")?, get("gamma")?, get("delta")?));
        }
        default.map(PviParameters::from_theta).ok_or_else(|| invalid("parameters required (--theta, --coeffs or --params)").into())
    }

    fn resolve(&self) -> CmdResult<PviParameters> {
        self.resolve_or(None)
    }
}

impl PointArgs {
    fn covering(&self) -> CmdResult<CoveringPoint> {
        match (&self.x, self.ln_abs, self.arg) {
            (Some(x), None, None) => Ok(CoveringPoint::from_complex(parse::complex(x)?)),
            (None, Some(l), a) => Ok(CoveringPoint::new(l, a.unwrap_or(0.0))),
            _ => Err(invalid("give either --x or --ln-abs [--arg]").into()),
        }
    }

    fn given(&self) -> bool {
        self.x.is_some() || self.ln_abs.is_some()
    }
}

fn critical_point(s: &str) -> Result<CriticalPoint> {
    match s.to_ascii_lowercase().as_str() {
        "0" | "zero" => Ok(CriticalPoint::Zero),
        "1" | "one" => Ok(CriticalPoint::One),
        "inf" | "infinity" => Ok(CriticalPoint::Infinity),
        other => Err(invalid(format!("unknown critical point {other}"))),
    }
}

fn covering_json(x: CoveringPoint) -> Value {
    json!({"ln_abs": x.ln_abs, "arg": x.arg, "x": cjson(x.to_complex())})
}

/// Parameters of the equation with `theta = (0, 0, 0, 1)` (`alpha = beta =
/// gamma = 0`, `delta = 1/2`), the default for `expand` and `eval`.
fn default_theta() -> Theta {
    Theta::real(0.0, 0.0, 0.0, 1.0)
}

impl ExpandArgs {
    fn build(&self) -> CmdResult<BranchExpansion> {
        let class = self.class.as_ref().ok_or_else(|| invalid("--class is required"))?;
        let tag: ClassTag = class.parse()?;
        let mut constants = Constants::new();
        for c in &self.constants {
            let (k, v) = parse::constant(c)?;
            constants.insert(k, v);
        }
        let params = self.params.resolve_or(Some(default_theta()))?;
        Ok(expand_branch(tag, &constants, &params.theta, critical_point(&self.point)?, self.order)?)
    }
}

fn params_json(p: &PviParameters) -> Value {
    let t = p.theta;
    json!({
        "coefficients": {"alpha": cjson(p.alpha), "beta": cjson(p.beta), "gamma": cjson(p.gamma), "delta": cjson(p.delta)},
        "theta": t.to_array().map(cjson),
        "canonical_theta": t.canonicalize().to_array().map(cjson),
        "traces": trace_from_theta(&t).map(cjson),
    })
}

fn traces_json(d: &MonodromyData) -> Value {
    json!({
        "p0": cjson(d.p0), "px": cjson(d.px), "p1": cjson(d.p1), "pinf": cjson(d.p_inf),
        "p0x": cjson(d.p0x), "px1": cjson(d.px1), "p01": cjson(d.p01),
        "residual": cjson(fricke_residual(d)),
        "on_cubic": fricke_residual(d).norm() < FRICKE_TOL,
    })
}

fn cmd_fricke(traces: &Option<String>, identity: bool, payload: &Option<PathBuf>, complete: &Option<String>) -> CmdResult<Value> {
    let values: Vec<C64> = match (traces, identity, payload) {
        (Some(t), false, None) => parse::complex_list(t)?,
        (None, true, None) => vec![C64::new(2.0, 0.0); 7],
        (None, false, Some(p)) => {
            let v = read_json(p)?;
            let names = ["p0", "px", "p1", "pinf", "p0x", "px1", "p01"];
            names
                .iter()
                .filter_map(|k| v.get(*k))
                .map(json_complex)
                .collect::<Result<_>>()?
        }
        _ => return Err(invalid("give exactly one of --traces, --identity, --payload").into()),
    };
    match complete {
        None => {
            let v: [C64; 7] = values.try_into().map_err(|_| invalid("seven traces are needed"))?;
            Ok(traces_json(&MonodromyData::new([v[0], v[1], v[2], v[3]], v[4], v[5], v[6])))
        }
        Some(which) => {
            let missing = match which.as_str() {
                "p0x" => PairTrace::P0x,
                "px1" => PairTrace::Px1,
                "p01" => PairTrace::P01,
                other => return Err(invalid(format!("unknown pair trace {other}")).into()),
            };
            let v: [C64; 6] = values.try_into().map_err(|_| invalid("completion needs p0,px,p1,pinf and two pair traces"))?;
            let roots = MonodromyData::complete([v[0], v[1], v[2], v[3]], missing, v[4], v[5]);
            Ok(json!({"roots": roots.iter().map(traces_json).collect::<Vec<_>>()}))
        }
    }
}

fn cmd_symmetry(op: &str, params: &ParamArgs, pairs: &Option<String>, point: &Option<String>) -> CmdResult<Value> {
    let op: SymmetryOp = op.parse()?;
    let p = params.resolve()?;
    let image = apply_to_theta(op, &p.theta);
    let critical = [CriticalPoint::Zero, CriticalPoint::One, CriticalPoint::Infinity]
        .map(|c| format!("{:?}", map_critical_point(op, c)));
    let mut out = json!({
        "op": format!("{op:?}"),
        "theta": image.to_array().map(cjson),
        "coefficients": params_json(&PviParameters::from_theta(image))["coefficients"].clone(),
        "critical_points": critical,
    });
    if let Some(s) = pairs {
        let [p0x, px1, p01] = parse::complex_array::<3>(s, "--pairs")?;
        let d = MonodromyData::new(trace_from_theta(&p.theta), p0x, px1, p01);
        out["traces"] = traces_json(&apply_to_traces_with_theta(op, &d, &image));
    }
    if let Some(s) = point {
        let [x, y] = parse::complex_array::<2>(s, "--point")?;
        let (xn, yn) = apply_to_point(op, x, y)?;
        out["point"] = json!([cjson(xn), cjson(yn)]);
    }
    Ok(out)
}

fn evaluation_json(b: &BranchExpansion, x: CoveringPoint) -> CmdResult<Value> {
    let e = b.evaluate(x)?;
    Ok(json!({
        "x": covering_json(x),
        "value": cjson(e.value),
        "error": e.error,
        "warnings": e.warnings.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>(),
    }))
}

fn cmd_domain(sigma: &str, a: &str, r: f64, at: &PointArgs, boundary: Option<f64>) -> CmdResult<String> {
    let d = CriticalDomain::new(parse::complex(sigma)?, parse::complex(a)?, r);
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid("r must lie in (0, 1)").into());
    }
    if let Some(l_min) = boundary {
        if l_min >= r.ln() {
            return Err(invalid("boundary start must lie below ln r").into());
        }
        let mut csv = Csv::new(&["curve", "ln_abs", "im_sigma_arg"]);
        for (name, line) in ["lower", "upper", "circle"].iter().zip(d.boundary(l_min)) {
            for (l, t) in line {
                csv.row(&[name.to_string(), num(l), num(t)]);
            }
        }
        return Ok(csv.finish());
    }
    let mut out = json!({"sigma": cjson(d.sigma), "a": cjson(d.a), "r": r});
    if at.given() {
        let x = at.covering()?;
        let (lo, hi) = d.bounds(x.ln_abs);
        out["bounds"] = json!([lo, hi]);
        out["x"] = covering_json(x);
        out["contains"] = json!(d.contains(x));
        out["central_point"] = covering_json(d.central_point(x.ln_abs));
    }
    Ok(render(&out))
}

fn cmd_elliptic(nu1: &str, nu2: &str, params: &ParamArgs, order: i32, r: f64, at: &PointArgs) -> CmdResult<Value> {
    let (nu1, nu2) = (parse::complex(nu1)?, parse::complex(nu2)?);
    let p = params.resolve()?;
    let (sigma, a) = power_dictionary(nu1, nu2);
    let mut out = json!({"nu1": cjson(nu1), "nu2": cjson(nu2), "sigma": cjson(sigma), "a": cjson(a)});
    if at.given() {
        let x = at.covering()?;
        let b = EllipticBranch::new(nu1, nu2, &p.theta, order, r)?;
        out["x"] = covering_json(x);
        out["in_domain"] = json!(b.contains(x));
        out["value"] = cjson(b.value(x)?);
    }
    Ok(out)
}

fn cmd_halfperiods(at: &PointArgs) -> CmdResult<Value> {
    let x = at.covering()?;
    let h = if at.x.is_some() { half_periods(x.to_complex())? } else { half_periods_covering(x)? };
    Ok(json!({"x": covering_json(x), "omega1": cjson(h.omega1), "omega2": cjson(h.omega2), "tau": cjson(h.tau())}))
}

fn cmd_poles(
    preset: &Option<String>,
    nu: Option<f64>,
    phi: &Option<String>,
    params: &ParamArgs,
    order: usize,
    k: &str,
) -> CmdResult<String> {
    let (nu, phi, theta) = match preset.as_deref() {
        Some("cp2") => {
            if nu.is_some() || phi.is_some() {
                return Err(invalid("--preset fixes nu and phi").into());
            }
            cp2_reference_constants()
        }
        Some(other) => return Err(invalid(format!("unknown preset {other}")).into()),
        None => {
            let nu = nu.ok_or_else(|| invalid("--nu is required without a preset"))?;
            let phi = parse::complex(phi.as_deref().ok_or_else(|| invalid("--phi is required without a preset"))?)?;
            (nu, phi, params.resolve()?.theta)
        }
    };
    if order < 2 {
        return Err(invalid("--order must be at least 2").into());
    }
    let ks = parse::range(k)?;
    let rec = reciprocal_coefficients(nu, phi, &theta, order.max(2) as i32)?;
    let mut csv = Csv::new(&["record", "j", "index", "re", "im"]);
    let zero = num(0.0);
    csv.row(&["nu".into(), "0".into(), "0".into(), num(nu), zero.clone()]);
    csv.row(&["phi".into(), "0".into(), "0".into(), num(phi.re), num(phi.im)]);
    csv.row(&["radius_bound".into(), "0".into(), "0".into(), num(radius_upper_bound(&rec)?), zero]);
    for j in [1u8, 2] {
        let w = rec.root(j)?;
        csv.row(&["root".into(), j.to_string(), "0".into(), num(w.re), num(w.im)]);
        for (n, d) in pole_corrections(&rec, j, order)?.iter().enumerate().skip(1) {
            csv.row(&["delta".into(), j.to_string(), n.to_string(), num(d.re), num(d.im)]);
        }
    }
    for z in zero_lattice(&rec, ks)? {
        let x = z.point.to_complex();
        csv.row(&["zero".into(), z.j.to_string(), z.k.to_string(), num(x.re), num(x.im)]);
        // Newton on the truncated series; far-out lattice points may not converge.
        if let Ok(p) = refine_pole(&rec, &z.ln_x) {
            let xi = p.xi().to_c64();
            csv.row(&["pole".into(), z.j.to_string(), z.k.to_string(), num(xi.re), num(xi.im)]);
        }
    }
    Ok(csv.finish())
}

fn default_tol() -> CmdResult<f64> {
    match std::env::var(TOL_ENV) {
        Ok(s) => s.parse().map_err(|_| invalid(format!("{TOL_ENV}={s} is not a number")).into()),
        Err(_) => Ok(DEFAULT_TOL),
    }
}

fn cmd_integrate(params: &ParamArgs, x0: &str, y0: &str, dy0: &str, path: &str, tol: Option<f64>) -> CmdResult<String> {
    let p = params.resolve()?;
    let tol = match tol {
        Some(t) => t,
        None => default_tol()?,
    };
    let path = parse::complex_list(path)?;
    let traj = integrate(&p, parse::complex(x0)?, parse::complex(y0)?, parse::complex(dy0)?, &path, tol)?;
    let mut csv = Csv::new(&["x_re", "x_im", "y_re", "y_im", "chart"]);
    for s in &traj.samples {
        csv.row(&[num(s.x.re), num(s.x.im), num(s.y.re), num(s.y.im), s.chart.tag().to_string()]);
    }
    Ok(csv.finish())
}

fn run(cli: &Cli) -> CmdResult<String> {
    Ok(match &cli.cmd {
        Cmd::Params(p) => render(&params_json(&p.resolve()?)),
        Cmd::Fricke { traces, identity, payload, complete } => render(&cmd_fricke(traces, *identity, payload, complete)?),
        Cmd::Symmetry { op, params, pairs, point } => render(&cmd_symmetry(op, params, pairs, point)?),
        Cmd::Expand(e) => render(&e.build()?.to_json()),
        Cmd::Eval { expansion, build, at } => {
            let b = match expansion {
                Some(p) => {
                    if build.class.is_some() {
                        return Err(invalid("give either --expansion or --class").into());
                    }
                    BranchExpansion::from_json(&read_json(p)?)?
                }
                None => build.build()?,
            };
            render(&evaluation_json(&b, at.covering()?)?)
        }
        Cmd::Domain { sigma, a, r, at, boundary } => cmd_domain(sigma, a, *r, at, *boundary)?,
        Cmd::Classify { sigma, slope } => {
            let s = parse::complex(sigma)?;
            let c = classify_approach(*slope, s);
            render(&json!({"sigma": cjson(s), "slope": slope, "approach": c, "description": c.to_string()}))
        }
        Cmd::Elliptic { nu1, nu2, params, order, r, at } => render(&cmd_elliptic(nu1, nu2, params, *order, *r, at)?),
        Cmd::Halfperiods { at } => render(&cmd_halfperiods(at)?),
        Cmd::Poles { preset, nu, phi, params, order, k } => cmd_poles(preset, *nu, phi, params, *order, k)?,
        Cmd::Integrate { params, x0, y0, dy0, path, tol } => cmd_integrate(params, x0, y0, dy0, path, *tol)?,
        Cmd::Check { golden } => {
            let (table, ok) = check::run(*golden);
            if !ok {
                emit(&cli.out, &table)?;
                return Err(Failure { kind: "CheckFailed".into(), message: "consistency checks failed".into(), code: 1 });
            }
            table
        }
    })
}

fn emit(out: &str, text: &str) -> std::io::Result<()> {
    if out == "-" {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(out, text)
    }
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("{}", json!({"error": f.kind, "message": f.message}));
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Failure { kind: "Usage".into(), message: e.to_string().trim().to_string(), code: 2 }),
    };
    match run(&cli).and_then(|text| emit(&cli.out, &text).map_err(Failure::from)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}
