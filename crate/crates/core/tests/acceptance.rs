//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_DEVIATIONS` are expected to fail as stated; the
//! test asserts that they still fail, so a silent change is noticed.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

use pvi::elliptic::{
    half_periods, lattice_reference, power_dictionary, weierstrass_p, weierstrass_p_prime, EllipticBranch,
};
use pvi::lattice::CoveringPoint;
use pvi::monodromy::{fricke_residual, PairTrace};
use pvi::ode::{fit_critical_exponent, integrate};
use pvi::params::trace_from_theta;
use pvi::poles::{
    continue_branch, cp2_reference_constants, pole_corrections, pole_corrections_ext, predicted_pole,
    reciprocal_coefficients, refine_pole, zero_lattice,
};
use pvi::series::{expand_branch, Constants};
use pvi::shimomura::{ShimomuraBranch, SigmaPath};
use pvi::special::hypergeometric_agm;
use pvi::symmetry::apply_to_traces_with_theta;
use pvi::{c, BranchExpansion, ClassTag, CriticalPoint, MonodromyData, PviParameters, SymmetryOp, Theta, C64};

/// Criteria whose literal statement is unattainable.
const KNOWN_DEVIATIONS: [u32; 1] = [9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn consts(v: &[(&str, C64)]) -> Constants {
    v.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn draw<S: Strategy>(runner: &mut TestRunner, s: S) -> S::Value {
    s.new_tree(runner).expect("strategy draws").current()
}

fn complex_in(runner: &mut TestRunner, re: std::ops::Range<f64>, im: std::ops::Range<f64>) -> C64 {
    let (a, b) = draw(runner, (re, im));
    C64::new(a, b)
}

fn fricke_and_symmetry() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let th = Theta::new(
            complex_in(&mut runner, -2.0..2.0, -0.5..0.5),
            complex_in(&mut runner, -2.0..2.0, -0.5..0.5),
            complex_in(&mut runner, -2.0..2.0, -0.5..0.5),
            complex_in(&mut runner, -2.0..2.0, -0.5..0.5),
        );
        let (u, v) = (
            complex_in(&mut runner, -2.0..2.0, -0.5..0.5),
            complex_in(&mut runner, -2.0..2.0, -0.5..0.5),
        );
        for d in MonodromyData::complete(trace_from_theta(&th), PairTrace::P01, u, v) {
            worst = worst.max(fricke_residual(&d).norm());
            for op in [SymmetryOp::Permute01, SymmetryOp::InvertX, SymmetryOp::SwapXY] {
                worst = worst.max(fricke_residual(&apply_to_traces_with_theta(op, &d, &th)).norm());
            }
        }
    }
    outcome(
        worst < 1e-10,
        format!("max |residual| {worst:.2e} over 2000 points x 4 (tol 1e-10)"),
    )
}

fn cp2_pole_constants() -> Outcome {
    let (nu, phi, th) = cp2_reference_constants();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let nu_ok = (nu - 2.0 * golden.ln() / PI).abs() < 1e-15;
    let rec = match reciprocal_coefficients(nu, phi, &th, 4) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let want = [(1, 3, 0.1792), (2, 3, 0.3555), (1, 4, -0.05422), (2, 4, -0.2305)];
    let mut worst: f64 = 0.0;
    let mut got = vec![];
    for (j, n, v) in want {
        let d = pole_corrections(&rec, j, 4).expect("corrections");
        got.push(format!("D{n}({j})={:.6}", d[n].re));
        worst = worst.max((d[n] - c(v, 0.0)).norm());
    }
    outcome(
        nu_ok && worst < 1e-3,
        format!("{} max err {worst:.1e} (tol 1e-3)", got.join(" ")),
    )
}

fn lattice_geometry() -> Outcome {
    let (nu, phi, th) = cp2_reference_constants();
    let rec = reciprocal_coefficients(nu, phi, &th, 2).expect("coefficients");
    let zs = zero_lattice(&rec, 0..=5).expect("lattice");
    let ratio = (-PI / nu).exp();
    let (mut ratio_err, mut arg_err): (f64, f64) = (0.0, 0.0);
    for j in [1u8, 2] {
        let row: Vec<_> = zs.iter().filter(|z| z.j == j).collect();
        for w in row.windows(2) {
            let r = (w[1].point.ln_abs - w[0].point.ln_abs).exp();
            ratio_err = ratio_err.max((r - ratio).abs() / ratio);
        }
        for z in row {
            arg_err = arg_err.max((z.point.arg + PI / 2.0).abs());
        }
    }
    outcome(
        ratio_err < 1e-14 && arg_err < 1e-10,
        format!("ratio rel err {ratio_err:.1e} (tol 1e-14), arg err {arg_err:.1e} (tol 1e-10)"),
    )
}

fn pole_refinement() -> Outcome {
    let (nu, phi, th) = cp2_reference_constants();
    let rec = reciprocal_coefficients(nu, phi, &th, 6).expect("coefficients");
    let d = pole_corrections_ext(&rec, 1, 5).expect("corrections");
    let mut pass = true;
    let mut details = vec![];
    for z in zero_lattice(&rec, 1..=3).expect("lattice").iter().filter(|z| z.j == 1) {
        let Ok(p) = refine_pole(&rec, &z.ln_x) else {
            return outcome(false, format!("Newton failed at k={}", z.k));
        };
        let pred = predicted_pole(&d, z, 4);
        let e = (p.xi() - pred.clone()).norm() / pred.norm();
        let bound = 10.0 * z.point.abs().powi(3);
        pass &= e < bound;
        details.push(format!("k={}: {e:.1e} < {bound:.1e}", z.k));
    }
    outcome(pass && details.len() == 3, details.join(", "))
}

fn series_oracle() -> Outcome {
    let picard = Theta::real(0.0, 0.0, 0.0, 1.0);
    let b = expand_branch(
        ClassTag::TaylorRow6,
        &consts(&[("a", c(2.0, 0.0))]),
        &picard,
        CriticalPoint::Zero,
        10,
    )
    .expect("taylor branch");
    let x0 = c(1e-2, 0.0);
    let (y0, dy0, _) = b.jet(CoveringPoint::from_complex(x0)).expect("jet");
    let traj = integrate(&PviParameters::from_theta(picard), x0, y0, dy0, &[c(5e-2, 0.0)], 1e-12).expect("integration");
    let end = traj.last();
    let taylor_err = rel(end.y, b.evaluate_complex(end.x).expect("series").value);

    // theta0^2 - thetax^2 + sigma^2 = 0 removes the O(x^sigma) correction.
    let th = Theta::real(0.4, 0.5, 0.23, 1.37);
    let k = consts(&[("sigma", c(0.3, 0.0)), ("a", c(1.0, 0.0))]);
    let b = expand_branch(ClassTag::PowerGeneric, &k, &th, CriticalPoint::Zero, 8).expect("power branch");
    let x0 = c(1e-3, 0.0);
    let (y0, dy0, _) = b.jet(CoveringPoint::from_complex(x0)).expect("jet");
    let traj = integrate(&PviParameters::from_theta(th), x0, y0, dy0, &[c(1.1e-6, 0.0)], 1e-12).expect("integration");
    let e = fit_critical_exponent(&traj).expect("fit");
    let exp_err = (e - 0.7).norm();
    outcome(
        taylor_err < 1e-8 && exp_err < 1e-3,
        format!(
            "taylor rel err {taylor_err:.1e} (tol 1e-8), exponent {:.6} (0.7 +- 1e-3)",
            e.re
        ),
    )
}

fn representation_equivalences() -> Outcome {
    let th = Theta::real(0.4, 0.5, 0.23, 1.37);

    // Purely imaginary sigma along the Sigma = 0 path.
    let (s, a) = (c(0.0, 0.37), c(0.9, 0.2));
    let sh = ShimomuraBranch::new(s, a, &th, 8, 0.1).expect("power representation");
    let gen = expand_branch(
        ClassTag::PowerGeneric,
        &consts(&[("sigma", s), ("a", a)]),
        &th,
        CriticalPoint::Zero,
        8,
    )
    .expect("generic branch");
    let (lo, hi) = sh.domain.bounds(-10.0);
    let path = SigmaPath::new(CoveringPoint::new(-10.0, 0.5 * (lo + hi) / s.im), 0.0, s).expect("path");
    let mut sin_err: f64 = 0.0;
    for l in [-20.0, -25.0, -30.0, -35.0, -40.0] {
        let x = path.at(l);
        sin_err = sin_err.max(rel(
            sh.value(x).expect("value"),
            gen.evaluate_sin_form(x).expect("sin form"),
        ));
    }

    let (nu1, nu2) = (c(0.15, -0.05), c(0.65, 0.1));
    let e = EllipticBranch::new(nu1, nu2, &th, 6, 0.1).expect("elliptic branch");
    let (sigma, a) = power_dictionary(nu1, nu2);
    let sigma_ok = (sigma - (1.0 - nu2)).norm() < 1e-15;
    let sh = ShimomuraBranch::new(sigma, a, &th, 6, 0.1).expect("power representation");
    let mut ell_err: f64 = 0.0;
    let mut n = 0;
    'grid: for i in 0..40 {
        let l = -6.0 - 0.25 * i as f64;
        let centre = sh.domain.central_point(l);
        for da in [-0.6, -0.3, 0.0, 0.3, 0.6] {
            let x = CoveringPoint::new(l, centre.arg + da);
            if !(e.contains(x) && sh.domain.contains(x)) {
                continue;
            }
            ell_err = ell_err.max(rel(
                e.value(x).expect("elliptic value"),
                sh.value(x).expect("power value"),
            ));
            n += 1;
            if n == 100 {
                break 'grid;
            }
        }
    }
    outcome(
        sin_err < 1e-10 && sigma_ok && n == 100 && ell_err < 1e-8,
        format!("sin form rel err {sin_err:.1e} (tol 1e-10), elliptic rel err {ell_err:.1e} on {n} points (tol 1e-8)"),
    )
}

fn special_kernels() -> Outcome {
    let mut w_err: f64 = 0.0;
    for k in 1..90 {
        let x = c(k as f64 / 100.0, 0.0);
        let h = half_periods(x).expect("half periods");
        w_err = w_err.max(rel(h.omega1, 0.5 * PI * hypergeometric_agm(x)));
    }
    let (w1, w2) = (c(1.1, 0.2), c(0.3, 1.4));
    let (_, g2, g3) = lattice_reference(c(0.1, 0.0), w1, w2, 20);
    let (mut p_err, mut ode_err): (f64, f64) = (0.0, 0.0);
    for z in [c(0.37, 0.21), c(-0.8, 0.5), c(1.9, 2.2), c(0.05, -0.4)] {
        let (p_ref, _, _) = lattice_reference(z, w1, w2, 20);
        let p = weierstrass_p(z, w1, w2).expect("p");
        p_err = p_err.max(rel(p, p_ref));
        let dp = weierstrass_p_prime(z, w1, w2).expect("p'");
        let ode = dp * dp - (4.0 * p * p * p - g2 * p - g3);
        ode_err = ode_err.max(ode.norm() / (dp * dp).norm().max(1.0));
    }
    outcome(
        w_err < 1e-12 && p_err < 1e-8 && ode_err < 1e-8,
        format!("omega1 {w_err:.1e} (tol 1e-12), p {p_err:.1e} (tol 1e-8), ode {ode_err:.1e} (tol 1e-8)"),
    )
}

/// Log-log slope of the measured residual against the predicted exponent.
fn residual_slope(b: &BranchExpansion, arg: f64, radii: &[f64]) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let n = radii.len() as f64;
    let mut p = 0.0;
    for &r in radii {
        let x = CoveringPoint::from_polar(r, arg);
        let actual = b.residual_at_ext(x).ok()?;
        let (pred, pe, _) = b.predicted_residual(x)?;
        p = pe;
        // Strip the bounded oscillating factor of the prediction.
        let v = (actual.norm() / (pred.norm() / r.powf(pe))).ln();
        let u = r.ln();
        sx += u;
        sy += v;
        sxx += u * u;
        sxy += u * v;
    }
    Some(((n * sxy - sx * sy) / (n * sxx - sx * sx), p))
}

fn residual_orders() -> Outcome {
    let g = Theta::real(0.31, 0.17, 0.23, 1.37);
    let mut runner = TestRunner::deterministic();
    let mut failures = vec![];
    let mut checked = 0;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..3 {
        let a = complex_in(&mut runner, 0.3..0.9, -0.2..0.2);
        let sign = c(
            if draw(&mut runner, proptest::bool::ANY) {
                1.0
            } else {
                -1.0
            },
            0.0,
        );
        let sigma = complex_in(&mut runner, 0.2..0.6, -0.3..0.3);
        let nu = c(draw(&mut runner, 0.4..0.9f64), 0.0);
        let phi = complex_in(&mut runner, 0.0..1.0, -0.2..0.2);
        let cases: Vec<(ClassTag, Theta, Constants)> = vec![
            (ClassTag::PowerGeneric, g, consts(&[("sigma", sigma), ("a", a)])),
            (ClassTag::PowerRho, g, consts(&[("sign", sign), ("a", a)])),
            (
                ClassTag::PowerNegOmega,
                Theta::real(0.31, 0.17, 0.43, 1.0),
                consts(&[("a", a)]),
            ),
            (ClassTag::InvOscNuPhi, g, consts(&[("nu", nu), ("phi", phi)])),
            // One-sided oscillation: theta_inf - 1 - theta1 = 2 i nu.
            (
                ClassTag::InvOscA,
                Theta::new(g.theta0, g.thetax, g.theta1, 1.0 + g.theta1 + 2.0 * C64::i() * nu),
                consts(&[("nu", nu), ("a", a)]),
            ),
            (ClassTag::TaylorRow1, g, consts(&[("sign", sign)])),
            (
                ClassTag::TaylorRow2,
                Theta::real(0.31, 0.17, 0.0, 2.0),
                consts(&[("sign", sign), ("a", a)]),
            ),
            (
                ClassTag::TaylorRow3,
                Theta::real(0.31, 0.17, 0.0, 1.0),
                consts(&[("a", a)]),
            ),
            (ClassTag::TaylorRow4, g, consts(&[("sign", sign)])),
            (
                ClassTag::TaylorRow5,
                Theta::new(c(0.6, 0.0), 0.4 * sign, c(0.0, 0.0), c(1.0, 0.0)),
                consts(&[("sign", sign), ("a", a)]),
            ),
            (
                ClassTag::TaylorRow6,
                Theta::real(0.0, 0.0, 0.23, 1.37),
                consts(&[("a", a)]),
            ),
            (
                ClassTag::LogRow1,
                Theta::new(c(0.3, 0.0), -0.3 * sign, c(0.23, 0.0), c(1.37, 0.0)),
                consts(&[("sign", sign), ("a", a)]),
            ),
            (ClassTag::LogRow2, g, consts(&[("a", a)])),
            (
                ClassTag::LogRow3,
                Theta::real(0.31, 0.17, 0.5, 2.5),
                consts(&[("sign", sign), ("a", a)]),
            ),
            (
                ClassTag::InvLogRow1,
                Theta::new(c(0.31, 0.0), c(0.17, 0.0), -0.3 * sign, c(1.3, 0.0)),
                consts(&[("sign", sign), ("a", a)]),
            ),
            (ClassTag::InvLogRow2, g, consts(&[("a", a)])),
        ];
        assert_eq!(cases.len(), ClassTag::ALL.len());
        for (tag, th, k) in cases {
            let slope = expand_branch(tag, &k, &th, CriticalPoint::Zero, 2)
                .map(|b| residual_slope(&b, 0.2, &[1e-4, 2e-4, 4e-4, 8e-4]));
            match slope {
                Err(e) => failures.push(format!("{tag}: {e}")),
                Ok(Some((s, p))) => {
                    worst_margin = worst_margin.min(s - p);
                    if s < p - 0.1 {
                        failures.push(format!("{tag}: {s:.3} vs {p:.3}"));
                    }
                }
                Ok(None) => failures.push(format!("{tag}: no residual")),
            }
            checked += 1;
        }
    }
    let detail = format!("{checked} branches, min slope - predicted {worst_margin:.3} (tol -0.1)");
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failures.join("; ")))
    }
}

/// Grid comparison of `1/y(x e^(2 pi i), phi)` against `1/y(x, phi')`; the
/// reciprocal stays finite on the pole lattice.
fn continuation_error(shift: impl Fn(f64, C64) -> C64) -> f64 {
    let (nu, phi, th) = cp2_reference_constants();
    let here = reciprocal_coefficients(nu, phi, &th, 6).expect("coefficients");
    let moved = reciprocal_coefficients(nu, shift(nu, phi), &th, 6).expect("coefficients");
    let mut worst: f64 = 0.0;
    for l in [-6.0, -7.0, -8.0, -9.0] {
        for a in [-1.0, -0.3, 0.4, 1.2, 2.0] {
            let lhs = here.value(CoveringPoint::new(l, a + 2.0 * PI));
            let rhs = moved.value(CoveringPoint::new(l, a));
            worst = worst.max(rel(lhs, rhs));
        }
    }
    worst
}

fn analytic_continuation() -> Outcome {
    let literal = continuation_error(|nu, phi| phi + c(0.0, 2.0 * PI * nu));
    let corrected = continuation_error(|nu, phi| continue_branch(nu, phi, 1));
    outcome(
        literal < 1e-10,
        format!("phi + 2 pi i nu: rel err {literal:.1e} (tol 1e-10); phi + 4 pi i nu: rel err {corrected:.1e}"),
    )
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 9] = [
        (
            1,
            "fricke membership and symmetry invariance",
            fricke_and_symmetry,
            Duration::from_secs(5),
        ),
        (2, "cp2 pole constants", cp2_pole_constants, Duration::from_secs(30)),
        (3, "lattice geometry", lattice_geometry, Duration::from_secs(1)),
        (
            4,
            "pole refinement vs prediction",
            pole_refinement,
            Duration::from_secs(60),
        ),
        (5, "series vs oracle", series_oracle, Duration::from_secs(10)),
        (
            6,
            "representation equivalences",
            representation_equivalences,
            Duration::from_secs(30),
        ),
        (7, "special-function kernels", special_kernels, Duration::from_secs(10)),
        (
            8,
            "residual-order property suite",
            residual_orders,
            Duration::from_secs(120),
        ),
        (
            9,
            "analytic continuation identity",
            analytic_continuation,
            Duration::from_secs(5),
        ),
    ];
    let mut unexpected = vec![];
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took < budget;
        let deviation = KNOWN_DEVIATIONS.contains(&id);
        let note = if deviation { " [known deviation]" } else { "" };
        println!(
            "criterion {id} {}: {name}: {} ({:.2} s of {} s){note}",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
        if pass == deviation {
            unexpected.push(id);
        }
    }
    assert!(
        unexpected.is_empty(),
        "criteria with unexpected outcome: {unexpected:?}"
    );
}
