//! Cross-module consistency suites behind `pvi check`.

use pvi::elliptic::{power_dictionary, EllipticBranch};
use pvi::lattice::CoveringPoint;
use pvi::monodromy::fricke_residual;
use pvi::ode::integrate;
use pvi::poles::{cp2_reference_constants, pole_corrections, reciprocal_coefficients, refine_pole, zero_lattice};
use pvi::series::{expand_branch, Constants};
use pvi::shimomura::ShimomuraBranch;
use pvi::{c, ClassTag, CriticalPoint, MonodromyData, PviParameters, Result, Theta, C64};

type Outcome = Result<(bool, String)>;
type Suite = (&'static str, fn() -> Outcome);

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn consts(v: &[(&str, C64)]) -> Constants {
    v.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn verdict(err: f64, tol: f64) -> Outcome {
    Ok((err < tol, format!("err {err:.2e} (tol {tol:.0e})")))
}

/// Taylor branch at zero against direct integration.
fn series_vs_oracle() -> Outcome {
    let th = Theta::real(0.0, 0.0, 0.0, 1.0);
    let b = expand_branch(ClassTag::TaylorRow6, &consts(&[("a", c(2.0, 0.0))]), &th, CriticalPoint::Zero, 10)?;
    let x0 = c(1e-2, 0.0);
    let (y0, dy0, _) = b.jet(CoveringPoint::from_complex(x0))?;
    let traj = integrate(&PviParameters::from_theta(th), x0, y0, dy0, &[c(5e-2, 0.0)], 1e-12)?;
    let end = traj.last();
    verdict(rel(end.y, b.evaluate_complex(end.x)?.value), 1e-8)
}

/// Power representation against the elliptic one under the dictionary.
fn shimomura_vs_elliptic() -> Outcome {
    let th = Theta::real(0.4, 0.5, 0.23, 1.37);
    let (nu1, nu2) = (c(0.15, -0.05), c(0.65, 0.1));
    let e = EllipticBranch::new(nu1, nu2, &th, 6, 0.1)?;
    let (s, a) = power_dictionary(nu1, nu2);
    let sh = ShimomuraBranch::new(s, a, &th, 6, 0.1)?;
    let mut worst: f64 = 0.0;
    for l in [-6.0, -8.0, -10.0, -12.0] {
        let x = sh.domain.central_point(l);
        worst = worst.max(rel(e.value(x)?, sh.value(x)?));
    }
    verdict(worst, 1e-8)
}

/// Integration through a pole of the reference branch against its expansion.
fn poles_vs_oracle() -> Outcome {
    let (nu, phi, th) = cp2_reference_constants();
    let rec = reciprocal_coefficients(nu, phi, &th, 6)?;
    let z = zero_lattice(&rec, 1..=1)?.into_iter().find(|z| z.j == 2).expect("lattice has both roots");
    let xi = refine_pole(&rec, &z.ln_x)?.xi().to_c64();
    let k = consts(&[("nu", c(nu, 0.0)), ("phi", phi), ("amp", c(1.0, 0.0))]);
    let b = expand_branch(ClassTag::InvOscNuPhi, &k, &th, CriticalPoint::Zero, 6)?;
    let r = xi.norm();
    let (start, end) = (xi + c(0.3 * r, 1e-4 * r), xi + c(-0.3 * r, 1e-4 * r));
    let (y0, dy0, _) = b.jet(CoveringPoint::from_complex(start))?;
    let traj = integrate(&PviParameters::from_theta(th), start, y0, dy0, &[end], 1e-12)?;
    let crossed = traj.switches.len() == 2;
    let (ok, detail) = verdict(rel(traj.last().y, b.evaluate_complex(end)?.value), 1e-6)?;
    Ok((ok && crossed, format!("{detail}, {} chart switches", traj.switches.len())))
}

fn golden_fricke_identity() -> Outcome {
    let two = c(2.0, 0.0);
    verdict(fricke_residual(&MonodromyData::new([two; 4], two, two, two)).norm(), 1e-14)
}

fn golden_taylor_coefficients() -> Outcome {
    let th = Theta::real(0.0, 0.0, 0.0, 1.0);
    let b = expand_branch(ClassTag::TaylorRow6, &consts(&[("a", c(2.0, 0.0))]), &th, CriticalPoint::Zero, 6)?;
    let x = c(1e-4, 0.0);
    let y = b.evaluate_complex(x)?.value;
    // y = 2x - x^2 + O(x^3)
    verdict(((y - 2.0 * x) / (x * x) + 1.0).norm(), 1e-3)
}

fn golden_pole_shifts() -> Outcome {
    let (nu, phi, th) = cp2_reference_constants();
    let rec = reciprocal_coefficients(nu, phi, &th, 4)?;
    let want = [(1, 3, 0.179221), (2, 3, 0.355515), (1, 4, -0.054221), (2, 4, -0.230515)];
    let mut worst: f64 = 0.0;
    for (j, n, v) in want {
        let d = pole_corrections(&rec, j, 4)?;
        worst = worst.max((d[n] - c(v, 0.0)).norm());
    }
    verdict(worst, 1e-6)
}

fn golden_parameters() -> Outcome {
    let p = PviParameters::from_coefficients(c(4.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0));
    let t = p.theta.canonicalize();
    let want = Theta::real(0.0, 0.0, 0.0, 4.0).canonicalize();
    let err = t.to_array().iter().zip(want.to_array()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    verdict(err, 1e-14)
}

/// Runs the suites and returns the table and the overall verdict.
pub fn run(golden: bool) -> (String, bool) {
    let mut suites: Vec<Suite> = vec![
        ("series-vs-oracle", series_vs_oracle),
        ("shimomura-vs-elliptic", shimomura_vs_elliptic),
        ("poles-vs-oracle", poles_vs_oracle),
    ];
    if golden {
        suites.extend([
            ("golden-fricke-identity", golden_fricke_identity as fn() -> Outcome),
            ("golden-taylor-coefficients", golden_taylor_coefficients),
            ("golden-pole-shifts", golden_pole_shifts),
            ("golden-parameters", golden_parameters),
        ]);
    }
    let mut table = String::new();
    let mut all = true;
    for (name, f) in suites {
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= ok;
        table.push_str(&format!("{:<28} {}  {detail}\n", name, if ok { "PASS" } else { "FAIL" }));
    }
    (table, all)
}
