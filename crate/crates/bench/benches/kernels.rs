use criterion::{black_box, criterion_group, criterion_main, Criterion};

use pvi::elliptic::{half_periods, weierstrass_p};
use pvi::ode::integrate;
use pvi::poles::{cp2_reference_constants, pole_corrections, reciprocal_coefficients};
use pvi::series::{expand_branch, Constants};
use pvi::special::hypergeometric;
use pvi::{c, ClassTag, CriticalPoint, PviParameters, Theta};

fn kernels(cr: &mut Criterion) {
    let x = c(0.3, 0.2);
    cr.bench_function("hypergeometric", |b| b.iter(|| hypergeometric(black_box(x)).unwrap()));

    let h = half_periods(x).unwrap();
    cr.bench_function("weierstrass_p", |b| {
        b.iter(|| weierstrass_p(black_box(c(0.4, 0.1)), h.omega1, h.omega2).unwrap())
    });

    let th = Theta::real(0.4, 0.5, 0.23, 1.37);
    let k: Constants = [("sigma".to_string(), c(0.3, 0.1)), ("a".to_string(), c(1.0, 0.0))].into_iter().collect();
    cr.bench_function("expand_power_order6", |b| {
        b.iter(|| expand_branch(ClassTag::PowerGeneric, black_box(&k), &th, CriticalPoint::Zero, 6).unwrap())
    });

    let p = PviParameters::from_theta(th);
    cr.bench_function("integrate_short_segment", |b| {
        b.iter(|| integrate(&p, c(0.3, 0.1), c(0.5, 0.6), c(0.4, -0.2), black_box(&[c(0.4, 0.2)]), 1e-10).unwrap())
    });

    let (nu, phi, theta) = cp2_reference_constants();
    let rec = reciprocal_coefficients(nu, phi, &theta, 6).unwrap();
    cr.bench_function("pole_corrections_order6", |b| b.iter(|| pole_corrections(black_box(&rec), 2, 6).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
