use proptest::prelude::*;
use qprkit::specfun::{
    bessel_k0, chi2_1_cdf, chi2_1_inv_cdf, chi2_1_pdf, chi2_1_sf, erf, erfc, gauss_cdf_family,
    GaussParams,
};

// Maclaurin series; only used where cancellation stays below 1e-13.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x * x / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

// K0(x) = int_0^inf exp(-x cosh t) dt, composite Simpson on a truncated range.
fn k0_quadrature(x: f64) -> f64 {
    let upper = ((40.0 / x) + (1600.0 / (x * x) + 1.0).sqrt()).ln() + 1.0;
    let n = 200_000;
    let h = upper / n as f64;
    let f = |t: f64| (-x * t.cosh()).exp();
    let mut s = f(0.0) + f(upper);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn erf_matches_series() {
    for i in 0..=60 {
        let x = -3.0 + 0.1 * i as f64;
        assert!((erf(x) - erf_series(x)).abs() < 1e-13, "x = {x}");
    }
    assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-15);
    assert!((erfc(4.0) - 1.541_725_790_028_002e-8).abs() < 1e-20);
}

#[test]
fn chi2_values() {
    assert!((chi2_1_inv_cdf(0.5).unwrap() - 0.454_936_423_119_572_7).abs() < 1e-9);
    assert!((chi2_1_inv_cdf(0.9).unwrap() - 2.705_543_454_095_414).abs() < 1e-9);
    assert!((chi2_1_cdf(1.0).unwrap() - 0.682_689_492_137_085_9).abs() < 1e-14);
    assert!((chi2_1_sf(9.0).unwrap() - 2.699_796_063_260_207e-3).abs() < 1e-15);
    assert!(chi2_1_cdf(-1.0).is_err() || chi2_1_cdf(-1.0).unwrap() == 0.0);
    assert!(chi2_1_inv_cdf(1.5).is_err());
}

#[test]
fn chi2_round_trip_and_monotone() {
    let mut prev = -1.0;
    for i in 0..=999 {
        let p = i as f64 * 1e-3;
        let b = chi2_1_inv_cdf(p).unwrap();
        assert!((chi2_1_cdf(b).unwrap() - p).abs() < 1e-9, "p = {p}");
        let c = chi2_1_cdf(0.01 * (i + 1) as f64).unwrap();
        assert!(c > prev);
        prev = c;
    }
}

#[test]
fn chi2_pdf_integrates_to_cdf() {
    // substitute b = w^2 to remove the endpoint singularity
    let b: f64 = 2.0;
    let n = 20_000;
    let h = b.sqrt() / n as f64;
    let g = |w: f64| if w == 0.0 { 2.0 / (2.0 * std::f64::consts::PI).sqrt() } else { 2.0 * w * chi2_1_pdf(w * w) };
    let mut s = g(0.0) + g(b.sqrt());
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    assert!((s * h / 3.0 - chi2_1_cdf(b).unwrap()).abs() < 1e-10);
}

#[test]
fn k0_matches_quadrature() {
    for x in [0.01, 0.1, 1.0, 2.0, 5.0] {
        let q = k0_quadrature(x);
        assert!((bessel_k0(x).unwrap() - q).abs() < 1e-8, "x = {x}");
    }
    assert!((bessel_k0(1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-12);
    assert!(bessel_k0(0.0).is_err());
}

#[test]
fn gauss_family_derivatives() {
    let g = GaussParams::new(0.7).unwrap();
    let h = 1e-5;
    for i in 0..41 {
        let z = -3.0 + 0.15 * i as f64;
        let f = gauss_cdf_family(z, g);
        let fd1 = (g.cdf(z + h) - g.cdf(z - h)) / (2.0 * h);
        let fd2 = (gauss_cdf_family(z + h, g).phi_prime - gauss_cdf_family(z - h, g).phi_prime) / (2.0 * h);
        assert!((f.phi_prime - fd1).abs() < 1e-6);
        assert!((f.phi_double_prime - fd2).abs() < 1e-5);
    }
    let inf = gauss_cdf_family(f64::INFINITY, g);
    assert_eq!((inf.phi, inf.phi_prime), (1.0, 0.0));
    assert!(GaussParams::new(0.0).is_err());
}

proptest! {
    #[test]
    fn erf_is_odd(x in -10.0f64..10.0) {
        prop_assert_eq!(erf(-x), -erf(x));
    }

    #[test]
    fn erf_plus_erfc_is_one(x in -6.0f64..6.0) {
        prop_assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interval_prob_is_consistent(lo in -3.0f64..3.0, w in 0.0f64..3.0, s in 0.05f64..2.0) {
        let g = GaussParams::new(s).unwrap();
        let p = g.interval_prob(lo, lo + w);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - (g.cdf(lo + w) - g.cdf(lo))).abs() < 1e-14);
    }
}
