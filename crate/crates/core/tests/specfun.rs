use hemn::latency::GammaParams;
use hemn::quad::{integrate, integrate_breaks, QuadOptions};
use hemn::specfun::*;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use twofloat::TwoFloat;

fn policy() -> EvalPolicy {
    EvalPolicy::default()
}

/// Raw ₁F₁ power series in double-double, no transformation applied.
fn hyp1f1_dd(a: f64, b: f64, z: f64) -> f64 {
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    for k in 0..5000 {
        let k = k as f64;
        term = term * (TwoFloat::from(a) + k) / (TwoFloat::from(b) + k) * z / (k + 1.0);
        sum += term;
        if term.hi().abs() < 1e-34 * sum.hi().abs() && k > z.abs() {
            break;
        }
    }
    f64::from(sum)
}

/// ₁F₁ reference: the double-double series, summed on the side whose
/// argument is positive.
fn hyp1f1_ref(a: f64, b: f64, z: f64) -> f64 {
    if z >= 0.0 {
        hyp1f1_dd(a, b, z)
    } else {
        z.exp() * hyp1f1_dd(b - a, b, -z)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn lower_gamma_matches_quadrature() {
    for &(a, x) in &[
        (5.94, 2.45 * 4.0),
        (1.0, 1.0),
        (0.7, 3.0),
        (7.71, 10.0),
        (3.2, 0.4),
    ] {
        let q = integrate(
            |t: f64| {
                if t == 0.0 {
                    0.0
                } else {
                    ((a - 1.0) * t.ln() - t).exp()
                }
            },
            0.0,
            x,
            QuadOptions::relative(1e-13),
        )
        .unwrap();
        let v = lower_incomplete_gamma(a, x, &policy()).unwrap();
        assert!(rel(v, q.value) < 1e-10, "a={a} x={x}: {v} vs {}", q.value);
    }
}

#[test]
fn incomplete_gamma_trivial_values() {
    let p = policy();
    assert!(
        (lower_incomplete_gamma(1.0, 1.0, &p).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15
    );
    assert_eq!(lower_incomplete_gamma(3.0, 0.0, &p).unwrap(), 0.0);
    assert!((upper_incomplete_gamma(3.0, 0.0, &p).unwrap() - 2.0).abs() < 1e-14);
    assert!((upper_incomplete_gamma(1.0, 2.0, &p).unwrap() - (-2.0f64).exp()).abs() < 1e-16);
    let (a, x) = (7.71, 10.0);
    let total =
        lower_incomplete_gamma(a, x, &p).unwrap() + upper_incomplete_gamma(a, x, &p).unwrap();
    assert!(rel(total, gamma(a)) < 1e-12);
    assert!(lower_incomplete_gamma(0.0, 1.0, &p).is_err());
    assert!(upper_incomplete_gamma(1.0, -1.0, &p).is_err());
}

#[test]
fn kummer_trivial_and_transformed() {
    let p = policy();
    assert_eq!(kummer_1f1(2.3, 4.1, 0.0, &p).unwrap(), 1.0);
    assert!(
        rel(
            kummer_1f1(1.0, 2.0, 1.0, &p).unwrap(),
            std::f64::consts::E - 1.0
        ) < 1e-14
    );
    let (a, b, z) = (5.94, 13.88, -24.5);
    let direct = kummer_1f1(a, b, z, &p).unwrap();
    let mirrored = z.exp() * kummer_1f1(b - a, b, -z, &p).unwrap();
    let reference = hyp1f1_ref(a, b, z);
    assert!(rel(direct, mirrored) < 1e-10);
    assert!(rel(direct, reference) < 1e-10, "{direct} vs {reference}");
    // 40-digit value
    assert!(rel(direct, 0.001_103_625_052_889_720_2) < 1e-12);
    assert!(matches!(
        kummer_1f1(1.0, -2.0, 1.0, &p),
        Err(hemn::Error::Domain { .. })
    ));
}

#[test]
fn sine_cosine_integrals_match_quadrature() {
    let opts = QuadOptions::relative(1e-12).with_abs(1e-12);
    for &x in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
        let mut pts = vec![0.0];
        let mut k = PI;
        while k < x {
            pts.push(k);
            k += PI;
        }
        pts.push(x);
        let si = integrate_breaks(
            |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t },
            &pts,
            opts,
        )
        .unwrap();
        let ci_tail = integrate_breaks(
            |t: f64| if t == 0.0 { 0.0 } else { (t.cos() - 1.0) / t },
            &pts,
            opts,
        )
        .unwrap();
        let ci = EULER_GAMMA + x.ln() + ci_tail.value;
        assert!(
            (sine_integral(x).unwrap() - si.value).abs() < 1e-8,
            "Si({x})"
        );
        assert!((cosine_integral(x).unwrap() - ci).abs() < 1e-8, "Ci({x})");
    }
    assert!((cosine_integral(1.0).unwrap() - 0.337_403_922_900_968_1).abs() < 1e-12);
    assert_eq!(sine_integral(0.0).unwrap(), 0.0);
    assert!((sine_integral(1e6).unwrap() - FRAC_PI_2).abs() < 1e-6);
    assert_eq!(sine_integral(-3.0).unwrap(), -sine_integral(3.0).unwrap());
    assert!(cosine_integral(0.0).is_err());
}

#[test]
fn beta_against_factorial_identity() {
    assert!((beta_fn(1.0, 1.0).unwrap() - 1.0).abs() < 4e-15);
    assert!(rel(beta_fn(2.0, 3.0).unwrap(), 1.0 / 12.0) < 1e-14);
    // B(a, 2) = 1/(a(a+1))
    assert!(rel(beta_fn(5.94, 2.0).unwrap(), 1.0 / (5.94 * 6.94)) < 1e-13);
    assert!(beta_fn(-1.0, 2.0).is_err());
}

#[test]
fn digamma_matches_finite_difference() {
    let h = 1e-6;
    for &x in &[5.94, 0.7, 2.5, 13.0] {
        let fd = (ln_gamma(x + h) - ln_gamma(x - h)) / (2.0 * h);
        assert!((digamma(x).unwrap() - fd).abs() < 1e-8, "x={x}");
    }
    assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
    assert!((digamma(2.0).unwrap() - 1.0 + EULER_GAMMA).abs() < 1e-14);
    assert!(digamma(-0.5).is_err());
}

#[test]
fn gamma_pdf_is_a_density() {
    let p = GammaParams::new(5.94, 2.45).unwrap();
    let mass = integrate(
        |x| gamma_pdf(x, &p).unwrap(),
        0.0,
        50.0,
        QuadOptions::relative(1e-13),
    )
    .unwrap();
    assert!((mass.value - 1.0).abs() < 1e-9);
    assert_eq!(
        gamma_pdf(0.0, &GammaParams::new(2.0, 1.0).unwrap()).unwrap(),
        0.0
    );
    let e = GammaParams::new(1.0, 2.0).unwrap();
    for &x in &[0.0, 0.3, 2.0, 7.5] {
        assert!(rel(gamma_pdf(x, &e).unwrap(), 2.0 * (-2.0 * x).exp()) < 1e-13);
    }
    assert!(gamma_pdf(-1.0, &p).is_err());
}

proptest! {
    #[test]
    fn incomplete_gamma_completeness(a in 0.5f64..10.0, x in 0.0f64..50.0) {
        let p = policy();
        let total = lower_incomplete_gamma(a, x, &p).unwrap() + upper_incomplete_gamma(a, x, &p).unwrap();
        prop_assert!(rel(total, gamma(a)) <= 1e-12);
    }

    #[test]
    fn lower_gamma_is_monotone(a in 0.5f64..10.0, x in 0.0f64..40.0, dx in 0.0f64..5.0) {
        let p = policy();
        prop_assert!(lower_incomplete_gamma(a, x + dx, &p).unwrap() >= lower_incomplete_gamma(a, x, &p).unwrap());
    }

    #[test]
    fn kummer_transformation_consistent(a in 0.1f64..20.0, d in 0.1f64..20.0, z in -50.0f64..50.0) {
        // b > a keeps ₁F₁ free of real zeros, so relative error is meaningful
        let b = (a + d).max(0.5);
        let p = policy();
        let direct = kummer_1f1(a, b, z, &p).unwrap();
        let mirrored = z.exp() * kummer_1f1(b - a, b, -z, &p).unwrap();
        let reference = hyp1f1_ref(a, b, z);
        prop_assert!(direct.is_finite());
        prop_assert!(rel(direct, mirrored) <= 1e-9, "{} vs {}", direct, mirrored);
        prop_assert!(rel(direct, reference) <= 1e-9, "{} vs {}", direct, reference);
    }

    #[test]
    fn gamma_pdf_nonnegative(x in 0.0f64..100.0, a in 0.2f64..20.0, b in 0.1f64..10.0) {
        let p = GammaParams::new(a, b).unwrap();
        prop_assert!(gamma_pdf(x, &p).unwrap() >= 0.0);
    }

    #[test]
    fn kummer_is_finite_or_reports(a in -30.0f64..30.0, b in 0.5f64..40.0, z in -300.0f64..300.0) {
        let tight = EvalPolicy::new(1e-12, 60).unwrap();
        match kummer_1f1(a, b, z, &tight) {
            Ok(v) => prop_assert!(v.is_finite()),
            Err(e) => prop_assert!(e.is_numeric()),
        }
    }
}

#[test]
fn log_kummer_matches_direct_and_asymptote() {
    let p = policy();
    for &(a, b, z) in &[(5.94, 6.94, 3.0), (1.0, 2.0, 20.0), (0.7, 4.2, 55.0)] {
        let direct = kummer_1f1(a, b, z, &p).unwrap().ln();
        assert!((ln_kummer_1f1(a, b, z, &p).unwrap() - direct).abs() < 1e-12);
    }
    // ₁F₁(a; a+1; z) ≈ a e^z / z · (1 + (1 − a)/z) for large z
    let (a, z): (f64, f64) = (3.2, 5000.0);
    let lead = a.ln() + z - z.ln();
    let got = ln_kummer_1f1(a, a + 1.0, z, &p).unwrap();
    assert!((got - lead).abs() < 2.0 * (a - 1.0) / z);
    assert!(ln_kummer_1f1(-1.0, 2.0, 1.0, &p).is_err());
}
