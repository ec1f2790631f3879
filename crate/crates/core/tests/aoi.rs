use hemn::aoi::*;
use hemn::latency::{testbed_fits, GammaParams};
use hemn::quad::{integrate, integrate_to_infinity, QuadOptions};
use hemn::specfun::{gamma_cdf, gamma_pdf, EvalPolicy};
use hemn::uplink::{transmission_latency, NetworkConfig, OperatingPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn policy() -> EvalPolicy {
    EvalPolicy::default()
}

fn model(zeta: f64) -> AoiModel {
    let p = testbed_fits()
        .into_iter()
        .find(|(z, _)| *z == zeta)
        .unwrap()
        .1;
    let y = transmission_latency(&NetworkConfig::default().with_target_stp(zeta)).unwrap();
    AoiModel::new(p, 15.0 * zeta, y).unwrap()
}

/// Direct double integral over (X_{k−1}, X_k) with the exponential wait
/// integrated by hand; shares nothing with the library's reduction.
fn two_dim_oracle(m: &AoiModel, v: f64) -> f64 {
    let p = m.consensus;
    let rho = m.rate;
    let tc = v - m.tx_latency;
    let opts = QuadOptions::relative(1e-12).with_abs(1e-15);
    let f = |x: f64| gamma_pdf(x, &p).unwrap();
    let inner = |c: f64| {
        let below = integrate(|x| f(x) * (-rho * (c - x)).exp() / rho, 0.0, c, opts).unwrap();
        let above = integrate_to_infinity(|x| f(x) * (x - c + 1.0 / rho), c, opts).unwrap();
        below.value + above.value
    };
    let body = integrate(|xp| f(xp) * inner(tc - xp), 0.0, tc, opts)
        .unwrap()
        .value;
    let mean = p.mean() + 1.0 / rho;
    let tail = (1.0 - gamma_cdf(tc, &p).unwrap()) * mean;
    (body + tail) / mean
}

#[test]
fn quadrature_matches_two_dimensional_oracle() {
    for &(zeta, v) in &[(0.4, 4.0), (0.6, 2.5), (0.8, 5.0)] {
        let m = model(zeta);
        let q = violation_probability_quadrature(&m, &AoiQuery::new(v).unwrap()).unwrap();
        let o = two_dim_oracle(&m, v);
        assert!((q - o).abs() < 1e-8, "ζ={zeta} v={v}: {q} vs {o}");
    }
}

#[test]
fn series_agrees_with_quadrature_where_it_converges() {
    let mut converged = 0;
    for (zeta, _) in testbed_fits() {
        if zeta >= 1.0 {
            continue;
        }
        let m = model(zeta);
        for v in [2.0, 3.0, 4.0, 5.0, 6.0] {
            let query = AoiQuery::new(v).unwrap();
            let q = violation_probability_quadrature(&m, &query).unwrap();
            match violation_probability_series(&m, &query, &policy()) {
                Ok(s) => {
                    converged += 1;
                    assert!((s - q).abs() <= 1e-6, "ζ={zeta} v={v}: {s} vs {q}");
                }
                Err(e) => assert!(e.is_numeric(), "{e}"),
            }
            let eval = violation_probability(&m, &query, &policy()).unwrap();
            assert!((eval.probability - q).abs() <= FALLBACK_TOLERANCE);
            assert_eq!(eval.fallback.is_none(), eval.method == Method::Series);
        }
    }
    assert!(
        converged >= 7,
        "series converged at only {converged} points"
    );
}

#[test]
fn printed_series_form_is_off() {
    let m = model(0.4);
    let query = AoiQuery::new(2.0).unwrap();
    let q = violation_probability_quadrature(&m, &query).unwrap();
    let fixed =
        violation_probability_series_form(&m, &query, &policy(), SeriesForm::Corrected).unwrap();
    assert!((fixed - q).abs() < 1e-6);
    match violation_probability_series_form(&m, &query, &policy(), SeriesForm::AsPrinted) {
        Ok(s) => assert!((s - q).abs() > 1e-3, "{s} vs {q}"),
        Err(e) => assert!(e.is_numeric()),
    }
}

#[test]
fn renewal_monte_carlo_brackets_quadrature() {
    for (i, &(zeta, v)) in [(0.3, 2.0), (0.5, 4.0), (0.7, 3.0), (0.9, 6.0)]
        .iter()
        .enumerate()
    {
        let m = model(zeta);
        let query = AoiQuery::new(v).unwrap();
        let q = violation_probability_quadrature(&m, &query).unwrap();
        let mc = violation_probability_mc(&m, &query, 1_000_000, 40 + i as u64).unwrap();
        assert!(
            (mc.violation_fraction - q).abs() < 3.0 * mc.std_error,
            "ζ={zeta} v={v}: {} ± {} vs {q}",
            mc.violation_fraction,
            mc.std_error
        );
        assert!((mc.mean_cycle - m.mean_cycle()).abs() < 4.0 * mc.mean_cycle_se);
    }
}

#[test]
fn physical_path_brackets_quadrature() {
    let netcfg = NetworkConfig::default().with_target_stp(0.6);
    let m = model(0.6);
    let query = AoiQuery::new(4.0).unwrap();
    let q = violation_probability_quadrature(&m, &query).unwrap();
    let mc = physical_sample_path_mc(&netcfg, &m, &query, 200_000.0, 3).unwrap();
    assert!(
        (mc.violation_fraction - q).abs() < 3.0 * mc.std_error,
        "{mc:?} vs {q}"
    );
    assert!(mc.invalid_count > 0);
}

#[test]
fn zero_consensus_reduces_to_exponential_tail() {
    for (i, &(rho, v)) in [(6.0, 0.5), (12.0, 0.25)].iter().enumerate() {
        let exact = (-rho * v as f64).exp();
        let ren = renewal_mc(
            ConsensusLaw::Constant(0.0),
            rho,
            0.0,
            v,
            1_000_000,
            i as u64,
            RenewalOptions::default(),
        )
        .unwrap();
        assert!(
            (ren.violation_fraction - exact).abs() < 3.0 * ren.std_error,
            "{ren:?}"
        );
        let setup = PathSetup {
            law: ConsensusLaw::Constant(0.0),
            gen_rate: 15.0,
            success_prob: rho / 15.0,
            tx_latency: 0.0,
        };
        let path =
            physical_path_mc(setup, v, 100_000.0, 10 + i as u64, PathOptions::default()).unwrap();
        assert!(
            (path.violation_fraction - exact).abs() < 3.0 * path.std_error,
            "{path:?}"
        );
    }
}

fn random_model(rng: &mut ChaCha8Rng) -> AoiModel {
    let p = GammaParams::new(rng.random_range(0.5..10.0), rng.random_range(0.5..6.0)).unwrap();
    AoiModel::new(p, rng.random_range(1.0..20.0), rng.random_range(0.0..2.0)).unwrap()
}

// quadrature accuracy is 1e-10 relative, so comparisons carry that slack
const SLACK: f64 = 1e-9;

#[test]
fn monotone_in_target_and_transmission_latency() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let m = random_model(&mut rng);
        let mut prev = 1.0 + SLACK;
        for k in 1..=8 {
            let v = m.tx_latency + 0.75 * k as f64;
            let p = violation_probability(&m, &AoiQuery::new(v).unwrap(), &policy())
                .unwrap()
                .probability;
            assert!((0.0..=1.0).contains(&p));
            assert!(p <= prev + SLACK, "{m:?} v={v}: {p} > {prev}");
            prev = p;
        }
        let v = m.tx_latency + 3.0;
        let query = AoiQuery::new(v).unwrap();
        let mut prev = -SLACK;
        for k in 0..6 {
            let y = v * k as f64 / 6.0;
            let shifted = AoiModel::new(m.consensus, m.rate, y).unwrap();
            let p = violation_probability(&shifted, &query, &policy())
                .unwrap()
                .probability;
            assert!(p >= prev - SLACK, "{shifted:?}: {p} < {prev}");
            prev = p;
        }
    }
}

#[test]
fn boundary_is_exactly_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let m = random_model(&mut rng);
        if m.tx_latency == 0.0 {
            continue;
        }
        for v in [m.tx_latency, 0.5 * m.tx_latency] {
            let query = AoiQuery::new(v).unwrap();
            assert_eq!(
                violation_probability(&m, &query, &policy())
                    .unwrap()
                    .probability,
                1.0
            );
            assert_eq!(violation_probability_quadrature(&m, &query).unwrap(), 1.0);
            assert_eq!(
                violation_probability_series(&m, &query, &policy()).unwrap(),
                1.0
            );
        }
    }
    let inf = AoiModel::new(GammaParams::new(6.57, 3.82).unwrap(), 15.0, f64::INFINITY).unwrap();
    let query = AoiQuery::new(4.0).unwrap();
    assert_eq!(
        violation_probability(&inf, &query, &policy())
            .unwrap()
            .probability,
        1.0
    );
}

#[test]
fn sweep_properties() {
    let fits = testbed_fits();
    let net = NetworkConfig::default();
    let grid = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let point = OperatingPoint::TargetStp;

    let single = sweep_target_stp(&net, &fits, 4.0, &[0.6], point, &policy()).unwrap();
    assert_eq!(single.argmin, 0);
    assert!(!single.degenerate);

    let far = sweep_target_stp(&net, &fits, 100.0, &grid, point, &policy()).unwrap();
    assert!(far.low_contrast);
    assert!(far.points.iter().all(|p| p.probability < 1e-3));

    let base = sweep_target_stp(&net, &fits, 4.0, &grid, point, &policy()).unwrap();
    let mut heavy = net;
    heavy.packet_bits *= 2.0;
    let doubled = sweep_target_stp(&heavy, &fits, 4.0, &grid, point, &policy()).unwrap();
    for (a, b) in base.points.iter().zip(&doubled.points) {
        assert!((b.tx_latency - 2.0 * a.tx_latency).abs() < 1e-12 * b.tx_latency);
        assert!(b.probability >= a.probability - SLACK);
    }

    assert!(matches!(
        sweep_target_stp(&net, &fits, 4.0, &[0.65], point, &policy()),
        Err(hemn::Error::Config(_))
    ));
    assert!(sweep_target_stp(&net, &fits, 4.0, &[1.0], point, &policy()).is_err());
}
