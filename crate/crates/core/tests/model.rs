use dimcert_core::model::config_to_json;
use dimcert_core::*;
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = NonlinearityKind> {
    prop_oneof![
        Just(NonlinearityKind::ScaledTanh),
        Just(NonlinearityKind::ScaledSin),
        Just(NonlinearityKind::SaturatingLinear),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn nonlinearity_respects_its_lipschitz_constant(
        kind in kinds(),
        scale in -3.0f64..3.0,
        u in -50.0f64..50.0,
        v in -50.0f64..50.0,
    ) {
        let f = NonlinearitySpec::new(kind, scale);
        let lhs = (f.eval(u) - f.eval(v)).abs();
        prop_assert!(lhs <= f.lipschitz() * (u - v).abs() + 1e-12);
        prop_assert_eq!(f.eval(0.0), 0.0);
    }
}

proptest! {
    #[test]
    fn dissipativity_is_monotone_in_sigma_tau_lf(
        mu in 0.1f64..5.0,
        sigma in 0.0f64..1.0,
        tau in 0.01f64..2.0,
        lf in 0.0f64..2.0,
        shrink in 0.0f64..1.0,
    ) {
        let p = ProblemParameters::new(mu, sigma, tau, lf).unwrap();
        if check_dissipativity(&p).holds {
            for q in [
                ProblemParameters::new(mu, sigma * shrink, tau, lf).unwrap(),
                ProblemParameters::new(mu, sigma, tau * shrink.max(1e-3), lf).unwrap(),
                ProblemParameters::new(mu, sigma, tau, lf * shrink).unwrap(),
            ] {
                prop_assert!(check_dissipativity(&q).holds);
            }
        }
    }
}

#[test]
fn dissipativity_threshold_value() {
    let p = ProblemParameters::new(2.0, 0.1, 0.5, 1.0).unwrap();
    let d = check_dissipativity(&p);
    assert!((d.beta - 0.2 * 1f64.exp()).abs() < 1e-15);
    assert!(d.holds);
    let q = ProblemParameters::new(1.0, 0.5, 1.0, 1.0).unwrap();
    assert!(!check_dissipativity(&q).holds);
}

#[test]
fn compact_forcing_norm_matches_quadrature() {
    let g = ForcingSpec::compact(1.7, 0.3, 2.0);
    let n = 200_000;
    let (a, b) = (-1.7, 2.3);
    let h = (b - a) / n as f64;
    let sum: f64 = (0..n)
        .map(|i| g.eval(a + (i as f64 + 0.5) * h).powi(2))
        .sum();
    assert!(((sum * h).sqrt() - g.l2_norm()).abs() < 1e-8);
    assert!((g.with_norm(1.0).l2_norm() - 1.0).abs() < 1e-14);
}

#[test]
fn gaussian_forcing_norm_matches_closed_form() {
    let g = ForcingSpec::gaussian(2.0, -1.0, 0.5);
    let expected = 2.0 * (0.5 * std::f64::consts::PI.sqrt()).sqrt();
    assert!((g.l2_norm() - expected).abs() < 1e-12);
}

const FULL: &str = r#"{
    "mu": 2.0, "sigma": 0.1, "tau": 0.5, "lf": 1.0,
    "nonlinearity": {"kind": "scaled_tanh"},
    "forcing": {"kind": "gaussian_bump", "amplitude": 0.75, "center": 0.0, "width": 1.0},
    "grid": {"half_length": 32.0, "points": 512},
    "run": {"steps_per_delay": 20, "cutoff_radius": 4.0, "ensemble": 3,
            "initial": {"kind": "random_bumps", "max_norm": 2.0, "support": 3.0}}
}"#;

#[test]
fn config_round_trips_through_json() {
    let cfg = parse_config(FULL).unwrap();
    assert_eq!(cfg.params.nonlinearity.scale, 1.0);
    assert_eq!(cfg.run.ensemble, 3);
    let again = parse_config(&config_to_json(&cfg)).unwrap();
    assert_eq!(cfg, again);
}

#[test]
fn config_errors_name_the_offending_key() {
    let unknown = FULL.replace("\"lf\": 1.0,", "\"lf\": 1.0, \"lipschitz\": 2,");
    let e = parse_config(&unknown).unwrap_err();
    assert_eq!(e.key(), Some("lipschitz"));

    let bad_tau = FULL.replace("\"tau\": 0.5", "\"tau\": -0.5");
    assert_eq!(parse_config(&bad_tau).unwrap_err().key(), Some("tau"));

    let bad_grid = FULL.replace("\"points\": 512", "\"points\": 500");
    assert!(parse_config(&bad_grid).is_err());

    let missing = FULL.replace("\"mu\": 2.0,", "");
    assert_eq!(parse_config(&missing).unwrap_err().key(), Some("mu"));
}

#[test]
fn zero_coupling_is_accepted_and_negative_rejected() {
    let zero = FULL.replace("\"sigma\": 0.1", "\"sigma\": 0.0");
    assert_eq!(parse_config(&zero).unwrap().params.sigma, 0.0);
    let neg = FULL.replace("\"sigma\": 0.1", "\"sigma\": -0.1");
    assert_eq!(parse_config(&neg).unwrap_err().key(), Some("sigma"));
}

#[test]
fn higher_spatial_dimension_parses_but_has_no_spectrum() {
    let d2 = FULL.replace("\"lf\": 1.0,", "\"lf\": 1.0, \"spatial_dim\": 2,");
    let cfg = parse_config(&d2).unwrap();
    assert_eq!(cfg.params.spatial_dim, 2);
    assert!(matches!(
        spectral_partition(&cfg.params, 4.0, 1, 4, 4),
        Err(Error::UnsupportedDimension(2))
    ));
    let d0 = FULL.replace("\"lf\": 1.0,", "\"lf\": 1.0, \"spatial_dim\": 0,");
    assert_eq!(parse_config(&d0).unwrap_err().key(), Some("spatial_dim"));
}
