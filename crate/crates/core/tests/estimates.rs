mod common;

use common::oracles::decaying_mode_energy;
use dimcert_core::estimates::*;
use dimcert_core::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn constants_match_a_rearranged_evaluation(
        mu in 1.2f64..8.0,
        sigma in 0.0f64..0.2,
        tau in 0.05f64..1.0,
        lf in 0.0f64..2.0,
        g in 0.0f64..5.0,
        phi0 in 0.0f64..10.0,
    ) {
        let p = ProblemParameters::new(mu, sigma, tau, lf).unwrap();
        let e = compute_estimates(&p, g, phi0);
        let beta = sigma * (1.0 + lf) * (mu * tau).exp();
        prop_assert!(rel(e.beta, beta) < 1e-12);
        let gap = mu - (sigma + 1.0);
        prop_assert!(rel(e.c2, (mu * tau).exp() * (-(sigma + 1.0) * tau).exp()) < 1e-12);
        if beta < mu && gap > 0.0 {
            // 1 + beta/(mu - beta) = mu/(mu - beta)
            let c3 = 2.0 * g / (mu - beta);
            let c1 = g * g / (mu * gap);
            let c4 = (e.c2 * phi0 * phi0 + c1) / 2.0 + c3 * c3 * (sigma + lf * lf) / gap;
            let c5 = c4.sqrt() + (1.0 + tau) * (g + c3 * (mu + sigma + lf));
            let grad = c4 + 2.0 * (g * g + c3 * c3 * (sigma * sigma + lf * lf));
            if g > 0.0 {
                prop_assert!(rel(e.c3.unwrap(), c3) < 1e-12);
                prop_assert!(rel(e.c1.unwrap(), c1) < 1e-12);
            } else {
                prop_assert_eq!(e.c3, Some(0.0));
            }
            prop_assert!(rel(e.c4.unwrap(), c4) < 1e-12);
            prop_assert!(rel(e.c5.unwrap(), c5) < 1e-12);
            prop_assert!(rel(e.gradient_bound.unwrap(), grad) < 1e-12);
            if gap > c3 && g > 0.0 {
                let alt = 2.0 * c1 / (1.0 - c3 / gap);
                prop_assert!(rel(e.c4_alt.unwrap(), alt) < 1e-12);
            }
        }
        prop_assert_eq!(e.dissipative(), beta < mu);
    }

    #[test]
    fn feasibility_flags_never_worsen_when_data_shrink(
        mu in 0.5f64..6.0,
        sigma in 0.0f64..0.5,
        tau in 0.05f64..1.5,
        lf in 0.0f64..2.0,
        g in 0.0f64..3.0,
        shrink in 0.0f64..1.0,
    ) {
        let flags = |s: f64, t: f64, l: f64, gg: f64| {
            let p = ProblemParameters::new(mu, s, t, l).unwrap();
            compute_estimates(&p, gg, 1.0).flags
        };
        let base = flags(sigma, tau, lf, g);
        for f in [
            flags(sigma * shrink, tau, lf, g),
            flags(sigma, tau * shrink.max(1e-3), lf, g),
            flags(sigma, tau, lf * shrink, g),
            flags(sigma, tau, lf, g * shrink),
        ] {
            prop_assert!(!base.dissipative || f.dissipative);
            prop_assert!(!base.energy_gap_positive || f.energy_gap_positive);
            prop_assert!(!base.alt_energy_gap_positive || f.alt_energy_gap_positive);
        }
    }

    #[test]
    fn absorbing_time_is_the_entry_time(d in 0.01f64..100.0) {
        let p = ProblemParameters::new(2.0, 0.1, 0.5, 1.0).unwrap();
        let e = compute_estimates(&p, 1.0, 0.0);
        let t = absorbing_time(&p, &e, d).unwrap();
        let transient = |t: f64| (2.0 * (0.5 - t)).exp() * d * (1.0 + ((e.beta) * t).exp());
        let half = e.c3.unwrap() / 2.0;
        prop_assert!(transient(t) <= half * (1.0 + 1e-12));
        if t > 0.0 {
            prop_assert!(transient(t * (1.0 - 1e-9)) > half);
        }
        let t2 = absorbing_time(&p, &e, 2.0 * d).unwrap();
        prop_assert!(t2 >= t);
    }
}

#[test]
fn absorbing_time_for_the_reference_configuration() {
    let p = ProblemParameters::new(2.0, 0.1, 0.5, 1.0).unwrap();
    let e = compute_estimates(&p, 1.0, 0.0);
    let c3 = e.c3.unwrap();
    assert!((c3 - 1.3733).abs() < 1e-4);
    let t = absorbing_time(&p, &e, 10.0 * c3).unwrap();
    assert!((t - 2.874).abs() < 1e-3, "{t}");
}

#[test]
fn absorbing_time_failures() {
    let bad = ProblemParameters::new(1.0, 0.5, 1.0, 1.0).unwrap();
    let e = compute_estimates(&bad, 1.0, 0.0);
    assert!(matches!(absorbing_time(&bad, &e, 1.0), Err(Error::Infeasible(_))));
    let unforced = ProblemParameters::new(2.0, 0.1, 0.5, 1.0).unwrap();
    let e = compute_estimates(&unforced, 0.0, 0.0);
    assert!(matches!(absorbing_time(&unforced, &e, 1.0), Err(Error::Infeasible(_))));
    assert_eq!(absorbing_time(&unforced, &e, 0.0).unwrap(), 0.0);
}

fn reference_params() -> ProblemParameters {
    ProblemParameters::new(2.0, 0.1, 0.5, 1.0)
        .unwrap()
        .with_forcing(ForcingSpec::gaussian(1.0, 0.0, 1.0).with_norm(1.0))
        .with_nonlinearity(NonlinearitySpec::new(NonlinearityKind::ScaledTanh, 1.0))
}

#[test]
fn small_ensemble_enters_the_absorbing_ball() {
    let p = reference_params();
    let grid = Grid::new(32.0, 512).unwrap();
    let e = compute_estimates(&p, 1.0, 0.0);
    let c3 = e.c3.unwrap();
    let t_d = absorbing_time(&p, &e, 10.0 * c3).unwrap();
    let spec = InitialHistorySpec::RandomBumps { max_norm: 10.0 * c3, support: 4.0, bumps: 3 };
    for i in 0..4 {
        let mut rng = SeededRng::for_member(7, i);
        let phi = HistorySegment::from_spec(&spec, grid, p.tau, 20, &mut rng);
        assert!(phi.norm() <= 10.0 * c3 * (1.0 + 1e-12));
        let traj = integrate(&phi, t_d + 4.0, &p).unwrap();
        let r = verify_absorption(&traj, &e, t_d + 2.0).unwrap();
        assert!(r.holds, "member {i}: ratio {}", r.ratio);
    }
}

#[test]
fn single_mode_energy_matches_closed_form() {
    let (mu, tau, amp) = (0.5, 0.5, 1.7);
    let grid = Grid::new(std::f64::consts::PI, 16).unwrap();
    let p = ProblemParameters::new(mu, 0.0, tau, 0.0).unwrap();
    let phi = HistorySegment::constant(Field::from_fn(grid, |x| amp * x.cos()), tau, 1000);
    let sg = HeatSemigroup::new(grid, mu);
    let traj = solver::integrate_with(&sg, &phi, 3.0, &p).unwrap();
    // ‖d/dx (amp cos x)‖² over one period is amp² pi; the mode decays at mu + 1.
    let g0 = amp * amp * std::f64::consts::PI;
    let windows = energy_integral(&traj, &sg, 0.0).unwrap();
    assert!(!windows.is_empty());
    for (t, v) in windows.iter().step_by(97) {
        let exact = decaying_mode_energy(g0, mu + 1.0, tau, *t);
        assert!(rel(*v, exact) < 1e-6, "t={t}: {v} vs {exact}");
    }
}

#[test]
fn zero_solution_has_zero_energy() {
    let grid = Grid::new(8.0, 64).unwrap();
    let p = ProblemParameters::new(2.0, 0.1, 0.5, 1.0).unwrap();
    let sg = HeatSemigroup::new(grid, p.mu);
    let traj = solver::integrate_with(&sg, &HistorySegment::constant(Field::zeros(grid), 0.5, 10), 2.0, &p).unwrap();
    let e = compute_estimates(&p, 0.0, 0.0);
    let r = verify_energy_integral(&traj, &e, &sg, 0.0).unwrap();
    assert_eq!(r.max_integral, 0.0);
    assert!(r.holds);
}

#[test]
fn dissipative_run_respects_the_energy_bound() {
    let p = reference_params();
    let grid = Grid::new(32.0, 512).unwrap();
    let sg = HeatSemigroup::new(grid, p.mu);
    let spec = InitialHistorySpec::RandomBumps { max_norm: 3.0, support: 4.0, bumps: 3 };
    let mut rng = SeededRng::new(3);
    let phi = HistorySegment::from_spec(&spec, grid, p.tau, 20, &mut rng);
    let e = compute_estimates(&p, 1.0, phi.last().norm());
    let t_d = absorbing_time(&p, &e, phi.norm()).unwrap();
    let traj = solver::integrate_with(&sg, &phi, t_d + 1.0 + p.tau + 3.0, &p).unwrap();
    let r = verify_energy_integral(&traj, &e, &sg, t_d).unwrap();
    assert!(r.holds, "{} > {}", r.max_integral, r.bound);
}

fn compact_run(seed: u64) -> solver::Trajectory {
    let p = ProblemParameters::new(2.0, 0.1, 0.5, 1.0)
        .unwrap()
        .with_forcing(ForcingSpec::compact(1.0, 0.0, 1.0).with_norm(1.0))
        .with_nonlinearity(NonlinearitySpec::new(NonlinearityKind::ScaledTanh, 1.0));
    let grid = Grid::new(32.0, 512).unwrap();
    let spec = InitialHistorySpec::RandomBumps { max_norm: 5.0, support: 1.0, bumps: 3 };
    let mut rng = SeededRng::for_member(11, seed);
    let phi = HistorySegment::from_spec(&spec, grid, p.tau, 20, &mut rng);
    integrate(&phi, 8.0, &p).unwrap()
}

#[test]
fn far_field_vacuous_threshold_returns_smallest_radius_at_time_zero() {
    let traj = compact_run(0);
    let radii = doubling_radii(0.5, 32.0);
    assert_eq!(radii, vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0]);
    let total = traj.segment_norms().iter().copied().fold(0.0, f64::max).powi(2);
    let r = verify_far_field(&traj, 2.0 * total, &radii).unwrap();
    assert_eq!(r.status, FarFieldStatus::Found);
    assert_eq!(r.t_emp, Some(0.0));
    assert_eq!(r.r_emp, Some(0.5));
}

#[test]
fn far_field_radius_grows_and_tail_stays_below_eps() {
    let radii = doubling_radii(0.5, 32.0);
    for seed in 0..3 {
        let traj = compact_run(seed);
        let mut last_r = 0.0;
        for k in 0..10 {
            let eps = 0.1 / 2f64.powi(k);
            let r = verify_far_field(&traj, eps, &radii).unwrap();
            assert_eq!(r.status, FarFieldStatus::Found);
            let radius = r.r_emp.unwrap();
            assert!(radius >= last_r);
            assert!(r.tail_mass.unwrap() <= eps);
            last_r = radius;
        }
        // Data and forcing live in |x| < 1; diffusion spreads them only a little.
        let r = verify_far_field(&traj, 1e-3, &radii).unwrap();
        assert!((2.0..=8.0).contains(&r.r_emp.unwrap()));
    }
}

#[test]
fn far_field_short_horizon_is_inconclusive() {
    let grid = Grid::new(8.0, 64).unwrap();
    let p = ProblemParameters::new(2.0, 0.1, 0.5, 1.0).unwrap();
    let phi = HistorySegment::constant(Field::from_fn(grid, |x| (-x * x).exp()), 0.5, 10);
    let traj = integrate(&phi, 0.2, &p).unwrap();
    let r = verify_far_field(&traj, 1e-3, &[0.5, 1.0]).unwrap();
    assert_eq!(r.status, FarFieldStatus::Inconclusive);
    assert!(verify_far_field(&traj, 0.0, &[1.0]).is_err());
}
