use dimcert_core::*;
use proptest::prelude::*;

fn gaussian(grid: Grid, c: f64, w: f64) -> Field {
    Field::from_fn(grid, |x| (-(x - c) * (x - c) / (2.0 * w * w)).exp())
}

/// Damped heat flow of `exp(-x^2 / (2 w^2))` on the line.
fn heat_gaussian(x: f64, w: f64, t: f64, mu: f64) -> f64 {
    let v = w * w + 2.0 * t;
    (-mu * t).exp() * (w * w / v).sqrt() * (-x * x / (2.0 * v)).exp()
}

#[test]
fn constant_field_decays_exactly() {
    let grid = Grid::new(10.0, 64).unwrap();
    let out = apply_semigroup(2f64.ln(), &Field::constant(grid, 3.0), 1.0).unwrap();
    for v in out.values {
        assert!((v - 1.5).abs() < 1e-10);
    }
}

#[test]
fn gaussian_matches_heat_kernel_on_4096_points() {
    let grid = Grid::new(40.0, 4096).unwrap();
    for &(w, t, mu) in &[(1.0, 1.0, 0.5), (0.7, 0.25, 2.0), (1.5, 3.0, 0.0)] {
        let out = apply_semigroup(t, &gaussian(grid, 0.0, w), mu).unwrap();
        let err = grid
            .nodes()
            .iter()
            .zip(&out.values)
            .map(|(&x, &v)| (v - heat_gaussian(x, w, t, mu)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "w={w} t={t}: {err}");
    }
}

#[test]
fn zero_time_is_identity() {
    let grid = Grid::new(8.0, 128).unwrap();
    let f = gaussian(grid, 1.0, 0.6);
    let g = apply_semigroup(0.0, &f, 3.0).unwrap();
    for (a, b) in f.values.iter().zip(&g.values) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn negative_time_is_rejected() {
    let grid = Grid::new(8.0, 16).unwrap();
    assert!(apply_semigroup(-1.0, &Field::zeros(grid), 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_equals_sum_of_times(
        s in 0.0f64..2.0,
        t in 0.0f64..2.0,
        mu in 0.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let grid = Grid::new(12.0, 256).unwrap();
        let mut rng = SeededRng::new(seed);
        let f = Field { values: (0..grid.points).map(|_| rng.normal()).collect(), grid };
        let sg = HeatSemigroup::new(grid, mu);
        let two = sg.apply(t, &sg.apply(s, &f).unwrap()).unwrap();
        let one = sg.apply(s + t, &f).unwrap();
        prop_assert!(two.sub(&one).norm() <= 1e-12 * f.norm().max(1.0));
    }

    #[test]
    fn norm_decays_at_least_at_rate_mu(
        t in 0.0f64..3.0,
        mu in 0.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let grid = Grid::new(12.0, 256).unwrap();
        let mut rng = SeededRng::new(seed);
        let f = Field { values: (0..grid.points).map(|_| rng.uniform_in(-1.0, 1.0)).collect(), grid };
        prop_assert!(semigroup_decay_check(&f, t, mu).unwrap().ok);
    }

    #[test]
    fn smooth_gaussians_stay_positive(
        c in -4.0f64..4.0,
        w in 0.5f64..2.0,
        t in 0.01f64..3.0,
    ) {
        let grid = Grid::new(20.0, 1024).unwrap();
        let out = apply_semigroup(t, &gaussian(grid, c, w), 0.5).unwrap();
        prop_assert!(out.values.iter().all(|&v| v > -1e-14));
    }
}
