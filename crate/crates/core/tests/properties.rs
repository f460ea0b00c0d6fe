use lacunary::multiplier::{apply_m, build_m, phi, MeasureInput, MultiplierSpec};
use lacunary::riesz::{riesz_coeffs, Parity, RieszProduct};
use lacunary::spectrum::{
    condition_value, CoefficientSequence, Coefficients, RadiusSequence, SpectrumSpec, WeightSequence,
};
use lacunary::torus::{analyze, lp_norm, sup_norm, synthesize, weak_l1, AtomicMeasure, SpectralVector};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn spectrum(max_log2_grid: u32) -> impl Strategy<Value = (usize, SpectralVector<f64>)> {
    (4..=max_log2_grid).prop_flat_map(|g| {
        let grid = 1usize << g;
        let half = grid as i64 / 2;
        prop::collection::vec((-half + 1..=half, -1.0..1.0f64, -1.0..1.0f64), 1..40).prop_map(move |terms| {
            let v = terms.into_iter().map(|(n, re, im)| (n, C::new(re, im))).collect();
            (grid, v)
        })
    })
}

fn mspec() -> MultiplierSpec {
    let spec = SpectrumSpec::new(RadiusSequence::affine_log(1.0, -10.5, 10).unwrap(), 8).unwrap();
    let w: Vec<f64> = (0..10).map(|k| 1.0 + 0.25 * k as f64).collect();
    build_m(&spec, &WeightSequence::from_table(w).unwrap(), 8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_and_parseval((grid, v) in spectrum(12)) {
        let f = synthesize(&v, grid).unwrap();
        let back = analyze(&f);
        for (n, c) in v.iter() {
            prop_assert!((back.get(n) - c).norm() < 1e-12);
        }
        let mean_sq = f.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() / grid as f64;
        prop_assert!((mean_sq - v.energy()).abs() <= 1e-10 * v.energy().max(1e-300));
    }

    #[test]
    fn norms_are_monotone((grid, v) in spectrum(10), p in 1.0..8.0f64, dp in 0.0..8.0f64) {
        let f = synthesize(&v, grid).unwrap();
        let lo = lp_norm(&f, p).unwrap();
        let hi = lp_norm(&f, p + dp).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        prop_assert!(hi <= sup_norm(&f) * (1.0 + 1e-12));
        prop_assert!(weak_l1(&f) <= lp_norm(&f, 1.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn measure_coefficients_bounded_by_mass(
        atoms in prop::collection::vec((-0.5..0.5f64, -1.0..1.0f64, -1.0..1.0f64), 1..20),
        n in -5000i64..5000,
    ) {
        let mu = AtomicMeasure::new(atoms.into_iter().map(|(x, re, im)| (x, C::new(re, im)))).unwrap();
        prop_assert!(mu.coeff(n).norm() <= mu.total_variation() * (1.0 + 1e-12));
    }

    #[test]
    fn multiplier_is_linear(
        xs in prop::collection::vec(-0.5..0.5f64, 1..8),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let m = mspec();
        let grid = 1 << 11;
        let nu1 = AtomicMeasure::new(xs.iter().map(|&x| (x, C::new(1.0, 0.0)))).unwrap();
        let nu2 = AtomicMeasure::new(xs.iter().map(|&x| (-x / 2.0, C::new(0.0, 1.0)))).unwrap();
        let both = AtomicMeasure::new(
            nu1.atoms().iter().map(|&(x, c)| (x, c * alpha)).chain(nu2.atoms().iter().map(|&(x, c)| (x, c * beta))),
        )
        .unwrap();
        let f1 = apply_m(MeasureInput::Atomic(&nu1), &m, grid).unwrap();
        let f2 = apply_m(MeasureInput::Atomic(&nu2), &m, grid).unwrap();
        let f = apply_m(MeasureInput::Atomic(&both), &m, grid).unwrap();
        for ((a, b), c) in f1.samples().iter().zip(f2.samples()).zip(f.samples()) {
            prop_assert!((a * alpha + b * beta - c).norm() < 1e-10);
        }
    }

    #[test]
    fn multiplier_is_reciprocal_weight_at_centers(k in 0usize..=8) {
        let m = mspec();
        let w = 1.0 + 0.25 * k as f64;
        prop_assert!((m.m(1 << k) * w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity(log2x in -30.0..30.0f64) {
        let x = log2x.exp2();
        let s: f64 = (-64..=64).map(|k| phi(x * (k as f64).exp2())).sum();
        prop_assert!((s - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn riesz_expansion_has_distinct_terms(
        m in 0usize..5,
        extra in 0usize..4,
        turns in prop::collection::vec(0.0..1.0f64, 4),
    ) {
        let n = m + extra;
        let p = RieszProduct::from_turns(Parity::Even, m, n, turns[..=extra].to_vec()).unwrap();
        let g = riesz_coeffs(&p).unwrap();
        prop_assert_eq!(g.get(0), C::new(1.0, 0.0));
        prop_assert!(g.len() == 3usize.pow(extra as u32 + 1));
        prop_assert!((g.l1() - 2f64.powi(extra as i32 + 1)).abs() < 1e-12);
    }

    #[test]
    fn condition_value_scales_with_weights(c in 0.1..10.0f64, n in 1usize..40) {
        let radii = RadiusSequence::affine_log(1.0, -11.0, 2 * n + 2).unwrap();
        let one = condition_value(&radii, &WeightSequence::constant(1.0, 2 * n + 2).unwrap(), n).unwrap();
        let scaled = condition_value(&radii, &WeightSequence::constant(c, 2 * n + 2).unwrap(), n).unwrap();
        prop_assert!((scaled.value * c * c - one.value).abs() <= 1e-12 * one.value.max(1.0));
    }

    #[test]
    fn weighted_energy_is_quadratic(values in prop::collection::vec(-3.0..3.0f64, 1..30), s in -4.0..4.0f64) {
        let w = WeightSequence::constant(1.5, values.len()).unwrap();
        let a = CoefficientSequence::from_real(&values).unwrap();
        let scaled = CoefficientSequence::from_real(&values.iter().map(|v| v * s).collect::<Vec<_>>()).unwrap();
        let e = a.weighted_energy(&w);
        prop_assert!((scaled.weighted_energy(&w) - s * s * e).abs() <= 1e-12 * e.max(1.0) * s * s + 1e-15);
    }
}
