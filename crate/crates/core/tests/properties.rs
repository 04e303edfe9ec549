use mjhmc::diagnostics::{autocorrelation, fit_decay, AutocorrSeries};
use mjhmc::energy::{EnergyFunction, Gaussian, RoughWell, RoughWellParams, rough_well_energy};
use mjhmc::ladder::{
    balance_check, build_hmc_ladder_chain, build_mjhmc_rate_matrix, embedded_chain, embedded_fixed_point_check, Ladder,
};
use mjhmc::phase::{flip, leapfrog, leapfrog_inverse, LeapfrogParams, PhaseState};
use mjhmc::rng::seeded;
use mjhmc::sampler::{sample_chain, systematic_indices, SamplerConfig, TransitionRates};
use proptest::prelude::*;

fn state(dim: usize) -> impl Strategy<Value = PhaseState> {
    (
        prop::collection::vec(-300.0..300.0f64, dim),
        prop::collection::vec(-3.0..3.0f64, dim),
    )
        .prop_map(|(x, v)| PhaseState::new(x, v).unwrap())
}

fn energies() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 3..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flfl_is_identity(z in state(2), eps in 0.05..1.5f64, steps in 1usize..30) {
        let ef = RoughWell::default();
        let p = LeapfrogParams::new(eps, steps).unwrap();
        let back = flip(&leapfrog(&flip(&leapfrog(&z, &p, &ef).unwrap()), &p, &ef).unwrap());
        prop_assert!(back.distance(&z) <= 1e-9 * z.norm().max(1.0));
        let inv = leapfrog_inverse(&leapfrog(&z, &p, &ef).unwrap(), &p, &ef).unwrap();
        prop_assert!(inv.distance(&z) <= 1e-9 * z.norm().max(1.0));
    }

    #[test]
    fn ripple_is_bounded(x in -1e4..1e4f64, y in -1e4..1e4f64, s1 in 1.0..500.0f64, s2 in 0.5..10.0f64) {
        let params = RoughWellParams::new(s1, s2).unwrap();
        let quad = (x * x + y * y) / (2.0 * s1 * s1);
        let ripple = rough_well_energy(&[x, y], &params).unwrap() - quad;
        prop_assert!((-2.0 - 1e-9..=2.0 + 1e-9).contains(&ripple));
    }

    #[test]
    fn gaussian_gradient_is_linear(prec in prop::collection::vec(0.1..10.0f64, 1..6), scale in -5.0..5.0f64) {
        let ef = Gaussian::new(prec.clone()).unwrap();
        let x: Vec<f64> = (0..prec.len()).map(|i| scale * (i as f64 + 1.0)).collect();
        let g = ef.gradient(&x).unwrap();
        for i in 0..x.len() {
            prop_assert!((g[i] - prec[i] * x[i]).abs() <= 1e-12 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn rates_are_valid(cur in -50.0..50.0f64, fwd in -50.0..50.0f64, back in -50.0..50.0f64, beta in 0.0..5.0f64) {
        let r = TransitionRates::from_energies(cur, fwd, back, beta).unwrap();
        prop_assert!(r.is_valid());
        prop_assert!(r.gamma_l > 0.0 && r.gamma_f >= 0.0);
        // gamma_L + gamma_F is the larger of the two one-sided rates
        let one_sided = (-(back - cur) / 2.0).exp();
        let want = r.gamma_l.max(one_sided);
        prop_assert!((r.gamma_l + r.gamma_f - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn ladder_invariants(e in energies()) {
        let ladder = Ladder::new(e).unwrap();
        let rates = build_mjhmc_rate_matrix(&ladder).unwrap();
        prop_assert!(rates.column_sum_residual() <= 1e-12);
        prop_assert!(balance_check(&rates, &ladder) <= 1e-10);
        prop_assert!(embedded_chain(&rates).unwrap().column_sum_residual() <= 1e-12);
        prop_assert!(embedded_fixed_point_check(&rates, &ladder).unwrap() <= 1e-10);
        prop_assert!(build_hmc_ladder_chain(&ladder).unwrap().column_sum_residual() <= 1e-12);
    }

    #[test]
    fn systematic_resampling_counts(weights in prop::collection::vec(1e-3..10.0f64, 1..50), n_out in 1usize..500, seed in any::<u64>()) {
        let idx = systematic_indices(&weights, n_out, &mut seeded(seed)).unwrap();
        prop_assert_eq!(idx.len(), n_out);
        prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(idx.iter().all(|&i| i < weights.len()));
        let total: f64 = weights.iter().sum();
        for (i, w) in weights.iter().enumerate() {
            let count = idx.iter().filter(|&&j| j == i).count() as f64;
            prop_assert!((count - n_out as f64 * w / total).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn autocorrelation_normalized_and_affine_invariant(
        xs in prop::collection::vec(-10.0..10.0f64, 20..200),
        a in 0.1..100.0f64,
        b in -50.0..50.0f64,
    ) {
        let var = {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        };
        prop_assume!(var > 1e-6);
        let pos: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let scaled: Vec<Vec<f64>> = xs.iter().map(|&x| vec![a * x + b]).collect();
        let counts: Vec<u64> = (0..xs.len() as u64).map(|i| 3 * i).collect();
        let c1 = autocorrelation(&pos, &counts, 15.0, 6).unwrap();
        let c2 = autocorrelation(&scaled, &counts, 15.0, 6).unwrap();
        prop_assert_eq!(c1.values[0], 1.0);
        for (p, q) in c1.values.iter().zip(&c2.values) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn chain_accounting(seed in any::<u64>(), steps in 1usize..8, eps in 0.05..0.8f64, beta in 0.01..2.0f64) {
        let ef = Gaussian::isotropic(2).unwrap();
        let init = PhaseState::new(vec![0.4, -0.2], vec![0.1, 0.9]).unwrap();
        let config = SamplerConfig::new(eps, steps, beta, 200, seed).unwrap();
        let samples = sample_chain(&config, &ef, init).unwrap();
        prop_assert_eq!(samples.len(), 200);
        prop_assert_eq!(samples[0].cumulative_gradient_evals, 2 * steps as u64 + 1);
        prop_assert!(samples.windows(2).all(|w| w[0].cumulative_gradient_evals <= w[1].cumulative_gradient_evals));
        prop_assert!(samples.iter().all(|s| s.holding_time > 0.0 && s.holding_time.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decay_fit_recovers_model(d in 1e-3..5e-2f64, b in 0.0..0.2f64) {
        let lags: Vec<f64> = (0..=100).map(|i| i as f64 * 5.0).collect();
        let values: Vec<f64> = lags.iter().map(|n| (-d * n).exp() * (b * n).cos()).collect();
        let fit = fit_decay(&AutocorrSeries::new(lags, values).unwrap()).unwrap();
        prop_assert!((fit.r_real + d).abs() <= 1e-4 * d.max(1e-2), "{:?} vs ({d}, {b})", fit);
        if b > 1e-3 {
            prop_assert!((fit.r_imag - b).abs() <= 1e-3, "{:?} vs ({d}, {b})", fit);
        }
    }
}
