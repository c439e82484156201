//! Spectral densities: estimation from data, rational models and the
//! band-pass step that turns a net-demand spectrum into a target.

mod arma;
mod bandpass;
mod grid;
mod series;
mod welch;

pub use arma::{evaluate_arma_psd, fit_arma_spectrum, ArmaFit, ArmaSpectrum, FIT_STARTS};
pub use bandpass::{bandpass_target, Passband, DEFAULT_ORDER};
pub use grid::{FrequencyGrid, SpectralDensity, PLANNING_DT_HOURS};
pub use series::{read_net_demand_csv, GapFill, TimeSeries};
pub use welch::{estimate_psd, segment_count, DEFAULT_OVERLAP};

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bandpass_is_monotone(
            base in proptest::collection::vec(0.0f64..10.0, 32),
            bump in proptest::collection::vec(0.0f64..5.0, 32),
            lo in 0.01f64..1.0,
            width in 0.5f64..20.0,
            order in 1u32..8,
        ) {
            let g = FrequencyGrid::uniform(25.0, 32).unwrap();
            let band = Passband::new(lo, lo + width, order).unwrap();
            let a = SpectralDensity::new(g.clone(), base.clone()).unwrap();
            let b = SpectralDensity::new(g, base.iter().zip(&bump).map(|(x, y)| x + y).collect()).unwrap();
            let fa = bandpass_target(&a, &band);
            let fb = bandpass_target(&b, &band);
            for ((x, y), s) in fa.values().iter().zip(fb.values()).zip(a.values()) {
                prop_assert!(*x >= 0.0);
                prop_assert!(x <= y);
                prop_assert!(x <= s);
            }
        }

        #[test]
        fn arma_round_trip(
            k1 in -0.9f64..0.9,
            k2 in -0.8f64..0.8,
            m1 in -0.8f64..0.8,
            log_s2 in -2.0f64..4.0,
        ) {
            let ar = {
                // step-up of (k1, k2)
                vec![k1 + k2 * k1, k2]
            };
            let model = ArmaSpectrum::new(ar, vec![m1], log_s2.exp(), 0.5).unwrap();
            let grid = FrequencyGrid::uniform(model.nyquist(), 400).unwrap();
            let dense = evaluate_arma_psd(&model, &grid);
            let fit = fit_arma_spectrum(&dense, 2, 1).unwrap();
            let refit = evaluate_arma_psd(&fit.model, &grid);
            let rmse = (dense.values().iter().zip(refit.values())
                .map(|(a, b)| (a.ln() - b.ln()).powi(2)).sum::<f64>() / grid.len() as f64).sqrt();
            prop_assert!(rmse <= 0.05, "rmse {}", rmse);
        }
    }
}
