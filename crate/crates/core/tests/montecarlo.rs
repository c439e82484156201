mod common;

use std::f64::consts::PI;

use flexcap::dynamics::{energy_window_gain_sq, ramp_weight, storage_gain_sq, LoadDynamics, QosEnvelope};
use flexcap::ensemble::{aggregate_bounds, homogeneous_aggregate};
use flexcap::montecarlo::{
    average_periodogram, qos_functionals, synthesize_correlated, synthesize_paths, MonteCarloOptions,
};
use flexcap::spectral::{FrequencyGrid, SpectralDensity, TimeSeries, PLANNING_DT_HOURS};
use flexcap::Error;

const DT: f64 = PLANNING_DT_HOURS;
const N: usize = 4096;

fn test_psd() -> SpectralDensity {
    common::band_limited(&FrequencyGrid::planning_default(), 2.0, 40.0, 800.0)
}

fn mean_second_moment(series: &[&TimeSeries]) -> f64 {
    series
        .iter()
        .map(|s| s.samples().iter().map(|x| x * x).sum::<f64>() / s.len() as f64)
        .sum::<f64>()
        / series.len() as f64
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `test_psd` with nothing below 1 rad/h, so the dropped DC cell of the
/// synthesis carries no mass even after low-pass weighting.
fn no_dc_psd() -> SpectralDensity {
    let base = test_psd();
    SpectralDensity::from_fn(base.grid().clone(), |w| if w < 1.0 { 0.0 } else { base.interpolate(w) }).unwrap()
}

/// Envelope with a one-hour energy window, shorter than a 4096-step path.
fn short_window() -> QosEnvelope {
    QosEnvelope::new([4.0, 0.8, 0.5, 1.11], DT, 1.0, [0.05; 4]).unwrap()
}

#[test]
fn sample_variance_matches_spectral_integral() {
    let psd = test_psd();
    let batch = synthesize_paths(&psd, N, DT, 200, 11).unwrap();
    let empirical = mean_second_moment(&batch.paths.iter().collect::<Vec<_>>());
    assert!(
        rel(empirical, psd.variance()) < 0.05,
        "{empirical} vs {}",
        psd.variance()
    );
    let lag0 = batch.paths.iter().map(|p| p.autocovariance(0)).sum::<f64>() / 200.0;
    assert!(rel(lag0, psd.variance()) < 0.05);
}

#[test]
fn storage_and_energy_follow_their_transfer_functions() {
    let psd = no_dc_psd();
    let qos = short_window();
    let dynamics = LoadDynamics::small_building();
    let batch = synthesize_paths(&psd, N, DT, 1000, 12).unwrap();
    let signals: Vec<_> = batch
        .paths
        .iter()
        .map(|p| qos_functionals(p, &qos, &dynamics).unwrap())
        .collect();

    let storage = mean_second_moment(&signals.iter().map(|s| &s.storage).collect::<Vec<_>>());
    let storage_pred = psd.weighted_integral(|w| storage_gain_sq(&dynamics, w)) / PI;
    assert!(rel(storage, storage_pred) < 0.10, "{storage} vs {storage_pred}");

    let energy = mean_second_moment(&signals.iter().map(|s| &s.energy).collect::<Vec<_>>());
    let energy_pred = psd.weighted_integral(|w| energy_window_gain_sq(qos.horizon, w)) / PI;
    assert!(rel(energy, energy_pred) < 0.05, "{energy} vs {energy_pred}");
}

#[test]
fn ramp_variance_is_twice_the_covariance_drop() {
    let psd = test_psd();
    let qos = short_window();
    let dynamics = LoadDynamics::small_building();
    let batch = synthesize_paths(&psd, N, DT, 200, 13).unwrap();
    let ramps: Vec<TimeSeries> = batch
        .paths
        .iter()
        .map(|p| qos_functionals(p, &qos, &dynamics).unwrap().ramp)
        .collect();
    let ramp_var = mean_second_moment(&ramps.iter().collect::<Vec<_>>());
    let r0 = batch.paths.iter().map(|p| p.autocovariance(0)).sum::<f64>() / 200.0;
    let r1 = batch.paths.iter().map(|p| p.autocovariance(1)).sum::<f64>() / 200.0;
    assert!(rel(ramp_var, 2.0 * (r0 - r1)) < 0.05);
    let predicted = psd.weighted_integral(|w| ramp_weight(qos.delta, w)) / PI;
    assert!(rel(ramp_var, predicted) < 0.05, "{ramp_var} vs {predicted}");
}

#[test]
fn duplicated_paths_quadruple_the_spectrum() {
    let psd = test_psd();
    let batch = synthesize_paths(&psd, N, DT, 100, 14).unwrap();
    let doubled: Vec<TimeSeries> = batch
        .paths
        .iter()
        .map(|p| TimeSeries::new(p.samples().iter().map(|x| 2.0 * x).collect(), DT, "sum").unwrap())
        .collect();
    let single = average_periodogram(&batch.paths).unwrap();
    let pair = average_periodogram(&doubled).unwrap();
    let expected = homogeneous_aggregate(&single, 2).unwrap();
    assert!(rel(pair.variance(), expected.variance()) < 0.10);
}

#[test]
fn independent_loads_sit_at_the_lower_bound() {
    let psd = test_psd();
    let loads = 5;
    let realizations = 100;
    let mut sums = Vec::new();
    for r in 0..realizations {
        let batch = synthesize_paths(&psd, N, DT, loads, 1000 + r).unwrap();
        let total: Vec<f64> = (0..N)
            .map(|k| batch.paths.iter().map(|p| p.samples()[k]).sum())
            .collect();
        sums.push(TimeSeries::new(total, DT, "aggregate").unwrap());
    }
    let empirical = mean_second_moment(&sums.iter().collect::<Vec<_>>());
    let lower = loads as f64 * psd.variance();
    assert!(rel(empirical, lower) < 0.10, "{empirical} vs {lower}");
}

#[test]
fn correlated_bins_stay_between_the_bounds() {
    let psd = test_psd();
    let (n1, n2) = (2.0, 3.0);
    let realizations = 400;
    let sums: Vec<TimeSeries> = (0..realizations)
        .map(|r| {
            // one path per bin; loads inside a bin are identical
            let b = synthesize_correlated(&psd, N, DT, 2, 5000 + r, 0.5).unwrap();
            let total = (0..N)
                .map(|k| n1 * b.paths[0].samples()[k] + n2 * b.paths[1].samples()[k])
                .collect();
            TimeSeries::new(total, DT, "aggregate").unwrap()
        })
        .collect();
    let est = average_periodogram(&sums).unwrap();
    let on_est = |s: f64| SpectralDensity::from_fn(est.grid().clone(), |w| s * psd.interpolate(w)).unwrap();
    let bounds = aggregate_bounds(&[on_est(n1 * n1), on_est(n2 * n2)], 2).unwrap();
    let inside: Vec<bool> = est
        .grid()
        .omegas()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0 && **w < 760.0)
        .map(|(i, _)| bounds.contains_at(&est, i, 0.0))
        .collect();
    let share = inside.iter().filter(|b| **b).count() as f64 / inside.len() as f64;
    assert!(share >= 0.95, "{share}");
}

#[test]
fn gaussian_tail_at_the_power_budget() {
    // variance ε·c1² with ε = 0.1: P(|X| ≥ c1) = 2Φ(−√10) ≈ 0.00157
    let c1 = 4.0;
    let base = test_psd();
    let psd = base.scaled(0.1 * c1 * c1 / base.variance()).unwrap();
    let batch = synthesize_paths(&psd, N, DT, 200, 15).unwrap();
    let total = (200 * N) as f64;
    let hits = batch
        .paths
        .iter()
        .flat_map(|p| p.samples())
        .filter(|x| x.abs() >= c1)
        .count() as f64;
    let p_hat = hits / total;
    assert!((0.0008..0.0030).contains(&p_hat), "{p_hat}");
}

#[test]
fn batches_are_reproducible() {
    let psd = test_psd();
    let a = synthesize_paths(&psd, 1024, DT, 4, 99).unwrap();
    let b = synthesize_paths(&psd, 1024, DT, 4, 99).unwrap();
    assert_eq!(a.paths, b.paths);
    let c = synthesize_paths(&psd, 1024, DT, 4, 100).unwrap();
    assert_ne!(a.paths, c.paths);
}

#[test]
fn mass_above_nyquist_is_rejected() {
    let psd = SpectralDensity::from_fn(FrequencyGrid::planning_default(), |_| 1.0).unwrap();
    let err = synthesize_paths(&psd, N, 2.0 * DT, 2, 1);
    assert!(matches!(err, Err(Error::Aliasing { .. })), "{err:?}");
}

#[test]
fn default_options_match_the_planning_step() {
    let o = MonteCarloOptions::default();
    assert_eq!((o.paths, o.n_samples), (200, 4096));
    assert!((o.dt - DT).abs() < 1e-15);
}
