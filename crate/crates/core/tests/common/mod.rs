//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::f64::consts::PI;

use flexcap::constraints::{rows_for, BinSpec, ConstraintRow, ConstraintSystem, EnsembleSpec};
use flexcap::dynamics::{LoadDynamics, QosEnvelope};
use flexcap::spectral::{FrequencyGrid, SpectralDensity};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Exact minimizer of Σ w_k (x_k − t_k)² over {x ≥ 0, A x ≤ b} for a
/// single bin, by enumerating every active set and keeping the KKT point
/// with the smallest objective. Only practical for a handful of variables.
pub fn qp_oracle(weights: &[f64], target: &[f64], rows: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let n = weights.len();
    let m = rows.len();
    let total = n + m;
    let objective = |x: &[f64]| -> f64 { (0..n).map(|k| weights[k] * (x[k] - target[k]).powi(2)).sum() };
    let mut best: Option<(f64, Vec<f64>)> = None;

    for mask in 0u32..(1 << total) {
        let bounds: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
        let active: Vec<usize> = (0..m).filter(|j| mask & (1 << (n + j)) != 0).collect();
        let dim = n + active.len() + bounds.len();
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        for k in 0..n {
            a[(k, k)] = 2.0 * weights[k];
            rhs[k] = 2.0 * weights[k] * target[k];
        }
        for (r, &j) in active.iter().enumerate() {
            for k in 0..n {
                a[(k, n + r)] = rows[j].0[k];
                a[(n + r, k)] = rows[j].0[k];
            }
            rhs[n + r] = rows[j].1;
        }
        let off = n + active.len();
        for (r, &k) in bounds.iter().enumerate() {
            // multiplier enters as −μ·e_k, the equation is x_k = 0
            a[(k, off + r)] = -1.0;
            a[(off + r, k)] = 1.0;
        }
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        let x: Vec<f64> = (0..n).map(|k| sol[k]).collect();
        let feasible = x.iter().all(|v| *v >= -1e-12)
            && rows
                .iter()
                .all(|(coef, b)| coef.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() <= b * (1.0 + 1e-10));
        let dual_ok = (n..dim).all(|i| sol[i] >= -1e-10);
        if feasible && dual_ok {
            let f = objective(&x);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
    }
    best.expect("convex problem has a KKT point").1
}

/// Positive spectrum made of a floor and a few Lorentzian bumps.
pub fn random_target(grid: &FrequencyGrid, rng: &mut ChaCha20Rng) -> SpectralDensity {
    let wmax = grid.omega_max();
    let bumps: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=4))
        .map(|_| {
            let centre = rng.random_range(0.0..wmax);
            let width = rng.random_range(0.01..0.3) * wmax;
            let height = 10f64.powf(rng.random_range(-1.0..2.0));
            (centre, width, height)
        })
        .collect();
    let floor = 10f64.powf(rng.random_range(-4.0..-1.0));
    SpectralDensity::from_fn(grid.clone(), |w| {
        floor
            + bumps
                .iter()
                .map(|(c, s, h)| h / (1.0 + ((w - c) / s).powi(2)))
                .sum::<f64>()
    })
    .unwrap()
}

/// One to three load classes perturbed from the building presets.
pub fn random_ensemble(rng: &mut ChaCha20Rng) -> EnsembleSpec {
    let n_bins = rng.random_range(1..=3);
    let bins = (0..n_bins)
        .map(|l| {
            let (qos, dynamics) = if rng.random_bool(0.5) {
                (QosEnvelope::small_building(), LoadDynamics::small_building())
            } else {
                (QosEnvelope::large_building(), LoadDynamics::large_building())
            };
            let f = |rng: &mut ChaCha20Rng| rng.random_range(0.5..2.0);
            let c = [qos.c1 * f(rng), qos.c2 * f(rng), qos.c3 * f(rng), qos.c4 * f(rng)];
            let eps = [0.01, 0.05, 0.1, 0.2][rng.random_range(0..4)];
            let qos = QosEnvelope::new(c, qos.delta, qos.horizon, [eps; 4]).unwrap();
            BinSpec::new(format!("bin{l}"), qos, dynamics, rng.random_range(1..500)).unwrap()
        })
        .collect();
    EnsembleSpec::new(bins).unwrap()
}

/// 5-point single-bin instance with the real kernels and random budgets
/// set to a fraction of the target's own row values, so several rows bind.
pub fn five_point_instance(seed: u64) -> (SpectralDensity, ConstraintSystem) {
    let mut rng = rng(seed);
    let grid = FrequencyGrid::uniform(rng.random_range(5.0..400.0), 5).unwrap();
    let values = (0..grid.len()).map(|_| rng.random_range(0.0..10.0)).collect();
    let target = SpectralDensity::new(grid.clone(), values).unwrap();
    let qos = QosEnvelope::small_building();
    let dynamics = LoadDynamics::small_building();
    let rows: Vec<ConstraintRow> = rows_for(&qos, &dynamics, &grid, 0, 1.0)
        .into_iter()
        .map(|mut r| {
            let value = r.evaluate(&grid, target.values());
            r.budget = if value > 0.0 {
                value * rng.random_range(0.05..1.5)
            } else {
                rng.random_range(0.1..1.0)
            };
            r
        })
        .collect();
    let cs = ConstraintSystem::from_rows(grid, 1, rows).unwrap();
    (target, cs)
}

/// Oracle solution of a single-bin instance built by [`five_point_instance`].
pub fn oracle_for(target: &SpectralDensity, cs: &ConstraintSystem) -> Vec<f64> {
    let grid = cs.grid();
    let rows: Vec<(Vec<f64>, f64)> = cs
        .rows()
        .iter()
        .map(|r| {
            (
                grid.weights().iter().zip(&r.kernel).map(|(w, k)| w * k).collect(),
                r.budget,
            )
        })
        .collect();
    qp_oracle(grid.weights(), target.values(), &rows)
}

/// Spectrum supported on `[0, cutoff]` with a smooth roll-off, suitable
/// for synthesis at steps with Nyquist frequency above `cutoff`.
pub fn band_limited(grid: &FrequencyGrid, level: f64, corner: f64, cutoff: f64) -> SpectralDensity {
    SpectralDensity::from_fn(grid.clone(), |w| {
        if w <= cutoff {
            level / (1.0 + (w / corner).powi(2))
        } else {
            0.0
        }
    })
    .unwrap()
}

/// Spectrum `a·low + b·high` with (a, b) chosen so that the power and
/// energy rows of `qos` are exactly at their budgets.
pub fn saturating_spectrum(grid: &FrequencyGrid, qos: &QosEnvelope) -> SpectralDensity {
    use flexcap::dynamics::energy_window_gain_sq;
    let low = |w: f64| (-(w / 0.05).powi(2)).exp();
    let high = |w: f64| if (10.0..20.0).contains(&w) { 1.0 } else { 0.0 };
    let g = |w: f64| energy_window_gain_sq(qos.horizon, w);
    let ones = vec![1.0; grid.len()];
    let p_low = grid.integrate_weighted(&ones, low);
    let p_high = grid.integrate_weighted(&ones, high);
    let e_low = grid.integrate_weighted(&ones, |w| low(w) * g(w));
    let e_high = grid.integrate_weighted(&ones, |w| high(w) * g(w));
    let bp = PI * qos.eps[0] * qos.c1 * qos.c1;
    let be = PI * qos.eps[2] * qos.c3 * qos.c3;
    let det = p_low * e_high - p_high * e_low;
    let a = (bp * e_high - p_high * be) / det;
    let b = (p_low * be - bp * e_low) / det;
    assert!(a > 0.0 && b > 0.0, "shape cannot saturate both rows: {a} {b}");
    SpectralDensity::from_fn(grid.clone(), |w| a * low(w) + b * high(w)).unwrap()
}
