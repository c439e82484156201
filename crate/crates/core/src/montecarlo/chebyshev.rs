use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functionals::qos_functionals;
use super::synth::synthesize_paths;
use crate::capacity::{energy_capacity, power_capacity};
use crate::constraints::{feasibility_report, single_load_constraints};
use crate::dynamics::{LoadDynamics, QosEnvelope};
use crate::spectral::{SpectralDensity, PLANNING_DT_HOURS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloOptions {
    pub paths: usize,
    pub n_samples: usize,
    /// Hours.
    pub dt: f64,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            paths: 200,
            n_samples: 4096,
            dt: PLANNING_DT_HOURS,
        }
    }
}

/// Empirical exceedance frequency of one limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub name: String,
    pub threshold: f64,
    pub eps: f64,
    pub exceedances: u64,
    pub p_hat: f64,
    /// Independent paths.
    pub trials: usize,
    /// Samples per path.
    pub n_samples: usize,
    pub pass: bool,
}

impl LimitCheck {
    fn new(name: &str, threshold: f64, eps: f64, exceedances: u64, trials: usize, n_samples: usize) -> Self {
        let p_hat = exceedances as f64 / (trials * n_samples) as f64;
        Self {
            name: name.to_string(),
            threshold,
            eps,
            exceedances,
            p_hat,
            trials,
            n_samples,
            pass: p_hat <= eps + 3.0 * binomial_se(eps, trials),
        }
    }
}

/// Standard error of a frequency estimated from `trials` independent
/// trials. Samples within one path are correlated, so the path count is
/// used as the number of trials.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// |P̃| ≥ c1, |P̃_δ| ≥ c2, |Ẽ| ≥ c3, |θ̃| ≥ c4 against ε1..ε4.
    pub per_qos: Vec<LimitCheck>,
    /// |P̃| ≥ Pow(S) against ε1 and |Ẽ| ≥ Eng(S) against ε3.
    pub capacity: Vec<LimitCheck>,
    pub seed: u64,
    pub pass: bool,
}

impl ViolationReport {
    pub fn max_p_hat(&self) -> f64 {
        self.per_qos.iter().map(|c| c.p_hat).fold(0.0, f64::max)
    }
}

const QOS_NAMES: [&str; 4] = ["power", "ramp", "energy", "storage"];

/// Synthesizes `opts.paths` Gaussian paths with spectrum `psd`, evaluates
/// the QoS signals and counts limit exceedances.
///
/// `psd` must be feasible for a single load of the class; each limit passes
/// when its frequency is at most ε + 3 standard errors.
pub fn verify_chebyshev(
    psd: &SpectralDensity,
    qos: &QosEnvelope,
    dynamics: &LoadDynamics,
    seed: u64,
    opts: &MonteCarloOptions,
) -> Result<ViolationReport> {
    let cs = single_load_constraints(qos, dynamics, psd.grid())?;
    let rep = feasibility_report(std::slice::from_ref(psd), &cs)?;
    if !rep.feasible {
        let worst = rep
            .rows
            .iter()
            .min_by(|a, b| (a.margin / a.budget).total_cmp(&(b.margin / b.budget)))
            .expect("four rows");
        return Err(Error::Infeasible(format!(
            "{} row uses {:.3}× its budget",
            worst.tag,
            worst.value / worst.budget
        )));
    }
    let batch = synthesize_paths(psd, opts.n_samples, opts.dt, opts.paths, seed)?;
    let pow = power_capacity(psd, qos.eps[0])?;
    let eng = energy_capacity(psd, qos.eps[2], qos.horizon)?;
    let limits = qos.limits();

    // [four QoS limits, Pow, Eng]
    let counts = batch
        .paths
        .par_iter()
        .map(|path| -> Result<[u64; 6]> {
            let s = qos_functionals(path, qos, dynamics)?;
            let mut c = [0u64; 6];
            for (i, series) in s.as_array().iter().enumerate() {
                c[i] = series.samples().iter().filter(|x| x.abs() >= limits[i]).count() as u64;
            }
            c[4] = s.power.samples().iter().filter(|x| x.abs() >= pow).count() as u64;
            c[5] = s.energy.samples().iter().filter(|x| x.abs() >= eng).count() as u64;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold([0u64; 6], |mut acc, c| {
            acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
            acc
        });

    let (trials, n) = (opts.paths, opts.n_samples);
    let per_qos: Vec<LimitCheck> = (0..4)
        .map(|i| LimitCheck::new(QOS_NAMES[i], limits[i], qos.eps[i], counts[i], trials, n))
        .collect();
    // a zero spectrum has zero capacity; |x| ≥ 0 is then trivially true
    let capacity = vec![
        LimitCheck::new(
            "power_capacity",
            pow,
            qos.eps[0],
            if pow > 0.0 { counts[4] } else { 0 },
            trials,
            n,
        ),
        LimitCheck::new(
            "energy_capacity",
            eng,
            qos.eps[2],
            if eng > 0.0 { counts[5] } else { 0 },
            trials,
            n,
        ),
    ];
    let pass = per_qos.iter().chain(&capacity).all(|c| c.pass);
    Ok(ViolationReport {
        per_qos,
        capacity,
        seed,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FrequencyGrid;

    #[test]
    fn zero_spectrum_never_violates() {
        let grid = FrequencyGrid::planning_default();
        let opts = MonteCarloOptions {
            paths: 4,
            n_samples: 1024,
            ..Default::default()
        };
        let rep = verify_chebyshev(
            &SpectralDensity::zeros(grid),
            &QosEnvelope::small_building(),
            &LoadDynamics::small_building(),
            1,
            &opts,
        )
        .unwrap();
        assert!(rep.pass);
        assert!(rep.per_qos.iter().chain(&rep.capacity).all(|c| c.p_hat == 0.0));
    }

    #[test]
    fn inflated_spectrum_is_rejected() {
        let grid = FrequencyGrid::planning_default();
        let qos = QosEnvelope::small_building();
        let s = SpectralDensity::from_fn(grid, |w| if w < 10.0 { 1.0 } else { 0.0 }).unwrap();
        let err = verify_chebyshev(
            &s,
            &qos,
            &LoadDynamics::small_building(),
            1,
            &MonteCarloOptions::default(),
        );
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }
}
