use serde::{Deserialize, Serialize};

use crate::dynamics::{LoadDynamics, QosEnvelope};
use crate::spectral::TimeSeries;
use crate::{Error, Result};

/// Relative mismatch allowed between δ or T and a whole number of steps.
pub const STEP_TOL: f64 = 1e-3;

/// The four signals the QoS limits apply to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosSeries {
    /// P̃
    pub power: TimeSeries,
    /// P̃(t) − P̃(t − δ)
    pub ramp: TimeSeries,
    /// ∫ P̃ over the trailing window of length T
    pub energy: TimeSeries,
    /// θ̃, the storage-variable deviation
    pub storage: TimeSeries,
}

impl QosSeries {
    pub fn as_array(&self) -> [&TimeSeries; 4] {
        [&self.power, &self.ramp, &self.energy, &self.storage]
    }
}

/// Number of steps of length `dt` in `span`, if it is a whole number.
pub fn whole_steps(span: f64, dt: f64, what: &str) -> Result<usize> {
    let ratio = span / dt;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > STEP_TOL * k {
        return Err(Error::IncompatibleStep(format!(
            "{what} of {span} h is not a whole number of {dt} h steps"
        )));
    }
    Ok(k as usize)
}

/// Zero-order-hold discretization of `dθ/dt = −pole·θ + gain·P`:
/// `θ[k+1] = a·θ[k] + b·P[k]`.
pub fn zoh_coefficients(dynamics: &LoadDynamics, dt: f64) -> (f64, f64) {
    let a = (-dynamics.pole * dt).exp();
    let b = dynamics.gain * (1.0 - a) / dynamics.pole;
    (a, b)
}

/// QoS signals of a path treated as one period of a periodic signal, as
/// produced by [`super::synthesize_paths`].
///
/// The ramp and energy window wrap around the end of the path, so windows
/// longer than the path are handled exactly, and θ̃ starts from the
/// periodic steady state of the ZOH recursion instead of a transient.
pub fn qos_functionals(path: &TimeSeries, qos: &QosEnvelope, dynamics: &LoadDynamics) -> Result<QosSeries> {
    let dt = path.dt();
    let d = whole_steps(qos.delta, dt, "ramp interval")?;
    let w = whole_steps(qos.horizon, dt, "energy window")?;
    let p = path.samples();
    let n = p.len();

    let ramp: Vec<f64> = (0..n).map(|k| p[k] - p[(k + n - d % n) % n]).collect();

    // E[k] = dt·Σ_{j<w} p[k − j], indices mod n
    let total: f64 = p.iter().sum();
    let (full, rest) = (w / n, w % n);
    let mut prefix = vec![0.0; 2 * n + 1];
    for i in 0..2 * n {
        prefix[i + 1] = prefix[i] + p[i % n];
    }
    let energy: Vec<f64> = (0..n)
        .map(|k| {
            // p[k−rest+1 ..= k] shifted by n to stay nonnegative
            let hi = k + n + 1;
            let partial = prefix[hi] - prefix[hi - rest];
            dt * (full as f64 * total + partial)
        })
        .collect();

    let (a, b) = zoh_coefficients(dynamics, dt);
    let mut forced = 0.0;
    for x in p {
        forced = a * forced + b * x;
    }
    let decay = a.powi(n as i32);
    let mut theta = forced / (1.0 - decay);
    let mut storage = Vec::with_capacity(n);
    for x in p {
        theta = a * theta + b * x;
        storage.push(theta);
    }
    // storage[k] is θ after step k; rotate so storage[k] is θ at time k
    storage.rotate_right(1);

    let label = path.label();
    Ok(QosSeries {
        power: path.clone(),
        ramp: TimeSeries::new(ramp, dt, format!("{label}/ramp"))?,
        energy: TimeSeries::new(energy, dt, format!("{label}/energy"))?,
        storage: TimeSeries::new(storage, dt, format!("{label}/storage"))?,
    })
}

/// QoS signals of a non-periodic record. The first
/// `max(δ/dt, T/dt − 1, ⌈5/(pole·dt)⌉)` samples, which the ramp, window or
/// filter transient depend on, are dropped from all four outputs.
pub fn qos_functionals_causal(path: &TimeSeries, qos: &QosEnvelope, dynamics: &LoadDynamics) -> Result<QosSeries> {
    let dt = path.dt();
    let d = whole_steps(qos.delta, dt, "ramp interval")?;
    let w = whole_steps(qos.horizon, dt, "energy window")?;
    let settle = (5.0 / (dynamics.pole * dt)).ceil() as usize;
    let skip = d.max(w - 1).max(settle);
    let p = path.samples();
    let n = p.len();
    if n < skip + 2 {
        return Err(Error::SeriesTooShort {
            len: n,
            segment: skip + 2,
        });
    }
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + p[i];
    }
    let (a, b) = zoh_coefficients(dynamics, dt);
    let mut theta_all = Vec::with_capacity(n);
    let mut theta = 0.0;
    for x in p {
        theta_all.push(theta);
        theta = a * theta + b * x;
    }
    let range = skip..n;
    let label = path.label();
    Ok(QosSeries {
        power: TimeSeries::new(p[range.clone()].to_vec(), dt, label)?,
        ramp: TimeSeries::new(
            range.clone().map(|k| p[k] - p[k - d]).collect(),
            dt,
            format!("{label}/ramp"),
        )?,
        energy: TimeSeries::new(
            range
                .clone()
                .map(|k| dt * (prefix[k + 1] - prefix[k + 1 - w]))
                .collect(),
            dt,
            format!("{label}/energy"),
        )?,
        storage: TimeSeries::new(theta_all[range].to_vec(), dt, format!("{label}/storage"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::LoadKind;
    use approx::assert_relative_eq;

    fn qos(delta: f64, horizon: f64) -> QosEnvelope {
        QosEnvelope::new([1.0; 4], delta, horizon, [0.1; 4]).unwrap()
    }

    #[test]
    fn constant_path() {
        let dyn_ = LoadDynamics::new(LoadKind::Thermal, 2.0, 0.5).unwrap();
        let path = TimeSeries::new(vec![3.0; 64], 0.25, "c").unwrap();
        let q = qos(0.5, 4.0);
        for out in [
            qos_functionals(&path, &q, &dyn_).unwrap(),
            qos_functionals_causal(&path, &q, &dyn_).unwrap(),
        ] {
            assert!(out.ramp.samples().iter().all(|x| x.abs() < 1e-12));
            assert!(out.energy.samples().iter().all(|e| (e - 12.0).abs() < 1e-12));
        }
        let periodic = qos_functionals(&path, &q, &dyn_).unwrap();
        for t in periodic.storage.samples() {
            assert_relative_eq!(*t, 3.0 * 0.5 / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn impulse_gives_boxcar() {
        let mut s = vec![0.0; 32];
        s[4] = 2.0;
        let path = TimeSeries::new(s, 0.5, "impulse").unwrap();
        let dyn_ = LoadDynamics::new(LoadKind::Battery, 0.1, 1.0).unwrap();
        let out = qos_functionals(&path, &qos(0.5, 3.0), &dyn_).unwrap();
        let e = out.energy.samples();
        for (k, v) in e.iter().enumerate() {
            let expected = if (4..10).contains(&k) { 1.0 } else { 0.0 };
            assert_relative_eq!(*v, expected, epsilon = 1e-12);
        }
        let r = out.ramp.samples();
        assert_eq!(r[4], 2.0);
        assert_eq!(r[5], -2.0);
    }

    #[test]
    fn window_longer_than_path_wraps() {
        let s: Vec<f64> = (0..8).map(|k| (k as f64 * std::f64::consts::PI / 4.0).sin()).collect();
        let path = TimeSeries::new(s.clone(), 1.0, "sine").unwrap();
        let dyn_ = LoadDynamics::new(LoadKind::Thermal, 1.0, 1.0).unwrap();
        // 19 = 2 full periods + 3
        let out = qos_functionals(&path, &qos(1.0, 19.0), &dyn_).unwrap();
        for k in 0..8 {
            let expected: f64 = (0..19).map(|j| s[(k + 8 * 3 - j) % 8]).sum();
            assert_relative_eq!(out.energy.samples()[k], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn incompatible_step() {
        let path = TimeSeries::new(vec![0.0; 16], 0.3, "x").unwrap();
        let dyn_ = LoadDynamics::small_building();
        assert!(matches!(
            qos_functionals(&path, &qos(1.0, 3.0), &dyn_),
            Err(Error::IncompatibleStep(_))
        ));
    }
}
