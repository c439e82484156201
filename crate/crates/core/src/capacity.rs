//! Power and energy capacity of a spectrum and the coverage indices of an
//! aggregate against a target.
//!
//! For a zero-mean process with spectrum S, Chebyshev's inequality gives
//! P(|P̃| ≥ Pow(S)) ≤ ε with Pow(S) = √(∫S dω / (πε)), and likewise for the
//! energy window with the |G|²-weighted integral.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constraints::EnsembleSpec;
use crate::dynamics::{energy_window_gain_sq, QosEnvelope};
use crate::spectral::SpectralDensity;
use crate::{Error, Result};

/// Relative tolerance below zero tolerated for unused capacity.
pub const UNUSED_TOL: f64 = 1e-9;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")))
    }
}

/// `√(∫S dω / (π·eps))`, kW.
pub fn power_capacity(s: &SpectralDensity, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok((s.integral().max(0.0) / (PI * eps)).sqrt())
}

/// `√(∫|G(jω)|²S dω / (π·eps))` for the energy window of `horizon` hours, kWh.
pub fn energy_capacity(s: &SpectralDensity, eps: f64, horizon: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "energy window must be positive, got {horizon}"
        )));
    }
    let v = s.weighted_integral(|w| energy_window_gain_sq(horizon, w));
    Ok((v.max(0.0) / (PI * eps)).sqrt())
}

/// Coverage indices (ζ^P, ζ^E) in percent.
pub fn capacity_indices(
    aggregate: &SpectralDensity,
    target: &SpectralDensity,
    eps: (f64, f64),
    horizon: f64,
) -> Result<(f64, f64)> {
    if !aggregate.same_grid(target) {
        return Err(Error::GridMismatch);
    }
    let target_pow = power_capacity(target, eps.0)?;
    if target_pow == 0.0 {
        return Err(Error::UndefinedIndex("power"));
    }
    let target_eng = energy_capacity(target, eps.1, horizon)?;
    if target_eng == 0.0 {
        return Err(Error::UndefinedIndex("energy"));
    }
    let zeta_p = 100.0 * power_capacity(aggregate, eps.0)? / target_pow;
    let zeta_e = 100.0 * energy_capacity(aggregate, eps.1, horizon)? / target_eng;
    Ok((zeta_p, zeta_e))
}

/// `(c1 − Pow(S), c3 − Eng(S))` of one load, with ε1 and ε3.
pub fn unused_capacity(s: &SpectralDensity, qos: &QosEnvelope) -> Result<(f64, f64)> {
    let pow = qos.c1 - power_capacity(s, qos.eps[0])?;
    let eng = qos.c3 - energy_capacity(s, qos.eps[2], qos.horizon)?;
    if pow < -UNUSED_TOL * qos.c1 || eng < -UNUSED_TOL * qos.c3 {
        return Err(Error::Infeasible(format!(
            "spectrum exceeds the load's capacity (unused power {pow:.4e} kW, energy {eng:.4e} kWh)"
        )));
    }
    Ok((pow, eng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub pow_kw: f64,
    pub eng_kwh: f64,
    pub zeta_p: f64,
    pub zeta_e: f64,
    pub unused_pow_kw: f64,
    pub unused_eng_kwh: f64,
    pub eps_used: (f64, f64),
}

/// Largest Pow and Eng any spectrum admitted by the ensemble's power and
/// energy rows can reach, evaluated with `eps`.
pub fn ensemble_ceiling(ens: &EnsembleSpec, n_bin_scale: u64, eps: (f64, f64)) -> Result<(f64, f64)> {
    check_eps(eps.0)?;
    check_eps(eps.1)?;
    let scale = n_bin_scale as f64;
    let (mut p, mut e) = (0.0, 0.0);
    for b in ens.bins() {
        let m = scale * b.count as f64;
        p += m * b.qos.eps[0] * b.qos.c1 * b.qos.c1;
        e += m * b.qos.eps[2] * b.qos.c3 * b.qos.c3;
    }
    Ok(((p / eps.0).sqrt(), (e / eps.1).sqrt()))
}

/// Capacity summary of a projected aggregate.
///
/// ε is taken from the first bin; unused capacity is measured against
/// [`ensemble_ceiling`] with the same bin scale the aggregate was solved at,
/// which for a single load reduces to `(c1 − Pow, c3 − Eng)`.
pub fn capacity_report(
    aggregate: &SpectralDensity,
    target: &SpectralDensity,
    ens: &EnsembleSpec,
    n_bin_scale: u64,
) -> Result<CapacityReport> {
    let first = &ens.bins()[0].qos;
    let eps = (first.eps[0], first.eps[2]);
    let horizon = first.horizon;
    if ens.bins().iter().any(|b| b.qos.horizon != horizon) {
        return Err(Error::InvalidParameter("all bins must share the energy window".into()));
    }
    let pow = power_capacity(aggregate, eps.0)?;
    let eng = energy_capacity(aggregate, eps.1, horizon)?;
    let (zeta_p, zeta_e) = capacity_indices(aggregate, target, eps, horizon)?;
    let (ceil_p, ceil_e) = ensemble_ceiling(ens, n_bin_scale, eps)?;
    Ok(CapacityReport {
        pow_kw: pow,
        eng_kwh: eng,
        zeta_p,
        zeta_e,
        unused_pow_kw: ceil_p - pow,
        unused_eng_kwh: ceil_e - eng,
        eps_used: eps,
    })
}
