use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SpectralDensity;
use crate::{Error, Result};

/// Default band-pass order.
pub const DEFAULT_ORDER: u32 = 4;

/// Pass band in rad/hour with a Butterworth-style magnitude roll-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Passband {
    lo: f64,
    hi: f64,
    order: u32,
}

impl Passband {
    pub fn new(lo: f64, hi: f64, order: u32) -> Result<Self> {
        if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pass band needs 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        if order == 0 {
            return Err(Error::InvalidParameter("filter order must be positive".into()));
        }
        Ok(Self { lo, hi, order })
    }

    /// Band edges given as ordinary frequencies in cycles per hour.
    pub fn from_cycles_per_hour(lo: f64, hi: f64, order: u32) -> Result<Self> {
        Self::new(2.0 * PI * lo, 2.0 * PI * hi, order)
    }

    /// Band edges given as ordinary frequencies in cycles per minute.
    pub fn from_cycles_per_minute(lo: f64, hi: f64, order: u32) -> Result<Self> {
        Self::from_cycles_per_hour(60.0 * lo, 60.0 * hi, order)
    }

    /// The high band [1/30, 1] cycles/min.
    pub fn high_default() -> Self {
        Self::from_cycles_per_minute(1.0 / 30.0, 1.0, DEFAULT_ORDER).expect("valid band")
    }

    /// The low band [1/8, 1/2] cycles/hour.
    pub fn low_default() -> Self {
        Self::from_cycles_per_hour(1.0 / 8.0, 0.5, DEFAULT_ORDER).expect("valid band")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// |F(jω)|²: a low-pass section at `hi` times a high-pass section at `lo`.
    pub fn gain_sq(&self, omega: f64) -> f64 {
        let n2 = 2.0 * self.order as f64;
        let low_pass = 1.0 / (1.0 + (omega / self.hi).powf(n2));
        let high_pass = if self.lo == 0.0 {
            1.0
        } else if omega <= 0.0 {
            0.0
        } else {
            1.0 / (1.0 + (self.lo / omega).powf(n2))
        };
        low_pass * high_pass
    }
}

/// The portion of `snd` the band asks flexible loads to supply:
/// `|F(jω)|²·S(ω)`.
pub fn bandpass_target(snd: &SpectralDensity, band: &Passband) -> SpectralDensity {
    let values = snd
        .grid()
        .omegas()
        .iter()
        .zip(snd.values())
        .map(|(&w, s)| band.gain_sq(w) * s)
        .collect();
    SpectralDensity::new(snd.grid().clone(), values).expect("filtered density stays nonnegative")
}
