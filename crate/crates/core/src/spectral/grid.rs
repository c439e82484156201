use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sampling interval of the finest time scale resolved by default: 10 s.
pub const PLANNING_DT_HOURS: f64 = 1.0 / 360.0;

/// A nonnegative frequency axis (rad/hour) starting at 0, with trapezoidal
/// quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr")]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct GridRepr {
    omegas: Vec<f64>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

impl TryFrom<GridRepr> for FrequencyGrid {
    type Error = Error;

    fn try_from(repr: GridRepr) -> Result<Self> {
        let grid = FrequencyGrid::new(repr.omegas)?;
        if let Some(w) = repr.weights {
            let consistent = w.len() == grid.weights.len()
                && w.iter()
                    .zip(&grid.weights)
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1e-300));
            if !consistent {
                return Err(Error::InvalidGrid(
                    "weights are not the trapezoid weights of omegas".into(),
                ));
            }
        }
        Ok(grid)
    }
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.len() < 2 {
            return Err(Error::InvalidGrid("need at least two frequencies".into()));
        }
        if omegas[0] != 0.0 {
            return Err(Error::InvalidGrid("first frequency must be 0".into()));
        }
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidGrid("non-finite frequency".into()));
        }
        if omegas.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidGrid("frequencies must be strictly increasing".into()));
        }
        let n = omegas.len();
        let mut weights = vec![0.0; n];
        for k in 0..n - 1 {
            let h = 0.5 * (omegas[k + 1] - omegas[k]);
            weights[k] += h;
            weights[k + 1] += h;
        }
        Ok(Self { omegas, weights })
    }

    /// `n` equally spaced points on `[0, omega_max]`.
    pub fn uniform(omega_max: f64, n: usize) -> Result<Self> {
        if !(omega_max > 0.0) || n < 2 {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs omega_max > 0 and n >= 2 (got {omega_max}, {n})"
            )));
        }
        let step = omega_max / (n - 1) as f64;
        let mut omegas: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
        omegas[n - 1] = omega_max;
        Self::new(omegas)
    }

    /// Linear spacing on `[0, omega_split]` with `n_linear` points, then
    /// logarithmic spacing up to `omega_max` for the remaining points.
    pub fn hybrid(n_total: usize, n_linear: usize, omega_split: f64, omega_max: f64) -> Result<Self> {
        if n_linear < 2 || n_total <= n_linear {
            return Err(Error::InvalidGrid(format!(
                "hybrid grid needs 2 <= n_linear < n_total (got {n_linear}, {n_total})"
            )));
        }
        if !(omega_split > 0.0) || !(omega_max > omega_split) {
            return Err(Error::InvalidGrid(format!(
                "hybrid grid needs 0 < omega_split < omega_max (got {omega_split}, {omega_max})"
            )));
        }
        let mut omegas = Vec::with_capacity(n_total);
        let step = omega_split / (n_linear - 1) as f64;
        omegas.extend((0..n_linear).map(|k| k as f64 * step));
        omegas[n_linear - 1] = omega_split;
        let n_log = n_total - n_linear;
        let ratio = (omega_max / omega_split).ln() / n_log as f64;
        omegas.extend((1..=n_log).map(|k| omega_split * (ratio * k as f64).exp()));
        omegas[n_total - 1] = omega_max;
        Self::new(omegas)
    }

    /// Default planning grid: 2048 points, linear below 1 rad/h and
    /// logarithmic up to the Nyquist frequency of a 10 s time step.
    pub fn planning_default() -> Self {
        Self::hybrid(2048, 512, 1.0, PI / PLANNING_DT_HOURS).expect("static grid parameters are valid")
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omega_max(&self) -> f64 {
        *self.omegas.last().expect("grid has at least two points")
    }

    /// Largest spacing between consecutive frequencies.
    pub fn max_spacing(&self) -> f64 {
        self.omegas.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
    }

    /// Trapezoidal quadrature of `values` sampled on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Trapezoidal quadrature of `kernel(ω)·values(ω)`.
    pub fn integrate_weighted(&self, values: &[f64], kernel: impl Fn(f64) -> f64) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.omegas
            .iter()
            .zip(&self.weights)
            .zip(values)
            .map(|((&om, w), v)| w * kernel(om) * v)
            .sum()
    }
}

/// A one-sided spectral density (kW² per rad/hour) on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr")]
pub struct SpectralDensity {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct DensityRepr {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl TryFrom<DensityRepr> for SpectralDensity {
    type Error = Error;

    fn try_from(repr: DensityRepr) -> Result<Self> {
        SpectralDensity::new(repr.grid, repr.values)
    }
}

impl SpectralDensity {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSpectrum(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSpectrum(format!(
                "value {} at index {k} is negative or non-finite",
                values[k]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: FrequencyGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.omegas().iter().map(|&w| f(w)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// ∫ S dω by trapezoidal quadrature.
    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// ∫ kernel(ω)·S(ω) dω.
    pub fn weighted_integral(&self, kernel: impl Fn(f64) -> f64) -> f64 {
        self.grid.integrate_weighted(&self.values, kernel)
    }

    /// Variance of a process with this density: (1/π)·∫ S dω.
    pub fn variance(&self) -> f64 {
        self.integral() / PI
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * factor).collect())
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }

    /// Pointwise sum of densities on a common grid.
    pub fn sum<'a>(spectra: impl IntoIterator<Item = &'a SpectralDensity>) -> Result<Self> {
        let mut iter = spectra.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidSpectrum("sum of zero spectra".into()))?;
        let mut values = first.values.clone();
        for s in iter {
            if !s.same_grid(first) {
                return Err(Error::GridMismatch);
            }
            values.iter_mut().zip(&s.values).for_each(|(a, b)| *a += b);
        }
        Self::new(first.grid.clone(), values)
    }

    /// Linear interpolation at `omega`; zero outside the grid.
    pub fn interpolate(&self, omega: f64) -> f64 {
        let om = self.grid.omegas();
        if omega < 0.0 || omega > self.grid.omega_max() {
            return 0.0;
        }
        let k = om.partition_point(|&w| w <= omega);
        if k == om.len() {
            return self.values[om.len() - 1];
        }
        let (w0, w1) = (om[k - 1], om[k]);
        let t = (omega - w0) / (w1 - w0);
        self.values[k - 1] * (1.0 - t) + self.values[k] * t
    }

    /// Exact integral of the piecewise-linear interpolant over `[a, b]`,
    /// clipped to the grid range. Summing over a partition of the grid range
    /// reproduces [`Self::integral`].
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        let om = self.grid.omegas();
        let lo = a.max(0.0);
        let hi = b.min(self.grid.omega_max());
        if hi <= lo {
            return 0.0;
        }
        let mut total = 0.0;
        let start = om.partition_point(|&w| w <= lo).max(1);
        for k in start..om.len() {
            let (w0, w1) = (om[k - 1], om[k]);
            if w0 >= hi {
                break;
            }
            let x0 = w0.max(lo);
            let x1 = w1.min(hi);
            if x1 <= x0 {
                continue;
            }
            let slope = (self.values[k] - self.values[k - 1]) / (w1 - w0);
            let f0 = self.values[k - 1] + slope * (x0 - w0);
            let f1 = self.values[k - 1] + slope * (x1 - w0);
            total += 0.5 * (f0 + f1) * (x1 - x0);
        }
        total
    }

    /// Smallest frequency below which `fraction` of the total mass lies.
    pub fn mass_quantile(&self, fraction: f64) -> f64 {
        let total = self.integral();
        if total <= 0.0 {
            return 0.0;
        }
        let om = self.grid.omegas();
        let mut acc = 0.0;
        for k in 1..om.len() {
            acc += 0.5 * (self.values[k] + self.values[k - 1]) * (om[k] - om[k - 1]);
            if acc >= fraction * total {
                return om[k];
            }
        }
        self.grid.omega_max()
    }
}
