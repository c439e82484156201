//! Aggregation of per-load and per-bin spectra.
//!
//! For loads whose pairwise cross-correlations are nonnegative, the
//! spectrum of the summed deviation is sandwiched between the sum of the
//! bin spectra and `n_bin` times that sum. Identical loads attain the upper
//! end: n copies of one signal have n² times its spectrum.

use serde::{Deserialize, Serialize};

use crate::spectral::SpectralDensity;
use crate::{Error, Result};

/// Spectrum of the sum of `n` identical copies of a load with spectrum
/// `per_load`: `n²·per_load`.
pub fn homogeneous_aggregate(per_load: &SpectralDensity, n: u64) -> Result<SpectralDensity> {
    if n == 0 {
        return Err(Error::InvalidParameter("aggregate needs at least one load".into()));
    }
    let n = n as f64;
    per_load.scaled(n * n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateBounds {
    pub lower: SpectralDensity,
    pub upper: SpectralDensity,
    pub n_bin: usize,
}

impl AggregateBounds {
    /// Whether `s` lies between the bounds at `omega_index`, with relative
    /// slack `tol`.
    pub fn contains_at(&self, s: &SpectralDensity, omega_index: usize, tol: f64) -> bool {
        let v = s.values()[omega_index];
        let lo = self.lower.values()[omega_index];
        let hi = self.upper.values()[omega_index];
        v >= lo * (1.0 - tol) && v <= hi * (1.0 + tol)
    }
}

/// Lower bound = pointwise sum of the bin spectra; upper = `n_bin` × lower.
pub fn aggregate_bounds(bin_sums: &[SpectralDensity], n_bin: usize) -> Result<AggregateBounds> {
    if n_bin == 0 {
        return Err(Error::InvalidParameter("n_bin must be at least 1".into()));
    }
    let lower = SpectralDensity::sum(bin_sums)?;
    let upper = lower.scaled(n_bin as f64)?;
    Ok(AggregateBounds { lower, upper, n_bin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FrequencyGrid;

    fn flat(level: f64) -> SpectralDensity {
        SpectralDensity::from_fn(FrequencyGrid::uniform(10.0, 11).unwrap(), |_| level).unwrap()
    }

    #[test]
    fn homogeneous_scaling() {
        let s = flat(1.0);
        assert_eq!(homogeneous_aggregate(&s, 1).unwrap(), s);
        assert!(homogeneous_aggregate(&s, 3).unwrap().values().iter().all(|v| *v == 9.0));
        assert!(homogeneous_aggregate(&s, 0).is_err());
    }

    #[test]
    fn bounds_of_two_flat_bins() {
        let b = aggregate_bounds(&[flat(1.0), flat(2.0)], 2).unwrap();
        assert!(b.lower.values().iter().all(|v| *v == 3.0));
        assert!(b.upper.values().iter().all(|v| *v == 6.0));
        assert!(b.contains_at(&flat(4.0), 0, 0.0));
        assert!(!b.contains_at(&flat(7.0), 0, 0.0));
        let one = aggregate_bounds(&[flat(1.0)], 1).unwrap();
        assert_eq!(one.lower, one.upper);
    }

    #[test]
    fn mismatched_grids() {
        let other = SpectralDensity::zeros(FrequencyGrid::uniform(10.0, 12).unwrap());
        assert!(matches!(
            aggregate_bounds(&[flat(1.0), other], 2),
            Err(Error::GridMismatch)
        ));
    }
}
