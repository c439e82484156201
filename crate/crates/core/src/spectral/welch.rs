use std::f64::consts::PI;

use rustfft::{num_complex::Complex64, FftPlanner};

use super::{FrequencyGrid, SpectralDensity, TimeSeries};
use crate::{Error, Result};

/// Welch defaults: 50 % overlap with a Hann window.
pub const DEFAULT_OVERLAP: f64 = 0.5;

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Welch averaged-periodogram estimate with a periodic Hann window.
///
/// The series mean is removed first. The result lives on the frequencies
/// `2πm/(L·dt)`, `m = 0..=L/2`, and is scaled so that
/// `(1/π)·∫ S dω` approximates the sample variance.
pub fn estimate_psd(series: &TimeSeries, segment_length: usize, overlap_fraction: f64) -> Result<SpectralDensity> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidParameter(format!(
            "overlap fraction must lie in [0, 1), got {overlap_fraction}"
        )));
    }
    if segment_length < 4 {
        return Err(Error::InvalidParameter(format!(
            "segment length must be at least 4, got {segment_length}"
        )));
    }
    let n = series.len();
    if segment_length > n {
        return Err(Error::SeriesTooShort {
            len: n,
            segment: segment_length,
        });
    }

    let mean = series.mean();
    let x: Vec<f64> = series.samples().iter().map(|v| v - mean).collect();
    let window = hann(segment_length);
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let step = ((segment_length as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);

    let fft = FftPlanner::new().plan_fft_forward(segment_length);
    let n_freq = segment_length / 2 + 1;
    let mut acc = vec![0.0; n_freq];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_length];
    let mut segments = 0usize;
    let mut start = 0;
    while start + segment_length <= n {
        for (b, (xv, w)) in buf.iter_mut().zip(x[start..].iter().zip(&window)) {
            *b = Complex64::new(xv * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let dt = series.dt();
    let scale = dt / (window_energy * segments as f64);
    let values: Vec<f64> = acc.iter().map(|a| a * scale).collect();
    let domega = 2.0 * PI / (segment_length as f64 * dt);
    let grid = FrequencyGrid::new((0..n_freq).map(|m| m as f64 * domega).collect())?;
    SpectralDensity::new(grid, values)
}

/// Number of segments [`estimate_psd`] averages for the given layout.
pub fn segment_count(len: usize, segment_length: usize, overlap_fraction: f64) -> usize {
    if segment_length == 0 || segment_length > len {
        return 0;
    }
    let step = ((segment_length as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    (len - segment_length) / step + 1
}
