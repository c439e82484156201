use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::spectral::{FrequencyGrid, SpectralDensity, TimeSeries};
use crate::{Error, Result};

/// Largest fraction of spectral mass allowed above the synthesis Nyquist
/// frequency.
pub const ALIASING_TOL: f64 = 1e-6;

/// Stream index of the innovation shared by correlated paths.
const SHARED_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBatch {
    pub paths: Vec<TimeSeries>,
    pub source_psd: SpectralDensity,
    pub seed: u64,
}

impl PathBatch {
    pub fn dt(&self) -> f64 {
        self.paths[0].dt()
    }

    pub fn n_samples(&self) -> usize {
        self.paths[0].len()
    }
}

/// Frequency-domain coloring of white Gaussian noise.
///
/// Each harmonic `ω_m = 2πm/(N·dt)` carries an independent Gaussian
/// amplitude whose variance is `(1/π)·∫S` over its frequency cell, so the
/// path variance equals `(1/π)·∫S` up to the truncation at π/dt. The DC
/// cell is dropped, making every path exactly zero-mean. Paths are one
/// period of a periodic signal.
pub struct Colorer {
    n: usize,
    dt: f64,
    /// √(cell variance) for m = 1..=N/2
    amplitude: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Colorer {
    pub fn new(psd: &SpectralDensity, n_samples: usize, dt: f64) -> Result<Self> {
        if n_samples < 4 || !n_samples.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "path length must be a power of two ≥ 4, got {n_samples}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let nyquist = PI / dt;
        let total = psd.integral();
        if total > 0.0 {
            let above = psd.integral_between(nyquist, f64::INFINITY);
            if above > ALIASING_TOL * total {
                return Err(Error::Aliasing {
                    mass_fraction: above / total,
                    nyquist,
                });
            }
        }
        let dw = 2.0 * PI / (n_samples as f64 * dt);
        let half = n_samples / 2;
        let amplitude = (1..=half)
            .map(|m| {
                let w = m as f64 * dw;
                let hi = if m == half { w } else { w + 0.5 * dw };
                (psd.integral_between(w - 0.5 * dw, hi).max(0.0) / PI).sqrt()
            })
            .collect();
        let ifft = FftPlanner::new().plan_fft_inverse(n_samples);
        Ok(Self {
            n: n_samples,
            dt,
            amplitude,
            ifft,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Variance of every synthesized path.
    pub fn path_variance(&self) -> f64 {
        self.amplitude.iter().map(|a| a * a).sum()
    }

    /// Standard normal pairs (A_m, B_m), m = 1..=N/2, from `rng`.
    pub fn draw_innovation(&self, rng: &mut ChaCha20Rng) -> Vec<(f64, f64)> {
        self.amplitude
            .iter()
            .map(|_| (StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect()
    }

    /// Path with harmonic m equal to `amp_m·(A_m cos ω_m t + B_m sin ω_m t)`.
    pub fn color(&self, innovation: &[(f64, f64)]) -> Vec<f64> {
        let n = self.n;
        let half = n / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for m in 1..half {
            let (a, b) = innovation[m - 1];
            let c = Complex64::new(a, -b) * (0.5 * self.amplitude[m - 1]);
            buf[m] = c;
            buf[n - m] = c.conj();
        }
        let (a, _) = innovation[half - 1];
        buf[half] = Complex64::new(a * self.amplitude[half - 1], 0.0);
        self.ifft.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `count` independent zero-mean Gaussian paths with spectrum `psd`.
/// Path `i` draws from stream `i` of a ChaCha20 generator seeded with
/// `seed`, so batches are reproducible and independent of thread count.
pub fn synthesize_paths(
    psd: &SpectralDensity,
    n_samples: usize,
    dt: f64,
    count: usize,
    seed: u64,
) -> Result<PathBatch> {
    synthesize_correlated(psd, n_samples, dt, count, seed, 0.0)
}

/// Paths sharing a fraction `rho` of their innovation:
/// `√ρ·shared + √(1−ρ)·private`. Every path has spectrum `psd`, and every
/// pair has cross-spectrum `ρ·psd ≥ 0`.
pub fn synthesize_correlated(
    psd: &SpectralDensity,
    n_samples: usize,
    dt: f64,
    count: usize,
    seed: u64,
    rho: f64,
) -> Result<PathBatch> {
    if count == 0 {
        return Err(Error::InvalidParameter("path count must be positive".into()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "mixing weight must lie in [0, 1], got {rho}"
        )));
    }
    let colorer = Colorer::new(psd, n_samples, dt)?;
    let shared = (rho > 0.0).then(|| colorer.draw_innovation(&mut path_rng(seed, SHARED_STREAM)));
    let (ws, wp) = (rho.sqrt(), (1.0 - rho).sqrt());
    let paths = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut inn = colorer.draw_innovation(&mut path_rng(seed, i as u64));
            if let Some(sh) = &shared {
                for (p, s) in inn.iter_mut().zip(sh) {
                    p.0 = wp * p.0 + ws * s.0;
                    p.1 = wp * p.1 + ws * s.1;
                }
            }
            TimeSeries::new(colorer.color(&inn), dt, format!("path-{i}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathBatch {
        paths,
        source_psd: psd.clone(),
        seed,
    })
}

/// Batch-averaged periodogram on the harmonics `ω_m`, m = 0..=N/2, without
/// windowing (the synthesized paths are periodic).
pub fn average_periodogram(paths: &[TimeSeries]) -> Result<SpectralDensity> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty path set".into()))?;
    let (n, dt) = (first.len(), first.dt());
    if paths.iter().any(|p| p.len() != n || p.dt() != dt) {
        return Err(Error::InvalidParameter("paths differ in length or step".into()));
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let half = n / 2;
    let sums = paths
        .par_iter()
        .map(|p| {
            let mut buf: Vec<Complex64> = p.samples().iter().map(|x| Complex64::new(*x, 0.0)).collect();
            fft.process(&mut buf);
            buf[..=half].iter().map(|c| c.norm_sqr()).collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; half + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let scale = dt / (n as f64 * paths.len() as f64);
    let grid = FrequencyGrid::uniform(PI / dt, half + 1)?;
    SpectralDensity::new(grid, sums.iter().map(|s| s * scale).collect())
}
