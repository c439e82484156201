use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FrequencyGrid, SpectralDensity, TimeSeries};
use crate::{Error, Result};

/// Rational spectral model of a discrete-time ARMA(p, q) process sampled
/// every `dt` hours:
///
/// `S(ω) = sigma2 · dt · |MA(e^{-jω·dt})|² / |AR(e^{-jω·dt})|²`
///
/// with `AR(z) = 1 + Σ ar[i]·z^(i+1)` and `MA(z) = 1 + Σ ma[i]·z^(i+1)`.
/// Above the model's Nyquist frequency `π/dt` the density is held at its
/// Nyquist value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSpectrum {
    ar: Vec<f64>,
    ma: Vec<f64>,
    sigma2: f64,
    dt: f64,
}

/// Outcome of [`fit_arma_spectrum`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmaFit {
    pub model: ArmaSpectrum,
    /// Mean squared log-spectrum error at the optimum.
    pub objective: f64,
    /// Number of grid points that entered the fit.
    pub points: usize,
}

impl ArmaSpectrum {
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, sigma2: f64, dt: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if ar.iter().chain(&ma).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite ARMA coefficient".into()));
        }
        if reflection_from_poly(&ar).is_none() {
            return Err(Error::InvalidParameter(
                "AR polynomial has a root on or inside the unit circle".into(),
            ));
        }
        Ok(Self { ar, ma, sigma2, dt })
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    pub fn ma(&self) -> &[f64] {
        &self.ma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    pub fn density(&self, omega: f64) -> f64 {
        let theta = (omega.abs() * self.dt).min(PI);
        self.sigma2 * self.dt * poly_mag_sq(&self.ma, theta) / poly_mag_sq(&self.ar, theta)
    }

    /// Draws `n` samples of the process, after a burn-in, from a seeded
    /// ChaCha20 stream.
    pub fn simulate(&self, n: usize, seed: u64, label: &str) -> Result<TimeSeries> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.sigma2.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let burn = 20_000;
        let (p, q) = (self.ar.len(), self.ma.len());
        let mut x_hist = vec![0.0; p];
        let mut e_hist = vec![0.0; q];
        let mut out = Vec::with_capacity(n);
        for t in 0..burn + n {
            let e: f64 = noise.sample(&mut rng);
            let mut x = e;
            for (a, xp) in self.ar.iter().zip(&x_hist) {
                x -= a * xp;
            }
            for (b, ep) in self.ma.iter().zip(&e_hist) {
                x += b * ep;
            }
            if p > 0 {
                x_hist.rotate_right(1);
                x_hist[0] = x;
            }
            if q > 0 {
                e_hist.rotate_right(1);
                e_hist[0] = e;
            }
            if t >= burn {
                out.push(x);
            }
        }
        TimeSeries::new(out, self.dt, label)
    }

    /// Default synthetic net-demand model used when no data file is given.
    ///
    /// One-minute sampling, real AR poles at 0.995 and 0.6, MA zero at
    /// −0.3 and an innovation standard deviation of 350 kW. The spectrum is
    /// flat below ~0.3 rad/h, rolls off as 1/ω² up to ~30 rad/h and as 1/ω⁴
    /// from there to the 188 rad/h Nyquist frequency.
    pub fn synthetic_net_demand() -> Self {
        let (p1, p2) = (0.995, 0.6);
        Self::new(vec![-(p1 + p2), p1 * p2], vec![0.3], 350.0f64.powi(2), 1.0 / 60.0).expect("static model is stable")
    }
}

/// |1 + Σ c[i]·e^{-j(i+1)θ}|²
fn poly_mag_sq(coefs: &[f64], theta: f64) -> f64 {
    let (mut re, mut im) = (1.0, 0.0);
    for (i, c) in coefs.iter().enumerate() {
        let a = (i + 1) as f64 * theta;
        re += c * a.cos();
        im -= c * a.sin();
    }
    re * re + im * im
}

/// Levinson step-up: reflection coefficients in (−1, 1) to the coefficients
/// of a polynomial with all roots outside the unit circle.
pub(crate) fn poly_from_reflection(kappa: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(kappa.len());
    for (m, &k) in kappa.iter().enumerate() {
        let prev = a.clone();
        for i in 0..m {
            // order m+1: a_{i+1} += k · a_{m-i}
            a[i] = prev[i] + k * prev[m - 1 - i];
        }
        a.push(k);
    }
    a
}

/// Step-down recursion; `None` if any reflection coefficient has magnitude
/// ≥ 1, i.e. the polynomial has a root on or inside the unit circle.
pub(crate) fn reflection_from_poly(coefs: &[f64]) -> Option<Vec<f64>> {
    let mut a = coefs.to_vec();
    let mut kappa = vec![0.0; a.len()];
    for m in (1..=a.len()).rev() {
        let k = a[m - 1];
        if !(k.abs() < 1.0) {
            return None;
        }
        kappa[m - 1] = k;
        let denom = 1.0 - k * k;
        let prev = a.clone();
        for i in 1..m {
            let mirror = prev[m - i - 1];
            a[i - 1] = (prev[i - 1] - k * mirror) / denom;
        }
        a.truncate(m - 1);
    }
    Some(kappa)
}

/// Evaluates the model on `grid`.
pub fn evaluate_arma_psd(model: &ArmaSpectrum, grid: &FrequencyGrid) -> SpectralDensity {
    let values = grid.omegas().iter().map(|&w| model.density(w)).collect();
    SpectralDensity::new(grid.clone(), values).expect("ARMA densities are positive and finite")
}

struct LogSpectrumCost {
    p: usize,
    /// cos/sin of (i+1)·θ_k for each fitted point, i < max(p, q)
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
    log_psd: Vec<f64>,
}

impl LogSpectrumCost {
    fn new(thetas: &[f64], log_psd: Vec<f64>, p: usize, q: usize) -> Self {
        let order = p.max(q);
        let cos = thetas
            .iter()
            .map(|t| (1..=order).map(|i| (i as f64 * t).cos()).collect())
            .collect();
        let sin = thetas
            .iter()
            .map(|t| (1..=order).map(|i| (i as f64 * t).sin()).collect())
            .collect();
        Self { p, cos, sin, log_psd }
    }

    fn coefficients(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k_ar: Vec<f64> = u[..self.p].iter().map(|v| v.tanh()).collect();
        let k_ma: Vec<f64> = u[self.p..].iter().map(|v| v.tanh()).collect();
        (poly_from_reflection(&k_ar), poly_from_reflection(&k_ma))
    }

    fn mag_sq(coefs: &[f64], cos: &[f64], sin: &[f64]) -> f64 {
        let (mut re, mut im) = (1.0, 0.0);
        for (i, c) in coefs.iter().enumerate() {
            re += c * cos[i];
            im -= c * sin[i];
        }
        re * re + im * im
    }

    /// Residuals of the shape (without the level), and their mean.
    fn residuals(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let (ar, ma) = self.coefficients(u);
        let r: Vec<f64> = self
            .log_psd
            .iter()
            .enumerate()
            .map(|(k, y)| {
                let shape = Self::mag_sq(&ma, &self.cos[k], &self.sin[k]).ln()
                    - Self::mag_sq(&ar, &self.cos[k], &self.sin[k]).ln();
                shape - y
            })
            .collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        (r, mean)
    }
}

struct CostRef<'a>(&'a LogSpectrumCost);

impl CostFunction for CostRef<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (r, mean) = self.0.residuals(u);
        let mse = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r.len() as f64;
        Ok(if mse.is_finite() { mse } else { f64::MAX })
    }
}

fn van_der_corput(mut index: usize, base: usize) -> f64 {
    let (mut result, mut f) = (0.0, 1.0 / base as f64);
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Deterministic multi-start points in reflection-coefficient space.
fn start_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|s| {
            (0..dim)
                .map(|d| {
                    if s == 0 {
                        return 0.0;
                    }
                    let c = 1.9 * van_der_corput(s, PRIMES[d % PRIMES.len()]) - 0.95;
                    c.atanh()
                })
                .collect()
        })
        .collect()
}

fn nelder_mead(cost: &LogSpectrumCost, x0: &[f64], step: f64, iters: u64) -> Option<(Vec<f64>, f64)> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-13).ok()?;
    let res = Executor::new(CostRef(cost), solver)
        .configure(|state| state.max_iters(iters))
        .run()
        .ok()?;
    let best = res.state().get_best_param()?.clone();
    let c = res.state().get_best_cost();
    c.is_finite().then_some((best, c))
}

/// Number of multi-start points used by [`fit_arma_spectrum`].
pub const FIT_STARTS: usize = 8;

/// Least-squares fit of a stable ARMA(p, q) model to the logarithm of `psd`.
///
/// Points where `psd` is zero are excluded. Stability (and invertibility of
/// the MA part) is enforced by optimizing over reflection coefficients
/// `tanh(u)`; the level `sigma2` is solved in closed form. The model's `dt`
/// is `π / psd.grid().omega_max()`.
pub fn fit_arma_spectrum(psd: &SpectralDensity, p: usize, q: usize) -> Result<ArmaFit> {
    if p < 1 {
        return Err(Error::InvalidParameter("AR order p must be at least 1".into()));
    }
    let dt = PI / psd.grid().omega_max();
    let (thetas, log_psd): (Vec<f64>, Vec<f64>) = psd
        .grid()
        .omegas()
        .iter()
        .zip(psd.values())
        .filter(|(_, v)| **v > 0.0)
        .map(|(w, v)| (w * dt, v.ln()))
        .unzip();
    if thetas.len() < p + q + 1 {
        return Err(Error::FitInfeasible(format!(
            "{} positive spectrum values, need at least {}",
            thetas.len(),
            p + q + 1
        )));
    }
    let cost = LogSpectrumCost::new(&thetas, log_psd, p, q);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in start_points(p + q, FIT_STARTS) {
        let Some((x1, _)) = nelder_mead(&cost, &x0, 0.5, 4000) else {
            continue;
        };
        let Some(polished) = nelder_mead(&cost, &x1, 0.05, 4000) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, c)| polished.1 < *c) {
            best = Some(polished);
        }
    }
    let (u, objective) = best.ok_or_else(|| Error::FitInfeasible(format!("no stable ARMA({p},{q}) model found")))?;
    let (ar, ma) = cost.coefficients(&u);
    let (_, mean) = cost.residuals(&u);
    // log(sigma2·dt) = −mean(shape − log psd)
    let sigma2 = (-mean).exp() / dt;
    let model = ArmaSpectrum::new(ar, ma, sigma2, dt).map_err(|e| Error::FitInfeasible(e.to_string()))?;
    Ok(ArmaFit {
        model,
        objective,
        points: thetas.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reflection_round_trip() {
        let k = [0.5, -0.3, 0.8];
        let a = poly_from_reflection(&k);
        let back = reflection_from_poly(&a).unwrap();
        for (x, y) in k.iter().zip(&back) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
        // AR(2) with complex poles 0.9·e^{±0.3j}
        let a2 = [-1.8 * 0.3f64.cos(), 0.81];
        assert!(reflection_from_poly(&a2).is_some());
        // root inside the unit circle
        assert!(reflection_from_poly(&[-2.5, 1.0]).is_none());
        assert!(reflection_from_poly(&[1.0]).is_none());
    }

    #[test]
    fn white_noise_model_is_flat() {
        let m = ArmaSpectrum::new(vec![-0.0], vec![], 1.0, 1.0).unwrap();
        let g = FrequencyGrid::uniform(PI, 9).unwrap();
        let s = evaluate_arma_psd(&m, &g);
        assert!(s.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn dc_value_matches_coefficient_sums() {
        let ar = vec![-1.8 * 0.3f64.cos(), 0.81];
        let ma = vec![-0.5];
        let m = ArmaSpectrum::new(ar.clone(), ma.clone(), 2.0, 0.25).unwrap();
        let expected = 2.0 * 0.25 * (1.0 + ma[0]).powi(2) / (1.0 + ar[0] + ar[1]).powi(2);
        assert_relative_eq!(m.density(0.0), expected, max_relative = 1e-12);
    }

    #[test]
    fn clamps_above_nyquist() {
        let m = ArmaSpectrum::new(vec![-0.7], vec![0.2], 1.0, 1.0).unwrap();
        let g = FrequencyGrid::uniform(4.0 * PI, 65).unwrap();
        let s = evaluate_arma_psd(&m, &g);
        let nyq = m.density(PI);
        for (w, v) in g.omegas().iter().zip(s.values()) {
            if *w >= PI {
                assert_eq!(*v, nyq);
            }
        }
    }

    #[test]
    fn rejects_unstable_or_bad_models() {
        assert!(ArmaSpectrum::new(vec![-1.0], vec![], 1.0, 1.0).is_err());
        assert!(ArmaSpectrum::new(vec![0.5], vec![], 0.0, 1.0).is_err());
        assert!(ArmaSpectrum::new(vec![0.5], vec![], 1.0, -1.0).is_err());
    }

    #[test]
    fn flat_psd_fit_closed_form() {
        // flat level L on [0, ω_max]: AR coefficient 0 and sigma2 = L/dt = L·ω_max/π
        let level = 3.0;
        let g = FrequencyGrid::uniform(20.0, 200).unwrap();
        let s = SpectralDensity::from_fn(g, |_| level).unwrap();
        let fit = fit_arma_spectrum(&s, 1, 0).unwrap();
        assert!(fit.model.ar()[0].abs() < 1e-4, "{:?}", fit.model.ar());
        assert_relative_eq!(fit.model.sigma2(), level * 20.0 / PI, max_relative = 1e-4);
        assert!(fit.objective < 1e-8);
    }

    #[test]
    fn zero_points_are_masked() {
        let m = ArmaSpectrum::new(vec![-0.6], vec![], 1.0, 1.0).unwrap();
        let g = FrequencyGrid::uniform(PI, 101).unwrap();
        let mut v = evaluate_arma_psd(&m, &g).into_values();
        v[40] = 0.0;
        let s = SpectralDensity::new(g, v).unwrap();
        let fit = fit_arma_spectrum(&s, 1, 0).unwrap();
        assert_eq!(fit.points, 100);
        assert_relative_eq!(fit.model.ar()[0], -0.6, epsilon = 1e-4);
    }

    #[test]
    fn too_few_points_is_infeasible() {
        let g = FrequencyGrid::uniform(PI, 5).unwrap();
        let s = SpectralDensity::new(g, vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(fit_arma_spectrum(&s, 2, 1), Err(Error::FitInfeasible(_))));
        assert!(fit_arma_spectrum(&s, 0, 0).is_err());
    }
}
