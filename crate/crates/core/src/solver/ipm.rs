//! Primal-dual interior-point method for the separable projection QP
//!
//! ```text
//! minimize   Σ_k w_k [(Σ_ℓ x_ℓk − t_k)² + ρ Σ_ℓ x_ℓk²]
//! subject to A x ≤ 1,  x ≥ 0
//! ```
//!
//! where each row of `A` touches a single bin. The Hessian is block
//! diagonal over frequencies, each block a diagonal plus a rank-one term,
//! so Newton systems reduce to a small dense Schur complement in the row
//! multipliers.

use nalgebra::{DMatrix, DVector};

/// Row of the normalized system: `Σ_k coef[k]·x[bin][k] ≤ 1`.
pub(super) struct NormalizedRow {
    pub bin: usize,
    pub coef: Vec<f64>,
}

pub(super) struct Problem<'a> {
    pub n_bins: usize,
    /// Objective weights, normalized to average 1.
    pub weights: &'a [f64],
    /// Target scaled to a maximum of 1.
    pub target: &'a [f64],
    pub rows: &'a [NormalizedRow],
    pub rho: f64,
}

pub(super) struct Settings {
    pub tol: f64,
    pub max_iter: usize,
    pub log_every: usize,
}

#[derive(Debug, Clone)]
pub(super) struct Iterate {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub(super) struct Residuals {
    pub stationarity: f64,
    pub primal: f64,
    /// Largest s·λ or x·z.
    pub complementarity: f64,
    /// Largest min(x, z) over the bounds.
    pub bound_complementarity: f64,
}

impl Residuals {
    /// Largest residual relative to the tolerance. A small product x·z alone
    /// allows x ≈ √tol where the target vanishes, so one side of each bound
    /// pair must itself be below tol.
    fn worst(&self, tol: f64) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.complementarity)
            .max(self.bound_complementarity)
            / tol
    }
}

pub(super) struct Outcome {
    pub iterate: Iterate,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
}

const STEP_FRACTION: f64 = 0.99;
const STALL_LIMIT: usize = 40;

impl Problem<'_> {
    fn n_freq(&self) -> usize {
        self.weights.len()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_freq();
        let mut g = vec![0.0; x.len()];
        for k in 0..n {
            let total: f64 = (0..self.n_bins).map(|l| x[l * n + k]).sum();
            let c = 2.0 * self.weights[k];
            for l in 0..self.n_bins {
                g[l * n + k] = c * (total - self.target[k] + self.rho * x[l * n + k]);
            }
        }
        g
    }

    fn row_value(&self, row: &NormalizedRow, x: &[f64]) -> f64 {
        let n = self.n_freq();
        row.coef
            .iter()
            .zip(&x[row.bin * n..(row.bin + 1) * n])
            .map(|(a, v)| a * v)
            .sum()
    }

    fn apply_rows(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| self.row_value(r, x)).collect()
    }

    /// out += Aᵀ y
    fn add_transpose(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n_freq();
        for (row, yj) in self.rows.iter().zip(y) {
            for (o, a) in out[row.bin * n..(row.bin + 1) * n].iter_mut().zip(&row.coef) {
                *o += yj * a;
            }
        }
    }

    fn target_scale(&self) -> f64 {
        1.0 + self
            .weights
            .iter()
            .zip(self.target)
            .map(|(w, t)| 2.0 * w * t)
            .fold(0.0, f64::max)
    }

    fn residuals(&self, it: &Iterate) -> Residuals {
        let mut rd = self.gradient(&it.x);
        self.add_transpose(&it.lambda, &mut rd);
        for (r, z) in rd.iter_mut().zip(&it.z) {
            *r -= z;
        }
        let ax = self.apply_rows(&it.x);
        let primal = ax
            .iter()
            .zip(&it.s)
            .map(|(a, s)| (a + s - 1.0).abs())
            .fold(0.0, f64::max);
        let max_product = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).fold(0.0, f64::max);
        Residuals {
            stationarity: rd.iter().fold(0.0f64, |m, r| m.max(r.abs())) / self.target_scale(),
            primal,
            complementarity: max_product(&it.s, &it.lambda).max(max_product(&it.x, &it.z)),
            bound_complementarity: it.x.iter().zip(&it.z).map(|(x, z)| x.min(*z)).fold(0.0, f64::max),
        }
    }

    fn initial_point(&self) -> Iterate {
        let n = self.n_freq();
        let mean_t = self.target.iter().sum::<f64>() / n as f64;
        let mut x = Vec::with_capacity(n * self.n_bins);
        for _ in 0..self.n_bins {
            x.extend(self.target.iter().map(|t| (t + mean_t) / (2.0 * self.n_bins as f64)));
        }
        let peak = self.apply_rows(&x).into_iter().fold(0.0, f64::max);
        if peak > 0.5 {
            let f = 0.5 / peak;
            x.iter_mut().for_each(|v| *v *= f);
        }
        let s: Vec<f64> = self.apply_rows(&x).iter().map(|a| 1.0 - a).collect();
        let g = self.gradient(&x);
        let z = g.iter().map(|gi| 1.0 + gi.abs()).collect();
        let lambda = vec![1.0; self.rows.len()];
        Iterate { x, z, s, lambda }
    }
}

/// Factorized Newton system at one iterate.
struct Newton<'p, 'a> {
    prob: &'p Problem<'a>,
    inv_d: Vec<f64>,
    beta: Vec<f64>,
    s_over_lambda: Vec<f64>,
    chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

impl<'p, 'a> Newton<'p, 'a> {
    fn new(prob: &'p Problem<'a>, it: &Iterate) -> Self {
        let n = prob.n_freq();
        let inv_d: Vec<f64> = (0..it.x.len())
            .map(|i| {
                let k = i % n;
                1.0 / (2.0 * prob.weights[k] * prob.rho + it.z[i] / it.x[i])
            })
            .collect();
        let beta: Vec<f64> = (0..n)
            .map(|k| {
                let c = 2.0 * prob.weights[k];
                let s1: f64 = (0..prob.n_bins).map(|l| inv_d[l * n + k]).sum();
                c / (1.0 + c * s1)
            })
            .collect();
        let s_over_lambda: Vec<f64> = it.s.iter().zip(&it.lambda).map(|(s, l)| s / l).collect();
        let mut newton = Self {
            prob,
            inv_d,
            beta,
            s_over_lambda,
            chol: None,
        };
        newton.factor();
        newton
    }

    fn factor(&mut self) {
        let m = self.prob.rows.len();
        if m == 0 {
            return;
        }
        let n = self.prob.n_freq();
        let rows = self.prob.rows;
        let mut mat = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let (ri, rj) = (&rows[i], &rows[j]);
                let (bi, bj) = (ri.bin * n, rj.bin * n);
                let same = ri.bin == rj.bin;
                let mut acc = 0.0;
                for k in 0..n {
                    let (ai, aj) = (ri.coef[k], rj.coef[k]);
                    if ai == 0.0 || aj == 0.0 {
                        continue;
                    }
                    let (di, dj) = (self.inv_d[bi + k], self.inv_d[bj + k]);
                    let mut kinv = -self.beta[k] * di * dj;
                    if same {
                        kinv += di;
                    }
                    acc += ai * aj * kinv;
                }
                mat[(i, j)] = acc;
                mat[(j, i)] = acc;
            }
            mat[(i, i)] += self.s_over_lambda[i];
        }
        let mut shift = 0.0;
        loop {
            let mut trial = mat.clone();
            for i in 0..m {
                trial[(i, i)] += shift;
            }
            if let Some(c) = trial.cholesky() {
                self.chol = Some(c);
                return;
            }
            let diag_max = (0..m).map(|i| mat[(i, i)].abs()).fold(0.0, f64::max);
            shift = if shift == 0.0 {
                1e-14 * diag_max.max(1e-300)
            } else {
                shift * 10.0
            };
        }
    }

    fn apply_k_inverse(&self, v: &[f64]) -> Vec<f64> {
        let n = self.prob.n_freq();
        let nb = self.prob.n_bins;
        let mut out = vec![0.0; v.len()];
        for k in 0..n {
            let mut sum = 0.0;
            for l in 0..nb {
                let i = l * n + k;
                out[i] = v[i] * self.inv_d[i];
                sum += out[i];
            }
            let corr = self.beta[k] * sum;
            for l in 0..nb {
                let i = l * n + k;
                out[i] -= corr * self.inv_d[i];
            }
        }
        out
    }

    /// Solves for (dx, dz, ds, dλ) given the right-hand sides.
    fn solve(&self, it: &Iterate, rd: &[f64], rp: &[f64], rxz: &[f64], rsl: &[f64]) -> Iterate {
        let r1: Vec<f64> = (0..it.x.len()).map(|i| -rd[i] - rxz[i] / it.x[i]).collect();
        let r2: Vec<f64> = (0..it.s.len()).map(|j| -rp[j] + rsl[j] / it.lambda[j]).collect();
        let k1 = self.apply_k_inverse(&r1);
        let dlambda: Vec<f64> = match &self.chol {
            None => Vec::new(),
            Some(chol) => {
                let ak1 = self.prob.apply_rows(&k1);
                let rhs = DVector::from_iterator(ak1.len(), ak1.iter().zip(&r2).map(|(a, b)| a - b));
                chol.solve(&rhs).iter().copied().collect()
            }
        };
        let mut tmp = r1;
        let mut atl = vec![0.0; tmp.len()];
        self.prob.add_transpose(&dlambda, &mut atl);
        for (t, a) in tmp.iter_mut().zip(&atl) {
            *t -= a;
        }
        let dx = self.apply_k_inverse(&tmp);
        let dz = (0..dx.len()).map(|i| (-rxz[i] - it.z[i] * dx[i]) / it.x[i]).collect();
        let ds = (0..dlambda.len())
            .map(|j| (-rsl[j] - it.s[j] * dlambda[j]) / it.lambda[j])
            .collect();
        Iterate {
            x: dx,
            z: dz,
            s: ds,
            lambda: dlambda,
        }
    }
}

/// Slack allowed on signs and row values when accepting a polished point.
const POLISH_TOL: f64 = 1e-12;
/// Active-set corrections tried before the polish gives up.
const POLISH_ROUNDS: usize = 30;
const REFINE_STEPS: usize = 2;

/// Re-solves the KKT system exactly on an active set, starting from the
/// guess at `it` (bounds with x ≤ z fixed at zero, rows with s ≤ λ held
/// as equalities) and moving violated bounds and rows in or out until the
/// solution is consistent. Returns `None` if that does not happen.
fn polish(prob: &Problem<'_>, it: &Iterate) -> Option<Iterate> {
    let mut free: Vec<bool> = it.x.iter().zip(&it.z).map(|(x, z)| x > z).collect();
    let mut active: Vec<bool> = it.s.iter().zip(&it.lambda).map(|(s, l)| s <= l).collect();
    for _ in 0..POLISH_ROUNDS {
        let (x, z, lambda) = solve_active(prob, &free, &active)?;
        let mut changed = false;
        for (j, l) in lambda.iter().enumerate() {
            if active[j] && *l < -POLISH_TOL {
                active[j] = false;
                changed = true;
            }
        }
        let xscale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let zscale = prob.target_scale();
        for i in 0..x.len() {
            if free[i] && x[i] < -POLISH_TOL * xscale {
                free[i] = false;
                changed = true;
            } else if !free[i] && z[i] < -POLISH_TOL * zscale {
                free[i] = true;
                changed = true;
            }
        }
        let ax = prob.apply_rows(&x);
        for (j, a) in ax.iter().enumerate() {
            if !active[j] && *a > 1.0 + POLISH_TOL {
                active[j] = true;
                changed = true;
            }
        }
        if !changed {
            let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
            let s = prob.apply_rows(&x).iter().map(|a| (1.0 - a).max(0.0)).collect();
            let z = z.into_iter().map(|v| v.max(0.0)).collect();
            let lambda = lambda.into_iter().map(|v| v.max(0.0)).collect();
            return Some(Iterate { x, z, s, lambda });
        }
    }
    None
}

/// x = K⁻¹(b − Aᵀλ) on the free coordinates, zero elsewhere.
fn primal_from(
    prob: &Problem<'_>,
    free: &[bool],
    b: &[f64],
    lambda: &[f64],
    k_inv: &impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let mut atl = vec![0.0; b.len()];
    prob.add_transpose(lambda, &mut atl);
    let rhs: Vec<f64> = (0..b.len())
        .map(|i| if free[i] { b[i] - atl[i] } else { 0.0 })
        .collect();
    k_inv(&rhs)
}

/// Solution (x, z, λ) of the equality-constrained problem with the bounds
/// outside `free` fixed at zero and the `active` rows held at their budgets.
fn solve_active(prob: &Problem<'_>, free: &[bool], active: &[bool]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = prob.n_freq();
    let nb = prob.n_bins;

    // K⁻¹ restricted to the free coordinates of each frequency, with
    // K = c(11ᵀ + ρI); the mean and the orthogonal part are inverted apart
    let k_inv = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for k in 0..n {
            let c = 2.0 * prob.weights[k];
            let idx: Vec<usize> = (0..nb).map(|l| l * n + k).filter(|&i| free[i]).collect();
            if idx.is_empty() || c == 0.0 {
                continue;
            }
            let m = idx.len() as f64;
            let mean = idx.iter().map(|&i| v[i]).sum::<f64>() / m;
            for &i in &idx {
                let perp = v[i] - mean;
                out[i] = mean / (c * (m + prob.rho)) + if perp == 0.0 { 0.0 } else { perp / (c * prob.rho) };
            }
        }
        out
    };

    let rows: Vec<usize> = (0..prob.rows.len()).filter(|&j| active[j]).collect();
    let b: Vec<f64> = (0..free.len())
        .map(|i| {
            if free[i] {
                2.0 * prob.weights[i % n] * prob.target[i % n]
            } else {
                0.0
            }
        })
        .collect();
    let kb = k_inv(&b);
    let mut lambda = vec![0.0; prob.rows.len()];
    if !rows.is_empty() {
        let ma = rows.len();
        let cols: Vec<Vec<f64>> = rows
            .iter()
            .map(|&j| {
                let mut e = vec![0.0; free.len()];
                let row = &prob.rows[j];
                e[row.bin * n..(row.bin + 1) * n].copy_from_slice(&row.coef);
                k_inv(&e)
            })
            .collect();
        let mut mat = DMatrix::<f64>::zeros(ma, ma);
        let mut rhs = DVector::<f64>::zeros(ma);
        for (a, &ja) in rows.iter().enumerate() {
            for (bcol, col) in cols.iter().enumerate() {
                mat[(a, bcol)] = prob.row_value(&prob.rows[ja], col);
            }
            rhs[a] = prob.row_value(&prob.rows[ja], &kb) - 1.0;
        }
        let lu = mat.lu();
        let sol = lu.solve(&rhs)?;
        for (a, &j) in rows.iter().enumerate() {
            lambda[j] = sol[a];
        }
        // the 1/ρ terms lose digits; refine λ on the row residuals
        for _ in 0..REFINE_STEPS {
            let x = primal_from(prob, free, &b, &lambda, &k_inv);
            let resid = DVector::from_iterator(ma, rows.iter().map(|&j| prob.row_value(&prob.rows[j], &x) - 1.0));
            let delta = lu.solve(&resid)?;
            for (a, &j) in rows.iter().enumerate() {
                lambda[j] += delta[a];
            }
        }
    }
    if lambda.iter().any(|l| !l.is_finite()) {
        return None;
    }

    let x = primal_from(prob, free, &b, &lambda, &k_inv);
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut z = prob.gradient(&x);
    prob.add_transpose(&lambda, &mut z);
    for (zi, f) in z.iter_mut().zip(free) {
        if *f {
            *zi = 0.0;
        }
    }
    Some((x, z, lambda))
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

fn step_length(it: &Iterate, d: &Iterate) -> f64 {
    max_step(&it.x, &d.x)
        .min(max_step(&it.z, &d.z))
        .min(max_step(&it.s, &d.s))
        .min(max_step(&it.lambda, &d.lambda))
}

fn axpy(it: &Iterate, d: &Iterate, alpha: f64) -> Iterate {
    let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + alpha * y).collect::<Vec<f64>>();
    Iterate {
        x: add(&it.x, &d.x),
        z: add(&it.z, &d.z),
        s: add(&it.s, &d.s),
        lambda: add(&it.lambda, &d.lambda),
    }
}

fn mean_gap(it: &Iterate) -> f64 {
    let total: f64 = it.x.iter().zip(&it.z).map(|(a, b)| a * b).sum::<f64>()
        + it.s.iter().zip(&it.lambda).map(|(a, b)| a * b).sum::<f64>();
    total / (it.x.len() + it.s.len()) as f64
}

pub(super) fn solve(prob: &Problem<'_>, settings: &Settings) -> Outcome {
    let mut it = prob.initial_point();
    let mut res = prob.residuals(&it);
    let tol = settings.tol;
    let mut best_worst = res.worst(tol);
    // late iterations can lose accuracy, so the best point seen is returned
    let mut best = (it.clone(), res);
    let mut stalled = 0;
    let mut iterations = 0;

    while iterations < settings.max_iter {
        if res.worst(tol) <= 1.0 {
            break;
        }
        iterations += 1;

        let mut rd = prob.gradient(&it.x);
        prob.add_transpose(&it.lambda, &mut rd);
        for (r, z) in rd.iter_mut().zip(&it.z) {
            *r -= z;
        }
        let rp: Vec<f64> = prob
            .apply_rows(&it.x)
            .iter()
            .zip(&it.s)
            .map(|(a, s)| a + s - 1.0)
            .collect();
        let mu = mean_gap(&it);
        let newton = Newton::new(prob, &it);

        // predictor
        let rxz: Vec<f64> = it.x.iter().zip(&it.z).map(|(a, b)| a * b).collect();
        let rsl: Vec<f64> = it.s.iter().zip(&it.lambda).map(|(a, b)| a * b).collect();
        let aff = newton.solve(&it, &rd, &rp, &rxz, &rsl);
        let alpha_aff = step_length(&it, &aff).min(1.0);
        let mu_aff = mean_gap(&axpy(&it, &aff, alpha_aff));
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let target = sigma * mu;
        let rxz_c: Vec<f64> = (0..rxz.len()).map(|i| rxz[i] + aff.x[i] * aff.z[i] - target).collect();
        let rsl_c: Vec<f64> = (0..rsl.len())
            .map(|j| rsl[j] + aff.s[j] * aff.lambda[j] - target)
            .collect();
        let dir = newton.solve(&it, &rd, &rp, &rxz_c, &rsl_c);
        let alpha = (STEP_FRACTION * step_length(&it, &dir)).min(1.0);
        if !(alpha > 1e-14) {
            break;
        }
        it = axpy(&it, &dir, alpha);
        res = prob.residuals(&it);

        if settings.log_every > 0 && iterations % settings.log_every == 0 {
            log::debug!(
                "ipm iter={} mu={:.3e} step={:.3} stationarity={:.3e} primal={:.3e} complementarity={:.3e} bound_complementarity={:.3e}",
                iterations,
                mean_gap(&it),
                alpha,
                res.stationarity,
                res.primal,
                res.complementarity,
                res.bound_complementarity
            );
        }

        if res.worst(tol) < best.1.worst(tol) {
            best = (it.clone(), res);
        }
        if res.worst(tol) < 0.5 * best_worst {
            best_worst = res.worst(tol);
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                break;
            }
        }
    }
    let (mut it, mut res) = best;
    if let Some(p) = polish(prob, &it) {
        let pres = prob.residuals(&p);
        if pres.worst(tol) <= res.worst(tol).max(1.0) {
            it = p;
            res = pres;
        }
    }
    let converged = res.worst(tol) <= 1.0;
    Outcome {
        iterate: it,
        residuals: res,
        iterations,
        converged,
    }
}
