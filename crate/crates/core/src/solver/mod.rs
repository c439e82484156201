//! Projection of a target spectrum onto the ensemble's feasible set.
//!
//! [`project`] finds per-bin spectra Σ_ℓ ≥ 0 satisfying every budget row
//! that minimize the trapezoid-weighted squared distance between their sum
//! and the target, plus a 10⁻⁸·Σ‖Σ_ℓ‖² tie-breaker for the per-bin split.
//! The QP is solved by a primal-dual interior-point method that exploits
//! the per-frequency structure of the Hessian.

mod ipm;

use serde::{Deserialize, Serialize};

use crate::constraints::{build_constraints_scaled, feasibility_report, ConstraintSystem, EnsembleSpec, RowTag};
use crate::spectral::SpectralDensity;
use crate::{Error, Result};

use ipm::{NormalizedRow, Problem, Settings};

/// Weight of the minimum-norm tie-breaker relative to the fit term.
pub const SPLIT_REGULARIZATION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative tolerance on stationarity, primal feasibility and
    /// complementarity of the normalized problem.
    pub tol: f64,
    pub max_iter: usize,
    /// Emit a debug log record every this many iterations (0 = never).
    pub log_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 500,
            log_every: 10,
        }
    }
}

/// KKT residuals of the returned point, measured on the normalized problem
/// (rows divided by their budgets, target scaled to unit peak).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    /// Largest relative budget violation.
    pub primal: f64,
    /// Largest negative multiplier (zero for interior-point iterates).
    pub dual: f64,
    pub complementarity: f64,
}

/// Multiplier of one budget row. `dual` belongs to the row divided by its
/// budget, with the objective normalized by (peak target)²·(grid width).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDual {
    pub bin: usize,
    pub tag: RowTag,
    pub dual: f64,
    pub value: f64,
    pub budget: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub per_bin: Vec<SpectralDensity>,
    pub aggregate: SpectralDensity,
    /// ∫ (aggregate − target)² dω, trapezoid rule.
    pub objective: f64,
    pub kkt: KktResiduals,
    pub duals: Vec<RowDual>,
    pub iterations: usize,
    pub converged: bool,
}

/// Results of the two solves bracketing a heterogeneous fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    /// Budgets scaled with n_bin = 1.
    pub lower: ProjectionResult,
    /// Budgets scaled with n_bin = number of bins.
    pub upper: ProjectionResult,
    pub n_bin: usize,
}

/// Projects `target` onto the set of `ens` with budgets scaled by the
/// number of bins.
pub fn project(target: &SpectralDensity, ens: &EnsembleSpec, opts: &SolverOptions) -> Result<ProjectionResult> {
    let cs = build_constraints_scaled(ens, target.grid(), ens.n_bins() as u64)?;
    project_onto(target, &cs, opts)
}

/// Solves the projection twice, once with the lower-bound budgets
/// (n_bin = 1) and once with the upper-bound budgets (n_bin = #bins).
pub fn solve_bounds(target: &SpectralDensity, ens: &EnsembleSpec, opts: &SolverOptions) -> Result<BoundPair> {
    let n_bin = ens.n_bins();
    let lower = project_onto(target, &build_constraints_scaled(ens, target.grid(), 1)?, opts)?;
    let upper = if n_bin == 1 {
        lower.clone()
    } else {
        project_onto(
            target,
            &build_constraints_scaled(ens, target.grid(), n_bin as u64)?,
            opts,
        )?
    };
    Ok(BoundPair { lower, upper, n_bin })
}

/// Projects `target` onto an explicit constraint system.
pub fn project_onto(target: &SpectralDensity, cs: &ConstraintSystem, opts: &SolverOptions) -> Result<ProjectionResult> {
    if target.grid() != cs.grid() {
        return Err(Error::GridMismatch);
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidParameter("solver needs tol > 0 and max_iter ≥ 1".into()));
    }
    let grid = cs.grid();
    let n = grid.len();
    let n_bins = cs.n_bins();
    let scale = target.values().iter().copied().fold(0.0, f64::max);

    if scale == 0.0 {
        let per_bin = vec![SpectralDensity::zeros(grid.clone()); n_bins];
        return finish(
            target,
            cs,
            per_bin,
            &vec![0.0; cs.rows().len()],
            KktResiduals::default(),
            0,
            true,
        );
    }

    let width: f64 = grid.weights().iter().sum();
    let weights: Vec<f64> = grid.weights().iter().map(|w| w * n as f64 / width).collect();
    let t_hat: Vec<f64> = target.values().iter().map(|t| t / scale).collect();
    let rows: Vec<NormalizedRow> = cs
        .rows()
        .iter()
        .map(|r| NormalizedRow {
            bin: r.bin,
            coef: grid
                .weights()
                .iter()
                .zip(&r.kernel)
                .map(|(w, k)| w * k * scale / r.budget)
                .collect(),
        })
        .collect();
    let problem = Problem {
        n_bins,
        weights: &weights,
        target: &t_hat,
        rows: &rows,
        rho: SPLIT_REGULARIZATION,
    };
    let settings = Settings {
        tol: opts.tol,
        max_iter: opts.max_iter,
        log_every: opts.log_every,
    };
    let out = ipm::solve(&problem, &settings);
    if !out.converged {
        log::warn!(
            "projection stopped after {} iterations without meeting tol {:.1e} (stationarity {:.2e}, primal {:.2e}, complementarity {:.2e})",
            out.iterations,
            opts.tol,
            out.residuals.stationarity,
            out.residuals.primal,
            out.residuals.complementarity
        );
    }

    // Clear the residual primal infeasibility left by the infeasible-start
    // iteration by shrinking each bin onto its rows.
    let mut x = out.iterate.x;
    for bin in 0..n_bins {
        let peak = rows
            .iter()
            .filter(|r| r.bin == bin)
            .map(|r| {
                r.coef
                    .iter()
                    .zip(&x[bin * n..(bin + 1) * n])
                    .map(|(a, v)| a * v)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if peak > 1.0 {
            x[bin * n..(bin + 1) * n].iter_mut().for_each(|v| *v /= peak);
        }
    }
    let per_bin: Vec<SpectralDensity> = (0..n_bins)
        .map(|bin| {
            let vals = x[bin * n..(bin + 1) * n].iter().map(|v| v.max(0.0) * scale).collect();
            SpectralDensity::new(grid.clone(), vals)
        })
        .collect::<Result<_>>()?;
    let kkt = KktResiduals {
        stationarity: out.residuals.stationarity,
        primal: 0.0,
        dual: out
            .iterate
            .lambda
            .iter()
            .chain(&out.iterate.z)
            .fold(0.0, |m: f64, v| m.max(-v))
            + 0.0,
        complementarity: 0.0,
    };
    finish(
        target,
        cs,
        per_bin,
        &out.iterate.lambda,
        kkt,
        out.iterations,
        out.converged,
    )
}

fn finish(
    target: &SpectralDensity,
    cs: &ConstraintSystem,
    per_bin: Vec<SpectralDensity>,
    lambda: &[f64],
    mut kkt: KktResiduals,
    iterations: usize,
    converged: bool,
) -> Result<ProjectionResult> {
    let aggregate = SpectralDensity::sum(&per_bin)?;
    let report = feasibility_report(&per_bin, cs)?;
    let duals: Vec<RowDual> = report
        .rows
        .iter()
        .zip(lambda)
        .map(|(r, &dual)| RowDual {
            bin: r.bin,
            tag: r.tag,
            dual,
            value: r.value,
            budget: r.budget,
            margin: r.margin,
        })
        .collect();
    kkt.primal = report
        .rows
        .iter()
        .map(|r| (-r.margin / r.budget).max(0.0))
        .fold(0.0, f64::max);
    kkt.complementarity = duals
        .iter()
        .map(|d| (d.margin / d.budget).abs() * d.dual.abs())
        .fold(kkt.complementarity, f64::max);
    let objective = cs.grid().integrate(
        &aggregate
            .values()
            .iter()
            .zip(target.values())
            .map(|(a, t)| (a - t) * (a - t))
            .collect::<Vec<_>>(),
    );
    Ok(ProjectionResult {
        per_bin,
        aggregate,
        objective,
        kkt,
        duals,
        iterations,
        converged,
    })
}
