//! The discretized feasible set for per-bin ensemble spectra.
//!
//! For bin ℓ holding `n_ℓ` identical loads, solved with bin scale `n_bin`,
//! the bin spectrum Σ must satisfy Σ ≥ 0 and
//!
//! | row     | kernel          | budget                           |
//! |---------|-----------------|----------------------------------|
//! | power   | 1               | n_bin·n_ℓ·π·ε₁·c₁²               |
//! | ramp    | 1 − cos(ωδ)     | n_bin·n_ℓ·π·ε₂·c₂² / 2           |
//! | energy  | \|G(jω)\|²      | n_bin·n_ℓ·π·ε₃·c₃²               |
//! | storage | \|H(jω)\|²      | n_bin·n_ℓ·π·ε₄·c₄²               |
//!
//! where each row constrains ∫ kernel·Σ dω, computed with the grid's
//! trapezoid weights. The integrals are truncated at the grid's last
//! frequency.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{energy_window_gain_sq, ramp_weight, storage_gain_sq, LoadDynamics, QosEnvelope};
use crate::spectral::{FrequencyGrid, SpectralDensity};
use crate::{Error, Result};

/// Relative tolerance on row margins when judging feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Minimum grid points per period of cos(ωδ).
pub const MIN_POINTS_PER_RAMP_PERIOD: f64 = 8.0;

/// A homogeneous group of loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub label: String,
    pub qos: QosEnvelope,
    pub dynamics: LoadDynamics,
    pub count: u64,
}

impl BinSpec {
    pub fn new(label: impl Into<String>, qos: QosEnvelope, dynamics: LoadDynamics, count: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("bin count must be at least 1".into()));
        }
        Ok(Self {
            label: label.into(),
            qos,
            dynamics,
            count,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    bins: Vec<BinSpec>,
}

impl EnsembleSpec {
    pub fn new(bins: Vec<BinSpec>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidParameter("ensemble needs at least one bin".into()));
        }
        if let Some(b) = bins.iter().find(|b| b.count == 0) {
            return Err(Error::InvalidParameter(format!("bin `{}` has zero loads", b.label)));
        }
        Ok(Self { bins })
    }

    /// A single bin of `count` identical loads.
    pub fn homogeneous(label: &str, qos: QosEnvelope, dynamics: LoadDynamics, count: u64) -> Result<Self> {
        Self::new(vec![BinSpec::new(label, qos, dynamics, count)?])
    }

    pub fn bins(&self) -> &[BinSpec] {
        &self.bins
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn total_loads(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowTag {
    Power,
    Ramp,
    Energy,
    Storage,
}

impl RowTag {
    pub const ALL: [RowTag; 4] = [RowTag::Power, RowTag::Ramp, RowTag::Energy, RowTag::Storage];
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RowTag::Power => "power",
            RowTag::Ramp => "ramp",
            RowTag::Energy => "energy",
            RowTag::Storage => "storage",
        };
        f.write_str(s)
    }
}

/// `Σ_k w_k · kernel_k · Σ_bin(ω_k) ≤ budget`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub bin: usize,
    pub tag: RowTag,
    pub kernel: Vec<f64>,
    pub budget: f64,
}

impl ConstraintRow {
    /// Quadrature value of the row for one bin spectrum.
    pub fn evaluate(&self, grid: &FrequencyGrid, values: &[f64]) -> f64 {
        grid.weights()
            .iter()
            .zip(&self.kernel)
            .zip(values)
            .map(|((w, k), v)| w * k * v)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    grid: FrequencyGrid,
    n_bins: usize,
    rows: Vec<ConstraintRow>,
}

impl ConstraintSystem {
    /// Assembles a system from explicit rows.
    pub fn from_rows(grid: FrequencyGrid, n_bins: usize, rows: Vec<ConstraintRow>) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidParameter(
                "constraint system needs at least one bin".into(),
            ));
        }
        for (j, r) in rows.iter().enumerate() {
            if r.bin >= n_bins {
                return Err(Error::InvalidParameter(format!(
                    "row {j} refers to bin {} of {n_bins}",
                    r.bin
                )));
            }
            if r.kernel.len() != grid.len() {
                return Err(Error::GridMismatch);
            }
            if r.kernel.iter().any(|k| !k.is_finite() || *k < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "row {j} has a negative or non-finite weight"
                )));
            }
            if !(r.budget > 0.0) || !r.budget.is_finite() {
                return Err(Error::InvalidParameter(format!("row {j} budget must be positive")));
            }
        }
        Ok(Self { grid, n_bins, rows })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    pub fn row(&self, bin: usize, tag: RowTag) -> Option<&ConstraintRow> {
        self.rows.iter().find(|r| r.bin == bin && r.tag == tag)
    }
}

/// Per-load budgets π·ε·c² in row order power, ramp, energy, storage.
pub fn single_load_budgets(qos: &QosEnvelope) -> [f64; 4] {
    let [e1, e2, e3, e4] = qos.eps;
    [
        PI * e1 * qos.c1 * qos.c1,
        PI * e2 * qos.c2 * qos.c2 / 2.0,
        PI * e3 * qos.c3 * qos.c3,
        PI * e4 * qos.c4 * qos.c4,
    ]
}

fn kernel(tag: RowTag, qos: &QosEnvelope, dynamics: &LoadDynamics, omega: f64) -> f64 {
    match tag {
        RowTag::Power => 1.0,
        RowTag::Ramp => 0.5 * ramp_weight(qos.delta, omega),
        RowTag::Energy => energy_window_gain_sq(qos.horizon, omega),
        RowTag::Storage => storage_gain_sq(dynamics, omega),
    }
}

fn check_resolution(grid: &FrequencyGrid, delta: f64) -> Result<()> {
    let required = 2.0 * PI / delta / MIN_POINTS_PER_RAMP_PERIOD;
    let spacing = grid.max_spacing();
    if spacing > required {
        return Err(Error::GridTooCoarse { spacing, required });
    }
    Ok(())
}

/// Rows for one load class with `multiplier` = n_bin·n_ℓ.
pub fn rows_for(
    qos: &QosEnvelope,
    dynamics: &LoadDynamics,
    grid: &FrequencyGrid,
    bin: usize,
    multiplier: f64,
) -> Vec<ConstraintRow> {
    let budgets = single_load_budgets(qos);
    RowTag::ALL
        .iter()
        .zip(budgets)
        .map(|(&tag, b)| ConstraintRow {
            bin,
            tag,
            kernel: grid.omegas().iter().map(|&w| kernel(tag, qos, dynamics, w)).collect(),
            budget: multiplier * b,
        })
        .collect()
}

/// Constraint set with budgets scaled by `n_bin` = number of bins.
pub fn build_constraints(ens: &EnsembleSpec, grid: &FrequencyGrid) -> Result<ConstraintSystem> {
    build_constraints_scaled(ens, grid, ens.n_bins() as u64)
}

/// Constraint set with an explicit bin scale: 1 gives the lower-bound set,
/// the number of bins gives the upper-bound set.
pub fn build_constraints_scaled(
    ens: &EnsembleSpec,
    grid: &FrequencyGrid,
    n_bin_scale: u64,
) -> Result<ConstraintSystem> {
    if n_bin_scale == 0 {
        return Err(Error::InvalidParameter("bin scale must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(4 * ens.n_bins());
    for (l, bin) in ens.bins().iter().enumerate() {
        check_resolution(grid, bin.qos.delta)?;
        let multiplier = n_bin_scale as f64 * bin.count as f64;
        rows.extend(rows_for(&bin.qos, &bin.dynamics, grid, l, multiplier));
    }
    ConstraintSystem::from_rows(grid.clone(), ens.n_bins(), rows)
}

/// Constraint set of one load of the given class.
pub fn single_load_constraints(
    qos: &QosEnvelope,
    dynamics: &LoadDynamics,
    grid: &FrequencyGrid,
) -> Result<ConstraintSystem> {
    check_resolution(grid, qos.delta)?;
    ConstraintSystem::from_rows(grid.clone(), 1, rows_for(qos, dynamics, grid, 0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowStatus {
    pub bin: usize,
    pub tag: RowTag,
    pub value: f64,
    pub budget: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub rows: Vec<RowStatus>,
    pub nonnegative: bool,
    pub feasible: bool,
}

impl FeasibilityReport {
    /// Smallest margin relative to its budget.
    pub fn worst_relative_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.margin / r.budget)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Row margins for raw per-bin values, which may contain negative entries.
pub fn feasibility_report_values(per_bin: &[Vec<f64>], cs: &ConstraintSystem) -> Result<FeasibilityReport> {
    if per_bin.len() != cs.n_bins() || per_bin.iter().any(|v| v.len() != cs.grid().len()) {
        return Err(Error::GridMismatch);
    }
    let nonnegative = per_bin.iter().flatten().all(|v| *v >= 0.0);
    let rows: Vec<RowStatus> = cs
        .rows()
        .iter()
        .map(|r| {
            let value = r.evaluate(cs.grid(), &per_bin[r.bin]);
            RowStatus {
                bin: r.bin,
                tag: r.tag,
                value,
                budget: r.budget,
                margin: r.budget - value,
            }
        })
        .collect();
    let feasible = nonnegative && rows.iter().all(|r| r.margin >= -FEASIBILITY_TOL * r.budget);
    Ok(FeasibilityReport {
        rows,
        nonnegative,
        feasible,
    })
}

pub fn feasibility_report(per_bin: &[SpectralDensity], cs: &ConstraintSystem) -> Result<FeasibilityReport> {
    if per_bin.iter().any(|s| s.grid() != cs.grid()) {
        return Err(Error::GridMismatch);
    }
    let values: Vec<Vec<f64>> = per_bin.iter().map(|s| s.values().to_vec()).collect();
    feasibility_report_values(&values, cs)
}
