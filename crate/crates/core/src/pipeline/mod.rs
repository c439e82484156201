//! Configuration-driven runs: estimate → fit → filter → project →
//! capacity → verify, with JSON and CSV outputs.
//!
//! The `run_*` functions compute sections of a [`ResultDocument`] without
//! touching the file system; the `cmd_*` functions also write the outputs
//! into the configured directory.

mod config;
mod document;

use std::path::Path;

use rayon::prelude::*;

pub use config::{
    ArmaConfig, BinConfig, DataConfig, DataSource, FrequencyUnit, GridConfig, MonteCarloConfig, OutputConfig,
    PassbandConfig, RunConfig, SweepConfig, WelchConfig,
};
pub use document::{
    ArmaSummary, BinVerification, BoundSection, EstimateSection, NamedSpectrum, ProjectionSection, ResultDocument,
    SolverDiagnostics, SweepCurve, SweepPoint,
};

use crate::capacity::{capacity_indices, capacity_report};
use crate::constraints::EnsembleSpec;
use crate::montecarlo::verify_chebyshev;
use crate::solver::{project, solve_bounds};
use crate::spectral::{
    bandpass_target, estimate_psd, evaluate_arma_psd, fit_arma_spectrum, read_net_demand_csv, ArmaSpectrum,
    SpectralDensity, TimeSeries,
};
use crate::{Error, Result};

/// Net-demand record named by the configuration.
pub fn load_series(cfg: &RunConfig) -> Result<TimeSeries> {
    match cfg.data.source {
        DataSource::Synthetic => {
            ArmaSpectrum::synthetic_net_demand().simulate(cfg.data.n_samples, cfg.seed, "synthetic net demand")
        }
        DataSource::Csv => {
            let path = cfg
                .data
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("data.path is required for csv input".into()))?;
            read_net_demand_csv(path, cfg.data.fill)
        }
    }
}

/// Welch estimate and ARMA fit of `series`, evaluated on the planning grid.
pub fn run_estimate(cfg: &RunConfig, series: &TimeSeries) -> Result<EstimateSection> {
    if series.variance() == 0.0 {
        return Err(Error::DegenerateSeries(format!(
            "`{}` has zero variance",
            series.label()
        )));
    }
    let welch = estimate_psd(series, cfg.welch.segment_length, cfg.welch.overlap)?;
    // the DC bin only reflects the mean removal; leave it out of the fit
    let mut fit_values = welch.values().to_vec();
    fit_values[0] = 0.0;
    let fit_input = SpectralDensity::new(welch.grid().clone(), fit_values)?;
    let fit = fit_arma_spectrum(&fit_input, cfg.arma.p, cfg.arma.q)?;
    let snd = evaluate_arma_psd(&fit.model, &cfg.grid.build()?);
    Ok(EstimateSection {
        series_label: series.label().to_string(),
        series_len: series.len(),
        series_dt_h: series.dt(),
        welch,
        arma: ArmaSummary::from(&fit),
        snd,
    })
}

/// Band-passes `snd`, solves both bounds and reports their capacities.
pub fn run_projection(cfg: &RunConfig, snd: &SpectralDensity) -> Result<ProjectionSection> {
    let ens = cfg.ensemble()?;
    let target = bandpass_target(snd, &cfg.passband.to_passband()?);
    let pair = solve_bounds(&target, &ens, &cfg.solver)?;
    let labels: Vec<String> = ens.bins().iter().map(|b| b.label.clone()).collect();
    let n_bin = ens.n_bins() as u64;
    let lower_cap = capacity_report(&pair.lower.aggregate, &target, &ens, 1)?;
    let upper_cap = capacity_report(&pair.upper.aggregate, &target, &ens, n_bin)?;
    Ok(ProjectionSection {
        passband: cfg.passband.label.clone(),
        lower: BoundSection::new(&pair.lower, &labels, 1, lower_cap),
        upper: BoundSection::new(&pair.upper, &labels, n_bin, upper_cap),
        target,
    })
}

/// Per-load spectra of the lower-bound solution, `Σ_ℓ / n_ℓ`, scaled by
/// `montecarlo.scale`.
pub fn per_load_spectra(cfg: &RunConfig, ens: &EnsembleSpec, proj: &ProjectionSection) -> Result<Vec<SpectralDensity>> {
    ens.bins()
        .iter()
        .zip(&proj.lower.per_bin)
        .map(|(b, s)| s.spectrum.scaled(cfg.montecarlo.scale / b.count as f64))
        .collect()
}

/// Monte Carlo check of every bin's per-load spectrum.
pub fn run_verification(cfg: &RunConfig, proj: &ProjectionSection) -> Result<Vec<BinVerification>> {
    let ens = cfg.ensemble()?;
    let opts = cfg.montecarlo.options();
    let spectra = per_load_spectra(cfg, &ens, proj)?;
    ens.bins()
        .iter()
        .zip(spectra)
        .enumerate()
        .map(|(i, (b, per_load))| {
            let report = verify_chebyshev(&per_load, &b.qos, &b.dynamics, cfg.seed.wrapping_add(i as u64), &opts)?;
            Ok(BinVerification {
                label: b.label.clone(),
                per_load,
                report,
            })
        })
        .collect()
}

/// ζ^P and ζ^E against the fleet size for each configured band, using the
/// `sweep.bin` class as a homogeneous fleet.
pub fn run_sweep(cfg: &RunConfig, snd: &SpectralDensity) -> Result<Vec<SweepCurve>> {
    let bin = cfg.sweep_bin();
    let (qos, dynamics) = (bin.qos()?, bin.dynamics()?);
    let eps = (qos.eps[0], qos.eps[2]);
    cfg.sweep
        .bands
        .iter()
        .map(|band| {
            let target = bandpass_target(snd, &band.to_passband()?);
            let points = cfg
                .sweep
                .counts
                .par_iter()
                .map(|&n| {
                    let ens = EnsembleSpec::homogeneous(&bin.label, qos, dynamics, n)?;
                    let r = project(&target, &ens, &cfg.solver)?;
                    let (zeta_p, zeta_e) = capacity_indices(&r.aggregate, &target, eps, qos.horizon)?;
                    Ok(SweepPoint {
                        n,
                        zeta_p,
                        zeta_e,
                        converged: r.converged,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepCurve {
                band: band.label.clone(),
                bin: bin.label.clone(),
                points,
            })
        })
        .collect()
}

/// Writes `omega,value` rows.
pub fn write_spectrum_csv(path: &Path, s: &SpectralDensity) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["omega", "value"]).map_err(csv_err)?;
    for (o, v) in s.grid().omegas().iter().zip(s.values()) {
        w.write_record([o.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `n,zeta_p,zeta_e` rows.
pub fn write_sweep_csv(path: &Path, curve: &SweepCurve) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["n", "zeta_p", "zeta_e"]).map_err(csv_err)?;
    for p in &curve.points {
        w.write_record([p.n.to_string(), p.zeta_p.to_string(), p.zeta_e.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_estimate(dir: &Path, est: &EstimateSection) -> Result<()> {
    write_spectrum_csv(&dir.join("snd.csv"), &est.snd)?;
    write_spectrum_csv(&dir.join("welch.csv"), &est.welch)?;
    let json = serde_json::to_string_pretty(est)?;
    let path = dir.join("snd.json");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

fn write_projection(dir: &Path, proj: &ProjectionSection) -> Result<()> {
    write_spectrum_csv(&dir.join("target.csv"), &proj.target)?;
    for (name, bound) in [("lower", &proj.lower), ("upper", &proj.upper)] {
        write_spectrum_csv(&dir.join(format!("aggregate_{name}.csv")), &bound.aggregate)?;
        for b in &bound.per_bin {
            write_spectrum_csv(&dir.join(format!("bin_{}_{name}.csv", sanitize(&b.label))), &b.spectrum)?;
        }
    }
    Ok(())
}

fn write_sweep(dir: &Path, curves: &[SweepCurve]) -> Result<()> {
    for c in curves {
        write_sweep_csv(&dir.join(format!("sweep_{}.csv", sanitize(&c.band))), c)?;
    }
    Ok(())
}

fn finish(dir: &Path, mut doc: ResultDocument) -> Result<ResultDocument> {
    doc.seal()?;
    doc.write(&dir.join("result.json"))?;
    Ok(doc)
}

fn prepare(cfg: &RunConfig) -> Result<&Path> {
    cfg.validate()?;
    let dir = cfg.output.dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

/// Estimates and fits the net-demand spectrum; writes `snd.json`,
/// `snd.csv`, `welch.csv` and `result.json`.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<ResultDocument> {
    let dir = prepare(cfg)?;
    let est = run_estimate(cfg, &load_series(cfg)?)?;
    write_estimate(dir, &est)?;
    let mut doc = ResultDocument::new("estimate", cfg);
    doc.estimate = Some(est);
    finish(dir, doc)
}

/// Estimate plus the two bound solves for the configured passband.
pub fn cmd_project(cfg: &RunConfig) -> Result<ResultDocument> {
    let dir = prepare(cfg)?;
    let est = run_estimate(cfg, &load_series(cfg)?)?;
    let proj = run_projection(cfg, &est.snd)?;
    write_estimate(dir, &est)?;
    write_projection(dir, &proj)?;
    let mut doc = ResultDocument::new("project", cfg);
    doc.estimate = Some(est);
    doc.projection = Some(proj);
    finish(dir, doc)
}

/// Projection followed by the Monte Carlo check of each bin.
pub fn cmd_verify(cfg: &RunConfig) -> Result<ResultDocument> {
    let dir = prepare(cfg)?;
    let est = run_estimate(cfg, &load_series(cfg)?)?;
    let proj = run_projection(cfg, &est.snd)?;
    let ver = run_verification(cfg, &proj)?;
    write_estimate(dir, &est)?;
    write_projection(dir, &proj)?;
    let mut doc = ResultDocument::new("verify", cfg);
    doc.estimate = Some(est);
    doc.projection = Some(proj);
    doc.verification = Some(ver);
    finish(dir, doc)
}

/// Capacity-index curves against fleet size; writes `sweep_<band>.csv`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<ResultDocument> {
    let dir = prepare(cfg)?;
    let est = run_estimate(cfg, &load_series(cfg)?)?;
    let sweep = run_sweep(cfg, &est.snd)?;
    write_estimate(dir, &est)?;
    write_sweep(dir, &sweep)?;
    let mut doc = ResultDocument::new("sweep", cfg);
    doc.estimate = Some(est);
    doc.sweep = Some(sweep);
    finish(dir, doc)
}

/// Every stage in one document.
pub fn cmd_all(cfg: &RunConfig) -> Result<ResultDocument> {
    let dir = prepare(cfg)?;
    let est = run_estimate(cfg, &load_series(cfg)?)?;
    let proj = run_projection(cfg, &est.snd)?;
    let ver = run_verification(cfg, &proj)?;
    let sweep = run_sweep(cfg, &est.snd)?;
    write_estimate(dir, &est)?;
    write_projection(dir, &proj)?;
    write_sweep(dir, &sweep)?;
    let mut doc = ResultDocument::new("all", cfg);
    doc.estimate = Some(est);
    doc.projection = Some(proj);
    doc.verification = Some(ver);
    doc.sweep = Some(sweep);
    finish(dir, doc)
}
