use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::capacity::CapacityReport;
use crate::montecarlo::ViolationReport;
use crate::solver::{KktResiduals, ProjectionResult, RowDual};
use crate::spectral::{ArmaFit, SpectralDensity};
use crate::{Error, Result};

/// A spectrum with its grid and a name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSpectrum {
    pub label: String,
    pub spectrum: SpectralDensity,
}

impl NamedSpectrum {
    pub fn new(label: impl Into<String>, spectrum: SpectralDensity) -> Self {
        Self {
            label: label.into(),
            spectrum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSummary {
    pub p: usize,
    pub q: usize,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub dt_h: f64,
    pub objective: f64,
    pub points: usize,
}

impl From<&ArmaFit> for ArmaSummary {
    fn from(fit: &ArmaFit) -> Self {
        Self {
            p: fit.model.ar().len(),
            q: fit.model.ma().len(),
            ar: fit.model.ar().to_vec(),
            ma: fit.model.ma().to_vec(),
            sigma2: fit.model.sigma2(),
            dt_h: fit.model.dt(),
            objective: fit.objective,
            points: fit.points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSection {
    pub series_label: String,
    pub series_len: usize,
    pub series_dt_h: f64,
    pub welch: SpectralDensity,
    pub arma: ArmaSummary,
    /// Fitted model on the planning grid.
    pub snd: SpectralDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub duals: Vec<RowDual>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSection {
    /// Bin scale the budgets were built with.
    pub n_bin_scale: u64,
    pub per_bin: Vec<NamedSpectrum>,
    pub aggregate: SpectralDensity,
    pub capacity: CapacityReport,
    pub solver: SolverDiagnostics,
}

impl BoundSection {
    pub fn new(result: &ProjectionResult, labels: &[String], n_bin_scale: u64, capacity: CapacityReport) -> Self {
        Self {
            n_bin_scale,
            per_bin: labels
                .iter()
                .zip(&result.per_bin)
                .map(|(l, s)| NamedSpectrum::new(l.clone(), s.clone()))
                .collect(),
            aggregate: result.aggregate.clone(),
            capacity,
            solver: SolverDiagnostics {
                iterations: result.iterations,
                converged: result.converged,
                objective: result.objective,
                kkt: result.kkt,
                duals: result.duals.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSection {
    pub passband: String,
    pub target: SpectralDensity,
    pub lower: BoundSection,
    pub upper: BoundSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinVerification {
    pub label: String,
    /// Per-load spectrum that was simulated.
    pub per_load: SpectralDensity,
    pub report: ViolationReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: u64,
    pub zeta_p: f64,
    pub zeta_e: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub band: String,
    pub bin: String,
    pub points: Vec<SweepPoint>,
}

/// Everything a run produced. `generated_at` and `content_hash` are not
/// part of the hashed content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub version: String,
    pub seed: u64,
    pub command: String,
    pub config: RunConfig,
    pub estimate: Option<EstimateSection>,
    pub projection: Option<ProjectionSection>,
    pub verification: Option<Vec<BinVerification>>,
    pub sweep: Option<Vec<SweepCurve>>,
    pub generated_at: Option<String>,
    pub content_hash: Option<String>,
}

impl ResultDocument {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            command: command.to_string(),
            config: config.clone(),
            estimate: None,
            projection: None,
            verification: None,
            sweep: None,
            generated_at: None,
            content_hash: None,
        }
    }

    /// SHA-256 of the canonical JSON with the timestamp, the hash itself and
    /// the output directory blanked.
    pub fn compute_hash(&self) -> Result<String> {
        let mut canon = self.clone();
        canon.generated_at = None;
        canon.content_hash = None;
        canon.config.output.dir = Default::default();
        let bytes = serde_json::to_vec(&canon)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    /// Stamps the hash and the wall-clock time.
    pub fn seal(&mut self) -> Result<()> {
        self.content_hash = Some(self.compute_hash()?);
        self.generated_at = Some(chrono::Utc::now().to_rfc3339());
        Ok(())
    }

    /// Whether the stored hash matches the content.
    pub fn verify_hash(&self) -> Result<bool> {
        Ok(self.content_hash.as_deref() == Some(self.compute_hash()?.as_str()))
    }

    pub fn all_converged(&self) -> bool {
        self.projection
            .as_ref()
            .is_none_or(|p| p.lower.solver.converged && p.upper.solver.converged)
            && self
                .sweep
                .as_ref()
                .is_none_or(|curves| curves.iter().all(|c| c.points.iter().all(|p| p.converged)))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
