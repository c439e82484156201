use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraints::{BinSpec, EnsembleSpec};
use crate::dynamics::{LoadDynamics, LoadKind, QosEnvelope};
use crate::montecarlo::MonteCarloOptions;
use crate::solver::SolverOptions;
use crate::spectral::{FrequencyGrid, GapFill, Passband, DEFAULT_ORDER, PLANNING_DT_HOURS};
use crate::{Error, Result};

/// Everything one pipeline run needs. Parsed from TOML; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub welch: WelchConfig,
    pub arma: ArmaConfig,
    pub passband: PassbandConfig,
    pub grid: GridConfig,
    pub bins: Vec<BinConfig>,
    pub solver: SolverOptions,
    pub montecarlo: MonteCarloConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            data: DataConfig::default(),
            welch: WelchConfig::default(),
            arma: ArmaConfig::default(),
            passband: PassbandConfig::high(),
            grid: GridConfig::default(),
            bins: vec![BinConfig::large_building(2100), BinConfig::small_building(900)],
            solver: SolverOptions::default(),
            montecarlo: MonteCarloConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// CSV with header `timestamp_iso8601,net_demand_kw`.
    pub path: Option<PathBuf>,
    pub fill: GapFill,
    /// Length of the synthetic record.
    pub n_samples: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            path: None,
            fill: GapFill::None,
            n_samples: 1 << 18,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchConfig {
    pub segment_length: usize,
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_length: 4096,
            overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmaConfig {
    pub p: usize,
    pub q: usize,
}

impl Default for ArmaConfig {
    fn default() -> Self {
        Self { p: 2, q: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyUnit {
    CyclesPerMinute,
    CyclesPerHour,
    RadPerHour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassbandConfig {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub unit: FrequencyUnit,
    pub order: u32,
}

impl Default for PassbandConfig {
    fn default() -> Self {
        Self::high()
    }
}

impl PassbandConfig {
    /// [1/30, 1] cycles per minute.
    pub fn high() -> Self {
        Self {
            label: "high".into(),
            lo: 1.0 / 30.0,
            hi: 1.0,
            unit: FrequencyUnit::CyclesPerMinute,
            order: DEFAULT_ORDER,
        }
    }

    /// [1/8, 1/2] cycles per hour.
    pub fn low() -> Self {
        Self {
            label: "low".into(),
            lo: 1.0 / 8.0,
            hi: 0.5,
            unit: FrequencyUnit::CyclesPerHour,
            order: DEFAULT_ORDER,
        }
    }

    pub fn to_passband(&self) -> Result<Passband> {
        match self.unit {
            FrequencyUnit::CyclesPerMinute => Passband::from_cycles_per_minute(self.lo, self.hi, self.order),
            FrequencyUnit::CyclesPerHour => Passband::from_cycles_per_hour(self.lo, self.hi, self.order),
            FrequencyUnit::RadPerHour => Passband::new(self.lo, self.hi, self.order),
        }
    }
}

/// Hybrid planning grid: `n_linear` points on `[0, split]`, the rest
/// log-spaced up to `omega_max` (rad/h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_total: usize,
    pub n_linear: usize,
    pub split: f64,
    pub omega_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_total: 2048,
            n_linear: 512,
            split: 1.0,
            omega_max: PI / PLANNING_DT_HOURS,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::hybrid(self.n_total, self.n_linear, self.split, self.omega_max)
    }
}

/// One bin of identical loads; limits in kW and kWh, δ in seconds, T in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinConfig {
    pub label: String,
    pub kind: LoadKind,
    pub c1_kw: f64,
    pub c2_kw: f64,
    pub c3_kwh: f64,
    pub c4: f64,
    pub delta_s: f64,
    #[serde(rename = "T_h")]
    pub t_h: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub pole_per_h: f64,
    pub gain: f64,
    pub count: u64,
}

impl BinConfig {
    pub fn from_spec(label: &str, qos: &QosEnvelope, dynamics: &LoadDynamics, count: u64) -> Self {
        Self {
            label: label.into(),
            kind: dynamics.kind,
            c1_kw: qos.c1,
            c2_kw: qos.c2,
            c3_kwh: qos.c3,
            c4: qos.c4,
            delta_s: qos.delta * 3600.0,
            t_h: qos.horizon,
            eps1: qos.eps[0],
            eps2: qos.eps[1],
            eps3: qos.eps[2],
            eps4: qos.eps[3],
            pole_per_h: dynamics.pole,
            gain: dynamics.gain,
            count,
        }
    }

    pub fn small_building(count: u64) -> Self {
        Self::from_spec(
            "small",
            &QosEnvelope::small_building(),
            &LoadDynamics::small_building(),
            count,
        )
    }

    pub fn large_building(count: u64) -> Self {
        Self::from_spec(
            "large",
            &QosEnvelope::large_building(),
            &LoadDynamics::large_building(),
            count,
        )
    }

    pub fn qos(&self) -> Result<QosEnvelope> {
        QosEnvelope::new(
            [self.c1_kw, self.c2_kw, self.c3_kwh, self.c4],
            self.delta_s / 3600.0,
            self.t_h,
            [self.eps1, self.eps2, self.eps3, self.eps4],
        )
    }

    pub fn dynamics(&self) -> Result<LoadDynamics> {
        LoadDynamics::new(self.kind, self.pole_per_h, self.gain)
    }

    pub fn to_spec(&self) -> Result<BinSpec> {
        BinSpec::new(self.label.clone(), self.qos()?, self.dynamics()?, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub paths: usize,
    pub n_samples: usize,
    pub dt_s: f64,
    /// Factor applied to each per-load spectrum before verification.
    pub scale: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            paths: 200,
            n_samples: 4096,
            dt_s: 10.0,
            scale: 1.0,
        }
    }
}

impl MonteCarloConfig {
    pub fn options(&self) -> MonteCarloOptions {
        MonteCarloOptions {
            paths: self.paths,
            n_samples: self.n_samples,
            dt: self.dt_s / 3600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Label of the bin whose load class is swept; the first bin if unset.
    pub bin: Option<String>,
    pub counts: Vec<u64>,
    pub bands: Vec<PassbandConfig>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            bin: None,
            counts: vec![
                10, 30, 100, 300, 1000, 3000, 10_000, 30_000, 100_000, 300_000, 1_000_000, 3_000_000,
            ],
            bands: vec![PassbandConfig::high(), PassbandConfig::low()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("flexcap-out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        if self.data.source == DataSource::Csv && self.data.path.is_none() {
            return Err(Error::Config("data.source = \"csv\" requires data.path".into()));
        }
        if self.data.source == DataSource::Synthetic && self.data.n_samples < 2 * self.welch.segment_length {
            return Err(Error::Config(
                "data.n_samples must cover at least two Welch segments".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.welch.overlap) || self.welch.segment_length < 8 {
            return Err(Error::Config(
                "welch needs segment_length ≥ 8 and overlap in [0, 1)".into(),
            ));
        }
        if self.arma.p == 0 {
            return Err(Error::Config("arma.p must be at least 1".into()));
        }
        self.passband.to_passband()?;
        for b in &self.sweep.bands {
            b.to_passband()?;
        }
        self.grid.build()?;
        self.ensemble()?;
        if let Some(label) = &self.sweep.bin {
            if !self.bins.iter().any(|b| &b.label == label) {
                return Err(Error::Config(format!("sweep.bin `{label}` names no configured bin")));
            }
        }
        if self.sweep.counts.contains(&0) {
            return Err(Error::Config("sweep counts must be positive".into()));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config("solver needs tol > 0 and max_iter ≥ 1".into()));
        }
        let mc = &self.montecarlo;
        if mc.paths == 0 || !mc.n_samples.is_power_of_two() || !(mc.dt_s > 0.0) || !(mc.scale > 0.0) {
            return Err(Error::Config(
                "montecarlo needs paths ≥ 1, a power-of-two n_samples, dt_s > 0 and scale > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn ensemble(&self) -> Result<EnsembleSpec> {
        let mut seen = std::collections::HashSet::new();
        for b in &self.bins {
            if !seen.insert(b.label.as_str()) {
                return Err(Error::Config(format!("duplicate bin label `{}`", b.label)));
            }
        }
        let bins = self
            .bins
            .iter()
            .map(|b| {
                b.to_spec()
                    .map_err(|e| Error::Config(format!("bin `{}`: {e}", b.label)))
            })
            .collect::<Result<Vec<_>>>()?;
        EnsembleSpec::new(bins).map_err(|e| Error::Config(e.to_string()))
    }

    /// The bin class swept by the `sweep` command.
    pub fn sweep_bin(&self) -> &BinConfig {
        self.sweep
            .bin
            .as_ref()
            .and_then(|l| self.bins.iter().find(|b| &b.label == l))
            .unwrap_or(&self.bins[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml_str("sed = 3"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml_str("[welch]\nsegment = 3").is_err());
    }

    #[test]
    fn bin_keys() {
        let text = r#"
            [[bins]]
            label = "hp"
            kind = "thermal"
            c1_kw = 4.0
            c2_kw = 0.8
            c3_kwh = 0.5
            c4 = 1.11
            delta_s = 10.0
            T_h = 24.0
            eps1 = 0.05
            eps2 = 0.05
            eps3 = 0.05
            eps4 = 0.05
            pole_per_h = 2.78
            gain = 0.3597
            count = 12

            [sweep]
            bin = "hp"
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let ens = cfg.ensemble().unwrap();
        assert_eq!(ens.bins()[0].qos, QosEnvelope::small_building());
        assert_eq!(ens.bins()[0].count, 12);
    }

    #[test]
    fn csv_needs_path_and_sweep_bin_must_exist() {
        assert!(RunConfig::from_toml_str("[data]\nsource = \"csv\"").is_err());
        assert!(RunConfig::from_toml_str("[sweep]\nbin = \"nope\"").is_err());
    }
}
