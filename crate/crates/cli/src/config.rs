//! Job configuration and run manifest, both TOML.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hdmdc::{
    ChannelSchema, FitOptions, HyperparamPrior, Hyperparameters, NrmseConfig, Scaling, SigmaSource, SweepGrid,
};

pub const DEFAULT_SEED: u64 = 42;

/// Everything a command needs. Missing sections take their defaults; the
/// resolved configuration is echoed into every output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub synth: SynthConfig,
    pub metric: MetricConfig,
    pub model: ModelConfig,
    pub sweep: GridConfig,
    pub ensemble: EnsembleConfig,
    pub bootstrap: BootstrapConfig,
    pub pdf: PdfConfig,
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            threads: 0,
            out: None,
            manifest: None,
            synth: SynthConfig::default(),
            metric: MetricConfig::default(),
            model: ModelConfig::default(),
            sweep: GridConfig::default(),
            ensemble: EnsembleConfig::default(),
            bootstrap: BootstrapConfig::default(),
            pdf: PdfConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Duffing,
    Lti,
}

/// Synthetic dataset: a forced plant driven by an irregular wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub system: SystemKind,
    pub train_runs: usize,
    pub val_runs: usize,
    pub test_runs: usize,
    /// Run duration in modal wave periods.
    pub run_periods: f64,
    /// Native sampling, samples per modal wave period.
    pub samples_per_period: usize,
    pub hs: f64,
    pub tm: f64,
    pub components: usize,
    /// Scale from wave elevation to the applied force.
    pub forcing_gain: f64,
    pub stiffness: f64,
    pub cubic: f64,
    pub damping: f64,
    pub noise_std: f64,
    pub steps_per_period: usize,
    /// Written to the manifest; off keeps the generated step.
    pub resample: bool,
    pub sequence_periods: f64,
    pub sequences_per_run: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let wave = hdmdc::WaveSpec::<f64>::default();
        let duffing = hdmdc::DuffingSpec::<f64>::default();
        Self {
            system: SystemKind::Duffing,
            train_runs: 9,
            val_runs: 5,
            test_runs: 4,
            run_periods: 45.0,
            samples_per_period: 256,
            hs: wave.hs,
            tm: wave.tm,
            components: wave.components,
            forcing_gain: duffing.stiffness,
            stiffness: duffing.stiffness,
            cubic: duffing.cubic,
            damping: duffing.damping,
            noise_std: 0.0,
            steps_per_period: 64,
            resample: true,
            sequence_periods: 15.0,
            sequences_per_run: 2,
        }
    }
}

/// NRMSE settings. The normalizing deviation is taken from the measured
/// values over each evaluation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub k: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { k: 1.0 }
    }
}

impl MetricConfig {
    pub fn nrmse(&self) -> Result<NrmseConfig<f64>> {
        if !(self.k > 0.0) {
            bail!("metric.k must be positive, got {}", self.k);
        }
        Ok(NrmseConfig {
            k: self.k,
            sigma_source: SigmaSource::ReferenceWindow,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingChoice {
    Zscore,
    Identity,
}

/// Hyperparameters of a single model; spans are in encounter periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub l_tr: f64,
    pub l_dx: f64,
    pub l_du: f64,
    pub lambda: f64,
    pub scaling: ScalingChoice,
    pub condition_cap: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            l_tr: 20.0,
            l_dx: 2.0,
            l_du: 2.0,
            lambda: 100.0,
            scaling: ScalingChoice::Zscore,
            condition_cap: hdmdc::regress::DEFAULT_CONDITION_CAP,
        }
    }
}

impl ModelConfig {
    pub fn hyper(&self, t_hat: f64) -> Result<Hyperparameters<f64>> {
        Ok(Hyperparameters::from_periods(
            self.l_tr,
            self.l_dx,
            self.l_du,
            self.lambda,
            t_hat,
        )?)
    }

    pub fn fit_options(&self) -> FitOptions<f64> {
        FitOptions {
            condition_cap: self.condition_cap,
            scaling: match self.scaling {
                ScalingChoice::Zscore => Scaling::ZScore,
                ScalingChoice::Identity => Scaling::Identity,
            },
            window_offset: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub l_tr: Vec<f64>,
    pub l_dx: Vec<f64>,
    pub l_du: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = SweepGrid::<f64>::default();
        Self {
            l_tr: g.l_tr,
            l_dx: g.l_dx,
            l_du: g.l_du,
            lambda: g.lambda,
        }
    }
}

impl GridConfig {
    pub fn grid(&self) -> SweepGrid<f64> {
        SweepGrid {
            l_tr: self.l_tr.clone(),
            l_dx: self.l_dx.clone(),
            l_du: self.l_du.clone(),
            lambda: self.lambda.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleMode {
    Deterministic,
    Bayesian,
    Frequentist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub l_tr: [f64; 2],
    pub l_dx: [f64; 2],
    pub l_du: [f64; 2],
    pub lambda: [f64; 2],
}

impl Default for PriorConfig {
    fn default() -> Self {
        let p = HyperparamPrior::<f64>::default();
        Self {
            l_tr: [p.l_tr.0, p.l_tr.1],
            l_dx: [p.l_dx.0, p.l_dx.1],
            l_du: [p.l_du.0, p.l_du.1],
            lambda: [p.lambda.0, p.lambda.1],
        }
    }
}

impl PriorConfig {
    pub fn prior(&self) -> HyperparamPrior<f64> {
        HyperparamPrior {
            l_tr: (self.l_tr[0], self.l_tr[1]),
            l_dx: (self.l_dx[0], self.l_dx[1]),
            l_du: (self.l_du[0], self.l_du[1]),
            lambda: (self.lambda[0], self.lambda[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub mode: EnsembleMode,
    pub n_samples: usize,
    pub band_multiplier: f64,
    pub random_offset: bool,
    /// Saved models forming the frequentist ensemble; empty trains one
    /// model per training run.
    pub model_files: Vec<PathBuf>,
    pub prior: PriorConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            mode: EnsembleMode::Deterministic,
            n_samples: hdmdc::ensemble::DEFAULT_REALIZATIONS,
            band_multiplier: hdmdc::ensemble::DEFAULT_BAND_MULTIPLIER,
            random_offset: false,
            model_files: Vec::new(),
            prior: PriorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub grid_points: usize,
    pub pad_bandwidths: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: hdmdc::bootstrap::DEFAULT_REPLICATES,
            grid_points: hdmdc::metrics::SHARED_GRID_POINTS,
            pad_bandwidths: hdmdc::metrics::SHARED_GRID_PAD,
        }
    }
}

/// Two sets of CSV files to compare channel by channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdfConfig {
    pub channels: Vec<String>,
    pub source_a: Vec<PathBuf>,
    pub source_b: Vec<PathBuf>,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: JobConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    /// Resolves relative paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(m) = self.manifest.as_mut() {
            fix(m);
        }
        if let Some(o) = self.out.as_mut() {
            fix(o);
        }
        self.ensemble.model_files.iter_mut().for_each(fix);
        self.pdf.source_a.iter_mut().for_each(fix);
        self.pdf.source_b.iter_mut().for_each(fix);
    }

    /// Makes every path absolute so the echo can be replayed from anywhere.
    pub fn absolutize(&mut self) -> Result<()> {
        let abs = |p: &mut PathBuf| -> Result<()> {
            *p = std::path::absolute(&*p).with_context(|| format!("resolving {}", p.display()))?;
            Ok(())
        };
        if let Some(m) = self.manifest.as_mut() {
            abs(m)?;
        }
        if let Some(o) = self.out.as_mut() {
            abs(o)?;
        }
        for p in self
            .ensemble
            .model_files
            .iter_mut()
            .chain(&mut self.pdf.source_a)
            .chain(&mut self.pdf.source_b)
        {
            abs(p)?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        let out = self
            .out
            .as_deref()
            .context("no output directory; pass --out or set `out`")?;
        if !out.is_dir() {
            bail!("output directory {} does not exist", out.display());
        }
        Ok(out)
    }

    pub fn manifest_path(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .context("no manifest; set `manifest` in the config")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub id: String,
    pub path: PathBuf,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaEntry {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
}

/// How evaluation sequences are cut from validation and test runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Extraction {
    /// Samples per encounter period after resampling.
    pub steps_per_period: usize,
    /// Resample to `steps_per_period`; when off, runs keep their native step.
    pub resample: bool,
    /// Sequence length in encounter periods, used unless `sequence_length` is set.
    pub sequence_periods: f64,
    /// Sequence length in seconds.
    pub sequence_length: Option<f64>,
    pub sequences_per_run: usize,
    /// Channel the encounter period is estimated from; defaults to the first input.
    pub period_channel: Option<String>,
}

impl Default for Extraction {
    fn default() -> Self {
        Self {
            steps_per_period: 64,
            resample: true,
            sequence_periods: 15.0,
            sequence_length: None,
            sequences_per_run: 1,
            period_channel: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: SchemaEntry,
    #[serde(default)]
    pub extraction: Extraction,
    pub runs: Vec<RunEntry>,
}

impl Manifest {
    /// Reads a manifest; run paths are relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: Manifest = toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for r in &mut m.runs {
            if r.path.is_relative() {
                r.path = base.join(&r.path);
            }
        }
        Ok(m)
    }

    pub fn channel_schema(&self) -> Result<ChannelSchema> {
        Ok(ChannelSchema::new(
            self.schema.states.clone(),
            self.schema.inputs.clone(),
        )?)
    }

    pub fn ids(&self, role: Role) -> Vec<String> {
        self.runs
            .iter()
            .filter(|r| r.role == role)
            .map(|r| r.id.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = JobConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: JobConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: JobConfig = toml::from_str("seed = 7\n[model]\nlambda = 10.0\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.model.lambda, 10.0);
        assert_eq!(cfg.model.l_tr, 20.0);
        assert_eq!(cfg.sweep.l_tr, vec![5.0, 10.0, 20.0]);
        assert!(toml::from_str::<JobConfig>("sed = 7").is_err());
    }

    #[test]
    fn manifest_parses() {
        let text = r#"
[schema]
states = ["x", "v"]
inputs = ["u"]

[extraction]
sequences_per_run = 2

[[runs]]
id = "a"
path = "a.csv"
role = "train"
"#;
        let m: Manifest = toml::from_str(text).unwrap();
        assert_eq!(m.extraction.sequences_per_run, 2);
        assert_eq!(m.extraction.steps_per_period, 64);
        assert_eq!(m.ids(Role::Train), vec!["a".to_owned()]);
        assert!(m.ids(Role::Test).is_empty());
    }
}
