use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::densities::DensityKind;
use crate::error::{Error, Result};
use crate::kde::bandwidth_rule;
use crate::manifold::{SamplingMode, DEFAULT_TUBE_RADIUS};
use crate::mlp::{AdamConfig, TimeSampling};
use crate::ode::OdeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rate,
    RateManifold,
    FlowVsKde,
    TvExample,
    BoundsCheck,
    ManifoldRun,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rate => "rate",
            Self::RateManifold => "rate_manifold",
            Self::FlowVsKde => "flow_vs_kde",
            Self::TvExample => "tv_example",
            Self::BoundsCheck => "bounds_check",
            Self::ManifoldRun => "manifold_run",
        }
    }
}

/// How the terminal bandwidth is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SigmaPolicy {
    /// A fixed list. Rate experiments pair it with `n` (or use a single value
    /// for every `n`); the other experiments sweep it.
    Explicit { values: Vec<f64> },
    /// `n^{-1/(2α+d_eff)}`, optionally with the `n/log²n` correction.
    BandwidthRule { alpha: f64, d_eff: usize, #[serde(default)] log_correction: bool },
}

impl SigmaPolicy {
    pub fn explicit(values: &[f64]) -> Self {
        Self::Explicit { values: values.to_vec() }
    }

    pub fn rule(alpha: f64, d_eff: usize) -> Self {
        Self::BandwidthRule { alpha, d_eff, log_correction: false }
    }

    /// Bandwidth for the `index`-th entry of an `n` list.
    pub fn sigma_for(&self, n: usize, index: usize) -> Result<f64> {
        match self {
            Self::Explicit { values } if values.len() == 1 => Ok(values[0]),
            Self::Explicit { values } => values
                .get(index)
                .copied()
                .ok_or_else(|| Error::Config(format!("no explicit sigma for n list entry {index}"))),
            Self::BandwidthRule { alpha, d_eff, log_correction } => {
                bandwidth_rule(n, *alpha, *d_eff, *log_correction)
            }
        }
    }

    /// The sweep values of an explicit policy.
    pub fn values(&self) -> Result<&[f64]> {
        match self {
            Self::Explicit { values } => Ok(values),
            Self::BandwidthRule { .. } => Err(Error::Config("this experiment needs an explicit sigma list".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSection {
    pub hidden: Vec<usize>,
    pub steps: usize,
    pub checkpoints: Vec<usize>,
    pub adam: AdamConfig,
    pub time_sampling: TimeSampling,
    pub log_every: usize,
}

impl Default for NetSection {
    fn default() -> Self {
        Self {
            hidden: vec![512, 512, 512],
            steps: 40_000,
            checkpoints: vec![10_000, 20_000, 30_000, 40_000],
            adam: AdamConfig::default(),
            time_sampling: TimeSampling::PerPoint,
            log_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub density: DensityKind,
    pub dim: usize,
    /// Deterministic bias quadrature in d = 1 instead of sampling.
    pub bias_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvSection {
    pub epsilons: Vec<f64>,
    pub draws: usize,
    /// Half-width of the quadrature window.
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub dims: Vec<usize>,
    pub points: usize,
    /// Evaluation box half-width.
    pub a: f64,
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    pub tube_radius: f64,
    pub sampling: SamplingMode,
    pub include_boundary: bool,
    pub fm_arm: bool,
    /// Projected-rate sub-experiment run alongside `manifold_run`; empty skips it.
    pub rate_n: Vec<usize>,
    pub rate_m: usize,
    pub rate_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub n: Vec<usize>,
    pub sigma: SigmaPolicy,
    /// Generated / reference sample size.
    pub m: usize,
    pub repeats: usize,
    pub out: PathBuf,
    pub plots: bool,
    pub ode: OdeConfig,
    pub net: NetSection,
    pub rate: RateSection,
    pub tv: TvSection,
    pub bounds: BoundsSection,
    pub manifold: ManifoldSection,
}

fn doubling(from: usize, to: usize) -> Vec<usize> {
    std::iter::successors(Some(from), |&n| Some(n * 2)).take_while(|&n| n <= to).collect()
}

impl ExperimentConfig {
    /// Defaults for one experiment; sections the experiment ignores keep neutral values.
    pub fn preset(experiment: ExperimentKind) -> Self {
        let mut cfg = Self {
            experiment,
            seed: 20240611,
            n: vec![200],
            sigma: SigmaPolicy::explicit(&[0.1]),
            m: 1024,
            repeats: 10,
            out: PathBuf::from("results"),
            plots: false,
            ode: OdeConfig::default(),
            net: NetSection::default(),
            rate: RateSection { density: DensityKind::Ramp, dim: 2, bias_only: false },
            tv: TvSection { epsilons: vec![0.1, 0.03, 0.01], draws: 100_000, half_width: 8.0 },
            bounds: BoundsSection { dims: vec![1, 2], points: 1000, a: 2.0, fd_step: 1e-3 },
            manifold: ManifoldSection {
                tube_radius: DEFAULT_TUBE_RADIUS,
                sampling: SamplingMode::ArcUniform,
                include_boundary: false,
                fm_arm: true,
                rate_n: Vec::new(),
                rate_m: 16_384,
                rate_alpha: 1.0,
            },
        };
        match experiment {
            ExperimentKind::Rate => {
                cfg.n = doubling(128, 8192);
                cfg.sigma = SigmaPolicy::rule(1.0, 2);
            }
            ExperimentKind::RateManifold => {
                cfg.n = doubling(128, 4096);
                cfg.sigma = SigmaPolicy::rule(1.0, 1);
                cfg.m = 16_384;
                cfg.manifold.tube_radius = 0.9;
            }
            ExperimentKind::FlowVsKde => {
                cfg.repeats = 20;
            }
            ExperimentKind::TvExample => {
                cfg.repeats = 1;
            }
            ExperimentKind::BoundsCheck => {
                cfg.n = vec![50];
                cfg.repeats = 1;
            }
            ExperimentKind::ManifoldRun => {
                cfg.sigma = SigmaPolicy::explicit(&[0.5, 0.1, 0.05, 0.01]);
                cfg.m = 512;
                cfg.manifold.rate_n = doubling(128, 4096);
                cfg.manifold.tube_radius = 0.9;
            }
        }
        cfg
    }

    /// Bias-only variant of the rate experiment on the raised-cosine density.
    pub fn bias_preset() -> Self {
        let mut cfg = Self::preset(ExperimentKind::Rate);
        cfg.rate = RateSection { density: DensityKind::RaisedCosine, dim: 1, bias_only: true };
        cfg.sigma = SigmaPolicy::explicit(&[0.4, 0.2, 0.1, 0.05]);
        cfg.n = vec![1];
        cfg.repeats = 1;
        cfg
    }

    /// Parses a full config, or overlays a partial one on the preset of the
    /// experiment it names (or `fallback` when it names none).
    pub fn from_toml(text: &str, fallback: Option<ExperimentKind>) -> Result<Self> {
        let overlay: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let kind = match overlay.get("experiment") {
            Some(v) => v
                .clone()
                .try_into::<ExperimentKind>()
                .map_err(|e| Error::Config(format!("experiment: {e}")))?,
            None => fallback.ok_or_else(|| Error::Config("config names no experiment".into()))?,
        };
        if let Some(f) = fallback {
            if f != kind {
                return Err(Error::Config(format!(
                    "config is for {} but {} was requested",
                    kind.name(),
                    f.name()
                )));
            }
        }
        let base = if kind == ExperimentKind::Rate
            && overlay.get("rate").and_then(|r| r.get("bias_only")).and_then(|b| b.as_bool()) == Some(true)
        {
            Self::bias_preset()
        } else {
            Self::preset(kind)
        };
        let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Config(format!("{e}")))?;
        merge(&mut merged, overlay);
        let cfg: Self = toml::Value::Table(merged).try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, fallback: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, fallback)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("{e}")))
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed must be at most {}", i64::MAX));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return bad("n list must be nonempty with positive entries".into());
        }
        if self.repeats == 0 || self.m == 0 {
            return bad("repeats and m must be at least 1".into());
        }
        match &self.sigma {
            SigmaPolicy::Explicit { values } => {
                if values.is_empty() || values.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
                    return bad("sigma values must be a nonempty list in (0, 1]".into());
                }
            }
            SigmaPolicy::BandwidthRule { alpha, d_eff, .. } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) || *d_eff == 0 {
                    return bad("bandwidth rule needs alpha in (0, 1] and d_eff >= 1".into());
                }
            }
        }
        self.ode.validate().map_err(|e| Error::Config(format!("ode: {e}")))?;
        if self.net.hidden.is_empty() || self.net.hidden.contains(&0) || self.net.log_every == 0 {
            return bad("net needs nonempty positive widths and log_every >= 1".into());
        }
        if self.rate.dim == 0 || self.bounds.dims.is_empty() || self.bounds.dims.contains(&0) {
            return bad("dimensions must be positive and lists nonempty".into());
        }
        if self.tv.epsilons.is_empty() || self.tv.epsilons.iter().any(|e| !(*e > 0.0 && *e <= 0.5)) {
            return bad("tv epsilons must be a nonempty list in (0, 0.5]".into());
        }
        if self.tv.draws < 2 || !(self.tv.half_width > 0.0) {
            return bad("tv needs at least 2 draws and a positive half width".into());
        }
        if self.bounds.points == 0 || !(self.bounds.a > 0.0) || !(self.bounds.fd_step > 0.0) {
            return bad("bounds needs points >= 1, a > 0 and fd_step > 0".into());
        }
        if !(self.manifold.tube_radius > 0.0) || self.manifold.rate_m == 0 || self.manifold.rate_n.contains(&0) {
            return bad("manifold needs a positive tube radius, rate_m and rate_n entries".into());
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if key != "sigma" => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
