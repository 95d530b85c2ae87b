//! Experiment configuration.
//!
//! Each experiment has a preset carrying the reference parameters. A flat
//! key-value TOML file may override any field, and command-line flags override
//! the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{PhysicsParams, Scheme, TrajectoryConfig};
use crate::error::{Error, Result};
use crate::master::effective_diffusion;
use crate::noise::{NoiseKind, NoiseModel};
use crate::observables::DEFAULT_EPS_COLLAPSE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fig1a,
    Fig1b,
    BornSweep,
    FdrSweep,
    WeakEquivalence,
    NoiseValidation,
    FrozenLimit,
    GkslCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Fig1a,
        ExperimentKind::Fig1b,
        ExperimentKind::BornSweep,
        ExperimentKind::FdrSweep,
        ExperimentKind::WeakEquivalence,
        ExperimentKind::NoiseValidation,
        ExperimentKind::FrozenLimit,
        ExperimentKind::GkslCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Fig1a => "fig1a",
            ExperimentKind::Fig1b => "fig1b",
            ExperimentKind::BornSweep => "born-sweep",
            ExperimentKind::FdrSweep => "fdr-sweep",
            ExperimentKind::WeakEquivalence => "weak-equivalence",
            ExperimentKind::NoiseValidation => "noise-validation",
            ExperimentKind::FrozenLimit => "frozen-limit",
            ExperimentKind::GkslCheck => "gksl-check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Everything needed to run one experiment reproducibly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_traj: usize,
    pub master_seed: u64,
    pub j: f64,
    pub g: f64,
    pub gamma: f64,
    /// Explicit effective diffusion; derived from `g`, `tau` and `noise` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deff: Option<f64>,
    pub tau: f64,
    pub noise: NoiseKind,
    pub scheme: Scheme,
    pub dt: f64,
    pub horizon: f64,
    pub z0: f64,
    pub decimation: usize,
    pub eps_collapse: f64,
    pub output_dir: PathBuf,
}

/// Flat, all-optional mirror of [`ExperimentConfig`] used for files and flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<ExperimentKind>,
    pub n_traj: Option<usize>,
    pub master_seed: Option<u64>,
    pub j: Option<f64>,
    pub g: Option<f64>,
    pub gamma: Option<f64>,
    pub deff: Option<f64>,
    pub tau: Option<f64>,
    pub noise: Option<NoiseKind>,
    pub scheme: Option<Scheme>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub z0: Option<f64>,
    pub decimation: Option<usize>,
    pub eps_collapse: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `other` win.
    pub fn merge(self, other: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            experiment: other.experiment.or(self.experiment),
            n_traj: other.n_traj.or(self.n_traj),
            master_seed: other.master_seed.or(self.master_seed),
            j: other.j.or(self.j),
            g: other.g.or(self.g),
            gamma: other.gamma.or(self.gamma),
            deff: other.deff.or(self.deff),
            tau: other.tau.or(self.tau),
            noise: other.noise.or(self.noise),
            scheme: other.scheme.or(self.scheme),
            dt: other.dt.or(self.dt),
            horizon: other.horizon.or(self.horizon),
            z0: other.z0.or(self.z0),
            decimation: other.decimation.or(self.decimation),
            eps_collapse: other.eps_collapse.or(self.eps_collapse),
            output_dir: other.output_dir.or(self.output_dir),
        }
    }
}

impl ExperimentConfig {
    /// Reference parameters for each experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            n_traj: 20_000,
            master_seed: 20_240_601,
            j: 2.0,
            g: 10.0,
            gamma: 0.0,
            deff: None,
            tau: 0.01,
            noise: NoiseKind::Ou,
            scheme: Scheme::SuvColored,
            dt: 1e-3,
            horizon: 10.0,
            z0: 0.6,
            decimation: 10,
            eps_collapse: DEFAULT_EPS_COLLAPSE,
            output_dir: PathBuf::from("out").join(kind.as_str()),
        };
        match kind {
            ExperimentKind::Fig1a => ExperimentConfig {
                g: 1.0,
                gamma: 0.5,
                tau: 1.0,
                horizon: 1.0,
                ..base
            },
            // Horizon 5/𝒟² with 𝒟² = 2: the coherence decays by more than 90%.
            ExperimentKind::Fig1b => ExperimentConfig {
                n_traj: 50_000,
                horizon: 2.5,
                ..base
            },
            ExperimentKind::BornSweep => base,
            ExperimentKind::FdrSweep => ExperimentConfig { n_traj: 10_000, ..base },
            ExperimentKind::WeakEquivalence => ExperimentConfig {
                n_traj: 50_000,
                horizon: 1.0,
                scheme: Scheme::WhiteStrat,
                ..base
            },
            // dt = τ/200: the clamped SBM step loses a few percent of its
            // correlation at 2τ when coarser.
            ExperimentKind::NoiseValidation => ExperimentConfig {
                n_traj: 100_000,
                g: 1.0,
                tau: 1.0,
                dt: 0.005,
                horizon: 5.0,
                ..base
            },
            ExperimentKind::FrozenLimit => ExperimentConfig {
                j: 1.0,
                g: 1.0,
                noise: NoiseKind::FrozenSbm,
                dt: 0.01,
                horizon: 30.0,
                ..base
            },
            ExperimentKind::GkslCheck => ExperimentConfig {
                n_traj: 50_000,
                horizon: 2.5,
                scheme: Scheme::WhiteIto,
                ..base
            },
        }
    }

    /// Preset for the experiment named in `overrides` (or `fallback`), with the
    /// overrides applied and the result validated.
    pub fn resolve(fallback: ExperimentKind, overrides: ConfigOverrides) -> Result<Self> {
        let kind = overrides.experiment.unwrap_or(fallback);
        let mut c = Self::preset(kind);
        let o = overrides;
        c.n_traj = o.n_traj.unwrap_or(c.n_traj);
        c.master_seed = o.master_seed.unwrap_or(c.master_seed);
        c.j = o.j.unwrap_or(c.j);
        c.g = o.g.unwrap_or(c.g);
        c.gamma = o.gamma.unwrap_or(c.gamma);
        c.deff = o.deff.or(c.deff);
        c.tau = o.tau.unwrap_or(c.tau);
        c.noise = o.noise.unwrap_or(c.noise);
        c.scheme = o.scheme.unwrap_or(c.scheme);
        c.dt = o.dt.unwrap_or(c.dt);
        c.horizon = o.horizon.unwrap_or(c.horizon);
        c.z0 = o.z0.unwrap_or(c.z0);
        c.decimation = o.decimation.unwrap_or(c.decimation);
        c.eps_collapse = o.eps_collapse.unwrap_or(c.eps_collapse);
        c.output_dir = o.output_dir.unwrap_or(c.output_dir);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 1 {
            return Err(Error::Config("n_traj must be at least 1".into()));
        }
        if self.master_seed > i64::MAX as u64 {
            return Err(Error::Config(format!(
                "master_seed {} does not fit in a signed 64-bit integer",
                self.master_seed
            )));
        }
        if self.decimation < 1 {
            return Err(Error::Config("decimation must be at least 1".into()));
        }
        if !(self.eps_collapse > 0.0 && self.eps_collapse < 0.5) {
            return Err(Error::Config(format!(
                "eps_collapse = {} must lie in (0, 0.5)",
                self.eps_collapse
            )));
        }
        if let Some(d) = self.deff {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("deff must be non-negative, got {d}")));
            }
        }
        self.trajectory()?.validate()
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise, self.tau).map_err(|e| Error::Config(e.to_string()))
    }

    /// 𝒟: the explicit override, else derived from the colored noise (0 for
    /// frozen and absent noise).
    pub fn effective_diffusion(&self) -> Result<f64> {
        match (self.deff, self.noise) {
            (Some(d), _) => Ok(d),
            (None, NoiseKind::Ou | NoiseKind::Sbm) => effective_diffusion(self.g, self.tau, self.noise),
            (None, _) => Ok(0.0),
        }
    }

    pub fn params(&self) -> Result<PhysicsParams> {
        Ok(PhysicsParams::new(self.j, self.g, self.gamma).with_deff(self.effective_diffusion()?))
    }

    pub fn trajectory(&self) -> Result<TrajectoryConfig> {
        Ok(TrajectoryConfig {
            params: self.params()?,
            noise: self.noise_model()?,
            dt: self.dt,
            horizon: self.horizon,
            z0: self.z0,
            scheme: self.scheme,
            xi0: None,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}
