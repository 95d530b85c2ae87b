//! The experiment registry: each experiment computes a typed report, which
//! [`run_experiment`] then writes out as CSV files plus a manifest.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use super::ensemble::{output_times, run_final_z, run_ordered, run_summary};
use super::output::{fmt_f64, fmt_opt, OutputDir, RunManifest};
use super::stream::sub_seed;
use crate::dynamics::{Scheme, TrajectoryConfig, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::master::{dephasing_rate, gksl_residual, gksl_solution, nonlinearity_coefficient, DensityMatrix2, GkslResidual};
use crate::noise::{lag_steps, AutocovarianceAccumulator, NoiseKind, NoiseModel, NoiseProcess};
use crate::observables::{
    born_deviation, collapse_statistics, fit_decay_rate, ks_distance, ks_distance_to_cdf, CollapseStats,
    EnsembleSummary,
};

pub const BORN_SWEEP_Z0: [f64; 6] = [0.1, 0.25, 0.5, 0.6, 0.75, 0.9];
pub const FDR_SWEEP_RATIOS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const FDR_SWEEP_Z0: [f64; 4] = [0.25, 0.5, 0.6, 0.75];
pub const FROZEN_Z0: [f64; 4] = [0.25, 0.5, 0.6, 0.75];

/// Correlation time of the slow-noise contrast run in the weak-equivalence
/// experiment. G is rescaled so that 𝒟 stays fixed.
pub const CONTRAST_TAU: f64 = 1.0;

/// Independent White-Strat ensemble pairs averaged into the bootstrap
/// self-distance.
pub const SELF_DISTANCE_PAIRS: usize = 3;

/// Single-trajectory dumps written by fig1b.
pub const FIG1B_SAMPLES: usize = 5;

/// Start of the window used to fit the off-diagonal decay rate, past the
/// initial transient of the colored noise.
pub const DECAY_FIT_START: f64 = 0.1;

fn with_scheme(cfg: &ExperimentConfig, scheme: Scheme) -> Result<TrajectoryConfig> {
    let mut t = cfg.trajectory()?;
    t.scheme = scheme;
    Ok(t)
}

fn fit_offdiag_rate(s: &EnsembleSummary) -> Option<f64> {
    let t_max = s.times.last().copied().unwrap_or(0.0);
    fit_decay_rate(&s.times, &s.mean_offdiag, DECAY_FIT_START, t_max).ok()
}

/// Largest `|residual| / stderr` over output points after t = 0 with a
/// positive standard error.
fn max_in_se(residual: &[f64], stderr: &[Option<f64>]) -> Option<f64> {
    residual
        .iter()
        .zip(stderr)
        .skip(1)
        .filter_map(|(r, se)| se.filter(|s| *s > 0.0).map(|s| r.abs() / s))
        .reduce(f64::max)
}

// ---------------------------------------------------------------------------
// fig1a

#[derive(Debug, Clone)]
pub struct Fig1aReport {
    pub suv: EnsembleSummary,
    pub sse: EnsembleSummary,
    /// SUV ensemble at ten times the time step.
    pub suv_coarse: EnsembleSummary,
    pub dt: f64,
    pub coarse_dt: f64,
}

impl Fig1aReport {
    /// SSE over SUV quadratic variation at the horizon.
    pub fn qv_ratio(&self) -> f64 {
        self.sse.final_qv() / self.suv.final_qv()
    }

    /// Log-log slope of the SUV quadratic variation against the time step.
    pub fn dt_slope(&self) -> f64 {
        (self.suv_coarse.final_qv() / self.suv.final_qv()).ln() / (self.coarse_dt / self.dt).ln()
    }

    fn results(&self) -> Value {
        json!({
            "suv_qv": self.suv.final_qv(),
            "sse_qv": self.sse.final_qv(),
            "suv_qv_coarse": self.suv_coarse.final_qv(),
            "dt": self.dt,
            "coarse_dt": self.coarse_dt,
            "qv_ratio": self.qv_ratio(),
            "dt_slope": self.dt_slope(),
        })
    }

    fn write(&self, out: &mut OutputDir) -> Result<()> {
        out.write_ensemble("fig1a_suv.csv", &self.suv)?;
        out.write_ensemble("fig1a_sse.csv", &self.sse)?;
        out.write_ensemble("fig1a_suv_coarse.csv", &self.suv_coarse)?;
        Ok(())
    }
}

/// Quadratic variation of `α` for the SUV and SSE unravelings, plus an SUV run
/// at a ten times coarser step for the time-step scaling.
pub fn fig1a(cfg: &ExperimentConfig) -> Result<Fig1aReport> {
    let suv_cfg = with_scheme(cfg, Scheme::SuvColored)?;
    let sse_cfg = with_scheme(cfg, Scheme::Sse)?;
    let mut coarse_cfg = suv_cfg;
    coarse_cfg.dt = 10.0 * cfg.dt;
    let coarse_decimation = (cfg.decimation / 10).max(1);

    let (suv, _) = run_summary(&suv_cfg, cfg.n_traj, sub_seed(cfg.master_seed, 0), cfg.decimation, 0)?;
    let (sse, _) = run_summary(&sse_cfg, cfg.n_traj, sub_seed(cfg.master_seed, 1), cfg.decimation, 0)?;
    let (suv_coarse, _) = run_summary(
        &coarse_cfg,
        cfg.n_traj,
        sub_seed(cfg.master_seed, 2),
        coarse_decimation,
        0,
    )?;
    Ok(Fig1aReport {
        suv,
        sse,
        suv_coarse,
        dt: cfg.dt,
        coarse_dt: coarse_cfg.dt,
    })
}

// ---------------------------------------------------------------------------
// fig1b

#[derive(Debug, Clone)]
pub struct Fig1bReport {
    pub noise: NoiseKind,
    pub headline: EnsembleSummary,
    /// The same run with the other colored noise model, when there is one.
    pub companion: Option<(NoiseKind, EnsembleSummary)>,
    pub samples: Vec<TrajectoryRecord>,
    pub deff: f64,
    pub z0: f64,
}

impl Fig1bReport {
    pub fn expected_rate(&self) -> f64 {
        dephasing_rate(self.deff)
    }

    pub fn fitted_rate(&self) -> Option<f64> {
        fit_offdiag_rate(&self.headline)
    }

    pub fn max_z_deviation_in_se(&self) -> f64 {
        self.headline.max_z_deviation_in_se(self.z0)
    }

    fn results(&self) -> Value {
        json!({
            "noise": self.noise,
            "deff_sq": self.deff * self.deff,
            "expected_offdiag_rate": self.expected_rate(),
            "fitted_offdiag_rate": self.fitted_rate(),
            "max_z_deviation_in_se": finite_or_null(self.max_z_deviation_in_se()),
            "companion": self.companion.as_ref().map(|(k, s)| json!({
                "noise": k,
                "fitted_offdiag_rate": fit_offdiag_rate(s),
                "max_z_deviation_in_se": finite_or_null(s.max_z_deviation_in_se(self.z0)),
            })),
        })
    }

    fn write(&self, out: &mut OutputDir) -> Result<()> {
        out.write_ensemble(&format!("fig1b_{}.csv", self.noise), &self.headline)?;
        if let Some((kind, s)) = &self.companion {
            out.write_ensemble(&format!("fig1b_{kind}.csv"), s)?;
        }
        for (i, rec) in self.samples.iter().enumerate() {
            out.write_trajectory(&format!("fig1b_traj_{i}.csv"), &self.headline.times, rec)?;
        }
        Ok(())
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Ensemble density matrix under colored noise, with the other noise model as
/// a companion run.
pub fn fig1b(cfg: &ExperimentConfig) -> Result<Fig1bReport> {
    let traj = cfg.trajectory()?;
    let (headline, samples) = run_summary(
        &traj,
        cfg.n_traj,
        sub_seed(cfg.master_seed, 0),
        cfg.decimation,
        FIG1B_SAMPLES,
    )?;
    let other = match cfg.noise {
        NoiseKind::Ou => Some(NoiseKind::Sbm),
        NoiseKind::Sbm => Some(NoiseKind::Ou),
        _ => None,
    };
    let companion = match other {
        Some(kind) if traj.scheme.is_colored() => {
            let mut c = traj;
            c.noise = NoiseModel::new(kind, cfg.tau)?;
            let (s, _) = run_summary(&c, cfg.n_traj, sub_seed(cfg.master_seed, 1), cfg.decimation, 0)?;
            Some((kind, s))
        }
        _ => None,
    };
    Ok(Fig1bReport {
        noise: cfg.noise,
        headline,
        companion,
        samples,
        deff: cfg.effective_diffusion()?,
        z0: cfg.z0,
    })
}

// ---------------------------------------------------------------------------
// collapse sweeps

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseRow {
    pub z0: f64,
    pub j: f64,
    pub deff_sq: f64,
    pub stats: CollapseStats,
    /// `frac_zero - z0`; `None` when too many trajectories are unresolved.
    pub deviation: Option<f64>,
    /// Binomial standard error of the Born probability `z0`.
    pub binomial_se: f64,
}

impl CollapseRow {
    pub fn j_over_deff_sq(&self) -> Option<f64> {
        (self.deff_sq > 0.0).then(|| self.j / self.deff_sq)
    }

    /// `|deviation|` in binomial standard errors.
    pub fn deviation_in_se(&self) -> Option<f64> {
        self.deviation.map(|d| d.abs() / self.binomial_se)
    }

    fn csv_row(&self) -> Vec<String> {
        vec![
            fmt_f64(self.z0),
            fmt_f64(self.j),
            fmt_f64(self.deff_sq),
            fmt_opt(self.j_over_deff_sq()),
            self.stats.n_traj.to_string(),
            fmt_f64(self.stats.frac_zero),
            fmt_f64(self.stats.frac_one),
            fmt_f64(self.stats.frac_unresolved),
            fmt_opt(self.deviation),
            fmt_f64(self.binomial_se),
        ]
    }
}

pub const COLLAPSE_HEADER: [&str; 10] = [
    "z0",
    "j",
    "deff_sq",
    "j_over_deff_sq",
    "n_traj",
    "frac_zero",
    "frac_one",
    "frac_unresolved",
    "born_deviation",
    "binomial_se",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    pub rows: Vec<CollapseRow>,
}

impl CollapseReport {
    fn write(&self, out: &mut OutputDir, name: &str) -> Result<()> {
        let rows: Vec<Vec<String>> = self.rows.iter().map(CollapseRow::csv_row).collect();
        out.write_table(name, &COLLAPSE_HEADER, &rows)?;
        Ok(())
    }

    fn results(&self) -> Value {
        json!({
            "points": self.rows.iter().map(|r| json!({
                "z0": r.z0,
                "j": r.j,
                "frac_zero": r.stats.frac_zero,
                "frac_unresolved": r.stats.frac_unresolved,
                "born_deviation": r.deviation,
                "deviation_in_se": r.deviation_in_se(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Collapse statistics at each `(z0, J)` point, with everything else taken
/// from `cfg`. Each point uses its own sub-seed.
pub fn collapse_grid(cfg: &ExperimentConfig, points: &[(f64, f64)]) -> Result<CollapseReport> {
    let base = cfg.trajectory()?;
    let deff_sq = base.params.deff_sq();
    let mut rows = Vec::with_capacity(points.len());
    for (idx, &(z0, j)) in points.iter().enumerate() {
        let mut traj = base;
        traj.z0 = z0;
        traj.params.j = j;
        let final_z = run_final_z(&traj, cfg.n_traj, sub_seed(cfg.master_seed, idx as u64))?;
        let stats = collapse_statistics(&final_z, cfg.eps_collapse)?;
        let deviation = match born_deviation(&stats, z0) {
            Ok(d) => Some(d),
            Err(Error::Inconclusive { unresolved_fraction, .. }) => {
                log::warn!("z0 = {z0}, J = {j}: {unresolved_fraction} of trajectories unresolved");
                None
            }
            Err(e) => return Err(e),
        };
        rows.push(CollapseRow {
            z0,
            j,
            deff_sq,
            stats,
            deviation,
            binomial_se: (z0 * (1.0 - z0) / cfg.n_traj as f64).sqrt(),
        });
    }
    Ok(CollapseReport { rows })
}

/// Born-rule check over the default z₀ grid at the configured J.
pub fn born_sweep(cfg: &ExperimentConfig) -> Result<CollapseReport> {
    let points: Vec<(f64, f64)> = BORN_SWEEP_Z0.iter().map(|&z0| (z0, cfg.j)).collect();
    collapse_grid(cfg, &points)
}

/// Collapse statistics across J/𝒟², bracketing the fluctuation-dissipation point.
pub fn fdr_sweep(cfg: &ExperimentConfig) -> Result<CollapseReport> {
    let deff_sq = cfg.params()?.deff_sq();
    if deff_sq <= 0.0 {
        return Err(Error::Config(
            "fdr-sweep needs a positive effective diffusion; use OU or SBM noise or set deff".into(),
        ));
    }
    let points: Vec<(f64, f64)> = FDR_SWEEP_RATIOS
        .iter()
        .flat_map(|&r| FDR_SWEEP_Z0.iter().map(move |&z0| (z0, r * deff_sq)))
        .collect();
    collapse_grid(cfg, &points)
}

/// Collapse statistics with frozen noise.
pub fn frozen_limit(cfg: &ExperimentConfig) -> Result<CollapseReport> {
    let points: Vec<(f64, f64)> = FROZEN_Z0.iter().map(|&z0| (z0, cfg.j)).collect();
    collapse_grid(cfg, &points)
}

// ---------------------------------------------------------------------------
// weak-equivalence

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsRow {
    pub comparison: String,
    pub tau: Option<f64>,
    pub ks_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakEquivalenceReport {
    pub n_traj: usize,
    /// Mean KS distance between independent White-Strat ensemble pairs.
    pub self_distance: f64,
    pub self_pairs: Vec<f64>,
    /// SUV-colored at the configured τ against White-Strat.
    pub colored: KsRow,
    /// SUV-colored at [`CONTRAST_TAU`] against White-Strat.
    pub contrast: KsRow,
    /// White-Ito against White-Strat.
    pub ito: KsRow,
}

impl WeakEquivalenceReport {
    fn rows(&self) -> [&KsRow; 3] {
        [&self.colored, &self.contrast, &self.ito]
    }

    fn write(&self, out: &mut OutputDir) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows()
            .iter()
            .map(|r| {
                vec![
                    r.comparison.clone(),
                    fmt_opt(r.tau),
                    self.n_traj.to_string(),
                    fmt_f64(r.ks_distance),
                    fmt_f64(self.self_distance),
                    fmt_f64(r.ks_distance / self.self_distance),
                ]
            })
            .collect();
        out.write_table(
            "weak_equivalence.csv",
            &["comparison", "tau", "n_traj", "ks_distance", "self_distance", "ratio"],
            &rows,
        )?;
        Ok(())
    }

    fn results(&self) -> Value {
        let ratio = |r: &KsRow| finite_or_null(r.ks_distance / self.self_distance);
        json!({
            "self_distance": self.self_distance,
            "self_pairs": self.self_pairs,
            "colored_ks": self.colored.ks_distance,
            "colored_ratio": ratio(&self.colored),
            "contrast_ks": self.contrast.ks_distance,
            "contrast_ratio": ratio(&self.contrast),
            "ito_ks": self.ito.ks_distance,
            "ito_ratio": ratio(&self.ito),
        })
    }
}

/// Compares final-z distributions of the colored dynamics with the white-noise
/// Stratonovich limit, and the two white-noise schemes with each other.
pub fn weak_equivalence(cfg: &ExperimentConfig) -> Result<WeakEquivalenceReport> {
    if !matches!(cfg.noise, NoiseKind::Ou | NoiseKind::Sbm) {
        return Err(Error::Config("weak-equivalence needs OU or SBM noise".into()));
    }
    let seed = |label| sub_seed(cfg.master_seed, label);
    let n = cfg.n_traj;
    let white_cfg = with_scheme(cfg, Scheme::WhiteStrat)?;
    let white = run_final_z(&white_cfg, n, seed(0))?;

    let colored_cfg = with_scheme(cfg, Scheme::SuvColored)?;
    let colored = run_final_z(&colored_cfg, n, seed(1))?;

    let mut contrast_cfg = colored_cfg;
    contrast_cfg.noise = NoiseModel::new(cfg.noise, CONTRAST_TAU)?;
    contrast_cfg.params.g = cfg.g * (cfg.tau / CONTRAST_TAU).sqrt();
    let contrast = run_final_z(&contrast_cfg, n, seed(2))?;

    let ito = run_final_z(&with_scheme(cfg, Scheme::WhiteIto)?, n, seed(3))?;

    let mut self_pairs = Vec::with_capacity(SELF_DISTANCE_PAIRS);
    for k in 0..SELF_DISTANCE_PAIRS as u64 {
        let a = run_final_z(&white_cfg, n, seed(10 + 2 * k))?;
        let b = run_final_z(&white_cfg, n, seed(11 + 2 * k))?;
        self_pairs.push(ks_distance(&a, &b)?);
    }
    let self_distance = self_pairs.iter().sum::<f64>() / self_pairs.len() as f64;

    Ok(WeakEquivalenceReport {
        n_traj: n,
        self_distance,
        self_pairs,
        colored: KsRow {
            comparison: format!("suv-colored-{}-vs-white-strat", cfg.noise),
            tau: Some(cfg.tau),
            ks_distance: ks_distance(&colored, &white)?,
        },
        contrast: KsRow {
            comparison: format!("suv-colored-{}-vs-white-strat", cfg.noise),
            tau: Some(CONTRAST_TAU),
            ks_distance: ks_distance(&contrast, &white)?,
        },
        ito: KsRow {
            comparison: "white-ito-vs-white-strat".into(),
            tau: None,
            ks_distance: ks_distance(&ito, &white)?,
        },
    })
}

// ---------------------------------------------------------------------------
// noise-validation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfRow {
    pub lag: f64,
    pub estimate: f64,
    pub expected: f64,
}

impl AcfRow {
    pub fn rel_error(&self) -> f64 {
        (self.estimate - self.expected).abs() / self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseModelCheck {
    pub kind: NoiseKind,
    pub tau: f64,
    pub n_paths: usize,
    pub acf: Vec<AcfRow>,
    pub fitted_decay_rate: Option<f64>,
    /// KS distance of the path endpoints to the stationary law (SBM only).
    pub ks_stationary: Option<f64>,
}

impl NoiseModelCheck {
    /// Autocovariance row at `lag` (in units of time).
    pub fn at(&self, lag: f64) -> Option<&AcfRow> {
        self.acf.iter().find(|r| (r.lag - lag).abs() < 1e-9 * lag.max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub models: Vec<NoiseModelCheck>,
}

impl NoiseReport {
    pub fn model(&self, kind: NoiseKind) -> Option<&NoiseModelCheck> {
        self.models.iter().find(|m| m.kind == kind)
    }

    fn write(&self, out: &mut OutputDir) -> Result<()> {
        let mut rows = Vec::new();
        for m in &self.models {
            for r in &m.acf {
                rows.push(vec![
                    m.kind.to_string(),
                    fmt_f64(m.tau),
                    fmt_f64(r.lag),
                    fmt_f64(r.estimate),
                    fmt_f64(r.expected),
                    fmt_f64(r.rel_error()),
                ]);
            }
        }
        out.write_table(
            "noise_autocorrelation.csv",
            &["model", "tau", "lag", "estimate", "expected", "rel_error"],
            &rows,
        )?;
        let summary: Vec<Vec<String>> = self
            .models
            .iter()
            .map(|m| {
                vec![
                    m.kind.to_string(),
                    fmt_f64(m.tau),
                    m.n_paths.to_string(),
                    fmt_opt(m.fitted_decay_rate),
                    fmt_f64(1.0 / m.tau),
                    fmt_opt(m.ks_stationary),
                ]
            })
            .collect();
        out.write_table(
            "noise_checks.csv",
            &["model", "tau", "n_paths", "fitted_decay_rate", "expected_decay_rate", "ks_stationary"],
            &summary,
        )?;
        Ok(())
    }

    fn results(&self) -> Value {
        json!({ "models": self.models })
    }
}

/// Lags at which the autocovariance is reported: `0, τ/5, …, 2τ`.
pub fn noise_lags(tau: f64) -> Vec<f64> {
    (0..=10).map(|k| k as f64 * tau / 5.0).collect()
}

fn check_noise_model(kind: NoiseKind, cfg: &ExperimentConfig) -> Result<NoiseModelCheck> {
    let model = NoiseModel::new(kind, cfg.tau)?;
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let lags = noise_lags(cfg.tau);
    let lag_idx = lags
        .iter()
        .map(|&l| lag_steps(l, cfg.dt))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Config(format!("noise-validation lags must sit on the time grid: {e}")))?;
    let mut acc = AutocovarianceAccumulator::new(steps + 1, &lag_idx)
        .map_err(|e| Error::Config(format!("noise-validation horizon too short: {e}")))?;
    let mut endpoints = Vec::with_capacity(cfg.n_traj);
    let dt = cfg.dt;
    run_ordered(
        cfg.n_traj,
        sub_seed(cfg.master_seed, kind as u64),
        |_, rng| {
            let mut p = NoiseProcess::stationary(model, rng)?;
            let mut path = Vec::with_capacity(steps + 1);
            path.push(p.xi());
            for _ in 0..steps {
                p.advance(dt, rng)?;
                path.push(p.xi());
            }
            Ok(path)
        },
        |_, path| {
            endpoints.push(*path.last().unwrap());
            acc.add(&path)
        },
    )?;
    let second_moment = kind.stationary_second_moment().unwrap_or(1.0);
    let acf: Vec<AcfRow> = lags
        .iter()
        .zip(acc.finish()?)
        .map(|(&lag, estimate)| AcfRow {
            lag,
            estimate,
            expected: second_moment * (-lag / cfg.tau).exp(),
        })
        .collect();
    let (t, y): (Vec<f64>, Vec<f64>) = acf.iter().map(|r| (r.lag, r.estimate)).unzip();
    let ks_stationary = match kind {
        NoiseKind::Sbm => Some(ks_distance_to_cdf(&endpoints, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0))?),
        _ => None,
    };
    Ok(NoiseModelCheck {
        kind,
        tau: cfg.tau,
        n_paths: cfg.n_traj,
        fitted_decay_rate: fit_decay_rate(&t, &y, 0.0, 2.0 * cfg.tau).ok(),
        acf,
        ks_stationary,
    })
}

/// Autocovariance and stationary-law checks of the OU and SBM generators.
pub fn noise_validation(cfg: &ExperimentConfig) -> Result<NoiseReport> {
    Ok(NoiseReport {
        models: vec![
            check_noise_model(NoiseKind::Ou, cfg)?,
            check_noise_model(NoiseKind::Sbm, cfg)?,
        ],
    })
}

// ---------------------------------------------------------------------------
// gksl-check

#[derive(Debug, Clone)]
pub struct GkslRun {
    pub scheme: Scheme,
    pub noise: Option<NoiseKind>,
    pub summary: EnsembleSummary,
    pub residual: GkslResidual,
}

impl GkslRun {
    pub fn max_z_residual_in_se(&self) -> Option<f64> {
        max_in_se(&self.residual.z, &self.summary.stderr_z)
    }

    pub fn max_offdiag_residual_in_se(&self) -> Option<f64> {
        max_in_se(&self.residual.offdiag, &self.summary.stderr_offdiag)
    }

    pub fn fitted_rate(&self) -> Option<f64> {
        fit_offdiag_rate(&self.summary)
    }

    fn name(&self) -> String {
        match self.noise {
            Some(k) => format!("gksl_{}_{k}.csv", self.scheme),
            None => format!("gksl_{}.csv", self.scheme),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GkslReport {
    pub deff: f64,
    pub j: f64,
    pub runs: Vec<GkslRun>,
}

impl GkslReport {
    fn write(&self, out: &mut OutputDir) -> Result<()> {
        for run in &self.runs {
            let s = &run.summary;
            let rho0 = DensityMatrix2 {
                rho00: s.mean_z[0],
                rho01: s.mean_offdiag[0],
            };
            let rows: Vec<Vec<String>> = (0..s.times.len())
                .map(|k| {
                    let exact = gksl_solution(&rho0, self.deff, s.times[k] - s.times[0]);
                    vec![
                        fmt_f64(s.times[k]),
                        fmt_f64(s.mean_z[k]),
                        fmt_f64(exact.rho00),
                        fmt_f64(run.residual.z[k]),
                        fmt_opt(s.stderr_z[k]),
                        fmt_f64(s.mean_offdiag[k]),
                        fmt_f64(exact.rho01),
                        fmt_f64(run.residual.offdiag[k]),
                        fmt_opt(s.stderr_offdiag[k]),
                    ]
                })
                .collect();
            out.write_table(
                &run.name(),
                &[
                    "t",
                    "mean_z",
                    "gksl_z",
                    "residual_z",
                    "stderr_z",
                    "mean_offdiag",
                    "gksl_offdiag",
                    "residual_offdiag",
                    "stderr_offdiag",
                ],
                &rows,
            )?;
        }
        Ok(())
    }

    fn results(&self) -> Value {
        json!({
            "deff_sq": self.deff * self.deff,
            "nonlinearity_coefficient": nonlinearity_coefficient(self.j, self.deff),
            "expected_offdiag_rate": dephasing_rate(self.deff),
            "runs": self.runs.iter().map(|r| json!({
                "scheme": r.scheme,
                "noise": r.noise,
                "max_abs_residual_z": r.residual.max_abs_z(),
                "max_abs_residual_offdiag": r.residual.max_abs_offdiag(),
                "max_z_residual_in_se": r.max_z_residual_in_se(),
                "max_offdiag_residual_in_se": r.max_offdiag_residual_in_se(),
                "fitted_offdiag_rate": r.fitted_rate(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Ensemble density matrix against the dephasing master equation, for the
/// configured scheme and, when it is a white-noise scheme, the colored SUV
/// dynamics as well.
pub fn gksl_check(cfg: &ExperimentConfig) -> Result<GkslReport> {
    let deff = cfg.effective_diffusion()?;
    let primary = cfg.trajectory()?;
    let mut plan = vec![primary];
    if !primary.scheme.is_colored() && matches!(cfg.noise, NoiseKind::Ou | NoiseKind::Sbm) {
        plan.push(with_scheme(cfg, Scheme::SuvColored)?);
    }
    let mut runs = Vec::with_capacity(plan.len());
    for (idx, traj) in plan.iter().enumerate() {
        let (summary, _) = run_summary(traj, cfg.n_traj, sub_seed(cfg.master_seed, idx as u64), cfg.decimation, 0)?;
        runs.push(GkslRun {
            scheme: traj.scheme,
            noise: traj.scheme.is_colored().then_some(traj.noise.kind),
            residual: gksl_residual(&summary, deff),
            summary,
        });
    }
    Ok(GkslReport { deff, j: cfg.j, runs })
}

// ---------------------------------------------------------------------------

/// What [`run_experiment`] wrote.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub files: Vec<std::path::PathBuf>,
    pub manifest: std::path::PathBuf,
    pub results: Value,
}

/// Runs the configured experiment and writes its CSV files followed by the
/// manifest into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = OutputDir::create(&cfg.output_dir)?;
    log::info!("running {} with {} trajectories", cfg.experiment, cfg.n_traj);
    let results = match cfg.experiment {
        ExperimentKind::Fig1a => {
            let r = fig1a(cfg)?;
            r.write(&mut out)?;
            r.results()
        }
        ExperimentKind::Fig1b => {
            let r = fig1b(cfg)?;
            r.write(&mut out)?;
            r.results()
        }
        ExperimentKind::BornSweep => {
            let r = born_sweep(cfg)?;
            r.write(&mut out, "born_sweep.csv")?;
            r.results()
        }
        ExperimentKind::FdrSweep => {
            let r = fdr_sweep(cfg)?;
            r.write(&mut out, "fdr_sweep.csv")?;
            r.results()
        }
        ExperimentKind::FrozenLimit => {
            let r = frozen_limit(cfg)?;
            r.write(&mut out, "frozen_limit.csv")?;
            r.results()
        }
        ExperimentKind::WeakEquivalence => {
            let r = weak_equivalence(cfg)?;
            r.write(&mut out)?;
            r.results()
        }
        ExperimentKind::NoiseValidation => {
            let r = noise_validation(cfg)?;
            r.write(&mut out)?;
            r.results()
        }
        ExperimentKind::GkslCheck => {
            let r = gksl_check(cfg)?;
            r.write(&mut out)?;
            r.results()
        }
    };
    let manifest = RunManifest::new(cfg, start.elapsed().as_secs_f64(), results.clone(), out.files())?;
    let manifest_path = manifest.write_atomic(out.root())?;
    Ok(ExperimentOutput {
        files: out.files().to_vec(),
        manifest: manifest_path,
        results,
    })
}

/// Output times of the ensemble files of `cfg`.
pub fn ensemble_times(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    Ok(output_times(&cfg.trajectory()?, cfg.decimation))
}
