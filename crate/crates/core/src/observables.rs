//! Ensemble statistics over trajectories.

use serde::{Deserialize, Serialize};

use crate::dynamics::{QubitState, TrajectoryRecord};
use crate::error::{invalid, Error, Result};
use crate::sum::ExactSum;

/// Largest unresolved fraction for which a Born-rule comparison is meaningful.
pub const MAX_UNRESOLVED: f64 = 0.01;

/// Default collapse classification threshold on `z`.
pub const DEFAULT_EPS_COLLAPSE: f64 = 1e-4;

/// Ensemble means of the density-matrix elements and the quadratic variation
/// of `α`, on the output grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean_z: Vec<f64>,
    /// Standard error of `mean_z`; `None` for a single trajectory.
    pub stderr_z: Vec<Option<f64>>,
    pub mean_offdiag: Vec<f64>,
    pub stderr_offdiag: Vec<Option<f64>>,
    /// Cumulative quadratic variation `Q_t`.
    pub qv: Vec<f64>,
    pub n_traj: usize,
}

impl EnsembleSummary {
    /// Largest `|mean_z - z0| / stderr_z` over output points with a positive
    /// standard error. Points with zero spread must match `z0` to 1e-12.
    pub fn max_z_deviation_in_se(&self, z0: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, se) in self.mean_z.iter().zip(&self.stderr_z) {
            let dev = (m - z0).abs();
            match se {
                Some(se) if *se > 0.0 => worst = worst.max(dev / se),
                _ if dev > 1e-12 => worst = f64::INFINITY,
                _ => {}
            }
        }
        worst
    }

    pub fn final_qv(&self) -> f64 {
        self.qv.last().copied().unwrap_or(0.0)
    }
}

/// Running mean/variance of one column with a fixed shift, so that constant
/// columns report exactly zero spread.
#[derive(Debug, Clone, Default)]
struct ShiftedMoments {
    shift: Option<f64>,
    sum: ExactSum,
    sum_sq: ExactSum,
}

impl ShiftedMoments {
    fn add(&mut self, x: f64) {
        let k = *self.shift.get_or_insert(x);
        let d = x - k;
        self.sum.add(d);
        self.sum_sq.add(d * d);
    }

    fn mean_and_stderr(&self, n: usize) -> (f64, Option<f64>) {
        let k = self.shift.unwrap_or(0.0);
        let nf = n as f64;
        let s = self.sum.value();
        let mean = k + s / nf;
        if n < 2 {
            return (mean, None);
        }
        let var = ((self.sum_sq.value() - s * s / nf) / (nf - 1.0)).max(0.0);
        (mean, Some((var / nf).sqrt()))
    }
}

/// Deterministic reducer of [`TrajectoryRecord`]s into an [`EnsembleSummary`].
///
/// All sums are exact, so the summary does not depend on the order in which
/// records arrive.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    times: Vec<f64>,
    z: Vec<ShiftedMoments>,
    offdiag: Vec<ShiftedMoments>,
    qv: Vec<ExactSum>,
    n: usize,
}

impl EnsembleAccumulator {
    pub fn new(times: Vec<f64>) -> Self {
        let len = times.len();
        Self {
            times,
            z: vec![ShiftedMoments::default(); len],
            offdiag: vec![ShiftedMoments::default(); len],
            qv: vec![ExactSum::new(); len],
            n: 0,
        }
    }

    pub fn add(&mut self, rec: &TrajectoryRecord) -> Result<()> {
        let len = self.times.len();
        if rec.z.len() != len || rec.offdiag.len() != len || rec.qv.len() != len {
            return Err(invalid(format!(
                "trajectory has {} output points, ensemble grid has {len}",
                rec.z.len()
            )));
        }
        for k in 0..len {
            self.z[k].add(rec.z[k]);
            self.offdiag[k].add(rec.offdiag[k]);
            self.qv[k].add(rec.qv[k]);
        }
        self.n += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn finish(self) -> Result<EnsembleSummary> {
        if self.n == 0 {
            return Err(invalid("ensemble summary of zero trajectories"));
        }
        let n = self.n;
        let (mean_z, stderr_z) = self.z.iter().map(|m| m.mean_and_stderr(n)).unzip();
        let (mean_offdiag, stderr_offdiag) = self.offdiag.iter().map(|m| m.mean_and_stderr(n)).unzip();
        let mut cumulative = ExactSum::new();
        let qv = self
            .qv
            .iter()
            .map(|interval| {
                cumulative.add(interval.value() / n as f64);
                cumulative.value()
            })
            .collect();
        Ok(EnsembleSummary {
            times: self.times,
            mean_z,
            stderr_z,
            mean_offdiag,
            stderr_offdiag,
            qv,
            n_traj: n,
        })
    }
}

/// Per-step ensemble means of squared increments, `m_k = mean_traj[(Δα_k)²]`.
///
/// Any interval of the quadratic variation is an exact sum of these terms, so
/// intervals compose without rounding drift.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVariation {
    pub step_means: Vec<f64>,
}

impl QuadraticVariation {
    pub fn from_increments(increments: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = increments.first() else {
            return Err(invalid("quadratic variation of an empty ensemble"));
        };
        let steps = first.len();
        if increments.iter().any(|p| p.len() != steps) {
            return Err(invalid("increment series are not on a common time grid"));
        }
        let n = increments.len() as f64;
        let step_means = (0..steps)
            .map(|k| increments.iter().map(|p| p[k] * p[k]).collect::<ExactSum>().value() / n)
            .collect();
        Ok(Self { step_means })
    }

    /// Exact sum over steps `[from, to)`.
    pub fn interval(&self, from: usize, to: usize) -> ExactSum {
        self.step_means[from..to].iter().copied().collect()
    }

    /// `Q_T` after each step.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = ExactSum::new();
        self.step_means
            .iter()
            .map(|&m| {
                acc.add(m);
                acc.value()
            })
            .collect()
    }
}

/// Cumulative quadratic variation `Q_T = Σ_{k ≤ T} mean_traj[(Δα_k)²]` of
/// per-trajectory increment series.
pub fn quadratic_variation(increments: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(QuadraticVariation::from_increments(increments)?.cumulative())
}

/// `(E[a²], E[a·b])` over an ensemble of normalized states.
pub fn density_matrix(states: &[QubitState]) -> Result<(f64, f64)> {
    if states.is_empty() {
        return Err(invalid("density matrix of an empty ensemble"));
    }
    let n = states.len() as f64;
    let z: ExactSum = states.iter().map(|s| s.a * s.a).collect();
    let off: ExactSum = states.iter().map(|s| s.a * s.b).collect();
    Ok((z.value() / n, off.value() / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseStats {
    /// Fraction reduced to `|0⟩` (`z > 1 - ε`).
    pub frac_zero: f64,
    /// Fraction reduced to `|1⟩` (`z < ε`).
    pub frac_one: f64,
    pub frac_unresolved: f64,
    pub n_traj: usize,
}

impl CollapseStats {
    /// Binomial standard error `sqrt(p(1-p)/n)` of a fraction `p`.
    pub fn binomial_se(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_traj as f64).sqrt()
    }
}

pub fn collapse_statistics(final_z: &[f64], eps_collapse: f64) -> Result<CollapseStats> {
    if !(eps_collapse > 0.0 && eps_collapse < 0.5) {
        return Err(invalid(format!("collapse threshold {eps_collapse} is outside (0, 0.5)")));
    }
    if final_z.is_empty() {
        return Err(invalid("collapse statistics of an empty ensemble"));
    }
    let (mut zero, mut one) = (0usize, 0usize);
    for &z in final_z {
        if z > 1.0 - eps_collapse {
            zero += 1;
        } else if z < eps_collapse {
            one += 1;
        }
    }
    let n = final_z.len();
    let nf = n as f64;
    Ok(CollapseStats {
        frac_zero: zero as f64 / nf,
        frac_one: one as f64 / nf,
        frac_unresolved: (n - zero - one) as f64 / nf,
        n_traj: n,
    })
}

/// Deviation from Born's rule, `frac_zero - z0`.
pub fn born_deviation(stats: &CollapseStats, z0: f64) -> Result<f64> {
    if stats.frac_unresolved >= MAX_UNRESOLVED {
        return Err(Error::Inconclusive {
            unresolved_fraction: stats.frac_unresolved,
            limit: MAX_UNRESOLVED,
        });
    }
    Ok(stats.frac_zero - z0)
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(invalid("Kolmogorov-Smirnov distance of an empty sample"));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(invalid("sample contains NaN"));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_distance(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    let a = sorted(sample_a)?;
    let b = sorted(sample_b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_distance_to_cdf<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    let x = sorted(sample)?;
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Ordinary least-squares fit `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("linear fit needs two or more paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear fit with degenerate abscissae"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Exponential decay rate `k` of `y ≈ A·e^{-k t}` from a log-linear fit over
/// the points with `t ∈ [t_min, t_max]` and `y > 0`.
pub fn fit_decay_rate(t: &[f64], y: &[f64], t_min: f64, t_max: f64) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(t, y)| **t >= t_min && **t <= t_max && **y > 0.0)
        .map(|(t, y)| (*t, y.ln()))
        .unzip();
    Ok(-linear_fit(&xs, &ys)?.0)
}
