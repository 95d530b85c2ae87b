//! Colored noise sources driving the state dynamics.
//!
//! Two mean-reverting processes with correlation time `tau` are provided:
//!
//! * Ornstein-Uhlenbeck: `dξ = -ξ dt/τ + sqrt(2/τ) dW`, stationary law N(0, 1),
//!   autocovariance `exp(-|t-s|/τ)`. Stepped with its exact Gaussian transition.
//! * Spherical Brownian motion, projected onto `ξ = cos θ`:
//!   `dξ = -ξ dt/τ + sqrt((1-ξ²)/τ) dW` (Itô), stationary law uniform on [-1, 1],
//!   autocovariance `exp(-|t-s|/τ)/3`. Stepped with Euler-Maruyama and clamped.
//!
//! The frozen variants draw ξ once from the stationary law and hold it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Ou,
    Sbm,
    FrozenOu,
    FrozenSbm,
    None,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::Ou,
        NoiseKind::Sbm,
        NoiseKind::FrozenOu,
        NoiseKind::FrozenSbm,
        NoiseKind::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Ou => "ou",
            NoiseKind::Sbm => "sbm",
            NoiseKind::FrozenOu => "frozen-ou",
            NoiseKind::FrozenSbm => "frozen-sbm",
            NoiseKind::None => "none",
        }
    }

    pub fn is_frozen(self) -> bool {
        matches!(self, NoiseKind::FrozenOu | NoiseKind::FrozenSbm)
    }

    /// Stationary second moment E∞[ξ²]: 1 for OU, 1/3 for SBM.
    pub fn stationary_second_moment(self) -> Option<f64> {
        match self {
            NoiseKind::Ou | NoiseKind::FrozenOu => Some(1.0),
            NoiseKind::Sbm | NoiseKind::FrozenSbm => Some(1.0 / 3.0),
            NoiseKind::None => None,
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown noise model `{s}`")))
    }
}

/// Noise process selector together with its correlation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub tau: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, tau: f64) -> Result<Self> {
        let model = Self { kind, tau };
        model.validate()?;
        Ok(model)
    }

    pub fn ou(tau: f64) -> Result<Self> {
        Self::new(NoiseKind::Ou, tau)
    }

    pub fn sbm(tau: f64) -> Result<Self> {
        Self::new(NoiseKind::Sbm, tau)
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.kind, NoiseKind::Ou | NoiseKind::Sbm) && !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!(
                "{} noise needs a positive correlation time, got tau = {}",
                self.kind, self.tau
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseState {
    pub xi: f64,
    pub t: f64,
}

impl NoiseState {
    pub fn new(xi: f64) -> Self {
        Self { xi, t: 0.0 }
    }
}

fn check_step(dt: f64, tau: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("time step must be positive, got dt = {dt}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("correlation time must be positive, got tau = {tau}")));
    }
    Ok(())
}

/// Draws a Wiener increment ~ N(0, dt).
pub fn wiener_increment<R: Rng + ?Sized>(dt: f64, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("time step must be positive, got dt = {dt}")));
    }
    let n: f64 = StandardNormal.sample(rng);
    Ok(n * dt.sqrt())
}

/// Exact OU transition for a given standard normal draw `n`.
#[inline]
pub fn ou_transition(xi: f64, dt: f64, tau: f64, n: f64) -> f64 {
    let decay = (-dt / tau).exp();
    xi * decay + (1.0 - decay * decay).sqrt() * n
}

pub fn ou_step<R: Rng + ?Sized>(state: NoiseState, dt: f64, tau: f64, rng: &mut R) -> Result<NoiseState> {
    check_step(dt, tau)?;
    let n: f64 = StandardNormal.sample(rng);
    Ok(NoiseState {
        xi: ou_transition(state.xi, dt, tau, n),
        t: state.t + dt,
    })
}

/// One Euler-Maruyama step of the SBM projection for a given Wiener increment,
/// clamped back onto [-1, 1].
pub fn sbm_transition(xi: f64, dt: f64, tau: f64, dw: f64) -> Result<f64> {
    if !(xi.abs() <= 1.0) {
        return Err(Error::StateCorruption(format!(
            "SBM noise value {xi} lies outside [-1, 1]"
        )));
    }
    let diffusion = ((1.0 - xi * xi) / tau).sqrt();
    Ok((xi - xi * dt / tau + diffusion * dw).clamp(-1.0, 1.0))
}

pub fn sbm_step<R: Rng + ?Sized>(state: NoiseState, dt: f64, tau: f64, rng: &mut R) -> Result<NoiseState> {
    check_step(dt, tau)?;
    let dw = wiener_increment(dt, rng)?;
    Ok(NoiseState {
        xi: sbm_transition(state.xi, dt, tau, dw)?,
        t: state.t + dt,
    })
}

/// Draws ξ from the stationary law of `model` (N(0,1) or U[-1,1]).
pub fn sample_steady_state<R: Rng + ?Sized>(model: NoiseModel, rng: &mut R) -> Result<NoiseState> {
    let xi = match model.kind {
        NoiseKind::Ou | NoiseKind::FrozenOu => StandardNormal.sample(rng),
        NoiseKind::Sbm | NoiseKind::FrozenSbm => Uniform::new_inclusive(-1.0, 1.0)
            .expect("static bounds")
            .sample(rng),
        NoiseKind::None => {
            return Err(Error::NotApplicable(
                "the `none` noise model has no steady state".into(),
            ))
        }
    };
    Ok(NoiseState::new(xi))
}

/// A running noise path: model plus current state.
#[derive(Debug, Clone)]
pub struct NoiseProcess {
    model: NoiseModel,
    state: NoiseState,
}

impl NoiseProcess {
    /// Starts the process from its steady state (ξ ≡ 0 for the `none` model).
    pub fn stationary<R: Rng + ?Sized>(model: NoiseModel, rng: &mut R) -> Result<Self> {
        model.validate()?;
        let state = match model.kind {
            NoiseKind::None => NoiseState::new(0.0),
            _ => sample_steady_state(model, rng)?,
        };
        Ok(Self { model, state })
    }

    /// Starts the process from a sharp initial value instead of the steady state.
    pub fn with_initial(model: NoiseModel, xi0: f64) -> Result<Self> {
        model.validate()?;
        if matches!(model.kind, NoiseKind::Sbm | NoiseKind::FrozenSbm) && !(xi0.abs() <= 1.0) {
            return Err(invalid(format!("SBM initial value {xi0} lies outside [-1, 1]")));
        }
        Ok(Self {
            model,
            state: NoiseState::new(xi0),
        })
    }

    pub fn model(&self) -> NoiseModel {
        self.model
    }

    pub fn state(&self) -> NoiseState {
        self.state
    }

    pub fn xi(&self) -> f64 {
        self.state.xi
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> Result<()> {
        let tau = self.model.tau;
        self.state = match self.model.kind {
            NoiseKind::Ou => ou_step(self.state, dt, tau, rng)?,
            NoiseKind::Sbm => {
                let next = sbm_step(self.state, dt, tau, rng)?;
                assert!(next.xi.abs() <= 1.0, "SBM step left [-1, 1]: {}", next.xi);
                next
            }
            NoiseKind::FrozenOu | NoiseKind::FrozenSbm | NoiseKind::None => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(invalid(format!("time step must be positive, got dt = {dt}")));
                }
                NoiseState {
                    xi: self.state.xi,
                    t: self.state.t + dt,
                }
            }
        };
        Ok(())
    }

    /// Samples `steps + 1` values (including the initial one) spaced by `dt`.
    pub fn path<R: Rng + ?Sized>(&mut self, dt: f64, steps: usize, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(self.xi());
        for _ in 0..steps {
            self.advance(dt, rng)?;
            out.push(self.xi());
        }
        Ok(out)
    }
}

/// Ensemble autocovariance `E[ξ_t ξ_{t+lag}] - E[ξ_t] E[ξ_{t+lag}]` at a lag of
/// `lag_steps` grid points.
///
/// The covariance is estimated across paths at every admissible start index and
/// then averaged over start indices, which assumes the ensemble is stationary.
pub fn autocorrelation(paths: &[Vec<f64>], lag_steps: usize) -> Result<f64> {
    let Some(first) = paths.first() else {
        return Err(invalid("autocorrelation of an empty ensemble"));
    };
    let mut acc = AutocovarianceAccumulator::new(first.len(), &[lag_steps])?;
    for p in paths {
        acc.add(p)?;
    }
    Ok(acc.finish()?[0])
}

/// Streaming form of [`autocorrelation`] for several lags at once, so large
/// ensembles need not be held in memory.
#[derive(Debug, Clone)]
pub struct AutocovarianceAccumulator {
    len: usize,
    lags: Vec<usize>,
    /// Per-index path sums.
    sum: Vec<f64>,
    /// Per-lag, per-start sums of `ξ_t ξ_{t+lag}`.
    cross: Vec<Vec<f64>>,
    n: usize,
}

impl AutocovarianceAccumulator {
    pub fn new(len: usize, lags: &[usize]) -> Result<Self> {
        if let Some(&bad) = lags.iter().find(|&&l| l >= len) {
            return Err(invalid(format!(
                "lag of {bad} steps does not fit in paths of length {len}"
            )));
        }
        Ok(Self {
            len,
            lags: lags.to_vec(),
            sum: vec![0.0; len],
            cross: lags.iter().map(|l| vec![0.0; len - l]).collect(),
            n: 0,
        })
    }

    pub fn add(&mut self, path: &[f64]) -> Result<()> {
        if path.len() != self.len {
            return Err(invalid("noise paths have different lengths"));
        }
        for (s, x) in self.sum.iter_mut().zip(path) {
            *s += x;
        }
        for (lag, cross) in self.lags.iter().zip(self.cross.iter_mut()) {
            for (t, c) in cross.iter_mut().enumerate() {
                *c += path[t] * path[t + lag];
            }
        }
        self.n += 1;
        Ok(())
    }

    /// Autocovariance estimate for each lag, in the order given to [`Self::new`].
    pub fn finish(&self) -> Result<Vec<f64>> {
        if self.n == 0 {
            return Err(invalid("autocorrelation of an empty ensemble"));
        }
        let n = self.n as f64;
        Ok(self
            .lags
            .iter()
            .zip(&self.cross)
            .map(|(lag, cross)| {
                let total: f64 = cross
                    .iter()
                    .enumerate()
                    .map(|(t, c)| c / n - (self.sum[t] / n) * (self.sum[t + lag] / n))
                    .sum();
                total / cross.len() as f64
            })
            .collect())
    }
}

/// Converts a lag in time units into grid steps; it must be a multiple of `dt`.
pub fn lag_steps(lag: f64, dt: f64) -> Result<usize> {
    if !(lag >= 0.0) || !(dt > 0.0) {
        return Err(invalid(format!("need lag >= 0 and dt > 0, got lag = {lag}, dt = {dt}")));
    }
    let steps = (lag / dt).round();
    if (steps * dt - lag).abs() > 1e-9 * lag.max(dt) {
        return Err(invalid(format!("lag {lag} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

/// Same as [`autocorrelation`] with the lag given in time units.
pub fn autocorrelation_at(paths: &[Vec<f64>], lag: f64, dt: f64) -> Result<f64> {
    autocorrelation(paths, lag_steps(lag, dt)?)
}
