//! Two-state trajectory integrators.
//!
//! The state is `|ψ⟩ = a|0⟩ + b|1⟩` with real amplitudes and `z = a²`. All
//! schemes work with ħ = 1 and H = 0. Colored-noise schemes hold ξ fixed over a
//! step and integrate the resulting ODE with Heun; Stratonovich white-noise
//! schemes use stochastic Heun; Itô schemes use Euler-Maruyama. Normalized
//! schemes rescale the state after every step.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::master::effective_diffusion;
use crate::noise::{wiener_increment, NoiseKind, NoiseModel, NoiseProcess};

/// Largest one-step norm drift tolerated before renormalizing a colored step.
pub const MAX_NORM_DRIFT: f64 = 1e-6;

/// Real amplitude pair `(a, b)` on the pointer states `|0⟩`, `|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub a: f64,
    pub b: f64,
}

impl QubitState {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Normalized state with `|⟨0|ψ⟩|² = z` and non-negative amplitudes.
    pub fn from_population(z: f64) -> Result<Self> {
        check_population(z)?;
        Ok(Self::new(z.sqrt(), (1.0 - z).sqrt()))
    }

    pub const fn pointer_zero() -> Self {
        Self::new(1.0, 0.0)
    }

    pub const fn pointer_one() -> Self {
        Self::new(0.0, 1.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    /// Population of `|0⟩`, normalized by the current norm.
    pub fn z(&self) -> f64 {
        self.a * self.a / self.norm_sq()
    }

    /// `⟨σ₃⟩` for the normalized state.
    pub fn sigma3(&self) -> f64 {
        (self.a * self.a - self.b * self.b) / self.norm_sq()
    }

    /// Normalized off-diagonal element `a·b`.
    pub fn offdiag(&self) -> f64 {
        self.a * self.b / self.norm_sq()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sq().sqrt();
        Self::new(self.a / n, self.b / n)
    }

    /// Amplitude on `|0⟩` after normalization.
    pub fn alpha(&self) -> f64 {
        self.a / self.norm_sq().sqrt()
    }

    /// The state with `|0⟩ ↔ |1⟩` exchanged.
    pub fn relabeled(&self) -> Self {
        Self::new(self.b, self.a)
    }

    fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }
}

impl Add for QubitState {
    type Output = QubitState;

    fn add(self, rhs: QubitState) -> QubitState {
        QubitState::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Mul<f64> for QubitState {
    type Output = QubitState;

    fn mul(self, k: f64) -> QubitState {
        QubitState::new(self.a * k, self.b * k)
    }
}

/// Real symmetric 2×2 operator in the pointer basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2 {
    pub m: [[f64; 2]; 2],
}

impl Operator2 {
    pub fn diagonal(d0: f64, d1: f64) -> Self {
        Self {
            m: [[d0, 0.0], [0.0, d1]],
        }
    }

    pub fn apply(&self, s: &QubitState) -> QubitState {
        QubitState::new(
            self.m[0][0] * s.a + self.m[0][1] * s.b,
            self.m[1][0] * s.a + self.m[1][1] * s.b,
        )
    }

    /// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, s: &QubitState) -> f64 {
        let o = self.apply(s);
        (s.a * o.a + s.b * o.b) / s.norm_sq()
    }
}

/// Couplings of the model (ħ = 1, all rates in inverse time).
///
/// `deff` is the effective white-noise diffusion 𝒟; build it from the colored
/// noise with [`PhysicsParams::with_noise`] or set it directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub j: f64,
    pub g: f64,
    pub gamma: f64,
    pub deff: f64,
}

impl PhysicsParams {
    pub fn new(j: f64, g: f64, gamma: f64) -> Self {
        Self {
            j,
            g,
            gamma,
            deff: 0.0,
        }
    }

    /// Sets 𝒟 = sqrt(2 G² τ E∞[ξ²]) for the given OU or SBM model.
    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        self.deff = effective_diffusion(self.g, noise.tau, noise.kind)?;
        Ok(self)
    }

    pub fn with_deff(mut self, deff: f64) -> Self {
        self.deff = deff;
        self
    }

    /// Rescaled coupling `D = G·sqrt(τ)` (so `D² = G² τ`).
    pub fn d(&self, tau: f64) -> f64 {
        self.g * tau.sqrt()
    }

    pub fn deff_sq(&self) -> f64 {
        self.deff * self.deff
    }
}

fn check_population(z: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z) {
        return Err(invalid(format!("population z = {z} is outside [0, 1]")));
    }
    Ok(())
}

/// Norm-preserving SUV generator `𝒢 = ½(σ₃ - ⟨σ₃⟩)(J⟨σ₃⟩ + Gξ)`.
pub fn suv_generator(state: &QubitState, xi: f64, params: &PhysicsParams) -> Operator2 {
    let s = state.sigma3();
    let c = 0.5 * (params.j * s + params.g * xi);
    Operator2::diagonal((1.0 - s) * c, (-1.0 - s) * c)
}

/// Bare (non norm-preserving) generator `Ĝ = ½σ₃(J⟨σ₃⟩ + Gξ)`.
pub fn bare_generator(state: &QubitState, xi: f64, params: &PhysicsParams) -> Operator2 {
    let c = 0.5 * (params.j * state.sigma3() + params.g * xi);
    Operator2::diagonal(c, -c)
}

/// `⟨𝒢⟩`, the shift SUV adds to the energy. Zero by construction.
pub fn suv_energy_shift(state: &QubitState, xi: f64, params: &PhysicsParams) -> f64 {
    suv_generator(state, xi, params).expectation(state)
}

/// Magnitude of the imaginary energy correction of the SSE, `γ⟨(σ₃ - ⟨σ₃⟩)²⟩/2`.
pub fn sse_energy_correction(state: &QubitState, gamma: f64) -> f64 {
    let s = state.sigma3();
    0.5 * gamma * (1.0 - s * s)
}

/// `(σ₃ - ⟨σ₃⟩)` with ⟨σ₃⟩ taken on the normalized state.
fn centered_sigma3(state: &QubitState) -> (f64, Operator2) {
    let s = state.sigma3();
    (s, Operator2::diagonal(1.0 - s, -1.0 - s))
}

fn heun<F: Fn(&QubitState) -> QubitState>(state: &QubitState, dt: f64, f: F) -> QubitState {
    let k1 = f(state);
    let predictor = *state + k1 * dt;
    let k2 = f(&predictor);
    *state + (k1 + k2) * (0.5 * dt)
}

fn finish_normalized(raw: QubitState, scheme: &str) -> Result<QubitState> {
    let n = raw.norm_sq();
    if !raw.is_finite() || !(n > 0.25 && n < 4.0) {
        return Err(Error::Instability(format!(
            "{scheme} step produced norm² = {n}; reduce dt"
        )));
    }
    Ok(raw.normalized())
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("time step must be positive, got dt = {dt}")));
    }
    Ok(())
}

/// One Heun step of `d|ψ⟩/dt = 𝒢|ψ⟩` with ξ held fixed, then renormalized.
pub fn suv_step(state: &QubitState, xi: f64, dt: f64, params: &PhysicsParams) -> Result<QubitState> {
    check_dt(dt)?;
    let raw = heun(state, dt, |s| suv_generator(s, xi, params).apply(s));
    let drift = (raw.norm_sq() - state.norm_sq()).abs();
    if !raw.is_finite() || drift > MAX_NORM_DRIFT {
        return Err(Error::Instability(format!(
            "SUV step changed the norm by {drift:e} (dt = {dt}, xi = {xi}); reduce dt"
        )));
    }
    Ok(raw.normalized())
}

/// One Heun step of `d|ψ⟩/dt = Ĝ|ψ⟩` without any normalization.
pub fn unnormalized_suv_step(
    state: &QubitState,
    xi: f64,
    dt: f64,
    params: &PhysicsParams,
) -> Result<QubitState> {
    check_dt(dt)?;
    let next = heun(state, dt, |s| bare_generator(s, xi, params).apply(s));
    let n = next.norm_sq();
    if !next.is_finite() || !(n > 1e-250 && n < 1e250) {
        return Err(Error::Instability(format!(
            "unnormalized amplitudes left the representable range (norm² = {n})"
        )));
    }
    Ok(next)
}

/// Itô Euler-Maruyama step of the stochastic Schrödinger equation for a given increment.
pub fn sse_step_with(state: &QubitState, dt: f64, gamma: f64, dw: f64) -> Result<QubitState> {
    check_dt(dt)?;
    if !(gamma >= 0.0) {
        return Err(invalid(format!("SSE rate must be non-negative, got gamma = {gamma}")));
    }
    let (_, c) = centered_sigma3(state);
    let cpsi = c.apply(state);
    let c2psi = c.apply(&cpsi);
    let raw = *state + c2psi * (-0.5 * gamma * dt) + cpsi * (gamma.sqrt() * dw);
    finish_normalized(raw, "SSE")
}

pub fn sse_step<R: Rng + ?Sized>(state: &QubitState, dt: f64, gamma: f64, rng: &mut R) -> Result<QubitState> {
    let dw = wiener_increment(dt, rng)?;
    sse_step_with(state, dt, gamma, dw)
}

fn white_drift(state: &QubitState, params: &PhysicsParams) -> QubitState {
    let (s, c) = centered_sigma3(state);
    c.apply(state) * (0.5 * params.j * s)
}

fn white_diffusion(state: &QubitState, params: &PhysicsParams) -> QubitState {
    let (_, c) = centered_sigma3(state);
    c.apply(state) * (0.5 * params.deff)
}

/// Stochastic Heun step of the homogenized Stratonovich equation
/// `d|ψ⟩ = (J/2)⟨σ₃⟩(σ₃-⟨σ₃⟩)|ψ⟩dt + (𝒟/2)(σ₃-⟨σ₃⟩)|ψ⟩∘dW`.
pub fn white_strat_step_with(state: &QubitState, dt: f64, params: &PhysicsParams, dw: f64) -> Result<QubitState> {
    check_dt(dt)?;
    let a1 = white_drift(state, params);
    let b1 = white_diffusion(state, params);
    let predictor = *state + a1 * dt + b1 * dw;
    let a2 = white_drift(&predictor, params);
    let b2 = white_diffusion(&predictor, params);
    let raw = *state + (a1 + a2) * (0.5 * dt) + (b1 + b2) * (0.5 * dw);
    finish_normalized(raw, "white-noise Stratonovich")
}

pub fn white_strat_step<R: Rng + ?Sized>(
    state: &QubitState,
    dt: f64,
    params: &PhysicsParams,
    rng: &mut R,
) -> Result<QubitState> {
    let dw = wiener_increment(dt, rng)?;
    white_strat_step_with(state, dt, params, dw)
}

/// Itô drift correction `Ĉ_s = (𝒟²/4)(½(σ₃-⟨σ₃⟩)² - [⟨σ₃²⟩ - ⟨σ₃⟩²])`, with ⟨σ₃²⟩ = 1.
pub fn stratonovich_correction(state: &QubitState, deff: f64) -> Operator2 {
    let s = state.sigma3();
    let variance = 1.0 - s * s;
    let k = 0.25 * deff * deff;
    Operator2::diagonal(
        k * (0.5 * (1.0 - s).powi(2) - variance),
        k * (0.5 * (1.0 + s).powi(2) - variance),
    )
}

/// Euler-Maruyama step of the Itô form of the homogenized equation, including `Ĉ_s`.
pub fn white_ito_step_with(state: &QubitState, dt: f64, params: &PhysicsParams, dw: f64) -> Result<QubitState> {
    check_dt(dt)?;
    let drift = white_drift(state, params) + stratonovich_correction(state, params.deff).apply(state);
    let raw = *state + drift * dt + white_diffusion(state, params) * dw;
    finish_normalized(raw, "white-noise Itô")
}

pub fn white_ito_step<R: Rng + ?Sized>(
    state: &QubitState,
    dt: f64,
    params: &PhysicsParams,
    rng: &mut R,
) -> Result<QubitState> {
    let dw = wiener_increment(dt, rng)?;
    white_ito_step_with(state, dt, params, dw)
}

/// Deterministic part of the population dynamics, `J_z = 2J z(1-z)(2z-1)`.
pub fn z_drift(z: f64, j: f64) -> f64 {
    2.0 * j * z * (1.0 - z) * (2.0 * z - 1.0)
}

/// Rate of the colored population equation: `J_z + 𝒢_z ξ/√τ`, where
/// `𝒢_z/√τ = 2(D/√τ) z(1-z) = 2G z(1-z)`.
pub fn z_colored_rate(z: f64, xi: f64, params: &PhysicsParams) -> f64 {
    z_drift(z, params.j) + 2.0 * params.g * z * (1.0 - z) * xi
}

/// Heun step of the colored population equation with ξ held fixed, clamped to [0, 1].
pub fn z_step_colored(z: f64, xi: f64, dt: f64, params: &PhysicsParams) -> Result<f64> {
    check_population(z)?;
    check_dt(dt)?;
    let k1 = z_colored_rate(z, xi, params);
    let predictor = (z + k1 * dt).clamp(0.0, 1.0);
    let k2 = z_colored_rate(predictor, xi, params);
    Ok((z + 0.5 * dt * (k1 + k2)).clamp(0.0, 1.0))
}

/// White-noise diffusion of the population, `sqrt(2E∞[ξ²])·𝒢_z = 2𝒟 z(1-z)`.
pub fn z_white_diffusion(z: f64, deff: f64) -> f64 {
    2.0 * deff * z * (1.0 - z)
}

/// Stochastic Heun step of `dz = J_z dt + 2𝒟 z(1-z) ∘ dW`, clamped to [0, 1].
pub fn z_step_white_with(z: f64, dt: f64, params: &PhysicsParams, dw: f64) -> Result<f64> {
    check_population(z)?;
    check_dt(dt)?;
    let (a1, b1) = (z_drift(z, params.j), z_white_diffusion(z, params.deff));
    let predictor = (z + a1 * dt + b1 * dw).clamp(0.0, 1.0);
    let (a2, b2) = (
        z_drift(predictor, params.j),
        z_white_diffusion(predictor, params.deff),
    );
    Ok((z + 0.5 * (a1 + a2) * dt + 0.5 * (b1 + b2) * dw).clamp(0.0, 1.0))
}

pub fn z_step_white<R: Rng + ?Sized>(z: f64, dt: f64, params: &PhysicsParams, rng: &mut R) -> Result<f64> {
    let dw = wiener_increment(dt, rng)?;
    z_step_white_with(z, dt, params, dw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SuvColored,
    Sse,
    WhiteStrat,
    WhiteIto,
    UnnormalizedSuv,
    ZColored,
    ZWhite,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::SuvColored,
        Scheme::Sse,
        Scheme::WhiteStrat,
        Scheme::WhiteIto,
        Scheme::UnnormalizedSuv,
        Scheme::ZColored,
        Scheme::ZWhite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::SuvColored => "suv-colored",
            Scheme::Sse => "sse",
            Scheme::WhiteStrat => "white-strat",
            Scheme::WhiteIto => "white-ito",
            Scheme::UnnormalizedSuv => "unnormalized-suv",
            Scheme::ZColored => "z-colored",
            Scheme::ZWhite => "z-white",
        }
    }

    /// Whether the scheme is driven by the colored noise process ξ.
    pub fn is_colored(self) -> bool {
        matches!(self, Scheme::SuvColored | Scheme::UnnormalizedSuv | Scheme::ZColored)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// Physics and discretization of a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub params: PhysicsParams,
    pub noise: NoiseModel,
    pub dt: f64,
    pub horizon: f64,
    pub z0: f64,
    pub scheme: Scheme,
    /// Sharp initial noise value; `None` samples the steady state.
    pub xi0: Option<f64>,
}

impl TrajectoryConfig {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Checks ranges and the stability guard `dt·max(|J|, |G|, γ, 𝒟²) < 0.1`.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        self.noise.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon {} must be at least one step of {}",
                self.horizon, self.dt
            )));
        }
        if !(0.0..=1.0).contains(&self.z0) {
            return Err(Error::Config(format!("z0 = {} is outside [0, 1]", self.z0)));
        }
        if !(p.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be non-negative, got {}", p.gamma)));
        }
        if ![p.j, p.g, p.gamma, p.deff].iter().all(|x| x.is_finite()) {
            return Err(Error::Config("couplings must be finite".into()));
        }
        let fastest = p.j.abs().max(p.g.abs()).max(p.gamma).max(p.deff_sq());
        if self.dt * fastest >= 0.1 {
            return Err(Error::Config(format!(
                "unstable time step: dt·max(J, G, gamma, Deff²) = {} must stay below 0.1",
                self.dt * fastest
            )));
        }
        if self.scheme.is_colored()
            && matches!(self.noise.kind, NoiseKind::Ou | NoiseKind::Sbm)
            && self.dt > self.noise.tau / 10.0
        {
            log::warn!(
                "dt = {} is not small against the noise correlation time tau = {}",
                self.dt,
                self.noise.tau
            );
        }
        Ok(())
    }
}

/// Observables of one trajectory sampled on the output grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub z: Vec<f64>,
    pub offdiag: Vec<f64>,
    /// Sum of `(Δα)²` over the steps since the previous output point (0 at t = 0).
    pub qv: Vec<f64>,
    /// Colored noise value at each output point, for colored schemes.
    pub xi: Option<Vec<f64>>,
}

impl TrajectoryRecord {
    pub fn final_z(&self) -> f64 {
        *self.z.last().expect("record holds at least the initial point")
    }
}

/// Step indices (0 included) at which observables are recorded.
pub fn output_steps(steps: usize, decimation: usize) -> Vec<usize> {
    let decimation = decimation.max(1);
    let mut out: Vec<usize> = (0..=steps).step_by(decimation).collect();
    if *out.last().unwrap() != steps {
        out.push(steps);
    }
    out
}

enum Amplitudes {
    Vector(QubitState),
    Population(f64),
}

impl Amplitudes {
    fn alpha(&self) -> f64 {
        match self {
            Amplitudes::Vector(s) => s.alpha(),
            Amplitudes::Population(z) => z.sqrt(),
        }
    }

    fn z(&self) -> f64 {
        match self {
            Amplitudes::Vector(s) => s.z(),
            Amplitudes::Population(z) => *z,
        }
    }

    fn offdiag(&self) -> f64 {
        match self {
            Amplitudes::Vector(s) => s.offdiag(),
            Amplitudes::Population(z) => (z * (1.0 - z)).sqrt(),
        }
    }
}

/// Integrates one trajectory, drawing all randomness from `rng`.
pub fn simulate<R: Rng + ?Sized>(
    cfg: &TrajectoryConfig,
    decimation: usize,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    let steps = cfg.steps();
    let dt = cfg.dt;
    let p = &cfg.params;
    let mut noise = if cfg.scheme.is_colored() {
        Some(match cfg.xi0 {
            Some(xi0) => NoiseProcess::with_initial(cfg.noise, xi0)?,
            None => NoiseProcess::stationary(cfg.noise, rng)?,
        })
    } else {
        None
    };
    let mut amps = match cfg.scheme {
        Scheme::ZColored | Scheme::ZWhite => {
            check_population(cfg.z0)?;
            Amplitudes::Population(cfg.z0)
        }
        _ => Amplitudes::Vector(QubitState::from_population(cfg.z0)?),
    };

    let decimation = decimation.max(1);
    let capacity = steps / decimation + 2;
    let mut rec = TrajectoryRecord {
        z: Vec::with_capacity(capacity),
        offdiag: Vec::with_capacity(capacity),
        qv: Vec::with_capacity(capacity),
        xi: noise.as_ref().map(|_| Vec::with_capacity(capacity)),
    };
    let record = |amps: &Amplitudes, qv: f64, xi: Option<f64>, rec: &mut TrajectoryRecord| {
        rec.z.push(amps.z());
        rec.offdiag.push(amps.offdiag());
        rec.qv.push(qv);
        if let (Some(v), Some(x)) = (rec.xi.as_mut(), xi) {
            v.push(x);
        }
    };
    record(&amps, 0.0, noise.as_ref().map(|n| n.xi()), &mut rec);

    let mut qv = 0.0;
    let mut alpha = amps.alpha();
    for step in 1..=steps {
        let xi = noise.as_ref().map_or(0.0, |n| n.xi());
        amps = match (&amps, cfg.scheme) {
            (Amplitudes::Vector(s), Scheme::SuvColored) => Amplitudes::Vector(suv_step(s, xi, dt, p)?),
            (Amplitudes::Vector(s), Scheme::UnnormalizedSuv) => {
                Amplitudes::Vector(unnormalized_suv_step(s, xi, dt, p)?)
            }
            (Amplitudes::Vector(s), Scheme::Sse) => Amplitudes::Vector(sse_step(s, dt, p.gamma, rng)?),
            (Amplitudes::Vector(s), Scheme::WhiteStrat) => Amplitudes::Vector(white_strat_step(s, dt, p, rng)?),
            (Amplitudes::Vector(s), Scheme::WhiteIto) => Amplitudes::Vector(white_ito_step(s, dt, p, rng)?),
            (Amplitudes::Population(z), Scheme::ZColored) => Amplitudes::Population(z_step_colored(*z, xi, dt, p)?),
            (Amplitudes::Population(z), Scheme::ZWhite) => Amplitudes::Population(z_step_white(*z, dt, p, rng)?),
            _ => unreachable!("amplitude representation is fixed by the scheme"),
        };
        if let Some(n) = noise.as_mut() {
            n.advance(dt, rng)?;
        }
        let next_alpha = amps.alpha();
        qv += (next_alpha - alpha).powi(2);
        alpha = next_alpha;
        if step % decimation == 0 || step == steps {
            record(&amps, qv, noise.as_ref().map(|n| n.xi()), &mut rec);
            qv = 0.0;
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> PhysicsParams {
        PhysicsParams::new(2.0, 1.0, 0.5).with_deff(2f64.sqrt())
    }

    #[test]
    fn generator_annihilates_pointer_states() {
        let p = params();
        for xi in [-3.0, 0.0, 0.7] {
            for s in [QubitState::pointer_zero(), QubitState::pointer_one()] {
                let g = suv_generator(&s, xi, &p).apply(&s);
                assert_eq!((g.a, g.b), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn generator_vanishes_on_equal_superposition_without_noise() {
        let s = QubitState::from_population(0.5).unwrap();
        let g = suv_generator(&s, 0.0, &params()).apply(&s);
        assert!(g.a.abs() < 1e-16 && g.b.abs() < 1e-16);
    }

    #[test]
    fn generator_matches_alpha_rate() {
        // dα/dt = α(1-α²)[Gξ + J(2α²-1)] at z = 0.6, ξ = 0.5, J = 2, G = 1.
        let s = QubitState::from_population(0.6).unwrap();
        let p = PhysicsParams::new(2.0, 1.0, 0.0);
        let da = suv_generator(&s, 0.5, &p).apply(&s).a;
        let oracle = 0.6f64.sqrt() * 0.4 * (0.5 + 2.0 * (2.0 * 0.6 - 1.0));
        assert!((da - oracle).abs() < 1e-14);
        assert!((da - 0.2789).abs() < 1e-4);
        assert!(suv_energy_shift(&s, 0.5, &p).abs() < 1e-15);
    }

    #[test]
    fn suv_step_first_order_increment() {
        let s = QubitState::from_population(0.6).unwrap();
        let p = PhysicsParams::new(2.0, 1.0, 0.0);
        let dt = 1e-3;
        let next = suv_step(&s, 0.5, dt, &p).unwrap();
        let predicted = s.a + 0.278_854_3 * dt;
        assert!((next.a - predicted).abs() < 5.0 * dt * dt, "{} vs {}", next.a, predicted);
    }

    #[test]
    fn suv_step_flags_instability() {
        let s = QubitState::from_population(0.5).unwrap();
        let p = PhysicsParams::new(0.0, 1000.0, 0.0);
        assert!(matches!(suv_step(&s, 1.0, 0.01, &p), Err(Error::Instability(_))));
    }

    #[test]
    fn sse_equal_superposition_without_increment() {
        let s = QubitState::from_population(0.5).unwrap();
        let next = sse_step_with(&s, 0.01, 0.5, 0.0).unwrap();
        assert!((next.a - s.a).abs() < 1e-15 && (next.b - s.b).abs() < 1e-15);
        assert!(matches!(sse_step_with(&s, 0.01, -1.0, 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sse_energy_correction_vanishes_only_at_pointers() {
        assert_eq!(sse_energy_correction(&QubitState::pointer_zero(), 0.5), 0.0);
        let s = QubitState::from_population(0.6).unwrap();
        assert!((sse_energy_correction(&s, 0.5) - 0.25 * (1.0 - 0.04)).abs() < 1e-15);
    }

    #[test]
    fn stratonovich_correction_cases() {
        let c = stratonovich_correction(&QubitState::pointer_zero(), 1.3);
        let v = c.apply(&QubitState::pointer_zero());
        assert_eq!((v.a, v.b), (0.0, 0.0));
        // At ⟨σ₃⟩ = 0: (𝒟²/4)(½·1 - 1) = -𝒟²/8 times identity.
        let half = QubitState::from_population(0.5).unwrap();
        let c = stratonovich_correction(&half, 2.0);
        assert!((c.m[0][0] + 0.5).abs() < 1e-15 && (c.m[1][1] + 0.5).abs() < 1e-15);
        let next = white_ito_step_with(&half, 0.01, &PhysicsParams::new(1.0, 0.0, 0.0).with_deff(2.0), 0.0).unwrap();
        assert!((next.a - half.a).abs() < 1e-15);
    }

    #[test]
    fn population_steps_fix_boundaries() {
        let p = params();
        for z in [0.0, 1.0] {
            assert_eq!(z_step_colored(z, 2.0, 0.01, &p).unwrap(), z);
            assert_eq!(z_step_white_with(z, 0.01, &p, 0.3).unwrap(), z);
        }
        assert_eq!(z_step_colored(0.5, 0.0, 0.01, &p).unwrap(), 0.5);
        assert!(z_step_colored(1.2, 0.0, 0.01, &p).is_err());
        assert!(z_step_white_with(-0.1, 0.01, &p, 0.0).is_err());
    }

    #[test]
    fn unnormalized_norm_constant_when_generator_expectation_vanishes() {
        let s = QubitState::from_population(0.5).unwrap();
        let next = unnormalized_suv_step(&s, 0.0, 0.01, &params()).unwrap();
        assert!((next.norm_sq() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trajectory_grid_and_determinism() {
        let cfg = TrajectoryConfig {
            params: params(),
            noise: NoiseModel::ou(1.0).unwrap(),
            dt: 0.01,
            horizon: 1.0,
            z0: 0.6,
            scheme: Scheme::SuvColored,
            xi0: None,
        };
        cfg.validate().unwrap();
        let a = simulate(&cfg, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = simulate(&cfg, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.z.len(), 11);
        assert!((a.z[0] - 0.6).abs() < 1e-15);
        assert_eq!(output_steps(25, 10), vec![0, 10, 20, 25]);
    }

    #[test]
    fn stability_guard() {
        let mut cfg = TrajectoryConfig {
            params: PhysicsParams::new(2.0, 10.0, 0.0),
            noise: NoiseModel::ou(0.01).unwrap(),
            dt: 0.01,
            horizon: 1.0,
            z0: 0.6,
            scheme: Scheme::SuvColored,
            xi0: None,
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.dt = 0.001;
        assert!(cfg.validate().is_ok());
        cfg.z0 = 1.5;
        assert!(cfg.validate().is_err());
    }
}
