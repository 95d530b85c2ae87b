//! Ensemble-level reference solutions.
//!
//! At the fluctuation-dissipation point `J = 𝒟²` the noise-averaged density
//! matrix obeys the pure-dephasing master equation
//! `∂ρ/∂t = (𝒟²/4)(σ₃ρσ₃ - ρ)`. Elementwise, the diagonal is constant and the
//! off-diagonal obeys `∂ρ₀₁/∂t = -(𝒟²/2)ρ₀₁`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::NoiseKind;
use crate::observables::EnsembleSummary;

/// Real 2×2 density matrix with unit trace (`rho11 = 1 - rho00`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    pub rho00: f64,
    pub rho01: f64,
}

impl DensityMatrix2 {
    pub fn new(rho00: f64, rho01: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho00) {
            return Err(invalid(format!("rho00 = {rho00} is outside [0, 1]")));
        }
        if rho01.abs() > (rho00 * (1.0 - rho00)).sqrt() + 1e-12 {
            return Err(invalid(format!(
                "|rho01| = {} violates positivity for rho00 = {rho00}",
                rho01.abs()
            )));
        }
        Ok(Self { rho00, rho01 })
    }

    /// Projector onto `√z|0⟩ + √(1-z)|1⟩`.
    pub fn pure(z: f64) -> Result<Self> {
        Self::new(z, (z * (1.0 - z)).sqrt())
    }

    pub fn rho11(&self) -> f64 {
        1.0 - self.rho00
    }

    /// Convex combination `w·self + (1-w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Self {
        Self {
            rho00: w * self.rho00 + (1.0 - w) * other.rho00,
            rho01: w * self.rho01 + (1.0 - w) * other.rho01,
        }
    }
}

/// Effective white-noise diffusion `𝒟 = sqrt(2 G² τ E∞[ξ²])`.
pub fn effective_diffusion(g: f64, tau: f64, kind: NoiseKind) -> Result<f64> {
    let second_moment = match kind {
        NoiseKind::Ou | NoiseKind::Sbm => kind.stationary_second_moment().unwrap(),
        _ => {
            return Err(Error::NotApplicable(format!(
                "effective diffusion is defined for OU and SBM noise, not `{kind}`"
            )))
        }
    };
    if !(tau > 0.0) {
        return Err(invalid(format!("correlation time must be positive, got {tau}")));
    }
    Ok((2.0 * g * g * tau * second_moment).sqrt())
}

/// `J - 𝒟²`, the prefactor of every nonlinear term of the averaged dynamics.
pub fn nonlinearity_coefficient(j: f64, deff: f64) -> f64 {
    j - deff * deff
}

/// Off-diagonal decay rate of the dephasing master equation, `𝒟²/2`.
pub fn dephasing_rate(deff: f64) -> f64 {
    0.5 * deff * deff
}

/// Solution of the master equation at time `t` from `rho0`.
pub fn gksl_solution(rho0: &DensityMatrix2, deff: f64, t: f64) -> DensityMatrix2 {
    debug_assert!(t >= 0.0);
    DensityMatrix2 {
        rho00: rho0.rho00,
        rho01: rho0.rho01 * (-dephasing_rate(deff) * t).exp(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GkslResidual {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl GkslResidual {
    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_offdiag(&self) -> f64 {
        self.offdiag.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Monte Carlo minus analytic, pointwise, starting from the summary's t = 0 values.
pub fn gksl_residual(summary: &EnsembleSummary, deff: f64) -> GkslResidual {
    let t0 = summary.times.first().copied().unwrap_or(0.0);
    let rho0 = DensityMatrix2 {
        rho00: summary.mean_z.first().copied().unwrap_or(0.0),
        rho01: summary.mean_offdiag.first().copied().unwrap_or(0.0),
    };
    let mut out = GkslResidual {
        times: summary.times.clone(),
        z: Vec::with_capacity(summary.times.len()),
        offdiag: Vec::with_capacity(summary.times.len()),
    };
    for (i, &t) in summary.times.iter().enumerate() {
        let exact = gksl_solution(&rho0, deff, t - t0);
        out.z.push(summary.mean_z[i] - exact.rho00);
        out.offdiag.push(summary.mean_offdiag[i] - exact.rho01);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Forward-Euler integration of the elementwise master equation
    /// `dρ/dt = (𝒟²/4)(σ₃ρσ₃ - ρ)`, written out on the 2×2 matrix.
    fn integrate_master(rho: [[f64; 2]; 2], deff: f64, t: f64, steps: usize) -> [[f64; 2]; 2] {
        let h = t / steps as f64;
        let k = deff * deff / 4.0;
        let s3 = [1.0, -1.0];
        let mut r = rho;
        for _ in 0..steps {
            let mut next = r;
            for i in 0..2 {
                for j in 0..2 {
                    let sandwiched = s3[i] * r[i][j] * s3[j];
                    next[i][j] = r[i][j] + h * k * (sandwiched - r[i][j]);
                }
            }
            r = next;
        }
        r
    }

    #[test]
    fn dephasing_rate_from_elementwise_ode() {
        let rho01 = (0.6f64 * 0.4).sqrt();
        let num = integrate_master([[0.6, rho01], [rho01, 0.4]], 2f64.sqrt(), 1.0, 200_000);
        let exact = gksl_solution(&DensityMatrix2::pure(0.6).unwrap(), 2f64.sqrt(), 1.0);
        assert!((num[0][0] - 0.6).abs() < 1e-12);
        assert!((num[0][1] - exact.rho01).abs() < 1e-5);
        assert!((exact.rho01 - 0.1802).abs() < 1e-4);
        assert!((dephasing_rate(2f64.sqrt()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn effective_diffusion_values() {
        let ou = effective_diffusion(10.0, 0.01, NoiseKind::Ou).unwrap();
        assert!((ou * ou - 2.0).abs() < 1e-12);
        let sbm = effective_diffusion(10.0, 0.01, NoiseKind::Sbm).unwrap();
        assert!((sbm * sbm - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(effective_diffusion(0.0, 0.5, NoiseKind::Ou).unwrap(), 0.0);
        assert!(matches!(
            effective_diffusion(1.0, 1.0, NoiseKind::FrozenSbm),
            Err(Error::NotApplicable(_))
        ));
        assert!(effective_diffusion(1.0, 1.0, NoiseKind::None).is_err());
    }

    #[test]
    fn nonlinearity_values() {
        let ou = effective_diffusion(10.0, 0.01, NoiseKind::Ou).unwrap();
        assert!(nonlinearity_coefficient(2.0, ou).abs() < 1e-12);
        assert_eq!(nonlinearity_coefficient(0.0, 0.0), 0.0);
        let sbm = effective_diffusion(10.0, 0.01, NoiseKind::Sbm).unwrap();
        assert!((nonlinearity_coefficient(2.0, sbm) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix2::new(1.2, 0.0).is_err());
        assert!(DensityMatrix2::new(0.5, 0.6).is_err());
        assert!(DensityMatrix2::new(0.5, 0.5).is_ok());
        let rho = DensityMatrix2::pure(0.6).unwrap();
        assert_eq!(gksl_solution(&rho, 1.3, 0.0), rho);
    }

    proptest! {
        #[test]
        fn semigroup(z in 0.0f64..1.0, deff in 0.0f64..3.0, t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
            let rho = DensityMatrix2::pure(z).unwrap();
            let two_step = gksl_solution(&gksl_solution(&rho, deff, t1), deff, t2);
            let one_step = gksl_solution(&rho, deff, t1 + t2);
            prop_assert_eq!(two_step.rho00, one_step.rho00);
            prop_assert!((two_step.rho01 - one_step.rho01).abs() <= 1e-12);
        }

        #[test]
        fn trace_and_positivity(z in 0.0f64..1.0, deff in 0.0f64..3.0, t1 in 0.0f64..5.0, dt in 0.0f64..5.0) {
            let rho = DensityMatrix2::pure(z).unwrap();
            let a = gksl_solution(&rho, deff, t1);
            let b = gksl_solution(&rho, deff, t1 + dt);
            prop_assert_eq!(a.rho00, rho.rho00);
            prop_assert!(b.rho01.abs() <= a.rho01.abs());
        }

        #[test]
        fn linear_in_rho(z1 in 0.0f64..1.0, z2 in 0.0f64..1.0, w in 0.0f64..1.0, deff in 0.0f64..3.0, t in 0.0f64..5.0) {
            let (r1, r2) = (DensityMatrix2::pure(z1).unwrap(), DensityMatrix2::pure(z2).unwrap());
            let evolved_mix = gksl_solution(&r1.mix(&r2, w), deff, t);
            let mixed = gksl_solution(&r1, deff, t).mix(&gksl_solution(&r2, deff, t), w);
            prop_assert!((evolved_mix.rho00 - mixed.rho00).abs() < 1e-14);
            prop_assert!((evolved_mix.rho01 - mixed.rho01).abs() < 1e-14);
        }
    }
}
