use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Explicit hardening/recovery step: ρ' = K1·Δε + (1 − K2·Δε)·ρ.
pub fn harden(rho: f64, d_eps: f64, k1: f64, k2: f64) -> Result<f64> {
    if k2 * d_eps >= 1.0 {
        return Err(Error::StepTooLarge(k2 * d_eps));
    }
    Ok(k1 * d_eps + (1.0 - k2 * d_eps) * rho)
}

/// Density after a grain sweeps `ds` of dislocation-free material.
/// Shrinking grains (`ds <= 0`) keep their density.
pub fn homogenize_growth(rho: f64, area: f64, ds: f64, rho0: f64) -> f64 {
    if ds <= 0.0 {
        return rho;
    }
    (rho * area + ds * rho0) / (area + ds)
}

/// Static recovery, integrated exactly and floored at `rho0`.
pub fn recover(rho: f64, dt: f64, ks: f64, rho0: f64) -> f64 {
    (rho * (-ks * dt).exp()).max(rho0)
}

/// Inputs of the critical density fixed point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalDensityInput {
    pub b_dim: f64,
    pub gamma: f64,
    pub rate: f64,
    pub k1: f64,
    pub k2: f64,
    pub mobility: f64,
    pub delta: f64,
    pub tau: f64,
    /// Damping factor of the iteration.
    pub convergence: f64,
}

impl CriticalDensityInput {
    /// Numerator b·γ·ε̇·K2/(M·δ·τ²).
    pub fn numerator(&self) -> f64 {
        self.b_dim * self.gamma * self.rate * self.k2 / (self.mobility * self.delta * self.tau * self.tau)
    }

    /// Upper bound for the iterate, just below the saturation density K1/K2.
    pub fn cap(&self) -> f64 {
        0.999 * self.k1 / self.k2
    }

    pub fn map(&self, rho: f64) -> f64 {
        (self.numerator() / -(1.0 - rho * self.k2 / self.k1).ln()).sqrt()
    }
}

pub const CRITICAL_TOLERANCE: f64 = 1e-6;
pub const CRITICAL_MAX_ITER: usize = 500;

/// Damped fixed-point iteration for the critical density. When the fixed
/// point lies above the cap the cap itself is returned.
pub fn critical_density(input: &CriticalDensityInput) -> Result<f64> {
    if !(input.rate > 0.0) {
        return Err(Error::UndefinedRate);
    }
    let cap = input.cap();
    let mut rho = 0.5 * cap;
    for _ in 0..CRITICAL_MAX_ITER {
        let g = input.map(rho);
        if ((g - rho) / rho).abs() < CRITICAL_TOLERANCE {
            return Ok(rho);
        }
        if rho >= cap && g >= cap {
            log::debug!("critical density saturated at {cap:e}");
            return Ok(cap);
        }
        rho = (rho + input.convergence * (g - rho)).min(cap);
    }
    Err(Error::NoConvergence { iterations: CRITICAL_MAX_ITER, last: rho })
}

/// Running integrals of the strain rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrainAccumulators {
    pub int_rate_sq: f64,
    pub int_rate: f64,
    pub rate: f64,
}

impl StrainAccumulators {
    pub fn advance(&mut self, rate: f64, dt: f64) {
        let r = rate.abs();
        self.rate = r;
        self.int_rate_sq += r * r * dt;
        self.int_rate += r * dt;
    }

    /// Time-averaged rate ∫ε̇²dt / ∫ε̇dt.
    pub fn apparent_rate(&self) -> Result<f64> {
        if self.int_rate > 0.0 {
            Ok(self.int_rate_sq / self.int_rate)
        } else {
            Err(Error::UndefinedRate)
        }
    }
}

/// Nucleus surface still owed from previous steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NucleationBudget {
    pub residual: f64,
}

impl NucleationBudget {
    /// Add Kg·Pc·dt and return the surface available for insertion.
    pub fn accrue(&mut self, kg: f64, pc: f64, dt: f64) -> f64 {
        self.residual += kg * pc.max(0.0) * dt;
        self.residual
    }

    /// Number of whole nuclei of area `unit` the budget pays for.
    pub fn whole_nuclei(&self, unit: f64) -> usize {
        if unit <= 0.0 {
            0
        } else {
            (self.residual / unit).floor() as usize
        }
    }

    pub fn spend(&mut self, area: f64) {
        self.residual -= area;
    }
}

/// Minimal viable nucleus radius ω·γ/((ρc − ρ0)·τ).
pub fn nucleus_radius(rho_c: f64, rho0: f64, gamma: f64, tau: f64, omega: f64) -> Result<f64> {
    if rho_c <= rho0 {
        return Err(Error::SubcriticalNucleus { rho_c, rho0 });
    }
    Ok(omega * gamma / ((rho_c - rho0) * tau))
}
