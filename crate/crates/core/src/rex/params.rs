use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::arrhenius_mobility;

/// One row of the strain-rate dependent parameter table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    /// |ε̇_xx| in 1/s.
    pub rate: f64,
    pub k1: f64,
    pub k2: f64,
    pub kg: f64,
    pub delta: f64,
}

/// Interpolated row values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub k1: f64,
    pub k2: f64,
    pub kg: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Mobility prefactor M0 (mm^4/(J s)).
    pub m0: f64,
    /// Activation energy (J/mol).
    pub q: f64,
    #[serde(default = "default_gas_constant")]
    pub r: f64,
    /// Temperature (K).
    pub t: f64,
    /// Boundary energy (J/mm^2).
    pub gamma: f64,
    /// Dislocation line energy (J/mm). Derived from `mu` and `burgers` when absent.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub burgers: Option<f64>,
    /// Static recovery rate (1/s).
    pub ks: f64,
    /// Dislocation density of recrystallized material (1/mm^2).
    pub rho0: f64,
    /// Nucleus radius safety factor.
    #[serde(default = "default_omega")]
    pub omega: f64,
    /// Dimension factor of the critical density equation (1 in 2D).
    #[serde(default = "default_b_dim")]
    pub b_dim: f64,
    /// Damping of the critical density iteration.
    #[serde(default = "default_convergence")]
    pub convergence: f64,
    /// Coupling factor used while the material rests.
    #[serde(default = "default_rest_delta")]
    pub rest_delta: f64,
    pub table: Vec<RateRow>,
}

fn default_gas_constant() -> f64 {
    8.314
}
fn default_omega() -> f64 {
    1.5
}
fn default_b_dim() -> f64 {
    1.0
}
fn default_convergence() -> f64 {
    0.1
}
fn default_rest_delta() -> f64 {
    9.18
}

impl MaterialParams {
    /// 304L stainless steel at 1353 K with the two-row rate table.
    pub fn steel_304l() -> Self {
        MaterialParams {
            m0: 1.56e11,
            q: 2.8e5,
            r: 8.314,
            t: 1353.0,
            gamma: 6e-7,
            tau: Some(1.28331e-12),
            mu: None,
            burgers: None,
            ks: 0.0031,
            rho0: 1e4,
            omega: 1.5,
            b_dim: 1.0,
            convergence: 0.1,
            rest_delta: 9.18,
            table: vec![
                RateRow { rate: 0.01, k1: 1.105e9, k2: 9.0, kg: 1.3e-4, delta: 0.937 },
                RateRow { rate: 0.1, k1: 1.55e9, k2: 6.9, kg: 9e-4, delta: 2.245 },
            ],
        }
    }

    pub fn mobility(&self) -> f64 {
        arrhenius_mobility(self.m0, self.q, self.r, self.t)
    }

    /// Line energy τ, or ½·μ·b² when only the shear modulus and Burgers vector are known.
    pub fn tau(&self) -> f64 {
        match (self.tau, self.mu, self.burgers) {
            (Some(t), _, _) => t,
            (None, Some(mu), Some(b)) => 0.5 * mu * b * b,
            _ => f64::NAN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m0", self.m0),
            ("q", self.q),
            ("r", self.r),
            ("t", self.t),
            ("gamma", self.gamma),
            ("tau", self.tau()),
            ("ks", self.ks),
            ("rho0", self.rho0),
            ("omega", self.omega),
            ("b_dim", self.b_dim),
            ("rest_delta", self.rest_delta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("material.{name} must be positive, got {v}")));
            }
        }
        if !(self.convergence > 0.0 && self.convergence <= 1.0) {
            return Err(Error::Config("material.convergence must lie in (0, 1]".into()));
        }
        if self.table.is_empty() {
            return Err(Error::Config("material.table must have at least one row".into()));
        }
        for w in self.table.windows(2) {
            if w[1].rate <= w[0].rate {
                return Err(Error::Config("material.table rates must be strictly increasing".into()));
            }
        }
        for row in &self.table {
            if !(row.k1 > 0.0 && row.k2 > 0.0 && row.kg > 0.0 && row.delta > 0.0) {
                return Err(Error::Config(format!("material.table row at rate {} has a non-positive entry", row.rate)));
            }
        }
        Ok(())
    }
}

/// Linear interpolation of the table at `rate`, clamped to the first and last rows.
pub fn interp_params(rate: f64, table: &[RateRow]) -> RateParams {
    let row = |r: &RateRow| RateParams { k1: r.k1, k2: r.k2, kg: r.kg, delta: r.delta };
    let first = &table[0];
    let last = &table[table.len() - 1];
    if rate <= first.rate {
        return row(first);
    }
    if rate >= last.rate {
        return row(last);
    }
    let i = table.partition_point(|r| r.rate <= rate) - 1;
    let (a, b) = (&table[i], &table[i + 1]);
    let w = (rate - a.rate) / (b.rate - a.rate);
    let lerp = |x: f64, y: f64| x + w * (y - x);
    RateParams { k1: lerp(a.k1, b.k1), k2: lerp(a.k2, b.k2), kg: lerp(a.kg, b.kg), delta: lerp(a.delta, b.delta) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn table_rows_and_clamping() {
        let t = MaterialParams::steel_304l().table;
        let p = interp_params(0.01, &t);
        assert_eq!((p.k1, p.k2, p.kg, p.delta), (1.105e9, 9.0, 1.3e-4, 0.937));
        let p = interp_params(0.5, &t);
        assert_eq!((p.k1, p.k2, p.kg, p.delta), (1.55e9, 6.9, 9e-4, 2.245));
        let p = interp_params(0.0, &t);
        assert_eq!(p.k1, 1.105e9);
    }

    #[test]
    fn midpoint_interpolation() {
        let t = MaterialParams::steel_304l().table;
        let p = interp_params(0.055, &t);
        assert!(close(p.k1, 1.3275e9));
        assert!(close(p.k2, 7.95));
        assert!(close(p.kg, 5.15e-4));
        assert!(close(p.delta, 1.591));
    }

    #[test]
    fn tau_from_shear_modulus() {
        let mut m = MaterialParams::steel_304l();
        m.tau = None;
        m.mu = Some(2.0);
        m.burgers = Some(3.0);
        assert_eq!(m.tau(), 9.0);
        assert!(m.validate().is_ok());
        m.mu = None;
        assert!(m.validate().is_err());
    }
}
