//! Analytic and semi-analytic reference curves.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};

/// Sampled reference series with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCurve {
    pub case: String,
    pub params: Vec<(String, f64)>,
    pub t: Vec<f64>,
    pub value: Vec<f64>,
}

impl OracleCurve {
    pub fn new(case: impl Into<String>, params: Vec<(String, f64)>) -> Self {
        OracleCurve { case: case.into(), params, t: Vec::new(), value: Vec::new() }
    }

    pub fn push(&mut self, t: f64, v: f64) {
        debug_assert!(self.t.last().is_none_or(|&l| t > l));
        self.t.push(t);
        self.value.push(v);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn at(&self, t: f64) -> Option<f64> {
        let n = self.t.len();
        if n == 0 || t < self.t[0] || t > self.t[n - 1] {
            return None;
        }
        let i = self.t.partition_point(|&x| x <= t);
        if i == n {
            return Some(self.value[n - 1]);
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let w = (t - t0) / (t1 - t0);
        Some(self.value[i - 1] + w * (self.value[i] - self.value[i - 1]))
    }

    /// CSV with a commented parameter header and `t,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# case={}", self.case)?;
        for (k, v) in &self.params {
            writeln!(w, "# {k}={v:e}")?;
        }
        writeln!(w, "t,value")?;
        for (t, v) in self.t.iter().zip(&self.value) {
            writeln!(w, "{t:e},{v:e}")?;
        }
        Ok(())
    }
}

/// Area of a circular grain under dS/dt = 2(−π + √(πS)[E]) with M = γ = 1,
/// integrated with explicit Euler steps of `dt` until `t_end` or until the
/// area falls to `s_min`.
pub fn circle_surface_ode(r0: f64, e: f64, dt: f64, t_end: f64, s_min: f64) -> OracleCurve {
    let mut curve = OracleCurve::new("circle", vec![("r0".into(), r0), ("E".into(), e), ("dt".into(), dt)]);
    let mut s = PI * r0 * r0;
    let mut t = 0.0;
    curve.push(t, s);
    let steps = (t_end / dt).round() as u64;
    for k in 1..=steps {
        let ds = 2.0 * (-PI + (PI * s).sqrt() * e);
        s = (s + dt * ds).max(0.0);
        t = k as f64 * dt;
        curve.push(t, s);
        if s <= s_min {
            break;
        }
    }
    curve
}

/// Time at which the junction of the triangle test reaches the base.
pub fn triple_junction_contact_time(a: f64, e: f64) -> f64 {
    a / (4.0 * e)
}

/// Height of the junction above the base of the triangle.
pub fn triple_junction_height(t: f64, a: f64, e: f64) -> f64 {
    a / (2.0 * 3f64.sqrt()) - e * 2.0 * t / 3f64.sqrt()
}

/// Area of the growing phase in the triangle test, with straight boundaries
/// (`capillarity`) or in the vanishing surface tension limit.
pub fn triple_junction_surface(t: f64, a: f64, e: f64, capillarity: bool) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::OracleRange(format!("negative time {t}")));
    }
    let y = triple_junction_height(t, a, e);
    if y < -1e-12 * a {
        return Err(Error::OracleRange(format!(
            "t = {t} is past junction contact at {}",
            triple_junction_contact_time(a, e)
        )));
    }
    let s_cap = (2.0 * a / 3f64.sqrt() - y).powi(2) * 3f64.sqrt() / 4.0;
    if capillarity {
        Ok(s_cap)
    } else {
        Ok(s_cap + (PI / 6.0 - 1.0 / 3f64.sqrt()) * (e * t).powi(2))
    }
}

/// Sampled triangle-test curve up to contact.
pub fn triple_junction_curve(a: f64, e: f64, capillarity: bool, dt: f64) -> OracleCurve {
    let mut curve = OracleCurve::new(
        if capillarity { "triple-junction-cap" } else { "triple-junction-vst" },
        vec![("a".into(), a), ("E".into(), e)],
    );
    let end = triple_junction_contact_time(a, e);
    let n = (end / dt).floor() as u64;
    for k in 0..=n {
        let t = k as f64 * dt;
        curve.push(t, triple_junction_surface(t, a, e, capillarity).expect("inside validity range"));
    }
    curve
}

/// Cumulative relative L2 difference sqrt(Σ(S − S_ref)² / Σ S_ref²) after each sample.
pub fn l2_error_series(sim: &[(f64, f64)], reference: impl Fn(f64) -> Option<f64>) -> Vec<(f64, f64)> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut out = Vec::with_capacity(sim.len());
    for &(t, s) in sim {
        let Some(r) = reference(t) else {
            break;
        };
        num += (s - r).powi(2);
        den += r * r;
        out.push((t, if den > 0.0 { (num / den).sqrt() } else { 0.0 }));
    }
    out
}

/// Largest value of the cumulative L2 series.
pub fn max_l2_error(sim: &[(f64, f64)], reference: impl Fn(f64) -> Option<f64>) -> f64 {
    l2_error_series(sim, reference).iter().fold(0.0, |m, &(_, e)| m.max(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_energy_circle_shrinks_linearly() {
        let c = circle_surface_ode(0.3, 0.0, 1e-4, 0.01, 0.0);
        let s0 = PI * 0.09;
        for (t, s) in c.t.iter().zip(&c.value) {
            assert!((s - (s0 - 2.0 * PI * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn metastable_circles_hold_their_area() {
        for (r0, e) in [(0.3, 10.0 / 3.0), (0.025, 40.0)] {
            let c = circle_surface_ode(r0, e, 1e-6, 0.01, 0.0);
            let s0 = PI * r0 * r0;
            assert!(c.value.iter().all(|s| (s - s0).abs() < 1e-12 * s0.max(1.0) + 1e-15));
        }
    }

    #[test]
    fn triangle_area_at_start() {
        let s = triple_junction_surface(0.0, 1.0, 2.0, true).unwrap();
        assert!((s - 0.324760).abs() < 5e-7);
        assert_eq!(s, triple_junction_surface(0.0, 1.0, 2.0, false).unwrap());
    }

    #[test]
    fn triangle_scaling_and_range() {
        for t in [0.0, 0.01, 0.02] {
            let a = triple_junction_surface(t, 1.0, 10.0, true).unwrap();
            let b = triple_junction_surface(5.0 * t, 1.0, 2.0, true).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert!(triple_junction_surface(0.2, 1.0, 2.0, true).is_err());
        assert!(triple_junction_surface(0.125, 1.0, 2.0, true).is_ok());
    }

    #[test]
    fn vst_area_is_smaller() {
        for t in [0.01, 0.05, 0.1] {
            let cap = triple_junction_surface(t, 1.0, 2.0, true).unwrap();
            let vst = triple_junction_surface(t, 1.0, 2.0, false).unwrap();
            assert!(vst < cap);
        }
    }

    #[test]
    fn l2_of_identical_series_is_zero() {
        let sim: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 1.0 + k as f64)).collect();
        assert_eq!(max_l2_error(&sim, |t| Some(1.0 + t)), 0.0);
        let off: Vec<(f64, f64)> = sim.iter().map(|&(t, s)| (t, 1.02 * s)).collect();
        assert!((max_l2_error(&off, |t| Some(1.0 + t)) - 0.02).abs() < 1e-12);
    }
}
