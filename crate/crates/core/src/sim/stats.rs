use std::f64::consts::PI;
use std::io::Write;

use crate::error::Result;
use crate::mesh::Mesh;
use crate::rex::Grains;
use crate::topology::surface_areas;

pub const STATS_HEADER: &str = "t,n_grains,mean_size_surface_weighted,rex_fraction,mean_rho_surface_weighted,Pc";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatsRow {
    pub t: f64,
    pub n_grains: usize,
    /// Surface-weighted mean equivalent-circle radius (mm).
    pub mean_size: f64,
    pub rex_fraction: f64,
    pub mean_rho: f64,
    pub pc: f64,
}

impl StatsRow {
    pub fn compute(t: f64, mesh: &Mesh, grains: &Grains, pc: f64) -> Self {
        let areas = surface_areas(mesh);
        let total: f64 = areas.values().sum();
        let mut size = 0.0;
        let mut rho = 0.0;
        let mut rex = 0.0;
        for (s, &a) in &areas {
            size += a * (a / PI).sqrt();
            if let Some(g) = grains.get(s) {
                rho += a * g.rho;
                if g.recrystallized {
                    rex += a;
                }
            }
        }
        StatsRow {
            t,
            n_grains: areas.len(),
            mean_size: size / total,
            rex_fraction: rex / total,
            mean_rho: rho / total,
            pc,
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{:e},{},{:e},{:e},{:e},{:e}",
            self.t, self.n_grains, self.mean_size, self.rex_fraction, self.mean_rho, self.pc
        )?;
        Ok(())
    }
}

/// Surface-weighted histogram of equivalent radii: `(lower edge, area fraction)` per bin.
pub fn size_histogram(mesh: &Mesh, bin: f64) -> Vec<(f64, f64)> {
    let areas = surface_areas(mesh);
    let total: f64 = areas.values().sum();
    let mut bins: Vec<f64> = Vec::new();
    for &a in areas.values() {
        let k = ((a / PI).sqrt() / bin).floor() as usize;
        if bins.len() <= k {
            bins.resize(k + 1, 0.0);
        }
        bins[k] += a / total;
    }
    bins.into_iter().enumerate().map(|(k, f)| (k as f64 * bin, f)).collect()
}

pub fn write_histogram<W: Write>(mut w: W, hist: &[(f64, f64)], bin: f64) -> Result<()> {
    writeln!(w, "radius_lo,radius_hi,area_fraction")?;
    for &(lo, f) in hist {
        writeln!(w, "{:e},{:e},{:e}", lo, lo + bin, f)?;
    }
    Ok(())
}
