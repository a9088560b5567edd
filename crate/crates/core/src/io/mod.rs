//! Snapshot, CSV and restart-state files.

pub mod vtk;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::Velocities;
use crate::mesh::{NodeId, SurfaceId};
use crate::rex::{GrainState, Grains, NucleationBudget, StrainAccumulators};
use crate::topology::surface_areas;

pub use vtk::{read_vtk, write_vtk, Snapshot};

/// Restart data that the VTK snapshot does not carry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSidecar {
    pub time: f64,
    pub step: u64,
    pub next_surface: u32,
    pub node_capacity: usize,
    pub element_capacity: usize,
    pub grains: Vec<(u32, GrainState)>,
    pub strain: StrainAccumulators,
    pub budget: NucleationBudget,
    /// Velocities of the last step, `(node, vx, vy)` for moving nodes only.
    pub velocities: Vec<(u32, f64, f64)>,
    /// Nodes moved by the last step; `None` before the first step.
    pub dirty: Option<Vec<u32>>,
    /// Junction-split nodes awaiting cleanup, `(created, origin)`.
    pub junction_nodes: Vec<(u32, u32)>,
    pub rho_c: Option<f64>,
    pub pc: f64,
}

impl StateSidecar {
    pub fn grains(&self) -> Grains {
        self.grains.iter().map(|(s, g)| (SurfaceId(*s), *g)).collect()
    }

    pub fn velocities(&self, capacity: usize) -> Velocities {
        let mut v = vec![crate::geom::Vec2::zeros(); capacity];
        for &(n, x, y) in &self.velocities {
            if (n as usize) < capacity {
                v[n as usize] = crate::geom::vec2(x, y);
            }
        }
        Velocities { v }
    }

    pub fn dirty(&self) -> Option<Vec<NodeId>> {
        self.dirty.as_ref().map(|d| d.iter().map(|&n| NodeId(n)).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer(f, self).map_err(|e| Error::Io(e.into()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = BufReader::new(File::open(path)?);
        serde_json::from_reader(f).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })
    }
}

/// Path of the sidecar that belongs to snapshot `vtk`.
pub fn sidecar_path(vtk: &Path) -> std::path::PathBuf {
    vtk.with_extension("state.json")
}

/// One row per grain: id, area, equivalent radius, density, flags.
pub fn write_grains_csv<W: Write>(mut w: W, mesh: &crate::mesh::Mesh, grains: &Grains) -> Result<()> {
    writeln!(w, "surface_id,area,eq_radius,rho,recrystallized,birth_time")?;
    let areas = surface_areas(mesh);
    for (s, g) in grains {
        let a = areas.get(s).copied().unwrap_or(0.0);
        writeln!(
            w,
            "{},{:e},{:e},{:e},{},{:e}",
            s.0,
            a,
            (a / std::f64::consts::PI).sqrt(),
            g.rho,
            g.recrystallized as u8,
            g.birth_time
        )?;
    }
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}
