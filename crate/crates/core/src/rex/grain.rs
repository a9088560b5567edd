use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::kinetics::StoredEnergyField;
use crate::mesh::SurfaceId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrainState {
    /// Dislocation density (1/mm²).
    pub rho: f64,
    /// Area at the end of the previous step (mm²).
    pub prev_area: f64,
    pub recrystallized: bool,
    pub birth_time: f64,
}

impl GrainState {
    pub fn new(rho: f64, area: f64) -> Self {
        GrainState { rho, prev_area: area, recrystallized: false, birth_time: 0.0 }
    }
}

pub type Grains = BTreeMap<SurfaceId, GrainState>;

/// Stored energy E = τ·ρ of every grain.
pub fn energy_field(grains: &Grains, tau: f64) -> StoredEnergyField {
    let mut f = StoredEnergyField::new();
    for (s, g) in grains {
        f.set(*s, tau * g.rho);
    }
    f
}
