//! Dislocation-density evolution, critical density and nucleation.

pub mod grain;
pub mod laws;
pub mod nucleation;
pub mod params;

pub use grain::{energy_field, GrainState, Grains};
pub use laws::{
    critical_density, harden, homogenize_growth, nucleus_radius, recover, CriticalDensityInput, NucleationBudget,
    StrainAccumulators,
};
pub use nucleation::{
    critical_perimeter, insert_nucleus, nucleation_candidates, nucleation_step, step_rng, InsertedNucleus,
    NucleationContext,
};
pub use params::{interp_params, MaterialParams, RateParams, RateRow};
