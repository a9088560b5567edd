//! Time integration, output and restart.

pub mod config;
pub mod driver;
pub mod stats;

pub use config::{BoundaryOverride, OutputConfig, RunConfig, Schedule, Segment};
pub use driver::{oracle_track, NucleusRecord, OracleTrack, RunSummary, Simulation, State, StepReport};
pub use stats::{size_histogram, StatsRow, STATS_HEADER};
