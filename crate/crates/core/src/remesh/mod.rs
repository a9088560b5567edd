//! Remeshing: local operators, junction decomposition, node motion and the pass driver.

pub mod config;
pub mod events;
pub mod junction;
pub mod motion;
pub mod ops;
pub mod pass;

pub use config::{CollapseMode, RemeshConfig};
pub use events::{Event, EventKind, EventLog};
pub use motion::{advance_nodes, AdvanceReport};
pub use pass::{remesh_pass, PassContext, PassReport};
