//! Front-tracking simulation of grain-boundary migration on body-fitted
//! triangle meshes, with dislocation-density driven recrystallization.

// `!(x > 0.0)` style checks reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geom;
pub mod io;
pub mod kinetics;
pub mod mesh;
pub mod microgen;
pub mod oracles;
pub mod par;
pub mod remesh;
pub mod rex;
pub mod sim;
pub mod spline;
pub mod topology;

pub use error::{Error, Result};
