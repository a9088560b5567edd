use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which collapse rules apply between non-bulk nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseMode {
    /// Only bulk nodes and consecutive nodes of one boundary may merge.
    GgStrict,
    /// Non-consecutive nodes may also merge, creating a junction at their barycenter.
    #[default]
    SeGeneral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemeshConfig {
    /// Target edge length (mm).
    pub h: f64,
    #[serde(default = "default_min_factor")]
    pub min_factor: f64,
    #[serde(default = "default_max_factor")]
    pub max_factor: f64,
    #[serde(default = "default_quality")]
    pub quality: f64,
    /// Collapse radius (mm); defaults to the minimum edge length.
    #[serde(default)]
    pub collapse_radius: Option<f64>,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    /// Length of the boundary created by a junction split, as a fraction of h.
    #[serde(default = "default_junction_split")]
    pub junction_split: f64,
    #[serde(default)]
    pub mode: CollapseMode,
}

fn default_min_factor() -> f64 {
    0.5
}
fn default_max_factor() -> f64 {
    1.41
}
fn default_quality() -> f64 {
    0.2
}
fn default_smoothing() -> f64 {
    0.6
}
fn default_junction_split() -> f64 {
    0.2
}

impl RemeshConfig {
    pub fn new(h: f64) -> Self {
        RemeshConfig {
            h,
            min_factor: default_min_factor(),
            max_factor: default_max_factor(),
            quality: default_quality(),
            collapse_radius: None,
            smoothing: default_smoothing(),
            junction_split: default_junction_split(),
            mode: CollapseMode::default(),
        }
    }

    pub fn with_mode(mut self, mode: CollapseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn min_edge(&self) -> f64 {
        self.min_factor * self.h
    }

    pub fn max_edge(&self) -> f64 {
        self.max_factor * self.h
    }

    pub fn collapse_radius(&self) -> f64 {
        self.collapse_radius.unwrap_or_else(|| self.min_edge())
    }

    /// Smallest element area any operator may leave behind.
    pub fn area_floor(&self) -> f64 {
        1e-10 * self.h * self.h
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::Config("remesh.h must be positive".into()));
        }
        if !(0.0 < self.min_factor && self.min_factor < 1.0 && self.max_factor > 1.0) {
            return Err(Error::Config("remesh factors need 0 < min_factor < 1 < max_factor".into()));
        }
        if !(self.quality > 0.0 && self.quality <= 1.0) {
            return Err(Error::Config("remesh.quality must lie in (0, 1]".into()));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::Config("remesh.smoothing must lie in (0, 1]".into()));
        }
        if !(self.junction_split > 0.0 && self.junction_split < 1.0) {
            return Err(Error::Config("remesh.junction_split must lie in (0, 1)".into()));
        }
        if let Some(r) = self.collapse_radius {
            if !(r > 0.0) {
                return Err(Error::Config("remesh.collapse_radius must be positive".into()));
            }
        }
        Ok(())
    }
}
