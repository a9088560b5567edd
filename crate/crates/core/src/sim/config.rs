use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{arrhenius_mobility, BoundaryProps};
use crate::microgen::GeneratorSpec;
use crate::remesh::RemeshConfig;
use crate::rex::{interp_params, MaterialParams};

/// One loading segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// Length of the segment (s).
    pub duration: f64,
    /// |ε̇_xx| (1/s); zero for a rest.
    #[serde(default)]
    pub rate: f64,
    /// Temperature (K); the material temperature when absent.
    #[serde(default)]
    pub temperature: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Time step (s).
    pub dt: f64,
    /// Weight of the capillarity term: 1, or 0 for vanishing surface tension.
    #[serde(default = "one")]
    pub capillarity: f64,
    /// Hardening, recovery and nucleation.
    #[serde(default)]
    pub rex: bool,
    /// Limit dt to a quarter of h over the fastest node.
    #[serde(default = "yes")]
    pub dt_guard: bool,
    /// Take the boundary-node curvature term at the end of the step. Explicit
    /// curvature motion needs dt below about h²/(6Mγ).
    #[serde(default = "yes")]
    pub implicit_capillarity: bool,
    pub segments: Vec<Segment>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

impl Schedule {
    pub fn total(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Index of the segment active at time `t` and the time it ends.
    pub fn segment_at(&self, t: f64) -> (usize, f64) {
        let mut end = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            end += s.duration;
            if t < end * (1.0 - 1e-12) {
                return (i, end);
            }
        }
        (self.segments.len() - 1, end)
    }
}

/// Kinetic constants that replace the material-derived ones (used by the
/// dimensionless test cases).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryOverride {
    pub mobility: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    /// Line energy: stored energy is τ·ρ.
    pub tau: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Interval between statistics rows (s).
    pub stats_every: f64,
    /// Interval between VTK snapshots (s); no periodic snapshots when absent.
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    /// Bin width of the grain-size histograms (mm).
    #[serde(default)]
    pub histogram_bin: Option<f64>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    /// Snapshot to continue from; its `.state.json` sidecar must sit next to it.
    #[serde(default)]
    pub restart: Option<PathBuf>,
    #[serde(default)]
    pub material: Option<MaterialParams>,
    #[serde(default)]
    pub boundary: BoundaryOverride,
    pub remesh: RemeshConfig,
    pub schedule: Schedule,
    pub output: OutputConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        Ok(cfg)
    }

    /// Read, parse, resolve relative paths against the file's directory and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        if let (Some(r), Some(dir)) = (&cfg.restart, path.parent()) {
            if r.is_relative() {
                cfg.restart = Some(dir.join(r));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Kinetic constants in force during `seg`.
    pub fn props(&self, seg: &Segment) -> BoundaryProps {
        let b = &self.boundary;
        let m = self.material.as_ref();
        let mobility = b
            .mobility
            .unwrap_or_else(|| m.map_or(1.0, |m| arrhenius_mobility(m.m0, m.q, m.r, seg.temperature.unwrap_or(m.t))));
        let gamma = b.gamma.unwrap_or_else(|| m.map_or(1.0, |m| m.gamma));
        let delta = b.delta.unwrap_or_else(|| match m {
            Some(m) if seg.rate > 0.0 => interp_params(seg.rate, &m.table).delta,
            Some(m) => m.rest_delta,
            None => 1.0,
        });
        BoundaryProps { mobility, gamma, delta }
    }

    pub fn tau(&self) -> f64 {
        self.boundary.tau.unwrap_or_else(|| self.material.as_ref().map_or(1.0, |m| m.tau()))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.generator, &self.restart) {
            (Some(g), None) => g.validate().map_err(|e| Error::Config(e.to_string()))?,
            (None, Some(r)) => {
                if !r.exists() {
                    return Err(Error::Config(format!("restart snapshot {} not found", r.display())));
                }
                let side = crate::io::sidecar_path(r);
                if !side.exists() {
                    return Err(Error::Config(format!("restart state {} not found", side.display())));
                }
            }
            _ => return Err(Error::Config("exactly one of `generator` and `restart` is required".into())),
        }
        if let Some(m) = &self.material {
            m.validate()?;
        }
        if self.schedule.rex && self.material.is_none() {
            return Err(Error::Config("schedule.rex needs a [material] section".into()));
        }
        self.remesh.validate()?;
        let s = &self.schedule;
        if !(s.dt > 0.0) {
            return Err(Error::Config("schedule.dt must be positive".into()));
        }
        if s.segments.is_empty() {
            return Err(Error::Config("schedule needs at least one segment".into()));
        }
        for (i, seg) in s.segments.iter().enumerate() {
            if !(seg.duration > 0.0) {
                return Err(Error::Config(format!("segment {i}: duration must be positive")));
            }
            if seg.duration < s.dt {
                return Err(Error::Config(format!("segment {i}: shorter than dt")));
            }
            if !(seg.rate >= 0.0) {
                return Err(Error::Config(format!("segment {i}: rate must be non-negative")));
            }
        }
        if !(s.capillarity == 0.0 || s.capillarity == 1.0) {
            return Err(Error::Config("schedule.capillarity must be 0 or 1".into()));
        }
        if !(self.output.stats_every > 0.0) {
            return Err(Error::Config("output.stats_every must be positive".into()));
        }
        if self.output.snapshot_every.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::Config("output.snapshot_every must be positive".into()));
        }
        if self.output.histogram_bin.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::Config("output.histogram_bin must be positive".into()));
        }
        for (name, v) in [
            ("mobility", self.boundary.mobility),
            ("gamma", self.boundary.gamma),
            ("delta", self.boundary.delta),
            ("tau", self.boundary.tau),
        ] {
            if v.is_some_and(|x| !(x > 0.0) && !(name == "gamma" && x == 0.0)) {
                return Err(Error::Config(format!("boundary.{name} must be positive")));
            }
        }
        Ok(())
    }
}
