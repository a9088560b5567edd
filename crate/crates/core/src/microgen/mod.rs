//! Initial microstructures: analytic presets and Laguerre-Voronoi tessellations.

pub mod layout;
pub mod mesher;
pub mod voronoi;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{vec2, Vec2};
use crate::mesh::{Domain, Mesh, SurfaceId};
use crate::rex::{GrainState, Grains};
use crate::topology::{self, surface_areas, Topology};
use layout::{Layout, LayoutBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    /// Rectangle width and height (mm). Ignored by the triple-junction preset.
    #[serde(default = "unit_rect")]
    pub domain: [f64; 2],
    /// Target edge length (mm).
    pub h: f64,
    pub preset: Preset,
}

fn unit_rect() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// Circular grain (label 1) in a matrix (label 0).
    Circle {
        r0: f64,
        #[serde(default)]
        center: Option<[f64; 2]>,
        rho_inside: f64,
        rho_outside: f64,
    },
    /// Three grains in an equilateral triangle of height 2a/√3: the upper
    /// grain (label 0) and two lower grains (labels 1 and 2).
    TripleJunction { a: f64, rho_upper: f64, rho_lower: f64 },
    /// Unit-square arrangement of four pinwheel outer grains (labels 0-3), a
    /// square grain (label 4) and a central disc (label 5).
    SixGrain {
        #[serde(default = "six_grain_rho")]
        rho: [f64; 6],
    },
    LaguerreVoronoi {
        n: usize,
        seed: u64,
        /// Seed radii are drawn uniformly from [radius_min, radius_max]; weights are radius².
        #[serde(default)]
        radius_min: f64,
        #[serde(default)]
        radius_max: f64,
        rho: f64,
    },
}

fn six_grain_rho() -> [f64; 6] {
    [1.0, 2.0, 1.0, 2.0, 10.0, 0.0]
}

/// Mesh, topology and initial grain states.
pub struct Generated {
    pub mesh: Mesh,
    pub topology: Topology,
    pub grains: Grains,
}

/// Geometry of the triple-junction preset for edge parameter `a`.
pub struct TripleJunctionGeometry {
    pub side: f64,
    pub height: f64,
    pub junction: Vec2,
}

impl TripleJunctionGeometry {
    pub fn new(a: f64) -> Self {
        let height = 2.0 * a / 3f64.sqrt();
        let side = 4.0 * a / 3.0;
        TripleJunctionGeometry { side, height, junction: vec2(side / 2.0, a / (2.0 * 3f64.sqrt())) }
    }

    pub fn domain(&self) -> Domain {
        Domain::new(vec![vec2(0.0, 0.0), vec2(self.side, 0.0), vec2(self.side / 2.0, self.height)])
    }
}

pub const SIX_GRAIN_SQUARE: (f64, f64) = (0.3, 0.7);
pub const SIX_GRAIN_DISC: f64 = 0.12;

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let [w, hgt] = self.domain;
        if !(self.h > 0.0) {
            return Err(Error::InvalidSpec("h must be positive".into()));
        }
        if !(w > 0.0 && hgt > 0.0) {
            return Err(Error::InvalidSpec("domain dimensions must be positive".into()));
        }
        let min_dim = match &self.preset {
            Preset::TripleJunction { a, .. } => {
                if !(*a > 0.0) {
                    return Err(Error::InvalidSpec("a must be positive".into()));
                }
                a / 3f64.sqrt()
            }
            Preset::SixGrain { .. } => 1.0,
            _ => w.min(hgt),
        };
        if self.h > min_dim / 4.0 {
            return Err(Error::InvalidSpec(format!("h = {} too large for the geometry", self.h)));
        }
        match &self.preset {
            Preset::Circle { r0, center, .. } => {
                if !(*r0 > 0.0 && *r0 < 0.5 * w.min(hgt)) {
                    return Err(Error::InvalidSpec("r0 must be below half the smallest domain dimension".into()));
                }
                let c = center.unwrap_or([w / 2.0, hgt / 2.0]);
                if c[0] - r0 <= 0.0 || c[0] + r0 >= w || c[1] - r0 <= 0.0 || c[1] + r0 >= hgt {
                    return Err(Error::InvalidSpec("circle leaves the domain".into()));
                }
            }
            Preset::LaguerreVoronoi { n, radius_min, radius_max, .. } => {
                if *n == 0 {
                    return Err(Error::InvalidSpec("n must be at least 1".into()));
                }
                if radius_min > radius_max || *radius_min < 0.0 {
                    return Err(Error::InvalidSpec("need 0 <= radius_min <= radius_max".into()));
                }
            }
            Preset::SixGrain { .. } => {
                if self.domain != [1.0, 1.0] {
                    return Err(Error::InvalidSpec("the six-grain preset lives in the unit square".into()));
                }
            }
            Preset::TripleJunction { .. } => {}
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<Layout> {
        self.validate()?;
        let [w, hgt] = self.domain;
        let h = self.h;
        Ok(match &self.preset {
            Preset::Circle { r0, center, rho_inside, rho_outside } => {
                let c = center.map(|c| vec2(c[0], c[1])).unwrap_or(vec2(w / 2.0, hgt / 2.0));
                let r = *r0;
                let mut b = LayoutBuilder::new(Domain::rectangle(w, hgt), h);
                b.boundary();
                b.circle(c, r);
                b.finish(Box::new(move |p| u32::from((p - c).norm() < r)), vec![*rho_outside, *rho_inside])
            }
            Preset::TripleJunction { a, rho_upper, rho_lower } => {
                let g = TripleJunctionGeometry::new(*a);
                let j = g.junction;
                let mut b = LayoutBuilder::new(g.domain(), h);
                let jk = b.key(j);
                let foot_down = b.key(vec2(j.x, 0.0));
                let d30 = vec2(30f64.to_radians().cos(), 0.5);
                let d150 = vec2(-d30.x, 0.5);
                let right = foot_on_side(&g.domain(), 1, &j);
                let left = foot_on_side(&g.domain(), 2, &j);
                let fr = b.key(right);
                let fl = b.key(left);
                b.straight(jk, foot_down);
                b.straight(jk, fr);
                b.straight(jk, fl);
                b.boundary();
                let mid = g.side / 2.0;
                let labeler = move |p: &Vec2| {
                    let q = p - j;
                    if d30.perp(&q) > 0.0 && d150.perp(&q) < 0.0 {
                        0
                    } else if p.x < mid {
                        1
                    } else {
                        2
                    }
                };
                b.finish(Box::new(labeler), vec![*rho_upper, *rho_lower, *rho_lower])
            }
            Preset::SixGrain { rho } => {
                let (lo, hi) = SIX_GRAIN_SQUARE;
                let mut b = LayoutBuilder::new(Domain::rectangle(1.0, 1.0), h);
                let sq = [vec2(lo, lo), vec2(hi, lo), vec2(hi, hi), vec2(lo, hi)].map(|p| b.key(p));
                let arms = [vec2(lo, 0.0), vec2(1.0, lo), vec2(hi, 1.0), vec2(0.0, hi)].map(|p| b.key(p));
                for k in 0..4 {
                    b.straight(sq[k], sq[(k + 1) % 4]);
                    b.straight(sq[k], arms[k]);
                }
                b.boundary();
                let c = vec2(0.5, 0.5);
                b.circle(c, SIX_GRAIN_DISC);
                let labeler = move |p: &Vec2| {
                    if (p - c).norm() < SIX_GRAIN_DISC {
                        5
                    } else if p.x > lo && p.x < hi && p.y > lo && p.y < hi {
                        4
                    } else if p.y < lo && p.x >= lo {
                        0
                    } else if p.x > hi && p.y >= lo {
                        1
                    } else if p.y > hi && p.x <= hi {
                        2
                    } else {
                        3
                    }
                };
                b.finish(Box::new(labeler), rho.to_vec())
            }
            Preset::LaguerreVoronoi { n, seed, radius_min, radius_max, rho } => {
                let domain = Domain::rectangle(w, hgt);
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut seeds = Vec::with_capacity(*n);
                let mut weights = Vec::with_capacity(*n);
                for _ in 0..*n {
                    seeds.push(vec2(rng.random_range(0.0..w), rng.random_range(0.0..hgt)));
                    let r =
                        if radius_max > radius_min { rng.random_range(*radius_min..*radius_max) } else { *radius_min };
                    weights.push(r * r);
                }
                let tol = 1e-10 * w.max(hgt);
                let cells = voronoi::power_cells(&domain.vertices, &seeds, &weights, tol);
                // compact labels over non-empty cells
                let mut label_of_seed = vec![u32::MAX; *n];
                let mut next = 0;
                for (i, c) in cells.iter().enumerate() {
                    if !c.is_empty() {
                        label_of_seed[i] = next;
                        next += 1;
                    }
                }
                let mut b = LayoutBuilder::new(domain, h);
                let mut edges = std::collections::BTreeSet::new();
                for c in cells.iter().filter(|c| !c.is_empty()) {
                    let ids: Vec<usize> = c.iter().map(|p| b.key(*p)).collect();
                    for k in 0..ids.len() {
                        let (a, bb) = (ids[k], ids[(k + 1) % ids.len()]);
                        if a != bb {
                            edges.insert((a.min(bb), a.max(bb)));
                        }
                    }
                }
                for (a, bb) in edges {
                    b.straight(a, bb);
                }
                let labeler = move |p: &Vec2| label_of_seed[voronoi::power_nearest(p, &seeds, &weights)];
                b.finish(Box::new(labeler), vec![*rho; next as usize])
            }
        })
    }
}

fn foot_on_side(domain: &Domain, side: u16, p: &Vec2) -> Vec2 {
    let (a, b) = domain.side(side);
    let d = b - a;
    a + d * ((p - a).dot(&d) / d.norm_squared())
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    let layout = spec.layout()?;
    let mesh = mesher::mesh_layout(&layout, spec.h)?;
    let topology = topology::build(&mesh)?;
    let areas = surface_areas(&mesh);
    let mut grains = Grains::new();
    for (s, area) in areas {
        let rho = layout.rho.get(s.0 as usize).copied().unwrap_or(0.0);
        grains.insert(s, GrainState::new(rho, area));
    }
    if grains.len() != layout.rho.len() {
        return Err(Error::InvalidSpec(format!("expected {} grains, the mesh has {}", layout.rho.len(), grains.len())));
    }
    let report = topology::validate(&mesh, &topology);
    if !report.passed() {
        return Err(Error::InvalidSpec(format!("generated mesh is invalid: {:?}", report.violations)));
    }
    Ok(Generated { mesh, topology, grains })
}

/// Next free surface id after every grain of `grains`.
pub fn next_surface_id(grains: &Grains) -> SurfaceId {
    SurfaceId(grains.keys().next_back().map_or(0, |s| s.0 + 1))
}
