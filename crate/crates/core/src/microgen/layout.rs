//! Planar straight-line layouts of grain boundaries, discretized at spacing h.

use crate::geom::{point_segment_distance, Vec2};
use crate::mesh::Domain;

/// Discretized interface network plus a rule telling which grain a point belongs to.
pub struct Layout {
    pub domain: Domain,
    pub vertices: Vec<Vec2>,
    pub segments: Vec<[usize; 2]>,
    pub labeler: Box<dyn Fn(&Vec2) -> u32>,
    /// Initial density of each label.
    pub rho: Vec<f64>,
}

/// Builds a layout from key vertices and edges.
pub struct LayoutBuilder {
    pub domain: Domain,
    pub h: f64,
    pub vertices: Vec<Vec2>,
    pub segments: Vec<[usize; 2]>,
    /// Key vertices: junctions and polygon corners, never duplicated.
    keys: Vec<usize>,
    tol: f64,
}

impl LayoutBuilder {
    pub fn new(domain: Domain, h: f64) -> Self {
        let scale = domain.vertices.iter().fold(0.0f64, |m, v| m.max(v.x.abs()).max(v.y.abs())).max(1e-300);
        let mut b = LayoutBuilder {
            domain,
            h,
            vertices: Vec::new(),
            segments: Vec::new(),
            keys: Vec::new(),
            tol: 1e-10 * scale,
        };
        for i in 0..b.domain.vertices.len() {
            let p = b.domain.vertices[i];
            b.key(p);
        }
        b
    }

    /// Id of the key vertex at `p`, created if needed.
    pub fn key(&mut self, p: Vec2) -> usize {
        for &k in &self.keys {
            if (self.vertices[k] - p).norm() <= self.tol {
                return k;
            }
        }
        let id = self.vertices.len();
        self.vertices.push(p);
        self.keys.push(id);
        id
    }

    /// Straight interface between two key vertices, subdivided to spacing about h.
    pub fn straight(&mut self, a: usize, b: usize) {
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let n = ((pb - pa).norm() / self.h).round().max(1.0) as usize;
        let mut prev = a;
        for k in 1..n {
            let t = k as f64 / n as f64;
            let id = self.vertices.len();
            self.vertices.push(pa + (pb - pa) * t);
            self.segments.push([prev, id]);
            prev = id;
        }
        self.segments.push([prev, b]);
    }

    /// Closed circular interface without junctions.
    pub fn circle(&mut self, center: Vec2, r: f64) {
        let n = (std::f64::consts::TAU * r / self.h).round().max(3.0) as usize;
        let first = self.vertices.len();
        for k in 0..n {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            self.vertices.push(center + Vec2::new(a.cos(), a.sin()) * r);
        }
        for k in 0..n {
            self.segments.push([first + k, first + (k + 1) % n]);
        }
    }

    /// Domain sides, split at every key vertex lying on them.
    pub fn boundary(&mut self) {
        let n = self.domain.n_sides();
        for s in 0..n {
            let (a, b) = self.domain.side(s as u16);
            let mut on: Vec<(f64, usize)> = self
                .keys
                .iter()
                .filter_map(|&k| {
                    let (d, t) = point_segment_distance(&self.vertices[k], &a, &b);
                    (d <= self.tol).then_some((t, k))
                })
                .collect();
            on.sort_by(|x, y| x.0.total_cmp(&y.0));
            for w in on.windows(2) {
                self.straight(w[0].1, w[1].1);
            }
        }
    }

    pub fn finish(self, labeler: Box<dyn Fn(&Vec2) -> u32>, rho: Vec<f64>) -> Layout {
        Layout { domain: self.domain, vertices: self.vertices, segments: self.segments, labeler, rho }
    }
}
