//! Body-fitted triangulation of a [`Layout`] using a constrained Delaunay
//! triangulation with hexagonal interior seeding.

use std::collections::{HashMap, HashSet};

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::layout::Layout;
use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, triangle_area, Vec2};
use crate::mesh::{DomainTag, ElemId, Mesh, NodeId, SurfaceId};
use crate::topology::flood_identify_surface;

/// Uniform bucket grid over segments for distance queries.
struct SegmentGrid {
    cell: f64,
    origin: Vec2,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl SegmentGrid {
    fn new(vertices: &[Vec2], segments: &[[usize; 2]], cell: f64) -> Self {
        let origin = vertices.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |m, v| m.inf(v));
        let mut g = SegmentGrid { cell, origin, buckets: HashMap::new() };
        for (i, s) in segments.iter().enumerate() {
            let (a, b) = (vertices[s[0]], vertices[s[1]]);
            let (lo, hi) = (g.key(&a.inf(&b)), g.key(&a.sup(&b)));
            for x in lo.0 - 1..=hi.0 + 1 {
                for y in lo.1 - 1..=hi.1 + 1 {
                    g.buckets.entry((x, y)).or_default().push(i);
                }
            }
        }
        g
    }

    fn key(&self, p: &Vec2) -> (i64, i64) {
        (((p.x - self.origin.x) / self.cell).floor() as i64, ((p.y - self.origin.y) / self.cell).floor() as i64)
    }

    fn near(&self, p: &Vec2) -> &[usize] {
        self.buckets.get(&self.key(p)).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// Triangulate `layout` with target edge length `h`.
pub fn mesh_layout(layout: &Layout, h: f64) -> Result<Mesh> {
    let domain = &layout.domain;
    let scale = domain.vertices.iter().fold(0.0f64, |m, v| m.max(v.x.abs()).max(v.y.abs()));
    let tol = 1e-9 * scale.max(h);

    let mut points: Vec<Vec2> = layout.vertices.clone();
    let clearance = 0.6 * h;
    let grid = SegmentGrid::new(&layout.vertices, &layout.segments, clearance);
    let (lo, hi) = domain
        .vertices
        .iter()
        .fold((Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY)), |(lo, hi), v| (lo.inf(v), hi.sup(v)));
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi.y - lo.y) / dy).ceil() as usize + 1;
    let cols = ((hi.x - lo.x) / h).ceil() as usize + 2;
    for j in 0..rows {
        let y = lo.y + j as f64 * dy;
        let shift = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..cols {
            let p = Vec2::new(lo.x + i as f64 * h + shift, y);
            if domain.distance_to_boundary(&p) < clearance {
                continue;
            }
            let blocked = grid.near(&p).iter().any(|&s| {
                let [a, b] = layout.segments[s];
                point_segment_distance(&p, &layout.vertices[a], &layout.vertices[b]).0 < clearance
            });
            if !blocked {
                points.push(p);
            }
        }
    }

    let input: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let n_input = input.len();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(input, layout.segments.clone())
        .map_err(|e| Error::InvalidSpec(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != n_input {
        return Err(Error::InvalidSpec("duplicate vertices in the layout".into()));
    }
    cdt.refine(
        RefinementParameters::new()
            .with_angle_limit(AngleLimit::from_deg(20.0))
            .keep_constraint_edges()
            .with_min_required_area(0.05 * h * h)
            .with_max_allowed_area(0.6 * h * h)
            .with_max_additional_vertices(n_input),
    );

    let mut mesh = Mesh::new(domain.clone());
    for v in cdt.vertices() {
        let p = v.position();
        let p = Vec2::new(p.x, p.y);
        mesh.add_node(p, domain.tag_for(&p, tol));
    }
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| NodeId(v.fix().index() as u32));
        let (pa, pb, pc) = (mesh.pos(a), mesh.pos(b), mesh.pos(c));
        let nodes = if triangle_area(&pa, &pb, &pc) > 0.0 { [a, b, c] } else { [a, c, b] };
        mesh.add_element(nodes, SurfaceId(0));
    }

    // label every constraint-bounded region by majority vote of its centroids
    let barrier: HashSet<(NodeId, NodeId)> = layout
        .segments
        .iter()
        .map(|&[a, b]| {
            let (a, b) = (NodeId(a as u32), NodeId(b as u32));
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    let crosses = |a: NodeId, b: NodeId| barrier.contains(&if a < b { (a, b) } else { (b, a) });
    // hull faces outside the domain polygon: slivers left where boundary
    // points are not exactly collinear
    let mut outside = Vec::new();
    for e in mesh.element_ids().collect::<Vec<_>>() {
        let nodes = mesh.element(e).nodes;
        let open_hull_edge = (0..3).any(|k| {
            let (a, b) = (nodes[k], nodes[(k + 1) % 3]);
            mesh.edge_elements(a, b).len() == 1 && !crosses(a, b)
        });
        if open_hull_edge {
            outside.extend(flood_identify_surface(&mesh, e, crosses));
        }
    }
    outside.sort();
    outside.dedup();
    for e in outside {
        mesh.remove_element(e);
    }

    let mut done = vec![false; mesh.element_capacity()];
    let ids: Vec<ElemId> = mesh.element_ids().collect();
    for e in ids {
        if done[e.idx()] {
            continue;
        }
        let region = flood_identify_surface(&mesh, e, crosses);
        let mut votes: HashMap<u32, usize> = HashMap::new();
        for &f in &region {
            *votes.entry((layout.labeler)(&mesh.centroid(f))).or_default() += 1;
        }
        let label = votes.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(l, _)| l).unwrap();
        for f in region {
            done[f.idx()] = true;
            mesh.set_surface(f, SurfaceId(label));
        }
    }

    for n in mesh.node_ids().collect::<Vec<_>>() {
        if mesh.elements_of(n).is_empty() {
            mesh.remove_node(n);
        } else if mesh.tag(n) != DomainTag::Interior && !domain.contains(&mesh.pos(n), tol) {
            return Err(Error::InvalidSpec(format!("node {n} outside the domain")));
        }
    }
    Ok(mesh)
}
