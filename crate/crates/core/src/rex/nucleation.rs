//! Nucleus insertion by circle cutting, and seeded site selection.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grain::{GrainState, Grains};
use super::laws::NucleationBudget;
use crate::error::{Error, Result};
use crate::geom::{segment_circle_params, Vec2};
use crate::mesh::{ElemId, Mesh, NodeId, SurfaceId};
use crate::remesh::events::{EventKind, EventLog};
use crate::remesh::ops::split_edge;
use crate::topology::{classify_node, flood_identify_surface, NodeClass};

/// Nodes closer than this fraction of the local edge length to the circle
/// count as lying on it, so no sliver is cut off next to them.
const SNAP_FRACTION: f64 = 0.15;

#[derive(Clone, Debug, PartialEq)]
pub struct InsertedNucleus {
    pub surface: SurfaceId,
    pub center: NodeId,
    pub center_pos: Vec2,
    pub radius: f64,
    /// Area actually enclosed by the nucleus elements.
    pub area: f64,
    /// Surfaces the nucleus took elements from.
    pub parents: Vec<SurfaceId>,
}

fn reject(center: NodeId, reason: impl Into<String>) -> Error {
    Error::NucleationRejected { node: center, reason: reason.into() }
}

/// Elements of label `s` grouped into edge-connected components, largest first.
pub fn label_components(mesh: &Mesh, s: SurfaceId) -> Vec<Vec<ElemId>> {
    let elems: Vec<ElemId> = mesh.elements().filter(|(_, e)| e.surface == s).map(|(id, _)| id).collect();
    let mut done: BTreeSet<ElemId> = BTreeSet::new();
    let mut comps = Vec::new();
    for e in elems {
        if done.contains(&e) {
            continue;
        }
        let comp = flood_identify_surface(mesh, e, |a, b| mesh.is_interface_edge(a, b));
        done.extend(comp.iter().copied());
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

/// Cut a disc of radius `r` around `center` out of the mesh and give it label
/// `new_label`. The mesh is left untouched when the insertion is rejected.
pub fn insert_nucleus(
    mesh: &mut Mesh,
    center: NodeId,
    r: f64,
    new_label: SurfaceId,
    floor: f64,
) -> Result<InsertedNucleus> {
    if !mesh.has_node(center) {
        return Err(reject(center, "no such node"));
    }
    if mesh.tag(center).on_boundary() {
        return Err(reject(center, "center on the domain boundary"));
    }
    let c = mesh.pos(center);
    if mesh.domain().distance_to_boundary(&c) <= r {
        return Err(reject(center, "circle leaves the domain"));
    }
    let mut work = mesh.clone();
    let dist = |m: &Mesh, n: NodeId| (m.pos(n) - c).norm();

    // nodes of the region the circle can touch
    let mut region: BTreeSet<NodeId> = BTreeSet::new();
    let mut frontier = vec![center];
    region.insert(center);
    while let Some(n) = frontier.pop() {
        for m in work.neighbors(n) {
            if region.contains(&m) {
                continue;
            }
            region.insert(m);
            // keep walking while the node or the edge into it may reach the circle
            if dist(&work, m) < r || dist(&work, n) < r {
                frontier.push(m);
            }
        }
    }

    // snapping tolerance from the local edge length
    let local_h = {
        let nb = work.neighbors(center);
        nb.iter().map(|&m| work.edge_length(center, m)).sum::<f64>() / nb.len().max(1) as f64
    };
    let snap = SNAP_FRACTION * local_h.min(r);
    let mut on_circle: BTreeSet<NodeId> =
        region.iter().copied().filter(|&n| (dist(&work, n) - r).abs() < snap).collect();
    let inside = |m: &Mesh, n: NodeId, on: &BTreeSet<NodeId>| dist(m, n) < r && !on.contains(&n);

    // split every edge that crosses the circle
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for &n in &region {
        for m in work.neighbors(n) {
            if n < m {
                edges.push((n, m));
            }
        }
    }
    let mut queue = edges;
    while let Some((a, b)) = queue.pop() {
        if work.edge_elements(a, b).is_empty() || (on_circle.contains(&a) && on_circle.contains(&b)) {
            continue;
        }
        let (pa, pb) = (work.pos(a), work.pos(b));
        let len = (pb - pa).norm();
        let margin = snap / len;
        let ts = segment_circle_params(&pa, &pb, &c, r, margin, 1.0 - margin);
        let Some(&t) = ts.first() else {
            continue;
        };
        let p = pa + (pb - pa) * t;
        let m = split_edge(&mut work, a, b, Some(p), floor)?;
        on_circle.insert(m);
        region.insert(m);
        // the far half may cross a second time
        if ts.len() > 1 {
            queue.push((m, b));
        }
    }

    // elements inside the polygonal circle, connected to the center
    let in_disc: BTreeSet<ElemId> = region
        .iter()
        .flat_map(|&n| work.elements_of(n).iter().copied())
        .filter(|&e| {
            let el = work.element(e);
            el.nodes.iter().all(|&n| inside(&work, n, &on_circle) || on_circle.contains(&n))
                && (work.centroid(e) - c).norm() < r
        })
        .collect();
    let Some(&seed) = work.elements_of(center).iter().find(|e| in_disc.contains(e)) else {
        return Err(reject(center, "circle encloses no element"));
    };
    let nucleus =
        flood_identify_surface(&work, seed, |a, b| work.edge_elements(a, b).iter().any(|e| !in_disc.contains(e)));
    let nucleus: Vec<ElemId> = nucleus.into_iter().filter(|e| in_disc.contains(e)).collect();
    if nucleus.is_empty() {
        return Err(reject(center, "circle encloses no element"));
    }
    let mut parents: Vec<SurfaceId> = nucleus.iter().map(|&e| work.element(e).surface).collect();
    parents.sort_unstable();
    parents.dedup();
    let mut area = 0.0;
    for &e in &nucleus {
        area += work.signed_area(e);
        work.set_surface(e, new_label);
    }
    *mesh = work;
    Ok(InsertedNucleus { surface: new_label, center, center_pos: c, radius: r, area, parents })
}

/// Total perimeter of the grains with ρ > ρc, counting interior boundaries only.
pub fn critical_perimeter(mesh: &Mesh, grains: &Grains, rho_c: f64) -> f64 {
    let critical = |s: SurfaceId| grains.get(&s).is_some_and(|g| g.rho > rho_c);
    let mut pc = 0.0;
    for (a, b) in mesh.edges() {
        if mesh.is_boundary_edge(a, b) {
            continue;
        }
        let (l, r) = mesh.edge_labels(a, b);
        if l == r {
            continue;
        }
        let n = critical(l) as u32 + critical(r) as u32;
        if n > 0 {
            pc += n as f64 * mesh.edge_length(a, b);
        }
    }
    pc
}

/// Interior boundary nodes touching a grain with ρ ≥ ρc, ascending.
pub fn nucleation_candidates(mesh: &Mesh, grains: &Grains, rho_c: f64) -> Vec<NodeId> {
    mesh.node_ids()
        .filter(|&n| !mesh.tag(n).on_boundary())
        .filter(|&n| matches!(classify_node(mesh, n), Ok(NodeClass::L | NodeClass::P { .. })))
        .filter(|&n| {
            mesh.elements_of(n).iter().any(|&e| grains.get(&mesh.element(e).surface).is_some_and(|g| g.rho >= rho_c))
        })
        .collect()
}

/// Generator for step `step` of a run seeded with `seed`.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

pub struct NucleationContext<'a> {
    pub time: f64,
    pub rho0: f64,
    pub events: &'a mut EventLog,
    pub next_surface: &'a mut u32,
    pub floor: f64,
}

/// Insert as many nuclei of radius `r` as the budget pays for, drawing
/// centers uniformly from the candidate nodes. Rejected candidates are
/// dropped; overlapping a nucleus placed earlier in the same call is a rejection.
pub fn nucleation_step(
    mesh: &mut Mesh,
    grains: &mut Grains,
    budget: &mut NucleationBudget,
    rho_c: f64,
    r: f64,
    rng: &mut ChaCha8Rng,
    ctx: &mut NucleationContext<'_>,
) -> Vec<InsertedNucleus> {
    let unit = PI * r * r;
    let wanted = budget.whole_nuclei(unit);
    let mut out: Vec<InsertedNucleus> = Vec::new();
    if wanted == 0 {
        return out;
    }
    let mut cands = nucleation_candidates(mesh, grains, rho_c);
    while out.len() < wanted && !cands.is_empty() {
        let i = rng.random_range(0..cands.len());
        let center = cands.swap_remove(i);
        if !mesh.has_node(center) {
            continue;
        }
        let c = mesh.pos(center);
        if out.iter().any(|n| (n.center_pos - c).norm() < n.radius + r) {
            continue;
        }
        let label = SurfaceId(*ctx.next_surface);
        match insert_nucleus(mesh, center, r, label, ctx.floor) {
            Ok(nuc) => {
                *ctx.next_surface += 1;
                budget.spend(unit);
                let mut g = GrainState::new(ctx.rho0, nuc.area);
                g.recrystallized = true;
                g.birth_time = ctx.time;
                grains.insert(label, g);
                ctx.events.push(ctx.time, EventKind::Nucleation, vec![label.0, center.0]);
                settle_parents(mesh, grains, &nuc.parents, ctx);
                out.push(nuc);
            }
            Err(e) => log::debug!("nucleation at {center} rejected: {e}"),
        }
    }
    out
}

/// Bookkeeping for grains that lost area to a nucleus: vanished grains are
/// dropped and cut-through grains are split into separate grains.
fn settle_parents(mesh: &mut Mesh, grains: &mut Grains, parents: &[SurfaceId], ctx: &mut NucleationContext<'_>) {
    for &s in parents {
        if mesh.surface_count(s) == 0 {
            grains.remove(&s);
            ctx.events.push(ctx.time, EventKind::GrainDisappearance, vec![s.0]);
            continue;
        }
        let comps = label_components(mesh, s);
        for comp in comps.iter().skip(1) {
            let child = SurfaceId(*ctx.next_surface);
            *ctx.next_surface += 1;
            for &e in comp {
                mesh.set_surface(e, child);
            }
            if let Some(g) = grains.get(&s).copied() {
                grains.insert(child, g);
            }
            ctx.events.push(ctx.time, EventKind::GrainSplit, vec![s.0, child.0]);
        }
    }
}
