//! One remeshing pass over the nodes touched since the previous pass.

use std::collections::BTreeSet;

use super::config::RemeshConfig;
use super::events::{EventKind, EventLog};
use super::junction::{needs_split, split_multiple_junction};
use super::ops::{
    apply_collapse, collapse_is_valid, one_ring, plan_collapse, smooth_l_node, smooth_s_node, split_edge,
    split_pinched_labels, swap_edge, CollapsePlan,
};
use crate::kinetics::{StoredEnergyField, Velocities};
use crate::mesh::{ElemId, Mesh, NodeId, SurfaceId};
use crate::topology::{classify_node, NodeClass};

/// Spacing imbalance above which an L-node is slid along its boundary.
pub const L_SMOOTH_UNEVEN: f64 = 0.3;
/// Single-edge junction-junction boundaries shorter than this fraction of h
/// collapse whatever their motion.
pub const SHORT_LINE_FRACTION: f64 = 0.05;
/// Remeshing rounds per pass.
pub const ROUNDS: usize = 3;

/// State a pass reads and updates.
pub struct PassContext<'a> {
    pub time: f64,
    pub events: &'a mut EventLog,
    /// Next unused surface id, advanced when a grain splits.
    pub next_surface: &'a mut u32,
    /// Velocities of the last motion step, if any.
    pub velocities: Option<&'a Velocities>,
    /// Stored energies and boundary energy used to rank junction splits.
    pub energy: &'a StoredEnergyField,
    pub gamma: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PassReport {
    pub splits: usize,
    pub collapses: usize,
    pub swaps: usize,
    pub smoothed: usize,
    pub junction_splits: usize,
    /// Surfaces that vanished during the pass.
    pub vanished: Vec<SurfaceId>,
    /// `(parent, child)` for every grain split.
    pub grain_splits: Vec<(SurfaceId, SurfaceId)>,
    /// Nodes created by junction decomposition with the node they came from.
    pub junction_nodes: Vec<(NodeId, NodeId)>,
}

impl PassReport {
    pub fn changed(&self) -> bool {
        self.splits + self.collapses + self.swaps + self.junction_splits > 0
    }
}

fn edges_near(mesh: &Mesh, cand: &BTreeSet<NodeId>) -> Vec<(NodeId, NodeId)> {
    let mut out: Vec<(NodeId, NodeId)> = Vec::new();
    for &n in cand {
        if !mesh.has_node(n) {
            continue;
        }
        for m in mesh.neighbors(n) {
            out.push(if n < m { (n, m) } else { (m, n) });
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn elements_near(mesh: &Mesh, cand: &BTreeSet<NodeId>) -> Vec<ElemId> {
    let mut out: Vec<ElemId> =
        cand.iter().filter(|&&n| mesh.has_node(n)).flat_map(|&n| mesh.elements_of(n).iter().copied()).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn edge_exists(mesh: &Mesh, a: NodeId, b: NodeId) -> bool {
    mesh.has_node(a) && mesh.has_node(b) && !mesh.edge_elements(a, b).is_empty()
}

/// Whether a collapse of the junction-junction edge `a-b` is allowed: only
/// when the boundary between them is shrinking or already negligible.
fn junction_edge_may_collapse(mesh: &Mesh, a: NodeId, b: NodeId, cfg: &RemeshConfig, vel: Option<&Velocities>) -> bool {
    let len = mesh.edge_length(a, b);
    if len < SHORT_LINE_FRACTION * cfg.h {
        return true;
    }
    match vel {
        Some(v) => (v.get(b) - v.get(a)).dot(&(mesh.pos(b) - mesh.pos(a))) < 0.0,
        None => false,
    }
}

fn try_collapse(
    mesh: &mut Mesh,
    cfg: &RemeshConfig,
    ctx: &mut PassContext<'_>,
    rep: &mut PassReport,
    plan: CollapsePlan,
) -> Option<NodeId> {
    let floor = cfg.area_floor();
    if !collapse_is_valid(mesh, &plan, floor) {
        return None;
    }
    let res = apply_collapse(mesh, &plan);
    rep.collapses += 1;
    let k = res.survivor;
    if res.non_consecutive {
        ctx.events.push(ctx.time, EventKind::JunctionCreation, vec![k.0]);
    }
    for s in &res.vanished {
        ctx.events.push(ctx.time, EventKind::GrainDisappearance, vec![s.0]);
        rep.vanished.push(*s);
    }
    // a merge between non-bulk nodes can pinch a grain in two
    for (s, child) in split_pinched_labels(mesh, k, ctx.next_surface) {
        ctx.events.push(ctx.time, EventKind::GrainSplit, vec![s.0, child.0]);
        rep.grain_splits.push((s, child));
    }
    Some(k)
}

/// Plan for the collapse of short edge `a-b`; both orders are tried for
/// consecutive L-nodes and the one leaving the better star wins.
fn best_plan(mesh: &Mesh, a: NodeId, b: NodeId, cfg: &RemeshConfig) -> Option<CollapsePlan> {
    let floor = cfg.area_floor();
    let p1 = plan_collapse(mesh, a, b, cfg.mode).ok();
    let p2 = plan_collapse(mesh, b, a, cfg.mode).ok();
    let score = |p: &CollapsePlan| {
        if !collapse_is_valid(mesh, p, floor) {
            return None;
        }
        let q = super::ops::star_min_quality_at(mesh, p.survivor, &p.pos)
            .min(super::ops::star_min_quality_at(mesh, p.removed, &p.pos));
        Some(q)
    };
    match (p1, p2) {
        (Some(x), Some(y)) if x != y => match (score(&x), score(&y)) {
            (Some(sx), Some(sy)) => Some(if sy > sx { y } else { x }),
            (Some(_), None) => Some(x),
            (None, Some(_)) => Some(y),
            (None, None) => None,
        },
        (Some(x), _) => score(&x).map(|_| x),
        (None, Some(y)) => score(&y).map(|_| y),
        (None, None) => None,
    }
}

/// Run up to [`ROUNDS`] rounds of split, collapse, junction decomposition and
/// quality repair. `dirty` restricts the work to those nodes and their 1-ring;
/// `None` processes the whole mesh.
pub fn remesh_pass(
    mesh: &mut Mesh,
    cfg: &RemeshConfig,
    ctx: &mut PassContext<'_>,
    dirty: Option<&[NodeId]>,
) -> PassReport {
    let floor = cfg.area_floor();
    let mut rep = PassReport::default();
    let mut cand: BTreeSet<NodeId> = match dirty {
        None => mesh.node_ids().collect(),
        Some(d) => one_ring(mesh, d.iter().copied()),
    };
    for _ in 0..ROUNDS {
        let before = rep.clone();
        let mut touched: Vec<NodeId> = Vec::new();

        // long edges, longest first
        let mut long: Vec<(f64, NodeId, NodeId)> = edges_near(mesh, &cand)
            .into_iter()
            .map(|(a, b)| (mesh.edge_length(a, b), a, b))
            .filter(|e| e.0 > cfg.max_edge())
            .collect();
        long.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for (_, a, b) in long {
            if !edge_exists(mesh, a, b) || mesh.edge_length(a, b) <= cfg.max_edge() {
                continue;
            }
            if let Ok(m) = split_edge(mesh, a, b, None, floor) {
                rep.splits += 1;
                touched.push(m);
            }
        }

        // short edges, shortest first
        let mut short: Vec<(f64, NodeId, NodeId)> = edges_near(mesh, &cand)
            .into_iter()
            .map(|(a, b)| (mesh.edge_length(a, b), a, b))
            .filter(|e| e.0 < cfg.collapse_radius())
            .collect();
        short.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for (_, a, b) in short {
            if !edge_exists(mesh, a, b) || mesh.edge_length(a, b) >= cfg.collapse_radius() {
                continue;
            }
            let (ca, cb) = match (classify_node(mesh, a), classify_node(mesh, b)) {
                (Ok(x), Ok(y)) => (x, y),
                _ => continue,
            };
            if ca.is_p()
                && cb.is_p()
                && mesh.is_interface_edge(a, b)
                && !junction_edge_may_collapse(mesh, a, b, cfg, ctx.velocities)
            {
                continue;
            }
            let Some(plan) = best_plan(mesh, a, b, cfg) else {
                continue;
            };
            if let Some(k) = try_collapse(mesh, cfg, ctx, &mut rep, plan) {
                touched.push(k);
            }
        }

        // junctions of four or more boundaries
        let mut multi: Vec<NodeId> = one_ring(mesh, cand.iter().copied().chain(touched.iter().copied()))
            .into_iter()
            .filter(|&n| needs_split(mesh, n))
            .collect();
        multi.sort_unstable();
        for n in multi {
            if !mesh.has_node(n) {
                continue;
            }
            let d = cfg.junction_split * cfg.h;
            let created = split_multiple_junction(mesh, n, d, ctx.gamma, ctx.energy, floor);
            for &m in &created {
                ctx.events.push(ctx.time, EventKind::JunctionDecomposition, vec![n.0, m.0]);
                rep.junction_nodes.push((m, n));
                touched.push(m);
            }
            rep.junction_splits += created.len();
            if !created.is_empty() {
                touched.push(n);
            }
        }

        // low-quality elements
        let bad: Vec<ElemId> =
            elements_near(mesh, &cand).into_iter().filter(|&e| mesh.quality(e) < cfg.quality).collect();
        for e in bad {
            if !mesh.has_element(e) || mesh.quality(e) >= cfg.quality {
                continue;
            }
            let nodes = mesh.element(e).nodes;
            let mut longest = (0usize, 0.0);
            for i in 0..3 {
                let l = mesh.edge_length(nodes[i], nodes[(i + 1) % 3]);
                if l > longest.1 {
                    longest = (i, l);
                }
            }
            let (u, v, w) = (nodes[longest.0], nodes[(longest.0 + 1) % 3], nodes[(longest.0 + 2) % 3]);
            if swap_edge(mesh, u, v, floor, true) {
                rep.swaps += 1;
                touched.extend([u, v, w]);
                continue;
            }
            for n in nodes {
                if smooth_s_node(mesh, n, cfg.smoothing, floor, true) {
                    rep.smoothed += 1;
                    touched.push(n);
                }
            }
            if !mesh.has_element(e) || mesh.quality(e) >= cfg.quality {
                continue;
            }
            // flat cap: fold the bulk apex onto the nearer end of its base
            if matches!(classify_node(mesh, w), Ok(NodeClass::S)) && !mesh.tag(w).on_boundary() {
                let target = if mesh.edge_length(w, u) <= mesh.edge_length(w, v) { u } else { v };
                let plan = CollapsePlan { survivor: target, removed: w, pos: mesh.pos(target), non_consecutive: false };
                if let Some(k) = try_collapse(mesh, cfg, ctx, &mut rep, plan) {
                    touched.push(k);
                    continue;
                }
            }
            if let Some(k) = pinch_apex(mesh, cfg, ctx, &mut rep, u, v, w) {
                touched.push(k);
            }
        }

        // relax the bulk and even out boundary spacing
        let ring: Vec<NodeId> =
            one_ring(mesh, cand.iter().copied().chain(touched.iter().copied())).into_iter().collect();
        for n in ring {
            if !mesh.has_node(n) {
                continue;
            }
            if smooth_s_node(mesh, n, cfg.smoothing, floor, true)
                || smooth_l_node(mesh, n, cfg.smoothing, L_SMOOTH_UNEVEN, floor)
            {
                rep.smoothed += 1;
            }
        }

        let changed = rep.splits != before.splits
            || rep.collapses != before.collapses
            || rep.swaps != before.swaps
            || rep.junction_splits != before.junction_splits;
        if !changed {
            break;
        }
        cand = one_ring(mesh, touched);
    }
    rep
}

/// Flat element whose apex `w` sits on its base `u`-`v`: put a node on the
/// base under the apex and merge the two. This is how a thinning grain
/// pinches off when both of its sides are boundaries.
fn pinch_apex(
    mesh: &mut Mesh,
    cfg: &RemeshConfig,
    ctx: &mut PassContext<'_>,
    rep: &mut PassReport,
    u: NodeId,
    v: NodeId,
    w: NodeId,
) -> Option<NodeId> {
    let (pu, pv, pw) = (mesh.pos(u), mesh.pos(v), mesh.pos(w));
    let base = pv - pu;
    let len2 = base.norm_squared();
    if len2 == 0.0 {
        return None;
    }
    let s = ((pw - pu).dot(&base) / len2).clamp(0.1, 0.9);
    let foot = pu + base * s;
    if (pw - foot).norm() >= cfg.collapse_radius() {
        return None;
    }
    let m = split_edge(mesh, u, v, Some(foot), cfg.area_floor()).ok()?;
    rep.splits += 1;
    if !edge_exists(mesh, m, w) {
        return Some(m);
    }
    match best_plan(mesh, m, w, cfg) {
        Some(plan) => try_collapse(mesh, cfg, ctx, rep, plan).or(Some(m)),
        None => Some(m),
    }
}

/// Collapse nodes created by junction decomposition back into their origin
/// when the boundary between them has shrunk below `fraction·h`.
pub fn cleanup_junction_nodes(
    mesh: &mut Mesh,
    cfg: &RemeshConfig,
    ctx: &mut PassContext<'_>,
    pairs: &mut Vec<(NodeId, NodeId)>,
    fraction: f64,
) -> PassReport {
    let mut rep = PassReport::default();
    let mut kept = Vec::new();
    for &(m, n) in pairs.iter() {
        if !edge_exists(mesh, m, n) {
            continue;
        }
        if mesh.edge_length(m, n) >= fraction * cfg.h {
            kept.push((m, n));
            continue;
        }
        if let Some(plan) = best_plan(mesh, m, n, cfg) {
            if try_collapse(mesh, cfg, ctx, &mut rep, plan).is_none() {
                kept.push((m, n));
            }
        } else {
            kept.push((m, n));
        }
    }
    *pairs = kept;
    rep
}
