//! Local mesh operators: edge split, edge swap, node collapse and smoothing.

use std::collections::{BTreeSet, HashSet, VecDeque};

use smallvec::SmallVec;

use super::config::CollapseMode;
use crate::error::{Error, Result};
use crate::geom::{triangle_area, triangle_quality, Vec2};
use crate::mesh::{DomainTag, ElemId, Mesh, NodeId, SurfaceId};
use crate::spline::SplineCurve;
use crate::topology::{classify_node, interface_neighbors, NodeClass};

fn reject(mesh: &Mesh, a: NodeId, reason: &str) -> Error {
    let elem = mesh.elements_of(a).first().copied().unwrap_or(ElemId(u32::MAX));
    Error::Rejected { elem, reason: reason.to_string() }
}

/// The element's node order rotated so that the directed edge `u -> v` comes first.
fn oriented(mesh: &Mesh, e: ElemId, a: NodeId, b: NodeId) -> (NodeId, NodeId, NodeId) {
    let el = mesh.element(e);
    if el.has_directed_edge(a, b) {
        (a, b, el.opposite(a, b).unwrap())
    } else {
        (b, a, el.opposite(a, b).unwrap())
    }
}

/// The side shared by two boundary nodes.
pub fn common_side(mesh: &Mesh, a: NodeId, b: NodeId) -> Option<u16> {
    let n = mesh.domain().n_sides();
    (0..n as u16).find(|&s| mesh.tag(a).touches_side(s, n) && mesh.tag(b).touches_side(s, n))
}

/// Other interface neighbor of `n` when `n` is an L-node reached from `from`.
pub fn line_continuation(mesh: &Mesh, n: NodeId, from: NodeId) -> Option<NodeId> {
    if mesh.tag(n).is_corner() {
        return None;
    }
    let nb = interface_neighbors(mesh, n);
    if nb.len() != 2 || !nb.contains(&from) {
        return None;
    }
    Some(if nb[0] == from { nb[1] } else { nb[0] })
}

/// Interpolating point for splitting the interface edge `a-b`.
fn interface_midpoint(mesh: &Mesh, a: NodeId, b: NodeId) -> Option<Vec2> {
    let (pa, pb) = (mesh.pos(a), mesh.pos(b));
    let p = line_continuation(mesh, a, b).map(|n| mesh.pos(n));
    let q = line_continuation(mesh, b, a).map(|n| mesh.pos(n));
    match (p, q) {
        (Some(p), Some(q)) => Some((pa + pb) * (9.0 / 16.0) - (p + q) * (1.0 / 16.0)),
        (Some(p), None) => Some(p * -0.125 + pa * 0.75 + pb * 0.375),
        (None, Some(q)) => Some(pa * 0.375 + pb * 0.75 - q * 0.125),
        (None, None) => None,
    }
}

fn split_is_valid(mesh: &Mesh, a: NodeId, b: NodeId, elems: &[ElemId], m: &Vec2, floor: f64) -> bool {
    elems.iter().all(|&e| {
        let (u, v, w) = oriented(mesh, e, a, b);
        let (pu, pv, pw) = (mesh.pos(u), mesh.pos(v), mesh.pos(w));
        triangle_area(&pu, m, &pw) > floor && triangle_area(m, &pv, &pw) > floor
    })
}

/// Insert a node on edge `a-b`, at `at` when given, otherwise at a point
/// interpolating the interface (or the midpoint for bulk and domain edges).
pub fn split_edge(mesh: &mut Mesh, a: NodeId, b: NodeId, at: Option<Vec2>, floor: f64) -> Result<NodeId> {
    let elems: SmallVec<[ElemId; 2]> = mesh.edge_elements(a, b).into_iter().collect();
    if elems.is_empty() {
        return Err(Error::MalformedMesh(format!("{a}-{b} is not an edge")));
    }
    let boundary = elems.len() == 1;
    let tag = if boundary {
        match common_side(mesh, a, b) {
            Some(s) => DomainTag::Side(s),
            None => return Err(reject(mesh, a, "boundary edge off the domain sides")),
        }
    } else {
        DomainTag::Interior
    };
    let mid = (mesh.pos(a) + mesh.pos(b)) * 0.5;
    let mut candidates: SmallVec<[Vec2; 2]> = SmallVec::new();
    match at {
        Some(p) => candidates.push(p),
        None => {
            if !boundary && mesh.is_interface_edge(a, b) {
                if let Some(p) = interface_midpoint(mesh, a, b) {
                    candidates.push(p);
                }
            }
            candidates.push(mid);
        }
    }
    for m in candidates {
        if !split_is_valid(mesh, a, b, &elems, &m, floor) {
            continue;
        }
        let id = mesh.add_node(m, tag);
        for &e in &elems {
            let (u, v, w) = oriented(mesh, e, a, b);
            let label = mesh.element(e).surface;
            mesh.set_element_nodes(e, [u, id, w]);
            mesh.add_element([id, v, w], label);
        }
        return Ok(id);
    }
    Err(Error::Rejected { elem: elems[0], reason: "split would create a degenerate element".into() })
}

/// Flip edge `a-b` inside one grain. Only succeeds when both new elements are
/// valid and, if `improve` is set, the smaller quality of the pair increases.
pub fn swap_edge(mesh: &mut Mesh, a: NodeId, b: NodeId, floor: f64, improve: bool) -> bool {
    let elems = mesh.edge_elements(a, b);
    if elems.len() != 2 {
        return false;
    }
    let (e1, e2) = (elems[0], elems[1]);
    if mesh.element(e1).surface != mesh.element(e2).surface {
        return false;
    }
    let (u, v, c) = oriented(mesh, e1, a, b);
    let d = if mesh.element(e1).has_directed_edge(u, v) {
        mesh.element(e2).opposite(a, b).unwrap()
    } else {
        return false;
    };
    if !mesh.element(e2).has_directed_edge(v, u) {
        return false;
    }
    if mesh.neighbors(c).contains(&d) {
        return false;
    }
    let (pu, pv, pc, pd) = (mesh.pos(u), mesh.pos(v), mesh.pos(c), mesh.pos(d));
    if triangle_area(&pu, &pd, &pc) <= floor || triangle_area(&pd, &pv, &pc) <= floor {
        return false;
    }
    if improve {
        let before = triangle_quality(&pu, &pv, &pc).min(triangle_quality(&pv, &pu, &pd));
        let after = triangle_quality(&pu, &pd, &pc).min(triangle_quality(&pd, &pv, &pc));
        if after <= before {
            return false;
        }
    }
    mesh.set_element_nodes(e1, [u, d, c]);
    mesh.set_element_nodes(e2, [d, v, c]);
    true
}

/// Decided merge of `removed` into `survivor` at `pos`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapsePlan {
    pub survivor: NodeId,
    pub removed: NodeId,
    pub pos: Vec2,
    /// Whether the two nodes lay on different boundaries (merge creates a junction).
    pub non_consecutive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollapseResult {
    pub survivor: NodeId,
    pub removed: NodeId,
    /// Labels whose last element disappeared.
    pub vanished: Vec<SurfaceId>,
    /// Labels that lost elements and still exist.
    pub touched: Vec<SurfaceId>,
    pub non_consecutive: bool,
}

fn rank(c: NodeClass) -> u8 {
    match c {
        NodeClass::S => 0,
        NodeClass::L => 1,
        NodeClass::P { .. } => 2,
    }
}

/// Decide which node survives the collapse of edge `source-target` and where.
/// `target` is preferred as survivor when the rules do not distinguish them.
pub fn plan_collapse(mesh: &Mesh, source: NodeId, target: NodeId, mode: CollapseMode) -> Result<CollapsePlan> {
    let elems = mesh.edge_elements(source, target);
    if elems.is_empty() {
        return Err(reject(mesh, source, "nodes are not connected"));
    }
    let (ts, tt) = (mesh.tag(source), mesh.tag(target));
    let boundary_edge = elems.len() == 1;
    if ts.on_boundary() && tt.on_boundary() && !boundary_edge {
        return Err(reject(mesh, source, "chord between two boundary nodes"));
    }
    if ts.is_corner() && tt.is_corner() {
        return Err(reject(mesh, source, "both nodes are domain corners"));
    }
    let cs = classify_node(mesh, source)?;
    let ct = classify_node(mesh, target)?;
    let (ps, pt) = (mesh.pos(source), mesh.pos(target));
    let consecutive = mesh.is_interface_edge(source, target);

    let (mut survivor, mut pos, non_consecutive) = match (cs, ct) {
        (NodeClass::S, NodeClass::S) => (target, (ps + pt) * 0.5, false),
        (NodeClass::S, _) => (target, pt, false),
        (_, NodeClass::S) => (source, ps, false),
        _ if consecutive => match (rank(cs), rank(ct)) {
            (1, 1) => (target, pt, false),
            (2, 1) => (source, ps, false),
            (1, 2) => (target, pt, false),
            _ => (target, (ps + pt) * 0.5, false),
        },
        _ => match mode {
            CollapseMode::GgStrict => return Err(reject(mesh, source, "non-consecutive boundary nodes")),
            CollapseMode::SeGeneral => (target, (ps + pt) * 0.5, true),
        },
    };

    // the domain outranks the classification
    if ts.is_corner() {
        survivor = source;
        pos = ps;
    } else if tt.is_corner() {
        survivor = target;
        pos = pt;
    } else if ts.on_boundary() && !tt.on_boundary() {
        survivor = source;
        pos = ps;
    } else if tt.on_boundary() && !ts.on_boundary() {
        survivor = target;
        pos = pt;
    }
    let removed = if survivor == source { target } else { source };
    Ok(CollapsePlan { survivor, removed, pos, non_consecutive })
}

/// Check the link condition and the geometry of a planned collapse.
pub fn collapse_is_valid(mesh: &Mesh, plan: &CollapsePlan, floor: f64) -> bool {
    let (k, r) = (plan.survivor, plan.removed);
    let shared = mesh.edge_elements(k, r);
    if shared.is_empty() {
        return false;
    }
    let opposite: BTreeSet<NodeId> = shared.iter().map(|&e| mesh.element(e).opposite(k, r).unwrap()).collect();
    let nk = mesh.neighbors(k);
    let nr = mesh.neighbors(r);
    let common: BTreeSet<NodeId> = nk.iter().filter(|n| nr.contains(n)).copied().collect();
    if common != opposite {
        return false;
    }
    // an interior node may not vanish into a boundary node that would leave a hole
    if mesh.tag(r).on_boundary() && !mesh.tag(k).on_boundary() {
        return false;
    }
    for (node, others) in [(r, k), (k, r)] {
        for &e in mesh.elements_of(node) {
            let el = mesh.element(e);
            if el.contains(others) {
                continue;
            }
            let p: Vec<Vec2> = el.nodes.iter().map(|&n| if n == node { plan.pos } else { mesh.pos(n) }).collect();
            if triangle_area(&p[0], &p[1], &p[2]) <= floor {
                return false;
            }
        }
    }
    true
}

/// Carry out a validated plan.
pub fn apply_collapse(mesh: &mut Mesh, plan: &CollapsePlan) -> CollapseResult {
    let (k, r) = (plan.survivor, plan.removed);
    let shared = mesh.edge_elements(k, r);
    let mut labels: Vec<SurfaceId> = Vec::new();
    for e in shared {
        labels.push(mesh.remove_element(e).surface);
    }
    let rest: Vec<ElemId> = mesh.elements_of(r).to_vec();
    for e in rest {
        let mut nodes = mesh.element(e).nodes;
        for n in nodes.iter_mut() {
            if *n == r {
                *n = k;
            }
        }
        mesh.set_element_nodes(e, nodes);
    }
    mesh.set_pos(k, plan.pos);
    mesh.remove_node(r);
    labels.sort_unstable();
    labels.dedup();
    let (vanished, touched): (Vec<_>, Vec<_>) = labels.into_iter().partition(|&s| mesh.surface_count(s) == 0);
    CollapseResult { survivor: k, removed: r, vanished, touched, non_consecutive: plan.non_consecutive }
}

/// Plan, validate and apply the collapse of edge `source-target`.
pub fn collapse_edge(
    mesh: &mut Mesh,
    source: NodeId,
    target: NodeId,
    mode: CollapseMode,
    floor: f64,
) -> Result<CollapseResult> {
    let plan = plan_collapse(mesh, source, target, mode)?;
    if !collapse_is_valid(mesh, &plan, floor) {
        return Err(reject(mesh, source, "collapse would break the mesh"));
    }
    Ok(apply_collapse(mesh, &plan))
}

/// Relabel every piece of a label that became disconnected at `n`, keeping
/// the largest piece. Returns `(parent, child)` per new label, with child ids
/// taken from `next_surface`.
pub fn split_pinched_labels(mesh: &mut Mesh, n: NodeId, next_surface: &mut u32) -> Vec<(SurfaceId, SurfaceId)> {
    let labels: BTreeSet<SurfaceId> = mesh.elements_of(n).iter().map(|&e| mesh.element(e).surface).collect();
    let mut out = Vec::new();
    for s in labels {
        let comps = label_components_near(mesh, n, s);
        if comps.len() < 2 {
            continue;
        }
        let largest = (0..comps.len()).max_by_key(|&i| (comps[i].len(), usize::MAX - i)).unwrap();
        for (i, comp) in comps.iter().enumerate() {
            if i == largest {
                continue;
            }
            let child = SurfaceId(*next_surface);
            *next_surface += 1;
            for &e in comp {
                mesh.set_surface(e, child);
            }
            out.push((s, child));
        }
    }
    out
}

/// Connected pieces of label `s` among the elements around `n`. Returns one
/// element set per component when the label is disconnected, empty otherwise.
pub fn label_components_near(mesh: &Mesh, n: NodeId, s: SurfaceId) -> Vec<Vec<ElemId>> {
    let targets: Vec<ElemId> = mesh.elements_of(n).iter().copied().filter(|&e| mesh.element(e).surface == s).collect();
    if targets.len() < 2 {
        return Vec::new();
    }
    let flood = |seed: ElemId, stop_when: Option<&HashSet<ElemId>>| -> (Vec<ElemId>, bool) {
        let mut seen: HashSet<ElemId> = HashSet::new();
        let mut queue = VecDeque::from([seed]);
        seen.insert(seed);
        let mut found = 0usize;
        while let Some(e) = queue.pop_front() {
            if let Some(t) = stop_when {
                if t.contains(&e) {
                    found += 1;
                    if found == t.len() {
                        return (Vec::new(), true);
                    }
                }
            }
            let nodes = mesh.element(e).nodes;
            for i in 0..3 {
                for f in mesh.edge_elements(nodes[i], nodes[(i + 1) % 3]) {
                    if mesh.element(f).surface == s && seen.insert(f) {
                        queue.push_back(f);
                    }
                }
            }
        }
        let mut v: Vec<ElemId> = seen.into_iter().collect();
        v.sort_unstable();
        (v, false)
    };
    let target_set: HashSet<ElemId> = targets.iter().copied().collect();
    if flood(targets[0], Some(&target_set)).1 {
        return Vec::new();
    }
    let mut comps: Vec<Vec<ElemId>> = Vec::new();
    for &t in &targets {
        if comps.iter().any(|c| c.binary_search(&t).is_ok()) {
            continue;
        }
        comps.push(flood(t, None).0);
    }
    comps
}

/// Smallest quality of the star of `n` if it were at `p`.
pub fn star_min_quality_at(mesh: &Mesh, n: NodeId, p: &Vec2) -> f64 {
    mesh.elements_of(n)
        .iter()
        .map(|&e| {
            let el = mesh.element(e);
            let q: Vec<Vec2> = el.nodes.iter().map(|&m| if m == n { *p } else { mesh.pos(m) }).collect();
            triangle_quality(&q[0], &q[1], &q[2])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Relax bulk node `n` toward the barycenter of its neighbors.
pub fn smooth_s_node(mesh: &mut Mesh, n: NodeId, factor: f64, floor: f64, require_improvement: bool) -> bool {
    if mesh.tag(n).on_boundary() || !matches!(classify_node(mesh, n), Ok(NodeClass::S)) {
        return false;
    }
    let nb = mesh.neighbors(n);
    if nb.is_empty() {
        return false;
    }
    let bary = nb.iter().map(|&m| mesh.pos(m)).sum::<Vec2>() / nb.len() as f64;
    let p = mesh.pos(n);
    let target = p + (bary - p) * factor;
    if (target - p).norm() == 0.0 || !mesh.star_valid_at(n, &target, floor) {
        return false;
    }
    if require_improvement && star_min_quality_at(mesh, n, &target) < mesh.min_star_quality(n) {
        return false;
    }
    mesh.set_pos(n, target);
    true
}

/// Slide L-node `n` along its interpolating spline toward equal spacing with its
/// two boundary neighbors. Only acts when the spacing ratio exceeds `uneven`.
pub fn smooth_l_node(mesh: &mut Mesh, n: NodeId, factor: f64, uneven: f64, floor: f64) -> bool {
    if !matches!(classify_node(mesh, n), Ok(NodeClass::L)) {
        return false;
    }
    let nb = interface_neighbors(mesh, n);
    if nb.len() != 2 {
        return false;
    }
    let (p, q) = (nb[0], nb[1]);
    let (lp, lq) = (mesh.edge_length(n, p), mesh.edge_length(n, q));
    if (lp - lq).abs() / (lp + lq) <= uneven {
        return false;
    }
    let mut stencil = vec![p, n, q];
    if let Some(pp) = line_continuation(mesh, p, n) {
        if pp != q {
            stencil.insert(0, pp);
        }
    }
    if let Some(qq) = line_continuation(mesh, q, n) {
        if qq != p && !stencil.contains(&qq) {
            stencil.push(qq);
        }
    }
    let pts: Vec<Vec2> = stencil.iter().map(|&m| mesh.pos(m)).collect();
    let Ok(curve) = SplineCurve::fit(&pts, false) else {
        return false;
    };
    let i = stencil.iter().position(|&m| m == n).unwrap();
    let t_mid = 0.5 * (curve.knot(i - 1) + curve.knot(i + 1));
    let t = curve.knot(i) + factor * (t_mid - curve.knot(i));
    let mut target = curve.eval(t);
    if let DomainTag::Side(s) = mesh.tag(n) {
        target = mesh.domain().clamp_to_side(s, &target, 0.0);
    }
    if !mesh.star_valid_at(n, &target, floor) {
        return false;
    }
    mesh.set_pos(n, target);
    true
}

/// Nodes within one ring of `nodes`, ascending.
pub fn one_ring(mesh: &Mesh, nodes: impl IntoIterator<Item = NodeId>) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for n in nodes {
        if !mesh.has_node(n) {
            continue;
        }
        out.insert(n);
        out.extend(mesh.neighbors(n));
    }
    out
}
