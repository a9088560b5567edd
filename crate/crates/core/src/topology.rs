//! Node classification and the derived Points, Lines and Surfaces.
//!
//! Everything here is recomputed from element labels. A node's topological
//! degree is the number of interface edges leaving it, where an interface
//! edge separates two different labels (the exterior counts as a label).

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::mesh::{ElemId, Mesh, NodeId, SurfaceId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeClass {
    /// Bulk node of a single grain.
    S,
    /// Node on a simple boundary between two labels.
    L,
    /// Junction node; `corner` marks domain polygon vertices.
    P { corner: bool },
}

impl NodeClass {
    pub fn code(self) -> u8 {
        match self {
            NodeClass::S => 0,
            NodeClass::L => 1,
            NodeClass::P { .. } => 2,
        }
    }

    #[inline]
    pub fn is_p(self) -> bool {
        matches!(self, NodeClass::P { .. })
    }
}

pub type LineId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub node: NodeId,
    /// Incident lines, once per incidence (a loop line appears twice).
    pub lines: Vec<LineId>,
    /// Points at the far end of each incident line, parallel to `lines`.
    pub points: Vec<NodeId>,
    pub on_boundary: bool,
    pub corner: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    /// Full node sequence. Open lines start and end on their Points; closed
    /// lines start at their anchor and do not repeat it at the end.
    pub nodes: Vec<NodeId>,
    pub closed: bool,
    /// Label on the left of the walking direction.
    pub left: SurfaceId,
    pub right: SurfaceId,
}

impl Line {
    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeId {
        if self.closed {
            self.nodes[0]
        } else {
            *self.nodes.last().unwrap()
        }
    }

    /// Whether one side of the line is outside the domain.
    pub fn on_domain_boundary(&self) -> bool {
        self.left.is_exterior() || self.right.is_exterior()
    }

    /// Number of segments.
    pub fn n_segments(&self) -> usize {
        if self.closed {
            self.nodes.len()
        } else {
            self.nodes.len() - 1
        }
    }

    pub fn segment(&self, i: usize) -> (NodeId, NodeId) {
        let n = self.nodes.len();
        (self.nodes[i], self.nodes[(i + 1) % n])
    }

    pub fn length(&self, mesh: &Mesh) -> f64 {
        (0..self.n_segments())
            .map(|i| {
                let (a, b) = self.segment(i);
                mesh.edge_length(a, b)
            })
            .sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Surface {
    pub elements: Vec<ElemId>,
    pub s_nodes: Vec<NodeId>,
    pub lines: Vec<LineId>,
    pub points: Vec<NodeId>,
}

#[derive(Clone, Debug, Default)]
pub struct Topology {
    /// Indexed by node id; `None` for vacant ids.
    pub classes: Vec<Option<NodeClass>>,
    pub points: BTreeMap<NodeId, Point>,
    pub lines: Vec<Line>,
    pub surfaces: BTreeMap<SurfaceId, Surface>,
    /// Line owning each L-node.
    pub node_line: Vec<Option<LineId>>,
}

impl Topology {
    pub fn class(&self, n: NodeId) -> NodeClass {
        self.classes[n.idx()].expect("unclassified node")
    }

    pub fn line_of(&self, n: NodeId) -> Option<LineId> {
        self.node_line.get(n.idx()).copied().flatten()
    }

    pub fn interior_lines(&self) -> impl Iterator<Item = (LineId, &Line)> {
        self.lines.iter().enumerate().filter(|(_, l)| !l.on_domain_boundary())
    }

    pub fn interior_points(&self) -> impl Iterator<Item = &Point> {
        self.points.values().filter(|p| !p.on_boundary)
    }

    pub fn n_surfaces(&self) -> usize {
        self.surfaces.len()
    }
}

/// Interface degree of `n`: the number of distinct neighbors across an interface edge.
pub fn interface_degree(mesh: &Mesh, n: NodeId) -> usize {
    mesh.neighbors(n).into_iter().filter(|&m| mesh.is_interface_edge(n, m)).count()
}

/// Interface neighbors of `n` in ascending id order.
pub fn interface_neighbors(mesh: &Mesh, n: NodeId) -> Vec<NodeId> {
    mesh.neighbors(n).into_iter().filter(|&m| mesh.is_interface_edge(n, m)).collect()
}

pub fn classify_node(mesh: &Mesh, n: NodeId) -> Result<NodeClass> {
    if mesh.elements_of(n).is_empty() {
        return Err(Error::MalformedMesh(format!("orphan node {n}")));
    }
    if mesh.tag(n).is_corner() {
        return Ok(NodeClass::P { corner: true });
    }
    match interface_degree(mesh, n) {
        0 => Ok(NodeClass::S),
        2 => Ok(NodeClass::L),
        1 => Err(Error::Identification { node: n, reason: "single dangling interface edge".into() }),
        _ => Ok(NodeClass::P { corner: false }),
    }
}

pub fn classify_nodes(mesh: &Mesh) -> Result<Vec<Option<NodeClass>>> {
    for (e, _) in mesh.elements() {
        if mesh.signed_area(e) <= 0.0 {
            return Err(Error::MalformedMesh(format!("element {e} is inverted or degenerate")));
        }
    }
    let mut classes = vec![None; mesh.node_capacity()];
    for n in mesh.node_ids() {
        classes[n.idx()] = Some(classify_node(mesh, n)?);
    }
    Ok(classes)
}

fn edge_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn identify_entities(mesh: &Mesh, classes: &[Option<NodeClass>]) -> Result<Topology> {
    let class = |n: NodeId| classes[n.idx()].expect("unclassified node");
    let mut used: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut lines: Vec<Line> = Vec::new();
    let mut node_line = vec![None; mesh.node_capacity()];

    let mut iface: Vec<Vec<NodeId>> = vec![Vec::new(); mesh.node_capacity()];
    for n in mesh.node_ids() {
        if class(n) != NodeClass::S {
            iface[n.idx()] = interface_neighbors(mesh, n);
            if class(n) == NodeClass::L && iface[n.idx()].len() != 2 {
                return Err(Error::Identification {
                    node: n,
                    reason: format!("L-node with {} interface edges", iface[n.idx()].len()),
                });
            }
        } else if interface_degree(mesh, n) != 0 {
            return Err(Error::Identification { node: n, reason: "S-node on an interface".into() });
        }
    }

    let make_line = |nodes: Vec<NodeId>, closed: bool| {
        let (left, right) = mesh.edge_labels(nodes[0], nodes[1]);
        Line { nodes, closed, left, right }
    };

    let p_nodes: Vec<NodeId> = mesh.node_ids().filter(|&n| class(n).is_p()).collect();
    for &p in &p_nodes {
        for &first in &iface[p.idx()] {
            if used.contains(&edge_key(p, first)) {
                continue;
            }
            used.insert(edge_key(p, first));
            let mut nodes = vec![p, first];
            let mut prev = p;
            let mut cur = first;
            while class(cur) == NodeClass::L {
                let nb = &iface[cur.idx()];
                let next = if nb[0] != prev { nb[0] } else { nb[1] };
                if !used.insert(edge_key(cur, next)) {
                    return Err(Error::Identification { node: cur, reason: "line walk revisits an edge".into() });
                }
                nodes.push(next);
                prev = cur;
                cur = next;
            }
            let id = lines.len();
            for &n in &nodes[1..nodes.len() - 1] {
                node_line[n.idx()] = Some(id);
            }
            lines.push(make_line(nodes, false));
        }
    }

    // closed loops made only of L-nodes
    for n in mesh.node_ids() {
        if class(n) != NodeClass::L || node_line[n.idx()].is_some() {
            continue;
        }
        let anchor = n;
        let nb = &iface[anchor.idx()];
        let first = nb[0].min(nb[1]);
        let mut nodes = vec![anchor];
        let mut prev = anchor;
        let mut cur = first;
        used.insert(edge_key(anchor, first));
        while cur != anchor {
            if class(cur) != NodeClass::L {
                return Err(Error::Identification { node: cur, reason: "closed loop reaches a non-L node".into() });
            }
            nodes.push(cur);
            let nb = &iface[cur.idx()];
            let next = if nb[0] != prev { nb[0] } else { nb[1] };
            used.insert(edge_key(cur, next));
            prev = cur;
            cur = next;
        }
        if nodes.len() < 3 {
            return Err(Error::Identification { node: anchor, reason: "closed line with fewer than 3 nodes".into() });
        }
        let id = lines.len();
        for &m in &nodes {
            node_line[m.idx()] = Some(id);
        }
        lines.push(make_line(nodes, true));
    }

    let mut points: BTreeMap<NodeId, Point> = BTreeMap::new();
    for &p in &p_nodes {
        let corner = matches!(class(p), NodeClass::P { corner: true });
        points.insert(
            p,
            Point { node: p, lines: Vec::new(), points: Vec::new(), on_boundary: mesh.tag(p).on_boundary(), corner },
        );
    }
    for (id, l) in lines.iter().enumerate() {
        if l.closed {
            continue;
        }
        let (s, e) = (l.start(), l.end());
        let ps = points.get_mut(&s).unwrap();
        ps.lines.push(id);
        ps.points.push(e);
        let pe = points.get_mut(&e).unwrap();
        pe.lines.push(id);
        pe.points.push(s);
    }

    let mut surfaces: BTreeMap<SurfaceId, Surface> = BTreeMap::new();
    for (e, el) in mesh.elements() {
        surfaces.entry(el.surface).or_default().elements.push(e);
    }
    for n in mesh.node_ids() {
        if class(n) == NodeClass::S {
            let s = mesh.element(mesh.elements_of(n)[0]).surface;
            surfaces.get_mut(&s).unwrap().s_nodes.push(n);
        }
    }
    for (id, l) in lines.iter().enumerate() {
        for s in [l.left, l.right] {
            if let Some(surf) = surfaces.get_mut(&s) {
                surf.lines.push(id);
                if !l.closed {
                    for p in [l.start(), l.end()] {
                        if !surf.points.contains(&p) {
                            surf.points.push(p);
                        }
                    }
                }
            }
        }
    }
    for surf in surfaces.values_mut() {
        surf.lines.dedup();
        surf.points.sort_unstable();
    }

    Ok(Topology { classes: classes.to_vec(), points, lines, surfaces, node_line })
}

/// Classify and identify in one go.
pub fn build(mesh: &Mesh) -> Result<Topology> {
    let classes = classify_nodes(mesh)?;
    identify_entities(mesh, &classes)
}

/// Maximal edge-connected element set containing `seed` that never crosses
/// an edge for which `barrier(a, b)` holds. Sorted by id.
pub fn flood_identify_surface<F>(mesh: &Mesh, seed: ElemId, mut barrier: F) -> Vec<ElemId>
where
    F: FnMut(NodeId, NodeId) -> bool,
{
    let mut seen = vec![false; mesh.element_capacity()];
    let mut stack = vec![seed];
    seen[seed.idx()] = true;
    let mut out = Vec::new();
    while let Some(e) = stack.pop() {
        out.push(e);
        let nodes = mesh.element(e).nodes;
        for i in 0..3 {
            let (a, b) = (nodes[i], nodes[(i + 1) % 3]);
            if barrier(a, b) {
                continue;
            }
            for f in mesh.edge_elements(a, b) {
                if !seen[f.idx()] {
                    seen[f.idx()] = true;
                    stack.push(f);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn surface_area(surface: &Surface, mesh: &Mesh) -> Result<f64> {
    elements_area(&surface.elements, mesh)
}

pub fn elements_area(elements: &[ElemId], mesh: &Mesh) -> Result<f64> {
    if elements.is_empty() {
        return Err(Error::EmptySurface(SurfaceId::EXTERIOR));
    }
    Ok(elements.iter().map(|&e| mesh.signed_area(e)).sum())
}

/// Area of every label present in the mesh.
pub fn surface_areas(mesh: &Mesh) -> BTreeMap<SurfaceId, f64> {
    let mut out = BTreeMap::new();
    for (e, el) in mesh.elements() {
        *out.entry(el.surface).or_insert(0.0) += mesh.signed_area(e);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub entity: String,
    pub what: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, entity: impl ToString, what: impl ToString) {
        self.violations.push(Violation { entity: entity.to_string(), what: what.to_string() });
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            let msg = self
                .violations
                .iter()
                .take(5)
                .map(|v| format!("{}: {}", v.entity, v.what))
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::Invariant(msg))
        }
    }
}

/// Check mesh invariants and the internal consistency of `topo` against `mesh`.
pub fn validate(mesh: &Mesh, topo: &Topology) -> ValidationReport {
    let mut rep = ValidationReport::default();

    for (e, el) in mesh.elements() {
        for n in el.nodes {
            if !mesh.has_node(n) {
                rep.push(e, format!("references missing node {n}"));
            }
        }
        if el.nodes.iter().all(|&n| mesh.has_node(n)) && mesh.signed_area(e) <= 0.0 {
            rep.push(e, "non-positive area");
        }
        if el.surface.is_exterior() {
            rep.push(e, "labelled as exterior");
        }
    }
    for n in mesh.node_ids() {
        if mesh.elements_of(n).is_empty() {
            rep.push(n, "orphan node");
        }
    }
    if !rep.passed() {
        return rep;
    }

    let domain_area = mesh.domain().area();
    let total = mesh.total_area();
    if ((total - domain_area) / domain_area).abs() > 1e-9 {
        rep.push("mesh", format!("area {total} differs from domain area {domain_area}"));
    }

    for n in mesh.node_ids() {
        match (topo.classes.get(n.idx()).copied().flatten(), classify_node(mesh, n)) {
            (Some(c), Ok(d)) if c == d => {}
            (Some(c), Ok(d)) => rep.push(n, format!("stored class {c:?} but mesh implies {d:?}")),
            (None, _) => rep.push(n, "unclassified"),
            (_, Err(e)) => rep.push(n, e),
        }
    }

    for (id, l) in topo.lines.iter().enumerate() {
        let ent = format!("line{id}");
        if l.nodes.len() < 2 {
            rep.push(&ent, "fewer than two nodes");
            continue;
        }
        if l.left == l.right {
            rep.push(&ent, "both sides carry the same label");
        }
        for i in 0..l.n_segments() {
            let (a, b) = l.segment(i);
            if !mesh.has_node(a) || !mesh.has_node(b) || mesh.edge_elements(a, b).is_empty() {
                rep.push(&ent, format!("segment {a}-{b} is not a mesh edge"));
            } else if mesh.edge_labels(a, b) != (l.left, l.right) {
                rep.push(&ent, format!("segment {a}-{b} labels disagree with the line"));
            }
        }
        let inner: &[NodeId] = if l.closed { &l.nodes } else { &l.nodes[1..l.nodes.len() - 1] };
        for &n in inner {
            if topo.line_of(n) != Some(id) {
                rep.push(&ent, format!("node {n} not registered on the line"));
            }
        }
        if !l.closed {
            for p in [l.start(), l.end()] {
                match topo.points.get(&p) {
                    None => rep.push(&ent, format!("endpoint {p} is not a Point")),
                    Some(pt) if !pt.lines.contains(&id) => {
                        rep.push(&ent, format!("endpoint {p} does not list the line"))
                    }
                    _ => {}
                }
            }
        }
    }
    for (p, pt) in &topo.points {
        if pt.lines.len() != pt.points.len() {
            rep.push(p, "connection lists differ in length");
        }
        for (&l, &q) in pt.lines.iter().zip(&pt.points) {
            match topo.lines.get(l) {
                None => rep.push(p, format!("unknown line {l}")),
                Some(line) => {
                    let ok = (line.start() == *p && line.end() == q) || (line.end() == *p && line.start() == q);
                    if !ok {
                        rep.push(p, format!("connection to {q} via line{l} is not symmetric"));
                    }
                }
            }
        }
    }

    let mut counted = 0usize;
    for (s, surf) in &topo.surfaces {
        if surf.elements.is_empty() {
            rep.push(s, "empty surface");
        }
        for &e in &surf.elements {
            match mesh.try_element(e) {
                Some(el) if el.surface == *s => counted += 1,
                Some(_) => rep.push(s, format!("element {e} carries another label")),
                None => rep.push(s, format!("element {e} does not exist")),
            }
        }
        if let Some(&seed) = surf.elements.first() {
            if mesh.has_element(seed) {
                let comp = flood_identify_surface(mesh, seed, |a, b| mesh.is_interface_edge(a, b));
                if comp.len() != surf.elements.len() {
                    rep.push(s, "surface is not edge-connected");
                }
            }
        }
    }
    if counted != mesh.n_elements() {
        rep.push("surfaces", "element sets do not partition the mesh");
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;
    use crate::mesh::{Domain, DomainTag};

    /// 2x2 grid of squares on [0,2]x[0,1] ... labels given per square.
    fn strip(labels: [u32; 2]) -> Mesh {
        let mut m = Mesh::new(Domain::rectangle(2.0, 1.0));
        let d = m.domain().clone();
        let mut ids = Vec::new();
        for j in 0..2 {
            for i in 0..3 {
                let p = vec2(i as f64, j as f64);
                ids.push(m.add_node(p, d.tag_for(&p, 1e-9)));
            }
        }
        for i in 0..2 {
            let (a, b, c, dd) = (ids[i], ids[i + 1], ids[i + 4], ids[i + 3]);
            m.add_element([a, b, c], SurfaceId(labels[i]));
            m.add_element([a, c, dd], SurfaceId(labels[i]));
        }
        m
    }

    #[test]
    fn two_grain_strip_classes() {
        let m = strip([0, 1]);
        let t = build(&m).unwrap();
        assert_eq!(t.class(NodeId(1)), NodeClass::P { corner: false });
        assert_eq!(t.class(NodeId(4)), NodeClass::P { corner: false });
        assert_eq!(t.class(NodeId(0)), NodeClass::P { corner: true });
        assert_eq!(t.surfaces.len(), 2);
        assert_eq!(t.interior_lines().count(), 1);
        assert!(validate(&m, &t).passed());
    }

    #[test]
    fn single_grain_boundary_lines() {
        let m = strip([0, 0]);
        let t = build(&m).unwrap();
        assert_eq!(t.class(NodeId(1)), NodeClass::L);
        assert_eq!(t.interior_lines().count(), 0);
        // four sides between four corners
        assert_eq!(t.lines.len(), 4);
        assert!(validate(&m, &t).passed());
    }

    #[test]
    fn flood_without_barrier_reaches_everything() {
        let m = strip([0, 1]);
        assert_eq!(flood_identify_surface(&m, ElemId(0), |_, _| false).len(), 4);
        assert_eq!(flood_identify_surface(&m, ElemId(0), |a, b| m.is_interface_edge(a, b)), vec![ElemId(0), ElemId(1)]);
    }

    #[test]
    fn inverted_element_is_named() {
        let mut m = strip([0, 0]);
        m.set_pos(NodeId(4), vec2(1.0, -0.5));
        m.set_tag(NodeId(4), DomainTag::Interior);
        let t = Topology::default();
        let rep = validate(&m, &t);
        assert!(!rep.passed());
        assert!(rep.violations.iter().any(|v| v.entity.starts_with('e')));
    }

    #[test]
    fn dangling_line_endpoint_fails() {
        let m = strip([0, 1]);
        let mut t = build(&m).unwrap();
        let (id, _) = t.interior_lines().next().unwrap();
        let start = t.lines[id].start();
        t.points.remove(&start);
        assert!(!validate(&m, &t).passed());
    }

    #[test]
    fn unit_square_area() {
        let m = strip([0, 0]);
        let t = build(&m).unwrap();
        let a = surface_area(&t.surfaces[&SurfaceId(0)], &m).unwrap();
        assert!((a - 2.0).abs() < 1e-14);
        assert!(elements_area(&[], &m).is_err());
    }
}
