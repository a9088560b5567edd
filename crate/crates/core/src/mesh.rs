//! Triangle mesh with stable node/element ids.
//!
//! The mesh is the only owner of geometry. Node classes and the derived
//! Points/Lines/Surfaces live in [`crate::topology`] and are rebuilt from
//! element labels whenever the mesh changes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::geom::{orient, triangle_area, triangle_quality, Vec2};

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn idx(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(NodeId, "n");
id_type!(ElemId, "e");
id_type!(SurfaceId, "s");

impl SurfaceId {
    /// Pseudo-surface standing for everything outside the domain.
    pub const EXTERIOR: SurfaceId = SurfaceId(u32::MAX);

    #[inline]
    pub fn is_exterior(self) -> bool {
        self == Self::EXTERIOR
    }
}

/// Where a node sits relative to the domain polygon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainTag {
    Interior,
    /// On side `i`, the segment from vertex `i` to vertex `i + 1`.
    Side(u16),
    /// On polygon vertex `i`.
    Corner(u16),
}

impl DomainTag {
    #[inline]
    pub fn on_boundary(self) -> bool {
        !matches!(self, DomainTag::Interior)
    }

    #[inline]
    pub fn is_corner(self) -> bool {
        matches!(self, DomainTag::Corner(_))
    }

    /// Whether the node lies on side `side` of a polygon with `n_sides` sides.
    pub fn touches_side(self, side: u16, n_sides: usize) -> bool {
        match self {
            DomainTag::Interior => false,
            DomainTag::Side(s) => s == side,
            DomainTag::Corner(c) => {
                let prev = ((c as usize + n_sides - 1) % n_sides) as u16;
                c == side || prev == side
            }
        }
    }

    /// Integer encoding used by the VTK exporter: -1 interior, `s` side, `1000 + c` corner.
    pub fn code(self) -> i64 {
        match self {
            DomainTag::Interior => -1,
            DomainTag::Side(s) => s as i64,
            DomainTag::Corner(c) => 1000 + c as i64,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            -1 => Some(DomainTag::Interior),
            0..=999 => Some(DomainTag::Side(code as u16)),
            1000..=65535 => Some(DomainTag::Corner((code - 1000) as u16)),
            _ => None,
        }
    }
}

/// Convex, counter-clockwise domain polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub vertices: Vec<Vec2>,
}

impl Domain {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        Domain { vertices }
    }

    pub fn rectangle(width: f64, height: f64) -> Self {
        Domain::new(vec![Vec2::new(0.0, 0.0), Vec2::new(width, 0.0), Vec2::new(width, height), Vec2::new(0.0, height)])
    }

    pub fn n_sides(&self) -> usize {
        self.vertices.len()
    }

    pub fn side(&self, i: u16) -> (Vec2, Vec2) {
        let n = self.vertices.len();
        let i = i as usize % n;
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn side_tangent(&self, i: u16) -> Vec2 {
        let (a, b) = self.side(i);
        (b - a).normalize()
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n).map(|i| self.vertices[i].perp(&self.vertices[(i + 1) % n])).sum::<f64>() * 0.5
    }

    pub fn contains(&self, p: &Vec2, tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            orient(&a, &b, p) / (b - a).norm() >= -tol
        })
    }

    /// Signed distance to the nearest side (positive inside).
    pub fn distance_to_boundary(&self, p: &Vec2) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                orient(&a, &b, p) / (b - a).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Classify a point lying within `tol` of the boundary.
    pub fn tag_for(&self, p: &Vec2, tol: f64) -> DomainTag {
        for (i, v) in self.vertices.iter().enumerate() {
            if (p - v).norm() <= tol {
                return DomainTag::Corner(i as u16);
            }
        }
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let (d, _) = crate::geom::point_segment_distance(p, &a, &b);
            if d <= tol {
                return DomainTag::Side(i as u16);
            }
        }
        DomainTag::Interior
    }

    /// Closest point of side `i` to `p`, kept `margin` away from both corners.
    pub fn clamp_to_side(&self, i: u16, p: &Vec2, margin: f64) -> Vec2 {
        let (a, b) = self.side(i);
        let d = b - a;
        let len = d.norm();
        let t = (p - a).dot(&d) / (len * len);
        let m = (margin / len).min(0.5);
        a + d * t.clamp(m, 1.0 - m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub pos: Vec2,
    pub tag: DomainTag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Element {
    /// Counter-clockwise node ids.
    pub nodes: [NodeId; 3],
    pub surface: SurfaceId,
}

impl Element {
    #[inline]
    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    /// Local index of `n`.
    #[inline]
    pub fn local(&self, n: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&m| m == n)
    }

    /// Whether the directed edge `a -> b` appears in counter-clockwise order.
    #[inline]
    pub fn has_directed_edge(&self, a: NodeId, b: NodeId) -> bool {
        (0..3).any(|i| self.nodes[i] == a && self.nodes[(i + 1) % 3] == b)
    }

    /// The node that is neither `a` nor `b`.
    pub fn opposite(&self, a: NodeId, b: NodeId) -> Option<NodeId> {
        self.nodes.iter().copied().find(|&n| n != a && n != b)
    }
}

pub type NodeList = SmallVec<[NodeId; 12]>;
pub type ElemList = SmallVec<[ElemId; 8]>;

#[derive(Clone, Debug)]
pub struct Mesh {
    domain: Domain,
    nodes: Vec<Option<Node>>,
    elements: Vec<Option<Element>>,
    incident: Vec<ElemList>,
    live_nodes: usize,
    live_elements: usize,
    label_count: BTreeMap<SurfaceId, usize>,
}

impl Mesh {
    pub fn new(domain: Domain) -> Self {
        Mesh {
            domain,
            nodes: Vec::new(),
            elements: Vec::new(),
            incident: Vec::new(),
            live_nodes: 0,
            live_elements: 0,
            label_count: BTreeMap::new(),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn add_node(&mut self, pos: Vec2, tag: DomainTag) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Some(Node { pos, tag }));
        self.incident.push(ElemList::new());
        self.live_nodes += 1;
        id
    }

    /// Re-create a node under a given id (restart import). Ids below it stay vacant.
    pub fn insert_node_with_id(&mut self, id: NodeId, pos: Vec2, tag: DomainTag) {
        while self.nodes.len() <= id.idx() {
            self.nodes.push(None);
            self.incident.push(ElemList::new());
        }
        assert!(self.nodes[id.idx()].is_none(), "node id {id} already in use");
        self.nodes[id.idx()] = Some(Node { pos, tag });
        self.live_nodes += 1;
    }

    pub fn add_element(&mut self, nodes: [NodeId; 3], surface: SurfaceId) -> ElemId {
        let id = ElemId(self.elements.len() as u32);
        self.elements.push(Some(Element { nodes, surface }));
        for n in nodes {
            insert_sorted(&mut self.incident[n.idx()], id);
        }
        self.live_elements += 1;
        *self.label_count.entry(surface).or_insert(0) += 1;
        id
    }

    pub fn insert_element_with_id(&mut self, id: ElemId, nodes: [NodeId; 3], surface: SurfaceId) {
        while self.elements.len() <= id.idx() {
            self.elements.push(None);
        }
        assert!(self.elements[id.idx()].is_none(), "element id {id} already in use");
        self.elements[id.idx()] = Some(Element { nodes, surface });
        for n in nodes {
            insert_sorted(&mut self.incident[n.idx()], id);
        }
        self.live_elements += 1;
        *self.label_count.entry(surface).or_insert(0) += 1;
    }

    /// Reserve id slots so that freshly created entities continue after `nodes`/`elements`.
    pub fn reserve_ids(&mut self, nodes: usize, elements: usize) {
        while self.nodes.len() < nodes {
            self.nodes.push(None);
            self.incident.push(ElemList::new());
        }
        while self.elements.len() < elements {
            self.elements.push(None);
        }
    }

    pub fn remove_element(&mut self, e: ElemId) -> Element {
        let el = self.elements[e.idx()].take().expect("removing a dead element");
        for n in el.nodes {
            remove_sorted(&mut self.incident[n.idx()], e);
        }
        self.live_elements -= 1;
        self.dec_label(el.surface);
        el
    }

    fn dec_label(&mut self, s: SurfaceId) {
        let c = self.label_count.get_mut(&s).expect("label count out of sync");
        *c -= 1;
        if *c == 0 {
            self.label_count.remove(&s);
        }
    }

    /// Removes a node that no element references any more.
    pub fn remove_node(&mut self, n: NodeId) -> Node {
        assert!(self.incident[n.idx()].is_empty(), "removing node {n} still in use");
        self.live_nodes -= 1;
        self.nodes[n.idx()].take().expect("removing a dead node")
    }

    pub fn set_element_nodes(&mut self, e: ElemId, nodes: [NodeId; 3]) {
        let old = self.elements[e.idx()].as_ref().expect("dead element").nodes;
        for n in old {
            remove_sorted(&mut self.incident[n.idx()], e);
        }
        for n in nodes {
            insert_sorted(&mut self.incident[n.idx()], e);
        }
        self.elements[e.idx()].as_mut().unwrap().nodes = nodes;
    }

    pub fn set_surface(&mut self, e: ElemId, s: SurfaceId) {
        let el = self.elements[e.idx()].as_mut().expect("dead element");
        let old = std::mem::replace(&mut el.surface, s);
        if old != s {
            self.dec_label(old);
            *self.label_count.entry(s).or_insert(0) += 1;
        }
    }

    /// Number of elements carrying label `s`.
    pub fn surface_count(&self, s: SurfaceId) -> usize {
        self.label_count.get(&s).copied().unwrap_or(0)
    }

    #[inline]
    pub fn has_node(&self, n: NodeId) -> bool {
        self.nodes.get(n.idx()).is_some_and(|x| x.is_some())
    }

    #[inline]
    pub fn has_element(&self, e: ElemId) -> bool {
        self.elements.get(e.idx()).is_some_and(|x| x.is_some())
    }

    #[inline]
    pub fn node(&self, n: NodeId) -> &Node {
        self.nodes[n.idx()].as_ref().expect("dead node")
    }

    #[inline]
    pub fn pos(&self, n: NodeId) -> Vec2 {
        self.node(n).pos
    }

    #[inline]
    pub fn tag(&self, n: NodeId) -> DomainTag {
        self.node(n).tag
    }

    pub fn set_pos(&mut self, n: NodeId, p: Vec2) {
        self.nodes[n.idx()].as_mut().expect("dead node").pos = p;
    }

    pub fn set_tag(&mut self, n: NodeId, tag: DomainTag) {
        self.nodes[n.idx()].as_mut().expect("dead node").tag = tag;
    }

    #[inline]
    pub fn element(&self, e: ElemId) -> &Element {
        self.elements[e.idx()].as_ref().expect("dead element")
    }

    pub fn try_element(&self, e: ElemId) -> Option<&Element> {
        self.elements.get(e.idx()).and_then(|x| x.as_ref())
    }

    pub fn n_nodes(&self) -> usize {
        self.live_nodes
    }

    pub fn n_elements(&self) -> usize {
        self.live_elements
    }

    /// One past the largest node id ever issued.
    pub fn node_capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_capacity(&self) -> usize {
        self.elements.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.is_some()).map(|(i, _)| NodeId(i as u32))
    }

    pub fn element_ids(&self) -> impl Iterator<Item = ElemId> + '_ {
        self.elements.iter().enumerate().filter(|(_, e)| e.is_some()).map(|(i, _)| ElemId(i as u32))
    }

    pub fn elements(&self) -> impl Iterator<Item = (ElemId, &Element)> + '_ {
        self.elements.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|e| (ElemId(i as u32), e)))
    }

    #[inline]
    pub fn elements_of(&self, n: NodeId) -> &[ElemId] {
        &self.incident[n.idx()]
    }

    /// Sorted, de-duplicated neighbor nodes.
    pub fn neighbors(&self, n: NodeId) -> NodeList {
        let mut out = NodeList::new();
        for &e in self.elements_of(n) {
            for m in self.element(e).nodes {
                if m != n {
                    out.push(m);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn edge_elements(&self, a: NodeId, b: NodeId) -> ElemList {
        self.elements_of(a).iter().copied().filter(|&e| self.element(e).contains(b)).collect()
    }

    pub fn positions(&self, e: ElemId) -> [Vec2; 3] {
        let el = self.element(e);
        [self.pos(el.nodes[0]), self.pos(el.nodes[1]), self.pos(el.nodes[2])]
    }

    pub fn signed_area(&self, e: ElemId) -> f64 {
        let [a, b, c] = self.positions(e);
        triangle_area(&a, &b, &c)
    }

    pub fn quality(&self, e: ElemId) -> f64 {
        let [a, b, c] = self.positions(e);
        triangle_quality(&a, &b, &c)
    }

    pub fn centroid(&self, e: ElemId) -> Vec2 {
        let [a, b, c] = self.positions(e);
        (a + b + c) / 3.0
    }

    /// Labels on the left and right of the directed edge `a -> b`; the exterior
    /// pseudo-surface stands in for a missing element.
    pub fn edge_labels(&self, a: NodeId, b: NodeId) -> (SurfaceId, SurfaceId) {
        let mut left = SurfaceId::EXTERIOR;
        let mut right = SurfaceId::EXTERIOR;
        for &e in self.elements_of(a) {
            let el = self.element(e);
            if el.has_directed_edge(a, b) {
                left = el.surface;
            } else if el.has_directed_edge(b, a) {
                right = el.surface;
            }
        }
        (left, right)
    }

    #[inline]
    pub fn is_interface_edge(&self, a: NodeId, b: NodeId) -> bool {
        let (l, r) = self.edge_labels(a, b);
        l != r
    }

    pub fn is_boundary_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edge_elements(a, b).len() == 1
    }

    pub fn edge_length(&self, a: NodeId, b: NodeId) -> f64 {
        (self.pos(a) - self.pos(b)).norm()
    }

    /// All undirected edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.live_elements * 3 / 2 + 8);
        for (_, el) in self.elements() {
            for i in 0..3 {
                let a = el.nodes[i];
                let b = el.nodes[(i + 1) % 3];
                // every interior edge is seen twice, keep the orientation with a < b
                // and pick up boundary edges from their single element
                if a < b || self.edge_elements(a, b).len() == 1 {
                    out.push(if a < b { (a, b) } else { (b, a) });
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn total_area(&self) -> f64 {
        self.element_ids().map(|e| self.signed_area(e)).sum()
    }

    /// Labels present in the mesh, ascending.
    pub fn surface_ids(&self) -> Vec<SurfaceId> {
        self.label_count.keys().copied().collect()
    }

    /// Smallest signed area over the elements around `n`.
    pub fn min_star_area(&self, n: NodeId) -> f64 {
        self.elements_of(n).iter().map(|&e| self.signed_area(e)).fold(f64::INFINITY, f64::min)
    }

    pub fn min_star_quality(&self, n: NodeId) -> f64 {
        self.elements_of(n).iter().map(|&e| self.quality(e)).fold(f64::INFINITY, f64::min)
    }

    /// Whether moving `n` to `p` keeps every incident element strictly positive.
    pub fn star_valid_at(&self, n: NodeId, p: &Vec2, min_area: f64) -> bool {
        self.elements_of(n).iter().all(|&e| {
            let el = self.element(e);
            let i = el.local(n).unwrap();
            let a = self.pos(el.nodes[(i + 1) % 3]);
            let b = self.pos(el.nodes[(i + 2) % 3]);
            triangle_area(p, &a, &b) > min_area
        })
    }

    /// Counter-clockwise fan of elements around `n`, starting after a boundary
    /// edge when `n` lies on the boundary. Returns `None` for a non-manifold star.
    pub fn fan(&self, n: NodeId) -> Option<Vec<ElemId>> {
        let elems = self.elements_of(n);
        if elems.is_empty() {
            return Some(Vec::new());
        }
        // next: element whose "incoming" edge (prev -> n) matches the current element's outgoing
        let first_of = |e: ElemId| {
            let el = self.element(e);
            let i = el.local(n).unwrap();
            (el.nodes[(i + 1) % 3], el.nodes[(i + 2) % 3])
        };
        // a fan element (n, a, b): its CCW successor around n starts at b
        let mut start = elems[0];
        for &e in elems {
            let (a, _) = first_of(e);
            let has_pred = elems.iter().any(|&f| f != e && first_of(f).1 == a);
            if !has_pred {
                start = e;
                break;
            }
        }
        let mut out = Vec::with_capacity(elems.len());
        let mut cur = start;
        loop {
            out.push(cur);
            let (_, b) = first_of(cur);
            let next = elems.iter().copied().find(|&f| first_of(f).0 == b);
            match next {
                Some(f) if f == start => break,
                Some(f) => {
                    if out.len() > elems.len() {
                        return None;
                    }
                    cur = f;
                }
                None => break,
            }
        }
        if out.len() != elems.len() {
            return None;
        }
        Some(out)
    }
}

fn insert_sorted(v: &mut ElemList, e: ElemId) {
    match v.binary_search(&e) {
        Ok(_) => {}
        Err(pos) => v.insert(pos, e),
    }
}

fn remove_sorted(v: &mut ElemList, e: ElemId) {
    if let Ok(pos) = v.binary_search(&e) {
        v.remove(pos);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;

    fn unit_square() -> Mesh {
        let mut m = Mesh::new(Domain::rectangle(1.0, 1.0));
        let a = m.add_node(vec2(0.0, 0.0), DomainTag::Corner(0));
        let b = m.add_node(vec2(1.0, 0.0), DomainTag::Corner(1));
        let c = m.add_node(vec2(1.0, 1.0), DomainTag::Corner(2));
        let d = m.add_node(vec2(0.0, 1.0), DomainTag::Corner(3));
        m.add_element([a, b, c], SurfaceId(0));
        m.add_element([a, c, d], SurfaceId(0));
        m
    }

    #[test]
    fn square_area_and_edges() {
        let m = unit_square();
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        assert_eq!(m.edges().len(), 5);
        assert!(m.is_boundary_edge(NodeId(0), NodeId(1)));
        assert!(!m.is_boundary_edge(NodeId(0), NodeId(2)));
    }

    #[test]
    fn edge_labels_use_exterior_for_boundary() {
        let m = unit_square();
        let (l, r) = m.edge_labels(NodeId(0), NodeId(1));
        assert_eq!(l, SurfaceId(0));
        assert!(r.is_exterior());
    }

    #[test]
    fn fan_orders_boundary_star() {
        let m = unit_square();
        let fan = m.fan(NodeId(0)).unwrap();
        assert_eq!(fan, vec![ElemId(0), ElemId(1)]);
    }

    #[test]
    fn removal_keeps_incidence_consistent() {
        let mut m = unit_square();
        m.remove_element(ElemId(0));
        assert_eq!(m.elements_of(NodeId(1)).len(), 0);
        m.remove_node(NodeId(1));
        assert_eq!(m.n_nodes(), 3);
        assert!(!m.has_node(NodeId(1)));
    }

    #[test]
    fn domain_tags_roundtrip_codes() {
        for t in [DomainTag::Interior, DomainTag::Side(3), DomainTag::Corner(2)] {
            assert_eq!(DomainTag::from_code(t.code()), Some(t));
        }
        let d = Domain::rectangle(2.0, 1.0);
        assert_eq!(d.tag_for(&vec2(2.0, 1.0), 1e-9), DomainTag::Corner(2));
        assert_eq!(d.tag_for(&vec2(1.0, 0.0), 1e-9), DomainTag::Side(0));
        assert!(DomainTag::Corner(0).touches_side(3, 4));
    }
}
