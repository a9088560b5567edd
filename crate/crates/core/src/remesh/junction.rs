//! Decomposition of junctions of four or more boundaries into triple junctions.

use crate::geom::{triangle_area, Vec2};
use crate::kinetics::StoredEnergyField;
use crate::mesh::{DomainTag, ElemId, Mesh, NodeId, SurfaceId};
use crate::topology::interface_degree;

/// Run of consecutive same-label elements around a node, counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    pub label: SurfaceId,
    pub elems: Vec<ElemId>,
    /// First and last rim nodes of the sector.
    pub first: NodeId,
    pub last: NodeId,
}

fn rim(mesh: &Mesh, n: NodeId, e: ElemId) -> (NodeId, NodeId) {
    let el = mesh.element(e);
    let i = el.local(n).unwrap();
    (el.nodes[(i + 1) % 3], el.nodes[(i + 2) % 3])
}

/// Sectors around `n` and whether the fan closes on itself.
pub fn sectors(mesh: &Mesh, n: NodeId) -> Option<(Vec<Sector>, bool)> {
    let fan = mesh.fan(n)?;
    if fan.is_empty() {
        return Some((Vec::new(), false));
    }
    let closed = {
        let (a0, _) = rim(mesh, n, fan[0]);
        let (_, bl) = rim(mesh, n, *fan.last().unwrap());
        a0 == bl
    };
    let mut out: Vec<Sector> = Vec::new();
    for &e in &fan {
        let label = mesh.element(e).surface;
        let (a, b) = rim(mesh, n, e);
        match out.last_mut() {
            Some(s) if s.label == label => {
                s.elems.push(e);
                s.last = b;
            }
            _ => out.push(Sector { label, elems: vec![e], first: a, last: b }),
        }
    }
    if closed && out.len() > 1 && out[0].label == out.last().unwrap().label {
        let tail = out.pop().unwrap();
        let head = &mut out[0];
        let mut elems = tail.elems;
        elems.extend(head.elems.drain(..));
        head.elems = elems;
        head.first = tail.first;
    }
    Some((out, closed))
}

/// A candidate decomposition: sector `sector` is detached onto a new node at `pos`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitChoice {
    pub sector: usize,
    pub pos: Vec2,
    pub delta_f: f64,
}

fn counter_clockwise_angle(u: &Vec2, v: &Vec2) -> f64 {
    let a = v.y.atan2(v.x) - u.y.atan2(u.x);
    a.rem_euclid(std::f64::consts::TAU)
}

fn candidate(
    mesh: &Mesh,
    n: NodeId,
    secs: &[Sector],
    j: usize,
    d: f64,
    gamma: f64,
    energy: &StoredEnergyField,
    floor: f64,
) -> Option<SplitChoice> {
    let k = secs.len();
    let s = &secs[j];
    let prev = &secs[(j + k - 1) % k];
    let next = &secs[(j + 1) % k];
    let p = mesh.pos(n);
    let (pa, pm) = (mesh.pos(s.first), mesh.pos(s.last));
    let (u, v) = (pa - p, pm - p);
    let theta = counter_clockwise_angle(&u, &v);
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return None;
    }
    let half = u.y.atan2(u.x) + 0.5 * theta;
    let dir = Vec2::new(half.cos(), half.sin());
    let q = p + dir * d;
    // detached sector elements must stay valid with the new apex
    for &e in &s.elems {
        let (a, b) = rim(mesh, n, e);
        if triangle_area(&q, &mesh.pos(a), &mesh.pos(b)) <= floor {
            return None;
        }
    }
    let a_left = triangle_area(&p, &pa, &q);
    let a_right = triangle_area(&p, &q, &pm);
    if a_left <= floor || a_right <= floor {
        return None;
    }
    let dl = d + (pa - q).norm() - u.norm() + (pm - q).norm() - v.norm();
    let e_j = energy.get(s.label);
    let delta_f = gamma * dl + a_left * (energy.get(prev.label) - e_j) + a_right * (energy.get(next.label) - e_j);
    Some(SplitChoice { sector: j, pos: q, delta_f })
}

/// Best sector to detach from `n`, halving the split distance up to five times.
pub fn choose_split(
    mesh: &Mesh,
    n: NodeId,
    d: f64,
    gamma: f64,
    energy: &StoredEnergyField,
    floor: f64,
) -> Option<(Vec<Sector>, SplitChoice)> {
    let (secs, closed) = sectors(mesh, n)?;
    let k = secs.len();
    if k < if closed { 4 } else { 3 } {
        return None;
    }
    let range: Vec<usize> = if closed { (0..k).collect() } else { (1..k - 1).collect() };
    let mut d = d;
    for _ in 0..6 {
        let mut best: Option<SplitChoice> = None;
        for &j in &range {
            if let Some(c) = candidate(mesh, n, &secs, j, d, gamma, energy, floor) {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        c.delta_f < b.delta_f - 1e-15 * b.delta_f.abs()
                            || (c.delta_f <= b.delta_f && secs[c.sector].first < secs[b.sector].first)
                    }
                };
                if better {
                    best = Some(c);
                }
            }
        }
        if let Some(b) = best {
            return Some((secs, b));
        }
        d *= 0.5;
    }
    None
}

/// Detach one sector of `n` onto a new interior node; returns the new node.
pub fn split_junction_once(
    mesh: &mut Mesh,
    n: NodeId,
    d: f64,
    gamma: f64,
    energy: &StoredEnergyField,
    floor: f64,
) -> Option<NodeId> {
    let (secs, choice) = choose_split(mesh, n, d, gamma, energy, floor)?;
    let k = secs.len();
    let s = &secs[choice.sector];
    let prev = secs[(choice.sector + k - 1) % k].label;
    let next = secs[(choice.sector + 1) % k].label;
    let m = mesh.add_node(choice.pos, DomainTag::Interior);
    for &e in &s.elems {
        let mut nodes = mesh.element(e).nodes;
        for x in nodes.iter_mut() {
            if *x == n {
                *x = m;
            }
        }
        mesh.set_element_nodes(e, nodes);
    }
    mesh.add_element([n, s.first, m], prev);
    mesh.add_element([n, m, s.last], next);
    Some(m)
}

/// Repeatedly split `n` until it joins at most three boundaries. Returns the
/// created nodes in order.
pub fn split_multiple_junction(
    mesh: &mut Mesh,
    n: NodeId,
    d: f64,
    gamma: f64,
    energy: &StoredEnergyField,
    floor: f64,
) -> Vec<NodeId> {
    let mut created = Vec::new();
    while needs_split(mesh, n) {
        match split_junction_once(mesh, n, d, gamma, energy, floor) {
            Some(m) => created.push(m),
            None => {
                log::warn!("could not decompose junction at {n}");
                break;
            }
        }
    }
    created
}

/// Whether `n` joins more than three boundaries (domain sides included).
pub fn needs_split(mesh: &Mesh, n: NodeId) -> bool {
    !mesh.tag(n).is_corner() && interface_degree(mesh, n) > 3
}
