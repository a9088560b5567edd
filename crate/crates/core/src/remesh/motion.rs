use crate::geom::Vec2;
use crate::kinetics::Velocities;
use crate::mesh::{DomainTag, Mesh, NodeId};

/// Maximum number of halvings before a node is frozen for the step.
pub const MAX_HALVINGS: u32 = 10;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdvanceReport {
    /// Nodes that moved, in id order.
    pub moved: Vec<NodeId>,
    /// Nodes that could not move at all.
    pub frozen: Vec<NodeId>,
    /// Nodes that moved less than requested.
    pub halved: usize,
}

/// Displacement actually allowed for node `n` under the domain constraints.
fn constrained_target(mesh: &Mesh, n: NodeId, disp: Vec2) -> Option<Vec2> {
    let p = mesh.pos(n);
    match mesh.tag(n) {
        DomainTag::Interior => Some(p + disp),
        DomainTag::Corner(_) => None,
        DomainTag::Side(s) => {
            let t = mesh.domain().side_tangent(s);
            let (a, b) = mesh.domain().side(s);
            let margin = 1e-9 * (b - a).norm();
            Some(mesh.domain().clamp_to_side(s, &(p + t * t.dot(&disp)), margin))
        }
    }
}

/// Move every node by `v·dt`, halving the displacement of a node until none
/// of its elements drops below `min_area`. Nodes are processed in id order.
pub fn advance_nodes(mesh: &mut Mesh, vel: &Velocities, dt: f64, min_area: f64) -> AdvanceReport {
    let mut rep = AdvanceReport::default();
    let ids: Vec<NodeId> = mesh.node_ids().collect();
    for n in ids {
        let v = vel.get(n);
        if v == Vec2::zeros() {
            continue;
        }
        let Some(full) = constrained_target(mesh, n, v * dt) else {
            continue;
        };
        let p = mesh.pos(n);
        let disp = full - p;
        if disp == Vec2::zeros() {
            continue;
        }
        let mut accepted = None;
        for k in 0..=MAX_HALVINGS {
            let target = p + disp / f64::from(1u32 << k);
            if mesh.star_valid_at(n, &target, min_area) {
                accepted = Some((k, target));
                break;
            }
        }
        match accepted {
            Some((k, target)) => {
                mesh.set_pos(n, target);
                rep.moved.push(n);
                if k > 0 {
                    rep.halved += 1;
                }
            }
            None => {
                log::warn!("node {n} frozen: no admissible displacement after {MAX_HALVINGS} halvings");
                rep.frozen.push(n);
            }
        }
    }
    rep
}
