//! Node velocities from capillarity and stored-energy differences.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::{rot90, Vec2};
use crate::mesh::{DomainTag, Mesh, NodeId, SurfaceId};
use crate::par::ExecPolicy;
use crate::spline::{implicit_normal_speeds, SplineCurve};
use crate::topology::{Line, NodeClass, Topology};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryProps {
    /// Grain-boundary mobility M.
    pub mobility: f64,
    /// Boundary energy γ.
    pub gamma: f64,
    /// Mobility coupling factor δ for the stored-energy term.
    pub delta: f64,
}

impl BoundaryProps {
    pub fn unit() -> Self {
        BoundaryProps { mobility: 1.0, gamma: 1.0, delta: 1.0 }
    }
}

/// Arrhenius mobility M0·exp(-Q/(R·T)).
pub fn arrhenius_mobility(m0: f64, q: f64, r: f64, t: f64) -> f64 {
    m0 * (-q / (r * t)).exp()
}

/// Stored energy per surface. Missing surfaces and the exterior read as zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StoredEnergyField {
    energies: BTreeMap<SurfaceId, f64>,
}

impl StoredEnergyField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, s: SurfaceId, e: f64) {
        self.energies.insert(s, e);
    }

    pub fn get(&self, s: SurfaceId) -> f64 {
        self.energies.get(&s).copied().unwrap_or(0.0)
    }

    /// E_i - E_j.
    pub fn diff(&self, i: SurfaceId, j: SurfaceId) -> f64 {
        self.get(i) - self.get(j)
    }

    pub fn max_abs(&self) -> f64 {
        self.energies.values().fold(0.0, |m, e| m.max(e.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        StoredEnergyField { energies: self.energies.iter().map(|(k, v)| (*k, v * s)).collect() }
    }
}

pub fn fit_line_spline(line: &Line, mesh: &Mesh) -> Result<SplineCurve> {
    let pts: Vec<Vec2> = line.nodes.iter().map(|&n| mesh.pos(n)).collect();
    SplineCurve::fit(&pts, line.closed)
}

/// Capillarity velocity Mγ·κn of data point `i`, directed toward the center of curvature.
pub fn capillarity_velocity(curve: &SplineCurve, i: usize, props: &BoundaryProps) -> Vec2 {
    curve.curvature_normal(i) * (props.mobility * props.gamma)
}

/// Stored-energy velocity across a boundary with unit tangent `t`; `e_left`
/// is the energy on the left of `t`. Moves toward the higher-energy side.
pub fn stored_energy_velocity(t: &Vec2, e_left: f64, e_right: f64, props: &BoundaryProps) -> Vec2 {
    rot90(t) * (props.mobility * props.delta * (e_left - e_right))
}

/// Junction capillarity from the vectors pointing from the junction to its
/// neighbor on each incident line: Mγ·(2/Σℓ)·Σû.
pub fn junction_capillarity(segments: &[Vec2], props: &BoundaryProps) -> Vec2 {
    let total: f64 = segments.iter().map(|s| s.norm()).sum();
    if total == 0.0 {
        return Vec2::zeros();
    }
    let sum: Vec2 = segments.iter().map(|s| s / s.norm()).sum();
    sum * (props.mobility * props.gamma * 2.0 / total)
}

/// One incident segment of a junction: direction away from the junction and
/// the energies on its left and right.
#[derive(Clone, Copy, Debug)]
pub struct JunctionArm {
    pub dir: Vec2,
    pub e_left: f64,
    pub e_right: f64,
}

/// Half the sum of the per-segment stored-energy velocities.
pub fn junction_stored_energy(arms: &[JunctionArm], props: &BoundaryProps) -> Vec2 {
    arms.iter().map(|a| stored_energy_velocity(&a.dir.normalize(), a.e_left, a.e_right, props)).sum::<Vec2>() * 0.5
}

/// Velocity field indexed by node id.
#[derive(Clone, Debug, Default)]
pub struct Velocities {
    pub v: Vec<Vec2>,
}

impl Velocities {
    pub fn get(&self, n: NodeId) -> Vec2 {
        self.v.get(n.idx()).copied().unwrap_or_else(Vec2::zeros)
    }

    pub fn max_speed(&self) -> f64 {
        self.v.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KineticsInput<'a> {
    pub props: &'a BoundaryProps,
    pub field: &'a StoredEnergyField,
    /// Weight of the capillarity term (1 normally, 0 for vanishing surface tension).
    pub capillarity: f64,
    /// Step length over which the L-node capillarity term is taken implicitly;
    /// zero evaluates it at the current positions.
    pub implicit_dt: f64,
}

/// Arms of the junction at `p`: one per line incidence.
pub fn junction_arms(mesh: &Mesh, topo: &Topology, p: NodeId, field: &StoredEnergyField) -> Vec<(JunctionArm, bool)> {
    let point = &topo.points[&p];
    let mut out = Vec::with_capacity(point.lines.len());
    let mut seen_start: Vec<usize> = Vec::new();
    for &lid in &point.lines {
        let l = &topo.lines[lid];
        // a line looping back to the same point appears twice: first as start, then as end
        let as_start = l.start() == p && !seen_start.contains(&lid);
        if as_start {
            seen_start.push(lid);
        }
        let (q, left, right) =
            if as_start { (l.nodes[1], l.left, l.right) } else { (l.nodes[l.nodes.len() - 2], l.right, l.left) };
        out.push((
            JunctionArm { dir: mesh.pos(q) - mesh.pos(p), e_left: field.get(left), e_right: field.get(right) },
            l.on_domain_boundary(),
        ));
    }
    out
}

fn project_tangential(mesh: &Mesh, n: NodeId, v: Vec2) -> Vec2 {
    match mesh.tag(n) {
        DomainTag::Side(s) => {
            let t = mesh.domain().side_tangent(s);
            t * t.dot(&v)
        }
        DomainTag::Corner(_) => Vec2::zeros(),
        DomainTag::Interior => v,
    }
}

/// Velocity of junction node `p` split into (capillarity, stored energy).
pub fn junction_velocity(mesh: &Mesh, topo: &Topology, p: NodeId, input: &KineticsInput) -> Result<(Vec2, Vec2)> {
    let point = &topo.points[&p];
    if point.corner {
        return Ok((Vec2::zeros(), Vec2::zeros()));
    }
    let arms = junction_arms(mesh, topo, p, input.field);
    if arms.len() < 3 {
        return Err(Error::JunctionDegree { node: p, lines: arms.len() });
    }
    if !point.on_boundary {
        let segs: Vec<Vec2> = arms.iter().map(|(a, _)| a.dir).collect();
        let a: Vec<JunctionArm> = arms.iter().map(|(a, _)| *a).collect();
        return Ok((junction_capillarity(&segs, input.props), junction_stored_energy(&a, input.props)));
    }
    // boundary junction: mirror the interior arms across the domain edge
    let inner: Vec<JunctionArm> = arms.iter().filter(|(_, b)| !*b).map(|(a, _)| *a).collect();
    if inner.is_empty() {
        return Ok((Vec2::zeros(), Vec2::zeros()));
    }
    let segs: Vec<Vec2> = inner.iter().map(|a| a.dir).collect();
    let vc = junction_capillarity(&segs, input.props);
    let ve = junction_stored_energy(&inner, input.props) * 2.0;
    Ok((project_tangential(mesh, p, vc), project_tangential(mesh, p, ve)))
}

/// Velocities of the interior nodes of one line. `ends` holds the velocities
/// of the two end nodes of an open line.
pub fn line_velocities(
    mesh: &Mesh,
    line: &Line,
    input: &KineticsInput,
    ends: (Vec2, Vec2),
) -> Result<Vec<(NodeId, Vec2)>> {
    if line.on_domain_boundary() {
        return Ok(Vec::new());
    }
    let curve = fit_line_spline(line, mesh)?;
    let n = line.nodes.len();
    let p = input.props;
    let drive = p.mobility * p.delta * (input.field.get(line.left) - input.field.get(line.right));
    let cap = input.capillarity * p.mobility * p.gamma;
    // both terms act along rot90(t)
    let normals: Vec<Vec2> = (0..n).map(|i| rot90(&curve.tangent(i))).collect();
    let w0: Vec<f64> = (0..n).map(|i| cap * curve.curvature(i) + drive).collect();
    let range = if line.closed { 0..n } else { 1..n - 1 };
    let c = cap * input.implicit_dt;
    let w = if c > 0.0 {
        let segs = if line.closed { n } else { n - 1 };
        let h: Vec<f64> = (0..segs).map(|i| curve.knot(i + 1) - curve.knot(i)).collect();
        let ends = if line.closed { (0.0, 0.0) } else { (ends.0.dot(&normals[1]), ends.1.dot(&normals[n - 2])) };
        implicit_normal_speeds(&h, &w0, c, line.closed, ends)
    } else {
        w0
    };
    Ok(range.map(|i| (line.nodes[i], normals[i] * w[i])).collect())
}

/// Full velocity pass over all L- and P-nodes.
pub fn compute_velocities(
    mesh: &Mesh,
    topo: &Topology,
    input: &KineticsInput,
    policy: ExecPolicy,
) -> Result<Velocities> {
    let mut v = vec![Vec2::zeros(); mesh.node_capacity()];
    let pts: Vec<NodeId> = topo.points.keys().copied().collect();
    let per_point = policy.map(&pts, |&p| junction_velocity(mesh, topo, p, input));
    for (p, r) in pts.iter().zip(per_point) {
        let (vc, ve) = r?;
        v[p.idx()] = vc * input.capillarity + ve;
    }
    let per_line = policy.map(&topo.lines, |l| {
        let ends = (v[l.start().idx()], v[l.end().idx()]);
        line_velocities(mesh, l, input, ends)
    });
    for r in per_line {
        for (n, vel) in r? {
            v[n.idx()] = vel;
        }
    }
    // L-nodes on the domain boundary and all S-nodes stay at rest
    debug_assert!(mesh.node_ids().all(|n| topo.class(n) != NodeClass::S || v[n.idx()] == Vec2::zeros()));
    Ok(Velocities { v })
}
