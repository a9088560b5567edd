//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use grainfront::geom::{vec2, Vec2};
use grainfront::kinetics::StoredEnergyField;
use grainfront::mesh::{Domain, ElemId, Mesh, NodeId, SurfaceId};
use grainfront::remesh::junction::{needs_split, split_multiple_junction};
use grainfront::remesh::ops::{
    collapse_edge, plan_collapse, smooth_l_node, smooth_s_node, split_edge, split_pinched_labels, swap_edge,
};
use grainfront::remesh::CollapseMode;
use grainfront::topology::{self, build, validate, NodeClass};
use rand::{Rng, RngExt};

/// Unit-cell grid on `[0,nx]x[0,ny]`, each cell cut along its `/` diagonal.
/// `label(i, j, upper)` names the grain of the upper-left (`upper`) or
/// lower-right triangle of cell `(i, j)`. Returns the mesh and the node ids
/// indexed `[i][j]`.
pub fn grid(nx: usize, ny: usize, label: impl Fn(usize, usize, bool) -> u32) -> (Mesh, Vec<Vec<NodeId>>) {
    let mut mesh = Mesh::new(Domain::rectangle(nx as f64, ny as f64));
    let d = mesh.domain().clone();
    let mut ids = vec![Vec::new(); nx + 1];
    for (i, col) in ids.iter_mut().enumerate() {
        for j in 0..=ny {
            let p = vec2(i as f64, j as f64);
            col.push(mesh.add_node(p, d.tag_for(&p, 1e-9)));
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            let (a, b, c, e) = (ids[i][j], ids[i + 1][j], ids[i + 1][j + 1], ids[i][j + 1]);
            mesh.add_element([a, b, c], SurfaceId(label(i, j, false)));
            mesh.add_element([a, c, e], SurfaceId(label(i, j, true)));
        }
    }
    (mesh, ids)
}

/// Grid with random blob labels (nearest of `k` random seeds) and interior
/// nodes jittered by up to 0.15 of a cell.
pub fn fuzzed_grid<R: Rng>(rng: &mut R, nx: usize, ny: usize, k: usize) -> Mesh {
    let seeds: Vec<Vec2> =
        (0..k).map(|_| vec2(rng.random::<f64>() * nx as f64, rng.random::<f64>() * ny as f64)).collect();
    let nearest =
        |p: Vec2| (0..k).min_by(|&a, &b| (seeds[a] - p).norm().total_cmp(&(seeds[b] - p).norm())).unwrap() as u32;
    let (mut mesh, ids) = grid(nx, ny, |i, j, upper| {
        let c = if upper {
            vec2(i as f64 + 1.0 / 3.0, j as f64 + 2.0 / 3.0)
        } else {
            vec2(i as f64 + 2.0 / 3.0, j as f64 + 1.0 / 3.0)
        };
        nearest(c)
    });
    for col in &ids {
        for &n in col {
            if !mesh.tag(n).on_boundary() {
                let p = mesh.pos(n) + vec2(rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15));
                mesh.set_pos(n, p);
            }
        }
    }
    // blobs need not be connected; give every piece its own label
    let mut comps: Vec<Vec<ElemId>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for e in mesh.element_ids() {
        if seen.insert(e) {
            let comp = topology::flood_identify_surface(&mesh, e, |a, b| mesh.is_interface_edge(a, b));
            seen.extend(comp.iter().copied());
            comps.push(comp);
        }
    }
    for (label, comp) in comps.iter().enumerate() {
        for &x in comp {
            mesh.set_surface(x, SurfaceId(label as u32));
        }
    }
    mesh
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Split,
    Swap,
    Collapse,
    SmoothS,
    SmoothL,
    JunctionSplit,
}

pub const OPS: [Op; 6] = [Op::Split, Op::Swap, Op::Collapse, Op::SmoothS, Op::SmoothL, Op::JunctionSplit];

/// Invariant checks after one operator: positive element areas, total area
/// equal to the domain area within 1e-9, and a topology that rebuilds and
/// validates. Returns a description of the first violation.
pub fn check(mesh: &Mesh) -> Result<(), String> {
    for (e, _) in mesh.elements() {
        if mesh.signed_area(e) <= 0.0 {
            return Err(format!("{e} inverted"));
        }
    }
    let dom = mesh.domain().area();
    let rel = ((mesh.total_area() - dom) / dom).abs();
    if rel > 1e-9 {
        return Err(format!("area drift {rel:e}"));
    }
    let topo = topology::build(mesh).map_err(|e| e.to_string())?;
    topology::validate(mesh, &topo).into_result().map_err(|e| e.to_string())
}

/// Apply one randomly chosen operator at a random site of a mesh with edge
/// length about `h`. Returns the operator and whether it changed the mesh.
/// Operator refusals are not failures.
pub fn random_op<R: Rng>(rng: &mut R, mesh: &mut Mesh, next_surface: &mut u32, h: f64) -> (Op, bool) {
    let floor = 1e-10 * h * h;
    let op = OPS[rng.random_range(0..OPS.len())];
    let edges = mesh.edges();
    let nodes: Vec<NodeId> = mesh.node_ids().collect();
    let changed = match op {
        Op::Split => {
            let (a, b) = edges[rng.random_range(0..edges.len())];
            // keep the mesh from growing without bound
            mesh.edge_length(a, b) > 0.3 * h && split_edge(mesh, a, b, None, floor).is_ok()
        }
        Op::Swap => {
            let (a, b) = edges[rng.random_range(0..edges.len())];
            swap_edge(mesh, a, b, floor, false)
        }
        Op::Collapse => {
            let (a, b) = edges[rng.random_range(0..edges.len())];
            match collapse_edge(mesh, a, b, CollapseMode::SeGeneral, floor) {
                Ok(res) => {
                    split_pinched_labels(mesh, res.survivor, next_surface);
                    true
                }
                Err(_) => false,
            }
        }
        Op::SmoothS => {
            let n = nodes[rng.random_range(0..nodes.len())];
            smooth_s_node(mesh, n, rng.random_range(0.1..1.0), floor, false)
        }
        Op::SmoothL => {
            let n = nodes[rng.random_range(0..nodes.len())];
            smooth_l_node(mesh, n, rng.random_range(0.1..1.0), 0.0, floor)
        }
        Op::JunctionSplit => {
            let cand: Vec<NodeId> = nodes.iter().copied().filter(|&n| needs_split(mesh, n)).collect();
            match cand.get(rng.random_range(0..cand.len().max(1))) {
                Some(&n) => {
                    !split_multiple_junction(mesh, n, 0.1 * h, 1.0, &StoredEnergyField::new(), floor).is_empty()
                }
                None => false,
            }
        }
    };
    (op, changed)
}

/// Root of x²·(−ln(1 − x·k2/k1)) = num on (0, k1/k2) by bisection. The left
/// side increases monotonically from 0 to infinity on that interval.
pub fn critical_density_bisection(num: f64, k1: f64, k2: f64) -> f64 {
    let f = |x: f64| x * x * -(1.0 - x * k2 / k1).ln() - num;
    let (mut lo, mut hi) = (0.0, k1 / k2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// 304L-like critical density inputs with every parameter scaled by a
/// log-uniform factor in [1/3, 3]. Only sets whose root lies below the
/// iteration cap are returned.
pub fn random_critical_input<R: Rng>(rng: &mut R) -> grainfront::rex::laws::CriticalDensityInput {
    use grainfront::rex::laws::CriticalDensityInput;
    let mut scale = |v: f64| v * 3f64.powf(rng.random_range(-1.0..1.0));
    loop {
        let input = CriticalDensityInput {
            b_dim: 1.0,
            gamma: scale(6e-7),
            rate: scale(0.03),
            k1: scale(1.3e9),
            k2: scale(8.0),
            mobility: scale(2.4),
            delta: scale(1.5),
            tau: scale(1.28e-12),
            convergence: scale(0.1).min(1.0),
        };
        let root = critical_density_bisection(input.numerator(), input.k1, input.k2);
        if root < 0.99 * input.cap() {
            return input;
        }
    }
}

const FIXTURE_FLOOR: f64 = 1e-12;

pub const A: u32 = 0;
pub const B: u32 = 1;
pub const C: u32 = 2;

/// Grains A (left) and B (right) with a wedge of C reaching up from the
/// bottom side to the junction at (2,2). Its tip element is (1,1),(2,1),(2,2).
pub fn wedge() -> (Mesh, Vec<Vec<NodeId>>) {
    grid(4, 4, |i, j, upper| match (i, j, upper) {
        (1, 1, false) | (1, 0, _) => C,
        (i, _, _) if i < 2 => A,
        _ => B,
    })
}

/// First override case: a collapse that demotes the old junction, checked step
/// by step. Panics on the first mismatch.
pub fn override_1_fixture() {
    let (mut mesh, ids) = wedge();
    let (ni, nj, nk) = (ids[1][1], ids[2][1], ids[2][2]);
    let topo = build(&mesh).unwrap();
    assert_eq!(topo.class(ni), NodeClass::L);
    assert_eq!(topo.class(nj), NodeClass::L);
    assert_eq!(topo.class(nk), NodeClass::P { corner: false });
    assert!(!mesh.is_interface_edge(ni, nj));
    assert_eq!(topo.points[&nk].lines.len(), 3);

    // the two nodes lie on different boundaries: refused by the strict rules
    assert!(plan_collapse(&mesh, nj, ni, CollapseMode::GgStrict).is_err());

    let res = collapse_edge(&mut mesh, nj, ni, CollapseMode::SeGeneral, FIXTURE_FLOOR).unwrap();
    assert_eq!(res.survivor, ni);
    assert!(res.non_consecutive);
    assert!(res.vanished.is_empty());
    assert!((mesh.pos(ni) - vec2(1.5, 1.0)).norm() < 1e-15);

    let topo = build(&mesh).unwrap();
    assert!(validate(&mesh, &topo).passed());
    assert_eq!(topo.class(ni), NodeClass::P { corner: false });
    assert_eq!(topo.class(nk), NodeClass::L);
    assert!(!topo.points.contains_key(&nk));

    // N_k now sits inside the A|B line, which ends at N_i
    let l = &topo.lines[topo.line_of(nk).unwrap()];
    assert!(l.nodes.contains(&nk) && l.start() != nk && l.end() != nk);
    assert!(l.start() == ni || l.end() == ni);
    let mut sides = [l.left.0, l.right.0];
    sides.sort();
    assert_eq!(sides, [A, B]);

    // every line that ended at N_k now ends at N_i
    let pi = &topo.points[&ni];
    assert_eq!(pi.lines.len(), 3);
    let mut pairs: Vec<[u32; 2]> = pi
        .lines
        .iter()
        .map(|&l| {
            let mut p = [topo.lines[l].left.0, topo.lines[l].right.0];
            p.sort();
            p
        })
        .collect();
    pairs.sort();
    assert_eq!(pairs, vec![[A, B], [A, C], [B, C]]);
}

pub const TOP: u32 = 0;
pub const G: u32 = 1;
pub const BOT: u32 = 2;

/// Grain G is a horizontal band with a notch of TOP biting into it at
/// cell (2,2), leaving a one-cell neck between (2,1) and (2,2).
pub fn neck() -> (Mesh, Vec<Vec<NodeId>>) {
    grid(6, 4, |i, j, _| match (i, j) {
        (_, 0) => BOT,
        (2, 2) | (_, 3) => TOP,
        _ => G,
    })
}

/// Second override case: a collapse that splits a grain and keeps the
/// junction. Panics on the first mismatch.
pub fn override_2_fixture() {
    let (mut mesh, ids) = neck();
    let (ni, na, nb, nd) = (ids[2][2], ids[2][1], ids[3][2], ids[1][1]);
    let topo = build(&mesh).unwrap();
    for n in [ni, na, nb, nd] {
        assert_eq!(topo.class(n), NodeClass::L, "{n}");
    }
    assert_eq!(topo.surfaces.len(), 3);

    let res = collapse_edge(&mut mesh, na, ni, CollapseMode::SeGeneral, FIXTURE_FLOOR).unwrap();
    assert_eq!(res.survivor, ni);
    assert!(res.non_consecutive);
    let mid = vec2(2.0, 1.5);
    assert!((mesh.pos(ni) - mid).norm() < 1e-15);

    // the collapse pinched G in two
    let mut next = 3;
    let splits = split_pinched_labels(&mut mesh, ni, &mut next);
    assert_eq!(splits, vec![(SurfaceId(G), SurfaceId(3))]);
    let topo = build(&mesh).unwrap();
    assert!(validate(&mesh, &topo).passed());
    assert_eq!(topo.surfaces.len(), 4);
    assert_eq!(topo.class(ni), NodeClass::P { corner: false });
    // the smaller piece (left of the neck) got the new label
    assert!(mesh.elements().filter(|(_, e)| e.surface == SurfaceId(3)).all(|(e, _)| mesh.centroid(e).x < 2.0));
    assert_eq!(mesh.surface_count(SurfaceId(3)), 7);

    // later collapses into the junction leave it where it is
    for n in [nb, nd] {
        assert_eq!(topo.class(n), NodeClass::L);
        for (s, t) in [(n, ni), (ni, n)] {
            let plan = plan_collapse(&mesh, s, t, CollapseMode::SeGeneral).unwrap();
            assert_eq!(plan.survivor, ni);
            assert!(!plan.non_consecutive);
            assert_eq!(plan.pos, mid);
        }
    }
    for n in [nb, nd] {
        collapse_edge(&mut mesh, n, ni, CollapseMode::SeGeneral, FIXTURE_FLOOR).unwrap();
        assert_eq!(mesh.pos(ni), mid);
        let topo = build(&mesh).unwrap();
        assert!(validate(&mesh, &topo).passed());
        assert!(topo.class(ni).is_p());
    }
}
