mod common;

use grainfront::geom::vec2;
use grainfront::microgen::{generate, GeneratorSpec, Preset};
use grainfront::remesh::ops::{plan_collapse, split_edge};
use grainfront::remesh::CollapseMode;
use grainfront::topology::{build, validate, NodeClass};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{check, fuzzed_grid, grid, neck, override_1_fixture, override_2_fixture, random_op, wedge, A, B};

const FLOOR: f64 = 1e-12;

#[test]
fn override_1_collapse_demotes_old_junction() {
    override_1_fixture();
}

#[test]
fn override_2_collapse_splits_grain_then_keeps_junction() {
    override_2_fixture();
}

#[test]
fn strict_mode_rejects_the_neck_collapse() {
    let (mesh, ids) = neck();
    assert!(plan_collapse(&mesh, ids[2][1], ids[2][2], CollapseMode::GgStrict).is_err());
}

#[test]
fn collapse_rules_by_class() {
    let (mesh, ids) = wedge();
    // S into L: the L-node stays put
    let (s, l) = (ids[1][2], ids[1][1]);
    let topo = build(&mesh).unwrap();
    assert_eq!(topo.class(s), NodeClass::S);
    let p = plan_collapse(&mesh, s, l, CollapseMode::GgStrict).unwrap();
    assert_eq!((p.survivor, p.pos), (l, mesh.pos(l)));
    let p = plan_collapse(&mesh, l, s, CollapseMode::GgStrict).unwrap();
    assert_eq!((p.survivor, p.pos), (l, mesh.pos(l)));
    // consecutive L into P: the P-node stays put
    let (l, pk) = (ids[1][1], ids[2][2]);
    assert!(mesh.is_interface_edge(l, pk));
    let p = plan_collapse(&mesh, l, pk, CollapseMode::GgStrict).unwrap();
    assert_eq!((p.survivor, p.pos), (pk, mesh.pos(pk)));
    // a domain corner outranks everything
    let (corner, nb) = (ids[0][0], ids[1][1]);
    let p = plan_collapse(&mesh, corner, nb, CollapseMode::SeGeneral).unwrap();
    assert_eq!(p.survivor, corner);
}

#[test]
fn interface_split_lies_on_the_interpolated_boundary() {
    // straight interface: the inserted node stays on it
    let (mut mesh, ids) = grid(4, 2, |i, _, _| if i < 2 { A } else { B });
    let (a, b) = (ids[2][0], ids[2][1]);
    let n = split_edge(&mut mesh, a, b, None, FLOOR).unwrap();
    assert!((mesh.pos(n) - vec2(2.0, 0.5)).norm() < 1e-14);
    let topo = build(&mesh).unwrap();
    assert!(validate(&mesh, &topo).passed());
    assert_eq!(topo.class(n), NodeClass::L);
}

#[test]
fn domain_side_split_is_tagged_on_the_side() {
    let (mut mesh, ids) = grid(2, 2, |_, _, _| A);
    let n = split_edge(&mut mesh, ids[0][0], ids[1][0], None, FLOOR).unwrap();
    assert!(mesh.tag(n).on_boundary());
    assert!(check(&mesh).is_ok());
}

#[test]
fn fuzzed_grids_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let m = fuzzed_grid(&mut rng, 8, 6, 6);
        check(&m).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_operators_keep_grid_meshes_valid(seed in any::<u64>(), k in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mesh = fuzzed_grid(&mut rng, 8, 6, k);
        let mut next = 1000;
        for i in 0..300 {
            let (op, changed) = random_op(&mut rng, &mut mesh, &mut next, 1.0);
            if changed {
                if let Err(e) = check(&mesh) {
                    prop_assert!(false, "op {i} {op:?}: {e}");
                }
            }
        }
    }

    #[test]
    fn random_operators_keep_voronoi_meshes_valid(seed in any::<u64>()) {
        let spec = GeneratorSpec {
            domain: [1.0, 0.8],
            h: 0.08,
            preset: Preset::LaguerreVoronoi { n: 8, seed, radius_min: 0.0, radius_max: 0.0, rho: 0.0 },
        };
        let mut mesh = generate(&spec).unwrap().mesh;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = 1000;
        for i in 0..300 {
            let (op, changed) = random_op(&mut rng, &mut mesh, &mut next, 0.08);
            if changed {
                if let Err(e) = check(&mesh) {
                    prop_assert!(false, "op {i} {op:?}: {e}");
                }
            }
        }
    }
}
