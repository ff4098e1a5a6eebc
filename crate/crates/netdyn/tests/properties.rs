//! Randomized structural laws: parser round-trips, contravariant
//! functoriality of pullbacks, slot-binding invariance, and quotient
//! correctness against brute-force oracles.

mod common;

use common::*;
use netdyn::prelude::*;
use netdyn::sample::Rng;
use proptest::prelude::*;

fn arb_func() -> impl Strategy<Value = Func> {
    prop_oneof![
        Just(Func::Sin),
        Just(Func::Cos),
        Just(Func::Tan),
        Just(Func::Tanh),
        Just(Func::Exp),
        Just(Func::Log),
        Just(Func::Sqrt),
        Just(Func::Abs),
    ]
}

fn arb_binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div),
        Just(BinOp::Pow),
    ]
}

/// Any printable expression: finite non-negative literals (negative values
/// are spelled with unary minus), arbitrary indices and parameter names.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..4096).prop_map(|n| Expr::Num(n as f64 / 16.0)),
        (0usize..4).prop_map(Expr::SelfVar),
        (0usize..4, 0usize..4).prop_map(|(slot, coord)| Expr::InputVar { slot, coord }),
        "[a-z][a-z0-9_]{0,6}".prop_map(Expr::Param),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            (arb_binop(), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::Bin(op, Box::new(l), Box::new(r))),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (arb_func(), inner).prop_map(|(f, e)| Expr::App(f, Box::new(e))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    #[test]
    fn printing_then_parsing_returns_the_same_ast(e in arb_expr()) {
        let text = print(&e);
        let back = parse(&text).unwrap_or_else(|err| panic!("{text:?}: {err}"));
        prop_assert_eq!(back, e);
    }
}

/// A two-storey tower of random covers over a random base.
fn random_tower(seed: u64) -> (NetworkMorphism, NetworkMorphism) {
    let mut rng = Rng::new(seed);
    let base = random_network(&mut rng, 3, 4, 3);
    let (psi, _) = random_cover(&mut rng, &base, 2);
    let (phi, _) = random_cover(&mut rng, psi.domain(), 2);
    (phi, psi)
}

#[test]
fn point_pullback_is_contravariantly_functorial() {
    for i in 0..100u64 {
        let (phi, psi) = random_tower(1000 + i);
        let composite = NetworkMorphism::new(
            phi.morphism().then(psi.morphism()).unwrap(),
            phi.domain().clone(),
            psi.codomain().clone(),
        )
        .unwrap();
        let mut rng = Rng::new(5000 + i);
        for _ in 0..5 {
            let x = psi.codomain().sample_point(&mut rng);
            let two_step = phi.pullback_point(&psi.pullback_point(&x).unwrap()).unwrap();
            assert_eq!(composite.pullback_point(&x).unwrap(), two_step);
        }
    }
}

#[test]
fn family_pullback_composes_along_towers() {
    for i in 0..50u64 {
        let (phi, psi) = random_tower(2000 + i);
        let composite = NetworkMorphism::new(
            phi.morphism().then(psi.morphism()).unwrap(),
            phi.domain().clone(),
            psi.codomain().clone(),
        )
        .unwrap();
        let phi_w = fibration_witness(&phi);
        let psi_w = fibration_witness(&psi);
        let composite_w = fibration_witness(&composite);

        let mut rng = Rng::new(7000 + i);
        let base_family = random_family(&mut rng, psi.codomain());
        let one_step = pullback_family(&composite, &composite_w, &base_family).unwrap();
        let two_step = pullback_family(
            &phi,
            &phi_w,
            &pullback_family(&psi, &psi_w, &base_family).unwrap(),
        )
        .unwrap();
        assert_eq!(one_step, two_step);
    }
}

#[test]
fn interconnection_depends_on_sources_not_slot_numbering() {
    let mut tried = 0;
    for i in 0..60u64 {
        let mut rng = Rng::new(3000 + i);
        let net = random_network(&mut rng, 4, 6, 2);
        let family = random_family(&mut rng, &net);
        let Some(node) = net
            .graph()
            .nodes()
            .find(|n| net.graph().in_edges(n).len() >= 2)
            .cloned()
        else {
            continue;
        };
        tried += 1;

        let mut swapped = family.clone();
        {
            let ns = swapped.systems.get_mut(&node).unwrap();
            let k = ns.slot_edges.len();
            let mut perm: Vec<usize> = (0..k).collect();
            perm.swap(0, 1);
            ns.slot_edges.swap(0, 1);
            let mut input_dims = ns.system.signature().input_dims.clone();
            input_dims.swap(0, 1);
            let sig = SystemSignature::new(ns.system.signature().self_dim, input_dims)
                .with_parameters(ns.system.signature().parameters.clone());
            let body: Vec<Expr> =
                ns.system.body().iter().map(|b| remap_slots(b, &perm)).collect();
            ns.system = OpenSystem::new(sig, body).unwrap();
        }

        let f0 = InterconnectedField::new(net.clone(), family).unwrap();
        let f1 = InterconnectedField::new(net.clone(), swapped).unwrap();
        for _ in 0..10 {
            let x = net.sample_point(&mut rng);
            assert_eq!(f0.eval(&x).unwrap(), f1.eval(&x).unwrap());
        }
    }
    assert!(tried >= 20, "only {tried} sampled networks had a two-input node");
}

#[test]
fn coarsest_partition_is_balanced_and_quotients_cleanly() {
    for i in 0..60u64 {
        let mut rng = Rng::new(4000 + i);
        let net = random_network(&mut rng, 8, 12, 2);
        let p = coarsest_balanced_partition(&net, None).unwrap();
        assert!(is_balanced_oracle(&net, &p), "refinement output unbalanced on seed {i}");
        let qr = quotient_network(&net, &p)
            .unwrap_or_else(|e| panic!("balanced partition refused on seed {i}: {e}"));
        // The stored witness is exactly the unique-lift data of the projection.
        assert_eq!(fibration_witness(&qr.projection), qr.witness);
    }
}

#[test]
fn no_balanced_partition_is_coarser_than_the_computed_one() {
    for i in 0..40u64 {
        let mut rng = Rng::new(6000 + i);
        let net = random_network(&mut rng, 6, 8, 2);
        let p = coarsest_balanced_partition(&net, None).unwrap();
        for q in all_node_partitions(&net) {
            if is_balanced_oracle(&net, &q) {
                assert!(
                    q.refines(&p),
                    "seed {i}: balanced {q:?} does not refine computed {p:?}"
                );
            }
        }
    }
}

#[test]
fn pushforward_inverts_pullback_along_quotients() {
    for i in 0..30u64 {
        let mut rng = Rng::new(8000 + i);
        let net = random_network(&mut rng, 6, 8, 2);
        let p = coarsest_balanced_partition(&net, None).unwrap();
        let qr = quotient_network(&net, &p).unwrap();
        let base_family = random_family(&mut rng, &qr.base);
        let lifted = pullback_family(&qr.projection, &qr.witness, &base_family).unwrap();
        let descended = pushforward_family(&qr, &lifted, 32, 1e-9, 9000 + i).unwrap();
        assert_eq!(descended, base_family);
    }
}
