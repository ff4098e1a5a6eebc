//! Builders, random generators, and independent oracles shared by the
//! integration suites.
//!
//! Random covers are produced by construction rather than by rejection: a
//! base network is sampled first, then each base node is replicated into a
//! fiber and every copy receives one in-edge per base in-edge with a freely
//! chosen source copy. Every map produced this way is a surjective
//! fibration, so the generators never stall hunting for rare instances.

#![allow(dead_code)]

use netdyn::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

pub fn network(nodes: &[(&str, usize)], edges: &[(&str, &str, &str)]) -> Network {
    let g = DirectedMultigraph::from_parts(
        nodes.iter().map(|(n, _)| NodeId::from(*n)),
        edges
            .iter()
            .map(|(id, s, t)| (EdgeId::from(*id), NodeId::from(*s), NodeId::from(*t))),
    )
    .unwrap();
    let dims = nodes.iter().map(|(n, d)| (NodeId::from(*n), *d)).collect();
    Network::new(g, PhaseSpaces { dims }).unwrap()
}

pub fn node_system(self_dim: usize, input_dims: &[usize], body: &[&str], slots: &[&str]) -> NodeSystem {
    NodeSystem {
        system: OpenSystem::parse(SystemSignature::new(self_dim, input_dims.to_vec()), body)
            .unwrap(),
        slot_edges: slots.iter().map(|e| EdgeId::from(*e)).collect(),
    }
}

pub fn family(entries: Vec<(&str, NodeSystem)>) -> ControlFamily {
    ControlFamily::new(entries.into_iter().map(|(n, s)| (NodeId::from(n), s)).collect())
}

pub fn point(entries: &[(&str, &[f64])]) -> TotalPoint {
    TotalPoint::new(entries.iter().map(|(n, v)| (NodeId::from(*n), v.to_vec())).collect())
}

pub fn morphism(
    dom: &Network,
    cod: &Network,
    nodes: &[(&str, &str)],
    edges: &[(&str, &str)],
) -> NetworkMorphism {
    let m = GraphMorphism::new(
        dom.graph().clone(),
        cod.graph().clone(),
        nodes.iter().map(|(a, b)| (NodeId::from(*a), NodeId::from(*b))).collect(),
        edges.iter().map(|(a, b)| (EdgeId::from(*a), EdgeId::from(*b))).collect(),
    )
    .unwrap();
    NetworkMorphism::new(m, dom.clone(), cod.clone()).unwrap()
}

pub fn fibration_witness(phi: &NetworkMorphism) -> FibrationWitness {
    match phi.morphism().check_fibration() {
        FibrationOutcome::Fibration(w) => w,
        FibrationOutcome::NotFibration(f) => panic!("expected a fibration, got {f:?}"),
    }
}

/// A network on 1..=`max_nodes` nodes with up to `max_edges` edges and
/// dimensions in 1..=`max_dim`.
pub fn random_network(rng: &mut Rng, max_nodes: usize, max_edges: usize, max_dim: usize) -> Network {
    let n = 1 + rng.next_below(max_nodes);
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let m = rng.next_below(max_edges + 1);
    let edges: Vec<(EdgeId, NodeId, NodeId)> = (0..m)
        .map(|i| {
            let s = &names[rng.next_below(n)];
            let t = &names[rng.next_below(n)];
            (EdgeId::from(format!("e{i}").as_str()), NodeId::from(s.as_str()), NodeId::from(t.as_str()))
        })
        .collect();
    let g = DirectedMultigraph::from_parts(names.iter().map(|s| NodeId::from(s.as_str())), edges)
        .unwrap();
    let dims = names
        .iter()
        .map(|s| (NodeId::from(s.as_str()), 1 + rng.next_below(max_dim)))
        .collect();
    Network::new(g, PhaseSpaces { dims }).unwrap()
}

/// Replicate each base node into a fiber of 1..=`max_fiber` copies and give
/// each copy one in-edge per base in-edge with a random source copy. The
/// collapse of copies is a surjective fibration by construction.
pub fn random_cover(rng: &mut Rng, base: &Network, max_fiber: usize) -> (NetworkMorphism, FibrationWitness) {
    let mut fiber_sizes: BTreeMap<&NodeId, usize> = BTreeMap::new();
    for node in base.graph().nodes() {
        fiber_sizes.insert(node, 1 + rng.next_below(max_fiber));
    }
    let copy = |node: &NodeId, i: usize| NodeId::from(format!("{node}_{i}").as_str());

    let mut nodes = Vec::new();
    let mut node_map = BTreeMap::new();
    let mut dims = BTreeMap::new();
    for (node, k) in &fiber_sizes {
        for i in 0..*k {
            let c = copy(node, i);
            nodes.push(c.clone());
            node_map.insert(c.clone(), (*node).clone());
            dims.insert(c, base.dim(node).unwrap());
        }
    }

    let mut edges = Vec::new();
    let mut edge_map = BTreeMap::new();
    for (node, k) in &fiber_sizes {
        for i in 0..*k {
            let tgt = copy(node, i);
            for base_edge in base.graph().in_edges(node) {
                let j = rng.next_below(fiber_sizes[&base_edge.src]);
                let id = EdgeId::from(format!("{}@{}_{i}", base_edge.id, node).as_str());
                edges.push((id.clone(), copy(&base_edge.src, j), tgt.clone()));
                edge_map.insert(id, base_edge.id.clone());
            }
        }
    }

    let g = DirectedMultigraph::from_parts(nodes, edges).unwrap();
    let total = Network::new(g.clone(), PhaseSpaces { dims }).unwrap();
    let m = GraphMorphism::new(g, base.graph().clone(), node_map, edge_map).unwrap();
    let phi = NetworkMorphism::new(m, total, base.clone()).unwrap();
    let witness = fibration_witness(&phi);
    (phi, witness)
}

/// A random expression against `sig` built from sums, differences,
/// products, negation, and bounded functions, so that evaluation at finite
/// points stays finite.
pub fn random_expr(rng: &mut Rng, sig: &SystemSignature, depth: usize) -> Expr {
    let leaf = |rng: &mut Rng| match rng.next_below(3) {
        0 => Expr::Num(rng.next_below(9) as f64 / 2.0),
        1 => Expr::SelfVar(rng.next_below(sig.self_dim)),
        _ => {
            if sig.input_dims.is_empty() {
                Expr::SelfVar(rng.next_below(sig.self_dim))
            } else {
                let slot = rng.next_below(sig.input_dims.len());
                Expr::InputVar { slot, coord: rng.next_below(sig.input_dims[slot]) }
            }
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.next_below(6) {
        0 => Expr::Bin(
            BinOp::Add,
            Box::new(random_expr(rng, sig, depth - 1)),
            Box::new(random_expr(rng, sig, depth - 1)),
        ),
        1 => Expr::Bin(
            BinOp::Sub,
            Box::new(random_expr(rng, sig, depth - 1)),
            Box::new(random_expr(rng, sig, depth - 1)),
        ),
        2 => Expr::Bin(
            BinOp::Mul,
            Box::new(random_expr(rng, sig, depth - 1)),
            Box::new(random_expr(rng, sig, depth - 1)),
        ),
        3 => Expr::Neg(Box::new(random_expr(rng, sig, depth - 1))),
        4 => {
            let f = [Func::Sin, Func::Cos, Func::Tanh][rng.next_below(3)];
            Expr::App(f, Box::new(random_expr(rng, sig, depth - 1)))
        }
        _ => leaf(rng),
    }
}

/// A family for `net` with canonical slot binding (in-edges in id order)
/// and random bodies.
pub fn random_family(rng: &mut Rng, net: &Network) -> ControlFamily {
    let mut systems = BTreeMap::new();
    for node in net.graph().nodes() {
        let slots: Vec<EdgeId> = net.graph().in_edges(node).iter().map(|e| e.id.clone()).collect();
        let input_dims = slots
            .iter()
            .map(|e| net.dim(&net.graph().edge(e).unwrap().src).unwrap())
            .collect();
        let sig = SystemSignature::new(net.dim(node).unwrap(), input_dims);
        let body: Vec<Expr> =
            (0..sig.self_dim).map(|_| random_expr(rng, &sig, 3)).collect();
        let system = OpenSystem::new(sig, body).unwrap();
        systems.insert(node.clone(), NodeSystem { system, slot_edges: slots });
    }
    ControlFamily::new(systems)
}

/// Balance, straight from the definition and independent of the library's
/// refinement code: dimensions constant on blocks, and every node's
/// in-edge source blocks (with multiplicity) equal its representative's.
pub fn is_balanced_oracle(net: &Network, p: &NodePartition) -> bool {
    let profile = |node: &NodeId| -> Vec<usize> {
        let mut blocks: Vec<usize> = net
            .graph()
            .in_edges(node)
            .iter()
            .map(|e| p.block_index(&e.src).unwrap())
            .collect();
        blocks.sort_unstable();
        blocks
    };
    p.blocks().iter().all(|block| {
        let rep = block.iter().next().unwrap();
        let rep_dim = net.dim(rep);
        let rep_profile = profile(rep);
        block
            .iter()
            .all(|node| net.dim(node) == rep_dim && profile(node) == rep_profile)
    })
}

/// All set partitions of `0..k` as restricted-growth strings: `rgs[i]` is
/// the block of element `i`, and each new block number appears only after
/// all smaller ones.
pub fn restricted_growth_strings(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0; k];
    fn go(current: &mut Vec<usize>, pos: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for b in 0..=max_used + 1 {
            current[pos] = b;
            go(current, pos + 1, max_used.max(b), out);
        }
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    go(&mut current, 1, 0, &mut out);
    out
}

/// Every partition of the network's node set.
pub fn all_node_partitions(net: &Network) -> Vec<NodePartition> {
    let nodes: Vec<&NodeId> = net.graph().nodes().collect();
    restricted_growth_strings(nodes.len())
        .into_iter()
        .map(|rgs| {
            let mut blocks: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
            for (i, b) in rgs.iter().enumerate() {
                blocks.entry(*b).or_default().insert(nodes[i].clone());
            }
            NodePartition::new(blocks.into_values().collect()).unwrap()
        })
        .collect()
}

/// Renumber input slots in an expression: `perm[s]` is the new slot index
/// for the old slot `s`.
pub fn remap_slots(e: &Expr, perm: &[usize]) -> Expr {
    match e {
        Expr::InputVar { slot, coord } => Expr::InputVar { slot: perm[*slot], coord: *coord },
        Expr::Neg(inner) => Expr::Neg(Box::new(remap_slots(inner, perm))),
        Expr::Bin(op, l, r) => {
            Expr::Bin(*op, Box::new(remap_slots(l, perm)), Box::new(remap_slots(r, perm)))
        }
        Expr::App(f, arg) => Expr::App(*f, Box::new(remap_slots(arg, perm))),
        other => other.clone(),
    }
}
