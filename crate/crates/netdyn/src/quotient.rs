//! Coarsest balanced partitions and minimal quotient networks.
//!
//! A node partition is *balanced* when every node's in-edges can be matched
//! with its block representative's in-edges so that matched edges have
//! sources in the same block. Exactly then does collapsing each block to a
//! single node produce a graph the projection fibers over, so balanced
//! partitions are the same thing as surjective fibration quotients.
//!
//! The coarsest balanced partition is found by colour refinement: start from
//! phase-space dimensions (optionally intersected with a caller-supplied
//! partition) and repeatedly recolour each node by its own colour together
//! with the multiset of colours of its in-edge sources, counted with
//! multiplicity. Blocks only ever split, so the loop stops after at most as
//! many rounds as there are nodes.

use crate::graph::{Edge, EdgeId, FibrationOutcome, FibrationWitness, GraphMorphism, NodeId};
use crate::network::{Network, NetworkError, NetworkMorphism, PhaseSpaces};
use crate::system::{family_consistency, ConsistencyReport, ControlFamily, SystemError};
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuotientError {
    #[error("partition contains an empty block")]
    EmptyBlock,
    #[error("node {0} appears in more than one block")]
    OverlappingBlocks(NodeId),
    #[error("partition does not cover the node set: missing {missing:?}, extraneous {extraneous:?}")]
    CoverageMismatch { missing: Vec<NodeId>, extraneous: Vec<NodeId> },
    #[error("block of {representative} mixes dimensions: {representative} has {rep_dim}, {node} has {node_dim}")]
    DimsNotConstant { representative: NodeId, rep_dim: usize, node: NodeId, node_dim: usize },
    #[error("partition is not balanced: {node} and its representative {representative} have in-edge source blocks that cannot be matched")]
    NotBalanced { representative: NodeId, node: NodeId },
    #[error("family does not descend: nodes {:?} disagree (deviation {})",
        .0.worst.as_ref().map(|w| w.nodes.clone()),
        .0.max_deviation)]
    Inconsistent(ConsistencyReport),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Disjoint non-empty blocks of node ids. Blocks are kept sorted by their
/// smallest member, so equal partitions compare equal structurally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePartition {
    blocks: Vec<BTreeSet<NodeId>>,
    index: BTreeMap<NodeId, usize>,
}

impl NodePartition {
    pub fn new(mut blocks: Vec<BTreeSet<NodeId>>) -> Result<Self, QuotientError> {
        if blocks.iter().any(BTreeSet::is_empty) {
            return Err(QuotientError::EmptyBlock);
        }
        blocks.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
        let mut index = BTreeMap::new();
        for (i, block) in blocks.iter().enumerate() {
            for node in block {
                if index.insert(node.clone(), i).is_some() {
                    return Err(QuotientError::OverlappingBlocks(node.clone()));
                }
            }
        }
        Ok(NodePartition { blocks, index })
    }

    pub fn discrete<I: IntoIterator<Item = NodeId>>(nodes: I) -> Self {
        let blocks = nodes.into_iter().map(|n| BTreeSet::from([n])).collect();
        NodePartition::new(blocks).expect("singleton blocks are disjoint and non-empty")
    }

    pub fn blocks(&self) -> &[BTreeSet<NodeId>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_index(&self, node: &NodeId) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub fn block_of(&self, node: &NodeId) -> Option<&BTreeSet<NodeId>> {
        self.block_index(node).map(|i| &self.blocks[i])
    }

    /// Smallest member of the node's block; doubles as the block's name.
    pub fn representative(&self, node: &NodeId) -> Option<&NodeId> {
        self.block_of(node).map(|b| b.iter().next().unwrap())
    }

    pub fn same_block(&self, a: &NodeId, b: &NodeId) -> bool {
        match (self.block_index(a), self.block_index(b)) {
            (Some(i), Some(j)) => i == j,
            _ => false,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.index.keys()
    }

    /// True when every block of `self` sits inside a block of `coarser`.
    pub fn refines(&self, coarser: &NodePartition) -> bool {
        self.blocks.iter().all(|block| {
            let mut members = block.iter();
            let first = members.next().unwrap();
            match coarser.block_of(first) {
                Some(target) => members.all(|n| target.contains(n)),
                None => false,
            }
        })
    }

    fn check_covers(&self, net: &Network) -> Result<(), QuotientError> {
        let missing: Vec<NodeId> = net
            .graph()
            .nodes()
            .filter(|n| !self.index.contains_key(*n))
            .cloned()
            .collect();
        let extraneous: Vec<NodeId> = self
            .index
            .keys()
            .filter(|n| !net.graph().has_node(n))
            .cloned()
            .collect();
        if missing.is_empty() && extraneous.is_empty() {
            Ok(())
        } else {
            Err(QuotientError::CoverageMismatch { missing, extraneous })
        }
    }

    fn from_colors(colors: &BTreeMap<NodeId, usize>) -> NodePartition {
        let mut by_color: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
        for (node, color) in colors {
            by_color.entry(*color).or_default().insert(node.clone());
        }
        NodePartition::new(by_color.into_values().collect())
            .expect("colour classes are disjoint and non-empty")
    }
}

/// One refinement pass after another until the partition stops splitting.
/// Returns the stable colouring and the number of passes taken.
fn refine(net: &Network, mut colors: BTreeMap<NodeId, usize>) -> (BTreeMap<NodeId, usize>, usize) {
    let mut rounds = 0;
    loop {
        let mut signatures: BTreeMap<&NodeId, (usize, Vec<usize>)> = BTreeMap::new();
        for node in net.graph().nodes() {
            let mut sources: Vec<usize> = net
                .graph()
                .in_edges(node)
                .iter()
                .map(|e| colors[&e.src])
                .collect();
            sources.sort_unstable();
            signatures.insert(node, (colors[node], sources));
        }
        let mut ids: BTreeMap<&(usize, Vec<usize>), usize> = BTreeMap::new();
        for sig in signatures.values() {
            let next = ids.len();
            ids.entry(sig).or_insert(next);
        }
        rounds += 1;
        if ids.len() == colors.values().collect::<BTreeSet<_>>().len() {
            // No class split, so the colouring is stable.
            return (colors, rounds);
        }
        colors = signatures
            .iter()
            .map(|(node, sig)| ((*node).clone(), ids[sig]))
            .collect();
    }
}

/// The coarsest partition that refines phase-space dimensions (and `initial`,
/// if given) and is balanced. Every balanced partition refining the same
/// data refines the result.
pub fn coarsest_balanced_partition(
    net: &Network,
    initial: Option<&NodePartition>,
) -> Result<NodePartition, QuotientError> {
    if let Some(p) = initial {
        p.check_covers(net)?;
    }
    if net.graph().node_count() == 0 {
        return Ok(NodePartition { blocks: Vec::new(), index: BTreeMap::new() });
    }
    let keys: BTreeMap<&NodeId, (usize, usize)> = net
        .graph()
        .nodes()
        .map(|n| {
            let block = initial.map(|p| p.block_index(n).unwrap()).unwrap_or(0);
            (n, (net.dim(n).unwrap(), block))
        })
        .collect();
    let mut ids: BTreeMap<&(usize, usize), usize> = BTreeMap::new();
    for key in keys.values() {
        let next = ids.len();
        ids.entry(key).or_insert(next);
    }
    let colors = keys.iter().map(|(n, key)| ((*n).clone(), ids[key])).collect();
    let (stable, _rounds) = refine(net, colors);
    Ok(NodePartition::from_colors(&stable))
}

/// A network together with the surjective fibration collapsing the blocks
/// of a balanced partition onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientResult {
    pub base: Network,
    pub projection: NetworkMorphism,
    pub witness: FibrationWitness,
    pub partition: NodePartition,
}

/// Collapse each block to its representative. Base nodes are the block
/// representatives; the in-edges of each representative are reused verbatim
/// as the base in-edges of its block, with sources redirected to source
/// representatives. Refuses with a counterexample pair when some node's
/// in-edge source blocks cannot be matched with its representative's.
pub fn quotient_network(net: &Network, partition: &NodePartition) -> Result<QuotientResult, QuotientError> {
    partition.check_covers(net)?;

    let group_in_edges = |node: &NodeId| -> BTreeMap<usize, Vec<&Edge>> {
        let mut groups: BTreeMap<usize, Vec<&Edge>> = BTreeMap::new();
        for edge in net.graph().in_edges(node) {
            groups.entry(partition.block_index(&edge.src).unwrap()).or_default().push(edge);
        }
        groups
    };

    let mut node_map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut edge_map: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    for block in partition.blocks() {
        let rep = block.iter().next().unwrap();
        let rep_dim = net.dim(rep).unwrap();
        let rep_groups = group_in_edges(rep);
        for node in block {
            let node_dim = net.dim(node).unwrap();
            if node_dim != rep_dim {
                return Err(QuotientError::DimsNotConstant {
                    representative: rep.clone(),
                    rep_dim,
                    node: node.clone(),
                    node_dim,
                });
            }
            node_map.insert(node.clone(), rep.clone());
            let node_groups = group_in_edges(node);
            let matched = node_groups.len() == rep_groups.len()
                && node_groups
                    .iter()
                    .all(|(k, edges)| rep_groups.get(k).map(Vec::len) == Some(edges.len()));
            if !matched {
                return Err(QuotientError::NotBalanced {
                    representative: rep.clone(),
                    node: node.clone(),
                });
            }
            // Sorted-order pairing within each source block: the smallest
            // consistent bijection, and the one recorded in the witness.
            for (k, edges) in &node_groups {
                for (edge, rep_edge) in edges.iter().zip(&rep_groups[k]) {
                    edge_map.insert(edge.id.clone(), rep_edge.id.clone());
                }
            }
        }
    }

    let reps: Vec<&NodeId> = partition.blocks().iter().map(|b| b.iter().next().unwrap()).collect();
    let base_graph = crate::graph::DirectedMultigraph::from_parts(
        reps.iter().map(|r| (*r).clone()),
        reps.iter().flat_map(|rep| {
            net.graph().in_edges(rep).into_iter().map(|e| {
                (e.id.clone(), node_map[&e.src].clone(), (*rep).clone())
            })
        }),
    )?;
    let dims = reps.iter().map(|r| ((*r).clone(), net.dim(r).unwrap())).collect();
    let base = Network::new(base_graph, PhaseSpaces { dims })?;

    let morphism = GraphMorphism::new(net.graph().clone(), base.graph().clone(), node_map, edge_map)
        .expect("block collapse commutes with sources and targets");
    let witness = match morphism.check_fibration() {
        FibrationOutcome::Fibration(w) => w,
        FibrationOutcome::NotFibration(f) => {
            unreachable!("balanced quotient projection must be a fibration, got {f:?}")
        }
    };
    let projection = NetworkMorphism::new(morphism, net.clone(), base.clone())
        .expect("dimensions are constant on blocks");
    Ok(QuotientResult { base, projection, witness, partition: partition.clone() })
}

/// Descend a family through a quotient. The family must implement the same
/// node function across each block (checked by sampling, with the seed in
/// the refusal report); the base then inherits each representative's system
/// unchanged, since a representative's in-edges are the base in-edges.
pub fn pushforward_family(
    qr: &QuotientResult,
    family: &ControlFamily,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ControlFamily, QuotientError> {
    let report = family_consistency(&qr.projection, family, samples, tol, seed)?;
    if !report.consistent {
        return Err(QuotientError::Inconsistent(report));
    }
    let systems = qr
        .partition
        .blocks()
        .iter()
        .map(|block| {
            let rep = block.iter().next().unwrap();
            (rep.clone(), family.systems[rep].clone())
        })
        .collect();
    Ok(ControlFamily::new(systems))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::SystemSignature;
    use crate::graph::DirectedMultigraph;
    use crate::system::{check_family, pullback_family, InterconnectedField, NodeSystem, OpenSystem};

    fn network(nodes: &[(&str, usize)], edges: &[(&str, &str, &str)]) -> Network {
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

    fn blocks(raw: &[&[&str]]) -> NodePartition {
        NodePartition::new(
            raw.iter().map(|b| b.iter().map(|n| NodeId::from(*n)).collect()).collect(),
        )
        .unwrap()
    }

    fn node_system(self_dim: usize, input_dims: &[usize], body: &[&str], slots: &[&str]) -> NodeSystem {
        NodeSystem {
            system: OpenSystem::parse(SystemSignature::new(self_dim, input_dims.to_vec()), body)
                .unwrap(),
            slot_edges: slots.iter().map(|e| EdgeId::from(*e)).collect(),
        }
    }

    fn family(entries: Vec<(&str, NodeSystem)>) -> ControlFamily {
        ControlFamily::new(entries.into_iter().map(|(n, s)| (NodeId::from(n), s)).collect())
    }

    /// Two source nodes feeding one sink, all one-dimensional.
    fn merge_example() -> Network {
        network(&[("a1", 1), ("a2", 1), ("b", 1)], &[("g", "a1", "b"), ("d", "a2", "b")])
    }

    /// Ten nodes in which every node has exactly one in-edge.
    fn ten_node_example() -> Network {
        network(
            &[
                ("1", 1), ("2", 1), ("3", 1), ("4", 1), ("5", 1),
                ("6", 1), ("7", 1), ("8", 1), ("9", 1), ("10", 1),
            ],
            &[
                ("e1", "2", "1"),
                ("e2", "1", "2"),
                ("e3", "2", "3"),
                ("e4", "1", "10"),
                ("e5", "1", "4"),
                ("e6", "1", "7"),
                ("e7", "2", "5"),
                ("e8", "2", "8"),
                ("e9", "3", "6"),
                ("e10", "3", "9"),
            ],
        )
    }

    #[test]
    fn partition_construction_is_validated_and_canonical() {
        assert_eq!(
            NodePartition::new(vec![BTreeSet::new()]).unwrap_err(),
            QuotientError::EmptyBlock
        );
        let overlapping = vec![
            BTreeSet::from([NodeId::from("a")]),
            BTreeSet::from([NodeId::from("a"), NodeId::from("b")]),
        ];
        assert!(matches!(
            NodePartition::new(overlapping).unwrap_err(),
            QuotientError::OverlappingBlocks(_)
        ));
        // Blocks are reordered by smallest member regardless of input order.
        let p = blocks(&[&["z"], &["b", "a"]]);
        assert_eq!(p.blocks()[0], BTreeSet::from([NodeId::from("a"), NodeId::from("b")]));
        assert_eq!(p.representative(&"b".into()), Some(&NodeId::from("a")));
        assert!(p.same_block(&"a".into(), &"b".into()));
        assert!(!p.same_block(&"a".into(), &"z".into()));
    }

    #[test]
    fn refines_compares_partitions() {
        let fine = blocks(&[&["a"], &["b"], &["c"]]);
        let mid = blocks(&[&["a", "b"], &["c"]]);
        let coarse = blocks(&[&["a", "b", "c"]]);
        assert!(fine.refines(&mid));
        assert!(mid.refines(&coarse));
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&mid));
        assert!(mid.refines(&mid));
    }

    #[test]
    fn symmetric_sources_merge() {
        let net = merge_example();
        let p = coarsest_balanced_partition(&net, None).unwrap();
        assert_eq!(p, blocks(&[&["a1", "a2"], &["b"]]));
    }

    #[test]
    fn distinct_dims_force_the_discrete_partition() {
        let net = network(&[("a1", 1), ("a2", 2), ("b", 3)], &[("g", "a1", "b"), ("d", "a2", "b")]);
        let p = coarsest_balanced_partition(&net, None).unwrap();
        assert_eq!(p, NodePartition::discrete(net.graph().nodes().cloned()));
    }

    #[test]
    fn uniform_in_degree_one_collapses_to_a_self_loop() {
        let net = ten_node_example();
        let p = coarsest_balanced_partition(&net, None).unwrap();
        assert_eq!(p.len(), 1);
        let qr = quotient_network(&net, &p).unwrap();
        assert_eq!(qr.base.graph().node_count(), 1);
        assert_eq!(qr.base.graph().edge_count(), 1);
        // Representative "1" keeps its sole in-edge, now a loop.
        let loop_edge = qr.base.graph().edge(&"e1".into()).unwrap();
        assert_eq!(loop_edge.src, NodeId::from("1"));
        assert_eq!(loop_edge.tgt, NodeId::from("1"));
    }

    #[test]
    fn user_initial_partition_refines_the_result() {
        let net = merge_example();
        let keep_apart = blocks(&[&["a1"], &["a2"], &["b"]]);
        let p = coarsest_balanced_partition(&net, Some(&keep_apart)).unwrap();
        assert_eq!(p, keep_apart);

        let no_constraint = blocks(&[&["a1", "a2", "b"]]);
        let p = coarsest_balanced_partition(&net, Some(&no_constraint)).unwrap();
        assert_eq!(p, blocks(&[&["a1", "a2"], &["b"]]));

        let missing = blocks(&[&["a1", "a2"]]);
        assert!(matches!(
            coarsest_balanced_partition(&net, Some(&missing)).unwrap_err(),
            QuotientError::CoverageMismatch { .. }
        ));
    }

    #[test]
    fn refinement_takes_at_most_one_round_per_node() {
        // A directed path splits one block per round: the worst case.
        let net = network(
            &[("a", 1), ("b", 1), ("c", 1), ("d", 1), ("e", 1), ("f", 1)],
            &[
                ("ab", "a", "b"),
                ("bc", "b", "c"),
                ("cd", "c", "d"),
                ("de", "d", "e"),
                ("ef", "e", "f"),
            ],
        );
        let colors = net.graph().nodes().map(|n| (n.clone(), 0)).collect();
        let (stable, rounds) = refine(&net, colors);
        assert!(rounds <= net.graph().node_count(), "{rounds} rounds");
        assert_eq!(NodePartition::from_colors(&stable), NodePartition::discrete(net.graph().nodes().cloned()));
    }

    #[test]
    fn quotient_of_the_merge_example_is_two_parallel_edges() {
        let net = merge_example();
        let p = blocks(&[&["a1", "a2"], &["b"]]);
        let qr = quotient_network(&net, &p).unwrap();

        let expected = network(&[("a1", 1), ("b", 1)], &[("g", "a1", "b"), ("d", "a1", "b")]);
        assert_eq!(&qr.base, &expected);
        assert_eq!(qr.projection.morphism().node_image(&"a2".into()), Some(&NodeId::from("a1")));
        // The projection is a fibration and the stored witness is its lift map.
        match qr.projection.morphism().check_fibration() {
            FibrationOutcome::Fibration(w) => assert_eq!(w, qr.witness),
            FibrationOutcome::NotFibration(f) => panic!("projection not a fibration: {f:?}"),
        }
        assert_eq!(qr.witness.lift(&"b".into(), &"g".into()), Some(&EdgeId::from("g")));
        assert_eq!(qr.witness.lift(&"b".into(), &"d".into()), Some(&EdgeId::from("d")));
    }

    #[test]
    fn discrete_partition_reproduces_the_network() {
        let net = merge_example();
        let p = NodePartition::discrete(net.graph().nodes().cloned());
        let qr = quotient_network(&net, &p).unwrap();
        assert_eq!(&qr.base, &net);
        assert_eq!(
            qr.projection.morphism(),
            &GraphMorphism::identity(net.graph().clone())
        );
    }

    #[test]
    fn unbalanced_partition_is_refused_with_the_pair() {
        let net = merge_example();
        let p = blocks(&[&["a1", "b"], &["a2"]]);
        assert_eq!(
            quotient_network(&net, &p).unwrap_err(),
            QuotientError::NotBalanced { representative: "a1".into(), node: "b".into() }
        );
    }

    #[test]
    fn mixed_dimension_block_is_refused() {
        let net = network(&[("a1", 1), ("a2", 2), ("b", 1)], &[("g", "a1", "b"), ("d", "a2", "b")]);
        let p = blocks(&[&["a1", "a2"], &["b"]]);
        assert_eq!(
            quotient_network(&net, &p).unwrap_err(),
            QuotientError::DimsNotConstant {
                representative: "a1".into(),
                rep_dim: 1,
                node: "a2".into(),
                node_dim: 2,
            }
        );
    }

    /// Two sinks each fed by both sources; merging both pairs exercises the
    /// lift bijection at a non-representative node with parallel choices.
    fn double_pair() -> Network {
        network(
            &[("c1", 1), ("c2", 1), ("d1", 1), ("d2", 1)],
            &[
                ("p1", "d1", "c1"),
                ("p2", "d2", "c1"),
                ("q1", "d1", "c2"),
                ("q2", "d2", "c2"),
            ],
        )
    }

    #[test]
    fn non_representative_lifts_pair_in_sorted_order() {
        let net = double_pair();
        let p = coarsest_balanced_partition(&net, None).unwrap();
        assert_eq!(p, blocks(&[&["c1", "c2"], &["d1", "d2"]]));
        let qr = quotient_network(&net, &p).unwrap();
        assert_eq!(qr.base.graph().edge_count(), 2);
        // c2's in-edges q1, q2 both have sources in the d-block, so they pair
        // with c1's p1, p2 in sorted order.
        assert_eq!(qr.witness.lift(&"c2".into(), &"p1".into()), Some(&EdgeId::from("q1")));
        assert_eq!(qr.witness.lift(&"c2".into(), &"p2".into()), Some(&EdgeId::from("q2")));
        assert_eq!(qr.witness.lift(&"c1".into(), &"p1".into()), Some(&EdgeId::from("p1")));
    }

    #[test]
    fn pushforward_round_trips_a_pulled_back_family() {
        let net = merge_example();
        let qr = quotient_network(&net, &blocks(&[&["a1", "a2"], &["b"]])).unwrap();
        let base_family = family(vec![
            ("a1", node_system(1, &[], &["sin(x[0])"], &[])),
            ("b", node_system(1, &[1, 1], &["u[0][0] + 2*u[1][0] - x[0]^3"], &["d", "g"])),
        ]);
        assert!(check_family(&qr.base, &base_family).is_ok());
        let lifted = pullback_family(&qr.projection, &qr.witness, &base_family).unwrap();
        let descended = pushforward_family(&qr, &lifted, 64, 1e-9, 11).unwrap();
        assert_eq!(descended, base_family);
    }

    #[test]
    fn disagreeing_bodies_are_refused_with_a_witness() {
        let net = merge_example();
        let qr = quotient_network(&net, &blocks(&[&["a1", "a2"], &["b"]])).unwrap();
        let w = family(vec![
            ("a1", node_system(1, &[], &["x[0]"], &[])),
            ("a2", node_system(1, &[], &["2*x[0]"], &[])),
            ("b", node_system(1, &[1, 1], &["u[0][0]"], &["d", "g"])),
        ]);
        match pushforward_family(&qr, &w, 64, 1e-9, 11).unwrap_err() {
            QuotientError::Inconsistent(report) => {
                assert!(!report.consistent);
                let worst = report.worst.unwrap();
                assert_eq!(worst.nodes, ("a1".into(), "a2".into()));
                assert!(worst.deviation > 1e-9);
                assert_eq!(worst.state.len(), 1);
            }
            other => panic!("expected inconsistency refusal, got {other:?}"),
        }
    }

    #[test]
    fn symmetric_family_descends_despite_swapped_slots() {
        let net = double_pair();
        let qr = quotient_network(&net, &blocks(&[&["c1", "c2"], &["d1", "d2"]])).unwrap();
        // c2 binds its slots in the opposite order; the shared body is
        // symmetric in the two inputs, so the family still descends.
        let w = family(vec![
            ("c1", node_system(1, &[1, 1], &["u[0][0] + u[1][0] - x[0]"], &["p1", "p2"])),
            ("c2", node_system(1, &[1, 1], &["u[0][0] + u[1][0] - x[0]"], &["q2", "q1"])),
            ("d1", node_system(1, &[], &["-x[0]"], &[])),
            ("d2", node_system(1, &[], &["-x[0]"], &[])),
        ]);
        let descended = pushforward_family(&qr, &w, 64, 1e-9, 23).unwrap();
        assert!(check_family(&qr.base, &descended).is_ok());

        // Round trip: pulling the descended family back evaluates exactly as
        // the original at sampled points (addition is commutative bitwise).
        let lifted = pullback_family(&qr.projection, &qr.witness, &descended).unwrap();
        let original = InterconnectedField::new(net.clone(), w).unwrap();
        let round_tripped = InterconnectedField::new(net.clone(), lifted).unwrap();
        let mut rng = crate::sample::Rng::new(9);
        for _ in 0..50 {
            let x = net.sample_point(&mut rng);
            assert_eq!(original.eval(&x).unwrap(), round_tripped.eval(&x).unwrap());
        }
    }
}
