//! Directed multigraphs, graph morphisms, and fibrations.
//!
//! Loops and parallel edges are allowed, so edges carry their own identity
//! instead of being a pair of endpoints. All iteration is in sorted id order,
//! which keeps every downstream computation deterministic.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Name of a node. Ordered, so it can key maps and fix iteration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

/// Name of an edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }
}

impl EdgeId {
    pub fn new(s: impl Into<String>) -> Self {
        EdgeId(s.into())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<&str> for EdgeId {
    fn from(s: &str) -> Self {
        EdgeId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub tgt: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate node id: {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate edge id: {0}")]
    DuplicateEdge(EdgeId),
    #[error("edge {edge} has unknown source node {node}")]
    UnknownSource { edge: EdgeId, node: NodeId },
    #[error("edge {edge} has unknown target node {node}")]
    UnknownTarget { edge: EdgeId, node: NodeId },
    #[error("unknown node: {0}")]
    UnknownNode(NodeId),
}

/// A finite directed multigraph. Well-formed by construction: ids are unique
/// and every edge endpoint names an existing node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectedMultigraph {
    nodes: BTreeSet<NodeId>,
    edges: BTreeMap<EdgeId, Edge>,
}

impl DirectedMultigraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId) -> Result<(), GraphError> {
        if !self.nodes.insert(id.clone()) {
            return Err(GraphError::DuplicateNode(id));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, id: EdgeId, src: NodeId, tgt: NodeId) -> Result<(), GraphError> {
        if self.edges.contains_key(&id) {
            return Err(GraphError::DuplicateEdge(id));
        }
        if !self.nodes.contains(&src) {
            return Err(GraphError::UnknownSource { edge: id, node: src });
        }
        if !self.nodes.contains(&tgt) {
            return Err(GraphError::UnknownTarget { edge: id, node: tgt });
        }
        self.edges.insert(id.clone(), Edge { id, src, tgt });
        Ok(())
    }

    pub fn from_parts(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (EdgeId, NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut g = Self::new();
        for n in nodes {
            g.add_node(n)?;
        }
        for (id, src, tgt) in edges {
            g.add_edge(id, src, tgt)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_node(&self, id: &NodeId) -> bool {
        self.nodes.contains(id)
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&Edge> {
        self.edges.get(id)
    }

    /// Nodes in sorted order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    /// Edges in sorted id order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    /// Edges ending at `node`, sorted by id. This order is the canonical
    /// input-slot order used everywhere a node's inputs are enumerated.
    pub fn in_edges(&self, node: &NodeId) -> Vec<&Edge> {
        self.edges.values().filter(|e| &e.tgt == node).collect()
    }

    pub fn out_edges(&self, node: &NodeId) -> Vec<&Edge> {
        self.edges.values().filter(|e| &e.src == node).collect()
    }

    /// The input tree of a node: the node itself plus one leaf per in-edge.
    /// Parallel edges and loops contribute distinct leaves.
    pub fn input_tree(&self, node: &NodeId) -> Result<InputTree, GraphError> {
        if !self.has_node(node) {
            return Err(GraphError::UnknownNode(node.clone()));
        }
        let leaves = self
            .in_edges(node)
            .into_iter()
            .map(|e| InputLeaf { edge: e.id.clone(), source: e.src.clone() })
            .collect();
        Ok(InputTree { root: node.clone(), leaves })
    }

    /// Build the input tree of `node` as a graph of its own, together with
    /// the morphism that folds it back onto this graph and the inclusion of
    /// the root. Leaves are named `root<-edge` so that parallel in-edges stay
    /// pulled apart even when they share a source.
    pub fn realize_input_tree(&self, node: &NodeId) -> Result<RealizedInputTree, GraphError> {
        let tree = self.input_tree(node)?;
        let mut graph = DirectedMultigraph::new();
        graph.add_node(tree.root.clone())?;
        let mut node_map = BTreeMap::new();
        let mut edge_map = BTreeMap::new();
        node_map.insert(tree.root.clone(), node.clone());
        for leaf in &tree.leaves {
            let leaf_id = NodeId::new(format!("{}<-{}", tree.root, leaf.edge));
            graph.add_node(leaf_id.clone())?;
            graph.add_edge(leaf.edge.clone(), leaf_id.clone(), tree.root.clone())?;
            node_map.insert(leaf_id, leaf.source.clone());
            edge_map.insert(leaf.edge.clone(), leaf.edge.clone());
        }
        let to_ambient = GraphMorphism::new(graph.clone(), self.clone(), node_map, edge_map)
            .expect("realized input tree folds back onto its graph");
        let mut root_only = DirectedMultigraph::new();
        root_only.add_node(node.clone())?;
        let root_inclusion = GraphMorphism::new(
            root_only,
            graph.clone(),
            BTreeMap::from([(node.clone(), node.clone())]),
            BTreeMap::new(),
        )
        .expect("root is a node of its input tree");
        Ok(RealizedInputTree { graph, to_ambient, root_inclusion })
    }

    /// The one-node, no-edge graph on `node`, with its inclusion into this
    /// graph.
    pub fn node_inclusion(&self, node: &NodeId) -> Result<GraphMorphism, GraphError> {
        if !self.has_node(node) {
            return Err(GraphError::UnknownNode(node.clone()));
        }
        let mut single = DirectedMultigraph::new();
        single.add_node(node.clone())?;
        Ok(GraphMorphism::new(
            single,
            self.clone(),
            BTreeMap::from([(node.clone(), node.clone())]),
            BTreeMap::new(),
        )
        .expect("a node includes into its graph"))
    }
}

/// The in-neighborhood of a node with parallel edges kept apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputTree {
    pub root: NodeId,
    /// One leaf per in-edge, in canonical slot order (sorted by edge id).
    pub leaves: Vec<InputLeaf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputLeaf {
    pub edge: EdgeId,
    pub source: NodeId,
}

/// An input tree realized as a graph, with the morphisms that relate it to
/// the ambient graph: `to_ambient` folds leaves onto their sources, and
/// `root_inclusion` picks out the root. Composing them gives the plain
/// inclusion of the root node into the ambient graph.
#[derive(Debug, Clone)]
pub struct RealizedInputTree {
    pub graph: DirectedMultigraph,
    pub to_ambient: GraphMorphism,
    pub root_inclusion: GraphMorphism,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error("domain node {0} has no image")]
    MissingNodeImage(NodeId),
    #[error("domain edge {0} has no image")]
    MissingEdgeImage(EdgeId),
    #[error("node {node} is sent to {image}, which is not in the codomain")]
    UnknownNodeImage { node: NodeId, image: NodeId },
    #[error("edge {edge} is sent to {image}, which is not in the codomain")]
    UnknownEdgeImage { edge: EdgeId, image: EdgeId },
    #[error("map mentions node {0}, which is not in the domain")]
    ExtraneousNode(NodeId),
    #[error("map mentions edge {0}, which is not in the domain")]
    ExtraneousEdge(EdgeId),
    #[error("edge {edge}: image has source {found}, expected {expected}")]
    SourceMismatch { edge: EdgeId, expected: NodeId, found: NodeId },
    #[error("edge {edge}: image has target {found}, expected {expected}")]
    TargetMismatch { edge: EdgeId, expected: NodeId, found: NodeId },
    #[error("cannot compose: inner codomain differs from outer domain")]
    CompositionMismatch,
}

/// A graph morphism: node and edge maps that commute with source and target.
/// Values of this type are genuine morphisms; construction checks everything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMorphism {
    domain: DirectedMultigraph,
    codomain: DirectedMultigraph,
    node_map: BTreeMap<NodeId, NodeId>,
    edge_map: BTreeMap<EdgeId, EdgeId>,
}

impl GraphMorphism {
    pub fn new(
        domain: DirectedMultigraph,
        codomain: DirectedMultigraph,
        node_map: BTreeMap<NodeId, NodeId>,
        edge_map: BTreeMap<EdgeId, EdgeId>,
    ) -> Result<Self, MorphismError> {
        let problems = Self::check(&domain, &codomain, &node_map, &edge_map);
        if let Some(first) = problems.into_iter().next() {
            return Err(first);
        }
        Ok(GraphMorphism { domain, codomain, node_map, edge_map })
    }

    /// Every problem with the candidate maps, in deterministic order. Empty
    /// means the data defines a morphism.
    pub fn check(
        domain: &DirectedMultigraph,
        codomain: &DirectedMultigraph,
        node_map: &BTreeMap<NodeId, NodeId>,
        edge_map: &BTreeMap<EdgeId, EdgeId>,
    ) -> Vec<MorphismError> {
        let mut problems = Vec::new();
        for n in domain.nodes() {
            match node_map.get(n) {
                None => problems.push(MorphismError::MissingNodeImage(n.clone())),
                Some(img) if !codomain.has_node(img) => problems.push(
                    MorphismError::UnknownNodeImage { node: n.clone(), image: img.clone() },
                ),
                Some(_) => {}
            }
        }
        for n in node_map.keys() {
            if !domain.has_node(n) {
                problems.push(MorphismError::ExtraneousNode(n.clone()));
            }
        }
        for e in domain.edges() {
            match edge_map.get(&e.id) {
                None => problems.push(MorphismError::MissingEdgeImage(e.id.clone())),
                Some(img) if codomain.edge(img).is_none() => problems.push(
                    MorphismError::UnknownEdgeImage { edge: e.id.clone(), image: img.clone() },
                ),
                Some(_) => {}
            }
        }
        for e in edge_map.keys() {
            if domain.edge(e).is_none() {
                problems.push(MorphismError::ExtraneousEdge(e.clone()));
            }
        }
        // Commutation with source and target, only for edges whose pieces
        // all resolved above.
        for e in domain.edges() {
            let (Some(img), Some(src_img), Some(tgt_img)) = (
                edge_map.get(&e.id).and_then(|i| codomain.edge(i)),
                node_map.get(&e.src).filter(|i| codomain.has_node(i)),
                node_map.get(&e.tgt).filter(|i| codomain.has_node(i)),
            ) else {
                continue;
            };
            if &img.src != src_img {
                problems.push(MorphismError::SourceMismatch {
                    edge: e.id.clone(),
                    expected: src_img.clone(),
                    found: img.src.clone(),
                });
            }
            if &img.tgt != tgt_img {
                problems.push(MorphismError::TargetMismatch {
                    edge: e.id.clone(),
                    expected: tgt_img.clone(),
                    found: img.tgt.clone(),
                });
            }
        }
        problems
    }

    pub fn identity(graph: DirectedMultigraph) -> Self {
        let node_map = graph.nodes().map(|n| (n.clone(), n.clone())).collect();
        let edge_map = graph.edges().map(|e| (e.id.clone(), e.id.clone())).collect();
        GraphMorphism { domain: graph.clone(), codomain: graph, node_map, edge_map }
    }

    pub fn domain(&self) -> &DirectedMultigraph {
        &self.domain
    }

    pub fn codomain(&self) -> &DirectedMultigraph {
        &self.codomain
    }

    pub fn node_map(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.node_map
    }

    pub fn edge_map(&self) -> &BTreeMap<EdgeId, EdgeId> {
        &self.edge_map
    }

    pub fn node_image(&self, n: &NodeId) -> Option<&NodeId> {
        self.node_map.get(n)
    }

    pub fn edge_image(&self, e: &EdgeId) -> Option<&EdgeId> {
        self.edge_map.get(e)
    }

    /// `self.then(&psi)` is the composite that applies `self` first.
    pub fn then(&self, outer: &GraphMorphism) -> Result<GraphMorphism, MorphismError> {
        if self.codomain != outer.domain {
            return Err(MorphismError::CompositionMismatch);
        }
        let node_map = self
            .node_map
            .iter()
            .map(|(a, b)| (a.clone(), outer.node_map[b].clone()))
            .collect();
        let edge_map = self
            .edge_map
            .iter()
            .map(|(a, b)| (a.clone(), outer.edge_map[b].clone()))
            .collect();
        GraphMorphism::new(self.domain.clone(), outer.codomain.clone(), node_map, edge_map)
    }

    pub fn is_injective_on_nodes(&self) -> bool {
        let images: BTreeSet<_> = self.node_map.values().collect();
        images.len() == self.node_map.len()
    }

    pub fn is_surjective_on_nodes(&self) -> bool {
        let images: BTreeSet<_> = self.node_map.values().cloned().collect();
        self.codomain.nodes().all(|n| images.contains(n))
    }

    pub fn is_isomorphism(&self) -> bool {
        let node_images: BTreeSet<_> = self.node_map.values().cloned().collect();
        let edge_images: BTreeSet<_> = self.edge_map.values().cloned().collect();
        node_images.len() == self.node_map.len()
            && edge_images.len() == self.edge_map.len()
            && self.codomain.nodes().all(|n| node_images.contains(n))
            && self.codomain.edges().all(|e| edge_images.contains(&e.id))
    }

    /// Decide whether this morphism is a fibration: at every domain node,
    /// every in-edge of the image node must lift to exactly one in-edge of
    /// the node. Returns either the full table of lifts or the first
    /// failure in (node, codomain edge) order.
    pub fn check_fibration(&self) -> FibrationOutcome {
        let mut lifts = BTreeMap::new();
        for a in self.domain.nodes() {
            let image = &self.node_map[a];
            let mut at_a = BTreeMap::new();
            for cod_edge in self.codomain.in_edges(image) {
                let matching: Vec<EdgeId> = self
                    .domain
                    .in_edges(a)
                    .into_iter()
                    .filter(|e| self.edge_map[&e.id] == cod_edge.id)
                    .map(|e| e.id.clone())
                    .collect();
                if matching.len() != 1 {
                    return FibrationOutcome::NotFibration(FibrationFailure {
                        node: a.clone(),
                        codomain_edge: cod_edge.id.clone(),
                        lifts: matching,
                    });
                }
                at_a.insert(cod_edge.id.clone(), matching.into_iter().next().unwrap());
            }
            lifts.insert(a.clone(), at_a);
        }
        FibrationOutcome::Fibration(FibrationWitness { lifts })
    }

    /// The restriction of this morphism to the input tree of `node`: a
    /// morphism from the realized tree at `node` to the realized tree at its
    /// image. For a fibration this is an isomorphism at every node.
    pub fn induced_tree_morphism(&self, node: &NodeId) -> Result<GraphMorphism, GraphError> {
        if !self.domain.has_node(node) {
            return Err(GraphError::UnknownNode(node.clone()));
        }
        let image = &self.node_map[node];
        let dom_tree = self.domain.realize_input_tree(node)?;
        let cod_tree = self.codomain.realize_input_tree(image)?;
        let mut node_map = BTreeMap::from([(node.clone(), image.clone())]);
        let mut edge_map = BTreeMap::new();
        for e in self.domain.in_edges(node) {
            let e_img = &self.edge_map[&e.id];
            node_map.insert(
                NodeId::new(format!("{node}<-{}", e.id)),
                NodeId::new(format!("{image}<-{e_img}")),
            );
            edge_map.insert(e.id.clone(), e_img.clone());
        }
        Ok(
            GraphMorphism::new(dom_tree.graph, cod_tree.graph, node_map, edge_map)
                .expect("restriction of a morphism to an input tree is a morphism"),
        )
    }
}

/// Result of [`GraphMorphism::check_fibration`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FibrationOutcome {
    Fibration(FibrationWitness),
    NotFibration(FibrationFailure),
}

impl FibrationOutcome {
    pub fn witness(&self) -> Option<&FibrationWitness> {
        match self {
            FibrationOutcome::Fibration(w) => Some(w),
            FibrationOutcome::NotFibration(_) => None,
        }
    }

    pub fn is_fibration(&self) -> bool {
        matches!(self, FibrationOutcome::Fibration(_))
    }
}

/// Per-node lift tables of a fibration. For each domain node `a`,
/// `lifts[a]` maps every in-edge of the image of `a` to the unique in-edge
/// of `a` above it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibrationWitness {
    pub lifts: BTreeMap<NodeId, BTreeMap<EdgeId, EdgeId>>,
}

impl FibrationWitness {
    pub fn lift(&self, node: &NodeId, codomain_edge: &EdgeId) -> Option<&EdgeId> {
        self.lifts.get(node)?.get(codomain_edge)
    }
}

/// Why a morphism failed to be a fibration: at `node`, the in-edge
/// `codomain_edge` of the image node has either no lift (`lifts` empty) or
/// several (`lifts` lists them all).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibrationFailure {
    pub node: NodeId,
    pub codomain_edge: EdgeId,
    pub lifts: Vec<EdgeId>,
}
