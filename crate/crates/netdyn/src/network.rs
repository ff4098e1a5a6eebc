//! Phase spaces over a graph and the pullback of points along morphisms.
//!
//! Every node carries a Euclidean space of declared dimension. The total
//! phase space is the product over all nodes, represented as a node-keyed
//! map rather than a flat vector: no ordering of the factors is meaningful,
//! and flattening happens only at the CSV boundary.
//!
//! A morphism of networks is a graph morphism that preserves dimensions.
//! Pulling a point back along it copies the component at the image node to
//! every preimage node. Pulling back along a node-surjective morphism lands
//! on a polydiagonal (components equal across nodes with a common image);
//! along a node-injective morphism it is a coordinate projection.

use crate::graph::{DirectedMultigraph, GraphError, GraphMorphism, NodeId};
use crate::sample::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

/// Dimension of the Euclidean space attached to each node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhaseSpaces {
    pub dims: BTreeMap<NodeId, usize>,
}

impl PhaseSpaces {
    pub fn uniform(graph: &DirectedMultigraph, dim: usize) -> Self {
        PhaseSpaces { dims: graph.nodes().map(|n| (n.clone(), dim)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("node {0} has no declared dimension")]
    MissingDimension(NodeId),
    #[error("dimension declared for {0}, which is not a node of the graph")]
    ExtraneousDimension(NodeId),
    #[error("node {0} has dimension 0; dimensions must be at least 1")]
    ZeroDimension(NodeId),
    #[error("morphism domain graph is not the domain network's graph")]
    DomainGraphMismatch,
    #[error("morphism codomain graph is not the codomain network's graph")]
    CodomainGraphMismatch,
    #[error("node {node} has dimension {domain_dim}, but its image has dimension {codomain_dim}")]
    DimensionMismatch { node: NodeId, domain_dim: usize, codomain_dim: usize },
    #[error("node map is not surjective: {0} has no preimage")]
    NotSurjective(NodeId),
    #[error("node map is not injective: {a} and {b} are both sent to {image}")]
    NotInjective { a: NodeId, b: NodeId, image: NodeId },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// A graph together with a phase space at every node. Dimensions cover the
/// node set exactly and are positive; checked at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    graph: DirectedMultigraph,
    spaces: PhaseSpaces,
}

impl Network {
    pub fn new(graph: DirectedMultigraph, spaces: PhaseSpaces) -> Result<Self, NetworkError> {
        for n in graph.nodes() {
            match spaces.dims.get(n) {
                None => return Err(NetworkError::MissingDimension(n.clone())),
                Some(0) => return Err(NetworkError::ZeroDimension(n.clone())),
                Some(_) => {}
            }
        }
        for n in spaces.dims.keys() {
            if !graph.has_node(n) {
                return Err(NetworkError::ExtraneousDimension(n.clone()));
            }
        }
        Ok(Network { graph, spaces })
    }

    pub fn graph(&self) -> &DirectedMultigraph {
        &self.graph
    }

    pub fn spaces(&self) -> &PhaseSpaces {
        &self.spaces
    }

    pub fn dim(&self, node: &NodeId) -> Option<usize> {
        self.spaces.dims.get(node).copied()
    }

    /// Sum of all node dimensions.
    pub fn total_dim(&self) -> usize {
        self.spaces.dims.values().sum()
    }

    pub fn check_point(&self, x: &TotalPoint) -> Result<(), ShapeError> {
        for (n, dim) in &self.spaces.dims {
            match x.components.get(n) {
                None => return Err(ShapeError::MissingComponent(n.clone())),
                Some(v) if v.len() != *dim => {
                    return Err(ShapeError::WrongLength {
                        node: n.clone(),
                        expected: *dim,
                        found: v.len(),
                    })
                }
                Some(_) => {}
            }
        }
        for n in x.components.keys() {
            if !self.spaces.dims.contains_key(n) {
                return Err(ShapeError::ExtraneousComponent(n.clone()));
            }
        }
        Ok(())
    }

    /// A point with every coordinate drawn from the standard normal.
    pub fn sample_point(&self, rng: &mut Rng) -> TotalPoint {
        TotalPoint {
            components: self
                .spaces
                .dims
                .iter()
                .map(|(n, d)| (n.clone(), (0..*d).map(|_| rng.next_normal()).collect()))
                .collect(),
        }
    }

    pub fn zero_point(&self) -> TotalPoint {
        TotalPoint {
            components: self
                .spaces
                .dims
                .iter()
                .map(|(n, d)| (n.clone(), vec![0.0; *d]))
                .collect(),
        }
    }

    /// The network on the realized input tree of `node`: root keeps the
    /// node's dimension, each leaf the dimension of its edge's source.
    pub fn realize_input_tree(&self, node: &NodeId) -> Result<RealizedInputTreeNetwork, NetworkError> {
        let realized = self.graph.realize_input_tree(node)?;
        let tree_dims = realized
            .to_ambient
            .node_map()
            .iter()
            .map(|(tree_node, ambient)| (tree_node.clone(), self.spaces.dims[ambient]))
            .collect();
        let tree = Network::new(realized.graph.clone(), PhaseSpaces { dims: tree_dims })?;
        let root_only = Network::new(
            realized.root_inclusion.domain().clone(),
            PhaseSpaces { dims: BTreeMap::from([(node.clone(), self.spaces.dims[node])]) },
        )?;
        Ok(RealizedInputTreeNetwork {
            to_ambient: NetworkMorphism::new(realized.to_ambient, tree.clone(), self.clone())?,
            root_inclusion: NetworkMorphism::new(realized.root_inclusion, root_only, tree.clone())?,
            tree,
        })
    }

    /// The one-node network at `node` with its inclusion into this network.
    pub fn node_inclusion(&self, node: &NodeId) -> Result<NetworkMorphism, NetworkError> {
        let inclusion = self.graph.node_inclusion(node)?;
        let single = Network::new(
            inclusion.domain().clone(),
            PhaseSpaces { dims: BTreeMap::from([(node.clone(), self.spaces.dims[node])]) },
        )?;
        NetworkMorphism::new(inclusion, single, self.clone())
    }
}

/// A point of the total phase space: one real vector per node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TotalPoint {
    pub components: BTreeMap<NodeId, Vec<f64>>,
}

/// A tangent vector at some point of the total phase space. Shares the
/// representation of [`TotalPoint`]; the distinction is interpretive.
pub type TangentPoint = TotalPoint;

impl TotalPoint {
    pub fn new(components: BTreeMap<NodeId, Vec<f64>>) -> Self {
        TotalPoint { components }
    }

    pub fn component(&self, node: &NodeId) -> Option<&[f64]> {
        self.components.get(node).map(|v| v.as_slice())
    }

    /// `self + Σ scaleᵢ · termᵢ`, componentwise, accumulated in term order.
    pub fn add_scaled(&self, terms: &[(f64, &TotalPoint)]) -> TotalPoint {
        let mut out = self.clone();
        for (node, v) in &mut out.components {
            for (scale, term) in terms {
                let t = &term.components[node];
                for (i, x) in v.iter_mut().enumerate() {
                    *x += scale * t[i];
                }
            }
        }
        out
    }

    /// Largest absolute coordinate difference over all nodes.
    pub fn max_abs_diff(&self, other: &TotalPoint) -> f64 {
        let mut worst: f64 = 0.0;
        for (node, v) in &self.components {
            let w = &other.components[node];
            for (a, b) in v.iter().zip(w) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    /// Largest absolute coordinate difference per node.
    pub fn per_node_max_abs_diff(&self, other: &TotalPoint) -> BTreeMap<NodeId, f64> {
        self.components
            .iter()
            .map(|(node, v)| {
                let w = &other.components[node];
                let worst = v.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
                (node.clone(), worst)
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.components.values().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("point has no component for node {0}")]
    MissingComponent(NodeId),
    #[error("point has a component for {0}, which is not a node")]
    ExtraneousComponent(NodeId),
    #[error("component at {node} has length {found}, expected {expected}")]
    WrongLength { node: NodeId, expected: usize, found: usize },
}

/// All dimension clashes between a graph morphism and two phase space
/// assignments, in node order. Empty means the morphism preserves spaces.
pub fn dimension_violations(
    morphism: &GraphMorphism,
    domain: &Network,
    codomain: &Network,
) -> Result<Vec<NetworkError>, NetworkError> {
    if morphism.domain() != domain.graph() {
        return Err(NetworkError::DomainGraphMismatch);
    }
    if morphism.codomain() != codomain.graph() {
        return Err(NetworkError::CodomainGraphMismatch);
    }
    let mut out = Vec::new();
    for (node, image) in morphism.node_map() {
        let domain_dim = domain.dim(node).unwrap();
        let codomain_dim = codomain.dim(image).unwrap();
        if domain_dim != codomain_dim {
            out.push(NetworkError::DimensionMismatch {
                node: node.clone(),
                domain_dim,
                codomain_dim,
            });
        }
    }
    Ok(out)
}

/// A graph morphism between networks that preserves dimensions, so points
/// and tangent vectors can be pulled back along it.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMorphism {
    morphism: GraphMorphism,
    domain: Network,
    codomain: Network,
}

impl NetworkMorphism {
    pub fn new(
        morphism: GraphMorphism,
        domain: Network,
        codomain: Network,
    ) -> Result<Self, NetworkError> {
        let violations = dimension_violations(&morphism, &domain, &codomain)?;
        if let Some(first) = violations.into_iter().next() {
            return Err(first);
        }
        Ok(NetworkMorphism { morphism, domain, codomain })
    }

    pub fn identity(network: Network) -> Self {
        NetworkMorphism {
            morphism: GraphMorphism::identity(network.graph().clone()),
            domain: network.clone(),
            codomain: network,
        }
    }

    pub fn morphism(&self) -> &GraphMorphism {
        &self.morphism
    }

    pub fn domain(&self) -> &Network {
        &self.domain
    }

    pub fn codomain(&self) -> &Network {
        &self.codomain
    }

    pub fn then(&self, outer: &NetworkMorphism) -> Result<NetworkMorphism, NetworkError> {
        if self.codomain != outer.domain {
            return Err(NetworkError::CodomainGraphMismatch);
        }
        let composed = self
            .morphism
            .then(&outer.morphism)
            .expect("networks matched, so the underlying graphs compose");
        NetworkMorphism::new(composed, self.domain.clone(), outer.codomain.clone())
    }

    /// Pull a codomain point back to the domain: the component at a node is
    /// a copy of the component at its image.
    pub fn pullback_point(&self, x: &TotalPoint) -> Result<TotalPoint, ShapeError> {
        self.codomain.check_point(x)?;
        Ok(TotalPoint {
            components: self
                .morphism
                .node_map()
                .iter()
                .map(|(node, image)| (node.clone(), x.components[image].clone()))
                .collect(),
        })
    }

    /// Pull a tangent vector back. Coordinate duplication and selection are
    /// their own differentials, so this is the same copy as for points.
    pub fn pullback_tangent(&self, v: &TangentPoint) -> Result<TangentPoint, ShapeError> {
        self.pullback_point(v)
    }

    fn require_surjective(&self) -> Result<(), NetworkError> {
        if let Some(missed) = self
            .codomain
            .graph()
            .nodes()
            .find(|n| !self.morphism.node_map().values().any(|img| &img == n))
        {
            return Err(NetworkError::NotSurjective(missed.clone()));
        }
        Ok(())
    }

    fn require_injective(&self) -> Result<(), NetworkError> {
        let mut seen: BTreeMap<&NodeId, &NodeId> = BTreeMap::new();
        for (node, image) in self.morphism.node_map() {
            if let Some(prev) = seen.insert(image, node) {
                return Err(NetworkError::NotInjective {
                    a: prev.clone(),
                    b: node.clone(),
                    image: image.clone(),
                });
            }
        }
        Ok(())
    }

    /// For a node-surjective morphism: does `x` lie on the polydiagonal,
    /// i.e. are components equal across nodes with a common image?
    /// Deviations are measured pairwise in the max norm.
    pub fn polydiagonal_membership(
        &self,
        x: &TotalPoint,
        tol: f64,
    ) -> Result<PolydiagonalReport, NetworkError> {
        self.require_surjective()?;
        self.domain.check_point(x)?;
        let mut fibers: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
        for (node, image) in self.morphism.node_map() {
            fibers.entry(image).or_default().push(node);
        }
        let mut max_deviation: f64 = 0.0;
        let mut worst_pair = None;
        for members in fibers.values() {
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    let va = &x.components[*a];
                    let vb = &x.components[*b];
                    let dev = va
                        .iter()
                        .zip(vb)
                        .map(|(p, q)| (p - q).abs())
                        .fold(0.0f64, f64::max);
                    if worst_pair.is_none() || dev > max_deviation {
                        max_deviation = dev;
                        worst_pair = Some(((*a).clone(), (*b).clone()));
                    }
                }
            }
        }
        Ok(PolydiagonalReport { member: max_deviation <= tol, tol, max_deviation, worst_pair })
    }

    /// For a node-surjective morphism: check that pulling back is an
    /// embedding onto the polydiagonal. Injectivity is witnessed by a
    /// section of the node map; the image-polydiagonal equality is sampled
    /// in both directions and holds exactly, since both directions are
    /// coordinate copies.
    pub fn embedding_report(&self, samples: usize, seed: u64) -> Result<EmbeddingReport, NetworkError> {
        self.require_surjective()?;
        // Lexicographically first preimage of each codomain node.
        let mut section: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for (node, image) in self.morphism.node_map() {
            section.entry(image.clone()).or_insert_with(|| node.clone());
        }
        let mut rng = Rng::new(seed);
        let mut max_forward_deviation: f64 = 0.0;
        let mut max_section_roundtrip: f64 = 0.0;
        for _ in 0..samples {
            // Forward: pullbacks land on the polydiagonal.
            let x_cod = self.codomain.sample_point(&mut rng);
            let pulled = self.pullback_point(&x_cod).expect("sampled point is shaped");
            let membership = self.polydiagonal_membership(&pulled, 0.0)?;
            max_forward_deviation = max_forward_deviation.max(membership.max_deviation);
            // Backward: a polydiagonal point is recovered from its section.
            let recovered = TotalPoint {
                components: section
                    .iter()
                    .map(|(cod_node, dom_node)| {
                        (cod_node.clone(), pulled.components[dom_node].clone())
                    })
                    .collect(),
            };
            let back = self.pullback_point(&recovered).expect("recovered point is shaped");
            max_section_roundtrip = max_section_roundtrip.max(back.max_abs_diff(&pulled));
        }
        Ok(EmbeddingReport {
            section,
            samples,
            seed,
            max_forward_deviation,
            max_section_roundtrip,
        })
    }

    /// For a node-injective morphism: check that pulling back is the
    /// coordinate projection onto the image blocks, hence surjective; a
    /// preimage for each sampled target is exhibited by extending with
    /// zeros on the unreached nodes.
    pub fn submersion_report(&self, samples: usize, seed: u64) -> Result<SubmersionReport, NetworkError> {
        self.require_injective()?;
        let image: BTreeMap<&NodeId, &NodeId> =
            self.morphism.node_map().iter().map(|(n, img)| (img, n)).collect();
        let unreached: Vec<NodeId> = self
            .codomain
            .graph()
            .nodes()
            .filter(|n| !image.contains_key(n))
            .cloned()
            .collect();
        let mut rng = Rng::new(seed);
        let mut max_preimage_error: f64 = 0.0;
        for _ in 0..samples {
            let target = self.domain.sample_point(&mut rng);
            let mut extended = self.codomain.zero_point();
            for (cod_node, dom_node) in &image {
                extended
                    .components
                    .insert((*cod_node).clone(), target.components[*dom_node].clone());
            }
            let projected = self.pullback_point(&extended).expect("extension is shaped");
            max_preimage_error = max_preimage_error.max(projected.max_abs_diff(&target));
        }
        Ok(SubmersionReport { samples, seed, unreached, max_preimage_error })
    }
}

/// Outcome of a polydiagonal membership test.
#[derive(Debug, Clone, PartialEq)]
pub struct PolydiagonalReport {
    pub member: bool,
    pub tol: f64,
    pub max_deviation: f64,
    /// Pair of nodes realizing the max deviation, if any pair was compared.
    pub worst_pair: Option<(NodeId, NodeId)>,
}

/// Evidence that pulling back along a node-surjective morphism embeds the
/// codomain total space onto the polydiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    /// One preimage per codomain node; distinguishes pullbacks of distinct
    /// points, which is injectivity.
    pub section: BTreeMap<NodeId, NodeId>,
    pub samples: usize,
    pub seed: u64,
    pub max_forward_deviation: f64,
    pub max_section_roundtrip: f64,
}

/// Evidence that pulling back along a node-injective morphism projects onto
/// the domain total space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmersionReport {
    pub samples: usize,
    pub seed: u64,
    /// Codomain nodes outside the image; preimages are free there and get
    /// filled with zeros.
    pub unreached: Vec<NodeId>,
    pub max_preimage_error: f64,
}

/// Networks over the realized input tree of a node. The total space of
/// `tree` is the natural domain of that node's open system.
#[derive(Debug, Clone)]
pub struct RealizedInputTreeNetwork {
    pub tree: Network,
    pub to_ambient: NetworkMorphism,
    pub root_inclusion: NetworkMorphism,
}
