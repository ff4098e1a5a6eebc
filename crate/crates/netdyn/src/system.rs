//! Open systems on nodes, their interconnection, and pullback.
//!
//! An open system computes a state derivative for one node from the node's
//! own state and one input vector per in-edge. A control family assigns an
//! open system to every node; interconnection wires slot `s` of each node to
//! the current state of the source of its bound edge, producing one vector
//! field on the total phase space.
//!
//! Pulling a family back along a fibration copies each image node's system
//! and re-binds its slots through the fibration's lift bijections. Bodies
//! are never rewritten: slot indices inside expressions stay fixed, and only
//! the slot-to-edge binding table changes.

use crate::expr::{EvalError, Expr, SignatureViolation, SystemSignature};
use crate::graph::{EdgeId, FibrationFailure, FibrationWitness, NodeId};
use crate::network::{Network, NetworkMorphism, ShapeError, TangentPoint, TotalPoint};
use crate::sample::Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("body has {found} expressions, but the state dimension is {expected}")]
    BodyLength { expected: usize, found: usize },
    #[error("body[{coord}]: {violation}")]
    BodyViolation { coord: usize, violation: SignatureViolation },
    #[error("body[{coord}]: {error}")]
    BodyParse { coord: usize, error: crate::expr::ParseError },
    #[error("no system assigned to node {0}")]
    MissingSystem(NodeId),
    #[error("system assigned to {0}, which is not a node")]
    ExtraneousSystem(NodeId),
    #[error("node {node}: system has state dimension {found}, node has {expected}")]
    SelfDimMismatch { node: NodeId, expected: usize, found: usize },
    #[error("node {node}: {found} slots bound, expected {expected}")]
    SlotCountMismatch { node: NodeId, expected: usize, found: usize },
    #[error("node {node}: slot {slot} is bound to {edge}, which is not an in-edge of the node")]
    SlotNotAnInEdge { node: NodeId, slot: usize, edge: EdgeId },
    #[error("node {node}: edge {edge} is bound to more than one slot")]
    DuplicateSlotEdge { node: NodeId, edge: EdgeId },
    #[error("node {node}: slot {slot} has dimension {found}, but the source of {edge} has dimension {expected}")]
    SlotDimMismatch { node: NodeId, slot: usize, edge: EdgeId, expected: usize, found: usize },
    #[error("not a fibration: at node {}, in-edge {} of the image has {} lifts", .0.node, .0.codomain_edge, .0.lifts.len())]
    NotAFibration(FibrationFailure),
    #[error("fibration witness covers no lifts at node {0}")]
    MissingWitnessNode(NodeId),
    #[error("fibration witness has no lift of {codomain_edge} at node {node}")]
    MissingLift { node: NodeId, codomain_edge: EdgeId },
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One node's dynamics: a signature and one expression per state coordinate.
/// The body is validated against the signature at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSystem {
    signature: SystemSignature,
    body: Vec<Expr>,
}

impl OpenSystem {
    pub fn new(signature: SystemSignature, body: Vec<Expr>) -> Result<Self, SystemError> {
        if body.len() != signature.self_dim {
            return Err(SystemError::BodyLength {
                expected: signature.self_dim,
                found: body.len(),
            });
        }
        for (coord, e) in body.iter().enumerate() {
            if let Some(violation) = e.validate(&signature).into_iter().next() {
                return Err(SystemError::BodyViolation { coord, violation });
            }
        }
        Ok(OpenSystem { signature, body })
    }

    /// Parse one expression source per coordinate, then construct.
    pub fn parse(signature: SystemSignature, sources: &[&str]) -> Result<Self, SystemError> {
        let body = sources
            .iter()
            .enumerate()
            .map(|(coord, src)| {
                crate::expr::parse(src).map_err(|error| SystemError::BodyParse { coord, error })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(signature, body)
    }

    pub fn signature(&self) -> &SystemSignature {
        &self.signature
    }

    pub fn body(&self) -> &[Expr] {
        &self.body
    }

    /// Evaluate the state derivative at a state and per-slot inputs.
    pub fn eval(&self, state: &[f64], inputs: &[&[f64]]) -> Result<Vec<f64>, EvalError> {
        self.body
            .iter()
            .map(|e| e.eval(state, inputs, &self.signature.parameters))
            .collect()
    }
}

/// An open system placed at a node: slot `s` of the body reads its input
/// from the source of `slot_edges[s]`. The binding table is data, not part
/// of the body, so pullbacks can re-bind slots without touching expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSystem {
    pub system: OpenSystem,
    pub slot_edges: Vec<EdgeId>,
}

/// One node system per node of a network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlFamily {
    pub systems: BTreeMap<NodeId, NodeSystem>,
}

impl ControlFamily {
    pub fn new(systems: BTreeMap<NodeId, NodeSystem>) -> Self {
        ControlFamily { systems }
    }
}

/// Check that a family fits a network: one system per node, state dimension
/// matching the node, and slots binding the node's in-edges bijectively with
/// matching source dimensions. Reports the first mismatch in node order.
pub fn check_family(net: &Network, family: &ControlFamily) -> Result<(), SystemError> {
    for node in net.graph().nodes() {
        let ns = family
            .systems
            .get(node)
            .ok_or_else(|| SystemError::MissingSystem(node.clone()))?;
        let sig = ns.system.signature();
        let node_dim = net.dim(node).unwrap();
        if sig.self_dim != node_dim {
            return Err(SystemError::SelfDimMismatch {
                node: node.clone(),
                expected: node_dim,
                found: sig.self_dim,
            });
        }
        let in_degree = net.graph().in_edges(node).len();
        if ns.slot_edges.len() != in_degree {
            return Err(SystemError::SlotCountMismatch {
                node: node.clone(),
                expected: in_degree,
                found: ns.slot_edges.len(),
            });
        }
        if sig.input_dims.len() != ns.slot_edges.len() {
            return Err(SystemError::SlotCountMismatch {
                node: node.clone(),
                expected: ns.slot_edges.len(),
                found: sig.input_dims.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for (slot, edge_id) in ns.slot_edges.iter().enumerate() {
            let edge = net
                .graph()
                .edge(edge_id)
                .filter(|e| &e.tgt == node)
                .ok_or_else(|| SystemError::SlotNotAnInEdge {
                    node: node.clone(),
                    slot,
                    edge: edge_id.clone(),
                })?;
            if !seen.insert(edge_id.clone()) {
                return Err(SystemError::DuplicateSlotEdge {
                    node: node.clone(),
                    edge: edge_id.clone(),
                });
            }
            let src_dim = net.dim(&edge.src).unwrap();
            if sig.input_dims[slot] != src_dim {
                return Err(SystemError::SlotDimMismatch {
                    node: node.clone(),
                    slot,
                    edge: edge_id.clone(),
                    expected: src_dim,
                    found: sig.input_dims[slot],
                });
            }
        }
    }
    for node in family.systems.keys() {
        if !net.graph().has_node(node) {
            return Err(SystemError::ExtraneousSystem(node.clone()));
        }
    }
    Ok(())
}

/// A control family wired over its network: a vector field on the total
/// phase space. Each node's slot inputs are the current states of the
/// sources of its bound edges; parallel edges from one source feed that
/// source's state to each of their slots separately.
#[derive(Debug, Clone, PartialEq)]
pub struct InterconnectedField {
    network: Network,
    family: ControlFamily,
    /// Source node of each slot, per node, precomputed from the bindings.
    wiring: BTreeMap<NodeId, Vec<NodeId>>,
}

impl InterconnectedField {
    pub fn new(network: Network, family: ControlFamily) -> Result<Self, SystemError> {
        check_family(&network, &family)?;
        let wiring = family
            .systems
            .iter()
            .map(|(node, ns)| {
                let sources = ns
                    .slot_edges
                    .iter()
                    .map(|e| network.graph().edge(e).unwrap().src.clone())
                    .collect();
                (node.clone(), sources)
            })
            .collect();
        Ok(InterconnectedField { network, family, wiring })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn family(&self) -> &ControlFamily {
        &self.family
    }

    /// Evaluate the vector field at a point of the total phase space.
    pub fn eval(&self, x: &TotalPoint) -> Result<TangentPoint, SystemError> {
        self.network.check_point(x)?;
        let mut components = BTreeMap::new();
        for (node, ns) in &self.family.systems {
            let state = &x.components[node];
            let inputs: Vec<&[f64]> = self.wiring[node]
                .iter()
                .map(|src| x.components[src].as_slice())
                .collect();
            components.insert(node.clone(), ns.system.eval(state, &inputs)?);
        }
        Ok(TotalPoint { components })
    }
}

/// Pull a codomain family back along a fibration: every domain node receives
/// a copy of its image's system, with slot `s` re-bound from the image's
/// edge to that edge's unique lift at the node.
pub fn pullback_family(
    phi: &NetworkMorphism,
    witness: &FibrationWitness,
    family: &ControlFamily,
) -> Result<ControlFamily, SystemError> {
    check_family(phi.codomain(), family)?;
    let mut systems = BTreeMap::new();
    for node in phi.domain().graph().nodes() {
        let image = phi
            .morphism()
            .node_image(node)
            .expect("morphism is total by construction");
        let template = &family.systems[image];
        let lifts = witness
            .lifts
            .get(node)
            .ok_or_else(|| SystemError::MissingWitnessNode(node.clone()))?;
        let slot_edges = template
            .slot_edges
            .iter()
            .map(|cod_edge| {
                lifts.get(cod_edge).cloned().ok_or_else(|| SystemError::MissingLift {
                    node: node.clone(),
                    codomain_edge: cod_edge.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        systems.insert(
            node.clone(),
            NodeSystem { system: template.system.clone(), slot_edges },
        );
    }
    Ok(ControlFamily { systems })
}

/// The worst disagreement found by [`family_consistency`], with the sample
/// at which it occurred. Inputs are keyed by the shared image's in-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyWitness {
    pub nodes: (NodeId, NodeId),
    pub state: Vec<f64>,
    pub inputs: BTreeMap<EdgeId, Vec<f64>>,
    pub deviation: f64,
}

/// Outcome of a sampled family-consistency check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_deviation: f64,
    pub worst: Option<ConsistencyWitness>,
}

pub const CONSISTENCY_SAMPLES: usize = 64;
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Decide numerically whether a domain family descends along a fibration:
/// nodes sharing an image must compute the same derivative once their slots
/// are aligned through the morphism's edge map. Sampling is used instead of
/// syntactic body comparison, since equal behavior does not require equal
/// syntax. The seed is recorded in the report.
pub fn family_consistency(
    phi: &NetworkMorphism,
    family: &ControlFamily,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ConsistencyReport, SystemError> {
    check_family(phi.domain(), family)?;
    let mut fibers: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (node, image) in phi.morphism().node_map() {
        fibers.entry(image).or_default().push(node);
    }
    let mut rng = Rng::new(seed);
    let mut max_deviation: f64 = 0.0;
    let mut worst: Option<ConsistencyWitness> = None;
    for (image, members) in &fibers {
        if members.len() < 2 {
            continue;
        }
        let self_dim = phi.codomain().dim(image).unwrap();
        let cod_in_edges = phi.codomain().graph().in_edges(image);
        for _ in 0..samples {
            let state: Vec<f64> = (0..self_dim).map(|_| rng.next_normal()).collect();
            let inputs: BTreeMap<EdgeId, Vec<f64>> = cod_in_edges
                .iter()
                .map(|e| {
                    let dim = phi.codomain().dim(&e.src).unwrap();
                    (e.id.clone(), (0..dim).map(|_| rng.next_normal()).collect())
                })
                .collect();
            let mut outputs = Vec::with_capacity(members.len());
            for member in members {
                let ns = &family.systems[*member];
                let aligned: Vec<&[f64]> = ns
                    .slot_edges
                    .iter()
                    .map(|e| {
                        let cod_edge = phi
                            .morphism()
                            .edge_image(e)
                            .expect("morphism is total by construction");
                        inputs[cod_edge].as_slice()
                    })
                    .collect();
                outputs.push(ns.system.eval(&state, &aligned)?);
            }
            for (i, a) in members.iter().enumerate() {
                for (j, b) in members.iter().enumerate().skip(i + 1) {
                    let dev = outputs[i]
                        .iter()
                        .zip(&outputs[j])
                        .map(|(p, q)| (p - q).abs())
                        .fold(0.0f64, f64::max);
                    if dev > max_deviation || worst.is_none() {
                        max_deviation = max_deviation.max(dev);
                        worst = Some(ConsistencyWitness {
                            nodes: ((*a).clone(), (*b).clone()),
                            state: state.clone(),
                            inputs: inputs.clone(),
                            deviation: dev,
                        });
                    }
                }
            }
        }
    }
    Ok(ConsistencyReport {
        consistent: max_deviation <= tol,
        samples,
        tol,
        seed,
        max_deviation,
        worst,
    })
}
