//! File formats: networks with dynamics as JSON, morphisms and partitions
//! as JSON, trajectories as CSV.
//!
//! A network file carries the graph, per-node dimensions, and one expression
//! per coordinate. Input slots are implicit: slot `s` of a node is its `s`-th
//! in-edge in id order. Families whose in-memory binding differs are
//! re-indexed to that canonical order on emission, which never changes what
//! the expressions compute, only which slot number names which edge.
//!
//! All emitters iterate ordered maps, so equal inputs produce byte-equal
//! output. Floats are printed with 17 significant digits and survive the
//! round trip through text unchanged.

use crate::expr::{self, Expr};
use crate::graph::{
    DirectedMultigraph, EdgeId, GraphError, GraphMorphism, MorphismError, NodeId,
};
use crate::network::{Network, NetworkError, PhaseSpaces, ShapeError, TotalPoint};
use crate::quotient::{NodePartition, QuotientError, QuotientResult};
use crate::system::{check_family, ControlFamily, NodeSystem, OpenSystem, SystemError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("node {node}: space must be \"euclidean\", got {space:?}")]
    UnknownSpace { node: String, space: String },
    #[error("node {node}: {error}")]
    NodeDynamics { node: String, error: SystemError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Partition(#[from] QuotientError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: String,
    pub dim: usize,
    pub space: String,
    pub dynamics: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub id: String,
    pub src: String,
    pub tgt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: Vec<NodeEntry>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismFile {
    pub nodes: BTreeMap<String, String>,
    pub edges: BTreeMap<String, String>,
}

/// Combined output of the quotient commands: the base network with its
/// descended dynamics, the projection, and the partition that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientFile {
    pub base: NetworkFile,
    pub projection: MorphismFile,
    pub partition: Vec<Vec<String>>,
}

/// Slot `s` of `node` is its `s`-th in-edge in id order.
fn canonical_slots(graph: &DirectedMultigraph, node: &NodeId) -> Vec<EdgeId> {
    graph.in_edges(node).iter().map(|e| e.id.clone()).collect()
}

pub fn network_from_file(file: &NetworkFile) -> Result<(Network, ControlFamily), IoError> {
    let graph = DirectedMultigraph::from_parts(
        file.nodes.iter().map(|n| NodeId::from(n.id.as_str())),
        file.edges
            .iter()
            .map(|e| (EdgeId::from(e.id.as_str()), NodeId::from(e.src.as_str()), NodeId::from(e.tgt.as_str()))),
    )?;
    let dims = file.nodes.iter().map(|n| (NodeId::from(n.id.as_str()), n.dim)).collect();
    let net = Network::new(graph, PhaseSpaces { dims })?;

    let mut systems = BTreeMap::new();
    for entry in &file.nodes {
        if entry.space != "euclidean" {
            return Err(IoError::UnknownSpace {
                node: entry.id.clone(),
                space: entry.space.clone(),
            });
        }
        let node = NodeId::from(entry.id.as_str());
        let slots = canonical_slots(net.graph(), &node);
        let input_dims = slots
            .iter()
            .map(|e| net.dim(&net.graph().edge(e).unwrap().src).unwrap())
            .collect();
        let signature = expr::SystemSignature::new(entry.dim, input_dims)
            .with_parameters(entry.params.clone());
        let sources: Vec<&str> = entry.dynamics.iter().map(String::as_str).collect();
        let system = OpenSystem::parse(signature, &sources)
            .map_err(|error| IoError::NodeDynamics { node: entry.id.clone(), error })?;
        systems.insert(node, NodeSystem { system, slot_edges: slots });
    }
    let family = ControlFamily::new(systems);
    check_family(&net, &family)?;
    Ok((net, family))
}

/// Renumber input slots in an expression. `perm[s]` is the new index of the
/// old slot `s`; sources are untouched, so evaluation is unchanged once the
/// binding is permuted the same way.
fn remap_slots(e: &Expr, perm: &[usize]) -> Expr {
    match e {
        Expr::InputVar { slot, coord } => Expr::InputVar { slot: perm[*slot], coord: *coord },
        Expr::Neg(inner) => Expr::Neg(Box::new(remap_slots(inner, perm))),
        Expr::Bin(op, l, r) => Expr::Bin(
            *op,
            Box::new(remap_slots(l, perm)),
            Box::new(remap_slots(r, perm)),
        ),
        Expr::App(f, arg) => Expr::App(*f, Box::new(remap_slots(arg, perm))),
        other => other.clone(),
    }
}

pub fn network_to_file(net: &Network, family: &ControlFamily) -> Result<NetworkFile, IoError> {
    check_family(net, family)?;
    let mut nodes = Vec::new();
    for (node, ns) in &family.systems {
        let canonical = canonical_slots(net.graph(), node);
        let dynamics = if ns.slot_edges == canonical {
            ns.system.body().iter().map(expr::print).collect()
        } else {
            let perm: Vec<usize> = ns
                .slot_edges
                .iter()
                .map(|e| canonical.iter().position(|c| c == e).unwrap())
                .collect();
            ns.system.body().iter().map(|b| expr::print(&remap_slots(b, &perm))).collect()
        };
        nodes.push(NodeEntry {
            id: node.to_string(),
            dim: ns.system.signature().self_dim,
            space: "euclidean".to_string(),
            dynamics,
            params: ns.system.signature().parameters.clone(),
        });
    }
    let edges = net
        .graph()
        .edges()
        .map(|e| EdgeEntry { id: e.id.to_string(), src: e.src.to_string(), tgt: e.tgt.to_string() })
        .collect();
    Ok(NetworkFile { nodes, edges })
}

pub fn parse_network(text: &str) -> Result<(Network, ControlFamily), IoError> {
    network_from_file(&serde_json::from_str(text)?)
}

pub fn render_network(net: &Network, family: &ControlFamily) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(&network_to_file(net, family)?)?)
}

pub fn parse_morphism(
    text: &str,
    domain: &DirectedMultigraph,
    codomain: &DirectedMultigraph,
) -> Result<GraphMorphism, IoError> {
    let file: MorphismFile = serde_json::from_str(text)?;
    let node_map = file
        .nodes
        .iter()
        .map(|(a, b)| (NodeId::from(a.as_str()), NodeId::from(b.as_str())))
        .collect();
    let edge_map = file
        .edges
        .iter()
        .map(|(a, b)| (EdgeId::from(a.as_str()), EdgeId::from(b.as_str())))
        .collect();
    Ok(GraphMorphism::new(domain.clone(), codomain.clone(), node_map, edge_map)?)
}

pub fn morphism_to_file(m: &GraphMorphism) -> MorphismFile {
    MorphismFile {
        nodes: m.node_map().iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        edges: m.edge_map().iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    }
}

pub fn render_morphism(m: &GraphMorphism) -> String {
    serde_json::to_string_pretty(&morphism_to_file(m)).expect("morphism files always serialize")
}

/// Initial conditions: `{"node id": [numbers]}`, one entry per node.
pub fn parse_point(text: &str, net: &Network) -> Result<TotalPoint, IoError> {
    let raw: BTreeMap<String, Vec<f64>> = serde_json::from_str(text)?;
    let point = TotalPoint::new(
        raw.into_iter().map(|(n, v)| (NodeId::from(n.as_str()), v)).collect(),
    );
    net.check_point(&point)?;
    Ok(point)
}

pub fn parse_partition(text: &str) -> Result<NodePartition, IoError> {
    #[derive(Deserialize)]
    struct PartitionFile {
        blocks: Vec<Vec<String>>,
    }
    let file: PartitionFile = serde_json::from_str(text)?;
    let blocks = file
        .blocks
        .into_iter()
        .map(|b| b.into_iter().map(|n| NodeId::from(n.as_str())).collect())
        .collect();
    Ok(NodePartition::new(blocks)?)
}

pub fn partition_blocks(p: &NodePartition) -> Vec<Vec<String>> {
    p.blocks().iter().map(|b| b.iter().map(ToString::to_string).collect()).collect()
}

pub fn quotient_to_file(qr: &QuotientResult, descended: &ControlFamily) -> Result<QuotientFile, IoError> {
    Ok(QuotientFile {
        base: network_to_file(&qr.base, descended)?,
        projection: morphism_to_file(qr.projection.morphism()),
        partition: partition_blocks(&qr.partition),
    })
}

/// Header `t,<node>.<i>,...` with nodes in id order and coordinates
/// ascending; one row per step, every value with 17 significant digits.
pub fn trajectory_to_csv(net: &Network, traj: &crate::dynamics::Trajectory) -> String {
    let mut columns = vec!["t".to_string()];
    for (node, dim) in &net.spaces().dims {
        for i in 0..*dim {
            columns.push(format!("{node}.{i}"));
        }
    }
    let mut out = columns.join(",");
    out.push('\n');
    for (t, state) in traj.times.iter().zip(&traj.states) {
        out.push_str(&format!("{t:.16e}"));
        for values in state.components.values() {
            for v in values {
                out.push_str(&format!(",{v:.16e}"));
            }
        }
        out.push('\n');
    }
    out
}
