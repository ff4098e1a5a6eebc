//! Coupled continuous-time dynamical systems on directed multigraphs.
//!
//! A network here is a directed multigraph together with a Euclidean phase
//! space per node and one open system per node: a map from the node's own
//! state and one input vector per in-edge to the node's state derivative.
//! Wiring every input slot to the current state of its edge's source node
//! turns the family into a single vector field on the product space.
//!
//! Graph fibrations — morphisms along which every in-edge of an image node
//! lifts uniquely — transport dynamics contravariantly: the pullback copies
//! each image node's system and re-binds its input slots through the edge
//! bijections, and the induced map of total phase spaces intertwines the
//! two vector fields. Because the pullback reuses expressions rather than
//! rewriting them, the intertwining holds bitwise in floating point, and
//! trajectory-level consequences (semiconjugacy, invariance of the
//! agreement subspace of a surjective fibration) inherit that exactness.
//!
//! The crate also computes the coarsest balanced partition of a network and
//! the induced minimal quotient base, and reads and writes the JSON/CSV
//! formats used by the command-line tool.

pub mod dynamics;
pub mod expr;
pub mod graph;
pub mod io;
pub mod network;
pub mod quotient;
pub mod sample;
pub mod system;

pub mod prelude {
    pub use crate::dynamics::{
        check_fields_conjugate, check_polydiagonal_invariance, check_trajectories_semiconjugate,
        check_trajectory_semiconjugacy, check_vectorfield_conjugacy, rk4_integrate, rk4_step,
        ConjugacyReport, DynamicsError, IntegratorConfig, InvarianceReport, SemiconjugacyReport,
        Trajectory,
    };
    pub use crate::expr::{parse, print, BinOp, EvalError, Expr, Func, ParseError, SystemSignature};
    pub use crate::graph::{
        DirectedMultigraph, Edge, EdgeId, FibrationFailure, FibrationOutcome, FibrationWitness,
        GraphError, GraphMorphism, InputTree, MorphismError, NodeId,
    };
    pub use crate::network::{
        Network, NetworkError, NetworkMorphism, PhaseSpaces, ShapeError, TangentPoint, TotalPoint,
    };
    pub use crate::quotient::{
        coarsest_balanced_partition, pushforward_family, quotient_network, NodePartition,
        QuotientError, QuotientResult,
    };
    pub use crate::sample::Rng;
    pub use crate::system::{
        check_family, family_consistency, pullback_family, ConsistencyReport, ControlFamily,
        InterconnectedField, NodeSystem, OpenSystem, SystemError,
    };
}
