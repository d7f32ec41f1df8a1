//! Zometool structure: cube-lattice initialization, the four-term energy and
//! simulated annealing over local graph operators.

mod anneal;
mod energy;
mod init;
mod ops;
mod structure;
mod tau;

pub use anneal::{anneal, anneal_with_progress, metropolis_accept, AnnealParams, AnnealResult, OpStats, TracePoint};
pub use energy::{
    classify_nodes, energy_fidelity, energy_regularity, energy_simplicity, energy_terms, energy_total, energy_valence,
    forbidden_zone_penalty, simplicity_value, EnergyTerms, EnergyWeights, ForbiddenZone, Probe, ShapeContext,
};
pub use init::init_structure;
pub use ops::{
    added_elements, apply_local_op, collision_free, collision_free_local, del_node_at, del_strut_at, ins_node_at,
    ins_strut_at, propose, CollisionParams, OpKind, Reject,
};
pub use structure::{
    components, Edit, Node, NodeRecord, Strut, StructureDocument, StructureError, StrutRecord, ZomeStructure,
    STRUCTURE_SCHEMA_VERSION,
};
pub use tau::{estimate_target_tau, shape_similarity, TauEstimate, TauParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptError {
    #[error("no lattice cell of edge {b0_mm} mm fits inside the shape")]
    EmptyInitialization { b0_mm: f64 },
    #[error("shape similarity {best_similarity:.3} never reached the threshold {threshold}")]
    TauUnreachable { threshold: f64, best_similarity: f64 },
    #[error("{0}")]
    Invalid(String),
}
