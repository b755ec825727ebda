//! Effective graph resistance and exhaustive node-criticality scoring.

mod criticality;
mod eigen;
mod resistance;

pub use criticality::{criticality_scores, label_nodes, read_criticality_csv, write_criticality_csv, Class, CriticalityResult, CriticalityRow};
pub use eigen::{symmetric_eigen, symmetric_eigenvalues, Spectrum, SymmetricEigen};
pub use resistance::{
    effective_graph_resistance, laplacian_matrix, pairwise_effective_resistance, resistance_from_spectrum,
    ResistanceOracle,
};
