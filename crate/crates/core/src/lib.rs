pub mod edge;
pub mod error;
pub mod fatten;
pub mod hamiltonian;
pub mod junction;
pub(crate) mod numerics;
pub mod viscous;

pub use edge::{
    EdgeSpec, FarBc, GridFunction1D, NodeBc, Relaxation, Role, SolveReport, SolverParams,
};
pub use error::{Error, Result};
pub use hamiltonian::{Hamiltonian, Hamiltonian2D};
pub use junction::{JunctionCondition, JunctionGridFunction, JunctionProblem, NodeDiagnostics};
