//! Order-`k` Lagrange Galerkin discretisation on graded meshes.

mod assembly;
mod banded;
mod basis;
mod function;
mod quadrature;

pub use assembly::{apply_dirichlet, assemble, solve, AssembledSystem, SolveOutcome};
pub use banded::{BandLu, BandMatrix};
pub use basis::{reference_element, NodePlacement, ReferenceElement, Tabulation};
pub use function::FeFunction;
pub use quadrature::{gauss_rule, QuadratureRule};
