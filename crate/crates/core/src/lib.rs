//! Galerkin finite elements of arbitrary order on Liseikin graded meshes for
//! singularly perturbed boundary value problems with a simple interior
//! turning point,
//!
//! ```text
//!   -eps u'' + a(x) u' + c(x) u = f   on (-1, 1),   u(-1) = nu_l, u(1) = nu_r,
//!   a(x) = -x b(x),  b > 0,  c >= 0,  c(0) > 0,
//! ```
//!
//! together with the error measurement and convergence-study machinery used
//! to check eps-uniform rates on the manufactured cusp-layer example.
//!
//! Module map:
//! - [`mesh`]: graded mesh generator, the `kappa` constant and mesh-lemma diagnostics.
//! - [`problem`]: problem class, structural validation, the manufactured example.
//! - [`fem`]: reference element, quadrature, assembly, banded LU solve, FE functions.
//! - [`norms`]: energy / L2 / H1-semi errors, interpolant, supercloseness, exact P1 norm.
//! - [`studies`]: single runs, sweeps, rates, CSV output, reference tables, verify battery.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fem;
pub mod format;
pub mod mesh;
pub mod norms;
pub mod problem;
pub mod studies;

pub use error::{Error, Result};
pub use fem::{
    apply_dirichlet, assemble, gauss_rule, reference_element, solve, AssembledSystem, BandMatrix,
    FeFunction, NodePlacement, QuadratureRule, ReferenceElement, SolveOutcome,
};
pub use mesh::{bracket, build_mesh, kappa, phi, verify_mesh_lemmas, GradedMesh, MeshParams};
pub use norms::{error_norms, interpolant, p1_exact_l2, supercloseness, ErrorReport};
pub use problem::{sun_stynes, validate, ManufacturedSolution, SingularPerturbationProblem};
