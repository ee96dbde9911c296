use std::sync::Arc;

use rayon::prelude::*;

use super::banded::BandMatrix;
use super::basis::ReferenceElement;
use super::function::{dof_coordinates, num_dofs, FeFunction};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::mesh::GradedMesh;
use crate::problem::SingularPerturbationProblem;

/// Galerkin system `A u = b` with `A_{rs} = B_eps(phi_s, phi_r)` and `b_r = (f, phi_r)`.
///
/// Besides the (possibly boundary-modified) `matrix` and `rhs`, the
/// unmodified operator is kept split as `flux + reaction`: `flux` holds
/// `(eps phi_s', phi_r') + (a phi_s', phi_r)`, whose rows sum to zero because
/// the basis is a partition of unity, and `reaction` holds `(c phi_s, phi_r)`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: BandMatrix,
    pub rhs: Vec<f64>,
    pub flux: BandMatrix,
    pub reaction: BandMatrix,
    pub load: Vec<f64>,
    /// Prescribed `(u(-1), u(1))` once [`apply_dirichlet`] has run.
    pub boundary: Option<(f64, f64)>,
    pub mesh: Arc<GradedMesh>,
    pub element: Arc<ReferenceElement>,
    /// Coordinates of the global DOFs, left to right.
    pub dof_coords: Vec<f64>,
}

impl AssembledSystem {
    pub fn num_dofs(&self) -> usize {
        self.rhs.len()
    }

    /// `(B_eps(x, phi_r) - (f, phi_r))_r` for the unmodified operator.
    ///
    /// The flux part is applied as `sum_s D_rs (x_s - x_r)`, which avoids the
    /// cancellation of large stiffness entries against a smooth `x`.
    pub fn galerkin_residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.num_dofs();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|r| {
                let flux: f64 = self
                    .flux
                    .row_range(r)
                    .filter(|&s| s != r)
                    .map(|s| self.flux.get(r, s) * (x[s] - x[r]))
                    .sum();
                let reaction: f64 = self
                    .reaction
                    .row_range(r)
                    .map(|s| self.reaction.get(r, s) * x[s])
                    .sum();
                flux + reaction - self.load[r]
            })
            .collect()
    }

    /// `b - A x` for the system as posed, boundary rows included.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.galerkin_residual(x).into_iter().map(|v| -v).collect();
        if let Some((left, right)) = self.boundary {
            let last = r.len() - 1;
            r[0] = left - x[0];
            r[last] = right - x[last];
        }
        r
    }
}

/// Element-local contributions.
struct LocalSystem {
    flux: Vec<f64>,
    reaction: Vec<f64>,
    load: Vec<f64>,
}

/// Assembles `B_eps(v, w) = (eps v', w') + (a v', w) + (c v, w)` and `(f, w)`
/// over all global basis functions using `quad` on every element.
pub fn assemble(
    problem: &SingularPerturbationProblem,
    mesh: Arc<GradedMesh>,
    element: Arc<ReferenceElement>,
    quad: &QuadratureRule,
) -> Result<AssembledSystem> {
    if let Some(e) = mesh.intervals().iter().position(|&h| !(h > 0.0)) {
        return Err(Error::MeshDegeneracy(format!("element {e} has non-positive length")));
    }
    let k = element.order();
    let nloc = k + 1;
    let table = element.tabulate(quad);
    let eps = problem.eps;

    // element integrals are independent; merging below is sequential and ordered
    let locals: Vec<LocalSystem> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let (left, h) = mesh.element(e);
            let mut flux = vec![0.0; nloc * nloc];
            let mut reaction = vec![0.0; nloc * nloc];
            let mut load = vec![0.0; nloc];
            for (m, (&t, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
                let x = left + h * t;
                let weight = w * h;
                let (a, c, f) = ((problem.a)(x), (problem.c)(x), (problem.f)(x));
                let phi = table.values_at(m);
                let dphi = table.derivatives_at(m);
                for r in 0..nloc {
                    let (vr, dr) = (phi[r], dphi[r] / h);
                    load[r] += weight * f * vr;
                    for s in 0..nloc {
                        let (vs, ds) = (phi[s], dphi[s] / h);
                        flux[r * nloc + s] += weight * (eps * ds * dr + a * ds * vr);
                        reaction[r * nloc + s] += weight * c * vs * vr;
                    }
                }
            }
            LocalSystem { flux, reaction, load }
        })
        .collect();

    let n = num_dofs(&mesh, &element);
    let mut flux = BandMatrix::zeros(n, k, k);
    let mut reaction = BandMatrix::zeros(n, k, k);
    let mut load = vec![0.0; n];
    for (e, local) in locals.iter().enumerate() {
        let base = e * k;
        for r in 0..nloc {
            load[base + r] += local.load[r];
            for s in 0..nloc {
                if r != s {
                    flux.add(base + r, base + s, local.flux[r * nloc + s]);
                }
                reaction.add(base + r, base + s, local.reaction[r * nloc + s]);
            }
        }
    }
    // exact zero row sums of the flux part
    let mut matrix = reaction.clone();
    for r in 0..n {
        let off: f64 = flux.row_range(r).filter(|&s| s != r).map(|s| flux.get(r, s)).sum();
        flux.set(r, r, -off);
        for s in flux.row_range(r) {
            matrix.add(r, s, flux.get(r, s));
        }
    }
    let dof_coords = dof_coordinates(&mesh, &element);
    Ok(AssembledSystem {
        matrix,
        rhs: load.clone(),
        flux,
        reaction,
        load,
        boundary: None,
        mesh,
        element,
        dof_coords,
    })
}

/// Imposes `u(-1) = nu_left`, `u(1) = nu_right` strongly: the boundary rows
/// become identity rows and the boundary columns are moved to the right-hand side.
pub fn apply_dirichlet(mut system: AssembledSystem, nu_left: f64, nu_right: f64) -> AssembledSystem {
    let n = system.num_dofs();
    let last = n - 1;
    for (dof, value) in [(0, nu_left), (last, nu_right)] {
        for c in system.matrix.row_range(dof) {
            system.matrix.set(dof, c, 0.0);
        }
        system.matrix.set(dof, dof, 1.0);
        system.rhs[dof] = value;
        for r in system.matrix.row_range(dof) {
            if r == dof {
                continue;
            }
            let entry = system.matrix.get(r, dof);
            if entry != 0.0 {
                system.rhs[r] -= entry * value;
                system.matrix.set(r, dof, 0.0);
            }
        }
    }
    system.boundary = Some((nu_left, nu_right));
    system
}

/// Discrete solution together with its relative algebraic residual.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub function: FeFunction,
    /// `||A x - b||_inf / ||b||_inf` (absolute when `b = 0`).
    pub relative_residual: f64,
}

/// Maximum number of iterative refinement sweeps after the first solve.
const REFINEMENT_STEPS: usize = 4;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Solves the (boundary-modified) system by band LU with partial pivoting,
/// followed by iterative refinement against [`AssembledSystem::residual`].
pub fn solve(system: &AssembledSystem) -> Result<SolveOutcome> {
    let lu = system.matrix.lu()?;
    let mut x = lu.solve(&system.rhs);
    let mut residual = system.residual(&x);
    let mut res = max_abs(&residual);
    for _ in 0..REFINEMENT_STEPS {
        if res == 0.0 {
            break;
        }
        let dx = lu.solve(&residual);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let next = system.residual(&candidate);
        let next_res = max_abs(&next);
        if !(next_res < res) {
            break;
        }
        x = candidate;
        residual = next;
        res = next_res;
    }
    let bnorm = system.rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
    let relative_residual = if bnorm > 0.0 { res / bnorm } else { res };
    let function = FeFunction::new(system.mesh.clone(), system.element.clone(), x)?;
    Ok(SolveOutcome {
        function,
        relative_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{gauss_rule, reference_element, NodePlacement};
    use crate::mesh::{build_mesh, MeshParams};

    fn constant_problem(eps: f64, a: f64, c: f64, f: f64) -> SingularPerturbationProblem {
        SingularPerturbationProblem {
            eps,
            a: Arc::new(move |_| a),
            a_prime: Arc::new(|_| 0.0),
            c: Arc::new(move |_| c),
            f: Arc::new(move |_| f),
            nu_left: 0.0,
            nu_right: 0.0,
        }
    }

    /// Uniform mesh of four intervals of length 1/2; rows are rescaled by `h`.
    fn two_intervals() -> Arc<GradedMesh> {
        Arc::new(build_mesh(MeshParams::new(2, 1.0, 1.0).unwrap()).unwrap())
    }

    #[test]
    fn p1_laplacian_row() {
        let mesh = two_intervals();
        let el = Arc::new(reference_element(1, NodePlacement::GaussLobatto).unwrap());
        let sys = assemble(&constant_problem(1.0, 0.0, 0.0, 0.0), mesh, el, &gauss_rule(4).unwrap()).unwrap();
        let h = 0.5;
        let row: Vec<f64> = (1..=3).map(|c| sys.matrix.get(2, c) * h).collect();
        for (got, want) in row.iter().zip([-1.0, 2.0, -1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn p1_mass_row() {
        let mesh = two_intervals();
        let el = Arc::new(reference_element(1, NodePlacement::GaussLobatto).unwrap());
        let sys = assemble(&constant_problem(0.0, 0.0, 1.0, 0.0), mesh, el, &gauss_rule(4).unwrap()).unwrap();
        let h = 0.5;
        for (c, want) in (1..=3).zip([1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0]) {
            assert!((sys.matrix.get(2, c) / h - want).abs() < 1e-14);
        }
    }

    #[test]
    fn band_and_dimension() {
        let mesh = Arc::new(build_mesh(MeshParams::new(8, 0.2, 1e-6).unwrap()).unwrap());
        for k in 1..=4 {
            let el = Arc::new(reference_element(k, NodePlacement::GaussLobatto).unwrap());
            let sys = assemble(&constant_problem(1e-3, 0.5, 1.0, 1.0), mesh.clone(), el, &gauss_rule(k + 3).unwrap()).unwrap();
            assert_eq!(sys.num_dofs(), 16 * k + 1);
            let (below, above) = sys.matrix.occupied_bandwidth();
            assert_eq!((below, above), (k, k));
            let sys = apply_dirichlet(sys, 0.3, -0.2);
            let (below, above) = sys.matrix.occupied_bandwidth();
            assert!(below <= k && above <= k);
        }
    }

    #[test]
    fn homogeneous_boundary_rows() {
        let mesh = two_intervals();
        let el = Arc::new(reference_element(2, NodePlacement::GaussLobatto).unwrap());
        let sys = assemble(&constant_problem(1.0, 0.0, 1.0, 2.0), mesh, el, &gauss_rule(5).unwrap()).unwrap();
        let sys = apply_dirichlet(sys, 0.0, 0.0);
        let n = sys.num_dofs();
        assert_eq!(sys.rhs[0], 0.0);
        assert_eq!(sys.rhs[n - 1], 0.0);
        for c in 0..n {
            assert_eq!(sys.matrix.get(0, c), if c == 0 { 1.0 } else { 0.0 });
            assert_eq!(sys.matrix.get(n - 1, c), if c == n - 1 { 1.0 } else { 0.0 });
            assert_eq!(sys.matrix.get(c, 0), if c == 0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn linear_harmonic_solution() {
        let mesh = Arc::new(build_mesh(MeshParams::new(5, 0.4, 1e-3).unwrap()).unwrap());
        for k in 1..=3 {
            let el = Arc::new(reference_element(k, NodePlacement::GaussLobatto).unwrap());
            let sys = assemble(&constant_problem(1.0, 0.0, 0.0, 0.0), mesh.clone(), el, &gauss_rule(k + 3).unwrap()).unwrap();
            let out = solve(&apply_dirichlet(sys, 0.0, 1.0)).unwrap();
            for (x, u) in out.function.dof_coordinates().iter().zip(out.function.coefficients()) {
                assert!((u - 0.5 * (x + 1.0)).abs() < 1e-12, "k={k} x={x}: {u}");
            }
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let mesh = Arc::new(build_mesh(MeshParams::new(6, 0.3, 1e-4).unwrap()).unwrap());
        let el = Arc::new(reference_element(2, NodePlacement::GaussLobatto).unwrap());
        let sys = assemble(&constant_problem(1e-4, 0.0, 1.0, 0.0), mesh, el, &gauss_rule(5).unwrap()).unwrap();
        let out = solve(&apply_dirichlet(sys, 0.0, 0.0)).unwrap();
        assert!(out.function.coefficients().iter().all(|&u| u == 0.0));
        assert_eq!(out.relative_residual, 0.0);
    }
}
