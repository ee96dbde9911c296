//! Error measurement against a manufactured solution.
//!
//! The energy norm is `|||v|||_eps = (eps |v|_1^2 + ||v||^2)^{1/2}`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{gauss_rule, FeFunction, QuadratureRule, ReferenceElement};
use crate::mesh::GradedMesh;
use crate::problem::ManufacturedSolution;

/// Errors of one discrete solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// `|||u - u_N|||_eps`
    pub energy: f64,
    /// `||u - u_N||`
    pub l2: f64,
    /// `|u - u_N|_1`
    pub h1_semi: f64,
    /// `||u - u_I||`
    pub interp_l2: f64,
    /// `|||u - u_I|||_eps`
    pub interp_energy: f64,
    /// `|||u_I - u_N|||_eps`
    pub supercloseness: f64,
    pub quadrature_points_per_element: usize,
    pub subdivision_depth: usize,
}

/// Oversampled quadrature used for `u - u_N`: `points` Gauss points on each of
/// `2^depth` equal pieces of every element, `2^layer_depth` pieces on the two
/// elements touching the turning point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorQuadrature {
    pub points: usize,
    pub depth: usize,
    pub layer_depth: usize,
}

impl ErrorQuadrature {
    /// `k + 3` points, depth 2, depth 5 next to `x = 0`.
    pub fn for_order(k: usize) -> Self {
        Self {
            points: k + 3,
            depth: 2,
            layer_depth: 5,
        }
    }
}

/// Nodal interpolant `u_I` of the exact solution.
pub fn interpolant(
    sol: &ManufacturedSolution,
    mesh: Arc<GradedMesh>,
    element: Arc<ReferenceElement>,
) -> FeFunction {
    FeFunction::interpolate(mesh, element, |x| (sol.u)(x))
}

/// Squared L2 and H1-seminorm of `u - v` over all elements, summed left to right.
fn squared_errors(
    sol: &ManufacturedSolution,
    v: &FeFunction,
    rule: &QuadratureRule,
    opts: ErrorQuadrature,
) -> (f64, f64) {
    let mesh = v.mesh();
    let n = mesh.n();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for e in 0..mesh.num_elements() {
        let depth = if e + 1 == n || e == n { opts.layer_depth } else { opts.depth };
        let pieces = 1usize << depth;
        let (left, h) = mesh.element(e);
        let piece = 1.0 / pieces as f64;
        for p in 0..pieces {
            for (&t, &w) in rule.points.iter().zip(&rule.weights) {
                let s = (p as f64 + t) * piece;
                let x = left + h * s;
                let (value, slope) = v.evaluate_local(e, s);
                let weight = w * piece * h;
                let d0 = (sol.u)(x) - value;
                let d1 = (sol.u_prime)(x) - slope;
                l2 += weight * d0 * d0;
                h1 += weight * d1 * d1;
            }
        }
    }
    (l2, h1)
}

/// Energy, L2 and H1-seminorm errors of `u_n` plus the interpolation and
/// supercloseness quantities on the same space.
pub fn error_norms(
    sol: &ManufacturedSolution,
    u_n: &FeFunction,
    eps: f64,
    opts: ErrorQuadrature,
) -> Result<ErrorReport> {
    let k = u_n.order();
    if opts.points < k + 3 {
        return Err(Error::Parameter(format!(
            "error quadrature needs at least k + 3 = {} points, got {}",
            k + 3,
            opts.points
        )));
    }
    let rule = gauss_rule(opts.points)?;
    let (l2_sq, h1_sq) = squared_errors(sol, u_n, &rule, opts);
    let u_i = interpolant(sol, u_n.mesh().clone(), u_n.element().clone());
    let (il2_sq, ih1_sq) = squared_errors(sol, &u_i, &rule, opts);
    Ok(ErrorReport {
        energy: (eps * h1_sq + l2_sq).sqrt(),
        l2: l2_sq.sqrt(),
        h1_semi: h1_sq.sqrt(),
        interp_l2: il2_sq.sqrt(),
        interp_energy: (eps * ih1_sq + il2_sq).sqrt(),
        supercloseness: supercloseness(&u_i, u_n, eps)?,
        quadrature_points_per_element: opts.points,
        subdivision_depth: opts.depth,
    })
}

/// `(||v||, |v|_1)` of a finite element function, integrated exactly with a
/// `(k + 1)`-point Gauss rule per element.
pub fn fe_norms(v: &FeFunction) -> Result<(f64, f64)> {
    let rule = gauss_rule(v.order() + 1)?;
    let mesh = v.mesh();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for e in 0..mesh.num_elements() {
        let (_, h) = mesh.element(e);
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            let (value, slope) = v.evaluate_local(e, t);
            l2 += w * h * value * value;
            h1 += w * h * slope * slope;
        }
    }
    Ok((l2.sqrt(), h1.sqrt()))
}

/// `|||u_I - u_N|||_eps`, exact up to roundoff since both functions lie in `V^N`.
pub fn supercloseness(u_i: &FeFunction, u_n: &FeFunction, eps: f64) -> Result<f64> {
    let diff = u_i.difference(u_n)?;
    let (l2, h1) = fe_norms(&diff)?;
    Ok((eps * h1 * h1 + l2 * l2).sqrt())
}

/// Exact L2 norm of a piecewise linear function on `(x_L, x_R)` from its
/// nodal values `e_i`: `(1/3 sum h_i (e_i^2 + e_i e_{i-1} + e_{i-1}^2))^{1/2}`.
pub fn p1_exact_l2(v: &FeFunction, left: isize, right: isize) -> Result<f64> {
    let (mesh, coeffs) = p1_parts(v, left, right)?;
    let n = mesh.n() as isize;
    let sum: f64 = (left + 1..=right)
        .map(|i| {
            let (ei, ej) = (coeffs[(i + n) as usize], coeffs[(i + n - 1) as usize]);
            mesh.h(i) * (ei * ei + ei * ej + ej * ej)
        })
        .sum();
    Ok((sum / 3.0).sqrt())
}

fn p1_parts(v: &FeFunction, left: isize, right: isize) -> Result<(&GradedMesh, &[f64])> {
    if v.order() != 1 {
        return Err(Error::UnsupportedOrder(v.order()));
    }
    let mesh = v.mesh();
    let n = mesh.n() as isize;
    if !(-n <= left && left < right && right <= n) {
        return Err(Error::Parameter(format!(
            "node range ({left}, {right}) invalid for N = {n}"
        )));
    }
    Ok((mesh, v.coefficients()))
}

/// Both sides of the discrete norm equivalence for piecewise linears,
/// `sum_{L<i<R} hbar_i |e_i| + (h_{L+1}|e_L| + h_R|e_R|)/2 <= sqrt(3 (x_R - x_L)) ||e||_{(x_L,x_R)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEquivalence {
    pub lhs: f64,
    pub rhs: f64,
}

impl NormEquivalence {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-14)
    }
}

pub fn norm_equivalence_check(v: &FeFunction, left: isize, right: isize) -> Result<NormEquivalence> {
    let (mesh, coeffs) = p1_parts(v, left, right)?;
    let n = mesh.n() as isize;
    let e = |i: isize| coeffs[(i + n) as usize].abs();
    let interior: f64 = (left + 1..right).map(|i| mesh.hbar(i) * e(i)).sum();
    let lhs = interior + 0.5 * (mesh.h(left + 1) * e(left) + mesh.h(right) * e(right));
    let rhs = 3f64.sqrt() * (mesh.x(right) - mesh.x(left)).sqrt() * p1_exact_l2(v, left, right)?;
    Ok(NormEquivalence { lhs, rhs })
}
