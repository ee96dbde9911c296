use std::sync::Arc;

use super::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::mesh::GradedMesh;

/// Continuous piecewise polynomial of order `k` on a graded mesh.
///
/// Global DOFs are numbered left to right: local node `j` of element `e`
/// is DOF `e * k + j`, so neighbouring elements share their end DOF.
#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<GradedMesh>,
    element: Arc<ReferenceElement>,
    coefficients: Vec<f64>,
}

impl FeFunction {
    pub fn new(
        mesh: Arc<GradedMesh>,
        element: Arc<ReferenceElement>,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        let expected = num_dofs(&mesh, &element);
        if coefficients.len() != expected {
            return Err(Error::Parameter(format!(
                "expected {expected} coefficients, got {}",
                coefficients.len()
            )));
        }
        Ok(Self {
            mesh,
            element,
            coefficients,
        })
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate(
        mesh: Arc<GradedMesh>,
        element: Arc<ReferenceElement>,
        g: impl Fn(f64) -> f64,
    ) -> Self {
        let coefficients = dof_coordinates(&mesh, &element).into_iter().map(g).collect();
        Self {
            mesh,
            element,
            coefficients,
        }
    }

    pub fn mesh(&self) -> &Arc<GradedMesh> {
        &self.mesh
    }

    pub fn element(&self) -> &Arc<ReferenceElement> {
        &self.element
    }

    pub fn order(&self) -> usize {
        self.element.order()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficients of element `e`, local node order.
    pub fn element_coefficients(&self, e: usize) -> &[f64] {
        let k = self.order();
        &self.coefficients[e * k..=(e + 1) * k]
    }

    pub fn dof_coordinates(&self) -> Vec<f64> {
        dof_coordinates(&self.mesh, &self.element)
    }

    /// True when both functions share mesh nodes and reference element.
    pub fn compatible_with(&self, other: &FeFunction) -> bool {
        (Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh.nodes() == other.mesh.nodes())
            && (Arc::ptr_eq(&self.element, &other.element) || self.element == other.element)
    }

    /// Value and first derivative at `x in [-1, 1]`.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        let e = self.mesh.locate(x)?;
        let (left, h) = self.mesh.element(e);
        Ok(self.evaluate_local(e, (x - left) / h))
    }

    /// Value and derivative inside element `e` at reference coordinate `t`.
    pub fn evaluate_local(&self, e: usize, t: f64) -> (f64, f64) {
        let (_, h) = self.mesh.element(e);
        let coeffs = self.element_coefficients(e);
        // basis values sum to one and derivatives to zero, so expand around c_0
        let base = coeffs[0];
        let mut value = 0.0;
        let mut slope = 0.0;
        for (j, &cj) in coeffs.iter().enumerate().skip(1) {
            let d = cj - base;
            value += d * self.element.value(j, t);
            slope += d * self.element.derivative(j, t);
        }
        (base + value, slope / h)
    }

    /// Pointwise difference `self - other` on a compatible space.
    pub fn difference(&self, other: &FeFunction) -> Result<FeFunction> {
        if !self.compatible_with(other) {
            return Err(Error::MeshMismatch);
        }
        Ok(FeFunction {
            mesh: self.mesh.clone(),
            element: self.element.clone(),
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

pub(crate) fn num_dofs(mesh: &GradedMesh, element: &ReferenceElement) -> usize {
    mesh.num_elements() * element.order() + 1
}

/// Global DOF coordinates `x_{e} + h_e * xhat_j`, with shared element ends
/// taken from the mesh nodes.
pub(crate) fn dof_coordinates(mesh: &GradedMesh, element: &ReferenceElement) -> Vec<f64> {
    let k = element.order();
    let mut coords = Vec::with_capacity(num_dofs(mesh, element));
    for e in 0..mesh.num_elements() {
        let (left, h) = mesh.element(e);
        coords.push(left);
        coords.extend(element.nodes()[1..k].iter().map(|&t| left + h * t));
    }
    coords.push(*mesh.nodes().last().expect("non-empty mesh"));
    coords
}
