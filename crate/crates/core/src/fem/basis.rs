use super::quadrature::{legendre, QuadratureRule};
use crate::error::{Error, Result};

/// Placement of the interior Lagrange nodes on the reference interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodePlacement {
    /// Gauss–Lobatto points: endpoints plus the roots of `P_k'`.
    #[default]
    GaussLobatto,
    Equispaced,
}

/// Order-`k` Lagrange basis on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceElement {
    k: usize,
    nodes: Vec<f64>,
    placement: NodePlacement,
    /// `1 / prod_{m != j} (x_j - x_m)`
    scale: Vec<f64>,
}

/// Basis values and derivatives at the points of a quadrature rule,
/// `values[m * (k + 1) + j] = phi_j(t_m)`.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub dofs: usize,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl Tabulation {
    pub fn values_at(&self, m: usize) -> &[f64] {
        &self.values[m * self.dofs..(m + 1) * self.dofs]
    }

    pub fn derivatives_at(&self, m: usize) -> &[f64] {
        &self.derivatives[m * self.dofs..(m + 1) * self.dofs]
    }
}

/// Builds the order-`k` reference element, `1 <= k <= 10`.
pub fn reference_element(k: usize, placement: NodePlacement) -> Result<ReferenceElement> {
    if !(1..=10).contains(&k) {
        return Err(Error::Parameter(format!("element order must be in 1..=10, got {k}")));
    }
    let nodes = match placement {
        NodePlacement::Equispaced => (0..=k).map(|j| j as f64 / k as f64).collect(),
        NodePlacement::GaussLobatto => lobatto_nodes(k),
    };
    let scale = (0..=k)
        .map(|j| {
            1.0 / (0..=k)
                .filter(|&m| m != j)
                .map(|m| nodes[j] - nodes[m])
                .product::<f64>()
        })
        .collect();
    Ok(ReferenceElement {
        k,
        nodes,
        placement,
        scale,
    })
}

/// Lobatto nodes of order `k` on `[0, 1]`.
fn lobatto_nodes(k: usize) -> Vec<f64> {
    let mut nodes = vec![0.0; k + 1];
    nodes[k] = 1.0;
    let kf = k as f64;
    for j in 1..k {
        // Chebyshev–Lobatto guess, Newton on P_k' using the Legendre ODE for P_k''
        let mut x = -(std::f64::consts::PI * j as f64 / kf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(k, x);
            let ddp = (2.0 * x * dp - kf * (kf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[j] = 0.5 * (1.0 + x);
    }
    if k.is_multiple_of(2) {
        nodes[k / 2] = 0.5;
    }
    nodes
}

impl ReferenceElement {
    pub fn order(&self) -> usize {
        self.k
    }

    /// Number of local basis functions, `k + 1`.
    pub fn dofs(&self) -> usize {
        self.k + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn placement(&self) -> NodePlacement {
        self.placement
    }

    pub fn value(&self, j: usize, t: f64) -> f64 {
        self.scale[j]
            * (0..=self.k)
                .filter(|&m| m != j)
                .map(|m| t - self.nodes[m])
                .product::<f64>()
    }

    pub fn derivative(&self, j: usize, t: f64) -> f64 {
        let mut sum = 0.0;
        for l in (0..=self.k).filter(|&l| l != j) {
            sum += (0..=self.k)
                .filter(|&m| m != j && m != l)
                .map(|m| t - self.nodes[m])
                .product::<f64>();
        }
        self.scale[j] * sum
    }

    /// All basis values at `t`.
    pub fn values(&self, t: f64) -> Vec<f64> {
        (0..=self.k).map(|j| self.value(j, t)).collect()
    }

    /// All basis derivatives at `t`.
    pub fn derivatives(&self, t: f64) -> Vec<f64> {
        (0..=self.k).map(|j| self.derivative(j, t)).collect()
    }

    pub fn tabulate(&self, rule: &QuadratureRule) -> Tabulation {
        let mut values = Vec::with_capacity(rule.len() * self.dofs());
        let mut derivatives = Vec::with_capacity(rule.len() * self.dofs());
        for &t in &rule.points {
            values.extend(self.values(t));
            derivatives.extend(self.derivatives(t));
        }
        Tabulation {
            dofs: self.dofs(),
            values,
            derivatives,
        }
    }
}
