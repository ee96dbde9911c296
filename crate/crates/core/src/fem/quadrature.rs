use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        2 * self.points.len() - 1
    }

    /// Integral of `g` over `[left, left + width]`.
    pub fn integrate(&self, left: f64, width: f64, g: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * g(left + width * t))
            .sum::<f64>()
            * width
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub(crate) fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `q`-point Gauss–Legendre rule mapped to `[0, 1]`, exact up to degree `2q - 1`.
pub fn gauss_rule(q: usize) -> Result<QuadratureRule> {
    if !(1..=30).contains(&q) {
        return Err(Error::Parameter(format!("quadrature order must be in 1..=30, got {q}")));
    }
    let mut points = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    // roots are symmetric; solve for the upper half by Newton's method
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(q, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = 0.5 * (1.0 - x);
        points[q - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[q - 1 - i] = 0.5 * w;
    }
    if q % 2 == 1 {
        points[q / 2] = 0.5;
    }
    Ok(QuadratureRule { points, weights })
}
