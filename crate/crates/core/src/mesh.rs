//! Liseikin graded meshes for a cusp-type layer at the turning point `x = 0`.
//!
//! The generating function maps the uniform parameter `xi in [-1, 1]` onto
//! `[-1, 1]`, clustering nodes around the origin on the scale `sqrt(eps)`.
//! For `xi >= 0`,
//!
//! ```text
//!   phi(xi) = (eps^{a/2} + xi [(1 + sqrt(eps))^a - eps^{a/2}])^{1/a} - sqrt(eps)
//! ```
//!
//! with grading exponent `a = alpha`, and `phi(-xi) = -phi(xi)`.

use crate::error::{Error, Result};

/// Parameters of the graded mesh: `2N` intervals, grading exponent and
/// perturbation parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    n: usize,
    alpha: f64,
    eps: f64,
}

impl MeshParams {
    pub fn new(n: usize, alpha: f64, eps: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("N must be at least 2, got {n}")));
        }
        check_alpha_eps(alpha, eps)?;
        Ok(Self { n, alpha, eps })
    }

    /// Half the number of mesh intervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Uniform parameter step `1/N`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }
}

fn check_alpha_eps(alpha: f64, eps: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// The factor `(1 + sqrt(eps))^alpha - eps^{alpha/2}`.
///
/// Both powers tend to one as `alpha -> 0`, so each is evaluated as
/// `expm1` of its logarithm and the two small quantities are subtracted.
pub fn bracket(alpha: f64, eps: f64) -> Result<f64> {
    check_alpha_eps(alpha, eps)?;
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let upper = (alpha * eps.sqrt().ln_1p()).exp_m1();
    let lower = (0.5 * alpha * eps.ln()).exp_m1();
    Ok(upper - lower)
}

/// `kappa(alpha, eps) = bracket(alpha, eps) / alpha`, bounded below by `ln 2`
/// and above by `min(1/alpha, 1 + |log2 sqrt(eps)|)`.
pub fn kappa(alpha: f64, eps: f64) -> Result<f64> {
    Ok(bracket(alpha, eps)? / alpha)
}

/// The mesh generating function evaluated at `xi in [-1, 1]`.
pub fn phi(xi: f64, params: &MeshParams) -> Result<f64> {
    if !(xi.abs() <= 1.0) {
        return Err(Error::Parameter(format!("xi must lie in [-1, 1], got {xi}")));
    }
    let shape = PhiShape::new(params.alpha, params.eps);
    Ok(if xi < 0.0 { -shape.eval(-xi) } else { shape.eval(xi) })
}

/// Precomputed constants of the positive branch.
///
/// Dividing the inner sum by `eps^{alpha/2}` gives
/// `phi(xi) = sqrt(eps) * ((1 + xi * r)^{1/alpha} - 1)` with
/// `r = (1 + 1/sqrt(eps))^alpha - 1`, which is evaluated without any
/// subtraction of nearly equal numbers.
struct PhiShape {
    alpha: f64,
    sqrt_eps: f64,
    r: f64,
}

impl PhiShape {
    fn new(alpha: f64, eps: f64) -> Self {
        let sqrt_eps = eps.sqrt();
        let log_ratio = sqrt_eps.ln_1p() - 0.5 * eps.ln();
        Self {
            alpha,
            sqrt_eps,
            r: (alpha * log_ratio).exp_m1(),
        }
    }

    fn eval(&self, xi: f64) -> f64 {
        if self.alpha == 1.0 {
            return xi;
        }
        self.sqrt_eps * ((xi * self.r).ln_1p() / self.alpha).exp_m1()
    }
}

/// Graded mesh with nodes `x_{-N} < ... < x_N`.
///
/// Storage is zero based: node `x_i` lives at `nodes[i + N]`, interval
/// `h_i = x_i - x_{i-1}` at `intervals[i + N - 1]` and the midspan
/// `(h_i + h_{i+1}) / 2` at `midspans[i + N - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMesh {
    nodes: Vec<f64>,
    intervals: Vec<f64>,
    midspans: Vec<f64>,
    kappa: f64,
    params: MeshParams,
}

impl GradedMesh {
    /// Builds a mesh from explicit node coordinates, which must run strictly
    /// increasing from -1 to 1 over an even number of intervals with 0 in the middle.
    ///
    /// Used for random-mesh tests; `kappa` and `params` are taken from `params`.
    pub fn from_nodes(nodes: Vec<f64>, params: MeshParams) -> Result<Self> {
        let n = params.n;
        if nodes.len() != 2 * n + 1 {
            return Err(Error::MeshDegeneracy(format!(
                "expected {} nodes, got {}",
                2 * n + 1,
                nodes.len()
            )));
        }
        if nodes[0] != -1.0 || nodes[n] != 0.0 || nodes[2 * n] != 1.0 {
            return Err(Error::MeshDegeneracy(
                "nodes must start at -1, pass through 0 and end at 1".into(),
            ));
        }
        if let Some(pos) = nodes.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::MeshDegeneracy(format!(
                "nodes {} and {} are not strictly increasing",
                pos,
                pos + 1
            )));
        }
        let intervals: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let midspans = intervals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            nodes,
            intervals,
            midspans,
            kappa: kappa(params.alpha, params.eps)?,
            params,
        })
    }

    pub fn params(&self) -> &MeshParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// All `2N + 1` nodes, left to right.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// All `2N` interval lengths, left to right.
    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    pub fn midspans(&self) -> &[f64] {
        &self.midspans
    }

    /// Number of elements, `2N`.
    pub fn num_elements(&self) -> usize {
        self.intervals.len()
    }

    /// Node `x_i` for `i in -N..=N`.
    pub fn x(&self, i: isize) -> f64 {
        self.nodes[self.offset(i)]
    }

    /// Interval length `h_i = x_i - x_{i-1}` for `i in -N+1..=N`.
    pub fn h(&self, i: isize) -> f64 {
        self.intervals[self.offset(i) - 1]
    }

    /// Midspan `(h_i + h_{i+1}) / 2` for `i in -N+1..=N-1`.
    pub fn hbar(&self, i: isize) -> f64 {
        self.midspans[self.offset(i) - 1]
    }

    /// Left endpoint and length of element `e` (zero based, left to right).
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.intervals[e])
    }

    /// Index of the element containing `x`; shared nodes belong to the left element.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        // first node >= x
        let idx = self.nodes.partition_point(|&node| node < x);
        Ok(idx.saturating_sub(1).min(self.num_elements() - 1))
    }

    fn offset(&self, i: isize) -> usize {
        let n = self.params.n as isize;
        assert!((-n..=n).contains(&i), "mesh index {i} outside -{n}..={n}");
        (i + n) as usize
    }
}

/// Generates the graded mesh `x_i = phi(i / N)`, `i = -N..=N`.
///
/// The positive half is evaluated and mirrored, so `x_{-i} = -x_i` holds
/// exactly, and the endpoints and centre are pinned to `-1, 0, 1`.
pub fn build_mesh(params: MeshParams) -> Result<GradedMesh> {
    let n = params.n;
    let shape = PhiShape::new(params.alpha, params.eps);
    let mut half: Vec<f64> = (0..=n).map(|i| shape.eval(i as f64 / n as f64)).collect();
    half[0] = 0.0;
    half[n] = 1.0;
    let nodes: Vec<f64> = half[1..]
        .iter()
        .rev()
        .map(|&x| -x)
        .chain(half.iter().copied())
        .collect();
    GradedMesh::from_nodes(nodes, params)
}

/// Default ceiling for fitted lemma constants.
pub const DEFAULT_LEMMA_CEILING: f64 = 1e3;

/// Outcome of one mesh-lemma inequality on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum LemmaStatus {
    /// Maximum over the admissible indices of `lhs / h-power`.
    Fitted(f64),
    /// The mesh parameters violate the lemma's hypothesis.
    NotApplicable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub status: LemmaStatus,
}

impl LemmaCheck {
    pub fn fitted(&self) -> Option<f64> {
        match self.status {
            LemmaStatus::Fitted(c) => Some(c),
            LemmaStatus::NotApplicable(_) => None,
        }
    }
}

/// Fitted constants of the mesh-interval lemmas on a single mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
    pub ceiling: f64,
}

impl LemmaReport {
    /// Names of checks whose fitted constant exceeds the ceiling.
    pub fn failures(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| c.fitted().is_some_and(|v| !(v <= self.ceiling)))
            .map(|c| c.name)
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const LEMMA_H_BOUND: &str = "h_i <= C h";
pub const LEMMA_HK_WEIGHTED: &str = "h_i^k (x_{i-1}+sqrt(eps))^{lambda-k} <= C h^k";
pub const LEMMA_FIRST_INTERVAL: &str = "first interval <= C h^k";
pub const LEMMA_DIFF: &str = "h_i - h_{i-1} <= C h^2 (x_i+sqrt(eps))^{1-2 alpha}";
pub const LEMMA_DIFF_WEIGHTED: &str = "(h_i - h_{i-1}) (x_{i-1}+sqrt(eps))^{2 alpha-1} <= C h^2";

/// Evaluates the mesh-point and mesh-interval lemmas on the positive half of
/// `mesh` (the negative half is its mirror image).
///
/// The weighted `h_i^k` bound uses the layer exponent `lambda` as its weight
/// and needs `alpha <= min(lambda/k, 1)`; the first-interval variant needs
/// `alpha <= 1/k` when `eps <= h^{2/alpha}`. The difference bounds need
/// `alpha <= 1/2`; the weighted one uses the extreme admissible weight `2 alpha`.
pub fn verify_mesh_lemmas(
    mesh: &GradedMesh,
    lambda: f64,
    k: usize,
    ceiling: f64,
) -> Result<LemmaReport> {
    if !(lambda > 0.0) || k == 0 {
        return Err(Error::Parameter(format!(
            "lemma check needs lambda > 0 and k >= 1, got lambda = {lambda}, k = {k}"
        )));
    }
    let p = mesh.params();
    let (alpha, eps, h) = (p.alpha, p.eps, p.h());
    let n = p.n as isize;
    let sqrt_eps = eps.sqrt();
    let kf = k as f64;
    let max_over = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);

    let mut checks = Vec::new();

    let h_bound = max_over(&mut mesh.intervals().iter().map(|&hi| hi / h));
    checks.push(LemmaCheck {
        name: LEMMA_H_BOUND,
        status: LemmaStatus::Fitted(h_bound),
    });

    let weighted_ok = alpha <= (lambda / kf).min(1.0);
    checks.push(LemmaCheck {
        name: LEMMA_HK_WEIGHTED,
        status: if weighted_ok {
            // log form: h_i^k and the negative power of x + sqrt(eps) overflow separately
            LemmaStatus::Fitted(max_over(&mut (2..=n).map(|i| {
                (kf * (mesh.h(i) / h).ln() + (lambda - kf) * (mesh.x(i - 1) + sqrt_eps).ln())
                    .exp()
            })))
        } else {
            LemmaStatus::NotApplicable(format!("alpha = {alpha} > min(lambda/k, 1)"))
        },
    });

    let eps_large = eps.ln() >= (2.0 / alpha) * h.ln();
    let h1 = mesh.h(1);
    checks.push(LemmaCheck {
        name: LEMMA_FIRST_INTERVAL,
        status: if eps_large && weighted_ok {
            LemmaStatus::Fitted(
                (kf * (h1 / h).ln() + 0.5 * (lambda - kf) * eps.ln()).exp(),
            )
        } else if !eps_large && alpha <= 1.0 / kf {
            LemmaStatus::Fitted((h1.ln() - kf * h.ln()).exp())
        } else {
            LemmaStatus::NotApplicable(format!(
                "alpha = {alpha} outside the admissible range for eps = {eps}, k = {k}"
            ))
        },
    });

    let diff_ok = alpha <= 0.5;
    let not_diff = || LemmaStatus::NotApplicable(format!("alpha = {alpha} > 1/2"));
    checks.push(LemmaCheck {
        name: LEMMA_DIFF,
        status: if diff_ok {
            LemmaStatus::Fitted(max_over(&mut (2..=n).map(|i| {
                (mesh.h(i) - mesh.h(i - 1))
                    / (h * h * (mesh.x(i) + sqrt_eps).powf(1.0 - 2.0 * alpha))
            })))
        } else {
            not_diff()
        },
    });
    checks.push(LemmaCheck {
        name: LEMMA_DIFF_WEIGHTED,
        status: if diff_ok {
            LemmaStatus::Fitted(max_over(&mut (2..=n).map(|i| {
                (mesh.h(i) - mesh.h(i - 1)) * (mesh.x(i - 1) + sqrt_eps).powf(2.0 * alpha - 1.0)
                    / (h * h)
            })))
        } else {
            not_diff()
        },
    });

    Ok(LemmaReport { checks, ceiling })
}

/// Fitted lemma constants along a sequence of `N` values.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaRefinement {
    pub n_list: Vec<usize>,
    pub reports: Vec<LemmaReport>,
    /// Largest ratio `C(2N) / C(N)` allowed before a check counts as growing.
    pub growth_limit: f64,
}

impl LemmaRefinement {
    /// Consecutive ratios of the fitted constant for the named check.
    pub fn ratios(&self, name: &str) -> Vec<f64> {
        let values: Vec<Option<f64>> = self
            .reports
            .iter()
            .map(|r| r.get(name).and_then(LemmaCheck::fitted))
            .collect();
        values
            .windows(2)
            .filter_map(|w| Some(w[1]? / w[0]?))
            .collect()
    }

    /// Checks that exceed the ceiling on some mesh or grow under N-doubling.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let Some(first) = self.reports.first() else {
            return out;
        };
        for check in &first.checks {
            if self.reports.iter().any(|r| r.failures().contains(&check.name)) {
                out.push(format!("{}: above ceiling", check.name));
            }
            if let Some(r) = self.ratios(check.name).iter().find(|&&r| !(r <= self.growth_limit)) {
                out.push(format!("{}: grows by {r:.3} under N-doubling", check.name));
            }
        }
        out
    }
}

/// Runs [`verify_mesh_lemmas`] for each `N` in `n_list` at fixed `(alpha, eps)`.
pub fn lemma_refinement_study(
    alpha: f64,
    eps: f64,
    lambda: f64,
    k: usize,
    n_list: &[usize],
    ceiling: f64,
) -> Result<LemmaRefinement> {
    let reports = n_list
        .iter()
        .map(|&n| {
            let mesh = build_mesh(MeshParams::new(n, alpha, eps)?)?;
            verify_mesh_lemmas(&mesh, lambda, k, ceiling)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaRefinement {
        n_list: n_list.to_vec(),
        reports,
        growth_limit: 1.25,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, alpha: f64, eps: f64) -> MeshParams {
        MeshParams::new(n, alpha, eps).unwrap()
    }

    #[test]
    fn bracket_known_values() {
        assert_eq!(bracket(1.0, 1e-8).unwrap(), 1.0);
        assert_eq!(bracket(1.0, 0.37).unwrap(), 1.0);
        let b = bracket(0.5, 1.0).unwrap();
        assert!((b - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn bracket_rejects_bad_domain() {
        assert!(bracket(0.0, 0.5).is_err());
        assert!(bracket(1.5, 0.5).is_err());
        assert!(bracket(0.5, 0.0).is_err());
        assert!(bracket(0.5, 2.0).is_err());
        assert!(bracket(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn kappa_known_values() {
        assert_eq!(kappa(1.0, 1e-3).unwrap(), 1.0);
        let k = kappa(0.5, 1.0).unwrap();
        assert!((k - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn phi_endpoints_and_errors() {
        let p = params(8, 0.3, 1e-6);
        assert_eq!(phi(0.0, &p).unwrap(), 0.0);
        assert!((phi(1.0, &p).unwrap() - 1.0).abs() < 1e-14);
        assert!((phi(-1.0, &p).unwrap() + 1.0).abs() < 1e-14);
        assert!(phi(1.0 + 1e-12, &p).is_err());
        assert!(phi(f64::NAN, &p).is_err());
    }

    #[test]
    fn phi_identity_for_alpha_one() {
        let p = params(8, 1.0, 1e-4);
        for &xi in &[-1.0, -0.3, 0.0, 0.125, 0.77, 1.0] {
            assert_eq!(phi(xi, &p).unwrap(), xi);
        }
    }

    #[test]
    fn phi_matches_direct_formula() {
        let p = params(8, 0.5, 0.25);
        let expected = (0.25f64.powf(0.25) + 0.5 * (1.5f64.sqrt() - 0.25f64.powf(0.25))).powi(2) - 0.5;
        let got = phi(0.5, &p).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert!((got - 0.43301).abs() < 1e-5);
    }

    #[test]
    fn uniform_mesh_at_alpha_one() {
        let mesh = build_mesh(params(4, 1.0, 1e-8)).unwrap();
        assert_eq!(
            mesh.nodes(),
            &[-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(mesh.kappa(), 1.0);
    }

    #[test]
    fn indexing_conventions() {
        let mesh = build_mesh(params(4, 0.25, 1e-4)).unwrap();
        assert_eq!(mesh.x(-4), -1.0);
        assert_eq!(mesh.x(0), 0.0);
        assert_eq!(mesh.h(1), mesh.x(1));
        assert_eq!(mesh.h(-3), mesh.x(-3) - mesh.x(-4));
        assert_eq!(mesh.hbar(0), 0.5 * (mesh.h(0) + mesh.h(1)));
        assert_eq!(mesh.intervals().len(), 8);
        assert_eq!(mesh.midspans().len(), 7);
    }

    #[test]
    fn locate_uses_left_element_at_shared_nodes() {
        let mesh = build_mesh(params(2, 1.0, 1.0)).unwrap();
        assert_eq!(mesh.locate(-1.0).unwrap(), 0);
        assert_eq!(mesh.locate(-0.5).unwrap(), 0);
        assert_eq!(mesh.locate(-0.49).unwrap(), 1);
        assert_eq!(mesh.locate(0.0).unwrap(), 1);
        assert_eq!(mesh.locate(1.0).unwrap(), 3);
        assert!(mesh.locate(1.01).is_err());
    }

    #[test]
    fn from_nodes_rejects_non_monotone() {
        let p = params(2, 1.0, 1.0);
        let bad = vec![-1.0, 0.2, 0.0, 0.5, 1.0];
        assert!(matches!(
            GradedMesh::from_nodes(bad, p),
            Err(Error::MeshDegeneracy(_))
        ));
    }

    #[test]
    fn uniform_mesh_lemma_constant_is_one() {
        let mesh = build_mesh(params(16, 1.0, 1e-4)).unwrap();
        let report = verify_mesh_lemmas(&mesh, 1.0, 1, DEFAULT_LEMMA_CEILING).unwrap();
        let c = report.get(LEMMA_H_BOUND).unwrap().fitted().unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        assert!(matches!(
            report.get(LEMMA_DIFF).unwrap().status,
            LemmaStatus::NotApplicable(_)
        ));
    }
}
