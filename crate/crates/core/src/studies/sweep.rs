use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{apply_dirichlet, assemble, gauss_rule, reference_element, solve, FeFunction, NodePlacement};
use crate::mesh::{build_mesh, MeshParams};
use crate::norms::{error_norms, ErrorQuadrature, ErrorReport};
use crate::problem::{named_problem, validate};

/// Grid size used to validate problems before a run.
pub const VALIDATION_GRID: usize = 10_000;

/// Grading exponent `alpha0 * min(lambda/(k+1), 1/(2(k+1)))`.
pub fn alpha_for(k: usize, lambda: f64, alpha0: f64) -> Result<f64> {
    let kp = (k + 1) as f64;
    let alpha = alpha0 * (lambda / kp).min(0.5 / kp);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "grading exponent alpha = {alpha} outside (0, 1] (k = {k}, lambda = {lambda}, alpha0 = {alpha0})"
        )));
    }
    Ok(alpha)
}

/// Optional deviations from the default discretisation and measurement.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CaseOverrides {
    /// Assembly quadrature points per element (default `k + 3`).
    pub quad_points: Option<usize>,
    /// Error quadrature points per sub-interval (default `k + 3`).
    pub err_points: Option<usize>,
    /// Error subdivision depth (default 2).
    pub err_subdiv: Option<usize>,
    /// Error subdivision depth next to the turning point (default 5).
    pub err_layer_subdiv: Option<usize>,
    pub placement: NodePlacement,
}

impl CaseOverrides {
    pub fn error_quadrature(&self, k: usize) -> ErrorQuadrature {
        let base = ErrorQuadrature::for_order(k);
        let depth = self.err_subdiv.unwrap_or(base.depth);
        ErrorQuadrature {
            points: self.err_points.unwrap_or(base.points),
            depth,
            layer_depth: self.err_layer_subdiv.unwrap_or(base.layer_depth.max(depth)),
        }
    }
}

/// One discretisation case.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub problem: String,
    pub k: usize,
    pub n: usize,
    pub eps: f64,
    pub lambda: f64,
    pub alpha0: f64,
    pub overrides: CaseOverrides,
}

impl Case {
    pub fn sun_stynes(k: usize, n: usize, eps: f64, lambda: f64, alpha0: f64) -> Self {
        Self {
            problem: "sun-stynes".into(),
            k,
            n,
            eps,
            lambda,
            alpha0,
            overrides: CaseOverrides::default(),
        }
    }
}

/// Discrete solution of a case and the mesh exponent actually used.
#[derive(Debug, Clone)]
pub struct CaseSolution {
    pub alpha: f64,
    pub solution: FeFunction,
    pub relative_residual: f64,
}

/// Measured case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub alpha: f64,
    pub report: ErrorReport,
    pub relative_residual: f64,
}

/// Builds the mesh, assembles, imposes boundary values and solves.
pub fn solve_case(case: &Case) -> Result<CaseSolution> {
    let (problem, _) = named_problem(&case.problem, case.eps, case.lambda)?;
    let spectral = validate(&problem, VALIDATION_GRID)?;
    // the mesh uses the problem's own lambda_bar, which equals lambda for the example
    let lambda = spectral.with_lambda(case.lambda.min(spectral.lambda_bar))?.lambda;
    let alpha = alpha_for(case.k, lambda, case.alpha0)?;
    let mesh = Arc::new(build_mesh(MeshParams::new(case.n, alpha, case.eps)?)?);
    let element = Arc::new(reference_element(case.k, case.overrides.placement)?);
    let quad = gauss_rule(case.overrides.quad_points.unwrap_or(case.k + 3))?;
    let system = assemble(&problem, mesh, element, &quad)?;
    let system = apply_dirichlet(system, problem.nu_left, problem.nu_right);
    let outcome = solve(&system)?;
    Ok(CaseSolution {
        alpha,
        solution: outcome.function,
        relative_residual: outcome.relative_residual,
    })
}

/// Solves a case and measures its errors against the exact solution.
pub fn run_case(case: &Case) -> Result<CaseResult> {
    let solved = solve_case(case)?;
    let (_, exact) = named_problem(&case.problem, case.eps, case.lambda)?;
    let report = error_norms(
        &exact,
        &solved.solution,
        case.eps,
        case.overrides.error_quadrature(case.k),
    )?;
    Ok(CaseResult {
        alpha: solved.alpha,
        report,
        relative_residual: solved.relative_residual,
    })
}

/// A grid of cases over `k`, `N` and `eps` at fixed `lambda` and `alpha0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub problem: String,
    pub k_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub lambda: f64,
    pub alpha0: f64,
    pub overrides: CaseOverrides,
}

impl SweepSpec {
    pub fn sun_stynes(k_list: &[usize], n_list: &[usize], eps_list: &[f64], lambda: f64) -> Self {
        Self {
            problem: "sun-stynes".into(),
            k_list: k_list.to_vec(),
            n_list: n_list.to_vec(),
            eps_list: eps_list.to_vec(),
            lambda,
            alpha0: 1.0,
            overrides: CaseOverrides::default(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.k_list.is_empty() || self.n_list.is_empty() || self.eps_list.is_empty() {
            return Err(Error::Parameter("sweep lists must be non-empty".into()));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 8 || n % 2 != 0) {
            return Err(Error::Parameter(format!("sweep N must be even and >= 8, got {n}")));
        }
        Ok(())
    }

    pub fn cases(&self) -> Vec<Case> {
        let mut cases = Vec::new();
        for &k in &self.k_list {
            for &eps in &self.eps_list {
                for &n in &self.n_list {
                    cases.push(Case {
                        problem: self.problem.clone(),
                        k,
                        n,
                        eps,
                        lambda: self.lambda,
                        alpha0: self.alpha0,
                        overrides: self.overrides,
                    });
                }
            }
        }
        cases
    }
}

/// One sweep row; rates pair this `N` with `2N` at the same `(k, eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub k: usize,
    pub n: usize,
    pub eps: f64,
    pub lambda: f64,
    pub alpha0: f64,
    pub alpha: f64,
    pub energy_err: f64,
    pub l2_err: f64,
    pub h1semi_err: f64,
    pub interp_l2: f64,
    pub supercloseness: f64,
    pub energy_rate: Option<f64>,
    pub l2_rate: Option<f64>,
    /// Failure message when the case could not be run.
    pub failure: Option<String>,
}

impl ConvergenceRow {
    fn from_result(case: &Case, result: Result<CaseResult>) -> Self {
        let mut row = ConvergenceRow {
            k: case.k,
            n: case.n,
            eps: case.eps,
            lambda: case.lambda,
            alpha0: case.alpha0,
            alpha: f64::NAN,
            energy_err: f64::NAN,
            l2_err: f64::NAN,
            h1semi_err: f64::NAN,
            interp_l2: f64::NAN,
            supercloseness: f64::NAN,
            energy_rate: None,
            l2_rate: None,
            failure: None,
        };
        match result {
            Ok(r) => {
                row.alpha = r.alpha;
                row.energy_err = r.report.energy;
                row.l2_err = r.report.l2;
                row.h1semi_err = r.report.h1_semi;
                row.interp_l2 = r.report.interp_l2;
                row.supercloseness = r.report.supercloseness;
            }
            Err(e) => row.failure = Some(e.to_string()),
        }
        row
    }
}

/// `(ln E_N - ln E_2N) / ln 2`.
pub fn rate(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite())
        .then(|| (coarse.ln() - fine.ln()) / std::f64::consts::LN_2)
}

/// Sorts rows by `(k, eps, N)` and fills rates from the `2N` row of each group.
pub fn finalize_rows(mut rows: Vec<ConvergenceRow>) -> Vec<ConvergenceRow> {
    rows.sort_by(|a, b| {
        a.k.cmp(&b.k)
            .then(a.eps.total_cmp(&b.eps))
            .then(a.n.cmp(&b.n))
    });
    for i in 0..rows.len() {
        let partner = rows
            .iter()
            .position(|r| r.k == rows[i].k && r.eps == rows[i].eps && r.n == 2 * rows[i].n);
        let (energy_rate, l2_rate) = match partner {
            Some(j) => (
                rate(rows[i].energy_err, rows[j].energy_err),
                rate(rows[i].l2_err, rows[j].l2_err),
            ),
            None => (None, None),
        };
        rows[i].energy_rate = energy_rate;
        rows[i].l2_rate = l2_rate;
    }
    rows
}

/// Runs every case of `spec` (concurrently) and returns finalized rows.
/// Failed cases are kept as rows carrying their failure message.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ConvergenceRow>> {
    spec.check()?;
    let rows: Vec<ConvergenceRow> = spec
        .cases()
        .par_iter()
        .map(|case| ConvergenceRow::from_result(case, run_case(case)))
        .collect();
    Ok(finalize_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_rule() {
        assert!((alpha_for(1, 0.005, 1.0).unwrap() - 0.0025).abs() < 1e-18);
        assert_eq!(alpha_for(1, 1.0, 1.0).unwrap(), 0.25);
        assert_eq!(alpha_for(3, 1.0, 0.5).unwrap(), 0.0625);
        assert!(alpha_for(1, 0.005, 0.0).is_err());
        assert!(alpha_for(1, 0.5, 1e3).is_err());
    }

    #[test]
    fn rates_need_partner() {
        let spec = SweepSpec::sun_stynes(&[1], &[16], &[1e-2], 0.005);
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].energy_rate.is_none() && rows[0].l2_rate.is_none());
    }

    #[test]
    fn spec_validation() {
        let mut spec = SweepSpec::sun_stynes(&[1], &[6], &[1e-2], 0.005);
        assert!(spec.check().is_err());
        spec.n_list = vec![10];
        assert!(spec.check().is_ok());
        spec.k_list.clear();
        assert!(spec.check().is_err());
    }

    #[test]
    fn failures_are_recorded_per_row() {
        let mut spec = SweepSpec::sun_stynes(&[1], &[8, 16], &[1e-2], 0.005);
        spec.alpha0 = 1e6;
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.failure.is_some()));
    }

    #[test]
    fn refinement_reduces_error_without_layer() {
        let coarse = run_case(&Case::sun_stynes(1, 4, 1.0, 0.005, 1.0)).unwrap();
        let fine = run_case(&Case::sun_stynes(1, 8, 1.0, 0.005, 1.0)).unwrap();
        assert!(fine.report.energy.is_finite());
        assert!(fine.report.energy < coarse.report.energy);
    }
}
