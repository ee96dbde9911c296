//! Interior turning-point problems and the manufactured cusp-layer example.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A pure scalar function of one real variable.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `-eps u'' + a u' + c u = f` on `(-1, 1)` with Dirichlet data, turning point at 0.
#[derive(Clone)]
pub struct SingularPerturbationProblem {
    pub eps: f64,
    pub a: ScalarFn,
    pub a_prime: ScalarFn,
    pub c: ScalarFn,
    pub f: ScalarFn,
    pub nu_left: f64,
    pub nu_right: f64,
}

impl fmt::Debug for SingularPerturbationProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SingularPerturbationProblem")
            .field("eps", &self.eps)
            .field("nu_left", &self.nu_left)
            .field("nu_right", &self.nu_right)
            .finish_non_exhaustive()
    }
}

/// Layer exponents and coercivity margin of a validated problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    /// `c(0) / |a'(0)|`.
    pub lambda_bar: f64,
    /// Layer exponent in `(0, lambda_bar]`.
    pub lambda: f64,
    /// `min (c - a'/2)` over the validation grid.
    pub gamma: f64,
}

impl SpectralParams {
    /// Replaces `lambda` by a smaller admissible exponent.
    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= self.lambda_bar) {
            return Err(Error::Parameter(format!(
                "lambda must lie in (0, {}], got {lambda}",
                self.lambda_bar
            )));
        }
        Ok(Self { lambda, ..self })
    }
}

/// Closed-form exact solution and its first two derivatives.
#[derive(Clone)]
pub struct ManufacturedSolution {
    pub u: ScalarFn,
    pub u_prime: ScalarFn,
    pub u_double_prime: ScalarFn,
}

impl fmt::Debug for ManufacturedSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedSolution").finish_non_exhaustive()
    }
}

/// Uniform points on `[-1, 1]` plus geometrically clustered points on both
/// sides of the turning point.
pub fn validation_grid(grid_size: usize) -> Vec<f64> {
    let clustered = (grid_size / 10).max(10);
    let mut grid: Vec<f64> = (0..=grid_size)
        .map(|i| -1.0 + 2.0 * i as f64 / grid_size as f64)
        .collect();
    let half = clustered / 2;
    for i in 0..half {
        // 1e-12 .. 1e-1
        let x = 10f64.powf(-12.0 + 11.0 * i as f64 / (half - 1) as f64);
        grid.push(x);
        grid.push(-x);
    }
    grid.sort_by(f64::total_cmp);
    grid
}

/// Checks the structural assumptions `a(0) = 0`, `b = -a/x > 0`, `c >= 0`,
/// `c(0) > 0` and the coercivity margin `c - a'/2 >= gamma > 0`.
///
/// Every violated assumption is listed in the returned error; a non-positive
/// margin alone yields [`Error::Coercivity`].
pub fn validate(problem: &SingularPerturbationProblem, grid_size: usize) -> Result<SpectralParams> {
    if grid_size < 100 {
        return Err(Error::Parameter(format!(
            "validation grid needs at least 100 points, got {grid_size}"
        )));
    }
    if !(problem.eps > 0.0 && problem.eps <= 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1], got {}", problem.eps)));
    }
    let grid = validation_grid(grid_size);
    let mut issues = Vec::new();

    let a0 = (problem.a)(0.0);
    if a0.abs() > 1e-12 {
        issues.push(format!("a(0) = {a0:e}: not a turning point at x = 0"));
    }
    if let Some(&x) = grid.iter().find(|&&x| x != 0.0 && !(-(problem.a)(x) / x > 0.0)) {
        issues.push(format!("b(x) = -a(x)/x is not positive at x = {x:e}"));
    }
    if let Some(&x) = grid.iter().find(|&&x| !((problem.c)(x) >= 0.0)) {
        issues.push(format!("c(x) < 0 at x = {x:e}"));
    }
    let c0 = (problem.c)(0.0);
    if !(c0 > 0.0) {
        issues.push(format!("c(0) = {c0:e} is not positive"));
    }
    let slope = (problem.a_prime)(0.0);
    if !(slope != 0.0) {
        issues.push("a'(0) = 0: turning point is not simple".to_string());
    }
    if !issues.is_empty() {
        return Err(Error::Validation(issues));
    }

    let gamma = grid
        .iter()
        .map(|&x| (problem.c)(x) - 0.5 * (problem.a_prime)(x))
        .fold(f64::INFINITY, f64::min);
    if !(gamma > 0.0) {
        return Err(Error::Coercivity { gamma });
    }
    let lambda_bar = c0 / slope.abs();
    Ok(SpectralParams {
        lambda_bar,
        lambda: lambda_bar,
        gamma,
    })
}

/// `ln(x^2 + eps)` without forming a sum that loses the smaller term.
fn ln_shifted_square(x: f64, eps: f64) -> f64 {
    let x2 = x * x;
    if x2 < eps {
        eps.ln() + (x2 / eps).ln_1p()
    } else {
        2.0 * x.abs().ln() + (eps / x2).ln_1p()
    }
}

/// The manufactured test problem with turning point at 0:
///
/// ```text
///   -eps u'' - x(1+x^2) u' + lambda (1+x^3) u = f,   u(-1) = u(1) = 0,
///   u(x) = (x^2+eps)^{lambda/2} + x (x^2+eps)^{(lambda-1)/2}
///          - (1+eps)^{lambda/2} (1 + x (1+eps)^{-1/2}).
/// ```
///
/// Here `lambda` equals `c(0) / |a'(0)|`.
pub fn sun_stynes(
    eps: f64,
    lambda: f64,
) -> Result<(SingularPerturbationProblem, ManufacturedSolution)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let end = (1.0 + eps).powf(0.5 * lambda);
    let end_slope = (1.0 + eps).powf(0.5 * (lambda - 1.0));
    let pow = move |x: f64, p: f64| (p * ln_shifted_square(x, eps)).exp();

    let u = move |x: f64| {
        pow(x, 0.5 * lambda) + x * pow(x, 0.5 * (lambda - 1.0))
            - end * (1.0 + x / (1.0 + eps).sqrt())
    };
    let u_prime = move |x: f64| {
        let x2 = x * x;
        lambda * x * pow(x, 0.5 * (lambda - 2.0)) + (eps + lambda * x2) * pow(x, 0.5 * (lambda - 3.0))
            - end_slope
    };
    let u_double_prime = move |x: f64| {
        let x2 = x * x;
        lambda * (eps + (lambda - 1.0) * x2) * pow(x, 0.5 * (lambda - 4.0))
            + (lambda - 1.0) * x * (3.0 * eps + lambda * x2) * pow(x, 0.5 * (lambda - 5.0))
    };
    let a = |x: f64| -x * (1.0 + x * x);
    let a_prime = |x: f64| -(1.0 + 3.0 * x * x);
    let c = move |x: f64| lambda * (1.0 + x * x * x);
    let f = move |x: f64| -eps * u_double_prime(x) + a(x) * u_prime(x) + c(x) * u(x);

    let problem = SingularPerturbationProblem {
        eps,
        a: Arc::new(a),
        a_prime: Arc::new(a_prime),
        c: Arc::new(c),
        f: Arc::new(f),
        nu_left: 0.0,
        nu_right: 0.0,
    };
    let solution = ManufacturedSolution {
        u: Arc::new(u),
        u_prime: Arc::new(u_prime),
        u_double_prime: Arc::new(u_double_prime),
    };
    Ok((problem, solution))
}

/// Problems selectable by name from the command line.
pub fn named_problem(
    name: &str,
    eps: f64,
    lambda: f64,
) -> Result<(SingularPerturbationProblem, ManufacturedSolution)> {
    match name {
        "sun-stynes" => sun_stynes(eps, lambda),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

/// Fitted constant of the derivative envelope
/// `|u^{(i)}(x)| <= C (1 + (sqrt(eps) + |x|)^{lambda - i})`, maximised over a
/// grid that resolves the layer.
pub fn derivative_envelope_check(
    sol: &ManufacturedSolution,
    eps: f64,
    lambda: f64,
    order: usize,
) -> Result<f64> {
    let derivative: &ScalarFn = match order {
        0 => &sol.u,
        1 => &sol.u_prime,
        2 => &sol.u_double_prime,
        _ => {
            return Err(Error::Parameter(format!(
                "envelope order must be 0, 1 or 2, got {order}"
            )))
        }
    };
    let sqrt_eps = eps.sqrt();
    let mut grid = validation_grid(2000);
    // points on the layer scale itself
    grid.extend((0..=200).flat_map(|i| {
        let x = sqrt_eps * 10f64.powf(-3.0 + 6.0 * i as f64 / 200.0);
        [x, -x]
    }));
    Ok(grid
        .into_iter()
        .filter(|x| x.abs() <= 1.0)
        .map(|x| {
            let envelope = 1.0 + (sqrt_eps + x.abs()).powf(lambda - order as f64);
            derivative(x).abs() / envelope
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values_vanish() {
        for &eps in &[1.0, 1e-2, 1e-8, 1e-14] {
            for &lambda in &[1e-13, 0.005, 0.1] {
                let (_, sol) = sun_stynes(eps, lambda).unwrap();
                assert!((sol.u)(1.0).abs() < 1e-12, "u(1) eps={eps} lambda={lambda}");
                assert!((sol.u)(-1.0).abs() < 1e-12, "u(-1) eps={eps} lambda={lambda}");
            }
        }
    }

    #[test]
    fn value_at_turning_point() {
        let (eps, lambda) = (1e-6, 0.005);
        let (_, sol) = sun_stynes(eps, lambda).unwrap();
        let expected = eps.powf(lambda / 2.0) - (1.0 + eps).powf(lambda / 2.0);
        assert!(((sol.u)(0.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn validate_example_spectral_params() {
        let (problem, _) = sun_stynes(1e-8, 0.005).unwrap();
        let sp = validate(&problem, 10_000).unwrap();
        assert!((sp.lambda_bar - 0.005).abs() < 1e-15);
        // c - a'/2 = lambda (1 + x^3) + (1 + 3x^2)/2, smallest at x = 0
        assert!((sp.gamma - 0.505).abs() < 1e-12, "gamma = {}", sp.gamma);
        assert_eq!(validate(&problem, 10_000).unwrap(), sp);
    }

    #[test]
    fn validate_constant_margin() {
        let problem = SingularPerturbationProblem {
            eps: 0.1,
            a: Arc::new(|x| -x),
            a_prime: Arc::new(|_| -1.0),
            c: Arc::new(|_| 1.0),
            f: Arc::new(|_| 0.0),
            nu_left: 0.0,
            nu_right: 0.0,
        };
        let sp = validate(&problem, 200).unwrap();
        assert_eq!(sp.gamma, 1.5);
        assert_eq!(sp.lambda_bar, 1.0);
        assert!(sp.with_lambda(2.0).is_err());
        assert_eq!(sp.with_lambda(0.5).unwrap().lambda, 0.5);
    }

    #[test]
    fn validate_lists_every_violation() {
        let problem = SingularPerturbationProblem {
            eps: 0.1,
            a: Arc::new(|x| x + 0.5),
            a_prime: Arc::new(|_| 1.0),
            c: Arc::new(|x| x),
            f: Arc::new(|_| 0.0),
            nu_left: 0.0,
            nu_right: 0.0,
        };
        match validate(&problem, 200) {
            Err(Error::Validation(issues)) => assert_eq!(issues.len(), 4, "{issues:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_reports_coercivity_failure() {
        // b > 0, c >= 0, c(0) > 0 but c - a'/2 < 0 near the ends
        let problem = SingularPerturbationProblem {
            eps: 0.1,
            a: Arc::new(|x| -x + 2.0 * x * x * x),
            a_prime: Arc::new(|x| -1.0 + 6.0 * x * x),
            c: Arc::new(|_| 0.1),
            f: Arc::new(|_| 0.0),
            nu_left: 0.0,
            nu_right: 0.0,
        };
        // b = 1 - 2x^2 turns negative too, so only look at the coercivity variant
        let mut p = problem.clone();
        p.a = Arc::new(|x| -x - x * x * x);
        p.a_prime = Arc::new(|x| -1.0 - 3.0 * x * x);
        assert!(validate(&p, 200).is_ok());
        assert!(matches!(validate(&problem, 200), Err(Error::Validation(_))));
        p.a = Arc::new(|x| -x + 0.4 * x * x * x);
        p.a_prime = Arc::new(|x| -1.0 + 1.2 * x * x);
        p.c = Arc::new(|_| 0.05);
        assert!(matches!(validate(&p, 200), Err(Error::Coercivity { .. })));
    }

    #[test]
    fn validate_rejects_small_grid() {
        let (problem, _) = sun_stynes(0.5, 0.5).unwrap();
        assert!(validate(&problem, 99).is_err());
    }

    #[test]
    fn unknown_problem_name() {
        assert!(matches!(
            named_problem("nope", 1e-4, 0.1),
            Err(Error::UnknownProblem(_))
        ));
        assert!(named_problem("sun-stynes", 1e-4, 0.1).is_ok());
    }

    #[test]
    fn envelope_constant_is_moderate() {
        let (eps, lambda) = (1e-8, 0.005);
        let (_, sol) = sun_stynes(eps, lambda).unwrap();
        let c0 = derivative_envelope_check(&sol, eps, lambda, 0).unwrap();
        assert!(c0.is_finite() && c0 <= 10.0, "C0 = {c0}");
        let c2 = derivative_envelope_check(&sol, eps, lambda, 2).unwrap();
        assert!(c2.is_finite() && c2 < 10.0, "C2 = {c2}");
        assert!(derivative_envelope_check(&sol, eps, lambda, 3).is_err());
    }

    #[test]
    fn second_derivative_scale_at_turning_point() {
        let lambda = 0.005;
        for &eps in &[1e-4, 1e-8, 1e-12] {
            let (_, sol) = sun_stynes(eps, lambda).unwrap();
            let ratio = (sol.u_double_prime)(0.0).abs() / eps.powf((lambda - 2.0) / 2.0);
            // u''(0) = lambda eps^{(lambda-2)/2}
            assert!((ratio - lambda).abs() < 1e-12, "eps={eps}: {ratio}");
        }
    }
}
