//! Self-verification battery: structural property checks plus the regression
//! against the published tables.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::output::csv_string;
use super::reference::{
    compare_reference, ReferenceTable, RegressionReport, Tolerances, ENERGY_TABLE_EPS,
    ENERGY_TABLE_N, LINEAR_TABLE_EPS, REFERENCE_LAMBDA,
};
use super::sweep::{rate, run_sweep, SweepSpec};
use crate::error::Result;
use crate::fem::{
    apply_dirichlet, assemble, gauss_rule, reference_element, solve, FeFunction, NodePlacement,
};
use crate::mesh::{
    build_mesh, kappa, lemma_refinement_study, phi, GradedMesh, MeshParams, DEFAULT_LEMMA_CEILING,
};
use crate::norms::{norm_equivalence_check, p1_exact_l2};
use crate::problem::SingularPerturbationProblem;

/// Random trials per randomized check.
pub const TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, failures: Vec<String>, summary: String) -> Self {
        let passed = failures.is_empty();
        let detail = if passed {
            summary
        } else {
            let shown: Vec<_> = failures.iter().take(3).cloned().collect();
            format!("{} failure(s): {}", failures.len(), shown.join("; "))
        };
        Self {
            name,
            passed,
            detail,
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// A mesh with `N` random positive intervals per half, mirrored about 0.
pub fn random_mesh(rng: &mut impl Rng, n: usize) -> GradedMesh {
    let steps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = steps.iter().sum();
    let mut half = vec![0.0];
    let mut acc = 0.0;
    for s in &steps[..n - 1] {
        acc += s / total;
        half.push(acc);
    }
    half.push(1.0);
    let nodes: Vec<f64> = half[1..]
        .iter()
        .rev()
        .map(|x| -x)
        .chain(half.iter().copied())
        .collect();
    let params = MeshParams::new(n, 1.0, 1.0).expect("valid parameters");
    GradedMesh::from_nodes(nodes, params).expect("random mesh is monotone")
}

/// A random piecewise linear function on a random mesh with `2..=40` elements per half.
pub fn random_p1(rng: &mut impl Rng) -> FeFunction {
    let n = rng.gen_range(2..=40);
    let mesh = Arc::new(random_mesh(rng, n));
    let element = Arc::new(reference_element(1, NodePlacement::GaussLobatto).expect("k = 1"));
    let coeffs = (0..=2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FeFunction::new(mesh, element, coeffs).expect("matching length")
}

pub fn check_phi_oddness(rng: &mut impl Rng) -> CheckOutcome {
    let mut failures = Vec::new();
    for _ in 0..10 * TRIALS {
        let alpha = log_uniform(rng, 1e-10, 1.0);
        let eps = log_uniform(rng, 1e-16, 1.0);
        let xi: f64 = rng.gen_range(0.0..=1.0);
        let p = MeshParams::new(2, alpha, eps).expect("valid");
        let (a, b) = (phi(xi, &p).expect("in range"), phi(-xi, &p).expect("in range"));
        if a != -b {
            failures.push(format!("alpha={alpha:e} eps={eps:e} xi={xi}: {a:e} vs {b:e}"));
        }
    }
    for _ in 0..50 {
        let n = rng.gen_range(2..200);
        let mesh = build_mesh(
            MeshParams::new(n, log_uniform(rng, 1e-6, 1.0), log_uniform(rng, 1e-14, 1.0)).expect("valid"),
        )
        .expect("mesh");
        let n = n as isize;
        if let Some(i) = (0..=n).find(|&i| mesh.x(-i) != -mesh.x(i)) {
            failures.push(format!("mesh node {i} not mirrored"));
        }
    }
    CheckOutcome::new("mesh oddness", failures, format!("{} samples exact", 10 * TRIALS))
}

pub fn check_phi_monotonicity(rng: &mut impl Rng) -> CheckOutcome {
    let mut failures = Vec::new();
    for _ in 0..10 * TRIALS {
        let alpha = log_uniform(rng, 1e-10, 1.0);
        let eps = log_uniform(rng, 1e-16, 1.0);
        let (mut x1, mut x2): (f64, f64) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        if x1 == x2 {
            continue;
        }
        if x1 > x2 {
            std::mem::swap(&mut x1, &mut x2);
        }
        let p = MeshParams::new(2, alpha, eps).expect("valid");
        let (y1, y2) = (phi(x1, &p).expect("in range"), phi(x2, &p).expect("in range"));
        if !(y1 < y2) {
            failures.push(format!("alpha={alpha:e} eps={eps:e}: phi({x1}) = {y1:e} >= phi({x2}) = {y2:e}"));
        }
    }
    CheckOutcome::new("mesh monotonicity", failures, format!("{} ordered pairs", 10 * TRIALS))
}

pub fn check_kappa_bounds() -> CheckOutcome {
    let mut failures = Vec::new();
    let grid = |i: usize, lo: f64| (lo.ln() * (1.0 - i as f64 / 49.0)).exp();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..50 {
        for j in 0..50 {
            let (alpha, eps) = (grid(i, 1e-10), grid(j, 1e-16));
            let value = kappa(alpha, eps).expect("valid");
            let upper = (1.0 / alpha).min(1.0 + (0.5 * eps.log2()).abs());
            let slack = 1e-12 * value;
            if !(value >= std::f64::consts::LN_2 - slack && value <= upper + slack) {
                failures.push(format!("alpha={alpha:e} eps={eps:e}: kappa = {value}"));
            }
            lo = lo.min(value);
            hi = hi.max(value);
        }
    }
    CheckOutcome::new("kappa bounds", failures, format!("50x50 grid, kappa in [{lo:.6}, {hi:.4}]"))
}

pub fn check_uniform_reduction() -> CheckOutcome {
    let mut failures = Vec::new();
    for n in [2, 3, 8, 64, 333, 1024] {
        for eps in [1.0, 1e-4, 1e-12] {
            let mesh = build_mesh(MeshParams::new(n, 1.0, eps).expect("valid")).expect("mesh");
            for i in -(n as isize)..=n as isize {
                let exact = i as f64 / n as f64;
                let got = mesh.x(i);
                if (got - exact).abs() > f64::EPSILON * exact.abs() {
                    failures.push(format!("N={n} eps={eps:e} i={i}: {got} vs {exact}"));
                }
            }
        }
    }
    CheckOutcome::new("alpha=1 uniformity", failures, "nodes within 1 ulp of i/N".into())
}

pub fn check_lemma_stability() -> CheckOutcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    // (alpha, lambda, k): the weighted bound needs alpha <= lambda/k
    for (alpha, lambda, k) in [(0.25, 0.25, 1), (0.25, 0.5, 2), (0.125, 0.5, 2)] {
        match lemma_refinement_study(alpha, 1e-8, lambda, k, &[64, 128, 256], DEFAULT_LEMMA_CEILING) {
            Ok(study) => {
                failures.extend(
                    study
                        .failures()
                        .into_iter()
                        .map(|f| format!("alpha={alpha} k={k}: {f}")),
                );
                for check in &study.reports[0].checks {
                    for r in study.ratios(check.name) {
                        worst = worst.max(r);
                    }
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    CheckOutcome::new(
        "lemma fitted-constant stability",
        failures,
        format!("largest doubling ratio {worst:.4}"),
    )
}

pub fn check_auxiliary_inequalities(rng: &mut impl Rng) -> CheckOutcome {
    let mut failures = Vec::new();
    let le = |lhs: f64, rhs: f64| lhs <= rhs + 1e-12 * rhs.abs().max(lhs.abs());
    for _ in 0..TRIALS {
        let alpha: f64 = rng.gen_range(0.02..=1.0);
        let a = log_uniform(rng, 1e-6, 1e2);
        let b = log_uniform(rng, 1e-6, 1e2);
        let (inv, s) = (1.0 / alpha, a + b);
        if !le(s.powf(inv), 2f64.powf(inv - 1.0) * (a.powf(inv) + b.powf(inv))) {
            failures.push(format!("power mean: alpha={alpha} a={a} b={b}"));
        }
        if !le(s.powf(alpha), a.powf(alpha) + b.powf(alpha)) {
            failures.push(format!("subadditivity: alpha={alpha} a={a} b={b}"));
        }
    }
    for _ in 0..TRIALS {
        let alpha: f64 = rng.gen_range(0.0..=1.0);
        let c: f64 = rng.gen_range(0.0..=1.0);
        let mid = (1.0 + c).powf(alpha) - c.powf(alpha);
        let low = 2f64.powf(alpha) - 1.0;
        if !(le(low, mid) && le(mid, 1.0)) {
            failures.push(format!("shifted difference: alpha={alpha} c={c}"));
        }
    }
    for _ in 0..TRIALS {
        let alpha: f64 = rng.gen_range(f64::MIN_POSITIVE..=1.0);
        let c: f64 = rng.gen_range(1e-12..=1.0);
        let two = (alpha * std::f64::consts::LN_2).exp_m1();
        if !(le(alpha * std::f64::consts::LN_2, two) && le(two, alpha)) {
            failures.push(format!("2^alpha - 1 bracket: alpha={alpha}"));
        }
        let mid = (1.0 + c).powf(alpha) - c.powf(alpha);
        let bound = two / std::f64::consts::LN_2 * ((1.0 + c).ln() - c.ln());
        if !(mid > 0.0 && le(mid, bound)) {
            failures.push(format!("logarithmic bound: alpha={alpha} c={c}"));
        }
    }
    CheckOutcome::new("auxiliary inequalities", failures, format!("{} samples per inequality", TRIALS))
}

pub fn check_basis() -> CheckOutcome {
    let mut failures = Vec::new();
    for placement in [NodePlacement::GaussLobatto, NodePlacement::Equispaced] {
        for k in 1..=10 {
            let el = reference_element(k, placement).expect("supported order");
            for (i, &t) in el.nodes().iter().enumerate() {
                for j in 0..=k {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    if (el.value(j, t) - expected).abs() > 1e-12 {
                        failures.push(format!("{placement:?} k={k}: phi_{j}(t_{i}) != {expected}"));
                    }
                }
            }
            for m in 0..=50 {
                let t = m as f64 / 50.0;
                let sum: f64 = el.values(t).iter().sum();
                let dsum: f64 = el.derivatives(t).iter().sum();
                if (sum - 1.0).abs() > 1e-12 || dsum.abs() > 1e-9 {
                    failures.push(format!("{placement:?} k={k} t={t}: sums {sum}, {dsum}"));
                }
            }
        }
    }
    CheckOutcome::new("basis Kronecker/partition of unity", failures, "k = 1..10, both placements".into())
}

/// `-u'' - x u' + u = 3 + x^2` with `u = 1 - x^2` lies in the quadratic space,
/// so the Galerkin solution reproduces it.
pub fn patch_problem() -> SingularPerturbationProblem {
    SingularPerturbationProblem {
        eps: 1.0,
        a: Arc::new(|x| -x),
        a_prime: Arc::new(|_| -1.0),
        c: Arc::new(|_| 1.0),
        f: Arc::new(|x| 3.0 + x * x),
        nu_left: 0.0,
        nu_right: 0.0,
    }
}

pub fn check_patch_test(rng: &mut impl Rng) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let problem = patch_problem();
    let element = Arc::new(reference_element(2, NodePlacement::GaussLobatto).expect("k = 2"));
    let quad = gauss_rule(5).expect("rule");
    let mut meshes = vec![
        build_mesh(MeshParams::new(8, 0.3, 1e-4).expect("valid")).expect("mesh"),
        build_mesh(MeshParams::new(32, 0.05, 1e-10).expect("valid")).expect("mesh"),
    ];
    meshes.extend((0..8).map(|_| {
        let n = rng.gen_range(2..30);
        random_mesh(rng, n)
    }));
    for mesh in meshes {
        let result = assemble(&problem, Arc::new(mesh), element.clone(), &quad)
            .map(|s| apply_dirichlet(s, 0.0, 0.0))
            .and_then(|s| solve(&s));
        match result {
            Ok(out) => {
                let u = &out.function;
                for (x, c) in u.dof_coordinates().iter().zip(u.coefficients()) {
                    worst = worst.max((c - (1.0 - x * x)).abs());
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !(worst <= 1e-10) {
        failures.push(format!("max DOF error {worst:e}"));
    }
    CheckOutcome::new("patch test", failures, format!("max DOF error {worst:.2e}"))
}

pub fn check_p1_identity(rng: &mut impl Rng) -> CheckOutcome {
    let mut failures = Vec::new();
    let rule = gauss_rule(2).expect("rule");
    let mut worst = 0.0f64;
    for _ in 0..TRIALS {
        let v = random_p1(rng);
        let n = v.mesh().n() as isize;
        let left = rng.gen_range(-n..n);
        let right = rng.gen_range(left + 1..=n);
        let exact = p1_exact_l2(&v, left, right).expect("p1 range");
        let quad: f64 = (left + 1..=right)
            .map(|i| {
                let e = (i + n - 1) as usize;
                let h = v.mesh().h(i);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&t, &w)| w * h * v.evaluate_local(e, t).0.powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt();
        let rel = (exact - quad).abs() / quad.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if !(rel <= 1e-12) {
            failures.push(format!("({left}, {right}): {exact:e} vs {quad:e}"));
        }
    }
    CheckOutcome::new("P1 exact L2 identity", failures, format!("max relative gap {worst:.2e}"))
}

pub fn check_norm_equivalence(rng: &mut impl Rng) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut tightest = 0.0f64;
    for _ in 0..TRIALS {
        let v = random_p1(rng);
        let n = v.mesh().n() as isize;
        let left = rng.gen_range(-n..n);
        let right = rng.gen_range(left + 1..=n);
        let c = norm_equivalence_check(&v, left, right).expect("p1 range");
        if c.rhs > 0.0 {
            tightest = tightest.max(c.lhs / c.rhs);
        }
        if !c.holds() {
            failures.push(format!("({left}, {right}): {:e} > {:e}", c.lhs, c.rhs));
        }
    }
    CheckOutcome::new("norm equivalence", failures, format!("largest lhs/rhs {tightest:.4}"))
}

pub fn check_csv_determinism() -> CheckOutcome {
    let spec = SweepSpec::sun_stynes(&[1, 2], &[16, 32, 64], &[1e-2, 1e-8], REFERENCE_LAMBDA);
    let mut failures = Vec::new();
    match (run_sweep(&spec), run_sweep(&spec)) {
        (Ok(a), Ok(b)) => {
            if csv_string(&a) != csv_string(&b) {
                failures.push("CSV differs between identical runs".into());
            }
            for (row, next) in a.iter().zip(a.iter().skip(1)) {
                if next.k == row.k && next.eps == row.eps && next.n == 2 * row.n {
                    let expected = rate(row.energy_err, next.energy_err);
                    let consistent = match (row.energy_rate, expected) {
                        (Some(r), Some(e)) => (r - e).abs() <= 1e-9,
                        _ => false,
                    };
                    if !consistent {
                        failures.push(format!("rate mismatch at k={} N={}", row.k, row.n));
                    }
                }
            }
        }
        (Err(e), _) | (_, Err(e)) => failures.push(e.to_string()),
    }
    CheckOutcome::new("CSV determinism", failures, "byte-identical over two runs".into())
}

/// Sweeps covering a reference table; the linear table runs one level past
/// its last row so that row gets a rate.
pub fn reference_sweep(table: ReferenceTable) -> SweepSpec {
    match table {
        ReferenceTable::EnergyByOrder => {
            SweepSpec::sun_stynes(&[1, 2, 3, 4], &ENERGY_TABLE_N, &ENERGY_TABLE_EPS, REFERENCE_LAMBDA)
        }
        ReferenceTable::LinearEnergyL2 => {
            let n_list: Vec<usize> = (3..=12).map(|p| 1 << p).collect();
            SweepSpec::sun_stynes(&[1], &n_list, &LINEAR_TABLE_EPS, REFERENCE_LAMBDA)
        }
    }
}

pub fn run_reference_regression(table: ReferenceTable, tol: Tolerances) -> Result<RegressionReport> {
    let rows = run_sweep(&reference_sweep(table))?;
    Ok(compare_reference(&rows, table, tol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub properties: Vec<CheckOutcome>,
    pub regressions: Vec<RegressionReport>,
    pub elapsed: Duration,
}

impl VerifyReport {
    pub fn properties_passed(&self) -> bool {
        self.properties.iter().all(|c| c.passed)
    }

    pub fn regressions_passed(&self) -> bool {
        self.regressions.iter().all(RegressionReport::passed)
    }

    pub fn passed(&self) -> bool {
        self.properties_passed() && self.regressions_passed()
    }

    /// One PASS/FAIL line per check and per table.
    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self.properties.iter().map(ToString::to_string).collect();
        for r in &self.regressions {
            let failed = r.failures().count();
            out.push(format!(
                "{} reference {}: {} cells compared, {} failed, {} missing",
                if r.passed() { "PASS" } else { "FAIL" },
                r.table.id(),
                r.cells.len(),
                failed,
                r.missing.len()
            ));
            out.extend(r.failures().map(|c| format!("  {c}")));
        }
        out
    }
}

/// Runs every property check (seeded) and, unless `regression` is false, the
/// regression against both reference tables.
pub fn run_verify(seed: u64, tol: Tolerances, regression: bool) -> Result<VerifyReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let properties = vec![
        check_phi_oddness(&mut rng),
        check_phi_monotonicity(&mut rng),
        check_kappa_bounds(),
        check_uniform_reduction(),
        check_lemma_stability(),
        check_auxiliary_inequalities(&mut rng),
        check_basis(),
        check_patch_test(&mut rng),
        check_p1_identity(&mut rng),
        check_norm_equivalence(&mut rng),
        check_csv_determinism(),
    ];
    let regressions = if regression {
        vec![
            run_reference_regression(ReferenceTable::LinearEnergyL2, tol)?,
            run_reference_regression(ReferenceTable::EnergyByOrder, tol)?,
        ]
    } else {
        Vec::new()
    };
    Ok(VerifyReport {
        properties,
        regressions,
        elapsed: start.elapsed(),
    })
}
