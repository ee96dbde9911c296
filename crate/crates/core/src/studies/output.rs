use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::sweep::ConvergenceRow;
use crate::error::{Error, Result};
use crate::fem::FeFunction;
use crate::format::sci;
use crate::mesh::GradedMesh;

pub const CSV_HEADER: &str =
    "k,N,eps,lambda,alpha0,alpha,energy_err,l2_err,h1semi_err,interp_l2,supercloseness,energy_rate,l2_rate";

fn rate_field(rate: Option<f64>) -> String {
    rate.map(|r| sci(r, 6)).unwrap_or_default()
}

/// Sweep rows as CSV text, sorted by `(k, eps, N)`, six significant digits.
pub fn csv_string(rows: &[ConvergenceRow]) -> String {
    let mut sorted: Vec<&ConvergenceRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.k.cmp(&b.k).then(a.eps.total_cmp(&b.eps)).then(a.n.cmp(&b.n)));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        let fields = [
            r.k.to_string(),
            r.n.to_string(),
            sci(r.eps, 6),
            sci(r.lambda, 6),
            sci(r.alpha0, 6),
            sci(r.alpha, 6),
            sci(r.energy_err, 6),
            sci(r.l2_err, 6),
            sci(r.h1semi_err, 6),
            sci(r.interp_l2, 6),
            sci(r.supercloseness, 6),
            rate_field(r.energy_rate),
            rate_field(r.l2_rate),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    fs::write(path, csv_string(rows))?;
    Ok(())
}

/// `c_k N^{-k}` line through an anchor point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCurve {
    pub k: usize,
    pub constant: f64,
    pub points: Vec<(usize, f64)>,
}

impl ReferenceCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,reference\n");
        for (n, v) in &self.points {
            let _ = writeln!(out, "{n},{}", sci(*v, 6));
        }
        out
    }
}

/// One curve per `k`, each fitted to the anchor `(k, N, error)` with that `k`.
pub fn emit_reference_curves(
    k_list: &[usize],
    n_list: &[usize],
    anchors: &[(usize, usize, f64)],
) -> Result<Vec<ReferenceCurve>> {
    k_list
        .iter()
        .map(|&k| {
            let &(_, n0, e0) = anchors
                .iter()
                .find(|a| a.0 == k)
                .ok_or_else(|| Error::Parameter(format!("no anchor for k = {k}")))?;
            if !(e0 > 0.0 && e0.is_finite()) || n0 == 0 {
                return Err(Error::Parameter(format!("invalid anchor for k = {k}")));
            }
            let constant = e0 * (n0 as f64).powi(k as i32);
            Ok(ReferenceCurve {
                k,
                constant,
                points: n_list
                    .iter()
                    .map(|&n| (n, constant * (n as f64).powi(-(k as i32))))
                    .collect(),
            })
        })
        .collect()
}

/// Mesh nodes, one per line, 17 significant digits.
pub fn mesh_text(mesh: &GradedMesh) -> String {
    let mut out = String::new();
    for &x in mesh.nodes() {
        out.push_str(&sci(x, 17));
        out.push('\n');
    }
    out
}

/// `x u` pairs at the DOF coordinates, 17 significant digits.
pub fn solution_text(u: &FeFunction) -> String {
    let mut out = String::new();
    for (x, v) in u.dof_coordinates().iter().zip(u.coefficients()) {
        let _ = writeln!(out, "{} {}", sci(*x, 17), sci(*v, 17));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshParams};

    fn row(k: usize, n: usize, eps: f64) -> ConvergenceRow {
        ConvergenceRow {
            k,
            n,
            eps,
            lambda: 0.005,
            alpha0: 1.0,
            alpha: 0.0025,
            energy_err: 9.04e-5,
            l2_err: 6.68e-7,
            h1semi_err: 1e-3,
            interp_l2: 1e-7,
            supercloseness: 1e-6,
            energy_rate: Some(1.0),
            l2_rate: None,
            failure: None,
        }
    }

    #[test]
    fn csv_layout() {
        let text = csv_string(&[row(1, 1024, 1e-8), row(1, 512, 1e-8)]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "1,512,1.00000e-08,5.00000e-03,1.00000e+00,2.50000e-03,9.04000e-05,6.68000e-07,\
             1.00000e-03,1.00000e-07,1.00000e-06,1.00000e+00,"
        );
        assert!(lines[2].starts_with("1,1024,"));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
        assert_eq!(csv_string(&[row(1, 8, 1.0)]).lines().count(), 2);
    }

    #[test]
    fn csv_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = [row(2, 64, 1e-4)];
        emit_csv(&rows, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), csv_string(&rows));
    }

    #[test]
    fn reference_curve_through_anchor() {
        let curves = emit_reference_curves(&[1, 2], &[32, 64, 128], &[(1, 64, 1e-3), (2, 32, 4e-4)]).unwrap();
        assert_eq!(curves[0].points[1], (64, 1e-3));
        assert!((curves[0].points[2].1 - 5e-4).abs() < 1e-18);
        assert!((curves[1].points[2].1 - 2.5e-5).abs() < 1e-18);
        assert!(emit_reference_curves(&[3], &[8], &[(1, 8, 1.0)]).is_err());
        assert!(curves[0].to_csv().starts_with("N,reference\n32,2.00000e-03\n"));
    }

    #[test]
    fn mesh_dump_parses_back() {
        let mesh = build_mesh(MeshParams::new(8, 0.3, 1e-6).unwrap()).unwrap();
        let parsed: Vec<f64> = mesh_text(&mesh).lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(parsed, mesh.nodes());
    }
}
