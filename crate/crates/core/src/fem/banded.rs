use crate::error::{Error, Result};

/// Relative pivot threshold below which a band LU is declared singular.
const PIVOT_TOLERANCE: f64 = 1e-14;

/// Square band matrix with `lower` sub- and `upper` superdiagonals.
///
/// Rows store the window of columns `r - lower ..= r + upper + lower` so that
/// the factorization can keep the extra `lower` superdiagonals created by
/// row interchanges in place.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (2 * lower + upper + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        2 * self.lower + self.upper + 1
    }

    fn in_band(&self, r: usize, c: usize) -> bool {
        r < self.n && c < self.n && c + self.lower >= r && c <= r + self.upper
    }

    fn slot(&self, r: usize, c: usize) -> usize {
        r * self.width() + (c + self.lower - r)
    }

    /// Entry `(r, c)`; zero outside the band.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if self.in_band(r, c) {
            self.data[self.slot(r, c)]
        } else {
            0.0
        }
    }

    /// Sets entry `(r, c)`, which must lie inside the band.
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        assert!(self.in_band(r, c), "({r}, {c}) outside the band");
        let s = self.slot(r, c);
        self.data[s] = value;
    }

    pub fn add(&mut self, r: usize, c: usize, value: f64) {
        assert!(self.in_band(r, c), "({r}, {c}) outside the band");
        let s = self.slot(r, c);
        self.data[s] += value;
    }

    /// Column range of the band in row `r`.
    pub fn row_range(&self, r: usize) -> std::ops::RangeInclusive<usize> {
        r.saturating_sub(self.lower)..=(r + self.upper).min(self.n - 1)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|r| self.row_range(r).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }

    /// Largest `|r - c|` over the nonzero entries, split into (below, above).
    pub fn occupied_bandwidth(&self) -> (usize, usize) {
        let mut below = 0;
        let mut above = 0;
        for r in 0..self.n {
            for c in self.row_range(r) {
                if self.get(r, c) != 0.0 {
                    below = below.max(r.saturating_sub(c));
                    above = above.max(c.saturating_sub(r));
                }
            }
        }
        (below, above)
    }

    /// LU factorization with partial pivoting restricted to the band.
    pub fn lu(&self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.lower, self.upper);
        let reach = kl + ku;
        let mut a = self.clone();
        let mut scale: Vec<f64> = (0..n)
            .map(|r| self.row_range(r).map(|c| self.get(r, c).abs()).fold(0.0, f64::max))
            .collect();
        let mut pivots = Vec::with_capacity(n);
        for r in 0..n {
            let last_row = (r + kl).min(n - 1);
            let last_col = (r + reach).min(n - 1);
            let p = (r..=last_row)
                .max_by(|&i, &j| a.at(i, r).abs().total_cmp(&a.at(j, r).abs()))
                .expect("non-empty pivot range");
            let pivot = a.at(p, r);
            if !(pivot.abs() > PIVOT_TOLERANCE * scale[p]) {
                return Err(Error::SingularPivot {
                    row: r,
                    pivot,
                    scale: scale[p],
                });
            }
            if p != r {
                for c in r..=last_col {
                    let (sr, sp) = (a.slot(r, c), a.slot(p, c));
                    a.data.swap(sr, sp);
                }
                scale.swap(r, p);
            }
            pivots.push(p);
            for i in r + 1..=last_row {
                let l = a.at(i, r) / pivot;
                let s = a.slot(i, r);
                a.data[s] = l;
                if l != 0.0 {
                    for c in r + 1..=last_col {
                        let urc = a.at(r, c);
                        let s = a.slot(i, c);
                        a.data[s] -= l * urc;
                    }
                }
            }
        }
        Ok(BandLu { factors: a, pivots })
    }

    /// Raw storage access, valid for the whole stored window.
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[self.slot(r, c)]
    }
}

/// Band LU factors: unit lower multipliers below the diagonal, `U` with up
/// to `lower + upper` superdiagonals, and the row interchanges.
#[derive(Debug, Clone)]
pub struct BandLu {
    factors: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    /// (sub-, super-) diagonal counts of the stored factors; the total width
    /// is at most `2 lower + upper + 1`.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.factors.lower, self.factors.lower + self.factors.upper)
    }

    /// Largest `c - r` over nonzero entries of `U` and largest `r - c` over nonzero multipliers.
    pub fn occupied_bandwidths(&self) -> (usize, usize) {
        let f = &self.factors;
        let n = f.n;
        let mut below = 0;
        let mut above = 0;
        for r in 0..n {
            let lo = r.saturating_sub(f.lower);
            let hi = (r + f.lower + f.upper).min(n - 1);
            for c in lo..=hi {
                if f.at(r, c) != 0.0 {
                    below = below.max(r.saturating_sub(c));
                    above = above.max(c.saturating_sub(r));
                }
            }
        }
        (below, above)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let f = &self.factors;
        let n = f.n;
        assert_eq!(rhs.len(), n);
        let (kl, reach) = (f.lower, f.lower + f.upper);
        let mut x = rhs.to_vec();
        for r in 0..n {
            x.swap(r, self.pivots[r]);
            let xr = x[r];
            for i in r + 1..=(r + kl).min(n - 1) {
                x[i] -= f.at(i, r) * xr;
            }
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..=(r + reach).min(n - 1) {
                s -= f.at(r, c) * x[c];
            }
            x[r] = s / f.at(r, r);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, rng: &mut ChaCha8Rng) -> BandMatrix {
        let mut m = BandMatrix::zeros(n, kl, ku);
        for r in 0..n {
            for c in m.row_range(r) {
                m.set(r, c, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    /// Dense Gaussian elimination with full-row partial pivoting, for comparison.
    fn dense_solve(m: &BandMatrix, b: &[f64]) -> Vec<f64> {
        let n = m.dim();
        let mut a: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| m.get(r, c)).collect()).collect();
        let mut x = b.to_vec();
        for col in 0..n {
            let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, p);
            x.swap(col, p);
            for r in col + 1..n {
                let l = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= l * a[col][c];
                }
                x[r] -= l * x[col];
            }
        }
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (x[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn matches_dense_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (12, 2, 2), (30, 4, 4), (25, 3, 1), (9, 0, 2)] {
            let m = random_band(n, kl, ku, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lu = m.lu().unwrap();
            let x = lu.solve(&b);
            let y = dense_solve(&m, &b);
            for (xi, yi) in x.iter().zip(&y) {
                assert!((xi - yi).abs() < 1e-9 * (1.0 + yi.abs()), "{xi} vs {yi}");
            }
            let res = m.matvec(&x);
            for (ri, bi) in res.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn factor_fill_stays_within_extended_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=4 {
            let m = random_band(40, k, k, &mut rng);
            let lu = m.lu().unwrap();
            let (below, above) = lu.occupied_bandwidths();
            assert!(below <= k && above <= 2 * k);
            assert_eq!(lu.bandwidths(), (k, 2 * k));
            assert!(below + above < 3 * k + 1);
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut m = BandMatrix::zeros(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let x = m.lu().unwrap().solve(&[2.0, 3.0]);
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_detected() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.set(0, 0, 1.0);
        m.set(0, 1, 2.0);
        m.set(1, 0, 2.0);
        m.set(1, 1, 4.0);
        m.set(2, 2, 1.0);
        assert!(matches!(m.lu(), Err(Error::SingularPivot { row: 1, .. })));
    }

    #[test]
    #[should_panic]
    fn set_outside_band_panics() {
        let mut m = BandMatrix::zeros(4, 1, 1);
        m.set(0, 2, 1.0);
    }
}
