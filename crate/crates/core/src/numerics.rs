//! Deterministic dense/banded linear algebra kernels: banded LU with partial
//! pivoting, bordered-system solve, and a symmetric tridiagonal generalized
//! eigensolver (Sturm-count bisection plus inverse iteration).

use crate::error::{Error, Result};

/// Relative pivot threshold below which a factorization is declared singular.
const PIVOT_TOL: f64 = 1e-14;

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, stored in
/// LAPACK-style band layout with `kl` extra fill rows for pivoting.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i) - j
    }

    /// True when (i, j) lies inside the declared band (not the fill region).
    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    #[inline]
    fn in_storage(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku + self.kl >= j && j + self.kl >= i
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            self.in_band(i, j),
            "write outside band: ({i}, {j}) with kl={}, ku={}",
            self.kl,
            self.ku
        );
        let idx = self.idx(i, j);
        self.data[idx] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "write outside band: ({i}, {j})");
        let idx = self.idx(i, j);
        self.data[idx] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_storage(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j_lo = i.saturating_sub(self.kl);
            let j_hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in j_lo..=j_hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// LU factorization with partial pivoting (in place, consuming).
    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.max_abs().max(1.0);
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let i_hi = (j + kl).min(n - 1);
            let mut piv = j;
            let mut pmax = self.get(j, j).abs();
            for i in j + 1..=i_hi {
                let v = self.get(i, j).abs();
                if v > pmax {
                    pmax = v;
                    piv = i;
                }
            }
            if pmax < PIVOT_TOL * scale {
                return Err(Error::SingularMatrix(format!(
                    "pivot {pmax:.3e} below threshold at column {j}"
                )));
            }
            ipiv[j] = piv;
            let col_hi = (j + kl + ku).min(n - 1);
            if piv != j {
                for k in j..=col_hi {
                    let a = self.data[self.idx(j, k)];
                    let b = self.data[self.idx(piv, k)];
                    let (ij, ik) = (self.idx(j, k), self.idx(piv, k));
                    self.data[ij] = b;
                    self.data[ik] = a;
                }
            }
            let diag = self.data[self.idx(j, j)];
            for i in j + 1..=i_hi {
                let mult_idx = self.idx(i, j);
                let m = self.data[mult_idx] / diag;
                self.data[mult_idx] = m;
                if m != 0.0 {
                    for k in j + 1..=col_hi {
                        let upper = self.data[self.idx(j, k)];
                        if upper != 0.0 {
                            let ik = self.idx(i, k);
                            self.data[ik] -= m * upper;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { mat: self, ipiv })
    }
}

/// Factored banded matrix ready for repeated solves.
#[derive(Debug, Clone)]
pub struct BandedLu {
    mat: BandedMatrix,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.mat.n;
        let (kl, ku) = (self.mat.kl, self.mat.ku);
        let mut x = rhs.to_vec();
        for j in 0..n {
            let piv = self.ipiv[j];
            if piv != j {
                x.swap(j, piv);
            }
            let i_hi = (j + kl).min(n - 1);
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..=i_hi {
                    x[i] -= self.mat.data[self.mat.idx(i, j)] * xj;
                }
            }
        }
        for i in (0..n).rev() {
            let k_hi = (i + kl + ku).min(n - 1);
            let mut acc = x[i];
            for k in i + 1..=k_hi {
                acc -= self.mat.data[self.mat.idx(i, k)] * x[k];
            }
            x[i] = acc / self.mat.data[self.mat.idx(i, i)];
        }
        x
    }
}

/// Convenience: factor-and-solve in one shot.
pub fn banded_lu_solve(matrix: BandedMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    Ok(matrix.factor()?.solve(rhs))
}

/// Solves the bordered system
/// ```text
/// [ M   b ] [x]   [f]
/// [ cᵀ  d ] [y] = [g]
/// ```
/// by block elimination through two banded solves; falls back to a dense
/// solve of the full bordered system when M itself is singular.
pub fn bordered_solve(
    matrix: BandedMatrix,
    border_col: &[f64],
    border_row: &[f64],
    corner: f64,
    rhs: &[f64],
    rhs_last: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = matrix.n();
    assert_eq!(border_col.len(), n);
    assert_eq!(border_row.len(), n);
    assert_eq!(rhs.len(), n);
    match matrix.clone().factor() {
        Ok(lu) => {
            let y = lu.solve(rhs);
            let z = lu.solve(border_col);
            let denom = corner - dot(border_row, &z);
            let scale = corner.abs().max(norm_inf(border_row) * norm_inf(&z)).max(1.0);
            if denom.abs() < PIVOT_TOL * scale {
                return Err(Error::SingularMatrix(
                    "bordered system singular: Schur complement vanishes".into(),
                ));
            }
            let last = (rhs_last - dot(border_row, &y)) / denom;
            let x: Vec<f64> = y.iter().zip(z.iter()).map(|(yi, zi)| yi - last * zi).collect();
            Ok((x, last))
        }
        Err(_) => dense_bordered_solve(&matrix, border_col, border_row, corner, rhs, rhs_last),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

fn dense_bordered_solve(
    matrix: &BandedMatrix,
    border_col: &[f64],
    border_row: &[f64],
    corner: f64,
    rhs: &[f64],
    rhs_last: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = matrix.n();
    let m = n + 1;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in i.saturating_sub(matrix.kl)..=(i + matrix.ku).min(n - 1) {
            a[i * m + j] = matrix.get(i, j);
        }
        a[i * m + n] = border_col[i];
        a[n * m + i] = border_row[i];
    }
    a[n * m + n] = corner;
    let mut b: Vec<f64> = rhs.to_vec();
    b.push(rhs_last);

    // dense Gaussian elimination with partial pivoting
    let scale = a.iter().fold(0.0f64, |mx, &v| mx.max(v.abs())).max(1.0);
    for col in 0..m {
        let mut piv = col;
        let mut pmax = a[col * m + col].abs();
        for r in col + 1..m {
            let v = a[r * m + col].abs();
            if v > pmax {
                pmax = v;
                piv = r;
            }
        }
        if pmax < PIVOT_TOL * scale {
            return Err(Error::SingularMatrix("bordered system singular".into()));
        }
        if piv != col {
            for k in 0..m {
                a.swap(col * m + k, piv * m + k);
            }
            b.swap(col, piv);
        }
        for r in col + 1..m {
            let f = a[r * m + col] / a[col * m + col];
            if f != 0.0 {
                for k in col..m {
                    a[r * m + k] -= f * a[col * m + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for i in (0..m).rev() {
        let mut acc = b[i];
        for k in i + 1..m {
            acc -= a[i * m + k] * b[k];
        }
        b[i] = acc / a[i * m + i];
    }
    let last = b[m - 1];
    b.truncate(n);
    Ok((b, last))
}

/// Finite-difference weights for the `m`-th derivative at `z` on arbitrary
/// nodes `x` (Fornberg's recursion). Exact for polynomials of degree
/// `x.len() - 1`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > m, "need more than {m} nodes for derivative order {m}");
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Number of generalized eigenvalues of (A, B) strictly below `mu`, counted
/// through the Sturm sequence (LDL pivots) of A - mu B.
fn sturm_count(diag: &[f64], off: &[f64], b_diag: &[f64], mu: f64) -> usize {
    let n = diag.len();
    let guard = 1e-300;
    let mut count = 0;
    let mut q = diag[0] - mu * b_diag[0];
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < guard { if q >= 0.0 { guard } else { -guard } } else { q };
        q = (diag[i] - mu * b_diag[i]) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest generalized eigenvalue of the symmetric tridiagonal pencil
/// (A, B) with B positive diagonal, plus its B-normalized eigenvector.
///
/// Bisection on the inertia count to a 1e-12 relative interval, then two
/// steps of inverse iteration for the eigenvector.
pub fn tridiag_eig_smallest(
    diag: &[f64],
    off: &[f64],
    b_diag: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n);
    assert_eq!(b_diag.len(), n);
    if b_diag.iter().any(|&b| b <= 0.0) {
        return Err(Error::Domain("mass diagonal must be strictly positive".into()));
    }

    // Gershgorin bounds for B^{-1/2} A B^{-1/2}
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r_left = if i > 0 { off[i - 1].abs() / (b_diag[i] * b_diag[i - 1]).sqrt() } else { 0.0 };
        let r_right = if i + 1 < n { off[i].abs() / (b_diag[i] * b_diag[i + 1]).sqrt() } else { 0.0 };
        let center = diag[i] / b_diag[i];
        lo = lo.min(center - r_left - r_right);
        hi = hi.max(center + r_left + r_right);
    }
    lo -= 1e-8 * (hi - lo).abs().max(1.0);

    if sturm_count(diag, off, b_diag, lo) != 0 {
        return Err(Error::NumericalFailure("Gershgorin lower bound not below spectrum".into()));
    }
    let mut a_lo = lo;
    let mut a_hi = hi;
    let mut iters = 0usize;
    while a_hi - a_lo > 1e-12 * (1.0 + a_lo.abs().max(a_hi.abs())) {
        let mid = 0.5 * (a_lo + a_hi);
        if sturm_count(diag, off, b_diag, mid) >= 1 {
            a_hi = mid;
        } else {
            a_lo = mid;
        }
        iters += 1;
        if iters > 200 {
            return Err(Error::NumericalFailure("bisection failed to converge".into()));
        }
    }
    let mu = 0.5 * (a_lo + a_hi);
    let tol = 1e-12 * (1.0 + a_lo.abs().max(a_hi.abs()));

    // inverse iteration on A - shift B; the shift starts just outside the
    // bisection interval and backs off until the factorization is regular
    let mut offset = 16.0 * tol;
    let lu = loop {
        let shift = a_lo - offset;
        let mut m = BandedMatrix::new(n, 1, 1);
        for i in 0..n {
            m.set(i, i, diag[i] - shift * b_diag[i]);
            if i + 1 < n {
                m.set(i, i + 1, off[i]);
                m.set(i + 1, i, off[i]);
            }
        }
        match m.factor() {
            Ok(lu) => break lu,
            Err(_) if offset < 1e-3 * (1.0 + mu.abs()) => offset *= 100.0,
            Err(e) => return Err(e),
        }
    };
    let mut v = vec![1.0; n];
    for _ in 0..2 {
        let rhs: Vec<f64> = (0..n).map(|i| b_diag[i] * v[i]).collect();
        v = lu.solve(&rhs);
        let norm = b_norm(&v, b_diag);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NumericalFailure("inverse iteration collapsed".into()));
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    Ok((mu, v))
}

fn b_norm(v: &[f64], b_diag: &[f64]) -> f64 {
    v.iter().zip(b_diag).map(|(x, b)| b * x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn identity_solve_returns_rhs() {
        let mut m = BandedMatrix::new(5, 1, 1);
        for i in 0..5 {
            m.set(i, i, 1.0);
        }
        let rhs = [1.0, -2.0, 3.0, 0.5, 4.0];
        let x = banded_lu_solve(m, &rhs).unwrap();
        for (a, b) in x.iter().zip(rhs.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn laplacian_sinusoid_solution() {
        // -u'' = pi^2 sin(pi x) on (0,1), Dirichlet: u = sin(pi x)
        let n = 400;
        let h = 1.0 / (n as f64 + 1.0);
        let mut m = BandedMatrix::new(n, 1, 1);
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let x = (i as f64 + 1.0) * h;
            m.set(i, i, 2.0 / (h * h));
            if i > 0 {
                m.set(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < n {
                m.set(i, i + 1, -1.0 / (h * h));
            }
            rhs[i] = PI * PI * (PI * x).sin();
        }
        let x = banded_lu_solve(m, &rhs).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..n {
            let xi = (i as f64 + 1.0) * h;
            err = err.max((x[i] - (PI * xi).sin()).abs());
        }
        assert!(err < 1e-4, "discretization error {err}");
    }

    #[test]
    fn zero_matrix_is_singular() {
        let m = BandedMatrix::new(4, 1, 1);
        assert!(matches!(m.factor(), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn random_diagonally_dominant_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(5..60);
            let kl = rng.gen_range(1..4.min(n));
            let ku = rng.gen_range(1..4.min(n));
            let mut m = BandedMatrix::new(n, kl, ku);
            for i in 0..n {
                let mut row_sum = 0.0;
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    if j != i {
                        let v = rng.gen_range(-1.0..1.0);
                        m.set(i, j, v);
                        row_sum += f64::abs(v);
                    }
                }
                m.set(i, i, row_sum + 1.0 + rng.gen_range(0.0..1.0));
            }
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = banded_lu_solve(m.clone(), &rhs).unwrap();
            let ax = m.matvec(&x);
            let res = ax
                .iter()
                .zip(rhs.iter())
                .fold(0.0f64, |mx, (a, b)| mx.max((a - b).abs()));
            let rhs_norm = norm_inf(&rhs).max(1e-30);
            assert!(res / rhs_norm <= 1e-12, "relative residual {}", res / rhs_norm);
        }
    }

    #[test]
    fn bordered_with_zero_border_reduces_to_banded() {
        let mut m = BandedMatrix::new(3, 1, 1);
        for i in 0..3 {
            m.set(i, i, 2.0);
        }
        let rhs = [2.0, 4.0, 6.0];
        let (x, last) = bordered_solve(m, &[0.0; 3], &[0.0; 3], 1.0, &rhs, 5.0).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[2], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(last, 5.0, epsilon = 1e-14);
    }

    #[test]
    fn bordered_random_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 50;
        let (kl, ku) = (3, 3);
        let mut m = BandedMatrix::new(n, kl, ku);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                if j != i {
                    let v = rng.gen_range(-1.0..1.0);
                    m.set(i, j, v);
                    row_sum += f64::abs(v);
                }
            }
            m.set(i, i, row_sum + 2.0);
        }
        let col: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let corner = 3.0;
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rhs_last = 0.7;

        let (x, last) = bordered_solve(m.clone(), &col, &row, corner, &rhs, rhs_last).unwrap();
        let (xd, lastd) =
            dense_bordered_solve(&m, &col, &row, corner, &rhs, rhs_last).unwrap();
        for (a, b) in x.iter().zip(xd.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(last, lastd, epsilon = 1e-10);

        // residual of the full bordered system
        let ax = m.matvec(&x);
        let mut res: f64 = 0.0;
        for i in 0..n {
            res = res.max((ax[i] + col[i] * last - rhs[i]).abs());
        }
        res = res.max((dot(&row, &x) + corner * last - rhs_last).abs());
        assert!(res <= 1e-9, "bordered residual {res}");
    }

    #[test]
    fn singular_core_with_nonsingular_border_is_solvable() {
        // M has a zero row/column but the bordered completion is regular
        let n = 4;
        let mut m = BandedMatrix::new(n, 1, 1);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        m.set(2, 2, 1.0);
        // row/col 3 of M is zero
        let col = [0.0, 0.0, 0.0, 1.0];
        let row = [0.0, 0.0, 0.0, 1.0];
        let corner = 0.0;
        let rhs = [1.0, 2.0, 3.0, 4.0];
        let (x, last) = bordered_solve(m, &col, &row, corner, &rhs, 5.0).unwrap();
        // system: x_i = rhs_i for i<3; last = 4; x_3 = 5
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[3], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(last, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn tridiag_smallest_diagonal_case() {
        let (mu, v) = tridiag_eig_smallest(&[1.0, 2.0, 3.0], &[0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(mu, 1.0, epsilon = 1e-10);
        assert!(v[0].abs() > 0.999 && v[1].abs() < 1e-6 && v[2].abs() < 1e-6);
    }

    #[test]
    fn tridiag_dirichlet_laplacian_eigenvalue() {
        // -d^2/dx^2 on (0,1) Dirichlet: smallest eigenvalue pi^2
        let n = 800;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let b = vec![1.0; n];
        let (mu, v) = tridiag_eig_smallest(&diag, &off, &b).unwrap();
        // exact smallest eigenvalue of the discrete operator
        let mu_exact = 2.0 * (1.0 - (PI * h).cos()) / (h * h);
        assert_abs_diff_eq!(mu, mu_exact, epsilon = 1e-9 * mu_exact);
        assert_abs_diff_eq!(mu, PI * PI, epsilon = PI.powi(4) * h * h);
        // eigenvector proportional to sin(pi x): single-signed
        let signs_pos = v.iter().filter(|&&x| x > 0.0).count();
        assert!(signs_pos == 0 || signs_pos == n);
    }

    #[test]
    fn tridiag_rejects_nonpositive_mass() {
        assert!(tridiag_eig_smallest(&[1.0, 2.0], &[0.1], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn fd_weights_classic_stencils() {
        // centered second derivative on uniform nodes: [1, -2, 1]/h^2
        let w = fd_weights(0.0, &[-0.5, 0.0, 0.5], 2);
        assert_abs_diff_eq!(w[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], -8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 4.0, epsilon = 1e-12);
        // one-sided first derivative: [-3, 4, -1]/(2h)
        let w = fd_weights(0.0, &[0.0, 1.0, 2.0], 1);
        assert_abs_diff_eq!(w[0], -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn fd_weights_exact_for_polynomials() {
        let x: [f64; 6] = [-0.3, -0.1, 0.05, 0.2, 0.45, 0.7];
        let f: Vec<f64> = x.iter().map(|&t| 1.0 + t - 2.0 * t.powi(3) + t.powi(5)).collect();
        let z = 0.1;
        let w = fd_weights(z, &x, 2);
        let d2: f64 = w.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
        let exact = -12.0 * z + 20.0 * z.powi(3);
        assert_abs_diff_eq!(d2, exact, epsilon = 1e-10);
    }

    #[test]
    fn kernels_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let mut m = BandedMatrix::new(n, 2, 2);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                m.set(i, j, if i == j { 5.0 } else { rng.gen_range(-1.0..1.0) });
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x1 = banded_lu_solve(m.clone(), &rhs).unwrap();
        let x2 = banded_lu_solve(m, &rhs).unwrap();
        assert_eq!(x1, x2); // bitwise
    }
}
