//! Small dense linear algebra used by the tensor and generator checks.
//!
//! Everything here is written for desk-scale matrices (n up to a few dozen):
//! row-major storage, Gaussian elimination with partial pivoting, cyclic
//! Jacobi for symmetric eigenproblems and a Cholesky-based reduction for
//! generalized ones.

use crate::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, c: S) -> Self {
        let mut out = self.clone();
        for x in &mut out.data {
            *x = *x * c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, &y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, &y) in out.data.iter_mut().zip(&other.data) {
            *x -= y;
        }
        out
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn symmetrize(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut out = self.clone();
        let half = S::real(0.5);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = (self[(i, j)] + self[(j, i)]) * half;
            }
        }
        out
    }
}

impl<S: Scalar> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when the pivot falls below `n * eps * max|A|`.
pub fn solve<S: Scalar>(a: &Mat<S>, b: &[S]) -> Option<Vec<S>> {
    assert_eq!(a.rows, a.cols);
    assert_eq!(a.rows, b.len());
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let tol = S::from_usize(n).unwrap() * S::epsilon() * (m.max_abs() + S::one());
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[(r, col)].abs() > m[(piv, col)].abs() {
                piv = r;
            }
        }
        if m[(piv, col)].abs() <= tol {
            return None;
        }
        if piv != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            rhs.swap(col, piv);
        }
        let d = m[(col, col)];
        for r in col + 1..n {
            let f = m[(r, col)] / d;
            if f == S::zero() {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(r, j)] -= f * v;
            }
            let bv = rhs[col];
            rhs[r] -= f * bv;
        }
    }
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order together with the matching
/// eigenvectors (columns of the returned matrix).
pub fn symmetric_eigen<S: Scalar>(a: &Mat<S>) -> (Vec<S>, Mat<S>) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.symmetrize();
    let mut v = Mat::identity(n);
    if n <= 1 {
        return (m.data.clone(), v);
    }
    let tol = S::epsilon() * S::real(4.0) * (m.max_abs() + S::one());
    for _sweep in 0..64 {
        let mut off = S::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (S::real(2.0) * apq);
                // stable tangent of the rotation angle
                let t = {
                    let s = if theta >= S::zero() { S::one() } else { -S::one() };
                    s / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let vals: Vec<S> = idx.iter().map(|&i| m[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (new_col, &old_col) in idx.iter().enumerate() {
        for r in 0..n {
            vecs[(r, new_col)] = v[(r, old_col)];
        }
    }
    (vals, vecs)
}

/// Cholesky factor `L` (lower triangular, `A = L L^T`) of an SPD matrix.
pub fn cholesky<S: Scalar>(a: &Mat<S>) -> Option<Mat<S>> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= S::zero() {
                    return None;
                }
                l[(i, j)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Eigenvalues (ascending) and eigenvectors of the pencil `A v = lambda B v`
/// with `B` symmetric positive definite: reduce by the Cholesky factor of `B`
/// and run the symmetric solver.
pub fn generalized_eigen<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Option<(Vec<S>, Mat<S>)> {
    let n = a.rows;
    let l = cholesky(b)?;
    // C = L^-1 A L^-T via two triangular solves
    let mut c = Mat::zeros(n, n);
    // first: Y = L^-1 A  (solve L Y = A column-wise on rows)
    let mut y = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let mut s = a[(i, j)];
            for k in 0..i {
                s -= l[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = s / l[(i, i)];
        }
    }
    // second: C = Y L^-T  => C L^T = Y => solve for C rows
    for i in 0..n {
        for j in 0..n {
            let mut s = y[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * l[(j, k)];
            }
            c[(i, j)] = s / l[(j, j)];
        }
    }
    let (vals, w) = symmetric_eigen(&c);
    // back-substitute eigenvectors: v = L^-T w
    let mut vecs = Mat::zeros(n, n);
    for col in 0..n {
        let mut v = vec![S::zero(); n];
        for i in (0..n).rev() {
            let mut s = w[(i, col)];
            for k in i + 1..n {
                s -= l[(k, i)] * v[k];
            }
            v[i] = s / l[(i, i)];
        }
        for i in 0..n {
            vecs[(i, col)] = v[i];
        }
    }
    Some((vals, vecs))
}

/// Orthonormal-ish basis of the null space of `g` (rows are constraints),
/// found by Gaussian elimination with a relative pivot tolerance.
pub fn null_space_basis<S: Scalar>(g: &Mat<S>) -> Vec<Vec<S>> {
    let rows = g.rows;
    let cols = g.cols;
    let mut m = g.clone();
    let tol = S::epsilon().sqrt() * (m.max_abs() + S::one());
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let mut piv = r;
        for rr in r + 1..rows {
            if m[(rr, c)].abs() > m[(piv, c)].abs() {
                piv = rr;
            }
        }
        if m[(piv, c)].abs() <= tol {
            continue;
        }
        if piv != r {
            for j in 0..cols {
                let tmp = m[(r, j)];
                m[(r, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
        }
        let d = m[(r, c)];
        for rr in 0..rows {
            if rr == r {
                continue;
            }
            let f = m[(rr, c)] / d;
            if f == S::zero() {
                continue;
            }
            for j in 0..cols {
                let v = m[(r, j)];
                m[(rr, j)] -= f * v;
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::new();
    for &fc in &free {
        let mut v = vec![S::zero(); cols];
        v[fc] = S::one();
        for (ri, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[(ri, fc)] / m[(ri, pc)];
        }
        basis.push(v);
    }
    basis
}
