//! Compressed sparse rows, ILU(0) and BiCGSTAB for the Newton systems.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square sparse matrix in CSR form with sorted column indices per row.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                debug_assert!(c < n);
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    let last = vals.len() - 1;
                    vals[last] = vals[last] + v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = T::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc = acc + self.vals[p] * x[self.cols[p]];
            }
            *yi = acc;
        }
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Clone, Debug)]
pub struct Ilu0<T> {
    lu: CsrMatrix<T>,
    diag: Vec<usize>,
}

impl<T: Real> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            for p in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.cols[p] == i {
                    *d = p;
                }
            }
            if *d == usize::MAX {
                return Err(Error::InvalidInput(format!("ILU(0): row {i} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                pos[lu.cols[p]] = p;
            }
            for p in start..end {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                let pivot = lu.vals[diag[k]];
                if pivot == T::zero() {
                    return Err(Error::InvalidInput(format!("ILU(0): zero pivot in row {k}")));
                }
                let factor = lu.vals[p] / pivot;
                lu.vals[p] = factor;
                for q in diag[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.cols[q];
                    let target = pos[j];
                    if target != usize::MAX && target >= start && target < end {
                        lu.vals[target] = lu.vals[target] - factor * lu.vals[q];
                    }
                }
            }
            for p in start..end {
                pos[lu.cols[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// Solves `L U x = b` in place.
    pub fn apply(&self, x: &mut [T]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut acc = x[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                acc = acc - lu.vals[p] * x[lu.cols[p]];
            }
            x[i] = acc;
        }
        for i in (0..lu.n).rev() {
            let mut acc = x[i];
            for p in self.diag[i] + 1..lu.row_ptr[i + 1] {
                acc = acc - lu.vals[p] * x[lu.cols[p]];
            }
            x[i] = acc / lu.vals[self.diag[i]];
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGSTAB. `x` holds the initial guess on entry.
/// Returns the iteration count once `|b - A x| <= rel_tol |b|`.
pub fn bicgstab<T: Real>(a: &CsrMatrix<T>, m: &Ilu0<T>, b: &[T], x: &mut [T], rel_tol: T, max_iter: usize) -> Result<usize> {
    let n = a.dim();
    let bnorm = norm(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(0);
    }
    let mut r = vec![T::zero(); n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut phat = vec![T::zero(); n];
    let mut shat = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut res = norm(&r);
    for it in 0..max_iter {
        if res <= rel_tol * bnorm {
            return Ok(it);
        }
        let rho_new = dot(&r0, &r);
        if rho_new == T::zero() || omega == T::zero() {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        phat.copy_from_slice(&p);
        m.apply(&mut phat);
        a.mul_vec(&phat, &mut v);
        let denom = dot(&r0, &v);
        if denom == T::zero() {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= rel_tol * bnorm {
            for i in 0..n {
                x[i] = x[i] + alpha * phat[i];
            }
            return Ok(it + 1);
        }
        shat.copy_from_slice(&s);
        m.apply(&mut shat);
        a.mul_vec(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt == T::zero() { T::zero() } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] = x[i] + alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r);
    }
    // Recompute the true residual before giving up.
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let res = norm(&r);
    if res <= rel_tol * bnorm {
        Ok(max_iter)
    } else {
        Err(Error::NotConverged { iterations: max_iter, residual: (res / bnorm).as_f64() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix<f64> {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0 + shift)];
                if i > 0 {
                    r.push((i - 1, -1.0 - 0.3));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0 + 0.3));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_rows(vec![vec![(0, 1.0), (0, 2.0)], vec![(1, 1.0)]]);
        let mut y = [0.0; 2];
        m.mul_vec(&[1.0, 1.0], &mut y);
        assert_eq!(y, [3.0, 1.0]);
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        let a = laplacian_1d(50, 0.1);
        let ilu = Ilu0::new(&a).unwrap();
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; 50];
        a.mul_vec(&x_true, &mut b);
        ilu.apply(&mut b);
        for (u, v) in b.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn bicgstab_solves_nonsymmetric_system() {
        let n = 400;
        let a = laplacian_1d(n, 0.01);
        let ilu = Ilu0::new(&a).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&x_true, &mut b);
        let mut x = vec![0.0; n];
        bicgstab(&a, &ilu, &b, &mut x, 1e-12, 100).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn missing_diagonal_is_rejected() {
        let m = CsrMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]);
        assert!(Ilu0::new(&m).is_err());
    }
}
