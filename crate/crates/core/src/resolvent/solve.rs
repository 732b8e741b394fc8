//! Complex linear solves for `(H - z) g = b`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tridiagonal solve with partial pivoting (LAPACK `gtsv` elimination).
///
/// `sub[i]` couples rows `i+1` and `i`, `sup[i]` couples `i` and `i+1`.
pub fn solve_tridiagonal(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    let singular =
        |i: usize| Error::Numerical(format!("zero pivot at row {i} in a tridiagonal solve"));

    for i in 0..n.saturating_sub(1) {
        if d[i].norm() >= dl[i].norm() {
            if d[i].norm() == 0.0 {
                return Err(singular(i));
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] = b[i + 1] - fact * b[i];
            dl[i] = Complex64::new(0.0, 0.0);
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if n > 0 && d[n - 1].norm() == 0.0 {
        return Err(singular(n - 1));
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= du[i] * b[i + 1];
        }
        if i + 2 < n {
            acc -= du2[i] * b[i + 2];
        }
        b[i] = acc / d[i];
    }
    Ok(b)
}

/// Dense LU solve with partial pivoting. `a` is row-major `n x n`.
pub fn solve_dense(mut a: Vec<Complex64>, n: usize, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut b = rhs.to_vec();
    for k in 0..n {
        let (piv, best) = (k..n)
            .map(|i| (i, a[i * n + k].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty column");
        if best == 0.0 {
            return Err(Error::Numerical(format!("singular matrix at column {k}")));
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        let pivot = a[k * n + k];
        for i in (k + 1)..n {
            let factor = a[i * n + k] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in k..n {
                let upd = factor * a[k * n + j];
                a[i * n + j] -= upd;
            }
            let upd = factor * b[k];
            b[i] -= upd;
        }
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in (i + 1)..n {
            acc -= a[i * n + j] * b[j];
        }
        b[i] = acc / a[i * n + i];
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tridiagonal_needs_pivoting() {
        // tiny leading diagonal forces a row interchange
        let diag = [c(1e-14, 0.0), c(1.0, 0.5), c(2.0, 0.0), c(-1.0, 1.0)];
        let sub = [c(3.0, 0.0), c(-1.0, 0.0), c(0.5, 0.2)];
        let sup = [c(1.0, 0.0), c(2.0, -1.0), c(1.0, 0.0)];
        let x = [c(1.0, 1.0), c(-2.0, 0.0), c(0.0, 3.0), c(0.5, -0.5)];
        let n = 4;
        let mut b = vec![c(0.0, 0.0); n];
        for i in 0..n {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                b[i] += sup[i] * x[i + 1];
            }
        }
        let got = solve_tridiagonal(&sub, &diag, &sup, &b).unwrap();
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).norm() < 1e-12);
        }
        let mut dense = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            dense[i * n + i] = diag[i];
            if i + 1 < n {
                dense[i * n + i + 1] = sup[i];
                dense[(i + 1) * n + i] = sub[i];
            }
        }
        let got = solve_dense(dense, n, &b).unwrap();
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let z = c(0.0, 0.0);
        assert!(solve_tridiagonal(&[z], &[z, z], &[z], &[c(1.0, 0.0), z]).is_err());
        assert!(solve_dense(vec![z; 4], 2, &[z, z]).is_err());
    }
}
