//! Symmetric eigensolvers: Householder tridiagonalization followed by the
//! implicit-shift QL iteration, and inverse iteration for selected
//! eigenvectors of a symmetric tridiagonal matrix.
//!
//! The QL routines follow the classic EISPACK `tred2`/`tql2` pair. Eigenvectors
//! are carried as rows (`z[k * n..(k + 1) * n]` is the k-th vector) so that
//! the Givens updates touch contiguous memory.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const QL_MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Reduces a symmetric matrix to tridiagonal form `A = Q T Qᵀ`.
///
/// Returns `(diag, off, q)`; `off[i]` couples `i` and `i + 1`. The
/// orthogonal factor is formed, kept as reflectors, or dropped.
pub fn householder_tridiagonalize(
    a: &Matrix,
    accumulate: Accumulate,
) -> (Vec<f64>, Vec<f64>, Factor) {
    let n = a.dim();
    if n <= 1 {
        let diag = if n == 1 { vec![a[(0, 0)]] } else { vec![] };
        let factor = match accumulate {
            Accumulate::No => Factor::None,
            Accumulate::Matrix => Factor::Matrix(Matrix::identity(n)),
            Accumulate::Reflectors => Factor::Reflectors(Reflectors {
                n,
                vectors: vec![],
                scales: vec![],
            }),
        };
        return (diag, vec![], factor);
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // The reduced diagonal sits on the diagonal of `v` at this point.
    let diag: Vec<f64> = (0..n).map(|j| v[(j, j)]).collect();
    let off: Vec<f64> = e[1..].to_vec();
    match accumulate {
        Accumulate::No => return (diag, off, Factor::None),
        Accumulate::Reflectors => {
            let mut vectors = Vec::with_capacity(n * (n - 1) / 2);
            let mut scales = Vec::with_capacity(n - 1);
            for i in 0..n - 1 {
                scales.push(d[i + 1]);
                vectors.extend((0..=i).map(|k| v[(k, i + 1)]));
            }
            return (
                diag,
                off,
                Factor::Reflectors(Reflectors { n, vectors, scales }),
            );
        }
        Accumulate::Matrix => {}
    }

    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    (diag, off, Factor::Matrix(v))
}

/// Householder reflectors of a tridiagonal reduction, kept in factored form.
#[derive(Clone, Debug)]
pub struct Reflectors {
    n: usize,
    vectors: Vec<f64>,
    scales: Vec<f64>,
}

impl Reflectors {
    /// Overwrites `x` with `Q x`. Costs `O(n²)` per vector, against `O(n³)`
    /// for forming `Q`.
    pub fn apply(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        let mut start = 0;
        for (i, &h) in self.scales.iter().enumerate() {
            let u = &self.vectors[start..start + i + 1];
            start += i + 1;
            if h == 0.0 {
                continue;
            }
            let g: f64 = u.iter().zip(&x[..=i]).map(|(a, b)| a * b).sum::<f64>() / h;
            for (xk, uk) in x[..=i].iter_mut().zip(u) {
                *xk -= g * uk;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Accumulate {
    No,
    Matrix,
    Reflectors,
}

#[derive(Clone, Debug)]
pub enum Factor {
    None,
    Matrix(Matrix),
    Reflectors(Reflectors),
}

impl Factor {
    pub fn into_matrix(self) -> Option<Matrix> {
        match self {
            Factor::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix.
///
/// On return `d` holds the (unsorted) eigenvalues. If `z` is given it must be
/// an `n x n` row-major buffer whose rows are rotated along with the
/// iteration; starting from the identity the rows become eigenvectors.
/// `√(a² + b²)`, falling back to `hypot` only where squaring could
/// overflow or underflow.
#[inline]
fn pythag(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m < 1e150 && m > 1e-150 {
        (a * a + b * b).sqrt()
    } else {
        a.hypot(b)
    }
}

fn tql(d: &mut [f64], off: &[f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let cap = QL_MAX_SWEEPS_PER_EIGENVALUE;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > cap {
                    return Err(Error::NoConvergence {
                        size: n,
                        iterations: iter - 1,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = pythag(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = pythag(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let mut d = diag.to_vec();
    tql(&mut d, off, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Full eigendecomposition of a symmetric tridiagonal matrix.
///
/// Returns eigenvalues ascending and the eigenvectors as rows.
pub fn tridiagonal_eigensystem(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut z = Matrix::identity(n).as_slice().to_vec();
    let mut d = diag.to_vec();
    tql(&mut d, off, Some(&mut z))?;
    Ok(sort_pairs(d, z, n))
}

/// Eigenvalues of a dense symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let (d, e, _) = householder_tridiagonalize(a, Accumulate::No);
    tridiagonal_eigenvalues(&d, &e)
}

/// Full eigendecomposition of a dense symmetric matrix (rows are vectors).
pub fn symmetric_eigensystem(a: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.dim();
    let (mut d, e, q) = householder_tridiagonalize(a, Accumulate::Matrix);
    let mut z = q
        .into_matrix()
        .expect("accumulated")
        .transpose()
        .as_slice()
        .to_vec();
    tql(&mut d, &e, Some(&mut z))?;
    Ok(sort_pairs(d, z, n))
}

fn sort_pairs(d: Vec<f64>, z: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        vectors.extend_from_slice(&z[k * n..(k + 1) * n]);
    }
    (values, vectors)
}

/// Flips each vector so that its largest-magnitude entry is positive.
pub fn fix_signs(vectors: &mut [f64], n: usize) {
    if n == 0 {
        return;
    }
    for v in vectors.chunks_mut(n) {
        let mut best = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[best].abs() {
                best = i;
            }
        }
        if v[best] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// LU factorization of `T - shift·I` with partial pivoting.
struct ShiftedTridiagonalLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedTridiagonalLu {
    fn new(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut u0: Vec<f64> = diag.iter().map(|d| d - shift).collect();
        let mut u1 = off.to_vec();
        let mut u2 = vec![0.0; n.saturating_sub(1)];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            let sub = off[k];
            if u0[k].abs() >= sub.abs() {
                if u0[k] == 0.0 {
                    u0[k] = tiny;
                }
                mult[k] = sub / u0[k];
                u0[k + 1] -= mult[k] * u1[k];
            } else {
                let (a1, b0) = (u1[k], u0[k + 1]);
                let b1 = if k + 1 < n - 1 { u1[k + 1] } else { 0.0 };
                mult[k] = u0[k] / sub;
                u0[k] = sub;
                u1[k] = b0;
                u2[k] = b1;
                u0[k + 1] = a1 - mult[k] * b0;
                if k + 1 < n - 1 {
                    u1[k + 1] = -mult[k] * b1;
                }
                swapped[k] = true;
            }
        }
        if let Some(last) = u0.last_mut() {
            if *last == 0.0 {
                *last = tiny;
            }
        }
        for p in u0.iter_mut() {
            if p.abs() < tiny {
                *p = tiny.copysign(*p);
            }
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                x.swap(k, k + 1);
            }
            x[k + 1] -= self.mult[k] * x[k];
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            if k + 1 < n {
                acc -= self.u1[k] * x[k + 1];
            }
            if k + 2 < n {
                acc -= self.u2[k] * x[k + 2];
            }
            x[k] = acc / self.u0[k];
        }
    }
}

fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    // xorshift64*; any fixed, nowhere-special vector works
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..n)
        .map(|_| {
            s ^= s >> 12;
            s ^= s << 25;
            s ^= s >> 27;
            let u = (s.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11) as f64 / (1u64 << 53) as f64;
            2.0 * u - 1.0
        })
        .collect()
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// Eigenvectors of a symmetric tridiagonal matrix for the eigenvalues with
/// indices `range` in the ascending list `eigenvalues`, by inverse iteration.
///
/// Eigenvalues closer than `1e-3 ‖T‖₁` form a cluster, and vectors inside a
/// cluster are Gram-Schmidt orthogonalized against each other. The range is
/// processed from the start of the cluster containing `range.start`, so
/// callers should pass complete clusters (see [`cluster_bounds`]).
pub fn tridiagonal_eigenvectors(
    diag: &[f64],
    off: &[f64],
    eigenvalues: &[f64],
    range: std::ops::Range<usize>,
) -> Result<Vec<Vec<f64>>> {
    let n = diag.len();
    if range.is_empty() {
        return Ok(Vec::new());
    }
    let norm1 = tridiagonal_norm1(diag, off);
    let ortol = 1e-3 * norm1;
    let tiny = f64::EPSILON * norm1.max(f64::MIN_POSITIVE);
    let tol = 64.0 * (n as f64).sqrt() * f64::EPSILON * norm1.max(1.0);

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(range.len());
    let mut cluster_start = 0usize; // index into `out`
    let mut prev_shift = f64::NEG_INFINITY;
    let first = range.start;

    for j in range.clone() {
        let lambda = eigenvalues[j];
        if j > first && lambda - eigenvalues[j - 1] > ortol {
            cluster_start = out.len();
        }
        let mut shift = lambda;
        let pertol = 10.0 * (f64::EPSILON * lambda).abs().max(f64::EPSILON * norm1);
        if shift - prev_shift < pertol {
            shift = prev_shift + pertol;
        }
        prev_shift = shift;

        let lu = ShiftedTridiagonalLu::new(diag, off, shift, tiny);
        let mut x = start_vector(n, j as u64 + 1);
        normalize(&mut x);
        let mut converged = false;
        for iter in 0..12 {
            lu.solve_in_place(&mut x);
            for _ in 0..2 {
                for q in &out[cluster_start..] {
                    let dot: f64 = q.iter().zip(&x).map(|(a, b)| a * b).sum();
                    x.iter_mut().zip(q).for_each(|(v, qv)| *v -= dot * qv);
                }
            }
            if normalize(&mut x) == 0.0 {
                x = start_vector(n, 7919 * (j as u64 + 1) + iter as u64);
                normalize(&mut x);
                continue;
            }
            if iter >= 1 {
                let residual = tridiagonal_residual(diag, off, lambda, &x);
                if residual <= tol {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                size: n,
                iterations: 12,
            });
        }
        out.push(x);
    }
    Ok(out)
}

/// Expands `[lo, hi)` so that it does not split any eigenvalue cluster.
pub fn cluster_bounds(eigenvalues: &[f64], norm1: f64, lo: usize, hi: usize) -> (usize, usize) {
    let ortol = 1e-3 * norm1;
    let mut a = lo;
    let mut b = hi;
    if a >= b {
        return (a, b);
    }
    while a > 0 && eigenvalues[a] - eigenvalues[a - 1] <= ortol {
        a -= 1;
    }
    while b < eigenvalues.len() && eigenvalues[b] - eigenvalues[b - 1] <= ortol {
        b += 1;
    }
    (a, b)
}

pub fn tridiagonal_norm1(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut s = diag[i].abs();
            if i > 0 {
                s += off[i - 1].abs();
            }
            if i + 1 < n {
                s += off[i].abs();
            }
            s
        })
        .fold(0.0, f64::max)
}

fn tridiagonal_residual(diag: &[f64], off: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut acc = (diag[i] - lambda) * x[i];
            if i > 0 {
                acc += off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += off[i] * x[i + 1];
            }
            acc.abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_lu_solves() {
        let diag = [0.1, 2.0, -1.0, 3.0, 0.5];
        let off = [1.0, -2.0, 0.3, 4.0];
        let lu = ShiftedTridiagonalLu::new(&diag, &off, 0.25, 1e-300);
        let x_true = [1.0, -2.0, 3.0, 0.5, -1.5];
        let mut b: Vec<f64> = (0..5)
            .map(|i| {
                let mut acc = (diag[i] - 0.25) * x_true[i];
                if i > 0 {
                    acc += off[i - 1] * x_true[i - 1];
                }
                if i < 4 {
                    acc += off[i] * x_true[i + 1];
                }
                acc
            })
            .collect();
        lu.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(x_true) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn one_by_one() {
        let a = Matrix::from_row_major(1, vec![3.5]);
        let (vals, vecs) = symmetric_eigensystem(&a).unwrap();
        assert_eq!(vals, vec![3.5]);
        assert_eq!(vecs, vec![1.0]);
    }

    #[test]
    fn inverse_iteration_matches_ql() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + ((i * 37) % 11) as f64 * 0.3).collect();
        let off = vec![-1.0; n - 1];
        let (vals, vecs) = tridiagonal_eigensystem(&diag, &off).unwrap();
        let got = tridiagonal_eigenvectors(&diag, &off, &vals, 0..n).unwrap();
        for (k, v) in got.iter().enumerate() {
            let q = &vecs[k * n..(k + 1) * n];
            let dot: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-10, "vector {k}: overlap {dot}");
        }
    }

    #[test]
    fn inverse_iteration_handles_exact_degeneracy() {
        // two decoupled identical blocks: every eigenvalue is double
        let diag = vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
        let off = vec![0.5, 0.5, 0.0, 0.5, 0.5];
        let vals = tridiagonal_eigenvalues(&diag, &off).unwrap();
        let vecs = tridiagonal_eigenvectors(&diag, &off, &vals, 0..6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "({i},{j}) {dot}");
            }
        }
    }
}
