//! Eigendecompositions of the lattice Hamiltonian, Fermi projections and
//! decay profiles of their kernels.

pub mod eigen;

use crate::error::{Error, Result};
use crate::lattice::{BoxGeometry, HamiltonianMatrix, HamiltonianStorage};
use crate::matrix::Matrix;

/// Distance below which the Fermi energy is considered to hit an eigenvalue.
pub const FERMI_DEGENERACY_GUARD: f64 = 1e-10;

/// Values at or below this floor are dropped before a log-linear fit.
pub const DECAY_FIT_FLOOR: f64 = 1e-14;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hamiltonian.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub geometry: Option<BoxGeometry>,
    pub eigenvalues: Vec<f64>,
    /// Row-major: the k-th eigenvector is `vectors[k * n..(k + 1) * n]`.
    vectors: Vec<f64>,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// Matrix whose columns are the eigenvectors.
    pub fn eigenvector_matrix(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, |i, k| self.vectors[k * n + i])
    }

    /// `max |QᵀQ - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a..n {
                let dot: f64 = self
                    .vector(a)
                    .iter()
                    .zip(self.vector(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max |Q Λ Qᵀ - H|`.
    pub fn reconstruction_residual(&self, h: &Matrix) -> f64 {
        let n = self.dim();
        let mut rec = Matrix::zeros(n);
        for k in 0..n {
            let lam = self.eigenvalues[k];
            let q = self.vector(k);
            for i in 0..n {
                let a = lam * q[i];
                if a == 0.0 {
                    continue;
                }
                for (r, qj) in rec.row_mut(i).iter_mut().zip(q) {
                    *r += a * qj;
                }
            }
        }
        rec.max_abs_diff(h)
    }
}

/// Full symmetric eigendecomposition of a Hamiltonian.
///
/// One-dimensional operators go straight to the tridiagonal QL iteration;
/// dense ones are Householder-reduced first. Each eigenvector's
/// largest-magnitude entry is made positive.
pub fn eig_sym(h: &HamiltonianMatrix) -> Result<SpectralDecomp> {
    let n = h.dim();
    let (eigenvalues, mut vectors) = match &h.storage {
        HamiltonianStorage::Tridiagonal { diag, off } => eigen::tridiagonal_eigensystem(diag, off)?,
        HamiltonianStorage::Dense(m) => eigen::symmetric_eigensystem(m)?,
    };
    eigen::fix_signs(&mut vectors, n);
    Ok(SpectralDecomp {
        geometry: Some(h.geometry),
        eigenvalues,
        vectors,
    })
}

/// Eigendecomposition of an arbitrary dense symmetric matrix.
pub fn eig_sym_matrix(a: &Matrix) -> Result<SpectralDecomp> {
    let n = a.dim();
    let (eigenvalues, mut vectors) = eigen::symmetric_eigensystem(a)?;
    eigen::fix_signs(&mut vectors, n);
    Ok(SpectralDecomp {
        geometry: None,
        eigenvalues,
        vectors,
    })
}

/// Spectral projection `P = 𝓔_H((0, E))`.
#[derive(Clone, Debug)]
pub struct FermiProjection {
    pub geometry: BoxGeometry,
    pub fermi_energy: f64,
    pub matrix: Matrix,
    /// Number of eigenvalues in `(0, E)`.
    pub rank: usize,
    /// Orthonormal occupied vectors, when the projection was built from them.
    basis: Option<Vec<Vec<f64>>>,
}

impl FermiProjection {
    /// Wraps a given matrix; the caller vouches that it is a projection.
    pub fn from_matrix(geometry: BoxGeometry, fermi_energy: f64, matrix: Matrix) -> Self {
        let rank = matrix.trace().round().max(0.0) as usize;
        Self {
            geometry,
            fermi_energy,
            matrix,
            rank,
            basis: None,
        }
    }

    /// Occupied eigenvectors `q_k`, with `P = Σ q_k q_kᵀ`, if known.
    pub fn basis(&self) -> Option<&[Vec<f64>]> {
        self.basis.as_deref()
    }

    pub fn zero(geometry: BoxGeometry) -> Self {
        Self::from_matrix(geometry, 0.0, Matrix::zeros(geometry.num_sites()))
    }

    pub fn identity(geometry: BoxGeometry) -> Self {
        Self::from_matrix(
            geometry,
            f64::INFINITY,
            Matrix::identity(geometry.num_sites()),
        )
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.matrix[(x, y)]
    }

    /// `max |P² - P|`.
    pub fn idempotence_residual(&self) -> f64 {
        self.matrix.matmul(&self.matrix).max_abs_diff(&self.matrix)
    }
}

fn occupied_range(eigenvalues: &[f64], energy: f64, guard: bool) -> Result<std::ops::Range<usize>> {
    if !(energy > 0.0) {
        return Err(Error::Domain(format!(
            "Fermi energy must be > 0, got {energy}"
        )));
    }
    if let Some(&lam) = eigenvalues
        .iter()
        .filter(|_| guard)
        .find(|&&lam| (lam - energy).abs() < FERMI_DEGENERACY_GUARD)
    {
        return Err(Error::DegenerateFermiLevel {
            energy,
            eigenvalue: lam,
            gap: (lam - energy).abs(),
        });
    }
    let lo = eigenvalues.partition_point(|&lam| lam <= 0.0);
    let hi = eigenvalues.partition_point(|&lam| lam < energy);
    Ok(lo..hi.max(lo))
}

fn projector_from_vectors<'a>(n: usize, vectors: impl Iterator<Item = &'a [f64]>) -> Matrix {
    let mut p = Matrix::zeros(n);
    for q in vectors {
        for i in 0..n {
            let a = q[i];
            if a == 0.0 {
                continue;
            }
            let row = &mut p.row_mut(i)[i..];
            for (r, qj) in row.iter_mut().zip(&q[i..]) {
                *r += a * qj;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            p[(i, j)] = p[(j, i)];
        }
    }
    p
}

/// `P = Σ_{0 < λ_k < E} q_k q_kᵀ` from a full decomposition.
pub fn fermi_projection(decomp: &SpectralDecomp, energy: f64) -> Result<FermiProjection> {
    projection_from_decomp(decomp, energy, true)
}

/// As [`fermi_projection`] but without the degeneracy guard: eigenvalues
/// numerically equal to `E` are kept or dropped by the strict comparison
/// `λ < E`. For deterministic operators whose spectrum is known to contain
/// `E`, such as the free chain at `E = 2`.
pub fn fermi_projection_unguarded(decomp: &SpectralDecomp, energy: f64) -> Result<FermiProjection> {
    projection_from_decomp(decomp, energy, false)
}

fn projection_from_decomp(
    decomp: &SpectralDecomp,
    energy: f64,
    guard: bool,
) -> Result<FermiProjection> {
    let geometry = decomp
        .geometry
        .ok_or_else(|| Error::Domain("decomposition carries no lattice geometry".into()))?;
    let occ = occupied_range(&decomp.eigenvalues, energy, guard)?;
    let rank = occ.len();
    let basis: Vec<Vec<f64>> = occ.map(|k| decomp.vector(k).to_vec()).collect();
    let matrix = projector_from_vectors(decomp.dim(), basis.iter().map(|v| v.as_slice()));
    Ok(FermiProjection {
        geometry,
        fermi_energy: energy,
        matrix,
        rank,
        basis: Some(basis),
    })
}

/// Fermi projection computed from the occupied eigenvectors only.
///
/// Eigenvalues come from QL without vector accumulation; occupied vectors of
/// the tridiagonal form come from inverse iteration (clusters kept whole) and
/// are mapped back through the Householder factor in `d = 2`. Agrees with
/// [`fermi_projection`]`(`[`eig_sym`]`(h), E)` to rounding, at a fraction of the
/// cost when the occupied fraction is small.
pub fn fermi_projection_direct(h: &HamiltonianMatrix, energy: f64) -> Result<FermiProjection> {
    let n = h.dim();
    let (diag, off, q) = match &h.storage {
        HamiltonianStorage::Tridiagonal { diag, off } => {
            (diag.clone(), off.clone(), eigen::Factor::None)
        }
        HamiltonianStorage::Dense(m) => {
            eigen::householder_tridiagonalize(m, eigen::Accumulate::Reflectors)
        }
    };
    let values = eigen::tridiagonal_eigenvalues(&diag, &off)?;
    let occ = occupied_range(&values, energy, true)?;
    let rank = occ.len();
    let norm1 = eigen::tridiagonal_norm1(&diag, &off);
    let (lo, hi) = eigen::cluster_bounds(&values, norm1, occ.start, occ.end);
    let tri_vectors = eigen::tridiagonal_eigenvectors(&diag, &off, &values, lo..hi)?;
    let keep = tri_vectors.into_iter().skip(occ.start - lo).take(rank);
    let basis: Vec<Vec<f64>> = match q {
        eigen::Factor::Reflectors(r) => keep
            .map(|mut y| {
                r.apply(&mut y);
                y
            })
            .collect(),
        _ => keep.collect(),
    };
    let matrix = projector_from_vectors(n, basis.iter().map(|v| v.as_slice()));
    Ok(FermiProjection {
        geometry: h.geometry,
        fermi_energy: energy,
        matrix,
        rank,
        basis: Some(basis),
    })
}

/// `|P(x₀, x₀ + r e₁)|` for `r = 0..=r_max` along the first axis.
pub fn projection_decay_profile(
    p: &FermiProjection,
    axis_origin: usize,
    r_max: usize,
) -> Result<Vec<(usize, f64)>> {
    let g = &p.geometry;
    if axis_origin >= g.num_sites() {
        return Err(Error::Range(format!("site {axis_origin} outside the box")));
    }
    let mut c = g.coords(axis_origin);
    let x0 = c[0];
    (0..=r_max)
        .map(|r| {
            c[0] = x0 + r as i64;
            let y = g.index(&c).ok_or_else(|| {
                Error::Range(format!(
                    "distance {r} from x = {x0} leaves the box of half width {}",
                    g.half_width()
                ))
            })?;
            Ok((r, p.get(axis_origin, y).abs()))
        })
        .collect()
}

/// Log-linear least-squares fit `value ≈ C e^{-γ r}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub amplitude_log: f64,
    pub rate: f64,
    /// Fractional-moment exponent the samples were taken at, if any.
    pub exponent_s: Option<f64>,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_exponential_decay(samples: &[(f64, f64)]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(r, v)| r.is_finite() && v.is_finite() && *v > DECAY_FIT_FLOOR)
        .map(|&(r, v)| (r, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "exponential fit needs 3 values above {DECAY_FIT_FLOOR:e}, got {}",
            pts.len()
        )));
    }
    let line = least_squares_line(&pts);
    Ok(DecayFit {
        amplitude_log: line.intercept,
        rate: -line.slope,
        exponent_s: None,
        r_squared: line.r_squared,
        points: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 0 when the responses are constant.
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn least_squares_line(pts: &[(f64, f64)]) -> LineFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 && sxx > 0.0 {
        let ss_res: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}
