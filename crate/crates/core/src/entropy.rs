//! Entanglement entropy of free fermions from the restricted Fermi projection:
//! `S_Λ = Σ h(σᵢ)` over the eigenvalues `σᵢ` of `P_Λ`, in nats.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::eigen::symmetric_eigenvalues;
use crate::spectral::FermiProjection;

/// Inputs to `h` may stray this far outside `[0, 1]` before it is an error.
pub const CLAMP_TOLERANCE: f64 = 1e-8;
/// Correlation eigenvalues may stray this far outside `[0, 1]`.
pub const SPECTRUM_TOLERANCE: f64 = 1e-6;
const H_FLOOR: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyKind {
    /// Cube `[-M, M]^d`.
    Block { half_width: usize },
    /// Half-box on one side of the cut between sites `c - 1` and `c`.
    Cut { position: i64, side: Side },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropySample {
    pub value: f64,
    pub kind: EntropyKind,
    pub realization_index: u64,
}

impl EntropySample {
    pub fn for_realization(mut self, index: u64) -> Self {
        self.realization_index = index;
        self
    }
}

/// Binary entropy `h(p) = -p ln p - (1-p) ln(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(p >= -CLAMP_TOLERANCE && p <= 1.0 + CLAMP_TOLERANCE) {
        return Err(Error::Domain(format!(
            "binary entropy argument {p} outside [0, 1] beyond tolerance"
        )));
    }
    let p = p.clamp(0.0, 1.0);
    if p < H_FLOOR || 1.0 - p < H_FLOOR {
        return Ok(0.0);
    }
    Ok(-p * p.ln() - (1.0 - p) * (-p).ln_1p())
}

/// Eigenvalues of the principal submatrix `P_Λ`, unclamped, ascending.
///
/// When the occupied vectors are known and fewer than `|Λ|`, the nonzero
/// eigenvalues are taken from the smaller Gram matrix `Q_Λᵀ Q_Λ`, which has
/// the same nonzero spectrum as `P_Λ = Q_Λ Q_Λᵀ`; the rest are zeros.
pub fn correlation_spectrum(p: &FermiProjection, sites: &[usize]) -> Result<Vec<f64>> {
    if sites.is_empty() {
        return Err(Error::Domain("entropy of an empty block".into()));
    }
    let n = p.matrix.dim();
    if let Some(&bad) = sites.iter().find(|&&s| s >= n) {
        return Err(Error::Range(format!(
            "site {bad} outside a box of {n} sites"
        )));
    }
    match p.basis() {
        Some(basis) if basis.len() < sites.len() => {
            let k = basis.len();
            let restricted: Vec<Vec<f64>> = basis
                .iter()
                .map(|q| sites.iter().map(|&s| q[s]).collect())
                .collect();
            let gram = Matrix::from_fn(k, |a, b| {
                restricted[a]
                    .iter()
                    .zip(&restricted[b])
                    .map(|(x, y)| x * y)
                    .sum()
            });
            let mut spectrum = vec![0.0; sites.len() - k];
            spectrum.extend(symmetric_eigenvalues(&gram)?);
            spectrum.sort_by(f64::total_cmp);
            Ok(spectrum)
        }
        _ => symmetric_eigenvalues(&p.matrix.principal_submatrix(sites)),
    }
}

/// `Tr h(P_Λ)` for an arbitrary site set.
pub fn entanglement_entropy(p: &FermiProjection, sites: &[usize]) -> Result<f64> {
    let spectrum = correlation_spectrum(p, sites)?;
    let mut total = 0.0;
    for s in spectrum {
        if !(s >= -SPECTRUM_TOLERANCE && s <= 1.0 + SPECTRUM_TOLERANCE) {
            return Err(Error::Numerical(format!(
                "restricted projection has eigenvalue {s} outside [0, 1]"
            )));
        }
        total += binary_entropy(s.clamp(0.0, 1.0))?;
    }
    Ok(total)
}

/// Entropy of the cube `[-m, m]^d`.
pub fn block_entropy(p: &FermiProjection, m: usize) -> Result<EntropySample> {
    let sites = p.geometry.cube_sites(m)?;
    Ok(EntropySample {
        value: entanglement_entropy(p, &sites)?,
        kind: EntropyKind::Block { half_width: m },
        realization_index: 0,
    })
}

fn require_line(p: &FermiProjection) -> Result<()> {
    if p.geometry.dimension() != 1 {
        return Err(Error::Domain(
            "cut entropies are defined for d = 1 only".into(),
        ));
    }
    Ok(())
}

/// Default distance a cut must keep from the box edge: `N / 4`.
pub fn default_cut_margin(p: &FermiProjection) -> usize {
    p.geometry.half_width() / 4
}

/// Single-cut entropy with the default margin. `Left` takes the sites
/// `{-N, …, c-1}`, `Right` takes `{c, …, N}`.
pub fn cut_entropy(p: &FermiProjection, c: i64, side: Side) -> Result<EntropySample> {
    cut_entropy_with_margin(p, c, side, default_cut_margin(p))
}

pub fn cut_entropy_with_margin(
    p: &FermiProjection,
    c: i64,
    side: Side,
    margin: usize,
) -> Result<EntropySample> {
    require_line(p)?;
    let n = p.geometry.half_width() as i64;
    if c.abs() > n - margin as i64 {
        return Err(Error::Range(format!(
            "cut at {c} is closer than {margin} sites to the edge of [-{n}, {n}]"
        )));
    }
    let split = (c + n) as usize;
    let sites: Vec<usize> = match side {
        Side::Left => (0..split).collect(),
        Side::Right => (split..p.matrix.dim()).collect(),
    };
    let value = if sites.is_empty() {
        0.0
    } else {
        entanglement_entropy(p, &sites)?
    };
    Ok(EntropySample {
        value,
        kind: EntropyKind::Cut { position: c, side },
        realization_index: 0,
    })
}

/// `S_[-M,M] - S_right(-M) - S_left(M+1)`: how far the block entropy is from
/// the sum of its two single-cut contributions.
pub fn splitting_residual(p: &FermiProjection, m: usize) -> Result<f64> {
    require_line(p)?;
    let n = p.geometry.half_width();
    if 2 * m > n {
        return Err(Error::Range(format!(
            "splitting needs M <= N/2, got M = {m}, N = {n}"
        )));
    }
    let block = block_entropy(p, m)?.value;
    let m = m as i64;
    let margin = default_cut_margin(p).min(n - m as usize - 1);
    let left_edge = cut_entropy_with_margin(p, -m, Side::Right, margin)?.value;
    let right_edge = cut_entropy_with_margin(p, m + 1, Side::Left, margin)?.value;
    Ok(block - left_edge - right_edge)
}

/// `Σ_{x ≥ 0} (Σ_{y ≤ -1} |P(x,y)|²)^α` over the box, for the cut at 0.
pub fn entropy_upper_bound_rhs(p: &FermiProjection, alpha: f64) -> Result<f64> {
    require_line(p)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let split = p.geometry.half_width();
    let dim = p.matrix.dim();
    Ok((split..dim)
        .map(|x| {
            let row = &p.matrix.row(x)[..split];
            row.iter().map(|v| v * v).sum::<f64>().powf(alpha)
        })
        .sum())
}
