//! Finite boxes of `Z^d`, i.i.d. random potentials and the discrete
//! Schrödinger operator `H = -Δ + V`.
//!
//! The box is `[-N, N]^d` with open boundaries. Sites are enumerated
//! row-major by coordinate: in `d = 2` the site `(x0, x1)` has index
//! `(x0 + N) * (2N + 1) + (x1 + N)`. Every module uses this enumeration.
//!
//! The kinetic part is the positive lattice Laplacian, with diagonal `2d`
//! and `-1` between nearest neighbours, so its spectrum lies in `[0, 4d]`
//! and `σ(H) ⊂ [0, ∞)` whenever `V ≥ 0`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::densities::DensityModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxGeometry {
    dimension: usize,
    half_width: usize,
    block_half_width: usize,
}

impl BoxGeometry {
    pub fn new(dimension: usize, half_width: usize, block_half_width: usize) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::Config(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if half_width == 0 {
            return Err(Error::Config("half_width must be at least 1".into()));
        }
        if block_half_width > half_width {
            return Err(Error::Config(format!(
                "block_half_width {block_half_width} exceeds half_width {half_width}"
            )));
        }
        Ok(Self {
            dimension,
            half_width,
            block_half_width,
        })
    }

    /// One-dimensional box `[-N, N]` with the block `[-M, M]`.
    pub fn line(half_width: usize, block_half_width: usize) -> Result<Self> {
        Self::new(1, half_width, block_half_width)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn block_half_width(&self) -> usize {
        self.block_half_width
    }

    /// Side length `2N + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Block side length `L = 2M + 1`.
    pub fn block_side(&self) -> usize {
        2 * self.block_half_width + 1
    }

    pub fn num_sites(&self) -> usize {
        self.side().pow(self.dimension as u32)
    }

    pub fn with_block(&self, block_half_width: usize) -> Result<Self> {
        Self::new(self.dimension, self.half_width, block_half_width)
    }

    pub fn contains(&self, coords: &[i64]) -> bool {
        let n = self.half_width as i64;
        coords.len() == self.dimension && coords.iter().all(|c| (-n..=n).contains(c))
    }

    /// Site index of a coordinate tuple, or `None` outside the box.
    pub fn index(&self, coords: &[i64]) -> Option<usize> {
        if !self.contains(coords) {
            return None;
        }
        let n = self.half_width as i64;
        let side = self.side();
        Some(
            coords
                .iter()
                .fold(0usize, |acc, &c| acc * side + (c + n) as usize),
        )
    }

    /// Inverse of [`BoxGeometry::index`].
    pub fn coords(&self, mut index: usize) -> Vec<i64> {
        let side = self.side();
        let n = self.half_width as i64;
        let mut out = vec![0i64; self.dimension];
        for slot in out.iter_mut().rev() {
            *slot = (index % side) as i64 - n;
            index /= side;
        }
        out
    }

    pub fn origin(&self) -> usize {
        self.index(&vec![0; self.dimension])
            .expect("origin is always inside the box")
    }

    /// Site index of the point `x` on the first axis (other coordinates 0).
    pub fn axis_site(&self, x: i64) -> Option<usize> {
        let mut c = vec![0i64; self.dimension];
        c[0] = x;
        self.index(&c)
    }

    /// Sites of the cube `[-m, m]^d`, in enumeration order.
    pub fn cube_sites(&self, m: usize) -> Result<Vec<usize>> {
        if m > self.half_width {
            return Err(Error::Range(format!(
                "block half width {m} exceeds box half width {}",
                self.half_width
            )));
        }
        let m = m as i64;
        Ok((0..self.num_sites())
            .filter(|&i| self.coords(i).iter().all(|c| c.abs() <= m))
            .collect())
    }

    /// Sites of the configured block `Λ = [-M, M]^d`.
    pub fn block_sites(&self) -> Vec<usize> {
        self.cube_sites(self.block_half_width)
            .expect("block half width validated at construction")
    }

    /// Nearest-neighbour pairs `(i, j)` with `i < j`.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..self.num_sites() {
            let c = self.coords(i);
            for axis in 0..self.dimension {
                let mut up = c.clone();
                up[axis] += 1;
                if let Some(j) = self.index(&up) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }
}

/// One disorder realization on a box, optionally with the origin shifted.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub geometry: BoxGeometry,
    /// Site values, already including any origin shift.
    pub values: Vec<f64>,
    pub origin_shift_t: f64,
    pub seed: u64,
    pub realization_index: u64,
}

impl PotentialField {
    /// A fixed potential, mostly for tests and clean-system contrasts.
    pub fn from_values(geometry: BoxGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.num_sites() {
            return Err(Error::Config(format!(
                "potential has {} values for {} sites",
                values.len(),
                geometry.num_sites()
            )));
        }
        Ok(Self {
            geometry,
            values,
            origin_shift_t: 0.0,
            seed: 0,
            realization_index: 0,
        })
    }

    pub fn zero(geometry: BoxGeometry) -> Self {
        Self::from_values(geometry, vec![0.0; geometry.num_sites()]).unwrap()
    }

    pub fn at_origin(&self) -> f64 {
        self.values[self.geometry.origin()]
    }
}

/// Stream used for the potential; other consumers use different streams.
const POTENTIAL_STREAM_TAG: u64 = 0x5054_4e4c; // "PTNL"

/// Uniform in `[0, 1)` from the site's own word of a ChaCha stream.
///
/// The generator is keyed by `master_seed` and the stream by
/// `realization_index`; the word position is the site index, so the value at
/// a site does not depend on the order in which sites are visited.
pub(crate) fn site_uniform(rng: &mut ChaCha8Rng, site: usize) -> f64 {
    rng.set_word_pos(2 * site as u128);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn potential_rng(master_seed: u64, realization_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ POTENTIAL_STREAM_TAG);
    rng.set_stream(realization_index);
    rng
}

/// Draws an i.i.d. potential from `density` on every site of `geometry`.
pub fn sample_potential(
    density: &DensityModel,
    geometry: BoxGeometry,
    master_seed: u64,
    realization_index: u64,
) -> Result<PotentialField> {
    density.validate()?;
    let mut rng = potential_rng(master_seed, realization_index);
    let values = (0..geometry.num_sites())
        .map(|site| density.quantile(site_uniform(&mut rng, site)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PotentialField {
        geometry,
        values,
        origin_shift_t: 0.0,
        seed: master_seed,
        realization_index,
    })
}

/// Adds `t` to the potential at the origin (`V(0) -> V(0) + t`).
pub fn apply_origin_shift(field: &PotentialField, t: f64) -> Result<PotentialField> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "origin shift must be finite and >= 0, got {t}"
        )));
    }
    if field.origin_shift_t != 0.0 {
        return Err(Error::Domain(format!(
            "field already carries an origin shift {}",
            field.origin_shift_t
        )));
    }
    let mut out = field.clone();
    out.values[field.geometry.origin()] += t;
    out.origin_shift_t = t;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianStorage {
    /// `d = 1`: main diagonal and the (symmetric) off-diagonal.
    Tridiagonal {
        diag: Vec<f64>,
        off: Vec<f64>,
    },
    Dense(Matrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    pub geometry: BoxGeometry,
    pub storage: HamiltonianStorage,
}

/// Assembles `H = -Δ + V` with open boundaries.
pub fn build_hamiltonian(field: &PotentialField) -> HamiltonianMatrix {
    let geometry = field.geometry;
    let d = geometry.dimension() as f64;
    let n = geometry.num_sites();
    let storage = if geometry.dimension() == 1 {
        HamiltonianStorage::Tridiagonal {
            diag: field.values.iter().map(|v| 2.0 * d + v).collect(),
            off: vec![-1.0; n.saturating_sub(1)],
        }
    } else {
        let mut m = Matrix::zeros(n);
        for (i, v) in field.values.iter().enumerate() {
            m[(i, i)] = 2.0 * d + v;
        }
        for (i, j) in geometry.neighbor_pairs() {
            m[(i, j)] = -1.0;
            m[(j, i)] = -1.0;
        }
        HamiltonianStorage::Dense(m)
    };
    HamiltonianMatrix { geometry, storage }
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        match &self.storage {
            HamiltonianStorage::Tridiagonal { diag, .. } => diag.len(),
            HamiltonianStorage::Dense(m) => m.dim(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            HamiltonianStorage::Tridiagonal { diag, off } => {
                if i == j {
                    diag[i]
                } else if i.abs_diff(j) == 1 {
                    off[i.min(j)]
                } else {
                    0.0
                }
            }
            HamiltonianStorage::Dense(m) => m[(i, j)],
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match &self.storage {
            HamiltonianStorage::Tridiagonal { diag, .. } => diag.clone(),
            HamiltonianStorage::Dense(m) => (0..m.dim()).map(|i| m[(i, i)]).collect(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match &self.storage {
            HamiltonianStorage::Tridiagonal { .. } => {
                Matrix::from_fn(self.dim(), |i, j| self.get(i, j))
            }
            HamiltonianStorage::Dense(m) => m.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            HamiltonianStorage::Tridiagonal { diag, off } => {
                diag.iter().chain(off).fold(0.0, |m: f64, v| m.max(v.abs()))
            }
            HamiltonianStorage::Dense(m) => m.max_abs(),
        }
    }

    /// `y = H x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match &self.storage {
            HamiltonianStorage::Tridiagonal { diag, off } => {
                let n = diag.len();
                (0..n)
                    .map(|i| {
                        let mut acc = diag[i] * x[i];
                        if i > 0 {
                            acc += off[i - 1] * x[i - 1];
                        }
                        if i + 1 < n {
                            acc += off[i] * x[i + 1];
                        }
                        acc
                    })
                    .collect()
            }
            HamiltonianStorage::Dense(m) => m.matvec(x),
        }
    }

    /// Copy with `t` added to the diagonal entry of `site`.
    pub fn with_diagonal_shift(&self, site: usize, t: f64) -> Self {
        let mut out = self.clone();
        match &mut out.storage {
            HamiltonianStorage::Tridiagonal { diag, .. } => diag[site] += t,
            HamiltonianStorage::Dense(m) => m[(site, site)] += t,
        }
        out
    }

    /// Tridiagonal parts of a one-dimensional operator.
    pub fn tridiagonal(&self) -> Option<(&[f64], &[f64])> {
        match &self.storage {
            HamiltonianStorage::Tridiagonal { diag, off } => Some((diag, off)),
            HamiltonianStorage::Dense(_) => None,
        }
    }

    /// Restriction of a one-dimensional operator to the integer interval
    /// `[lo, hi]` (coordinates). Used for the half-line operators `H_±`.
    pub fn restrict_interval(&self, lo: i64, hi: i64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (diag, off) = self.tridiagonal().ok_or_else(|| {
            Error::Domain("interval restriction requires a one-dimensional operator".into())
        })?;
        let g = &self.geometry;
        let (a, b) = match (g.axis_site(lo), g.axis_site(hi)) {
            (Some(a), Some(b)) if a <= b => (a, b),
            _ => {
                return Err(Error::Range(format!(
                    "interval [{lo}, {hi}] is not inside the box"
                )))
            }
        };
        Ok((diag[a..=b].to_vec(), off[a..b].to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip_2d() {
        let g = BoxGeometry::new(2, 3, 1).unwrap();
        for i in 0..g.num_sites() {
            assert_eq!(g.index(&g.coords(i)), Some(i));
        }
        assert_eq!(g.index(&[-3, -3]), Some(0));
        assert_eq!(g.index(&[-3, -2]), Some(1));
        assert_eq!(g.origin(), 24);
        assert_eq!(g.index(&[4, 0]), None);
    }

    #[test]
    fn block_larger_than_box_rejected() {
        assert!(matches!(BoxGeometry::line(3, 4), Err(Error::Config(_))));
        assert!(BoxGeometry::new(3, 3, 1).is_err());
    }

    #[test]
    fn hamiltonian_1d_small() {
        let g = BoxGeometry::line(1, 0).unwrap();
        let h = build_hamiltonian(&PotentialField::zero(g)).to_dense();
        let expected =
            Matrix::from_row_major(3, vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        assert_eq!(h, expected);
    }

    #[test]
    fn hamiltonian_2d_small() {
        let g = BoxGeometry::new(2, 1, 0).unwrap();
        let h = build_hamiltonian(&PotentialField::zero(g)).to_dense();
        assert_eq!(h.dim(), 9);
        let mut bonds = 0;
        for i in 0..9 {
            assert_eq!(h[(i, i)], 4.0);
            for j in 0..9 {
                assert_eq!(h[(i, j)], h[(j, i)]);
                if i < j && h[(i, j)] != 0.0 {
                    assert_eq!(h[(i, j)], -1.0);
                    bonds += 1;
                }
            }
        }
        assert_eq!(bonds, 12);
    }

    #[test]
    fn origin_shift() {
        let g = BoxGeometry::line(2, 0).unwrap();
        let f = PotentialField::from_values(g, vec![0.1, 0.2, 0.7, 0.4, 0.5]).unwrap();
        let same = apply_origin_shift(&f, 0.0).unwrap();
        assert_eq!(same.values, f.values);
        let s = apply_origin_shift(&f, 50.0).unwrap();
        assert_eq!(s.values, vec![0.1, 0.2, 50.7, 0.4, 0.5]);
        assert_eq!(s.origin_shift_t, 50.0);
        assert!(matches!(
            apply_origin_shift(&f, -1.0),
            Err(Error::Domain(_))
        ));
        assert!(apply_origin_shift(&s, 1.0).is_err());
    }

    #[test]
    fn restrict_interval_picks_half_lines() {
        let g = BoxGeometry::line(3, 0).unwrap();
        let f = PotentialField::from_values(g, (0..7).map(|v| v as f64).collect()).unwrap();
        let h = build_hamiltonian(&f);
        let (d, o) = h.restrict_interval(1, 3).unwrap();
        assert_eq!(d, vec![6.0, 7.0, 8.0]);
        assert_eq!(o, vec![-1.0, -1.0]);
        assert!(h.restrict_interval(2, 4).is_err());
    }
}
