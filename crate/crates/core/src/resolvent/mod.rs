//! Lattice Green's functions `G(x, y; z) = (H - z)⁻¹(x, y)` and the
//! identities that relate the shifted operator `Hᵗ` to its half-line pieces.

mod fractional;
pub mod solve;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{HamiltonianMatrix, HamiltonianStorage};

pub use fractional::{
    fractional_moment_decay, fractional_moment_scan, fractional_moment_shift_scan,
    FractionalMomentShiftScan,
};

/// Below this, `|1 + t G(0,0)|` is treated as a singular update.
pub const RANK_ONE_SINGULARITY: f64 = 1e-12;
const RESCALE_EVERY: usize = 32;

/// `z = λ + iη` with `η ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParameter {
    pub lambda: f64,
    pub eta: f64,
}

impl SpectralParameter {
    pub fn new(lambda: f64, eta: f64) -> Result<Self> {
        if eta == 0.0 || !eta.is_finite() || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "spectral parameter needs finite λ and η ≠ 0, got λ = {lambda}, η = {eta}"
            )));
        }
        Ok(Self { lambda, eta })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.lambda, self.eta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreensColumn {
    pub z: SpectralParameter,
    pub source: usize,
    pub entries: Vec<Complex64>,
}

impl GreensColumn {
    /// `max |(H - z) g - e_y|`.
    pub fn residual(&self, h: &HamiltonianMatrix) -> f64 {
        let z = self.z.z();
        let re: Vec<f64> = self.entries.iter().map(|c| c.re).collect();
        let im: Vec<f64> = self.entries.iter().map(|c| c.im).collect();
        let hre = h.matvec(&re);
        let him = h.matvec(&im);
        (0..self.entries.len())
            .map(|i| {
                let hg = Complex64::new(hre[i], him[i]) - z * self.entries[i];
                let target = if i == self.source { 1.0 } else { 0.0 };
                (hg - target).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn solve_tridiagonal_column(
    diag: &[f64],
    off: &[f64],
    z: Complex64,
    source: usize,
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if source >= n {
        return Err(Error::Range(format!("source {source} outside {n} sites")));
    }
    let d: Vec<Complex64> = diag.iter().map(|&v| Complex64::new(v, 0.0) - z).collect();
    let o: Vec<Complex64> = off.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    rhs[source] = Complex64::new(1.0, 0.0);
    solve::solve_tridiagonal(&o, &d, &o, &rhs)
}

/// Column `G(·, y; z)` from one complex solve.
pub fn greens_column(
    h: &HamiltonianMatrix,
    z: SpectralParameter,
    source: usize,
) -> Result<GreensColumn> {
    let n = h.dim();
    if source >= n {
        return Err(Error::Range(format!("source {source} outside {n} sites")));
    }
    let zc = z.z();
    let entries = match &h.storage {
        HamiltonianStorage::Tridiagonal { diag, off } => {
            solve_tridiagonal_column(diag, off, zc, source)?
        }
        HamiltonianStorage::Dense(m) => {
            let mut a: Vec<Complex64> = m
                .as_slice()
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            for i in 0..n {
                a[i * n + i] -= zc;
            }
            let mut rhs = vec![Complex64::new(0.0, 0.0); n];
            rhs[source] = Complex64::new(1.0, 0.0);
            solve::solve_dense(a, n, &rhs)?
        }
    };
    Ok(GreensColumn { z, source, entries })
}

/// Single entry `G(x, y; z)`.
pub fn greens_entry(
    h: &HamiltonianMatrix,
    z: SpectralParameter,
    x: usize,
    y: usize,
) -> Result<Complex64> {
    let col = greens_column(h, z, y)?;
    col.entries
        .get(x)
        .copied()
        .ok_or_else(|| Error::Range(format!("site {x} outside the box")))
}

/// `Gᵗ(x, y)` computed two ways: by solving with `H + t e₀e₀ᵀ` directly and
/// by the rank-one update `G(x,y) - t G(x,0) G(0,y) / (1 + t G(0,0))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankOneCheck {
    pub direct: Complex64,
    pub updated: Complex64,
}

impl RankOneCheck {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.direct.norm().max(self.updated.norm());
        if scale == 0.0 {
            0.0
        } else {
            (self.direct - self.updated).norm() / scale
        }
    }
}

pub fn rank_one_shift_identity_check(
    h: &HamiltonianMatrix,
    t: f64,
    z: SpectralParameter,
    x: usize,
    y: usize,
) -> Result<RankOneCheck> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("shift must be >= 0, got {t}")));
    }
    let origin = h.geometry.origin();
    let col_y = greens_column(h, z, y)?;
    let col_0 = greens_column(h, z, origin)?;
    let g_xy = col_y.entries[x];
    let g_x0 = col_0.entries[x];
    // G(0, y) = G(y, 0) for symmetric H
    let g_0y = col_0.entries[y];
    let g_00 = col_0.entries[origin];
    let denom = 1.0 + t * g_00;
    if denom.norm() < RANK_ONE_SINGULARITY {
        return Err(Error::NearSingularUpdate(denom.norm()));
    }
    let updated = g_xy - t * g_x0 * g_0y / denom;
    let shifted = h.with_diagonal_shift(origin, t);
    let direct = greens_column(&shifted, z, y)?.entries[x];
    Ok(RankOneCheck { direct, updated })
}

/// Relative residuals of the half-line factorizations
/// `Gᵗ(x,y) = Gᵗ(0,y) G₊(x,1)` and `Gᵗ(x,y) = Gᵗ(x,0) G₋(-1,y)` for
/// `x ≥ 1`, `y ≤ -1`, where `G₊`/`G₋` are the resolvents of `H` restricted
/// to `[1, N]` and `[-N, -1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecouplingResiduals {
    pub g_xy: Complex64,
    pub via_plus: f64,
    pub via_minus: f64,
}

pub fn decoupled_resolvent_check(
    h: &HamiltonianMatrix,
    z: SpectralParameter,
    x: i64,
    y: i64,
) -> Result<DecouplingResiduals> {
    let g = h.geometry;
    if g.dimension() != 1 {
        return Err(Error::Domain(
            "half-line decoupling is one-dimensional".into(),
        ));
    }
    let n = g.half_width() as i64;
    if x < 1 || y > -1 || x > n / 2 || y < -(n / 2) {
        return Err(Error::Range(format!(
            "need 1 <= x <= N/2 and -N/2 <= y <= -1, got x = {x}, y = {y}, N = {n}"
        )));
    }
    let zc = z.z();
    let site = |c: i64| g.axis_site(c).expect("checked range");
    let col_y = greens_column(h, z, site(y))?;
    let col_0 = greens_column(h, z, site(0))?;
    let g_xy = col_y.entries[site(x)];
    let g_0y = col_y.entries[site(0)];
    let g_x0 = col_0.entries[site(x)];

    let (dp, op) = h.restrict_interval(1, n)?;
    let plus = solve_tridiagonal_column(&dp, &op, zc, 0)?;
    let g_plus_x1 = plus[(x - 1) as usize];

    let (dm, om) = h.restrict_interval(-n, -1)?;
    let minus = solve_tridiagonal_column(&dm, &om, zc, (n - 1) as usize)?;
    let g_minus_1y = minus[(y + n) as usize];

    let scale = g_xy.norm();
    let rel = |v: Complex64| {
        let diff = (g_xy - v).norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    };
    Ok(DecouplingResiduals {
        g_xy,
        via_plus: rel(g_0y * g_plus_x1),
        via_minus: rel(g_x0 * g_minus_1y),
    })
}

/// Solutions of `Hψ = zψ` normalized to `ψ(0) = 1`: `ψ₊` on `[0, N]`
/// vanishing just past `N`, `ψ₋` on `[-N, 0]` vanishing just past `-N`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylSolutions {
    pub z: SpectralParameter,
    /// `psi_plus[x] = ψ₊(x)`, `x = 0..=N`.
    pub psi_plus: Vec<Complex64>,
    /// `psi_minus[k] = ψ₋(-k)`, `k = 0..=N`.
    pub psi_minus: Vec<Complex64>,
}

impl WeylSolutions {
    pub fn plus(&self, x: i64) -> Complex64 {
        self.psi_plus[x as usize]
    }

    pub fn minus(&self, y: i64) -> Complex64 {
        self.psi_minus[(-y) as usize]
    }

    /// Worst relative residual of `(Hψ)(x) = zψ(x)` at interior points of
    /// both half-lines, skipping points where `ψ` has underflowed.
    pub fn recurrence_residual(&self, h: &HamiltonianMatrix) -> f64 {
        let g = h.geometry;
        let n = g.half_width() as i64;
        let z = self.z.z();
        let mut worst = 0.0f64;
        let mut check = |x: i64, prev: Complex64, cur: Complex64, next: Complex64| {
            let s = g.axis_site(x).unwrap();
            let d = h.get(s, s);
            let lo = h.get(s, s - 1);
            let hi = h.get(s, s + 1);
            let lhs = (d - z) * cur + lo * prev + hi * next;
            let scale = ((d - z) * cur).norm() + prev.norm() + next.norm();
            if scale > 1e-280 {
                worst = worst.max(lhs.norm() / scale);
            }
        };
        for x in 1..n {
            check(x, self.plus(x - 1), self.plus(x), self.plus(x + 1));
        }
        for y in (-n + 1)..0 {
            check(y, self.minus(y - 1), self.minus(y), self.minus(y + 1));
        }
        worst
    }
}

/// Runs a two-term recurrence from a boundary, rescaling the running pair
/// every `every` steps. Returns values normalized to the last entry.
fn recur(
    steps: usize,
    every: usize,
    mut step: impl FnMut(usize, Complex64, Complex64) -> Complex64,
) -> Option<Vec<Complex64>> {
    // raw[k] * exp(log_scale[k]) is proportional to the true solution
    let mut raw = Vec::with_capacity(steps + 1);
    let mut log_scale = Vec::with_capacity(steps + 1);
    let mut scale = 0.0f64;
    let mut cur = Complex64::new(1.0, 0.0);
    let mut prev = Complex64::new(0.0, 0.0);
    raw.push(cur);
    log_scale.push(scale);
    for k in 0..steps {
        let next = step(k, cur, prev);
        prev = cur;
        cur = next;
        if (k + 1) % every == 0 {
            let m = cur.norm().max(prev.norm());
            if m > 0.0 && m.is_finite() {
                cur /= m;
                prev /= m;
                scale += m.ln();
            }
        }
        if !cur.re.is_finite() || !cur.im.is_finite() {
            return None;
        }
        raw.push(cur);
        log_scale.push(scale);
    }
    let anchor = *raw.last().unwrap();
    let anchor_scale = *log_scale.last().unwrap();
    if anchor.norm() == 0.0 {
        return None;
    }
    Some(
        raw.iter()
            .zip(&log_scale)
            .map(|(r, s)| r / anchor * (s - anchor_scale).exp())
            .collect(),
    )
}

/// Weyl solutions by transfer-matrix recursion inward from each edge of the
/// box, with periodic rescaling.
pub fn weyl_solutions(h: &HamiltonianMatrix, z: SpectralParameter) -> Result<WeylSolutions> {
    let (diag, off) = h
        .tridiagonal()
        .ok_or_else(|| Error::Domain("Weyl solutions need a one-dimensional operator".into()))?;
    let n = h.geometry.half_width();
    let zc = z.z();
    let last = 2 * n; // site index of x = N

    let run = |every: usize| -> Option<(Vec<Complex64>, Vec<Complex64>)> {
        // ψ₊ from x = N down to 0; k-th step produces ψ(N - k - 1)
        let plus = recur(n, every, |k, cur, next| {
            let s = last - k;
            let after = if s < last {
                off[s] * next
            } else {
                Complex64::new(0.0, 0.0)
            };
            ((zc - diag[s]) * cur - after) / off[s - 1]
        })?;
        // ψ₋ from x = -N up to 0
        let minus = recur(n, every, |k, cur, before| {
            let s = k;
            let prior = if s > 0 {
                off[s - 1] * before
            } else {
                Complex64::new(0.0, 0.0)
            };
            ((zc - diag[s]) * cur - prior) / off[s]
        })?;
        // `recur` returns entries ordered from the edge inward, scaled to the
        // origin; index by distance from the origin instead
        Some((
            plus.into_iter().rev().collect(),
            minus.into_iter().rev().collect(),
        ))
    };

    let (psi_plus, psi_minus) = run(RESCALE_EVERY)
        .or_else(|| run(1))
        .ok_or_else(|| Error::Numerical("transfer-matrix recursion overflowed".into()))?;
    Ok(WeylSolutions {
        z,
        psi_plus,
        psi_minus,
    })
}

/// Relative gap between `G(x,y)` and `G(0,0) ψ₊(x) ψ₋(y)` for `x ≥ 0 ≥ y`.
pub fn weyl_factorization_residual(
    h: &HamiltonianMatrix,
    weyl: &WeylSolutions,
    x: i64,
    y: i64,
) -> Result<f64> {
    if x < 0 || y > 0 {
        return Err(Error::Range(format!(
            "need x >= 0 >= y, got x = {x}, y = {y}"
        )));
    }
    let g = h.geometry;
    let sx = g
        .axis_site(x)
        .ok_or_else(|| Error::Range(format!("x = {x} outside the box")))?;
    let sy = g
        .axis_site(y)
        .ok_or_else(|| Error::Range(format!("y = {y} outside the box")))?;
    let col_y = greens_column(h, weyl.z, sy)?;
    let g00 = greens_entry(h, weyl.z, g.origin(), g.origin())?;
    let g_xy = col_y.entries[sx];
    let predicted = g00 * weyl.plus(x) * weyl.minus(y);
    Ok((g_xy - predicted).norm() / g_xy.norm().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, BoxGeometry, PotentialField};

    #[test]
    fn eta_must_be_nonzero() {
        assert!(SpectralParameter::new(0.5, 0.0).is_err());
        assert!(SpectralParameter::new(0.5, -0.1).is_ok());
    }

    #[test]
    fn diagonal_operator_green() {
        let g = BoxGeometry::new(2, 1, 0).unwrap();
        let v: Vec<f64> = (0..9).map(|i| i as f64 * 0.5).collect();
        let f = PotentialField::from_values(g, v.clone()).unwrap();
        let mut h = build_hamiltonian(&f);
        if let HamiltonianStorage::Dense(m) = &mut h.storage {
            for i in 0..9 {
                for j in 0..9 {
                    if i != j {
                        m[(i, j)] = 0.0;
                    }
                }
            }
        }
        let z = SpectralParameter::new(0.3, 0.2).unwrap();
        let col = greens_column(&h, z, 4).unwrap();
        for (x, gx) in col.entries.iter().enumerate() {
            let want = if x == 4 {
                1.0 / (v[4] + 4.0 - z.z())
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((gx - want).norm() < 1e-15);
        }
    }

    #[test]
    fn one_site() {
        let g = BoxGeometry::line(1, 0).unwrap();
        let h = build_hamiltonian(&PotentialField::zero(g));
        let (d, o) = h.restrict_interval(0, 0).unwrap();
        let z = Complex64::new(1.0, 0.5);
        let col = solve_tridiagonal_column(&d, &o, z, 0).unwrap();
        assert!((col[0] - 1.0 / (2.0 - z)).norm() < 1e-15);
    }

    #[test]
    fn rank_one_zero_shift() {
        let g = BoxGeometry::line(6, 0).unwrap();
        let h = build_hamiltonian(&PotentialField::zero(g));
        let z = SpectralParameter::new(1.0, 0.1).unwrap();
        let c = rank_one_shift_identity_check(&h, 0.0, z, 3, 9).unwrap();
        let direct = greens_entry(&h, z, 3, 9).unwrap();
        assert_eq!(c.updated, direct);
        assert!((c.direct - direct).norm() < 1e-15);
    }
}
