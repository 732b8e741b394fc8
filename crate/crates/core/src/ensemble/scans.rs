use super::stats::{covariance, median, summarize, EnsembleStats};
use super::{bootstrap_seed, run_estimators, sample_estimators, EnsembleConfig, Estimator};
use crate::entropy::Side;
use crate::error::{Error, Result};
use crate::spectral::{fit_exponential_decay, least_squares_line, DecayFit, LineFit};

/// Site cap for two-dimensional runs, `(2N+1)² ≤ 4·10⁴`.
pub const AREA_LAW_MAX_SITES: usize = 40_000;

/// Half-line entropy `S₋ = Tr h(P_{[0, N]})`, the cut just left of the origin.
pub(crate) const S_MINUS: Estimator = Estimator::CutEntropy {
    position: 0,
    side: Side::Right,
};
/// Reflected partner `S₊ = Tr h(P_{[-N, 0]})`.
pub(crate) const S_PLUS: Estimator = Estimator::CutEntropy {
    position: 1,
    side: Side::Left,
};

fn check_half_widths(config: &EnsembleConfig, m_list: &[usize]) -> Result<()> {
    if m_list.is_empty() {
        return Err(Error::Config("m_list is empty".into()));
    }
    let n = config.geometry.half_width();
    if let Some(&m) = m_list.iter().find(|&&m| 2 * m > n) {
        return Err(Error::Config(format!(
            "m_list entry {m} exceeds half_width/2 = {}",
            n / 2
        )));
    }
    Ok(())
}

fn require_line(config: &EnsembleConfig) -> Result<()> {
    if config.geometry.dimension() != 1 {
        return Err(Error::Config("this scan runs in dimension 1 only".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceRow {
    pub m: usize,
    /// Block side `2M + 1`.
    pub l: usize,
    pub stats: EnsembleStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceScan {
    pub rows: Vec<VarianceRow>,
    pub s_minus: EnsembleStats,
    pub s_plus: EnsembleStats,
    pub failures: usize,
}

impl VarianceScan {
    pub fn two_var_s_minus(&self) -> f64 {
        2.0 * self.s_minus.variance
    }

    pub fn two_var_s_minus_ci(&self) -> (f64, f64) {
        let (lo, hi) = self.s_minus.variance_ci;
        (2.0 * lo, 2.0 * hi)
    }

    /// Smallest `M` whose variance interval overlaps that of the largest `M`.
    pub fn plateau_onset(&self) -> Option<usize> {
        let last = self.rows.iter().max_by_key(|r| r.m)?;
        self.rows
            .iter()
            .filter(|r| r.stats.variance_ci_overlaps(&last.stats))
            .map(|r| r.m)
            .min()
    }
}

/// Block-entropy statistics for each `M`, plus the half-line entropies
/// `S₋`, `S₊` from the same realizations.
pub fn variance_scan(base: &EnsembleConfig, m_list: &[usize]) -> Result<VarianceScan> {
    require_line(base)?;
    check_half_widths(base, m_list)?;
    let mut estimators: Vec<Estimator> = m_list
        .iter()
        .map(|&m| Estimator::BlockEntropy { m })
        .collect();
    estimators.push(S_MINUS);
    estimators.push(S_PLUS);
    let run = sample_estimators(base, &estimators)?;
    let mut stats = run
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| summarize(s, bootstrap_seed(base, k)))
        .collect::<Result<Vec<_>>>()?;
    let s_plus = stats.pop().unwrap();
    let s_minus = stats.pop().unwrap();
    let rows = m_list
        .iter()
        .zip(stats)
        .map(|(&m, stats)| VarianceRow {
            m,
            l: 2 * m + 1,
            stats,
        })
        .collect();
    Ok(VarianceScan {
        rows,
        s_minus,
        s_plus,
        failures: run.failures,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftDecayScan {
    /// Unshifted `S₋` from the same seeds.
    pub baseline: EnsembleStats,
    pub t_list: Vec<f64>,
    pub rows: Vec<EnsembleStats>,
    /// `ε(t) = E{S₋ᵗ} / E{S₋}`.
    pub eps: Vec<f64>,
    /// Regression of `ln E{S₋ᵗ}` on `ln(t - E)`.
    pub fit: LineFit,
}

/// `S₋` under `V(0) → V(0) + t` for each `t`. All runs share seeds, so the
/// curves are compared realization by realization.
pub fn shift_decay_scan(base: &EnsembleConfig, t_list: &[f64]) -> Result<ShiftDecayScan> {
    require_line(base)?;
    if t_list.is_empty() {
        return Err(Error::Config("t_list is empty".into()));
    }
    let e = base.fermi_energy;
    if let Some(&t) = t_list.iter().find(|&&t| !(t > e) || !t.is_finite()) {
        return Err(Error::Config(format!(
            "t_list entry {t} must exceed fermi_energy {e}"
        )));
    }
    let baseline = run_estimators(&base.with_shift(0.0), &[S_MINUS])?.remove(0);
    let rows = t_list
        .iter()
        .map(|&t| Ok(run_estimators(&base.with_shift(t), &[S_MINUS])?.remove(0)))
        .collect::<Result<Vec<_>>>()?;
    let eps = rows
        .iter()
        .map(|r| {
            if baseline.mean > 0.0 {
                r.mean / baseline.mean
            } else {
                0.0
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = t_list
        .iter()
        .zip(&rows)
        .filter(|(_, r)| r.mean > 0.0)
        .map(|(&t, r)| ((t - e).ln(), r.mean.ln()))
        .collect();
    let fit = least_squares_line(&pts);
    Ok(ShiftDecayScan {
        baseline,
        t_list: t_list.to_vec(),
        rows,
        eps,
        fit,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingRow {
    pub m: usize,
    pub covariance: f64,
    pub covariance_stderr: f64,
    /// Mean of the right-cut entropy at `+M`.
    pub mean_right: f64,
    /// Mean of the left-cut entropy at `-M`.
    pub mean_left: f64,
    pub product_of_means: f64,
}

/// Covariance between the half-line entropies cut at `+M` and at `-M`.
pub fn mixing_covariance(base: &EnsembleConfig, m_list: &[usize]) -> Result<Vec<MixingRow>> {
    mixing_covariance_of(base, m_list, |m| {
        let m = m as i64;
        (
            Estimator::CutEntropy {
                position: m,
                side: Side::Right,
            },
            Estimator::CutEntropy {
                position: -m,
                side: Side::Left,
            },
        )
    })
}

/// As [`mixing_covariance`] with caller-chosen estimator pairs per `M`.
pub fn mixing_covariance_of(
    base: &EnsembleConfig,
    m_list: &[usize],
    pair: impl Fn(usize) -> (Estimator, Estimator),
) -> Result<Vec<MixingRow>> {
    check_half_widths(base, m_list)?;
    let estimators: Vec<Estimator> = m_list
        .iter()
        .flat_map(|&m| {
            let (a, b) = pair(m);
            [a, b]
        })
        .collect();
    let run = sample_estimators(base, &estimators)?;
    m_list
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let right = &run.samples[2 * k];
            let left = &run.samples[2 * k + 1];
            let (cov, se) = covariance(right, left)?;
            let n = right.len() as f64;
            let mean_right = right.iter().sum::<f64>() / n;
            let mean_left = left.iter().sum::<f64>() / n;
            Ok(MixingRow {
                m,
                covariance: cov,
                covariance_stderr: se,
                mean_right,
                mean_left,
                product_of_means: mean_right * mean_left,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplittingRow {
    pub m: usize,
    pub median_abs: f64,
    pub stats: EnsembleStats,
}

/// Statistics of `S_[-M,M] - S₋(T^{-M}) - S₊(T^{M})` per `M`.
pub fn splitting_scan(base: &EnsembleConfig, m_list: &[usize]) -> Result<Vec<SplittingRow>> {
    require_line(base)?;
    check_half_widths(base, m_list)?;
    let estimators: Vec<Estimator> = m_list
        .iter()
        .map(|&m| Estimator::SplittingResidual { m })
        .collect();
    let run = sample_estimators(base, &estimators)?;
    m_list
        .iter()
        .zip(&run.samples)
        .enumerate()
        .map(|(k, (&m, s))| {
            let abs: Vec<f64> = s.iter().map(|v| v.abs()).collect();
            Ok(SplittingRow {
                m,
                median_abs: median(&abs),
                stats: summarize(s, bootstrap_seed(base, k))?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AreaLawRow {
    pub m: usize,
    pub l: usize,
    /// Statistics of `S / L^{d-1}`.
    pub stats: EnsembleStats,
}

/// Block entropy per unit boundary, `S_Λ / L`, in `d = 2`.
pub fn area_law_scan_2d(base: &EnsembleConfig, m_list: &[usize]) -> Result<Vec<AreaLawRow>> {
    if base.geometry.dimension() != 2 {
        return Err(Error::Config("area-law scan needs dimension 2".into()));
    }
    if base.geometry.num_sites() > AREA_LAW_MAX_SITES {
        return Err(Error::Config(format!(
            "half_width {} gives {} sites, above the cap of {AREA_LAW_MAX_SITES}",
            base.geometry.half_width(),
            base.geometry.num_sites()
        )));
    }
    if m_list.is_empty() {
        return Err(Error::Config("m_list is empty".into()));
    }
    if let Some(&m) = m_list.iter().find(|&&m| m > base.geometry.half_width()) {
        return Err(Error::Config(format!(
            "m_list entry {m} exceeds half_width"
        )));
    }
    let estimators: Vec<Estimator> = m_list
        .iter()
        .map(|&m| Estimator::BlockEntropy { m })
        .collect();
    let run = sample_estimators(base, &estimators)?;
    m_list
        .iter()
        .zip(&run.samples)
        .enumerate()
        .map(|(k, (&m, s))| {
            let l = 2 * m + 1;
            let per_area: Vec<f64> = s.iter().map(|v| v / l as f64).collect();
            Ok(AreaLawRow {
                m,
                l,
                stats: summarize(&per_area, bootstrap_seed(base, k))?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionDecayScan {
    /// `(r, stats of |P(0, r)|)` for `r = 1..=r_max`.
    pub rows: Vec<(usize, EnsembleStats)>,
    /// Exponential fit to the mean profile.
    pub fit: DecayFit,
}

pub fn projection_decay_scan(base: &EnsembleConfig, r_max: usize) -> Result<ProjectionDecayScan> {
    if r_max < 3 || r_max > base.geometry.half_width() {
        return Err(Error::Config(format!(
            "r_max must lie in [3, half_width], got {r_max}"
        )));
    }
    let estimators: Vec<Estimator> = (1..=r_max as i64)
        .map(|r| Estimator::ProjectionEntryAbs { x: 0, y: r })
        .collect();
    let stats = run_estimators(base, &estimators)?;
    let rows: Vec<(usize, EnsembleStats)> = (1..=r_max).zip(stats).collect();
    let pts: Vec<(f64, f64)> = rows.iter().map(|(r, s)| (*r as f64, s.mean)).collect();
    let fit = fit_exponential_decay(&pts)?;
    Ok(ProjectionDecayScan { rows, fit })
}
