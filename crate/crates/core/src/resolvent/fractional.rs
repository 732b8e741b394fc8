//! Monte Carlo estimates of `E{|Gᵗ(x, y; z)|^s}`.

use super::SpectralParameter;
use crate::ensemble::{run_estimators, EnsembleConfig, EnsembleStats, Estimator};
use crate::error::{Error, Result};
use crate::spectral::{fit_exponential_decay, least_squares_line, DecayFit, LineFit};

fn check_exponent(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "fractional exponent s must lie in (0, 1), got {s}"
        )))
    }
}

/// One estimate per `(x, y)` pair, with the origin shifted by `t`.
pub fn fractional_moment_scan(
    config: &EnsembleConfig,
    s: f64,
    z: SpectralParameter,
    pairs: &[(i64, i64)],
    t: f64,
) -> Result<Vec<EnsembleStats>> {
    check_exponent(s)?;
    if pairs.is_empty() {
        return Err(Error::Config("no (x, y) pairs given".into()));
    }
    let estimators: Vec<Estimator> = pairs
        .iter()
        .map(|&(x, y)| Estimator::FractionalMoment { s, z, x, y })
        .collect();
    run_estimators(&config.with_shift(t), &estimators)
}

/// Exponential fit of the estimates against `|x - y|`.
pub fn fractional_moment_decay(
    stats: &[EnsembleStats],
    pairs: &[(i64, i64)],
    s: f64,
) -> Result<DecayFit> {
    if stats.len() != pairs.len() {
        return Err(Error::Config(format!(
            "{} estimates for {} pairs",
            stats.len(),
            pairs.len()
        )));
    }
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .zip(stats)
        .map(|(&(x, y), st)| ((x - y).abs() as f64, st.mean))
        .collect();
    let mut fit = fit_exponential_decay(&pts)?;
    fit.exponent_s = Some(s);
    Ok(fit)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractionalMomentShiftScan {
    pub t_list: Vec<f64>,
    /// `E{|Gᵗ(0, 0; z)|^s}` per `t`.
    pub rows: Vec<EnsembleStats>,
    /// Regression of the log estimate on `ln(t - E)`.
    pub fit: LineFit,
}

/// `E{|Gᵗ(0, 0; z)|^s}` across shifts `t > E`.
pub fn fractional_moment_shift_scan(
    config: &EnsembleConfig,
    s: f64,
    z: SpectralParameter,
    t_list: &[f64],
) -> Result<FractionalMomentShiftScan> {
    check_exponent(s)?;
    let e = config.fermi_energy;
    if t_list.len() < 2 {
        return Err(Error::Config(
            "shift scan needs at least two t values".into(),
        ));
    }
    if let Some(&t) = t_list.iter().find(|&&t| !(t > e)) {
        return Err(Error::Config(format!(
            "t_list entry {t} must exceed fermi_energy {e}"
        )));
    }
    let rows = t_list
        .iter()
        .map(|&t| Ok(fractional_moment_scan(config, s, z, &[(0, 0)], t)?.remove(0)))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = t_list
        .iter()
        .zip(&rows)
        .map(|(&t, r)| ((t - e).ln(), r.mean.ln()))
        .collect();
    Ok(FractionalMomentShiftScan {
        t_list: t_list.to_vec(),
        rows,
        fit: least_squares_line(&pts),
    })
}
