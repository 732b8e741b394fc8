//! Single-site potential densities and the Hammersley–Chapman–Robbins
//! machinery built on them.
//!
//! For a density `f` supported on the half-line the shift functional is
//!
//! ```text
//! J(t) = ∫ f(v - t)² / f(v) dv,    F(t) = J(t) - 1 ≥ 0,
//! ```
//!
//! and for any `φ` with `E|φ(ξ)| < ∞`
//!
//! ```text
//! Var φ(ξ) ≥ (E{φ(ξ) - φ(ξ + t)})² / F(t).
//! ```
//!
//! Applied to `φ = E{S₋ | V(0)}` this bounds the variance of the half-line
//! entropy from below.

pub mod quadrature;
mod tabulated;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::{erf_inv, erfc};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub use tabulated::TabulatedDensity;

const QUAD_REL_TOL: f64 = 1e-12;
const QUAD_TAIL_TOL: f64 = 1e-12;
/// Slack allowed below zero before `F(t)` is clamped.
const F_NEGATIVE_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum DensityKind {
    /// `f(v) = a e^{-a v}`.
    Exponential { rate: f64 },
    /// `f(v) = a e^{-a (v - offset)}` for `v ≥ offset`.
    ShiftedExponential { rate: f64, offset: f64 },
    /// `f(v) = 2 / (σ √(2π)) e^{-v² / 2σ²}`.
    HalfGaussian { scale: f64 },
    /// Piecewise-linear table with a fitted exponential tail.
    Tabulated(TabulatedDensity),
    /// Deterministic potential. Only for tests and clean-system runs; it has
    /// no density, so every HCR quantity is undefined for it.
    PointMass { at: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityModel {
    pub kind: DensityKind,
    /// Declared exponent with `∫ v^κ f(v) dv < ∞`.
    pub kappa: f64,
}

impl DensityModel {
    pub fn exponential(rate: f64) -> Self {
        Self {
            kind: DensityKind::Exponential { rate },
            kappa: 1.0,
        }
    }

    pub fn shifted_exponential(rate: f64, offset: f64) -> Self {
        Self {
            kind: DensityKind::ShiftedExponential { rate, offset },
            kappa: 1.0,
        }
    }

    pub fn half_gaussian(scale: f64) -> Self {
        Self {
            kind: DensityKind::HalfGaussian { scale },
            kappa: 2.0,
        }
    }

    pub fn tabulated(table: TabulatedDensity) -> Self {
        Self {
            kind: DensityKind::Tabulated(table),
            kappa: 1.0,
        }
    }

    pub fn point_mass(at: f64) -> Self {
        Self {
            kind: DensityKind::PointMass { at },
            kappa: 1.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DensityKind::Exponential { .. } => "exponential",
            DensityKind::ShiftedExponential { .. } => "shifted_exponential",
            DensityKind::HalfGaussian { .. } => "half_gaussian",
            DensityKind::Tabulated(_) => "tabulated",
            DensityKind::PointMass { .. } => "point_mass",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        positive("kappa", self.kappa)?;
        match &self.kind {
            DensityKind::Exponential { rate } => positive("density_rate", *rate),
            DensityKind::ShiftedExponential { rate, offset } => {
                positive("density_rate", *rate)?;
                if *offset >= 0.0 && offset.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "density_offset must be >= 0, got {offset}"
                    )))
                }
            }
            DensityKind::HalfGaussian { scale } => positive("density_scale", *scale),
            DensityKind::Tabulated(_) => Ok(()),
            DensityKind::PointMass { at } => {
                if *at >= 0.0 && at.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "point mass must sit at v >= 0, got {at}"
                    )))
                }
            }
        }
    }

    /// Left end of the support.
    pub fn support_start(&self) -> f64 {
        match &self.kind {
            DensityKind::ShiftedExponential { offset, .. } => *offset,
            DensityKind::PointMass { at } => *at,
            _ => 0.0,
        }
    }

    /// Natural length scale, used to size quadrature panels.
    fn scale_hint(&self) -> f64 {
        match &self.kind {
            DensityKind::Exponential { rate } | DensityKind::ShiftedExponential { rate, .. } => {
                1.0 / rate
            }
            DensityKind::HalfGaussian { scale } => *scale,
            DensityKind::Tabulated(t) => t.scale_hint(),
            DensityKind::PointMass { .. } => 1.0,
        }
    }

    pub fn pdf(&self, v: f64) -> f64 {
        if v < 0.0 || v.is_nan() {
            return 0.0;
        }
        match &self.kind {
            DensityKind::Exponential { rate } => rate * (-rate * v).exp(),
            DensityKind::ShiftedExponential { rate, offset } => {
                if v < *offset {
                    0.0
                } else {
                    rate * (-rate * (v - offset)).exp()
                }
            }
            DensityKind::HalfGaussian { scale } => {
                let z = v / scale;
                (2.0 / std::f64::consts::PI).sqrt() / scale * (-0.5 * z * z).exp()
            }
            DensityKind::Tabulated(t) => t.pdf(v),
            DensityKind::PointMass { .. } => 0.0,
        }
    }

    /// `ln f(v)`, `-∞` where the density vanishes. Kept analytic where
    /// possible so ratios of far-tail values do not underflow.
    pub fn ln_pdf(&self, v: f64) -> f64 {
        if v < 0.0 || v.is_nan() {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            DensityKind::Exponential { rate } => rate.ln() - rate * v,
            DensityKind::ShiftedExponential { rate, offset } => {
                if v < *offset {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * (v - offset)
                }
            }
            DensityKind::HalfGaussian { scale } => {
                let z = v / scale;
                0.5 * (2.0 / std::f64::consts::PI).ln() - scale.ln() - 0.5 * z * z
            }
            DensityKind::Tabulated(t) => t.ln_pdf(v),
            DensityKind::PointMass { .. } => f64::NEG_INFINITY,
        }
    }

    /// `P(V > t)`.
    pub fn tail_mass(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return match &self.kind {
                DensityKind::PointMass { at } if t >= *at => 0.0,
                _ => 1.0,
            };
        }
        match &self.kind {
            DensityKind::Exponential { rate } => (-rate * t).exp(),
            DensityKind::ShiftedExponential { rate, offset } => {
                if t <= *offset {
                    1.0
                } else {
                    (-rate * (t - offset)).exp()
                }
            }
            DensityKind::HalfGaussian { scale } => erfc(t / (scale * std::f64::consts::SQRT_2)),
            DensityKind::Tabulated(tab) => tab.tail_mass(t),
            DensityKind::PointMass { at } => {
                if t < *at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Inverse CDF for `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile level {u} outside [0, 1)")));
        }
        Ok(match &self.kind {
            DensityKind::Exponential { rate } => -(-u).ln_1p() / rate,
            DensityKind::ShiftedExponential { rate, offset } => offset - (-u).ln_1p() / rate,
            DensityKind::HalfGaussian { scale } => {
                // one Newton step on the tail polishes the series inverse
                let v = scale * std::f64::consts::SQRT_2 * erf_inv(u);
                let pdf = self.pdf(v);
                if pdf > 0.0 {
                    (v + (self.tail_mass(v) - (1.0 - u)) / pdf).max(0.0)
                } else {
                    v
                }
            }
            DensityKind::Tabulated(t) => t.quantile(u),
            DensityKind::PointMass { at } => *at,
        })
    }

    /// Closed-form mean where available.
    pub fn mean(&self) -> Option<f64> {
        match &self.kind {
            DensityKind::Exponential { rate } => Some(1.0 / rate),
            DensityKind::ShiftedExponential { rate, offset } => Some(offset + 1.0 / rate),
            DensityKind::HalfGaussian { scale } => {
                Some(scale * (2.0 / std::f64::consts::PI).sqrt())
            }
            DensityKind::Tabulated(_) => None,
            DensityKind::PointMass { at } => Some(*at),
        }
    }

    /// Closed-form variance where available.
    pub fn variance(&self) -> Option<f64> {
        match &self.kind {
            DensityKind::Exponential { rate } | DensityKind::ShiftedExponential { rate, .. } => {
                Some(1.0 / (rate * rate))
            }
            DensityKind::HalfGaussian { scale } => {
                Some(scale * scale * (1.0 - 2.0 / std::f64::consts::PI))
            }
            DensityKind::Tabulated(_) => None,
            DensityKind::PointMass { .. } => Some(0.0),
        }
    }

    fn integrate_support(&self, g: impl FnMut(f64) -> f64, from: f64) -> Result<f64> {
        quadrature::integrate_to_infinity(g, from, self.scale_hint(), QUAD_REL_TOL, QUAD_TAIL_TOL)
            .map_err(|e| Error::Numerical(e.message.to_string()))
    }

    /// `∫ f`, numerically.
    pub fn normalization(&self) -> Result<f64> {
        if let DensityKind::PointMass { .. } = self.kind {
            return Ok(1.0);
        }
        if let DensityKind::Tabulated(t) = &self.kind {
            return Ok(t.total_mass());
        }
        self.integrate_support(|v| self.pdf(v), self.support_start())
    }

    /// `∫ v^κ f(v) dv` for the declared `κ`, numerically. An error means the
    /// moment could not be shown finite.
    pub fn kappa_moment(&self) -> Result<f64> {
        if let DensityKind::PointMass { at } = self.kind {
            return Ok(at.powf(self.kappa));
        }
        let k = self.kappa;
        let m = self.integrate_support(|v| v.powf(k) * self.pdf(v), self.support_start())?;
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::Numerical(format!("moment of order {k} diverges")))
        }
    }
}

/// `J(t) = ∫ f(v - t)² / f(v) dv`.
pub fn j_of_t(model: &DensityModel, t: f64) -> Result<f64> {
    let undefined = |reason: String| Error::FUndefined { t, reason };
    if !(t >= 0.0) || !t.is_finite() {
        return Err(undefined("t must be finite and >= 0".into()));
    }
    if let DensityKind::PointMass { .. } = model.kind {
        return Err(undefined("a point mass has no density".into()));
    }
    if t == 0.0 {
        return model.normalization();
    }
    let from = model.support_start() + t;
    let integrand = |v: f64| {
        let num = model.ln_pdf(v - t);
        if num == f64::NEG_INFINITY {
            return 0.0;
        }
        (2.0 * num - model.ln_pdf(v)).exp()
    };
    let j = model
        .integrate_support(integrand, from)
        .map_err(|e| undefined(e.to_string()))?;
    if j.is_finite() {
        Ok(j)
    } else {
        Err(undefined("integral overflowed".into()))
    }
}

/// `F(t) = J(t) - 1`, clamped at 0 within rounding.
pub fn f_of_t(model: &DensityModel, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::FUndefined {
            t,
            reason: "F is evaluated for t > 0 only".into(),
        });
    }
    let f = j_of_t(model, t)? - 1.0;
    if f < -F_NEGATIVE_SLACK {
        return Err(Error::Numerical(format!(
            "F({t}) = {f:e} is negative beyond rounding; density not normalized?"
        )));
    }
    Ok(f.max(0.0))
}

/// Jensen lower bound `J(t) ≥ 1 / P(V > t)`.
pub fn jensen_lower_bound(model: &DensityModel, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("Jensen bound needs t > 0, got {t}")));
    }
    let tail = model.tail_mass(t);
    if tail <= 0.0 || !(1.0 / tail).is_finite() {
        return Err(Error::Numerical(format!(
            "tail mass above t = {t} underflows; the Jensen bound is infinite"
        )));
    }
    Ok(1.0 / tail)
}

/// One point of the `A(t)` curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HcrPoint {
    pub t: f64,
    /// `None` where `F(t)` is undefined.
    pub f_value: Option<f64>,
    pub eps: f64,
    pub a: Option<f64>,
}

/// The variance lower bound `A = E²{S₋}(1 - ε(t₀))² / F(t₀)` at the best `t₀`
/// of a grid, with the whole curve kept for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct HcrBound {
    pub t0: f64,
    pub f_value: f64,
    pub mean_s_minus: f64,
    pub a: f64,
    /// Set when `mean_s_minus ≤ 0`: the bound is trivially `A = 0`.
    pub degenerate: bool,
    pub curve: Vec<HcrPoint>,
}

/// Maximizes `A(t) = mean²·(1 - ε(t))² / F(t)` over `t_grid`.
///
/// `eps`, when given, holds the measured `ε(t) = E{S₋ᵗ}/E{S₋}` for each grid
/// point; otherwise `ε ≡ 0`.
pub fn hcr_bound(
    mean_s_minus: f64,
    model: &DensityModel,
    t_grid: &[f64],
    eps: Option<&[f64]>,
) -> Result<HcrBound> {
    if let Some(e) = eps {
        if e.len() != t_grid.len() {
            return Err(Error::Config(format!(
                "{} eps values for {} grid points",
                e.len(),
                t_grid.len()
            )));
        }
    }
    let mut curve = Vec::with_capacity(t_grid.len());
    for (k, &t) in t_grid.iter().enumerate() {
        let e = eps.map_or(0.0, |e| e[k]);
        let f_value = f_of_t(model, t).ok().filter(|f| *f > 0.0);
        let a = f_value.map(|f| mean_s_minus.max(0.0).powi(2) * (1.0 - e).max(0.0).powi(2) / f);
        curve.push(HcrPoint {
            t,
            f_value,
            eps: e,
            a,
        });
    }
    let best = curve
        .iter()
        .filter(|p| p.a.is_some())
        .max_by(|x, y| {
            x.a.unwrap()
                .total_cmp(&y.a.unwrap())
                .then(y.t.total_cmp(&x.t))
        })
        .copied()
        .ok_or_else(|| Error::NoBound("F(t) is undefined on every grid point".into()))?;
    Ok(HcrBound {
        t0: best.t,
        f_value: best.f_value.unwrap(),
        mean_s_minus,
        a: best.a.unwrap(),
        degenerate: mean_s_minus <= 0.0,
        curve,
    })
}

/// Monte Carlo check of `Var ξ ≥ t² / F(t)` (the HCR inequality with `φ = id`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyCheck {
    pub lhs_variance: f64,
    pub rhs_bound: f64,
    /// Standard error of the sample variance.
    pub stderr: f64,
    pub holds: bool,
}

pub fn hcr_toy_check(model: &DensityModel, t: f64, n: usize, seed: u64) -> Result<ToyCheck> {
    if n < 1000 {
        return Err(Error::InsufficientData(format!(
            "toy check needs at least 1000 samples, got {n}"
        )));
    }
    model.validate()?;
    let f = f_of_t(model, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = (0..n)
        .map(|_| model.quantile(rng.gen::<f64>()))
        .collect::<Result<Vec<_>>>()?;
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let var = m2 * nf / (nf - 1.0);
    let stderr = ((m4 - m2 * m2).max(0.0) / nf).sqrt();
    let rhs = if f > 0.0 { t * t / f } else { f64::INFINITY };
    Ok(ToyCheck {
        lhs_variance: var,
        rhs_bound: rhs,
        stderr,
        holds: var >= rhs - 3.0 * stderr,
    })
}

/// `Γ(κ + 1) / a^κ`, the κ-moment of an exponential density.
pub fn exponential_kappa_moment(rate: f64, kappa: f64) -> f64 {
    gamma(kappa + 1.0) / rate.powf(kappa)
}
