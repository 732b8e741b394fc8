//! Deterministic parallel Monte Carlo over disorder realizations.
//!
//! Every realization is a pure function of `(master_seed, index)`. Workers
//! take whole realizations; only the finished scalars are collected, and the
//! reduction runs over the index-ordered results, so the output does not
//! depend on the thread count.

mod scans;
pub mod stats;

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::densities::DensityModel;
use crate::entropy::{
    block_entropy, cut_entropy, entropy_upper_bound_rhs, splitting_residual, Side,
};
use crate::error::{Error, Result};
use crate::lattice::{
    apply_origin_shift, build_hamiltonian, sample_potential, BoxGeometry, HamiltonianMatrix,
    PotentialField,
};
use crate::resolvent::{greens_column, SpectralParameter};
use crate::spectral::{fermi_projection_direct, FermiProjection};

pub use scans::{
    area_law_scan_2d, mixing_covariance, mixing_covariance_of, projection_decay_scan,
    shift_decay_scan, splitting_scan, variance_scan, AreaLawRow, MixingRow, ProjectionDecayScan,
    ShiftDecayScan, SplittingRow, VarianceRow, VarianceScan, AREA_LAW_MAX_SITES,
};
pub use stats::{summarize, EnsembleStats};

/// Offset added to the index of a realization that failed once.
pub const RESAMPLE_OFFSET: u64 = 1 << 48;
/// Largest tolerated share of failed realizations.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub geometry: BoxGeometry,
    pub density: DensityModel,
    pub fermi_energy: f64,
    pub realizations: usize,
    pub master_seed: u64,
    /// Added to `V(0)` in every realization.
    pub shift_t: f64,
    /// Worker threads; 0 lets the pool choose.
    pub threads: usize,
    /// Test hook: every realization reuses index 0.
    pub force_identical_seeds: bool,
}

impl EnsembleConfig {
    pub fn new(
        geometry: BoxGeometry,
        density: DensityModel,
        fermi_energy: f64,
        realizations: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            geometry,
            density,
            fermi_energy,
            realizations,
            master_seed,
            shift_t: 0.0,
            threads: 0,
            force_identical_seeds: false,
        }
    }

    pub fn with_shift(&self, t: f64) -> Self {
        Self {
            shift_t: t,
            ..self.clone()
        }
    }

    pub fn with_threads(&self, threads: usize) -> Self {
        Self {
            threads,
            ..self.clone()
        }
    }

    pub fn with_realizations(&self, realizations: usize) -> Self {
        Self {
            realizations,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations < 2 {
            return Err(Error::Config(format!(
                "realizations must be >= 2, got {}",
                self.realizations
            )));
        }
        if !(self.fermi_energy > 0.0) || !self.fermi_energy.is_finite() {
            return Err(Error::Config(format!(
                "fermi_energy must be finite and > 0, got {}",
                self.fermi_energy
            )));
        }
        if !(self.shift_t >= 0.0) || !self.shift_t.is_finite() {
            return Err(Error::Config(format!(
                "shift_t must be >= 0, got {}",
                self.shift_t
            )));
        }
        self.density.validate()
    }
}

/// The scalar functionals the runner knows how to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Estimator {
    BlockEntropy {
        m: usize,
    },
    CutEntropy {
        position: i64,
        side: Side,
    },
    SplittingResidual {
        m: usize,
    },
    /// `|G(x, y; z)|^s`; sites are coordinates along the line.
    FractionalMoment {
        s: f64,
        z: SpectralParameter,
        x: i64,
        y: i64,
    },
    /// `|P(x, y)|` along the first axis.
    ProjectionEntryAbs {
        x: i64,
        y: i64,
    },
    EntropyBoundRhs {
        alpha: f64,
    },
    /// Potential value at a site. Cheap and exactly independent across
    /// sites, which makes it a calibration probe for the statistics.
    PotentialAt {
        x: i64,
    },
    /// Returns the constant; a test probe for the reduction.
    Constant(f64),
}

impl Estimator {
    fn needs_projection(&self) -> bool {
        matches!(
            self,
            Estimator::BlockEntropy { .. }
                | Estimator::CutEntropy { .. }
                | Estimator::SplittingResidual { .. }
                | Estimator::ProjectionEntryAbs { .. }
                | Estimator::EntropyBoundRhs { .. }
        )
    }

    pub fn name(&self) -> String {
        match self {
            Estimator::BlockEntropy { m } => format!("block_entropy({m})"),
            Estimator::CutEntropy { position, side } => {
                format!("cut_entropy({position},{})", side_name(*side))
            }
            Estimator::SplittingResidual { m } => format!("splitting_residual({m})"),
            Estimator::FractionalMoment { s, z, x, y } => {
                format!("fractional_moment({s},{}{:+}i,{x},{y})", z.lambda, z.eta)
            }
            Estimator::ProjectionEntryAbs { x, y } => format!("projection_entry_abs({x},{y})"),
            Estimator::EntropyBoundRhs { alpha } => format!("entropy_bound_rhs({alpha})"),
            Estimator::PotentialAt { x } => format!("potential_at({x})"),
            Estimator::Constant(c) => format!("constant({c})"),
        }
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

/// State of one realization handed to the estimators.
pub struct Realization {
    pub index: u64,
    pub field: PotentialField,
    pub hamiltonian: HamiltonianMatrix,
    pub projection: Option<FermiProjection>,
}

impl Realization {
    pub fn build(config: &EnsembleConfig, index: u64, with_projection: bool) -> Result<Self> {
        let field = sample_potential(&config.density, config.geometry, config.master_seed, index)?;
        let field = if config.shift_t > 0.0 {
            apply_origin_shift(&field, config.shift_t)?
        } else {
            field
        };
        let hamiltonian = build_hamiltonian(&field);
        let projection = if with_projection {
            Some(fermi_projection_direct(&hamiltonian, config.fermi_energy)?)
        } else {
            None
        };
        Ok(Self {
            index,
            field,
            hamiltonian,
            projection,
        })
    }

    fn projection(&self) -> Result<&FermiProjection> {
        self.projection
            .as_ref()
            .ok_or_else(|| Error::Domain("realization was built without a projection".into()))
    }

    fn axis_site(&self, x: i64) -> Result<usize> {
        self.field
            .geometry
            .axis_site(x)
            .ok_or_else(|| Error::Range(format!("site {x} outside the box")))
    }

    /// Evaluates several estimators, sharing Green's columns between
    /// fractional moments with the same source and `z`.
    pub fn evaluate(&self, estimators: &[Estimator]) -> Result<Vec<f64>> {
        let mut columns: HashMap<(usize, u64, u64), Vec<Complex64>> = HashMap::new();
        let mut out = Vec::with_capacity(estimators.len());
        for est in estimators {
            let value = match *est {
                Estimator::BlockEntropy { m } => block_entropy(self.projection()?, m)?.value,
                Estimator::CutEntropy { position, side } => {
                    cut_entropy(self.projection()?, position, side)?.value
                }
                Estimator::SplittingResidual { m } => splitting_residual(self.projection()?, m)?,
                Estimator::FractionalMoment { s, z, x, y } => {
                    let (xs, ys) = (self.axis_site(x)?, self.axis_site(y)?);
                    let key = (ys, z.lambda.to_bits(), z.eta.to_bits());
                    if !columns.contains_key(&key) {
                        let col = greens_column(&self.hamiltonian, z, ys)?;
                        columns.insert(key, col.entries);
                    }
                    columns[&key][xs].norm().powf(s)
                }
                Estimator::ProjectionEntryAbs { x, y } => {
                    let p = self.projection()?;
                    p.get(self.axis_site(x)?, self.axis_site(y)?).abs()
                }
                Estimator::EntropyBoundRhs { alpha } => {
                    entropy_upper_bound_rhs(self.projection()?, alpha)?
                }
                Estimator::PotentialAt { x } => self.field.values[self.axis_site(x)?],
                Estimator::Constant(c) => c,
            };
            if !value.is_finite() {
                return Err(Error::Numerical(format!(
                    "{} is not finite in realization {}",
                    est.name(),
                    self.index
                )));
            }
            out.push(value);
        }
        Ok(out)
    }
}

/// Raw per-realization values, in realization order.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRun<T> {
    pub values: Vec<T>,
    /// Realizations that failed even after one resample.
    pub failures: usize,
    /// Realizations that succeeded on their resample.
    pub resampled: usize,
}

fn with_pool<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

enum Outcome<T> {
    Ok(T),
    Resampled(T),
    Failed(Error),
}

/// Parallel map of `f` over the realizations of `config`.
///
/// A realization whose evaluation fails with a numerical error is redrawn
/// once at index `i + RESAMPLE_OFFSET`; if that fails too it is dropped and
/// counted. More than 1% dropped aborts with [`Error::Degraded`]. Any other
/// error aborts immediately.
pub fn map_realizations<T, F>(config: &EnsembleConfig, f: F) -> Result<EnsembleRun<T>>
where
    T: Send,
    F: Fn(&EnsembleConfig, u64) -> Result<T> + Sync,
{
    config.validate()?;
    let n = config.realizations;
    let outcomes: Vec<Outcome<T>> = with_pool(config.threads, || {
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let index = if config.force_identical_seeds { 0 } else { i };
                match f(config, index) {
                    Ok(v) => Outcome::Ok(v),
                    Err(e) if e.is_numerical() => match f(config, index + RESAMPLE_OFFSET) {
                        Ok(v) => Outcome::Resampled(v),
                        Err(e) => Outcome::Failed(e),
                    },
                    Err(e) => Outcome::Failed(e),
                }
            })
            .collect()
    })?;

    let mut values = Vec::with_capacity(n);
    let mut failures = 0;
    let mut resampled = 0;
    let mut last = None;
    for outcome in outcomes {
        match outcome {
            Outcome::Ok(v) => values.push(v),
            Outcome::Resampled(v) => {
                resampled += 1;
                values.push(v);
            }
            Outcome::Failed(e) if e.is_numerical() => {
                failures += 1;
                last = Some(e);
            }
            Outcome::Failed(e) => return Err(e),
        }
    }
    if failures > 0 {
        log::warn!("{failures} of {n} realizations failed");
    }
    if failures as f64 > MAX_FAILURE_FRACTION * n as f64 {
        return Err(Error::Degraded {
            failed: failures,
            total: n,
            last: last.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    Ok(EnsembleRun {
        values,
        failures,
        resampled,
    })
}

/// Per-realization samples of several estimators: `samples[k][i]` is
/// estimator `k` in the `i`-th surviving realization.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSamples {
    pub estimators: Vec<Estimator>,
    pub samples: Vec<Vec<f64>>,
    pub failures: usize,
}

pub fn sample_estimators(
    config: &EnsembleConfig,
    estimators: &[Estimator],
) -> Result<EstimatorSamples> {
    let with_projection = estimators.iter().any(Estimator::needs_projection);
    let run = map_realizations(config, |cfg, index| {
        Realization::build(cfg, index, with_projection)?.evaluate(estimators)
    })?;
    let mut samples = vec![Vec::with_capacity(run.values.len()); estimators.len()];
    for row in &run.values {
        for (k, v) in row.iter().enumerate() {
            samples[k].push(*v);
        }
    }
    Ok(EstimatorSamples {
        estimators: estimators.to_vec(),
        samples,
        failures: run.failures,
    })
}

/// Bootstrap seed for estimator slot `k` of a run.
pub fn bootstrap_seed(config: &EnsembleConfig, k: usize) -> u64 {
    stats::derive_seed(config.master_seed, k as u64 + 1)
}

/// Stats for each estimator, sharing one pass over the realizations.
pub fn run_estimators(
    config: &EnsembleConfig,
    estimators: &[Estimator],
) -> Result<Vec<EnsembleStats>> {
    let run = sample_estimators(config, estimators)?;
    run.samples
        .iter()
        .enumerate()
        .map(|(k, s)| summarize(s, bootstrap_seed(config, k)))
        .collect()
}

pub fn run_ensemble(config: &EnsembleConfig, estimator: Estimator) -> Result<EnsembleStats> {
    Ok(run_estimators(config, &[estimator])?.remove(0))
}
