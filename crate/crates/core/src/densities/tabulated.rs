use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::least_squares_line;

/// How far the loaded table may be from unit mass before a warning.
pub const NORMALIZATION_WARN_TOL: f64 = 1e-3;

/// Number of trailing grid points used to fit the exponential tail.
const TAIL_FIT_POINTS: usize = 5;

/// Density given on a grid, linear between grid points, constant on
/// `[0, v₀]`, and continued past the last point by `f_last e^{-b (v - v_last)}`
/// with `b` fitted to the trailing points. The tail keeps the support equal
/// to the whole half-line, which the HCR functional needs.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    tail_rate: f64,
    /// Mass on `[0, grid[k]]`.
    cumulative: Vec<f64>,
}

impl TabulatedDensity {
    /// Builds and normalizes a table. Returns the density together with the
    /// mass the raw table had.
    pub fn from_points(grid: Vec<f64>, values: Vec<f64>) -> Result<(Self, f64)> {
        if grid.len() != values.len() {
            return Err(Error::Config("grid and values differ in length".into()));
        }
        if grid.len() < 3 {
            return Err(Error::Config(
                "a tabulated density needs at least 3 points".into(),
            ));
        }
        if grid[0] < 0.0 {
            return Err(Error::Config(format!("grid starts at {} < 0", grid[0])));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(
                "density values must be finite and >= 0".into(),
            ));
        }
        let tail: Vec<(f64, f64)> = grid
            .iter()
            .zip(&values)
            .rev()
            .take(TAIL_FIT_POINTS)
            .filter(|(_, f)| **f > 0.0)
            .map(|(v, f)| (*v, f.ln()))
            .collect();
        if tail.len() < 2 || *values.last().unwrap() <= 0.0 {
            return Err(Error::Config(
                "the last grid values must be positive to fit a tail".into(),
            ));
        }
        let tail_rate = -least_squares_line(&tail).slope;
        if !(tail_rate > 0.0) {
            return Err(Error::Config(format!(
                "fitted tail rate {tail_rate} does not decay"
            )));
        }
        let mut table = Self {
            grid,
            values,
            tail_rate,
            cumulative: Vec::new(),
        };
        table.rebuild_cumulative();
        let mass = table.total_mass();
        if (mass - 1.0).abs() > NORMALIZATION_WARN_TOL {
            log::warn!("tabulated density has mass {mass}; renormalizing");
        }
        table.values.iter_mut().for_each(|v| *v /= mass);
        table.rebuild_cumulative();
        Ok((table, mass))
    }

    /// Parses two whitespace- or comma-separated columns `v f(v)`; `#` starts
    /// a comment.
    pub fn parse(text: &str) -> Result<(Self, f64)> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::Config(format!(
                    "line {}: expected two columns, got {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("line {}: bad number {s:?}", lineno + 1)))
            };
            grid.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        Self::from_points(grid, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, f64)> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn rebuild_cumulative(&mut self) {
        let mut acc = self.values[0] * self.grid[0];
        self.cumulative = Vec::with_capacity(self.grid.len());
        self.cumulative.push(acc);
        for k in 1..self.grid.len() {
            acc += 0.5 * (self.values[k] + self.values[k - 1]) * (self.grid[k] - self.grid[k - 1]);
            self.cumulative.push(acc);
        }
    }

    fn tail_total(&self) -> f64 {
        self.values.last().unwrap() / self.tail_rate
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().unwrap() + self.tail_total()
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    pub(crate) fn scale_hint(&self) -> f64 {
        (1.0 / self.tail_rate)
            .min(self.grid.last().unwrap() - self.grid[0])
            .max(1e-3)
    }

    pub fn pdf(&self, v: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        let last = self.grid.len() - 1;
        if v <= self.grid[0] {
            return self.values[0];
        }
        if v >= self.grid[last] {
            return self.values[last] * (-self.tail_rate * (v - self.grid[last])).exp();
        }
        let k = self.grid.partition_point(|&g| g <= v) - 1;
        let w = (v - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    pub fn ln_pdf(&self, v: f64) -> f64 {
        let last = self.grid.len() - 1;
        if v >= self.grid[last] {
            return self.values[last].ln() - self.tail_rate * (v - self.grid[last]);
        }
        let p = self.pdf(v);
        if p > 0.0 {
            p.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn cdf(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let last = self.grid.len() - 1;
        if v <= self.grid[0] {
            return self.values[0] * v;
        }
        if v >= self.grid[last] {
            let x = v - self.grid[last];
            return self.cumulative[last] + self.tail_total() * (-(-self.tail_rate * x).exp_m1());
        }
        let k = self.grid.partition_point(|&g| g <= v) - 1;
        let x = v - self.grid[k];
        let slope = (self.values[k + 1] - self.values[k]) / (self.grid[k + 1] - self.grid[k]);
        self.cumulative[k] + self.values[k] * x + 0.5 * slope * x * x
    }

    pub fn tail_mass(&self, t: f64) -> f64 {
        let last = self.grid.len() - 1;
        if t >= self.grid[last] {
            return self.tail_total() * (-self.tail_rate * (t - self.grid[last])).exp();
        }
        (1.0 - self.cdf(t)).max(0.0)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let last = self.grid.len() - 1;
        if u < self.cumulative[0] {
            return u / self.values[0];
        }
        if u >= self.cumulative[last] {
            let r = ((u - self.cumulative[last]) / self.tail_total()).min(1.0 - f64::EPSILON);
            return self.grid[last] - (-r).ln_1p() / self.tail_rate;
        }
        let k = self.cumulative.partition_point(|&c| c <= u) - 1;
        let r = u - self.cumulative[k];
        let fk = self.values[k];
        let slope = (self.values[k + 1] - fk) / (self.grid[k + 1] - self.grid[k]);
        // fk x + slope x²/2 = r, written to avoid cancellation
        let disc = (fk * fk + 2.0 * slope * r).max(0.0);
        let x = 2.0 * r / (fk + disc.sqrt());
        (self.grid[k] + x).min(self.grid[k + 1])
    }
}
