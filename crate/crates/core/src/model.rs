//! Domain types shared by every stage of the pipeline.
//!
//! Positions are `f64` centimetres and time is an integer bin index. Each
//! movement axis is handled as its own one-dimensional problem.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounded one-dimensional interval `[z_min, z_max]` an axis moves in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveSpace {
    z_min: f64,
    z_max: f64,
}

impl ActiveSpace {
    pub fn new(z_min: f64, z_max: f64) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite()) || z_max <= z_min {
            return Err(Error::InvalidConfig(format!(
                "active space needs finite z_min < z_max, got [{z_min}, {z_max}]"
            )));
        }
        Ok(Self { z_min, z_max })
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Midpoint `(z_min + z_max) / 2`, the threshold used for bit encoding.
    pub fn mid(&self) -> f64 {
        (self.z_min + self.z_max) / 2.0
    }

    pub fn width(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.z_min && z <= self.z_max
    }

    pub fn clamp(&self, z: f64) -> f64 {
        z.clamp(self.z_min, self.z_max)
    }

    /// `[mid, z_max]`, selected by bit 1.
    pub fn upper_half(&self) -> Self {
        Self {
            z_min: self.mid(),
            z_max: self.z_max,
        }
    }

    /// `[z_min, mid]`, selected by bit 0.
    pub fn lower_half(&self) -> Self {
        Self {
            z_min: self.z_min,
            z_max: self.mid(),
        }
    }
}

impl fmt::Display for ActiveSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.z_min, self.z_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn label(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Ground-truth positions of one axis, one per time bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySeries {
    axis: Axis,
    positions: Vec<f64>,
}

impl TrajectorySeries {
    /// Fails only on an empty series; containment and finiteness are checked
    /// by [`validate_dataset`] so that violations can be reported rather than
    /// rejected outright.
    pub fn new(axis: Axis, positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidConfig("trajectory must have K >= 1".into()));
        }
        Ok(Self { axis, positions })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `K x M` matrix of per-bin neural features, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ObservationMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(
                "observation matrix needs at least one row and one column".into(),
            ));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "observation values",
                expected: rows * cols,
                found: values.len(),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "observation row",
                    expected: cols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, values)
    }

    /// Number of time bins `K`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of neurons `M`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.cols..(k + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(j).step_by(self.cols).copied()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= self.rows as f64);
        means
    }

    /// Population (divide-by-K) variances of each column.
    pub fn column_variances(&self) -> Vec<f64> {
        let means = self.column_means();
        let mut vars = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        vars.iter_mut().for_each(|s| *s /= self.rows as f64);
        vars
    }

    /// Keeps the columns in `range`, in order.
    pub fn select_columns(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.cols {
            return Err(Error::InvalidConfig(format!(
                "column range {}..{} invalid for {} columns",
                range.start, range.end, self.cols
            )));
        }
        let values = self
            .iter_rows()
            .flat_map(|row| row[range.clone()].iter().copied())
            .collect();
        Self::new(self.rows, range.len(), values)
    }

    /// Keeps the rows listed in `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &k in indices {
            if k >= self.rows {
                return Err(Error::DimensionMismatch {
                    what: "row index",
                    expected: self.rows,
                    found: k,
                });
            }
            values.extend_from_slice(self.row(k));
        }
        Self::new(indices.len(), self.cols, values)
    }
}

/// Parameters of the linear-Gaussian state-space model
///
/// ```text
/// z_k = a * z_{k-1} + w_k,            w_k ~ N(0, q)
/// S_k = weights * z_k + offsets + v_k, v_k ~ N(0, diag(obs_noise_var))
/// z_0 ~ N(init_mean, init_var)
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceParams {
    pub weights: Vec<f64>,
    pub offsets: Vec<f64>,
    pub obs_noise_var: Vec<f64>,
    pub state_transition: f64,
    pub state_noise_var: f64,
    pub init_mean: f64,
    pub init_var: f64,
}

impl StateSpaceParams {
    pub fn n_neurons(&self) -> usize {
        self.weights.len()
    }

    /// Checks dimensions against `m` neurons and positivity of every variance.
    pub fn validate(&self, m: usize) -> Result<()> {
        for (what, len) in [
            ("weights", self.weights.len()),
            ("offsets", self.offsets.len()),
            ("obs_noise_var", self.obs_noise_var.len()),
        ] {
            if len != m {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: m,
                    found: len,
                });
            }
        }
        for (j, &r) in self.obs_noise_var.iter().enumerate() {
            check_variance(&format!("obs_noise_var[{j}]"), r)?;
        }
        check_variance("state_noise_var", self.state_noise_var)?;
        check_variance("init_var", self.init_var)?;
        let finite = self
            .weights
            .iter()
            .chain(&self.offsets)
            .chain([&self.state_transition, &self.init_mean])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig(
                "state-space parameters contain non-finite values".into(),
            ));
        }
        Ok(())
    }
}

fn check_variance(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveVariance {
            name: name.to_string(),
            value,
        })
    }
}

/// Predicted positions and their variances at correction level `level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSeries {
    pub level: usize,
    pub positions: Vec<f64>,
    pub covariances: Vec<f64>,
}

impl PredictionSeries {
    pub fn new(level: usize, positions: Vec<f64>, covariances: Vec<f64>) -> Result<Self> {
        if positions.len() != covariances.len() {
            return Err(Error::DimensionMismatch {
                what: "prediction covariances",
                expected: positions.len(),
                found: covariances.len(),
            });
        }
        if let Some(p) = covariances.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::NonPositiveVariance {
                name: "prediction covariance".into(),
                value: *p,
            });
        }
        Ok(Self {
            level,
            positions,
            covariances,
        })
    }

    /// Series with zero variance everywhere, for externally supplied predictions.
    pub fn point_estimates(level: usize, positions: Vec<f64>) -> Self {
        let covariances = vec![0.0; positions.len()];
        Self {
            level,
            positions,
            covariances,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// One bit (0 or 1) per sample at a given level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitSeries {
    pub level: usize,
    bits: Vec<u8>,
}

impl BitSeries {
    pub fn new(level: usize, bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|b| **b > 1) {
            return Err(Error::InvalidConfig(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self { level, bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b == 1).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: &'static str,
    pub passed: bool,
    /// Index of the first offending sample (row for observation checks).
    pub first_index: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn failure(&self, check: &str) -> Option<&CheckOutcome> {
        self.failures().find(|c| c.check == check)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed: Vec<_> = self.failures().collect();
        if failed.is_empty() {
            return f.write_str("all checks passed");
        }
        for (i, c) in failed.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", c.check, c.detail)?;
        }
        Ok(())
    }
}

/// Checks a trajectory/observation pair against its active space.
///
/// Every violated invariant is reported with the index of its first
/// offending sample; nothing aborts early.
pub fn validate_dataset(
    traj: &TrajectorySeries,
    obs: &ObservationMatrix,
    space: &ActiveSpace,
) -> ValidationReport {
    let mut checks = Vec::with_capacity(4);

    let k = traj.len();
    checks.push(if obs.rows() == k {
        CheckOutcome {
            check: "length",
            passed: true,
            first_index: None,
            detail: format!("K = {k}"),
        }
    } else {
        CheckOutcome {
            check: "length",
            passed: false,
            first_index: Some(k.min(obs.rows())),
            detail: format!(
                "length mismatch: trajectory has {k} samples, observations have {} rows",
                obs.rows()
            ),
        }
    });

    let non_finite = traj.positions().iter().position(|z| !z.is_finite());
    checks.push(CheckOutcome {
        check: "finite_positions",
        passed: non_finite.is_none(),
        first_index: non_finite,
        detail: match non_finite {
            Some(i) => format!("non-finite position at index {i}"),
            None => "all positions finite".into(),
        },
    });

    let outside = traj
        .positions()
        .iter()
        .position(|z| z.is_finite() && !space.contains(*z));
    checks.push(CheckOutcome {
        check: "bounds",
        passed: outside.is_none(),
        first_index: outside,
        detail: match outside {
            Some(i) => format!(
                "position {} at index {i} outside {space}",
                traj.positions()[i]
            ),
            None => format!("all positions within {space}"),
        },
    });

    let bad_row = obs
        .iter_rows()
        .position(|row| row.iter().any(|v| !v.is_finite()));
    checks.push(CheckOutcome {
        check: "finite_observations",
        passed: bad_row.is_none(),
        first_index: bad_row,
        detail: match bad_row {
            Some(i) => format!("non-finite observation in row {i}"),
            None => "all observations finite".into(),
        },
    });

    ValidationReport { checks }
}
