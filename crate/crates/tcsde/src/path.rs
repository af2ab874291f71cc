//! Grid-sampled paths: nondecreasing clock paths and general cadlag paths.
//!
//! Both kinds carry a grid of strictly increasing time points starting at 0,
//! one value per point, and an interpolation convention for evaluation
//! between points. `CadlagStep` means right-continuous step evaluation
//! (the value holds until the next grid point); `Linear` means the path is
//! treated as continuous and interpolated.
//!
//! Jumps are never inferred from consecutive values: a genuine jump is an
//! explicit `(index, left_limit)` record, which distinguishes it from a
//! steep continuous segment at grid scale.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Absolute slack used when matching grid points between paths.
pub const GRID_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interp {
    /// Right-continuous step function: `path(t) = values[i]` for the
    /// largest `grid[i] <= t`.
    CadlagStep,
    /// Piecewise-linear continuous interpolation.
    Linear,
}

/// Genuine jump marker: the path jumps at `grid[index]` and its left limit
/// there is `left_limit` (rather than the value at the previous grid point).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub index: usize,
    pub left_limit: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::config("grid needs at least two points"));
    }
    if grid[0] != 0.0 {
        return Err(Error::config(format!(
            "grid must start at 0, got {}",
            grid[0]
        )));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::config(format!(
                "grid must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

/// Uniform grid `0, step, 2 step, ..., n step` covering `[0, horizon]`.
/// Points are exact multiples of `step` so that grids built from the same
/// step always match bit-for-bit.
pub fn uniform_grid(step: f64, horizon: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::config(format!("step must be positive, got {step}")));
    }
    if !(horizon >= step) {
        return Err(Error::config(format!(
            "horizon {horizon} must be at least one step {step}"
        )));
    }
    let n = (horizon / step - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

fn locate(grid: &[f64], t: f64) -> usize {
    // Largest i with grid[i] <= t; clamps below the grid to 0.
    match grid.binary_search_by(|g| g.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) => i - 1,
    }
}

fn eval(grid: &[f64], values: &[f64], interp: Interp, t: f64) -> f64 {
    let n = grid.len();
    if t <= grid[0] {
        return values[0];
    }
    if t >= grid[n - 1] {
        return values[n - 1];
    }
    let i = locate(grid, t);
    match interp {
        Interp::CadlagStep => values[i],
        Interp::Linear => {
            if grid[i] == t {
                values[i]
            } else {
                let w = (t - grid[i]) / (grid[i + 1] - grid[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }
}

/// Index of `t` in `grid` if it coincides with a grid point (within slack).
fn grid_index_of(grid: &[f64], t: f64) -> Option<usize> {
    let i = locate(grid, t);
    if (grid[i] - t).abs() <= GRID_EPS {
        Some(i)
    } else if i + 1 < grid.len() && (grid[i + 1] - t).abs() <= GRID_EPS {
        Some(i + 1)
    } else {
        None
    }
}

fn left_limit(
    grid: &[f64],
    values: &[f64],
    interp: Interp,
    jumps: &[JumpRecord],
    t: f64,
) -> f64 {
    match grid_index_of(grid, t) {
        Some(i) => {
            if let Ok(k) = jumps.binary_search_by_key(&i, |j| j.index) {
                return jumps[k].left_limit;
            }
            match interp {
                Interp::Linear => values[i],
                Interp::CadlagStep => {
                    if i == 0 {
                        values[0]
                    } else {
                        values[i - 1]
                    }
                }
            }
        }
        None => eval(grid, values, interp, t),
    }
}

/// Nondecreasing cadlag path: a subordinator, a deterministic clock, or a
/// generalized inverse. Values of simulated clocks start at 0; generalized
/// inverses may start above 0 (the infimum of an empty initial segment).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonePath {
    grid: Vec<f64>,
    values: Vec<f64>,
    interp: Interp,
}

impl MonotonePath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, interp: Interp) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::config("grid and values lengths differ"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("values must be finite"));
        }
        if values[0] < 0.0 {
            return Err(Error::config("clock values must be nonnegative"));
        }
        for w in values.windows(2) {
            if w[1] < w[0] {
                return Err(Error::config(format!(
                    "values must be nondecreasing, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        Ok(Self {
            grid,
            values,
            interp,
        })
    }

    /// The identity clock `t -> t` on a uniform grid.
    pub fn identity(step: f64, horizon: f64) -> Result<Self> {
        let grid = uniform_grid(step, horizon)?;
        let values = grid.clone();
        Self::new(grid, values, Interp::Linear)
    }

    /// The scaled clock `t -> rate * t`.
    pub fn scaled(rate: f64, step: f64, horizon: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::config(format!("rate must be positive, got {rate}")));
        }
        let grid = uniform_grid(step, horizon)?;
        let values = grid.iter().map(|t| rate * t).collect();
        Self::new(grid, values, Interp::Linear)
    }

    /// The deterministic step time-change `t -> 1_{[at, inf)}(t)`.
    pub fn unit_step(at: f64, step: f64, horizon: f64) -> Result<Self> {
        let grid = uniform_grid(step, horizon)?;
        let values = grid
            .iter()
            .map(|&t| if t >= at { 1.0 } else { 0.0 })
            .collect();
        Self::new(grid, values, Interp::CadlagStep)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end_time(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        eval(&self.grid, &self.values, self.interp, t)
    }

    pub fn left_limit_at(&self, t: f64) -> f64 {
        left_limit(&self.grid, &self.values, self.interp, &[], t)
    }

    /// All consecutive increments strictly positive.
    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }

    /// Grid indices where the path moves (under step interpolation these
    /// are its genuine jumps; subordinator increments are real jumps).
    pub fn jump_indices(&self) -> Vec<usize> {
        match self.interp {
            Interp::Linear => Vec::new(),
            Interp::CadlagStep => (1..self.len())
                .filter(|&i| self.values[i] > self.values[i - 1])
                .collect(),
        }
    }

    /// View as a general cadlag path (step increments become jump records
    /// when the path is stored as a step function).
    pub fn to_cadlag(&self) -> CadlagPath {
        let jumps = self
            .jump_indices()
            .into_iter()
            .map(|i| JumpRecord {
                index: i,
                left_limit: self.values[i - 1],
            })
            .collect();
        CadlagPath {
            grid: self.grid.clone(),
            values: self.values.clone(),
            interp: self.interp,
            jumps,
        }
    }
}

/// Grid-sampled real-valued cadlag path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CadlagPath {
    grid: Vec<f64>,
    values: Vec<f64>,
    interp: Interp,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    jumps: Vec<JumpRecord>,
}

impl CadlagPath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, interp: Interp) -> Result<Self> {
        Self::with_jumps(grid, values, interp, Vec::new())
    }

    pub fn with_jumps(
        grid: Vec<f64>,
        values: Vec<f64>,
        interp: Interp,
        mut jumps: Vec<JumpRecord>,
    ) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::config("grid and values lengths differ"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("values must be finite"));
        }
        jumps.sort_by_key(|j| j.index);
        jumps.dedup_by_key(|j| j.index);
        if jumps.iter().any(|j| j.index == 0 || j.index >= grid.len()) {
            return Err(Error::config("jump index out of range"));
        }
        Ok(Self {
            grid,
            values,
            interp,
            jumps,
        })
    }

    pub fn constant(c: f64, grid: Vec<f64>) -> Result<Self> {
        let values = vec![c; grid.len()];
        Self::new(grid, values, Interp::Linear)
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: Vec<f64>, interp: Interp, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values, interp)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn jumps(&self) -> &[JumpRecord] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end_time(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn start_value(&self) -> f64 {
        self.values[0]
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        eval(&self.grid, &self.values, self.interp, t)
    }

    pub fn left_limit_at(&self, t: f64) -> f64 {
        left_limit(&self.grid, &self.values, self.interp, &self.jumps, t)
    }

    /// Max over grid of |self - other| (grids must match).
    pub fn sup_distance(&self, other: &CadlagPath) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn check_same_grid(&self, other: &CadlagPath) -> Result<()> {
        if self.grid.len() != other.grid.len() {
            return Err(Error::GridMismatch(format!(
                "lengths {} vs {}",
                self.grid.len(),
                other.grid.len()
            )));
        }
        for (a, b) in self.grid.iter().zip(&other.grid) {
            if (a - b).abs() > GRID_EPS {
                return Err(Error::GridMismatch(format!("points {a} vs {b}")));
            }
        }
        Ok(())
    }

    /// Pointwise combination of two paths on a common grid. Jump records
    /// from both operands are carried; where both jump at the same index
    /// the combined left limit is `f` of the two left limits.
    pub fn zip_with(&self, other: &CadlagPath, f: impl Fn(f64, f64) -> f64) -> Result<CadlagPath> {
        self.check_same_grid(other)?;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let mut jumps = Vec::new();
        let mut ia = 0;
        let mut ib = 0;
        while ia < self.jumps.len() || ib < other.jumps.len() {
            let ja = self.jumps.get(ia);
            let jb = other.jumps.get(ib);
            let (idx, la, lb) = match (ja, jb) {
                (Some(a), Some(b)) if a.index == b.index => {
                    ia += 1;
                    ib += 1;
                    (a.index, a.left_limit, b.left_limit)
                }
                (Some(a), Some(b)) if a.index < b.index => {
                    ia += 1;
                    (a.index, a.left_limit, other.left_of(a.index))
                }
                (Some(_), Some(b)) => {
                    ib += 1;
                    (b.index, self.left_of(b.index), b.left_limit)
                }
                (Some(a), None) => {
                    ia += 1;
                    (a.index, a.left_limit, other.left_of(a.index))
                }
                (None, Some(b)) => {
                    ib += 1;
                    (b.index, self.left_of(b.index), b.left_limit)
                }
                (None, None) => unreachable!(),
            };
            jumps.push(JumpRecord {
                index: idx,
                left_limit: f(la, lb),
            });
        }
        let interp = if self.interp == Interp::CadlagStep || other.interp == Interp::CadlagStep {
            Interp::CadlagStep
        } else {
            Interp::Linear
        };
        CadlagPath::with_jumps(self.grid.clone(), values, interp, jumps)
    }

    /// Left limit at grid index `i` (recorded jump, stored value, or the
    /// previous value under step interpolation).
    pub fn left_of(&self, i: usize) -> f64 {
        if let Ok(k) = self.jumps.binary_search_by_key(&i, |j| j.index) {
            return self.jumps[k].left_limit;
        }
        match self.interp {
            Interp::Linear => self.values[i],
            Interp::CadlagStep => {
                if i == 0 {
                    self.values[0]
                } else {
                    self.values[i - 1]
                }
            }
        }
    }

    pub fn add(&self, other: &CadlagPath) -> Result<CadlagPath> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CadlagPath) -> Result<CadlagPath> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &CadlagPath) -> Result<CadlagPath> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> CadlagPath {
        let values = self.values.iter().map(|v| c * v).collect();
        let jumps = self
            .jumps
            .iter()
            .map(|j| JumpRecord {
                index: j.index,
                left_limit: c * j.left_limit,
            })
            .collect();
        CadlagPath {
            grid: self.grid.clone(),
            values,
            interp: self.interp,
            jumps,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> CadlagPath {
        let values = self.values.iter().map(|&v| f(v)).collect();
        let jumps = self
            .jumps
            .iter()
            .map(|j| JumpRecord {
                index: j.index,
                left_limit: f(j.left_limit),
            })
            .collect();
        CadlagPath {
            grid: self.grid.clone(),
            values,
            interp: self.interp,
            jumps,
        }
    }

    /// Resample onto `grid` (a refinement or any grid inside the horizon),
    /// evaluating under this path's interpolation and carrying genuine
    /// jumps to their new indices. Jump times absent from the new grid are
    /// dropped (their step is still visible in the resampled values).
    pub fn resampled_on(&self, grid: &[f64]) -> Result<CadlagPath> {
        check_grid(grid)?;
        let values: Vec<f64> = grid.iter().map(|&t| self.value_at(t)).collect();
        let mut jumps = Vec::new();
        for j in &self.jumps {
            let t = self.grid[j.index];
            if let Some(i) = grid_index_of(grid, t) {
                if i > 0 {
                    jumps.push(JumpRecord {
                        index: i,
                        left_limit: j.left_limit,
                    });
                }
            }
        }
        CadlagPath::with_jumps(grid.to_vec(), values, self.interp, jumps)
    }

    /// CSV serialization: header `t,value`, one row per grid point,
    /// LF line endings, full-precision decimal floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

/// Union of two grids with tolerance-based deduplication.
pub fn union_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => {
                if (x - y).abs() <= GRID_EPS {
                    i += 1;
                    j += 1;
                    x
                } else if x < y {
                    i += 1;
                    x
                } else {
                    j += 1;
                    y
                }
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if out.last().map_or(true, |&l| next > l + GRID_EPS) {
            out.push(next);
        }
    }
    out
}

/// Refine both paths to their union grid, each under its own interpolation.
pub fn on_common_grid(a: &CadlagPath, b: &CadlagPath) -> Result<(CadlagPath, CadlagPath)> {
    if a.check_same_grid(b).is_ok() {
        return Ok((a.clone(), b.clone()));
    }
    let g = union_grid(a.grid(), b.grid());
    Ok((a.resampled_on(&g)?, b.resampled_on(&g)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid4() -> Vec<f64> {
        vec![0.0, 1.0, 2.0, 3.0]
    }

    #[test]
    fn step_evaluation_is_right_continuous() {
        let p = CadlagPath::new(grid4(), vec![0.0, 1.0, 4.0, 9.0], Interp::CadlagStep).unwrap();
        assert_eq!(p.value_at(0.5), 0.0);
        assert_eq!(p.value_at(1.0), 1.0);
        assert_eq!(p.value_at(1.999), 1.0);
        assert_eq!(p.value_at(2.0), 4.0);
        assert_eq!(p.value_at(99.0), 9.0);
    }

    #[test]
    fn linear_evaluation_interpolates() {
        let p = CadlagPath::new(grid4(), vec![0.0, 2.0, 4.0, 6.0], Interp::Linear).unwrap();
        assert_eq!(p.value_at(0.5), 1.0);
        assert_eq!(p.value_at(2.5), 5.0);
    }

    #[test]
    fn left_limits_use_records_then_previous_point() {
        let p = CadlagPath::with_jumps(
            grid4(),
            vec![0.0, 5.0, 5.0, 5.0],
            Interp::CadlagStep,
            vec![JumpRecord {
                index: 1,
                left_limit: 0.25,
            }],
        )
        .unwrap();
        assert_eq!(p.left_limit_at(1.0), 0.25);
        assert_eq!(p.left_limit_at(2.0), 5.0);
        assert_eq!(p.left_limit_at(0.0), 0.0);
    }

    #[test]
    fn monotone_rejects_decreasing_values() {
        let err = MonotonePath::new(grid4(), vec![0.0, 1.0, 0.5, 2.0], Interp::CadlagStep);
        assert!(err.is_err());
    }

    #[test]
    fn grid_must_start_at_zero_and_increase() {
        assert!(CadlagPath::new(vec![0.5, 1.0], vec![0.0, 0.0], Interp::Linear).is_err());
        assert!(CadlagPath::new(vec![0.0, 0.0], vec![0.0, 0.0], Interp::Linear).is_err());
    }

    #[test]
    fn union_grid_merges_with_tolerance() {
        let g = union_grid(&[0.0, 1.0, 2.0], &[0.0, 0.5, 1.0 + 1e-12, 2.5]);
        assert_eq!(g, vec![0.0, 0.5, 1.0, 2.0, 2.5]);
    }

    #[test]
    fn resample_carries_jump_records() {
        let p = CadlagPath::with_jumps(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 3.0, 3.0],
            Interp::CadlagStep,
            vec![JumpRecord {
                index: 1,
                left_limit: 0.5,
            }],
        )
        .unwrap();
        let r = p.resampled_on(&[0.0, 0.5, 1.0, 1.5, 2.0]).unwrap();
        assert_eq!(r.values(), &[0.0, 0.0, 3.0, 3.0, 3.0]);
        assert_eq!(r.jumps(), &[JumpRecord { index: 2, left_limit: 0.5 }]);
    }

    #[test]
    fn uniform_grid_is_exact_multiples() {
        let g = uniform_grid(0.1, 1.0).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[7], 7.0 * 0.1);
        assert_eq!(*g.last().unwrap(), 10.0 * 0.1);
    }

    #[test]
    fn csv_round_trips_header_and_rows() {
        let p = CadlagPath::new(vec![0.0, 0.5], vec![1.0, -2.25], Interp::Linear).unwrap();
        assert_eq!(p.to_csv(), "t,value\n0,1\n0.5,-2.25\n");
    }
}
