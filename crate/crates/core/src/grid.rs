//! Uniform box grids and sampled functions on them.
//!
//! Cells are closed boxes indexed in row-major order with axis 0 varying
//! fastest; index k along an axis covers `[lo + k w, lo + (k+1) w]` with
//! `w = (hi - lo) / n`. The grid spans the bounding box of the ambient
//! region; for disconnected ambients some cells lie outside the dynamics
//! and simply never receive mass.

use crate::error::{Error, Result};
use crate::map::Ambient;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    n_per_axis: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Grid {
    pub fn new(bounds: &[(f64, f64)], n_per_axis: usize) -> Result<Grid> {
        if bounds.is_empty() || n_per_axis == 0 {
            return Err(Error::Invalid("grid needs dim >= 1 and n >= 1".into()));
        }
        for &(lo, hi) in bounds {
            if !(hi > lo) {
                return Err(Error::Invalid(format!("degenerate grid axis [{lo}, {hi}]")));
            }
        }
        Ok(Grid {
            dim: bounds.len(),
            n_per_axis,
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
        })
    }

    pub fn from_ambient(ambient: &Ambient, n_per_axis: usize) -> Result<Grid> {
        Grid::new(&ambient.bounding_box(), n_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn total_cells(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| (a, b)).collect()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n_per_axis as f64
    }

    pub fn max_cell_width(&self) -> f64 {
        (0..self.dim).map(|k| self.cell_width(k)).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|k| self.cell_width(k)).product()
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let mut rest = idx;
        (0..self.dim)
            .map(|_| {
                let m = rest % self.n_per_axis;
                rest /= self.n_per_axis;
                m
            })
            .collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .rev()
            .fold(0, |acc, &m| acc * self.n_per_axis + m)
    }

    pub fn cell_bounds(&self, idx: usize) -> Vec<(f64, f64)> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let w = self.cell_width(k);
                (self.lo[k] + m as f64 * w, self.lo[k] + (m + 1) as f64 * w)
            })
            .collect()
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        self.cell_bounds(idx)
            .iter()
            .map(|&(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Cell containing x, or None outside the grid box. Points on interior
    /// cell faces land in the higher cell.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut multi = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            if x[k] < self.lo[k] || x[k] > self.hi[k] {
                return None;
            }
            let w = self.cell_width(k);
            let m = (((x[k] - self.lo[k]) / w).floor() as isize)
                .clamp(0, self.n_per_axis as isize - 1) as usize;
            multi.push(m);
        }
        Some(self.flat_index(&multi))
    }
}

/// Real-valued function sampled per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.total_cells() {
            return Err(Error::Invalid(format!(
                "value count {} != cell count {}",
                values.len(),
                grid.total_cells()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: Grid, v: f64) -> GridFunction {
        let n = grid.total_cells();
        GridFunction { grid, values: vec![v; n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> GridFunction {
        let values = (0..grid.total_cells())
            .map(|i| f(&grid.cell_center(i)))
            .collect();
        GridFunction { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        (self
            .values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            * self.grid.cell_volume())
        .powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}
