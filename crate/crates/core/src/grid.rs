//! Uniform 1-D grids, grid-aligned cubes and piecewise-constant functions.
//!
//! The real line is truncated to `[-L, L]` and split into `m` cells of
//! width `h = 2L/m`, with `m` a power of two so dyadic cubes align with
//! cells. Functions are constant on cells and vanish outside the domain;
//! all integrals are midpoint sums.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    cells: usize,
    cell_width: f64,
}

impl Grid {
    pub fn new(half_width: f64, cells: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if cells < 4 || !cells.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "cell count must be a power of two >= 4, got {cells}"
            )));
        }
        Ok(Self {
            half_width,
            cells,
            cell_width: 2.0 * half_width / cells as f64,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    /// Center of lattice cell `t`. Indices outside `0..m` address the
    /// continuation of the lattice beyond the domain.
    #[inline]
    pub fn lattice_point(&self, t: i64) -> f64 {
        -self.half_width + (t as f64 + 0.5) * self.cell_width
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.lattice_point(i as i64)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }

    /// Index of the cell containing `x`, if it lies in the domain.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let t = ((x + self.half_width) / self.cell_width).floor();
        (t >= 0.0 && t < self.cells as f64).then_some(t as usize)
    }

    pub fn whole(&self) -> Cube {
        Cube {
            start: 0,
            len: self.cells,
        }
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction {
            grid: *self,
            values: vec![0.0; self.cells],
        }
    }

    pub fn constant(&self, c: f64) -> Result<GridFunction> {
        GridFunction::new(*self, vec![c; self.cells])
    }

    /// Sample `f` at the cell centers.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(*self, self.centers().into_iter().map(f).collect())
    }
}

/// A grid-aligned closed interval: cells `start .. start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub start: usize,
    pub len: usize,
}

impl Cube {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn cells(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.cells().contains(&i)
    }

    pub fn is_dyadic(&self) -> bool {
        self.len.is_power_of_two() && self.start.is_multiple_of(self.len)
    }

    /// Physical endpoints `[a, b]`.
    pub fn endpoints(&self, grid: &Grid) -> (f64, f64) {
        let h = grid.cell_width();
        let a = -grid.half_width() + self.start as f64 * h;
        (a, a + self.len as f64 * h)
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.len == 0 || self.end() > grid.cells() {
            return Err(Error::CubeOutOfRange {
                start: self.start,
                len: self.len,
                cells: grid.cells(),
            });
        }
        Ok(())
    }

    /// The two dyadic children, or `None` for a single cell.
    pub fn halves(&self) -> Option<(Cube, Cube)> {
        (self.len >= 2 && self.len.is_multiple_of(2)).then(|| {
            let half = self.len / 2;
            (Cube::new(self.start, half), Cube::new(self.start + half, half))
        })
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cells[{}..{})", self.start, self.end())
    }
}

/// Every dyadic cube with `min_cells <= len <= max_cells`.
///
/// An empty range (`min_cells > max_cells`) gives an empty list.
pub fn dyadic_cubes(grid: &Grid, min_cells: usize, max_cells: usize) -> Result<Vec<Cube>> {
    check_level_bounds(grid, min_cells, max_cells)?;
    let mut out = Vec::new();
    let mut len = min_cells;
    while len <= max_cells {
        out.extend((0..grid.cells() / len).map(|k| Cube::new(k * len, len)));
        len *= 2;
    }
    Ok(out)
}

fn check_level_bounds(grid: &Grid, min_cells: usize, max_cells: usize) -> Result<()> {
    for (name, v) in [("min_cells", min_cells), ("max_cells", max_cells)] {
        if !v.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "{name} must be a power of two, got {v}"
            )));
        }
    }
    if max_cells > grid.cells() && min_cells <= max_cells {
        return Err(Error::InvalidParameter(format!(
            "max_cells {max_cells} exceeds the grid size {}",
            grid.cells()
        )));
    }
    Ok(())
}

/// Finite stand-in for "all cubes" in a supremum.
///
/// Any finite family only bounds the true supremum from below, so every
/// constant is reported together with the family that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CubeFamily {
    /// Dyadic cubes with side between `min_cells` and `max_cells` cells.
    Dyadic { min_cells: usize, max_cells: usize },
    /// Dyadic cubes plus the family translated by half a side length.
    Shifted { min_cells: usize, max_cells: usize },
}

impl CubeFamily {
    /// All dyadic cubes of the grid.
    pub fn dyadic(grid: &Grid) -> Self {
        CubeFamily::Dyadic {
            min_cells: 1,
            max_cells: grid.cells(),
        }
    }

    pub fn shifted(grid: &Grid) -> Self {
        CubeFamily::Shifted {
            min_cells: 1,
            max_cells: grid.cells(),
        }
    }

    pub fn cubes(&self, grid: &Grid) -> Result<Vec<Cube>> {
        match *self {
            CubeFamily::Dyadic {
                min_cells,
                max_cells,
            } => dyadic_cubes(grid, min_cells, max_cells),
            CubeFamily::Shifted {
                min_cells,
                max_cells,
            } => {
                let mut out = dyadic_cubes(grid, min_cells, max_cells)?;
                let mut len = min_cells.max(2);
                while len <= max_cells {
                    let off = len / 2;
                    let mut start = off;
                    while start + len <= grid.cells() {
                        out.push(Cube::new(start, len));
                        start += len;
                    }
                    len *= 2;
                }
                Ok(out)
            }
        }
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        match self {
            CubeFamily::Dyadic {
                min_cells,
                max_cells,
            } => format!("dyadic[{min_cells}..={max_cells}]"),
            CubeFamily::Shifted {
                min_cells,
                max_cells,
            } => format!("dyadic+half-shift[{min_cells}..={max_cells}]"),
        }
    }
}

/// A piecewise-constant function on a [`Grid`]; zero outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.cells(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value {} in cell {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Build without the finiteness scan; the caller guarantees it.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a lattice index, zero outside the domain.
    #[inline]
    pub fn at(&self, t: i64) -> f64 {
        if t < 0 || t as usize >= self.values.len() {
            0.0
        } else {
            self.values[t as usize]
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn abs(&self) -> Self {
        Self::from_parts(self.grid, self.values.iter().map(|v| v.abs()).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|f(x_{i+1}) - f(x_i)| / h`, with the zero extension at both
    /// ends included. Bounds `|f(x + k h) - f(x)| <= |k| h` times this value.
    pub fn max_slope(&self) -> f64 {
        let h = self.grid.cell_width();
        (-1..self.values.len() as i64)
            .map(|t| (self.at(t + 1) - self.at(t)).abs() / h)
            .fold(0.0, f64::max)
    }

    /// Indices of cells where the function is nonzero.
    pub fn support(&self) -> Option<Cube> {
        let first = self.values.iter().position(|&v| v != 0.0)?;
        let last = self.values.iter().rposition(|&v| v != 0.0)?;
        Some(Cube::new(first, last - first + 1))
    }

    /// `sup { |x| : f(x) != 0 }` measured to the outer cell edges.
    pub fn support_radius(&self) -> f64 {
        match self.support() {
            None => 0.0,
            Some(c) => {
                let (a, b) = c.endpoints(&self.grid);
                a.abs().max(b.abs())
            }
        }
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Translate by whole cells: `g_i = f_{i+k}`, i.e. `g(x) = f(x + k h)`.
    /// Cells shifted in from outside the domain are zero.
    pub fn shift(&self, k_cells: i64) -> Self {
        let values = (0..self.values.len() as i64)
            .map(|i| self.at(i + k_cells))
            .collect();
        Self::from_parts(self.grid, values)
    }

    /// Write as CSV with header `x,value`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", self.grid.center(i), v)?;
        }
        Ok(())
    }

    /// Read the format produced by [`write_csv`](Self::write_csv); the grid
    /// is recovered from the cell centers.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidParameter(e.to_string()))?;
            if n == 0 {
                if line.trim() != "x,value" {
                    return Err(Error::InvalidParameter("missing `x,value` header".into()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidParameter(format!("bad CSV row {n}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("row {n}: {e}")))
            };
            xs.push(parse(x)?);
            vs.push(parse(v)?);
        }
        if xs.len() < 4 {
            return Err(Error::InvalidParameter("too few rows".into()));
        }
        let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let grid = Grid::new(h * xs.len() as f64 / 2.0, xs.len())?;
        Self::new(grid, vs)
    }
}

/// `(1/len) * sum_{i in Q} f_i`.
pub fn average(f: &GridFunction, cube: Cube) -> Result<f64> {
    cube.check(f.grid())?;
    Ok(sum_over(f.values(), cube) / cube.len as f64)
}

#[inline]
pub(crate) fn sum_over(values: &[f64], cube: Cube) -> f64 {
    values[cube.cells()].iter().sum()
}

/// `(sum_i |f_i|^p w_i h)^{1/p}` over `region` (whole grid when `None`).
pub fn lp_norm_weighted(
    f: &GridFunction,
    w: &GridFunction,
    p: f64,
    region: Option<Cube>,
) -> Result<f64> {
    f.same_grid(w)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let cube = region.unwrap_or_else(|| f.grid().whole());
    cube.check(f.grid())?;
    if let Some(i) = cube.cells().find(|&i| w.values()[i] < 0.0) {
        return Err(Error::InvalidWeight(format!("negative weight in cell {i}")));
    }
    Ok(lp_norm_unchecked(f.values(), w.values(), p, cube, f.grid().cell_width()))
}

pub(crate) fn lp_norm_unchecked(f: &[f64], w: &[f64], p: f64, cube: Cube, h: f64) -> f64 {
    let s: f64 = cube
        .cells()
        .map(|i| pow_abs(f[i], p) * w[i])
        .sum::<f64>()
        * h;
    if p == 1.0 {
        s
    } else if p == 2.0 {
        s.sqrt()
    } else {
        s.powf(1.0 / p)
    }
}

#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}
