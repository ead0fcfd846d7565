//! Hardy–Littlewood maximal operator, smoothly truncated singular integrals,
//! the maximal truncation and the commutator `[b, T^eta]`.
//!
//! All sums are direct `O(m^2)` midpoint quadratures, evaluated row by row
//! through [`exec`](crate::exec). Rows are addressed by lattice index so an
//! operator can be evaluated just outside the domain, which the shift
//! probes need.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{Grid, GridFunction};

/// A Calderón–Zygmund kernel on the line, with its size and smoothness
/// constants: `|K(x,y)| <= C_size / |x-y|`, `|d/dx K(x,y)| <= C_smooth / |x-y|^2`.
pub trait Kernel: Sync {
    fn eval(&self, x: f64, y: f64) -> f64;
    fn size_constant(&self) -> f64;
    fn smoothness_constant(&self) -> f64;
    fn name(&self) -> &'static str;
}

/// `K(x, y) = 1 / (pi (x - y))`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Hilbert;

impl Kernel for Hilbert {
    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        1.0 / (PI * (x - y))
    }
    fn size_constant(&self) -> f64 {
        1.0 / PI
    }
    fn smoothness_constant(&self) -> f64 {
        1.0 / PI
    }
    fn name(&self) -> &'static str {
        "hilbert"
    }
}

/// Serializable kernel selector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    Hilbert,
}

impl Kernel for KernelSpec {
    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            KernelSpec::Hilbert => Hilbert.eval(x, y),
        }
    }
    fn size_constant(&self) -> f64 {
        match self {
            KernelSpec::Hilbert => Hilbert.size_constant(),
        }
    }
    fn smoothness_constant(&self) -> f64 {
        match self {
            KernelSpec::Hilbert => Hilbert.smoothness_constant(),
        }
    }
    fn name(&self) -> &'static str {
        match self {
            KernelSpec::Hilbert => Hilbert.name(),
        }
    }
}

/// Cubic smoothstep cutoff: 0 on `[0, 1]`, 1 on `[2, inf)`, C^1 in between.
#[inline]
pub fn cutoff_psi(r: f64) -> f64 {
    if r <= 1.0 {
        0.0
    } else if r >= 2.0 {
        1.0
    } else {
        let t = r - 1.0;
        t * t * (3.0 - 2.0 * t)
    }
}

/// Smooth truncation at radius `eta`: `K_eta(x,y) = psi(|x-y|/eta) K(x,y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    eta: f64,
}

impl TruncationSpec {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
        }
        Ok(Self { eta })
    }

    /// `eta = cells * h` on `grid`.
    pub fn in_cells(grid: &Grid, cells: f64) -> Result<Self> {
        Self::new(cells * grid.cell_width())
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[inline]
    pub fn kernel<K: Kernel + ?Sized>(&self, kernel: &K, x: f64, y: f64) -> f64 {
        let psi = cutoff_psi((x - y).abs() / self.eta);
        if psi == 0.0 {
            0.0
        } else {
            psi * kernel.eval(x, y)
        }
    }

    /// The truncation must span at least two cells.
    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.eta < 2.0 * grid.cell_width() * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "eta = {} is below two cells (h = {})",
                self.eta,
                grid.cell_width()
            )));
        }
        Ok(())
    }
}

/// `Mf(x_i) = max avg_Q |f|` over every grid interval `Q` containing cell `i`.
///
/// For each left end `l` the suffix maximum over right ends `r >= i` of the
/// average on `[l, r]` is the best interval starting at `l` that still
/// contains `i`; merging these over `l` gives the exact discrete supremum in
/// `O(m^2)`.
pub fn maximal_fn(f: &GridFunction) -> GridFunction {
    let m = f.len();
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0.0);
    let mut s = 0.0;
    for v in f.values() {
        s += v.abs();
        prefix.push(s);
    }
    let mut out = exec::max_merge(m, m, |l, acc| {
        let mut best = f64::NEG_INFINITY;
        for r in (l..m).rev() {
            let avg = (prefix[r + 1] - prefix[l]) / (r + 1 - l) as f64;
            if avg > best {
                best = avg;
            }
            if best > acc[r] {
                acc[r] = best;
            }
        }
    });
    // The one-cell interval, without prefix-sum rounding.
    for (o, v) in out.iter_mut().zip(f.values()) {
        *o = o.max(v.abs());
    }
    GridFunction::from_parts(*f.grid(), out)
}

/// `(T^eta f)(x_i) = sum_j K_eta(x_i, x_j) f_j h`.
pub fn apply_truncated<K: Kernel + ?Sized>(
    f: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
) -> Result<GridFunction> {
    let values = apply_truncated_at(f, trunc, kernel, 0..f.len() as i64)?;
    Ok(GridFunction::from_parts(*f.grid(), values))
}

/// [`apply_truncated`] evaluated at lattice points `rows`, which may extend
/// beyond the domain.
pub fn apply_truncated_at<K: Kernel + ?Sized>(
    f: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
    rows: Range<i64>,
) -> Result<Vec<f64>> {
    let grid = f.grid();
    trunc.check(grid)?;
    let h = grid.cell_width();
    let fv = f.values();
    let centers = grid.centers();
    let start = rows.start;
    Ok(exec::map_range(rows_len(&rows), |r| {
        let x = grid.lattice_point(start + r as i64);
        let mut acc = 0.0;
        for (y, &fj) in centers.iter().zip(fv) {
            if fj != 0.0 {
                acc += trunc.kernel(kernel, x, *y) * fj;
            }
        }
        acc * h
    }))
}

fn rows_len(rows: &Range<i64>) -> usize {
    (rows.end - rows.start).max(0) as usize
}

/// `eta_j = 2^j h` for `j = 1 ..= log2(m)`.
pub fn reference_eta_grid(grid: &Grid) -> Vec<f64> {
    let levels = grid.cells().trailing_zeros();
    (1..=levels)
        .map(|j| (1u64 << j) as f64 * grid.cell_width())
        .collect()
}

/// `T#f(x_i) = max_eta |sum_{|x_i - x_j| > eta} K(x_i, x_j) f_j h|` with a
/// sharp cutoff, the maximum taken over `etas`.
pub fn maximal_truncation<K: Kernel + ?Sized>(
    f: &GridFunction,
    etas: &[f64],
    kernel: &K,
) -> Result<GridFunction> {
    let grid = f.grid();
    if etas.is_empty() {
        return Err(Error::InvalidParameter("empty eta grid".into()));
    }
    for &eta in etas {
        TruncationSpec::new(eta)?.check(grid)?;
    }
    let mut sorted = etas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let h = grid.cell_width();
    let m = f.len() as i64;
    let values = exec::map_range(f.len(), |i| {
        let i = i as i64;
        let x = grid.lattice_point(i);
        let mut best = 0.0f64;
        let mut acc = 0.0f64;
        let mut next = 0;
        // Sweep distances from far to near; after adding distance k the
        // accumulator holds the sum over |x - y| >= k h.
        for k in (1..m).rev() {
            let d = k as f64 * h;
            while next < sorted.len() && d <= sorted[next] {
                best = best.max(acc.abs());
                next += 1;
            }
            if next == sorted.len() {
                break;
            }
            for j in [i + k, i - k] {
                let fj = f.at(j);
                if fj != 0.0 {
                    acc += kernel.eval(x, grid.lattice_point(j)) * fj;
                }
            }
        }
        while next < sorted.len() {
            best = best.max(acc.abs());
            next += 1;
        }
        best * h
    });
    Ok(GridFunction::from_parts(*grid, values))
}

/// `([b, T^eta] f)(x_i) = sum_j (b_i - b_j) K_eta(x_i, x_j) f_j h`.
pub fn commutator<K: Kernel + ?Sized>(
    b: &GridFunction,
    f: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
) -> Result<GridFunction> {
    let values = commutator_at(b, f, trunc, kernel, 0..f.len() as i64)?;
    Ok(GridFunction::from_parts(*f.grid(), values))
}

/// [`commutator`] at lattice points `rows`; `b` is zero off the domain.
pub fn commutator_at<K: Kernel + ?Sized>(
    b: &GridFunction,
    f: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
    rows: Range<i64>,
) -> Result<Vec<f64>> {
    b.same_grid(f)?;
    let grid = f.grid();
    trunc.check(grid)?;
    let h = grid.cell_width();
    let (bv, fv) = (b.values(), f.values());
    let centers = grid.centers();
    let start = rows.start;
    Ok(exec::map_range(rows_len(&rows), |r| {
        let t = start + r as i64;
        let x = grid.lattice_point(t);
        let bx = b.at(t);
        let mut acc = 0.0;
        for ((y, &fj), &bj) in centers.iter().zip(fv).zip(bv) {
            if fj != 0.0 && bx != bj {
                acc += (bx - bj) * trunc.kernel(kernel, x, *y) * fj;
            }
        }
        acc * h
    }))
}

/// `b T^eta f - T^eta(b f)`, the second route to the commutator.
pub fn commutator_by_products<K: Kernel + ?Sized>(
    b: &GridFunction,
    f: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
) -> Result<GridFunction> {
    let tf = apply_truncated(f, trunc, kernel)?;
    let tbf = apply_truncated(&b.mul(f)?, trunc, kernel)?;
    b.mul(&tf)?.zip_with(&tbf, |a, c| a - c)
}

/// Empirical constant in `|K_eta(x + s, y) - K_eta(x, y)| <= C |s| / |x - y|^2`
/// over all grid pairs with `|x - y| >= 2|s|`, for shifts `s = k h`.
pub fn measure_regularity_constant<K: Kernel + ?Sized>(
    grid: &Grid,
    trunc: &TruncationSpec,
    kernel: &K,
    shift_cells: &[i64],
) -> f64 {
    let h = grid.cell_width();
    let m = grid.cells() as i64;
    let per_row = exec::map_range(grid.cells(), |i| {
        let x = grid.center(i);
        let mut best = 0.0f64;
        for &k in shift_cells {
            if k == 0 {
                continue;
            }
            let s = k as f64 * h;
            let xs = grid.lattice_point(i as i64 + k);
            for j in 0..m {
                let y = grid.lattice_point(j);
                let d = (x - y).abs();
                if d < 2.0 * s.abs() {
                    continue;
                }
                let diff = (trunc.kernel(kernel, xs, y) - trunc.kernel(kernel, x, y)).abs();
                best = best.max(diff * d * d / s.abs());
            }
        }
        best
    });
    per_row.into_iter().fold(0.0, f64::max)
}

/// `max_i |T^eta f(x_i)| / (Mf(x_i) + T#f(x_i) + guard)`.
pub fn domination_ratio<K: Kernel + ?Sized>(
    f: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
    etas: &[f64],
) -> Result<f64> {
    let tf = apply_truncated(f, trunc, kernel)?;
    let mf = maximal_fn(f);
    let sharp = maximal_truncation(f, etas, kernel)?;
    Ok(tf
        .values()
        .iter()
        .zip(mf.values())
        .zip(sharp.values())
        .map(|((t, m), s)| t.abs() / (m + s + 1e-300))
        .fold(0.0, f64::max))
}
