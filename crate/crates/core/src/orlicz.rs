//! Logarithmic Young functions, Luxemburg-type Orlicz averages over cubes
//! and the BMO norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{sum_over, Cube, GridFunction};

/// Default relative bracket width for [`orlicz_average`].
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Cap on bisection steps once a bracket is found.
pub const MAX_BISECTIONS: usize = 200;
// Doubling/halving steps allowed while bracketing; covers the f64 exponent range.
const MAX_BRACKET_STEPS: usize = 2200;

/// `Phi(t) = t^p [log(e + t)]^a` with `p > 1`, `a >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungFunction {
    p: f64,
    a: f64,
}

impl YoungFunction {
    pub fn new(p: f64, a: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("Young exponent p must be > 1, got {p}")));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "log exponent a must be >= 0, got {a}"
            )));
        }
        Ok(Self { p, a })
    }

    /// Plain power `t^p`.
    pub fn power(p: f64) -> Result<Self> {
        Self::new(p, 0.0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Hölder conjugate `p / (p - 1)`.
    pub fn conjugate_exponent(&self) -> f64 {
        conjugate(self.p)
    }

    /// `Phi(t)` without the sign check; `t` must be nonnegative.
    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let pw = if self.p == 2.0 { t * t } else { t.powf(self.p) };
        if self.a == 0.0 || t == 0.0 {
            pw
        } else {
            pw * (std::f64::consts::E + t).ln().powf(self.a)
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidParameter(format!("Phi is defined on t >= 0, got {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    /// The `t*` with `Phi(t*) = 1`, by bisection. A constant `c` on any cube
    /// has Orlicz average `c / t*`.
    pub fn inverse_at_one(&self) -> f64 {
        let mut hi = 1.0;
        while self.eval_unchecked(hi) < 1.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval_unchecked(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (flo, fhi) = (self.eval_unchecked(lo), self.eval_unchecked(hi));
        if (1.0 - flo) < (fhi - 1.0) {
            lo
        } else {
            hi
        }
    }
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Result of [`orlicz_average`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrliczAverage {
    pub value: f64,
    /// Bisection steps after bracketing.
    pub iterations: usize,
    /// Final `(lo, hi)`: the cube average of `Phi(|f|/lo)` exceeds 1, at `hi` it does not.
    pub bracket: (f64, f64),
}

/// `||f||_{Phi,Q} = inf { lambda > 0 : avg_Q Phi(|f|/lambda) <= 1 }`.
///
/// The map `lambda -> avg_Q Phi(|f|/lambda)` is nonincreasing, so the
/// infimum is bracketed by doubling/halving from `max_Q |f|` and then
/// bisected until the bracket is narrower than `rel_tol * hi`. The upper
/// end of the bracket is returned. Returns 0 when `f` vanishes on `Q`.
pub fn orlicz_average(
    f: &GridFunction,
    cube: Cube,
    phi: &YoungFunction,
    rel_tol: f64,
) -> Result<OrliczAverage> {
    cube.check(f.grid())?;
    orlicz_average_slice(&f.values()[cube.cells()], phi, rel_tol)
}

/// [`orlicz_average`] on raw cell values (the cube is the whole slice).
pub fn orlicz_average_slice(values: &[f64], phi: &YoungFunction, rel_tol: f64) -> Result<OrliczAverage> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "rel_tol must lie in (0, 1e-3], got {rel_tol}"
        )));
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).filter(|&v| v != 0.0).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("Orlicz average (non-finite input)"));
    }
    let top = abs.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(OrliczAverage {
            value: 0.0,
            iterations: 0,
            bracket: (0.0, 0.0),
        });
    }
    let n = values.len() as f64;
    let mean_phi = |lambda: f64| -> Result<f64> {
        let s: f64 = abs.iter().map(|&v| phi.eval_unchecked(v / lambda)).sum();
        let s = s / n;
        if s.is_nan() {
            Err(Error::Overflow("Orlicz average"))
        } else {
            Ok(s)
        }
    };

    let (mut lo, mut hi);
    let start = mean_phi(top)?;
    let mut steps = 0;
    if start > 1.0 {
        lo = top;
        hi = 2.0 * top;
        while mean_phi(hi)? > 1.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > MAX_BRACKET_STEPS || !hi.is_finite() {
                return Err(Error::Overflow("Orlicz bracket"));
            }
        }
    } else {
        hi = top;
        lo = 0.5 * top;
        while mean_phi(lo)? <= 1.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > MAX_BRACKET_STEPS || lo == 0.0 {
                return Err(Error::Overflow("Orlicz bracket"));
            }
        }
    }

    let mut iterations = 0;
    while hi - lo > rel_tol * hi {
        if iterations == MAX_BISECTIONS {
            return Err(Error::NonConvergence {
                what: "Orlicz bisection",
                iterations,
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_phi(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(OrliczAverage {
        value: hi,
        iterations,
        bracket: (lo, hi),
    })
}

/// `avg_Q |b - avg_Q b|`.
pub fn mean_oscillation(b: &GridFunction, cube: Cube) -> Result<f64> {
    cube.check(b.grid())?;
    Ok(mean_oscillation_unchecked(b.values(), cube))
}

fn mean_oscillation_unchecked(values: &[f64], cube: Cube) -> f64 {
    let n = cube.len as f64;
    let mean = sum_over(values, cube) / n;
    values[cube.cells()].iter().map(|v| (v - mean).abs()).sum::<f64>() / n
}

/// `max_Q avg_Q |b - avg_Q b|` over the given cubes.
pub fn bmo_norm(b: &GridFunction, cubes: &[Cube]) -> Result<f64> {
    if cubes.is_empty() {
        return Err(Error::InvalidParameter("BMO norm needs at least one cube".into()));
    }
    for c in cubes {
        c.check(b.grid())?;
    }
    let osc = exec::map_range(cubes.len(), |k| mean_oscillation_unchecked(b.values(), cubes[k]));
    Ok(osc.into_iter().fold(0.0, f64::max))
}
