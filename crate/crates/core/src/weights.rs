//! Weights and the sup-over-cubes constants: A_p, two-weight A_p and the
//! logarithmic bump conditions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{sum_over, Cube, CubeFamily, Grid, GridFunction};
use crate::operators::maximal_fn;
use crate::orlicz::{conjugate, orlicz_average_slice, YoungFunction};

/// A pair `(u, v)`: `u >= 0` and positive somewhere, `v > 0` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    u: GridFunction,
    v: GridFunction,
}

impl WeightPair {
    pub fn new(u: GridFunction, v: GridFunction) -> Result<Self> {
        u.same_grid(&v)?;
        check_nonnegative(&u, "u")?;
        if u.max() <= 0.0 {
            return Err(Error::InvalidWeight("u vanishes identically".into()));
        }
        check_positive(&v, "v")?;
        Ok(Self { u, v })
    }

    pub fn u(&self) -> &GridFunction {
        &self.u
    }

    pub fn v(&self) -> &GridFunction {
        &self.v
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `(c^p u, c^p v)`.
    pub fn scaled(&self, c: f64, p: f64) -> Result<Self> {
        let s = c.powf(p);
        Self::new(self.u.scale(s)?, self.v.scale(s)?)
    }
}

pub(crate) fn check_positive(w: &GridFunction, name: &str) -> Result<()> {
    match w.values().iter().position(|&x| x <= 0.0) {
        Some(i) => Err(Error::InvalidWeight(format!(
            "{name} must be positive, cell {i} holds {}",
            w.values()[i]
        ))),
        None => Ok(()),
    }
}

pub(crate) fn check_nonnegative(w: &GridFunction, name: &str) -> Result<()> {
    match w.values().iter().position(|&x| x < 0.0) {
        Some(i) => Err(Error::InvalidWeight(format!(
            "{name} must be nonnegative, cell {i} holds {}",
            w.values()[i]
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpPreset {
    /// `(avg_Q u) ||v^{-1/p}||_{L^{p'}(log L)^{p'-1+delta}, Q}`.
    Max,
    /// Exponents `p-1+delta` and `p'-1+delta` on both sides.
    Czo,
    /// Exponents `2p-1+delta` and `2p'-1+delta` on both sides.
    Comm,
    Custom,
}

impl fmt::Display for BumpPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BumpPreset::Max => "max",
            BumpPreset::Czo => "czo",
            BumpPreset::Comm => "comm",
            BumpPreset::Custom => "custom",
        })
    }
}

impl FromStr for BumpPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(BumpPreset::Max),
            "czo" => Ok(BumpPreset::Czo),
            "comm" => Ok(BumpPreset::Comm),
            "custom" => Ok(BumpPreset::Custom),
            other => Err(Error::InvalidParameter(format!("unknown bump preset `{other}`"))),
        }
    }
}

/// Exponents of a bump condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub p: f64,
    pub delta: f64,
    pub preset: BumpPreset,
    /// Log exponent on the `u` side; unused by [`BumpPreset::Max`].
    pub a_left: f64,
    /// Log exponent on the `v` side.
    pub a_right: f64,
}

impl BumpSpec {
    pub fn preset(preset: BumpPreset, p: f64, delta: f64) -> Result<Self> {
        check_p(p)?;
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let q = conjugate(p);
        let (a_left, a_right) = match preset {
            BumpPreset::Max => (0.0, q - 1.0 + delta),
            BumpPreset::Czo => (p - 1.0 + delta, q - 1.0 + delta),
            BumpPreset::Comm => (2.0 * p - 1.0 + delta, 2.0 * q - 1.0 + delta),
            BumpPreset::Custom => {
                return Err(Error::InvalidParameter(
                    "custom bumps need explicit exponents".into(),
                ))
            }
        };
        Ok(Self {
            p,
            delta,
            preset,
            a_left,
            a_right,
        })
    }

    pub fn custom(p: f64, a_left: f64, a_right: f64) -> Result<Self> {
        check_p(p)?;
        for a in [a_left, a_right] {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "log exponents must be >= 0, got {a}"
                )));
            }
        }
        Ok(Self {
            p,
            delta: 0.0,
            preset: BumpPreset::Custom,
            a_left,
            a_right,
        })
    }

    pub fn left_young(&self) -> Result<YoungFunction> {
        YoungFunction::new(self.p, self.a_left)
    }

    pub fn right_young(&self) -> Result<YoungFunction> {
        YoungFunction::new(conjugate(self.p), self.a_right)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be > 1, got {p}")))
    }
}

/// Physical endpoints of a cube, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

/// Evidence for a supremum over a cube family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpReport {
    pub constant: f64,
    pub argmax: Interval,
    pub argmax_cube: Cube,
    pub family: String,
    pub preset: String,
    pub p: f64,
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_cube: Option<Vec<f64>>,
}

impl BumpReport {
    /// Drop the per-cube values (they can be large).
    pub fn without_per_cube(mut self) -> Self {
        self.per_cube = None;
        self
    }
}

struct Sup {
    value: f64,
    cube: Cube,
    per_cube: Vec<f64>,
}

fn sup_over<F>(grid: &Grid, family: &CubeFamily, eval: F) -> Result<Sup>
where
    F: Fn(Cube) -> Result<f64> + Sync + Send,
{
    let cubes = family.cubes(grid)?;
    if cubes.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "cube family {} is empty on this grid",
            family.id()
        )));
    }
    let per_cube = exec::try_map_range(cubes.len(), |k| eval(cubes[k]))?;
    let mut best = 0;
    for (k, v) in per_cube.iter().enumerate() {
        if *v > per_cube[best] {
            best = k;
        }
    }
    Ok(Sup {
        value: per_cube[best],
        cube: cubes[best],
        per_cube,
    })
}

fn report(grid: &Grid, family: &CubeFamily, sup: Sup, preset: &str, p: f64, delta: Option<f64>) -> BumpReport {
    let (a, b) = sup.cube.endpoints(grid);
    BumpReport {
        constant: sup.value,
        argmax: Interval { a, b },
        argmax_cube: sup.cube,
        family: family.id(),
        preset: preset.to_string(),
        p,
        delta,
        per_cube: Some(sup.per_cube),
    }
}

/// `sup_Q (avg_Q w)(avg_Q w^{1-p'})^{p-1}`.
pub fn ap_constant(w: &GridFunction, p: f64, family: &CubeFamily) -> Result<BumpReport> {
    check_p(p)?;
    check_positive(w, "w")?;
    two_weight_ap_unchecked(w, w, p, family).map(|mut r| {
        r.preset = "ap".into();
        r
    })
}

/// `sup_Q (avg_Q u)(avg_Q v^{1-p'})^{p-1}`.
pub fn two_weight_ap(pair: &WeightPair, p: f64, family: &CubeFamily) -> Result<BumpReport> {
    check_p(p)?;
    two_weight_ap_unchecked(pair.u(), pair.v(), p, family)
}

fn two_weight_ap_unchecked(
    u: &GridFunction,
    v: &GridFunction,
    p: f64,
    family: &CubeFamily,
) -> Result<BumpReport> {
    let dual_exp = 1.0 - conjugate(p);
    let dual: Vec<f64> = v.values().iter().map(|x| x.powf(dual_exp)).collect();
    let uv = u.values();
    let sup = sup_over(u.grid(), family, |q| {
        let n = q.len as f64;
        Ok(sum_over(uv, q) / n * (sum_over(&dual, q) / n).powf(p - 1.0))
    })?;
    Ok(report(u.grid(), family, sup, "two_weight_ap", p, None))
}

/// `sup_Q F_left(Q) ||v^{-1/p}||_{L^{p'}(log L)^{a_right}, Q}` where the
/// left factor is `avg_Q u` for [`BumpPreset::Max`] and
/// `||u^{1/p}||_{L^p(log L)^{a_left}, Q}` otherwise.
pub fn bump_constant(
    pair: &WeightPair,
    spec: &BumpSpec,
    family: &CubeFamily,
    rel_tol: f64,
) -> Result<BumpReport> {
    let p = spec.p;
    let right = spec.right_young()?;
    let left = match spec.preset {
        BumpPreset::Max => None,
        _ => Some(spec.left_young()?),
    };
    let u_root: Vec<f64> = pair.u().values().iter().map(|x| x.powf(1.0 / p)).collect();
    let v_root: Vec<f64> = pair.v().values().iter().map(|x| x.powf(-1.0 / p)).collect();
    let uv = pair.u().values();
    let sup = sup_over(pair.grid(), family, |q| {
        let l = match &left {
            None => sum_over(uv, q) / q.len as f64,
            Some(phi) => orlicz_average_slice(&u_root[q.cells()], phi, rel_tol)?.value,
        };
        if l == 0.0 {
            return Ok(0.0);
        }
        let r = orlicz_average_slice(&v_root[q.cells()], &right, rel_tol)?.value;
        Ok(l * r)
    })?;
    let delta = (spec.preset != BumpPreset::Custom).then_some(spec.delta);
    Ok(report(pair.grid(), family, sup, &spec.preset.to_string(), p, delta))
}

/// `M^k u`, the k-fold composition of the maximal operator.
pub fn iterate_maximal(u: &GridFunction, k: usize) -> Result<GridFunction> {
    if k == 0 {
        return Err(Error::InvalidParameter("iteration count must be positive".into()));
    }
    check_nonnegative(u, "u")?;
    let mut out = maximal_fn(u);
    for _ in 1..k {
        out = maximal_fn(&out);
    }
    Ok(out)
}

/// `floor(2p) + 1`, the iteration count making `(u, M^k u)` a bump pair.
pub fn bump_iterations(p: f64) -> usize {
    (2.0 * p).floor() as usize + 1
}
