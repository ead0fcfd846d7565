//! Test functions and weights, and a small textual syntax for them.
//!
//! A [`Profile`] is a sum of scaled [`Builder`] terms, written as
//! `term(+term)*` with `term = [coef*]kind[:arg,arg]`, for example
//! `const:1+gaussian:0,0.3` or `2*bump:0,0.5`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, Grid, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builder {
    Const(f64),
    /// 1 on cells whose center lies in `[a, b]`.
    Indicator { a: f64, b: f64 },
    /// `exp(-(x - center)^2 / (2 sigma^2))`, peak value 1.
    Gaussian { center: f64, sigma: f64 },
    /// `exp(-1 / (1 - ((x - center)/radius)^2))` inside the radius, 0 outside.
    SmoothBump { center: f64, radius: f64 },
    /// `max(log(1 / (|x| + eps)), 0)`.
    LogSpike { eps: f64 },
    /// +1 on the left half of the cube, -1 on the right half.
    Haar { cube: Cube },
    /// `|x|^alpha` at cell centers.
    Power { alpha: f64 },
    /// `x`.
    Linear,
}

impl Builder {
    pub fn build(&self, grid: &Grid) -> Result<GridFunction> {
        self.validate(grid)?;
        match *self {
            Builder::Const(c) => grid.constant(c),
            Builder::Indicator { a, b } => {
                grid.sample(|x| if x >= a && x <= b { 1.0 } else { 0.0 })
            }
            Builder::Gaussian { center, sigma } => {
                grid.sample(|x| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp())
            }
            Builder::SmoothBump { center, radius } => grid.sample(|x| smooth_bump(x, center, radius)),
            Builder::LogSpike { eps } => grid.sample(|x| (1.0 / (x.abs() + eps)).ln().max(0.0)),
            Builder::Haar { cube } => {
                let mut values = vec![0.0; grid.cells()];
                let half = cube.len / 2;
                for (k, i) in cube.cells().enumerate() {
                    values[i] = if k < half { 1.0 } else { -1.0 };
                }
                GridFunction::new(*grid, values)
            }
            Builder::Power { alpha } => grid.sample(|x| {
                if alpha == 0.0 {
                    1.0
                } else {
                    x.abs().powf(alpha)
                }
            }),
            Builder::Linear => grid.sample(|x| x),
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite")))
            }
        };
        match *self {
            Builder::Const(c) => finite("constant", c),
            Builder::Indicator { a, b } => {
                finite("a", a)?;
                finite("b", b)?;
                if a > b {
                    return Err(Error::InvalidParameter(format!("indicator [{a}, {b}] is empty")));
                }
                Ok(())
            }
            Builder::Gaussian { center, sigma } => {
                finite("center", center)?;
                positive("sigma", sigma)
            }
            Builder::SmoothBump { center, radius } => {
                finite("center", center)?;
                positive("radius", radius)
            }
            Builder::LogSpike { eps } => positive("eps", eps),
            Builder::Haar { cube } => {
                cube.check(grid)?;
                if cube.len < 2 || cube.len % 2 != 0 {
                    return Err(Error::InvalidParameter(
                        "haar cube needs an even number of cells".into(),
                    ));
                }
                Ok(())
            }
            Builder::Power { alpha } => finite("alpha", alpha),
            Builder::Linear => Ok(()),
        }
    }
}

pub fn smooth_bump(x: f64, center: f64, radius: f64) -> f64 {
    let t = (x - center) / radius;
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

impl fmt::Display for Builder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builder::Const(c) => write!(f, "const:{c}"),
            Builder::Indicator { a, b } => write!(f, "indicator:{a},{b}"),
            Builder::Gaussian { center, sigma } => write!(f, "gaussian:{center},{sigma}"),
            Builder::SmoothBump { center, radius } => write!(f, "bump:{center},{radius}"),
            Builder::LogSpike { eps } => write!(f, "logspike:{eps}"),
            Builder::Haar { cube } => write!(f, "haar:{},{}", cube.start, cube.len),
            Builder::Power { alpha } => write!(f, "power:{alpha}"),
            Builder::Linear => write!(f, "linear"),
        }
    }
}

impl FromStr for Builder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidParameter(format!("`{s}`: {e}")))
                })
                .collect::<Result<_>>()?
        };
        let want = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "`{kind}` takes {n} argument(s), got {}",
                    nums.len()
                )))
            }
        };
        let index = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("`{v}` is not a cell index")))
            }
        };
        Ok(match kind {
            "const" => {
                want(1)?;
                Builder::Const(nums[0])
            }
            "indicator" => {
                want(2)?;
                Builder::Indicator { a: nums[0], b: nums[1] }
            }
            "gaussian" => {
                want(2)?;
                Builder::Gaussian { center: nums[0], sigma: nums[1] }
            }
            "bump" => {
                want(2)?;
                Builder::SmoothBump { center: nums[0], radius: nums[1] }
            }
            "logspike" => {
                want(1)?;
                Builder::LogSpike { eps: nums[0] }
            }
            "haar" => {
                want(2)?;
                Builder::Haar {
                    cube: Cube::new(index(nums[0])?, index(nums[1])?),
                }
            }
            "power" => {
                want(1)?;
                Builder::Power { alpha: nums[0] }
            }
            "linear" | "x" => {
                want(0)?;
                Builder::Linear
            }
            other => {
                return Err(Error::InvalidParameter(format!("unknown builder `{other}`")));
            }
        })
    }
}

/// A linear combination of builder terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Profile {
    terms: Vec<(f64, Builder)>,
}

impl Profile {
    pub fn single(b: Builder) -> Self {
        Self {
            terms: vec![(1.0, b)],
        }
    }

    pub fn terms(&self) -> &[(f64, Builder)] {
        &self.terms
    }

    pub fn build(&self, grid: &Grid) -> Result<GridFunction> {
        let mut acc = vec![0.0; grid.cells()];
        for (c, b) in &self.terms {
            let f = b.build(grid)?;
            for (a, v) in acc.iter_mut().zip(f.values()) {
                *a += c * v;
            }
        }
        GridFunction::new(*grid, acc)
    }
}

impl From<Builder> for Profile {
    fn from(b: Builder) -> Self {
        Self::single(b)
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let terms = s
            .split('+')
            .map(|term| {
                let term = term.trim();
                match term.split_once('*') {
                    Some((c, b)) => {
                        let c = c.trim().parse::<f64>().map_err(|e| {
                            Error::InvalidParameter(format!("coefficient in `{term}`: {e}"))
                        })?;
                        Ok((c, b.parse()?))
                    }
                    None => Ok((1.0, term.parse()?)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if terms.is_empty() {
            return Err(Error::InvalidParameter("empty profile".into()));
        }
        Ok(Self { terms })
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (c, b)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str("+")?;
            }
            if *c != 1.0 {
                write!(f, "{c}*")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl TryFrom<String> for Profile {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Profile> for String {
    fn from(p: Profile) -> String {
        p.to_string()
    }
}
