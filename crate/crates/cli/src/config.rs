//! Experiment configuration. Every field is optional on input; `resolve`
//! fills the defaults so the copy embedded in a report is complete and can
//! be fed back through `--config`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bumplab::weights::{bump_iterations, iterate_maximal};
use bumplab::{BumpPreset, BumpSpec, Cube, CubeFamily, Grid, GridFunction, KernelSpec, Profile};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub bump: BumpConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub orlicz: OrliczConfig,
    #[serde(default)]
    pub probes: ProbesConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub u: Option<Profile>,
    pub v: Option<WeightSpec>,
    /// Iteration count for `weights gen`; defaults to `floor(2p) + 1`.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub p: Option<f64>,
    pub delta: Option<f64>,
    pub preset: Option<BumpPreset>,
    pub a_left: Option<f64>,
    pub a_right: Option<f64>,
    pub family: Option<CubeFamily>,
    pub rel_tol: Option<f64>,
    pub per_cube: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kernel: Option<KernelSpec>,
    pub eta_cells: Option<f64>,
    pub op: Option<OpKind>,
    pub f: Option<Profile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub b: Option<Profile>,
    /// The non-CMO comparison symbol for `compare`.
    pub b_bmo: Option<Profile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrliczConfig {
    pub f: Option<Profile>,
    pub p: Option<f64>,
    pub a: Option<f64>,
    pub cube: Option<Cube>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    #[serde(default)]
    pub kr: KrConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrConfig {
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub n_list: Option<Vec<f64>>,
    pub shift_list: Option<Vec<i64>>,
    pub allow_large_shift: Option<bool>,
    /// Radius for the pointwise tail constant; skipped when absent.
    pub n0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub k_list: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Not embedded in reports, so a rerun elsewhere reproduces them exactly.
    #[serde(skip_serializing)]
    pub dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Maximal,
    Truncated,
    Tsharp,
    Commutator,
}

/// A weight given directly or as `Mk:u`, the k-fold maximal function of `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightSpec {
    Profile(Profile),
    MaximalOfU(usize),
}

impl FromStr for WeightSpec {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        let t = s.trim();
        if let Some(rest) = t.strip_prefix('M') {
            if let Some(k) = rest.strip_suffix(":u") {
                let k: usize = k
                    .parse()
                    .map_err(|_| CliError::Validation(format!("bad iteration count in `{t}`")))?;
                if k == 0 {
                    return Err(CliError::Validation("`M0:u` is not a maximal iterate".into()));
                }
                return Ok(WeightSpec::MaximalOfU(k));
            }
        }
        t.parse::<Profile>().map(WeightSpec::Profile).map_err(CliError::from)
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Profile(p) => write!(f, "{p}"),
            WeightSpec::MaximalOfU(k) => write!(f, "M{k}:u"),
        }
    }
}

impl TryFrom<String> for WeightSpec {
    type Error = CliError;
    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<WeightSpec> for String {
    fn from(w: WeightSpec) -> String {
        w.to_string()
    }
}

impl WeightSpec {
    pub fn build(&self, grid: &Grid, u: &GridFunction) -> Result<GridFunction, CliError> {
        match self {
            WeightSpec::Profile(p) => Ok(p.build(grid)?),
            WeightSpec::MaximalOfU(k) => Ok(iterate_maximal(u, *k)?),
        }
    }
}

pub fn parse_profile(s: &str) -> Result<Profile, CliError> {
    s.parse::<Profile>().map_err(CliError::from)
}

impl Config {
    /// Read a config file. A report written by this tool is accepted as
    /// well: its embedded `config` is used.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("command") && map.contains_key("config") => {
                map.remove("config").unwrap_or_default()
            }
            other => other,
        };
        serde_json::from_value(value).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Fill every unset field with its default and validate the result.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        let g = &mut self.grid;
        let half_width = *g.half_width.get_or_insert(4.0);
        let m = *g.m.get_or_insert(256);
        let grid = Grid::new(half_width, m)?;

        let w = &mut self.weights;
        w.u.get_or_insert_with(|| parse_profile("const:1+gaussian:0,0.3").unwrap());
        let b = &mut self.bump;
        let p = *b.p.get_or_insert(2.0);
        w.v.get_or_insert(WeightSpec::MaximalOfU(bump_iterations(p)));
        w.k.get_or_insert(bump_iterations(p));

        let delta = *b.delta.get_or_insert(1.0);
        let preset = *b.preset.get_or_insert(BumpPreset::Comm);
        let preset_spec = match preset {
            BumpPreset::Custom => None,
            other => Some(BumpSpec::preset(other, p, delta)?),
        };
        match preset_spec {
            Some(spec) if b.a_left.unwrap_or(spec.a_left) == spec.a_left
                && b.a_right.unwrap_or(spec.a_right) == spec.a_right =>
            {
                b.a_left = Some(spec.a_left);
                b.a_right = Some(spec.a_right);
            }
            Some(spec) => {
                // An exponent that differs from the preset makes the bump
                // custom; the side left unset keeps its preset value.
                b.a_left.get_or_insert(spec.a_left);
                b.a_right.get_or_insert(spec.a_right);
                b.preset = Some(BumpPreset::Custom);
            }
            None => {
                b.a_left.get_or_insert(0.0);
                b.a_right.get_or_insert(0.0);
            }
        }
        let family = *b.family.get_or_insert(CubeFamily::dyadic(&grid));
        family.cubes(&grid)?;
        b.rel_tol.get_or_insert(bumplab::orlicz::DEFAULT_REL_TOL);
        b.per_cube.get_or_insert(false);
        self.bump_spec()?;

        let op = &mut self.operator;
        op.kernel.get_or_insert(KernelSpec::Hilbert);
        let eta_cells = *op.eta_cells.get_or_insert(16.0);
        if !(eta_cells >= 2.0) {
            return Err(CliError::Validation(format!("eta_cells must be at least 2, got {eta_cells}")));
        }
        op.op.get_or_insert(OpKind::Truncated);
        op.f.get_or_insert_with(|| parse_profile("indicator:0,1").unwrap());

        let s = &mut self.symbol;
        s.b.get_or_insert_with(|| parse_profile("bump:0,0.5").unwrap());
        s.b_bmo.get_or_insert_with(|| parse_profile("logspike:0.001").unwrap());

        let o = &mut self.orlicz;
        o.f.get_or_insert_with(|| parse_profile("indicator:0,1").unwrap());
        o.p.get_or_insert(p);
        o.a.get_or_insert(0.0);
        o.cube.get_or_insert(grid.whole()).check(&grid)?;

        let kr = &mut self.probes.kr;
        kr.count.get_or_insert(32);
        kr.seed.get_or_insert(0);
        kr.n_list.get_or_insert_with(|| vec![half_width / 4.0, half_width / 2.0]);
        kr.shift_list.get_or_insert_with(|| vec![1, 2, 3]);
        kr.allow_large_shift.get_or_insert(false);
        self.probes.spectral.k_list.get_or_insert_with(|| vec![(m / 8).max(1)]);

        let out = &mut self.output;
        out.dir.get_or_insert_with(|| PathBuf::from("bumplab-out"));
        out.formats.get_or_insert_with(|| vec![Format::Json, Format::Csv]);
        Ok(())
    }

    // Accessors below assume `resolve` has run.

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.grid.half_width.unwrap(), self.grid.m.unwrap())?)
    }

    pub fn bump_spec(&self) -> Result<BumpSpec, CliError> {
        let b = &self.bump;
        let (p, a_left, a_right) = (b.p.unwrap(), b.a_left.unwrap(), b.a_right.unwrap());
        let spec = match b.preset.unwrap() {
            BumpPreset::Custom => BumpSpec::custom(p, a_left, a_right)?,
            preset => BumpSpec::preset(preset, p, b.delta.unwrap())?,
        };
        Ok(spec)
    }

    pub fn weights(&self, grid: &Grid) -> Result<(GridFunction, GridFunction), CliError> {
        let u = self.weights.u.as_ref().unwrap().build(grid)?;
        let v = self.weights.v.as_ref().unwrap().build(grid, &u)?;
        Ok((u, v))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.as_ref().is_some_and(|f| f.contains(&format))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_spec_syntax() {
        assert_eq!("M5:u".parse::<WeightSpec>().unwrap(), WeightSpec::MaximalOfU(5));
        assert!("M0:u".parse::<WeightSpec>().is_err());
        assert!(matches!("const:2".parse::<WeightSpec>().unwrap(), WeightSpec::Profile(_)));
        assert!("nonsense".parse::<WeightSpec>().is_err());
        assert_eq!(WeightSpec::MaximalOfU(3).to_string(), "M3:u");
    }

    #[test]
    fn resolve_fills_everything_and_round_trips() {
        let mut c = Config::default();
        c.resolve().unwrap();
        assert_eq!(c.bump.a_left, Some(4.0));
        assert_eq!(c.bump.a_right, Some(4.0));
        assert_eq!(c.weights.v, Some(WeightSpec::MaximalOfU(5)));
        let text = serde_json::to_string(&c).unwrap();
        let mut back: Config = serde_json::from_str(&text).unwrap();
        back.resolve().unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn explicit_exponent_switches_to_custom() {
        let mut c = Config::default();
        c.bump.a_left = Some(0.0);
        c.resolve().unwrap();
        assert_eq!(c.bump.preset, Some(BumpPreset::Custom));
        assert_eq!(c.bump.a_right, Some(4.0));

        let mut same = Config::default();
        same.bump.a_left = Some(4.0);
        same.resolve().unwrap();
        assert_eq!(same.bump.preset, Some(BumpPreset::Comm));
    }

    #[test]
    fn resolve_rejects_bad_values() {
        let mut c = Config::default();
        c.grid.m = Some(100);
        assert!(c.resolve().is_err());
        let mut c = Config::default();
        c.operator.eta_cells = Some(1.0);
        assert!(c.resolve().is_err());
        assert!(serde_json::from_str::<Config>(r#"{"grid": {"L": 1, "cells": 4}}"#).is_err());
    }
}
