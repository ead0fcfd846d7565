use std::io::Write;

use bumplab::compactness::{
    decay_compare, operator_matrix, sample_unit_ball, spectral_report, CommutatorProbe, KRReport, TailReport,
};
use bumplab::operators::{apply_truncated, commutator, maximal_fn, maximal_truncation, reference_eta_grid};
use bumplab::orlicz::{bmo_norm, orlicz_average};
use bumplab::weights::{ap_constant, bump_constant, iterate_maximal, two_weight_ap};
use bumplab::{Grid, TruncationSpec, WeightPair, YoungFunction};
use serde::Serialize;

use crate::config::{Config, OpKind};
use crate::output::Artifacts;
use crate::CliError;

fn finish(command: &str, summary: String, artifacts: Artifacts) -> Result<(), CliError> {
    let written = artifacts.commit()?;
    // A closed stdout is not a failure: the artifacts are already on disk.
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{command}: {summary}");
    for path in written {
        let _ = writeln!(stdout, "  wrote {}", path.display());
    }
    Ok(())
}

fn truncation(c: &Config, grid: &Grid) -> Result<TruncationSpec, CliError> {
    let t = TruncationSpec::in_cells(grid, c.operator.eta_cells.unwrap())?;
    t.check(grid)?;
    Ok(t)
}

#[derive(Serialize)]
struct OrliczResult {
    value: f64,
    iterations: usize,
    bracket: (f64, f64),
    interval: (f64, f64),
}

pub fn orlicz(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let o = &c.orlicz;
    let f = o.f.as_ref().unwrap().build(&grid)?;
    let phi = YoungFunction::new(o.p.unwrap(), o.a.unwrap())?;
    let cube = o.cube.unwrap();
    let r = orlicz_average(&f, cube, &phi, c.bump.rel_tol.unwrap())?;
    let result = OrliczResult {
        value: r.value,
        iterations: r.iterations,
        bracket: r.bracket,
        interval: cube.endpoints(&grid),
    };
    let mut out = Artifacts::new(&c);
    out.report("orlicz", &c, &result)?;
    finish("orlicz", format!("value = {:.12e}", r.value), out)
}

#[derive(Serialize)]
struct BmoResult {
    bmo_norm: f64,
    family: String,
    cubes: usize,
}

pub fn bmo(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let b = c.symbol.b.as_ref().unwrap().build(&grid)?;
    let family = c.bump.family.unwrap();
    let cubes = family.cubes(&grid)?;
    let result = BmoResult {
        bmo_norm: bmo_norm(&b, &cubes)?,
        family: family.id(),
        cubes: cubes.len(),
    };
    let mut out = Artifacts::new(&c);
    out.report("bmo", &c, &result)?;
    finish("bmo", format!("norm = {:.12e}", result.bmo_norm), out)
}

pub fn ap(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let w = c.weights.u.as_ref().unwrap().build(&grid)?;
    let r = ap_constant(&w, c.bump.p.unwrap(), &c.bump.family.unwrap())?.without_per_cube();
    let mut out = Artifacts::new(&c);
    out.report("ap", &c, &r)?;
    finish("ap", format!("constant = {:.12e}", r.constant), out)
}

#[derive(Serialize)]
struct BumpResult {
    bump: bumplab::BumpReport,
    two_weight_ap: f64,
}

pub fn bump(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let (u, v) = c.weights(&grid)?;
    let pair = WeightPair::new(u, v)?;
    let family = c.bump.family.unwrap();
    let spec = c.bump_spec()?;
    let mut r = bump_constant(&pair, &spec, &family, c.bump.rel_tol.unwrap())?;
    let ap = two_weight_ap(&pair, spec.p, &family)?.constant;
    let mut out = Artifacts::new(&c);
    if c.bump.per_cube == Some(true) {
        let cubes = family.cubes(&grid)?;
        let values = r.per_cube.clone().unwrap_or_default();
        out.csv(
            "per_cube.csv",
            "start,len,value",
            cubes.iter().zip(values).map(|(q, v)| [q.start as f64, q.len as f64, v]),
        );
    } else {
        r = r.without_per_cube();
    }
    let summary = format!("{} constant = {:.12e}", r.preset, r.constant);
    out.report(
        "bump",
        &c,
        &BumpResult {
            bump: r.clone().without_per_cube(),
            two_weight_ap: ap,
        },
    )?;
    finish("bump", summary, out)
}

#[derive(Serialize)]
struct WeightsResult {
    k: usize,
    u_min: f64,
    u_max: f64,
    v_min: f64,
    v_max: f64,
}

pub fn weights_gen(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let u = c.weights.u.as_ref().unwrap().build(&grid)?;
    let k = c.weights.k.unwrap();
    let v = iterate_maximal(&u, k)?;
    let result = WeightsResult {
        k,
        u_min: u.min(),
        u_max: u.max(),
        v_min: v.min(),
        v_max: v.max(),
    };
    let mut out = Artifacts::new(&c);
    out.function("u.csv", &u)?;
    out.function("v.csv", &v)?;
    out.report("weights gen", &c, &result)?;
    finish("weights gen", format!("v = M^{k} u"), out)
}

#[derive(Serialize)]
struct OpResult {
    op: OpKind,
    max_abs: f64,
    eta: Option<f64>,
}

pub fn op_apply(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let f = c.operator.f.as_ref().unwrap().build(&grid)?;
    let kernel = c.operator.kernel.unwrap();
    let op = c.operator.op.unwrap();
    let (g, eta) = match op {
        OpKind::Maximal => (maximal_fn(&f), None),
        OpKind::Truncated => {
            let t = truncation(&c, &grid)?;
            (apply_truncated(&f, &t, &kernel)?, Some(t.eta()))
        }
        OpKind::Tsharp => (maximal_truncation(&f, &reference_eta_grid(&grid), &kernel)?, None),
        OpKind::Commutator => {
            let t = truncation(&c, &grid)?;
            let b = c.symbol.b.as_ref().unwrap().build(&grid)?;
            (commutator(&b, &f, &t, &kernel)?, Some(t.eta()))
        }
    };
    let result = OpResult {
        op,
        max_abs: g.max_abs(),
        eta,
    };
    let mut out = Artifacts::new(&c);
    out.function("output.csv", &g)?;
    out.report("op apply", &c, &result)?;
    finish("op apply", format!("max |output| = {:.12e}", result.max_abs), out)
}

#[derive(Serialize)]
struct KrResult {
    kr: KRReport,
    tail_constant: Option<TailReport>,
}

pub fn probe_kr(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let (u, v) = c.weights(&grid)?;
    let b = c.symbol.b.as_ref().unwrap().build(&grid)?;
    let t = truncation(&c, &grid)?;
    let p = c.bump.p.unwrap();
    let kr = &c.probes.kr;
    let sample = sample_unit_ball(&v, p, kr.count.unwrap(), kr.seed.unwrap())?;
    let probe = CommutatorProbe::new(b, t, c.operator.kernel.unwrap(), u, p)?;
    let report = probe.kr_report(
        &sample,
        kr.n_list.as_ref().unwrap(),
        kr.shift_list.as_ref().unwrap(),
        kr.allow_large_shift.unwrap(),
    )?;
    let tail_constant = kr.n0.map(|n0| probe.tail_constant(&v, &sample, n0)).transpose()?;
    let mut out = Artifacts::new(&c);
    out.csv("tail.csv", "N,tail", report.tail_curve.iter().map(|&(n, t)| [n, t]));
    out.csv("modulus.csv", "h,modulus", report.modulus_curve.iter().map(|&(h, m)| [h, m]));
    let summary = format!(
        "sup norm = {:.6e}, modulus slope = {}",
        report.bound_sup,
        report.modulus_slope.map_or("n/a".into(), |s| format!("{s:.4}"))
    );
    out.report(
        "probe kr",
        &c,
        &KrResult {
            kr: report,
            tail_constant,
        },
    )?;
    finish("probe kr", summary, out)
}

fn sigma_rows(sigma: &[f64]) -> impl Iterator<Item = [f64; 2]> + '_ {
    sigma.iter().enumerate().map(|(k, &s)| [(k + 1) as f64, s])
}

pub fn probe_svd(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let (u, v) = c.weights(&grid)?;
    let b = c.symbol.b.as_ref().unwrap().build(&grid)?;
    let t = truncation(&c, &grid)?;
    let a = operator_matrix(&b, &t, &c.operator.kernel.unwrap(), &u, &v)?;
    let r = spectral_report(&a, c.probes.spectral.k_list.as_ref().unwrap())?;
    let mut out = Artifacts::new(&c);
    out.csv("sigma.csv", "k,sigma", sigma_rows(&r.singular_values));
    let summary = format!(
        "sigma_1 = {:.6e}, {} sweeps",
        r.singular_values.first().copied().unwrap_or(0.0),
        r.sweeps
    );
    out.report("probe svd", &c, &r)?;
    finish("probe svd", summary, out)
}

pub fn compare(mut c: Config) -> Result<(), CliError> {
    c.resolve()?;
    let grid = c.grid()?;
    let (u, v) = c.weights(&grid)?;
    let b_cmo = c.symbol.b.as_ref().unwrap().build(&grid)?;
    let b_bmo = c.symbol.b_bmo.as_ref().unwrap().build(&grid)?;
    let t = truncation(&c, &grid)?;
    let d = decay_compare(
        &b_cmo,
        &b_bmo,
        &t,
        &c.operator.kernel.unwrap(),
        &u,
        &v,
        c.probes.spectral.k_list.as_ref().unwrap(),
        &c.bump.family.unwrap(),
    )?;
    let mut out = Artifacts::new(&c);
    out.csv("sigma_cmo.csv", "k,sigma", sigma_rows(&d.cmo.singular_values));
    out.csv("sigma_bmo.csv", "k,sigma", sigma_rows(&d.bmo.singular_values));
    out.csv(
        "energy_tail.csv",
        "k,cmo_energy_tail,bmo_energy_tail",
        d.rows.iter().map(|r| [r.k as f64, r.cmo_energy_tail, r.bmo_energy_tail]),
    );
    let summary = d
        .rows
        .iter()
        .map(|r| format!("K={}: {:.3e} vs {:.3e}", r.k, r.cmo_energy_tail, r.bmo_energy_tail))
        .collect::<Vec<_>>()
        .join(", ");
    out.report("compare", &c, &d)?;
    finish("compare", summary, out)
}
