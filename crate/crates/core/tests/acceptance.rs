//! Acceptance suite. Each criterion prints one PASS/FAIL line; run with
//! `cargo test -p bumplab --test acceptance -- --nocapture` to see them.

use std::time::{Duration, Instant};

use bumplab::compactness::{
    decay_compare, sample_unit_ball, shift_decomposition, shift_difference, CommutatorProbe,
};
use bumplab::exec;
use bumplab::operators::{
    apply_truncated, commutator, commutator_by_products, domination_ratio, maximal_fn,
    measure_regularity_constant, reference_eta_grid,
};
use bumplab::orlicz::{orlicz_average_slice, DEFAULT_REL_TOL};
use bumplab::weights::{ap_constant, bump_constant, bump_iterations, iterate_maximal};
use bumplab::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `u = 1 + gaussian(0, 0.3)` and `v = M^k u` with `k = floor(2p) + 1`.
fn reference_pair(grid: &Grid, p: f64) -> (GridFunction, GridFunction) {
    let u: Profile = "const:1+gaussian:0,0.3".parse().unwrap();
    let u = u.build(grid).unwrap();
    let v = iterate_maximal(&u, bump_iterations(p)).unwrap();
    (u, v)
}

fn random_dyadic(rng: &mut ChaCha8Rng, m: usize) -> Cube {
    let len = 1usize << rng.gen_range(0..=m.trailing_zeros());
    Cube::new(len * rng.gen_range(0..m / len), len)
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c01_orlicz_reduction() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(1.0, 1024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let values: Vec<f64> = (0..1024).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let f = GridFunction::new(grid, values).unwrap();
        let q = random_dyadic(&mut rng, 1024);
        for p in [1.5, 2.0, 3.0] {
            let got = orlicz_average(&f, q, &YoungFunction::power(p).unwrap(), DEFAULT_REL_TOL)
                .unwrap()
                .value;
            let oracle = (f.values()[q.cells()].iter().map(|x| x.abs().powf(p)).sum::<f64>()
                / q.len as f64)
                .powf(1.0 / p);
            worst = worst.max(rel(got, oracle));
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-8 && elapsed < Duration::from_secs(10),
        format!("max rel err {worst:.2e} (tol 1e-8), {elapsed:.2?} (limit 10s)"),
    )
}

fn c02_constant_identity() -> Outcome {
    let mut worst = 0.0f64;
    for a in [0.0, 3.0, 4.0] {
        let inv = bisect(|t| t * t * (std::f64::consts::E + t).ln().powf(a) - 1.0, 0.0, 1.0, 1e-14);
        let phi = YoungFunction::new(2.0, a).unwrap();
        for c in [0.1, 1.0, 10.0] {
            let got = orlicz_average_slice(&[c; 64], &phi, DEFAULT_REL_TOL).unwrap().value;
            worst = worst.max(rel(got, c / inv));
        }
    }
    check(worst <= 1e-8, format!("max rel err {worst:.2e} (tol 1e-8)"))
}

/// Discrete `A_3` constant of `x^2` on the `n` cells adjacent to the origin.
fn endpoint_oracle(n: usize) -> f64 {
    let nf = n as f64;
    let w: f64 = (0..n).map(|j| (j as f64 + 0.5).powi(2)).sum::<f64>() / nf;
    let dual: f64 = (0..n).map(|j| 1.0 / (j as f64 + 0.5)).sum::<f64>() / nf;
    w * dual * dual
}

fn c03_ap_calibration() -> Outcome {
    let g = Grid::new(1.0, 4096).unwrap();
    let one = ap_constant(&g.constant(1.0).unwrap(), 2.0, &CubeFamily::dyadic(&g)).unwrap().constant;
    let sqrt_w = Builder::Power { alpha: 0.5 }.build(&g).unwrap();
    let a2 = ap_constant(&sqrt_w, 2.0, &CubeFamily::dyadic(&g)).unwrap().constant;
    // (avg_[0,r] x^{1/2}) (avg_[0,r] x^{-1/2}) = (2/3)(2) for every r.
    let integral = 4.0 / 3.0;
    let mut values = Vec::new();
    let mut oracle_err = 0.0f64;
    for m in [8usize, 16, 32, 64, 128, 256, 512] {
        let g = Grid::new(1.0, m).unwrap();
        let w = Builder::Power { alpha: 2.0 }.build(&g).unwrap();
        let c = ap_constant(&w, 3.0, &CubeFamily::dyadic(&g)).unwrap().constant;
        oracle_err = oracle_err.max(rel(c, endpoint_oracle(m / 2)));
        values.push(c);
    }
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        one == 1.0 && rel(a2, integral) <= 0.02 && min_ratio >= 1.2 && oracle_err <= 1e-10,
        format!(
            "A_2(1) = {one}, A_2(|x|^1/2) = {a2:.5} vs 4/3 (rel {:.2e}), endpoint p=3 ratios min {min_ratio:.3} over {} halvings, oracle err {oracle_err:.1e}",
            rel(a2, integral),
            ratios.len()
        ),
    )
}

fn c04_bump_scale_invariance() -> Outcome {
    let g = Grid::new(4.0, 256).unwrap();
    let spec = BumpSpec::preset(BumpPreset::Comm, 2.0, 1.0).unwrap();
    let family = CubeFamily::dyadic(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let (c, s, a) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.1..1.0), rng.gen_range(0.1..3.0));
        let u = g.sample(|x| 0.05 + a * (-(x - c) * (x - c) / (2.0 * s * s)).exp()).unwrap();
        let v = iterate_maximal(&u, 5).unwrap().scale(rng.gen_range(1.0..4.0)).unwrap();
        let pair = WeightPair::new(u, v).unwrap();
        let base = bump_constant(&pair, &spec, &family, DEFAULT_REL_TOL).unwrap().constant;
        for scale in [0.01, 1.0, 100.0] {
            let k = bump_constant(&pair.scaled(scale, 2.0).unwrap(), &spec, &family, DEFAULT_REL_TOL)
                .unwrap()
                .constant;
            worst = worst.max(rel(k, base));
        }
    }
    check(worst <= 1e-6, format!("max rel change {worst:.2e} (tol 1e-6)"))
}

fn c05_weight_pair_example() -> Outcome {
    let start = Instant::now();
    let spec = BumpSpec::preset(BumpPreset::Comm, 2.0, 1.0).unwrap();
    let mut constants = Vec::new();
    for m in [1024usize, 2048] {
        let g = Grid::new(8.0, m).unwrap();
        let (u, v) = reference_pair(&g, 2.0);
        let pair = WeightPair::new(u, v).unwrap();
        let r = bump_constant(&pair, &spec, &CubeFamily::dyadic(&g), DEFAULT_REL_TOL).unwrap();
        constants.push(r.constant);
    }
    let change = rel(constants[1], constants[0]);
    let elapsed = start.elapsed();
    check(
        constants.iter().all(|c| c.is_finite()) && change < 0.2 && elapsed < Duration::from_secs(60),
        format!(
            "K(1024) = {:.5}, K(2048) = {:.5}, change {:.2}% (limit 20%), {elapsed:.2?} (limit 60s)",
            constants[0],
            constants[1],
            100.0 * change
        ),
    )
}

fn c06_hilbert_oracle() -> Outcome {
    let g = Grid::new(4.0, 4096).unwrap();
    let chi = Builder::Indicator { a: 0.0, b: 1.0 }.build(&g).unwrap();
    let t = TruncationSpec::in_cells(&g, 8.0).unwrap();
    let hf = apply_truncated(&chi, &t, &Hilbert).unwrap();
    let mut worst = 0.0f64;
    for x0 in [-2.0f64, 2.0, 3.0] {
        let mut idx: Vec<usize> = (0..g.cells()).collect();
        idx.sort_by(|&i, &j| (g.center(i) - x0).abs().total_cmp(&(g.center(j) - x0).abs()));
        for &i in &idx[..16] {
            let x = g.center(i);
            let exact = (x / (x - 1.0)).abs().ln() / std::f64::consts::PI;
            worst = worst.max(rel(hf.values()[i], exact));
        }
    }
    check(worst <= 0.01, format!("max rel err {worst:.2e} over 48 cells (tol 1%)"))
}

fn c07_domination() -> Outcome {
    let g = Grid::new(4.0, 1024).unwrap();
    let one = g.constant(1.0).unwrap();
    let sample = sample_unit_ball(&one, 2.0, 20, 7).unwrap();
    let etas = reference_eta_grid(&g);
    let mut per_eta = Vec::new();
    let mut cells = 4.0;
    while cells * g.cell_width() <= g.half_width() / 4.0 {
        let t = TruncationSpec::in_cells(&g, cells).unwrap();
        let c = sample
            .functions
            .iter()
            .map(|f| domination_ratio(f, &t, &Hilbert, &etas).unwrap())
            .fold(0.0, f64::max);
        per_eta.push(c);
        cells *= 2.0;
    }
    let hi = per_eta.iter().copied().fold(0.0, f64::max);
    let lo = per_eta.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        hi.is_finite() && lo > 0.0 && hi / lo < 2.0,
        format!("C_eta over {} scales in [{lo:.4}, {hi:.4}], spread {:.3} (limit 2)", per_eta.len(), hi / lo),
    )
}

fn c08_commutator_algebra() -> Outcome {
    let g = Grid::new(2.0, 256).unwrap();
    let t = TruncationSpec::in_cells(&g, 8.0).unwrap();
    let one = g.constant(1.0).unwrap();
    let fs = sample_unit_ball(&one, 2.0, 20, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut const_zero = true;
    let mut scale_exact = true;
    let mut additive = 0.0f64;
    let mut paths = 0.0f64;
    for f in &fs.functions {
        let c = rng.gen_range(-5.0..5.0);
        let z = commutator(&g.constant(c).unwrap(), f, &t, &Hilbert).unwrap();
        const_zero &= z.values().iter().all(|&v| v == 0.0);

        let (c1, r1, c2, r2) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.2..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.2..1.0),
        );
        let b1 = Builder::SmoothBump { center: c1, radius: r1 }.build(&g).unwrap();
        let b2 = g.sample(|x| (r2 * x).sin() + c2).unwrap();
        let k1 = commutator(&b1, f, &t, &Hilbert).unwrap();
        let k2 = commutator(&b2, f, &t, &Hilbert).unwrap();
        let k12 = commutator(&b1.add(&b2).unwrap(), f, &t, &Hilbert).unwrap();
        let scale = k12.max_abs().max(k1.max_abs()).max(k2.max_abs());
        for i in 0..g.cells() {
            additive = additive.max((k12.values()[i] - k1.values()[i] - k2.values()[i]).abs() / scale);
        }
        let k4 = commutator(&b1.scale(4.0).unwrap(), f, &t, &Hilbert).unwrap();
        scale_exact &= k4 == k1.scale(4.0).unwrap();

        let by_products = commutator_by_products(&b2, f, &t, &Hilbert).unwrap();
        let denom = k2.max_abs();
        for i in 0..g.cells() {
            paths = paths.max((by_products.values()[i] - k2.values()[i]).abs() / denom);
        }
    }
    check(
        const_zero && scale_exact && additive <= 1e-12 && paths <= 1e-12,
        format!(
            "const b -> 0: {const_zero}, [4b] == 4[b] bitwise: {scale_exact}, additivity {additive:.1e}, direct vs products {paths:.1e} (tol 1e-12)"
        ),
    )
}

fn c09_equicontinuity_slope() -> Outcome {
    let start = Instant::now();
    let g = Grid::new(8.0, 1024).unwrap();
    let (u, v) = reference_pair(&g, 2.0);
    let b = Builder::SmoothBump { center: 0.0, radius: 0.5 }.build(&g).unwrap();
    let t = TruncationSpec::in_cells(&g, 32.0).unwrap();
    let sample = sample_unit_ball(&v, 2.0, 32, 9).unwrap();
    let probe = CommutatorProbe::new(b, t, KernelSpec::Hilbert, u, 2.0).unwrap();
    let (curve, slope) = probe.kr_equicontinuity(&sample, &[1, 2, 4], false).unwrap();
    let elapsed = start.elapsed();
    let slope = slope.unwrap_or(f64::NAN);
    check(
        (0.85..=1.15).contains(&slope) && elapsed < Duration::from_secs(120),
        format!(
            "slope {slope:.4} (window [0.85, 1.15]), modulus {:?}, {elapsed:.2?} (limit 120s)",
            curve.iter().map(|c| format!("{:.3e}", c.1)).collect::<Vec<_>>()
        ),
    )
}

fn c10_shift_decomposition() -> Outcome {
    let g = Grid::new(2.0, 256).unwrap();
    let t = TruncationSpec::in_cells(&g, 16.0).unwrap();
    let one = g.constant(1.0).unwrap();
    let fs = sample_unit_ball(&one, 2.0, 20, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let h = g.cell_width();
    let mut identity = 0.0f64;
    let mut a_ok = true;
    let mut b_ok = true;
    let mut worst_a = 0.0f64;
    let mut worst_b = 0.0f64;
    for f in &fs.functions {
        let b = Builder::SmoothBump {
            center: rng.gen_range(-0.5..0.5),
            radius: rng.gen_range(0.3..1.2),
        }
        .build(&g)
        .unwrap();
        let k: i64 = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let d = shift_decomposition(&b, f, &t, &Hilbert, k, false).unwrap();
        let diff = shift_difference(&b, f, &t, &Hilbert, k).unwrap();
        let scale = diff.max_abs().max(d.af.max_abs()).max(d.bf.max_abs());
        for i in 0..g.cells() {
            identity = identity.max((d.af.values()[i] + d.bf.values()[i] - diff.values()[i]).abs() / scale);
        }
        let s = (k as f64 * h).abs();
        let tf = apply_truncated(f, &t, &Hilbert).unwrap();
        let bound_a = s * b.max_slope() * tf.max_abs();
        let c_reg = measure_regularity_constant(&g, &t, &Hilbert, &[k]);
        let c_meas = 2.0 * b.max_abs() * c_reg * 16.0;
        let bound_b = c_meas * s * maximal_fn(f).max() / t.eta();
        a_ok &= d.af.max_abs() <= bound_a * (1.0 + 1e-12);
        b_ok &= d.bf.max_abs() <= bound_b;
        worst_a = worst_a.max(d.af.max_abs() / bound_a);
        worst_b = worst_b.max(d.bf.max_abs() / bound_b);
    }
    check(
        identity <= 1e-12 && a_ok && b_ok,
        format!(
            "identity {identity:.1e} (tol 1e-12), max |Af|/bound {worst_a:.3}, max |Bf|/bound {worst_b:.3}"
        ),
    )
}

fn c11_tail() -> Outcome {
    let g = Grid::new(8.0, 1024).unwrap();
    let (u, v) = reference_pair(&g, 2.0);
    // Sum u(x)/(1+|x|)^2 h must stay bounded: it is on a bounded domain,
    // but check it against the continuum integral of the envelope anyway.
    let weighted: f64 = u
        .values()
        .iter()
        .zip(g.centers())
        .map(|(w, x)| w / (1.0 + x.abs()).powi(2))
        .sum::<f64>()
        * g.cell_width();
    let b = Builder::SmoothBump { center: 0.0, radius: 0.5 }.build(&g).unwrap();
    let t = TruncationSpec::in_cells(&g, 16.0).unwrap();
    let sample = sample_unit_ball(&v, 2.0, 32, 11).unwrap();
    let probe = CommutatorProbe::new(b.clone(), t, KernelSpec::Hilbert, u, 2.0).unwrap();
    let radius = b.support_radius();
    let lo = 4.0 * radius;
    let curve = probe.kr_tail(&sample, &[lo, 2.0 * lo]).unwrap();
    let drop = 1.0 - curve[1].1 / curve[0].1;
    let tail = probe.tail_constant(&v, &sample, lo).unwrap();
    check(
        weighted.is_finite()
            && tail.c_bv.is_finite()
            && tail.c_bv <= tail.envelope
            && 2.0 * lo <= g.half_width() / 2.0 + 1e-12
            && drop >= 0.3,
        format!(
            "N {:.3} -> {:.3}: tail {:.3e} -> {:.3e}, drop {:.1}% (min 30%); C_bv = {:.4e} vs envelope bound {:.4e}",
            curve[0].0,
            curve[1].0,
            curve[0].1,
            curve[1].1,
            100.0 * drop,
            tail.c_bv,
            tail.envelope
        ),
    )
}

fn c12_spectral_contrast() -> Outcome {
    let start = Instant::now();
    let mut rows = Vec::new();
    for m in [256usize, 512, 1024] {
        let g = Grid::new(2.0, m).unwrap();
        let (u, v) = reference_pair(&g, 2.0);
        let b_cmo = Builder::SmoothBump { center: 0.0, radius: 1.0 }.build(&g).unwrap();
        let b_bmo = Builder::LogSpike { eps: 1e-3 }.build(&g).unwrap();
        let t = TruncationSpec::in_cells(&g, 16.0).unwrap();
        let d = decay_compare(&b_cmo, &b_bmo, &t, &Hilbert, &u, &v, &[m / 8], &CubeFamily::dyadic(&g))
            .map_err(|e| format!("m = {m}: {e}"))?;
        rows.push((m, d.rows[0]));
    }
    let below = rows.iter().all(|(_, r)| r.cmo_energy_tail < r.bmo_energy_tail);
    let monotone = rows.windows(2).all(|w| w[1].1.cmo_energy_tail <= w[0].1.cmo_energy_tail);
    let elapsed = start.elapsed();
    let detail = rows
        .iter()
        .map(|(m, r)| format!("m={m}: {:.3e} vs {:.3e}", r.cmo_energy_tail, r.bmo_energy_tail))
        .collect::<Vec<_>>()
        .join(", ");
    check(
        below && monotone && elapsed < Duration::from_secs(600),
        format!("energy tail beyond m/8, CMO vs BMO: {detail}; CMO nonincreasing: {monotone}; {elapsed:.2?} (limit 10min)"),
    )
}

fn c13_determinism() -> Outcome {
    let run = || {
        let g = Grid::new(4.0, 256).unwrap();
        let (u, v) = reference_pair(&g, 2.0);
        let b = Builder::SmoothBump { center: 0.0, radius: 0.5 }.build(&g).unwrap();
        let t = TruncationSpec::in_cells(&g, 16.0).unwrap();
        let sample = sample_unit_ball(&v, 2.0, 16, 13).unwrap();
        let probe = CommutatorProbe::new(b, t, KernelSpec::Hilbert, u.clone(), 2.0).unwrap();
        let kr = probe.kr_report(&sample, &[1.0, 2.0], &[1, 2, 3], false).unwrap();
        let pair = WeightPair::new(u, v).unwrap();
        let spec = BumpSpec::preset(BumpPreset::Comm, 2.0, 1.0).unwrap();
        let bump = bump_constant(&pair, &spec, &CubeFamily::shifted(&g), DEFAULT_REL_TOL).unwrap();
        serde_json::to_string(&(kr, bump)).unwrap()
    };
    let first = run();
    let second = run();
    let sequential = exec::sequential(run);
    check(
        first == second && first == sequential,
        format!(
            "repeat identical: {}, sequential identical: {} ({} bytes)",
            first == second,
            first == sequential,
            first.len()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("orlicz reduction", c01_orlicz_reduction),
        ("constant-function orlicz identity", c02_constant_identity),
        ("A_p calibration", c03_ap_calibration),
        ("bump scale invariance", c04_bump_scale_invariance),
        ("reference weight pair", c05_weight_pair_example),
        ("hilbert oracle", c06_hilbert_oracle),
        ("domination", c07_domination),
        ("commutator algebra", c08_commutator_algebra),
        ("equicontinuity slope", c09_equicontinuity_slope),
        ("shift decomposition", c10_shift_decomposition),
        ("tail decay", c11_tail),
        ("spectral contrast", c12_spectral_contrast),
        ("determinism", c13_determinism),
    ];
    let mut failed = Vec::new();
    for (n, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", n + 1),
            Err(detail) => {
                println!("FAIL {:>2} {name}: {detail}", n + 1);
                failed.push(n + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
