//! Empirical compactness probes for `[b, T^eta] : L^p(v) -> L^p(u)`.
//!
//! A seeded sample of the unit ball of `L^p(v)` is pushed through the
//! commutator and the image family is measured against the three
//! Kolmogorov–Riesz conditions: boundedness, uniformly small tails and
//! translation equicontinuity. For `p = 2` the operator is also assembled
//! as a matrix whose singular values are compared across symbols.
//!
//! Nothing here decides compactness. Every finite discretisation is
//! compact; only trends under refinement carry information.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{lp_norm_unchecked, pow_abs, Cube, CubeFamily, Grid, GridFunction};
use crate::linalg::{svd, Matrix};
use crate::operators::{apply_truncated_at, commutator_at, Kernel, KernelSpec, TruncationSpec};
use crate::orlicz::{bmo_norm, conjugate};
use crate::weights::{check_nonnegative, check_positive};

/// Profile families used to populate a unit-ball sample.
/// Sampled `(x, y)` pairs.
pub type Curve = Vec<(f64, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Indicator,
    Haar,
    Gaussian,
    PiecewiseConstant,
}

impl Generator {
    const CYCLE: [Generator; 4] = [
        Generator::Indicator,
        Generator::Haar,
        Generator::Gaussian,
        Generator::PiecewiseConstant,
    ];

    fn draw(self, grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let m = grid.cells();
        let mut values = vec![0.0; m];
        match self {
            Generator::Indicator => {
                let len = rng.gen_range(2..=m / 2);
                let start = rng.gen_range(0..=m - len);
                values[start..start + len].fill(1.0);
            }
            Generator::Haar => {
                let levels = m.trailing_zeros();
                let len = 1usize << rng.gen_range(1..levels);
                let start = len * rng.gen_range(0..m / len);
                for (k, v) in values[start..start + len].iter_mut().enumerate() {
                    *v = if k < len / 2 { 1.0 } else { -1.0 };
                }
            }
            Generator::Gaussian => {
                let l = grid.half_width();
                let center = rng.gen_range(-0.5 * l..0.5 * l);
                let sigma = rng.gen_range(4.0 * grid.cell_width()..0.25 * l);
                for (i, v) in values.iter_mut().enumerate() {
                    let x = grid.center(i);
                    *v = (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp();
                }
            }
            Generator::PiecewiseConstant => {
                let pieces = rng.gen_range(2..=16usize);
                let mut cuts: Vec<usize> = (0..pieces - 1).map(|_| rng.gen_range(1..m)).collect();
                cuts.push(0);
                cuts.push(m);
                cuts.sort_unstable();
                for w in cuts.windows(2) {
                    let level = rng.gen_range(-1.0..1.0);
                    values[w[0]..w[1]].fill(level);
                }
                if values.iter().all(|&v| v == 0.0) {
                    values[0] = 1.0;
                }
            }
        }
        values
    }
}

/// Members of the unit sphere of `L^p(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitBallSample {
    pub functions: Vec<GridFunction>,
    pub tags: Vec<Generator>,
    pub seed: u64,
}

/// Per-member random stream: member `i` of seed `s` is always drawn from
/// ChaCha stream `i`, so a larger sample extends a smaller one.
fn member_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draw `count` functions cycling through the generators and rescale each
/// to `||f||_{L^p(v)} = 1`.
pub fn sample_unit_ball(v: &GridFunction, p: f64, count: usize, seed: u64) -> Result<UnitBallSample> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    check_positive(v, "v")?;
    check_p(p)?;
    let grid = *v.grid();
    let members = exec::try_map_range(count, |i| {
        let tag = Generator::CYCLE[i % Generator::CYCLE.len()];
        let raw = tag.draw(&grid, &mut member_rng(seed, i));
        normalize(GridFunction::from_parts(grid, raw), v, p).map(|f| (f, tag))
    })?;
    let (functions, tags) = members.into_iter().unzip();
    Ok(UnitBallSample {
        functions,
        tags,
        seed,
    })
}

impl UnitBallSample {
    /// Normalise caller-supplied functions into a sample.
    pub fn from_functions(
        v: &GridFunction,
        p: f64,
        functions: Vec<GridFunction>,
        tags: Vec<Generator>,
    ) -> Result<Self> {
        check_positive(v, "v")?;
        check_p(p)?;
        if functions.is_empty() || functions.len() != tags.len() {
            return Err(Error::InvalidParameter("need one tag per function".into()));
        }
        let functions = functions
            .into_iter()
            .map(|f| normalize(f, v, p))
            .collect::<Result<_>>()?;
        Ok(Self {
            functions,
            tags,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

fn normalize(f: GridFunction, v: &GridFunction, p: f64) -> Result<GridFunction> {
    f.same_grid(v)?;
    let h = f.grid().cell_width();
    let norm = lp_norm_unchecked(f.values(), v.values(), p, f.grid().whole(), h);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidParameter("cannot normalise a null function".into()));
    }
    f.scale(1.0 / norm)
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")))
    }
}

/// The operator under study and the target space `L^p(u)`.
#[derive(Debug, Clone)]
pub struct CommutatorProbe {
    pub b: GridFunction,
    pub trunc: TruncationSpec,
    pub kernel: KernelSpec,
    pub u: GridFunction,
    pub p: f64,
}

/// Measured Kolmogorov–Riesz quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRReport {
    /// `sup_f ||[b,T^eta] f||_{L^p(u)}`.
    pub bound_sup: f64,
    /// `(N, sup_f ||[b,T^eta] f||_{L^p(u; |x| > N)})`.
    pub tail_curve: Vec<(f64, f64)>,
    /// `(|s|, sup_f ||[b,T^eta] f(. + s) - [b,T^eta] f||_{L^p(u)})`.
    pub modulus_curve: Vec<(f64, f64)>,
    /// Least-squares slope of `log modulus` against `log |s|`.
    pub modulus_slope: Option<f64>,
    pub sample_size: usize,
    pub seed: u64,
}

/// The two terms of `[b,T^eta]f(x+s) - [b,T^eta]f(x)`:
/// `A f(x) = (b(x+s) - b(x)) T^eta f(x)` and
/// `B f(x) = sum_j (b_j - b(x+s)) (K_eta(x, y_j) - K_eta(x+s, y_j)) f_j h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDecomposition {
    pub af: GridFunction,
    pub bf: GridFunction,
    pub shift: f64,
    pub shift_cells: i64,
}

/// Pointwise decay envelope `|[b,T^eta] f(x)| <= C_bv / |x|` away from `supp b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub c_bv: f64,
    pub n0: f64,
    /// `(sum_{supp b} v^{-p'/p} h)^{1/p'}`.
    pub v_certificate: f64,
    /// `2 max|b| C_size certificate N0 / (N0 - R)`, the a-priori bound on `c_bv`.
    pub envelope: f64,
    pub support_radius: f64,
}

impl CommutatorProbe {
    pub fn new(
        b: GridFunction,
        trunc: TruncationSpec,
        kernel: KernelSpec,
        u: GridFunction,
        p: f64,
    ) -> Result<Self> {
        b.same_grid(&u)?;
        trunc.check(b.grid())?;
        check_nonnegative(&u, "u")?;
        check_p(p)?;
        Ok(Self {
            b,
            trunc,
            kernel,
            u,
            p,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.b.grid()
    }

    fn image_at(&self, f: &GridFunction, rows: std::ops::Range<i64>) -> Result<Vec<f64>> {
        commutator_at(&self.b, f, &self.trunc, &self.kernel, rows)
    }

    /// `[b, T^eta] f` on the grid for every member.
    pub fn images(&self, sample: &UnitBallSample) -> Result<Vec<Vec<f64>>> {
        let m = self.grid().cells() as i64;
        sample
            .functions
            .iter()
            .map(|f| self.image_at(f, 0..m))
            .collect()
    }

    fn target_norm(&self, values: &[f64], region: impl Fn(usize) -> bool) -> f64 {
        let h = self.grid().cell_width();
        let s: f64 = values
            .iter()
            .zip(self.u.values())
            .enumerate()
            .filter(|(i, _)| region(*i))
            .map(|(_, (c, w))| pow_abs(*c, self.p) * w)
            .sum::<f64>()
            * h;
        s.powf(1.0 / self.p)
    }

    /// Condition (a): `sup_f ||[b,T^eta] f||_{L^p(u)}`.
    pub fn kr_bounded(&self, sample: &UnitBallSample) -> Result<f64> {
        let images = self.images(sample)?;
        Ok(images
            .iter()
            .map(|c| self.target_norm(c, |_| true))
            .fold(0.0, f64::max))
    }

    /// Condition (b): for each `N`, `sup_f ||[b,T^eta] f||_{L^p(u; |x| > N)}`.
    pub fn kr_tail(&self, sample: &UnitBallSample, n_list: &[f64]) -> Result<Vec<(f64, f64)>> {
        let images = self.images(sample)?;
        self.tail_curve(&images, n_list)
    }

    fn tail_curve(&self, images: &[Vec<f64>], n_list: &[f64]) -> Result<Vec<(f64, f64)>> {
        let grid = *self.grid();
        n_list
            .iter()
            .map(|&n| {
                if !(n >= 0.0 && n < grid.half_width()) {
                    return Err(Error::InvalidParameter(format!(
                        "tail radius N = {n} must lie in [0, L = {})",
                        grid.half_width()
                    )));
                }
                let sup = images
                    .iter()
                    .map(|c| self.target_norm(c, |i| grid.center(i).abs() > n))
                    .fold(0.0, f64::max);
                Ok((n, sup))
            })
            .collect()
    }

    fn check_shifts(&self, shift_cells: &[i64], allow_large: bool) -> Result<()> {
        let h = self.grid().cell_width();
        for &k in shift_cells {
            if !allow_large && (k as f64 * h).abs() >= self.trunc.eta() / 4.0 {
                return Err(Error::InvalidParameter(format!(
                    "shift of {k} cells is not below eta/4; pass the override to explore it"
                )));
            }
            if k.unsigned_abs() as usize >= self.grid().cells() {
                return Err(Error::InvalidParameter(format!("shift of {k} cells leaves the grid")));
            }
        }
        Ok(())
    }

    /// Condition (c): the modulus of continuity of the image family at the
    /// given shifts (in cells), with the fitted log-log slope. The integral
    /// runs over the cells `i` with `i + k` also inside the domain.
    pub fn kr_equicontinuity(
        &self,
        sample: &UnitBallSample,
        shift_cells: &[i64],
        allow_large: bool,
    ) -> Result<(Curve, Option<f64>)> {
        self.check_shifts(shift_cells, allow_large)?;
        let images = self.images(sample)?;
        Ok(self.modulus_curve(&images, shift_cells))
    }

    fn modulus_curve(&self, images: &[Vec<f64>], shift_cells: &[i64]) -> (Vec<(f64, f64)>, Option<f64>) {
        let m = self.grid().cells() as i64;
        let h = self.grid().cell_width();
        let curve: Vec<(f64, f64)> = shift_cells
            .iter()
            .map(|&k| {
                let sup = images
                    .iter()
                    .map(|c| {
                        let diff: Vec<f64> = (0..m)
                            .map(|i| {
                                let j = i + k;
                                if (0..m).contains(&j) {
                                    c[j as usize] - c[i as usize]
                                } else {
                                    0.0
                                }
                            })
                            .collect();
                        self.target_norm(&diff, |_| true)
                    })
                    .fold(0.0, f64::max);
                ((k as f64 * h).abs(), sup)
            })
            .collect();
        let slope = log_log_slope(&curve);
        (curve, slope)
    }

    /// All three conditions in one pass.
    pub fn kr_report(
        &self,
        sample: &UnitBallSample,
        n_list: &[f64],
        shift_cells: &[i64],
        allow_large: bool,
    ) -> Result<KRReport> {
        let images = self.images(sample)?;
        let bound_sup = images
            .iter()
            .map(|c| self.target_norm(c, |_| true))
            .fold(0.0, f64::max);
        let tail_curve = self.tail_curve(&images, n_list)?;
        self.check_shifts(shift_cells, allow_large)?;
        let (modulus_curve, modulus_slope) = self.modulus_curve(&images, shift_cells);
        Ok(KRReport {
            bound_sup,
            tail_curve,
            modulus_curve,
            modulus_slope,
            sample_size: sample.len(),
            seed: sample.seed,
        })
    }

    /// `C_bv = sup_f sup_{|x_i| > N0} |[b,T^eta] f(x_i)| |x_i|`, with the
    /// Hölder certificate on `supp b` that makes it finite.
    pub fn tail_constant(&self, v: &GridFunction, sample: &UnitBallSample, n0: f64) -> Result<TailReport> {
        v.same_grid(&self.b)?;
        check_positive(v, "v")?;
        let grid = *self.grid();
        let radius = self.b.support_radius();
        if !(n0 > 2.0 * radius && n0 < grid.half_width()) {
            return Err(Error::InvalidParameter(format!(
                "N0 = {n0} must exceed twice the support radius {radius} and stay below L = {}",
                grid.half_width()
            )));
        }
        let images = self.images(sample)?;
        let c_bv = images
            .iter()
            .flat_map(|c| {
                c.iter().enumerate().filter_map(|(i, val)| {
                    let x = grid.center(i).abs();
                    (x > n0).then_some(val.abs() * x)
                })
            })
            .fold(0.0, f64::max);
        let q = conjugate(self.p);
        let h = grid.cell_width();
        let v_certificate = match self.b.support() {
            None => 0.0,
            Some(supp) => {
                let s: f64 = supp
                    .cells()
                    .map(|i| v.values()[i].powf(-q / self.p))
                    .sum::<f64>()
                    * h;
                s.powf(1.0 / q)
            }
        };
        let envelope = 2.0 * self.b.max_abs() * self.kernel.size_constant() * v_certificate * n0 / (n0 - radius);
        Ok(TailReport {
            c_bv,
            n0,
            v_certificate,
            envelope,
            support_radius: radius,
        })
    }
}

fn log_log_slope(curve: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(s, m)| *s > 0.0 && *m > 0.0)
        .map(|(s, m)| (s.ln(), m.ln()))
        .collect();
    least_squares_slope(&pts)
}

/// Slope of the least-squares line through `points`; `None` for fewer
/// than two distinct abscissae.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `[b,T^eta]f(x_i + s) - [b,T^eta]f(x_i)` with `s = k h`, evaluating the
/// commutator off the grid where `x_i + s` leaves the domain.
pub fn shift_difference<K: Kernel + ?Sized>(
    b: &GridFunction,
    f: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
    shift_cells: i64,
) -> Result<GridFunction> {
    let m = f.len() as i64;
    let k = shift_cells;
    let lo = k.min(0);
    let hi = m + k.max(0);
    let c = commutator_at(b, f, trunc, kernel, lo..hi)?;
    let values = (0..m)
        .map(|i| c[(i + k - lo) as usize] - c[(i - lo) as usize])
        .collect();
    GridFunction::new(*f.grid(), values)
}

/// Split the shift difference of the commutator into the `A` and `B` terms.
pub fn shift_decomposition<K: Kernel + ?Sized>(
    b: &GridFunction,
    f: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
    shift_cells: i64,
    allow_large: bool,
) -> Result<ShiftDecomposition> {
    b.same_grid(f)?;
    let grid = *f.grid();
    trunc.check(&grid)?;
    let h = grid.cell_width();
    let shift = shift_cells as f64 * h;
    if !allow_large && shift.abs() >= trunc.eta() / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "shift {shift} is not below eta/4 = {}",
            trunc.eta() / 4.0
        )));
    }
    let m = f.len() as i64;
    let tf = apply_truncated_at(f, trunc, kernel, 0..m)?;
    let centers = grid.centers();
    let (bv, fv) = (b.values(), f.values());
    let af: Vec<f64> = (0..m)
        .map(|i| (b.at(i + shift_cells) - b.at(i)) * tf[i as usize])
        .collect();
    let bf = exec::map_range(f.len(), |i| {
        let t = i as i64;
        let x = grid.lattice_point(t);
        let xs = grid.lattice_point(t + shift_cells);
        let bs = b.at(t + shift_cells);
        let mut acc = 0.0;
        for ((y, &fj), &bj) in centers.iter().zip(fv).zip(bv) {
            if fj != 0.0 {
                acc += (bj - bs) * (trunc.kernel(kernel, x, *y) - trunc.kernel(kernel, xs, *y)) * fj;
            }
        }
        acc * h
    });
    Ok(ShiftDecomposition {
        af: GridFunction::new(grid, af)?,
        bf: GridFunction::new(grid, bf)?,
        shift,
        shift_cells,
    })
}

/// `A_ij = u_i^{1/2} (b_i - b_j) K_eta(x_i, x_j) v_j^{-1/2} h`: the commutator
/// `L^2(v) -> L^2(u)` as a matrix on unweighted coordinates, so that its
/// singular values are those of the discretised operator.
pub fn operator_matrix<K: Kernel + ?Sized>(
    b: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
    u: &GridFunction,
    v: &GridFunction,
) -> Result<Matrix> {
    b.same_grid(u)?;
    b.same_grid(v)?;
    check_nonnegative(u, "u")?;
    check_positive(v, "v")?;
    let grid = *b.grid();
    trunc.check(&grid)?;
    let h = grid.cell_width();
    let m = grid.cells();
    let centers = grid.centers();
    let (bv, uv, vv) = (b.values(), u.values(), v.values());
    let inv_sqrt_v: Vec<f64> = vv.iter().map(|x| 1.0 / x.sqrt()).collect();
    Ok(Matrix::from_fn(m, m, |i, j| {
        let ui = uv[i];
        if ui == 0.0 || bv[i] == bv[j] {
            return 0.0;
        }
        ui.sqrt() * (bv[i] - bv[j]) * trunc.kernel(kernel, centers[i], centers[j]) * inv_sqrt_v[j] * h
    }))
}

/// Tail statistics of a singular value sequence at cut `k` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRatio {
    pub k: usize,
    /// `sigma_k / sigma_1`.
    pub sigma_ratio: f64,
    /// `sum_{j > k} sigma_j^2 / sum_j sigma_j^2`.
    pub energy_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub m: usize,
    pub singular_values: Vec<f64>,
    pub tail_ratios: Vec<TailRatio>,
    pub residual: f64,
    pub sweeps: usize,
}

/// Singular values of `matrix` with tail ratios at every cut in `k_list`.
pub fn spectral_report(matrix: &Matrix, k_list: &[usize]) -> Result<SpectralReport> {
    let fact = svd(matrix)?;
    let sigma = fact.singular_values;
    let tail_ratios = tail_ratios(&sigma, k_list)?;
    Ok(SpectralReport {
        m: matrix.rows(),
        singular_values: sigma,
        tail_ratios,
        residual: fact.residual,
        sweeps: fact.sweeps,
    })
}

pub fn tail_ratios(sigma: &[f64], k_list: &[usize]) -> Result<Vec<TailRatio>> {
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    k_list
        .iter()
        .map(|&k| {
            if k == 0 || k > sigma.len() {
                return Err(Error::InvalidParameter(format!(
                    "cut k = {k} outside 1..={}",
                    sigma.len()
                )));
            }
            let tail: f64 = sigma[k..].iter().map(|s| s * s).sum();
            let (sigma_ratio, energy_tail) = if total > 0.0 {
                (sigma[k - 1] / sigma[0], tail / total)
            } else {
                (0.0, 0.0)
            };
            Ok(TailRatio {
                k,
                sigma_ratio,
                energy_tail,
            })
        })
        .collect()
}

/// One row of a [`DecayComparison`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: usize,
    pub cmo_energy_tail: f64,
    pub bmo_energy_tail: f64,
    pub cmo_below: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayComparison {
    pub cmo: SpectralReport,
    pub bmo: SpectralReport,
    /// Factor applied to the non-CMO symbol to match BMO norms.
    pub bmo_scale: f64,
    pub cmo_bmo_norm: f64,
    pub bmo_bmo_norm: f64,
    pub family: String,
    pub rows: Vec<DecayRow>,
}

/// Spectral reports of `[b_cmo, T^eta]` and `[c b_bmo, T^eta]` on
/// `L^2(v) -> L^2(u)`, where `c` matches the two BMO norms over `family`.
#[allow(clippy::too_many_arguments)]
pub fn decay_compare<K: Kernel + ?Sized>(
    b_cmo: &GridFunction,
    b_bmo: &GridFunction,
    trunc: &TruncationSpec,
    kernel: &K,
    u: &GridFunction,
    v: &GridFunction,
    k_list: &[usize],
    family: &CubeFamily,
) -> Result<DecayComparison> {
    b_cmo.same_grid(b_bmo)?;
    let cubes: Vec<Cube> = family.cubes(b_cmo.grid())?;
    let cmo_norm = bmo_norm(b_cmo, &cubes)?;
    let raw_bmo_norm = bmo_norm(b_bmo, &cubes)?;
    let bmo_scale = if raw_bmo_norm > 0.0 && cmo_norm > 0.0 {
        cmo_norm / raw_bmo_norm
    } else {
        1.0
    };
    let scaled = if bmo_scale == 1.0 {
        b_bmo.clone()
    } else {
        b_bmo.scale(bmo_scale)?
    };
    let bmo_bmo_norm = bmo_norm(&scaled, &cubes)?;
    if cmo_norm > 0.0 && (bmo_bmo_norm - cmo_norm).abs() > 0.1 * cmo_norm {
        return Err(Error::InvalidParameter("BMO norms could not be matched".into()));
    }
    let cmo = spectral_report(&operator_matrix(b_cmo, trunc, kernel, u, v)?, k_list)?;
    let bmo = if b_cmo == &scaled {
        cmo.clone()
    } else {
        spectral_report(&operator_matrix(&scaled, trunc, kernel, u, v)?, k_list)?
    };
    let rows = cmo
        .tail_ratios
        .iter()
        .zip(&bmo.tail_ratios)
        .map(|(c, b)| DecayRow {
            k: c.k,
            cmo_energy_tail: c.energy_tail,
            bmo_energy_tail: b.energy_tail,
            cmo_below: c.energy_tail < b.energy_tail,
        })
        .collect();
    Ok(DecayComparison {
        cmo,
        bmo,
        bmo_scale,
        cmo_bmo_norm: cmo_norm,
        bmo_bmo_norm,
        family: family.id(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::Builder;
    use crate::grid::lp_norm_weighted;
    use crate::operators::{commutator, Hilbert};

    fn grid(l: f64, m: usize) -> Grid {
        Grid::new(l, m).unwrap()
    }

    #[test]
    fn samples_are_normalised_and_deterministic() {
        let g = grid(2.0, 128);
        let v = g.sample(|x| 1.0 + x * x).unwrap();
        let s = sample_unit_ball(&v, 1.5, 12, 42).unwrap();
        for f in &s.functions {
            let n = lp_norm_weighted(f, &v, 1.5, None).unwrap();
            assert!((n - 1.0).abs() <= 1e-10);
        }
        assert_eq!(s, sample_unit_ball(&v, 1.5, 12, 42).unwrap());
        assert_ne!(s, sample_unit_ball(&v, 1.5, 12, 43).unwrap());
        let longer = sample_unit_ball(&v, 1.5, 24, 42).unwrap();
        assert_eq!(&longer.functions[..12], &s.functions[..]);
        for tag in Generator::CYCLE {
            assert!(s.tags.contains(&tag));
        }
        assert!(sample_unit_ball(&v, 1.5, 0, 42).is_err());
    }

    #[test]
    fn indicator_of_unit_interval_is_already_normalised() {
        let g = grid(1.0, 64);
        let one = g.constant(1.0).unwrap();
        let chi = Builder::Indicator { a: 0.0, b: 1.0 }.build(&g).unwrap();
        let s = UnitBallSample::from_functions(&one, 2.0, vec![chi.clone()], vec![Generator::Indicator])
            .unwrap();
        assert_eq!(s.functions[0], chi);
    }

    #[test]
    fn constant_symbol_gives_null_probes() {
        let g = grid(4.0, 128);
        let one = g.constant(1.0).unwrap();
        let t = TruncationSpec::in_cells(&g, 16.0).unwrap();
        let probe = CommutatorProbe::new(g.constant(3.0).unwrap(), t, KernelSpec::Hilbert, one.clone(), 2.0)
            .unwrap();
        let s = sample_unit_ball(&one, 2.0, 8, 1).unwrap();
        assert_eq!(probe.kr_bounded(&s).unwrap(), 0.0);
        let (curve, slope) = probe.kr_equicontinuity(&s, &[1, 2], false).unwrap();
        assert!(curve.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(slope, None);
    }

    #[test]
    fn zero_shift_has_zero_modulus() {
        let g = grid(4.0, 128);
        let one = g.constant(1.0).unwrap();
        let b = Builder::SmoothBump { center: 0.0, radius: 1.0 }.build(&g).unwrap();
        let t = TruncationSpec::in_cells(&g, 16.0).unwrap();
        let probe = CommutatorProbe::new(b, t, KernelSpec::Hilbert, one.clone(), 2.0).unwrap();
        let s = sample_unit_ball(&one, 2.0, 4, 9).unwrap();
        let (curve, slope) = probe.kr_equicontinuity(&s, &[0], false).unwrap();
        assert_eq!(curve, vec![(0.0, 0.0)]);
        assert_eq!(slope, None);
        assert!(probe.kr_equicontinuity(&s, &[4], false).is_err());
        assert!(probe.kr_equicontinuity(&s, &[4], true).is_ok());
    }

    #[test]
    fn tail_curve_is_monotone_and_respects_weight_support() {
        let g = grid(4.0, 128);
        let one = g.constant(1.0).unwrap();
        let b = Builder::SmoothBump { center: 0.0, radius: 0.5 }.build(&g).unwrap();
        let t = TruncationSpec::in_cells(&g, 4.0).unwrap();
        let s = sample_unit_ball(&one, 2.0, 8, 3).unwrap();
        let probe = CommutatorProbe::new(b.clone(), t, KernelSpec::Hilbert, one.clone(), 2.0).unwrap();
        let curve = probe.kr_tail(&s, &[0.5, 1.0, 2.0, 3.0]).unwrap();
        assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(probe.kr_tail(&s, &[4.0]).is_err());

        let near = Builder::Indicator { a: -0.4, b: 0.4 }.build(&g).unwrap();
        let local = CommutatorProbe::new(b, t, KernelSpec::Hilbert, near, 2.0).unwrap();
        assert!(local.kr_tail(&s, &[0.5, 1.0]).unwrap().iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn shift_decomposition_identity_and_null_cases() {
        let g = grid(2.0, 128);
        let t = TruncationSpec::in_cells(&g, 16.0).unwrap();
        let b = Builder::SmoothBump { center: 0.2, radius: 0.7 }.build(&g).unwrap();
        let f = g.sample(|x| (2.0 * x).sin() + 0.3).unwrap();
        for k in [1i64, -2, 3] {
            let d = shift_decomposition(&b, &f, &t, &Hilbert, k, false).unwrap();
            let diff = shift_difference(&b, &f, &t, &Hilbert, k).unwrap();
            for i in 0..128 {
                let lhs = d.af.values()[i] + d.bf.values()[i];
                assert!((lhs - diff.values()[i]).abs() <= 1e-12 * (1.0 + f.max_abs()));
            }
        }
        let c = shift_decomposition(&g.constant(2.0).unwrap(), &f, &t, &Hilbert, 1, false).unwrap();
        // A vanishes on the interior; B carries the b = 0 continuation only at the edge.
        assert!(c.af.values()[1..127].iter().all(|&v| v == 0.0));
        let z = shift_decomposition(&b, &g.zeros(), &t, &Hilbert, 2, false).unwrap();
        assert!(z.af.values().iter().chain(z.bf.values()).all(|&v| v == 0.0));
        assert!(shift_decomposition(&b, &f, &t, &Hilbert, 8, false).is_err());
    }

    #[test]
    fn operator_matrix_examples() {
        let g = grid(1.0, 32);
        let t = TruncationSpec::in_cells(&g, 2.0).unwrap();
        let one = g.constant(1.0).unwrap();
        let zero = operator_matrix(&g.constant(4.0).unwrap(), &t, &Hilbert, &one, &one).unwrap();
        assert!(zero.as_slice().iter().all(|&v| v == 0.0));

        let b = g.sample(|x| x * x + x).unwrap();
        let a = operator_matrix(&b, &t, &Hilbert, &one, &one).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                assert_eq!(a.get(i, j), a.get(j, i));
            }
        }
        let mut u = one.clone().into_values();
        u[5] = 0.0;
        let u = GridFunction::new(g, u).unwrap();
        let a = operator_matrix(&b, &t, &Hilbert, &u, &one).unwrap();
        assert!(a.row(5).iter().all(|&v| v == 0.0));
        assert!(operator_matrix(&b, &t, &Hilbert, &one, &g.zeros()).is_err());
    }

    #[test]
    fn operator_matrix_reproduces_weighted_commutator() {
        let g = grid(2.0, 64);
        let t = TruncationSpec::in_cells(&g, 4.0).unwrap();
        let b = Builder::SmoothBump { center: 0.0, radius: 1.0 }.build(&g).unwrap();
        let u = g.sample(|x| 1.0 + (-x * x).exp()).unwrap();
        let v = g.sample(|x| 2.0 + x.sin()).unwrap();
        let a = operator_matrix(&b, &t, &Hilbert, &u, &v).unwrap();
        let f = g.sample(|x| (3.0 * x).cos() + x).unwrap();
        let lhs = a
            .mul_vec(&f.values().iter().zip(v.values()).map(|(f, v)| f * v.sqrt()).collect::<Vec<_>>())
            .unwrap();
        let c = commutator(&b, &f, &t, &Hilbert).unwrap();
        let scale = lhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..64 {
            let rhs = u.values()[i].sqrt() * c.values()[i];
            assert!((lhs[i] - rhs).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn tail_ratio_arithmetic() {
        let r = tail_ratios(&[4.0, 2.0, 1.0, 1.0], &[1, 2]).unwrap();
        assert_eq!(r[0].sigma_ratio, 1.0);
        assert_eq!(r[0].energy_tail, 6.0 / 22.0);
        assert_eq!(r[1].sigma_ratio, 0.5);
        assert_eq!(r[1].energy_tail, 2.0 / 22.0);
        assert!(tail_ratios(&[1.0], &[0]).is_err());
        assert_eq!(tail_ratios(&[0.0, 0.0], &[1]).unwrap()[0].energy_tail, 0.0);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0].iter().map(|&x| (x.ln(), (3.0 * x).ln())).collect();
        assert!((least_squares_slope(&pts).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(least_squares_slope(&pts[..1]), None);
    }
}
