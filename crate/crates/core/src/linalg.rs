//! Dense matrices and a one-sided Jacobi SVD.
//!
//! One-sided (Hestenes) Jacobi orthogonalises the columns of `A` by plane
//! rotations, `A V = U Sigma`. Each sweep visits every column pair once in
//! round-robin order; the pairs of one round are disjoint and are rotated
//! in parallel. The schedule is fixed, so the result does not depend on
//! the number of threads.

use crate::error::{Error, Result};
use crate::exec;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64 + Sync + Send) -> Self {
        let row_data = exec::map_range(rows, |i| (0..cols).map(|j| f(i, j)).collect::<Vec<_>>());
        Self {
            rows,
            cols,
            data: row_data.concat(),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::InvalidParameter("dimension mismatch in mat-vec".into()));
        }
        Ok(exec::map_range(self.rows, |i| {
            self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()
        }))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// Singular value decomposition `A = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns (zero where `sigma = 0`).
    pub u: Vec<Vec<f64>>,
    /// Right singular vectors as columns.
    pub v: Vec<Vec<f64>>,
    pub sweeps: usize,
    /// `||A - U Sigma V^T||_F`.
    pub residual: f64,
}

pub const MAX_SWEEPS: usize = 60;
/// Required bound on `residual / sigma_1`.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// All singular values of `a`, nonincreasing.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.singular_values)
}

pub fn svd(a: &Matrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    if a.rows < a.cols {
        // A^T = V Sigma U^T
        let t = svd(&a.transpose())?;
        return Ok(Svd {
            singular_values: t.singular_values,
            u: t.v,
            v: t.u,
            sweeps: t.sweeps,
            residual: t.residual,
        });
    }
    let (rows, n) = (a.rows, a.cols);
    let mut work: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut right: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (rows as f64).sqrt();
    // Columns at rounding level carry no information; rotating them
    // against each other never settles.
    let floor = (f64::EPSILON * a.frobenius_norm()).powi(2);

    let schedule = round_robin(n);
    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NonConvergence {
                what: "Jacobi SVD",
                iterations: sweeps,
            });
        }
        sweeps += 1;
        let mut rotated = 0usize;
        for round in &schedule {
            let mut slots: Vec<Slot> = round
                .iter()
                .map(|&(p, q)| Slot {
                    p,
                    q,
                    ap: std::mem::take(&mut work[p]),
                    aq: std::mem::take(&mut work[q]),
                    vp: std::mem::take(&mut right[p]),
                    vq: std::mem::take(&mut right[q]),
                    rotated: false,
                })
                .collect();
            exec::for_each_mut(&mut slots, |s| s.rotate(tol, floor));
            for s in slots {
                rotated += s.rotated as usize;
                work[s.p] = s.ap;
                work[s.q] = s.aq;
                right[s.p] = s.vp;
                right[s.q] = s.vq;
            }
        }
        if rotated == 0 {
            break;
        }
    }

    let residual = reconstruction_residual(a, &work, &right);
    let norms: Vec<f64> = work.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let singular_values: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let u = order
        .iter()
        .map(|&k| {
            let s = norms[k];
            if s > 0.0 {
                work[k].iter().map(|x| x / s).collect()
            } else {
                vec![0.0; rows]
            }
        })
        .collect();
    let v = order.iter().map(|&k| right[k].clone()).collect();
    let sigma1 = singular_values.first().copied().unwrap_or(0.0);
    if residual > RESIDUAL_TOL * sigma1.max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(Error::NonConvergence {
            what: "Jacobi SVD (reconstruction residual)",
            iterations: sweeps,
        });
    }
    Ok(Svd {
        singular_values,
        u,
        v,
        sweeps,
        residual,
    })
}

struct Slot {
    p: usize,
    q: usize,
    ap: Vec<f64>,
    aq: Vec<f64>,
    vp: Vec<f64>,
    vq: Vec<f64>,
    rotated: bool,
}

impl Slot {
    fn rotate(&mut self, tol: f64, floor: f64) {
        let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
        for (x, y) in self.ap.iter().zip(&self.aq) {
            alpha += x * x;
            beta += y * y;
            gamma += x * y;
        }
        if alpha <= floor || beta <= floor || gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
            return;
        }
        let zeta = (beta - alpha) / (2.0 * gamma);
        let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = c * t;
        rotate_pair(&mut self.ap, &mut self.aq, c, s);
        rotate_pair(&mut self.vp, &mut self.vq, c, s);
        self.rotated = true;
    }
}

#[inline]
fn rotate_pair(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Circle-method tournament: `n - 1` rounds (`n` rounded up to even) of
/// disjoint pairs covering every pair exactly once.
fn round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n < 2 {
        return Vec::new();
    }
    let players = n + n % 2;
    let mut ring: Vec<usize> = (0..players).collect();
    let mut rounds = Vec::with_capacity(players - 1);
    for _ in 0..players - 1 {
        let round = (0..players / 2)
            .map(|k| (ring[k], ring[players - 1 - k]))
            .filter(|&(p, q)| p < n && q < n)
            .map(|(p, q)| (p.min(q), p.max(q)))
            .collect();
        rounds.push(round);
        let last = ring.pop().unwrap();
        ring.insert(1, last);
    }
    rounds
}

/// `||A - B V^T||_F` where `B = A V` is held column-wise in `work`.
fn reconstruction_residual(a: &Matrix, work: &[Vec<f64>], right: &[Vec<f64>]) -> f64 {
    let n = a.cols;
    let per_row = exec::map_range(a.rows, |i| {
        let mut acc = vec![0.0; n];
        for (bk, vk) in work.iter().zip(right) {
            let coef = bk[i];
            if coef != 0.0 {
                for (r, v) in acc.iter_mut().zip(vk) {
                    *r += coef * v;
                }
            }
        }
        a.row(i)
            .iter()
            .zip(&acc)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
    });
    per_row.iter().sum::<f64>().sqrt()
}
