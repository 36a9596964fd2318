//! Pairwise coordinate ascent (SMO) on the SVDD dual
//!
//! ```text
//! max  sum_i a_i K_ii - sum_ij a_i a_j K_ij
//! s.t. sum_i a_i = 1,  0 <= a_i <= C
//! ```
//!
//! With the Gaussian kernel `K_ii = 1`. The gradient of the objective is
//! `g_i = 1 - 2 (K a)_i`; at an optimum there is a shared multiplier `nu`
//! with `g_i = nu` on free variables, `g_i <= nu` where `a_i = 0` and
//! `g_i >= nu` where `a_i = C`.

use std::collections::VecDeque;
use std::rc::Rc;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{gaussian_from_sq, squared_distance, KernelMatrix};

/// Above this many rows the kernel is evaluated row by row on demand.
pub const DENSE_ROW_LIMIT: usize = 10_000;
const ROW_CACHE_BYTES: usize = 512 << 20;
const MAX_REFRESH_ROUNDS: usize = 20;

pub(crate) enum KernelSource<'a> {
    Dense(KernelMatrix),
    Rows(RowCache<'a>),
}

impl<'a> KernelSource<'a> {
    pub(crate) fn new(data: &'a Dataset, s: f64) -> Result<Self> {
        if data.n() <= DENSE_ROW_LIMIT {
            Ok(Self::Dense(KernelMatrix::new(data, s)?))
        } else {
            Ok(Self::Rows(RowCache::new(data, s, ROW_CACHE_BYTES)))
        }
    }

    fn n(&self) -> usize {
        match self {
            Self::Dense(k) => k.n(),
            Self::Rows(c) => c.data.n(),
        }
    }

    fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense(k) => k.mul_vec(v),
            Self::Rows(c) => c.mul_vec(v),
        }
    }

    /// Runs `f(K_i, K_j)` on two kernel rows.
    fn with_rows<T>(&mut self, i: usize, j: usize, f: impl FnOnce(&[f64], &[f64]) -> T) -> T {
        match self {
            Self::Dense(k) => f(k.row(i), k.row(j)),
            Self::Rows(c) => {
                let ri = c.row(i);
                let rj = c.row(j);
                f(&ri, &rj)
            }
        }
    }
}

/// FIFO cache of kernel rows for data too large for a dense matrix.
pub(crate) struct RowCache<'a> {
    data: &'a Dataset,
    s: f64,
    slots: Vec<Option<Rc<[f64]>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> RowCache<'a> {
    fn new(data: &'a Dataset, s: f64, budget_bytes: usize) -> Self {
        let row_bytes = data.n() * std::mem::size_of::<f64>();
        Self {
            data,
            s,
            slots: vec![None; data.n()],
            order: VecDeque::new(),
            capacity: (budget_bytes / row_bytes.max(1)).max(2),
        }
    }

    fn compute_row(&self, i: usize) -> Vec<f64> {
        let xi = self.data.row(i);
        let s = self.s;
        self.data
            .as_slice()
            .par_chunks_exact(self.data.m())
            .with_min_len(1024)
            .map(|xj| gaussian_from_sq(squared_distance(xi, xj), s))
            .collect()
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(r) = &self.slots[i] {
            return Rc::clone(r);
        }
        let r: Rc<[f64]> = self.compute_row(i).into();
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.slots[old] = None;
            }
        }
        self.order.push_back(i);
        self.slots[i] = Some(Rc::clone(&r));
        r
    }

    fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let data = self.data;
        let s = self.s;
        let support: Vec<usize> = (0..data.n()).filter(|&j| v[j] != 0.0).collect();
        (0..data.n())
            .into_par_iter()
            .map(|i| {
                let xi = data.row(i);
                support
                    .iter()
                    .map(|&j| v[j] * gaussian_from_sq(squared_distance(xi, data.row(j)), s))
                    .sum()
            })
            .collect()
    }
}

/// Converged dual state.
#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    /// `(K a)_i` recomputed exactly from the final multipliers.
    pub k_alpha: Vec<f64>,
    pub iterations: usize,
    pub max_violation: f64,
}

pub(crate) struct Smo<'k, 'a> {
    kernel: &'k mut KernelSource<'a>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    c: f64,
    tol: f64,
    iterations: usize,
}

impl<'k, 'a> Smo<'k, 'a> {
    pub(crate) fn new(kernel: &'k mut KernelSource<'a>, c: f64, tol: f64) -> Self {
        let n = kernel.n();
        // uniform start is feasible whenever n*C >= 1
        let alpha = vec![(1.0 / n as f64).min(c); n];
        let mut smo = Self {
            kernel,
            alpha,
            grad: Vec::new(),
            c,
            tol,
            iterations: 0,
        };
        smo.refresh_gradient();
        smo
    }

    fn refresh_gradient(&mut self) -> Vec<f64> {
        let ka = self.kernel.mul_vec(&self.alpha);
        self.grad = ka.iter().map(|v| 1.0 - 2.0 * v).collect();
        ka
    }

    /// Maximal violating pair `(i, j, g_i - g_j)`: `i` maximizes `g` over
    /// `a_i < C`, `j` minimizes it over `a_j > 0`. Lowest index wins ties.
    fn select_pair(&self) -> Option<(usize, usize, f64)> {
        let mut up: Option<(usize, f64)> = None;
        let mut down: Option<(usize, f64)> = None;
        for (k, (&a, &g)) in self.alpha.iter().zip(&self.grad).enumerate() {
            if a < self.c && up.is_none_or(|(_, best)| g > best) {
                up = Some((k, g));
            }
            if a > 0.0 && down.is_none_or(|(_, best)| g < best) {
                down = Some((k, g));
            }
        }
        match (up, down) {
            (Some((i, gi)), Some((j, gj))) => Some((i, j, gi - gj)),
            _ => None,
        }
    }

    fn max_violation(&self) -> f64 {
        self.select_pair().map_or(0.0, |(_, _, v)| v.max(0.0))
    }

    fn objective(&self) -> f64 {
        // sum a_i - a'Ka with a'Ka = sum a_i (1 - g_i) / 2
        let quad: f64 = self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (1.0 - g) / 2.0)
            .sum();
        self.alpha.iter().sum::<f64>() - quad
    }

    /// Moves mass `t` from `j` to `i`, updating the gradient.
    fn transfer(&mut self, i: usize, j: usize, t: f64, snap_i: bool, snap_j: bool) {
        self.alpha[i] = if snap_i { self.c } else { self.alpha[i] + t };
        self.alpha[j] = if snap_j { 0.0 } else { self.alpha[j] - t };
        let grad = &mut self.grad;
        self.kernel.with_rows(i, j, |ki, kj| {
            for ((g, a), b) in grad.iter_mut().zip(ki).zip(kj) {
                *g -= 2.0 * t * (a - b);
            }
        });
    }

    fn step(&mut self, i: usize, j: usize, gap: f64) {
        let kij = self.kernel.with_rows(i, j, |ki, _| ki[j]);
        let eta = 2.0 - 2.0 * kij;
        let room_i = self.c - self.alpha[i];
        let room_j = self.alpha[j];
        let bound = room_i.min(room_j);
        let t = if eta > 1e-15 {
            (gap / (2.0 * eta)).min(bound)
        } else {
            bound
        };
        let snap_i = t >= room_i;
        let snap_j = t >= room_j;
        self.transfer(i, j, t, snap_i, snap_j);
    }

    /// Ascends until the maximal violation drops below `tol` or the
    /// iteration budget runs out. Returns whether it converged.
    fn ascend(&mut self, budget: usize) -> bool {
        while self.iterations < budget {
            match self.select_pair() {
                Some((i, j, gap)) if gap >= self.tol => {
                    self.step(i, j, gap);
                    self.iterations += 1;
                }
                _ => return true,
            }
        }
        false
    }

    /// Moves every multiplier in `(0, cut]` onto the best receiving
    /// variable so that dropped support vectors carry exactly zero mass.
    fn snap_small(&mut self, cut: f64) -> bool {
        let mut changed = false;
        for k in 0..self.alpha.len() {
            let a = self.alpha[k];
            if a <= 0.0 || a > cut {
                continue;
            }
            let receiver = (0..self.alpha.len())
                .filter(|&r| r != k && self.alpha[r] > cut && self.alpha[r] + a <= self.c)
                .fold(None::<usize>, |best, r| match best {
                    Some(b) if self.grad[b] >= self.grad[r] => Some(b),
                    _ => Some(r),
                });
            if let Some(r) = receiver {
                let snap_r = self.alpha[r] + a >= self.c;
                self.transfer(r, k, a, snap_r, true);
                changed = true;
            }
        }
        changed
    }

    pub(crate) fn solve(mut self, max_iterations: usize, sv_cut: f64) -> Result<DualSolution> {
        let mut k_alpha;
        let mut rounds = 0;
        loop {
            let converged = self.ascend(max_iterations);
            // cancel drift accumulated by incremental gradient updates
            k_alpha = self.refresh_gradient();
            let violation = self.max_violation();
            if violation >= self.tol {
                if !converged || rounds >= MAX_REFRESH_ROUNDS {
                    return Err(Error::NotConverged {
                        iterations: self.iterations,
                        violation,
                        objective: self.objective(),
                    });
                }
                rounds += 1;
                continue;
            }
            if rounds < MAX_REFRESH_ROUNDS && self.snap_small(sv_cut) {
                rounds += 1;
                continue;
            }
            break;
        }
        Ok(DualSolution {
            max_violation: self.max_violation(),
            alpha: self.alpha,
            k_alpha,
            iterations: self.iterations,
        })
    }
}
