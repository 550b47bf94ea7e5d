//! Sharp bounds for `∫∫ f dC` over all copulas `C` through linear
//! assignment, shuffles of `M`, and the first-to-default swap integrand.
//!
//! For a step function constant on the cells of a uniform `n × n` grid the
//! extremal value over all copulas is `(1/n) Σ a_{i,σ(i)}` for an optimal
//! permutation `σ`, attained by a shuffle of `M`. Continuous integrands are
//! bracketed by the step functions built from cell minima and maxima.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CopulaError {
    #[error("matrix is not square")]
    NonSquare,
    #[error("matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("empty matrix")]
    Empty,
    #[error("invalid shuffle parameters: {0}")]
    BadShuffle(&'static str),
    #[error("integrand does not provide exact cell extrema")]
    NoExactExtrema,
    #[error("invalid FTD parameters: {0}")]
    BadFtdParams(&'static str),
    #[error("matrix is not doubly stochastic")]
    NotDoublyStochastic,
    #[error("grid level {0} is out of range")]
    BadLevel(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, CopulaError> {
        if n == 0 {
            return Err(CopulaError::Empty);
        }
        if data.len() != n * n {
            return Err(CopulaError::NonSquare);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CopulaError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CopulaError::NonSquare);
        }
        Self::new(n, rows.concat())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, CopulaError> {
        let data = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self::new(n, data)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    fn check_finite(&self) -> Result<(), CopulaError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(CopulaError::NonFinite(k / self.n, k % self.n)),
            None => Ok(()),
        }
    }

    fn negated(&self) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }

    /// `Σ a_{i,σ(i)}`.
    pub fn assignment_value(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

/// An optimal assignment: row `i` goes to column `perm[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub value: f64,
}

/// Linear sum assignment by shortest augmenting paths with dual
/// potentials, rows added in increasing order.
pub fn hungarian(cost: &SquareMatrix, sense: Sense) -> Result<Assignment, CopulaError> {
    cost.check_finite()?;
    let work = match sense {
        Sense::Min => cost.clone(),
        Sense::Max => cost.negated(),
    };
    let perm = solve_min(&work);
    Ok(Assignment {
        value: cost.assignment_value(&perm),
        perm,
    })
}

fn solve_min(a: &SquareMatrix) -> Vec<usize> {
    let n = a.size();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // p[j]: row (1-based) matched to column j; column 0 is a sentinel
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = a.row(i0 - 1);
            let ui = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - ui - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

/// The five-step matrix-reduction form (row reduction, starring, covering,
/// priming, adjustment). Slower; kept as a cross-check for [`hungarian`].
pub fn munkres_reference(cost: &SquareMatrix, sense: Sense) -> Result<Assignment, CopulaError> {
    cost.check_finite()?;
    let n = cost.size();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            cost.row(i)
                .iter()
                .map(|&v| if sense == Sense::Max { -v } else { v })
                .collect()
        })
        .collect();
    // step 1: subtract row minima, then column minima
    for row in m.iter_mut() {
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        row.iter_mut().for_each(|v| *v -= min);
    }
    for j in 0..n {
        let min = (0..n).map(|i| m[i][j]).fold(f64::INFINITY, f64::min);
        (0..n).for_each(|i| m[i][j] -= min);
    }
    // step 2: star independent zeros
    let mut star = vec![vec![false; n]; n];
    let mut prime = vec![vec![false; n]; n];
    let mut row_cover = vec![false; n];
    let mut col_cover = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if m[i][j] == 0.0 && !row_cover[i] && !col_cover[j] {
                star[i][j] = true;
                row_cover[i] = true;
                col_cover[j] = true;
            }
        }
    }
    row_cover.fill(false);
    col_cover.fill(false);
    loop {
        // step 3: cover starred columns
        for j in 0..n {
            col_cover[j] = (0..n).any(|i| star[i][j]);
        }
        if col_cover.iter().filter(|&&c| c).count() == n {
            break;
        }
        // step 4: prime uncovered zeros until one has no star in its row
        let (pr, pc) = loop {
            let found = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .find(|&(i, j)| m[i][j] == 0.0 && !row_cover[i] && !col_cover[j]);
            match found {
                Some((i, j)) => {
                    prime[i][j] = true;
                    match (0..n).find(|&c| star[i][c]) {
                        Some(c) => {
                            row_cover[i] = true;
                            col_cover[c] = false;
                        }
                        None => break (i, j),
                    }
                }
                None => {
                    // step 6: shift by the smallest uncovered value
                    let mut min = f64::INFINITY;
                    for i in 0..n {
                        for j in 0..n {
                            if !row_cover[i] && !col_cover[j] {
                                min = min.min(m[i][j]);
                            }
                        }
                    }
                    for i in 0..n {
                        for j in 0..n {
                            if row_cover[i] {
                                m[i][j] += min;
                            }
                            if !col_cover[j] {
                                m[i][j] -= min;
                            }
                        }
                    }
                }
            }
        };
        // step 5: alternate primes and stars along a path
        let mut path = vec![(pr, pc)];
        loop {
            let (_, c) = *path.last().unwrap();
            let Some(r) = (0..n).find(|&r| star[r][c]) else {
                break;
            };
            path.push((r, c));
            let c2 = (0..n).find(|&c2| prime[r][c2]).expect("primed zero in row");
            path.push((r, c2));
        }
        for &(r, c) in &path {
            star[r][c] = !star[r][c];
        }
        prime.iter_mut().for_each(|row| row.fill(false));
        row_cover.fill(false);
        col_cover.fill(false);
    }
    let perm: Vec<usize> = (0..n)
        .map(|i| (0..n).find(|&j| star[i][j]).expect("complete assignment"))
        .collect();
    Ok(Assignment {
        value: cost.assignment_value(&perm),
        perm,
    })
}

/// Step function on a grid of cells; `values[i][j]` on
/// `[r_i, r_{i+1}) × [c_j, c_{j+1})`.
#[derive(Clone, Debug)]
pub struct GridFunction {
    values: SquareMatrix,
    row_breaks: Vec<f64>,
    col_breaks: Vec<f64>,
}

impl GridFunction {
    /// Uniform grid `π_n × π_n`.
    pub fn uniform(values: SquareMatrix) -> Self {
        let n = values.size();
        let breaks: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        GridFunction {
            values,
            row_breaks: breaks.clone(),
            col_breaks: breaks,
        }
    }

    pub fn with_breaks(values: SquareMatrix, row_breaks: Vec<f64>, col_breaks: Vec<f64>) -> Result<Self, CopulaError> {
        let n = values.size();
        let ok = |b: &[f64]| b.len() == n + 1 && b[0] == 0.0 && b[n] == 1.0 && b.windows(2).all(|w| w[0] < w[1]);
        if !ok(&row_breaks) || !ok(&col_breaks) {
            return Err(CopulaError::BadShuffle("breakpoints must increase from 0 to 1"));
        }
        Ok(GridFunction {
            values,
            row_breaks,
            col_breaks,
        })
    }

    pub fn values(&self) -> &SquareMatrix {
        &self.values
    }

    pub fn is_uniform(&self) -> bool {
        let n = self.values.size() as f64;
        let uni = |b: &[f64]| b.iter().enumerate().all(|(k, &x)| x == k as f64 / n);
        uni(&self.row_breaks) && uni(&self.col_breaks)
    }

    /// Value at a point of `[0, 1)²`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let n = self.values.size();
        let i = self.row_breaks.partition_point(|&b| b <= x).clamp(1, n) - 1;
        let j = self.col_breaks.partition_point(|&b| b <= y).clamp(1, n) - 1;
        self.values.get(i, j)
    }
}

/// Shuffle of `M` with parameters `{n, s, σ, ω}`: mass `s_i - s_{i-1}`
/// spread on the diagonal (ω = +1) or antidiagonal (ω = -1) of the square
/// `[s_{i-1}, s_i) × [t_{σ(i)-1}, t_{σ(i)})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShuffleOfM {
    s: Vec<f64>,
    t: Vec<f64>,
    perm: Vec<usize>,
    orientation: Vec<i8>,
}

impl ShuffleOfM {
    pub fn new(s: Vec<f64>, perm: Vec<usize>, orientation: Vec<i8>) -> Result<Self, CopulaError> {
        let n = perm.len();
        if n == 0 || s.len() != n + 1 || orientation.len() != n {
            return Err(CopulaError::BadShuffle("length mismatch"));
        }
        if s[0] != 0.0 || s[n] != 1.0 || s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CopulaError::BadShuffle("s must increase from 0 to 1"));
        }
        let mut seen = vec![false; n];
        for &j in &perm {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return Err(CopulaError::BadShuffle("σ is not a permutation"));
            }
        }
        if orientation.iter().any(|&w| w != 1 && w != -1) {
            return Err(CopulaError::BadShuffle("ω must be ±1"));
        }
        // column σ(i) has the width of row i
        let mut widths = vec![0.0; n];
        for (i, &j) in perm.iter().enumerate() {
            widths[j] = s[i + 1] - s[i];
        }
        let mut t = vec![0.0];
        for w in widths {
            t.push(t.last().unwrap() + w);
        }
        t[n] = 1.0;
        Ok(ShuffleOfM {
            s,
            t,
            perm,
            orientation,
        })
    }

    /// Uniform `s = π_n` with the given permutation and all ω = +1.
    pub fn uniform(perm: Vec<usize>) -> Result<Self, CopulaError> {
        let n = perm.len();
        let s = (0..=n).map(|k| k as f64 / n as f64).collect();
        Self::new(s, perm, vec![1; n])
    }

    /// The comonotone copula `M`.
    pub fn m() -> Self {
        Self::uniform(vec![0]).expect("valid")
    }

    /// The countermonotone copula `W`.
    pub fn w() -> Self {
        Self::new(vec![0.0, 1.0], vec![0], vec![-1]).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn orientation(&self) -> &[i8] {
        &self.orientation
    }

    /// Support segments `[x0, y0, x1, y1]`, one per cell.
    pub fn segments(&self) -> Vec<[f64; 4]> {
        (0..self.n())
            .map(|i| {
                let (x0, x1) = (self.s[i], self.s[i + 1]);
                let j = self.perm[i];
                let (y0, y1) = (self.t[j], self.t[j + 1]);
                if self.orientation[i] == 1 {
                    [x0, y0, x1, y1]
                } else {
                    [x0, y1, x1, y0]
                }
            })
            .collect()
    }

    /// Cycle decomposition of σ, 1-based, each cycle starting at its
    /// smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                cycle.push(k + 1);
                k = self.perm[k];
            }
            out.push(cycle);
        }
        out
    }

    /// `C(u, v)`: mass of `[0, u] × [0, v]`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        self.segments()
            .iter()
            .map(|&[x0, y0, x1, y1]| {
                let xs = (u.min(x1) - x0).max(0.0);
                if xs == 0.0 {
                    return 0.0;
                }
                let w = x1 - x0;
                if y1 > y0 {
                    // y = y0 + (x - x0): points with x ≤ u and y ≤ v
                    xs.min((v - y0).clamp(0.0, w))
                } else {
                    // y = y0 - (x - x0), y ≤ v once x ≥ x0 + (y0 - v)
                    let from = (y0 - v).clamp(0.0, w);
                    (xs - from).max(0.0)
                }
            })
            .sum()
    }
}

/// A bivariate integrand on `[0, 1]²`.
pub trait Integrand: Sync {
    fn eval(&self, x: f64, y: f64) -> f64;

    /// Exact `(min, max)` over the closed cell, when known.
    fn cell_range(&self, _x: (f64, f64), _y: (f64, f64)) -> Option<(f64, f64)> {
        None
    }

    /// A Lipschitz constant, when known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

/// `sin(π(x + y))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SinSum;

impl Integrand for SinSum {
    fn eval(&self, x: f64, y: f64) -> f64 {
        (PI * (x + y)).sin()
    }

    fn cell_range(&self, x: (f64, f64), y: (f64, f64)) -> Option<(f64, f64)> {
        let (lo, hi) = (x.0 + y.0, x.1 + y.1);
        let mut min = (PI * lo).sin().min((PI * hi).sin());
        let mut max = (PI * lo).sin().max((PI * hi).sin());
        // interior critical points u = 1/2 + k
        let mut k = (lo - 0.5).ceil();
        while k + 0.5 <= hi {
            let u = k + 0.5;
            if u > lo && u < hi {
                let v = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                min = min.min(v);
                max = max.max(v);
            }
            k += 1.0;
        }
        Some((min, max))
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(PI * SQRT_2)
    }
}

/// `x · y`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Product;

impl Integrand for Product {
    fn eval(&self, x: f64, y: f64) -> f64 {
        x * y
    }

    fn cell_range(&self, x: (f64, f64), y: (f64, f64)) -> Option<(f64, f64)> {
        Some((x.0 * y.0, x.1 * y.1))
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(SQRT_2)
    }
}

/// Constant integrand.
#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl Integrand for Constant {
    fn eval(&self, _x: f64, _y: f64) -> f64 {
        self.0
    }

    fn cell_range(&self, _x: (f64, f64), _y: (f64, f64)) -> Option<(f64, f64)> {
        Some((self.0, self.0))
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Wraps a closure as an integrand without extrema information.
pub struct FnIntegrand<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> Integrand for FnIntegrand<F> {
    fn eval(&self, x: f64, y: f64) -> f64 {
        (self.0)(x, y)
    }
}

impl Integrand for GridFunction {
    fn eval(&self, x: f64, y: f64) -> f64 {
        GridFunction::eval(self, x, y)
    }
}

/// How cell extrema are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampler {
    /// Exact extrema from [`Integrand::cell_range`].
    Exact,
    /// Extrema over a `g × g` lattice of the closed cell, corners included
    /// (`g = 1` samples the lower-left corner only).
    Grid(usize),
}

impl Sampler {
    fn cell(&self, f: &dyn Integrand, x: (f64, f64), y: (f64, f64)) -> Result<(f64, f64), CopulaError> {
        match *self {
            Sampler::Exact => f.cell_range(x, y).ok_or(CopulaError::NoExactExtrema),
            Sampler::Grid(g) => {
                let g = g.max(1);
                let step = |k: usize, (a, b): (f64, f64)| {
                    if g == 1 {
                        a
                    } else {
                        a + (b - a) * k as f64 / (g - 1) as f64
                    }
                };
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for kx in 0..g {
                    let xv = step(kx, x);
                    for ky in 0..g {
                        let v = f.eval(xv, step(ky, y));
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                Ok((lo, hi))
            }
        }
    }
}

/// Extremal value of `∫ f dC` for a step function on a uniform grid, with
/// an attaining shuffle of `M`.
pub fn copula_extremal(f: &GridFunction, sense: Sense) -> Result<(f64, ShuffleOfM), CopulaError> {
    if !f.is_uniform() {
        return Err(CopulaError::BadShuffle("copula_extremal needs a uniform grid"));
    }
    let a = hungarian(f.values(), sense)?;
    let n = f.values().size() as f64;
    Ok((a.value / n, ShuffleOfM::uniform(a.perm)?))
}

/// Cell-minimum and cell-maximum step functions on the `2^level` grid.
pub fn bracket_grids(
    f: &dyn Integrand,
    level: u32,
    sampler: Sampler,
) -> Result<(GridFunction, GridFunction), CopulaError> {
    if level > 14 {
        return Err(CopulaError::BadLevel(level));
    }
    let n = 1usize << level;
    let h = 1.0 / n as f64;
    let rows: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 * h, (i + 1) as f64 * h);
            (0..n)
                .map(|j| sampler.cell(f, x, (j as f64 * h, (j + 1) as f64 * h)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let lower = SquareMatrix::new(n, rows.iter().flatten().map(|p| p.0).collect())?;
    let upper = SquareMatrix::new(n, rows.iter().flatten().map(|p| p.1).collect())?;
    Ok((GridFunction::uniform(lower), GridFunction::uniform(upper)))
}

#[derive(Clone, Debug)]
pub struct SandwichResult {
    /// Cells per axis, `2^level`.
    pub cells: usize,
    pub lb: f64,
    pub ub: f64,
    pub lb_shuffle: ShuffleOfM,
    pub ub_shuffle: ShuffleOfM,
    /// `L√2/2^level` when the integrand reports a Lipschitz constant.
    pub gap_bound: Option<f64>,
    /// True only for exact extrema, where `lb ≤ optimum ≤ ub` is guaranteed.
    pub hard: bool,
}

/// Lower and upper bounds for the extremal value of `∫ f dC` at dyadic
/// `level`.
pub fn sandwich_bounds(
    f: &dyn Integrand,
    level: u32,
    sense: Sense,
    sampler: Sampler,
) -> Result<SandwichResult, CopulaError> {
    let (lower, upper) = bracket_grids(f, level, sampler)?;
    let (lb, lb_shuffle) = copula_extremal(&lower, sense)?;
    let (ub, ub_shuffle) = copula_extremal(&upper, sense)?;
    let gap_bound = f.lipschitz().map(|l| lipschitz_gap(l, level));
    if let (Some(g), Sampler::Exact) = (gap_bound, sampler) {
        debug_assert!(ub - lb <= g + 1e-12, "gap {} exceeds Lipschitz bound {g}", ub - lb);
    }
    Ok(SandwichResult {
        cells: 1 << level,
        lb,
        ub,
        lb_shuffle,
        ub_shuffle,
        gap_bound,
        hard: sampler == Sampler::Exact,
    })
}

/// `∫∫ f dC` for a shuffle of `M`, by the composite midpoint rule with
/// `quad_points` nodes on every segment.
pub fn shuffle_integrate(f: &dyn Integrand, sh: &ShuffleOfM, quad_points: usize) -> f64 {
    let q = quad_points.max(2);
    sh.segments()
        .iter()
        .map(|&[x0, y0, x1, y1]| {
            let w = x1 - x0;
            let h = w / q as f64;
            let slope = if y1 > y0 { 1.0 } else { -1.0 };
            let sum: f64 = (0..q)
                .map(|k| {
                    let dx = (k as f64 + 0.5) * h;
                    f.eval(x0 + dx, y0 + slope * dx)
                })
                .sum();
            sum * h
        })
        .sum()
}

/// Fréchet–Hoeffding bounds `(W(u,v), M(u,v))`.
pub fn frechet(u: f64, v: f64) -> (f64, f64) {
    ((u + v - 1.0).max(0.0), u.min(v))
}

/// Checks that a matrix of cell masses describes a copula at grid
/// resolution: nonnegative entries and uniform margins. Both normalizations
/// are accepted: masses (total 1, margins `1/n`) and the doubly stochastic
/// `B = n · masses` (margins 1).
pub fn copula_axioms_check(m: &SquareMatrix) -> bool {
    const TOL: f64 = 1e-12;
    let n = m.size();
    if m.data.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return false;
    }
    let total: f64 = m.data.iter().sum();
    let margin = if (total - 1.0).abs() <= TOL * n as f64 {
        1.0 / n as f64
    } else if (total - n as f64).abs() <= TOL * n as f64 {
        1.0
    } else {
        return false;
    };
    let rows_ok = (0..n).all(|i| (m.row(i).iter().sum::<f64>() - margin).abs() <= TOL);
    let cols_ok = (0..n).all(|j| ((0..n).map(|i| m.get(i, j)).sum::<f64>() - margin).abs() <= TOL);
    rows_ok && cols_ok
}

/// Doubly stochastic matrix `B_C = n · (cell masses of C)`.
#[derive(Clone, Debug)]
pub struct DoublyStochasticGrid {
    b: SquareMatrix,
}

impl DoublyStochasticGrid {
    pub fn new(b: SquareMatrix) -> Result<Self, CopulaError> {
        let total: f64 = b.data.iter().sum();
        if (total - b.size() as f64).abs() > 1e-9 || !copula_axioms_check(&b) {
            return Err(CopulaError::NotDoublyStochastic);
        }
        Ok(DoublyStochasticGrid { b })
    }

    pub fn from_permutation(perm: &[usize]) -> Result<Self, CopulaError> {
        let n = perm.len();
        let b = SquareMatrix::from_fn(n, |i, j| if perm[i] == j { 1.0 } else { 0.0 })?;
        Self::new(b)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.b
    }

    /// `∫ f dC` for a step function on the same uniform grid.
    pub fn integrate(&self, f: &GridFunction) -> f64 {
        let n = self.b.size();
        let total: f64 = (0..n * n).map(|k| self.b.data[k] * f.values().data[k]).sum();
        total / n as f64
    }
}

/// Parameters of a two-name first-to-default swap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtdParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub recovery1: f64,
    pub recovery2: f64,
    pub maturity: f64,
    pub rate: f64,
    pub payment_times: Vec<f64>,
}

impl Default for FtdParams {
    fn default() -> Self {
        FtdParams {
            lambda1: 1.0 / 3.0,
            lambda2: 0.5,
            recovery1: 0.5,
            recovery2: 0.7,
            maturity: 2.0,
            rate: 0.05,
            payment_times: vec![0.0, 1.0, 2.0],
        }
    }
}

impl FtdParams {
    pub fn validate(&self) -> Result<(), CopulaError> {
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return Err(CopulaError::BadFtdParams("intensities must be positive"));
        }
        if !(0.0..=1.0).contains(&self.recovery1) || !(0.0..=1.0).contains(&self.recovery2) {
            return Err(CopulaError::BadFtdParams("recovery rates must lie in [0, 1]"));
        }
        if self.payment_times.first() != Some(&0.0) {
            return Err(CopulaError::BadFtdParams("first payment time must be 0"));
        }
        if self.payment_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CopulaError::BadFtdParams("payment times must increase"));
        }
        if !(self.maturity >= 0.0) || !(self.rate >= 0.0) {
            return Err(CopulaError::BadFtdParams("maturity and rate must be nonnegative"));
        }
        Ok(())
    }
}

/// Exponential inverse distribution function `-log(1 - x)/λ`.
pub fn exp_quantile(x: f64, lambda: f64) -> f64 {
    -(-x).ln_1p() / lambda
}

/// Spread integrand: discounted loss at the first default over the
/// expected discounted premium leg. On `τ1 = τ2` only asset 1 pays, and
/// the `t_0 = 0` premium always counts.
pub fn ftd_integrand(x: f64, y: f64, p: &FtdParams) -> f64 {
    let t1 = exp_quantile(x, p.lambda1);
    let t2 = exp_quantile(y, p.lambda2);
    let first = t1.min(t2);
    let mut loss = 0.0;
    if t1 <= t2.min(p.maturity) {
        loss += 1.0 - p.recovery1;
    }
    if t2 < t1 && t2 <= p.maturity {
        loss += 1.0 - p.recovery2;
    }
    let premium: f64 = 1.0
        + p.payment_times[1..]
            .iter()
            .filter(|&&t| t1 > t && t2 > t)
            .map(|&t| (-p.rate * t).exp())
            .sum::<f64>();
    if loss == 0.0 {
        return 0.0;
    }
    (-p.rate * first).exp() * loss / premium
}

/// The spread integrand as an [`Integrand`].
#[derive(Clone, Debug)]
pub struct Ftd(pub FtdParams);

impl Integrand for Ftd {
    fn eval(&self, x: f64, y: f64) -> f64 {
        ftd_integrand(x, y, &self.0)
    }
}

/// `L√2 / 2^n`.
pub fn lipschitz_gap(lipschitz: f64, level: u32) -> f64 {
    lipschitz * SQRT_2 / 2f64.powi(level as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_assignments() {
        let a = SquareMatrix::from_rows(&[vec![7.0]]).unwrap();
        assert_eq!(hungarian(&a, Sense::Min).unwrap(), Assignment { perm: vec![0], value: 7.0 });
        let b = SquareMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![3.0, 6.0, 9.0]]).unwrap();
        let r = hungarian(&b, Sense::Min).unwrap();
        assert_eq!(r.value, 10.0);
        assert_eq!(r.perm, vec![2, 1, 0]);
        assert_eq!(munkres_reference(&b, Sense::Min).unwrap().value, 10.0);
        assert_eq!(hungarian(&b, Sense::Max).unwrap().value, 14.0);
        assert_eq!(SquareMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap_err(), CopulaError::NonSquare);
        let bad = SquareMatrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert_eq!(hungarian(&bad, Sense::Min).unwrap_err(), CopulaError::NonFinite(0, 0));
    }

    #[test]
    fn half_indicator() {
        let f = GridFunction::uniform(SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
        let (max, sh) = copula_extremal(&f, Sense::Max).unwrap();
        assert_eq!(max, 1.0);
        assert_eq!(sh.perm(), &[0, 1]);
        let (min, sh) = copula_extremal(&f, Sense::Min).unwrap();
        assert_eq!(min, 0.0);
        assert_eq!(sh.perm(), &[1, 0]);
        let one = GridFunction::uniform(SquareMatrix::from_rows(&[vec![2.5]]).unwrap());
        let (v, sh) = copula_extremal(&one, Sense::Max).unwrap();
        assert_eq!(v, 2.5);
        assert_eq!(sh, ShuffleOfM::m());
    }

    #[test]
    fn frechet_examples() {
        assert_eq!(frechet(0.0, 0.4), (0.0, 0.0));
        let (w, m) = frechet(1.0, 0.4);
        assert!((w - 0.4).abs() < 1e-15 && m == 0.4);
        let (w, m) = frechet(0.7, 0.6);
        assert!((w - 0.3).abs() < 1e-15 && m == 0.6);
    }

    #[test]
    fn shuffle_integrals() {
        assert!((shuffle_integrate(&Product, &ShuffleOfM::m(), 10_000) - 1.0 / 3.0).abs() < 1e-6);
        assert!((shuffle_integrate(&Product, &ShuffleOfM::w(), 10_000) - 1.0 / 6.0).abs() < 1e-6);
        let sh = ShuffleOfM::new(vec![0.0, 0.75, 1.0], vec![0, 1], vec![-1, 1]).unwrap();
        let want = 3.0 / (4.0 * SQRT_2) - 1.0 / (2.0 * PI);
        assert!((shuffle_integrate(&SinSum, &sh, 10_000) - want).abs() < 1e-8);
        assert!((want - 0.371175).abs() < 1e-6);
    }

    #[test]
    fn shuffle_geometry() {
        let sh = ShuffleOfM::new(vec![0.0, 0.25, 1.0], vec![1, 0], vec![1, -1]).unwrap();
        assert_eq!(sh.t(), &[0.0, 0.75, 1.0]);
        assert_eq!(sh.segments(), vec![[0.0, 0.75, 0.25, 1.0], [0.25, 0.75, 1.0, 0.0]]);
        assert_eq!(sh.cycles(), vec![vec![1, 2]]);
        // uniform margins
        for k in 0..=8 {
            let u = k as f64 / 8.0;
            assert!((sh.cdf(u, 1.0) - u).abs() < 1e-15);
            assert!((sh.cdf(1.0, u) - u).abs() < 1e-15);
        }
        assert!(ShuffleOfM::new(vec![0.0, 1.0], vec![1], vec![1]).is_err());
        assert!(ShuffleOfM::new(vec![0.0, 0.5, 1.0], vec![0, 0], vec![1, 1]).is_err());
        assert!(ShuffleOfM::new(vec![0.0, 0.5, 1.0], vec![0, 1], vec![1, 0]).is_err());
    }

    #[test]
    fn axioms() {
        let n = 4;
        let id = SquareMatrix::from_fn(n, |i, j| if i == j { 1.0 / n as f64 } else { 0.0 }).unwrap();
        assert!(copula_axioms_check(&id));
        let mut neg = SquareMatrix::from_fn(2, |_, _| 0.25).unwrap();
        neg.data[0] = -0.1;
        assert!(!copula_axioms_check(&neg));
        assert!(DoublyStochasticGrid::from_permutation(&[2, 0, 1]).is_ok());
        assert!(DoublyStochasticGrid::new(id).is_err());
    }

    #[test]
    fn sin_cell_range() {
        // the cell around u = 1/2 reaches the maximum 1
        let (lo, hi) = SinSum.cell_range((0.2, 0.3), (0.2, 0.3)).unwrap();
        assert_eq!(hi, 1.0);
        assert!((lo - (0.4 * PI).sin()).abs() < 1e-15);
        let (lo, hi) = SinSum.cell_range((0.7, 0.8), (0.7, 0.8)).unwrap();
        assert_eq!(lo, -1.0);
        assert!((hi - (1.4 * PI).sin()).abs() < 1e-15);
    }

    #[test]
    fn ftd_values() {
        let p = FtdParams::default();
        p.validate().unwrap();
        assert_eq!(ftd_integrand(0.0, 0.0, &p), 0.5);
        // both inverse times beyond maturity
        assert_eq!(ftd_integrand(0.9, 0.9, &p), 0.0);
        // asset 2 defaults first at τ ≈ 0.2
        let y = 1.0 - (-0.1f64).exp();
        let v = ftd_integrand(0.99, y, &p);
        assert!((v - (-0.05 * 0.2f64).exp() * 0.3).abs() < 1e-12);
        let bad = FtdParams {
            payment_times: vec![0.5, 1.0],
            ..FtdParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(lipschitz_gap(0.0, 5), 0.0);
        assert!((lipschitz_gap(PI * SQRT_2, 10) - 2.0 * PI / 1024.0).abs() < 1e-15);
        assert_eq!(lipschitz_gap(3.0, 4) / 2.0, lipschitz_gap(3.0, 5));
    }
}
