//! Extreme and star discrepancy of finite point sets, the Halton bound,
//! decomposition bounds and a QMC integration harness.

use std::cmp::Ordering;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactfield::{AlgExt, FieldError, FieldExt, Rational};
use crate::sequences::PointStream;

/// Largest point count accepted by the exact grid enumeration, per dimension.
pub const GRID_BUDGET: [usize; 4] = [0, usize::MAX, 4096, 512];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscrepancyError {
    #[error("empty point set")]
    EmptyInput,
    #[error("coordinate {0} outside [0, 1)")]
    OutOfRange(f64),
    #[error("points have inconsistent dimension")]
    Ragged,
    #[error("dimension {0} not supported (1 ≤ s ≤ 3)")]
    Dimension(usize),
    #[error("{n} points in dimension {s} exceed the enumeration budget of {budget}")]
    BudgetExceeded { n: usize, s: usize, budget: usize },
    #[error("subsets do not partition the point set")]
    NotAPartitionOfSet,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exact-1d")]
    Exact1d,
    #[serde(rename = "grid-exact")]
    GridExact,
    #[serde(rename = "oracle")]
    Oracle,
}

/// Box attaining the supremum. `closed` tells whether the extremal count
/// includes points on the upper faces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Argmax {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    #[serde(rename = "N")]
    pub n: usize,
    /// Extreme discrepancy; only computed in one dimension.
    pub dn: Option<f64>,
    pub dn_star: f64,
    pub argmax: Argmax,
    pub method: Method,
}

fn check_unit(x: f64) -> Result<(), DiscrepancyError> {
    if (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(DiscrepancyError::OutOfRange(x))
    }
}

/// One-dimensional `D_N` and `D*_N` from the order statistics.
pub fn discrepancy_1d(points: &[f64]) -> Result<DiscrepancyReport, DiscrepancyError> {
    if points.is_empty() {
        return Err(DiscrepancyError::EmptyInput);
    }
    for &x in points {
        check_unit(x)?;
    }
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(report_from_sorted(&xs))
}

fn report_from_sorted(xs: &[f64]) -> DiscrepancyReport {
    let n = xs.len();
    let nf = n as f64;
    let (mut hi_i, mut lo_i) = (0, 0);
    let (mut hi_v, mut lo_v) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut star = 0.0f64;
    for (k, &x) in xs.iter().enumerate() {
        let v = (k + 1) as f64 / nf - x;
        if v > hi_v {
            hi_v = v;
            hi_i = k;
        }
        if v < lo_v {
            lo_v = v;
            lo_i = k;
        }
        star = star.max(v).max(x - k as f64 / nf);
    }
    let dn = 1.0 / nf + hi_v - lo_v;
    // lo_i ≤ hi_i: closed [x_lo, x_hi] holds too many points; otherwise the
    // open (x_hi, x_lo) holds too few
    let argmax = if lo_i <= hi_i {
        Argmax {
            lo: vec![xs[lo_i]],
            hi: vec![xs[hi_i]],
            closed: true,
        }
    } else {
        Argmax {
            lo: vec![xs[hi_i]],
            hi: vec![xs[lo_i]],
            closed: false,
        }
    };
    DiscrepancyReport {
        n,
        dn: Some(dn),
        dn_star: star,
        argmax,
        method: Method::Exact1d,
    }
}

/// Exact `(D_N, D*_N)` for rational points.
pub fn discrepancy_1d_exact(points: &[Rational]) -> Result<(Rational, Rational), DiscrepancyError> {
    if points.is_empty() {
        return Err(DiscrepancyError::EmptyInput);
    }
    let mut xs = points.to_vec();
    xs.sort();
    let n = Rational::from_integer(xs.len().into());
    let one = Rational::one();
    if xs[0] < Rational::zero() || xs[xs.len() - 1] >= one {
        return Err(DiscrepancyError::OutOfRange(f64::NAN));
    }
    let mut hi: Option<Rational> = None;
    let mut lo: Option<Rational> = None;
    let mut star = Rational::zero();
    for (k, x) in xs.iter().enumerate() {
        let v = Rational::from_integer((k + 1).into()) / &n - x;
        let w = x - Rational::from_integer(k.into()) / &n;
        if hi.as_ref().is_none_or(|h| v > *h) {
            hi = Some(v.clone());
        }
        if lo.as_ref().is_none_or(|l| v < *l) {
            lo = Some(v.clone());
        }
        star = star.max(v).max(w);
    }
    let dn = one / &n + hi.unwrap() - lo.unwrap();
    Ok((dn, star))
}

/// Exact `(D_N, D*_N)` for points in a common number field.
pub fn discrepancy_1d_field(points: &[AlgExt]) -> Result<(AlgExt, AlgExt), DiscrepancyError> {
    let Some(first) = points.first() else {
        return Err(DiscrepancyError::EmptyInput);
    };
    let field = first.field().clone();
    let mut xs = points.to_vec();
    for x in &xs {
        x.checked_cmp(first)?;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let zero = field.zero();
    let one = field.one();
    if xs[0] < zero || xs[xs.len() - 1] >= one {
        return Err(DiscrepancyError::OutOfRange(f64::NAN));
    }
    let n = xs.len() as i64;
    let inv_n = field.from_rational(Rational::new(1.into(), n.into()));
    let mut hi: Option<AlgExt> = None;
    let mut lo: Option<AlgExt> = None;
    let mut star = zero;
    for (k, x) in xs.iter().enumerate() {
        let v = &inv_n.scale_int(k as i64 + 1) - x;
        let w = x - &inv_n.scale_int(k as i64);
        if hi.as_ref().is_none_or(|h| v > *h) {
            hi = Some(v.clone());
        }
        if lo.as_ref().is_none_or(|l| v < *l) {
            lo = Some(v.clone());
        }
        if v > star {
            star = v;
        }
        if w > star {
            star = w;
        }
    }
    let dn = &(&inv_n + &hi.unwrap()) - &lo.unwrap();
    Ok((dn, star))
}

/// Field points sorted exactly, then measured in double precision.
pub fn discrepancy_1d_sorted_field(points: &[AlgExt]) -> Result<DiscrepancyReport, DiscrepancyError> {
    if points.is_empty() {
        return Err(DiscrepancyError::EmptyInput);
    }
    let mut xs = points.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let fs: Vec<f64> = xs.iter().map(AlgExt::to_f64).collect();
    for &x in &fs {
        check_unit(x)?;
    }
    Ok(report_from_sorted(&fs))
}

/// Sorted distinct coordinate values along one axis, with 1 appended.
fn axis_grid(points: &[Vec<f64>], axis: usize) -> Vec<f64> {
    let mut g: Vec<f64> = points.iter().map(|p| p[axis]).collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g.push(1.0);
    g
}

/// Index of the first grid value `≥ x`.
fn rank(grid: &[f64], x: f64) -> usize {
    grid.partition_point(|&g| g < x)
}

#[derive(Clone, Copy, Debug)]
struct Best {
    value: f64,
    corner: [usize; 3],
    closed: bool,
}

impl Best {
    fn none() -> Self {
        Best {
            value: f64::NEG_INFINITY,
            corner: [0; 3],
            closed: false,
        }
    }

    fn offer(&mut self, value: f64, corner: [usize; 3], closed: bool) {
        if value > self.value {
            *self = Best {
                value,
                corner,
                closed,
            };
        }
    }

    fn max(self, other: Best) -> Best {
        // ties keep the lexicographically first corner for determinism
        match self.value.partial_cmp(&other.value) {
            Some(Ordering::Less) => other,
            Some(Ordering::Greater) => self,
            _ => {
                if other.corner < self.corner {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Exact star discrepancy for `s ≤ 3` by enumerating anchored boxes whose
/// upper corner lies on the coordinate grid.
pub fn star_discrepancy_multi(points: &[Vec<f64>]) -> Result<DiscrepancyReport, DiscrepancyError> {
    let Some(first) = points.first() else {
        return Err(DiscrepancyError::EmptyInput);
    };
    let s = first.len();
    if points.iter().any(|p| p.len() != s) {
        return Err(DiscrepancyError::Ragged);
    }
    if s == 0 || s > 3 {
        return Err(DiscrepancyError::Dimension(s));
    }
    for p in points {
        for &x in p {
            check_unit(x)?;
        }
    }
    if s == 1 {
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        return discrepancy_1d(&xs);
    }
    let n = points.len();
    if n > GRID_BUDGET[s] {
        return Err(DiscrepancyError::BudgetExceeded {
            n,
            s,
            budget: GRID_BUDGET[s],
        });
    }
    let grids: Vec<Vec<f64>> = (0..s).map(|a| axis_grid(points, a)).collect();
    let ranks: Vec<Vec<usize>> = points
        .iter()
        .map(|p| (0..s).map(|a| rank(&grids[a], p[a])).collect())
        .collect();
    let best = if s == 2 {
        star_2d(&grids, &ranks, n)
    } else {
        star_3d(&grids, &ranks, n)
    };
    let hi: Vec<f64> = (0..s).map(|a| grids[a][best.corner[a]]).collect();
    Ok(DiscrepancyReport {
        n,
        dn: None,
        dn_star: best.value,
        argmax: Argmax {
            lo: vec![0.0; s],
            hi,
            closed: best.closed,
        },
        method: Method::GridExact,
    })
}

fn star_2d(grids: &[Vec<f64>], ranks: &[Vec<usize>], n: usize) -> Best {
    let (gx, gy) = (&grids[0], &grids[1]);
    let nf = n as f64;
    (0..gx.len())
        .into_par_iter()
        .map(|i| {
            // open: x-rank < i, closed: x-rank ≤ i
            let mut open = vec![0u32; gy.len() + 1];
            let mut closed = vec![0u32; gy.len() + 1];
            for r in ranks {
                if r[0] < i {
                    open[r[1]] += 1;
                }
                if r[0] <= i {
                    closed[r[1]] += 1;
                }
            }
            let mut best = Best::none();
            let (mut below, mut at_or_below) = (0u32, 0u32);
            for (j, &b) in gy.iter().enumerate() {
                let vol = gx[i] * b;
                at_or_below += closed[j];
                best.offer(vol - below as f64 / nf, [i, j, 0], false);
                best.offer(at_or_below as f64 / nf - vol, [i, j, 0], true);
                below += open[j];
            }
            best
        })
        .reduce(Best::none, Best::max)
}

fn star_3d(grids: &[Vec<f64>], ranks: &[Vec<usize>], n: usize) -> Best {
    let (gx, gy, gz) = (&grids[0], &grids[1], &grids[2]);
    let nf = n as f64;
    let w = gz.len();
    (0..gx.len())
        .into_par_iter()
        .map(|i| {
            let mut best = Best::none();
            for closed in [false, true] {
                // prefix[j][k]: points in the x-slab with y-rank < j (≤ j when
                // closed) and z-rank < k (≤ k)
                let mut cells = vec![0u32; gy.len() * w];
                for r in ranks {
                    let inside = if closed { r[0] <= i } else { r[0] < i };
                    if inside {
                        cells[r[1] * w + r[2]] += 1;
                    }
                }
                let mut column = vec![0u32; w];
                for j in 0..gy.len() {
                    if closed {
                        for k in 0..w {
                            column[k] += cells[j * w + k];
                        }
                    }
                    let mut running = 0u32;
                    for k in 0..w {
                        if closed {
                            running += column[k];
                        }
                        let vol = gx[i] * gy[j] * gz[k];
                        if closed {
                            best.offer(running as f64 / nf - vol, [i, j, k], true);
                        } else {
                            best.offer(vol - running as f64 / nf, [i, j, k], false);
                            running += column[k];
                        }
                    }
                    if !closed {
                        for k in 0..w {
                            column[k] += cells[j * w + k];
                        }
                    }
                }
            }
            best
        })
        .reduce(Best::none, Best::max)
}

/// Upper bound for the star discrepancy of the first `N` Halton points.
pub fn halton_bound(count: u64, bases: &[u32]) -> f64 {
    let n = count.max(1) as f64;
    let product: f64 = bases
        .iter()
        .map(|&b| {
            let b = b as f64;
            (b - 1.0) / (2.0 * b.ln()) * n.ln() + (b + 1.0) / 2.0
        })
        .product();
    bases.len() as f64 / n + product / n
}

/// `Σ (N_j/N) D_{N_j}(ω_j)` for a partition of `full` into `subsets`.
pub fn decomposition_bound(full: &[f64], subsets: &[Vec<f64>]) -> Result<f64, DiscrepancyError> {
    if full.is_empty() {
        return Err(DiscrepancyError::EmptyInput);
    }
    let mut whole: Vec<f64> = full.to_vec();
    let mut parts: Vec<f64> = subsets.iter().flatten().copied().collect();
    whole.sort_by(f64::total_cmp);
    parts.sort_by(f64::total_cmp);
    if whole.len() != parts.len() || whole.iter().zip(&parts).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err(DiscrepancyError::NotAPartitionOfSet);
    }
    let n = full.len() as f64;
    let mut total = 0.0;
    for sub in subsets.iter().filter(|s| !s.is_empty()) {
        let d = discrepancy_1d(sub)?.dn.expect("one-dimensional");
        total += sub.len() as f64 / n * d;
    }
    Ok(total)
}

/// `(1/N) Σ_{n<N} f(x_n)`.
pub fn qmc_integrate<F>(f: F, stream: &mut dyn PointStream, count: u64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if count == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for n in 0..count {
        // Kahan summation keeps the estimate stable for long runs
        let y = f(&stream.point_f64(n)) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum / count as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactfield::ratio;

    #[test]
    fn equispaced() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let r = discrepancy_1d(&xs).unwrap();
        assert!((r.dn.unwrap() - 0.1).abs() < 1e-15);
        let q: Vec<Rational> = (0..10).map(|i| ratio(i, 10)).collect();
        assert_eq!(discrepancy_1d_exact(&q).unwrap().0, ratio(1, 10));
    }

    #[test]
    fn single_point() {
        let r = discrepancy_1d(&[0.5]).unwrap();
        assert_eq!(r.dn_star, 0.5);
        assert_eq!(r.dn, Some(1.0));
        assert!(discrepancy_1d(&[]).is_err());
        assert!(discrepancy_1d(&[1.0]).is_err());
    }

    #[test]
    fn origin_in_the_plane() {
        let r = star_discrepancy_multi(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(r.dn_star, 1.0);
        assert_eq!(r.dn, None);
        assert_eq!(r.method, Method::GridExact);
        let r3 = star_discrepancy_multi(&[vec![0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(r3.dn_star, 1.0);
    }

    #[test]
    fn budget_and_dimension() {
        let pts = vec![vec![0.1, 0.2]; 4097];
        assert!(matches!(
            star_discrepancy_multi(&pts),
            Err(DiscrepancyError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            star_discrepancy_multi(&[vec![0.1; 4]]),
            Err(DiscrepancyError::Dimension(4))
        ));
    }

    #[test]
    fn halton_bound_plug_in() {
        assert!((halton_bound(1, &[2]) - 2.5).abs() < 1e-15);
        let b = halton_bound(100, &[2, 3]);
        assert!(b.is_finite() && b > 0.0);
        assert!(halton_bound(100, &[2, 5]) > halton_bound(100, &[2, 3]));
    }

    #[test]
    fn decomposition() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
        let single = decomposition_bound(&xs, &[xs.clone()]).unwrap();
        assert_eq!(single, discrepancy_1d(&xs).unwrap().dn.unwrap());
        let halves = decomposition_bound(&xs, &[xs[..4].to_vec(), xs[4..].to_vec()]).unwrap();
        // each half is 4 points spaced 1/8 inside [0, 1/2) or [1/2, 1)
        assert!((halves - (0.5 * (0.5 + 1.0 / 8.0) + 0.5 * (3.0 / 8.0 + 1.0 / 4.0))).abs() < 1e-12);
        assert!(decomposition_bound(&xs, &[xs[..4].to_vec()]).is_err());
    }

    #[test]
    fn report_json_shape() {
        let r = discrepancy_1d(&[0.25, 0.75]).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["N"], 2);
        assert_eq!(v["method"], "exact-1d");
        assert!(v["dn"].is_number() && v["dn_star"].is_number());
        assert!(v["argmax"]["hi"].is_array());
    }
}
