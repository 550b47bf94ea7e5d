//! Sequences of partitions of `[0, 1)`: ρ-refinement, Kakutani splitting and
//! the LS family.

use std::fmt::Write as _;

use num_integer::Roots;
use thiserror::Error;

use crate::exactfield::{rat, ratio, AlgExt, Field, FieldError, FieldExt, FieldSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("breakpoints must start at 0, end at 1 and strictly increase")]
    NotATiling,
    #[error("refining partition must have at least two intervals")]
    TrivialRho,
    #[error("LS parameters need L >= 1 and L + S >= 2 (got L={l}, S={s})")]
    InvalidParams { l: u32, s: u32 },
}

/// Finite partition of `[0, 1)` into half-open intervals with exact endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    breaks: Vec<AlgExt>,
}

impl Partition {
    /// The trivial partition `ω = {[0, 1)}`.
    pub fn trivial(field: &Field) -> Self {
        Partition {
            breaks: vec![field.zero(), field.one()],
        }
    }

    pub fn new(breaks: Vec<AlgExt>) -> Result<Self, PartitionError> {
        if breaks.len() < 2 {
            return Err(PartitionError::NotATiling);
        }
        let field = breaks[0].field().clone();
        if !breaks[0].is_zero() || breaks[breaks.len() - 1] != field.one() {
            return Err(PartitionError::NotATiling);
        }
        for w in breaks.windows(2) {
            if w[0].checked_cmp(&w[1])?.is_ge() {
                return Err(PartitionError::NotATiling);
            }
        }
        Ok(Partition { breaks })
    }

    pub fn field(&self) -> &Field {
        self.breaks[0].field()
    }

    pub fn breaks(&self) -> &[AlgExt] {
        &self.breaks
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> impl Iterator<Item = (&AlgExt, &AlgExt)> {
        self.breaks.windows(2).map(|w| (&w[0], &w[1]))
    }

    pub fn lengths(&self) -> Vec<AlgExt> {
        self.intervals().map(|(a, b)| b - a).collect()
    }

    pub fn max_length(&self) -> AlgExt {
        self.lengths()
            .into_iter()
            .reduce(|m, l| if l > m { l } else { m })
            .expect("at least one interval")
    }

    /// True when every break of `coarse` is a break of `self`.
    pub fn refines(&self, coarse: &Partition) -> bool {
        let mut i = 0;
        for b in coarse.breaks() {
            while i < self.breaks.len() && self.breaks[i] < *b {
                i += 1;
            }
            if i == self.breaks.len() || self.breaks[i] != *b {
                return false;
            }
        }
        true
    }

    /// One breakpoint per line: exact form, then a decimal approximation.
    pub fn to_csv(&self, precision: u32) -> String {
        let mut out = String::new();
        for b in &self.breaks {
            let _ = writeln!(out, "{},{}", b, b.to_decimal(precision));
        }
        out
    }
}

/// ρ-refinement: each interval of maximal length is replaced by the affine
/// image of `rho`.
pub fn rho_refine(pi: &Partition, rho: &Partition) -> Result<Partition, PartitionError> {
    if rho.len() < 2 {
        return Err(PartitionError::TrivialRho);
    }
    let max = pi.max_length();
    max.checked_cmp(&rho.breaks[0])?;
    let inner = &rho.breaks[1..rho.breaks.len() - 1];
    let mut breaks = vec![pi.breaks[0].clone()];
    for (a, b) in pi.intervals() {
        let len = b - a;
        if len == max {
            for r in inner {
                breaks.push(a + &(&len * r));
            }
        }
        breaks.push(b.clone());
    }
    Ok(Partition { breaks })
}

/// Kakutani α-refinement: split every longest interval at proportion `alpha`.
pub fn kakutani_refine(pi: &Partition, alpha: &AlgExt) -> Result<Partition, PartitionError> {
    let max = pi.max_length();
    max.checked_cmp(alpha)?;
    let mut breaks = vec![pi.breaks[0].clone()];
    for (a, b) in pi.intervals() {
        let len = b - a;
        if len == max {
            breaks.push(a + &len.checked_mul(alpha)?);
        }
        breaks.push(b.clone());
    }
    Ok(Partition { breaks })
}

/// Parameters of an LS partition: `L` long intervals of length `α` and `S`
/// short ones of length `α²`.
#[derive(Clone, Debug)]
pub struct LSParams {
    l: u32,
    s: u32,
    alpha: AlgExt,
}

impl LSParams {
    pub fn new(l: u32, s: u32) -> Result<Self, PartitionError> {
        if l == 0 || l + s < 2 {
            return Err(PartitionError::InvalidParams { l, s });
        }
        let alpha = if s == 0 {
            FieldSpec::rational(ratio(1, l as i64), "α").generator()
        } else {
            let (li, si) = (l as i64, s as i64);
            let disc = li * li + 4 * si;
            let root = disc.sqrt();
            if root * root == disc {
                FieldSpec::rational(ratio(root - li, 2 * si), "α").generator()
            } else {
                // x² + (L/S)x - 1/S
                let modulus = vec![ratio(-1, si), ratio(li, si), rat(1)];
                FieldSpec::new(modulus, rat(0), rat(1), "α")?.generator()
            }
        };
        Ok(LSParams { l, s, alpha })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn alpha(&self) -> &AlgExt {
        &self.alpha
    }

    pub fn field(&self) -> &Field {
        self.alpha.field()
    }

    /// `ρ_{L,S} = {[0,α), …, [(L-1)α, Lα), [Lα, Lα+α²), …}`.
    pub fn rho(&self) -> Partition {
        let field = self.field();
        let a = &self.alpha;
        let a2 = a * a;
        let mut breaks = vec![field.zero()];
        for i in 1..=self.l {
            breaks.push(a.scale_int(i as i64));
        }
        let long_end = a.scale_int(self.l as i64);
        for j in 1..self.s {
            breaks.push(&long_end + &a2.scale_int(j as i64));
        }
        if self.s > 0 {
            breaks.push(field.one());
        }
        Partition { breaks }
    }
}

/// Level `n` of an LS partition sequence with its interval counts.
#[derive(Clone, Debug)]
pub struct LsPartition {
    pub partition: Partition,
    /// Total number of intervals.
    pub t: u64,
    /// Intervals of length `α^n`.
    pub long: u64,
    /// Intervals of length `α^{n+1}`.
    pub short: u64,
}

/// `(t_n, l_n, s_n)` from `l_0 = 1`, `s_0 = 0`.
pub fn ls_counts(l: u32, s: u32, n: usize) -> (u64, u64, u64) {
    let (mut long, mut short) = (1u64, 0u64);
    for _ in 0..n {
        (long, short) = (l as u64 * long + short, s as u64 * long);
    }
    (long + short, long, short)
}

/// The `n`-fold ρ_{L,S}-refinement of the trivial partition.
pub fn ls_partition(params: &LSParams, n: usize) -> LsPartition {
    let rho = params.rho();
    let mut pi = Partition::trivial(params.field());
    for _ in 0..n {
        pi = rho_refine(&pi, &rho).expect("ρ and π share a field");
    }
    let (t, long, short) = ls_counts(params.l, params.s, n);
    LsPartition {
        partition: pi,
        t,
        long,
        short,
    }
}
