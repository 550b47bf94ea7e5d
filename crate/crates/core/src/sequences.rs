//! Point sequences: generalized van der Corput, Halton, Hammersley,
//! Kronecker, LS-sequences, the Kakutani–Fibonacci transformation and the
//! β-adic Halton sequence.
//!
//! Every stream here is indexed from `n = 0`; the first emitted point is
//! the image of 0.

use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exactfield::{ratio, AlgExt, FieldError, FieldExt, Rational};
use crate::numeration::NumerationSystem;
use crate::partitions::{LSParams, PartitionError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequenceError {
    #[error("base must be at least 2 (got {0})")]
    BadBase(u32),
    #[error("not a permutation of 0..{0} fixing 0")]
    BadPermutation(u32),
    #[error("point lies outside the domain of the map")]
    NotInDomain,
    #[error("α must satisfy α² + α = 1")]
    NotGolden,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Digit permutation for the generalized radical inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<u32>,
}

impl Permutation {
    /// A bijection of `{0, …, b-1}` with `σ(0) = 0`.
    pub fn new(map: Vec<u32>) -> Result<Self, SequenceError> {
        let p = Self::allow_nonzero_origin(map)?;
        if p.map[0] != 0 {
            return Err(SequenceError::BadPermutation(p.map.len() as u32));
        }
        Ok(p)
    }

    /// A bijection without the `σ(0) = 0` requirement. Only the digits of
    /// `n` itself are permuted, so leading zeros stay zero.
    pub fn allow_nonzero_origin(map: Vec<u32>) -> Result<Self, SequenceError> {
        let b = map.len() as u32;
        if b < 2 {
            return Err(SequenceError::BadBase(b));
        }
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= b || std::mem::replace(&mut seen[v as usize], true) {
                return Err(SequenceError::BadPermutation(b));
            }
        }
        Ok(Permutation { map })
    }

    pub fn identity(b: u32) -> Self {
        Permutation {
            map: (0..b).collect(),
        }
    }

    pub fn base(&self) -> u32 {
        self.map.len() as u32
    }

    pub fn apply(&self, d: u32) -> u32 {
        self.map[d as usize]
    }
}

fn check_base(b: u32, sigma: Option<&Permutation>) -> Result<(), SequenceError> {
    if b < 2 {
        return Err(SequenceError::BadBase(b));
    }
    if let Some(p) = sigma {
        if p.base() != b {
            return Err(SequenceError::BadPermutation(b));
        }
    }
    Ok(())
}

/// Reflected digits of `n` as `(numerator, b^k)`.
fn reflect(mut n: u64, b: u32, sigma: Option<&Permutation>) -> (BigUint, BigUint) {
    let b64 = b as u64;
    let mut num = BigUint::zero();
    let mut den = BigUint::one();
    while n > 0 {
        let d = (n % b64) as u32;
        n /= b64;
        let d = sigma.map_or(d, |p| p.apply(d));
        num = num * b + d;
        den *= b;
    }
    (num, den)
}

/// `φ_b(n) = Σ σ(a_k) b^{-k-1}` as an exact rational.
pub fn radical_inverse(n: u64, b: u32, sigma: Option<&Permutation>) -> Result<Rational, SequenceError> {
    check_base(b, sigma)?;
    let (num, den) = reflect(n, b, sigma);
    Ok(Rational::new(num.into(), den.into()))
}

/// Double-precision radical inverse.
pub fn radical_inverse_f64(n: u64, b: u32, sigma: Option<&Permutation>) -> Result<f64, SequenceError> {
    check_base(b, sigma)?;
    let inv = 1.0 / b as f64;
    let mut m = n;
    let mut scale = inv;
    let mut x = 0.0;
    while m > 0 {
        let d = (m % b as u64) as u32;
        m /= b as u64;
        x += sigma.map_or(d, |p| p.apply(d)) as f64 * scale;
        scale *= inv;
    }
    Ok(x)
}

fn warn_if_not_coprime(bases: &[u32]) {
    for (i, &a) in bases.iter().enumerate() {
        for &b in &bases[i + 1..] {
            if a.gcd(&b) != 1 {
                log::warn!("Halton bases {a} and {b} are not coprime");
            }
        }
    }
}

/// Halton point `(φ_{b_1}(n), …, φ_{b_s}(n))`.
pub fn halton(n: u64, bases: &[u32]) -> Result<Vec<Rational>, SequenceError> {
    warn_if_not_coprime(bases);
    bases.iter().map(|&b| radical_inverse(n, b, None)).collect()
}

pub fn halton_f64(n: u64, bases: &[u32]) -> Result<Vec<f64>, SequenceError> {
    bases.iter().map(|&b| radical_inverse_f64(n, b, None)).collect()
}

/// The `N`-point Hammersley set `(n/N, φ_{b_1}(n), …)`, `n = 0..N-1`.
pub fn hammersley(count: u64, bases: &[u32]) -> Result<Vec<Vec<Rational>>, SequenceError> {
    warn_if_not_coprime(bases);
    let den = BigInt::from(count.max(1));
    (0..count)
        .map(|n| {
            let mut p = vec![Rational::new(n.into(), den.clone())];
            for &b in bases {
                p.push(radical_inverse(n, b, None)?);
            }
            Ok(p)
        })
        .collect()
}

/// `{nθ}` computed exactly from the binary expansion of `θ`, then rounded.
pub fn kronecker_coord(n: u64, theta: f64) -> f64 {
    if !theta.is_finite() {
        return f64::NAN;
    }
    let (mantissa, exp, sign) = decompose(theta);
    if mantissa == 0 || exp >= 0 {
        return 0.0;
    }
    let shift = (-exp) as u32;
    let frac = if shift <= 64 {
        let modulus = 1u128 << shift;
        let r = (n as u128 * mantissa as u128) & (modulus - 1);
        let r = if sign < 0 && r != 0 { modulus - r } else { r };
        r as f64 / modulus as f64
    } else {
        let modulus = BigUint::one() << shift;
        let r = (BigUint::from(n) * mantissa) % &modulus;
        let r = if sign < 0 && !r.is_zero() { &modulus - r } else { r };
        Rational::new(r.into(), modulus.into()).to_f64().unwrap_or(0.0)
    };
    // rounding can land on 1.0 for fractions just below it
    if frac >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        frac
    }
}

/// `(m, e, sign)` with `|x| = m · 2^e`.
fn decompose(x: f64) -> (u64, i32, i8) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if exponent == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), exponent - 1075)
    };
    if m != 0 {
        let tz = m.trailing_zeros();
        m >>= tz;
        e += tz as i32;
    }
    (m, e, sign)
}

/// Kronecker point `({nθ_1}, …, {nθ_s})`.
pub fn kronecker(n: u64, thetas: &[f64]) -> Vec<f64> {
    thetas.iter().map(|&t| kronecker_coord(n, t)).collect()
}

/// Kronecker point for rational `θ`, exactly.
pub fn kronecker_rational(n: u64, thetas: &[Rational]) -> Vec<Rational> {
    thetas
        .iter()
        .map(|t| {
            let x = t * Rational::from_integer(n.into());
            &x - x.floor()
        })
        .collect()
}

/// LS-sequence built block by block, keeping every point generated so far.
#[derive(Clone, Debug)]
pub struct LsSequence {
    params: LSParams,
    points: Vec<AlgExt>,
    level: u32,
    long: usize,
}

impl LsSequence {
    pub fn new(params: LSParams) -> Self {
        let zero = params.field().zero();
        LsSequence {
            params,
            points: vec![zero],
            level: 0,
            long: 1,
        }
    }

    pub fn params(&self) -> &LSParams {
        &self.params
    }

    /// Appends blocks until at least `count` points exist.
    pub fn extend_to(&mut self, count: usize) {
        while self.points.len() < count {
            self.next_block();
        }
    }

    fn next_block(&mut self) {
        let (l, s) = (self.params.l(), self.params.s());
        let a = self.params.alpha();
        let step = a.pow(self.level + 1);
        let short_step = a.pow(self.level + 2);
        let long_offset = step.scale_int(l as i64);
        let maps = (l + s - 1) as usize;
        let mut shifts = Vec::with_capacity(maps);
        for i in 1..=l.min(maps as u32) {
            shifts.push(step.scale_int(i as i64));
        }
        for j in 1..s {
            shifts.push(&long_offset + &short_step.scale_int(j as i64));
        }
        let head = self.long;
        let total = self.points.len();
        let mut block = Vec::with_capacity(head * shifts.len());
        for shift in &shifts {
            for x in &self.points[..head] {
                block.push(x + shift);
            }
        }
        self.points.extend(block);
        self.long = l as usize * head + (total - head);
        self.level += 1;
    }

    /// Points `ξ_0, …, ξ_{count-1}`.
    pub fn first(&mut self, count: usize) -> &[AlgExt] {
        self.extend_to(count);
        &self.points[..count]
    }

    pub fn get(&mut self, n: usize) -> AlgExt {
        self.extend_to(n + 1);
        self.points[n].clone()
    }
}

/// The first `count` points of the LS-sequence.
pub fn ls_points(params: &LSParams, count: usize) -> Vec<AlgExt> {
    let mut seq = LsSequence::new(params.clone());
    seq.first(count).to_vec()
}

/// Domain interval `[lower, upper)` of a branch and its translation.
#[derive(Clone, Debug)]
pub struct Branch {
    pub lower: AlgExt,
    pub upper: AlgExt,
    pub shift: AlgExt,
}

/// The Kakutani–Fibonacci transformation, an infinite interval exchange of
/// `[0, 1)` built from the golden α.
#[derive(Debug)]
pub struct KfMap {
    alpha: AlgExt,
    odd: RwLock<Vec<Branch>>,
    even: RwLock<Vec<Branch>>,
}

impl KfMap {
    /// The map in the field of the LS(1,1) parameter.
    pub fn new() -> Self {
        let params = LSParams::new(1, 1).expect("(1,1) is valid");
        Self::with_alpha(params.alpha().clone()).expect("LS(1,1) α is golden")
    }

    /// The map for any field element with `α² + α = 1`.
    pub fn with_alpha(alpha: AlgExt) -> Result<Self, SequenceError> {
        let one = alpha.field().one();
        if &(&alpha * &alpha) + &alpha != one {
            return Err(SequenceError::NotGolden);
        }
        Ok(KfMap {
            alpha,
            odd: RwLock::new(Vec::new()),
            even: RwLock::new(Vec::new()),
        })
    }

    pub fn alpha(&self) -> &AlgExt {
        &self.alpha
    }

    /// Branch `I_m`. Odd `m = 2k+1` tile `[0, α)`, even `m = 2k` tile `[α, 1)`.
    pub fn branch(&self, m: usize) -> Branch {
        assert!(m >= 1, "branches are numbered from 1");
        let (table, k) = if m % 2 == 1 {
            (&self.odd, (m - 1) / 2)
        } else {
            (&self.even, m / 2 - 1)
        };
        {
            let t = table.read().unwrap();
            if k < t.len() {
                return t[k].clone();
            }
        }
        let mut t = table.write().unwrap();
        let a = &self.alpha;
        while t.len() <= k {
            let i = t.len() as u32;
            let branch = if m % 2 == 1 {
                // lower = Σ_{j<i} α^{2j+2}, length α^{2i+2}, image starts at α^{2i+1}
                let lower = t.last().map_or_else(|| a.field().zero(), |b| b.upper.clone());
                let upper = &lower + &a.pow(2 * i + 2);
                let shift = &a.pow(2 * i + 1) - &lower;
                Branch { lower, upper, shift }
            } else {
                // lower = Σ_{j<i+1} α^{2j+1}, length α^{2i+3}, image starts at α^{2i+2}
                let lower = t.last().map_or_else(|| a.clone(), |b| b.upper.clone());
                let upper = &lower + &a.pow(2 * i + 3);
                let shift = &a.pow(2 * i + 2) - &lower;
                Branch { lower, upper, shift }
            };
            t.push(branch);
        }
        t[k].clone()
    }

    /// `T(x)`.
    pub fn apply(&self, x: &AlgExt) -> Result<AlgExt, SequenceError> {
        let field = self.alpha.field();
        if x.checked_cmp(&field.zero())?.is_lt() || x.checked_cmp(&field.one())?.is_ge() {
            return Err(SequenceError::NotInDomain);
        }
        let first = if *x < self.alpha { 1 } else { 2 };
        let mut m = first;
        loop {
            let b = self.branch(m);
            if *x < b.upper {
                return Ok(x + &b.shift);
            }
            m += 2;
        }
    }

    /// `x, T(x), …, T^{count-1}(x)`.
    pub fn orbit(&self, x: &AlgExt, count: usize) -> Result<Vec<AlgExt>, SequenceError> {
        let mut out = Vec::with_capacity(count);
        let mut cur = x.clone();
        for i in 0..count {
            if i + 1 < count {
                let next = self.apply(&cur)?;
                out.push(std::mem::replace(&mut cur, next));
            } else {
                out.push(cur.clone());
            }
        }
        Ok(out)
    }
}

impl Default for KfMap {
    fn default() -> Self {
        Self::new()
    }
}

/// β-adic Halton point: the Monna image of `n` in each system.
pub fn beta_halton(n: u64, systems: &[NumerationSystem]) -> Vec<AlgExt> {
    systems
        .iter()
        .map(|sys| {
            if !sys.pattern_accepted() {
                log::warn!("system {:?} fails the pattern gate", sys.coeffs());
            }
            sys.radical_inverse(n)
        })
        .collect()
}

/// Outcome of the search for a rational power ratio between two LS α's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairVerdict {
    /// `α_1^{k+1} / α_2^{m+1}` is rational.
    Degenerate { k: u32, m: u32 },
    NoWitnessUpTo(u32),
}

/// `a + b√d` with `d` squarefree, `d = 1` for rationals.
#[derive(Clone, Debug)]
struct Surd {
    a: Rational,
    b: Rational,
    d: i64,
}

impl Surd {
    fn mul(&self, o: &Surd) -> Surd {
        debug_assert!(self.d == o.d || self.b.is_zero() || o.b.is_zero());
        let d = if self.b.is_zero() { o.d } else { self.d };
        Surd {
            a: &self.a * &o.a + &self.b * &o.b * Rational::from_integer(d.into()),
            b: &self.a * &o.b + &self.b * &o.a,
            d,
        }
    }

    fn pow(&self, e: u32) -> Surd {
        let mut out = Surd {
            a: Rational::one(),
            b: Rational::zero(),
            d: self.d,
        };
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }
}

fn squarefree_split(n: i64) -> (i64, i64) {
    let (mut square, mut kernel) = (1i64, 1i64);
    let mut rest = n;
    let mut p = 2;
    while p * p <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        square *= p.pow(e / 2);
        if e % 2 == 1 {
            kernel *= p;
        }
        p += 1;
    }
    (square, kernel * rest)
}

fn alpha_surd(l: u32, s: u32) -> Surd {
    if s == 0 {
        return Surd {
            a: ratio(1, l as i64),
            b: Rational::zero(),
            d: 1,
        };
    }
    let (l, s) = (l as i64, s as i64);
    let disc = l * l + 4 * s;
    let (f, d) = squarefree_split(disc);
    if d == 1 {
        let root = disc.sqrt();
        return Surd {
            a: ratio(root - l, 2 * s),
            b: Rational::zero(),
            d: 1,
        };
    }
    Surd {
        a: ratio(-l, 2 * s),
        b: ratio(f, 2 * s),
        d,
    }
}

/// Searches `0 ≤ k, m ≤ bound` for a rational `α_1^{k+1} / α_2^{m+1}`,
/// by increasing `k + m`, then `k`.
pub fn ls_pair_degenerate(p1: &LSParams, p2: &LSParams, bound: u32) -> PairVerdict {
    let x = alpha_surd(p1.l(), p1.s());
    let y = alpha_surd(p2.l(), p2.s());
    for total in 0..=2 * bound {
        for k in total.saturating_sub(bound)..=total.min(bound) {
            let m = total - k;
            let xp = x.pow(k + 1);
            let yp = y.pow(m + 1);
            let rational = match (xp.b.is_zero(), yp.b.is_zero()) {
                (true, true) => true,
                (false, false) => xp.d == yp.d && &xp.a * &yp.b == &yp.a * &xp.b,
                _ => false,
            };
            if rational {
                return PairVerdict::Degenerate { k, m };
            }
        }
    }
    PairVerdict::NoWitnessUpTo(bound)
}

/// A single coordinate: exact rational, exact field element, or float.
#[derive(Clone, Debug)]
pub enum Coord {
    Rational(Rational),
    Field(AlgExt),
    Float(f64),
}

impl Coord {
    pub fn to_f64(&self) -> f64 {
        match self {
            Coord::Rational(q) => q.to_f64().unwrap_or(f64::NAN),
            Coord::Field(x) => x.to_f64(),
            Coord::Float(v) => *v,
        }
    }

    /// Exact textual form, when one exists.
    pub fn exact(&self) -> Option<String> {
        match self {
            Coord::Rational(q) => Some(q.to_string()),
            Coord::Field(x) => Some(x.to_string()),
            Coord::Float(_) => None,
        }
    }

    pub fn in_unit_interval(&self) -> bool {
        match self {
            Coord::Rational(q) => !q.is_negative() && q < &Rational::one(),
            Coord::Field(x) => !x.signum().is_lt() && *x < x.field().one(),
            Coord::Float(v) => (0.0..1.0).contains(v),
        }
    }
}

/// An indexed source of points in `[0, 1)^s`.
pub trait PointStream {
    fn dim(&self) -> usize;

    /// Point with index `n`, counting from 0.
    fn point(&mut self, n: u64) -> Vec<Coord>;

    fn point_f64(&mut self, n: u64) -> Vec<f64> {
        self.point(n).iter().map(Coord::to_f64).collect()
    }

    /// Points `0..count` as floats.
    fn take_f64(&mut self, count: u64) -> Vec<Vec<f64>> {
        (0..count).map(|n| self.point_f64(n)).collect()
    }
}

/// Generalized van der Corput sequence.
#[derive(Clone, Debug)]
pub struct VanDerCorput {
    base: u32,
    sigma: Option<Permutation>,
}

impl VanDerCorput {
    pub fn new(base: u32, sigma: Option<Permutation>) -> Result<Self, SequenceError> {
        check_base(base, sigma.as_ref())?;
        Ok(VanDerCorput { base, sigma })
    }
}

impl PointStream for VanDerCorput {
    fn dim(&self) -> usize {
        1
    }

    fn point(&mut self, n: u64) -> Vec<Coord> {
        vec![Coord::Rational(
            radical_inverse(n, self.base, self.sigma.as_ref()).expect("validated base"),
        )]
    }

    fn point_f64(&mut self, n: u64) -> Vec<f64> {
        vec![radical_inverse_f64(n, self.base, self.sigma.as_ref()).expect("validated base")]
    }
}

#[derive(Clone, Debug)]
pub struct Halton {
    bases: Vec<u32>,
}

impl Halton {
    pub fn new(bases: Vec<u32>) -> Result<Self, SequenceError> {
        for &b in &bases {
            check_base(b, None)?;
        }
        warn_if_not_coprime(&bases);
        Ok(Halton { bases })
    }
}

impl PointStream for Halton {
    fn dim(&self) -> usize {
        self.bases.len()
    }

    fn point(&mut self, n: u64) -> Vec<Coord> {
        self.bases
            .iter()
            .map(|&b| Coord::Rational(radical_inverse(n, b, None).expect("validated base")))
            .collect()
    }

    fn point_f64(&mut self, n: u64) -> Vec<f64> {
        halton_f64(n, &self.bases).expect("validated base")
    }
}

/// Hammersley set of fixed size; indices past the size wrap the first coordinate.
#[derive(Clone, Debug)]
pub struct Hammersley {
    size: u64,
    bases: Vec<u32>,
}

impl Hammersley {
    pub fn new(size: u64, bases: Vec<u32>) -> Result<Self, SequenceError> {
        for &b in &bases {
            check_base(b, None)?;
        }
        warn_if_not_coprime(&bases);
        Ok(Hammersley {
            size: size.max(1),
            bases,
        })
    }
}

impl PointStream for Hammersley {
    fn dim(&self) -> usize {
        self.bases.len() + 1
    }

    fn point(&mut self, n: u64) -> Vec<Coord> {
        let mut p = vec![Coord::Rational(Rational::new(
            (n % self.size).into(),
            self.size.into(),
        ))];
        for &b in &self.bases {
            p.push(Coord::Rational(radical_inverse(n, b, None).expect("validated base")));
        }
        p
    }

    fn point_f64(&mut self, n: u64) -> Vec<f64> {
        let mut p = vec![(n % self.size) as f64 / self.size as f64];
        p.extend(halton_f64(n, &self.bases).expect("validated base"));
        p
    }
}

#[derive(Clone, Debug)]
pub struct Kronecker {
    thetas: Vec<f64>,
}

impl Kronecker {
    pub fn new(thetas: Vec<f64>) -> Self {
        Kronecker { thetas }
    }
}

impl PointStream for Kronecker {
    fn dim(&self) -> usize {
        self.thetas.len()
    }

    fn point(&mut self, n: u64) -> Vec<Coord> {
        kronecker(n, &self.thetas).into_iter().map(Coord::Float).collect()
    }

    fn point_f64(&mut self, n: u64) -> Vec<f64> {
        kronecker(n, &self.thetas)
    }
}

impl PointStream for LsSequence {
    fn dim(&self) -> usize {
        1
    }

    fn point(&mut self, n: u64) -> Vec<Coord> {
        vec![Coord::Field(self.get(n as usize))]
    }
}

/// Orbit of a point under the Kakutani–Fibonacci map, cached as it grows.
#[derive(Debug)]
pub struct KfOrbit {
    map: KfMap,
    orbit: Vec<AlgExt>,
}

impl KfOrbit {
    pub fn new(map: KfMap, start: AlgExt) -> Self {
        KfOrbit {
            map,
            orbit: vec![start],
        }
    }

    pub fn get(&mut self, n: usize) -> Result<AlgExt, SequenceError> {
        while self.orbit.len() <= n {
            let next = self.map.apply(self.orbit.last().unwrap())?;
            self.orbit.push(next);
        }
        Ok(self.orbit[n].clone())
    }
}

impl PointStream for KfOrbit {
    fn dim(&self) -> usize {
        1
    }

    fn point(&mut self, n: u64) -> Vec<Coord> {
        vec![Coord::Field(self.get(n as usize).expect("orbit stays in the domain"))]
    }
}

pub struct BetaHalton {
    systems: Vec<NumerationSystem>,
}

impl BetaHalton {
    pub fn new(systems: Vec<NumerationSystem>) -> Self {
        for sys in &systems {
            if !sys.pattern_accepted() {
                log::warn!("system {:?} fails the pattern gate", sys.coeffs());
            }
        }
        BetaHalton { systems }
    }

    pub fn systems(&self) -> &[NumerationSystem] {
        &self.systems
    }
}

impl PointStream for BetaHalton {
    fn dim(&self) -> usize {
        self.systems.len()
    }

    fn point(&mut self, n: u64) -> Vec<Coord> {
        self.systems
            .iter()
            .map(|s| Coord::Field(s.radical_inverse(n)))
            .collect()
    }

    fn point_f64(&mut self, n: u64) -> Vec<f64> {
        self.systems
            .iter()
            .map(|s| s.monna_map_f64(&s.greedy_expand_u64(n)))
            .collect()
    }
}
