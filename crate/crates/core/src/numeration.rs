//! Linear-recurrence numeration systems, greedy digit expansions, the
//! odometer, and the β-adic Monna map.
//!
//! A system is given by coefficients `(a_0, …, a_{d-1})`. The base sequence
//! starts `G_0 = 1`, `G_n = Σ_{k=1}^{n} a_{k-1} G_{n-k} + 1` for `n < d`, and
//! follows `G_n = Σ_{k=1}^{d} a_{k-1} G_{n-k}` afterwards. Its dominant
//! characteristic root `β` solves `β = a_0 + a_1/β + … + a_{d-1}/β^{d-1}`.
//!
//! Digits are always stored least significant first.

use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::exactfield::{rat, AlgExt, Field, FieldExt, FieldSpec, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumerationError {
    #[error("coefficient vector is empty")]
    EmptyCoeffs,
    #[error("leading coefficient a_0 must be at least 1")]
    LeadingZero,
    #[error("base sequence is not strictly increasing for coefficients {0:?}")]
    NotIncreasing(Vec<u32>),
    #[error("value outside [0, 1)")]
    OutOfRange,
    #[error("cylinder prefix {0} is not admissible")]
    InadmissiblePrefix(DigitString),
    #[error("cannot parse digit string: {0}")]
    Parse(String),
}

/// Finite digit string, least significant digit first, without trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DigitString(Vec<u32>);

impl DigitString {
    pub fn new(mut digits: Vec<u32>) -> Self {
        while digits.last() == Some(&0) {
            digits.pop();
        }
        DigitString(digits)
    }

    pub fn digits(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Digit at position `k`, zero past the support.
    pub fn get(&self, k: usize) -> u32 {
        self.0.get(k).copied().unwrap_or(0)
    }

    /// The first `k` digits, zero padded.
    pub fn padded(&self, k: usize) -> Vec<u32> {
        (0..k).map(|i| self.get(i)).collect()
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for DigitString {
    type Err = NumerationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(DigitString::default());
        }
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| NumerationError::Parse(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(DigitString::new)
    }
}

/// Cylinder set fixing the first `k` digits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cylinder {
    fixed: Vec<u32>,
}

impl Cylinder {
    pub fn new(fixed: Vec<u32>) -> Self {
        Cylinder { fixed }
    }

    pub fn fixed_digits(&self) -> &[u32] {
        &self.fixed
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }
}

/// True for `(a, …, a)` and `(a, a-1, …, a-1, a)`, the coefficient shapes
/// whose Monna image stays inside `[0, 1)`.
pub fn accepted_pattern(coeffs: &[u32]) -> bool {
    let Some(&a0) = coeffs.first() else {
        return false;
    };
    if a0 == 0 {
        return false;
    }
    if coeffs.iter().all(|&a| a == a0) {
        return true;
    }
    let d = coeffs.len();
    d >= 3 && coeffs[d - 1] == a0 && coeffs[1..d - 1].iter().all(|&a| a + 1 == a0)
}

/// A numeration system with lazily extended base sequence.
pub struct NumerationSystem {
    coeffs: Vec<u32>,
    base: RwLock<Vec<BigUint>>,
    inv_powers: RwLock<Vec<AlgExt>>,
    inv_f64: RwLock<Vec<f64>>,
    field: Field,
    beta_inv: AlgExt,
    accepted: bool,
}

impl fmt::Debug for NumerationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumerationSystem")
            .field("coeffs", &self.coeffs)
            .field("beta", &self.field.embedding())
            .field("accepted", &self.accepted)
            .finish()
    }
}

impl NumerationSystem {
    pub fn new(coeffs: &[u32]) -> Result<Self, NumerationError> {
        if coeffs.is_empty() {
            return Err(NumerationError::EmptyCoeffs);
        }
        if coeffs[0] == 0 {
            return Err(NumerationError::LeadingZero);
        }
        let total: u64 = coeffs.iter().map(|&a| a as u64).sum();
        if total < 2 {
            return Err(NumerationError::NotIncreasing(coeffs.to_vec()));
        }
        let d = coeffs.len();
        let mut base = vec![BigUint::one()];
        for n in 1..(3 * d + 8) {
            base.push(next_base(coeffs, &base, n));
        }
        if base.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NumerationError::NotIncreasing(coeffs.to_vec()));
        }

        // x^d - a_0 x^{d-1} - … - a_{d-1}, lowest first, with powers of x removed.
        let mut modulus: Vec<Rational> = coeffs.iter().rev().map(|&a| rat(-(a as i64))).collect();
        modulus.push(rat(1));
        let lead_zeros = modulus.iter().take_while(|c| c.is_zero()).count();
        modulus.drain(..lead_zeros);
        let field = FieldSpec::new(modulus, rat(1), rat(1 + total as i64), "β")
            .expect("dominant root of a Parry polynomial is bracketed by [1, 1 + Σa]");
        let beta_inv = field
            .generator()
            .inverse()
            .expect("characteristic root is nonzero");
        if !accepted_pattern(coeffs) {
            log::warn!(
                "coefficients {coeffs:?} fall outside the accepted patterns; Monna image may leave [0, 1)"
            );
        }
        Ok(NumerationSystem {
            coeffs: coeffs.to_vec(),
            base: RwLock::new(base),
            inv_powers: RwLock::new(vec![beta_inv.clone()]),
            inv_f64: RwLock::new(Vec::new()),
            field,
            beta_inv,
            accepted: accepted_pattern(coeffs),
        })
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Field `Q(β)` the Monna map takes values in.
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn beta(&self) -> AlgExt {
        self.field.generator()
    }

    /// Whether the coefficients pass the pattern gate.
    pub fn pattern_accepted(&self) -> bool {
        self.accepted
    }

    fn ensure_base(&self, len: usize) {
        if self.base.read().unwrap().len() >= len {
            return;
        }
        let mut base = self.base.write().unwrap();
        while base.len() < len {
            let n = base.len();
            let next = next_base(&self.coeffs, &base, n);
            base.push(next);
        }
    }

    /// Runs `f` on `G_0, …, G_{len-1}`.
    pub fn with_base<R>(&self, len: usize, f: impl FnOnce(&[BigUint]) -> R) -> R {
        self.ensure_base(len);
        let base = self.base.read().unwrap();
        f(&base[..len])
    }

    pub fn base_term(&self, k: usize) -> BigUint {
        self.with_base(k + 1, |g| g[k].clone())
    }

    /// Largest digit allowed at position `k`: `⌈G_{k+1}/G_k⌉ - 1`.
    pub fn alphabet_max(&self, k: usize) -> u32 {
        self.with_base(k + 2, |g| {
            let q = (&g[k + 1] + &g[k] - BigUint::one()) / &g[k];
            (q - BigUint::one()).to_u32().unwrap_or(u32::MAX)
        })
    }

    /// `β^{-j-1}`.
    pub fn inv_power(&self, j: usize) -> AlgExt {
        {
            let p = self.inv_powers.read().unwrap();
            if j < p.len() {
                return p[j].clone();
            }
        }
        let mut p = self.inv_powers.write().unwrap();
        while p.len() <= j {
            let next = p.last().unwrap() * &self.beta_inv;
            p.push(next);
        }
        p[j].clone()
    }

    /// Greedy expansion of `n`.
    pub fn greedy_expand(&self, n: &BigUint) -> DigitString {
        if n.is_zero() {
            return DigitString::default();
        }
        let mut len = 1;
        loop {
            self.ensure_base(len + 1);
            if self.with_base(len + 1, |g| &g[len] > n) {
                break;
            }
            len += 1;
        }
        self.with_base(len, |g| {
            let mut rest = n.clone();
            let mut digits = vec![0u32; len];
            for i in (0..len).rev() {
                if rest >= g[i] {
                    let q = &rest / &g[i];
                    rest -= &q * &g[i];
                    digits[i] = q.to_u32().expect("digit fits in u32");
                }
            }
            DigitString::new(digits)
        })
    }

    pub fn greedy_expand_u64(&self, n: u64) -> DigitString {
        self.greedy_expand(&BigUint::from(n))
    }

    /// `Σ ε_k G_k`.
    pub fn value(&self, digits: &DigitString) -> BigUint {
        self.with_base(digits.len(), |g| {
            digits
                .digits()
                .iter()
                .zip(g)
                .fold(BigUint::zero(), |acc, (&e, gk)| acc + gk * e)
        })
    }

    /// Checks `Σ_{k<K} ε_k G_k < G_K` for every `K`.
    pub fn is_admissible(&self, digits: &[u32]) -> bool {
        let len = digits.len();
        self.with_base(len + 1, |g| {
            let mut sum = BigUint::zero();
            for k in 0..len {
                if digits[k] != 0 {
                    sum += &g[k] * digits[k];
                }
                if sum >= g[k + 1] {
                    return false;
                }
            }
            true
        })
    }

    /// Adds one with carry propagation.
    pub fn odometer_step(&self, digits: &DigitString) -> DigitString {
        let len = digits.len();
        let carry_pos = self.with_base(len + 1, |g| {
            let mut sum = BigUint::zero();
            let mut best = 0;
            for l in 0..=len {
                if &sum + 1u32 == g[l] {
                    best = l;
                }
                if l < len {
                    sum += &g[l] * digits.get(l);
                }
            }
            best
        });
        let mut out = digits.padded(len.max(carry_pos + 1));
        for d in out.iter_mut().take(carry_pos) {
            *d = 0;
        }
        out[carry_pos] += 1;
        DigitString::new(out)
    }

    /// `Σ ε_j β^{-j-1}` as an exact element of `Q(β)`.
    pub fn monna_map(&self, digits: &DigitString) -> AlgExt {
        let len = digits.len();
        if len == 0 {
            return self.field.zero();
        }
        // Horner in β over integer coordinates, then one multiplication by β^{-len}.
        let modulus = self.field.modulus();
        let deg = self.field.degree();
        let mut acc = vec![BigInt::zero(); deg];
        if deg == 1 {
            let b = modulus[0].numer().clone() * -1;
            for &e in digits.digits() {
                acc[0] = &acc[0] * &b + e;
            }
        } else {
            let m: Vec<BigInt> = modulus.iter().map(|c| c.numer().clone()).collect();
            for &e in digits.digits() {
                let top = acc[deg - 1].clone();
                for i in (1..deg).rev() {
                    acc[i] = &acc[i - 1] - &top * &m[i];
                }
                acc[0] = -(&top * &m[0]) + e;
            }
        }
        let coords = acc.into_iter().map(Rational::from_integer).collect();
        let poly = self.field.element(coords).expect("coordinate count matches degree");
        &poly * &self.inv_power(len - 1)
    }

    /// Double-precision Monna map.
    pub fn monna_map_f64(&self, digits: &DigitString) -> f64 {
        let len = digits.len();
        self.ensure_inv_f64(len);
        let w = self.inv_f64.read().unwrap();
        digits
            .digits()
            .iter()
            .zip(w.iter())
            .map(|(&e, &p)| e as f64 * p)
            .sum()
    }

    fn ensure_inv_f64(&self, len: usize) {
        if self.inv_f64.read().unwrap().len() >= len {
            return;
        }
        let vals: Vec<f64> = (0..len).map(|j| self.inv_power(j).to_f64()).collect();
        *self.inv_f64.write().unwrap() = vals;
    }

    /// Monna image of the integer `n`.
    pub fn radical_inverse(&self, n: u64) -> AlgExt {
        self.monna_map(&self.greedy_expand_u64(n))
    }

    /// Greedy admissible expansion of `x ∈ [0, 1)` truncated to `depth` digits.
    pub fn monna_pseudo_inverse(&self, x: &AlgExt, depth: usize) -> Result<DigitString, NumerationError> {
        let zero = self.field.zero();
        let one = self.field.one();
        let in_range = x.checked_cmp(&zero).map(|o| o.is_ge()).unwrap_or(false)
            && x.checked_cmp(&one).map(|o| o.is_lt()).unwrap_or(false);
        if !in_range {
            return Err(NumerationError::OutOfRange);
        }
        let mut rest = x.clone();
        let mut digits = Vec::with_capacity(depth);
        for j in 0..depth {
            let w = self.inv_power(j);
            let mut chosen = 0;
            for e in (1..=self.alphabet_max(j)).rev() {
                let part = w.scale_int(e as i64);
                if part > rest {
                    continue;
                }
                digits.push(e);
                let ok = self.is_admissible(&digits);
                digits.pop();
                if ok {
                    chosen = e;
                    rest = &rest - &part;
                    break;
                }
            }
            digits.push(chosen);
        }
        Ok(DigitString::new(digits))
    }

    /// Floating-point variant of [`Self::monna_pseudo_inverse`].
    pub fn monna_pseudo_inverse_f64(&self, x: f64, depth: usize) -> Result<DigitString, NumerationError> {
        if !(0.0..1.0).contains(&x) {
            return Err(NumerationError::OutOfRange);
        }
        let mut rest = x;
        let mut digits = Vec::with_capacity(depth);
        for j in 0..depth {
            let w = self.inv_power(j).to_f64();
            let mut chosen = 0;
            for e in (1..=self.alphabet_max(j)).rev() {
                let part = w * e as f64;
                if part > rest {
                    continue;
                }
                digits.push(e);
                let ok = self.is_admissible(&digits);
                digits.pop();
                if ok {
                    chosen = e;
                    rest -= part;
                    break;
                }
            }
            digits.push(chosen);
        }
        Ok(DigitString::new(digits))
    }

    /// `F_{k,r}`: admissible `n < G_{k+r}` whose first `k` digits equal the prefix.
    pub fn prefix_count(&self, prefix: &[u32], r: usize) -> u64 {
        let mut digits = prefix.to_vec();
        self.count_extensions(&mut digits, prefix.len() + r)
    }

    fn count_extensions(&self, digits: &mut Vec<u32>, total: usize) -> u64 {
        if digits.len() == total {
            return 1;
        }
        let pos = digits.len();
        let mut count = 0;
        for e in 0..=self.alphabet_max(pos) {
            digits.push(e);
            if self.is_admissible(digits) {
                count += self.count_extensions(digits, total);
            }
            digits.pop();
        }
        count
    }

    /// Invariant measure of a cylinder from the counts `F_{k,r}`.
    pub fn cylinder_measure(&self, z: &Cylinder) -> Result<AlgExt, NumerationError> {
        let prefix = z.fixed_digits();
        if !self.is_admissible(prefix) {
            return Err(NumerationError::InadmissiblePrefix(DigitString(prefix.to_vec())));
        }
        let d = self.order();
        let k = prefix.len();
        let counts: Vec<i64> = (0..d).map(|r| self.prefix_count(prefix, r) as i64).collect();
        let beta = self.beta();
        let mut num = self.field.zero();
        for r in 0..d {
            let mut c = counts[r];
            for i in 0..r {
                c -= self.coeffs[i] as i64 * counts[r - 1 - i];
            }
            num = &num + &beta.pow((d - 1 - r) as u32).scale_int(c);
        }
        let mut geom = self.field.zero();
        for i in 0..d {
            geom = &geom + &beta.pow(i as u32);
        }
        let den = &beta.pow(k as u32) * &geom;
        Ok(num.checked_div(&den).expect("denominator is positive"))
    }
}

fn next_base(coeffs: &[u32], base: &[BigUint], n: usize) -> BigUint {
    let d = coeffs.len();
    let terms = n.min(d);
    let mut g = BigUint::zero();
    for k in 1..=terms {
        g += &base[n - k] * coeffs[k - 1];
    }
    if n < d {
        g += 1u32;
    }
    g
}
