//! Exact arithmetic in a simple algebraic extension `Q(θ)`.
//!
//! Elements are stored as rational coordinates over the power basis
//! `1, θ, …, θ^{d-1}` and reduced modulo a fixed monic polynomial. The field
//! also carries a rational interval isolating one real root, which is the
//! embedding used for ordering and for conversion to floating point.

mod poly;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use self::poly::Poly;

pub type Rational = BigRational;

/// Bits of precision the stored root bracket is refined to at construction.
const BRACKET_BITS: u32 = 160;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("elements belong to different fields")]
    FieldMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("reduction polynomial must have degree at least one")]
    ConstantPolynomial,
    #[error("bracket [{lo}, {hi}] does not isolate a sign change of the reduction polynomial")]
    BadBracket { lo: String, hi: String },
    #[error("expected {expected} coordinates, got {got}")]
    WrongLength { expected: usize, got: usize },
}

pub(crate) fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub(crate) fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Description of `Q(θ)`: the reduction polynomial and the designated real root.
#[derive(Debug)]
pub struct FieldSpec {
    modulus: Poly,
    symbol: String,
    lo: Rational,
    hi: Rational,
    embedding: f64,
}

/// Shared handle to a field description.
pub type Field = Arc<FieldSpec>;

impl FieldSpec {
    /// Builds `Q(θ)` where `θ` is the unique root of `modulus` in `[lo, hi]`.
    ///
    /// `modulus` is given lowest coefficient first and is normalized to be
    /// monic and squarefree. The caller is responsible for the bracket
    /// containing exactly one root; a sign change across it is checked.
    pub fn new(
        modulus: Vec<Rational>,
        lo: Rational,
        hi: Rational,
        symbol: impl Into<String>,
    ) -> Result<Field, FieldError> {
        let p = poly::make_monic(modulus);
        let deg = poly::degree(&p).unwrap_or(0);
        if deg == 0 {
            return Err(FieldError::ConstantPolynomial);
        }
        let g = poly::gcd(&p, &poly::derivative(&p));
        let p = if poly::degree(&g).unwrap_or(0) > 0 {
            poly::make_monic(poly::divrem(&p, &g).0)
        } else {
            p
        };
        let bad = || FieldError::BadBracket {
            lo: lo.to_string(),
            hi: hi.to_string(),
        };
        if lo > hi {
            return Err(bad());
        }
        let (mut a, mut b) = (lo.clone(), hi.clone());
        let sa = poly::sign_at(&p, &a);
        let sb = poly::sign_at(&p, &b);
        if sa == 0 && sb == 0 {
            return Err(bad());
        }
        if sa == 0 || sb == 0 {
            // A rational root sitting on the bracket: collapse onto it.
            let root = if sa == 0 { a } else { b };
            return Ok(Self::rational_root(p, root, symbol.into()));
        }
        if sa == sb {
            return Err(bad());
        }
        let target = Rational::new(BigInt::one(), BigInt::one() << BRACKET_BITS);
        while &b - &a > target {
            let mid = (&a + &b) / rat(2);
            match poly::sign_at(&p, &mid) {
                0 => return Ok(Self::rational_root(p, mid, symbol.into())),
                s if s == sa => a = mid,
                _ => b = mid,
            }
        }
        let embedding = ((&a + &b) / rat(2)).to_f64().unwrap_or(f64::NAN);
        Ok(Arc::new(FieldSpec {
            modulus: p,
            symbol: symbol.into(),
            lo: a,
            hi: b,
            embedding,
        }))
    }

    // The designated root is rational, so the field collapses to Q with θ = root.
    fn rational_root(_p: Poly, root: Rational, symbol: String) -> Field {
        let embedding = root.to_f64().unwrap_or(f64::NAN);
        Arc::new(FieldSpec {
            modulus: vec![-root.clone(), Rational::one()],
            symbol,
            lo: root.clone(),
            hi: root,
            embedding,
        })
    }

    /// `Q(θ)` with `θ` the given rational number (degree one).
    pub fn rational(theta: Rational, symbol: impl Into<String>) -> Field {
        Self::rational_root(Vec::new(), theta, symbol.into())
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    /// Monic reduction polynomial, lowest coefficient first.
    pub fn modulus(&self) -> &[Rational] {
        &self.modulus
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    /// Double-precision approximation of the designated root.
    pub fn embedding(&self) -> f64 {
        self.embedding
    }

    /// Rational interval isolating the designated root.
    pub fn root_bracket(&self) -> (&Rational, &Rational) {
        (&self.lo, &self.hi)
    }

    fn same(&self, other: &FieldSpec) -> bool {
        std::ptr::eq(self, other)
            || (self.modulus == other.modulus && self.lo <= other.hi && other.lo <= self.hi)
    }
}

/// Convenience constructors that need the shared handle.
pub trait FieldExt {
    fn zero(&self) -> AlgExt;
    fn one(&self) -> AlgExt;
    fn generator(&self) -> AlgExt;
    fn from_rational(&self, q: Rational) -> AlgExt;
    fn from_int(&self, n: i64) -> AlgExt;
    fn element(&self, coords: Vec<Rational>) -> Result<AlgExt, FieldError>;
}

impl FieldExt for Field {
    fn zero(&self) -> AlgExt {
        AlgExt {
            field: Arc::clone(self),
            coords: vec![Rational::zero(); self.degree()],
        }
    }

    fn one(&self) -> AlgExt {
        self.from_int(1)
    }

    fn generator(&self) -> AlgExt {
        let mut coords = vec![Rational::zero(); self.degree()];
        if self.degree() == 1 {
            coords[0] = self.lo.clone();
        } else {
            coords[1] = Rational::one();
        }
        AlgExt {
            field: Arc::clone(self),
            coords,
        }
    }

    fn from_rational(&self, q: Rational) -> AlgExt {
        let mut e = self.zero();
        e.coords[0] = q;
        e
    }

    fn from_int(&self, n: i64) -> AlgExt {
        self.from_rational(rat(n))
    }

    fn element(&self, coords: Vec<Rational>) -> Result<AlgExt, FieldError> {
        if coords.len() != self.degree() {
            return Err(FieldError::WrongLength {
                expected: self.degree(),
                got: coords.len(),
            });
        }
        Ok(AlgExt {
            field: Arc::clone(self),
            coords,
        })
    }
}

/// An exact element of `Q(θ)`.
#[derive(Clone)]
pub struct AlgExt {
    field: Field,
    coords: Vec<Rational>,
}

impl AlgExt {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    fn check(&self, other: &AlgExt) -> Result<(), FieldError> {
        if self.field.same(&other.field) {
            Ok(())
        } else {
            Err(FieldError::FieldMismatch)
        }
    }

    fn with_coords(&self, coords: Vec<Rational>) -> AlgExt {
        AlgExt {
            field: Arc::clone(&self.field),
            coords,
        }
    }

    fn from_poly(&self, p: Poly) -> AlgExt {
        let d = self.field.degree();
        let mut r = if p.len() > d {
            poly::rem(&p, &self.field.modulus)
        } else {
            p
        };
        r.resize(d, Rational::zero());
        self.with_coords(r)
    }

    pub fn checked_add(&self, other: &AlgExt) -> Result<AlgExt, FieldError> {
        self.check(other)?;
        Ok(self.with_coords(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn checked_sub(&self, other: &AlgExt) -> Result<AlgExt, FieldError> {
        self.check(other)?;
        Ok(self.with_coords(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn checked_mul(&self, other: &AlgExt) -> Result<AlgExt, FieldError> {
        self.check(other)?;
        Ok(self.from_poly(poly::mul(&self.coords, &other.coords)))
    }

    pub fn checked_div(&self, other: &AlgExt) -> Result<AlgExt, FieldError> {
        self.check(other)?;
        let inv = other.inverse()?;
        self.checked_mul(&inv)
    }

    pub fn scale(&self, q: &Rational) -> AlgExt {
        self.with_coords(self.coords.iter().map(|c| c * q).collect())
    }

    pub fn scale_int(&self, n: i64) -> AlgExt {
        self.scale(&rat(n))
    }

    pub fn inverse(&self) -> Result<AlgExt, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        // Drop factors of the modulus that do not vanish at θ until the
        // element is coprime to what remains.
        let mut m = self.field.modulus.clone();
        loop {
            let (g, s) = poly::ext_gcd_mod(&self.coords, &m);
            if poly::degree(&g).unwrap_or(0) == 0 {
                return Ok(self.from_poly(poly::trim(s)));
            }
            m = poly::divrem(&m, &g).0;
        }
    }

    pub fn pow(&self, mut e: u32) -> AlgExt {
        let mut base = self.clone();
        let mut acc = self.field.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Integer power including negative exponents.
    pub fn powi(&self, e: i32) -> Result<AlgExt, FieldError> {
        if e >= 0 {
            Ok(self.pow(e as u32))
        } else {
            Ok(self.inverse()?.pow(e.unsigned_abs()))
        }
    }

    /// True when every coordinate past the constant one is zero.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.field.degree() == 1 {
            let v = poly::eval(&self.coords, &self.field.lo);
            return Some(v);
        }
        if self.coords[1..].iter().all(Zero::is_zero) {
            Some(self.coords[0].clone())
        } else {
            None
        }
    }

    /// Exact test for the embedded value being zero.
    pub fn is_zero(&self) -> bool {
        if self.coords.iter().all(Zero::is_zero) {
            return true;
        }
        if self.field.degree() == 1 {
            return poly::eval(&self.coords, &self.field.lo).is_zero();
        }
        let g = poly::gcd(&self.coords, &self.field.modulus);
        if poly::degree(&g).unwrap_or(0) == 0 {
            return false;
        }
        // θ is a simple root of the modulus and the only one in the bracket,
        // so g vanishes at θ iff it changes sign across the bracket.
        poly::sign_at(&g, &self.field.lo) * poly::sign_at(&g, &self.field.hi) < 0
    }

    /// Sign of the embedded real value.
    pub fn signum(&self) -> Ordering {
        if let Some((v, err)) = self.approx_with_error() {
            if v.abs() > err {
                return if v > 0.0 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
            }
        }
        if self.is_zero() {
            return Ordering::Equal;
        }
        let mut bits = BRACKET_BITS;
        loop {
            let (lo, hi) = self.enclose(bits);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    /// Exact comparison of embedded values.
    pub fn checked_cmp(&self, other: &AlgExt) -> Result<Ordering, FieldError> {
        self.check(other)?;
        if self.coords == other.coords {
            return Ok(Ordering::Equal);
        }
        Ok(self.checked_sub(other)?.signum())
    }

    /// Floating value together with a rigorous bound on its absolute error.
    fn approx_with_error(&self) -> Option<(f64, f64)> {
        let theta = self.field.embedding;
        let mut v = 0.0f64;
        let mut mag = 0.0f64;
        let mut dmag = 0.0f64;
        for c in self.coords.iter().rev() {
            let cf = c.to_f64()?;
            if !cf.is_finite() {
                return None;
            }
            v = v * theta + cf;
            dmag = dmag * theta.abs() + mag;
            mag = mag * theta.abs() + cf.abs();
        }
        let d = self.coords.len() as f64;
        let eps = f64::EPSILON;
        let err = (mag * (4.0 * d + 4.0) + dmag * theta.abs() * 4.0) * eps;
        if v.is_finite() && err.is_finite() {
            Some((v, err))
        } else {
            None
        }
    }

    /// Rational interval containing the embedded value, using a bracket of
    /// width at most `2^-bits` around θ.
    pub fn enclose(&self, bits: u32) -> (Rational, Rational) {
        let (mut lo, mut hi) = (self.field.lo.clone(), self.field.hi.clone());
        if lo == hi {
            let v = poly::eval(&self.coords, &lo);
            return (v.clone(), v);
        }
        let target = Rational::new(BigInt::one(), BigInt::one() << bits);
        let s_lo = poly::sign_at(&self.field.modulus, &lo);
        while &hi - &lo > target {
            let mid = (&lo + &hi) / rat(2);
            let s = poly::sign_at(&self.field.modulus, &mid);
            if s == 0 {
                let v = poly::eval(&self.coords, &mid);
                return (v.clone(), v);
            }
            if s == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        interval_horner(&self.coords, &lo, &hi)
    }

    /// Nearest double to the embedded value, within `10^-precision` where
    /// the double format allows it.
    pub fn to_float(&self, precision: u32) -> f64 {
        let precision = precision.max(1);
        let tol = 10f64.powi(-(precision.min(300) as i32));
        if let Some((v, err)) = self.approx_with_error() {
            if err <= 0.25 * tol && err <= v.abs() * 1e-15 + 1e-300 {
                return v;
            }
        }
        let mut bits = BRACKET_BITS;
        let tol_q = pow10_inv(precision);
        loop {
            let (lo, hi) = self.enclose(bits);
            if &hi - &lo < tol_q {
                return ((&lo + &hi) / rat(2)).to_f64().unwrap_or(f64::NAN);
            }
            bits *= 2;
        }
    }

    /// Double approximation good to roughly full double precision.
    pub fn to_f64(&self) -> f64 {
        self.to_float(17)
    }

    /// Decimal string with `digits` places after the point, correctly
    /// rounded from an enclosure much narrower than the last place.
    pub fn to_decimal(&self, digits: u32) -> String {
        if let Some(q) = self.as_rational() {
            return rational_to_decimal(&q, digits);
        }
        let mut bits = BRACKET_BITS.max(digits * 4 + 40);
        let tol = pow10_inv(digits + 4);
        loop {
            let (lo, hi) = self.enclose(bits);
            if &hi - &lo < tol {
                return rational_to_decimal(&((&lo + &hi) / rat(2)), digits);
            }
            bits *= 2;
        }
    }
}

fn pow10_inv(p: u32) -> Rational {
    Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10), p as usize))
}

/// Rounds `q` to `digits` decimal places (half away from zero) and trims
/// trailing zeros.
pub fn rational_to_decimal(q: &Rational, digits: u32) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits as usize);
    let scaled = q * Rational::from_integer(scale.clone());
    let neg = scaled.is_negative();
    let abs = scaled.abs();
    let floor = abs.floor().to_integer();
    let frac = &abs - Rational::from_integer(floor.clone());
    let rounded = if frac >= ratio(1, 2) {
        floor + BigInt::one()
    } else {
        floor
    };
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let mut s = String::new();
    if neg && !rounded_is_zero(&int_part, &frac_part) {
        s.push('-');
    }
    s.push_str(&int_part.to_string());
    if digits > 0 {
        let mut f = frac_part.to_string();
        while f.len() < digits as usize {
            f.insert(0, '0');
        }
        let f = f.trim_end_matches('0');
        if !f.is_empty() {
            s.push('.');
            s.push_str(f);
        }
    }
    s
}

fn rounded_is_zero(a: &BigInt, b: &BigInt) -> bool {
    a.is_zero() && b.is_zero()
}

fn interval_horner(coords: &[Rational], lo: &Rational, hi: &Rational) -> (Rational, Rational) {
    let mut a = Rational::zero();
    let mut b = Rational::zero();
    for c in coords.iter().rev() {
        let cands = [&a * lo, &a * hi, &b * lo, &b * hi];
        let mut mn = cands[0].clone();
        let mut mx = cands[0].clone();
        for x in &cands[1..] {
            if *x < mn {
                mn = x.clone();
            }
            if *x > mx {
                mx = x.clone();
            }
        }
        a = mn + c;
        b = mx + c;
    }
    (a, b)
}

impl PartialEq for AlgExt {
    fn eq(&self, other: &Self) -> bool {
        if !self.field.same(&other.field) {
            return false;
        }
        self.coords == other.coords || self.checked_sub(other).map(|d| d.is_zero()).unwrap_or(false)
    }
}

impl PartialOrd for AlgExt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.checked_cmp(other).ok()
    }
}

impl fmt::Debug for AlgExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgExt({self} ≈ {})", self.to_f64())
    }
}

impl fmt::Display for AlgExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.degree() == 1 {
            return write!(f, "{}", poly::eval(&self.coords, &self.field.lo));
        }
        let sym = &self.field.symbol;
        let mut first = true;
        for (i, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}·")?;
                    }
                    if i == 1 {
                        write!(f, "{sym}")?;
                    } else {
                        write!(f, "{sym}^{i}")?;
                    }
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&AlgExt> for &AlgExt {
            type Output = AlgExt;
            /// Panics if the operands belong to different fields.
            fn $m(self, rhs: &AlgExt) -> AlgExt {
                self.$checked(rhs).expect("field mismatch")
            }
        }
        impl $tr<AlgExt> for AlgExt {
            type Output = AlgExt;
            fn $m(self, rhs: AlgExt) -> AlgExt {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&AlgExt> for AlgExt {
            type Output = AlgExt;
            fn $m(self, rhs: &AlgExt) -> AlgExt {
                (&self).$m(rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &AlgExt {
    type Output = AlgExt;
    fn neg(self) -> AlgExt {
        self.with_coords(self.coords.iter().map(|c| -c).collect())
    }
}

impl Neg for AlgExt {
    type Output = AlgExt;
    fn neg(self) -> AlgExt {
        -&self
    }
}
