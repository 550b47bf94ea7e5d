//! Dense univariate polynomials over `Rational`, lowest degree first.

use num_traits::{One, Signed, Zero};

use super::Rational;

pub(crate) type Poly = Vec<Rational>;

pub(crate) fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

/// Degree of a trimmed polynomial; the zero polynomial reports `None`.
pub(crate) fn degree(p: &[Rational]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub(crate) fn mul(a: &[Rational], b: &[Rational]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    trim(out)
}

pub(crate) fn sub(a: &[Rational], b: &[Rational]) -> Poly {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(Rational::zero);
        let y = b.get(i).cloned().unwrap_or_else(Rational::zero);
        out.push(x - y);
    }
    trim(out)
}

/// Quotient and remainder; `d` must be nonzero.
pub(crate) fn divrem(a: &[Rational], d: &[Rational]) -> (Poly, Poly) {
    let d = trim(d.to_vec());
    let dd = degree(&d).expect("division by zero polynomial");
    let mut rem = trim(a.to_vec());
    let lead = d[dd].clone();
    let mut quot = vec![Rational::zero(); rem.len().saturating_sub(dd).max(1)];
    while let Some(rd) = degree(&rem) {
        if rd < dd {
            break;
        }
        let coef = &rem[rd] / &lead;
        let shift = rd - dd;
        for (i, c) in d.iter().enumerate() {
            if !c.is_zero() {
                rem[i + shift] -= &coef * c;
            }
        }
        quot[shift] = coef;
        rem = trim(rem);
    }
    (trim(quot), rem)
}

pub(crate) fn rem(a: &[Rational], d: &[Rational]) -> Poly {
    divrem(a, d).1
}

pub(crate) fn make_monic(p: Poly) -> Poly {
    let p = trim(p);
    match p.last() {
        Some(lead) if !lead.is_one() => {
            let lead = lead.clone();
            p.into_iter().map(|c| c / &lead).collect()
        }
        _ => p,
    }
}

/// Monic gcd.
pub(crate) fn gcd(a: &[Rational], b: &[Rational]) -> Poly {
    let mut x = trim(a.to_vec());
    let mut y = trim(b.to_vec());
    while degree(&y).is_some() {
        let r = rem(&x, &y);
        x = y;
        y = r;
    }
    make_monic(x)
}

/// Returns `(g, s)` with `s·a ≡ g (mod m)` and `g = gcd(a, m)` monic.
pub(crate) fn ext_gcd_mod(a: &[Rational], m: &[Rational]) -> (Poly, Poly) {
    let mut r0 = trim(m.to_vec());
    let mut r1 = rem(a, m);
    let mut s0: Poly = Vec::new();
    let mut s1: Poly = vec![Rational::one()];
    while degree(&r1).is_some() {
        let (q, r) = divrem(&r0, &r1);
        let s = sub(&s0, &mul(&q, &s1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
    }
    let lead = r0.last().cloned().unwrap_or_else(Rational::one);
    let g = r0.into_iter().map(|c| c / &lead).collect();
    let s = s0.into_iter().map(|c| c / &lead).collect();
    (trim(g), trim(s))
}

pub(crate) fn derivative(p: &[Rational]) -> Poly {
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Rational::from_integer((i as i64).into()))
            .collect(),
    )
}

pub(crate) fn eval(p: &[Rational], x: &Rational) -> Rational {
    p.iter()
        .rev()
        .fold(Rational::zero(), |acc, c| acc * x + c)
}

/// Sign of `p(x)` as -1, 0 or 1.
pub(crate) fn sign_at(p: &[Rational], x: &Rational) -> i8 {
    let v = eval(p, x);
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}
