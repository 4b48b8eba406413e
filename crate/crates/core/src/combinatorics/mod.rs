//! Binomial coefficients, subset indexing, exact rationals and the counting
//! identities behind the two-step delivery.

mod envelope;
mod subset;

pub use envelope::{lower_convex_envelope, Envelope};
pub use subset::{subsets_colex, SubsetIndex, UserSet};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: i128) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn rat_u(v: u128) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `num/den` or just `num` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Largest denominator kept when a decimal is converted to a rational.
pub const MAX_DECIMAL_DENOMINATOR: u64 = 1_000_000;

/// Parses `"4/5"`, `"3"` or a decimal such as `"1.2"`.
///
/// Decimals are read exactly and then replaced by the closest rational whose
/// denominator does not exceed [`MAX_DECIMAL_DENOMINATOR`].
pub fn parse_rational(s: &str) -> Result<Rational> {
    let err = || Error::ParseRational(s.to_string());
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
    let denom = num::pow(BigInt::from(10), frac_part.len());
    let mut exact = Rational::new(numer, denom);
    if neg {
        exact = -exact;
    }
    Ok(limit_denominator(&exact, MAX_DECIMAL_DENOMINATOR))
}

/// Closest rational to `x` with denominator at most `max_den`.
pub fn limit_denominator(x: &Rational, max_den: u64) -> Rational {
    let max_den = BigInt::from(max_den);
    if x.denom() <= &max_den {
        return x.clone();
    }
    // Continued-fraction convergents, then the best semiconvergent.
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut n = x.numer().clone();
    let mut d = x.denom().clone();
    loop {
        let a = num::Integer::div_floor(&n, &d);
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let r = &n - &a * &d;
        n = std::mem::replace(&mut d, r);
        if d.is_zero() {
            break;
        }
    }
    let k = (&max_den - &q0) / &q1;
    let bound1 = Rational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let bound2 = Rational::new(p1, q1);
    if (&bound2 - x).abs() <= (&bound1 - x).abs() {
        bound2
    } else {
        bound1
    }
}

/// `C(n, k)`, zero whenever `k < 0`, `k > n` or `n < 0`.
///
/// Panics if the value overflows `u128`.
pub fn binom(n: i64, k: i64) -> u128 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul(n - i).expect("binomial overflow") / (i + 1);
    }
    acc
}

/// Pascal's rule in the form used by the step-1 group sizes:
/// `C(g, t-j) - C(g-1, t-j-1) = C(g-1, t-j)`.
pub fn pascal_check(g: i64, t: i64, j: i64) -> bool {
    let lhs = binom(g, t - j) as i128 - binom(g - 1, t - j - 1) as i128;
    lhs == binom(g - 1, t - j) as i128
}

/// Smallest admissible leftover size `v = max{0, t - g + 1}` for a demand group of size `g`.
pub fn min_leftover(t: usize, g: usize) -> usize {
    (t + 1).saturating_sub(g)
}

/// Total step-1 code size of one file, in subfile units, for a demand group of
/// `g_size` users among `k`: `sum_j C(g-1, t-j) C(k-g, j)` over admissible `j`.
///
/// The sum always equals `C(k-1, t)`; a mismatch panics.
pub fn vandermonde_total(g_size: usize, k: usize, t: usize) -> u128 {
    assert!(1 <= g_size && g_size <= k, "need 1 <= g <= k");
    let (g, k, t) = (g_size as i64, k as i64, t as i64);
    let lo = min_leftover(t as usize, g as usize) as i64;
    let hi = (k - g).min(t);
    let sum: u128 = (lo..=hi).map(|j| binom(g - 1, t - j) * binom(k - g, j)).sum();
    assert_eq!(sum, binom(k - 1, t), "Vandermonde total identity violated");
    sum
}

/// Step-1 code units of one file that a fixed user outside its demand group can
/// rebuild from cache: the sum restricted to leftovers containing that user.
///
/// The sum always equals `C(k-2, t-1)`; a mismatch panics.
pub fn vandermonde_known(g_size: usize, k: usize, t: usize) -> u128 {
    assert!(1 <= g_size && g_size < k, "need 1 <= g <= k - 1");
    let (g, k, t) = (g_size as i64, k as i64, t as i64);
    let lo = (min_leftover(t as usize, g as usize) as i64).max(1);
    let hi = (k - g).min(t);
    let sum: u128 = (lo..=hi).map(|j| binom(g - 1, t - j) * binom(k - g - 1, j - 1)).sum();
    assert_eq!(sum, binom(k - 2, t - 1), "Vandermonde known-count identity violated");
    sum
}
