//! Exact rational numbers and conversions to and from `f64`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Formats as `num/den`, including integers (`1/1`).
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den`, a bare integer, or a decimal literal such as `0.75`.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() && whole_digits.is_empty() {
            return Err(bad());
        }
        if !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{whole_digits}{frac}");
        let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if negative { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator and denominator too large for a direct conversion
        let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Best rational approximation of `x` with denominator at most `max_denom`
/// (continued-fraction convergents and semiconvergents).
pub fn rationalize(x: f64, max_denom: u64) -> Rational {
    assert!(x.is_finite(), "cannot rationalize {x}");
    assert!(max_denom >= 1);
    let negative = x < 0.0;
    let exact = Rational::from_float(x.abs()).expect("finite");
    let max_d = BigInt::from(max_denom);
    if exact.denom() <= &max_d {
        return if negative { -exact } else { exact };
    }

    // convergents h/k of the exact binary value
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = exact.clone();
    let best = loop {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > max_d {
            // largest semiconvergent that still fits
            let t = (&max_d - &k0) / &k1;
            let semi = Rational::new(&t * &h1 + &h0, &t * &k1 + &k0);
            let conv = Rational::new(h1.clone(), k1.clone());
            let semi_err = (&semi - &exact).abs();
            let conv_err = (&conv - &exact).abs();
            break if !t.is_zero() && semi_err < conv_err { semi } else { conv };
        }
        let frac = &rest - Rational::from_integer(a);
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        if frac.is_zero() {
            break Rational::new(h1.clone(), k1.clone());
        }
        rest = frac.recip();
    };
    if negative {
        -best
    } else {
        best
    }
}

/// Rationalizes `x` to a short fraction when one lies within `tol`, otherwise
/// returns the exact binary value of `x`.
pub fn snap(x: f64, tol: f64) -> Rational {
    let short = rationalize(x, 1_000_000);
    if (to_f64(&short) - x).abs() <= tol {
        short
    } else {
        Rational::from_float(x).expect("finite")
    }
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}
