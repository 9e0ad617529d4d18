//! Exact rational arithmetic helpers.
//!
//! All small-n law computations run on arbitrary-precision rationals so that
//! the exact test suites can assert equality with zero tolerance.  Gamma-function
//! ratios with integer-shifted arguments are always expanded as rising-factorial
//! products, never evaluated through a Gamma special function, which keeps every
//! named-model probability inside ℚ.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, the scalar of the exact mode.
pub type Q = BigRational;

/// Rational from an integer pair `p/q`.
pub fn q(p: i64, den: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(den))
}

/// Rational from an integer.
pub fn qi(p: i64) -> Q {
    Q::from_integer(BigInt::from(p))
}

/// Rational from a usize.
pub fn qu(p: usize) -> Q {
    Q::from_integer(BigInt::from(p))
}

/// Convert to double precision (for the simulation mode).
pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back to a division of float-converted parts for extreme ratios.
        let n = x.numer().to_f64().unwrap_or(f64::MAX);
        let d = x.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Parse a rational given as `"p/q"`, or as a plain integer `"p"`.
pub fn parse_ratio(s: &str) -> Result<Q> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("not an integer: {t:?}")))
    };
    match s.split_once('/') {
        Some((p, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Q::new(parse_int(p)?, den))
        }
        None => Ok(Q::from_integer(parse_int(s)?)),
    }
}

/// Format as `"p/q"` (or `"p"` when integral), the inverse of [`parse_ratio`].
pub fn format_ratio(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Rising factorial `x (x+1) ... (x+k-1)`; the empty product for `k = 0`.
pub fn rising(x: &Q, k: usize) -> Q {
    let mut acc = Q::one();
    let mut t = x.clone();
    for _ in 0..k {
        acc *= &t;
        t += Q::one();
    }
    acc
}

/// `Γ(j - α) / Γ(1 - α)` expanded as `∏_{i=1}^{j-1} (i - α)`, for `j ≥ 1`.
pub fn gamma_ratio_alpha(alpha: &Q, j: usize) -> Q {
    let mut acc = Q::one();
    for i in 1..j {
        acc *= qu(i) - alpha;
    }
    acc
}

/// Binomial coefficient `C(n, k)` as a rational (exact).
pub fn binomial(n: usize, k: usize) -> Q {
    if k > n {
        return Q::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    Q::new(num, den)
}

/// True when `x` lies in the closed interval `[lo, hi]` given as integer pairs.
pub fn in_unit_interval(x: &Q) -> bool {
    !x.is_negative() && x <= &Q::one()
}
