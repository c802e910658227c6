//! Exact rational helpers and directed-rounding square roots.
//!
//! Every bound comparison with rational data stays in `BigRational`. Where
//! a square root appears, we bracket it between rationals at a requested
//! bit precision; bounds that must hold are evaluated with the bracket end
//! that rounds the bound upward, so a reported violation is rigorous and a
//! verdict never depends on float noise.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

/// Default working precision for bracketed square roots; checkers verify
/// verdict stability at `2 * DEFAULT_SQRT_BITS` too.
pub const DEFAULT_SQRT_BITS: u32 = 64;

pub fn big_ratio(num: i128, den: i128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_from_u64(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Rational bracket `(lo, up)` with `lo <= sqrt(r) <= up` and
/// `up - lo <= 2^-bits`-ish (relative to the scaled integer sqrt).
/// `r` must be nonnegative.
pub fn sqrt_bounds(r: &BigRational, bits: u32) -> (BigRational, BigRational) {
    assert!(!r.is_negative(), "sqrt of a negative rational");
    if r.is_zero() {
        return (BigRational::zero(), BigRational::zero());
    }
    let scale = BigInt::one() << bits;
    // sqrt(n/d) = sqrt(n*d)/d; floor-sqrt the scaled radicand.
    let radicand = r.numer() * r.denom() * &scale * &scale;
    let root = radicand.sqrt();
    let denom = r.denom() * &scale;
    let lo = BigRational::new(root.clone(), denom.clone());
    let up = BigRational::new(root + 1, denom);
    (lo, up)
}

/// Bracket for `sqrt` of a nonnegative integer.
pub fn sqrt_bounds_int(x: u128, bits: u32) -> (BigRational, BigRational) {
    sqrt_bounds(&BigRational::from_integer(BigInt::from(x)), bits)
}
