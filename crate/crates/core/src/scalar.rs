//! Exact rational scalars and the handful of integer sequences
//! (factorials, double factorials, binomials) everything else leans on.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// The coefficient ring shared by every exact computation in this crate.
/// `BigRational` keeps numerator/denominator coprime with positive
/// denominator after every operation, which is exactly the invariant we need.
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn big(n: BigInt) -> Rat {
    Rat::from_integer(n)
}

pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// (2k-1)!! = 1*3*5*...*(2k-1); the number of matchings of a 2k-element set.
pub fn double_factorial_odd(k: usize) -> BigInt {
    let mut acc = BigInt::one();
    let mut j = 1usize;
    while j + 1 < 2 * k + 1 {
        acc *= j;
        j += 2;
    }
    acc
}

/// n!! for arbitrary n >= -1 (with (-1)!! = 0!! = 1).
pub fn double_factorial(n: i64) -> BigInt {
    if n <= 0 {
        return BigInt::one();
    }
    let mut acc = BigInt::one();
    let mut j = n;
    while j > 1 {
        acc *= j;
        j -= 2;
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// Catalan number C_m = (2m)!/(m!(m+1)!).
pub fn catalan(m: usize) -> BigInt {
    binomial(2 * m, m) / BigInt::from(m as u64 + 1)
}

pub fn pow_i64(base: i64, exp: u32) -> BigInt {
    BigInt::from(base).pow(exp)
}

/// Render a rational the way the CLI prints exact values: `num/den`, or
/// just `num` when the denominator is one.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // to_f64 can overflow for huge numerators; fall back to a scaled division.
    r.to_f64().unwrap_or_else(|| {
        let digits = r.numer().abs().to_string().len() as i32 - r.denom().to_string().len() as i32;
        let scale = BigInt::from(10u8).pow(digits.unsigned_abs());
        let scaled = if digits > 0 {
            Rat::new(r.numer().clone(), r.denom() * scale)
        } else {
            Rat::new(r.numer() * scale, r.denom().clone())
        };
        scaled.to_f64().unwrap_or(f64::NAN) * 10f64.powi(digits)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RatJson {
    pub num: String,
    pub den: String,
}

impl From<&Rat> for RatJson {
    fn from(r: &Rat) -> Self {
        RatJson { num: r.numer().to_string(), den: r.denom().to_string() }
    }
}

impl RatJson {
    pub fn to_rat(&self) -> Option<Rat> {
        let num: BigInt = self.num.parse().ok()?;
        let den: BigInt = self.den.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Some(Rat::new(num, den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial_odd(0), BigInt::from(1));
        assert_eq!(double_factorial_odd(2), BigInt::from(3));
        assert_eq!(double_factorial_odd(4), BigInt::from(105));
        assert_eq!(double_factorial(7), BigInt::from(105));
        assert_eq!(double_factorial(-1), BigInt::from(1));
    }

    #[test]
    fn catalan_values() {
        let c: Vec<u64> = (0..7).map(|m| catalan(m).to_u64().unwrap()).collect();
        assert_eq!(c, vec![1, 1, 2, 5, 14, 42, 132]);
    }

    #[test]
    fn rat_json_round_trip() {
        let r = rat(-22, 7);
        let j = RatJson::from(&r);
        assert_eq!(j.to_rat().unwrap(), r);
    }
}
