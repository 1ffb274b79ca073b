//! Exact rational helpers on top of `num-rational`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn from_big(v: BigInt) -> Rational {
    BigRational::from_integer(v)
}

/// Binomial coefficient; zero when `k > n`.
pub fn binom(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Binomial coefficient as a machine integer, for loop bounds.
pub fn binom_usize(n: usize, k: usize) -> usize {
    binom(n as u64, k as u64)
        .to_usize()
        .expect("binomial coefficient exceeds usize")
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `p/q` in lowest terms, or just `p` for integers.
pub fn render(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => {
            if let Some((whole, frac)) = s.split_once('.') {
                let digits = frac.len() as u32;
                let sign = if whole.starts_with('-') { -1 } else { 1 };
                let w: BigInt = if whole.is_empty() || whole == "-" {
                    BigInt::zero()
                } else {
                    whole.parse().ok()?
                };
                let f: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().ok()? };
                let scale = BigInt::from(10u32).pow(digits);
                let num = w.abs() * &scale + f;
                Some(BigRational::new(num * sign, scale))
            } else {
                Some(BigRational::from_integer(s.parse().ok()?))
            }
        }
    }
}

/// Exact square root of a nonnegative rational when both parts are perfect squares.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// Serialize rationals as `"p/q"` strings.
pub mod serde_str {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::render(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).ok_or_else(|| D::Error::custom(format!("not a rational: {s:?}")))
    }
}

/// Optional variant of [`serde_str`].
pub mod serde_opt_str {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&super::render(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| super::parse(&s).ok_or_else(|| D::Error::custom(format!("not a rational: {s:?}"))))
            .transpose()
    }
}

pub fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

pub fn gcd_u128(a: u128, b: u128) -> u128 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom(4, 2), BigInt::from(6));
        assert_eq!(binom(3, 5), BigInt::zero());
        assert_eq!(binom(0, 0), BigInt::one());
        assert_eq!(binom(100, 50).to_string(), "100891344545564193334812497256");
        assert_eq!(binom_usize(8, 4), 70);
    }

    #[test]
    fn render_and_parse_round_trip() {
        for (p, q) in [(11, 2), (4, 1), (-3, 9), (0, 5)] {
            let r = rat(p, q);
            assert_eq!(parse(&render(&r)).unwrap(), r);
        }
        assert_eq!(render(&rat(22, 4)), "11/2");
        assert_eq!(parse("5.5").unwrap(), rat(11, 2));
        assert_eq!(parse("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse("7").unwrap(), int(7));
        assert!(parse("1/0").is_none());
        assert!(parse("abc").is_none());
    }

    #[test]
    fn square_roots() {
        assert_eq!(exact_sqrt(&rat(4, 9)), Some(rat(2, 3)));
        assert_eq!(exact_sqrt(&rat(2, 1)), None);
        assert_eq!(exact_sqrt(&rat(-4, 1)), None);
    }
}
