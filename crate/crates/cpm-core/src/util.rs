//! Small conversions shared by the numeric modules.

use num_bigint::{BigInt, Sign};
use rug::{Float, Integer};

pub fn bigint_to_rug(b: &BigInt) -> Integer {
    let (sign, bytes) = b.to_bytes_le();
    let mag = Integer::from_digits(&bytes, rug::integer::Order::Lsf);
    if sign == Sign::Minus {
        -mag
    } else {
        mag
    }
}

/// Number of significant decimal digits carried by `prec` bits.
pub fn decimal_digits(prec: u32) -> usize {
    ((prec as f64) * std::f64::consts::LOG10_2).floor() as usize
}

/// Decimal string with as many digits as the precision supports.
pub fn float_to_decimal(x: &Float) -> String {
    x.to_string_radix(10, Some(decimal_digits(x.prec()).max(1)))
}

/// Parse a decimal string (e.g. "0.5") at `prec` bits.
pub fn parse_float(s: &str, prec: u32) -> Option<Float> {
    Float::parse(s).ok().map(|p| Float::with_val(prec, p))
}

pub fn ln2_scale(x: &Float) -> f64 {
    if x.is_zero() {
        f64::NEG_INFINITY
    } else {
        x.clone().abs().log2().to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigint_round_trip() {
        for s in ["0", "1", "-1", "123456789012345678901234567890", "-98765432109876543210"] {
            let b: BigInt = s.parse().unwrap();
            assert_eq!(bigint_to_rug(&b).to_string(), s);
        }
    }

    #[test]
    fn decimal_strings() {
        let x = parse_float("0.5", 128).unwrap();
        assert_eq!(x.to_f64(), 0.5);
        let third = Float::with_val(128, 1) / 3u32;
        assert!(float_to_decimal(&third).starts_with("3.333333333333333333333333333333333333"));
    }
}
