//! Deterministic decimal rendering of exact rationals.
//!
//! Output formats must be byte-reproducible across runs and platforms, so
//! everything here is integer arithmetic with round-half-even — no floats.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rendering: "n/d", or just "n" for integers.
pub fn exact(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// `x` to `sig` significant decimal digits, round-half-even.
///
/// Values with decimal exponent in [-6, 20] print in plain positional
/// notation, everything else as `d.dd…e±E`. Trailing zeros in the fraction
/// are trimmed so equal rationals always render identically.
pub fn dec_approx(x: &BigRational, sig: u32) -> String {
    assert!(sig >= 1);
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let n = x.numer().abs();
    let d = x.denom().clone();

    // decimal exponent: 10^e10 <= n/d < 10^(e10+1)
    let mut e10: i64 = n.to_string().len() as i64 - d.to_string().len() as i64;
    loop {
        // compare n/d against 10^e10 and 10^(e10+1)
        let (below, above) = pow10_bracket(&n, &d, e10);
        if below {
            e10 -= 1;
        } else if above {
            e10 += 1;
        } else {
            break;
        }
    }

    // mantissa = round_half_even(n/d * 10^(sig-1-e10)), an integer of sig digits
    let k = sig as i64 - 1 - e10;
    let (num, den) = if k >= 0 {
        (n * BigInt::from(10u32).pow(k as u32), d)
    } else {
        (n, d * BigInt::from(10u32).pow((-k) as u32))
    };
    let (q, r) = num.div_rem(&den);
    let mut mant = q;
    let twice_r = &r * BigInt::from(2);
    if twice_r > den || (twice_r == den && mant.is_odd()) {
        mant += 1;
    }
    let mut digits = mant.to_string();
    if digits.len() as u32 == sig + 1 {
        // rounding carried into a new leading digit (…999 -> …000)
        digits.truncate(sig as usize);
        e10 += 1;
    }
    debug_assert_eq!(digits.len() as u32, sig);

    // trim trailing zeros but keep at least one digit
    let trimmed = digits.trim_end_matches('0');
    let digits = if trimmed.is_empty() { "0" } else { trimmed };

    let body = if (-6..=20).contains(&e10) {
        plain_decimal(digits, e10)
    } else {
        let mut s = String::new();
        s.push_str(&digits[..1]);
        if digits.len() > 1 {
            s.push('.');
            s.push_str(&digits[1..]);
        }
        s.push('e');
        s.push_str(&e10.to_string());
        s
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Returns (value < 10^e10, value >= 10^(e10+1)).
fn pow10_bracket(n: &BigInt, d: &BigInt, e10: i64) -> (bool, bool) {
    let cmp_pow = |e: i64| -> std::cmp::Ordering {
        // n/d vs 10^e  <=>  n vs d*10^e  (or n*10^-e vs d)
        if e >= 0 {
            n.cmp(&(d * BigInt::from(10u32).pow(e as u32)))
        } else {
            (n * BigInt::from(10u32).pow((-e) as u32)).cmp(d)
        }
    };
    let below = cmp_pow(e10) == std::cmp::Ordering::Less;
    let above = cmp_pow(e10 + 1) != std::cmp::Ordering::Less;
    (below, above)
}

fn plain_decimal(digits: &str, e10: i64) -> String {
    if e10 >= 0 {
        let int_len = (e10 + 1) as usize;
        if digits.len() <= int_len {
            let mut s = digits.to_string();
            s.push_str(&"0".repeat(int_len - digits.len()));
            s
        } else {
            format!("{}.{}", &digits[..int_len], &digits[int_len..])
        }
    } else {
        let zeros = (-e10 - 1) as usize;
        format!("0.{}{}", "0".repeat(zeros), digits)
    }
}

/// Interval endpoints rendered as a (lo, hi) pair of decimal approximations.
pub fn interval_endpoints(iv: &crate::RationalInterval, sig: u32) -> (String, String) {
    (dec_approx(iv.lo(), sig), dec_approx(iv.hi(), sig))
}

/// Significant digits used in CSV/JSON emission.
pub const SIG_DIGITS: u32 = 17;

/// Convenience: f64 view of a rational, for diagnostics only (never used in
/// computations or persisted output).
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn renders_plain_decimals() {
        assert_eq!(dec_approx(&rat(1, 3), 5), "0.33333");
        assert_eq!(dec_approx(&rat(2, 3), 5), "0.66667");
        assert_eq!(dec_approx(&rat(1, 2), 17), "0.5");
        assert_eq!(dec_approx(&rat(123456789, 1), 17), "123456789");
        assert_eq!(dec_approx(&rat(-7, 16), 4), "-0.4375");
    }

    #[test]
    fn round_half_even() {
        assert_eq!(dec_approx(&rat(1, 8), 2), "0.12"); // 0.125 -> even
        assert_eq!(dec_approx(&rat(3, 8), 2), "0.38"); // 0.375 -> even
        assert_eq!(dec_approx(&rat(15, 1), 1), "20");  // 15 -> 2e1... wait: 1.5e1 -> 2e1
    }

    #[test]
    fn carries_propagate() {
        // 0.999951 at 4 sig digits -> 1.000
        assert_eq!(dec_approx(&rat(999951, 1000000), 4), "1");
    }

    #[test]
    fn scientific_for_extremes() {
        let tiny = BigRational::new(BigInt::from(1), BigInt::from(10u8).pow(30));
        assert_eq!(dec_approx(&tiny, 3), "1e-30");
        let huge = BigRational::from_integer(BigInt::from(10u8).pow(25) * BigInt::from(31));
        assert_eq!(dec_approx(&huge, 3), "3.1e26");
    }

    #[test]
    fn exact_strings() {
        assert_eq!(exact(&rat(7, 16)), "7/16");
        assert_eq!(exact(&rat(5, 1)), "5");
    }
}
