//! Exact rational intervals.
//!
//! `RationalInterval` is the enclosure currency of the whole crate: a pair
//! of exact rationals `lo <= hi` guaranteed to bracket the real quantity it
//! was produced for. Arithmetic is outward-exact (no rounding happens unless
//! explicitly requested via [`RationalInterval::round_out`], which rounds
//! endpoints outward onto the dyadic grid 2^-p to keep denominators from
//! compounding in long accumulations).

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, PartialEq, Eq)]
pub struct RationalInterval {
    lo: BigRational,
    hi: BigRational,
}

impl fmt::Debug for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl RationalInterval {
    /// Panics if `lo > hi`; enclosure construction sites are expected to
    /// order endpoints themselves.
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        RationalInterval { lo, hi }
    }

    /// The degenerate interval [v, v].
    pub fn point(v: BigRational) -> Self {
        RationalInterval { lo: v.clone(), hi: v }
    }

    pub fn zero() -> Self {
        Self::point(BigRational::zero())
    }

    pub fn from_ints(lo: i64, hi: i64) -> Self {
        Self::new(
            BigRational::from_integer(BigInt::from(lo)),
            BigRational::from_integer(BigInt::from(hi)),
        )
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn into_endpoints(self) -> (BigRational, BigRational) {
        (self.lo, self.hi)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// (hi - lo)/lo; only meaningful (and only returned) when lo > 0.
    pub fn rel_width(&self) -> Option<BigRational> {
        if self.lo.is_positive() {
            Some(self.width() / &self.lo)
        } else {
            None
        }
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &RationalInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &RationalInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &RationalInterval) -> RationalInterval {
        RationalInterval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn scale(&self, c: &BigRational) -> RationalInterval {
        if c.is_negative() {
            RationalInterval { lo: &self.hi * c, hi: &self.lo * c }
        } else {
            RationalInterval { lo: &self.lo * c, hi: &self.hi * c }
        }
    }

    pub fn shift(&self, c: &BigRational) -> RationalInterval {
        RationalInterval { lo: &self.lo + c, hi: &self.hi + c }
    }

    /// Reciprocal; caller must have checked the interval is sign-definite
    /// (0 strictly outside), which every enclosure of a positive distance is.
    pub fn recip(&self) -> RationalInterval {
        assert!(
            self.lo.is_positive() || self.hi.is_negative(),
            "reciprocal of an interval containing zero"
        );
        RationalInterval { lo: self.hi.recip(), hi: self.lo.recip() }
    }

    /// x^n for a nonneg-endpoint interval (monotone case, which is the only
    /// one the sum variants need).
    pub fn pow_uint(&self, n: u32) -> RationalInterval {
        assert!(!self.lo.is_negative(), "pow_uint expects a nonnegative interval");
        if n == 0 {
            return Self::point(BigRational::one());
        }
        RationalInterval {
            lo: pow_rational(&self.lo, n),
            hi: pow_rational(&self.hi, n),
        }
    }

    pub fn abs(&self) -> RationalInterval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            -self
        } else {
            RationalInterval {
                lo: BigRational::zero(),
                hi: (-&self.lo).max(self.hi.clone()),
            }
        }
    }

    /// Round endpoints outward onto the grid of multiples of 2^-p.
    /// The result contains `self` and its width grows by less than 2^(1-p).
    pub fn round_out(&self, p: u32) -> RationalInterval {
        RationalInterval {
            lo: dyadic_floor(&self.lo, p),
            hi: dyadic_ceil(&self.hi, p),
        }
    }
}

fn pow_rational(x: &BigRational, n: u32) -> BigRational {
    let num = x.numer().pow(n);
    let den = x.denom().pow(n);
    BigRational::new(num, den)
}

/// Largest multiple of 2^-p that is <= x.
pub fn dyadic_floor(x: &BigRational, p: u32) -> BigRational {
    let scaled_num = x.numer() << p;
    let q = scaled_num.div_floor(x.denom());
    BigRational::new(q, BigInt::one() << p)
}

/// Smallest multiple of 2^-p that is >= x.
pub fn dyadic_ceil(x: &BigRational, p: u32) -> BigRational {
    let scaled_num = x.numer() << p;
    let q = Integer::div_ceil(&scaled_num, x.denom());
    BigRational::new(q, BigInt::one() << p)
}

/// num/2^p as a rational (exact).
pub fn dyadic(num: BigInt, p: u32) -> BigRational {
    BigRational::new(num, BigInt::one() << p)
}

pub fn rat_u64(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_from_biguint(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

impl Add for &RationalInterval {
    type Output = RationalInterval;
    fn add(self, rhs: &RationalInterval) -> RationalInterval {
        RationalInterval { lo: &self.lo + &rhs.lo, hi: &self.hi + &rhs.hi }
    }
}

impl Sub for &RationalInterval {
    type Output = RationalInterval;
    fn sub(self, rhs: &RationalInterval) -> RationalInterval {
        RationalInterval { lo: &self.lo - &rhs.hi, hi: &self.hi - &rhs.lo }
    }
}

impl Neg for &RationalInterval {
    type Output = RationalInterval;
    fn neg(self) -> RationalInterval {
        RationalInterval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }
}

impl Mul for &RationalInterval {
    type Output = RationalInterval;
    fn mul(self, rhs: &RationalInterval) -> RationalInterval {
        let candidates = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        RationalInterval { lo, hi }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn add_sub_are_outward_exact() {
        let a = RationalInterval::new(rat(1, 3), rat(1, 2));
        let b = RationalInterval::new(rat(-1, 4), rat(1, 4));
        let s = &a + &b;
        assert_eq!(s.lo(), &rat(1, 12));
        assert_eq!(s.hi(), &rat(3, 4));
        let d = &a - &b;
        assert_eq!(d.lo(), &rat(1, 12));
        assert_eq!(d.hi(), &rat(3, 4));
    }

    #[test]
    fn mul_takes_extreme_products() {
        let a = RationalInterval::new(rat(-2, 1), rat(3, 1));
        let b = RationalInterval::new(rat(-5, 1), rat(1, 1));
        let p = &a * &b;
        assert_eq!(p.lo(), &rat(-15, 1));
        assert_eq!(p.hi(), &rat(10, 1));
    }

    #[test]
    fn recip_swaps_endpoints() {
        let a = RationalInterval::new(rat(1, 4), rat(1, 2));
        let r = a.recip();
        assert_eq!(r.lo(), &rat(2, 1));
        assert_eq!(r.hi(), &rat(4, 1));
    }

    #[test]
    #[should_panic]
    fn recip_rejects_zero_straddle() {
        RationalInterval::new(rat(-1, 2), rat(1, 2)).recip();
    }

    #[test]
    fn round_out_contains_and_is_dyadic() {
        let a = RationalInterval::new(rat(1, 3), rat(2, 3));
        let r = a.round_out(8);
        assert!(r.contains_interval(&a));
        assert!(r.lo() <= a.lo() && a.hi() <= r.hi());
        assert!((r.width() - a.width()) < rat(1, 64));
        // endpoints on the 2^-8 grid
        assert!((r.lo() * rat(256, 1)).is_integer());
        assert!((r.hi() * rat(256, 1)).is_integer());
    }

    #[test]
    fn dyadic_floor_ceil_exact_on_grid() {
        let x = rat(3, 8);
        assert_eq!(dyadic_floor(&x, 3), x);
        assert_eq!(dyadic_ceil(&x, 3), x);
        assert_eq!(dyadic_floor(&rat(-1, 3), 2), rat(-2, 4));
        assert_eq!(dyadic_ceil(&rat(-1, 3), 2), rat(-1, 4));
    }

    #[test]
    fn rel_width_only_for_positive_lo() {
        let a = RationalInterval::new(rat(1, 2), rat(3, 4));
        assert_eq!(a.rel_width().unwrap(), rat(1, 2));
        assert!(RationalInterval::new(rat(0, 1), rat(1, 1)).rel_width().is_none());
    }
}
