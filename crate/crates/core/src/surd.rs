//! Exact arithmetic on quadratic irrationals.
//!
//! Two types live here. [`QuadraticSurd`] is a normalized (p + √d)/q used as
//! the state of the continued-fraction recurrence — all steps are integer
//! operations preserving the invariant q | d − p². [`SurdVal`] is a free
//! value a + b√d with rational a, b supporting exact comparisons against
//! rationals and exact floor/nearest-integer extraction; it is the
//! independent oracle for ‖mα‖ that the enclosure machinery is tested
//! against, and it never touches intervals or rounding.

use crate::error::{Error, Result};
use crate::interval::RationalInterval;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;

/// (p + √d)/q with d positive and not a perfect square, q ≠ 0, q | d − p²,
/// and value in [0, 1). Constructors normalize arbitrary integer triples
/// into this form (scaling by |q| to restore divisibility, subtracting the
/// floor to land in [0, 1)).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticSurd {
    p: BigInt,
    d: BigUint,
    q: BigInt,
}

impl QuadraticSurd {
    pub fn new(p: BigInt, d: BigUint, q: BigInt) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidInput("surd denominator q = 0".into()));
        }
        if d.is_zero() {
            return Err(Error::InvalidInput("surd discriminant d = 0".into()));
        }
        let s = d.sqrt();
        if &s * &s == d {
            return Err(Error::InvalidInput(format!(
                "surd discriminant {d} is a perfect square; the value is rational"
            )));
        }
        let mut p = p;
        let mut d = d;
        let mut q = q;
        // restore divisibility q | d - p² by scaling with |q|
        let disc = BigInt::from(d.clone()) - &p * &p;
        if !disc.mod_floor(&q).is_zero() {
            let qa = q.abs();
            p *= &qa;
            let d_scaled = BigInt::from(d) * &qa * &qa;
            d = d_scaled.to_biguint().expect("d * q^2 stays positive");
            q *= qa;
        }
        let mut surd = QuadraticSurd { p, d, q };
        // reduce mod 1
        let fl = surd.floor_value();
        if !fl.is_zero() {
            surd.p -= fl * &surd.q;
        }
        debug_assert!(surd.floor_value().is_zero());
        Ok(surd)
    }

    pub fn new_i64(p: i64, d: u64, q: i64) -> Result<Self> {
        Self::new(BigInt::from(p), BigUint::from(d), BigInt::from(q))
    }

    /// The golden-ratio fractional part (√5 − 1)/2 = [1, 1, 1, …].
    pub fn golden() -> Self {
        Self::new_i64(-1, 5, 2).expect("golden surd is valid")
    }

    /// √2 − 1 = [2, 2, 2, …].
    pub fn sqrt2_minus_1() -> Self {
        Self::new_i64(-1, 2, 1).expect("sqrt2 surd is valid")
    }

    pub fn value(&self) -> SurdVal {
        SurdVal {
            a: BigRational::new(self.p.clone(), self.q.clone()),
            b: BigRational::new(BigInt::one(), self.q.clone()),
            d: self.d.clone(),
        }
    }

    /// floor((p + √d)/q), exact.
    fn floor_value(&self) -> BigInt {
        self.value().floor()
    }

    /// First k partial quotients of the expansion, by direct stepping.
    /// Every quotient of an irrational in (0, 1) is >= 1.
    pub fn quotients(&self, k: usize) -> Vec<BigUint> {
        let mut out = Vec::with_capacity(k);
        let mut state = self.clone();
        for _ in 0..k {
            let (a, next) = state.step();
            out.push(a);
            state = next;
        }
        out
    }

    /// One step of the recurrence: x -> (a, 1/x - a) where a = floor(1/x).
    /// 1/((p + √d)/q) = (-p + √d) / ((d - p²)/q), integral by the invariant.
    pub(crate) fn step(&self) -> (BigUint, QuadraticSurd) {
        let inv_p = -self.p.clone();
        let inv_q = (BigInt::from(self.d.clone()) - &self.p * &self.p).div_floor(&self.q);
        debug_assert!(
            ((BigInt::from(self.d.clone()) - &self.p * &self.p) % &self.q).is_zero(),
            "divisibility invariant broken"
        );
        let mut y = QuadraticSurd { p: inv_p, d: self.d.clone(), q: inv_q };
        let a = y.floor_value();
        debug_assert!(a >= BigInt::one(), "1/x < 1 for x in (0,1)");
        y.p -= &a * &y.q;
        (a.to_biguint().expect("quotients are positive"), y)
    }

    /// Eventually periodic expansion: returns (preperiod, period), detected
    /// by the first repeated (p, q) state.
    pub fn periodic_expansion(&self, max_steps: usize) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
        let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
        let mut quots: Vec<BigUint> = Vec::new();
        let mut state = self.clone();
        for i in 0..max_steps {
            if let Some(&first) = seen.get(&(state.p.clone(), state.q.clone())) {
                let period = quots.split_off(first);
                debug_assert_eq!(first, quots.len());
                debug_assert_eq!(i - first, period.len());
                return Ok((quots, period));
            }
            seen.insert((state.p.clone(), state.q.clone()), i);
            let (a, next) = state.step();
            quots.push(a);
            state = next;
        }
        Err(Error::CycleNotFound { max_steps })
    }

    /// Enclosure of the value with width <= 2^(1-p).
    pub fn enclosure(&self, p: u32) -> RationalInterval {
        self.value().enclosure(p)
    }
}

/// a + b·√d with rational a, b and fixed non-square d > 0. Exact value
/// arithmetic; irrational whenever b ≠ 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurdVal {
    a: BigRational,
    b: BigRational,
    d: BigUint,
}

impl SurdVal {
    pub fn new(a: BigRational, b: BigRational, d: BigUint) -> Self {
        SurdVal { a, b, d }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn scale_int(&self, m: u64) -> SurdVal {
        let f = BigRational::from_integer(BigInt::from(m));
        SurdVal { a: &self.a * &f, b: &self.b * &f, d: self.d.clone() }
    }

    pub fn sub_int(&self, n: &BigInt) -> SurdVal {
        SurdVal {
            a: &self.a - BigRational::from_integer(n.clone()),
            b: self.b.clone(),
            d: self.d.clone(),
        }
    }

    pub fn neg(&self) -> SurdVal {
        SurdVal { a: -self.a.clone(), b: -self.b.clone(), d: self.d.clone() }
    }

    /// Exact comparison with a rational. Equality is only possible when the
    /// irrational part vanishes.
    pub fn cmp_rational(&self, t: &BigRational) -> Ordering {
        let u = &self.a - t; // value - t = u + b√d
        if self.b.is_zero() {
            return u.cmp(&BigRational::zero());
        }
        let d_rat = BigRational::from_integer(BigInt::from(self.d.clone()));
        if self.b.is_positive() {
            if !u.is_negative() {
                return Ordering::Greater;
            }
            // u < 0: sign(u + b√d) = sign(b²d - u²)
            (&self.b * &self.b * &d_rat).cmp(&(&u * &u))
        } else {
            if !u.is_positive() {
                return Ordering::Less;
            }
            // u > 0, b < 0: sign(u + b√d) = sign(u² - b²d)
            (&u * &u).cmp(&(&self.b * &self.b * &d_rat))
        }
    }

    pub fn cmp_val(&self, other: &SurdVal) -> Ordering {
        debug_assert_eq!(self.d, other.d, "comparing surds over different discriminants");
        let diff = SurdVal {
            a: &self.a - &other.a,
            b: &self.b - &other.b,
            d: self.d.clone(),
        };
        diff.cmp_rational(&BigRational::zero())
    }

    pub fn is_negative(&self) -> bool {
        self.cmp_rational(&BigRational::zero()) == Ordering::Less
    }

    /// Exact floor: bracket √d to enough dyadic bits that the candidate
    /// window has at most two integers, then verify by exact comparison.
    pub fn floor(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.floor().to_integer();
        }
        // √d ∈ [s, s+1]/2^t with s = isqrt(d·4^t)
        let t = (self.b.numer().bits() + self.b.denom().bits() + 4) as u32;
        let scaled = &self.d << (2 * t as u64);
        let s = scaled.sqrt();
        let root_lo = BigRational::new(BigInt::from(s.clone()), BigInt::one() << t);
        let root_hi = BigRational::new(BigInt::from(s + BigUint::one()), BigInt::one() << t);
        let (v_lo, v_hi) = if self.b.is_positive() {
            (&self.a + &self.b * &root_lo, &self.a + &self.b * &root_hi)
        } else {
            (&self.a + &self.b * &root_hi, &self.a + &self.b * &root_lo)
        };
        let c_lo = v_lo.floor().to_integer();
        let c_hi = v_hi.floor().to_integer();
        let mut c = c_lo.clone();
        loop {
            // is value < c+1 ?
            let next = BigRational::from_integer(&c + BigInt::one());
            if self.cmp_rational(&next) == Ordering::Less {
                debug_assert!(
                    self.cmp_rational(&BigRational::from_integer(c.clone()))
                        != Ordering::Less
                );
                return c;
            }
            c += BigInt::one();
            assert!(c <= c_hi, "floor bracketing failed");
        }
    }

    /// Distance to the nearest integer, exact. For irrational values this is
    /// strictly inside (0, 1/2).
    pub fn norm_dist(&self) -> SurdVal {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let shifted = SurdVal {
            a: &self.a + &half,
            b: self.b.clone(),
            d: self.d.clone(),
        };
        let nearest = shifted.floor();
        let diff = self.sub_int(&nearest);
        if diff.is_negative() {
            diff.neg()
        } else {
            diff
        }
    }

    /// Enclosure of the value with width <= |b|·2^-p + 2^-p.
    pub fn enclosure(&self, p: u32) -> RationalInterval {
        if self.b.is_zero() {
            return RationalInterval::point(self.a.clone());
        }
        let scaled = &self.d << (2 * p as u64);
        let s = scaled.sqrt();
        let root_lo = BigRational::new(BigInt::from(s.clone()), BigInt::one() << p);
        let root_hi = BigRational::new(BigInt::from(s + BigUint::one()), BigInt::one() << p);
        if self.b.is_positive() {
            RationalInterval::new(&self.a + &self.b * root_lo, &self.a + &self.b * root_hi)
        } else {
            RationalInterval::new(&self.a + &self.b * root_hi, &self.a + &self.b * root_lo)
        }
    }
}

/// ‖m·x‖ for a normalized surd x, computed entirely in exact arithmetic.
/// This is the test oracle the adaptive enclosures are checked against.
pub fn exact_norm_dist(x: &QuadraticSurd, m: u64) -> SurdVal {
    x.value().scale_int(m).norm_dist()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn golden_expands_to_all_ones() {
        let g = QuadraticSurd::golden();
        assert_eq!(g.quotients(6), vec![BigUint::one(); 6]);
        let (pre, per) = g.periodic_expansion(64).unwrap();
        assert!(pre.is_empty());
        assert_eq!(per, vec![BigUint::one()]);
    }

    #[test]
    fn sqrt2_minus_1_has_period_two() {
        let s = QuadraticSurd::sqrt2_minus_1();
        let (pre, per) = s.periodic_expansion(64).unwrap();
        assert!(pre.is_empty());
        assert_eq!(per, vec![BigUint::from(2u32)]);
    }

    #[test]
    fn sqrt3_family_reproduces_value() {
        // (√3 − 1)/2 = [1, 2, 1, 2, ...]: verify the quotients by comparing
        // convergents against the exact value from both sides.
        let s = QuadraticSurd::new_i64(-1, 3, 2).unwrap();
        let (pre, per) = s.periodic_expansion(64).unwrap();
        let all: Vec<BigUint> = pre.iter().chain(per.iter().cycle()).take(10).cloned().collect();
        // golden check of the first few: 1/(√3−1)·2 = √3+1 ≈ 2.73 -> floor 1? value ≈ 0.366: 1/0.366 ≈ 2.73 -> a1 = 2
        assert_eq!(all[0], BigUint::from(2u32));
        let v = s.value();
        // 0.3660254037844386 < (√3−1)/2 < 0.3660254037844388
        assert_eq!(v.cmp_rational(&rat(3660254037844386, 10_000_000_000_000_000)), Ordering::Greater);
        assert_eq!(v.cmp_rational(&rat(3660254037844388, 10_000_000_000_000_000)), Ordering::Less);
    }

    #[test]
    fn negative_q_and_unnormalized_inputs() {
        // (−3 + √2)/(−2) = (3 − √2)/2 ≈ 0.7928932...
        let s = QuadraticSurd::new_i64(-3, 2, -2).unwrap();
        let v = s.value();
        assert_eq!(v.cmp_rational(&rat(7928932, 10_000_000)), Ordering::Greater);
        assert_eq!(v.cmp_rational(&rat(7928933, 10_000_000)), Ordering::Less);
    }

    #[test]
    fn value_reduced_mod_one() {
        // (1 + √2)/1 = 2.414... -> fractional part √2 − 1 ≈ 0.4142
        let s = QuadraticSurd::new_i64(1, 2, 1).unwrap();
        assert_eq!(s, QuadraticSurd::sqrt2_minus_1());
    }

    #[test]
    fn perfect_square_rejected() {
        assert!(matches!(
            QuadraticSurd::new_i64(0, 9, 2),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            QuadraticSurd::new_i64(1, 5, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn surd_floor_and_norm_dist() {
        // golden g ≈ 0.618034: floor 0, nearest integer 1, dist ≈ 0.381966
        let g = QuadraticSurd::golden().value();
        assert_eq!(g.floor(), BigInt::zero());
        let dist = g.norm_dist();
        // (3 − √5)/2 = 0.38196601125010515...
        assert_eq!(dist.cmp_rational(&rat(38196601, 100_000_000)), Ordering::Greater);
        assert_eq!(dist.cmp_rational(&rat(38196602, 100_000_000)), Ordering::Less);

        // ‖2g‖: 2g ≈ 1.236068 -> dist to 1 is √5 − 2 = 0.2360679...
        let dist2 = exact_norm_dist(&QuadraticSurd::golden(), 2);
        assert_eq!(dist2.cmp_rational(&rat(2360679, 10_000_000)), Ordering::Greater);
        assert_eq!(dist2.cmp_rational(&rat(2360680, 10_000_000)), Ordering::Less);

        // ‖8g‖ ≈ 0.0557281 ∈ (1/21, 1/13)
        let dist8 = exact_norm_dist(&QuadraticSurd::golden(), 8);
        assert_eq!(dist8.cmp_rational(&rat(1, 21)), Ordering::Greater);
        assert_eq!(dist8.cmp_rational(&rat(1, 13)), Ordering::Less);
    }

    #[test]
    fn enclosure_brackets_value() {
        let g = QuadraticSurd::golden();
        let iv = g.enclosure(80);
        let v = g.value();
        assert_eq!(v.cmp_rational(iv.lo()), Ordering::Greater);
        assert_eq!(v.cmp_rational(iv.hi()), Ordering::Less);
    }
}
