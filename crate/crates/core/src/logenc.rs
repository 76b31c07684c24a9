//! Rigorous enclosures of ln, exp and n-th roots over exact rationals.
//!
//! All routines return [`RationalInterval`]s guaranteed to contain the true
//! real value, with the requested absolute precision. The workhorse is the
//! atanh series: ln y = 2·atanh((y-1)/(y+1)), which for y in [1, 2] has
//! argument t <= 1/3 and geometric convergence with an explicit remainder
//! bound. Arguments are first reduced by powers of two (ln x = ln(x/2^e) +
//! e·ln 2) and snapped outward to a dyadic grid so the series runs on small
//! numbers even when x has thousands of bits.

use crate::interval::{dyadic_ceil, dyadic_floor, RationalInterval};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Enclosure of ln 2 with absolute error <= 2^-p.
pub fn ln2_enclosure(p: u32) -> RationalInterval {
    static CACHE: OnceLock<Mutex<HashMap<u32, RationalInterval>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    // bucket precision so the cache stays small
    let p = p.next_multiple_of(32);
    if let Some(iv) = cache.lock().unwrap().get(&p) {
        return iv.clone();
    }
    // ln 2 = 2 atanh(1/3)
    let third = BigRational::new(BigInt::one(), BigInt::from(3));
    let at = atanh_enclosure(&third, &third, p + 2);
    let iv = at.scale(&BigRational::from_integer(BigInt::from(2)));
    cache.lock().unwrap().insert(p, iv.clone());
    iv
}

/// Enclosure of atanh over [t_lo, t_hi], both in [0, 0.34], absolute error
/// <= 2^-p on each side. Endpoint rationals should already be small (the
/// callers snap to a dyadic grid first).
fn atanh_enclosure(t_lo: &BigRational, t_hi: &BigRational, p: u32) -> RationalInterval {
    debug_assert!(!t_lo.is_negative() && t_lo <= t_hi);
    debug_assert!(*t_hi <= BigRational::new(BigInt::from(34), BigInt::from(100)));
    let lo = atanh_partial(t_lo, p).0;
    let (hi_part, hi_tail) = atanh_partial(t_hi, p);
    RationalInterval::new(lo, hi_part + hi_tail)
}

/// Partial sum of the atanh series plus a rigorous tail bound:
/// returns (sum over j of t^(2j+1)/(2j+1), tail bound), with
/// tail <= t^(2J+3)/((2J+3)(1-t^2)) <= t^(2J+3)·(8/7)/(2J+3) for t <= 0.34.
fn atanh_partial(t: &BigRational, p: u32) -> (BigRational, BigRational) {
    if t.is_zero() {
        return (BigRational::zero(), BigRational::zero());
    }
    let t2 = t * t;
    let mut power = t.clone(); // t^(2j+1)
    let mut sum = BigRational::zero();
    let tol = BigRational::new(BigInt::one(), BigInt::one() << p);
    let mut j: u64 = 0;
    loop {
        sum += &power / BigRational::from_integer(BigInt::from(2 * j + 1));
        power *= &t2;
        j += 1;
        // candidate tail if we stopped now
        let tail = &power * BigRational::new(BigInt::from(8), BigInt::from(7 * (2 * j + 1)));
        if tail <= tol {
            return (sum, tail);
        }
    }
}

/// Enclosure of ln x for rational x > 0, absolute error <= 2^-p.
pub fn ln_rational(x: &BigRational, p: u32) -> RationalInterval {
    assert!(x.is_positive(), "ln of a non-positive rational");
    let e = floor_log2(x);
    // y = x / 2^e in [1, 2)
    let y = pow2_scale(x, -e);
    let e_bits = 64 - (e.unsigned_abs().leading_zeros() as u32);
    let work = p + 8 + e_bits;

    // snap outward to the dyadic grid so the series sees small numbers
    let y_lo = dyadic_floor(&y, work);
    let y_hi = dyadic_ceil(&y, work);
    let one = BigRational::one();
    let t_lo = (&y_lo - &one) / (&y_lo + &one);
    let t_hi = (&y_hi - &one) / (&y_hi + &one);
    let at = atanh_enclosure(&t_lo, &t_hi, work);
    let mut result = at.scale(&BigRational::from_integer(BigInt::from(2)));
    if e != 0 {
        let ln2 = ln2_enclosure(work);
        result = &result + &ln2.scale(&BigRational::from_integer(BigInt::from(e)));
    }
    result.round_out(p + 2)
}

/// Enclosure of ln n for a positive big integer.
pub fn ln_biguint(n: &BigUint, p: u32) -> RationalInterval {
    assert!(!n.is_zero(), "ln of zero");
    ln_rational(&BigRational::from_integer(BigInt::from(n.clone())), p)
}

/// ln over an interval argument (ln is monotone).
pub fn ln_interval(x: &RationalInterval, p: u32) -> RationalInterval {
    assert!(x.lo().is_positive(), "ln over an interval reaching <= 0");
    let lo = ln_rational(x.lo(), p);
    let hi = ln_rational(x.hi(), p);
    RationalInterval::new(lo.into_endpoints().0, hi.into_endpoints().1)
}

/// floor(log2 x) for rational x > 0.
pub fn floor_log2(x: &BigRational) -> i64 {
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let mut e = nb - db; // either floor(log2 x) or floor(log2 x) + 1
    if pow2_cmp(x, e) == std::cmp::Ordering::Less {
        e -= 1;
    }
    debug_assert!(pow2_cmp(x, e) != std::cmp::Ordering::Less);
    debug_assert!(pow2_cmp(x, e + 1) == std::cmp::Ordering::Less);
    e
}

/// x compared against 2^e, exactly.
fn pow2_cmp(x: &BigRational, e: i64) -> std::cmp::Ordering {
    if e >= 0 {
        x.numer().cmp(&(x.denom() << (e as u64)))
    } else {
        (x.numer() << ((-e) as u64)).cmp(x.denom())
    }
}

/// x * 2^e, exact.
pub fn pow2_scale(x: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        BigRational::new(x.numer() << (e as u64), x.denom().clone())
    } else {
        BigRational::new(x.numer().clone(), x.denom() << ((-e) as u64))
    }
}

/// Memoizing ln evaluator for repeated small-integer arguments (partial
/// quotients, series indices). Fixed absolute precision 2^-p per entry.
pub struct LnCache {
    p: u32,
    memo: HashMap<u64, RationalInterval>,
}

impl LnCache {
    pub fn new(p: u32) -> Self {
        LnCache { p, memo: HashMap::new() }
    }

    pub fn ln_u64(&mut self, n: u64) -> RationalInterval {
        assert!(n >= 1);
        if let Some(iv) = self.memo.get(&n) {
            return iv.clone();
        }
        let iv = ln_biguint(&BigUint::from(n), self.p);
        self.memo.insert(n, iv.clone());
        iv
    }

    pub fn ln_big(&mut self, n: &BigUint) -> RationalInterval {
        match u64::try_from(n) {
            Ok(small) => self.ln_u64(small),
            Err(_) => ln_biguint(n, self.p),
        }
    }
}

/// Enclosure of e (Euler's number) with absolute error <= 2^-p.
/// Tail after J terms: sum_{i>J} 1/i! <= 2/(J+1)!.
fn e_enclosure(p: u32) -> RationalInterval {
    let mut sum = BigRational::from_integer(BigInt::from(2)); // 1/0! + 1/1!
    let mut fact = BigInt::one();
    let mut j = BigInt::one();
    let threshold = BigInt::one() << (p + 1);
    loop {
        j += BigInt::one();
        fact *= &j; // fact = j!
        sum += BigRational::new(BigInt::one(), fact.clone());
        let next_fact = &fact * (&j + BigInt::one());
        if next_fact >= threshold {
            let tail = BigRational::new(BigInt::from(2), next_fact);
            return RationalInterval::new(sum.clone(), sum + tail);
        }
    }
}

/// ceil(e^q) for a nonnegative integer q, or None if it provably exceeds
/// `cap`. Entirely exact: the cap test compares q against an enclosure of
/// ln(cap), and the ceiling is read off an interval power of e that is
/// tightened until it straddles no integer.
pub fn ceil_exp_capped(q: &BigUint, cap: &BigUint) -> Option<BigUint> {
    if q.is_zero() {
        return if cap >= &BigUint::one() { Some(BigUint::one()) } else { None };
    }
    if cap.is_zero() || cap.is_one() {
        return None; // e^q > 2 > cap for q >= 1
    }
    // e^q > cap  <=>  q > ln cap
    let q_rat = BigRational::from_integer(BigInt::from(q.clone()));
    let mut p = 64;
    loop {
        let ln_cap = ln_biguint(cap, p);
        if &q_rat > ln_cap.hi() {
            return None;
        }
        if &q_rat <= ln_cap.lo() {
            break;
        }
        p *= 2;
        assert!(p <= 4096, "ln(cap) enclosure cannot separate an integer exponent");
    }
    // Here q <= ln cap, so e^q <= cap fits; compute its ceiling.
    let q_small = u32::try_from(q).expect("exponent passed the cap test but exceeds u32");
    let mut p = (q_small as u64 * 3 / 2 + 64) as u32;
    loop {
        let e = e_enclosure(p);
        let powered = e.pow_uint(q_small);
        let fl_lo = powered.lo().floor().to_integer();
        let fl_hi = powered.hi().floor().to_integer();
        if fl_lo == fl_hi {
            // e^q is irrational, so ceil = floor + 1
            let c = (fl_lo + BigInt::one()).to_biguint().expect("positive");
            return if c <= *cap { Some(c) } else { None };
        }
        p += 64;
    }
}

/// Enclosure of x^(1/r) for rational x >= 0, width <= 2^(1-p).
pub fn nth_root_enclosure(x: &BigRational, r: u32, p: u32) -> RationalInterval {
    assert!(r >= 1);
    assert!(!x.is_negative());
    if x.is_zero() {
        return RationalInterval::zero();
    }
    // floor(x * 2^(r*p)) has n-th root R with R <= x^(1/r)·2^p < R + 1
    let shifted = (x.numer() << ((r as u64) * (p as u64))).div_floor(x.denom());
    let z = shifted.to_biguint().expect("nonnegative by construction");
    let root = z.nth_root(r);
    let lo = BigRational::new(BigInt::from(root.clone()), BigInt::one() << p);
    let hi = BigRational::new(BigInt::from(root + BigUint::one()), BigInt::one() << p);
    RationalInterval::new(lo, hi)
}

/// x^(num/den) for a positive interval x and positive rational exponent,
/// monotone in x. Width degrades with the exponent; callers pick p.
pub fn pow_rational_exponent(
    x: &RationalInterval,
    num: u32,
    den: u32,
    p: u32,
) -> RationalInterval {
    assert!(x.lo().is_positive());
    let powered = x.pow_uint(num);
    if den == 1 {
        return powered;
    }
    let lo = nth_root_enclosure(powered.lo(), den, p);
    let hi = nth_root_enclosure(powered.hi(), den, p);
    RationalInterval::new(lo.into_endpoints().0, hi.into_endpoints().1)
}
