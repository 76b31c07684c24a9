//! Enclosures of α and of ‖mα‖ built from convergent data.
//!
//! The two consecutive convergents p_k/q_k, p_{k+1}/q_{k+1} bracket α (they
//! alternate sides), giving an interval of width exactly 1/(q_k q_{k+1}).
//! Scaling by m and folding mod 1 yields a rigorous enclosure of ‖mα‖ whose
//! width is at most m/(q_k q_{k+1}); deepening k shrinks it geometrically,
//! so any positive relative tolerance is reached — except when mα lands
//! exactly on ℤ or ℤ+1/2, which only a rational α can do and which is
//! reported as a distinct degenerate error.

use crate::cf::{AlphaSpec, Expansion};
use crate::error::{DegenerateHit, Error, Result};
use crate::interval::{rat_from_biguint, RationalInterval};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Enclosure of ‖mα‖ with bookkeeping.
#[derive(Clone, Debug)]
pub struct NormDistEnclosure {
    pub m: u64,
    pub interval: RationalInterval,
    /// Convergent index the enclosure was settled at.
    pub depth_used: usize,
}

/// Canonical residue t mod q in {0, …, q−1}.
pub fn residue(t: &BigInt, q: &BigUint) -> BigUint {
    let q_int = BigInt::from(q.clone());
    t.mod_floor(&q_int).to_biguint().expect("mod_floor is nonnegative")
}

/// Distance from an exact rational to the nearest integer, in [0, 1/2].
pub fn norm_dist_rational(x: &BigRational) -> BigRational {
    let frac = x - x.floor();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if frac <= half {
        frac
    } else {
        BigRational::one() - frac
    }
}

/// The interval with endpoints p_k/q_k and p_{k+1}/q_{k+1} (ordered), which
/// contains α and has width exactly 1/(q_k q_{k+1}). For a rational α whose
/// expansion ends at index k, the interval is the degenerate [α, α].
pub fn alpha_enclosure(alpha: &AlphaSpec, k: usize) -> Result<RationalInterval> {
    let mut exp = Expansion::new(alpha.clone())?;
    alpha_enclosure_from(&mut exp, k)
}

/// As [`alpha_enclosure`], reusing an existing expansion.
pub fn alpha_enclosure_from(exp: &mut Expansion, k: usize) -> Result<RationalInterval> {
    if exp.total_len() == Some(k) {
        // expansion ends exactly at k: the k-th convergent IS the value
        let c = exp.convergent(k)?;
        let v = BigRational::new(BigInt::from(c.p.clone()), BigInt::from(c.q.clone()));
        return Ok(RationalInterval::point(v));
    }
    exp.convergent(k + 1)?;
    let ck = exp.convergent(k)?.clone();
    let ck1 = exp.convergent(k + 1)?.clone();
    let vk = BigRational::new(BigInt::from(ck.p), BigInt::from(ck.q));
    let vk1 = BigRational::new(BigInt::from(ck1.p), BigInt::from(ck1.q));
    // even-index convergents approach from below, odd from above
    Ok(if k % 2 == 0 {
        RationalInterval::new(vk, vk1)
    } else {
        RationalInterval::new(vk1, vk)
    })
}

/// Adaptive enclosure of ‖mα‖ with relative width <= rel_tol.
pub fn norm_dist_malpha(
    m: u64,
    alpha: &AlphaSpec,
    rel_tol: &BigRational,
) -> Result<NormDistEnclosure> {
    assert!(m >= 1, "m must be positive");
    assert!(rel_tol.is_positive(), "rel_tol must be positive");
    if let AlphaSpec::Rational { num, den } = alpha {
        return norm_dist_exact_rational(m, num, den);
    }
    let mut exp = Expansion::new(alpha.clone())?;
    let (interval, depth_used) = refine_norm_dist(&mut exp, m, rel_tol, 1)?;
    Ok(NormDistEnclosure { m, interval, depth_used })
}

/// Core refinement loop shared by [`norm_dist_malpha`] and the summation
/// kernel's handling of near-resonant terms: deepen the convergent index
/// until the folded enclosure of ‖mα‖ is strictly positive with relative
/// width at most `rel_tol`. Returns the enclosure and the depth settled at.
pub(crate) fn refine_norm_dist(
    exp: &mut Expansion,
    m: u64,
    rel_tol: &BigRational,
    start_depth: usize,
) -> Result<(RationalInterval, usize)> {
    let m_rat = BigRational::from_integer(BigInt::from(m));
    let two_m = BigUint::from(2 * m as u128);

    // starting depth: first k with q_{k+1} > 2m, so the α-interval scaled by
    // m has width below 1/2 and a unique nearest integer candidate
    let mut k = start_depth.max(1);
    while exp.convergent(k + 1)?.q <= two_m {
        k += 1;
    }
    loop {
        let iv = alpha_enclosure_from(exp, k)?;
        let scaled = iv.scale(&m_rat);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let nearest = (scaled.midpoint() + &half).floor();
        let dist = fold_distance(&scaled.shift(&-nearest));
        if dist.lo().is_positive() {
            if let Some(rel) = dist.rel_width() {
                if &rel <= rel_tol {
                    return Ok((dist, k));
                }
            }
        }
        k += 1;
        // depth errors (exhaustion/horizon) propagate from the expansion
    }
}

/// Image of the distance-to-nearest-integer over an interval around 0:
/// input x ⊂ (−1, 1) with |x| the distance candidate; folds at ±1/2.
fn fold_distance(x: &RationalInterval) -> RationalInterval {
    let y = x.abs();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if y.hi() <= &half {
        y
    } else {
        // part of the interval is past 1/2: distances there are 1 − |x|
        let alt = BigRational::one() - y.hi();
        let lo = y.lo().clone().min(alt);
        RationalInterval::new(lo, half)
    }
}

fn norm_dist_exact_rational(m: u64, num: &BigUint, den: &BigUint) -> Result<NormDistEnclosure> {
    let r = residue(&BigInt::from(num * m), den);
    if r.is_zero() {
        return Err(Error::Degenerate { m, hit: DegenerateHit::Integer });
    }
    if &r + &r == *den {
        return Err(Error::Degenerate { m, hit: DegenerateHit::HalfInteger });
    }
    let dist_num = if &r + &r < *den { r } else { den - &r };
    let dist = rat_from_biguint(&dist_num) / rat_from_biguint(den);
    // depth: the full (finite) expansion was implicitly used
    let exp = Expansion::new(AlphaSpec::Rational { num: num.clone(), den: den.clone() })?;
    let depth = exp.total_len().unwrap_or(0);
    Ok(NormDistEnclosure { m, interval: RationalInterval::point(dist), depth_used: depth })
}
