//! Enclosures of S_M(α) = Σ_{m=1}^M 1/‖mα‖ and its weighted and powered
//! variants, reported with the diagnostics that make the sum's structure
//! visible: per-block subtotals over blocks of length q_k, the near-resonant
//! terms listed separately, and an exact partition identity tying everything
//! back to the total.

mod kernel;

pub use kernel::ExecMode;
pub(crate) use kernel::{locate_k_in, sum_range, RangeSum, TermKind};

use crate::cf::{AlphaSpec, Expansion};
use crate::enclose::refine_norm_dist;
use crate::error::{Error, Result};
use crate::interval::RationalInterval;
use crate::logenc::pow_rational_exponent;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Default relative tolerance for sum enclosures: 2⁻²⁰.
pub fn default_rel_tol() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(1u64 << 20))
}

/// Full account of one sum enclosure.
///
/// The partition identity holds exactly in rational arithmetic:
/// `total = Σ block_subtotals + tail + special_total`. Block subtotals cover
/// the complete blocks m ∈ [1+l·q_k, (l+1)·q_k] and count only ordinary
/// terms; the terms with residue m·p_k ≡ 0, ±1 (mod q_k) are accounted in
/// `special_total` instead (they can sit arbitrarily close to an integer and
/// are enclosed individually). `tail` is the trailing partial block when q_k
/// does not divide M.
#[derive(Clone, Debug)]
pub struct SumReport {
    /// Upper summation limit M.
    pub m: u64,
    /// The index k with q_k ≤ M < q_{k+1}.
    pub k_used: usize,
    /// q_{k_used}.
    pub q_k: u64,
    /// Convergent depth the bulk enclosures were computed at.
    pub depth_used: usize,
    /// Enclosure of S_M.
    pub total: RationalInterval,
    /// Individual (m, term enclosure) for the near-resonant terms, capped at
    /// a fixed listing length; `special_count`/`special_total` always cover
    /// all of them.
    pub special_terms: Vec<(u64, RationalInterval)>,
    pub special_count: u64,
    /// Grid-rounded sum of every special term.
    pub special_total: RationalInterval,
    /// Ordinary-term subtotal per complete block, ascending; when the block
    /// count exceeds the listing cap the remainder is coalesced into the
    /// final entry and `blocks_coalesced` is set.
    pub block_subtotals: Vec<RationalInterval>,
    pub blocks_coalesced: bool,
    /// Ordinary-term subtotal of the trailing partial block, if any.
    pub tail: Option<RationalInterval>,
}

fn assemble_report(range: RangeSum, m: u64) -> SumReport {
    let RangeSum { plan, block_mants, blocks_coalesced, tail_mants, specials, total, .. } = range;
    let mut spec_lo = BigUint::zero();
    let mut spec_hi = BigUint::zero();
    for s in &specials {
        spec_lo += &s.mant_lo;
        spec_hi += &s.mant_hi;
    }
    let special_total = kernel::mant_interval(spec_lo, spec_hi);
    let special_count = specials.len() as u64;
    let special_terms = specials
        .into_iter()
        .take(kernel::SPECIAL_LIST_CAP)
        .map(|s| (s.m, s.term))
        .collect();
    SumReport {
        m,
        k_used: plan.k_used,
        q_k: plan.qk,
        depth_used: plan.j_used,
        total,
        special_terms,
        special_count,
        special_total,
        block_subtotals: block_mants
            .into_iter()
            .map(|(l, h)| kernel::mant_interval(l, h))
            .collect(),
        blocks_coalesced,
        tail: tail_mants.map(|(l, h)| kernel::mant_interval(l, h)),
    }
}

/// Enclose S_M(α) with total relative width ≤ rel_tol.
pub fn s_m(alpha: &AlphaSpec, m: u64, rel_tol: &BigRational) -> Result<SumReport> {
    s_m_in_mode(alpha, m, rel_tol, ExecMode::default())
}

/// As [`s_m`] with an explicit execution schedule; both schedules produce
/// bit-identical reports.
pub fn s_m_in_mode(
    alpha: &AlphaSpec,
    m: u64,
    rel_tol: &BigRational,
    mode: ExecMode,
) -> Result<SumReport> {
    let range = sum_range(alpha, 1, m, rel_tol, TermKind::Plain, &[], mode)?;
    Ok(assemble_report(range, m))
}

/// S_M plus running totals at each mark (strictly increasing, ≤ M): one
/// summation pass serves a whole grid of M values.
pub(crate) fn s_m_marked(
    alpha: &AlphaSpec,
    m: u64,
    rel_tol: &BigRational,
    marks: &[u64],
    mode: ExecMode,
) -> Result<(SumReport, Vec<(u64, RationalInterval)>)> {
    let range = sum_range(alpha, 1, m, rel_tol, TermKind::Plain, marks, mode)?;
    let marks_out = range.marks.clone();
    Ok((assemble_report(range, m), marks_out))
}

/// Enclose Σ_{m=1}^M 1/‖mα‖^β for β ≥ 1. Integer β runs the block kernel;
/// a fractional exponent falls back to a per-term evaluation (practical for
/// moderate M only) with interval roots.
pub fn s_m_beta(
    alpha: &AlphaSpec,
    m: u64,
    beta: &BigRational,
    rel_tol: &BigRational,
) -> Result<RationalInterval> {
    let one = BigRational::one();
    if beta < &one {
        return Err(Error::InvalidInput(format!("beta must be ≥ 1, got {beta}")));
    }
    if beta == &one {
        return Ok(s_m(alpha, m, rel_tol)?.total);
    }
    if beta.is_integer() {
        let b = beta
            .numer()
            .to_u32()
            .filter(|&b| b <= 64)
            .ok_or_else(|| Error::InvalidInput(format!("integer beta must be ≤ 64, got {beta}")))?;
        let range =
            sum_range(alpha, 1, m, rel_tol, TermKind::Pow(b), &[], ExecMode::default())?;
        return Ok(range.total);
    }
    // fractional exponent: term-by-term with interval roots
    const FRACTIONAL_BETA_M_CAP: u64 = 1 << 16;
    if m > FRACTIONAL_BETA_M_CAP {
        return Err(Error::BudgetExceeded(format!(
            "fractional beta is evaluated term by term; M ≤ {FRACTIONAL_BETA_M_CAP} supported"
        )));
    }
    let (num, den) = (
        beta.numer()
            .to_u32()
            .ok_or_else(|| Error::InvalidInput("beta numerator too large".into()))?,
        beta.denom()
            .to_u32()
            .ok_or_else(|| Error::InvalidInput("beta denominator too large".into()))?,
    );
    let beta_ceil = beta.ceil().numer().to_u32().expect("checked above");
    let dist_tol = rel_tol / BigRational::from_integer(BigInt::from(4 * beta_ceil));
    let mut exp = Expansion::new(alpha.clone())?;
    let mut lo = BigRational::zero();
    let mut hi = BigRational::zero();
    for mm in 1..=m {
        let dist = match alpha {
            AlphaSpec::Rational { .. } => {
                crate::enclose::norm_dist_malpha(mm, alpha, &dist_tol)?.interval
            }
            _ => refine_norm_dist(&mut exp, mm, &dist_tol, 1)?.0,
        };
        let term = pow_rational_exponent(&dist.recip(), num, den, 96).round_out(96);
        let (tl, th) = term.into_endpoints();
        lo += tl;
        hi += th;
    }
    Ok(RationalInterval::new(lo, hi))
}

/// Enclose Σ_{m=1}^M 1/(m·‖mα‖).
pub fn s_m_weighted(
    alpha: &AlphaSpec,
    m: u64,
    rel_tol: &BigRational,
) -> Result<RationalInterval> {
    let range =
        sum_range(alpha, 1, m, rel_tol, TermKind::Weighted, &[], ExecMode::default())?;
    Ok(range.total)
}

/// Enclosures of the Cesàro means (1/n)·Σ_{j=1}^n S_j for n = 1..=N, from a
/// single pass of term enclosures.
pub fn cesaro_means(
    alpha: &AlphaSpec,
    n: u64,
    rel_tol: &BigRational,
) -> Result<Vec<RationalInterval>> {
    if n < 1 {
        return Err(Error::InvalidInput("cesaro_means requires N ≥ 1".into()));
    }
    let marks: Vec<u64> = (1..=n).collect();
    let range =
        sum_range(alpha, 1, n, rel_tol, TermKind::Plain, &marks, ExecMode::default())?;
    let mut lo_sum = BigRational::zero();
    let mut hi_sum = BigRational::zero();
    let mut out = Vec::with_capacity(n as usize);
    for (idx, (_, s)) in range.marks.into_iter().enumerate() {
        let (l, h) = s.into_endpoints();
        lo_sum += l;
        hi_sum += h;
        let n_rat = BigRational::from_integer(BigInt::from(idx as u64 + 1));
        out.push(RationalInterval::new(&lo_sum / &n_rat, &hi_sum / &n_rat));
    }
    Ok(out)
}

/// Enclosure of the complete block sum Σ_{m=1+l·q_k}^{(l+1)·q_k} 1/‖mα‖,
/// including any near-resonant terms inside the block. Evaluated at the
/// default tolerance.
pub fn block_profile(alpha: &AlphaSpec, k: usize, l: u64) -> Result<RationalInterval> {
    let mut exp = Expansion::new(alpha.clone())?;
    exp.convergent(k + 1)?;
    let qk = exp
        .convergent(k)?
        .q
        .to_u64()
        .ok_or_else(|| Error::InvalidInput(format!("q_{k} does not fit in 64 bits")))?;
    let m_end = l
        .checked_add(1)
        .and_then(|l1| l1.checked_mul(qk))
        .ok_or_else(|| Error::InvalidInput("block end (l+1)·q_k overflows".into()))?;
    let m_start = l * qk + 1;
    let range = sum_range(
        alpha,
        m_start,
        m_end,
        &default_rel_tol(),
        TermKind::Plain,
        &[],
        ExecMode::default(),
    )?;
    Ok(range.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat_u64;
    use crate::surd::{exact_norm_dist, QuadraticSurd};
    use num_traits::Signed;
    use std::cmp::Ordering;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn assert_contains_digits(iv: &RationalInterval, lo10: (i64, i64), hi10: (i64, i64)) {
        assert!(iv.lo() <= &rat(lo10.0, lo10.1), "lo too high: {:?}", iv.lo());
        assert!(iv.hi() >= &rat(hi10.0, hi10.1), "hi too low");
    }

    /// Independent oracle: sum 1/‖mα‖ for a surd by the exact a+b√d values,
    /// bracketing each term by outward rational rounding.
    fn surd_sum_oracle(surd: &QuadraticSurd, m: u64) -> RationalInterval {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for mm in 1..=m {
            let d = exact_norm_dist(surd, mm);
            // bracket the surd distance by a dyadic sandwich at 2^-80
            let (dl, dh) = d.enclosure(80).into_endpoints();
            assert!(dl.is_positive());
            lo += dh.recip();
            hi += dl.recip();
        }
        RationalInterval::new(lo, hi)
    }

    #[test]
    fn golden_m1_matches_closed_form() {
        // S_1 = 1/‖α‖ = (3+√5)/2 ≈ 2.618033988749895
        let alpha = AlphaSpec::golden();
        let rep = s_m(&alpha, 1, &default_rel_tol()).unwrap();
        assert_contains_digits(
            &rep.total,
            (2_618033988749894, 1_000000000000000),
            (2_618033988749895, 1_000000000000000),
        );
        assert!(rep.total.rel_width().unwrap() <= default_rel_tol());
        assert_eq!(rep.k_used, 1);
        assert_eq!(rep.q_k, 1);
        // q_k = 1 makes every residue 0: the single term is special
        assert_eq!(rep.special_count, 1);
    }

    #[test]
    fn golden_m2_matches_closed_form() {
        // S_2 = (3+√5)/2 + 1/(√5−2) ≈ 6.854101966249685
        let alpha = AlphaSpec::golden();
        let rep = s_m(&alpha, 2, &default_rel_tol()).unwrap();
        assert_contains_digits(
            &rep.total,
            (6_854101966249684, 1_000000000000000),
            (6_854101966249685, 1_000000000000000),
        );
    }

    #[test]
    fn partition_identity_exact() {
        let alpha = AlphaSpec::Surd(QuadraticSurd::sqrt2_minus_1());
        for m in [50u64, 144, 1000] {
            let rep = s_m(&alpha, m, &default_rel_tol()).unwrap();
            let mut lo = BigRational::zero();
            let mut hi = BigRational::zero();
            for b in &rep.block_subtotals {
                lo += b.lo();
                hi += b.hi();
            }
            if let Some(t) = &rep.tail {
                lo += t.lo();
                hi += t.hi();
            }
            lo += rep.special_total.lo();
            hi += rep.special_total.hi();
            assert_eq!(&lo, rep.total.lo(), "M={m}");
            assert_eq!(&hi, rep.total.hi(), "M={m}");
        }
    }

    #[test]
    fn oracle_agreement_sqrt2() {
        let surd = QuadraticSurd::sqrt2_minus_1();
        let alpha = AlphaSpec::Surd(surd.clone());
        for m in [1u64, 7, 29, 169, 985] {
            let rep = s_m(&alpha, m, &default_rel_tol()).unwrap();
            let oracle = surd_sum_oracle(&surd, m);
            assert!(rep.total.intersects(&oracle), "M={m}");
            // and the kernel's enclosure is within tolerance
            assert!(rep.total.rel_width().unwrap() <= default_rel_tol(), "M={m}");
        }
    }

    #[test]
    fn sequential_parallel_identical() {
        let alpha = AlphaSpec::golden();
        let tol = default_rel_tol();
        let seq = s_m_in_mode(&alpha, 4000, &tol, ExecMode::Sequential).unwrap();
        let par = s_m_in_mode(&alpha, 4000, &tol, ExecMode::Parallel).unwrap();
        assert_eq!(seq.total.lo(), par.total.lo());
        assert_eq!(seq.total.hi(), par.total.hi());
        assert_eq!(seq.special_count, par.special_count);
        for (a, b) in seq.block_subtotals.iter().zip(&par.block_subtotals) {
            assert_eq!(a.lo(), b.lo());
            assert_eq!(a.hi(), b.hi());
        }
    }

    #[test]
    fn special_terms_have_resonant_residues() {
        let alpha = AlphaSpec::golden();
        let rep = s_m(&alpha, 1000, &default_rel_tol()).unwrap();
        // golden at M=1000: q_16 = 987
        assert_eq!(rep.k_used, 15);
        assert_eq!(rep.q_k, 987);
        let pk = 610u128; // p_15 (Fibonacci neighbour of 987)
        for (m, _) in &rep.special_terms {
            let r = ((*m as u128) * pk % 987) as u64;
            assert!(r == 0 || r == 1 || r == 986, "m={m} residue {r}");
        }
        assert!(rep.special_count >= 3);
        assert!(!rep.blocks_coalesced);
        assert_eq!(rep.block_subtotals.len(), 1);
        assert!(rep.tail.is_some());
    }

    #[test]
    fn beta_two_golden_small() {
        // M=1: ((3+√5)/2)² ≈ 6.854101966249685; M=2: + (√5+2)² ≈ 24.798373876248846
        let alpha = AlphaSpec::golden();
        let two = BigRational::from_integer(2.into());
        let b1 = s_m_beta(&alpha, 1, &two, &default_rel_tol()).unwrap();
        assert!(b1.lo() <= &rat(6_854101966249685, 1_000000000000000));
        assert!(b1.hi() >= &rat(6_854101966249684, 1_000000000000000));
        let b2 = s_m_beta(&alpha, 2, &two, &default_rel_tol()).unwrap();
        assert!(b2.lo() <= &rat(24_798373876248849, 1_000000000000000));
        assert!(b2.hi() >= &rat(24_798373876248848, 1_000000000000000));
        // β = 1 delegates to the plain sum
        let b_one = s_m_beta(&alpha, 2, &BigRational::one(), &default_rel_tol()).unwrap();
        let plain = s_m(&alpha, 2, &default_rel_tol()).unwrap().total;
        assert_eq!(b_one.lo(), plain.lo());
        assert_eq!(b_one.hi(), plain.hi());
    }

    #[test]
    fn weighted_golden_m2() {
        // S^w_2 = (3+√5)/2 + (1/2)(√5+2) ≈ 4.736067977499790
        let alpha = AlphaSpec::golden();
        let w = s_m_weighted(&alpha, 2, &default_rel_tol()).unwrap();
        assert!(w.lo() <= &rat(4_736067977499790, 1_000000000000000));
        assert!(w.hi() >= &rat(4_736067977499789, 1_000000000000000));
    }

    #[test]
    fn cesaro_matches_prefix_sums() {
        let alpha = AlphaSpec::golden();
        let means = cesaro_means(&alpha, 2, &default_rel_tol()).unwrap();
        assert_eq!(means.len(), 2);
        // first mean = S_1 ≈ 2.618, second = (S_1+S_2)/2 ≈ 4.736067977499790
        assert!(means[0].contains(&rat(2_618033988749895, 1_000000000000000)));
        assert!(means[1].contains(&rat(4_736067977499790, 1_000000000000000)));
    }

    #[test]
    fn block_profile_partitions_the_sum() {
        // golden, k=5 (q_5 = 8), blocks l = 0..2 plus nothing: M = 24
        let alpha = AlphaSpec::golden();
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for l in 0..3u64 {
            let b = block_profile(&alpha, 5, l).unwrap();
            lo += b.lo();
            hi += b.hi();
        }
        let full = s_m(&alpha, 24, &default_rel_tol()).unwrap().total;
        // same quantity, different depths: the enclosures must intersect
        let blocks = RationalInterval::new(lo, hi);
        assert!(blocks.intersects(&full));
    }

    #[test]
    fn rational_alpha_sums_exactly_or_degenerates() {
        // α = 7/16: distances are residues/16; M ≤ 6 avoids m = 8 (half hit)
        let alpha = AlphaSpec::rational(BigInt::from(7), BigInt::from(16)).unwrap();
        let rep = s_m(&alpha, 6, &default_rel_tol()).unwrap();
        // exact: Σ = 16/7 + 16/2 + 16/5 + 16/4 + 16/3 + 16/6
        let exact: BigRational = [7u64, 2, 5, 4, 3, 6]
            .iter()
            .map(|&r| rat_u64(16) / rat_u64(r))
            .sum();
        assert!(rep.total.contains(&exact));
        assert!(rep.total.width() <= rat(1, 1 << 40));
        // m = 8 makes 8·7/16 a half-integer
        match s_m(&alpha, 8, &default_rel_tol()) {
            Err(Error::Degenerate { m: 8, .. }) => {}
            other => panic!("expected degeneracy at m=8, got {other:?}"),
        }
        // M ≥ 16 hits an integer
        assert!(matches!(
            s_m(&alpha, 20, &default_rel_tol()),
            Err(Error::Degenerate { m: 16, .. })
        ));
    }

    #[test]
    fn marks_snapshot_running_totals() {
        let alpha = AlphaSpec::Surd(QuadraticSurd::sqrt2_minus_1());
        let tol = default_rel_tol();
        let (rep, marks) =
            s_m_marked(&alpha, 500, &tol, &[10, 100, 500], ExecMode::Sequential).unwrap();
        assert_eq!(marks.len(), 3);
        // each snapshot must match an independent full run at that M
        for (mk, iv) in &marks {
            let solo = s_m(&alpha, *mk, &tol).unwrap();
            assert!(iv.intersects(&solo.total), "mark {mk}");
        }
        // last mark = full total
        assert_eq!(marks[2].1.lo(), rep.total.lo());
        assert_eq!(marks[2].1.hi(), rep.total.hi());
        // snapshots increase
        assert!(marks[0].1.hi() < marks[1].1.lo());
        assert!(marks[1].1.hi() < marks[2].1.lo());
    }

    #[test]
    fn big_lane_agrees_with_fast_lane() {
        // force the BigUint lane with a tolerance beyond the u128 range by
        // using an integer power (Pow always takes the big lane) and compare
        // against squaring oracle values
        let surd = QuadraticSurd::sqrt2_minus_1();
        let alpha = AlphaSpec::Surd(surd.clone());
        let two = BigRational::from_integer(2.into());
        let b = s_m_beta(&alpha, 200, &two, &default_rel_tol()).unwrap();
        // oracle: exact surd squares
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for mm in 1..=200u64 {
            let (dl, dh) = exact_norm_dist(&surd, mm).enclosure(80).into_endpoints();
            lo += (dh.recip()).pow(2);
            hi += (dl.recip()).pow(2);
        }
        assert!(b.intersects(&RationalInterval::new(lo, hi)));
    }

    #[test]
    fn fractional_beta_small() {
        // β = 3/2 at tiny M: verify against per-term oracle with exact surds
        let surd = QuadraticSurd::golden();
        let alpha = AlphaSpec::golden();
        let beta = rat(3, 2);
        let v = s_m_beta(&alpha, 3, &beta, &default_rel_tol()).unwrap();
        let mut lo = 0f64;
        let mut hi = 0f64;
        for mm in 1..=3u64 {
            let (dl, dh) = exact_norm_dist(&surd, mm).enclosure(80).into_endpoints();
            lo += crate::render::to_f64(&dh.recip()).powf(1.5) - 1e-9;
            hi += crate::render::to_f64(&dl.recip()).powf(1.5) + 1e-9;
        }
        assert!(crate::render::to_f64(v.lo()) <= hi);
        assert!(crate::render::to_f64(v.hi()) >= lo);
        let width = v.rel_width().unwrap();
        assert!(width <= rat(1, 1 << 18));
    }

    #[test]
    fn rejects_bad_inputs() {
        let alpha = AlphaSpec::golden();
        assert!(matches!(
            s_m(&alpha, 0, &default_rel_tol()),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            s_m(&alpha, 10, &rat(1, 1)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            s_m(&alpha, 10, &rat(1, i64::MAX)),
            Err(Error::InvalidInput(_))
        ));
        let half = rat(1, 2);
        assert!(matches!(
            s_m_beta(&alpha, 10, &half, &default_rel_tol()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn monotone_in_m() {
        let alpha = AlphaSpec::Surd(QuadraticSurd::sqrt2_minus_1());
        let tol = default_rel_tol();
        let mut prev = BigRational::zero();
        for m in [10u64, 50, 250, 1250] {
            let rep = s_m(&alpha, m, &tol).unwrap();
            assert!(rep.total.lo() > &prev, "M={m}");
            prev = rep.total.lo().clone();
        }
    }

    #[test]
    fn ordering_check_against_exact_surd_values() {
        // endpoint ordering: every per-m term of the report's special list
        // must contain the exact surd term
        let surd = QuadraticSurd::golden();
        let alpha = AlphaSpec::golden();
        let rep = s_m(&alpha, 1000, &default_rel_tol()).unwrap();
        for (m, term) in &rep.special_terms {
            let d = exact_norm_dist(&surd, *m);
            // term = 1/d: exact d must be within [1/hi, 1/lo]
            let want_lo = term.hi().recip();
            let want_hi = term.lo().recip();
            assert_ne!(d.cmp_rational(&want_lo), Ordering::Less, "m={m}");
            assert_ne!(d.cmp_rational(&want_hi), Ordering::Greater, "m={m}");
        }
    }
}
