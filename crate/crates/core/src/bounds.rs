//! Growth references for S_M and diagnostics built on them.
//!
//! With k chosen so that q_k ≤ M < q_{k+1}, the sum S_M is floored by a
//! multiple of M·ln q_k and capped by a multiple of M·ln q_k + a_{k+1}·M;
//! a sharpened cap replaces the a_{k+1}·M term with M·(1 + ln a_{k+1}).
//! The implied constants are not pinned down here — reports carry the raw
//! reference values and the S_M-to-reference ratios as intervals, and any
//! constants are fitted empirically by the callers that need them.
//!
//! Besides single-M reports there is a grid scanner that serves a whole
//! increasing grid of M values from one summation pass, a constructor for
//! adversarial α whose partial quotients grow fast enough to defeat
//! M·ln M-scale growth, and a bounded-type test on the quotients.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::cf::{quotients, AlphaSpec, Expansion, Rule};
use crate::error::{Error, Result};
use crate::interval::{rat_from_biguint, rat_u64, RationalInterval};
use crate::logenc::ln_biguint;
use crate::sums::{locate_k_in, s_m, s_m_marked, ExecMode};

/// Absolute error bound 2⁻³⁰ for every logarithm entering a reference value.
pub const LN_PRECISION: u32 = 30;

/// S_M compared against its growth references at a single M.
///
/// All real-valued fields are enclosures: the reference values carry the
/// logarithm error (≤ 2⁻³⁰ per log), the ratios additionally carry the
/// width of the S_M enclosure.
#[derive(Clone, Debug)]
pub struct BoundReport {
    /// Upper summation limit M.
    pub m: u64,
    /// The index with q_k ≤ M < q_{k+1}.
    pub k: usize,
    /// q_k, the denominator scale the references are built from.
    pub q_k: BigUint,
    /// a_{k+1}, the partial quotient that drives both cap references.
    pub a_next: BigUint,
    /// True when a_{k+1} > q_k: the next quotient outruns the denominator
    /// scale, so the caps are dominated by their a_{k+1} terms and the
    /// single term at m = q_k carries a weight comparable to the whole sum.
    pub a_next_exceeds_q_k: bool,
    /// M·ln q_k, floored to 1 when ln q_k = 0 (see `floored_refs`).
    pub lower_ref: RationalInterval,
    /// M·ln q_k + a_{k+1}·M.
    pub upper_ref: RationalInterval,
    /// M·ln q_k + M·(1 + ln a_{k+1}).
    pub upper_improved_ref: RationalInterval,
    /// Enclosure of S_M.
    pub s_m: RationalInterval,
    /// S_M / lower_ref.
    pub ratio_lower: RationalInterval,
    /// S_M / upper_ref.
    pub ratio_upper: RationalInterval,
    /// S_M / (M·ln M), the growth rate the bounded-type caps aim at
    /// (denominator floored to 1 when M = 1).
    pub ratio_m_ln_m: RationalInterval,
    /// True when a vanishing logarithm forced a ratio denominator up to 1:
    /// q_k = 1 for the lower reference, or M = 1 for the M·ln M ratio. The
    /// affected ratios then just restate S_M and are not growth
    /// comparisons; meaningful rows start at M ≥ 2 with q_k ≥ 2.
    pub floored_refs: bool,
}

/// The index k with q_k ≤ M < q_{k+1}.
///
/// Errors if the expansion ends (rational α too shallow) or hits a trust
/// horizon before q_{k+1} > M is witnessed.
pub fn locate_k(alpha: &AlphaSpec, m: u64) -> Result<usize> {
    if m < 1 {
        return Err(Error::InvalidInput("M must be at least 1".into()));
    }
    let mut exp = Expansion::new(alpha.clone())?;
    locate_k_in(&mut exp, m)
}

fn ratio(num: &RationalInterval, den: &RationalInterval) -> RationalInterval {
    num * &den.recip()
}

/// Build the report for one M from its located index and S_M enclosure.
fn assemble(exp: &mut Expansion, m: u64, k: usize, s: RationalInterval) -> Result<BoundReport> {
    let q_k = exp.convergent(k)?.q.clone();
    let a_next = exp.quotient(k + 1)?;
    let m_rat = rat_u64(m);
    let one_pt = RationalInterval::point(BigRational::one());

    // ln q_k = 0 exactly when q_k = 1; skip the series and keep the zero a
    // point so the caps stay exact there too.
    let ln_qk = if q_k.is_one() {
        RationalInterval::point(BigRational::zero())
    } else {
        ln_biguint(&q_k, LN_PRECISION)
    };
    let m_ln_qk = ln_qk.scale(&m_rat);

    let mut floored_refs = false;
    let lower_ref = if q_k.is_one() {
        floored_refs = true;
        one_pt.clone()
    } else {
        m_ln_qk.clone()
    };

    let a_next_m = RationalInterval::point(rat_from_biguint(&(&a_next * m)));
    let upper_ref = &m_ln_qk + &a_next_m;

    let ln_a_next = if a_next.is_one() {
        RationalInterval::point(BigRational::zero())
    } else {
        ln_biguint(&a_next, LN_PRECISION)
    };
    let upper_improved_ref = &m_ln_qk + &(&one_pt + &ln_a_next).scale(&m_rat);

    let m_ln_m = if m < 2 {
        floored_refs = true;
        one_pt
    } else {
        ln_biguint(&BigUint::from(m), LN_PRECISION).scale(&m_rat)
    };

    Ok(BoundReport {
        m,
        k,
        a_next_exceeds_q_k: a_next > q_k,
        ratio_lower: ratio(&s, &lower_ref),
        ratio_upper: ratio(&s, &upper_ref),
        ratio_m_ln_m: ratio(&s, &m_ln_m),
        q_k,
        a_next,
        lower_ref,
        upper_ref,
        upper_improved_ref,
        s_m: s,
        floored_refs,
    })
}

/// Enclose S_M and compare it against the growth references at its M.
pub fn bound_report(alpha: &AlphaSpec, m: u64, rel_tol: &BigRational) -> Result<BoundReport> {
    let rep = s_m(alpha, m, rel_tol)?;
    let mut exp = Expansion::new(alpha.clone())?;
    assemble(&mut exp, m, rep.k_used, rep.total)
}

/// One report per grid entry from a single summation pass to the largest M.
///
/// The grid must be strictly increasing. Running totals are snapshot at
/// each grid point, so the work is that of one S_{max M} evaluation; each
/// row still gets its own located k and references. An empty grid yields
/// an empty list.
pub fn ratio_scan(
    alpha: &AlphaSpec,
    m_grid: &[u64],
    rel_tol: &BigRational,
) -> Result<Vec<BoundReport>> {
    let Some(&max_m) = m_grid.last() else {
        return Ok(Vec::new());
    };
    let (_, snapshots) = s_m_marked(alpha, max_m, rel_tol, m_grid, ExecMode::default())?;
    let mut exp = Expansion::new(alpha.clone())?;
    let mut rows = Vec::with_capacity(snapshots.len());
    for (m_i, s_i) in snapshots {
        let k_i = locate_k_in(&mut exp, m_i)?;
        rows.push(assemble(&mut exp, m_i, k_i, s_i)?);
    }
    Ok(rows)
}

/// Construct an α from a quotient growth rule and validate its first
/// `depth` quotients by materializing them.
///
/// The quotients are generated adaptively — each a_{k+1} is computed from
/// the exact convergent denominator q_k of the prefix — and the build is
/// deterministic. A rule whose quotient overflows its cap reports the
/// offending index.
pub fn build_pathological(rule: Rule, depth: usize) -> Result<AlphaSpec> {
    if depth < 1 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let alpha = AlphaSpec::Rule(rule);
    quotients(&alpha, depth)?;
    Ok(alpha)
}

/// Whether max_{k ≤ depth} a_k ≤ bound, together with that maximum.
pub fn bounded_type_check(
    alpha: &AlphaSpec,
    depth: usize,
    bound: u64,
) -> Result<(bool, BigUint)> {
    if depth < 1 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let pq = quotients(alpha, depth)?;
    let max = pq.a.iter().max().cloned().expect("depth >= 1 yields a quotient");
    Ok((max <= BigUint::from(bound), max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::convergents;
    use crate::sums::default_rel_tol;
    use num_traits::{Signed, ToPrimitive};

    fn golden() -> AlphaSpec {
        AlphaSpec::golden()
    }

    #[test]
    fn locate_k_pins_the_convergent_window() {
        assert_eq!(locate_k(&golden(), 10).unwrap(), 5); // q_5 = 8 <= 10 < 13
        assert_eq!(locate_k(&golden(), 13).unwrap(), 6); // boundary: q_6 = 13
        assert_eq!(locate_k(&golden(), 1).unwrap(), 1); // q_1 = 1 <= 1 < 2

        let alpha = AlphaSpec::Surd(crate::surd::QuadraticSurd::sqrt2_minus_1());
        for m in [1u64, 2, 3, 10, 100, 1_000, 123_456] {
            let k = locate_k(&alpha, m).unwrap();
            let convs = convergents(&alpha, k + 1).unwrap();
            assert!(convs[k].q <= BigUint::from(m), "q_k <= m failed at m={m}");
            assert!(convs[k + 1].q > BigUint::from(m), "m < q_(k+1) failed at m={m}");
        }
    }

    #[test]
    fn locate_k_can_be_zero_when_the_first_quotient_is_large() {
        // [0; 3, 3, 3, ...] = (-3 + sqrt(13)) / 2 has q_1 = 3.
        let alpha = AlphaSpec::surd(-3, 13, 2).unwrap();
        assert_eq!(locate_k(&alpha, 1).unwrap(), 0);
        assert_eq!(locate_k(&alpha, 2).unwrap(), 0);
        assert_eq!(locate_k(&alpha, 3).unwrap(), 1);
    }

    #[test]
    fn golden_report_matches_the_frozen_ratio() {
        let rep = bound_report(&golden(), 1_000, &default_rel_tol()).unwrap();
        assert_eq!(rep.k, 15); // q_15 = 987 <= 1000 < 1597
        assert_eq!(rep.q_k, BigUint::from(987u32));
        assert_eq!(rep.a_next, BigUint::one());
        assert!(!rep.a_next_exceeds_q_k);
        assert!(!rep.floored_refs);

        let mid = rep.ratio_m_ln_m.midpoint().to_f64().unwrap();
        assert!(
            (mid - 2.303022116612658).abs() < 1e-6,
            "S_1000 / (1000 ln 1000) drifted: {mid}"
        );
        assert!(rep.ratio_m_ln_m.width() < BigRational::new(1.into(), 1_000_000.into()));

        // Loose sandwich sanity on this single alpha (constants are fitted
        // corpus-wide elsewhere).
        assert!(rep.ratio_lower.lo() > &BigRational::new(1.into(), 8.into()));
        assert!(rep.ratio_upper.hi() < &BigRational::from_integer(20.into()));
        // The sharpened cap cannot exceed the plain one (a >= 1 + ln a).
        assert!(rep.upper_improved_ref.lo() <= rep.upper_ref.hi());
    }

    #[test]
    fn vanishing_logs_floor_the_references_and_flag_the_row() {
        // M = 1 floors both the lower reference and the M ln M denominator.
        let rep = bound_report(&golden(), 1, &default_rel_tol()).unwrap();
        assert!(rep.floored_refs);
        assert!(rep.lower_ref.is_point());
        assert_eq!(rep.lower_ref.lo(), &BigRational::one());
        // Ratio against a floored denominator just restates S_1 = 1/||alpha||.
        let s1 = rep.ratio_lower.midpoint().to_f64().unwrap();
        assert!((s1 - 2.618033988749894).abs() < 1e-6);

        // M = 2 with q_0 = 1 floors only the lower reference; ln M > 0.
        let alpha = AlphaSpec::surd(-3, 13, 2).unwrap(); // [0; 3, 3, ...]
        let rep = bound_report(&alpha, 2, &default_rel_tol()).unwrap();
        assert_eq!(rep.k, 0);
        assert!(rep.floored_refs);
        assert_eq!(rep.lower_ref.lo(), &BigRational::one());
        assert!(rep.ratio_m_ln_m.lo().is_positive());
        // Caps stay positive and usable: a_1 = 3 dominates.
        assert!(rep.upper_ref.lo() > &BigRational::from_integer(5.into()));
    }

    #[test]
    fn scan_rows_match_solo_reports() {
        let grid = [100u64, 1_000];
        let rows = ratio_scan(&golden(), &grid, &default_rel_tol()).unwrap();
        assert_eq!(rows.len(), 2);
        for (row, &m) in rows.iter().zip(&grid) {
            let solo = bound_report(&golden(), m, &default_rel_tol()).unwrap();
            assert_eq!(row.m, m);
            assert_eq!(row.k, solo.k);
            assert_eq!(row.q_k, solo.q_k);
            // Both enclose the same S_M within tolerance; the snapshots come
            // from a deeper pass so the intervals differ but must overlap.
            assert!(row.s_m.intersects(&solo.s_m), "disjoint S_{m} enclosures");
            assert!(row.s_m.rel_width().unwrap() <= default_rel_tol());
        }
        assert!(rows[0].s_m.hi() < rows[1].s_m.lo(), "S_M not growing along the grid");

        assert!(ratio_scan(&golden(), &[], &default_rel_tol()).unwrap().is_empty());
    }

    #[test]
    fn scan_rejects_a_grid_that_is_not_increasing() {
        for bad in [&[100u64, 100][..], &[100, 50]] {
            match ratio_scan(&golden(), bad, &default_rel_tol()) {
                Err(Error::InvalidInput(_)) => {}
                other => panic!("expected invalid-input for grid {bad:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn pathological_builds_are_deterministic_and_caps_name_the_index() {
        let a = build_pathological(Rule::QkSquare, 5).unwrap();
        let b = build_pathological(Rule::QkSquare, 5).unwrap();
        assert_eq!(quotients(&a, 5).unwrap().a, quotients(&b, 5).unwrap().a);
        let vals: Vec<u64> =
            quotients(&a, 5).unwrap().a.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(vals, vec![1, 1, 4, 81, 534_361]);

        let cap = BigUint::from(10_000u32);
        assert!(build_pathological(Rule::ExpQk { cap: cap.clone() }, 3).is_ok());
        match build_pathological(Rule::ExpQk { cap }, 4) {
            Err(Error::CapExceeded { k: 4, .. }) => {}
            other => panic!("expected cap exceeded at k=4, got {other:?}"),
        }
        match build_pathological(Rule::QkSquare, 0) {
            Err(Error::InvalidInput(_)) => {}
            other => panic!("expected invalid-input for depth 0, got {other:?}"),
        }
    }

    #[test]
    fn bounded_type_matches_known_quotients() {
        let (ok, max) = bounded_type_check(&golden(), 100, 1).unwrap();
        assert!(ok);
        assert_eq!(max, BigUint::one());

        let (ok, max) = bounded_type_check(&AlphaSpec::Rule(Rule::Pow2), 10, 100).unwrap();
        assert!(!ok);
        assert_eq!(max, BigUint::from(512u32)); // a_10 = 2^9

        let alpha = AlphaSpec::Surd(crate::surd::QuadraticSurd::sqrt2_minus_1());
        let (ok, max) = bounded_type_check(&alpha, 50, 2).unwrap();
        assert!(ok);
        assert_eq!(max, BigUint::from(2u32));
    }

    #[test]
    fn quotient_spike_at_m_equal_qk_keeps_the_report_bounded() {
        // a_5 = q_4^2 = 534361 makes the single term at m = q_4 = 731 as
        // large as the whole cap reference; the ratio still stays O(1).
        let alpha = build_pathological(Rule::QkSquare, 6).unwrap();
        let rep = bound_report(&alpha, 731, &default_rel_tol()).unwrap();
        assert_eq!(rep.k, 4);
        assert_eq!(rep.q_k, BigUint::from(731u32));
        assert_eq!(rep.a_next, BigUint::from(534_361u32));
        assert!(rep.a_next_exceeds_q_k);

        let s_lo = rep.s_m.lo().to_f64().unwrap();
        assert!(s_lo > 390_617_900.0, "spike term missing: S = {s_lo}");
        let ru = rep.ratio_upper.midpoint().to_f64().unwrap();
        assert!(ru > 0.5 && ru < 3.0, "spike ratio out of band: {ru}");
    }
}
