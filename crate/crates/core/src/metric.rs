//! Seeded experiments and analytic helpers for the almost-every-α theory:
//! Gauss-map orbits, Birkhoff averages of ln a_k, Lévy exponents
//! (1/k)·ln q_k, the Gauss-measure preimage identity, quotient-exceedance
//! statistics, and growth-ratio scans of S_M over grids of M.
//!
//! Random α are uniform dyadic rationals with a certified quotient trust
//! horizon (see [`crate::cf::AlphaSpec::RandomDyadic`]); per-sample seeds
//! are derived from the master seed before any work starts, so results are
//! bit-identical across reruns and would stay identical under a parallel
//! sample dispatcher. Samples are evaluated in index order here — the
//! summation kernel inside each sample already parallelizes — and
//! summaries always reduce in index order.
//!
//! [`ExperimentResult`] carries every number as an exact decimal string
//! (17 significant digits for approximations), so serializing one is
//! byte-reproducible.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::cf::{quotients, AlphaSpec, Expansion};
use crate::error::{Error, Result};
use crate::interval::{rat_from_biguint, rat_u64, RationalInterval};
use crate::logenc::{
    floor_log2, ln2_enclosure, ln_biguint, ln_interval, ln_rational, nth_root_enclosure,
    pow_rational_exponent, LnCache,
};
use crate::render::{dec_approx, SIG_DIGITS};
use crate::sums::{s_m_marked, ExecMode};

/// Absolute log-enclosure error 2⁻⁴⁸ for exponents and ratio denominators.
const LN_P: u32 = 48;
/// Working precision for the preimage-identity accumulation: 10⁶ terms at
/// width 2⁻⁵⁶ each keep the total slack below 2⁻³⁶ ≈ 1.5·10⁻¹¹.
const GI_P: u32 = 56;
/// φ evaluation precision for exceedance tests.
const PHI_P: u32 = 40;
/// Per-sample exceedance indices listed in an [`ExperimentResult`] are
/// capped at this many entries; counts always cover all of them.
const EXCEED_LIST_CAP: usize = 512;

// ---------------------------------------------------------------------------
// φ families

/// A named positive non-decreasing function on positive integers, also
/// evaluable over a positive interval argument (used at x = ln M).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhiSpec {
    /// φ(k) = c for a positive rational constant c.
    Const(BigRational),
    /// φ(k) = ln(k + 1).
    Log,
    /// φ(k) = ln²(k + 1).
    LogSq,
    /// φ(k) = k^(num/den) with a positive rational exponent.
    Pow { num: u32, den: u32 },
    /// φ(k) = k · ln²(k + 1).
    KLogSq,
}

impl PhiSpec {
    /// Constant family with the positivity invariant checked.
    pub fn constant(c: BigRational) -> Result<PhiSpec> {
        if !c.is_positive() {
            return Err(Error::InvalidInput(format!("phi constant must be positive, got {c}")));
        }
        Ok(PhiSpec::Const(c))
    }

    /// Power family k^(num/den); both parts must be at least 1.
    pub fn power(num: u32, den: u32) -> Result<PhiSpec> {
        if num < 1 || den < 1 {
            return Err(Error::InvalidInput("phi exponent must be a positive rational".into()));
        }
        Ok(PhiSpec::Pow { num, den })
    }

    /// Canonical name, also accepted by [`PhiSpec::parse`].
    pub fn label(&self) -> String {
        match self {
            PhiSpec::Const(c) => crate::render::exact(c),
            PhiSpec::Log => "logk".into(),
            PhiSpec::LogSq => "log2k".into(),
            PhiSpec::Pow { num, den: 1 } => format!("k^{num}"),
            PhiSpec::Pow { num, den } => format!("k^{num}/{den}"),
            PhiSpec::KLogSq => "k*log2k".into(),
        }
    }

    /// Parse a φ description: `logk`, `log2k`, `k*log2k`, `k^s` with s a
    /// positive integer or `n/d`, or a bare positive rational constant.
    pub fn parse(s: &str) -> Result<PhiSpec> {
        let t = s.trim();
        match t {
            "logk" => return Ok(PhiSpec::Log),
            "log2k" => return Ok(PhiSpec::LogSq),
            "k*log2k" => return Ok(PhiSpec::KLogSq),
            _ => {}
        }
        if let Some(exp) = t.strip_prefix("k^") {
            let (num, den) = match exp.split_once('/') {
                Some((n, d)) => (n, d),
                None => (exp, "1"),
            };
            let num: u32 = num
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad phi exponent in {t:?}")))?;
            let den: u32 = den
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad phi exponent in {t:?}")))?;
            return PhiSpec::power(num, den);
        }
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (n, d),
            None => (t, "1"),
        };
        let parse_int = |x: &str| -> Result<BigInt> {
            x.parse().map_err(|_| Error::InvalidInput(format!("unrecognized phi {t:?}")))
        };
        let c = BigRational::new_raw(parse_int(num)?, parse_int(den)?);
        if c.denom().is_zero() {
            return Err(Error::InvalidInput(format!("unrecognized phi {t:?}")));
        }
        PhiSpec::constant(c.reduced())
    }

    fn validate(&self) -> Result<()> {
        match self {
            PhiSpec::Const(c) if !c.is_positive() => {
                Err(Error::InvalidInput("phi constant must be positive".into()))
            }
            PhiSpec::Pow { num, den } if *num < 1 || *den < 1 => {
                Err(Error::InvalidInput("phi exponent must be a positive rational".into()))
            }
            _ => Ok(()),
        }
    }

    /// φ over a positive interval argument.
    pub fn eval_interval(&self, x: &RationalInterval, p: u32) -> RationalInterval {
        assert!(x.lo().is_positive(), "phi wants a positive argument");
        let one = BigRational::one();
        match self {
            PhiSpec::Const(c) => RationalInterval::point(c.clone()),
            PhiSpec::Log => ln_interval(&x.shift(&one), p),
            PhiSpec::LogSq => ln_interval(&x.shift(&one), p).pow_uint(2),
            PhiSpec::Pow { num, den } => pow_rational_exponent(x, *num, *den, p),
            PhiSpec::KLogSq => x * &ln_interval(&x.shift(&one), p).pow_uint(2),
        }
    }

    /// φ at an integer argument k ≥ 1.
    pub fn eval_index(&self, k: u64, p: u32) -> RationalInterval {
        assert!(k >= 1, "phi is defined on positive integers");
        self.eval_interval(&RationalInterval::point(rat_u64(k)), p)
    }
}

// ---------------------------------------------------------------------------
// Seeding and sampling

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The per-sample seed for `index` under `master_seed` (a SplitMix64-style
/// finalizer; fixed forever so stored results stay reproducible).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Default bit budget for sampled α: supports quotient depths to ~1100.
pub const DEFAULT_SAMPLE_BITS: u32 = 4096;

/// The smallest power-of-two bit budget (at least the default) whose trust
/// horizon covers quotient depth `k_depth`.
pub fn bits_for_depth(k_depth: usize) -> u32 {
    let mut bits = DEFAULT_SAMPLE_BITS;
    while crate::cf::trust_horizon_heuristic(bits) < k_depth {
        bits = bits.checked_mul(2).expect("bit budget overflow");
    }
    bits
}

/// The `index`-th uniform dyadic sample of the `master_seed` ensemble.
pub fn sample_alpha(master_seed: u64, index: u64, bits: u32) -> Result<AlphaSpec> {
    AlphaSpec::random_dyadic(derive_seed(master_seed, index), bits)
}

// ---------------------------------------------------------------------------
// Gauss-map orbits and ergodic exponents

/// First n partial quotients a_k = ⌊1/(T^{k−1}α)⌋, where T is the Gauss
/// map x ↦ 1/x − ⌊1/x⌋. The map shifts the expansion, so this is exactly
/// the quotient sequence.
pub fn gauss_orbit(alpha: &AlphaSpec, n: usize) -> Result<Vec<BigUint>> {
    Ok(quotients(alpha, n)?.a)
}

/// The same orbit by literal exact iteration of T on a rational x = num/den
/// in [0, 1) — the independent oracle for the continued-fraction shift.
pub fn gauss_orbit_rational(num: &BigUint, den: &BigUint, n: usize) -> Result<Vec<BigUint>> {
    if den.is_zero() || num >= den {
        return Err(Error::InvalidInput("gauss orbit wants num/den in [0, 1)".into()));
    }
    let mut p = num.clone();
    let mut q = den.clone();
    let mut orbit = Vec::with_capacity(n);
    for step in 0..n {
        if p.is_zero() {
            return Err(Error::ExpansionExhausted { available: step, requested: n });
        }
        // x = p/q, 1/x = q/p: quotient a = floor(q/p), T(x) = (q - a·p)/p
        let (a, rem) = num_integer::Integer::div_rem(&q, &p);
        orbit.push(a);
        q = std::mem::replace(&mut p, rem);
    }
    Ok(orbit)
}

/// Enclosure of the Birkhoff average (1/k)·Σ_{i=1}^{k} ln a_i. For almost
/// every α this converges to ln K₀, the log of Khinchin's constant (see
/// [`khinchin_log_constant`] for the independent series value).
pub fn birkhoff_log_quotient(alpha: &AlphaSpec, k: usize) -> Result<RationalInterval> {
    if k < 1 {
        return Err(Error::InvalidInput("Birkhoff average needs depth k >= 1".into()));
    }
    let quots = quotients(alpha, k)?.a;
    let mut cache = LnCache::new(LN_P);
    let mut acc = RationalInterval::zero();
    for a in &quots {
        if a.is_one() {
            continue; // ln 1 = 0 exactly
        }
        acc = &acc + &cache.ln_big(a);
    }
    let inv_k = BigRational::new(BigInt::one(), BigInt::from(k));
    Ok(acc.scale(&inv_k))
}

/// Enclosure of (1/k)·ln q_k. For almost every α this converges to
/// π²/(12 ln 2) ≈ 1.1865691 (the Lévy constant); it never drops below the
/// Fibonacci floor (1/k)·ln F(k) → ln((1+√5)/2).
pub fn levy_exponent(alpha: &AlphaSpec, k: usize) -> Result<RationalInterval> {
    if k < 1 {
        return Err(Error::InvalidInput("Levy exponent needs depth k >= 1".into()));
    }
    let mut exp = Expansion::new(alpha.clone())?;
    let q_k = exp.convergent(k)?.q.clone();
    let inv_k = BigRational::new(BigInt::one(), BigInt::from(k));
    Ok(ln_biguint(&q_k, LN_P).scale(&inv_k))
}

// ---------------------------------------------------------------------------
// Gauss measure: preimage identity

/// Both sides of μ(T⁻¹[a,b]) = μ([a,b]) with the left side truncated to
/// finitely many preimage branches.
#[derive(Clone, Debug)]
pub struct GaussInvariance {
    /// Σ_{n=1}^{N} μ([1/(n+b), 1/(n+a)]) — the first N branches of T⁻¹[a,b].
    pub lhs: RationalInterval,
    /// μ([a,b]) = (ln(1+b) − ln(1+a)) / ln 2.
    pub rhs: RationalInterval,
    /// |rhs − lhs|; strictly decreasing in N and → 0.
    pub gap: RationalInterval,
}

/// Enclosure of ln(1 + u) for rational 0 ≤ u ≤ 1/2: the alternating series
/// Σ (−1)^(j+1) u^j/j has decreasing terms, so adjacent partial sums
/// bracket the value; stop once a term drops under 2^-(p+2). Much cheaper
/// than the general log for the near-1 ratios of the preimage branches.
fn ln_one_plus(u: &BigRational, p: u32) -> RationalInterval {
    debug_assert!(
        !u.is_negative() && *u <= BigRational::new(BigInt::one(), BigInt::from(2))
    );
    if u.is_zero() {
        return RationalInterval::zero();
    }
    let tol = BigRational::new(BigInt::one(), BigInt::one() << (p + 2));
    let mut sum = BigRational::zero();
    let mut pow = u.clone(); // u^j
    let mut j: u64 = 1;
    loop {
        let term = &pow / BigRational::from_integer(BigInt::from(j));
        let next = if j % 2 == 1 { &sum + &term } else { &sum - &term };
        if term <= tol {
            return if next <= sum {
                RationalInterval::new(next, sum)
            } else {
                RationalInterval::new(sum, next)
            };
        }
        sum = next;
        pow *= u;
        j += 1;
    }
}

/// One pass over the preimage branches, reporting the truncated identity at
/// each checkpoint (strictly increasing branch counts).
pub fn gauss_invariance_profile(
    a: &BigRational,
    b: &BigRational,
    checkpoints: &[u64],
) -> Result<Vec<(u64, GaussInvariance)>> {
    if a.is_negative() || b < a || b > &BigRational::one() {
        return Err(Error::InvalidInput("need 0 <= a <= b <= 1".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("checkpoints must be strictly increasing".into()));
    }
    if a == b {
        // Degenerate interval: every branch measure is 0 exactly.
        let zero = RationalInterval::zero();
        return Ok(checkpoints
            .iter()
            .map(|&n| {
                (n, GaussInvariance { lhs: zero.clone(), rhs: zero.clone(), gap: zero.clone() })
            })
            .collect());
    }

    let one = BigRational::one();
    let ln2_recip = ln2_enclosure(GI_P).recip();
    let rhs_num = &ln_rational(&(&one + b), GI_P) - &ln_rational(&(&one + a), GI_P);
    let rhs = &rhs_num * &ln2_recip;

    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().peekable();
    let mut acc = RationalInterval::zero();
    let emit = |acc: &RationalInterval, out: &mut Vec<(u64, GaussInvariance)>, n: u64| {
        let lhs = acc * &ln2_recip;
        let gap = (&rhs - &lhs).abs();
        out.push((n, GaussInvariance { lhs, rhs: rhs.clone(), gap }));
    };
    while next.peek() == Some(&0) {
        next.next();
        emit(&acc, &mut out, 0);
    }
    let max_n = checkpoints.last().copied().unwrap_or(0);
    for n in 1..=max_n {
        // branch measure: ln of ((n+1+a)(n+b)) / ((n+a)(n+1+b)) = ln(1 + u)
        // with u = (b − a)/((n+a)(n+1+b)), which is at most 1/3 at n = 1
        // and decays like n^-2
        let n_r = rat_u64(n);
        let u = (b - a) / ((&n_r + a) * (&n_r + &one + b));
        acc = (&acc + &ln_one_plus(&u, GI_P)).round_out(GI_P + 8);
        if next.peek() == Some(&n) {
            next.next();
            emit(&acc, &mut out, n);
        }
    }
    Ok(out)
}

/// The truncated preimage identity at a single branch count.
pub fn gauss_invariance_identity(
    a: &BigRational,
    b: &BigRational,
    n_terms: u64,
) -> Result<GaussInvariance> {
    let mut profile = gauss_invariance_profile(a, b, &[n_terms])?;
    Ok(profile.pop().expect("one checkpoint in, one report out").1)
}

// ---------------------------------------------------------------------------
// Khinchin's constant by series

/// Enclosure of −ln(1 − x) = Σ_{j≥1} x^j/j for rational 0 < x ≤ 1/3, with
/// the geometric tail collapsed into the upper endpoint.
fn neg_log1m(x: &BigRational, p: u32) -> RationalInterval {
    debug_assert!(x.is_positive() && x <= &BigRational::new(BigInt::one(), BigInt::from(3)));
    let mut sum = BigRational::zero();
    let mut pow = x.clone(); // x^j for the current j
    let mut j = 1u64;
    loop {
        sum += &pow / BigRational::from_integer(BigInt::from(j));
        pow = &pow * x;
        j += 1;
        if floor_log2(&pow) <= -(p as i64 + 3) {
            break;
        }
    }
    // Σ_{i≥j} x^i/i  <=  (x^j/j) / (1−x)  <=  x^j · 3/(2j)   for x <= 1/3
    let tail = &pow * BigRational::new(BigInt::from(3), BigInt::from(2 * j));
    RationalInterval::new(sum.clone(), sum + tail)
}

/// Enclosure of ln K₀ = (1/ln 2) · Σ_{n≥2} ln n · ln((n+1)²/(n(n+2))),
/// with both tail ends bounded by exact integrals of ln x/(x+1)²
/// (∫_Y^∞ = ln Y/(Y+1) + ln(1+1/Y); the summand is below that integrand
/// scaled by 1 + 1/(N(N+2)) and above it unscaled).
///
/// K₀ is Khinchin's constant: the a.s. limit of the geometric mean of the
/// partial quotients, so ln K₀ is the a.s. Birkhoff limit of
/// [`birkhoff_log_quotient`]. Width at 120\,000 terms is below 10⁻⁹.
pub fn khinchin_log_constant(terms: u64, p: u32) -> Result<RationalInterval> {
    if terms < 3 {
        return Err(Error::InvalidInput("need at least 3 series terms".into()));
    }
    if !(8..=192).contains(&p) {
        return Err(Error::InvalidInput("precision must be in [8, 192] bits".into()));
    }
    let pw = p + 24;
    let inv = |m: u64| BigRational::new(BigInt::one(), BigInt::from(m));
    let inv_sq = |m: u64| BigRational::new(BigInt::one(), BigInt::from(m) * BigInt::from(m));

    let mut ln_n = ln2_enclosure(pw); // ln 2 for n = 2
    let mut acc = RationalInterval::zero();
    for n in 2..=terms {
        // ln((n+1)²/(n(n+2))) = −ln(1 − 1/(n+1)²)
        let s_n = neg_log1m(&inv_sq(n + 1), pw);
        acc = (&acc + &(&ln_n * &s_n)).round_out(pw + 8);
        if n < terms {
            // ln(n+1) = ln n − ln(n/(n+1)) = ln n + (−ln(1 − 1/(n+1)))
            ln_n = (&ln_n + &neg_log1m(&inv(n + 1), pw)).round_out(pw + 8);
        }
    }
    let ln_t = ln_n; // ln(terms)
    let ln_t1 = &ln_t + &neg_log1m(&inv(terms + 1), pw); // ln(terms + 1)

    // tail over n > N: between ∫_{N+1}^∞ and (1 + 1/(N(N+2)))·∫_N^∞
    let integral_from = |y: u64, ln_y: &RationalInterval| -> RationalInterval {
        // ln(1 + 1/y) = −ln(1 − 1/(y+1))
        &ln_y.scale(&inv(y + 1)) + &neg_log1m(&inv(y + 1), pw)
    };
    let t_lo = integral_from(terms + 1, &ln_t1);
    let factor = BigRational::one() + inv(terms) * inv(terms + 2);
    let t_hi = integral_from(terms, &ln_t).scale(&factor);
    let tail = RationalInterval::new(t_lo.into_endpoints().0, t_hi.into_endpoints().1);

    let result = &(&acc + &tail) * &ln2_enclosure(pw).recip();
    Ok(result.round_out(pw))
}

// ---------------------------------------------------------------------------
// Exceedance statistics (quotients vs φ)

/// Upper endpoints of φ(1..=k_depth) — the exceedance thresholds. They
/// depend only on φ, so ensembles compute them once and share them.
fn phi_thresholds(phi: &PhiSpec, k_depth: usize) -> Vec<BigRational> {
    (1..=k_depth as u64).map(|k| phi.eval_index(k, PHI_P).into_endpoints().1).collect()
}

fn exceedance_against(alpha: &AlphaSpec, thresholds: &[BigRational]) -> Result<Vec<usize>> {
    let quots = quotients(alpha, thresholds.len())?.a;
    Ok(quots
        .iter()
        .zip(thresholds)
        .enumerate()
        .filter(|(_, (a, t))| rat_from_biguint(a) > **t)
        .map(|(i, _)| i + 1)
        .collect())
}

/// Indices k ≤ k_depth with a_k > φ(k). The comparison uses the upper
/// endpoint of the φ enclosure, so an index within the (≤ 2⁻⁴⁰-wide)
/// enclosure band counts as not exceeding; the rule is deterministic.
pub fn exceedance_indices(
    alpha: &AlphaSpec,
    phi: &PhiSpec,
    k_depth: usize,
) -> Result<Vec<usize>> {
    phi.validate()?;
    exceedance_against(alpha, &phi_thresholds(phi, k_depth))
}

/// Indices k in [k_lo, k_hi] where a_{k+1} > q_k — the exceptional event
/// that almost surely happens only finitely often.
pub fn a_next_exceeds_qk_indices(
    alpha: &AlphaSpec,
    k_lo: usize,
    k_hi: usize,
) -> Result<Vec<usize>> {
    if k_lo < 1 || k_lo > k_hi {
        return Err(Error::InvalidInput("need 1 <= k_lo <= k_hi".into()));
    }
    let mut exp = Expansion::new(alpha.clone())?;
    exp.require(k_hi + 1)?;
    let mut hits = Vec::new();
    for k in k_lo..=k_hi {
        let q_k = exp.convergent(k)?.q.clone();
        if exp.quotient(k + 1)? > q_k {
            hits.push(k);
        }
    }
    Ok(hits)
}

// ---------------------------------------------------------------------------
// Growth-ratio profiles R(M) = S_M / (M ln M · φ(ln M))

/// R(M) along a grid for one α: values, running maxima, and where the
/// maximum lands. Midpoints of the R enclosures order the running maximum;
/// the enclosures themselves are kept alongside.
///
/// Entries below the caller's declared range (merged-in convergent
/// denominators smaller than the first user grid point) are evaluated and
/// reported, but the max statistics ignore them: the normalizer
/// M ln M · φ(ln M) is meaningless that early — for slowly growing φ it
/// dips below 1 at single-digit M and would dominate every maximum with a
/// transient.
#[derive(Clone, Debug)]
pub struct GrowthProfile {
    /// The evaluated grid: the caller's grid merged with every convergent
    /// denominator in [2, max M] (the spikes of S_M live at M = q_k, so a
    /// running maximum that skipped them would undersample).
    pub grid: Vec<u64>,
    /// Enclosure of R at each grid entry.
    pub r: Vec<RationalInterval>,
    /// Running maximum of the R midpoints from the first user grid point
    /// on; None for the merged-in entries before it.
    pub running_max: Vec<Option<BigRational>>,
    /// Final running maximum.
    pub max_r: BigRational,
    /// Grid entry where the maximum was first attained.
    pub argmax_m: u64,
    /// How many strict increases the running maximum took after its start.
    pub increase_steps: u32,
}

/// Evaluate R(M) = S_M/(M ln M φ(ln M)) over `user_grid` (strictly
/// increasing, entries ≥ 2) extended with all convergent denominators up
/// to max M, all from a single summation pass.
pub fn growth_profile(
    alpha: &AlphaSpec,
    phi: &PhiSpec,
    user_grid: &[u64],
    rel_tol: &BigRational,
) -> Result<GrowthProfile> {
    phi.validate()?;
    if user_grid.is_empty() {
        return Err(Error::InvalidInput("growth profile needs a nonempty M grid".into()));
    }
    if user_grid[0] < 2 {
        return Err(Error::InvalidInput("growth grid entries must be >= 2 (R needs ln M > 0)".into()));
    }
    if user_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("growth grid must be strictly increasing".into()));
    }
    let max_m = *user_grid.last().expect("nonempty grid");

    // merge in the spike witnesses q_k <= max M
    let mut grid = user_grid.to_vec();
    let mut exp = Expansion::new(alpha.clone())?;
    let mut k = 1usize;
    loop {
        let q = &exp.convergent(k)?.q;
        match q.to_u64() {
            Some(qv) if qv <= max_m => {
                if qv >= 2 {
                    grid.push(qv);
                }
            }
            _ => break,
        }
        k += 1;
    }
    grid.sort_unstable();
    grid.dedup();

    let (_, snapshots) = s_m_marked(alpha, max_m, rel_tol, &grid, ExecMode::default())?;

    let stat_floor = user_grid[0];
    let mut r = Vec::with_capacity(snapshots.len());
    let mut running_max: Vec<Option<BigRational>> = Vec::with_capacity(snapshots.len());
    let mut cur: Option<BigRational> = None;
    let mut argmax_m = stat_floor;
    let mut increase_steps = 0u32;
    for (m_i, s_i) in &snapshots {
        let ln_m = ln_biguint(&BigUint::from(*m_i), LN_P);
        let phi_v = phi.eval_interval(&ln_m, LN_P);
        let denom = (&ln_m * &phi_v).scale(&rat_u64(*m_i));
        let r_i = s_i * &denom.recip();
        if *m_i >= stat_floor {
            let mid = r_i.midpoint();
            match &cur {
                Some(c) if *c >= mid => {}
                Some(_) => {
                    increase_steps += 1;
                    argmax_m = *m_i;
                    cur = Some(mid);
                }
                None => {
                    argmax_m = *m_i;
                    cur = Some(mid);
                }
            }
        }
        running_max.push(cur.clone());
        r.push(r_i);
    }
    let max_r = cur.expect("the last user grid point is always in range");
    Ok(GrowthProfile { grid, r, running_max, max_r, argmax_m, increase_steps })
}

// ---------------------------------------------------------------------------
// Experiment records

/// One sample's named series and scalar statistics, every number rendered
/// as an exact decimal string.
#[derive(Clone, Debug, Serialize)]
pub struct SampleRecord {
    pub index: u64,
    pub seed: u64,
    pub series: BTreeMap<String, Vec<String>>,
    pub stats: BTreeMap<String, String>,
}

/// A reproducible experiment: parameters, per-sample seeds and records,
/// and summary statistics. Serializing one is byte-identical across reruns
/// with the same master seed and parameters.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub master_seed: u64,
    pub params: BTreeMap<String, String>,
    pub sample_seeds: Vec<u64>,
    pub samples: Vec<SampleRecord>,
    pub summary: BTreeMap<String, String>,
}

fn dec17(x: &BigRational) -> String {
    dec_approx(x, SIG_DIGITS)
}

fn params_map(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn mean(xs: &[BigRational]) -> BigRational {
    let sum: BigRational = xs.iter().sum();
    sum / BigRational::from_integer(BigInt::from(xs.len()))
}

/// Sample standard deviation (midpoint of a √ enclosure; 0 for n < 2).
fn std_dev(xs: &[BigRational], m: &BigRational) -> BigRational {
    if xs.len() < 2 {
        return BigRational::zero();
    }
    let var: BigRational = xs.iter().map(|x| (x - m) * (x - m)).sum::<BigRational>()
        / BigRational::from_integer(BigInt::from(xs.len() - 1));
    nth_root_enclosure(&var, 2, 64).midpoint()
}

/// Median and quartiles by order statistics (median averages the middle
/// pair; quartiles take the lower/upper order statistic, no interpolation).
fn quartiles(xs: &[BigRational]) -> (BigRational, BigRational, BigRational) {
    let mut sorted = xs.to_vec();
    sorted.sort();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2].clone()
    } else {
        (&sorted[n / 2 - 1] + &sorted[n / 2]) / BigRational::from_integer(BigInt::from(2))
    };
    let q1 = sorted[(n - 1) / 4].clone();
    let q3 = sorted[(3 * (n - 1)).div_ceil(4)].clone();
    (q1, median, q3)
}

fn check_sampling(n_samples: u64, k_depth: usize) -> Result<()> {
    if n_samples < 1 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    if k_depth < 1 {
        return Err(Error::InvalidInput("need depth k >= 1".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Ensemble experiments

/// Per-sample enclosures of the Lévy exponent (1/k)·ln q_k at depth
/// `k_depth`, in sample-index order.
pub fn levy_samples(
    k_depth: usize,
    n_samples: u64,
    master_seed: u64,
    bits: u32,
) -> Result<Vec<RationalInterval>> {
    check_sampling(n_samples, k_depth)?;
    (0..n_samples)
        .map(|i| levy_exponent(&sample_alpha(master_seed, i, bits)?, k_depth))
        .collect()
}

/// Per-sample enclosures of the Birkhoff average (1/k)·Σ ln a_i.
pub fn birkhoff_samples(
    k_depth: usize,
    n_samples: u64,
    master_seed: u64,
    bits: u32,
) -> Result<Vec<RationalInterval>> {
    check_sampling(n_samples, k_depth)?;
    (0..n_samples)
        .map(|i| birkhoff_log_quotient(&sample_alpha(master_seed, i, bits)?, k_depth))
        .collect()
}

fn exponent_experiment(
    name: &str,
    values: Vec<RationalInterval>,
    k_depth: usize,
    master_seed: u64,
    bits: u32,
) -> ExperimentResult {
    let seeds: Vec<u64> = (0..values.len() as u64).map(|i| derive_seed(master_seed, i)).collect();
    let mids: Vec<BigRational> = values.iter().map(|v| v.midpoint()).collect();
    let samples = values
        .iter()
        .zip(&seeds)
        .enumerate()
        .map(|(i, (v, &seed))| SampleRecord {
            index: i as u64,
            seed,
            series: BTreeMap::new(),
            stats: [
                ("value_lo".to_string(), dec17(v.lo())),
                ("value_hi".to_string(), dec17(v.hi())),
                ("value_mid".to_string(), dec17(&v.midpoint())),
            ]
            .into(),
        })
        .collect();
    let m = mean(&mids);
    let sd = std_dev(&mids, &m);
    let (min, max) = (mids.iter().min().unwrap(), mids.iter().max().unwrap());
    ExperimentResult {
        experiment: name.to_string(),
        master_seed,
        params: params_map(&[
            ("k_depth", k_depth.to_string()),
            ("n_samples", values.len().to_string()),
            ("bits", bits.to_string()),
        ]),
        sample_seeds: seeds,
        samples,
        summary: [
            ("mean".to_string(), dec17(&m)),
            ("std_dev".to_string(), dec17(&sd)),
            ("min".to_string(), dec17(min)),
            ("max".to_string(), dec17(max)),
        ]
        .into(),
    }
}

/// Ensemble Lévy-exponent experiment; the summary mean estimates
/// π²/(12 ln 2) ≈ 1.1865691.
pub fn levy_experiment(
    k_depth: usize,
    n_samples: u64,
    master_seed: u64,
    bits: u32,
) -> Result<ExperimentResult> {
    let values = levy_samples(k_depth, n_samples, master_seed, bits)?;
    Ok(exponent_experiment("levy_exponent", values, k_depth, master_seed, bits))
}

/// Ensemble Birkhoff-average experiment; the summary mean estimates ln K₀
/// (compare [`khinchin_log_constant`]).
pub fn birkhoff_experiment(
    k_depth: usize,
    n_samples: u64,
    master_seed: u64,
    bits: u32,
) -> Result<ExperimentResult> {
    let values = birkhoff_samples(k_depth, n_samples, master_seed, bits)?;
    Ok(exponent_experiment("log_quotient_mean", values, k_depth, master_seed, bits))
}

/// One sample's exceedance data: all indices k ≤ K with a_k > φ(k) and the
/// count inside the upper half-window [⌈K/2⌉, K].
#[derive(Clone, Debug)]
pub struct ExceedanceSample {
    pub index: u64,
    pub seed: u64,
    pub indices: Vec<usize>,
    pub window_count: u64,
}

/// Exceedance samples for a_k > φ(k) over the ensemble, in index order.
pub fn khinchin_io_samples(
    phi: &PhiSpec,
    k_depth: usize,
    n_samples: u64,
    master_seed: u64,
    bits: u32,
) -> Result<Vec<ExceedanceSample>> {
    phi.validate()?;
    check_sampling(n_samples, k_depth)?;
    let window_lo = k_depth.div_ceil(2);
    let thresholds = phi_thresholds(phi, k_depth);
    (0..n_samples)
        .map(|i| {
            let alpha = sample_alpha(master_seed, i, bits)?;
            let indices = exceedance_against(&alpha, &thresholds)?;
            let window_count = indices.iter().filter(|&&k| k >= window_lo).count() as u64;
            Ok(ExceedanceSample { index: i, seed: derive_seed(master_seed, i), indices, window_count })
        })
        .collect()
}

/// Exceedance experiment: "a_k > φ(k) infinitely often" proxied at finite
/// depth by exceedance inside [⌈K/2⌉, K]; the summary reports the fraction
/// of samples with at least one such exceedance.
pub fn khinchin_io_experiment(
    phi: &PhiSpec,
    k_depth: usize,
    n_samples: u64,
    master_seed: u64,
    bits: u32,
) -> Result<ExperimentResult> {
    let samples_raw = khinchin_io_samples(phi, k_depth, n_samples, master_seed, bits)?;
    let window_lo = k_depth.div_ceil(2);
    let mut window_hits = 0u64;
    let mut total_sum = 0u64;
    let samples: Vec<SampleRecord> = samples_raw
        .iter()
        .map(|s| {
            if s.window_count > 0 {
                window_hits += 1;
            }
            total_sum += s.indices.len() as u64;
            let listed: Vec<String> =
                s.indices.iter().take(EXCEED_LIST_CAP).map(|k| k.to_string()).collect();
            SampleRecord {
                index: s.index,
                seed: s.seed,
                series: [("exceed_indices".to_string(), listed)].into(),
                stats: [
                    ("exceed_total".to_string(), s.indices.len().to_string()),
                    ("exceed_window".to_string(), s.window_count.to_string()),
                    (
                        "listing_complete".to_string(),
                        (s.indices.len() <= EXCEED_LIST_CAP).to_string(),
                    ),
                ]
                .into(),
            }
        })
        .collect();
    let n = samples_raw.len() as u64;
    let fraction = BigRational::new(BigInt::from(window_hits), BigInt::from(n));
    let mean_total = BigRational::new(BigInt::from(total_sum), BigInt::from(n));
    Ok(ExperimentResult {
        experiment: "quotient_exceedance".to_string(),
        master_seed,
        params: params_map(&[
            ("phi", phi.label()),
            ("k_depth", k_depth.to_string()),
            ("n_samples", n.to_string()),
            ("bits", bits.to_string()),
            ("window_lo", window_lo.to_string()),
            ("window_hi", k_depth.to_string()),
        ]),
        sample_seeds: samples_raw.iter().map(|s| s.seed).collect(),
        samples,
        summary: [
            ("window_exceedance_fraction".to_string(), dec17(&fraction)),
            ("mean_exceed_total".to_string(), dec17(&mean_total)),
        ]
        .into(),
    })
}

/// One sample's growth profile together with its seed.
#[derive(Clone, Debug)]
pub struct GrowthSample {
    pub index: u64,
    pub seed: u64,
    pub profile: GrowthProfile,
}

/// Growth profiles over the ensemble, in index order.
pub fn growth_criterion_samples(
    phi: &PhiSpec,
    user_grid: &[u64],
    n_samples: u64,
    master_seed: u64,
    rel_tol: &BigRational,
    bits: u32,
) -> Result<Vec<GrowthSample>> {
    if n_samples < 1 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    (0..n_samples)
        .map(|i| {
            let alpha = sample_alpha(master_seed, i, bits)?;
            let profile = growth_profile(&alpha, phi, user_grid, rel_tol)?;
            Ok(GrowthSample { index: i, seed: derive_seed(master_seed, i), profile })
        })
        .collect()
}

/// Growth-dichotomy experiment: per sample the running maximum of
/// R(M) = S_M/(M ln M φ(ln M)) over the grid (extended with the spike
/// witnesses q_k); the summary reports ensemble quantiles of max R and the
/// fraction of samples whose running maximum rose at least twice.
pub fn growth_criterion_experiment(
    phi: &PhiSpec,
    user_grid: &[u64],
    n_samples: u64,
    master_seed: u64,
    rel_tol: &BigRational,
    bits: u32,
) -> Result<ExperimentResult> {
    let samples_raw = growth_criterion_samples(phi, user_grid, n_samples, master_seed, rel_tol, bits)?;
    let samples: Vec<SampleRecord> = samples_raw
        .iter()
        .map(|s| {
            let p = &s.profile;
            SampleRecord {
                index: s.index,
                seed: s.seed,
                series: [
                    ("m".to_string(), p.grid.iter().map(|m| m.to_string()).collect()),
                    ("r_lo".to_string(), p.r.iter().map(|r| dec17(r.lo())).collect()),
                    ("r_hi".to_string(), p.r.iter().map(|r| dec17(r.hi())).collect()),
                    (
                        "running_max".to_string(),
                        p.running_max
                            .iter()
                            .map(|o| o.as_ref().map(dec17).unwrap_or_default())
                            .collect(),
                    ),
                ]
                .into(),
                stats: [
                    ("max_r".to_string(), dec17(&p.max_r)),
                    ("argmax_m".to_string(), p.argmax_m.to_string()),
                    ("increase_steps".to_string(), p.increase_steps.to_string()),
                ]
                .into(),
            }
        })
        .collect();
    let maxes: Vec<BigRational> = samples_raw.iter().map(|s| s.profile.max_r.clone()).collect();
    let (q1, median, q3) = quartiles(&maxes);
    let n = BigInt::from(samples_raw.len());
    let rose = |steps: u32| {
        let count =
            samples_raw.iter().filter(|s| s.profile.increase_steps >= steps).count();
        BigRational::new(BigInt::from(count), n.clone())
    };
    let rose_once = rose(1);
    let rose_twice = rose(2);
    Ok(ExperimentResult {
        experiment: "growth_ratio".to_string(),
        master_seed,
        params: params_map(&[
            ("phi", phi.label()),
            ("n_samples", samples_raw.len().to_string()),
            ("bits", bits.to_string()),
            ("rel_tol", crate::render::exact(rel_tol)),
            (
                "user_grid",
                user_grid.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
            ),
        ]),
        sample_seeds: samples_raw.iter().map(|s| s.seed).collect(),
        samples,
        summary: [
            ("max_r_q1".to_string(), dec17(&q1)),
            ("max_r_median".to_string(), dec17(&median)),
            ("max_r_q3".to_string(), dec17(&q3)),
            ("max_r_mean".to_string(), dec17(&mean(&maxes))),
            ("increase_ge1_fraction".to_string(), dec17(&rose_once)),
            ("increase_ge2_fraction".to_string(), dec17(&rose_twice)),
        ]
        .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::to_f64;
    use crate::sums::default_rel_tol;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn phi_families_evaluate_and_parse() {
        let one = PhiSpec::parse("1").unwrap();
        assert_eq!(one, PhiSpec::Const(BigRational::one()));
        assert!(one.eval_index(17, 40).is_point());

        let logsq = PhiSpec::parse("log2k").unwrap();
        let v = logsq.eval_index(1, 40); // ln²2 = 0.48045301391820142...
        assert!((to_f64(&v.midpoint()) - 0.4804530139182014).abs() < 1e-9);

        let pow = PhiSpec::parse("k^2").unwrap();
        assert_eq!(pow.eval_index(3, 40), RationalInterval::point(rat(9, 1)));
        let pow_frac = PhiSpec::parse("k^1/2").unwrap();
        let v = pow_frac.eval_index(4, 40);
        assert!(v.contains(&rat(2, 1)));

        let klog = PhiSpec::parse("k*log2k").unwrap();
        assert_eq!(klog.label(), "k*log2k");
        let v = klog.eval_index(9, 40); // 9·ln²10 ≈ 47.717,  ln 10 = 2.302585...
        assert!((to_f64(&v.midpoint()) - 9.0 * 2.302585092994046f64.powi(2)).abs() < 1e-6);

        assert_eq!(PhiSpec::parse("3/2").unwrap(), PhiSpec::Const(rat(3, 2)));
        assert!(PhiSpec::parse("-1").is_err());
        assert!(PhiSpec::parse("bogus").is_err());
        assert!(PhiSpec::constant(BigRational::zero()).is_err());
        assert!(PhiSpec::power(0, 1).is_err());

        for s in ["1", "logk", "log2k", "k*log2k", "k^2", "k^1/2", "3/2"] {
            assert_eq!(PhiSpec::parse(s).unwrap().label(), s, "label/parse round trip");
        }
    }

    #[test]
    fn seeds_and_samples_are_deterministic_and_distinct() {
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(0, 0), derive_seed(1, 0));
        let a = sample_alpha(42, 0, 4096).unwrap();
        let b = sample_alpha(42, 0, 4096).unwrap();
        assert_eq!(a, b);
        let c = sample_alpha(42, 1, 4096).unwrap();
        assert_ne!(a, c);
        assert!(sample_alpha(42, 0, 32).is_err());
        assert_eq!(bits_for_depth(100), 4096);
        assert_eq!(bits_for_depth(2001), 8192);
    }

    #[test]
    fn gauss_orbit_is_the_quotient_sequence() {
        let golden = AlphaSpec::golden();
        let orbit = gauss_orbit(&golden, 5).unwrap();
        assert_eq!(orbit, vec![BigUint::one(); 5]);

        // 7/16: T(7/16) = 16/7 − 2 = 2/7, T(2/7) = 7/2 − 3 = 1/2, T(1/2) = 0
        let shift = gauss_orbit(
            &AlphaSpec::rational(BigInt::from(7), BigInt::from(16)).unwrap(),
            3,
        )
        .unwrap();
        let iterated =
            gauss_orbit_rational(&BigUint::from(7u32), &BigUint::from(16u32), 3).unwrap();
        let expect: Vec<BigUint> =
            [2u32, 3, 2].iter().map(|&x| BigUint::from(x)).collect();
        assert_eq!(shift, expect);
        assert_eq!(iterated, expect);

        assert!(gauss_orbit(&golden, 0).unwrap().is_empty());
        match gauss_orbit_rational(&BigUint::from(7u32), &BigUint::from(16u32), 4) {
            Err(Error::ExpansionExhausted { available: 3, requested: 4 }) => {}
            other => panic!("expected exhaustion after 3 steps, got {other:?}"),
        }
    }

    #[test]
    fn birkhoff_average_on_fixed_alphas() {
        // golden: all quotients 1, average exactly 0
        let z = birkhoff_log_quotient(&AlphaSpec::golden(), 10).unwrap();
        assert!(z.is_point());
        assert!(z.lo().is_zero());

        // powers of two: (1/k)·Σ (i−1)·ln2 = ln2·(k−1)/2; k=9 gives 4·ln2
        let v = birkhoff_log_quotient(&AlphaSpec::Rule(crate::cf::Rule::Pow2), 9).unwrap();
        let four_ln2 = ln2_enclosure(64).scale(&rat(4, 1));
        assert!(v.intersects(&four_ln2));
        assert!((to_f64(&v.midpoint()) - 4.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn levy_exponent_tracks_fibonacci_growth() {
        // golden: (1/k)·ln q_k → ln((1+√5)/2) = 0.4812118250596034...
        let v = levy_exponent(&AlphaSpec::golden(), 200).unwrap();
        let mid = to_f64(&v.midpoint());
        assert!((mid - 0.4812118250596034).abs() < 5e-3, "got {mid}");
        // the Fibonacci floor: never below 0.45 from depth 50 on
        for k in [50usize, 100, 200] {
            let v = levy_exponent(&AlphaSpec::golden(), k).unwrap();
            assert!(v.lo() > &rat(45, 100), "k={k}");
        }
        // k=1: exactly ln a_1 = ln 1 = 0 for golden
        let v = levy_exponent(&AlphaSpec::golden(), 1).unwrap();
        assert!(v.lo().is_zero() && v.is_point());
    }

    #[test]
    fn preimage_identity_full_interval_and_degenerate() {
        let zero = BigRational::zero();
        let one = BigRational::one();
        // [0,1]: rhs = 1 exactly; gap after N branches is μ([0, 1/(N+1)])
        let g = gauss_invariance_identity(&zero, &one, 100).unwrap();
        assert!(g.rhs.contains(&one));
        assert!(g.rhs.width() < rat(1, 1_000_000_000));
        let expect = (1.0f64 + 1.0 / 101.0).ln() / std::f64::consts::LN_2;
        assert!((to_f64(&g.gap.midpoint()) - expect).abs() < 1e-9);

        // a = b: all zeros
        let g = gauss_invariance_identity(&rat(1, 3), &rat(1, 3), 50).unwrap();
        assert!(g.lhs.is_point() && g.lhs.lo().is_zero());
        assert!(g.gap.lo().is_zero() && g.gap.is_point());

        assert!(gauss_invariance_identity(&rat(1, 2), &rat(1, 3), 10).is_err());
        assert!(gauss_invariance_identity(&rat(-1, 3), &rat(1, 2), 10).is_err());
    }

    #[test]
    fn preimage_identity_gap_shrinks_monotonically() {
        let a = rat(1, 5);
        let b = rat(1, 2);
        let profile =
            gauss_invariance_profile(&a, &b, &[1_000, 2_000, 10_000]).unwrap();
        // closed form of the tail: gap(N) = ln(1 + (b−a)/(N+1+a)) / ln 2
        for (n, g) in &profile {
            let e = (1.0f64 + 0.3 / (*n as f64 + 1.2)).ln() / std::f64::consts::LN_2;
            assert!(
                (to_f64(&g.gap.midpoint()) - e).abs() < 1e-9,
                "gap at N={n} drifted from closed form"
            );
        }
        // strict decrease with rigorous separation
        for w in profile.windows(2) {
            assert!(w[0].1.gap.lo() > w[1].1.gap.hi(), "gap not strictly decreasing");
        }
    }

    #[test]
    fn khinchin_series_matches_frozen_digits_and_tightens() {
        // ln K₀ = 0.98784905668338107896... — frozen reference digits
        let frozen = 0.9878490568338108_f64;
        let coarse = khinchin_log_constant(2_000, 48).unwrap();
        assert!(coarse.width() < rat(1, 100));
        let mid = to_f64(&coarse.midpoint());
        assert!((mid - frozen).abs() < 5e-3, "coarse mid {mid}");

        let finer = khinchin_log_constant(20_000, 64).unwrap();
        assert!(finer.width() < rat(1, 100_000));
        assert!(finer.intersects(&coarse), "enclosures of the same constant must overlap");
        let mid = to_f64(&finer.midpoint());
        assert!((mid - frozen).abs() < 1e-5, "finer mid {mid}");

        assert!(khinchin_log_constant(2, 64).is_err());
        assert!(khinchin_log_constant(100, 300).is_err());
    }

    #[test]
    fn exceedance_on_fixed_alphas() {
        let one = PhiSpec::Const(BigRational::one());
        // golden: a_k = 1 never exceeds 1
        assert!(exceedance_indices(&AlphaSpec::golden(), &one, 100).unwrap().is_empty());
        // powers of two: a_k = 2^(k−1) > 1 exactly from k = 2 on
        let pow2 = AlphaSpec::Rule(crate::cf::Rule::Pow2);
        let hits = exceedance_indices(&pow2, &one, 20).unwrap();
        assert_eq!(hits, (2..=20).collect::<Vec<_>>());
        // φ(k) = k: 2^(k−1) > k exactly for k ≥ 3
        let linear = PhiSpec::power(1, 1).unwrap();
        let hits = exceedance_indices(&pow2, &linear, 20).unwrap();
        assert_eq!(hits, (3..=20).collect::<Vec<_>>());
    }

    #[test]
    fn quotient_vs_denominator_event_on_fixed_alphas() {
        // golden: a_{k+1} = 1 <= q_k always — no exceptional indices
        assert!(a_next_exceeds_qk_indices(&AlphaSpec::golden(), 1, 50).unwrap().is_empty());
        // q_k² rule: a_{k+1} = q_k² > q_k for every k ≥ 2
        let path = AlphaSpec::Rule(crate::cf::Rule::QkSquare);
        let hits = a_next_exceeds_qk_indices(&path, 2, 7).unwrap();
        assert_eq!(hits, (2..=7).collect::<Vec<_>>());
    }

    #[test]
    fn growth_profile_on_golden_is_flat_and_grid_is_merged() {
        let phi = PhiSpec::Const(BigRational::one());
        let p = growth_profile(&AlphaSpec::golden(), &phi, &[100, 1_000], &default_rel_tol())
            .unwrap();
        // grid = Fibonacci denominators in [2, 1000] merged with {100, 1000}
        assert_eq!(
            p.grid,
            vec![2, 3, 5, 8, 13, 21, 34, 55, 89, 100, 144, 233, 377, 610, 987, 1_000]
        );
        assert_eq!(p.grid.len(), p.r.len());
        assert_eq!(p.grid.len(), p.running_max.len());
        // bounded type: R stays within a tame band
        assert!(p.max_r < rat(5, 1));
        for r in &p.r {
            assert!(r.lo() > &rat(1, 2));
        }
        // stats ignore merged-in entries below the user range, then track
        // the cumulative max of the midpoints
        let mut cur: Option<BigRational> = None;
        for ((m_i, r), rm) in p.grid.iter().zip(&p.r).zip(&p.running_max) {
            if *m_i >= 100 {
                let mid = r.midpoint();
                if cur.as_ref().is_none_or(|c| mid > *c) {
                    cur = Some(mid);
                }
            }
            assert_eq!(&cur, rm, "running max at M={m_i}");
        }
        assert_eq!(cur.as_ref(), Some(&p.max_r));
        assert!(p.argmax_m >= 100);

        assert!(growth_profile(&AlphaSpec::golden(), &phi, &[], &default_rel_tol()).is_err());
        assert!(growth_profile(&AlphaSpec::golden(), &phi, &[1, 10], &default_rel_tol()).is_err());
        assert!(
            growth_profile(&AlphaSpec::golden(), &phi, &[10, 10], &default_rel_tol()).is_err()
        );
    }

    #[test]
    fn experiments_reproduce_bit_identically() {
        let a = levy_experiment(40, 3, 11, 4096).unwrap();
        let b = levy_experiment(40, 3, 11, 4096).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.sample_seeds.len(), 3);
        assert_eq!(a.samples.len(), 3);

        let phi = PhiSpec::Const(BigRational::one());
        let c = khinchin_io_experiment(&phi, 60, 4, 5, 4096).unwrap();
        let d = khinchin_io_experiment(&phi, 60, 4, 5, 4096).unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), serde_json::to_string(&d).unwrap());
        // φ = 1 exceeds in the window essentially always
        assert_eq!(c.summary["window_exceedance_fraction"], "1");

        let e = growth_criterion_experiment(&phi, &[50, 200], 2, 13, &default_rel_tol(), 4096)
            .unwrap();
        let f = growth_criterion_experiment(&phi, &[50, 200], 2, 13, &default_rel_tol(), 4096)
            .unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), serde_json::to_string(&f).unwrap());
        assert!(e.summary.contains_key("max_r_median"));
        assert!(e.summary.contains_key("increase_ge2_fraction"));
    }

    #[test]
    fn birkhoff_ensemble_is_near_the_series_value_at_modest_depth() {
        // small smoke version of the full-depth ensemble runs: depth 300,
        // 8 samples should already land within ~10% of ln K₀
        let vals = birkhoff_samples(300, 8, 7, 4096).unwrap();
        let m = to_f64(&mean(&vals.iter().map(|v| v.midpoint()).collect::<Vec<_>>()));
        assert!((m - 0.9878).abs() < 0.1, "ensemble mean {m}");
        let lv = levy_samples(300, 8, 7, 4096).unwrap();
        let m = to_f64(&mean(&lv.iter().map(|v| v.midpoint()).collect::<Vec<_>>()));
        assert!((m - 1.1865691).abs() < 0.12, "levy ensemble mean {m}");
    }
}
