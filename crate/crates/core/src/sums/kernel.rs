//! Range-summation kernel for Σ 1/‖mα‖ and its variants.
//!
//! The kernel encloses every term from one pair of consecutive convergents
//! p_J/q_J, p_{J+1}/q_{J+1}: writing D = q_J·q_{J+1}, the value mα lies in
//! [m·u, m·u + m]/D where u = min(p_J q_{J+1}, p_{J+1} q_J), so the residue
//! m·u mod D advances by one addition per term. Folding the interval at the
//! nearest integer gives a two-sided bound on ‖mα‖, and the reciprocal is
//! rounded outward onto the fixed dyadic grid of step 2⁻⁶⁴ before
//! accumulation. Dyadic addition is exact, so sums are associative and the
//! parallel and sequential schedules produce bit-identical intervals.
//!
//! Terms whose residue m·p_k mod q_k lies in {0, 1, q_k−1} (k the index with
//! q_k ≤ M < q_{k+1}) can sit arbitrarily close to an integer; they are
//! excluded from the bulk pass and enclosed individually by adaptive
//! deepening. Every remaining term satisfies ‖mα‖ > 1/q_k, which bounds the
//! relative width of its enclosure by (8/7)·m·q_k/D; the depth J is chosen
//! with D ≥ 8·M·q_k/rel_tol so each term (and hence the total) meets the
//! requested relative tolerance with margin for the directed-division and
//! grid-rounding slack.
//!
//! Three lanes share the same chunked driver: a u128 lane (D < 2¹²⁶,
//! M ≤ 2⁴⁸) using directed mantissa division, a BigUint lane for anything
//! larger or for integer powers of the terms, and an exact lane for rational
//! α where every distance is a residue mod the denominator.

use crate::cf::{AlphaSpec, Expansion};
use crate::enclose::refine_norm_dist;
use crate::error::{DegenerateHit, Error, Result};
use crate::interval::{rat_from_biguint, RationalInterval};
use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Fixed dyadic accumulation grid: every term endpoint is rounded outward to
/// a multiple of 2^−ACC_SHIFT before being added.
pub(crate) const ACC_SHIFT: u32 = 64;

/// Terms per work unit; chunk boundaries are also cut at every mark.
const CHUNK: u64 = 1 << 14;

/// Complete blocks beyond this many are coalesced into the final subtotal
/// entry (the per-block list stays bounded for extreme block counts).
pub(crate) const BLOCK_CAP: u64 = 1 << 16;

/// At most this many special terms keep their individual (m, enclosure)
/// listing; the exact count and the exact subtotal are always reported.
pub(crate) const SPECIAL_LIST_CAP: usize = 1 << 14;

const SLOT_TAIL: u64 = u64::MAX;

/// How each summand is derived from the distance d_m = ‖mα‖.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TermKind {
    /// 1/d_m
    Plain,
    /// 1/(m·d_m)
    Weighted,
    /// 1/d_m^b for an integer exponent b ≥ 2
    Pow(u32),
}

/// Scheduling of the bulk pass. `Parallel` uses rayon when the `parallel`
/// feature is enabled and otherwise degrades to the sequential schedule;
/// both produce bit-identical results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

/// 192-bit fixed-width accumulator for dyadic mantissas (value·2⁶⁴ as u128).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct Acc192([u64; 3]);

impl Acc192 {
    fn add_u128(&mut self, v: u128) {
        let (s0, c0) = self.0[0].overflowing_add(v as u64);
        let (s1, c1) = self.0[1].carrying_add_polyfill((v >> 64) as u64, c0);
        self.0[0] = s0;
        self.0[1] = s1;
        self.0[2] += c1 as u64;
    }

    fn merge(&mut self, other: &Acc192) {
        let (s0, c0) = self.0[0].overflowing_add(other.0[0]);
        let (s1, c1) = self.0[1].carrying_add_polyfill(other.0[1], c0);
        self.0[0] = s0;
        self.0[1] = s1;
        self.0[2] = self.0[2] + other.0[2] + c1 as u64;
    }

    fn to_biguint(&self) -> BigUint {
        ((BigUint::from(self.0[2]) << 64 | BigUint::from(self.0[1])) << 64)
            | BigUint::from(self.0[0])
    }
}

trait CarryingAdd {
    fn carrying_add_polyfill(self, rhs: u64, carry: bool) -> (u64, bool);
}

impl CarryingAdd for u64 {
    fn carrying_add_polyfill(self, rhs: u64, carry: bool) -> (u64, bool) {
        let (a, c1) = self.overflowing_add(rhs);
        let (b, c2) = a.overflowing_add(carry as u64);
        (b, c1 || c2)
    }
}

/// One lane = one arithmetic strategy for enclosing bulk terms.
pub(crate) trait Lane: Sync {
    type Res: Clone + Send;
    type Acc: Default + Clone + Send + Sync;

    /// Residue state for the first term of a chunk.
    fn residue_at(&self, m: u64) -> Self::Res;
    /// Advance the residue from m to m+1.
    fn advance(&self, a: &mut Self::Res);
    /// Enclose the term for (residue, m) and add both mantissas.
    fn accumulate(&self, a: &Self::Res, m: u64, lo: &mut Self::Acc, hi: &mut Self::Acc)
        -> Result<()>;
    fn merge(into: &mut Self::Acc, from: &Self::Acc);
    fn value(acc: &Self::Acc) -> BigUint;
}

/// u128 lane: D < 2¹²⁶ and M ≤ 2⁴⁸, plain or weighted terms only.
pub(crate) struct FastLane {
    dq: u128,
    two_dq: u128,
    u: u128,
    u_big: BigUint,
    dq_big: BigUint,
    /// two_dq normalized to 126 bits for directed mantissa division
    n_prime: u128,
    sa: u32,
    /// reject bulk distances below 1/(2q_k)·(guard against misclassification)
    dist_floor: u128,
    weighted: bool,
}

impl FastLane {
    fn new(dq_big: BigUint, u_big: BigUint, qk: u64, weighted: bool) -> Self {
        let dq = dq_big.to_u128().expect("fast lane requires D < 2^126");
        assert!(dq < 1u128 << 126);
        let two_dq = dq << 1;
        let sa = 126u32.saturating_sub(128 - two_dq.leading_zeros());
        let n_prime = two_dq << sa;
        let dist_floor = two_dq / (2 * qk as u128);
        let u = u_big.to_u128().expect("u < D");
        FastLane { dq, two_dq, u, u_big, dq_big, n_prime, sa, dist_floor, weighted }
    }

    /// Largest dyadic v/2⁶⁴ with v·w ≤ n·2⁶⁴ (directed floor of n/w).
    #[inline]
    fn div_floor64(&self, w: u128) -> u128 {
        let bits = 128 - w.leading_zeros();
        let (wu, sw) = if bits <= 63 { (w as u64, 0u32) } else {
            let sw = bits - 63;
            (((w >> sw) as u64) + 1, sw)
        };
        let mant = self.n_prime / wu as u128;
        shift_signed_floor(mant, 64i32 - self.sa as i32 - sw as i32)
    }

    /// Smallest dyadic v/2⁶⁴ with v·w ≥ n·2⁶⁴ (directed ceiling of n/w).
    #[inline]
    fn div_ceil64(&self, w: u128) -> u128 {
        let bits = 128 - w.leading_zeros();
        let (wd, sw) = if bits <= 63 { (w as u64, 0u32) } else {
            let sw = bits - 63;
            ((w >> sw) as u64, sw)
        };
        let mant = self.n_prime.div_ceil(wd as u128);
        shift_signed_ceil(mant, 64i32 - self.sa as i32 - sw as i32)
    }
}

#[inline]
fn shift_signed_floor(mant: u128, t: i32) -> u128 {
    if t >= 0 {
        mant << t
    } else {
        mant >> (-t)
    }
}

#[inline]
fn shift_signed_ceil(mant: u128, t: i32) -> u128 {
    if t >= 0 {
        mant << t
    } else {
        let s = (-t) as u32;
        let mask = (1u128 << s) - 1;
        (mant >> s) + u128::from(mant & mask != 0)
    }
}

impl Lane for FastLane {
    type Res = u128;
    type Acc = Acc192;

    fn residue_at(&self, m: u64) -> u128 {
        ((BigUint::from(m) * &self.u_big) % &self.dq_big).to_u128().expect("residue < D")
    }

    #[inline]
    fn advance(&self, a: &mut u128) {
        *a += self.u;
        if *a >= self.dq {
            *a -= self.dq;
        }
    }

    #[inline]
    fn accumulate(&self, a: &u128, m: u64, lo: &mut Acc192, hi: &mut Acc192) -> Result<()> {
        let x = a << 1;
        let y = x + ((m as u128) << 1);
        if y >= self.two_dq || *a == 0 {
            // a bulk term may never wrap past an integer
            return Err(Error::InvalidInput(format!(
                "internal: residue interval for m={m} reaches an integer; \
                 term misclassified as non-special"
            )));
        }
        let (nlo, nhi) = if y <= self.dq {
            (x, y)
        } else if x >= self.dq {
            (self.two_dq - y, self.two_dq - x)
        } else {
            (x.min(self.two_dq - y), self.dq)
        };
        if nlo < self.dist_floor {
            return Err(Error::InvalidInput(format!(
                "internal: bulk distance for m={m} below 1/(2 q_k)"
            )));
        }
        let (mut l, mut h) = (self.div_floor64(nhi), self.div_ceil64(nlo));
        if self.weighted {
            let m = m as u128;
            l /= m;
            h = h.div_ceil(m);
        }
        lo.add_u128(l);
        hi.add_u128(h);
        Ok(())
    }

    fn merge(into: &mut Acc192, from: &Acc192) {
        into.merge(from);
    }

    fn value(acc: &Acc192) -> BigUint {
        acc.to_biguint()
    }
}

/// BigUint lane: arbitrary D and M, all term kinds; the correctness
/// fallback when the u128 lane's range guards fail.
pub(crate) struct BigLane {
    dq: BigUint,
    two_dq: BigUint,
    u: BigUint,
    /// numerator of the mantissa division, (2D)^b · 2⁶⁴ for exponent b
    num_shift: BigUint,
    pow: u32,
    weighted: bool,
}

impl BigLane {
    fn new(dq: BigUint, u: BigUint, kind: TermKind) -> Self {
        let two_dq = &dq << 1u32;
        let (pow, weighted) = match kind {
            TermKind::Plain => (1, false),
            TermKind::Weighted => (1, true),
            TermKind::Pow(b) => (b, false),
        };
        let num_shift = two_dq.pow(pow) << ACC_SHIFT;
        BigLane { dq, two_dq, u, num_shift, pow, weighted }
    }
}

impl Lane for BigLane {
    type Res = BigUint;
    type Acc = BigUint;

    fn residue_at(&self, m: u64) -> BigUint {
        (BigUint::from(m) * &self.u) % &self.dq
    }

    fn advance(&self, a: &mut BigUint) {
        *a += &self.u;
        if *a >= self.dq {
            *a -= &self.dq;
        }
    }

    fn accumulate(&self, a: &BigUint, m: u64, lo: &mut BigUint, hi: &mut BigUint) -> Result<()> {
        let x = a << 1u32;
        let y = &x + BigUint::from((m as u128) << 1);
        if y >= self.two_dq || a.is_zero() {
            return Err(Error::InvalidInput(format!(
                "internal: residue interval for m={m} reaches an integer; \
                 term misclassified as non-special"
            )));
        }
        let (nlo, nhi) = if y <= self.dq {
            (x, y)
        } else if x >= self.dq {
            (&self.two_dq - &y, &self.two_dq - &x)
        } else {
            ((&self.two_dq - &y).min(x), self.dq.clone())
        };
        let (mut l, mut h) = if self.pow == 1 {
            (&self.num_shift / &nhi, self.num_shift.div_ceil(&nlo))
        } else {
            (&self.num_shift / nhi.pow(self.pow), self.num_shift.div_ceil(&nlo.pow(self.pow)))
        };
        if self.weighted {
            let m = BigUint::from(m);
            h = h.div_ceil(&m);
            l /= m;
        }
        *lo += l;
        *hi += h;
        Ok(())
    }

    fn merge(into: &mut BigUint, from: &BigUint) {
        *into += from;
    }

    fn value(acc: &BigUint) -> BigUint {
        acc.clone()
    }
}

/// Exact lane for rational α = num/den: ‖mα‖ = min(s, den−s)/den with
/// s = m·num mod den, a point value — the only width is the grid rounding.
pub(crate) struct RationalLane {
    num: BigUint,
    den: BigUint,
    /// den^b · 2⁶⁴ (resp. with b = 1) for the mantissa division
    num_shift: BigUint,
    pow: u32,
    weighted: bool,
}

impl RationalLane {
    fn new(num: BigUint, den: BigUint, kind: TermKind) -> Self {
        let (pow, weighted) = match kind {
            TermKind::Plain => (1, false),
            TermKind::Weighted => (1, true),
            TermKind::Pow(b) => (b, false),
        };
        let num_shift = den.pow(pow) << ACC_SHIFT;
        RationalLane { num, den, num_shift, pow, weighted }
    }

    /// Exact distance numerator over den, or the degeneracy it hits.
    fn dist_num(&self, s: &BigUint, m: u64) -> Result<BigUint> {
        if s.is_zero() {
            return Err(Error::Degenerate { m, hit: DegenerateHit::Integer });
        }
        let twice = s << 1u32;
        if twice == self.den {
            return Err(Error::Degenerate { m, hit: DegenerateHit::HalfInteger });
        }
        Ok(if twice < self.den { s.clone() } else { &self.den - s })
    }
}

impl Lane for RationalLane {
    type Res = BigUint;
    type Acc = BigUint;

    fn residue_at(&self, m: u64) -> BigUint {
        (BigUint::from(m) * &self.num) % &self.den
    }

    fn advance(&self, a: &mut BigUint) {
        *a += &self.num;
        if *a >= self.den {
            *a -= &self.den;
        }
    }

    fn accumulate(&self, a: &BigUint, m: u64, lo: &mut BigUint, hi: &mut BigUint) -> Result<()> {
        let dn = self.dist_num(a, m)?;
        let dn = if self.pow == 1 { dn } else { dn.pow(self.pow) };
        let (mut l, mut h) = (&self.num_shift / &dn, self.num_shift.div_ceil(&dn));
        if self.weighted {
            let m = BigUint::from(m);
            h = h.div_ceil(&m);
            l /= m;
        }
        *lo += l;
        *hi += h;
        Ok(())
    }

    fn merge(into: &mut BigUint, from: &BigUint) {
        *into += from;
    }

    fn value(acc: &BigUint) -> BigUint {
        acc.clone()
    }
}

/// Block/special geometry shared by every lane.
pub(crate) struct Plan {
    pub k_used: usize,
    pub qk: u64,
    pub pk: u64,
    pub j_used: usize,
    /// complete blocks: indices 0..full_blocks have all q_k terms ≤ m_end
    pub full_blocks: u64,
    pub m_end: u64,
}

impl Plan {
    /// Slot a block index: complete blocks keep their index up to the cap,
    /// everything past the cap coalesces, the trailing partial block is the
    /// tail sentinel.
    fn slot(&self, m: u64) -> u64 {
        let b = (m - 1) / self.qk;
        if b >= self.full_blocks {
            SLOT_TAIL
        } else {
            b.min(BLOCK_CAP - 1)
        }
    }

    /// Last m that shares the slot of m (so the chunk loop can flush on
    /// boundary crossings without a division per term).
    fn slot_end(&self, m: u64) -> u64 {
        let b = (m - 1) / self.qk;
        if b >= self.full_blocks {
            self.m_end
        } else if b >= BLOCK_CAP - 1 {
            self.full_blocks * self.qk
        } else {
            (b + 1) * self.qk
        }
    }
}

struct ChunkSpec {
    m_start: u64,
    m_end: u64,
}

pub(crate) struct ChunkOut<A> {
    /// (slot, lo, hi) in ascending slot order
    blocks: Vec<(u64, A, A)>,
    specials: Vec<u64>,
}

fn eval_chunk<L: Lane>(lane: &L, plan: &Plan, spec: &ChunkSpec) -> Result<ChunkOut<L::Acc>> {
    let mut out = ChunkOut { blocks: Vec::new(), specials: Vec::new() };
    let qk = plan.qk as u128;
    let pk = plan.pk as u128;
    let special_hi = plan.qk - 1;
    let mut a = lane.residue_at(spec.m_start);
    let mut r = ((spec.m_start as u128 * pk) % qk) as u64;
    let mut slot = plan.slot(spec.m_start);
    let mut slot_end = plan.slot_end(spec.m_start);
    let (mut lo, mut hi) = (L::Acc::default(), L::Acc::default());
    let mut m = spec.m_start;
    loop {
        if r <= 1 || r == special_hi {
            out.specials.push(m);
        } else {
            lane.accumulate(&a, m, &mut lo, &mut hi)?;
        }
        if m == slot_end || m == spec.m_end {
            out.blocks.push((slot, lo, hi));
            lo = L::Acc::default();
            hi = L::Acc::default();
            if m == spec.m_end {
                break;
            }
            slot = plan.slot(m + 1);
            slot_end = plan.slot_end(m + 1);
        }
        m += 1;
        lane.advance(&mut a);
        let stepped = r as u128 + pk;
        r = if stepped >= qk { (stepped - qk) as u64 } else { stepped as u64 };
    }
    Ok(out)
}

/// Cut [m_start, m_end] into chunks of at most CHUNK terms, additionally
/// ending a chunk at every mark so running totals can be snapshotted there.
fn build_chunks(m_start: u64, m_end: u64, marks: &[u64]) -> Vec<ChunkSpec> {
    let mut chunks = Vec::new();
    let mut start = m_start;
    let mut mark_iter = marks.iter().copied().peekable();
    while start <= m_end {
        while mark_iter.peek().is_some_and(|&mk| mk < start) {
            mark_iter.next();
        }
        let natural_end = (start + CHUNK - 1).min(m_end);
        let end = match mark_iter.peek() {
            Some(&mk) if mk <= natural_end => mk,
            _ => natural_end,
        };
        chunks.push(ChunkSpec { m_start: start, m_end: end });
        start = end + 1;
    }
    chunks
}

fn run_chunks<L: Lane>(
    lane: &L,
    plan: &Plan,
    chunks: &[ChunkSpec],
    mode: ExecMode,
) -> Result<Vec<ChunkOut<L::Acc>>> {
    match mode {
        ExecMode::Sequential => chunks.iter().map(|c| eval_chunk(lane, plan, c)).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                chunks.par_iter().map(|c| eval_chunk(lane, plan, c)).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                chunks.iter().map(|c| eval_chunk(lane, plan, c)).collect()
            }
        }
    }
}

/// A special term: its m, the exact enclosure of the summand, and the
/// grid-rounded mantissa pair that enters the dyadic accumulation.
pub(crate) struct SpecialTerm {
    pub m: u64,
    pub term: RationalInterval,
    pub mant_lo: BigUint,
    pub mant_hi: BigUint,
}

/// Everything the merge produces; `sums::mod` shapes this into the public
/// report types.
pub(crate) struct RangeSum {
    pub plan: Plan,
    /// dyadic (lo, hi) mantissa sums per block slot, ascending; complete
    /// blocks only (coalesced past the cap)
    pub block_mants: Vec<(BigUint, BigUint)>,
    pub blocks_coalesced: bool,
    pub tail_mants: Option<(BigUint, BigUint)>,
    pub specials: Vec<SpecialTerm>,
    pub total: RationalInterval,
    /// running totals at each requested mark, same order as the request
    pub marks: Vec<(u64, RationalInterval)>,
}

pub(crate) fn mant_interval(lo: BigUint, hi: BigUint) -> RationalInterval {
    let den = BigUint::one() << ACC_SHIFT;
    RationalInterval::new(
        rat_from_biguint(&lo) / rat_from_biguint(&den),
        rat_from_biguint(&hi) / rat_from_biguint(&den),
    )
}

/// Round an exact positive interval outward onto the accumulation grid,
/// returning the mantissa pair.
fn grid_mants(iv: &RationalInterval) -> (BigUint, BigUint) {
    let lo = (iv.lo().numer().to_biguint().expect("positive") << ACC_SHIFT)
        / iv.lo().denom().to_biguint().expect("positive");
    let hi = (iv.hi().numer().to_biguint().expect("positive") << ACC_SHIFT)
        .div_ceil(&iv.hi().denom().to_biguint().expect("positive"));
    (lo, hi)
}

/// Apply the term kind to an exact distance enclosure.
fn term_from_dist(dist: &RationalInterval, m: u64, kind: TermKind) -> RationalInterval {
    let recip = dist.recip();
    match kind {
        TermKind::Plain => recip,
        TermKind::Weighted => recip.scale(&BigRational::new(1.into(), m.into())),
        TermKind::Pow(b) => recip.pow_uint(b),
    }
}

/// Depth threshold: smallest J with q_J·q_{J+1} ≥ 8·pow·M·q_k/rel_tol, so
/// every bulk term's enclosure has relative width ≤ rel_tol/7 plus rounding
/// slack (‖mα‖ > 1/q_k off the special residues).
fn choose_depth(
    exp: &mut Expansion,
    k_used: usize,
    qk: u64,
    m_end: u64,
    rel_tol: &BigRational,
    kind: TermKind,
) -> Result<(usize, BigUint, BigUint)> {
    let pow = match kind {
        TermKind::Pow(b) => b,
        _ => 1,
    };
    let num = rel_tol.numer().to_biguint().expect("positive tolerance");
    let den = rel_tol.denom().to_biguint().expect("positive tolerance");
    let thr = (BigUint::from(8u32 * pow) * BigUint::from(m_end) * BigUint::from(qk) * den)
        .div_ceil(&num);
    let mut j = k_used.max(1);
    loop {
        let qj = exp.convergent(j)?.q.clone();
        let qj1 = exp.convergent(j + 1)?.q.clone();
        let dq = &qj * &qj1;
        if dq >= thr {
            let pj = exp.convergent(j)?.p.clone();
            let pj1 = exp.convergent(j + 1)?.p.clone();
            let u = (&pj * &qj1).min(&pj1 * &qj);
            return Ok((j, dq, u));
        }
        j += 1;
    }
}

/// Largest k with q_k ≤ m, scanning the expansion until q_{k+1} > m is
/// witnessed (errors if the expansion ends or the trust horizon cuts first).
pub(crate) fn locate_k_in(exp: &mut Expansion, m: u64) -> Result<usize> {
    let m_big = BigUint::from(m);
    let mut k = 0usize;
    while exp.convergent(k + 1)?.q <= m_big {
        k += 1;
    }
    Ok(k)
}

/// Sum the requested term kind over m ∈ [m_start, m_end], enclosing each
/// term and tracking blocks, specials, and running totals at the marks.
/// Marks must be strictly increasing and lie within the range.
pub(crate) fn sum_range(
    alpha: &AlphaSpec,
    m_start: u64,
    m_end: u64,
    rel_tol: &BigRational,
    kind: TermKind,
    marks: &[u64],
    mode: ExecMode,
) -> Result<RangeSum> {
    if m_start < 1 || m_start > m_end {
        return Err(Error::InvalidInput(format!(
            "term range [{m_start}, {m_end}] is empty or starts below 1"
        )));
    }
    let (min_tol, max_tol) = (
        BigRational::new(1.into(), BigUint::from(1u128 << 48).into()),
        BigRational::one(),
    );
    if rel_tol < &min_tol || rel_tol >= &max_tol {
        return Err(Error::InvalidInput(format!(
            "relative tolerance must lie in [2^-48, 1), got {rel_tol}"
        )));
    }
    if marks.windows(2).any(|w| w[0] >= w[1])
        || marks.first().is_some_and(|&f| f < m_start)
        || marks.last().is_some_and(|&l| l > m_end)
    {
        return Err(Error::InvalidInput(
            "marks must be strictly increasing and inside the summation range".into(),
        ));
    }

    if let AlphaSpec::Rational { den, .. } = alpha {
        // m = den lands exactly on an integer, so the sum is undefined past it
        if BigUint::from(m_end) >= *den {
            let hit_m = den.to_u64().expect("den ≤ m_end");
            return Err(Error::Degenerate { m: hit_m, hit: DegenerateHit::Integer });
        }
    }
    let mut exp = Expansion::new(alpha.clone())?;
    let k_used = locate_k_in(&mut exp, m_end)?;
    let qk_big = exp.convergent(k_used)?.q.clone();
    let qk = qk_big.to_u64().expect("q_k ≤ m_end fits u64");
    let pk = exp.convergent(k_used)?.p.to_u64().expect("p_k ≤ q_k");
    let full_blocks = m_end / qk;
    let plan;
    let chunks;
    let outs_specials: Vec<u64>;
    let merged: Merged;

    match alpha {
        AlphaSpec::Rational { num, den } => {
            plan = Plan {
                k_used,
                qk,
                pk,
                j_used: exp.total_len().expect("rational expansions are finite"),
                full_blocks,
                m_end,
            };
            let lane = RationalLane::new(num.clone(), den.clone(), kind);
            chunks = build_chunks(m_start, m_end, marks);
            let outs = run_chunks(&lane, &plan, &chunks, mode)?;
            outs_specials = outs.iter().flat_map(|o| o.specials.iter().copied()).collect();
            let specials = eval_specials_rational(&lane, &outs_specials, kind)?;
            merged = merge_outs::<RationalLane>(&plan, &chunks, outs, specials, marks);
        }
        _ => {
            let (j_used, dq, u) = choose_depth(&mut exp, k_used, qk, m_end, rel_tol, kind)?;
            plan = Plan { k_used, qk, pk, j_used, full_blocks, m_end };
            chunks = build_chunks(m_start, m_end, marks);
            let fast_ok = dq.bits() < 126
                && m_end <= 1 << 48
                && matches!(kind, TermKind::Plain | TermKind::Weighted);
            if fast_ok {
                let lane =
                    FastLane::new(dq, u, qk, matches!(kind, TermKind::Weighted));
                let outs = run_chunks(&lane, &plan, &chunks, mode)?;
                outs_specials = outs.iter().flat_map(|o| o.specials.iter().copied()).collect();
                let specials = eval_specials_refined(&mut exp, &outs_specials, rel_tol, kind)?;
                merged = merge_outs::<FastLane>(&plan, &chunks, outs, specials, marks);
            } else {
                let lane = BigLane::new(dq, u, kind);
                let outs = run_chunks(&lane, &plan, &chunks, mode)?;
                outs_specials = outs.iter().flat_map(|o| o.specials.iter().copied()).collect();
                let specials = eval_specials_refined(&mut exp, &outs_specials, rel_tol, kind)?;
                merged = merge_outs::<BigLane>(&plan, &chunks, outs, specials, marks);
            }
        }
    }

    let Merged { block_mants, tail_mants, specials, marks: mark_ivs } = merged;
    let mut total_lo = BigUint::zero();
    let mut total_hi = BigUint::zero();
    for (l, h) in &block_mants {
        total_lo += l;
        total_hi += h;
    }
    if let Some((l, h)) = &tail_mants {
        total_lo += l;
        total_hi += h;
    }
    for s in &specials {
        total_lo += &s.mant_lo;
        total_hi += &s.mant_hi;
    }
    let total = mant_interval(total_lo, total_hi);
    let blocks_coalesced = full_blocks > BLOCK_CAP;
    Ok(RangeSum { plan, block_mants, blocks_coalesced, tail_mants, specials, total, marks: mark_ivs })
}

struct Merged {
    block_mants: Vec<(BigUint, BigUint)>,
    tail_mants: Option<(BigUint, BigUint)>,
    specials: Vec<SpecialTerm>,
    marks: Vec<(u64, RationalInterval)>,
}

/// Orderly reduction of chunk outputs: dense per-slot mantissa sums plus
/// running-total snapshots at the marks (chunks were cut so every mark is a
/// chunk end). Deterministic regardless of how the chunks were scheduled.
fn merge_outs<L: Lane>(
    plan: &Plan,
    chunks: &[ChunkSpec],
    outs: Vec<ChunkOut<L::Acc>>,
    specials: Vec<SpecialTerm>,
    marks: &[u64],
) -> Merged {
    let n_slots = plan.full_blocks.min(BLOCK_CAP) as usize;
    let mut slots: Vec<(L::Acc, L::Acc)> = vec![Default::default(); n_slots];
    let mut tail: Option<(L::Acc, L::Acc)> =
        (plan.m_end % plan.qk != 0 || plan.full_blocks == 0).then(Default::default);
    // running bulk totals for mark snapshots
    let mut run_lo = BigUint::zero();
    let mut run_hi = BigUint::zero();
    let mut spec_idx = 0usize;
    let mut spec_lo = BigUint::zero();
    let mut spec_hi = BigUint::zero();
    let mut mark_iter = marks.iter().copied().peekable();
    let mut mark_ivs = Vec::with_capacity(marks.len());

    for (spec, out) in chunks.iter().zip(outs) {
        for (slot, lo, hi) in out.blocks {
            run_lo += L::value(&lo);
            run_hi += L::value(&hi);
            if slot == SLOT_TAIL {
                let t = tail.as_mut().expect("tail terms imply a tail slot");
                L::merge(&mut t.0, &lo);
                L::merge(&mut t.1, &hi);
            } else {
                let s = &mut slots[slot as usize];
                L::merge(&mut s.0, &lo);
                L::merge(&mut s.1, &hi);
            }
        }
        if mark_iter.peek() == Some(&spec.m_end) {
            mark_iter.next();
            while specials.get(spec_idx).is_some_and(|s| s.m <= spec.m_end) {
                spec_lo += &specials[spec_idx].mant_lo;
                spec_hi += &specials[spec_idx].mant_hi;
                spec_idx += 1;
            }
            mark_ivs.push((
                spec.m_end,
                mant_interval(&run_lo + &spec_lo, &run_hi + &spec_hi),
            ));
        }
    }
    Merged {
        block_mants: slots
            .into_iter()
            .map(|(l, h)| (L::value(&l), L::value(&h)))
            .collect(),
        tail_mants: tail.map(|(l, h)| (L::value(&l), L::value(&h))),
        specials,
        marks: mark_ivs,
    }
}

/// Enclose each special term by adaptive deepening: target relative width
/// rel_tol/4 so the assembled total stays within rel_tol with margin.
fn eval_specials_refined(
    exp: &mut Expansion,
    ms: &[u64],
    rel_tol: &BigRational,
    kind: TermKind,
) -> Result<Vec<SpecialTerm>> {
    let quarter = rel_tol / BigRational::from_integer(4.into());
    let mut out = Vec::with_capacity(ms.len());
    for &m in ms {
        let (dist, _) = refine_norm_dist(exp, m, &quarter, 1)?;
        let term = term_from_dist(&dist, m, kind);
        let (mant_lo, mant_hi) = grid_mants(&term);
        out.push(SpecialTerm { m, term, mant_lo, mant_hi });
    }
    Ok(out)
}

/// Exact special terms for rational α (point distances; degeneracies error).
fn eval_specials_rational(
    lane: &RationalLane,
    ms: &[u64],
    kind: TermKind,
) -> Result<Vec<SpecialTerm>> {
    let mut out = Vec::with_capacity(ms.len());
    let den = rat_from_biguint(&lane.den);
    for &m in ms {
        let s = lane.residue_at(m);
        let dn = lane.dist_num(&s, m)?;
        let dist = RationalInterval::point(rat_from_biguint(&dn) / &den);
        let term = term_from_dist(&dist, m, kind);
        let (mant_lo, mant_hi) = grid_mants(&term);
        out.push(SpecialTerm { m, term, mant_lo, mant_hi });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acc192_carries() {
        let mut a = Acc192::default();
        a.add_u128(u128::MAX);
        a.add_u128(u128::MAX);
        let want = (BigUint::from(u128::MAX)) * 2u32;
        assert_eq!(a.to_biguint(), want);
        let mut b = Acc192::default();
        for _ in 0..1000 {
            b.add_u128(u128::MAX - 12345);
        }
        assert_eq!(b.to_biguint(), BigUint::from(u128::MAX - 12345) * 1000u32);
        let mut c = Acc192::default();
        c.merge(&a);
        c.merge(&b);
        assert_eq!(c.to_biguint(), a.to_biguint() + b.to_biguint());
    }

    #[test]
    fn chunk_cuts_at_marks() {
        let chunks = build_chunks(1, 100_000, &[5, 16384, 40_000]);
        // every mark must be some chunk's end
        for mk in [5u64, 16384, 40_000] {
            assert!(chunks.iter().any(|c| c.m_end == mk), "mark {mk} not a chunk end");
        }
        // chunks tile the range
        assert_eq!(chunks[0].m_start, 1);
        assert_eq!(chunks.last().unwrap().m_end, 100_000);
        for w in chunks.windows(2) {
            assert_eq!(w[0].m_end + 1, w[1].m_start);
        }
        assert!(chunks.iter().all(|c| c.m_end - c.m_start < CHUNK));
    }

    #[test]
    fn directed_division_brackets_exact_quotients() {
        // FastLane with dq = 40 (golden J=4): check div bounds on a spread
        // of numerator/divisor pairs against exact rational division
        let lane = FastLane::new(BigUint::from(40u32), BigUint::from(24u32), 5, false);
        for w in [1u128, 2, 3, 29, 30, 32, 39, 40, 41, 79, 80] {
            let lo = lane.div_floor64(w);
            let hi = lane.div_ceil64(w);
            // exact value: 80/w scaled by 2^64
            let exact_num = BigUint::from(80u32) << 64u32;
            let wb = BigUint::from(w);
            let floor = (&exact_num / &wb).to_u128().unwrap();
            let ceil = exact_num.div_ceil(&wb).to_u128().unwrap();
            assert!(lo <= floor, "w={w}: lo {lo} > floor {floor}");
            assert!(hi >= ceil, "w={w}: hi {hi} < ceil {ceil}");
            // directed slop stays tiny (≤ 2^-60 relative)
            let slop = (floor - lo).max(hi - ceil) as f64;
            assert!(slop <= (floor as f64) / 2f64.powi(60) + 1.0, "w={w} slop {slop}");
        }
    }

    #[test]
    fn softdiv_small_numerator_negative_shift() {
        // dq small enough that the mantissa shift goes negative
        let lane = FastLane::new(BigUint::from(40u32), BigUint::from(24u32), 5, false);
        assert!(lane.sa > 64);
        let lo = lane.div_floor64(32);
        let hi = lane.div_ceil64(32);
        // 80/32 = 2.5 exactly representable on the grid
        assert_eq!(lo, 5u128 << 63);
        assert_eq!(hi, 5u128 << 63);
        let _ = (lo, hi);
    }
}
