//! Continued-fraction expansions, convergents and α generators.
//!
//! Conventions: α ∈ [0, 1) irrational unless stated otherwise, expansion
//! α = [a_1, a_2, …] with every a_k >= 1, convergents p_0/q_0 = 0/1,
//! p_1/q_1 = 1/a_1, recurrence x_k = a_k x_{k−1} + x_{k−2}. Finite
//! (rational) expansions are canonical: the last quotient is >= 2, which the
//! Euclidean algorithm produces automatically for reduced fractions.

use crate::error::{Error, Result};
use crate::logenc::{ceil_exp_capped, ln2_enclosure};
use crate::surd::QuadraticSurd;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Symbolic description of an α ∈ [0, 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlphaSpec {
    /// A reduced fraction num/den ∈ [0, 1). Finite expansion; most
    /// operations treat it as a stand-in that errors once its depth runs out.
    Rational { num: BigUint, den: BigUint },
    /// A quadratic irrational (p + √d)/q, normalized.
    Surd(QuadraticSurd),
    /// Quotients produced by a deterministic rule (see [`Rule`]).
    Rule(Rule),
    /// A uniform dyadic rational with `bits` random bits from a seeded
    /// ChaCha stream: n/2^bits. Quotients are trusted only up to a validity
    /// horizon — beyond it they are artifacts of the dyadic truncation
    /// rather than of a "generic real", and requests error out.
    RandomDyadic { seed: u64, bits: u32 },
}

/// Deterministic quotient generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// a_k = 2^(k−1): unbounded quotients with geometric-mean growth
    /// 2^((k−1)/2).
    Pow2,
    /// a_1 = 1, a_{k+1} = q_k²: quotients outrun the convergent denominators
    /// themselves. The canonical "badly behaved" α.
    QkSquare,
    /// a_1 = 1, a_{k+1} = ceil(exp(q_k)), erroring once the value would
    /// exceed `cap`.
    ExpQk { cap: BigUint },
    /// An explicit finite table of quotients (custom rules). Requests past
    /// the table error with expansion-exhausted.
    Explicit(Vec<u64>),
}

impl AlphaSpec {
    /// num/den reduced into [0, 1) (value taken mod 1, sign handled).
    pub fn rational(num: BigInt, den: BigInt) -> Result<AlphaSpec> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let num = num.mod_floor(&den);
        let g = num.gcd(&den);
        let num = (num / &g).to_biguint().expect("mod_floor is nonnegative");
        let den = (den / g).to_biguint().expect("positive denominator");
        Ok(AlphaSpec::Rational { num, den })
    }

    pub fn surd(p: i64, d: u64, q: i64) -> Result<AlphaSpec> {
        Ok(AlphaSpec::Surd(QuadraticSurd::new_i64(p, d, q)?))
    }

    pub fn golden() -> AlphaSpec {
        AlphaSpec::Surd(QuadraticSurd::golden())
    }

    pub fn random_dyadic(seed: u64, bits: u32) -> Result<AlphaSpec> {
        if bits < 64 {
            return Err(Error::InvalidInput(format!(
                "random dyadic α needs at least 64 bits, got {bits}"
            )));
        }
        Ok(AlphaSpec::RandomDyadic { seed, bits })
    }

    pub fn is_rational_variant(&self) -> bool {
        matches!(self, AlphaSpec::Rational { .. })
    }
}

/// A prefix of the partial-quotient sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialQuotients {
    pub a: Vec<BigUint>,
    /// True when `a` is the complete (finite) expansion.
    pub complete: bool,
    /// For RandomDyadic: the deepest index guaranteed meaningful.
    pub horizon: Option<usize>,
}

/// Exact convergent p_k/q_k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub k: usize,
    pub p: BigUint,
    pub q: BigUint,
}

/// Finite continued-fraction expansion of a reduced fraction in [0, 1).
pub fn expand_rational(num: &BigUint, den: &BigUint) -> Result<PartialQuotients> {
    if den.is_zero() {
        return Err(Error::InvalidInput("zero denominator".into()));
    }
    let g = num.gcd(den);
    let (n, d) = (num / &g, den / &g);
    if n >= d && !n.is_zero() {
        return Err(Error::InvalidInput(format!("{n}/{d} is not in [0, 1)")));
    }
    let mut a = Vec::new();
    let (mut p, mut q) = (d, n);
    while !q.is_zero() {
        let (quot, rem) = p.div_rem(&q);
        a.push(quot);
        p = q;
        q = rem;
    }
    debug_assert!(a.last().map_or(true, |last| last >= &BigUint::from(2u32)));
    Ok(PartialQuotients { a, complete: true, horizon: None })
}

/// Expansion of a quadratic surd as (preperiod, period).
pub fn expand_quadratic(
    s: &QuadraticSurd,
    max_steps: usize,
) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
    s.periodic_expansion(max_steps)
}

/// First k partial quotients of α.
pub fn quotients(alpha: &AlphaSpec, k: usize) -> Result<PartialQuotients> {
    let mut exp = Expansion::new(alpha.clone())?;
    exp.require(k)?;
    Ok(PartialQuotients {
        a: exp.quots[..k].to_vec(),
        complete: exp.total_len == Some(k),
        horizon: exp.horizon,
    })
}

/// Convergents p_i/q_i for i = 0..=k.
pub fn convergents(alpha: &AlphaSpec, k: usize) -> Result<Vec<Convergent>> {
    let mut exp = Expansion::new(alpha.clone())?;
    exp.convergent(k)?;
    Ok(exp.convs[..=k].to_vec())
}

/// floor(bits · ln 2 / 2.4): the planning heuristic for how many quotients
/// of an n/2^bits dyadic follow the statistics of a generic real.
pub fn trust_horizon_heuristic(bits: u32) -> usize {
    // bits·ln2/2.4 = bits·5·ln2/12, floored; decided from an ln 2 enclosure,
    // refined in the (never yet observed) case the floor is ambiguous.
    let factor = BigRational::new(BigInt::from(bits as u64 * 5), BigInt::from(12));
    let mut p = 64;
    loop {
        let ln2 = ln2_enclosure(p);
        let lo = (ln2.lo() * &factor).floor().to_integer();
        let hi = (ln2.hi() * &factor).floor().to_integer();
        if lo == hi {
            return lo.to_usize().expect("horizon fits usize");
        }
        p *= 2;
        if p > 2048 {
            return lo.to_usize().expect("horizon fits usize");
        }
    }
}

/// The dyadic value n/2^bits drawn from the seeded stream.
pub fn random_dyadic_value(seed: u64, bits: u32) -> (BigUint, u32) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let nbytes = ((bits as usize) + 7) / 8;
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    let excess = (nbytes * 8) as u32 - bits;
    if excess > 0 {
        let keep = 8 - excess;
        let mask = if keep == 0 { 0 } else { (1u16 << keep) as u8 };
        let mask = mask.wrapping_sub(1);
        let last = buf.len() - 1;
        buf[last] &= mask;
    }
    (BigUint::from_bytes_le(&buf), bits)
}

/// Materialized expansion state: quotients and convergents on demand, with
/// uniform exhaustion/horizon errors. This is the working representation
/// used by the enclosure and summation layers.
pub struct Expansion {
    pub alpha: AlphaSpec,
    quots: Vec<BigUint>,
    convs: Vec<Convergent>, // convs[i] = p_i/q_i, starts with 0/1
    /// Some(n) when the expansion is finite with n quotients.
    total_len: Option<usize>,
    /// Some(h): indices beyond h are untrusted (RandomDyadic).
    horizon: Option<usize>,
    /// Resumable surd state (next step produces quotient quots.len()+1).
    surd_state: Option<QuadraticSurd>,
}

impl Expansion {
    pub fn new(alpha: AlphaSpec) -> Result<Self> {
        let mut exp = Expansion {
            alpha: alpha.clone(),
            quots: Vec::new(),
            convs: vec![Convergent { k: 0, p: BigUint::zero(), q: BigUint::one() }],
            total_len: None,
            horizon: None,
            surd_state: None,
        };
        match alpha {
            AlphaSpec::Rational { num, den } => {
                let pq = expand_rational(&num, &den)?;
                exp.total_len = Some(pq.a.len());
                exp.quots = pq.a;
            }
            AlphaSpec::Surd(s) => {
                exp.surd_state = Some(s);
            }
            AlphaSpec::Rule(Rule::Explicit(ref table)) => {
                if table.iter().any(|&a| a == 0) {
                    return Err(Error::InvalidInput("explicit quotient table contains a zero".into()));
                }
                exp.total_len = Some(table.len());
                exp.quots = table.iter().map(|&a| BigUint::from(a)).collect();
            }
            AlphaSpec::Rule(_) => {}
            AlphaSpec::RandomDyadic { seed, bits } => {
                if bits < 64 {
                    return Err(Error::InvalidInput(format!(
                        "random dyadic α needs at least 64 bits, got {bits}"
                    )));
                }
                let (n, _) = random_dyadic_value(seed, bits);
                let den = BigUint::one() << bits;
                let pq = expand_rational(&n, &den)?;
                // hard guard: trust only while q_k² <= 2^bits
                let bound = BigUint::one() << bits;
                let mut guard = pq.a.len();
                let (mut q_prev, mut q_cur) = (BigUint::zero(), BigUint::one());
                for (i, a) in pq.a.iter().enumerate() {
                    let q_next = a * &q_cur + &q_prev;
                    if &q_next * &q_next > bound {
                        guard = i; // quotient i+1 already untrusted
                        break;
                    }
                    q_prev = std::mem::replace(&mut q_cur, q_next);
                }
                let horizon = trust_horizon_heuristic(bits).min(guard).min(pq.a.len());
                exp.total_len = Some(pq.a.len());
                exp.horizon = Some(horizon);
                exp.quots = pq.a;
            }
        }
        Ok(exp)
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    /// Make quotients a_1..a_k available (1-based count).
    pub fn require(&mut self, k: usize) -> Result<()> {
        if let Some(h) = self.horizon {
            if k > h {
                return Err(Error::HorizonExceeded { horizon: h, requested: k });
            }
        }
        if let Some(n) = self.total_len {
            if k > n {
                return Err(Error::ExpansionExhausted { available: n, requested: k });
            }
        }
        while self.quots.len() < k {
            self.extend_one()?;
        }
        Ok(())
    }

    fn extend_one(&mut self) -> Result<()> {
        let next_index = self.quots.len() + 1;
        let a = if let Some(state) = self.surd_state.take() {
            let (a, next) = state.step();
            self.surd_state = Some(next);
            a
        } else if let AlphaSpec::Rule(rule) = &self.alpha {
            let rule = rule.clone();
            // adaptive rules read q_{index-1}, which only needs the
            // quotients already materialized
            self.build_convs_to(next_index - 1);
            self.rule_next(&rule, next_index)?
        } else {
            unreachable!("other variants are fully materialized at construction")
        };
        self.quots.push(a);
        Ok(())
    }

    fn rule_next(&self, rule: &Rule, index: usize) -> Result<BigUint> {
        match rule {
            Rule::Pow2 => Ok(BigUint::one() << (index as u64 - 1)),
            Rule::QkSquare => {
                if index == 1 {
                    Ok(BigUint::one())
                } else {
                    let q = &self.convs[index - 1].q;
                    Ok(q * q)
                }
            }
            Rule::ExpQk { cap } => {
                if index == 1 {
                    Ok(BigUint::one())
                } else {
                    let q = &self.convs[index - 1].q;
                    ceil_exp_capped(q, cap)
                        .ok_or_else(|| Error::CapExceeded { k: index, cap: cap.clone() })
                }
            }
            Rule::Explicit(_) => unreachable!("explicit tables are materialized eagerly"),
        }
    }

    /// Convergent p_k/q_k (building everything up to k as needed).
    pub fn convergent(&mut self, k: usize) -> Result<&Convergent> {
        if k >= 1 {
            self.require(k)?;
        }
        self.build_convs_to(k);
        Ok(&self.convs[k])
    }

    /// Build convergent entries up to index k from already-materialized
    /// quotients (callers guarantee quots has at least k entries).
    fn build_convs_to(&mut self, k: usize) {
        while self.convs.len() <= k {
            let i = self.convs.len(); // next index to build, i >= 1
            let a = self.quots[i - 1].clone();
            let (p_prev2, q_prev2) = if i >= 2 {
                (self.convs[i - 2].p.clone(), self.convs[i - 2].q.clone())
            } else {
                (BigUint::one(), BigUint::zero()) // virtual p_{-1}/q_{-1} = 1/0
            };
            let p = &a * &self.convs[i - 1].p + p_prev2;
            let q = &a * &self.convs[i - 1].q + q_prev2;
            self.convs.push(Convergent { k: i, p, q });
        }
    }

    /// The quotient a_i (1-based), extending as needed.
    pub fn quotient(&mut self, i: usize) -> Result<BigUint> {
        self.require(i)?;
        Ok(self.quots[i - 1].clone())
    }

    /// Number of quotients of a finite expansion, if known.
    pub fn total_len(&self) -> Option<usize> {
        self.total_len
    }

    /// Already materialized quotients (prefix).
    pub fn materialized(&self) -> &[BigUint] {
        &self.quots
    }
}
