//! Subcommand implementations: flag parsing beyond clap's reach (α specs,
//! rationals, grids), dispatch into the library, and row assembly.

use crate::args::{
    AlphaArgs, BoundsArgs, Cli, Cmd, EnsembleArgs, ExpandArgs, ExperimentCmd, Format,
    GrowthArgs, InvarianceArgs, OutArgs, SumArgs,
};
use crate::output::{experiment_csv, write_out, Table};
use malpha::cf::{AlphaSpec, Expansion, Rule};
use malpha::metric::{self, ExperimentResult};
use malpha::render::{exact, interval_endpoints};
use malpha::{bounds, sums, Error};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use std::fmt;

/// Significant decimal digits for approximate (flagged) columns.
const SIG: u32 = 17;

/// Depth cap for rule-generated α whose denominators grow doubly
/// exponentially — beyond this the table entries themselves are unwieldy.
const SQUARING_RULE_DEPTH_CAP: usize = 64;
/// Depth cap for everything else; keeps an accidental huge `--depth` from
/// producing gigabytes of convergents.
const DEPTH_CAP: usize = 100_000;

pub enum CliError {
    /// Malformed flags or values; exits 2 like clap's own usage errors.
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Lib(e) => match e {
                Error::InvalidInput(_) | Error::Degenerate { .. } => 2,
                Error::ExpansionExhausted { .. }
                | Error::HorizonExceeded { .. }
                | Error::CycleNotFound { .. }
                | Error::CapExceeded { .. } => 3,
                Error::BudgetExceeded(_) => 4,
            },
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Degenerate rational α (m·α exactly an integer or half-integer) makes the
/// sum itself undefined; say so instead of only naming the offending term.
fn sum_undefined(e: Error) -> CliError {
    match e {
        Error::Degenerate { .. } => usage(format!("rational alpha: S_M undefined ({e})")),
        other => other.into(),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.cmd {
        Cmd::Expand(a) => cmd_expand(a),
        Cmd::Sum(a) => cmd_sum(a),
        Cmd::Bounds(a) => cmd_bounds(a),
        Cmd::Experiment(e) => cmd_experiment(e),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MALPHA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| usage(format!("MALPHA_THREADS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(usage("MALPHA_THREADS must be at least 1"));
    }
    // First initialization wins; a pool that is already set (e.g. in tests
    // driving this binary in-process) is fine to keep.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

// ---------------------------------------------------------------- parsing

fn parse_alpha(a: &AlphaArgs) -> Result<AlphaSpec, CliError> {
    if let Some(s) = &a.rational {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| usage(format!("--rational expects NUM/DEN, got {s:?}")))?;
        let num: BigInt = n
            .trim()
            .parse()
            .map_err(|_| usage(format!("--rational: bad numerator {n:?}")))?;
        let den: BigInt = d
            .trim()
            .parse()
            .map_err(|_| usage(format!("--rational: bad denominator {d:?}")))?;
        Ok(AlphaSpec::rational(num, den)?)
    } else if let Some(s) = &a.surd {
        let parts: Vec<&str> = s.split(',').collect();
        let [d, p, q] = parts.as_slice() else {
            return Err(usage(format!("--surd expects D,P,Q for (P+√D)/Q, got {s:?}")));
        };
        let d: u64 =
            d.trim().parse().map_err(|_| usage(format!("--surd: bad discriminant {d:?}")))?;
        let p: i64 = p.trim().parse().map_err(|_| usage(format!("--surd: bad P {p:?}")))?;
        let q: i64 = q.trim().parse().map_err(|_| usage(format!("--surd: bad Q {q:?}")))?;
        Ok(AlphaSpec::surd(p, d, q)?)
    } else if let Some(s) = &a.rule {
        Ok(AlphaSpec::Rule(parse_rule(s)?))
    } else if let Some(s) = &a.random {
        let (seed, bits) = s
            .split_once(',')
            .ok_or_else(|| usage(format!("--random expects SEED,BITS, got {s:?}")))?;
        let seed: u64 =
            seed.trim().parse().map_err(|_| usage(format!("--random: bad seed {seed:?}")))?;
        let bits: u32 =
            bits.trim().parse().map_err(|_| usage(format!("--random: bad bits {bits:?}")))?;
        Ok(AlphaSpec::random_dyadic(seed, bits)?)
    } else {
        unreachable!("clap requires exactly one alpha flag")
    }
}

fn parse_rule(s: &str) -> Result<Rule, CliError> {
    let mut it = s.split(',');
    let name = it.next().unwrap_or("").trim();
    let rest: Vec<&str> = it.collect();
    match name {
        "pow2" | "qksquare" if !rest.is_empty() => {
            Err(usage(format!("rule {name} takes no arguments")))
        }
        "pow2" => Ok(Rule::Pow2),
        "qksquare" => Ok(Rule::QkSquare),
        "expqk" => {
            let [cap] = rest.as_slice() else {
                return Err(usage("rule expqk needs exactly one cap: expqk,CAP"));
            };
            let cap: BigUint =
                cap.trim().parse().map_err(|_| usage(format!("expqk: bad cap {cap:?}")))?;
            if cap.is_zero() {
                return Err(usage("expqk: cap must be at least 1"));
            }
            Ok(Rule::ExpQk { cap })
        }
        "explicit" => {
            if rest.is_empty() {
                return Err(usage("rule explicit needs at least one quotient"));
            }
            let mut qs = Vec::with_capacity(rest.len());
            for t in rest {
                let v: u64 = t
                    .trim()
                    .parse()
                    .map_err(|_| usage(format!("explicit: bad quotient {t:?}")))?;
                if v == 0 {
                    return Err(usage("explicit: quotients must be at least 1"));
                }
                qs.push(v);
            }
            Ok(Rule::Explicit(qs))
        }
        other => Err(usage(format!(
            "unknown rule {other:?} (expected pow2 | qksquare | expqk,CAP | explicit,a1,a2,...)"
        ))),
    }
}

/// A rational from "N/D" or a plain integer string.
fn parse_rational(s: &str, flag: &str) -> Result<BigRational, CliError> {
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let num: BigInt =
            n.trim().parse().map_err(|_| usage(format!("{flag}: bad numerator {n:?}")))?;
        let den: BigInt =
            d.trim().parse().map_err(|_| usage(format!("{flag}: bad denominator {d:?}")))?;
        if den.is_zero() {
            return Err(usage(format!("{flag}: denominator must be nonzero")));
        }
        Ok(BigRational::new(num, den))
    } else {
        let num: BigInt =
            t.parse().map_err(|_| usage(format!("{flag}: expected a rational, got {t:?}")))?;
        Ok(BigRational::from_integer(num))
    }
}

fn parse_csv_u64(s: &str, flag: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim().parse().map_err(|_| usage(format!("{flag}: bad entry {t:?} in list {s:?}")))
        })
        .collect()
}

fn rel_tol_or_default(opt: &Option<String>) -> Result<BigRational, CliError> {
    match opt {
        Some(s) => parse_rational(s, "--rel-tol"),
        None => Ok(sums::default_rel_tol()),
    }
}

/// The M values a sum/bounds command covers: a single --M, an explicit
/// list (sorted, deduplicated), or "q" for every convergent denominator up
/// to --M.
fn resolve_grid(
    alpha: &AlphaSpec,
    grid: Option<&str>,
    m: Option<u64>,
) -> Result<Vec<u64>, CliError> {
    match (grid, m) {
        (None, None) => Err(usage("provide --M or --grid")),
        (None, Some(m)) => {
            if m == 0 {
                return Err(usage("--M must be at least 1"));
            }
            Ok(vec![m])
        }
        (Some(s), m) if s.trim() == "q" => {
            let max =
                m.ok_or_else(|| usage("--grid q needs --M as the largest denominator"))?;
            if max == 0 {
                return Err(usage("--M must be at least 1"));
            }
            convergent_denominators_up_to(alpha, max)
        }
        (Some(list), None) => {
            let mut g = parse_csv_u64(list, "--grid")?;
            if g.is_empty() {
                return Err(usage("--grid must not be empty"));
            }
            if g.contains(&0) {
                return Err(usage("--grid entries must be at least 1"));
            }
            g.sort_unstable();
            g.dedup();
            Ok(g)
        }
        (Some(_), Some(_)) => {
            Err(usage("--grid and --M are mutually exclusive (except --grid q, which reads its maximum from --M)"))
        }
    }
}

fn convergent_denominators_up_to(
    alpha: &AlphaSpec,
    max_m: u64,
) -> Result<Vec<u64>, CliError> {
    let mut exp = Expansion::new(alpha.clone())?;
    let mut out: Vec<u64> = Vec::new();
    for k in 0.. {
        match exp.convergent(k) {
            Ok(c) => match c.q.to_u64() {
                Some(q) if q <= max_m => {
                    if out.last() != Some(&q) {
                        out.push(q);
                    }
                }
                _ => break,
            },
            // A finite expansion or a dyadic validity horizon simply ends
            // the denominator list; enclosing S_M at the listed points will
            // itself fail if those points need deeper convergents.
            Err(Error::ExpansionExhausted { .. }) | Err(Error::HorizonExceeded { .. }) => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

// ----------------------------------------------------------------- output

fn emit_table(t: &Table, out: &OutArgs) -> Result<(), CliError> {
    let s = match out.format.unwrap_or(Format::Csv) {
        Format::Csv => t.to_csv(),
        Format::Json => t.to_json(),
    };
    write_out(&out.out, &s)?;
    Ok(())
}

fn emit_experiment(r: &ExperimentResult, out: &OutArgs) -> Result<(), CliError> {
    let s = match out.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(r).expect("experiment records always serialize");
            s.push('\n');
            s
        }
        Format::Csv => experiment_csv(r),
    };
    write_out(&out.out, &s)?;
    Ok(())
}

fn endpoints(iv: &malpha::RationalInterval) -> (String, String) {
    interval_endpoints(iv, SIG)
}

fn flag(b: bool) -> String {
    if b { "1".into() } else { "0".into() }
}

// ------------------------------------------------------------- subcommands

fn cmd_expand(args: ExpandArgs) -> Result<(), CliError> {
    let alpha = parse_alpha(&args.alpha)?;
    let depth_cap = match &alpha {
        AlphaSpec::Rule(Rule::QkSquare) | AlphaSpec::Rule(Rule::ExpQk { .. }) => {
            SQUARING_RULE_DEPTH_CAP
        }
        _ => DEPTH_CAP,
    };
    let mut exp = Expansion::new(alpha)?;
    let depth = match args.depth {
        Some(k) => {
            if k > depth_cap {
                return Err(usage(format!(
                    "--depth {k} exceeds the cap of {depth_cap} for this alpha"
                )));
            }
            exp.require(k)?;
            k
        }
        None => exp.total_len().ok_or_else(|| {
            usage("--depth is required when the expansion does not terminate")
        })?,
    };
    let mut t = Table::new("expand", &["k", "a", "p", "q"], &[]);
    for k in 0..=depth {
        let a = if k == 0 { String::new() } else { exp.quotient(k)?.to_string() };
        let c = exp.convergent(k)?;
        t.push(vec![k.to_string(), a, c.p.to_string(), c.q.to_string()]);
    }
    emit_table(&t, &args.out)
}

fn cmd_sum(args: SumArgs) -> Result<(), CliError> {
    let alpha = parse_alpha(&args.alpha)?;
    let tol = rel_tol_or_default(&args.rel_tol)?;

    if let Some(n) = args.cesaro {
        if args.m.is_some() || args.grid.is_some() {
            return Err(usage("--cesaro has its own upper limit N; drop --M/--grid"));
        }
        if n == 0 {
            return Err(usage("--cesaro N must be at least 1"));
        }
        let means = sums::cesaro_means(&alpha, n, &tol).map_err(sum_undefined)?;
        let mut t =
            Table::new("cesaro", &["n", "mean_lo", "mean_hi"], &["mean_lo", "mean_hi"]);
        for (i, iv) in means.iter().enumerate() {
            let (lo, hi) = endpoints(iv);
            t.push(vec![(i as u64 + 1).to_string(), lo, hi]);
        }
        return emit_table(&t, &args.out);
    }

    let grid = resolve_grid(&alpha, args.grid.as_deref(), args.m)?;

    if let Some(b) = &args.beta {
        let beta = parse_rational(b, "--beta")?;
        let mut t = Table::new("sum-beta", &["m", "beta", "s_lo", "s_hi"], &["s_lo", "s_hi"]);
        for &m in &grid {
            let iv = sums::s_m_beta(&alpha, m, &beta, &tol).map_err(sum_undefined)?;
            let (lo, hi) = endpoints(&iv);
            t.push(vec![m.to_string(), exact(&beta), lo, hi]);
        }
        return emit_table(&t, &args.out);
    }

    if args.weighted {
        let mut t = Table::new("sum-weighted", &["m", "s_lo", "s_hi"], &["s_lo", "s_hi"]);
        for &m in &grid {
            let iv = sums::s_m_weighted(&alpha, m, &tol).map_err(sum_undefined)?;
            let (lo, hi) = endpoints(&iv);
            t.push(vec![m.to_string(), lo, hi]);
        }
        return emit_table(&t, &args.out);
    }

    let mut t = Table::new(
        "sum",
        &["m", "s_lo", "s_hi", "k", "specials", "q_k", "depth", "special_lo", "special_hi"],
        &["s_lo", "s_hi", "special_lo", "special_hi"],
    );
    for &m in &grid {
        let r = sums::s_m(&alpha, m, &tol).map_err(sum_undefined)?;
        let (s_lo, s_hi) = endpoints(&r.total);
        let (sp_lo, sp_hi) = endpoints(&r.special_total);
        t.push(vec![
            m.to_string(),
            s_lo,
            s_hi,
            r.k_used.to_string(),
            r.special_count.to_string(),
            r.q_k.to_string(),
            r.depth_used.to_string(),
            sp_lo,
            sp_hi,
        ]);
    }
    emit_table(&t, &args.out)
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let alpha = parse_alpha(&args.alpha)?;
    let tol = rel_tol_or_default(&args.rel_tol)?;
    let grid = resolve_grid(&alpha, args.grid.as_deref(), args.m)?;
    let reports = bounds::ratio_scan(&alpha, &grid, &tol).map_err(sum_undefined)?;
    let mut t = Table::new(
        "bounds",
        &[
            "m",
            "k",
            "q_k",
            "a_next",
            "a_next_gt_qk",
            "small_m",
            "s_lo",
            "s_hi",
            "lower_lo",
            "lower_hi",
            "upper_lo",
            "upper_hi",
            "improved_lo",
            "improved_hi",
            "ratio_lower_lo",
            "ratio_lower_hi",
            "ratio_upper_lo",
            "ratio_upper_hi",
            "ratio_mlnm_lo",
            "ratio_mlnm_hi",
        ],
        &[
            "s_lo",
            "s_hi",
            "lower_lo",
            "lower_hi",
            "upper_lo",
            "upper_hi",
            "improved_lo",
            "improved_hi",
            "ratio_lower_lo",
            "ratio_lower_hi",
            "ratio_upper_lo",
            "ratio_upper_hi",
            "ratio_mlnm_lo",
            "ratio_mlnm_hi",
        ],
    );
    for r in &reports {
        let (s_lo, s_hi) = endpoints(&r.s_m);
        let (lower_lo, lower_hi) = endpoints(&r.lower_ref);
        let (upper_lo, upper_hi) = endpoints(&r.upper_ref);
        let (imp_lo, imp_hi) = endpoints(&r.upper_improved_ref);
        let (rl_lo, rl_hi) = endpoints(&r.ratio_lower);
        let (ru_lo, ru_hi) = endpoints(&r.ratio_upper);
        let (rm_lo, rm_hi) = endpoints(&r.ratio_m_ln_m);
        t.push(vec![
            r.m.to_string(),
            r.k.to_string(),
            r.q_k.to_string(),
            r.a_next.to_string(),
            flag(r.a_next_exceeds_q_k),
            flag(r.floored_refs),
            s_lo,
            s_hi,
            lower_lo,
            lower_hi,
            upper_lo,
            upper_hi,
            imp_lo,
            imp_hi,
            rl_lo,
            rl_hi,
            ru_lo,
            ru_hi,
            rm_lo,
            rm_hi,
        ]);
    }
    emit_table(&t, &args.out)
}

fn cmd_experiment(cmd: ExperimentCmd) -> Result<(), CliError> {
    match cmd {
        ExperimentCmd::Levy(e) => {
            let bits = ensemble_bits(&e);
            let r = metric::levy_experiment(e.k, e.n, e.seed, bits)?;
            emit_experiment(&r, &e.out)
        }
        ExperimentCmd::Birkhoff(e) => {
            let bits = ensemble_bits(&e);
            let r = metric::birkhoff_experiment(e.k, e.n, e.seed, bits)?;
            emit_experiment(&r, &e.out)
        }
        ExperimentCmd::Khinchin(a) => {
            let phi = metric::PhiSpec::parse(&a.phi)?;
            let bits = ensemble_bits(&a.ens);
            let r =
                metric::khinchin_io_experiment(&phi, a.ens.k, a.ens.n, a.ens.seed, bits)?;
            emit_experiment(&r, &a.ens.out)
        }
        ExperimentCmd::Growth(g) => cmd_growth(g),
        ExperimentCmd::Invariance(i) => cmd_invariance(i),
        ExperimentCmd::Constant(c) => {
            let iv = metric::khinchin_log_constant(c.terms, c.prec)?;
            let (lo, hi) = endpoints(&iv);
            let mut t = Table::new(
                "constant",
                &["terms", "prec", "ln_k0_lo", "ln_k0_hi"],
                &["ln_k0_lo", "ln_k0_hi"],
            );
            t.push(vec![c.terms.to_string(), c.prec.to_string(), lo, hi]);
            emit_table(&t, &c.out)
        }
    }
}

fn ensemble_bits(e: &EnsembleArgs) -> u32 {
    e.bits.unwrap_or_else(|| metric::bits_for_depth(e.k))
}

fn cmd_growth(g: GrowthArgs) -> Result<(), CliError> {
    let phi = metric::PhiSpec::parse(&g.phi)?;
    let grid = parse_csv_u64(&g.grid, "--grid")?;
    let tol = rel_tol_or_default(&g.rel_tol)?;
    let bits = g.bits.unwrap_or(metric::DEFAULT_SAMPLE_BITS);
    let r = metric::growth_criterion_experiment(&phi, &grid, g.n, g.seed, &tol, bits)?;
    emit_experiment(&r, &g.out)
}

fn cmd_invariance(i: InvarianceArgs) -> Result<(), CliError> {
    let a = parse_rational(&i.a, "--a")?;
    let b = parse_rational(&i.b, "--b")?;
    let checkpoints: Vec<u64> = match (&i.checkpoints, i.terms) {
        (Some(s), None) => parse_csv_u64(s, "--checkpoints")?,
        (None, Some(t)) => vec![t],
        (None, None) => return Err(usage("provide --terms or --checkpoints")),
        (Some(_), Some(_)) => unreachable!("clap rejects --terms with --checkpoints"),
    };
    let rows = metric::gauss_invariance_profile(&a, &b, &checkpoints)?;
    let mut t = Table::new(
        "invariance",
        &["n", "lhs_lo", "lhs_hi", "rhs_lo", "rhs_hi", "gap_lo", "gap_hi"],
        &["lhs_lo", "lhs_hi", "rhs_lo", "rhs_hi", "gap_lo", "gap_hi"],
    );
    for (n, g) in rows {
        let (lhs_lo, lhs_hi) = endpoints(&g.lhs);
        let (rhs_lo, rhs_hi) = endpoints(&g.rhs);
        let (gap_lo, gap_hi) = endpoints(&g.gap);
        t.push(vec![n.to_string(), lhs_lo, lhs_hi, rhs_lo, rhs_hi, gap_lo, gap_hi]);
    }
    emit_table(&t, &i.out)
}
