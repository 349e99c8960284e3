//! Probabilistic pushdown automata with exact rational acceptance
//! probabilities.
//!
//! A probabilistic machine is an npda whose branching configurations offer
//! only weighted rules; the weights of the rules applicable in one
//! configuration must sum to 1. A machine may carry a saturating counting
//! control that tracks `min(#a, cap + 1)` for a list of symbols and, when a
//! path halts with every count at most `cap`, overrides the verdict with
//! "all counts equal". The control is finite-state and is composed with the
//! machine during simulation instead of being multiplied into its states.
//!
//! File format: a machine block followed by an optional line
//!
//! ```text
//! control saturate 5 a1 a2 a3 a4 a5 a6
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::format::{parse_machine, print_machine};
use crate::machine::{Kind, Machine, MachineSpec, OracleMode, Weight};
use crate::sim::{Cfg, RunBounds};
use crate::symbol::{format_word, parse_token, Symbol, Word};
use crate::{Error, Result};

/// Saturating symbol counters consulted when a path halts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountingControl {
    pub cap: usize,
    pub symbols: Vec<Symbol>,
}

impl CountingControl {
    /// The verdict forced on a consumed prefix, if every count is at most `cap`.
    pub fn forced(&self, prefix: &[Symbol]) -> Option<bool> {
        let counts: Vec<usize> =
            self.symbols.iter().map(|a| prefix.iter().filter(|s| *s == a).count()).collect();
        if counts.iter().any(|&c| c > self.cap) {
            return None;
        }
        Some(counts.windows(2).all(|p| p[0] == p[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PpdaSpec {
    pub machine: MachineSpec,
    pub control: Option<CountingControl>,
}

/// A validated probabilistic machine.
#[derive(Clone, Debug)]
pub struct Ppda {
    machine: Arc<Machine>,
    control: Option<CountingControl>,
}

impl Ppda {
    pub fn new(spec: PpdaSpec) -> Result<Ppda> {
        let m = &spec.machine;
        if m.oracle != OracleMode::None || !m.query.is_empty() {
            return Err(Error::Precondition(format!("`{}`: probabilistic machines take no oracle", m.name)));
        }
        if let Some(c) = &spec.control {
            if c.symbols.is_empty() {
                return Err(Error::Precondition("counting control needs at least one symbol".into()));
            }
            if let Some(s) = c.symbols.iter().find(|s| !m.input.contains(s)) {
                return Err(Error::Precondition(format!("counted symbol `{s}` is not an input symbol")));
            }
        }
        Ok(Ppda { machine: Machine::new(spec.machine)?, control: spec.control })
    }

    pub fn machine(&self) -> &Arc<Machine> {
        &self.machine
    }

    pub fn control(&self) -> Option<&CountingControl> {
        self.control.as_ref()
    }

    pub fn spec(&self) -> PpdaSpec {
        PpdaSpec { machine: self.machine.spec().clone(), control: self.control.clone() }
    }
}

/// Exact acceptance and rejection probabilities of one input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub accept: BigRational,
    pub reject: BigRational,
}

impl Outcome {
    fn halt(accept: bool) -> Outcome {
        let (one, zero) = (BigRational::one(), BigRational::zero());
        if accept {
            Outcome { accept: one, reject: zero }
        } else {
            Outcome { accept: zero, reject: one }
        }
    }

    pub fn total(&self) -> BigRational {
        &self.accept + &self.reject
    }
}

struct Walk<'a> {
    p: &'a Ppda,
    w: &'a [Symbol],
    input: Vec<u16>,
    bounds: RunBounds,
    memo: HashMap<(u32, usize, Vec<u16>), Outcome>,
    open: HashSet<(u32, usize, Vec<u16>)>,
    cands: Vec<u32>,
}

impl Walk<'_> {
    fn leaf(&self, cfg: &Cfg, accept: bool) -> Outcome {
        let consumed = cfg.pos.saturating_sub(1).min(self.w.len());
        let forced = self.p.control.as_ref().and_then(|c| c.forced(&self.w[..consumed]));
        Outcome::halt(forced.unwrap_or(accept))
    }

    fn exceeded(&self) -> Error {
        Error::ResourceExceeded(format!("`{}` on `{}`", self.p.machine.name(), format_word(self.w)))
    }

    fn branches(&mut self, cfg: &Cfg) -> Result<Vec<(u32, BigRational)>> {
        let c = &self.p.machine.compiled;
        self.cands.clear();
        c.applicable(cfg, &self.input, &mut self.cands);
        let rules = &self.p.machine.spec().rules;
        let weights: Vec<Option<&Weight>> = self.cands.iter().map(|&r| rules[r as usize].weight.as_ref()).collect();
        let state = &c.states[cfg.state as usize];
        if weights.iter().all(Option::is_none) {
            return match self.cands.len() {
                0 | 1 => Ok(self.cands.iter().map(|&r| (r, BigRational::one())).collect()),
                n => Err(Error::Precondition(format!("state `{state}` has {n} unweighted choices"))),
            };
        }
        if weights.iter().any(Option::is_none) {
            return Err(Error::Precondition(format!("state `{state}` mixes weighted and unweighted choices")));
        }
        let out: Vec<(u32, BigRational)> =
            self.cands.iter().zip(weights).map(|(&r, w)| (r, w.expect("checked").prob.clone())).collect();
        let sum: BigRational = out.iter().map(|(_, p)| p).sum();
        if !sum.is_one() {
            return Err(Error::Precondition(format!("choices in state `{state}` have total weight {sum}")));
        }
        Ok(out)
    }

    fn visit(&mut self, cfg: Cfg, depth: usize) -> Result<Outcome> {
        let c = &self.p.machine.compiled;
        if let Some(a) = c.halting_kind(cfg.state) {
            return Ok(self.leaf(&cfg, a));
        }
        if depth >= self.bounds.max_steps || cfg.stack.len() > self.bounds.max_stack_height {
            return Err(self.exceeded());
        }
        let key = (cfg.state, cfg.pos, cfg.stack.clone());
        if let Some(o) = self.memo.get(&key) {
            return Ok(o.clone());
        }
        if !self.open.insert(key.clone()) {
            // a λ-cycle: this path never halts
            return Err(self.exceeded());
        }
        let branches = self.branches(&cfg)?;
        let out = if branches.is_empty() {
            self.leaf(&cfg, false)
        } else {
            let mut acc = Outcome { accept: BigRational::zero(), reject: BigRational::zero() };
            for (r, p) in branches {
                let next = self.p.machine.compiled.apply(&cfg, r);
                let o = self.visit(next, depth + 1)?;
                acc.accept += &p * o.accept;
                acc.reject += p * o.reject;
            }
            acc
        };
        self.open.remove(&key);
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

/// Sums the weight products of accepting and of rejecting paths exactly.
/// Blocked paths reject.
pub fn exact_acceptance_probability(p: &Ppda, w: &[Symbol], bounds: RunBounds) -> Result<Outcome> {
    bounds.validate()?;
    let c = &p.machine.compiled;
    let mut walk = Walk {
        p,
        w,
        input: c.encode_input(w)?,
        bounds,
        memo: HashMap::new(),
        open: HashSet::new(),
        cands: Vec::new(),
    };
    walk.visit(c.initial(), 0)
}

pub fn equal6_alphabet() -> Vec<Symbol> {
    ["a1", "a2", "a3", "a4", "a5", "a6", crate::symbol::HASH]
        .iter()
        .map(|t| parse_token(t).expect("valid token"))
        .collect()
}

/// The canonical word `a1^α1 ... a6^α6`.
pub fn counts_word(counts: &[usize; 6]) -> Word {
    counts
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| std::iter::repeat_n(Symbol::lit(&format!("a{}", i + 1)), n))
        .collect()
}

/// The probabilistic recognizer for equal counts of `a1..a6`.
///
/// Counts up to `n` are decided by the counting control. Otherwise the
/// machine draws `(x, y)` uniformly from `[n]²` and keeps the signed value
/// `(α1 - α4) + x(α2 - α5) + y(α3 - α6)` on the stack as a run of `P`
/// (positive units) or `N` (deficit units); a unit of the opposite sign
/// annihilates the top. It accepts iff the stack is empty at the end.
pub fn equal6_machine(n: usize) -> Result<PpdaSpec> {
    if n < 2 {
        return Err(Error::Precondition(format!("equal6 needs N >= 2, got {n}")));
    }
    let mut m = MachineSpec::new(&format!("equal6_n{n}"), Kind::Npda)
        .with_input("a1 a2 a3 a4 a5 a6 <hash>")
        .with_stack("Z P N")
        .with_accept("acc")
        .with_reject("rej");
    m.start = "draw".into();
    let share = BigRational::new(BigInt::one(), BigInt::from(n * n));
    for x in 1..=n {
        for y in 1..=n {
            let base = format!("x{x}y{y}");
            m.t("draw", "-", "-", &base, "-", "-");
            m.rules.last_mut().expect("just added").weight =
                Some(Weight { group: "draw".into(), prob: share.clone() });
            for (sym, k, up) in
                [("a1", 1, true), ("a2", x, true), ("a3", y, true), ("a4", 1, false), ("a5", x, false), ("a6", y, false)]
            {
                let tag = if up { "p" } else { "m" };
                m.t(&base, sym, "-", &format!("{base}{tag}{k}"), "-", "-");
            }
            for tag in ["p", "m"] {
                let (same, other) = if tag == "p" { ("P", "N") } else { ("N", "P") };
                for k in 1..=n {
                    let (from, to) = (format!("{base}{tag}{k}"), if k == 1 { base.clone() } else { format!("{base}{tag}{}", k - 1) });
                    m.t(&from, "-", other, &to, "-", "-");
                    for top in ["Z", same] {
                        m.t(&from, "-", top, &to, &format!("{same} {top}"), "-");
                    }
                }
            }
            m.t(&base, "<hash>", "-", &base, "-", "-");
            m.t(&base, "$", "Z", "acc", "-", "-");
            m.t(&base, "$", "P", "rej", "-", "-");
            m.t(&base, "$", "N", "rej", "-", "-");
        }
    }
    let symbols = equal6_alphabet().into_iter().take(6).collect();
    Ok(PpdaSpec { machine: m, control: Some(CountingControl { cap: n, symbols }) })
}

/// Parses a machine block optionally followed by a `control` line.
pub fn parse_ppda(text: &str) -> Result<PpdaSpec> {
    let mut control = None;
    let mut rest = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.first() != Some(&"control") {
            rest.push_str(line);
            rest.push('\n');
            continue;
        }
        rest.push('\n');
        let bad = |msg: &str| Error::Parse { line: i + 1, msg: msg.into() };
        if control.is_some() {
            return Err(bad("duplicate `control` line"));
        }
        let [_, "saturate", cap, syms @ ..] = toks.as_slice() else {
            return Err(bad("expected `control saturate <cap> <symbol>...`"));
        };
        let cap = cap.parse().map_err(|_| bad("counting cap must be a natural number"))?;
        let symbols = syms
            .iter()
            .map(|t| parse_token(t).map_err(|e| bad(&e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        control = Some(CountingControl { cap, symbols });
    }
    Ok(PpdaSpec { machine: parse_machine(&rest)?, control })
}

pub fn print_ppda(p: &PpdaSpec) -> String {
    let mut s = print_machine(&p.machine);
    if let Some(c) = &p.control {
        let syms: Vec<&str> = c.symbols.iter().map(Symbol::as_str).collect();
        let _ = writeln!(s, "control saturate {} {}", c.cap, syms.join(" "));
    }
    s
}

/// Probabilities of one count vector.
#[derive(Clone, Debug)]
pub struct ScanEntry {
    pub counts: [usize; 6],
    pub member: bool,
    pub outcome: Outcome,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub entries: Vec<ScanEntry>,
    pub max_nonmember: BigRational,
    pub argmax: Option<[usize; 6]>,
    /// every member accepts with probability exactly 1
    pub members_exact: bool,
    /// accept + reject = 1 for every vector
    pub sums_exact: bool,
    /// vectors whose reordered words changed the probability
    pub order_dependent: Vec<[usize; 6]>,
}

impl ScanReport {
    pub fn nonmembers_within(&self, bound: &BigRational) -> bool {
        self.max_nonmember <= *bound
    }
}

impl fmt::Display for ScanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bound = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        writeln!(f, "vectors: {}", self.entries.len())?;
        writeln!(f, "members: {}", self.entries.iter().filter(|e| e.member).count())?;
        writeln!(f, "members accept with probability 1: {}", self.members_exact)?;
        writeln!(f, "accept + reject = 1: {}", self.sums_exact)?;
        match &self.argmax {
            Some(v) => writeln!(f, "max non-member acceptance: {} at {v:?}", self.max_nonmember)?,
            None => writeln!(f, "max non-member acceptance: none scanned")?,
        }
        writeln!(f, "max <= 12/25: {}", self.nonmembers_within(&bound(12, 25)))?;
        writeln!(f, "max <= 1/3: {}", self.nonmembers_within(&bound(1, 3)))?;
        write!(f, "order-dependent vectors: {}", self.order_dependent.len())
    }
}

/// Reorderings of a count vector's word used to test order independence.
fn reorderings(counts: &[usize; 6]) -> Vec<Word> {
    let canonical = counts_word(counts);
    let reversed: Word = canonical.iter().rev().cloned().collect();
    let mut left = *counts;
    let mut round_robin = Vec::new();
    while left.iter().any(|&c| c > 0) {
        for (i, c) in left.iter_mut().enumerate() {
            if *c > 0 {
                *c -= 1;
                round_robin.push(Symbol::lit(&format!("a{}", i + 1)));
                round_robin.push(Symbol::hash());
            }
        }
    }
    vec![reversed, round_robin]
}

/// Evaluates `equal6_machine(n)` on every count vector in `lo..=hi` per symbol.
pub fn error_scan(lo: usize, hi: usize, n: usize) -> Result<ScanReport> {
    if lo > hi {
        return Err(Error::Precondition(format!("empty count range {lo}..={hi}")));
    }
    let p = Ppda::new(equal6_machine(n)?)?;
    let span = hi - lo + 1;
    let vectors: Vec<[usize; 6]> = (0..span.pow(6))
        .map(|mut code| {
            let mut v = [0; 6];
            for slot in v.iter_mut().rev() {
                *slot = lo + code % span;
                code /= span;
            }
            v
        })
        .collect();
    let results: Vec<(ScanEntry, bool)> = vectors
        .into_par_iter()
        .map(|counts| {
            let run = |w: &Word| exact_acceptance_probability(&p, w, RunBounds::for_len(w.len()));
            let outcome = run(&counts_word(&counts))?;
            let mut same = true;
            for w in reorderings(&counts) {
                same &= run(&w)? == outcome;
            }
            let member = counts.iter().all(|&c| c == counts[0]);
            Ok((ScanEntry { counts, member, outcome }, same))
        })
        .collect::<Result<_>>()?;
    let mut report = ScanReport {
        entries: Vec::with_capacity(results.len()),
        max_nonmember: BigRational::zero(),
        argmax: None,
        members_exact: true,
        sums_exact: true,
        order_dependent: Vec::new(),
    };
    for (e, same) in results {
        if !same {
            report.order_dependent.push(e.counts);
        }
        report.sums_exact &= e.outcome.total().is_one();
        if e.member {
            report.members_exact &= e.outcome.accept.is_one();
        } else if report.argmax.is_none() || e.outcome.accept > report.max_nonmember {
            report.max_nonmember = e.outcome.accept.clone();
            report.argmax = Some(e.counts);
        }
        report.entries.push(e);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::word;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn prob(p: &Ppda, w: &Word) -> BigRational {
        let o = exact_acceptance_probability(p, w, RunBounds::for_len(w.len())).unwrap();
        assert!(o.total().is_one(), "{o:?}");
        o.accept
    }

    fn coin() -> Ppda {
        let text = "\
machine coin
kind npda
input 0
stack Z
start q
accept acc
reject rej
trans q <dollar> Z -> acc ; push - ; group flip weight 1/2
trans q <dollar> Z -> rej ; push - ; group flip weight 1/2
end
";
        Ppda::new(parse_ppda(text).unwrap()).unwrap()
    }

    #[test]
    fn fair_coin() {
        assert_eq!(prob(&coin(), &vec![]), q(1, 2));
    }

    #[test]
    fn deterministic_acceptor() {
        let mut m = MachineSpec::new("zeros", Kind::Nfa).with_input("0 1").with_accept("acc");
        m.t("q", "0", "-", "q", "-", "-").t("q", "$", "-", "acc", "-", "-");
        m.start = "q".into();
        let p = Ppda::new(PpdaSpec { machine: m, control: None }).unwrap();
        assert_eq!(prob(&p, &word("000")), q(1, 1));
        assert_eq!(prob(&p, &word("010")), q(0, 1));
    }

    #[test]
    fn unweighted_branching_is_rejected() {
        let mut m = MachineSpec::new("guess", Kind::Nfa).with_input("0").with_accept("acc");
        m.t("q", "$", "-", "acc", "-", "-").t("q", "$", "-", "r", "-", "-");
        m.start = "q".into();
        let p = Ppda::new(PpdaSpec { machine: m, control: None }).unwrap();
        let r = exact_acceptance_probability(&p, &[], RunBounds::for_len(0));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn lambda_cycle_exceeds() {
        let mut m = MachineSpec::new("spin", Kind::Nfa).with_input("0").with_accept("acc");
        m.t("q", "-", "-", "r", "-", "-").t("r", "-", "-", "q", "-", "-");
        m.start = "q".into();
        let p = Ppda::new(PpdaSpec { machine: m, control: None }).unwrap();
        let r = exact_acceptance_probability(&p, &[], RunBounds::for_len(0));
        assert!(matches!(r, Err(Error::ResourceExceeded(_))));
    }

    #[test]
    fn equal6_examples() {
        let p = Ppda::new(equal6_machine(5).unwrap()).unwrap();
        assert_eq!(prob(&p, &counts_word(&[6, 7, 6, 6, 6, 7])), q(5, 25));
        assert_eq!(prob(&p, &counts_word(&[7, 6, 6, 6, 6, 6])), q(0, 1));
        assert_eq!(prob(&p, &counts_word(&[6; 6])), q(1, 1));
        assert_eq!(prob(&p, &word("a1 a2 a3 a4 a5 a6")), q(1, 1));
        assert_eq!(prob(&p, &word("a1 a2 a3 a4 a5")), q(0, 1));
        assert_eq!(prob(&p, &word("<hash> a6 <hash> a1 a5 a2 a4 a3")), q(1, 1));
        assert!(equal6_machine(1).is_err());
    }

    #[test]
    fn equal6_matches_signed_sum_enumeration() {
        let p = Ppda::new(equal6_machine(3).unwrap()).unwrap();
        for counts in [[4, 5, 6, 4, 4, 7], [5, 4, 4, 4, 5, 4], [8, 4, 4, 6, 5, 5]] {
            let l = |x: i64, y: i64| {
                let a: Vec<i64> = counts.iter().map(|&c| c as i64).collect();
                (a[0] - a[3]) + x * (a[1] - a[4]) + y * (a[2] - a[5])
            };
            let zeros = (1..=3).flat_map(|x| (1..=3).map(move |y| (x, y))).filter(|&(x, y)| l(x, y) == 0).count();
            assert_eq!(prob(&p, &counts_word(&counts)), q(zeros as i64, 9), "{counts:?}");
        }
    }

    #[test]
    fn text_round_trip() {
        let spec = equal6_machine(2).unwrap();
        let text = print_ppda(&spec);
        assert!(text.ends_with("control saturate 2 a1 a2 a3 a4 a5 a6\n"));
        assert_eq!(parse_ppda(&text).unwrap(), spec);
        assert!(matches!(parse_ppda("control saturate x a1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn small_scan() {
        let r = error_scan(2, 3, 2).unwrap();
        assert_eq!(r.entries.len(), 64);
        assert!(r.members_exact && r.sums_exact && r.order_dependent.is_empty());
    }
}
