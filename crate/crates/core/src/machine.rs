//! Machine descriptions for dfa, nfa and npda models with optional
//! write-only query tapes and an oracle mode.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::symbol::{parse_token, Symbol, CENT, DOLLAR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Dfa,
    Nfa,
    Npda,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Dfa => "dfa",
            Kind::Nfa => "nfa",
            Kind::Npda => "npda",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleMode {
    None,
    ManyOne,
    Turing,
    Ktt(usize),
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleMode::None => f.write_str("none"),
            OracleMode::ManyOne => f.write_str("many-one"),
            OracleMode::Turing => f.write_str("turing"),
            OracleMode::Ktt(k) => write!(f, "ktt {k}"),
        }
    }
}

/// What a rule consumes from the input tape.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Read {
    Sym(Symbol),
    Cent,
    Dollar,
    Lambda,
}

impl Read {
    pub fn parse(token: &str) -> crate::Result<Read> {
        Ok(match token {
            "-" => Read::Lambda,
            CENT => Read::Cent,
            DOLLAR => Read::Dollar,
            t => Read::Sym(parse_token(t)?),
        })
    }

    pub fn is_lambda(&self) -> bool {
        matches!(self, Read::Lambda)
    }
}

impl fmt::Display for Read {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Read::Sym(s) => write!(f, "{s}"),
            Read::Cent => f.write_str(CENT),
            Read::Dollar => f.write_str(DOLLAR),
            Read::Lambda => f.write_str("-"),
        }
    }
}

/// Probabilistic branch annotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weight {
    pub group: String,
    pub prob: BigRational,
}

/// One transition. `top == None` leaves the stack unpopped and pushes on top
/// of it; otherwise the top is popped and `push` replaces it with `push[0]`
/// ending up as the new top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub from: String,
    pub read: Read,
    pub top: Option<Symbol>,
    pub to: String,
    pub push: Vec<Symbol>,
    pub emit: Vec<Option<Symbol>>,
    pub weight: Option<Weight>,
}

impl Rule {
    pub fn emits(&self) -> bool {
        self.emit.iter().any(Option::is_some)
    }

    pub fn touches_stack(&self) -> bool {
        self.top.is_some() || !self.push.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TuringStates {
    pub query: String,
    pub yes: String,
    pub no: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineSpec {
    pub name: String,
    pub kind: Kind,
    pub oracle: OracleMode,
    pub input: Vec<Symbol>,
    /// `stack[0]` is the bottom marker.
    pub stack: Vec<Symbol>,
    pub query: Vec<Vec<Symbol>>,
    pub start: String,
    pub accept: BTreeSet<String>,
    pub reject: BTreeSet<String>,
    pub turing: Option<TuringStates>,
    pub rules: Vec<Rule>,
}

/// A single invariant breach found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule, self.detail)
    }
}

fn tokens(s: &str) -> Vec<Symbol> {
    if s.trim() == "-" {
        return Vec::new();
    }
    s.split_whitespace()
        .map(|t| parse_token(t).unwrap_or_else(|e| panic!("{e}")))
        .collect()
}

impl MachineSpec {
    pub fn new(name: &str, kind: Kind) -> Self {
        MachineSpec {
            name: name.to_owned(),
            kind,
            oracle: OracleMode::None,
            input: Vec::new(),
            stack: Vec::new(),
            query: Vec::new(),
            start: "q0".to_owned(),
            accept: BTreeSet::new(),
            reject: BTreeSet::new(),
            turing: None,
            rules: Vec::new(),
        }
    }

    pub fn with_input(mut self, syms: &str) -> Self {
        self.input = tokens(syms);
        self
    }

    pub fn with_stack(mut self, syms: &str) -> Self {
        self.stack = tokens(syms);
        self
    }

    pub fn with_query(mut self, syms: &str) -> Self {
        self.query.push(tokens(syms));
        self
    }

    pub fn with_oracle(mut self, mode: OracleMode) -> Self {
        self.oracle = mode;
        self
    }

    pub fn with_start(mut self, q: &str) -> Self {
        self.start = q.to_owned();
        self
    }

    pub fn with_accept(mut self, qs: &str) -> Self {
        self.accept.extend(qs.split_whitespace().map(str::to_owned));
        self
    }

    pub fn with_reject(mut self, qs: &str) -> Self {
        self.reject.extend(qs.split_whitespace().map(str::to_owned));
        self
    }

    pub fn with_turing(mut self, query: &str, yes: &str, no: &str) -> Self {
        self.oracle = OracleMode::Turing;
        self.turing = Some(TuringStates {
            query: query.to_owned(),
            yes: yes.to_owned(),
            no: no.to_owned(),
        });
        self
    }

    /// Adds a rule written in the file syntax: `read`/`top` use `-` for λ /
    /// no stack access, `push` and `emit` are space-separated token lists
    /// with `-` for none (one emit token per query tape). `$` and `¢` stand
    /// for the endmarkers.
    pub fn t(&mut self, from: &str, read: &str, top: &str, to: &str, push: &str, emit: &str) -> &mut Self {
        let read = match read {
            "$" => Read::Dollar,
            "¢" => Read::Cent,
            _ => Read::parse(read).unwrap_or_else(|e| panic!("{e}")),
        };
        let top = (top != "-").then(|| parse_token(top).unwrap_or_else(|e| panic!("{e}")));
        let emit = if self.query.is_empty() {
            Vec::new()
        } else {
            emit.split_whitespace()
                .map(|t| (t != "-").then(|| parse_token(t).unwrap_or_else(|e| panic!("{e}"))))
                .collect()
        };
        self.rules.push(Rule {
            from: from.to_owned(),
            read,
            top,
            to: to.to_owned(),
            push: tokens(push),
            emit,
            weight: None,
        });
        self
    }

    /// All states, in order of first mention.
    pub fn states(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut add = |q: &String| {
            if seen.insert(q.clone()) {
                out.push(q.clone());
            }
        };
        add(&self.start);
        for q in self.accept.iter().chain(&self.reject) {
            add(q);
        }
        if let Some(t) = &self.turing {
            add(&t.query);
            add(&t.yes);
            add(&t.no);
        }
        for r in &self.rules {
            add(&r.from);
            add(&r.to);
        }
        out
    }

    pub fn is_halting(&self, q: &str) -> bool {
        self.accept.contains(q) || self.reject.contains(q)
    }

    pub fn bottom(&self) -> Option<&Symbol> {
        self.stack.first()
    }

    pub fn tape_count(&self) -> usize {
        self.query.len()
    }

    /// True when some rule reads the left endmarker. Machines without such
    /// rules start with the head already past `¢`.
    pub fn reads_cent(&self) -> bool {
        self.rules.iter().any(|r| r.read == Read::Cent)
    }

    /// Fresh state name derived from `base` that does not collide with `taken`.
    pub fn fresh_state(taken: &HashSet<String>, base: &str) -> String {
        if !taken.contains(base) {
            return base.to_owned();
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|c| !taken.contains(c))
            .unwrap()
    }
}

/// Checks every structural invariant of a machine description.
pub fn validate(spec: &MachineSpec) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut push = |rule: &'static str, detail: String| v.push(Violation { rule, detail });

    for q in spec.accept.intersection(&spec.reject) {
        push("halting-overlap", format!("state `{q}` is both accepting and rejecting"));
    }

    let alphabets: [(&str, &[Symbol]); 2] = [("input", &spec.input), ("stack", &spec.stack)];
    for (what, alpha) in alphabets.iter().copied().chain(spec.query.iter().map(|q| ("query", q.as_slice()))) {
        let mut seen = HashSet::new();
        for s in alpha {
            if !seen.insert(s) {
                push("duplicate-symbol", format!("{what} alphabet lists `{s}` twice"));
            }
        }
    }
    if spec.input.is_empty() {
        push("empty-alphabet", "input alphabet is empty".into());
    }
    for s in &spec.stack {
        if s.is_natural() || s.as_str() == crate::symbol::HASH {
            push("reserved-symbol", format!("stack alphabet may not contain `{s}`"));
        }
    }

    match spec.kind {
        Kind::Npda => {
            if spec.stack.is_empty() {
                push("stack-alphabet", "npda needs a stack alphabet with a bottom marker".into());
            }
        }
        Kind::Dfa | Kind::Nfa => {
            if !spec.stack.is_empty() {
                push("stack-alphabet", format!("{} may not declare a stack alphabet", spec.kind));
            }
        }
    }

    let expected_tapes = match spec.oracle {
        OracleMode::None => None,
        OracleMode::ManyOne | OracleMode::Turing => Some(1),
        OracleMode::Ktt(k) => Some(k),
    };
    if let Some(k) = expected_tapes {
        if spec.query.len() != k {
            push(
                "tape-count",
                format!("oracle mode {} needs {k} query tape(s), found {}", spec.oracle, spec.query.len()),
            );
        }
    }

    match (&spec.oracle, &spec.turing) {
        (OracleMode::Turing, Some(t)) => {
            if t.query == t.yes || t.query == t.no || t.yes == t.no {
                push("turing-states", "query, yes and no states must be distinct".into());
            }
            for q in [&t.query, &t.yes, &t.no] {
                if spec.is_halting(q) {
                    push("turing-states", format!("`{q}` cannot be a halting state"));
                }
            }
            if spec.rules.iter().any(|r| r.from == t.query) {
                push("query-outgoing", format!("query state `{}` has ordinary transitions", t.query));
            }
        }
        (OracleMode::Turing, None) => push("turing-states", "turing mode needs query/yes/no states".into()),
        (_, Some(_)) => push("turing-states", "query/yes/no states are only allowed in turing mode".into()),
        _ => {}
    }

    let bottom = spec.bottom();
    for (i, r) in spec.rules.iter().enumerate() {
        let at = format!("rule {} ({} {} ...)", i + 1, r.from, r.read);
        if spec.is_halting(&r.from) {
            push("halting-outgoing", format!("{at}: leaves halting state `{}`", r.from));
        }
        if let Read::Sym(s) = &r.read {
            if !spec.input.contains(s) {
                push("unknown-symbol", format!("{at}: reads `{s}` outside the input alphabet"));
            }
        }
        if r.emit.len() != spec.query.len() {
            push(
                "emit-arity",
                format!("{at}: emits on {} tape(s), machine has {}", r.emit.len(), spec.query.len()),
            );
        }
        for (k, e) in r.emit.iter().enumerate() {
            if let (Some(e), Some(alpha)) = (e, spec.query.get(k)) {
                if !alpha.contains(e) {
                    push("unknown-symbol", format!("{at}: emits `{e}` outside query alphabet {}", k + 1));
                }
            }
        }
        match spec.kind {
            Kind::Dfa | Kind::Nfa => {
                if r.touches_stack() {
                    push("stack-rule", format!("{at}: {} rules cannot use a stack", spec.kind));
                }
            }
            Kind::Npda => {
                for s in r.top.iter().chain(&r.push) {
                    if !spec.stack.contains(s) {
                        push("unknown-symbol", format!("{at}: stack symbol `{s}` not in the stack alphabet"));
                    }
                }
                if let Some(z) = bottom {
                    let bad = r.push.iter().enumerate().any(|(j, s)| {
                        s == z && !(r.top.as_ref() == Some(z) && j + 1 == r.push.len())
                    });
                    if bad {
                        push("bottom-marker", format!("{at}: pushes the bottom marker `{z}` above the bottom"));
                    }
                }
            }
        }
        if spec.kind == Kind::Dfa && r.read.is_lambda() {
            push("dfa-lambda", format!("{at}: dfa rules cannot be λ-moves"));
        }
        if let Some(w) = &r.weight {
            if w.prob <= BigRational::zero() || w.prob > BigRational::one() {
                push("weight", format!("{at}: weight {} outside (0, 1]", w.prob));
            }
        }
    }

    if spec.kind == Kind::Dfa {
        let mut succ: BTreeMap<(&str, String), usize> = BTreeMap::new();
        for r in &spec.rules {
            *succ.entry((r.from.as_str(), r.read.to_string())).or_default() += 1;
        }
        for ((q, a), n) in succ {
            if n > 1 {
                push("determinism", format!("state `{q}` has {n} successors on `{a}`"));
            }
        }
    }

    let mut groups: BTreeMap<&str, BigRational> = BTreeMap::new();
    for r in &spec.rules {
        if let Some(w) = &r.weight {
            *groups.entry(&w.group).or_insert_with(BigRational::zero) += &w.prob;
        }
    }
    for (g, sum) in groups {
        if !sum.is_one() {
            push("weight", format!("group `{g}` sums to {sum}, not 1"));
        }
    }
    v
}

/// Totality check for dfa oracles and truth tables: one successor for every
/// non-halting state on every input symbol and on `$`.
pub fn total_dfa_violations(spec: &MachineSpec) -> Vec<Violation> {
    let mut v = validate(spec);
    if spec.kind != Kind::Dfa {
        v.push(Violation { rule: "kind", detail: "expected a dfa".into() });
        return v;
    }
    if !spec.query.is_empty() {
        v.push(Violation { rule: "tape-count", detail: "a dfa oracle has no query tapes".into() });
    }
    for q in spec.states() {
        if spec.is_halting(&q) {
            continue;
        }
        let reads: Vec<Read> = spec
            .input
            .iter()
            .cloned()
            .map(Read::Sym)
            .chain([Read::Dollar])
            .collect();
        for a in reads {
            if !spec.rules.iter().any(|r| r.from == q && r.read == a) {
                v.push(Violation { rule: "totality", detail: format!("state `{q}` has no move on `{a}`") });
            }
        }
    }
    v
}

/// Determinism for pushdown machines: no λ-moves and, for every state and
/// read symbol, either one stack-blind rule or rules with pairwise distinct
/// tops.
pub fn deterministic_violations(spec: &MachineSpec) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut by_key: BTreeMap<(&str, String), Vec<&Rule>> = BTreeMap::new();
    for r in &spec.rules {
        if r.read.is_lambda() {
            v.push(Violation { rule: "determinism", detail: format!("λ-move from `{}`", r.from) });
        }
        by_key.entry((&r.from, r.read.to_string())).or_default().push(r);
    }
    for ((q, a), rules) in by_key {
        let blind = rules.iter().filter(|r| r.top.is_none()).count();
        let mut tops = HashSet::new();
        let clash = rules.iter().filter_map(|r| r.top.as_ref()).any(|t| !tops.insert(t));
        if (blind > 0 && rules.len() > 1) || clash {
            v.push(Violation { rule: "determinism", detail: format!("state `{q}` branches on `{a}`") });
        }
    }
    v
}

/// Swaps accepting and rejecting states.
pub fn flip_halting(spec: &MachineSpec) -> MachineSpec {
    let mut out = spec.clone();
    std::mem::swap(&mut out.accept, &mut out.reject);
    out
}

/// A validated machine together with its compiled transition tables.
#[derive(Debug)]
pub struct Machine {
    spec: MachineSpec,
    pub(crate) compiled: crate::sim::Compiled,
}

impl Machine {
    pub fn new(spec: MachineSpec) -> crate::Result<Arc<Machine>> {
        let violations = validate(&spec);
        if !violations.is_empty() {
            return Err(crate::Error::Invalid { name: spec.name.clone(), violations });
        }
        let compiled = crate::sim::Compiled::build(&spec);
        Ok(Arc::new(Machine { spec, compiled }))
    }

    pub fn spec(&self) -> &MachineSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }
}

impl PartialEq for Machine {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}
