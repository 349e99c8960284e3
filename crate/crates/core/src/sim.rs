//! Bounded exhaustive simulation.
//!
//! Paths are explored depth-first with an explicit undo trail. A path ends
//! when it halts, blocks, exceeds a bound, or repeats a configuration inside
//! a run of λ-moves (the only place a repeat can occur, since reading moves
//! the head and emitting grows a tape).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::machine::{Kind, Machine, MachineSpec, OracleMode, Read};
use crate::symbol::{format_word, Symbol, Word};

pub const DEFAULT_COEFF: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunBounds {
    pub max_steps: usize,
    pub max_stack_height: usize,
    pub max_tape_len: usize,
}

impl RunBounds {
    pub fn for_len(n: usize) -> Self {
        Self::with_coeff(n, DEFAULT_COEFF)
    }

    pub fn with_coeff(n: usize, coeff: usize) -> Self {
        let s = coeff.max(1) * (n + 2) + 64;
        RunBounds { max_steps: s, max_stack_height: s, max_tape_len: s }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 || self.max_stack_height == 0 || self.max_tape_len == 0 {
            return Err(Error::Precondition("run bounds must be strictly positive".into()));
        }
        Ok(())
    }
}

/// How bounds are derived for every run, including nested oracle runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundsPolicy {
    pub coeff: usize,
    /// Fixed step limit overriding the linear formula.
    pub max_steps: Option<usize>,
}

impl Default for BoundsPolicy {
    fn default() -> Self {
        BoundsPolicy { coeff: DEFAULT_COEFF, max_steps: None }
    }
}

impl BoundsPolicy {
    pub fn bounds(&self, n: usize) -> RunBounds {
        let mut b = RunBounds::with_coeff(n, self.coeff);
        if let Some(s) = self.max_steps {
            b.max_steps = s.max(1);
        }
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
    ResourceExceeded,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub paths_explored: usize,
    pub accepting_paths: usize,
    pub exceeded_paths: usize,
    pub repeated_paths: usize,
    pub pruned_paths: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub verdict: Verdict,
    pub valid_outputs: BTreeSet<Vec<Word>>,
    pub stats: Stats,
}

/// A snapshot of a machine configuration with symbols resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub state: String,
    pub head_pos: usize,
    pub stack: Word,
    pub tapes: Vec<Word>,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathRecord {
    pub path: Vec<usize>,
    pub last: Configuration,
    pub accepted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Halt {
    No,
    Accept,
    Reject,
}

const QUERY_MOVE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(crate) struct CRule {
    pub to: u32,
    pub read: Option<u16>,
    pub top: Option<u16>,
    /// Stored bottom-first, ready to be appended.
    pub push_rev: Vec<u16>,
    pub emit: Vec<Option<u16>>,
}

#[derive(Debug)]
pub(crate) struct Compiled {
    pub states: Vec<String>,
    pub start: u32,
    halting: Vec<Halt>,
    pub input_idx: HashMap<Symbol, u16>,
    pub stack_syms: Vec<Symbol>,
    pub bottom: Option<u16>,
    pub tape_syms: Vec<Vec<Symbol>>,
    pub rules: Vec<CRule>,
    lambda: Vec<Vec<u32>>,
    /// `by_read[state][code]`, codes are input symbols then `¢`, `$`.
    by_read: Vec<Vec<Vec<u32>>>,
    pub turing: Option<(u32, u32, u32)>,
    implicit_cent: bool,
    pub cent: u16,
    pub dollar: u16,
}

impl Compiled {
    pub(crate) fn build(spec: &MachineSpec) -> Compiled {
        let states = spec.states();
        let state_idx: HashMap<String, u32> =
            states.iter().enumerate().map(|(i, q)| (q.clone(), i as u32)).collect();
        let input_idx: HashMap<Symbol, u16> =
            spec.input.iter().enumerate().map(|(i, s)| (s.clone(), i as u16)).collect();
        let stack_idx: HashMap<&Symbol, u16> =
            spec.stack.iter().enumerate().map(|(i, s)| (s, i as u16)).collect();
        let tape_idx: Vec<HashMap<&Symbol, u16>> = spec
            .query
            .iter()
            .map(|a| a.iter().enumerate().map(|(i, s)| (s, i as u16)).collect())
            .collect();
        let cent = spec.input.len() as u16;
        let dollar = cent + 1;
        let halting = states
            .iter()
            .map(|q| {
                if spec.accept.contains(q) {
                    Halt::Accept
                } else if spec.reject.contains(q) {
                    Halt::Reject
                } else {
                    Halt::No
                }
            })
            .collect();
        let mut lambda = vec![Vec::new(); states.len()];
        let mut by_read = vec![vec![Vec::new(); spec.input.len() + 2]; states.len()];
        let mut rules = Vec::with_capacity(spec.rules.len());
        for (i, r) in spec.rules.iter().enumerate() {
            let from = state_idx[&r.from] as usize;
            let read = match &r.read {
                Read::Sym(s) => Some(input_idx[s]),
                Read::Cent => Some(cent),
                Read::Dollar => Some(dollar),
                Read::Lambda => None,
            };
            match read {
                Some(c) => by_read[from][c as usize].push(i as u32),
                None => lambda[from].push(i as u32),
            }
            rules.push(CRule {
                to: state_idx[&r.to],
                read,
                top: r.top.as_ref().map(|t| stack_idx[t]),
                push_rev: r.push.iter().rev().map(|s| stack_idx[s]).collect(),
                emit: r
                    .emit
                    .iter()
                    .enumerate()
                    .map(|(k, e)| e.as_ref().map(|e| tape_idx[k][e]))
                    .collect(),
            });
        }
        let turing = spec
            .turing
            .as_ref()
            .map(|t| (state_idx[&t.query], state_idx[&t.yes], state_idx[&t.no]));
        Compiled {
            states,

            start: 0,
            halting,
            input_idx,
            stack_syms: spec.stack.clone(),
            bottom: (spec.kind == Kind::Npda).then_some(0),
            tape_syms: spec.query.clone(),
            rules,
            lambda,
            by_read,
            turing,
            implicit_cent: !spec.reads_cent(),
            cent,
            dollar,
        }
    }

    pub(crate) fn encode_input(&self, w: &[Symbol]) -> Result<Vec<u16>> {
        let mut tape = Vec::with_capacity(w.len() + 2);
        tape.push(self.cent);
        for s in w {
            match self.input_idx.get(s) {
                Some(&c) => tape.push(c),
                None => {
                    return Err(Error::InputAlphabet(format!(
                        "symbol `{s}` of `{}` is not in the input alphabet",
                        format_word(w)
                    )))
                }
            }
        }
        tape.push(self.dollar);
        Ok(tape)
    }

    pub(crate) fn decode_tape(&self, k: usize, t: &[u16]) -> Word {
        t.iter().map(|&c| self.tape_syms[k][c as usize].clone()).collect()
    }

    pub(crate) fn initial(&self) -> Cfg {
        Cfg {
            state: self.start,
            pos: usize::from(self.implicit_cent),
            stack: self.bottom.into_iter().collect(),
            tapes: vec![Vec::new(); self.tape_syms.len()],
        }
    }

    /// `Some(true)` for accepting states, `Some(false)` for rejecting ones.
    pub(crate) fn halting_kind(&self, q: u32) -> Option<bool> {
        match self.halting[q as usize] {
            Halt::Accept => Some(true),
            Halt::Reject => Some(false),
            Halt::No => None,
        }
    }

    /// Successor of a stack-only configuration; tapes are left untouched.
    pub(crate) fn apply(&self, cfg: &Cfg, r: u32) -> Cfg {
        let rule = &self.rules[r as usize];
        let mut next = cfg.clone();
        if rule.read.is_some() {
            next.pos += 1;
        }
        if rule.top.is_some() {
            next.stack.pop();
        }
        next.stack.extend_from_slice(&rule.push_rev);
        next.state = rule.to;
        next
    }

    pub(crate) fn applicable(&self, cfg: &Cfg, input: &[u16], out: &mut Vec<u32>) {
        let q = cfg.state as usize;
        if let Some((qq, _, _)) = self.turing {
            if cfg.state == qq {
                out.push(QUERY_MOVE);
                return;
            }
        }
        let top = cfg.stack.last().copied();
        let ok = |r: &u32| match self.rules[*r as usize].top {
            None => true,
            Some(t) => top == Some(t),
        };
        if let Some(&c) = input.get(cfg.pos) {
            out.extend(self.by_read[q][c as usize].iter().copied().filter(ok));
        }
        out.extend(self.lambda[q].iter().copied().filter(ok));
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Cfg {
    pub state: u32,
    pub pos: usize,
    pub stack: Vec<u16>,
    pub tapes: Vec<Vec<u16>>,
}

struct Undo {
    state: u32,
    pos: usize,
    popped: Option<u16>,
    pushed: usize,
    emitted: Vec<bool>,
    cleared: Option<Vec<u16>>,
    seg_start: usize,
}

/// What happened at the end of a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leaf {
    Accept,
    Reject,
    /// Non-halting configuration with no applicable move.
    Stuck,
    Repeat,
    Exceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

pub(crate) struct LeafView<'a> {
    pub cfg: &'a Cfg,
    pub path: &'a [u32],
}

/// Callbacks driving a search.
pub(crate) trait Hooks {
    fn leaf(&mut self, kind: Leaf, view: &LeafView<'_>) -> Result<Control>;

    /// Called after every emitting move; `true` cuts the path.
    fn prune(&mut self, _tapes: &[Vec<u16>]) -> bool {
        false
    }

    fn query(&mut self, _tape: &[u16]) -> Result<bool> {
        Err(Error::Precondition("machine entered its query state but no oracle is attached".into()))
    }

    fn wants_prune(&self) -> bool {
        false
    }
}

pub(crate) fn search(m: &Machine, w: &[Symbol], bounds: RunBounds, hooks: &mut dyn Hooks) -> Result<Stats> {
    bounds.validate()?;
    let c = &m.compiled;
    let input = c.encode_input(w)?;
    let mut cfg = Cfg {
        state: c.start,
        pos: usize::from(c.implicit_cent),
        stack: c.bottom.into_iter().collect(),
        tapes: vec![Vec::new(); c.tape_syms.len()],
    };
    let mut stats = Stats::default();
    let mut trail: Vec<Undo> = Vec::new();
    let mut path: Vec<u32> = Vec::new();
    // λ-segment snapshots for repeat detection
    let mut seg: Vec<(u32, Vec<u16>, usize)> = Vec::new();
    let mut seg_start = 0usize;
    let mut arena: Vec<u32> = Vec::new();
    // (start, end, next) into arena
    let mut levels: Vec<(usize, usize, usize)> = Vec::new();
    let pruning = hooks.wants_prune();

    let tape_total = |cfg: &Cfg| cfg.tapes.iter().map(Vec::len).sum::<usize>();

    macro_rules! leaf {
        ($kind:expr) => {{
            stats.paths_explored += 1;
            match $kind {
                Leaf::Accept => stats.accepting_paths += 1,
                Leaf::Exceeded => stats.exceeded_paths += 1,
                Leaf::Repeat => stats.repeated_paths += 1,
                _ => {}
            }
            let view = LeafView { cfg: &cfg, path: &path };
            hooks.leaf($kind, &view)?
        }};
    }

    // Classify the current configuration; returns true if a level was opened.
    macro_rules! open_level {
        () => {{
            match c.halting[cfg.state as usize] {
                Halt::Accept => Some(leaf!(Leaf::Accept)),
                Halt::Reject => Some(leaf!(Leaf::Reject)),
                Halt::No => {
                    let start = arena.len();
                    c.applicable(&cfg, &input, &mut arena);
                    if arena.len() == start {
                        Some(leaf!(Leaf::Stuck))
                    } else {
                        levels.push((start, arena.len(), start));
                        None
                    }
                }
            }
        }};
    }

    seg.push((cfg.state, cfg.stack.clone(), 0));
    if open_level!() == Some(Control::Stop) {
        return Ok(stats);
    }

    while let Some(level) = levels.last_mut() {
        if level.2 == level.1 {
            let (start, _, _) = levels.pop().unwrap();
            arena.truncate(start);
            if let Some(u) = trail.pop() {
                seg.pop();
                undo(&mut cfg, u, &mut seg_start, &mut path);
            }
            continue;
        }
        let r = arena[level.2];
        level.2 += 1;

        // apply
        let mut u = Undo {
            state: cfg.state,
            pos: cfg.pos,
            popped: None,
            pushed: 0,
            emitted: Vec::new(),
            cleared: None,
            seg_start,
        };
        let reading;
        if r == QUERY_MOVE {
            let (_, yes, no) = c.turing.unwrap();
            let answer = hooks.query(&cfg.tapes[0])?;
            u.cleared = Some(std::mem::take(&mut cfg.tapes[0]));
            cfg.state = if answer { yes } else { no };
            reading = false;
        } else {
            let rule = &c.rules[r as usize];
            reading = rule.read.is_some();
            if reading {
                cfg.pos += 1;
            }
            if rule.top.is_some() {
                u.popped = cfg.stack.pop();
            }
            cfg.stack.extend_from_slice(&rule.push_rev);
            u.pushed = rule.push_rev.len();
            if !rule.emit.is_empty() {
                u.emitted = rule
                    .emit
                    .iter()
                    .enumerate()
                    .map(|(k, e)| match e {
                        Some(e) => {
                            cfg.tapes[k].push(*e);
                            true
                        }
                        None => false,
                    })
                    .collect();
            }
            cfg.state = rule.to;
        }
        let emitted = u.emitted.iter().any(|&b| b);
        path.push(r);
        if reading {
            seg_start = seg.len();
        }
        trail.push(u);

        let exceeded = trail.len() > bounds.max_steps
            || cfg.stack.len() > bounds.max_stack_height
            || cfg.tapes.iter().any(|t| t.len() > bounds.max_tape_len);
        let control = if exceeded {
            Some(leaf!(Leaf::Exceeded))
        } else if emitted && pruning && hooks.prune(&cfg.tapes) {
            stats.pruned_paths += 1;
            Some(Control::Continue)
        } else {
            let total = tape_total(&cfg);
            let repeat = !reading
                && seg[seg_start..]
                    .iter()
                    .any(|(q, st, t)| *q == cfg.state && *t == total && *st == cfg.stack);
            if repeat {
                Some(leaf!(Leaf::Repeat))
            } else {
                seg.push((cfg.state, cfg.stack.clone(), total));
                let opened = open_level!();
                if opened.is_some() {
                    seg.pop();
                }
                opened
            }
        };
        match control {
            Some(Control::Stop) => return Ok(stats),
            Some(Control::Continue) => {
                let u = trail.pop().unwrap();
                undo(&mut cfg, u, &mut seg_start, &mut path);
            }
            None => {}
        }
    }
    Ok(stats)
}

fn undo(cfg: &mut Cfg, u: Undo, seg_start: &mut usize, path: &mut Vec<u32>) {
    *seg_start = u.seg_start;
    path.pop();
    if let Some(t) = u.cleared {
        cfg.tapes[0] = t;
    }
    for (k, e) in u.emitted.iter().enumerate() {
        if *e {
            cfg.tapes[k].pop();
        }
    }
    let keep = cfg.stack.len() - u.pushed;
    cfg.stack.truncate(keep);
    if let Some(p) = u.popped {
        cfg.stack.push(p);
    }
    cfg.pos = u.pos;
    cfg.state = u.state;
}

impl Machine {
    fn resolve(&self, cfg: &Cfg, steps: usize) -> Configuration {
        let c = &self.compiled;
        Configuration {
            state: c.states[cfg.state as usize].clone(),
            head_pos: cfg.pos,
            stack: cfg.stack.iter().map(|&s| c.stack_syms[s as usize].clone()).collect(),
            tapes: cfg.tapes.iter().enumerate().map(|(k, t)| c.decode_tape(k, t)).collect(),
            steps,
        }
    }

    fn no_turing(&self) -> Result<()> {
        if self.spec().oracle == OracleMode::Turing {
            return Err(Error::Precondition(format!(
                "`{}` is a Turing reducer; use the oracle engine to run it",
                self.name()
            )));
        }
        Ok(())
    }

    /// Full run collecting every valid output tuple.
    pub fn run(&self, w: &[Symbol], bounds: RunBounds) -> Result<RunResult> {
        self.no_turing()?;
        struct Collect<'a> {
            m: &'a Machine,
            outputs: BTreeSet<Vec<Word>>,
        }
        impl Hooks for Collect<'_> {
            fn leaf(&mut self, kind: Leaf, v: &LeafView<'_>) -> Result<Control> {
                if kind == Leaf::Accept {
                    let c = &self.m.compiled;
                    self.outputs
                        .insert(v.cfg.tapes.iter().enumerate().map(|(k, t)| c.decode_tape(k, t)).collect());
                }
                Ok(Control::Continue)
            }
        }
        let mut h = Collect { m: self, outputs: BTreeSet::new() };
        let stats = search(self, w, bounds, &mut h)?;
        Ok(RunResult { verdict: verdict_of(&stats), valid_outputs: h.outputs, stats })
    }

    /// Acceptance with early exit on the first accepting path.
    pub fn accepts(&self, w: &[Symbol], bounds: RunBounds) -> Result<Verdict> {
        self.no_turing()?;
        struct First;
        impl Hooks for First {
            fn leaf(&mut self, kind: Leaf, _: &LeafView<'_>) -> Result<Control> {
                Ok(if kind == Leaf::Accept { Control::Stop } else { Control::Continue })
            }
        }
        let stats = search(self, w, bounds, &mut First)?;
        Ok(verdict_of(&stats))
    }

    /// Like [`Machine::accepts`] but a bound hit is an error.
    pub fn accepts_strict(&self, w: &[Symbol], bounds: RunBounds) -> Result<bool> {
        match self.accepts(w, bounds)? {
            Verdict::Accept => Ok(true),
            Verdict::Reject => Ok(false),
            Verdict::ResourceExceeded => Err(exceeded(self, w)),
        }
    }

    /// [`Machine::accepts_strict`] under the default bounds for `|w|`.
    pub fn accepts_default(&self, w: &[Symbol]) -> Result<bool> {
        self.accepts_strict(w, RunBounds::for_len(w.len()))
    }

    pub fn valid_outputs(&self, w: &[Symbol], bounds: RunBounds) -> Result<BTreeSet<Vec<Word>>> {
        if self.spec().query.is_empty() {
            return Err(Error::Precondition(format!("`{}` has no query tapes", self.name())));
        }
        let r = self.run(w, bounds)?;
        if r.verdict == Verdict::ResourceExceeded {
            return Err(exceeded(self, w));
        }
        Ok(r.valid_outputs)
    }

    /// Every maximal path with its rule-index sequence.
    pub fn run_paths(&self, w: &[Symbol], bounds: RunBounds) -> Result<Vec<PathRecord>> {
        self.no_turing()?;
        struct Paths<'a> {
            m: &'a Machine,
            out: Vec<PathRecord>,
        }
        impl Hooks for Paths<'_> {
            fn leaf(&mut self, kind: Leaf, v: &LeafView<'_>) -> Result<Control> {
                self.out.push(PathRecord {
                    path: v.path.iter().map(|&r| r as usize).collect(),
                    last: self.m.resolve(v.cfg, v.path.len()),
                    accepted: kind == Leaf::Accept,
                });
                Ok(Control::Continue)
            }
        }
        let mut h = Paths { m: self, out: Vec::new() };
        search(self, w, bounds, &mut h)?;
        Ok(h.out)
    }

    /// Deterministically re-executes a rule-index sequence.
    pub fn replay(&self, w: &[Symbol], path: &[usize]) -> Result<Configuration> {
        let c = &self.compiled;
        let input = c.encode_input(w)?;
        let mut cfg = Cfg {
            state: c.start,
            pos: usize::from(c.implicit_cent),
            stack: c.bottom.into_iter().collect(),
            tapes: vec![Vec::new(); c.tape_syms.len()],
        };
        let mut cands = Vec::new();
        for (step, &r) in path.iter().enumerate() {
            cands.clear();
            if c.halting[cfg.state as usize] != Halt::No {
                return Err(Error::Precondition(format!("step {step}: path continues past a halting state")));
            }
            c.applicable(&cfg, &input, &mut cands);
            if !cands.contains(&(r as u32)) {
                return Err(Error::Precondition(format!("step {step}: rule {r} is not applicable")));
            }
            let rule = &c.rules[r];
            if rule.read.is_some() {
                cfg.pos += 1;
            }
            if rule.top.is_some() {
                cfg.stack.pop();
            }
            cfg.stack.extend_from_slice(&rule.push_rev);
            for (k, e) in rule.emit.iter().enumerate() {
                if let Some(e) = e {
                    cfg.tapes[k].push(*e);
                }
            }
            cfg.state = rule.to;
        }
        Ok(self.resolve(&cfg, path.len()))
    }

    pub fn is_accepting(&self, state: &str) -> bool {
        self.spec().accept.contains(state)
    }

    /// Acceptance by a visited-set search over (state, head, stack).
    /// Only valid for machines without query tapes.
    pub fn accepts_memo(&self, w: &[Symbol], bounds: RunBounds) -> Result<Verdict> {
        self.no_turing()?;
        let c = &self.compiled;
        let input = c.encode_input(w)?;
        let start = Cfg {
            state: c.start,
            pos: usize::from(c.implicit_cent),
            stack: c.bottom.into_iter().collect(),
            tapes: Vec::new(),
        };
        let mut seen: HashSet<(u32, usize, Vec<u16>)> = HashSet::new();
        let mut todo = vec![start];
        let mut exceeded = false;
        let mut cands = Vec::new();
        while let Some(cfg) = todo.pop() {
            if !seen.insert((cfg.state, cfg.pos, cfg.stack.clone())) {
                continue;
            }
            match c.halting[cfg.state as usize] {
                Halt::Accept => return Ok(Verdict::Accept),
                Halt::Reject => continue,
                Halt::No => {}
            }
            cands.clear();
            c.applicable(&cfg, &input, &mut cands);
            for &r in &cands {
                let rule = &c.rules[r as usize];
                let mut next = cfg.clone();
                if rule.read.is_some() {
                    next.pos += 1;
                }
                if rule.top.is_some() {
                    next.stack.pop();
                }
                next.stack.extend_from_slice(&rule.push_rev);
                next.state = rule.to;
                if next.stack.len() > bounds.max_stack_height {
                    exceeded = true;
                    continue;
                }
                todo.push(next);
            }
        }
        Ok(if exceeded { Verdict::ResourceExceeded } else { Verdict::Reject })
    }
}

pub(crate) fn verdict_of(stats: &Stats) -> Verdict {
    if stats.accepting_paths > 0 {
        Verdict::Accept
    } else if stats.exceeded_paths > 0 {
        Verdict::ResourceExceeded
    } else {
        Verdict::Reject
    }
}

pub(crate) fn exceeded(m: &Machine, w: &[Symbol]) -> Error {
    Error::ResourceExceeded(format!("`{}` on `{}`", m.name(), format_word(w)))
}

/// Convenience: validated machine from a spec, panicking on invalid input.
pub fn machine(spec: MachineSpec) -> Arc<Machine> {
    Machine::new(spec).unwrap_or_else(|e| panic!("{e}"))
}
