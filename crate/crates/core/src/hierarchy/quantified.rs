use std::collections::HashSet;

use super::LinearPoly;
use crate::machine::{deterministic_violations, Kind, Machine, OracleMode, Read};
use crate::sim::RunBounds;
use crate::symbol::{natural_extensions, strings_of_len, Symbol, Word};
use crate::{Error, Result};

const BLOCK_BUDGET: f64 = (1u64 << 20) as f64;
const NODE_BUDGET: usize = 1 << 22;

/// Evaluates `∃x̃ ∃y₁ ∀y₂ … Q_k y_k [x = Ext(x̃) ∧ [x̃, y₁, …, y_k]ᵀ ∈ L(A)]`
/// with `|x̃| ≤ p(|x|)`. All tracks of a column string share one length, so
/// every `y_i` has exactly `|x̃|` symbols drawn from the symbols that occur
/// on track `i` of `A`'s columns.
pub fn eval_quantified(a: &Machine, p: LinearPoly, k: usize, x: &[Symbol]) -> Result<bool> {
    let spec = a.spec();
    if spec.oracle != OracleMode::None {
        return Err(Error::Precondition(format!("`{}` must be oracle-free", spec.name)));
    }
    if k == 0 {
        return Err(Error::Precondition("at least one quantifier block is required".into()));
    }
    let width = k + 1;
    let mut tracks: Vec<Vec<Symbol>> = vec![Vec::new(); width];
    for col in &spec.input {
        let parts = col
            .components()
            .filter(|c| c.len() == width)
            .ok_or_else(|| Error::Precondition(format!("`{col}` is not a {width}-track column")))?;
        for (t, s) in tracks.iter_mut().zip(parts) {
            if !t.contains(&s) {
                t.push(s);
            }
        }
    }
    let max_len = p.eval(x.len());
    if max_len < x.len() {
        return Ok(false);
    }
    if x.iter().any(|s| !tracks[0].contains(s)) {
        return Ok(false);
    }
    if k == 1 && deterministic_violations(spec).is_empty() {
        return Stepper::new(a, x, max_len).search();
    }
    for t in tracks.iter().skip(1) {
        if (t.len() as f64).powi(max_len as i32) > BLOCK_BUDGET {
            return Err(Error::Budget(format!(
                "{} strings of length {max_len} exceed the per-block limit",
                t.len()
            )));
        }
    }
    for xt in natural_extensions(x, max_len) {
        let mut ys = Vec::with_capacity(k);
        if block(a, &tracks, &xt, &mut ys, k)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn block(a: &Machine, tracks: &[Vec<Symbol>], xt: &Word, ys: &mut Vec<Word>, k: usize) -> Result<bool> {
    let i = ys.len() + 1;
    if i > k {
        let cols: Word = (0..xt.len())
            .map(|j| {
                let mut c = vec![xt[j].clone()];
                c.extend(ys.iter().map(|y| y[j].clone()));
                Symbol::track(&c)
            })
            .collect();
        if cols.iter().any(|c| !a.compiled.input_idx.contains_key(c)) {
            return Ok(false);
        }
        return a.accepts_strict(&cols, RunBounds::for_len(cols.len()));
    }
    let exists = i % 2 == 1;
    for y in strings_of_len(&tracks[i], xt.len()) {
        ys.push(y);
        let v = block(a, tracks, xt, ys, k)?;
        ys.pop();
        if v == exists {
            return Ok(exists);
        }
    }
    Ok(!exists)
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Cfg {
    state: String,
    stack: Vec<Symbol>,
}

enum Step {
    Ok(Cfg),
    Accept,
    Dead,
}

/// Depth-first search over column strings for a deterministic two-track
/// acceptor, stepping a single configuration per prefix.
struct Stepper<'a> {
    a: &'a Machine,
    x: &'a [Symbol],
    max_len: usize,
    seen: HashSet<(Cfg, usize, usize)>,
    nodes: usize,
    lambda_limit: usize,
}

impl<'a> Stepper<'a> {
    fn new(a: &'a Machine, x: &'a [Symbol], max_len: usize) -> Self {
        let lambda_limit = RunBounds::for_len(max_len).max_steps;
        Stepper { a, x, max_len, seen: HashSet::new(), nodes: 0, lambda_limit }
    }

    fn search(&mut self) -> Result<bool> {
        let spec = self.a.spec();
        let stack = if spec.kind == Kind::Npda { vec![spec.stack[0].clone()] } else { Vec::new() };
        let start = Cfg { state: spec.start.clone(), stack };
        let start = if spec.reads_cent() {
            match self.step(start, &Read::Cent)? {
                Step::Ok(c) => c,
                Step::Accept => return Ok(true),
                Step::Dead => return Ok(false),
            }
        } else {
            match self.settle(start)? {
                Step::Ok(c) => c,
                Step::Accept => return Ok(true),
                Step::Dead => return Ok(false),
            }
        };
        self.dfs(start, 0, 0)
    }

    fn dfs(&mut self, cfg: Cfg, pos: usize, len: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            return Err(Error::Budget(format!("more than {NODE_BUDGET} search nodes")));
        }
        if !self.seen.insert((cfg.clone(), pos, len)) {
            return Ok(false);
        }
        if pos == self.x.len() && matches!(self.step(cfg.clone(), &Read::Dollar)?, Step::Accept) {
            return Ok(true);
        }
        if len == self.max_len {
            return Ok(false);
        }
        let cols = self.a.spec().input.clone();
        for col in &cols {
            let head = &col.components().expect("checked")[0];
            let next = if head.is_natural() {
                pos
            } else if self.x.get(pos) == Some(head) {
                pos + 1
            } else {
                continue;
            };
            match self.step(cfg.clone(), &Read::Sym(col.clone()))? {
                Step::Dead => {}
                // the rest of the input is irrelevant once accepted
                Step::Accept => {
                    if self.x.len() - next < self.max_len - len {
                        return Ok(true);
                    }
                }
                Step::Ok(c) => {
                    if self.dfs(c, next, len + 1)? {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    fn apply(&self, cfg: &mut Cfg, r: &crate::machine::Rule) {
        if r.top.is_some() {
            cfg.stack.pop();
        }
        cfg.stack.extend(r.push.iter().rev().cloned());
        cfg.state = r.to.clone();
    }

    fn halting(&self, cfg: Cfg) -> Step {
        let spec = self.a.spec();
        if spec.accept.contains(&cfg.state) {
            Step::Accept
        } else if spec.reject.contains(&cfg.state) {
            Step::Dead
        } else {
            Step::Ok(cfg)
        }
    }

    fn find(&self, cfg: &Cfg, read: &Read) -> Option<&crate::machine::Rule> {
        let top = cfg.stack.last();
        self.a
            .spec()
            .rules
            .iter()
            .find(|r| r.from == cfg.state && r.read == *read && r.top.as_ref().is_none_or(|t| Some(t) == top))
    }

    /// Follows λ-moves until none applies.
    fn settle(&self, mut cfg: Cfg) -> Result<Step> {
        for _ in 0..self.lambda_limit {
            match self.find(&cfg, &Read::Lambda) {
                None => return Ok(Step::Ok(cfg)),
                Some(r) => {
                    self.apply(&mut cfg, r);
                    match self.halting(cfg) {
                        Step::Ok(c) => cfg = c,
                        other => return Ok(other),
                    }
                }
            }
        }
        Err(Error::ResourceExceeded(format!("λ-moves of `{}` do not settle", self.a.name())))
    }

    /// Consumes one input item, taking λ-moves first where no reading move
    /// applies. After `$` only λ-moves remain.
    fn step(&self, mut cfg: Cfg, read: &Read) -> Result<Step> {
        for _ in 0..self.lambda_limit {
            if let Some(r) = self.find(&cfg, read) {
                self.apply(&mut cfg, r);
                return Ok(match self.halting(cfg) {
                    Step::Ok(c) if *read == Read::Dollar => match self.settle(c)? {
                        Step::Ok(_) => Step::Dead,
                        other => other,
                    },
                    Step::Ok(c) if *read == Read::Cent => self.settle(c)?,
                    other => other,
                });
            }
            match self.find(&cfg, &Read::Lambda) {
                None => return Ok(Step::Dead),
                Some(r) => {
                    self.apply(&mut cfg, r);
                    match self.halting(cfg) {
                        Step::Ok(c) => cfg = c,
                        other => return Ok(other),
                    }
                }
            }
        }
        Err(Error::ResourceExceeded(format!("λ-moves of `{}` do not settle", self.a.name())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::MachineSpec;
    use crate::sim::machine;
    use crate::symbol::{length_lex, word};
    use crate::transforms::encode_path_reducer;

    fn sample() -> MachineSpec {
        // 0^n 1^n with a nondeterministic guess of the midpoint
        let mut m = MachineSpec::new("anbn", Kind::Npda)
            .with_input("0 1")
            .with_stack("Z A")
            .with_accept("acc");
        m.t("q0", "0", "-", "q0", "A", "-")
            .t("q0", "-", "-", "q1", "-", "-")
            .t("q1", "1", "A", "q1", "-", "-")
            .t("q1", "$", "Z", "acc", "-", "-");
        m
    }

    /// Columns `[a, b]` accepted iff the first track has no padding.
    fn unpadded(k: usize) -> MachineSpec {
        let nat = Symbol::natural();
        let mut m = MachineSpec::new("unpadded", Kind::Nfa).with_accept("acc");
        let mut cols = Vec::new();
        for a in [Symbol::lit("0"), Symbol::lit("1"), nat.clone()] {
            for ys in strings_of_len(&[Symbol::lit("0"), Symbol::lit("1")], k) {
                let mut c = vec![a.clone()];
                c.extend(ys);
                cols.push(Symbol::track(&c));
            }
        }
        m.input = cols.clone();
        for c in cols {
            if !c.components().unwrap()[0].is_natural() {
                m.rules.push(crate::machine::Rule {
                    from: "q".into(),
                    read: Read::Sym(c),
                    top: None,
                    to: "q".into(),
                    push: Vec::new(),
                    emit: Vec::new(),
                    weight: None,
                });
            }
        }
        m.start = "q".into();
        m.t("q", "$", "-", "acc", "-", "-");
        m
    }

    #[test]
    fn path_replay_characterizes_the_language() {
        let spec = sample();
        let rep = machine(encode_path_reducer(&spec).unwrap().replayer);
        let m = machine(spec.clone());
        let p = LinearPoly::new(2, 2);
        for x in length_lex(&spec.input, 5) {
            assert_eq!(
                eval_quantified(&rep, p, 1, &x).unwrap(),
                m.accepts_default(&x).unwrap(),
                "{x:?}"
            );
        }
    }

    #[test]
    fn generic_and_fast_paths_agree() {
        let a = machine(unpadded(1));
        for x in length_lex(&[Symbol::lit("0"), Symbol::lit("1")], 3) {
            for p in [LinearPoly::new(1, 0), LinearPoly::new(0, 1)] {
                let fast = eval_quantified(&a, p, 1, &x).unwrap();
                assert_eq!(fast, p.eval(x.len()) >= x.len(), "{x:?} {p}");
            }
        }
    }

    #[test]
    fn empty_acceptor_is_false() {
        let mut spec = unpadded(2);
        spec.accept.clear();
        spec.accept.insert("never".into());
        let a = machine(spec);
        assert!(!eval_quantified(&a, LinearPoly::new(1, 1), 2, &word("01")).unwrap());
    }

    #[test]
    fn universal_block() {
        // k = 2: ∃x̃ ∃y₁ ∀y₂, and the acceptor ignores both y tracks
        let a = machine(unpadded(2));
        assert!(eval_quantified(&a, LinearPoly::new(1, 0), 2, &word("01")).unwrap());
        assert!(!eval_quantified(&a, LinearPoly::new(0, 1), 2, &word("01")).unwrap());
    }

    #[test]
    fn budget_is_an_error() {
        let a = machine(unpadded(2));
        let r = eval_quantified(&a, LinearPoly::new(30, 0), 2, &word("01"));
        assert!(matches!(r, Err(Error::Budget(_))));
    }
}
