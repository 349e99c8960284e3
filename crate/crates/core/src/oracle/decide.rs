use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use super::{prefix_viable, prunable, LanguageExpr as E, LanguageExpr};
use crate::error::{Error, Result};
use crate::machine::{total_dfa_violations, Machine, OracleMode};
use crate::sim::{exceeded, search, BoundsPolicy, Control, Hooks, Leaf, LeafView};
use crate::symbol::{compact_alphabet, format_word, length_lex, Symbol, Word};

/// Counters collected across decisions.
#[derive(Debug, Default)]
pub struct DecideStats {
    pub oracle_calls: AtomicUsize,
    pub outputs_checked: AtomicUsize,
    /// ktt inputs violating the non-empty accepting-path condition.
    pub ktt_empty_acc: AtomicUsize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KttOutcome {
    pub member: bool,
    /// No accepting path at all, so the totality condition fails.
    pub empty_acc: bool,
}

/// Bounded recursive membership. Every machine run, including nested oracle
/// resolutions, gets bounds derived from the length of its own input.
#[derive(Debug, Default)]
pub struct Decider {
    pub policy: BoundsPolicy,
    pub stats: DecideStats,
}

fn foreign(m: &Machine, w: &[Symbol]) -> bool {
    w.iter().any(|s| !m.compiled.input_idx.contains_key(s))
}

fn check_query_alphabet(m: &Machine, tapes: usize, e: &LanguageExpr) -> Result<()> {
    for k in 0..tapes {
        if let Some(s) = m.spec().query[k].iter().find(|s| !e.admits(s)) {
            return Err(Error::QueryAlphabet(format!(
                "`{}` writes `{s}` on tape {}, which is outside the oracle alphabet",
                m.name(),
                k + 1
            )));
        }
    }
    Ok(())
}

impl Decider {
    pub fn new(policy: BoundsPolicy) -> Self {
        Decider { policy, stats: DecideStats::default() }
    }

    pub fn member(&self, e: &LanguageExpr, w: &[Symbol]) -> Result<bool> {
        if let Some(s) = w.iter().find(|s| !e.admits(s)) {
            return Err(Error::InputAlphabet(format!("symbol `{s}` is outside the expression alphabet")));
        }
        self.member_in(e, w)
    }

    fn member_in(&self, e: &LanguageExpr, w: &[Symbol]) -> Result<bool> {
        self.stats.oracle_calls.fetch_add(1, Ordering::Relaxed);
        match e {
            E::Machine(m) => {
                if foreign(m, w) {
                    return Ok(false);
                }
                m.accepts_strict(w, self.policy.bounds(w.len()))
            }
            E::Builtin(name) => crate::zoo::reference_member(name, w),
            E::Finite { words, .. } => Ok(words.contains(w)),
            E::Complement(e) => Ok(!self.member_in(e, w)?),
            E::Intersect(a, b) => Ok(self.member_in(a, w)? && self.member_in(b, w)?),
            E::Union(a, b) => Ok(self.member_in(a, w)? || self.member_in(b, w)?),
            E::Reverse(e) => {
                let r: Word = w.iter().rev().cloned().collect();
                self.member_in(e, &r)
            }
            E::Dyck(a) => Ok(a.member(w)),
            E::DyckExt(ts) => Ok(prefix_viable(e, w) && {
                (0..ts.len()).all(|i| {
                    let track: Vec<Symbol> = w
                        .iter()
                        .map(|c| c.components().unwrap()[i].clone())
                        .filter(|s| !s.is_natural())
                        .collect();
                    ts[i].member(&track)
                })
            }),
            E::ManyOne(m, a) => {
                if foreign(m, w) {
                    return Ok(false);
                }
                self.decide_many_one(m, a, w)
            }
            E::Turing(m, a) => {
                if foreign(m, w) {
                    return Ok(false);
                }
                self.decide_turing(m, a, w)
            }
            E::Ktt(m, t, a) => {
                if foreign(m, w) {
                    return Ok(false);
                }
                Ok(self.decide_ktt(m, t, a, w)?.member)
            }
        }
    }

    /// `x` is accepted iff some valid output lies in `a`.
    pub fn decide_many_one(&self, m: &Machine, a: &LanguageExpr, x: &[Symbol]) -> Result<bool> {
        if m.spec().oracle != OracleMode::ManyOne || m.spec().query.len() != 1 {
            return Err(Error::Precondition(format!("`{}` is not a one-tape many-one reducer", m.name())));
        }
        check_query_alphabet(m, 1, a)?;
        struct H<'a> {
            d: &'a Decider,
            m: &'a Machine,
            a: &'a LanguageExpr,
            seen: HashSet<Vec<u16>>,
            found: bool,
            prune: bool,
        }
        impl Hooks for H<'_> {
            fn leaf(&mut self, kind: Leaf, v: &LeafView<'_>) -> Result<Control> {
                if kind != Leaf::Accept || !self.seen.insert(v.cfg.tapes[0].clone()) {
                    return Ok(Control::Continue);
                }
                self.d.stats.outputs_checked.fetch_add(1, Ordering::Relaxed);
                let y = self.m.compiled.decode_tape(0, &v.cfg.tapes[0]);
                if self.d.member_in(self.a, &y)? {
                    self.found = true;
                    return Ok(Control::Stop);
                }
                Ok(Control::Continue)
            }
            fn wants_prune(&self) -> bool {
                self.prune
            }
            fn prune(&mut self, tapes: &[Vec<u16>]) -> bool {
                let y = self.m.compiled.decode_tape(0, &tapes[0]);
                !prefix_viable(self.a, &y)
            }
        }
        let mut h = H { d: self, m, a, seen: HashSet::new(), found: false, prune: prunable(a) };
        let stats = search(m, x, self.policy.bounds(x.len()), &mut h)?;
        if h.found {
            Ok(true)
        } else if stats.exceeded_paths > 0 {
            Err(exceeded(m, x))
        } else {
            Ok(false)
        }
    }

    /// Runs a Turing reducer, answering each query by recursive membership.
    /// The query tape is blanked after every query.
    pub fn decide_turing(&self, m: &Machine, a: &LanguageExpr, x: &[Symbol]) -> Result<bool> {
        if m.spec().oracle != OracleMode::Turing {
            return Err(Error::Precondition(format!("`{}` is not a Turing reducer", m.name())));
        }
        check_query_alphabet(m, 1, a)?;
        self.turing_with(m, x, &mut |y| self.member_in(a, y))
    }

    /// Runs a Turing reducer against an arbitrary answer function.
    pub fn turing_with(
        &self,
        m: &Machine,
        x: &[Symbol],
        answer: &mut dyn FnMut(&[Symbol]) -> Result<bool>,
    ) -> Result<bool> {
        struct H<'a> {
            m: &'a Machine,
            answer: &'a mut dyn FnMut(&[Symbol]) -> Result<bool>,
            memo: HashMap<Vec<u16>, bool>,
        }
        impl Hooks for H<'_> {
            fn leaf(&mut self, kind: Leaf, _: &LeafView<'_>) -> Result<Control> {
                Ok(if kind == Leaf::Accept { Control::Stop } else { Control::Continue })
            }
            fn query(&mut self, tape: &[u16]) -> Result<bool> {
                if let Some(&b) = self.memo.get(tape) {
                    return Ok(b);
                }
                let y = self.m.compiled.decode_tape(0, tape);
                let b = (self.answer)(&y)?;
                self.memo.insert(tape.to_vec(), b);
                Ok(b)
            }
        }
        let mut h = H { m, answer, memo: HashMap::new() };
        let stats = search(m, x, self.policy.bounds(x.len()), &mut h)?;
        if stats.accepting_paths > 0 {
            Ok(true)
        } else if stats.exceeded_paths > 0 {
            Err(exceeded(m, x))
        } else {
            Ok(false)
        }
    }

    /// k-truth-table decision: some accepting path whose answer vector `z`
    /// makes the table accept `x <hash> z`.
    pub fn decide_ktt(&self, m: &Machine, table: &Machine, a: &LanguageExpr, x: &[Symbol]) -> Result<KttOutcome> {
        let OracleMode::Ktt(k) = m.spec().oracle else {
            return Err(Error::Precondition(format!("`{}` is not a ktt reducer", m.name())));
        };
        let v = total_dfa_violations(table.spec());
        if !v.is_empty() {
            return Err(Error::Invalid { name: table.name().to_owned(), violations: v });
        }
        check_query_alphabet(m, k, a)?;
        struct H<'a> {
            d: &'a Decider,
            m: &'a Machine,
            table: &'a Machine,
            a: &'a LanguageExpr,
            x: &'a [Symbol],
            memo: HashMap<Vec<u16>, bool>,
            found: bool,
        }
        impl Hooks for H<'_> {
            fn leaf(&mut self, kind: Leaf, v: &LeafView<'_>) -> Result<Control> {
                if kind != Leaf::Accept {
                    return Ok(Control::Continue);
                }
                let mut enc: Word = self.x.to_vec();
                enc.push(Symbol::hash());
                for (i, t) in v.cfg.tapes.iter().enumerate() {
                    let bit = match self.memo.get(t) {
                        Some(&b) => b,
                        None => {
                            let y = self.m.compiled.decode_tape(i, t);
                            let b = self.d.member_in(self.a, &y)?;
                            self.memo.insert(t.clone(), b);
                            b
                        }
                    };
                    enc.push(Symbol::lit(if bit { "1" } else { "0" }));
                }
                let bounds = self.d.policy.bounds(enc.len());
                if foreign(self.table, &enc) {
                    return Err(Error::InputAlphabet(format!(
                        "truth table `{}` cannot read `{}`",
                        self.table.name(),
                        format_word(&enc)
                    )));
                }
                if self.table.accepts_strict(&enc, bounds)? {
                    self.found = true;
                    return Ok(Control::Stop);
                }
                Ok(Control::Continue)
            }
        }
        let mut h = H { d: self, m, table, a, x, memo: HashMap::new(), found: false };
        let stats = search(m, x, self.policy.bounds(x.len()), &mut h)?;
        if h.found {
            return Ok(KttOutcome { member: true, empty_acc: false });
        }
        if stats.exceeded_paths > 0 {
            return Err(exceeded(m, x));
        }
        let empty_acc = stats.accepting_paths == 0;
        if empty_acc {
            self.stats.ktt_empty_acc.fetch_add(1, Ordering::Relaxed);
        }
        Ok(KttOutcome { member: false, empty_acc })
    }

    /// Membership of every word up to `max_len`, in length-lexicographic order.
    pub fn table(&self, e: &LanguageExpr, alphabet: &[Symbol], max_len: usize) -> Result<Vec<(Word, bool)>> {
        let k = alphabet.len() as u128;
        let count: u128 = (0..=max_len as u32).map(|i| k.saturating_pow(i)).sum();
        if count >= 1 << 20 {
            return Err(Error::Budget(format!("{count} strings exceed the 2^20 table limit")));
        }
        let words: Vec<Word> = length_lex(alphabet, max_len).collect();
        words
            .into_par_iter()
            .map(|w| self.member(e, &w).map(|b| (w, b)))
            .collect()
    }
}

/// CSV rendering of a table with header `string,member`.
pub fn table_csv(rows: &[(Word, bool)], alphabet: &[Symbol]) -> String {
    let compact = compact_alphabet(alphabet);
    let mut s = String::from("string,member\n");
    for (w, b) in rows {
        let text = if compact {
            w.iter().map(Symbol::as_str).collect::<String>()
        } else {
            w.iter().map(Symbol::as_str).collect::<Vec<_>>().join(" ")
        };
        s.push_str(&text);
        s.push(',');
        s.push_str(if *b { "true" } else { "false" });
        s.push('\n');
    }
    s
}
