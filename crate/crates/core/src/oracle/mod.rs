//! Oracle expressions and bounded decision procedures.

mod decide;
mod text;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

pub use decide::{table_csv, DecideStats, Decider, KttOutcome};
pub use text::{load_expr, parse_expr, print_expr, write_expr_bundle};
pub(crate) use text::quote_word;

use crate::machine::Machine;
use crate::symbol::{Symbol, Word};

/// Bracket pairs `a` / `a'` of a Dyck language, listed by opener.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyckAlphabet {
    pub opens: Vec<Symbol>,
}

impl DyckAlphabet {
    /// `a1 .. ad`.
    pub fn standard(d: usize) -> Self {
        DyckAlphabet { opens: (1..=d).map(|i| Symbol::lit(&format!("a{i}"))).collect() }
    }

    pub fn new(opens: Vec<Symbol>) -> Self {
        DyckAlphabet { opens }
    }

    /// Symbols in the order `a1, a1', a2, a2', ...`.
    pub fn symbols(&self) -> Vec<Symbol> {
        self.opens.iter().flat_map(|a| [a.clone(), a.primed()]).collect()
    }

    pub fn is_standard(&self) -> bool {
        *self == DyckAlphabet::standard(self.opens.len())
    }

    fn classify(&self, s: &Symbol) -> Option<(usize, bool)> {
        self.opens.iter().enumerate().find_map(|(i, a)| {
            if a == s {
                Some((i, true))
            } else if a.primed() == *s {
                Some((i, false))
            } else {
                None
            }
        })
    }

    /// Scans a word; `None` when it can never be completed to a member,
    /// otherwise the depth of unmatched openers.
    pub fn scan<'a>(&self, w: impl IntoIterator<Item = &'a Symbol>) -> Option<usize> {
        let mut stack = Vec::new();
        for s in w {
            match self.classify(s)? {
                (i, true) => stack.push(i),
                (i, false) => {
                    if stack.pop() != Some(i) {
                        return None;
                    }
                }
            }
        }
        Some(stack.len())
    }

    pub fn member(&self, w: &[Symbol]) -> bool {
        self.scan(w) == Some(0)
    }
}

/// Recursive oracle algebra. `(dyck-ext d)` uses the pair `a1`/`a1'` on every
/// track.
#[derive(Clone, Debug)]
pub enum LanguageExpr {
    Machine(Arc<Machine>),
    Builtin(String),
    Finite { alphabet: Vec<Symbol>, words: BTreeSet<Word> },
    Complement(Box<LanguageExpr>),
    Intersect(Box<LanguageExpr>, Box<LanguageExpr>),
    Union(Box<LanguageExpr>, Box<LanguageExpr>),
    Reverse(Box<LanguageExpr>),
    Dyck(DyckAlphabet),
    DyckExt(Vec<DyckAlphabet>),
    ManyOne(Arc<Machine>, Box<LanguageExpr>),
    Turing(Arc<Machine>, Box<LanguageExpr>),
    Ktt(Arc<Machine>, Arc<Machine>, Box<LanguageExpr>),
}

use LanguageExpr as E;

pub fn machine(m: &Arc<Machine>) -> LanguageExpr {
    E::Machine(m.clone())
}

pub fn complement(e: LanguageExpr) -> LanguageExpr {
    E::Complement(Box::new(e))
}

pub fn intersect(a: LanguageExpr, b: LanguageExpr) -> LanguageExpr {
    E::Intersect(Box::new(a), Box::new(b))
}

pub fn union(a: LanguageExpr, b: LanguageExpr) -> LanguageExpr {
    E::Union(Box::new(a), Box::new(b))
}

pub fn reverse(e: LanguageExpr) -> LanguageExpr {
    E::Reverse(Box::new(e))
}

pub fn many_one(m: &Arc<Machine>, e: LanguageExpr) -> LanguageExpr {
    E::ManyOne(m.clone(), Box::new(e))
}

pub fn turing(m: &Arc<Machine>, e: LanguageExpr) -> LanguageExpr {
    E::Turing(m.clone(), Box::new(e))
}

pub fn ktt(m: &Arc<Machine>, table: &Arc<Machine>, e: LanguageExpr) -> LanguageExpr {
    E::Ktt(m.clone(), table.clone(), Box::new(e))
}

pub fn dyck(d: usize) -> LanguageExpr {
    E::Dyck(DyckAlphabet::standard(d))
}

pub fn dyck_ext(d: usize) -> LanguageExpr {
    E::DyckExt(vec![DyckAlphabet::standard(1); d])
}

pub fn finite(alphabet: &[Symbol], words: impl IntoIterator<Item = Word>) -> LanguageExpr {
    E::Finite { alphabet: alphabet.to_vec(), words: words.into_iter().collect() }
}

fn merge(a: Vec<Symbol>, b: Vec<Symbol>) -> Vec<Symbol> {
    let mut seen: HashSet<Symbol> = a.iter().cloned().collect();
    let mut out = a;
    out.extend(b.into_iter().filter(|s| seen.insert(s.clone())));
    out
}

/// All `d`-track columns over the given extended alphabets.
pub fn track_alphabet(tracks: &[DyckAlphabet]) -> Vec<Symbol> {
    let mut cols: Vec<Vec<Symbol>> = vec![Vec::new()];
    for t in tracks {
        let mut ext = t.symbols();
        ext.push(Symbol::natural());
        cols = cols
            .into_iter()
            .flat_map(|c| {
                ext.iter().map(move |s| {
                    let mut c = c.clone();
                    c.push(s.clone());
                    c
                })
            })
            .collect();
    }
    cols.iter().map(|c| Symbol::track(c)).collect()
}

impl LanguageExpr {
    /// The alphabet the expression is defined over.
    pub fn alphabet(&self) -> Vec<Symbol> {
        match self {
            E::Machine(m) | E::ManyOne(m, _) | E::Turing(m, _) | E::Ktt(m, _, _) => m.spec().input.clone(),
            E::Builtin(name) => crate::zoo::reference_alphabet(name).unwrap_or_default(),
            E::Finite { alphabet, .. } => alphabet.clone(),
            E::Complement(e) | E::Reverse(e) => e.alphabet(),
            E::Intersect(a, b) | E::Union(a, b) => merge(a.alphabet(), b.alphabet()),
            E::Dyck(a) => a.symbols(),
            E::DyckExt(ts) => track_alphabet(ts),
        }
    }

    /// True when `s` can occur in words of the expression's alphabet. Cheaper
    /// than materialising the alphabet for track languages.
    pub fn admits(&self, s: &Symbol) -> bool {
        match self {
            E::DyckExt(ts) => s.components().is_some_and(|c| {
                c.len() == ts.len()
                    && c.iter().zip(ts).all(|(x, t)| x.is_natural() || t.classify(x).is_some())
            }),
            E::Intersect(a, b) | E::Union(a, b) => a.admits(s) || b.admits(s),
            E::Complement(e) | E::Reverse(e) => e.admits(s),
            _ => self.alphabet().contains(s),
        }
    }

    /// Number of expression nodes.
    pub fn size(&self) -> usize {
        1 + match self {
            E::Complement(e) | E::Reverse(e) | E::ManyOne(_, e) | E::Turing(_, e) | E::Ktt(_, _, e) => e.size(),
            E::Intersect(a, b) | E::Union(a, b) => a.size() + b.size(),
            _ => 0,
        }
    }

    /// Every machine referenced by the expression, outermost first.
    pub fn machines(&self) -> Vec<Arc<Machine>> {
        let mut out = Vec::new();
        self.collect_machines(&mut out);
        out
    }

    fn collect_machines(&self, out: &mut Vec<Arc<Machine>>) {
        match self {
            E::Machine(m) => out.push(m.clone()),
            E::ManyOne(m, e) | E::Turing(m, e) => {
                out.push(m.clone());
                e.collect_machines(out);
            }
            E::Ktt(m, t, e) => {
                out.push(m.clone());
                out.push(t.clone());
                e.collect_machines(out);
            }
            E::Complement(e) | E::Reverse(e) => e.collect_machines(out),
            E::Intersect(a, b) | E::Union(a, b) => {
                a.collect_machines(out);
                b.collect_machines(out);
            }
            _ => {}
        }
    }
}

impl fmt::Display for LanguageExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

/// Prefix viability for Dyck-shaped oracles: `false` means no extension of
/// `prefix` is in the language.
pub fn prefix_viable(e: &LanguageExpr, prefix: &[Symbol]) -> bool {
    match e {
        E::Dyck(a) => a.scan(prefix).is_some(),
        E::DyckExt(ts) => {
            let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); ts.len()];
            for col in prefix {
                let Some(parts) = col.components() else { return false };
                if parts.len() != ts.len() {
                    return false;
                }
                for ((p, t), st) in parts.iter().zip(ts).zip(stacks.iter_mut()) {
                    if p.is_natural() {
                        continue;
                    }
                    match t.classify(p) {
                        Some((i, true)) => st.push(i),
                        Some((i, false)) => {
                            if st.pop() != Some(i) {
                                return false;
                            }
                        }
                        None => return false,
                    }
                }
            }
            true
        }
        E::Intersect(a, b) => prefix_viable(a, prefix) && prefix_viable(b, prefix),
        _ => true,
    }
}

/// Does the expression support non-trivial prefix pruning?
pub(crate) fn prunable(e: &LanguageExpr) -> bool {
    match e {
        E::Dyck(_) | E::DyckExt(_) => true,
        E::Intersect(a, b) => prunable(a) || prunable(b),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::word;

    #[test]
    fn dyck_alphabet_order() {
        let a = DyckAlphabet::standard(2);
        let s: Vec<String> = a.symbols().iter().map(|s| s.to_string()).collect();
        assert_eq!(s, ["a1", "a1'", "a2", "a2'"]);
    }

    #[test]
    fn dyck_membership() {
        let a = DyckAlphabet::standard(2);
        assert!(a.member(&word("a1 a2 a2' a1'")));
        assert!(!a.member(&word("a1 a2 a1' a2'")));
        assert!(a.member(&[]));
        assert_eq!(a.scan(&word("a1 a2")), Some(2));
    }

    #[test]
    fn track_prefix_viability() {
        let e = dyck_ext(2);
        let a = Symbol::lit("a1");
        let c = a.primed();
        let n = Symbol::natural();
        let good = vec![Symbol::track(&[a.clone(), n.clone()]), Symbol::track(&[c.clone(), a.clone()])];
        assert!(prefix_viable(&e, &good));
        let bad = vec![Symbol::track(&[c, n])];
        assert!(!prefix_viable(&e, &bad));
        assert!(e.admits(&good[0]));
        assert_eq!(e.alphabet().len(), 9);
    }
}
