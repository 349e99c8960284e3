//! Machine-to-machine constructions.

mod absorb;
mod closure;
mod dyck;
mod normal;
mod path;
mod turing;

use std::collections::HashSet;

pub use absorb::{absorb_nfa, absorb_regular_oracle, copy_input_reducer, identity_copier};
pub use closure::{
    concat_m, homomorphism_m, inv_homomorphism_m, literal_machine, reverse_m, star_m, substitute_m, union_m,
};
pub use dyck::{absorb_dpda_oracle, dyck_checker, dyckify, product_reducer, Dyckified};
pub use normal::{check_normalized, normalize_end, phases, Phases};
pub use path::{encode_path, encode_path_reducer, rule_token, PathEncoding};
pub use turing::{flip_answers, guess_answers, guess_verifier, GuessedAnswers};

pub use crate::symbol::natural_extensions;

use crate::machine::{Kind, MachineSpec, Read, Rule};
use crate::symbol::Symbol;

/// Incremental construction of a machine with fresh-state bookkeeping.
pub(crate) struct Builder {
    pub spec: MachineSpec,
    taken: HashSet<String>,
    seen_rules: HashSet<String>,
}

impl Builder {
    pub fn new(name: &str, kind: Kind) -> Self {
        Builder { spec: MachineSpec::new(name, kind), taken: HashSet::new(), seen_rules: HashSet::new() }
    }

    pub fn claim(&mut self, q: &str) -> String {
        self.taken.insert(q.to_owned());
        q.to_owned()
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let q = MachineSpec::fresh_state(&self.taken, base);
        self.taken.insert(q.clone());
        q
    }

    /// Adds a rule unless an identical one exists. An empty emit list means
    /// no output on any tape.
    pub fn rule(&mut self, mut r: Rule) {
        if r.emit.is_empty() && !self.spec.query.is_empty() {
            r.emit = vec![None; self.spec.query.len()];
        }
        let key = format!("{r:?}");
        if self.seen_rules.insert(key) {
            self.taken.insert(r.from.clone());
            self.taken.insert(r.to.clone());
            self.spec.rules.push(r);
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn add(&mut self, from: &str, read: Read, top: Option<Symbol>, to: &str, push: Vec<Symbol>, emit: Vec<Option<Symbol>>) {
        self.rule(Rule { from: from.to_owned(), read, top, to: to.to_owned(), push, emit, weight: None });
    }

    /// A move followed by λ-moves so that one tape receives `emits` one
    /// symbol per step. The stack action happens on the first move.
    #[allow(clippy::too_many_arguments)]
    pub fn chain(&mut self, from: &str, read: Read, top: Option<Symbol>, to: &str, push: Vec<Symbol>, emits: &[Symbol], tapes: usize) {
        let one = |s: Option<&Symbol>| -> Vec<Option<Symbol>> {
            if tapes == 0 {
                Vec::new()
            } else {
                let mut v = vec![None; tapes];
                v[0] = s.cloned();
                v
            }
        };
        if emits.len() <= 1 {
            self.add(from, read, top, to, push, one(emits.first()));
            return;
        }
        let mut cur = self.fresh(&format!("{to}~"));
        self.add(from, read, top, &cur, push, one(emits.first()));
        for (i, e) in emits.iter().enumerate().skip(1) {
            let next = if i + 1 == emits.len() { to.to_owned() } else { self.fresh(&format!("{to}~")) };
            self.add(&cur, Read::Lambda, None, &next, Vec::new(), one(Some(e)));
            cur = next;
        }
    }
}

/// Joins component names into a product state name.
pub(crate) fn pair(parts: &[&str]) -> String {
    parts.join("|")
}

pub(crate) fn require_oracle_free(m: &MachineSpec) -> crate::Result<()> {
    if m.oracle != crate::machine::OracleMode::None || !m.query.is_empty() {
        return Err(crate::Error::Precondition(format!("`{}` must be oracle-free", m.name)));
    }
    Ok(())
}
