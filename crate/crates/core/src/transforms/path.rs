use crate::machine::{MachineSpec, OracleMode, Read};
use crate::symbol::{Symbol, Word};
use crate::{Error, Result};

use super::{pair, Builder};

/// The tape symbol naming rule `i` (1-based, file order).
pub fn rule_token(i: usize) -> Symbol {
    Symbol::lit(&format!("r{}", i + 1))
}

/// Path-emitting reducer and the deterministic replayer for its encodings.
#[derive(Clone, Debug)]
pub struct PathEncoding {
    /// writes the rule index of every move it makes
    pub emitter: MachineSpec,
    /// reads two-track columns (input symbol or ♮, rule token or ♮) and
    /// accepts iff they spell an accepting path; writes the original outputs
    pub replayer: MachineSpec,
}

/// Builds both machines for an oracle-free or many-one npda.
pub fn encode_path_reducer(m: &MachineSpec) -> Result<PathEncoding> {
    if m.oracle == OracleMode::Turing || matches!(m.oracle, OracleMode::Ktt(_)) {
        return Err(Error::Precondition(format!("`{}` must be oracle-free or many-one", m.name)));
    }
    let tokens: Vec<Symbol> = (0..m.rules.len()).map(rule_token).collect();
    if tokens.is_empty() {
        return Err(Error::Precondition(format!("`{}` has no rules", m.name)));
    }

    let mut emitter = m.clone();
    emitter.name = format!("{}_path", m.name);
    emitter.oracle = OracleMode::ManyOne;
    emitter.query = vec![tokens.clone()];
    for (i, r) in emitter.rules.iter_mut().enumerate() {
        r.emit = vec![Some(rule_token(i))];
    }

    let nat = Symbol::natural();
    let col = |a: &Symbol, t: &Symbol| Symbol::track(&[a.clone(), t.clone()]);
    let tapes = m.tape_count();
    let mut b = Builder::new(&format!("{}_replay", m.name), m.kind);
    for q in m.states() {
        for tag in ["pre", "mid", "post"] {
            b.claim(&pair(&[&q, tag]));
        }
    }
    let mut input = Vec::new();
    for a in m.input.iter().chain([&nat]) {
        for t in tokens.iter().chain([&nat]) {
            input.push(col(a, t));
        }
    }
    b.spec.input = input;
    b.spec.stack = m.stack.clone();
    b.spec.query = m.query.clone();
    b.spec.oracle = m.oracle;
    let first = if m.reads_cent() { "pre" } else { "mid" };
    b.spec.start = pair(&[&m.start, first]);
    let done = b.fresh("done");
    let fin = b.fresh("fin");
    let acc = b.fresh("acc");
    b.spec.accept.insert(acc.clone());

    for (i, r) in m.rules.iter().enumerate() {
        let tok = &tokens[i];
        let moves: Vec<(&str, Symbol, &str)> = match &r.read {
            Read::Sym(a) => vec![("mid", col(a, tok), "mid")],
            Read::Cent => vec![("pre", col(&nat, tok), "mid")],
            Read::Dollar => vec![("mid", col(&nat, tok), "post")],
            Read::Lambda => ["pre", "mid", "post"].iter().map(|p| (*p, col(&nat, tok), *p)).collect(),
        };
        for (from_tag, c, to_tag) in moves {
            let to = match (m.accept.contains(&r.to), to_tag) {
                // once `$` is read no input symbol may follow
                (true, "post") => fin.clone(),
                (true, _) => done.clone(),
                _ => pair(&[&r.to, to_tag]),
            };
            if m.reject.contains(&r.to) {
                continue;
            }
            b.add(&pair(&[&r.from, from_tag]), Read::Sym(c), r.top.clone(), &to, r.push.clone(), r.emit.clone());
        }
    }
    let quiet = vec![None; tapes];
    for a in &m.input {
        b.add(&done, Read::Sym(col(a, &nat)), None, &done, Vec::new(), quiet.clone());
    }
    b.add(&done, Read::Dollar, None, &acc, Vec::new(), quiet.clone());
    b.add(&fin, Read::Dollar, None, &acc, Vec::new(), quiet);
    if m.accept.contains(&m.start) {
        b.spec.start = done;
    }
    Ok(PathEncoding { emitter, replayer: b.spec })
}

/// The column word for a rule-index path of `m` on `x`. Input symbols left
/// unread when the path accepts early are appended with a blank rule track.
pub fn encode_path(m: &MachineSpec, x: &[Symbol], path: &[usize]) -> Result<Word> {
    let nat = Symbol::natural();
    let mut out = Vec::new();
    let mut pos = 0;
    for &i in path {
        let r = m.rules.get(i).ok_or_else(|| Error::Precondition(format!("no rule {}", i + 1)))?;
        let a = match &r.read {
            Read::Sym(a) => {
                pos += 1;
                a.clone()
            }
            _ => nat.clone(),
        };
        out.push(Symbol::track(&[a, rule_token(i)]));
    }
    for a in x.iter().skip(pos) {
        out.push(Symbol::track(&[a.clone(), nat.clone()]));
    }
    Ok(out)
}
