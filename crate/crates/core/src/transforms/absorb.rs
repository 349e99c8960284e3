use std::collections::{BTreeSet, VecDeque};

use crate::machine::{total_dfa_violations, Kind, MachineSpec, OracleMode, Read, Rule};
use crate::symbol::Symbol;
use crate::{Error, Result};

use super::normal::{phases, split_phases};
use super::{pair, require_oracle_free, Builder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    /// inner machine has not read ¢ yet
    Pre,
    Run,
    /// outer machine accepted, inner is finishing after `$`
    Fin,
    /// inner machine accepted
    Done,
}

impl Phase {
    fn tag(self) -> &'static str {
        match self {
            Phase::Pre => "pre",
            Phase::Run => "run",
            Phase::Fin => "fin",
            Phase::Done => "done",
        }
    }
}

fn blank(tapes: usize) -> Vec<Option<Symbol>> {
    vec![None; tapes]
}

/// Composes two many-one reducers: the inner nfa reducer reads the outer
/// reducer's query word as it is written.
pub fn absorb_nfa(outer: &MachineSpec, inner: &MachineSpec) -> Result<MachineSpec> {
    if outer.oracle != OracleMode::ManyOne || outer.tape_count() != 1 {
        return Err(Error::Precondition(format!("`{}` must be a one-tape many-one reducer", outer.name)));
    }
    if inner.kind == Kind::Npda || inner.oracle != OracleMode::ManyOne {
        return Err(Error::Precondition(format!("`{}` must be an nfa many-one reducer", inner.name)));
    }
    if let Some(s) = outer.query[0].iter().find(|s| !inner.input.contains(s)) {
        return Err(Error::QueryAlphabet(format!(
            "`{}` writes `{s}` outside the input alphabet of `{}`",
            outer.name, inner.name
        )));
    }
    let tapes = inner.tape_count();
    let mut b = Builder::new(&format!("{}_then_{}", outer.name, inner.name), outer.kind);
    b.spec.input = outer.input.clone();
    b.spec.stack = outer.stack.clone();
    b.spec.query = inner.query.clone();
    b.spec.oracle = OracleMode::ManyOne;
    let name = |p: &str, q: &str, ph: Phase| pair(&[p, q, ph.tag()]);
    let ph0 = if inner.reads_cent() { Phase::Pre } else { Phase::Run };
    b.spec.start = name(&outer.start, &inner.start, ph0);

    let mut queue = VecDeque::from([(outer.start.clone(), inner.start.clone(), ph0)]);
    let mut seen = BTreeSet::new();
    let emit_to = |b: &mut Builder, queue: &mut VecDeque<(String, String, Phase)>, from: &str, read: Read, top: Option<Symbol>, push: Vec<Symbol>, emit: Vec<Option<Symbol>>, p: &str, q: &str, ph: Phase| {
        if inner.reject.contains(q) || outer.reject.contains(p) {
            return;
        }
        let ph = if inner.accept.contains(q) { Phase::Done } else { ph };
        let to = name(p, q, ph);
        if outer.accept.contains(p) && ph == Phase::Done {
            b.spec.accept.insert(to.clone());
        }
        b.add(from, read, top, &to, push, emit);
        queue.push_back((p.to_owned(), q.to_owned(), ph));
    };

    while let Some((p, q, ph)) = queue.pop_front() {
        if !seen.insert((p.clone(), q.clone(), ph)) {
            continue;
        }
        let here = name(&p, &q, ph);
        if b.spec.accept.contains(&here) {
            continue;
        }
        // inner moves that do not consume outer output
        if ph != Phase::Done {
            for r in inner.rules.iter().filter(|r| r.from == q) {
                let next = match (&r.read, ph) {
                    (Read::Lambda, _) => ph,
                    (Read::Cent, Phase::Pre) => Phase::Run,
                    (Read::Dollar, Phase::Run) if outer.accept.contains(&p) => Phase::Fin,
                    _ => continue,
                };
                emit_to(&mut b, &mut queue, &here, Read::Lambda, None, Vec::new(), r.emit.clone(), &p, &r.to, next);
            }
        }
        if ph == Phase::Fin || outer.accept.contains(&p) {
            continue;
        }
        for r in outer.rules.iter().filter(|r| r.from == p) {
            match (&r.emit[0], ph) {
                (None, _) | (Some(_), Phase::Done) => {
                    emit_to(&mut b, &mut queue, &here, r.read.clone(), r.top.clone(), r.push.clone(), blank(tapes), &r.to, &q, ph);
                }
                (Some(e), Phase::Run) => {
                    for ir in inner.rules.iter().filter(|ir| ir.from == q && ir.read == Read::Sym(e.clone())) {
                        emit_to(&mut b, &mut queue, &here, r.read.clone(), r.top.clone(), r.push.clone(), ir.emit.clone(), &r.to, &ir.to, Phase::Run);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(b.spec)
}

/// Start state of a dfa after its optional ¢-move.
fn dfa_start(r: &MachineSpec) -> String {
    r.rules
        .iter()
        .find(|x| x.from == r.start && x.read == Read::Cent)
        .map_or_else(|| r.start.clone(), |x| x.to.clone())
}

const ACC: &str = "ACC";
const REJ: &str = "REJ";

/// Replaces queries to a total dfa by running the dfa in the finite control.
/// Bounded-truth-table reducers are not supported.
pub fn absorb_regular_oracle(m: &MachineSpec, r: &MachineSpec, mode: OracleMode) -> Result<MachineSpec> {
    if m.oracle != mode {
        return Err(Error::Precondition(format!("`{}` is a {} reducer, not {}", m.name, m.oracle, mode)));
    }
    if !matches!(mode, OracleMode::ManyOne | OracleMode::Turing) {
        return Err(Error::Precondition(format!("mode {mode} is not supported")));
    }
    if m.tape_count() != 1 {
        return Err(Error::Precondition(format!("`{}` must have one query tape", m.name)));
    }
    let v = total_dfa_violations(r);
    if !v.is_empty() {
        return Err(Error::Precondition(format!(
            "oracle `{}` is not a total dfa: {}",
            r.name,
            v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
        )));
    }
    let step = |s: &str, a: &Read| -> String {
        if s == ACC || s == REJ {
            return s.to_owned();
        }
        let to = r.rules.iter().find(|x| x.from == s && &x.read == a).map(|x| x.to.clone());
        match to {
            Some(t) if r.accept.contains(&t) => ACC.into(),
            Some(t) if r.reject.contains(&t) => REJ.into(),
            Some(t) => t,
            None => REJ.into(),
        }
    };
    let answer = |s: &str| step(s, &Read::Dollar) == ACC;
    let r0 = dfa_start(r);

    let mut b = Builder::new(&format!("{}_with_{}", m.name, r.name), m.kind);
    b.spec.input = m.input.clone();
    b.spec.stack = m.stack.clone();
    b.spec.start = pair(&[&m.start, &r0]);
    let acc = b.claim("acc");
    b.spec.accept.insert(acc.clone());
    let turing = m.turing.clone();

    let mut queue = VecDeque::from([(m.start.clone(), r0.clone())]);
    let mut seen = BTreeSet::new();
    while let Some((p, s)) = queue.pop_front() {
        if !seen.insert((p.clone(), s.clone())) {
            continue;
        }
        let here = pair(&[&p, &s]);
        if m.accept.contains(&p) {
            if mode == OracleMode::Turing || answer(&s) {
                b.add(&here, Read::Lambda, None, &acc, Vec::new(), Vec::new());
            }
            continue;
        }
        if let Some(t) = turing.as_ref().filter(|t| t.query == p) {
            let to = if answer(&s) { &t.yes } else { &t.no };
            b.add(&here, Read::Lambda, None, &pair(&[to, &r0]), Vec::new(), Vec::new());
            queue.push_back((to.clone(), r0.clone()));
            continue;
        }
        for rule in m.rules.iter().filter(|x| x.from == p) {
            if m.reject.contains(&rule.to) {
                continue;
            }
            let s2 = match &rule.emit[0] {
                Some(e) => step(&s, &Read::Sym(e.clone())),
                None => s.clone(),
            };
            if mode == OracleMode::ManyOne && s2 == REJ {
                continue;
            }
            b.rule(Rule {
                from: here.clone(),
                read: rule.read.clone(),
                top: rule.top.clone(),
                to: pair(&[&rule.to, &s2]),
                push: rule.push.clone(),
                emit: Vec::new(),
                weight: None,
            });
            queue.push_back((rule.to.clone(), s2));
        }
    }
    Ok(b.spec)
}

/// A many-one reducer that writes its input verbatim and accepts when the
/// given machine does.
pub fn copy_input_reducer(m: &MachineSpec) -> Result<MachineSpec> {
    require_oracle_free(m)?;
    let m = split_phases(m);
    let ph = phases(&m);
    for (i, r) in m.rules.iter().enumerate() {
        if m.accept.contains(&r.to) && r.read != Read::Dollar && !ph.post_only(&r.from) {
            return Err(Error::Precondition(format!(
                "`{}` halts before `$` in rule {} ({} -> {})",
                m.name,
                i + 1,
                r.from,
                r.to
            )));
        }
    }
    let mut out = m.clone();
    out.name = format!("{}_copy", m.name);
    out.oracle = OracleMode::ManyOne;
    out.query = vec![m.input.clone()];
    for r in &mut out.rules {
        r.emit = vec![match &r.read {
            Read::Sym(a) => Some(a.clone()),
            _ => None,
        }];
    }
    Ok(out)
}

pub fn identity_copier(input: &[Symbol]) -> MachineSpec {
    let mut m = MachineSpec::new("copy", Kind::Nfa);
    m.input = input.to_vec();
    m.query = vec![input.to_vec()];
    m.oracle = OracleMode::ManyOne;
    m.accept.insert("acc".into());
    for a in input {
        m.rules.push(Rule {
            from: "q0".into(),
            read: Read::Sym(a.clone()),
            top: None,
            to: "q0".into(),
            push: Vec::new(),
            emit: vec![Some(a.clone())],
            weight: None,
        });
    }
    m.rules.push(Rule {
        from: "q0".into(),
        read: Read::Dollar,
        top: None,
        to: "acc".into(),
        push: Vec::new(),
        emit: vec![None],
        weight: None,
    });
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, Decider, LanguageExpr};
    use crate::sim::machine;
    use crate::symbol::length_lex;

    fn dup2_reducer() -> MachineSpec {
        // writes x^R ♮ y for a guessed split x y of the input
        let mut m = MachineSpec::new("dup2r", Kind::Npda)
            .with_input("0 1")
            .with_stack("Z 0 1")
            .with_query("0 1 <natural>")
            .with_oracle(OracleMode::ManyOne)
            .with_accept("acc");
        m.t("q0", "0", "-", "q0", "0", "-")
            .t("q0", "1", "-", "q0", "1", "-")
            .t("q0", "-", "-", "p", "-", "-")
            .t("p", "-", "0", "p", "-", "0")
            .t("p", "-", "1", "p", "-", "1")
            .t("p", "-", "Z", "r", "Z", "<natural>")
            .t("r", "0", "-", "r", "-", "0")
            .t("r", "1", "-", "r", "-", "1")
            .t("r", "$", "-", "acc", "-", "-");
        m
    }

    fn eq_rev() -> MachineSpec {
        // { u ♮ v : u^R = v }
        let mut m = MachineSpec::new("eqrev", Kind::Npda)
            .with_input("0 1 <natural>")
            .with_stack("Z 0 1")
            .with_accept("acc");
        m.t("q0", "0", "-", "q0", "0", "-")
            .t("q0", "1", "-", "q0", "1", "-")
            .t("q0", "<natural>", "-", "p", "-", "-")
            .t("p", "0", "0", "p", "-", "-")
            .t("p", "1", "1", "p", "-", "-")
            .t("p", "$", "Z", "acc", "-", "-");
        m
    }

    fn flipper() -> MachineSpec {
        let mut m = MachineSpec::new("flip", Kind::Nfa)
            .with_input("0 1 <natural>")
            .with_query("0 1 <natural>")
            .with_oracle(OracleMode::ManyOne)
            .with_accept("acc");
        m.t("q0", "0", "-", "q0", "-", "1")
            .t("q0", "1", "-", "q0", "-", "0")
            .t("q0", "<natural>", "-", "q0", "-", "<natural>")
            .t("q0", "$", "-", "acc", "-", "-");
        m
    }

    #[test]
    fn dup2_through_flipper() {
        let r = machine(absorb_nfa(&dup2_reducer(), &flipper()).unwrap());
        let oracle = oracle::machine(&machine(eq_rev()));
        let dec = Decider::default();
        for w in length_lex(&r.spec().input, 8) {
            let flipped: Vec<Symbol> = w
                .iter()
                .map(|s| Symbol::lit(if s.as_str() == "0" { "1" } else { "0" }))
                .collect();
            let half = flipped.len() / 2;
            let expect = flipped.len().is_multiple_of(2) && flipped[..half] == flipped[half..];
            assert_eq!(dec.decide_many_one(&r, &oracle, &w).unwrap(), expect, "{w:?}");
        }
    }

    #[test]
    fn identity_inner_is_neutral() {
        let outer = dup2_reducer();
        let r = machine(absorb_nfa(&outer, &identity_copier(&outer.query[0])).unwrap());
        let o = machine(outer);
        let oracle = oracle::machine(&machine(eq_rev()));
        let dec = Decider::default();
        for w in length_lex(&o.spec().input, 7) {
            assert_eq!(dec.decide_many_one(&r, &oracle, &w).unwrap(), dec.decide_many_one(&o, &oracle, &w).unwrap());
        }
    }

    fn parity_dfa() -> MachineSpec {
        // accepts words over {0,1} with an even number of 1s
        let mut m = MachineSpec::new("even1", Kind::Dfa).with_input("0 1").with_accept("acc").with_reject("rej");
        m.t("q0", "0", "-", "q0", "-", "-")
            .t("q0", "1", "-", "q1", "-", "-")
            .t("q1", "0", "-", "q1", "-", "-")
            .t("q1", "1", "-", "q0", "-", "-")
            .t("q0", "$", "-", "acc", "-", "-")
            .t("q1", "$", "-", "rej", "-", "-");
        m
    }

    #[test]
    fn regular_oracle_many_one() {
        let m = identity_copier(&[Symbol::lit("0"), Symbol::lit("1")]);
        let r = machine(absorb_regular_oracle(&m, &parity_dfa(), OracleMode::ManyOne).unwrap());
        for w in length_lex(&r.spec().input, 8) {
            let ones = w.iter().filter(|s| s.as_str() == "1").count();
            assert_eq!(r.accepts_default(&w).unwrap(), ones % 2 == 0);
        }
    }

    #[test]
    fn regular_oracle_turing() {
        // queries every prefix ending in 1 and accepts iff the last answer was yes
        let mut m = MachineSpec::new("tq", Kind::Nfa)
            .with_input("0 1")
            .with_query("0 1")
            .with_turing("qq", "qy", "qn")
            .with_accept("acc")
            .with_reject("rej");
        m.t("q0", "0", "-", "q0", "-", "0")
            .t("q0", "1", "-", "qq", "-", "1")
            .t("qy", "-", "-", "q0", "-", "-")
            .t("qn", "-", "-", "q0", "-", "-")
            .t("q0", "$", "-", "acc", "-", "-");
        let a = machine(absorb_regular_oracle(&m, &parity_dfa(), OracleMode::Turing).unwrap());
        let tm = machine(m);
        let oracle = oracle::machine(&machine(parity_dfa()));
        let dec = Decider::default();
        for w in length_lex(&tm.spec().input, 8) {
            assert_eq!(a.accepts_default(&w).unwrap(), dec.decide_turing(&tm, &oracle, &w).unwrap());
        }
        assert!(absorb_regular_oracle(&tm.spec().clone(), &parity_dfa(), OracleMode::ManyOne).is_err());
    }

    #[test]
    fn copy_reducer_intersects() {
        let mut m1 = MachineSpec::new("m1", Kind::Npda).with_input("0 1").with_stack("Z").with_accept("acc");
        m1.t("q0", "0", "-", "q0", "-", "-").t("q0", "$", "-", "acc", "-", "-");
        let c = machine(copy_input_reducer(&m1).unwrap());
        let ends1 = LanguageExpr::Finite {
            alphabet: vec![Symbol::lit("0"), Symbol::lit("1")],
            words: [vec![], vec![Symbol::lit("0")], vec![Symbol::lit("0"), Symbol::lit("0")]].into_iter().collect(),
        };
        let dec = Decider::default();
        for w in length_lex(&c.spec().input, 5) {
            let expect = w.len() <= 2 && w.iter().all(|s| s.as_str() == "0");
            assert_eq!(dec.decide_many_one(&c, &ends1, &w).unwrap(), expect);
        }
        let mut early = m1.clone();
        early.t("q0", "1", "-", "acc", "-", "-");
        assert!(copy_input_reducer(&early).is_err());
    }
}
