use crate::machine::{Kind, Machine, MachineSpec, OracleMode, Read};
use crate::oracle::{self, LanguageExpr};
use crate::symbol::Symbol;
use crate::{Error, Result};

use super::{pair, Builder};

fn require_turing(m: &MachineSpec) -> Result<()> {
    if m.oracle != OracleMode::Turing || m.turing.is_none() {
        return Err(Error::Precondition(format!("`{}` is not a Turing reducer", m.name)));
    }
    Ok(())
}

/// Swaps the yes and no answer states.
pub fn flip_answers(m: &MachineSpec) -> Result<MachineSpec> {
    require_turing(m)?;
    let mut out = m.clone();
    let t = out.turing.as_mut().expect("checked");
    std::mem::swap(&mut t.yes, &mut t.no);
    Ok(out)
}

/// A many-one reducer that writes `b1 y1 ♮ b2 y2 ♮ ...` where `y_i` are the
/// queries of a Turing reducer and `b_i` guessed answers, plus the two
/// selector machines used to check the guesses.
#[derive(Clone, Debug)]
pub struct GuessedAnswers {
    pub reducer: MachineSpec,
    /// writes the query of one segment whose bit is `1`
    pub select_yes: MachineSpec,
    /// writes the query of one segment whose bit is `0`
    pub select_no: MachineSpec,
}

fn bit(b: bool) -> Symbol {
    Symbol::lit(if b { "1" } else { "0" })
}

fn selector(out: &[Symbol], query: &[Symbol], b: bool) -> MachineSpec {
    let nat = Symbol::natural();
    let mut m = MachineSpec::new(if b { "select_yes" } else { "select_no" }, Kind::Nfa);
    m.input = out.to_vec();
    m.query = vec![query.to_vec()];
    m.oracle = OracleMode::ManyOne;
    m.accept.insert("acc".into());
    let mut b_ = Builder::new(&m.name, Kind::Nfa);
    let quiet = vec![None];
    for c in [false, true] {
        b_.add("s", Read::Sym(bit(c)), None, "k", Vec::new(), quiet.clone());
        if c == b {
            b_.add("s", Read::Sym(bit(c)), None, "c", Vec::new(), quiet.clone());
        }
    }
    for q in query {
        b_.add("k", Read::Sym(q.clone()), None, "k", Vec::new(), quiet.clone());
        b_.add("c", Read::Sym(q.clone()), None, "c", Vec::new(), vec![Some(q.clone())]);
    }
    b_.add("k", Read::Sym(nat.clone()), None, "s", Vec::new(), quiet.clone());
    b_.add("c", Read::Sym(nat), None, "d", Vec::new(), quiet.clone());
    for a in out {
        b_.add("d", Read::Sym(a.clone()), None, "d", Vec::new(), quiet.clone());
    }
    b_.add("d", Read::Dollar, None, "acc", Vec::new(), quiet);
    m.start = "s".into();
    m.rules = b_.spec.rules;
    m
}

/// Turns a one-tape Turing reducer into a many-one reducer that guesses
/// every oracle answer. A query left unfinished at acceptance is closed with
/// a guessed bit as well.
pub fn guess_answers(m: &MachineSpec) -> Result<GuessedAnswers> {
    require_turing(m)?;
    if m.tape_count() != 1 {
        return Err(Error::Precondition(format!("`{}` must have one query tape", m.name)));
    }
    let nat = Symbol::natural();
    let query = m.query[0].clone();
    if query.contains(&nat) {
        return Err(Error::Precondition(format!("`{}` queries may not contain `{nat}`", m.name)));
    }
    let mut out = query.clone();
    for s in [bit(false), bit(true), nat.clone()] {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    let t = m.turing.clone().expect("checked");

    let mut b = Builder::new(&format!("{}_guess", m.name), m.kind);
    for q in m.states() {
        for tag in ["F", "B0", "B1"] {
            b.claim(&pair(&[&q, tag]));
        }
    }
    b.spec.input = m.input.clone();
    b.spec.stack = m.stack.clone();
    b.spec.query = vec![out.clone()];
    b.spec.oracle = OracleMode::ManyOne;
    b.spec.start = pair(&[&m.start, "F"]);
    let mode = |bit: Option<bool>| match bit {
        None => "F",
        Some(false) => "B0",
        Some(true) => "B1",
    };
    for q in &m.accept {
        b.spec.accept.insert(pair(&[q, "F"]));
    }
    for q in &m.reject {
        for tag in ["F", "B0", "B1"] {
            b.spec.reject.insert(pair(&[q, tag]));
        }
    }
    let modes = [None, Some(false), Some(true)];
    for r in &m.rules {
        for md in modes {
            let from = pair(&[&r.from, mode(md)]);
            match (&r.emit[0], md) {
                (None, _) => b.add(&from, r.read.clone(), r.top.clone(), &pair(&[&r.to, mode(md)]), r.push.clone(), vec![None]),
                (Some(y), None) => {
                    for g in [false, true] {
                        let to = pair(&[&r.to, mode(Some(g))]);
                        b.chain(&from, r.read.clone(), r.top.clone(), &to, r.push.clone(), &[bit(g), y.clone()], 1);
                    }
                }
                (Some(y), Some(_)) => {
                    b.add(&from, r.read.clone(), r.top.clone(), &pair(&[&r.to, mode(md)]), r.push.clone(), vec![Some(y.clone())])
                }
            }
        }
    }
    for g in [false, true] {
        let answer = pair(&[if g { &t.yes } else { &t.no }, "F"]);
        b.chain(&pair(&[&t.query, "F"]), Read::Lambda, None, &answer, Vec::new(), &[bit(g), nat.clone()], 1);
        b.add(&pair(&[&t.query, mode(Some(g))]), Read::Lambda, None, &answer, Vec::new(), vec![Some(nat.clone())]);
        for q in &m.accept {
            b.add(&pair(&[q, mode(Some(g))]), Read::Lambda, None, &pair(&[q, "F"]), Vec::new(), vec![Some(nat.clone())]);
        }
    }
    Ok(GuessedAnswers {
        reducer: b.spec,
        select_yes: selector(&out, &query, true),
        select_no: selector(&out, &query, false),
    })
}

/// Words whose guessed answers are all correct for `a`: no segment marked
/// `1` has its query outside `a`, and no segment marked `0` has it inside.
pub fn guess_verifier(g: &GuessedAnswers, a: LanguageExpr) -> Result<LanguageExpr> {
    let yes = Machine::new(g.select_yes.clone())?;
    let no = Machine::new(g.select_no.clone())?;
    Ok(oracle::intersect(
        oracle::complement(oracle::many_one(&yes, oracle::complement(a.clone()))),
        oracle::complement(oracle::many_one(&no, a)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Decider;
    use crate::sim::machine;
    use crate::symbol::{length_lex, word, Word};

    /// Queries its whole input and accepts iff the answer is yes.
    fn passthrough() -> MachineSpec {
        let mut m = MachineSpec::new("pass", Kind::Nfa)
            .with_input("0 1")
            .with_query("0 1")
            .with_turing("qq", "qy", "qn")
            .with_accept("acc")
            .with_reject("rej");
        m.t("q0", "0", "-", "q0", "-", "0")
            .t("q0", "1", "-", "q0", "-", "1")
            .t("q0", "$", "-", "qq", "-", "-")
            .t("qy", "-", "-", "acc", "-", "-")
            .t("qn", "-", "-", "rej", "-", "-");
        m
    }

    /// Queries each maximal block ending in 1 and accepts iff some answer was no.
    fn two_queries() -> MachineSpec {
        let mut m = MachineSpec::new("blocks", Kind::Nfa)
            .with_input("0 1")
            .with_query("0 1")
            .with_turing("qq", "qy", "qn")
            .with_accept("acc");
        m.t("q0", "0", "-", "q0", "-", "0")
            .t("q0", "1", "-", "qq", "-", "1")
            .t("qy", "-", "-", "q0", "-", "-")
            .t("qn", "-", "-", "f", "-", "-")
            .t("f", "0", "-", "f", "-", "-")
            .t("f", "1", "-", "f", "-", "-")
            .t("f", "$", "-", "acc", "-", "-");
        m
    }

    fn odd_length() -> LanguageExpr {
        let alphabet = vec![Symbol::lit("0"), Symbol::lit("1")];
        let words = length_lex(&alphabet, 9).filter(|w| w.len() % 2 == 1).collect::<Vec<_>>();
        oracle::finite(&alphabet, words)
    }

    #[test]
    fn flip_is_involution_and_complements() {
        let m = passthrough();
        assert_eq!(flip_answers(&flip_answers(&m).unwrap()).unwrap(), m);
        let f = machine(flip_answers(&m).unwrap());
        let m = machine(m);
        let a = odd_length();
        let dec = Decider::default();
        for w in length_lex(&m.spec().input, 6) {
            assert_eq!(
                dec.decide_turing(&f, &a, &w).unwrap(),
                dec.decide_turing(&m, &oracle::complement(a.clone()), &w).unwrap()
            );
        }
    }

    #[test]
    fn single_query_outputs() {
        let mut m = passthrough();
        m.rules.retain(|r| r.from != "qn");
        m.t("qn", "-", "-", "acc", "-", "-");
        let r = machine(guess_answers(&m).unwrap().reducer);
        let outs = r.valid_outputs(&word("01"), crate::RunBounds::for_len(2)).unwrap();
        let got: Vec<Word> = outs.into_iter().map(|mut o| o.remove(0)).collect();
        assert_eq!(got, [word("001♮"), word("101♮")]);
        // with the original machine only the yes-guess survives
        let r = machine(guess_answers(&passthrough()).unwrap().reducer);
        assert_eq!(r.valid_outputs(&word("01"), crate::RunBounds::for_len(2)).unwrap().len(), 1);
    }

    #[test]
    fn guessing_preserves_decisions() {
        for m in [passthrough(), two_queries()] {
            let g = guess_answers(&m).unwrap();
            let a = odd_length();
            let v = guess_verifier(&g, a.clone()).unwrap();
            let (tm, r) = (machine(m), machine(g.reducer));
            let dec = Decider::default();
            for w in length_lex(&tm.spec().input, 7) {
                assert_eq!(
                    dec.decide_many_one(&r, &v, &w).unwrap(),
                    dec.decide_turing(&tm, &a, &w).unwrap(),
                    "{} on {w:?}",
                    tm.name()
                );
            }
        }
    }
}
