use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::machine::{Kind, MachineSpec, OracleMode, Read, Rule};
use crate::oracle::LanguageExpr;
use crate::symbol::{Symbol, Word};
use crate::{Error, Result};

use super::dyck::{absorb_dpda_oracle, dyck_checker, dyckify};
use super::normal::defer_acceptance;
use super::{pair, require_oracle_free, Builder};

/// An nfa accepting exactly the given words.
pub fn literal_machine(name: &str, alphabet: &[Symbol], words: &[Word]) -> MachineSpec {
    let mut m = MachineSpec::new(name, Kind::Nfa);
    m.input = alphabet.to_vec();
    m.accept.insert("acc".into());
    let node = |prefix: &[Symbol]| {
        if prefix.is_empty() {
            "q0".to_owned()
        } else {
            format!("q.{}", prefix.iter().map(Symbol::as_str).collect::<Vec<_>>().join("."))
        }
    };
    let mut rules = BTreeSet::new();
    for w in words {
        for i in 0..w.len() {
            rules.insert((node(&w[..i]), Read::Sym(w[i].clone()), node(&w[..=i])));
        }
        rules.insert((node(w), Read::Dollar, "acc".to_owned()));
    }
    for (from, read, to) in rules {
        m.rules.push(Rule { from, read, top: None, to, push: Vec::new(), emit: Vec::new(), weight: None });
    }
    m
}

fn rename(prefix: &str, s: &Symbol) -> Symbol {
    Symbol::lit(&format!("{prefix}:{s}"))
}

/// Replaces every symbol `a` of words in `L(m)` by a word of `L(subs[a])`.
/// The result keeps a marker on its stack below the running substitution
/// machine and drains down to it once that machine accepts.
pub fn substitute_m(m: &MachineSpec, subs: &BTreeMap<Symbol, MachineSpec>) -> Result<MachineSpec> {
    require_oracle_free(m)?;
    for s in subs.values() {
        require_oracle_free(s)?;
    }
    if let Some(a) = m.input.iter().find(|a| !subs.contains_key(*a)) {
        return Err(Error::Precondition(format!("no substitution for `{a}`")));
    }
    let m = defer_acceptance(m);
    let subs: Vec<(Symbol, MachineSpec)> =
        m.input.iter().map(|a| (a.clone(), defer_acceptance(&subs[a]))).collect();

    let mut input: Vec<Symbol> = Vec::new();
    for (_, s) in &subs {
        for d in &s.input {
            if !input.contains(d) {
                input.push(d.clone());
            }
        }
    }
    let z = Symbol::lit("Z");
    let mark = Symbol::lit("mark");
    let mut stack = vec![z.clone(), mark.clone()];
    stack.extend(m.stack.iter().map(|s| rename("m", s)));
    let mut inner_syms = Vec::new();
    for (k, (_, s)) in subs.iter().enumerate() {
        for x in &s.stack {
            inner_syms.push(rename(&format!("s{k}"), x));
        }
    }
    stack.extend(inner_syms.iter().cloned());

    let mut b = Builder::new(&format!("{}_subst", m.name), Kind::Npda);
    b.spec.input = input;
    b.spec.stack = stack;
    let acc = b.claim("acc");
    b.spec.accept.insert(acc.clone());
    let start = b.claim("start");
    b.spec.start = start.clone();
    let outer = |p: &str| pair(&["m", p]);
    let inner = |p: &str, k: usize, q: &str, ph: &str| pair(&["s", p, &k.to_string(), q, ph]);
    let drain = |p: &str| pair(&["drain", p]);

    b.add(&start, Read::Lambda, None, &outer(&m.start), m.bottom().map(|s| rename("m", s)).into_iter().collect(), Vec::new());

    let mut drained = BTreeSet::new();
    for r in &m.rules {
        if m.reject.contains(&r.to) {
            continue;
        }
        let top = r.top.as_ref().map(|s| rename("m", s));
        let push: Vec<Symbol> = r.push.iter().map(|s| rename("m", s)).collect();
        let to = if m.accept.contains(&r.to) { acc.clone() } else { outer(&r.to) };
        match &r.read {
            Read::Sym(a) => {
                let k = subs.iter().position(|(x, _)| x == a).expect("checked");
                let s = &subs[k].1;
                let mut full = Vec::new();
                if let Some(zs) = s.bottom() {
                    full.push(rename(&format!("s{k}"), zs));
                }
                full.push(mark.clone());
                full.extend(push);
                let ph = if s.reads_cent() { "pre" } else { "mid" };
                b.add(&outer(&r.from), Read::Lambda, top, &inner(&r.to, k, &s.start, ph), full, Vec::new());
                if drained.insert(r.to.clone()) {
                    let d = drain(&r.to);
                    for x in &inner_syms {
                        b.add(&d, Read::Lambda, Some(x.clone()), &d, Vec::new(), Vec::new());
                    }
                    b.add(&d, Read::Lambda, Some(mark.clone()), &outer(&r.to), Vec::new(), Vec::new());
                }
            }
            read => b.add(&outer(&r.from), read.clone(), top, &to, push, Vec::new()),
        }
    }

    // Each substitution machine runs inside every outer target state it can
    // be started from.
    let mut targets: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for r in &m.rules {
        if let Read::Sym(a) = &r.read {
            let k = subs.iter().position(|(x, _)| x == a).expect("checked");
            targets.entry(k).or_default().insert(r.to.clone());
        }
    }
    for (k, ps) in targets {
        let s = &subs[k].1;
        let tag = format!("s{k}");
        for p in ps {
            for r in &s.rules {
                if s.reject.contains(&r.to) {
                    continue;
                }
                let top = r.top.as_ref().map(|x| rename(&tag, x));
                let push: Vec<Symbol> = r.push.iter().map(|x| rename(&tag, x)).collect();
                let moves: Vec<(&str, Read, &str)> = match &r.read {
                    Read::Sym(d) => vec![("mid", Read::Sym(d.clone()), "mid")],
                    Read::Cent => vec![("pre", Read::Lambda, "mid")],
                    Read::Dollar => vec![("mid", Read::Lambda, "post")],
                    Read::Lambda => vec![("pre", Read::Lambda, "pre"), ("mid", Read::Lambda, "mid"), ("post", Read::Lambda, "post")],
                };
                for (f, read, t) in moves {
                    let to = if s.accept.contains(&r.to) { drain(&p) } else { inner(&p, k, &r.to, t) };
                    b.add(&inner(&p, k, &r.from, f), read, top.clone(), &to, push.clone(), Vec::new());
                }
            }
        }
    }
    Ok(b.spec)
}

fn two_symbols() -> (Symbol, Symbol) {
    (Symbol::lit("s1"), Symbol::lit("s2"))
}

pub fn union_m(m1: &MachineSpec, m2: &MachineSpec) -> Result<MachineSpec> {
    let (a, b) = two_symbols();
    let l = literal_machine("union", &[a.clone(), b.clone()], &[vec![a.clone()], vec![b.clone()]]);
    substitute_m(&l, &BTreeMap::from([(a, m1.clone()), (b, m2.clone())]))
}

pub fn concat_m(m1: &MachineSpec, m2: &MachineSpec) -> Result<MachineSpec> {
    let (a, b) = two_symbols();
    let l = literal_machine("concat", &[a.clone(), b.clone()], &[vec![a.clone(), b.clone()]]);
    substitute_m(&l, &BTreeMap::from([(a, m1.clone()), (b, m2.clone())]))
}

pub fn star_m(m: &MachineSpec) -> Result<MachineSpec> {
    let (a, _) = two_symbols();
    let mut l = MachineSpec::new("star", Kind::Nfa);
    l.input = vec![a.clone()];
    l.accept.insert("acc".into());
    l.t("q0", a.as_str(), "-", "q0", "-", "-").t("q0", "$", "-", "acc", "-", "-");
    substitute_m(&l, &BTreeMap::from([(a, m.clone())]))
}

/// Image of `L(m)` under the homomorphism `h`, over the alphabet `target`.
pub fn homomorphism_m(m: &MachineSpec, h: &BTreeMap<Symbol, Word>, target: &[Symbol]) -> Result<MachineSpec> {
    let subs = h
        .iter()
        .map(|(a, w)| (a.clone(), literal_machine(&format!("h_{a}"), target, std::slice::from_ref(w))))
        .collect();
    substitute_m(m, &subs)
}

/// Preimage of `L(m)` under `h`: reads `a` and feeds `h(a)` to `m` from a
/// buffer kept in the finite control.
pub fn inv_homomorphism_m(m: &MachineSpec, h: &BTreeMap<Symbol, Word>) -> Result<MachineSpec> {
    require_oracle_free(m)?;
    if h.is_empty() {
        return Err(Error::Precondition("empty homomorphism".into()));
    }
    for (a, w) in h {
        if let Some(s) = w.iter().find(|s| !m.input.contains(s)) {
            return Err(Error::InputAlphabet(format!("h({a}) uses `{s}` outside the alphabet of `{}`", m.name)));
        }
    }
    type Buf = Option<(Symbol, usize)>;
    let name = |q: &str, buf: &Buf| match buf {
        None => pair(&[q, "-"]),
        Some((a, k)) => pair(&[q, a.as_str(), &k.to_string()]),
    };
    let mut b = Builder::new(&format!("{}_inv", m.name), m.kind);
    b.spec.input = h.keys().cloned().collect();
    b.spec.stack = m.stack.clone();
    b.spec.start = name(&m.start, &None);
    let mut queue: VecDeque<(String, Buf)> = VecDeque::from([(m.start.clone(), None)]);
    let mut seen = BTreeSet::new();
    while let Some((q, buf)) = queue.pop_front() {
        if !seen.insert((q.clone(), buf.clone())) {
            continue;
        }
        let here = name(&q, &buf);
        if m.accept.contains(&q) {
            b.spec.accept.insert(here);
            continue;
        }
        if m.reject.contains(&q) {
            b.spec.reject.insert(here);
            continue;
        }
        if buf.is_none() {
            for (a, w) in h {
                let next = if w.is_empty() { None } else { Some((a.clone(), 0)) };
                b.add(&here, Read::Sym(a.clone()), None, &name(&q, &next), Vec::new(), Vec::new());
                queue.push_back((q.clone(), next));
            }
        }
        for r in m.rules.iter().filter(|r| r.from == q) {
            let (read, next) = match (&r.read, &buf) {
                (Read::Lambda, _) => (Read::Lambda, buf.clone()),
                (Read::Cent | Read::Dollar, None) => (r.read.clone(), None),
                (Read::Sym(s), Some((a, k))) if h[a][*k] == *s => {
                    let k2 = k + 1;
                    (Read::Lambda, (k2 < h[a].len()).then(|| (a.clone(), k2)))
                }
                _ => continue,
            };
            b.add(&here, read, r.top.clone(), &name(&r.to, &next), r.push.clone(), Vec::new());
            queue.push_back((r.to.clone(), next));
        }
    }
    Ok(b.spec)
}

/// Reversal of a normalized npda: the Dyck reducer is run backwards and its
/// reversed query word is checked by a deterministic pushdown machine.
pub fn reverse_m(m: &MachineSpec) -> Result<MachineSpec> {
    let dy = dyckify(m)?;
    let LanguageExpr::Dyck(alphabet) = &dy.oracle else { unreachable!("dyckify yields a Dyck oracle") };
    let n = &dy.reducer;

    let mut b = Builder::new(&format!("{}_rev", m.name), Kind::Nfa);
    b.spec.input = n.input.clone();
    b.spec.query = n.query.clone();
    b.spec.oracle = OracleMode::ManyOne;
    let start = b.claim("start");
    b.spec.start = start.clone();
    let name = |q: &str, done: bool| pair(&[q, if done { "out" } else { "in" }]);
    for f in &n.accept {
        b.add(&start, Read::Lambda, None, &name(f, false), Vec::new(), vec![None]);
    }
    let first = name(&n.start, true);
    b.spec.accept.insert(first.clone());
    if !n.reads_cent() {
        b.add(&name(&n.start, false), Read::Dollar, None, &first, Vec::new(), vec![None]);
    }
    for r in &n.rules {
        if n.reject.contains(&r.to) {
            continue;
        }
        let moves: Vec<(Read, bool, bool)> = match &r.read {
            Read::Sym(a) => vec![(Read::Sym(a.clone()), false, false)],
            Read::Cent => vec![(Read::Dollar, false, true)],
            Read::Dollar => vec![(Read::Cent, false, false)],
            Read::Lambda => vec![(Read::Lambda, false, false), (Read::Lambda, true, true)],
        };
        for (read, d0, d1) in moves {
            b.add(&name(&r.to, d0), read, None, &name(&r.from, d1), Vec::new(), r.emit.clone());
        }
    }
    absorb_dpda_oracle(&b.spec, &dyck_checker(alphabet, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::machine;
    use crate::symbol::{length_lex, word};

    fn anbn() -> MachineSpec {
        let mut m = MachineSpec::new("anbn", Kind::Npda).with_input("0 1").with_stack("Z A").with_accept("acc");
        m.t("q0", "0", "-", "q0", "A", "-")
            .t("q0", "1", "A", "q1", "-", "-")
            .t("q1", "1", "A", "q1", "-", "-")
            .t("q0", "$", "Z", "acc", "-", "-")
            .t("q1", "$", "Z", "acc", "-", "-");
        m
    }

    fn is_anbn(w: &[Symbol], a: &str, b: &str) -> bool {
        let n = w.len() / 2;
        w.len().is_multiple_of(2) && w[..n].iter().all(|s| s.as_str() == a) && w[n..].iter().all(|s| s.as_str() == b)
    }

    fn agree(m: &MachineSpec, max: usize, pred: impl Fn(&[Symbol]) -> bool) {
        let mm = machine(m.clone());
        for w in length_lex(&m.input, max) {
            assert_eq!(mm.accepts_default(&w).unwrap(), pred(&w), "{w:?}");
        }
    }

    #[test]
    fn star_of_single_word() {
        let zero_one = literal_machine("w", &[Symbol::lit("0"), Symbol::lit("1")], &[word("01")]);
        let s = star_m(&zero_one).unwrap();
        agree(&s, 10, |w| w.len() % 2 == 0 && w.chunks(2).all(|c| c[0].as_str() == "0" && c[1].as_str() == "1"));
    }

    #[test]
    fn reverse_of_anbn() {
        let r = reverse_m(&anbn()).unwrap();
        agree(&r, 8, |w| is_anbn(w, "1", "0"));
    }

    #[test]
    fn singleton_substitution() {
        let a = Symbol::lit("a");
        let l = literal_machine("l", std::slice::from_ref(&a), &[vec![a.clone()]]);
        let s = substitute_m(&l, &BTreeMap::from([(a, anbn())])).unwrap();
        agree(&s, 8, |w| is_anbn(w, "0", "1"));
    }

    #[test]
    fn union_and_concat() {
        let zeros = literal_machine("z", &[Symbol::lit("0"), Symbol::lit("1")], &[word("00")]);
        let u = union_m(&anbn(), &zeros).unwrap();
        agree(&u, 7, |w| is_anbn(w, "0", "1") || w == word("00").as_slice());
        let c = concat_m(&zeros, &anbn()).unwrap();
        agree(&c, 7, |w| w.len() >= 2 && w[..2] == word("00")[..] && is_anbn(&w[2..], "0", "1"));
    }

    #[test]
    fn homomorphisms() {
        let h = BTreeMap::from([(Symbol::lit("0"), word("ab")), (Symbol::lit("1"), word("c"))]);
        let target = [Symbol::lit("a"), Symbol::lit("b"), Symbol::lit("c")];
        let img = homomorphism_m(&anbn(), &h, &target).unwrap();
        agree(&img, 9, |w| {
            let n = w.iter().filter(|s| s.as_str() == "c").count();
            let mut e: Vec<Symbol> = (0..n).flat_map(|_| word("ab")).collect();
            e.extend(std::iter::repeat_n(Symbol::lit("c"), n));
            w == e.as_slice()
        });
        let g = BTreeMap::from([(Symbol::lit("x"), word("00")), (Symbol::lit("y"), word("1"))]);
        let pre = inv_homomorphism_m(&anbn(), &g).unwrap();
        agree(&pre, 8, |w| {
            let n = w.iter().take_while(|s| s.as_str() == "x").count();
            w[n..].iter().all(|s| s.as_str() == "y") && w.len() - n == 2 * n
        });
    }
}
