use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::machine::{deterministic_violations, Kind, MachineSpec, OracleMode, Read, Rule};
use crate::oracle::{track_alphabet, DyckAlphabet, LanguageExpr};
use crate::symbol::Symbol;
use crate::{Error, Result};

use super::normal::{bottom_of, check_normalized};
use super::{pair, require_oracle_free, Builder};

/// A Dyck-oracle reducer together with its oracle.
#[derive(Clone, Debug)]
pub struct Dyckified {
    pub reducer: MachineSpec,
    pub oracle: LanguageExpr,
}

fn require_normalized(spec: &MachineSpec) -> Result<()> {
    let v = check_normalized(spec);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::NotNormalized { machine: spec.name.clone(), violations: v })
    }
}

/// Symbols a stack rule writes to the Dyck tape: the primed popped symbol,
/// then the pushed word bottom-most first.
fn stack_chunk(r: &Rule) -> Vec<Symbol> {
    r.top.iter().map(Symbol::primed).chain(r.push.iter().rev().cloned()).collect()
}

/// Replaces the stack of a normalized npda by a Dyck oracle. The reducer
/// starts by writing the bottom marker, so a machine that accepts `λ` yields
/// the query word `Z Z'` rather than the empty word.
pub fn dyckify(spec: &MachineSpec) -> Result<Dyckified> {
    require_oracle_free(spec)?;
    require_normalized(spec)?;
    let z = bottom_of(spec)?;
    let alphabet = DyckAlphabet::new(spec.stack.clone());

    let mut b = Builder::new(&format!("{}_dyck", spec.name), Kind::Nfa);
    for q in spec.states() {
        b.claim(&q);
    }
    let start = b.fresh("s0");
    b.spec.input = spec.input.clone();
    b.spec.query = vec![alphabet.symbols()];
    b.spec.oracle = OracleMode::ManyOne;
    b.spec.start = start.clone();
    b.spec.accept = spec.accept.clone();
    b.spec.reject = spec.reject.clone();
    b.add(&start, Read::Lambda, None, &spec.start, Vec::new(), vec![Some(z)]);
    for r in &spec.rules {
        b.chain(&r.from, r.read.clone(), None, &r.to, Vec::new(), &stack_chunk(r), 1);
    }
    Ok(Dyckified { reducer: b.spec, oracle: LanguageExpr::Dyck(alphabet) })
}

/// Deterministic λ-free npda for the Dyck language over `alphabet`. With
/// `reversed` the primed symbols open and the plain ones close, which
/// recognizes the reversals of Dyck words.
pub fn dyck_checker(alphabet: &DyckAlphabet, reversed: bool) -> MachineSpec {
    let mut m = MachineSpec::new(if reversed { "dyck_rev" } else { "dyck" }, Kind::Npda);
    m.input = alphabet.symbols();
    m.stack = std::iter::once(Symbol::lit("Z"))
        .chain((1..=alphabet.opens.len()).map(|i| Symbol::lit(&format!("o{i}"))))
        .collect();
    m.accept.insert("acc".into());
    for (i, a) in alphabet.opens.iter().enumerate() {
        let (open, close) = if reversed { (a.primed(), a.clone()) } else { (a.clone(), a.primed()) };
        let o = m.stack[i + 1].clone();
        m.rules.push(Rule {
            from: "q0".into(),
            read: Read::Sym(open),
            top: None,
            to: "q0".into(),
            push: vec![o.clone()],
            emit: Vec::new(),
            weight: None,
        });
        m.rules.push(Rule {
            from: "q0".into(),
            read: Read::Sym(close),
            top: Some(o),
            to: "q0".into(),
            push: Vec::new(),
            emit: Vec::new(),
            weight: None,
        });
    }
    m.rules.push(Rule {
        from: "q0".into(),
        read: Read::Dollar,
        top: Some(Symbol::lit("Z")),
        to: "acc".into(),
        push: Vec::new(),
        emit: Vec::new(),
        weight: None,
    });
    m
}

fn rules_by_read(spec: &MachineSpec) -> HashMap<(String, Read), Vec<Rule>> {
    let mut map: HashMap<(String, Read), Vec<Rule>> = HashMap::new();
    for r in &spec.rules {
        map.entry((r.from.clone(), r.read.clone())).or_default().push(r.clone());
    }
    map
}

/// Folds a deterministic λ-free oracle machine into a one-tape nfa reducer.
/// The result keeps the oracle's stack and accepts exactly when the reducer
/// accepts with an output the oracle accepts.
pub fn absorb_dpda_oracle(m: &MachineSpec, d: &MachineSpec) -> Result<MachineSpec> {
    if m.kind == Kind::Npda || m.oracle != OracleMode::ManyOne || m.tape_count() != 1 {
        return Err(Error::Precondition(format!("`{}` must be a one-tape many-one nfa reducer", m.name)));
    }
    require_oracle_free(d)?;
    let v = deterministic_violations(d);
    if !v.is_empty() {
        return Err(Error::Precondition(format!(
            "oracle `{}` is not deterministic: {}",
            d.name,
            v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
        )));
    }
    let kind = if d.kind == Kind::Npda { Kind::Npda } else { Kind::Nfa };
    let mut b = Builder::new(&format!("{}_with_{}", m.name, d.name), kind);
    b.spec.input = m.input.clone();
    b.spec.stack = d.stack.clone();
    let acc = b.claim("acc");
    b.spec.accept.insert(acc.clone());

    let drules = rules_by_read(d);
    let done = "ACC".to_owned();
    let name = |p: &str, q: &str| pair(&[p, q]);

    // Initial oracle states after its ¢-rules, with the top they need.
    let mut queue: VecDeque<(String, String)> = VecDeque::new();
    let start = b.claim("s0");
    b.spec.start = start.clone();
    let cent_rules = drules.get(&(d.start.clone(), Read::Cent)).cloned().unwrap_or_default();
    let seed = |b: &mut Builder, queue: &mut VecDeque<(String, String)>, r: Option<&Rule>| {
        let (to, top, push) = match r {
            Some(r) => (r.to.clone(), r.top.clone(), r.push.clone()),
            None => (d.start.clone(), None, Vec::new()),
        };
        if d.reject.contains(&to) {
            return;
        }
        let q = if d.accept.contains(&to) { done.clone() } else { to };
        b.add(&start, Read::Lambda, top, &name(&m.start, &q), push, Vec::new());
        queue.push_back((m.start.clone(), q));
    };
    if cent_rules.is_empty() {
        seed(&mut b, &mut queue, None);
    } else {
        for r in &cent_rules {
            seed(&mut b, &mut queue, Some(r));
        }
    }

    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    while let Some((p, q)) = queue.pop_front() {
        if !seen.insert((p.clone(), q.clone())) {
            continue;
        }
        let here = name(&p, &q);
        if m.accept.contains(&p) {
            if q == done {
                b.add(&here, Read::Lambda, None, &acc, Vec::new(), Vec::new());
            } else {
                for r in drules.get(&(q.clone(), Read::Dollar)).into_iter().flatten() {
                    if d.accept.contains(&r.to) {
                        b.add(&here, Read::Lambda, r.top.clone(), &acc, r.push.clone(), Vec::new());
                    }
                }
            }
            continue;
        }
        for r in m.rules.iter().filter(|r| r.from == p) {
            if m.reject.contains(&r.to) {
                continue;
            }
            match (&r.emit[0], q == done) {
                (None, _) | (Some(_), true) => {
                    b.add(&here, r.read.clone(), None, &name(&r.to, &q), Vec::new(), Vec::new());
                    queue.push_back((r.to.clone(), q.clone()));
                }
                (Some(e), false) => {
                    for dr in drules.get(&(q.clone(), Read::Sym(e.clone()))).into_iter().flatten() {
                        if d.reject.contains(&dr.to) {
                            continue;
                        }
                        let q2 = if d.accept.contains(&dr.to) { done.clone() } else { dr.to.clone() };
                        b.add(&here, r.read.clone(), dr.top.clone(), &name(&r.to, &q2), dr.push.clone(), Vec::new());
                        queue.push_back((r.to.clone(), q2));
                    }
                }
            }
        }
    }
    Ok(b.spec)
}

/// Runs normalized npdas side by side on one input. Each step writes one
/// column per stack event onto a shared track tape, padding idle tracks with
/// `♮`. After `$` the machines finish their λ-moves one after another.
pub fn product_reducer(ms: &[MachineSpec]) -> Result<Dyckified> {
    if ms.is_empty() {
        return Err(Error::Precondition("product of zero machines".into()));
    }
    for m in ms {
        require_oracle_free(m)?;
        require_normalized(m)?;
    }
    let sigma: BTreeSet<&Symbol> = ms[0].input.iter().collect();
    for m in &ms[1..] {
        if m.input.iter().collect::<BTreeSet<_>>() != sigma {
            return Err(Error::Precondition(format!("`{}` and `{}` have different input alphabets", ms[0].name, m.name)));
        }
    }
    let d = ms.len();
    let tracks: Vec<DyckAlphabet> = ms.iter().map(|m| DyckAlphabet::new(m.stack.clone())).collect();
    let nat = Symbol::natural();
    let columns = |chunks: &[Vec<Symbol>]| -> Vec<Symbol> {
        let h = chunks.iter().map(Vec::len).max().unwrap_or(0);
        (0..h)
            .map(|j| Symbol::track(&chunks.iter().map(|c| c.get(j).cloned().unwrap_or_else(|| nat.clone())).collect::<Vec<_>>()))
            .collect()
    };
    let by_read: Vec<_> = ms.iter().map(rules_by_read).collect();

    let mut b = Builder::new(&ms.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join("_x_"), Kind::Nfa);
    b.spec.input = ms[0].input.clone();
    b.spec.query = vec![track_alphabet(&tracks)];
    b.spec.oracle = OracleMode::ManyOne;
    let acc = b.claim("acc");
    b.spec.accept.insert(acc.clone());
    let start = b.claim("s0");
    b.spec.start = start.clone();

    // Phase `d + 1` is running; phase `j <= d` means machines before `j` have
    // finished after `$` and machine `j` is taking λ-moves.
    type Node = (Vec<String>, usize);
    let name = |qs: &[String], phase: usize| {
        let mut parts: Vec<&str> = qs.iter().map(String::as_str).collect();
        let tag = if phase > d { "run".to_owned() } else { format!("fin{phase}") };
        parts.push(&tag);
        pair(&parts)
    };
    let init: Vec<String> = ms.iter().map(|m| m.start.clone()).collect();
    let bottoms: Vec<Vec<Symbol>> = ms.iter().map(|m| vec![m.bottom().cloned().expect("normalized npda")]).collect();
    b.chain(&start, Read::Lambda, None, &name(&init, d + 1), Vec::new(), &columns(&bottoms), 1);

    let mut queue: VecDeque<Node> = VecDeque::from([(init, d + 1)]);
    let mut seen: BTreeSet<Node> = BTreeSet::new();
    let any_cent = ms.iter().any(MachineSpec::reads_cent);
    while let Some((qs, phase)) = queue.pop_front() {
        if !seen.insert((qs.clone(), phase)) {
            continue;
        }
        let here = name(&qs, phase);
        if phase <= d {
            // Skip machines that already accept.
            let mut j = phase;
            while j < d && ms[j].accept.contains(&qs[j]) {
                j += 1;
            }
            if j == d {
                b.add(&here, Read::Lambda, None, &acc, Vec::new(), Vec::new());
                continue;
            }
            if j != phase {
                b.add(&here, Read::Lambda, None, &name(&qs, j), Vec::new(), Vec::new());
                queue.push_back((qs.clone(), j));
                continue;
            }
            for r in by_read[j].get(&(qs[j].clone(), Read::Lambda)).into_iter().flatten() {
                if ms[j].reject.contains(&r.to) {
                    continue;
                }
                let mut chunks = vec![Vec::new(); d];
                chunks[j] = stack_chunk(r);
                let mut next = qs.clone();
                next[j] = r.to.clone();
                b.chain(&here, Read::Lambda, None, &name(&next, phase), Vec::new(), &columns(&chunks), 1);
                queue.push_back((next, phase));
            }
            continue;
        }
        let mut reads: Vec<Read> = ms[0].input.iter().cloned().map(Read::Sym).collect();
        reads.push(Read::Dollar);
        if any_cent {
            reads.push(Read::Cent);
        }
        for a in reads {
            // Every machine takes exactly one rule; on ¢ machines without
            // ¢-rules stay put.
            let mut combos: Vec<(Vec<String>, Vec<Vec<Symbol>>)> = vec![(Vec::new(), Vec::new())];
            for (i, m) in ms.iter().enumerate() {
                let opts: Vec<(String, Vec<Symbol>)> = if a == Read::Cent && !m.reads_cent() {
                    vec![(qs[i].clone(), Vec::new())]
                } else {
                    by_read[i]
                        .get(&(qs[i].clone(), a.clone()))
                        .into_iter()
                        .flatten()
                        .filter(|r| !m.reject.contains(&r.to))
                        .map(|r| (r.to.clone(), stack_chunk(r)))
                        .collect()
                };
                combos = combos
                    .into_iter()
                    .flat_map(|(q, c)| {
                        opts.iter().map(move |(t, ch)| {
                            let (mut q, mut c) = (q.clone(), c.clone());
                            q.push(t.clone());
                            c.push(ch.clone());
                            (q, c)
                        })
                    })
                    .collect();
            }
            for (next, chunks) in combos {
                let phase2 = if a == Read::Dollar { 0 } else { d + 1 };
                b.chain(&here, a.clone(), None, &name(&next, phase2), Vec::new(), &columns(&chunks), 1);
                queue.push_back((next, phase2));
            }
        }
    }
    Ok(Dyckified { reducer: b.spec, oracle: LanguageExpr::DyckExt(tracks) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Decider;
    use crate::sim::machine;
    use crate::symbol::{length_lex, word};

    pub(crate) fn anbn() -> MachineSpec {
        let mut m = MachineSpec::new("anbn", Kind::Npda).with_input("0 1").with_stack("Z A").with_accept("acc");
        m.t("q0", "0", "-", "q0", "A", "-")
            .t("q0", "1", "A", "q1", "-", "-")
            .t("q1", "1", "A", "q1", "-", "-")
            .t("q0", "$", "Z", "acc", "-", "-")
            .t("q1", "$", "Z", "acc", "-", "-");
        m
    }

    #[test]
    fn dyckify_agrees_with_machine() {
        let m = anbn();
        let dy = dyckify(&m).unwrap();
        let n = machine(dy.reducer);
        let orig = machine(m);
        let dec = Decider::default();
        for w in length_lex(&orig.spec().input, 8) {
            assert_eq!(dec.decide_many_one(&n, &dy.oracle, &w).unwrap(), orig.accepts_default(&w).unwrap(), "{w:?}");
        }
    }

    #[test]
    fn lambda_acceptor_writes_bottom_pair() {
        let mut m = MachineSpec::new("eps", Kind::Npda).with_input("0").with_stack("Z").with_accept("acc");
        m.t("q0", "$", "Z", "acc", "-", "-");
        let dy = dyckify(&m).unwrap();
        let n = machine(dy.reducer);
        let outs = n.valid_outputs(&[], crate::RunBounds::for_len(0)).unwrap();
        assert_eq!(outs.into_iter().collect::<Vec<_>>(), vec![vec![word("Z Z'")]]);
    }

    #[test]
    fn dyckify_refuses_unnormalized() {
        let mut m = anbn();
        m.t("q0", "-", "-", "q0", "-", "-");
        assert!(matches!(dyckify(&m), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn round_trip_through_checker() {
        let m = anbn();
        let dy = dyckify(&m).unwrap();
        let LanguageExpr::Dyck(alph) = &dy.oracle else { panic!() };
        let back = machine(absorb_dpda_oracle(&dy.reducer, &dyck_checker(alph, false)).unwrap());
        let orig = machine(m);
        for w in length_lex(&orig.spec().input, 8) {
            assert_eq!(back.accepts_default(&w).unwrap(), orig.accepts_default(&w).unwrap(), "{w:?}");
        }
    }

    #[test]
    fn checker_is_deterministic() {
        let c = dyck_checker(&DyckAlphabet::standard(2), true);
        assert!(deterministic_violations(&c).is_empty());
        let c = machine(c);
        assert!(c.accepts_default(&word("a1' a2' a2 a1 ")).unwrap());
        assert!(!c.accepts_default(&word("a1 a1' ")).unwrap());
    }

    #[test]
    fn product_of_one_matches_dyckify() {
        let m = anbn();
        let p = product_reducer(std::slice::from_ref(&m)).unwrap();
        let n = machine(p.reducer);
        let orig = machine(m);
        let dec = Decider::default();
        for w in length_lex(&orig.spec().input, 7) {
            assert_eq!(dec.decide_many_one(&n, &p.oracle, &w).unwrap(), orig.accepts_default(&w).unwrap());
        }
    }
}
