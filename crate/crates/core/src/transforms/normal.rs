use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::machine::{Kind, MachineSpec, Read, Rule, Violation};
use crate::symbol::Symbol;
use crate::{Error, Result};

use super::{require_oracle_free, Builder};

/// States reachable before reading `$` and states reachable after it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Phases {
    pub pre: BTreeSet<String>,
    pub post: BTreeSet<String>,
}

impl Phases {
    pub fn post_only(&self, q: &str) -> bool {
        self.post.contains(q) && !self.pre.contains(q)
    }
}

fn closure(spec: &MachineSpec, seeds: impl IntoIterator<Item = String>, follow: impl Fn(&Rule) -> bool) -> BTreeSet<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut queue: VecDeque<String> = seeds.into_iter().collect();
    while let Some(q) = queue.pop_front() {
        if !seen.insert(q.clone()) {
            continue;
        }
        for r in spec.rules.iter().filter(|r| r.from == q && follow(r)) {
            queue.push_back(r.to.clone());
        }
    }
    seen
}

pub fn phases(spec: &MachineSpec) -> Phases {
    let pre = closure(spec, [spec.start.clone()], |r| r.read != Read::Dollar);
    let after: Vec<String> = spec
        .rules
        .iter()
        .filter(|r| r.read == Read::Dollar && pre.contains(&r.from))
        .map(|r| r.to.clone())
        .collect();
    let post = closure(spec, after, |r| r.read.is_lambda());
    Phases { pre, post }
}

fn describe(i: usize, r: &Rule) -> String {
    format!("rule {} ({} {} -> {})", i + 1, r.from, r.read, r.to)
}

/// Violations of the end-normal form: no λ-move before `$`, and every move
/// into an accepting state pops the bottom marker and pushes nothing.
pub fn check_normalized(spec: &MachineSpec) -> Vec<Violation> {
    let mut v = Vec::new();
    if spec.kind != Kind::Npda {
        v.push(Violation { rule: "kind", detail: format!("expected an npda, found {}", spec.kind) });
        return v;
    }
    if spec.oracle != crate::machine::OracleMode::None {
        v.push(Violation { rule: "oracle", detail: "machine must be oracle-free".into() });
    }
    let ph = phases(spec);
    let z = spec.bottom();
    for (i, r) in spec.rules.iter().enumerate() {
        if r.read.is_lambda() && !ph.post_only(&r.from) {
            v.push(Violation { rule: "lambda-before-end", detail: describe(i, r) });
        }
        if spec.accept.contains(&r.to) {
            if r.read != Read::Dollar && !ph.post_only(&r.from) {
                v.push(Violation { rule: "accept-mid-input", detail: describe(i, r) });
            }
            if r.top.as_ref() != z || !r.push.is_empty() {
                v.push(Violation { rule: "accept-with-stack", detail: describe(i, r) });
            }
        }
    }
    v
}

/// Gives states reachable both before and after `$` a separate post copy so
/// that the phase of every state is syntactic.
pub(crate) fn split_phases(spec: &MachineSpec) -> MachineSpec {
    let ph = phases(spec);
    if ph.pre.is_disjoint(&ph.post) {
        return spec.clone();
    }
    let mut taken = spec.states().into_iter().collect();
    let mut copies: BTreeMap<String, String> = BTreeMap::new();
    for q in ph.pre.intersection(&ph.post) {
        let c = MachineSpec::fresh_state(&taken, &format!("{q}.post"));
        taken.insert(c.clone());
        copies.insert(q.clone(), c);
    }
    let post_name = |q: &str| copies.get(q).cloned().unwrap_or_else(|| q.to_owned());
    let mut out = spec.clone();
    out.rules.clear();
    for r in &spec.rules {
        if ph.pre.contains(&r.from) {
            let mut r2 = r.clone();
            if r.read == Read::Dollar {
                r2.to = post_name(&r.to);
            }
            out.rules.push(r2);
        }
        if ph.post.contains(&r.from) && r.read.is_lambda() {
            let mut r2 = r.clone();
            r2.from = post_name(&r.from);
            r2.to = post_name(&r.to);
            if !out.rules.contains(&r2) {
                out.rules.push(r2);
            }
        }
        if !ph.pre.contains(&r.from) && !ph.post.contains(&r.from) {
            out.rules.push(r.clone());
        }
    }
    for (q, c) in &copies {
        if spec.accept.contains(q) {
            out.accept.insert(c.clone());
        }
        if spec.reject.contains(q) {
            out.reject.insert(c.clone());
        }
    }
    out
}

/// Routes every acceptance through `$` followed by λ-moves that drain the
/// stack down to and including the bottom marker. Acceptance before `$`
/// becomes a loop over the rest of the input. λ-moves elsewhere are left
/// alone, so the result can still fail [`check_normalized`].
pub fn normalize_end(spec: &MachineSpec) -> Result<MachineSpec> {
    require_oracle_free(spec)?;
    if spec.kind != Kind::Npda {
        return Err(Error::Precondition(format!("`{}` must be an npda", spec.name)));
    }
    let spec = split_phases(spec);
    let ph = phases(&spec);
    let z = spec.bottom().cloned().expect("npda has a bottom marker");

    let mut b = Builder::new(&spec.name, Kind::Npda);
    for q in spec.states() {
        b.claim(&q);
    }
    let mut drains: BTreeMap<String, String> = BTreeMap::new();
    let mut sinks: BTreeMap<String, String> = BTreeMap::new();
    let mut rules = Vec::new();

    let drain = |b: &mut Builder, drains: &mut BTreeMap<String, String>, p: &str| -> String {
        if let Some(d) = drains.get(p) {
            return d.clone();
        }
        let d = b.fresh(&format!("drain.{p}"));
        for x in spec.stack.iter().filter(|x| **x != z) {
            b.add(&d, Read::Lambda, Some(x.clone()), &d, Vec::new(), Vec::new());
        }
        b.add(&d, Read::Lambda, Some(z.clone()), p, Vec::new(), Vec::new());
        drains.insert(p.to_owned(), d.clone());
        d
    };

    for r in &spec.rules {
        if !spec.accept.contains(&r.to) {
            rules.push(r.clone());
            continue;
        }
        let at_end = r.read == Read::Dollar || ph.post_only(&r.from);
        let empties = r.top.as_ref() == Some(&z) && r.push.is_empty();
        let mut r2 = r.clone();
        if at_end {
            if !empties {
                r2.to = drain(&mut b, &mut drains, &r.to);
            }
        } else {
            if empties {
                r2.push = vec![z.clone()];
            }
            let s = match sinks.get(&r.to) {
                Some(s) => s.clone(),
                None => {
                    let s = b.fresh(&format!("rest.{}", r.to));
                    for a in &spec.input {
                        b.add(&s, Read::Sym(a.clone()), None, &s, Vec::new(), Vec::new());
                    }
                    let target = drain(&mut b, &mut drains, &r.to);
                    b.add(&s, Read::Dollar, None, &target, Vec::new(), Vec::new());
                    sinks.insert(r.to.clone(), s.clone());
                    s
                }
            };
            r2.to = s;
        }
        rules.push(r2);
    }
    let extra = std::mem::take(&mut b.spec.rules);
    let mut out = spec.clone();
    out.rules = rules;
    out.rules.extend(extra);
    Ok(out)
}

/// Redirects acceptance before `$` into a state that reads the rest of the
/// input, so that the machine only accepts once the whole input is read.
pub(crate) fn defer_acceptance(spec: &MachineSpec) -> MachineSpec {
    let spec = split_phases(spec);
    let ph = phases(&spec);
    let mut taken = spec.states().into_iter().collect();
    let mut sinks: BTreeMap<String, String> = BTreeMap::new();
    let mut out = spec.clone();
    let mut extra = Vec::new();
    for r in &mut out.rules {
        if !spec.accept.contains(&r.to) || r.read == Read::Dollar || ph.post_only(&r.from) {
            continue;
        }
        let s = sinks.entry(r.to.clone()).or_insert_with(|| {
            let s = MachineSpec::fresh_state(&taken, &format!("rest.{}", r.to));
            taken.insert(s.clone());
            let blank = vec![None; spec.tape_count()];
            let mk = |read: Read, to: &str| Rule {
                from: s.clone(),
                read,
                top: None,
                to: to.to_owned(),
                push: Vec::new(),
                emit: blank.clone(),
                weight: None,
            };
            for a in &spec.input {
                extra.push(mk(Read::Sym(a.clone()), &s));
            }
            extra.push(mk(Read::Dollar, &r.to));
            s
        });
        r.to = s.clone();
    }
    out.rules.extend(extra);
    out
}

/// The bottom marker of `spec`, or an error naming the machine.
pub(crate) fn bottom_of(spec: &MachineSpec) -> Result<Symbol> {
    spec.bottom()
        .cloned()
        .ok_or_else(|| Error::Precondition(format!("`{}` has no stack", spec.name)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::machine;
    use crate::symbol::strings_of_len;

    fn anbn_loose() -> MachineSpec {
        // accepts 0^n 1^n without emptying the stack
        let mut m = MachineSpec::new("anbn", Kind::Npda).with_input("0 1").with_stack("Z A").with_accept("acc");
        m.t("q0", "0", "-", "q0", "A", "-")
            .t("q0", "1", "A", "q1", "-", "-")
            .t("q1", "1", "A", "q1", "-", "-")
            .t("q0", "$", "Z", "acc", "Z", "-")
            .t("q1", "$", "Z", "acc", "Z", "-");
        m
    }

    #[test]
    fn normalize_preserves_language() {
        let m = anbn_loose();
        assert!(check_normalized(&m).iter().any(|v| v.rule == "accept-with-stack"));
        let n = normalize_end(&m).unwrap();
        assert!(check_normalized(&n).is_empty(), "{:?}", check_normalized(&n));
        let (a, b) = (machine(m), machine(n));
        for len in 0..=8 {
            for w in strings_of_len(&a.spec().input, len) {
                assert_eq!(a.accepts_default(&w).unwrap(), b.accepts_default(&w).unwrap(), "{w:?}");
            }
        }
    }

    #[test]
    fn mid_input_acceptance_is_deferred() {
        let mut m = MachineSpec::new("p", Kind::Npda).with_input("0 1").with_stack("Z").with_accept("acc");
        m.t("q0", "0", "Z", "acc", "-", "-");
        let n = normalize_end(&m).unwrap();
        assert!(check_normalized(&n).is_empty());
        let (a, b) = (machine(m), machine(n));
        for len in 0..=5 {
            for w in strings_of_len(&a.spec().input, len) {
                assert_eq!(a.accepts_default(&w).unwrap(), b.accepts_default(&w).unwrap());
            }
        }
    }

    #[test]
    fn lambda_before_end_is_reported() {
        let mut m = MachineSpec::new("l", Kind::Npda).with_input("0").with_stack("Z").with_accept("acc");
        m.t("q0", "-", "-", "q1", "-", "-").t("q1", "$", "Z", "acc", "-", "-");
        let v = check_normalized(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "lambda-before-end");
        assert!(v[0].detail.contains("rule 1"));
    }

    #[test]
    fn split_separates_shared_states() {
        let mut m = MachineSpec::new("s", Kind::Npda).with_input("0").with_stack("Z").with_accept("acc");
        m.t("q0", "-", "-", "q1", "-", "-")
            .t("q1", "-", "-", "q0", "-", "-")
            .t("q0", "$", "-", "q1", "-", "-")
            .t("q1", "-", "Z", "acc", "-", "-");
        let s = split_phases(&m);
        let ph = phases(&s);
        assert!(ph.pre.is_disjoint(&ph.post));
        let (a, b) = (machine(m), machine(s));
        for w in [vec![], vec![Symbol::lit("0")]] {
            assert_eq!(a.accepts_default(&w).unwrap(), b.accepts_default(&w).unwrap());
        }
    }
}
