use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::machine::Machine;
use crate::oracle::{self, quote_word, Decider, LanguageExpr};
use crate::sim::{machine, RunBounds};
use crate::symbol::{word, Symbol, Word};
use crate::transforms::guess_answers;
use crate::{Error, Result};

const CNF_BUDGET: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Or,
    And,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Gate(Gate, Vec<usize>),
    Leaf { positive: bool, query: Word },
}

/// A Boolean circuit over oracle-query literals. Node ids are indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub nodes: Vec<Node>,
    pub top: usize,
}

type Lit = (Word, bool);
type Clauses = BTreeSet<BTreeSet<Lit>>;

impl Circuit {
    /// Gate levels below the top, counting the leaf level.
    pub fn depth(&self) -> usize {
        fn d(c: &Circuit, n: usize) -> usize {
            match &c.nodes[n] {
                Node::Leaf { .. } => 0,
                Node::Gate(_, ch) => 1 + ch.iter().map(|&x| d(c, x)).max().unwrap_or(0),
            }
        }
        d(self, self.top)
    }

    /// Largest number of leaves below a single gate.
    pub fn bottom_fanin(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Gate(_, ch) => {
                    Some(ch.iter().filter(|&&c| matches!(self.nodes[c], Node::Leaf { .. })).count())
                }
                Node::Leaf { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Longest query string among the leaves.
    pub fn max_query_len(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { query, .. } => Some(query.len()),
                Node::Gate(..) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Checks that the top is an OR gate and that gate types alternate.
    pub fn is_leveled(&self) -> bool {
        fn ok(c: &Circuit, n: usize, want: Gate) -> bool {
            match &c.nodes[n] {
                Node::Leaf { .. } => true,
                Node::Gate(g, ch) => {
                    let next = if *g == Gate::Or { Gate::And } else { Gate::Or };
                    *g == want && ch.iter().all(|&x| ok(c, x, next))
                }
            }
        }
        matches!(self.nodes.get(self.top), Some(Node::Gate(Gate::Or, _))) && ok(self, self.top, Gate::Or)
    }

    /// Evaluates with `member` supplying the characteristic function of the
    /// oracle. Every query is asked at most once.
    pub fn eval(&self, member: &mut dyn FnMut(&[Symbol]) -> Result<bool>) -> Result<bool> {
        let mut memo: Vec<Option<bool>> = vec![None; self.nodes.len()];
        self.eval_node(self.top, member, &mut memo)
    }

    fn eval_node(
        &self,
        n: usize,
        member: &mut dyn FnMut(&[Symbol]) -> Result<bool>,
        memo: &mut Vec<Option<bool>>,
    ) -> Result<bool> {
        if let Some(v) = memo[n] {
            return Ok(v);
        }
        let v = match &self.nodes[n] {
            Node::Leaf { positive, query } => member(query)? == *positive,
            Node::Gate(g, ch) => {
                let short = *g == Gate::Or;
                let mut v = !short;
                for &c in ch {
                    if self.eval_node(c, member, memo)? == short {
                        v = short;
                        break;
                    }
                }
                v
            }
        };
        memo[n] = Some(v);
        Ok(v)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    fn from_dnf_of_cnf(terms: &BTreeSet<Clauses>) -> Circuit {
        let mut b = Build::default();
        let ands = terms
            .iter()
            .map(|t| {
                let ors = t
                    .iter()
                    .map(|cl| {
                        let leaves = cl.iter().map(|l| b.leaf(l)).collect();
                        b.gate(Gate::Or, leaves)
                    })
                    .collect();
                b.gate(Gate::And, ors)
            })
            .collect();
        let top = b.gate(Gate::Or, ands);
        Circuit { nodes: b.nodes, top }
    }

    fn from_dnf(terms: &BTreeSet<BTreeSet<Lit>>) -> Circuit {
        let mut b = Build::default();
        let ands = terms
            .iter()
            .map(|t| {
                let leaves = t.iter().map(|l| b.leaf(l)).collect();
                b.gate(Gate::And, leaves)
            })
            .collect();
        let top = b.gate(Gate::Or, ands);
        Circuit { nodes: b.nodes, top }
    }
}

#[derive(Default)]
struct Build {
    nodes: Vec<Node>,
    leaves: HashMap<Lit, usize>,
}

impl Build {
    fn leaf(&mut self, l: &Lit) -> usize {
        if let Some(&i) = self.leaves.get(l) {
            return i;
        }
        self.nodes.push(Node::Leaf { positive: l.1, query: l.0.clone() });
        self.leaves.insert(l.clone(), self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn gate(&mut self, g: Gate, ch: Vec<usize>) -> usize {
        self.nodes.push(Node::Gate(g, ch));
        self.nodes.len() - 1
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Gate(g, ch) => {
                    let g = if *g == Gate::Or { "OR" } else { "AND" };
                    write!(f, "gate {i} {g}")?;
                    for c in ch {
                        write!(f, " {c}")?;
                    }
                    writeln!(f)?;
                }
                Node::Leaf { positive, query } => {
                    let compact = query.iter().all(|s| s.is_natural() || s.as_str().chars().count() == 1);
                    let sign = if *positive { '+' } else { '-' };
                    writeln!(f, "leaf {i} {sign} {}", quote_word(query, compact))?;
                }
            }
        }
        writeln!(f, "top {}", self.top)
    }
}

/// Parses the text form written by [`Circuit`]'s `Display`.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut nodes = Vec::new();
    let mut top = None;
    for (ln, line) in text.lines().enumerate() {
        let err = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let kw = parts.next().unwrap_or_default();
        let id = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| err("expected a node id"));
        match kw {
            "top" => top = Some(id(parts.next())?),
            "gate" | "leaf" => {
                if id(parts.next())? != nodes.len() {
                    return Err(err("node ids must be consecutive from 0"));
                }
                if kw == "gate" {
                    let g = match parts.next() {
                        Some("OR") => Gate::Or,
                        Some("AND") => Gate::And,
                        _ => return Err(err("expected OR or AND")),
                    };
                    let ch = parts.map(|p| id(Some(p))).collect::<Result<Vec<_>>>()?;
                    nodes.push(Node::Gate(g, ch));
                } else {
                    let positive = match parts.next() {
                        Some("+") => true,
                        Some("-") => false,
                        _ => return Err(err("expected + or -")),
                    };
                    let (a, b) = (line.find('"'), line.rfind('"'));
                    let body = match (a, b) {
                        (Some(a), Some(b)) if b > a => &line[a + 1..b],
                        _ => return Err(err("expected a quoted string")),
                    };
                    nodes.push(Node::Leaf { positive, query: word(body) });
                }
            }
            _ => return Err(err(&format!("unknown keyword `{kw}`"))),
        }
    }
    let top = top.ok_or(Error::Parse { line: text.lines().count(), msg: "missing `top` line".into() })?;
    let n = nodes.len();
    let bad = top >= n || nodes.iter().any(|x| matches!(x, Node::Gate(_, ch) if ch.iter().any(|&c| c >= n)));
    if bad {
        return Err(Error::Parse { line: text.lines().count(), msg: "node id out of range".into() });
    }
    Ok(Circuit { nodes, top })
}

/// Swaps gate types and literal signs, so the dual computes the negation.
pub fn dual_circuit(c: &Circuit) -> Circuit {
    let nodes = c
        .nodes
        .iter()
        .map(|n| match n {
            Node::Gate(g, ch) => Node::Gate(if *g == Gate::Or { Gate::And } else { Gate::Or }, ch.clone()),
            Node::Leaf { positive, query } => Node::Leaf { positive: !positive, query: query.clone() },
        })
        .collect();
    Circuit { nodes, top: c.top }
}

/// Evaluates against an oracle expression.
pub fn eval_circuit(c: &Circuit, a: &LanguageExpr, dec: &Decider) -> Result<bool> {
    c.eval(&mut |y| dec.member(a, y))
}

/// The relativized language of a chain: one reducer queries `A`, two
/// reducers mean `M1` queries the complement of what `M2` decides with `A`.
pub fn chain_expr(chain: &[Arc<Machine>], a: LanguageExpr) -> Result<LanguageExpr> {
    match chain {
        [m] => Ok(oracle::turing(m, a)),
        [m1, m2] => Ok(oracle::turing(m1, oracle::complement(oracle::turing(m2, a)))),
        _ => Err(Error::Precondition(format!("chains of length {} are not supported", chain.len()))),
    }
}

/// Guessed-answer terms of one reducer on `x`: each term lists the queries
/// of one accepting path with the guessed answers as signs.
fn guessed_terms(m: &Machine, x: &[Symbol]) -> Result<BTreeSet<BTreeSet<Lit>>> {
    let g = guess_answers(m.spec())?;
    let r = machine(g.reducer);
    let outs = r.valid_outputs(x, RunBounds::for_len(x.len()))?;
    let mut terms = BTreeSet::new();
    for out in outs {
        let mut term = BTreeSet::new();
        for seg in out[0].split(Symbol::is_natural).filter(|s| !s.is_empty()) {
            let positive = seg[0].as_str() == "1";
            term.insert((seg[1..].to_vec(), positive));
        }
        // a contradictory guess never matches any oracle
        if !term.iter().any(|(y, s)| term.contains(&(y.clone(), !s))) {
            terms.insert(term);
        }
    }
    Ok(terms)
}

fn negate_dnf(dnf: &BTreeSet<BTreeSet<Lit>>) -> Clauses {
    dnf.iter().map(|t| t.iter().map(|(y, s)| (y.clone(), !s)).collect()).collect()
}

fn dnf_to_cnf(dnf: &BTreeSet<BTreeSet<Lit>>) -> Result<Clauses> {
    let mut clauses: Clauses = BTreeSet::from([BTreeSet::new()]);
    for term in dnf {
        let mut next = BTreeSet::new();
        for cl in &clauses {
            for l in term {
                let mut c = cl.clone();
                c.insert(l.clone());
                // tautologies constrain nothing
                if !c.contains(&(l.0.clone(), !l.1)) {
                    next.insert(c);
                }
            }
            if next.len() > CNF_BUDGET {
                return Err(Error::Budget(format!("CNF conversion needs more than {CNF_BUDGET} clauses")));
            }
        }
        clauses = next;
    }
    Ok(clauses)
}

/// Query circuit of a chain of one or two Turing reducers on `x`. The result
/// evaluates, for every oracle `A`, to membership of `x` in
/// [`chain_expr`]`(chain, A)`. One reducer gives an OR of ANDs; two give an
/// OR of ANDs of ORs.
pub fn build_query_circuit(chain: &[Arc<Machine>], x: &[Symbol]) -> Result<Circuit> {
    match chain {
        [m] => Ok(Circuit::from_dnf(&guessed_terms(m, x)?)),
        [m1, m2] => {
            let outer = guessed_terms(m1, x)?;
            let mut inner: HashMap<Word, BTreeSet<BTreeSet<Lit>>> = HashMap::new();
            let mut terms = BTreeSet::new();
            for t in &outer {
                let mut clauses = Clauses::new();
                for (z, positive) in t {
                    if !inner.contains_key(z) {
                        inner.insert(z.clone(), guessed_terms(m2, z)?);
                    }
                    let d = &inner[z];
                    // z is in the outer oracle iff M2 rejects z
                    if *positive {
                        clauses.extend(negate_dnf(d));
                    } else {
                        clauses.extend(dnf_to_cnf(d)?);
                    }
                }
                terms.insert(clauses);
            }
            Ok(Circuit::from_dnf_of_cnf(&terms))
        }
        _ => Err(Error::Precondition(format!("circuit extraction needs 1 or 2 reducers, got {}", chain.len()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{Kind, MachineSpec};
    use crate::symbol::length_lex;
    use proptest::prelude::*;

    fn bits() -> Vec<Symbol> {
        vec![Symbol::lit("0"), Symbol::lit("1")]
    }

    /// Queries its whole input and accepts iff the answer is yes.
    fn passthrough() -> Arc<Machine> {
        let mut m = MachineSpec::new("pass", Kind::Nfa)
            .with_input("0 1")
            .with_query("0 1")
            .with_turing("qq", "qy", "qn")
            .with_accept("acc");
        m.t("q0", "0", "-", "q0", "-", "0")
            .t("q0", "1", "-", "q0", "-", "1")
            .t("q0", "$", "-", "qq", "-", "-")
            .t("qy", "-", "-", "acc", "-", "-");
        machine(m)
    }

    /// Guesses a nonempty substring, asks it and accepts on `no`.
    fn substring_no() -> Arc<Machine> {
        let mut m = MachineSpec::new("sub", Kind::Nfa)
            .with_input("0 1")
            .with_query("0 1")
            .with_turing("qq", "qy", "qn")
            .with_accept("acc");
        for a in ["0", "1"] {
            m.t("q0", a, "-", "q0", "-", "-")
                .t("q0", a, "-", "q1", "-", a)
                .t("q1", a, "-", "q1", "-", a)
                .t("q1", a, "-", "qq", "-", a)
                .t("f", a, "-", "f", "-", "-");
        }
        m.t("q0", "-", "-", "qq", "-", "-").t("qn", "-", "-", "f", "-", "-").t("f", "$", "-", "acc", "-", "-");
        machine(m)
    }

    fn quiet_acceptor() -> Arc<Machine> {
        let mut m = MachineSpec::new("yes", Kind::Nfa)
            .with_input("0 1")
            .with_query("0 1")
            .with_turing("qq", "qy", "qn")
            .with_accept("acc");
        m.t("q0", "0", "-", "q0", "-", "-").t("q0", "1", "-", "q0", "-", "-").t("q0", "$", "-", "acc", "-", "-");
        machine(m)
    }

    fn oracle_from_mask(mask: u32) -> LanguageExpr {
        let all: Vec<Word> = length_lex(&bits(), 3).collect();
        oracle::finite(&bits(), all.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, w)| w))
    }

    #[test]
    fn zero_queries_give_constant_true() {
        let c = build_query_circuit(&[quiet_acceptor()], &word("01")).unwrap();
        assert_eq!(c.to_text(), "gate 0 AND\ngate 1 OR 0\ntop 1\n");
        assert!(c.eval(&mut |_| Ok(false)).unwrap());
    }

    #[test]
    fn one_positive_literal() {
        let c = build_query_circuit(&[passthrough()], &word("01")).unwrap();
        assert_eq!(c.to_text(), "leaf 0 + \"01\"\ngate 1 AND 0\ngate 2 OR 1\ntop 2\n");
    }

    #[test]
    fn direct_evaluation() {
        let c = parse_circuit("leaf 0 + \"0\"\nleaf 1 - \"1\"\ngate 2 AND 0\ngate 3 AND 1\ngate 4 OR 2 3\ntop 4\n").unwrap();
        let a = oracle::finite(&bits(), [word("0"), word("1")]);
        assert!(eval_circuit(&c, &a, &Decider::default()).unwrap());
        assert!(c.is_leveled());
    }

    #[test]
    fn text_round_trip_with_long_tokens() {
        let c = Circuit {
            nodes: vec![
                Node::Leaf { positive: false, query: word("a1 a1'") },
                Node::Leaf { positive: true, query: word("a1 ") },
                Node::Leaf { positive: true, query: Vec::new() },
                Node::Gate(Gate::And, vec![0, 1, 2]),
                Node::Gate(Gate::Or, vec![3]),
            ],
            top: 4,
        };
        assert_eq!(parse_circuit(&c.to_text()).unwrap(), c);
        assert_eq!(dual_circuit(&dual_circuit(&c)), c);
        assert_eq!(c.bottom_fanin(), 3);
    }

    #[test]
    fn single_reducer_matches_decider() {
        let dec = Decider::default();
        for m in [passthrough(), substring_no()] {
            for x in length_lex(&bits(), 3) {
                let c = build_query_circuit(std::slice::from_ref(&m), &x).unwrap();
                assert!(c.is_leveled());
                for mask in (0..1u32 << 15).step_by(997) {
                    let a = oracle_from_mask(mask);
                    assert_eq!(
                        eval_circuit(&c, &a, &dec).unwrap(),
                        dec.decide_turing(&m, &a, &x).unwrap(),
                        "{} {x:?} {mask}",
                        m.name()
                    );
                }
            }
        }
    }

    #[test]
    fn two_level_chain_matches_decider() {
        let dec = Decider::default();
        let chain = [substring_no(), passthrough()];
        for x in length_lex(&bits(), 3) {
            let c = build_query_circuit(&chain, &x).unwrap();
            assert!(c.is_leveled());
            assert!(c.depth() <= 3);
            for mask in (0..1u32 << 15).step_by(1499) {
                let a = oracle_from_mask(mask);
                let e = chain_expr(&chain, a.clone()).unwrap();
                assert_eq!(eval_circuit(&c, &a, &dec).unwrap(), dec.member(&e, &x).unwrap(), "{x:?} {mask}");
            }
        }
    }

    #[test]
    fn unsupported_chain_length() {
        let m = passthrough();
        assert!(build_query_circuit(&[m.clone(), m.clone(), m], &word("0")).is_err());
    }

    proptest! {
        #[test]
        fn dual_negates(mask in 0u32..1 << 15, xi in 0usize..15) {
            let x = length_lex(&bits(), 3).nth(xi).unwrap();
            let c = build_query_circuit(&[substring_no()], &x).unwrap();
            let a = oracle_from_mask(mask);
            let dec = Decider::default();
            prop_assert_eq!(
                eval_circuit(&dual_circuit(&c), &a, &dec).unwrap(),
                !eval_circuit(&c, &a, &dec).unwrap()
            );
        }
    }
}
