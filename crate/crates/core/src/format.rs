//! Machine-definition text format.
//!
//! ```text
//! machine dyck1
//! kind npda
//! oracle none
//! input a1 a1'
//! stack Z A
//! start q0
//! accept acc
//! trans q0 a1 - -> q0 ; push A
//! trans q0 <dollar> Z -> acc ; push -
//! end
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::machine::{Kind, MachineSpec, OracleMode, Read, Rule, TuringStates, Weight};
use crate::symbol::{parse_token, Symbol};

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn strip_comment(line: &str) -> &str {
    // `#` opens a comment only at a token boundary
    let mut prev_space = true;
    for (i, c) in line.char_indices() {
        if c == '#' && prev_space {
            return &line[..i];
        }
        prev_space = c.is_whitespace();
    }
    line
}

fn symbols(line: usize, toks: &[&str]) -> Result<Vec<Symbol>> {
    toks.iter()
        .map(|t| parse_token(t).map_err(|e| err(line, e.to_string())))
        .collect()
}

fn parse_weight(line: usize, s: &str) -> Result<BigRational> {
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n = BigInt::from_str(n).map_err(|_| err(line, format!("bad weight `{s}`")))?;
    let d = BigInt::from_str(d).map_err(|_| err(line, format!("bad weight `{s}`")))?;
    if d == BigInt::from(0) {
        return Err(err(line, "weight denominator is zero"));
    }
    Ok(BigRational::new(n, d))
}

/// Parses every machine in the text; blocks are delimited by `machine` and `end`.
pub fn parse_machines(text: &str) -> Result<Vec<MachineSpec>> {
    let mut out = Vec::new();
    let mut cur: Option<(MachineSpec, usize, bool)> = None;
    let mut query_state = None;
    let mut yes_state = None;
    let mut no_state = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (key, rest) = (toks[0], &toks[1..]);
        if key == "machine" {
            if cur.is_some() {
                return Err(err(ln, "`machine` inside an unterminated machine block"));
            }
            let [name] = rest else {
                return Err(err(ln, "expected `machine <name>`"));
            };
            cur = Some((MachineSpec::new(name, Kind::Npda), ln, false));
            continue;
        }
        let Some((spec, _, kind_seen)) = cur.as_mut() else {
            return Err(err(ln, format!("`{key}` outside a machine block")));
        };
        match key {
            "kind" => {
                spec.kind = match rest {
                    ["dfa"] => Kind::Dfa,
                    ["nfa"] => Kind::Nfa,
                    ["npda"] => Kind::Npda,
                    _ => return Err(err(ln, "kind must be dfa, nfa or npda")),
                };
                *kind_seen = true;
            }
            "oracle" => {
                spec.oracle = match rest {
                    ["none"] => OracleMode::None,
                    ["many-one"] => OracleMode::ManyOne,
                    ["turing"] => OracleMode::Turing,
                    ["ktt", k] => OracleMode::Ktt(
                        k.parse().map_err(|_| err(ln, format!("bad ktt arity `{k}`")))?,
                    ),
                    _ => return Err(err(ln, "oracle must be none, many-one, turing or ktt <k>")),
                }
            }
            "input" => spec.input = symbols(ln, rest)?,
            "stack" => spec.stack = symbols(ln, rest)?,
            "query" => spec.query.push(symbols(ln, rest)?),
            "start" => match rest {
                [q] => spec.start = q.to_string(),
                _ => return Err(err(ln, "expected `start <state>`")),
            },
            "accept" => spec.accept.extend(rest.iter().map(|s| s.to_string())),
            "reject" => spec.reject.extend(rest.iter().map(|s| s.to_string())),
            "query-state" | "yes-state" | "no-state" => {
                let [q] = rest else {
                    return Err(err(ln, format!("expected `{key} <state>`")));
                };
                let slot = match key {
                    "query-state" => &mut query_state,
                    "yes-state" => &mut yes_state,
                    _ => &mut no_state,
                };
                *slot = Some(q.to_string());
            }
            "trans" => {
                let rule = parse_rule(ln, line, spec)?;
                spec.rules.push(rule);
            }
            "end" => {
                let (mut spec, _, kind_seen) = cur.take().unwrap();
                if !kind_seen {
                    return Err(err(ln, format!("machine `{}` has no `kind` line", spec.name)));
                }
                match (query_state.take(), yes_state.take(), no_state.take()) {
                    (Some(query), Some(yes), Some(no)) => spec.turing = Some(TuringStates { query, yes, no }),
                    (None, None, None) => {}
                    _ => return Err(err(ln, "query-state, yes-state and no-state must appear together")),
                }
                out.push(spec);
            }
            other => return Err(err(ln, format!("unknown directive `{other}`"))),
        }
    }
    if let Some((spec, start, _)) = cur {
        return Err(err(start, format!("machine `{}` is missing `end`", spec.name)));
    }
    Ok(out)
}

/// Parses exactly one machine.
pub fn parse_machine(text: &str) -> Result<MachineSpec> {
    let mut v = parse_machines(text)?;
    match v.len() {
        1 => Ok(v.pop().unwrap()),
        0 => Err(err(1, "no machine block found")),
        n => Err(err(1, format!("expected one machine, found {n}"))),
    }
}

fn parse_rule(ln: usize, line: &str, spec: &MachineSpec) -> Result<Rule> {
    let mut clauses = line.split(';').map(str::trim);
    let head: Vec<&str> = clauses.next().unwrap().split_whitespace().collect();
    let arrow = head.iter().position(|t| *t == "->").ok_or_else(|| err(ln, "missing `->`"))?;
    let lhs = &head[1..arrow];
    let rhs = &head[arrow + 1..];
    let (from, read, top) = match lhs {
        [q, r, t] => (*q, *r, Some(*t)),
        [q, r] => (*q, *r, None),
        _ => return Err(err(ln, "expected `trans <state> <read> <top> -> <state>`")),
    };
    let [to] = rhs else {
        return Err(err(ln, "expected a single target state after `->`"));
    };
    let read = Read::parse(read).map_err(|e| err(ln, e.to_string()))?;
    let top = match top {
        None | Some("-") => None,
        Some(t) => Some(parse_token(t).map_err(|e| err(ln, e.to_string()))?),
    };
    let mut rule = Rule {
        from: from.to_string(),
        read,
        top,
        to: to.to_string(),
        push: Vec::new(),
        emit: vec![None; spec.query.len()],
        weight: None,
    };
    let mut seen = BTreeSet::new();
    for clause in clauses {
        let toks: Vec<&str> = clause.split_whitespace().collect();
        let Some((&key, rest)) = toks.split_first() else {
            return Err(err(ln, "empty clause"));
        };
        if !seen.insert(key) {
            return Err(err(ln, format!("duplicate `{key}` clause")));
        }
        match key {
            "push" => {
                rule.push = match rest {
                    ["-"] => Vec::new(),
                    _ => symbols(ln, rest)?,
                }
            }
            "emit" => {
                rule.emit = rest
                    .iter()
                    .map(|t| match *t {
                        "-" => Ok(None),
                        t => parse_token(t).map(Some).map_err(|e| err(ln, e.to_string())),
                    })
                    .collect::<Result<_>>()?;
            }
            "group" => {
                let [g, "weight", w] = rest else {
                    return Err(err(ln, "expected `group <id> weight <p>/<q>`"));
                };
                rule.weight = Some(Weight { group: g.to_string(), prob: parse_weight(ln, w)? });
            }
            other => return Err(err(ln, format!("unknown clause `{other}`"))),
        }
    }
    Ok(rule)
}

fn join(syms: &[Symbol]) -> String {
    syms.iter().map(Symbol::as_str).collect::<Vec<_>>().join(" ")
}

/// Canonical text for a machine; `parse_machine(&print_machine(m)) == m`.
pub fn print_machine(m: &MachineSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "machine {}", m.name);
    let _ = writeln!(s, "kind {}", m.kind);
    let _ = writeln!(s, "oracle {}", m.oracle);
    let _ = writeln!(s, "input {}", join(&m.input));
    if !m.stack.is_empty() {
        let _ = writeln!(s, "stack {}", join(&m.stack));
    }
    for q in &m.query {
        let _ = writeln!(s, "query {}", join(q));
    }
    let _ = writeln!(s, "start {}", m.start);
    if !m.accept.is_empty() {
        let _ = writeln!(s, "accept {}", m.accept.iter().cloned().collect::<Vec<_>>().join(" "));
    }
    if !m.reject.is_empty() {
        let _ = writeln!(s, "reject {}", m.reject.iter().cloned().collect::<Vec<_>>().join(" "));
    }
    if let Some(t) = &m.turing {
        let _ = writeln!(s, "query-state {}", t.query);
        let _ = writeln!(s, "yes-state {}", t.yes);
        let _ = writeln!(s, "no-state {}", t.no);
    }
    for r in &m.rules {
        let top = r.top.as_ref().map_or("-", Symbol::as_str);
        let _ = write!(s, "trans {} {} {} -> {}", r.from, r.read, top, r.to);
        if m.kind == Kind::Npda {
            let push = if r.push.is_empty() { "-".to_string() } else { join(&r.push) };
            let _ = write!(s, " ; push {push}");
        }
        if !r.emit.is_empty() {
            let e: Vec<&str> = r.emit.iter().map(|e| e.as_ref().map_or("-", Symbol::as_str)).collect();
            let _ = write!(s, " ; emit {}", e.join(" "));
        }
        if let Some(w) = &r.weight {
            let _ = write!(s, " ; group {} weight {}/{}", w.group, w.prob.numer(), w.prob.denom());
        }
        s.push('\n');
    }
    s.push_str("end\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::validate;

    const SAMPLE: &str = "\
machine copier   # a comment
kind npda
oracle many-one
input 0 1
stack Z A
query 0 1 <natural>
start q0
accept qf
reject qr
trans q0 0 Z -> q0 ; push A Z ; emit -
trans q0 - A -> q1 ; push A ; emit 0
trans q1 <dollar> - -> qf ; push - ; emit <natural>
end
";

    #[test]
    fn parse_sample() {
        let m = parse_machine(SAMPLE).unwrap();
        assert_eq!(m.name, "copier");
        assert_eq!(m.rules.len(), 3);
        assert_eq!(m.rules[0].push, vec![Symbol::lit("A"), Symbol::lit("Z")]);
        assert_eq!(m.rules[1].emit, vec![Some(Symbol::lit("0"))]);
        assert!(m.rules[2].emit[0].as_ref().unwrap().is_natural());
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn round_trip() {
        let m = parse_machine(SAMPLE).unwrap();
        let text = print_machine(&m);
        assert_eq!(parse_machine(&text).unwrap(), m);
        assert_eq!(print_machine(&parse_machine(&text).unwrap()), text);
    }

    #[test]
    fn line_numbers_in_errors() {
        let broken = "machine x\nkind npda\ntrans q0 0 Z q1\nend\n";
        match parse_machine(broken) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_machine("machine x\nkind npda\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn weights_parse() {
        let t = "machine c\nkind nfa\ninput 0\nstart q0\naccept a\nreject r\n\
                 trans q0 - - -> a ; group g weight 1/2\ntrans q0 - - -> r ; group g weight 1/2\nend\n";
        let m = parse_machine(t).unwrap();
        assert!(validate(&m).is_empty());
        assert_eq!(parse_machine(&print_machine(&m)).unwrap(), m);
    }
}
