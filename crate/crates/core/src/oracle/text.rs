//! Parenthesized prefix syntax for oracle expressions.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{DyckAlphabet, LanguageExpr as E, LanguageExpr};
use crate::error::{Error, Result};
use crate::format::{parse_machine, print_machine};
use crate::machine::Machine;
use crate::symbol::{compact_alphabet, parse_token, Symbol, Word};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open(usize),
    Close(usize),
    Str(String, usize),
    Atom(String, usize),
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let mut chars = raw.char_indices().peekable();
        while let Some((_, c)) = chars.next() {
            match c {
                ';' => break,
                '(' => out.push(Tok::Open(ln)),
                ')' => out.push(Tok::Close(ln)),
                '"' => {
                    let mut s = String::new();
                    loop {
                        match chars.next() {
                            Some((_, '"')) => break,
                            Some((_, ch)) => s.push(ch),
                            None => return Err(Error::Parse { line: ln, msg: "unterminated string".into() }),
                        }
                    }
                    out.push(Tok::Str(s, ln));
                }
                c if c.is_whitespace() => {}
                _ => {
                    let mut s = String::from(c);
                    while let Some(&(_, ch)) = chars.peek() {
                        if ch.is_whitespace() || ch == '(' || ch == ')' || ch == '"' {
                            break;
                        }
                        s.push(ch);
                        chars.next();
                    }
                    out.push(Tok::Atom(s, ln));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug)]
enum Sx {
    List(Vec<Sx>, usize),
    Str(String, usize),
    Atom(String, usize),
}

impl Sx {
    fn line(&self) -> usize {
        match self {
            Sx::List(_, l) | Sx::Str(_, l) | Sx::Atom(_, l) => *l,
        }
    }
}

fn read(toks: &[Tok], pos: &mut usize) -> Result<Sx> {
    let tok = toks
        .get(*pos)
        .ok_or_else(|| Error::Parse { line: 0, msg: "unexpected end of expression".into() })?;
    *pos += 1;
    match tok {
        Tok::Open(l) => {
            let mut items = Vec::new();
            loop {
                match toks.get(*pos) {
                    Some(Tok::Close(_)) => {
                        *pos += 1;
                        return Ok(Sx::List(items, *l));
                    }
                    Some(_) => items.push(read(toks, pos)?),
                    None => return Err(Error::Parse { line: *l, msg: "unbalanced `(`".into() }),
                }
            }
        }
        Tok::Close(l) => Err(Error::Parse { line: *l, msg: "unexpected `)`".into() }),
        Tok::Str(s, l) => Ok(Sx::Str(s.clone(), *l)),
        Tok::Atom(s, l) => Ok(Sx::Atom(s.clone(), *l)),
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Literal word: whitespace-separated tokens, or one symbol per character.
fn literal_word(s: &str, line: usize) -> Result<Word> {
    let toks: Vec<String> = if s.chars().any(char::is_whitespace) {
        s.split_whitespace().map(str::to_owned).collect()
    } else {
        s.chars().map(|c| if c == '♮' { crate::symbol::NATURAL.to_owned() } else { c.to_string() }).collect()
    };
    toks.iter().map(|t| parse_token(t).map_err(|e| perr(line, e.to_string()))).collect()
}

struct Loader<'a> {
    base: &'a Path,
    cache: HashMap<PathBuf, Arc<Machine>>,
    inline: &'a HashMap<String, Arc<Machine>>,
}

impl Loader<'_> {
    fn machine(&mut self, sx: &Sx) -> Result<Arc<Machine>> {
        let Sx::Str(file, line) = sx else {
            return Err(perr(sx.line(), "expected a quoted machine file name"));
        };
        if let Some(m) = self.inline.get(file) {
            return Ok(m.clone());
        }
        let path = self.base.join(file);
        if let Some(m) = self.cache.get(&path) {
            return Ok(m.clone());
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        let spec = parse_machine(&text).map_err(|e| match e {
            Error::Parse { line: l, msg } => perr(*line, format!("{}:{l}: {msg}", path.display())),
            other => other,
        })?;
        let m = Machine::new(spec)?;
        self.cache.insert(path, m.clone());
        Ok(m)
    }

    fn expr(&mut self, sx: &Sx) -> Result<LanguageExpr> {
        let Sx::List(items, line) = sx else {
            return Err(perr(sx.line(), "expected a parenthesized expression"));
        };
        let line = *line;
        let Some(Sx::Atom(head, _)) = items.first() else {
            return Err(perr(line, "expected an operator name"));
        };
        let args = &items[1..];
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(perr(line, format!("`{head}` takes {n} argument(s), got {}", args.len())))
            }
        };
        let number = |sx: &Sx| match sx {
            Sx::Atom(a, l) => a.parse::<usize>().ok().filter(|&d| d > 0).ok_or_else(|| perr(*l, "expected a positive count")),
            other => Err(perr(other.line(), "expected a positive count")),
        };
        let atoms = |v: &[Sx]| -> Result<Vec<Symbol>> {
            v.iter()
                .map(|s| match s {
                    Sx::Atom(a, l) => parse_token(a).map_err(|e| perr(*l, e.to_string())),
                    other => Err(perr(other.line(), "expected a symbol")),
                })
                .collect()
        };
        Ok(match head.as_str() {
            "machine" => {
                arity(1)?;
                E::Machine(self.machine(&args[0])?)
            }
            "builtin" => {
                arity(1)?;
                let Sx::Atom(name, l) = &args[0] else {
                    return Err(perr(line, "expected a builtin name"));
                };
                if crate::zoo::reference_alphabet(name).is_none() {
                    return Err(perr(*l, format!("unknown builtin `{name}`")));
                }
                E::Builtin(name.clone())
            }
            "finite" => {
                let (alphabet, rest) = match args.first() {
                    Some(Sx::List(inner, _)) if matches!(inner.first(), Some(Sx::Atom(a, _)) if a == "alphabet") => {
                        (Some(atoms(&inner[1..])?), &args[1..])
                    }
                    _ => (None, args),
                };
                let words = rest
                    .iter()
                    .map(|s| match s {
                        Sx::Str(w, l) => literal_word(w, *l),
                        other => Err(perr(other.line(), "expected a quoted word")),
                    })
                    .collect::<Result<Vec<Word>>>()?;
                let alphabet = alphabet.unwrap_or_else(|| inferred_alphabet(&words));
                if let Some(s) = words.iter().flatten().find(|s| !alphabet.contains(s)) {
                    return Err(perr(line, format!("word symbol `{s}` is outside the declared alphabet")));
                }
                E::Finite { alphabet, words: words.into_iter().collect() }
            }
            "complement" | "reverse" => {
                arity(1)?;
                let e = Box::new(self.expr(&args[0])?);
                if head == "complement" {
                    E::Complement(e)
                } else {
                    E::Reverse(e)
                }
            }
            "intersect" | "union" => {
                if args.len() < 2 {
                    return Err(perr(line, format!("`{head}` needs at least two operands")));
                }
                let mut es = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>>>()?.into_iter();
                let first = es.next().unwrap();
                es.fold(first, |acc, e| {
                    if head == "intersect" {
                        E::Intersect(Box::new(acc), Box::new(e))
                    } else {
                        E::Union(Box::new(acc), Box::new(e))
                    }
                })
            }
            "dyck" => {
                arity(1)?;
                E::Dyck(DyckAlphabet::standard(number(&args[0])?))
            }
            "dyck-over" => E::Dyck(DyckAlphabet::new(atoms(args)?)),
            "dyck-ext" => {
                arity(1)?;
                E::DyckExt(vec![DyckAlphabet::standard(1); number(&args[0])?])
            }
            "dyck-ext-over" => E::DyckExt(
                args.iter()
                    .map(|a| match a {
                        Sx::List(v, _) => atoms(v).map(DyckAlphabet::new),
                        other => Err(perr(other.line(), "expected a parenthesized opener list")),
                    })
                    .collect::<Result<_>>()?,
            ),
            "many-one" | "turing" => {
                arity(2)?;
                let m = self.machine(&args[0])?;
                let e = Box::new(self.expr(&args[1])?);
                if head == "many-one" {
                    E::ManyOne(m, e)
                } else {
                    E::Turing(m, e)
                }
            }
            "ktt" => {
                arity(3)?;
                E::Ktt(self.machine(&args[0])?, self.machine(&args[1])?, Box::new(self.expr(&args[2])?))
            }
            other => return Err(perr(line, format!("unknown operator `{other}`"))),
        })
    }
}

fn inferred_alphabet(words: &[Word]) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = Vec::new();
    for s in words.iter().flatten() {
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    out
}

/// Parses an expression; machine file names resolve against `base` unless
/// they are keys of `inline`.
pub fn parse_expr(text: &str, base: &Path, inline: &HashMap<String, Arc<Machine>>) -> Result<LanguageExpr> {
    let toks = lex(text)?;
    let mut pos = 0;
    let sx = read(&toks, &mut pos)?;
    if let Some(t) = toks.get(pos) {
        let line = match t {
            Tok::Open(l) | Tok::Close(l) | Tok::Str(_, l) | Tok::Atom(_, l) => *l,
        };
        return Err(perr(line, "trailing input after expression"));
    }
    Loader { base, cache: HashMap::new(), inline }.expr(&sx)
}

/// Reads an expression file; referenced machines are relative to its directory.
pub fn load_expr(path: &Path) -> Result<LanguageExpr> {
    let text =
        std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_expr(&text, base, &HashMap::new())
}

pub(crate) fn quote_word(w: &[Symbol], compact: bool) -> String {
    let body = if compact {
        w.iter().map(|s| if s.is_natural() { "♮" } else { s.as_str() }).collect::<String>()
    } else if w.len() == 1 {
        // a trailing blank keeps a lone multi-character token whole
        format!("{} ", w[0])
    } else {
        w.iter().map(Symbol::as_str).collect::<Vec<_>>().join(" ")
    };
    format!("\"{body}\"")
}

/// File names for the machines of an expression, unique per distinct spec.
fn machine_files(e: &LanguageExpr) -> Vec<(String, Arc<Machine>)> {
    let mut out: Vec<(String, Arc<Machine>)> = Vec::new();
    for m in e.machines() {
        if out.iter().any(|(_, n)| n.spec() == m.spec()) {
            continue;
        }
        let mut file = format!("{}.m", m.name());
        let mut i = 1;
        while out.iter().any(|(f, _)| *f == file) {
            file = format!("{}_{i}.m", m.name());
            i += 1;
        }
        out.push((file, m));
    }
    out
}

fn print_with(e: &LanguageExpr, files: &[(String, Arc<Machine>)], out: &mut String) {
    let name = |m: &Arc<Machine>| {
        files.iter().find(|(_, n)| n.spec() == m.spec()).map(|(f, _)| f.clone()).unwrap()
    };
    let join = |v: &[Symbol]| v.iter().map(Symbol::as_str).collect::<Vec<_>>().join(" ");
    match e {
        E::Machine(m) => out.push_str(&format!("(machine \"{}\")", name(m))),
        E::Builtin(b) => out.push_str(&format!("(builtin {b})")),
        E::Finite { alphabet, words } => {
            out.push_str("(finite");
            let ws: Vec<Word> = words.iter().cloned().collect();
            let compact = compact_alphabet(alphabet);
            if inferred_alphabet(&ws) != *alphabet {
                out.push_str(&format!(" (alphabet {})", join(alphabet)));
            }
            for w in words {
                out.push(' ');
                out.push_str(&quote_word(w, compact));
            }
            out.push(')');
        }
        E::Complement(x) | E::Reverse(x) => {
            out.push_str(if matches!(e, E::Complement(_)) { "(complement " } else { "(reverse " });
            print_with(x, files, out);
            out.push(')');
        }
        E::Intersect(a, b) | E::Union(a, b) => {
            out.push_str(if matches!(e, E::Intersect(..)) { "(intersect " } else { "(union " });
            print_with(a, files, out);
            out.push(' ');
            print_with(b, files, out);
            out.push(')');
        }
        E::Dyck(a) => {
            if a.is_standard() {
                out.push_str(&format!("(dyck {})", a.opens.len()));
            } else {
                out.push_str(&format!("(dyck-over {})", join(&a.opens)));
            }
        }
        E::DyckExt(ts) => {
            if ts.iter().all(|t| *t == DyckAlphabet::standard(1)) {
                out.push_str(&format!("(dyck-ext {})", ts.len()));
            } else {
                out.push_str("(dyck-ext-over");
                for t in ts {
                    out.push_str(&format!(" ({})", join(&t.opens)));
                }
                out.push(')');
            }
        }
        E::ManyOne(m, x) | E::Turing(m, x) => {
            let op = if matches!(e, E::ManyOne(..)) { "many-one" } else { "turing" };
            out.push_str(&format!("({op} \"{}\" ", name(m)));
            print_with(x, files, out);
            out.push(')');
        }
        E::Ktt(m, t, x) => {
            out.push_str(&format!("(ktt \"{}\" \"{}\" ", name(m), name(t)));
            print_with(x, files, out);
            out.push(')');
        }
    }
}

/// Canonical text, with machines referenced as `<name>.m`.
pub fn print_expr(e: &LanguageExpr) -> String {
    let files = machine_files(e);
    let mut s = String::new();
    print_with(e, &files, &mut s);
    s
}

/// Writes `<stem>.expr` plus one file per referenced machine into `dir`.
pub fn write_expr_bundle(dir: &Path, stem: &str, e: &LanguageExpr) -> Result<PathBuf> {
    fn io(p: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
        move |source| Error::Io { path: p.display().to_string(), source }
    }
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let files = machine_files(e);
    for (f, m) in &files {
        let p = dir.join(f);
        std::fs::write(&p, print_machine(m.spec())).map_err(io(&p))?;
    }
    let mut s = String::new();
    print_with(e, &files, &mut s);
    s.push('\n');
    let p = dir.join(format!("{stem}.expr"));
    std::fs::write(&p, s).map_err(io(&p))?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Decider;
    use crate::symbol::word;

    fn parse(s: &str) -> LanguageExpr {
        parse_expr(s, Path::new("."), &HashMap::new()).unwrap()
    }

    #[test]
    fn parse_and_print() {
        for s in [
            "(intersect (dyck 1) (complement (finite \"a1 \" \"a1 a1'\")))",
            "(dyck-ext 2)",
            "(reverse (finite \"0\" \"01\"))",
            "(finite (alphabet 0 1))",
            "(dyck-over A B)",
            "(dyck-ext-over (A) (B C))",
        ] {
            let e = parse(s);
            assert_eq!(print_expr(&e), s);
        }
    }

    #[test]
    fn finite_semantics() {
        let d = Decider::default();
        let e = parse("(finite \"0\" \"01\")");
        assert!(d.member(&e, &word("01")).unwrap());
        assert!(!d.member(&e, &word("1")).unwrap());
        assert!(d.member(&parse("(reverse (finite \"0\" \"01\"))"), &word("10")).unwrap());
    }

    #[test]
    fn errors_carry_lines() {
        let r = parse_expr("(intersect\n (dyck 1)\n (bogus))", Path::new("."), &HashMap::new());
        assert!(matches!(r, Err(Error::Parse { line: 3, .. })));
        let r = parse_expr("(dyck 1", Path::new("."), &HashMap::new());
        assert!(matches!(r, Err(Error::Parse { .. })));
    }
}
