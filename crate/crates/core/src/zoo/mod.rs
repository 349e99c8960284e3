//! Example languages with reference predicates and layered constructions.

pub mod machines;
mod reference;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

pub use reference::{entry_word, reference_alphabet, reference_member, NAMES};

use crate::machine::{Machine, MachineSpec};
use crate::oracle::{self, Decider, DyckAlphabet, LanguageExpr};
use crate::symbol::{length_lex, Symbol, Word};
use crate::{Error, Result};

use machines as mk;

/// One example language.
#[derive(Clone, Debug)]
pub struct ZooEntry {
    pub name: &'static str,
    pub alphabet: Vec<Symbol>,
    pub description: &'static str,
    /// crosscheck covers every string up to this length
    pub test_max_len: usize,
}

impl ZooEntry {
    pub fn reference(&self, w: &[Symbol]) -> Result<bool> {
        reference_member(self.name, w)
    }

    pub fn construction(&self) -> Result<LanguageExpr> {
        construction_expr(self.name)
    }
}

fn describe(name: &str) -> Option<(&'static str, usize)> {
    Some(match name {
        "dup2" => ("{xx}: many-one reducer writing x^R ♮ y, oracle {u ♮ u^R}", 10),
        "dup3" => ("{xxx}: reducer writing x^R ♮ y ♮ y^R ♮ z, oracle checks two reversed pairs", 10),
        "match" => ("{x # w : x is a factor of w}: reducer writes x ♮ m^R for factors m", 9),
        "sq" => ("{0^n 1^(n^2) : n >= 1}: reducer splits the 1s into n blocks, CFL(3) oracle", 10),
        "comp" => ("unary composites: reducer splits into equal pairs of blocks, CFL(2) oracle", 30),
        "prim" => ("unary primes: complement of the composite construction and of lengths 0, 1", 30),
        "mulprim" => ("unary products of two primes: three-machine many-one chain", 40),
        "dyck1" => ("balanced brackets over one pair", 10),
        "dyck2" => ("balanced brackets over two pairs", 8),
        "empty" => ("the empty language", 10),
        "equal6" => ("equal counts of a1..a6, # ignored: intersection of five counters", 6),
        _ => return None,
    })
}

pub fn entry(name: &str) -> Result<ZooEntry> {
    let (description, test_max_len) = describe(name).ok_or_else(|| Error::UnknownName(name.to_owned()))?;
    let name = NAMES.iter().find(|n| **n == name).expect("described names are listed");
    Ok(ZooEntry { name, alphabet: reference_alphabet(name).expect("listed"), description, test_max_len })
}

pub fn entries() -> Vec<ZooEntry> {
    NAMES.iter().map(|n| entry(n).expect("listed")).collect()
}

fn m(spec: MachineSpec) -> Arc<Machine> {
    Machine::new(spec).unwrap_or_else(|e| panic!("built-in machine is invalid: {e}"))
}

fn all_of(specs: impl IntoIterator<Item = MachineSpec>) -> LanguageExpr {
    specs
        .into_iter()
        .map(|s| oracle::machine(&m(s)))
        .reduce(oracle::intersect)
        .expect("at least one machine")
}

/// The layered construction of an entry as an oracle expression.
pub fn construction_expr(name: &str) -> Result<LanguageExpr> {
    Ok(match name {
        "dup2" => oracle::many_one(&m(mk::dup2_reducer()), oracle::machine(&m(mk::eq_rev()))),
        "dup3" => oracle::many_one(&m(mk::dup3_reducer()), oracle::machine(&m(mk::dup3_oracle()))),
        "match" => oracle::many_one(&m(mk::match_reducer()), oracle::machine(&m(mk::eq_rev()))),
        "sq" => oracle::many_one(&m(mk::sq_reducer()), all_of(mk::sq_oracles())),
        "comp" => oracle::many_one(&m(mk::comp_reducer("comp_split")), all_of(mk::comp_oracles())),
        "prim" => oracle::complement(oracle::union(
            construction_expr("comp")?,
            oracle::machine(&m(mk::short_unary())),
        )),
        "mulprim" => {
            let inner = oracle::many_one(
                &m(mk::mulprim_splitter()),
                oracle::complement(oracle::machine(&m(mk::unequal_adjacent()))),
            );
            oracle::many_one(&m(mk::comp_reducer("mulprim_blocks")), oracle::complement(inner))
        }
        "dyck1" => LanguageExpr::Dyck(DyckAlphabet::standard(1)),
        "dyck2" => LanguageExpr::Dyck(DyckAlphabet::standard(2)),
        "empty" => oracle::machine(&m(mk::empty_machine())),
        "equal6" => all_of((2..=6).map(mk::equal_counts)),
        _ => return Err(Error::UnknownName(name.to_owned())),
    })
}

/// Outcome of comparing a construction with its reference predicate.
#[derive(Clone, Debug, Default)]
pub struct CrosscheckReport {
    pub name: String,
    pub max_len: usize,
    pub checked: usize,
    pub agreed: usize,
    /// first disagreement in length-lexicographic order: word, reference, construction
    pub first_disagreement: Option<(Word, bool, bool)>,
    /// words whose construction decision hit the run bounds
    pub exceeded: Vec<Word>,
}

impl CrosscheckReport {
    pub fn ok(&self) -> bool {
        self.first_disagreement.is_none() && self.exceeded.is_empty()
    }
}

/// Compares construction and reference on every string up to `max_len`.
pub fn crosscheck(name: &str, max_len: usize, dec: &Decider) -> Result<CrosscheckReport> {
    let e = entry(name)?;
    let expr = e.construction()?;
    let words: Vec<Word> = length_lex(&e.alphabet, max_len).collect();
    let results: Vec<(Word, bool, Option<bool>)> = words
        .into_par_iter()
        .map(|w| {
            let r = e.reference(&w)?;
            match dec.member(&expr, &w) {
                Ok(c) => Ok((w, r, Some(c))),
                Err(Error::ResourceExceeded(_)) => Ok((w, r, None)),
                Err(err) => Err(err),
            }
        })
        .collect::<Result<_>>()?;
    let mut rep = CrosscheckReport { name: name.to_owned(), max_len, ..Default::default() };
    for (w, r, c) in results {
        rep.checked += 1;
        match c {
            None => rep.exceeded.push(w),
            Some(c) if c == r => rep.agreed += 1,
            Some(c) => {
                if rep.first_disagreement.is_none() {
                    rep.first_disagreement = Some((w, r, c));
                }
            }
        }
    }
    Ok(rep)
}

/// Writes `<dir>/<name>/<name>.expr` with the referenced machine files for
/// every entry, plus the probabilistic recognizer `<dir>/equal6/equal6_n5.ppda`.
pub fn export(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = NAMES
        .iter()
        .map(|n| oracle::write_expr_bundle(&dir.join(n), n, &construction_expr(n)?))
        .collect::<Result<Vec<_>>>()?;
    let p = dir.join("equal6").join("equal6_n5.ppda");
    let text = crate::ppda::print_ppda(&crate::ppda::equal6_machine(5)?);
    std::fs::write(&p, text).map_err(|source| Error::Io { path: p.display().to_string(), source })?;
    out.push(p);
    Ok(out)
}
