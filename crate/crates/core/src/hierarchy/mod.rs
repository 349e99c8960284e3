//! Hierarchy level expressions, the quantifier characterization and query
//! circuits.

mod circuit;
mod quantified;

use std::fmt;
use std::sync::Arc;

pub use circuit::{build_query_circuit, chain_expr, dual_circuit, eval_circuit, parse_circuit, Circuit, Gate, Node};
pub use quantified::eval_quantified;

use crate::machine::Machine;
use crate::oracle::{self, LanguageExpr};
use crate::{Error, Result};

/// `p(n) = a·n + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinearPoly {
    pub a: usize,
    pub b: usize,
}

impl LinearPoly {
    pub fn new(a: usize, b: usize) -> Self {
        LinearPoly { a, b }
    }

    pub fn eval(&self, n: usize) -> usize {
        self.a * n + self.b
    }

    /// True when `p(n) ≥ n` for every `n`.
    pub fn dominates_identity(&self) -> bool {
        self.a >= 1
    }
}

impl fmt::Display for LinearPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}n+{}", self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelKind {
    /// Σ_k: Turing reducers nested over a base machine
    Sigma,
    /// Π_k: complement of Σ_k
    Pi,
    /// CFL_k of the Boolean hierarchy
    Boolean,
    /// CFL(k): intersection of k languages
    Intersection,
}

fn arity(kind: LevelKind, k: usize, got: usize) -> Error {
    Error::Precondition(format!("{kind:?} level {k} needs {k} components, got {got}"))
}

fn as_machine(e: &LanguageExpr) -> Result<Arc<Machine>> {
    match e {
        LanguageExpr::Machine(m) => Ok(m.clone()),
        other => Err(Error::Precondition(format!("expected a machine component, got {other}"))),
    }
}

/// The defining pattern of a level. Σ and Π take `k - 1` Turing reducers
/// followed by a base machine, outermost first.
pub fn level_expr(kind: LevelKind, k: usize, components: &[LanguageExpr]) -> Result<LanguageExpr> {
    if k == 0 || components.len() != k {
        return Err(arity(kind, k, components.len()));
    }
    Ok(match kind {
        LevelKind::Sigma | LevelKind::Pi => {
            let (base, reducers) = components.split_last().expect("k >= 1");
            let mut e = base.clone();
            for r in reducers.iter().rev() {
                e = oracle::turing(&as_machine(r)?, oracle::complement(e));
            }
            if kind == LevelKind::Pi {
                oracle::complement(e)
            } else {
                e
            }
        }
        LevelKind::Boolean => {
            let mut e = components[0].clone();
            for (i, c) in components.iter().enumerate().skip(1) {
                e = if i % 2 == 1 {
                    oracle::intersect(e, oracle::complement(c.clone()))
                } else {
                    oracle::union(e, c.clone())
                };
            }
            e
        }
        LevelKind::Intersection => components[1..]
            .iter()
            .fold(components[0].clone(), |acc, c| oracle::intersect(acc, c.clone())),
    })
}

/// Disjunctive shape of a Boolean-hierarchy level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Template {
    /// `A ∧ ¬B`
    Cfl2,
    Cfl,
    Union(Box<Template>, Box<Template>),
}

impl Template {
    /// Number of components consumed by [`Template::fill`].
    pub fn arity(&self) -> usize {
        match self {
            Template::Cfl2 => 2,
            Template::Cfl => 1,
            Template::Union(a, b) => a.arity() + b.arity(),
        }
    }

    /// Instantiates the template, consuming components left to right.
    pub fn fill(&self, components: &[LanguageExpr]) -> Result<LanguageExpr> {
        if components.len() != self.arity() {
            return Err(Error::Precondition(format!(
                "template needs {} components, got {}",
                self.arity(),
                components.len()
            )));
        }
        Ok(match self {
            Template::Cfl2 => oracle::intersect(components[0].clone(), oracle::complement(components[1].clone())),
            Template::Cfl => components[0].clone(),
            Template::Union(a, b) => {
                let (l, r) = components.split_at(a.arity());
                oracle::union(a.fill(l)?, b.fill(r)?)
            }
        })
    }
}

/// `CFL_{2j}` as a union of `j` copies of `CFL_2`, with a trailing `CFL`
/// disjunct for odd levels.
pub fn decompose_cfl_k(level: usize) -> Result<Template> {
    if level == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let mut parts = vec![Template::Cfl2; level / 2];
    if level % 2 == 1 {
        parts.push(Template::Cfl);
    }
    let mut it = parts.into_iter();
    let first = it.next().expect("level >= 1");
    Ok(it.fold(first, |acc, t| Template::Union(Box::new(acc), Box::new(t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Decider, LanguageExpr as E};
    use crate::symbol::{length_lex, Symbol};

    fn finite(ws: &[&str]) -> LanguageExpr {
        let alphabet = vec![Symbol::lit("0"), Symbol::lit("1")];
        oracle::finite(&alphabet, ws.iter().map(|w| crate::symbol::word(w)))
    }

    #[test]
    fn level_shapes() {
        let a = finite(&["0"]);
        let b = finite(&["1"]);
        let e = level_expr(LevelKind::Boolean, 2, &[a.clone(), b.clone()]).unwrap();
        assert!(matches!(&e, E::Intersect(_, r) if matches!(**r, E::Complement(_))));
        assert_eq!(level_expr(LevelKind::Intersection, 1, std::slice::from_ref(&a)).unwrap().to_string(), a.to_string());
        assert!(level_expr(LevelKind::Boolean, 3, &[a, b]).is_err());
    }

    #[test]
    fn decompositions() {
        assert_eq!(decompose_cfl_k(2).unwrap(), Template::Cfl2);
        assert_eq!(
            decompose_cfl_k(4).unwrap(),
            Template::Union(Box::new(Template::Cfl2), Box::new(Template::Cfl2))
        );
        assert_eq!(
            decompose_cfl_k(5).unwrap(),
            Template::Union(
                Box::new(Template::Union(Box::new(Template::Cfl2), Box::new(Template::Cfl2))),
                Box::new(Template::Cfl)
            )
        );
    }

    #[test]
    fn decomposition_matches_nested_pattern_on_chains() {
        // a decreasing chain A1 ⊇ A2 ⊇ ... makes both shapes coincide
        let alphabet = vec![Symbol::lit("0"), Symbol::lit("1")];
        let all: Vec<_> = length_lex(&alphabet, 4).collect();
        let chain: Vec<LanguageExpr> = (0..5)
            .map(|i| oracle::finite(&alphabet, all.iter().filter(|w| w.len() >= i).cloned()))
            .collect();
        let dec = Decider::default();
        for level in 1..=5 {
            let nested = level_expr(LevelKind::Boolean, level, &chain[..level]).unwrap();
            let flat = decompose_cfl_k(level).unwrap().fill(&chain[..level]).unwrap();
            for w in &all {
                assert_eq!(dec.member(&nested, w).unwrap(), dec.member(&flat, w).unwrap(), "level {level} {w:?}");
            }
        }
    }

    #[test]
    fn poly() {
        let p = LinearPoly::new(1, 2);
        assert_eq!(p.eval(3), 5);
        assert!(p.dominates_identity());
        assert!(!LinearPoly::new(0, 9).dominates_identity());
    }
}
