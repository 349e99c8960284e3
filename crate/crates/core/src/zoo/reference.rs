//! Direct predicates for the example languages.

use crate::error::{Error, Result};
use crate::oracle::DyckAlphabet;
use crate::symbol::{Symbol, Word};

pub const NAMES: [&str; 11] =
    ["dup2", "dup3", "match", "sq", "comp", "prim", "mulprim", "dyck1", "dyck2", "empty", "equal6"];

fn syms(tokens: &[&str]) -> Vec<Symbol> {
    tokens.iter().map(|t| crate::symbol::parse_token(t).unwrap()).collect()
}

pub fn reference_alphabet(name: &str) -> Option<Vec<Symbol>> {
    Some(match name {
        "dup2" | "dup3" | "sq" | "empty" => syms(&["0", "1"]),
        "match" => syms(&["0", "1", crate::symbol::HASH]),
        "comp" | "prim" | "mulprim" => syms(&["0"]),
        "dyck1" => DyckAlphabet::standard(1).symbols(),
        "dyck2" => DyckAlphabet::standard(2).symbols(),
        "equal6" => syms(&["a1", "a2", "a3", "a4", "a5", "a6", crate::symbol::HASH]),
        _ => return None,
    })
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn is_semiprime(n: usize) -> bool {
    (2..n).any(|p| n.is_multiple_of(p) && is_prime(p) && is_prime(n / p))
}

fn unary(w: &[Symbol]) -> Option<usize> {
    w.iter().all(|s| s.as_str() == "0").then_some(w.len())
}

fn repeats(w: &[Symbol], k: usize) -> bool {
    w.len().is_multiple_of(k) && {
        let n = w.len() / k;
        (1..k).all(|i| w[i * n..(i + 1) * n] == w[..n])
    }
}

pub fn reference_member(name: &str, w: &[Symbol]) -> Result<bool> {
    let alphabet = reference_alphabet(name).ok_or_else(|| Error::UnknownName(name.to_owned()))?;
    if let Some(s) = w.iter().find(|s| !alphabet.contains(s)) {
        return Err(Error::InputAlphabet(format!("`{s}` is not in the alphabet of `{name}`")));
    }
    Ok(match name {
        "dup2" => repeats(w, 2),
        "dup3" => repeats(w, 3),
        "match" => {
            let hashes: Vec<usize> = (0..w.len()).filter(|&i| w[i].as_str() == crate::symbol::HASH).collect();
            match hashes[..] {
                [h] => {
                    let (x, rest) = (&w[..h], &w[h + 1..]);
                    x.is_empty() || rest.windows(x.len()).any(|win| win == x)
                }
                _ => false,
            }
        }
        "sq" => {
            let n = w.iter().take_while(|s| s.as_str() == "0").count();
            let rest: &[Symbol] = &w[n..];
            n >= 1 && rest.iter().all(|s| s.as_str() == "1") && rest.len() == n * n
        }
        "comp" => unary(w).is_some_and(|n| n >= 4 && !is_prime(n)),
        "prim" => unary(w).is_some_and(is_prime),
        "mulprim" => unary(w).is_some_and(is_semiprime),
        "dyck1" => DyckAlphabet::standard(1).member(w),
        "dyck2" => DyckAlphabet::standard(2).member(w),
        "empty" => false,
        "equal6" => {
            let counts: Vec<usize> =
                (1..=6).map(|i| w.iter().filter(|s| s.as_str() == format!("a{i}")).count()).collect();
            counts.iter().all(|&c| c == counts[0])
        }
        _ => unreachable!(),
    })
}

/// Builds a word from the entry's compact or space-separated text.
pub fn entry_word(name: &str, text: &str) -> Result<Word> {
    let alphabet = reference_alphabet(name).ok_or_else(|| Error::UnknownName(name.to_owned()))?;
    crate::symbol::parse_word(text, &alphabet)
}
