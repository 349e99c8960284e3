//! Symbol tokens, words and multi-track columns.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const CENT: &str = "<cent>";
pub const DOLLAR: &str = "<dollar>";
pub const LAMBDA: &str = "<lambda>";
pub const NATURAL: &str = "<natural>";
pub const HASH: &str = "<hash>";

/// A non-empty text atom used as an alphabet element.
///
/// `<cent>`, `<dollar>` and `<lambda>` can never be symbols. The padding
/// symbol `<natural>` and the separator `<hash>` are reserved too, but they
/// are legal alphabet members and are built with [`Symbol::natural`] and
/// [`Symbol::hash`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

pub type Word = Vec<Symbol>;

impl Symbol {
    pub fn new(token: &str) -> Result<Self> {
        if token.is_empty() {
            return Err(Error::Symbol("empty token".into()));
        }
        if matches!(token, CENT | DOLLAR | LAMBDA | "-" | "->" | ";") {
            return Err(Error::Symbol(format!("`{token}` is reserved")));
        }
        if token.starts_with('#')
            || token
                .chars()
                .any(|c| c.is_whitespace() || matches!(c, '"' | '(' | ')'))
        {
            return Err(Error::Symbol(format!("`{token}` is not a valid token")));
        }
        Ok(Symbol(Arc::from(token)))
    }

    /// Panicking constructor for literals known to be valid.
    pub fn lit(token: &str) -> Self {
        Symbol::new(token).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn natural() -> Self {
        Symbol(Arc::from(NATURAL))
    }

    pub fn hash() -> Self {
        Symbol(Arc::from(HASH))
    }

    pub fn is_natural(&self) -> bool {
        &*self.0 == NATURAL
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Column symbol `[s1,s2,...]` of the track notation.
    pub fn track(parts: &[Symbol]) -> Self {
        let mut s = String::from("[");
        for (i, p) in parts.iter().enumerate() {
            assert!(
                !p.as_str().contains([',', '[', ']']),
                "track component `{p}` contains a delimiter"
            );
            if i > 0 {
                s.push(',');
            }
            s.push_str(p.as_str());
        }
        s.push(']');
        Symbol(Arc::from(s.as_str()))
    }

    /// Splits a column symbol back into its components.
    pub fn components(&self) -> Option<Vec<Symbol>> {
        let inner = self.0.strip_prefix('[')?.strip_suffix(']')?;
        inner
            .split(',')
            .map(|p| Symbol::new(p).ok().or_else(|| special(p)))
            .collect()
    }

    /// Primed partner used for closing brackets and stack-history pops.
    pub fn primed(&self) -> Symbol {
        Symbol(Arc::from(format!("{}'", self.0).as_str()))
    }
}

fn special(p: &str) -> Option<Symbol> {
    match p {
        NATURAL => Some(Symbol::natural()),
        HASH => Some(Symbol::hash()),
        _ => None,
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses a token that may also be one of the two reserved alphabet members.
pub fn parse_token(token: &str) -> Result<Symbol> {
    special(token).map_or_else(|| Symbol::new(token), Ok)
}

/// Builds a word from literal text: whitespace-separated tokens when the
/// text contains whitespace, one symbol per character otherwise. `♮` maps to
/// the padding symbol.
pub fn word(text: &str) -> Word {
    if text.chars().any(char::is_whitespace) {
        text.split_whitespace()
            .map(|t| parse_token(t).unwrap_or_else(|e| panic!("{e}")))
            .collect()
    } else {
        text.chars()
            .map(|c| match c {
                '♮' => Symbol::natural(),
                _ => Symbol::lit(&c.to_string()),
            })
            .collect()
    }
}

/// True when every symbol of the alphabet is a single character, which lets
/// words be written without separators.
pub fn compact_alphabet(alphabet: &[Symbol]) -> bool {
    alphabet.iter().all(|s| s.as_str().chars().count() == 1)
}

/// Parses a command-line word against an alphabet.
pub fn parse_word(text: &str, alphabet: &[Symbol]) -> Result<Word> {
    let tokens: Vec<String> = if text.chars().any(char::is_whitespace) || !compact_alphabet(alphabet)
    {
        text.split_whitespace().map(str::to_owned).collect()
    } else {
        text.chars().map(|c| c.to_string()).collect()
    };
    tokens
        .iter()
        .map(|t| {
            let s = parse_token(t)?;
            if alphabet.contains(&s) {
                Ok(s)
            } else {
                Err(Error::InputAlphabet(format!("symbol `{t}` is not in the alphabet")))
            }
        })
        .collect()
}

pub fn format_word(w: &[Symbol]) -> String {
    let compact = compact_alphabet(w);
    let parts: Vec<&str> = w.iter().map(Symbol::as_str).collect();
    if compact {
        parts.concat()
    } else {
        parts.join(" ")
    }
}

/// Removes every padding symbol.
pub fn delete_natural(w: &[Symbol]) -> Word {
    w.iter().filter(|s| !s.is_natural()).cloned().collect()
}

/// A `d`-track string: `d` equal-length rows over alphabets extended with `♮`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrackString {
    columns: Vec<Vec<Symbol>>,
    width: usize,
}

impl TrackString {
    pub fn from_tracks(tracks: &[Word]) -> Result<Self> {
        let width = tracks.len();
        if width == 0 {
            return Err(Error::Symbol("a track string needs at least one track".into()));
        }
        let len = tracks[0].len();
        if tracks.iter().any(|t| t.len() != len) {
            return Err(Error::Symbol("tracks have different lengths".into()));
        }
        let columns = (0..len)
            .map(|i| tracks.iter().map(|t| t[i].clone()).collect())
            .collect();
        Ok(TrackString { columns, width })
    }

    pub fn from_word(w: &[Symbol], width: usize) -> Result<Self> {
        let columns = w
            .iter()
            .map(|s| match s.components() {
                Some(c) if c.len() == width => Ok(c),
                _ => Err(Error::Symbol(format!("`{s}` is not a {width}-track column"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrackString { columns, width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn track(&self, i: usize) -> Word {
        self.columns.iter().map(|c| c[i].clone()).collect()
    }

    /// The `i`-th track with padding removed.
    pub fn underlying(&self, i: usize) -> Word {
        delete_natural(&self.track(i))
    }

    pub fn to_word(&self) -> Word {
        self.columns.iter().map(|c| Symbol::track(c)).collect()
    }
}

/// All strings over `alphabet` of length at most `max_len`, in
/// length-lexicographic order (alphabet order within a length).
pub fn length_lex(alphabet: &[Symbol], max_len: usize) -> impl Iterator<Item = Word> + '_ {
    (0..=max_len).flat_map(move |len| strings_of_len(alphabet, len))
}

pub fn strings_of_len(alphabet: &[Symbol], len: usize) -> impl Iterator<Item = Word> + '_ {
    let k = alphabet.len();
    let mut digits = vec![0usize; len];
    let mut done = k == 0 && len > 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let w = digits.iter().map(|&d| alphabet[d].clone()).collect();
        // odometer increment, last position fastest
        let mut i = len;
        loop {
            if i == 0 {
                done = true;
                break;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < k {
                break;
            }
            digits[i] = 0;
        }
        Some(w)
    })
}

/// Every ♮-extension of `x` with length at most `max_len`.
pub fn natural_extensions(x: &[Symbol], max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for len in x.len()..=max_len {
        out.extend(natural_extensions_of_len(x, len));
    }
    out
}

/// ♮-extensions of `x` of exactly `len` symbols, ordered by padding positions.
pub fn natural_extensions_of_len(x: &[Symbol], len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if len < x.len() {
        return out;
    }
    let mut cur = Vec::with_capacity(len);
    fn rec(x: &[Symbol], pads: usize, cur: &mut Word, out: &mut Vec<Word>) {
        if x.is_empty() && pads == 0 {
            out.push(cur.clone());
            return;
        }
        if let Some((h, t)) = x.split_first() {
            cur.push(h.clone());
            rec(t, pads, cur, out);
            cur.pop();
        }
        if pads > 0 {
            cur.push(Symbol::natural());
            rec(x, pads - 1, cur, out);
            cur.pop();
        }
    }
    rec(x, len - x.len(), &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reserved_tokens_rejected() {
        for t in [CENT, DOLLAR, LAMBDA, "-", "", "a b", "#x"] {
            assert!(Symbol::new(t).is_err(), "{t}");
        }
        assert!(parse_token(NATURAL).unwrap().is_natural());
    }

    #[test]
    fn natural_extension_examples() {
        assert_eq!(natural_extensions(&word("01"), 2), vec![word("01")]);
        let mut got = natural_extensions(&word("0"), 2);
        got.sort();
        let mut want = vec![word("0"), word("♮0"), word("0♮")];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn length_lex_counts() {
        let ab = word("01");
        assert_eq!(length_lex(&ab, 3).count(), 1 + 2 + 4 + 8);
        let first: Vec<_> = length_lex(&ab, 2).collect();
        assert_eq!(first[0], word(""));
        assert_eq!(first[3], word("00"));
        assert_eq!(first[6], word("11"));
    }

    #[test]
    fn track_columns_roundtrip() {
        let t = TrackString::from_tracks(&[word("0♮1"), word("ab♮")]).unwrap();
        let w = t.to_word();
        assert_eq!(w[1].as_str(), "[<natural>,b]");
        let back = TrackString::from_word(&w, 2).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.underlying(0), word("01"));
    }

    proptest! {
        #[test]
        fn every_extension_deletes_back(bits in proptest::collection::vec(0u8..2, 0..4), extra in 0usize..3) {
            let x: Word = bits.iter().map(|b| Symbol::lit(&b.to_string())).collect();
            for ext in natural_extensions(&x, x.len() + extra) {
                prop_assert_eq!(delete_natural(&ext), x.clone());
                prop_assert!(ext.len() <= x.len() + extra);
            }
        }
    }
}
