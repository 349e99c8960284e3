//! Reducers and oracle machines of the layered constructions.

use crate::machine::{Kind, MachineSpec, OracleMode};

const NAT: &str = "<natural>";

fn npda(name: &str, input: &str) -> MachineSpec {
    MachineSpec::new(name, Kind::Npda).with_input(input).with_stack("Z X").with_accept("acc")
}

fn reducer(name: &str, input: &str, query: &str) -> MachineSpec {
    npda(name, input).with_query(query).with_oracle(OracleMode::ManyOne)
}

/// Blocks of symbols from `syms` separated by `♮`. Accepts iff block
/// `offset + 2t` has the length of block `offset + 2t + 1` for every `t`; a
/// trailing unpaired block is free.
pub fn pair_checker(name: &str, syms: &[&str], offset: usize) -> MachineSpec {
    let mut input = syms.join(" ");
    input.push(' ');
    input.push_str(NAT);
    let mut m = npda(name, &input);
    m.start = if offset == 0 { "a".into() } else { "s".into() };
    for s in syms {
        m.t("s", s, "-", "s", "-", "-")
            .t("a", s, "-", "a", "X", "-")
            .t("b", s, "X", "b", "-", "-");
    }
    m.t("s", NAT, "-", "a", "-", "-")
        .t("a", NAT, "-", "b", "-", "-")
        .t("b", NAT, "Z", "a", "Z", "-")
        .t("s", "$", "-", "acc", "-", "-")
        .t("a", "$", "-", "acc", "-", "-")
        .t("b", "$", "Z", "acc", "-", "-");
    m
}

/// `0^i ♮ ... ` with exactly `i` separators.
fn zero_count_matches_blocks() -> MachineSpec {
    let mut m = npda("sq_count", &format!("0 1 {NAT}"));
    m.start = "z".into();
    m.t("z", "0", "-", "z", "X", "-")
        .t("z", NAT, "X", "c", "-", "-")
        .t("c", "1", "-", "c", "-", "-")
        .t("c", NAT, "X", "c", "-", "-")
        .t("z", "$", "Z", "acc", "-", "-")
        .t("c", "$", "Z", "acc", "-", "-");
    m
}

/// On `0^i 1^j` with `i ≥ 1` writes `0^i ♮ 1^{j1} ♮ ... ♮ 1^{ji}` for every
/// split of `j` into `i` positive parts.
pub fn sq_reducer() -> MachineSpec {
    let mut m = reducer("sq_split", "0 1", &format!("0 1 {NAT}"));
    m.t("q0", "0", "-", "z", "X", "0")
        .t("z", "0", "-", "z", "X", "0")
        .t("z", "-", "X", "blk0", "-", NAT)
        .t("blk0", "1", "-", "blk", "-", "1")
        .t("blk", "1", "-", "blk", "-", "1")
        .t("blk", "-", "X", "blk0", "-", NAT)
        .t("blk", "$", "Z", "acc", "-", "-");
    m
}

/// The three conditions: `i = j1, j2 = j3, ...`; `j1 = j2, j3 = j4, ...`;
/// and `i` equals the number of blocks.
pub fn sq_oracles() -> [MachineSpec; 3] {
    [
        pair_checker("sq_pairs_even", &["0", "1"], 0),
        pair_checker("sq_pairs_odd", &["0", "1"], 1),
        zero_count_matches_blocks(),
    ]
}

/// Splits a sequence of units into blocks of at least two units, at least
/// two blocks, with the stack forcing blocks 1 = 2, 3 = 4, and so on.
/// `unit` adds the rules consuming one unit from `from` to `to`, applying
/// `top`/`push` and writing `emit`.
fn paired_blocks(
    m: &mut MachineSpec,
    p: &str,
    unit: &mut dyn FnMut(&mut MachineSpec, &str, &str, &str, &str),
) -> (String, String) {
    let s = |q: &str| format!("{p}{q}");
    for (from, to) in [("a0", "a1"), ("a1", "a2"), ("a2", "a2"), ("c0", "c1"), ("c1", "c2"), ("c2", "c2")] {
        unit(m, &s(from), &s(to), "-", "X");
    }
    unit(m, &s("b0"), &s("b"), "X", "-");
    unit(m, &s("b"), &s("b"), "X", "-");
    m.t(&s("a2"), "-", "-", &s("b0"), "-", NAT)
        .t(&s("c2"), "-", "-", &s("b0"), "-", NAT)
        .t(&s("b"), "-", "Z", &s("c0"), "Z", NAT);
    (s("b"), s("c2"))
}

/// On `0^n` writes `y1 ♮ y2 ♮ ... ♮ yk` with `k ≥ 2`, every `|yi| ≥ 2` and
/// `y1 = y2, y3 = y4, ...`.
pub fn comp_reducer(name: &str) -> MachineSpec {
    let mut m = reducer(name, "0", &format!("0 {NAT}"));
    m.start = "a0".into();
    let (b, c2) = paired_blocks(&mut m, "", &mut |m, from, to, top, push| {
        m.t(from, "0", top, to, push, "0");
    });
    m.t(&b, "$", "Z", "acc", "-", "-").t(&c2, "$", "-", "acc", "-", "-");
    m
}

/// Adjacent blocks agree two ways, so all blocks have one length.
pub fn comp_oracles() -> [MachineSpec; 2] {
    [pair_checker("blocks_even", &["0"], 0), pair_checker("blocks_odd", &["0"], 1)]
}

/// Accepts unary words shorter than 2.
pub fn short_unary() -> MachineSpec {
    let mut m = MachineSpec::new("short", Kind::Nfa).with_input("0").with_accept("acc");
    m.t("q0", "$", "-", "acc", "-", "-").t("q0", "0", "-", "q1", "-", "-").t("q1", "$", "-", "acc", "-", "-");
    m
}

/// Second stage of the semiprime chain. On `y1 ♮ ... ♮ yn` it either proves
/// some pair `y2i ≠ y2i+1` and writes `!`, or writes a split of `y1` into
/// blocks of `0`, or a grouping of the `n` blocks into blocks of `1`.
pub fn mulprim_splitter() -> MachineSpec {
    let mut m = reducer("mulprim_split", &format!("0 {NAT}"), &format!("0 1 {NAT} !"));
    m.start = "s".into();
    // mismatch in an even pair
    m.t("s", "0", "-", "s1", "-", "-")
        .t("s1", "0", "-", "s1", "-", "-")
        .t("s1", NAT, "-", "e", "-", "-")
        .t("e", "0", "-", "ep", "X", "-")
        .t("ep", "0", "-", "ep", "X", "-")
        .t("ep", NAT, "-", "eq", "-", "-")
        .t("eq", "0", "X", "eq", "-", "-")
        .t("eq", "0", "Z", "bad", "Z", "!")
        .t("eq", NAT, "X", "bad", "X", "!")
        .t("eq", "$", "X", "acc", "X", "!")
        .t("bad", "0", "-", "bad", "-", "-")
        .t("bad", NAT, "-", "bad", "-", "-")
        .t("bad", "$", "-", "acc", "-", "-")
        .t("e", "0", "-", "k1", "-", "-")
        .t("k1", "0", "-", "k1", "-", "-")
        .t("k1", NAT, "-", "k2", "-", "-")
        .t("k2", "0", "-", "k2", "-", "-")
        .t("k2", NAT, "-", "e", "-", "-");
    // split of y1
    m.t("s", "-", "-", "f:a0", "-", "-");
    let (b, c2) = paired_blocks(&mut m, "f:", &mut |m, from, to, top, push| {
        m.t(from, "0", top, to, push, "0");
    });
    m.t(&b, NAT, "Z", "rest", "Z", "-").t(&c2, NAT, "-", "rest", "-", "-");
    m.t("rest", "0", "-", "rest", "-", "-").t("rest", NAT, "-", "rest", "-", "-").t("rest", "$", "-", "acc", "-", "-");
    // grouping of the blocks: one unit per block, consumed at its first 0
    m.t("s", "-", "-", "g:a0@s", "-", "-");
    let (b, c2) = paired_blocks(&mut m, "g:", &mut |m, from, to, top, push| {
        m.t(&format!("{from}@s"), "0", top, &format!("{to}@i"), push, "1");
    });
    for r in m.rules.iter_mut() {
        // separator moves between units happen inside a block
        if r.from.starts_with("g:") && !r.from.contains('@') {
            r.from.push_str("@i");
            r.to.push_str("@i");
        }
    }
    for q in ["a0", "a1", "a2", "b0", "b", "c0", "c1", "c2"].map(|q| format!("g:{q}")) {
        m.t(&format!("{q}@i"), "0", "-", &format!("{q}@i"), "-", "-")
            .t(&format!("{q}@i"), NAT, "-", &format!("{q}@s"), "-", "-");
    }
    m.t(&format!("{b}@i"), "$", "Z", "acc", "-", "-").t(&format!("{c2}@i"), "$", "-", "acc", "-", "-");
    m
}

/// Accepts `♮`-separated blocks over `0`/`1` in which two adjacent blocks
/// differ in length; words containing `!` are rejected.
pub fn unequal_adjacent() -> MachineSpec {
    let mut m = npda("unequal_adjacent", &format!("0 1 {NAT} !"));
    m.start = "s0".into();
    for a in ["0", "1"] {
        m.t("s0", a, "-", "s", "-", "-")
            .t("s", a, "-", "s", "-", "-")
            .t("p", a, "-", "p", "X", "-")
            .t("q", a, "X", "q", "-", "-")
            .t("q", a, "Z", "bad", "Z", "-")
            .t("bad", a, "-", "bad", "-", "-");
    }
    m.t("s", NAT, "-", "s0", "-", "-")
        .t("s0", "-", "-", "p", "-", "-")
        .t("p", NAT, "-", "q", "-", "-")
        .t("q", NAT, "X", "bad", "X", "-")
        .t("q", "$", "X", "acc", "X", "-")
        .t("bad", NAT, "-", "bad", "-", "-")
        .t("bad", "$", "-", "acc", "-", "-");
    m
}

fn bits_push(m: &mut MachineSpec, from: &str, to: &str, emit: bool) {
    for (a, s) in [("0", "A"), ("1", "B")] {
        m.t(from, a, "-", to, s, if emit { a } else { "-" });
    }
}

fn bits_pop_emit(m: &mut MachineSpec, q: &str) {
    for (a, s) in [("0", "A"), ("1", "B")] {
        m.t(q, "-", s, q, "-", a);
    }
}

fn bits_copy(m: &mut MachineSpec, q: &str) {
    for a in ["0", "1"] {
        m.t(q, a, "-", q, "-", a);
    }
}

fn bit_reducer(name: &str, input: &str) -> MachineSpec {
    MachineSpec::new(name, Kind::Npda)
        .with_input(input)
        .with_stack("Z A B")
        .with_query(&format!("0 1 {NAT}"))
        .with_oracle(OracleMode::ManyOne)
        .with_accept("acc")
}

/// On `xy` writes `x^R ♮ y`.
pub fn dup2_reducer() -> MachineSpec {
    let mut m = bit_reducer("dup2_split", "0 1");
    bits_push(&mut m, "q0", "q0", false);
    m.t("q0", "-", "-", "p", "-", "-");
    bits_pop_emit(&mut m, "p");
    m.t("p", "-", "Z", "c", "Z", NAT);
    bits_copy(&mut m, "c");
    m.t("c", "$", "-", "acc", "-", "-");
    m
}

fn bit_oracle(name: &str) -> MachineSpec {
    MachineSpec::new(name, Kind::Npda)
        .with_input(&format!("0 1 {NAT}"))
        .with_stack("Z A B")
        .with_accept("acc")
}

/// `u ♮ v ♮ ...` where each odd-numbered block reversed equals the next.
fn reversal_pairs(name: &str, pairs: usize) -> MachineSpec {
    let mut m = bit_oracle(name);
    for i in 0..pairs {
        let (u, v) = (format!("u{i}"), format!("v{i}"));
        bits_push(&mut m, &u, &u, false);
        m.t(&u, NAT, "-", &v, "-", "-");
        for (a, s) in [("0", "A"), ("1", "B")] {
            m.t(&v, a, s, &v, "-", "-");
        }
        if i + 1 < pairs {
            m.t(&v, NAT, "Z", &format!("u{}", i + 1), "Z", "-");
        } else {
            m.t(&v, "$", "Z", "acc", "-", "-");
        }
    }
    m.start = "u0".into();
    m
}

/// `{u ♮ u^R}`.
pub fn eq_rev() -> MachineSpec {
    reversal_pairs("eq_rev", 1)
}

/// On `xyz` writes `x^R ♮ y ♮ y^R ♮ z`.
pub fn dup3_reducer() -> MachineSpec {
    let mut m = bit_reducer("dup3_split", "0 1");
    bits_push(&mut m, "q0", "q0", false);
    m.t("q0", "-", "-", "p1", "-", "-");
    bits_pop_emit(&mut m, "p1");
    m.t("p1", "-", "Z", "y", "Z", NAT);
    bits_push(&mut m, "y", "y", true);
    m.t("y", "-", "-", "p2", "-", NAT);
    bits_pop_emit(&mut m, "p2");
    m.t("p2", "-", "Z", "c", "Z", NAT);
    bits_copy(&mut m, "c");
    m.t("c", "$", "-", "acc", "-", "-");
    m
}

/// `{u ♮ u^R ♮ v ♮ v^R}`, one stack phase per pair.
pub fn dup3_oracle() -> MachineSpec {
    reversal_pairs("rev_twice", 2)
}

/// On `x # w` writes `x ♮ m^R` for every factor `m` of `w`.
pub fn match_reducer() -> MachineSpec {
    let mut m = bit_reducer("match_split", "0 1 <hash>");
    bits_copy(&mut m, "x");
    m.start = "x".into();
    m.t("x", "<hash>", "-", "u", "-", NAT);
    for a in ["0", "1"] {
        m.t("u", a, "-", "u", "-", "-").t("v", a, "-", "v", "-", "-");
    }
    m.t("u", "-", "-", "m", "-", "-");
    bits_push(&mut m, "m", "m", false);
    m.t("m", "-", "-", "v", "-", "-").t("v", "$", "-", "e", "-", "-");
    bits_pop_emit(&mut m, "e");
    m.t("e", "-", "Z", "acc", "Z", "-");
    m
}

/// Counts `a1` against `a{j}` with a deficit symbol; other symbols are
/// skipped.
pub fn equal_counts(j: usize) -> MachineSpec {
    let mut m = MachineSpec::new(&format!("count_a1_a{j}"), Kind::Npda)
        .with_input("a1 a2 a3 a4 a5 a6 <hash>")
        .with_stack("Z P N")
        .with_accept("acc");
    let aj = format!("a{j}");
    for top in ["Z", "P"] {
        m.t("q", "a1", top, "q", &format!("P {top}"), "-");
    }
    m.t("q", "a1", "N", "q", "-", "-");
    for top in ["Z", "N"] {
        m.t("q", &aj, top, "q", &format!("N {top}"), "-");
    }
    m.t("q", &aj, "P", "q", "-", "-");
    for s in ["a2", "a3", "a4", "a5", "a6", "<hash>"] {
        if s != aj {
            m.t("q", s, "-", "q", "-", "-");
        }
    }
    m.t("q", "$", "Z", "acc", "-", "-");
    m.start = "q".into();
    m
}

/// Accepts nothing.
pub fn empty_machine() -> MachineSpec {
    let mut m = MachineSpec::new("empty", Kind::Nfa).with_input("0 1").with_accept("acc");
    m.t("q0", "0", "-", "q0", "-", "-").t("q0", "1", "-", "q0", "-", "-");
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::deterministic_violations;
    use crate::sim::machine;
    use crate::symbol::word;

    #[test]
    fn pair_checker_offsets() {
        let even = machine(pair_checker("e", &["0"], 0));
        let odd = machine(pair_checker("o", &["0"], 1));
        let w = |s: &str| word(&s.replace('|', "♮"));
        assert!(even.accepts_default(&w("00|00|000")).unwrap());
        assert!(!even.accepts_default(&w("00|0|000")).unwrap());
        assert!(odd.accepts_default(&w("0|00|00")).unwrap());
        assert!(!odd.accepts_default(&w("00|00|000")).unwrap());
        assert!(deterministic_violations(even.spec()).is_empty());
    }

    #[test]
    fn reducer_outputs() {
        let r = machine(dup2_reducer());
        let outs = r.valid_outputs(&word("01"), crate::RunBounds::for_len(2)).unwrap();
        let got: Vec<_> = outs.into_iter().map(|mut o| o.remove(0)).collect();
        let mut want = vec![word("♮01"), word("0♮1"), word("10♮")];
        want.sort();
        assert_eq!(got, want);
        let sq = machine(sq_reducer());
        let outs = sq.valid_outputs(&word("001111"), crate::RunBounds::for_len(6)).unwrap();
        // splits of 4 into 2 positive parts
        assert_eq!(outs.len(), 3);
    }

    #[test]
    fn counters() {
        let m = machine(equal_counts(4));
        assert!(m.accepts_default(&word("a4 a1 <hash> a2")).unwrap());
        assert!(!m.accepts_default(&word("a4 a4 a1")).unwrap());
    }
}
