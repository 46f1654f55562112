//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use uniprod::expr::{Algebra, Letter, MomentSymbol, PolyExpr, SymmetryFlags, Word};
use uniprod::free::{NonCrossingPartition, SetPartition};

/// A single-algebra element: linear combination of words (the empty word is 1).
type Element = Vec<(Word, PolyExpr)>;

fn phi(e: &Element, flags: SymmetryFlags) -> PolyExpr {
    e.iter().fold(PolyExpr::zero(), |acc, (w, c)| {
        acc.add(&c.mul(&PolyExpr::from_reduced(MomentSymbol::phi1(w.clone(), flags))))
    })
}

fn product(x: &Element, y: &Element) -> Element {
    let mut out = Vec::new();
    for (u, c) in x {
        for (v, d) in y {
            out.push((u.concat(v), c.mul(d)));
        }
    }
    out
}

fn centered(e: &Element, flags: SymmetryFlags) -> Element {
    let mut out = e.clone();
    out.push((Word::unit(), phi(e, flags).negate()));
    out
}

/// `phi` of an ordered product under freeness, from the defining property
/// alone: alternating products of centered elements have zero moment.
fn free_phi(runs: Vec<(Algebra, Element)>, flags: SymmetryFlags) -> PolyExpr {
    let mut merged: Vec<(Algebra, Element)> = Vec::new();
    for (a, e) in runs {
        match merged.last_mut() {
            Some((b, f)) if *b == a => *f = product(f, &e),
            _ => merged.push((a, e)),
        }
    }
    match merged.len() {
        0 => return PolyExpr::one(),
        1 => return phi(&merged[0].1, flags),
        _ => {}
    }
    let k = merged.len();
    let means: Vec<PolyExpr> = merged.iter().map(|(_, e)| phi(e, flags)).collect();
    let mut total = PolyExpr::zero();
    for mask in 0..(1u32 << k) - 1 {
        let mut scalar = PolyExpr::one();
        let mut rest = Vec::new();
        for (i, (a, e)) in merged.iter().enumerate() {
            if mask & (1 << i) != 0 {
                rest.push((*a, centered(e, flags)));
            } else {
                scalar = scalar.mul(&means[i]);
            }
        }
        total = total.add(&scalar.mul(&free_phi(rest, flags)));
    }
    total
}

pub fn free_moment_oracle(w: &Word, flags: SymmetryFlags) -> PolyExpr {
    let runs = w
        .letters()
        .iter()
        .map(|l| (l.algebra, vec![(Word::new(vec![*l]), PolyExpr::one())]))
        .collect();
    free_phi(runs, flags)
}

/// Multilinear word spelled by a sequence of algebra labels, e.g. `"abab"`
/// gives `a1 b1 a2 b2`.
pub fn spelled(labels: &str) -> Word {
    let mut counts: BTreeMap<char, u32> = BTreeMap::new();
    labels
        .chars()
        .map(|c| {
            let i = counts.entry(c).or_default();
            *i += 1;
            Letter::new(c, *i)
        })
        .collect()
}

/// All label sequences of the given length over the first `algebras` labels.
pub fn spellings(len: usize, algebras: usize) -> Vec<String> {
    let labels: Vec<char> = "abc".chars().take(algebras).collect();
    let mut out = vec![String::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| labels.iter().map(move |c| format!("{s}{c}")))
            .collect();
    }
    out
}

/// All perfect matchings of `0..n`, as involutions.
fn pairings(n: usize) -> Vec<Vec<usize>> {
    fn go(free: Vec<usize>, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some((&first, rest)) = free.split_first() else {
            out.push(acc.clone());
            return;
        };
        for (j, &partner) in rest.iter().enumerate() {
            acc[first] = partner;
            acc[partner] = first;
            let mut remaining = rest.to_vec();
            remaining.remove(j);
            go(remaining, acc, out);
        }
    }
    let mut out = Vec::new();
    if n % 2 == 0 {
        go((0..n).collect(), &mut vec![0; n], &mut out);
    }
    out
}

fn crosses(pairing: &[usize]) -> bool {
    (0..pairing.len()).any(|i| {
        let j = pairing[i];
        (0..pairing.len()).any(|k| {
            let l = pairing[k];
            i < k && k < j && j < l
        })
    })
}

/// Non-crossing pair partitions of `k` points, counted by brute force.
pub fn nc_pairings(k: usize) -> u64 {
    pairings(k).iter().filter(|p| !crosses(p)).count() as u64
}

fn cycles(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut count = 0;
    for s in 0..perm.len() {
        if !seen[s] {
            count += 1;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
            }
        }
    }
    count
}

/// Pairings of a `p`-cycle and a `q`-cycle that connect the two circles and
/// are planar on the annulus (genus zero), counted by brute force.
pub fn annular_pairings(p: usize, q: usize) -> u64 {
    let n = p + q;
    let gamma: Vec<usize> = (0..n)
        .map(|i| if i < p { (i + 1) % p } else { p + (i - p + 1) % q })
        .collect();
    pairings(n)
        .iter()
        .filter(|pi| {
            let connected = (0..p).any(|i| pi[i] >= p);
            let pi_gamma: Vec<usize> = (0..n).map(|i| pi[gamma[i]]).collect();
            connected && cycles(&pi_gamma) == n / 2
        })
        .count() as u64
}

/// Möbius function of the lattice of non-crossing partitions by direct
/// recursion: `mu(x, x) = 1`, `mu(x, z) = -sum_{x <= y < z} mu(x, y)`.
pub fn lattice_moebius(pi: &NonCrossingPartition, sigma: &NonCrossingPartition, all: &[NonCrossingPartition]) -> i64 {
    if pi == sigma {
        return 1;
    }
    let below: Vec<&NonCrossingPartition> = all
        .iter()
        .filter(|y| {
            pi.partition().refines(y.partition()) && y.partition().refines(sigma.partition()) && *y != sigma
        })
        .collect();
    -below.iter().map(|y| lattice_moebius(pi, y, all)).sum::<i64>()
}

pub fn full(n: usize) -> NonCrossingPartition {
    NonCrossingPartition::new(SetPartition::full(n)).expect("full partition is non-crossing")
}
