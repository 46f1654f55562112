//! Mixed-moment patterns and their general multilinear ansätze.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{
    canonicalize_symbol, Algebra, CoeffPoly, Cursor, Letter, MomentMonomial, MomentSymbol,
    PolyExpr, Reduced, SymmetryFlags, Unknown, Word,
};
use crate::free::enumerate_set_partitions;

/// Default bound on the number of letters in an enumerated pattern.
pub const DEFAULT_LETTER_BOUND: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    First,
    Second,
}

/// The left-hand side of a mixed-moment formula, e.g. `phi2(a1 b1, a2 b2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    symbol: MomentSymbol,
    flags: SymmetryFlags,
}

impl Pattern {
    /// Validate a raw symbol as a pattern: nonempty arguments, pairwise
    /// distinct letters, at least two algebras.
    pub fn new(symbol: MomentSymbol, flags: SymmetryFlags) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidPattern {
            pattern: symbol.to_string(),
            reason: reason.to_string(),
        };
        if symbol.words().iter().any(|w| w.is_empty()) {
            return Err(invalid("arguments must be nonempty words"));
        }
        let letters: Vec<Letter> = symbol.letters().collect();
        let distinct: BTreeSet<Letter> = letters.iter().copied().collect();
        if distinct.len() != letters.len() {
            return Err(invalid("letters must be pairwise distinct"));
        }
        if symbol.algebras().len() < 2 {
            return Err(Error::DegeneratePattern(symbol.to_string()));
        }
        Ok(Pattern { symbol, flags })
    }

    /// Parse the pattern mini-language: `phi1(<word>)` or `phi2(<word>, <word>)`.
    pub fn parse(src: &str, flags: SymmetryFlags) -> Result<Self> {
        let mut c = Cursor::new(src);
        let symbol = c.raw_symbol()?;
        if !c.at_end() {
            return c.error("trailing input after pattern");
        }
        Pattern::new(symbol, flags)
    }

    pub fn symbol(&self) -> &MomentSymbol {
        &self.symbol
    }

    pub fn flags(&self) -> SymmetryFlags {
        self.flags
    }

    pub fn order(&self) -> Order {
        if self.symbol.is_second_order() {
            Order::Second
        } else {
            Order::First
        }
    }

    pub fn letters(&self) -> Vec<Letter> {
        self.symbol.letters().collect()
    }

    pub fn letter_count(&self) -> usize {
        self.symbol.letter_count()
    }

    pub fn algebras(&self) -> Vec<Algebra> {
        self.symbol.algebras()
    }

    /// Canonical form of the left-hand side.
    pub fn canonical(&self) -> MomentSymbol {
        match canonicalize_symbol(&self.symbol, self.flags) {
            Reduced::Symbol(s) => s,
            _ => unreachable!("patterns have nonempty arguments"),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol)
    }
}

/// General formula for a pattern: one fresh unknown per admissible monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    pub pattern: Pattern,
    pub monomials: Vec<MomentMonomial>,
    pub unknowns: Vec<Unknown>,
    pub terms: PolyExpr,
}

impl Ansatz {
    pub fn unknown_for(&self, m: &MomentMonomial) -> Option<Unknown> {
        self.monomials
            .iter()
            .position(|x| x == m)
            .map(|i| self.unknowns[i])
    }
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn reduced_symbol(r: Reduced) -> MomentSymbol {
    match r {
        Reduced::Symbol(s) => s,
        _ => unreachable!("nonempty arguments"),
    }
}

/// Every canonical single-algebra symbol on exactly the letters of `block`.
fn block_symbols(block: &[Letter], order: Order, flags: SymmetryFlags) -> BTreeSet<MomentSymbol> {
    let mut out = BTreeSet::new();
    for perm in permutations(block) {
        out.insert(reduced_symbol(MomentSymbol::phi1(Word::new(perm), flags)));
    }
    if order == Order::Second && block.len() >= 2 {
        let k = block.len();
        // Nonempty proper subsets go to the first argument.
        for mask in 1..(1u32 << k) - 1 {
            let (first, second): (Vec<_>, Vec<_>) = block
                .iter()
                .enumerate()
                .partition(|(i, _)| mask & (1 << i) != 0);
            let first: Vec<Letter> = first.into_iter().map(|(_, l)| *l).collect();
            let second: Vec<Letter> = second.into_iter().map(|(_, l)| *l).collect();
            for p in permutations(&first) {
                for q in permutations(&second) {
                    out.insert(reduced_symbol(MomentSymbol::phi2(
                        Word::new(p.clone()),
                        Word::new(q),
                        flags,
                    )));
                }
            }
        }
    }
    out
}

/// All factorizations of the letters of one algebra into admissible symbols.
fn algebra_factorizations(
    letters: &[Letter],
    order: Order,
    flags: SymmetryFlags,
) -> BTreeSet<Vec<MomentSymbol>> {
    let mut out = BTreeSet::new();
    for partition in enumerate_set_partitions(letters.len()) {
        let mut partial: Vec<Vec<MomentSymbol>> = vec![Vec::new()];
        for block in partition.blocks() {
            let block_letters: Vec<Letter> = block.iter().map(|&i| letters[i]).collect();
            let options = block_symbols(&block_letters, order, flags);
            partial = partial
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |s| {
                        let mut v = prefix.clone();
                        v.push(s.clone());
                        v
                    })
                })
                .collect();
        }
        for mut v in partial {
            v.sort();
            out.insert(v);
        }
    }
    out
}

/// Admissible multilinear monomials for `p`, in the fixed monomial order.
pub fn enumerate_monomials(p: &Pattern) -> Result<Vec<MomentMonomial>> {
    enumerate_monomials_bounded(p, DEFAULT_LETTER_BOUND)
}

pub fn enumerate_monomials_bounded(p: &Pattern, bound: usize) -> Result<Vec<MomentMonomial>> {
    if p.letter_count() > bound {
        return Err(Error::SizeLimit {
            what: "pattern letters",
            actual: p.letter_count(),
            bound,
        });
    }
    let mut by_algebra: BTreeMap<Algebra, Vec<Letter>> = BTreeMap::new();
    for l in p.letters() {
        by_algebra.entry(l.algebra).or_default().push(l);
    }
    let mut products: Vec<Vec<MomentSymbol>> = vec![Vec::new()];
    for letters in by_algebra.values() {
        let options = algebra_factorizations(letters, p.order(), p.flags());
        products = products
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.extend(o.iter().cloned());
                    v
                })
            })
            .collect();
    }
    let set: BTreeSet<MomentMonomial> = products.into_iter().map(MomentMonomial::new).collect();
    Ok(set.into_iter().collect())
}

/// `sum_i alpha_i m_i` over the enumerated monomials, unknowns numbered from
/// `first_unknown`.
pub fn build_ansatz_from(p: &Pattern, first_unknown: u32) -> Result<Ansatz> {
    let monomials = enumerate_monomials(p)?;
    let unknowns: Vec<Unknown> = (0..monomials.len() as u32)
        .map(|i| Unknown(first_unknown + i))
        .collect();
    let mut terms = PolyExpr::zero();
    for (m, u) in monomials.iter().zip(&unknowns) {
        terms.add_term(m.clone(), CoeffPoly::var(*u));
    }
    Ok(Ansatz {
        pattern: p.clone(),
        monomials,
        unknowns,
        terms,
    })
}

pub fn build_ansatz(p: &Pattern) -> Result<Ansatz> {
    build_ansatz_from(p, 1)
}
