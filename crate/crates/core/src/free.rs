//! Non-crossing partitions and first-order factorization of mixed moments.
//!
//! `free_factorize` expands `phi1` of a mixed word into moments of the
//! individual algebras: a sum over non-crossing partitions whose blocks are
//! monochromatic, each block contributing a free cumulant, and each cumulant
//! re-expanded into moments through the Möbius function of the
//! non-crossing lattice.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::expr::{rat, CoeffPoly, MomentSymbol, PolyExpr, Rational, SymmetryFlags, Word};

/// Default bound on the size of the ground set for partition enumeration.
pub const DEFAULT_NC_BOUND: usize = 10;

/// A partition of `{0, .., n-1}`; blocks are sorted and listed by their minimum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Build from blocks over `{0, .., n-1}`; `None` unless they form a partition.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Option<Self> {
        let mut seen = vec![false; n];
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        for b in &blocks {
            if b.is_empty() {
                return None;
            }
            for &i in b {
                if i >= n || seen[i] {
                    return None;
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return None;
        }
        blocks.sort();
        Some(SetPartition { n, blocks })
    }

    /// Partition from a restricted growth string (`labels[i]` = block of `i`).
    fn from_labels(labels: &[usize]) -> Self {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in labels.iter().enumerate() {
            blocks[b].push(i);
        }
        SetPartition {
            n: labels.len(),
            blocks,
        }
    }

    pub fn discrete(n: usize) -> Self {
        SetPartition {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn full(n: usize) -> Self {
        SetPartition {
            n,
            blocks: if n == 0 { vec![] } else { vec![(0..n).collect()] },
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&i))
            .expect("element of the ground set")
    }

    pub fn is_non_crossing(&self) -> bool {
        for (x, b1) in self.blocks.iter().enumerate() {
            for b2 in self.blocks.iter().skip(x + 1) {
                for &p in b1 {
                    for &r in b1 {
                        if r <= p {
                            continue;
                        }
                        if b2.iter().any(|&q| p < q && q < r)
                            && b2.iter().any(|&s| s < p || s > r)
                        {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// `self <= other` in refinement order (every block of `self` inside one of `other`).
    pub fn refines(&self, other: &SetPartition) -> bool {
        self.n == other.n
            && self.blocks.iter().all(|b| {
                let target = other.block_of(b[0]);
                b.iter().all(|&i| other.block_of(i) == target)
            })
    }

    /// Restriction to the positions in `subset` (sorted), relabelled `0..subset.len()`.
    fn restrict(&self, subset: &[usize]) -> SetPartition {
        let index: HashMap<usize, usize> = subset.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let blocks = self
            .blocks
            .iter()
            .filter(|b| index.contains_key(&b[0]))
            .map(|b| b.iter().map(|i| index[i]).collect())
            .collect();
        SetPartition::new(subset.len(), blocks).expect("restriction of a partition")
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{")?;
            for (j, i) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", i + 1)?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// A set partition known to be non-crossing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NonCrossingPartition(SetPartition);

impl NonCrossingPartition {
    pub fn new(p: SetPartition) -> Option<Self> {
        p.is_non_crossing().then_some(NonCrossingPartition(p))
    }

    pub fn partition(&self) -> &SetPartition {
        &self.0
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        self.0.blocks()
    }

    pub fn size(&self) -> usize {
        self.0.size()
    }

    /// Kreweras complement, computed as the cycles of the permutation
    /// `pi^-1 gamma` with `gamma = (0 1 .. n-1)`.
    pub fn kreweras(&self) -> NonCrossingPartition {
        let n = self.size();
        let mut labels = vec![usize::MAX; n];
        let mut next = 0;
        for i in 0..n {
            if labels[i] != usize::MAX {
                continue;
            }
            let mut cur = i;
            while labels[cur] == usize::MAX {
                labels[cur] = next;
                cur = self.kreweras_successor(cur);
            }
            next += 1;
        }
        NonCrossingPartition(SetPartition::from_labels(&relabel(&labels)))
    }

    /// `pi^-1(gamma(i))`, each block read as an increasing cycle.
    fn kreweras_successor(&self, i: usize) -> usize {
        let n = self.size();
        let j = (i + 1) % n;
        // π⁻¹(j): predecessor of j in its block, cyclically.
        let b = &self.blocks()[self.0.block_of(j)];
        let pos = b.iter().position(|&x| x == j).expect("member");
        b[(pos + b.len() - 1) % b.len()]
    }
}

fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let k = map.len();
            *map.entry(*l).or_insert(k)
        })
        .collect()
}

/// All set partitions of `{0..n-1}` as restricted growth strings.
pub fn enumerate_set_partitions(n: usize) -> Vec<SetPartition> {
    fn rec(labels: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<SetPartition>) {
        if labels.len() == n {
            out.push(SetPartition::from_labels(labels));
            return;
        }
        let limit = if labels.is_empty() { 0 } else { max + 1 };
        for l in 0..=limit {
            labels.push(l);
            rec(labels, max.max(l), n, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(SetPartition::discrete(0));
    } else {
        rec(&mut Vec::new(), 0, n, &mut out);
    }
    out
}

fn nc_cache() -> &'static Mutex<BTreeMap<usize, Vec<NonCrossingPartition>>> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Vec<NonCrossingPartition>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// All non-crossing partitions of `{1..n}` (stored zero-based), with the
/// default size bound.
pub fn enumerate_nc(n: usize) -> Result<Vec<NonCrossingPartition>> {
    enumerate_nc_bounded(n, DEFAULT_NC_BOUND)
}

pub fn enumerate_nc_bounded(n: usize, bound: usize) -> Result<Vec<NonCrossingPartition>> {
    if n > bound {
        return Err(Error::SizeLimit {
            what: "partition ground set",
            actual: n,
            bound,
        });
    }
    if let Some(v) = nc_cache().lock().expect("cache lock").get(&n) {
        return Ok(v.clone());
    }
    let all: Vec<NonCrossingPartition> = enumerate_set_partitions(n)
        .into_iter()
        .filter_map(NonCrossingPartition::new)
        .collect();
    nc_cache()
        .lock()
        .expect("cache lock")
        .insert(n, all.clone());
    Ok(all)
}

pub fn catalan(n: usize) -> u64 {
    (0..n).fold(1u64, |c, k| c * 2 * (2 * k as u64 + 1) / (k as u64 + 2))
}

/// Möbius value `mu[0, 1]` on `NC(k)`: `(-1)^(k-1) Cat(k-1)`.
fn moebius_full(k: usize) -> i64 {
    let sign = if k % 2 == 1 { 1 } else { -1 };
    sign * catalan(k - 1) as i64
}

/// Möbius function of the non-crossing lattice on the interval `[pi, sigma]`.
///
/// The interval factorizes over the blocks of `sigma`, and each factor
/// `[pi|V, 1_V]` is isomorphic to `[0, K(pi|V)]`, a product of full lattices
/// indexed by the blocks of the Kreweras complement.
pub fn nc_moebius(pi: &NonCrossingPartition, sigma: &NonCrossingPartition) -> Result<i64> {
    if !pi.partition().refines(sigma.partition()) {
        return Err(Error::Order);
    }
    let mut mu = 1i64;
    for block in sigma.blocks() {
        let restricted = NonCrossingPartition(pi.partition().restrict(block));
        for w in restricted.kreweras().blocks() {
            mu *= moebius_full(w.len());
        }
    }
    Ok(mu)
}

/// First-order mixing rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FirstOrderRule {
    Free,
    Tensor,
}

fn cumulant_cache() -> &'static Mutex<HashMap<(Word, bool), PolyExpr>> {
    static CACHE: OnceLock<Mutex<HashMap<(Word, bool), PolyExpr>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Free cumulant of a single-algebra word, written in moments of its subwords.
fn cumulant_in_moments(w: &Word, flags: SymmetryFlags) -> Result<PolyExpr> {
    let key = (w.clone(), flags.phi1_tracial);
    if let Some(e) = cumulant_cache().lock().expect("cache lock").get(&key) {
        return Ok(e.clone());
    }
    let k = w.len();
    let one = NonCrossingPartition(SetPartition::full(k));
    let mut out = PolyExpr::zero();
    for sigma in enumerate_nc(k)? {
        let mu = nc_moebius(&sigma, &one)?;
        let term = block_moments(w, sigma.blocks(), flags);
        out = out.add(&term.scale(&CoeffPoly::int(mu)));
    }
    cumulant_cache()
        .lock()
        .expect("cache lock")
        .insert(key, out.clone());
    Ok(out)
}

fn subword(w: &Word, positions: &[usize]) -> Word {
    positions.iter().map(|&i| w.letters()[i]).collect()
}

fn block_moments(w: &Word, blocks: &[Vec<usize>], flags: SymmetryFlags) -> PolyExpr {
    PolyExpr::product(
        blocks
            .iter()
            .map(|b| MomentSymbol::phi1(subword(w, b), flags)),
    )
}

/// `phi1(w)` under freeness, expanded into moments of the individual algebras.
pub fn free_factorize(w: &Word, flags: SymmetryFlags) -> Result<PolyExpr> {
    if w.is_single_algebra() {
        return Ok(PolyExpr::from_reduced(MomentSymbol::phi1(w.clone(), flags)));
    }
    let mut out = PolyExpr::zero();
    for pi in enumerate_nc(w.len())? {
        let monochromatic = pi.blocks().iter().all(|b| {
            let a = w.letters()[b[0]].algebra;
            b.iter().all(|&i| w.letters()[i].algebra == a)
        });
        if !monochromatic {
            continue;
        }
        let mut term = PolyExpr::one();
        for b in pi.blocks() {
            term = term.mul(&cumulant_in_moments(&subword(w, b), flags)?);
        }
        out = out.add(&term);
    }
    Ok(out)
}

/// `phi1(w)` under tensor independence: product over algebras of the
/// subwords in their original order.
pub fn tensor_factorize(w: &Word, flags: SymmetryFlags) -> PolyExpr {
    PolyExpr::product(w.algebras().into_iter().map(|a| {
        let sub: Word = w.letters().iter().copied().filter(|l| l.algebra == a).collect();
        MomentSymbol::phi1(sub, flags)
    }))
}

pub fn factorize(w: &Word, rule: FirstOrderRule, flags: SymmetryFlags) -> Result<PolyExpr> {
    match rule {
        FirstOrderRule::Free => free_factorize(w, flags),
        FirstOrderRule::Tensor => Ok(tensor_factorize(w, flags)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToCumulants,
    ToMoments,
}

/// Convert a univariate moment sequence to free cumulants or back.
///
/// `table` maps order `k` to its value and must contain every order `1..=n`
/// where `n` is its largest key.
pub fn moment_cumulant(
    direction: Direction,
    table: &BTreeMap<usize, Rational>,
) -> Result<BTreeMap<usize, Rational>> {
    let n = table.keys().copied().max().unwrap_or(0);
    for k in 1..=n {
        if !table.contains_key(&k) {
            return Err(Error::MissingOrder(k));
        }
    }
    let mut out = BTreeMap::new();
    for k in 1..=n {
        let one = NonCrossingPartition(SetPartition::full(k));
        let mut value = Rational::zero();
        for pi in enumerate_nc(k)? {
            let weight = match direction {
                Direction::ToMoments => 1,
                Direction::ToCumulants => nc_moebius(&pi, &one)?,
            };
            let mut prod = rat(weight);
            for b in pi.blocks() {
                prod *= &table[&b.len()];
            }
            value += prod;
        }
        out.insert(k, value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, parse_word};

    #[test]
    fn catalan_counts() {
        for (n, c) in [(1, 1), (2, 2), (3, 5), (4, 14), (5, 42), (6, 132)] {
            assert_eq!(enumerate_nc(n).unwrap().len(), c, "n = {n}");
            assert_eq!(catalan(n), c as u64);
        }
        assert!(matches!(enumerate_nc(11), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn moebius_small_cases() {
        let d2 = NonCrossingPartition::new(SetPartition::discrete(2)).unwrap();
        let f2 = NonCrossingPartition::new(SetPartition::full(2)).unwrap();
        assert_eq!(nc_moebius(&d2, &d2).unwrap(), 1);
        assert_eq!(nc_moebius(&d2, &f2).unwrap(), -1);
        let d3 = NonCrossingPartition::new(SetPartition::discrete(3)).unwrap();
        let f3 = NonCrossingPartition::new(SetPartition::full(3)).unwrap();
        assert_eq!(nc_moebius(&d3, &f3).unwrap(), 2);
        assert_eq!(nc_moebius(&f3, &d3), Err(Error::Order));
    }

    #[test]
    fn kreweras_of_extremes() {
        let d = NonCrossingPartition::new(SetPartition::discrete(4)).unwrap();
        let f = NonCrossingPartition::new(SetPartition::full(4)).unwrap();
        assert_eq!(d.kreweras(), f);
        assert_eq!(f.kreweras(), d);
    }

    #[test]
    fn alternating_four_letter_word() {
        let flags = SymmetryFlags::default();
        let w = parse_word("a1 b1 a2 b2").unwrap();
        let got = free_factorize(&w, flags).unwrap();
        let want = parse_expr(
            "phi1(a1 a2)*phi1(b1)*phi1(b2) + phi1(a1)*phi1(a2)*phi1(b1 b2) - phi1(a1)*phi1(a2)*phi1(b1)*phi1(b2)",
            flags,
        )
        .unwrap();
        assert_eq!(got, want);
        let crossing = parse_expr("phi1(a1 a2)*phi1(b1 b2)", flags).unwrap();
        let m = crossing.monomials().next().unwrap();
        assert!(got.coefficient_of(m).is_zero());
    }

    #[test]
    fn tensor_rule() {
        let flags = SymmetryFlags::default();
        let w = parse_word("a1 b1 a2 b2").unwrap();
        assert_eq!(
            tensor_factorize(&w, flags),
            parse_expr("phi1(a1 a2)*phi1(b1 b2)", flags).unwrap()
        );
        let w = parse_word("a1 b1").unwrap();
        assert_eq!(
            free_factorize(&w, flags).unwrap(),
            parse_expr("phi1(a1)*phi1(b1)", flags).unwrap()
        );
    }

    #[test]
    fn moment_cumulant_examples() {
        let point: BTreeMap<usize, Rational> = (1..=5).map(|k| (k, rat(1))).collect();
        let k = moment_cumulant(Direction::ToCumulants, &point).unwrap();
        assert_eq!(k[&1], rat(1));
        assert!((2..=5).all(|i| k[&i].is_zero()));

        let semicircle: BTreeMap<usize, Rational> =
            [(1, 0), (2, 1), (3, 0), (4, 2)].into_iter().map(|(k, v)| (k, rat(v))).collect();
        let k = moment_cumulant(Direction::ToCumulants, &semicircle).unwrap();
        assert_eq!(k[&2], rat(1));
        assert!(k[&1].is_zero() && k[&3].is_zero() && k[&4].is_zero());

        let gap: BTreeMap<usize, Rational> = [(1, rat(0)), (3, rat(1))].into_iter().collect();
        assert_eq!(
            moment_cumulant(Direction::ToMoments, &gap),
            Err(Error::MissingOrder(2))
        );
    }
}
