//! Solved (or partially solved) mixed-moment rules and the machinery that
//! applies them.
//!
//! A rule is stored for one left-hand side such as `phi2(a1 b1, a2 b2)` and
//! applies to any moment of the same shape: each letter of the rule stands
//! for a maximal run of elements from one algebra (or from one group of
//! algebras when several are merged). Applying rules repeatedly reduces a
//! mixed moment to a polynomial in moments of the individual algebras.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::expr::{
    canonicalize_symbol, Algebra, Letter, MomentSymbol, PolyExpr, Reduced, SymmetryFlags, Word,
};
use crate::free::{factorize, FirstOrderRule, DEFAULT_NC_BOUND};

/// How mixed `phi1` moments are expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstOrderMode {
    /// Use a fixed first-order product (free or tensor).
    Factorize(FirstOrderRule),
    /// Use first-order rules stored in the rule set (classification runs).
    Rules,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    /// Left-hand side as a raw pattern symbol with one letter per run.
    pub lhs: MomentSymbol,
    pub rhs: PolyExpr,
    /// Provenance, e.g. `2,2:branch-1`.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub flags: SymmetryFlags,
    pub first_order: FirstOrderMode,
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(flags: SymmetryFlags, first_order: FirstOrderMode) -> Self {
        RuleSet {
            flags,
            first_order,
            rules: Vec::new(),
        }
    }

    /// Default context for second-order derivations: free first order, no rules.
    pub fn free() -> Self {
        RuleSet::new(
            SymmetryFlags::default(),
            FirstOrderMode::Factorize(FirstOrderRule::Free),
        )
    }

    pub fn insert(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    pub fn with(mut self, rule: Rule) -> Self {
        self.insert(rule);
        self
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Rule whose left-hand side has the shape of `s` (with algebras as groups).
    pub fn find(&self, s: &MomentSymbol) -> Option<&Rule> {
        self.rules
            .iter()
            .find(|r| match_rule(&r.lhs, s, &|a| a, self.flags).is_some())
    }
}

/// A maximal run of letters whose algebras belong to one group.
#[derive(Debug, Clone)]
struct Element<G> {
    group: G,
    word: Word,
}

fn runs<G: Copy + Eq>(word: &Word, group: &impl Fn(Algebra) -> G, cyclic: bool) -> Vec<Element<G>> {
    let mut out: Vec<Element<G>> = Vec::new();
    for l in word.letters() {
        let g = group(l.algebra);
        match out.last_mut() {
            Some(e) if e.group == g => e.word = e.word.concat(&Word::new(vec![*l])),
            _ => out.push(Element {
                group: g,
                word: Word::new(vec![*l]),
            }),
        }
    }
    if cyclic && out.len() > 1 && out[0].group == out[out.len() - 1].group {
        let last = out.pop().expect("nonempty");
        out[0].word = last.word.concat(&out[0].word);
    }
    out
}

fn rotations<T: Clone>(items: &[T], allowed: bool) -> Vec<Vec<T>> {
    if !allowed || items.len() < 2 {
        return vec![items.to_vec()];
    }
    (0..items.len())
        .map(|k| {
            let mut v = items[k..].to_vec();
            v.extend_from_slice(&items[..k]);
            v
        })
        .collect()
}

/// A reading of a target symbol as an instance of a rule pattern: the
/// substitution of rule letters by words, and the algebra-to-group map.
pub type Match<G> = (BTreeMap<Letter, Word>, BTreeMap<Algebra, G>);

/// Every way to read `target` as an instance of the rule pattern `lhs`.
///
/// `group` assigns target algebras to groups; algebras in one group are
/// treated as a single algebra.
pub fn match_all<G: Copy + Eq + Ord>(
    lhs: &MomentSymbol,
    target: &MomentSymbol,
    group: &impl Fn(Algebra) -> G,
    flags: SymmetryFlags,
) -> Vec<Match<G>> {
    matches(lhs, target, group, flags, false)
}

fn match_rule<G: Copy + Eq + Ord>(
    lhs: &MomentSymbol,
    target: &MomentSymbol,
    group: &impl Fn(Algebra) -> G,
    flags: SymmetryFlags,
) -> Option<BTreeMap<Letter, Word>> {
    matches(lhs, target, group, flags, true)
        .into_iter()
        .next()
        .map(|(subst, _)| subst)
}

fn matches<G: Copy + Eq + Ord>(
    lhs: &MomentSymbol,
    target: &MomentSymbol,
    group: &impl Fn(Algebra) -> G,
    flags: SymmetryFlags,
    first_only: bool,
) -> Vec<Match<G>> {
    let candidates: Vec<Vec<Vec<Element<G>>>> = match (lhs, target) {
        (MomentSymbol::Phi1(_), MomentSymbol::Phi1(w)) => {
            let r = runs(w, group, flags.phi1_tracial);
            rotations(&r, flags.phi1_tracial)
                .into_iter()
                .map(|x| vec![x])
                .collect()
        }
        (MomentSymbol::Phi2(..), MomentSymbol::Phi2(u, v)) => {
            let t = flags.phi2_tracial_each_arg;
            let ru = runs(u, group, t);
            let rv = runs(v, group, t);
            let mut out = Vec::new();
            for x in rotations(&ru, t) {
                for y in rotations(&rv, t) {
                    out.push(vec![x.clone(), y.clone()]);
                    if flags.phi2_symmetric {
                        out.push(vec![y, x.clone()]);
                    }
                }
            }
            out
        }
        _ => return Vec::new(),
    };
    let pattern = lhs.words();
    let mut found: Vec<Match<G>> = Vec::new();
    'candidate: for args in candidates {
        if args.len() != pattern.len() {
            continue;
        }
        let mut to_group: BTreeMap<Algebra, G> = BTreeMap::new();
        let mut to_algebra: BTreeMap<G, Algebra> = BTreeMap::new();
        let mut subst = BTreeMap::new();
        for (elements, word) in args.iter().zip(&pattern) {
            if elements.len() != word.len() {
                continue 'candidate;
            }
            for (e, l) in elements.iter().zip(word.letters()) {
                match (to_group.get(&l.algebra), to_algebra.get(&e.group)) {
                    (None, None) => {
                        to_group.insert(l.algebra, e.group);
                        to_algebra.insert(e.group, l.algebra);
                    }
                    (Some(g), Some(a)) if *g == e.group && *a == l.algebra => {}
                    _ => continue 'candidate,
                }
                subst.insert(*l, e.word.clone());
            }
        }
        if !found.iter().any(|(s, _)| *s == subst) {
            found.push((subst, to_group));
            if first_only {
                break;
            }
        }
    }
    found
}

/// Substitute rule letters by words throughout a rule's right-hand side.
pub fn instantiate(rhs: &PolyExpr, subst: &BTreeMap<Letter, Word>, flags: SymmetryFlags) -> PolyExpr {
    rhs.map_symbols::<()>(|s| {
        Ok(PolyExpr::from_reduced(s.map_words(flags, |w| {
            w.letters().iter().fold(Word::unit(), |acc, l| match subst.get(l) {
                Some(x) => acc.concat(x),
                None => acc.concat(&Word::new(vec![*l])),
            })
        })))
    })
    .expect("infallible")
}

fn orderings(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for smaller in orderings(n - 1) {
        for pos in 0..n {
            let mut v = smaller.clone();
            v.insert(pos, n - 1);
            out.push(v);
        }
    }
    out
}

/// Generic rendering of the shape of a mixed symbol, one letter per run,
/// relabelled `a, b, c, ..` so that the result is itself a valid pattern.
/// Among relabellings the one giving `a` the most runs is preferred.
pub fn shape_string(s: &MomentSymbol, flags: SymmetryFlags) -> String {
    let algebras = s.algebras();
    let arg_runs: Vec<Vec<Algebra>> = s
        .words()
        .iter()
        .map(|w| {
            let cyclic = if s.is_second_order() {
                flags.phi2_tracial_each_arg
            } else {
                flags.phi1_tracial
            };
            runs(w, &|a| a, cyclic).into_iter().map(|e| e.group).collect()
        })
        .collect();
    let mut best: Option<(Vec<std::cmp::Reverse<usize>>, String)> = None;
    for order in orderings(algebras.len()) {
        let label = |a: Algebra| {
            let i = algebras.iter().position(|x| *x == a).expect("algebra of s");
            (b'a' + order[i] as u8) as char
        };
        let mut serial = 0;
        let words: Vec<Word> = arg_runs
            .iter()
            .map(|r| {
                r.iter()
                    .map(|a| {
                        serial += 1;
                        Letter::new(label(*a), serial)
                    })
                    .collect()
            })
            .collect();
        let raw = match s {
            MomentSymbol::Phi1(_) => MomentSymbol::Phi1(words[0].clone()),
            MomentSymbol::Phi2(..) => MomentSymbol::Phi2(words[0].clone(), words[1].clone()),
        };
        let Reduced::Symbol(canon) = canonicalize_symbol(&raw, flags) else {
            continue;
        };
        let mut next: BTreeMap<Algebra, u32> = BTreeMap::new();
        let mut renumber = |w: &Word| -> Word {
            w.letters()
                .iter()
                .map(|l| {
                    let k = next.entry(l.algebra).or_insert(0);
                    *k += 1;
                    Letter { algebra: l.algebra, index: *k }
                })
                .collect()
        };
        let shown = match &canon {
            MomentSymbol::Phi1(w) => MomentSymbol::Phi1(renumber(w)),
            MomentSymbol::Phi2(u, v) => {
                let u = renumber(u);
                MomentSymbol::Phi2(u, renumber(v))
            }
        };
        let mut counts = vec![std::cmp::Reverse(0); algebras.len()];
        for l in shown.letters() {
            counts[(l.algebra.label() as u8 - b'a') as usize].0 += 1;
        }
        let key = (counts, shown.to_string());
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    best.map(|(_, s)| s).unwrap_or_default()
}

/// Expands mixed moments into moments of the individual algebras using a
/// rule context, an optional rule under construction, and the first-order
/// mode of the context.
pub struct Expander<'a> {
    ctx: &'a RuleSet,
    current: Option<&'a Rule>,
    letter_bound: usize,
    memo: RefCell<HashMap<MomentSymbol, PolyExpr>>,
}

impl<'a> Expander<'a> {
    pub fn new(ctx: &'a RuleSet, current: Option<&'a Rule>) -> Self {
        Expander {
            ctx,
            current,
            letter_bound: DEFAULT_NC_BOUND,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn flags(&self) -> SymmetryFlags {
        self.ctx.flags
    }

    fn candidates(&self) -> impl Iterator<Item = &'a Rule> {
        self.current.into_iter().chain(self.ctx.rules().iter())
    }

    /// Apply the first matching rule once, with `group` deciding which
    /// algebras count as one.
    pub fn apply_once<G: Copy + Eq + Ord>(
        &self,
        s: &MomentSymbol,
        group: &impl Fn(Algebra) -> G,
    ) -> Option<PolyExpr> {
        if matches!(s, MomentSymbol::Phi1(_)) && self.ctx.first_order != FirstOrderMode::Rules {
            return None;
        }
        self.candidates().find_map(|r| {
            match_rule(&r.lhs, s, group, self.flags()).map(|subst| instantiate(&r.rhs, &subst, self.flags()))
        })
    }

    pub fn expand(&self, e: &PolyExpr) -> Result<PolyExpr> {
        e.map_symbols(|s| self.expand_symbol(s))
    }

    pub fn expand_symbol(&self, s: &MomentSymbol) -> Result<PolyExpr> {
        if !s.is_mixed() {
            return Ok(PolyExpr::term(
                crate::expr::MomentMonomial::new(vec![s.clone()]),
                crate::expr::CoeffPoly::one(),
            ));
        }
        if let Some(e) = self.memo.borrow().get(s) {
            return Ok(e.clone());
        }
        if s.letter_count() > self.letter_bound {
            return Err(Error::SizeLimit {
                what: "letters in an expanded moment",
                actual: s.letter_count(),
                bound: self.letter_bound,
            });
        }
        let out = match (s, self.ctx.first_order) {
            (MomentSymbol::Phi1(w), FirstOrderMode::Factorize(rule)) => factorize(w, rule, self.flags())?,
            _ => match self.apply_once(s, &|a| a) {
                Some(e) => self.expand(&e)?,
                None => {
                    return Err(Error::Staging {
                        shape: shape_string(s, self.flags()),
                    })
                }
            },
        };
        self.memo.borrow_mut().insert(s.clone(), out.clone());
        Ok(out)
    }

    /// Expand `s` by first applying one rule with the given algebras merged,
    /// then expanding everything that results.
    pub fn expand_grouped(&self, s: &MomentSymbol, merged: &[Algebra]) -> Result<PolyExpr> {
        let representative = merged.iter().min().copied();
        let group = |a: Algebra| {
            if merged.contains(&a) {
                representative.expect("nonempty merge")
            } else {
                a
            }
        };
        let first = match self.apply_once(s, &group) {
            Some(e) => e,
            None => {
                let relabelled = s
                    .map_words(self.flags(), |w| w.map_letters(|l| Letter {
                        algebra: group(l.algebra),
                        index: l.index,
                    }));
                let shape = match relabelled {
                    Reduced::Symbol(r) => shape_string(&r, self.flags()),
                    _ => s.to_string(),
                };
                return Err(Error::Staging { shape });
            }
        };
        self.expand(&first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, CoeffPoly};

    fn sym(src: &str) -> MomentSymbol {
        let mut c = crate::expr::Cursor::new(src);
        c.raw_symbol().unwrap()
    }

    fn ctx() -> RuleSet {
        let flags = SymmetryFlags::default();
        RuleSet::free()
            .with(Rule {
                lhs: sym("phi2(a1, b1)"),
                rhs: PolyExpr::zero(),
                label: "1,1".into(),
            })
            .with(Rule {
                lhs: sym("phi2(a1 b1, a2)"),
                rhs: parse_expr("phi2(a1, a2)*phi1(b1)", flags).unwrap(),
                label: "2,1".into(),
            })
    }

    #[test]
    fn matches_rotated_and_swapped_shapes() {
        let ctx = ctx();
        let e = Expander::new(&ctx, None);
        let flags = ctx.flags;
        let got = e.expand_symbol(&sym("phi2(b2, a1 b1)")).unwrap();
        assert_eq!(got, parse_expr("phi1(a1)*phi2(b1, b2)", flags).unwrap());
        // a run of two letters acts as one element
        let got = e.expand_symbol(&sym("phi2(a1 b1 a2, a3)")).unwrap();
        assert_eq!(got, parse_expr("phi2(a2 a1, a3)*phi1(b1)", flags).unwrap());
        let got = e.expand_symbol(&sym("phi2(a1 a2, b1)")).unwrap();
        assert!(got.is_zero());
    }

    #[test]
    fn staging_error_names_shape() {
        let ctx = ctx();
        let e = Expander::new(&ctx, None);
        let err = e.expand_symbol(&sym("phi2(a1 b1, a2 b2)")).unwrap_err();
        assert_eq!(
            err,
            Error::Staging {
                shape: "phi2(a1 b1, a2 b2)".into()
            }
        );
    }

    #[test]
    fn grouped_application() {
        let ctx = ctx();
        let e = Expander::new(&ctx, None);
        let flags = ctx.flags;
        // (b c) merged: phi2(a1 (b1 c1), a2) via the (2,1) rule
        let got = e
            .expand_grouped(&sym("phi2(a1 b1 c1, a2)"), &[Algebra::new('b'), Algebra::new('c')])
            .unwrap();
        assert_eq!(got, parse_expr("phi2(a1, a2)*phi1(b1)*phi1(c1)", flags).unwrap());
        let _ = CoeffPoly::one();
    }
}
