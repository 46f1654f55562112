//! Polynomial constraints on ansatz unknowns.
//!
//! Every generator compares two expressions for the same mixed moment and
//! requires the coefficients of each single-algebra monomial to agree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, Pattern};
use crate::error::{Error, Result};
use crate::expr::{
    substitute_unit, Algebra, CoeffPoly, Letter, MomentSymbol, PolyExpr, Reduced, SymmetryFlags,
    Unknown, Word,
};
use crate::rules::{instantiate, match_all, shape_string, Expander, Rule, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintSource {
    Unit,
    Exchange,
    Phi2Symmetry,
    Traciality,
    Associativity,
    /// Agreement with a rule already present in the context.
    Reduction,
}

impl fmt::Display for ConstraintSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintSource::Unit => "unit",
            ConstraintSource::Exchange => "exchange",
            ConstraintSource::Phi2Symmetry => "phi2-symmetry",
            ConstraintSource::Traciality => "traciality",
            ConstraintSource::Associativity => "associativity",
            ConstraintSource::Reduction => "reduction",
        };
        f.write_str(s)
    }
}

/// Polynomials required to vanish, normalized and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    polys: BTreeSet<CoeffPoly>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        ConstraintSet::default()
    }

    /// Insert the normalized form of `p`; zero is dropped. Returns whether
    /// the set changed.
    pub fn insert(&mut self, p: &CoeffPoly) -> bool {
        let p = p.normalized();
        !p.is_zero() && self.polys.insert(p)
    }

    pub fn extend(&mut self, other: &ConstraintSet) {
        self.polys.extend(other.polys.iter().cloned());
    }

    pub fn union<'a>(sets: impl IntoIterator<Item = &'a ConstraintSet>) -> ConstraintSet {
        let mut out = ConstraintSet::new();
        for s in sets {
            out.extend(s);
        }
        out
    }

    pub fn contains(&self, p: &CoeffPoly) -> bool {
        self.polys.contains(&p.normalized())
    }

    pub fn iter(&self) -> impl Iterator<Item = &CoeffPoly> {
        self.polys.iter()
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn unknowns(&self) -> BTreeSet<Unknown> {
        self.polys.iter().flat_map(|p| p.unknowns()).collect()
    }

    pub fn substitute(&self, map: &BTreeMap<Unknown, CoeffPoly>) -> ConstraintSet {
        self.polys.iter().map(|p| p.substitute(map)).collect()
    }
}

impl FromIterator<CoeffPoly> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = CoeffPoly>>(iter: I) -> Self {
        let mut out = ConstraintSet::new();
        for p in iter {
            out.insert(&p);
        }
        out
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.polys.iter().map(|p| format!("{p} = 0")).collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

/// One constraint per monomial: `coefficient(lhs) - coefficient(rhs) = 0`.
pub fn match_coefficients(lhs: &PolyExpr, rhs: &PolyExpr) -> ConstraintSet {
    lhs.sub(rhs).terms().map(|(_, c)| c.clone()).collect()
}

/// The rule whose right-hand side is the ansatz itself.
pub fn ansatz_rule(a: &Ansatz) -> Rule {
    Rule {
        lhs: a.pattern.symbol().clone(),
        rhs: a.terms.clone(),
        label: "ansatz".into(),
    }
}

/// Constraints from setting `letter` to the unit.
pub fn unit_constraints_for(a: &Ansatz, ctx: &RuleSet, letter: Letter) -> Result<ConstraintSet> {
    let flags = a.pattern.flags();
    let reduced = a.pattern.symbol().map_words(flags, |w| w.without(letter));
    let lhs = match reduced {
        Reduced::Symbol(s) => Expander::new(ctx, None).expand_symbol(&s)?,
        other => PolyExpr::from_reduced(other),
    };
    let rhs = substitute_unit(&a.terms, letter, flags);
    Ok(match_coefficients(&lhs, &rhs))
}

/// Union of the unit constraints over every letter of the pattern.
pub fn unit_constraints(a: &Ansatz, ctx: &RuleSet) -> Result<ConstraintSet> {
    let mut out = ConstraintSet::new();
    for l in a.pattern.letters() {
        out.extend(&unit_constraints_for(a, ctx, l)?);
    }
    Ok(out)
}

/// Compare the ansatz with itself read through every self-match of the
/// pattern that `keep` accepts.
fn automorphism_constraints(
    a: &Ansatz,
    match_flags: SymmetryFlags,
    keep: impl Fn(&BTreeMap<Algebra, Algebra>) -> bool,
) -> Option<ConstraintSet> {
    let lhs = a.pattern.symbol();
    let mut applicable = false;
    let mut out = ConstraintSet::new();
    for (subst, algebras) in match_all(lhs, lhs, &|x| x, match_flags) {
        if !keep(&algebras) {
            continue;
        }
        applicable = true;
        out.extend(&match_coefficients(
            &instantiate(&a.terms, &subst, a.pattern.flags()),
            &a.terms,
        ));
    }
    applicable.then_some(out)
}

fn is_identity(map: &BTreeMap<Algebra, Algebra>) -> bool {
    map.iter().all(|(k, v)| k == v)
}

/// Symmetry of the product under exchanging the algebras. `None` when no
/// exchange of algebras maps the pattern to itself.
pub fn exchange_symmetry_constraints(a: &Ansatz) -> Option<ConstraintSet> {
    automorphism_constraints(a, a.pattern.flags(), |m| !is_identity(m))
}

/// Symmetry of `phi2` in its arguments, imposed whether or not the
/// enumeration already identifies swapped monomials.
pub fn phi2_symmetry_constraints(a: &Ansatz) -> ConstraintSet {
    if !a.pattern.symbol().is_second_order() {
        return ConstraintSet::new();
    }
    let flags = SymmetryFlags {
        phi2_symmetric: true,
        ..a.pattern.flags()
    };
    automorphism_constraints(a, flags, is_identity).unwrap_or_default()
}

/// Traciality of the moment on the left-hand side (of `phi1`, or of `phi2`
/// in each argument), imposed regardless of the enumeration flags.
pub fn traciality_constraints(a: &Ansatz) -> ConstraintSet {
    let mut flags = a.pattern.flags();
    if a.pattern.symbol().is_second_order() {
        flags.phi2_tracial_each_arg = true;
    } else {
        flags.phi1_tracial = true;
    }
    automorphism_constraints(a, flags, is_identity).unwrap_or_default()
}

/// Agreement with a rule for the same shape already in the context.
pub fn reduction_constraints(a: &Ansatz, ctx: &RuleSet) -> Option<ConstraintSet> {
    let lhs = a.pattern.symbol();
    let rule = ctx.find(lhs)?;
    let mut out = ConstraintSet::new();
    for (subst, _) in match_all(&rule.lhs, lhs, &|x| x, ctx.flags) {
        out.extend(&match_coefficients(&instantiate(&rule.rhs, &subst, ctx.flags), &a.terms));
    }
    Some(out)
}

/// Which three-algebra patterns feed the associativity generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape3Family {
    /// Every letter of one algebra followed by a letter of a new algebra,
    /// e.g. `phi2(a1 b1 c1, a2 b2 c2)` from `phi2(a1 b1, a2 b2)`.
    Split,
    /// Every three-algebra pattern of the same order with at most two
    /// letters more than the current pattern.
    Exhaustive,
}

fn fresh_algebra(used: &[Algebra]) -> Algebra {
    let max = used.iter().map(|a| a.label()).max().unwrap_or('a');
    Algebra::new((max as u8 + 1) as char)
}

fn split_family(p: &Pattern) -> Vec<Pattern> {
    let algebras = p.algebras();
    let z = fresh_algebra(&algebras);
    let mut out: Vec<Pattern> = Vec::new();
    for &x in &algebras {
        let mut next = 0;
        let mut grow = |w: &Word| -> Word {
            let mut letters = Vec::new();
            for l in w.letters() {
                letters.push(*l);
                if l.algebra == x {
                    next += 1;
                    letters.push(Letter { algebra: z, index: next });
                }
            }
            Word::new(letters)
        };
        let symbol = match p.symbol() {
            MomentSymbol::Phi1(w) => MomentSymbol::Phi1(grow(w)),
            MomentSymbol::Phi2(u, v) => {
                let u = grow(u);
                MomentSymbol::Phi2(u, grow(v))
            }
        };
        let q = Pattern::new(symbol, p.flags()).expect("three algebras, distinct letters");
        if !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

/// Label sequences over `a, b, c` using every label, up to relabelling
/// (labels first appear in alphabetical order).
fn label_sequences(len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut seq = Vec::with_capacity(len);
    fn go(len: usize, seq: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if seq.len() == len {
            if seq.iter().max() == Some(&2) {
                out.push(seq.clone());
            }
            return;
        }
        let top = seq.iter().max().map_or(0, |m| m + 1).min(2);
        for l in 0..=top {
            seq.push(l);
            go(len, seq, out);
            seq.pop();
        }
    }
    go(len, &mut seq, &mut out);
    out
}

fn exhaustive_family(p: &Pattern) -> Vec<Pattern> {
    let flags = p.flags();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for len in 3..=p.letter_count() + 2 {
        for labels in label_sequences(len) {
            let mut counts = [0u32; 3];
            let letters: Vec<Letter> = labels
                .iter()
                .map(|&l| {
                    counts[l as usize] += 1;
                    Letter::new((b'a' + l) as char, counts[l as usize])
                })
                .collect();
            let symbols: Vec<MomentSymbol> = match p.order() {
                crate::ansatz::Order::First => vec![MomentSymbol::Phi1(Word::new(letters))],
                crate::ansatz::Order::Second => (1..len)
                    .map(|cut| {
                        MomentSymbol::Phi2(
                            Word::new(letters[..cut].to_vec()),
                            Word::new(letters[cut..].to_vec()),
                        )
                    })
                    .collect(),
            };
            for s in symbols {
                if seen.insert(shape_string(&s, flags)) {
                    out.push(Pattern::new(s, flags).expect("three algebras, distinct letters"));
                }
            }
        }
    }
    out
}

/// Three-algebra patterns used to test associativity of a rule for `p`.
pub fn shape3_family(p: &Pattern, family: Shape3Family) -> Vec<Pattern> {
    if p.algebras().len() != 2 {
        return Vec::new();
    }
    match family {
        Shape3Family::Split => split_family(p),
        Shape3Family::Exhaustive => exhaustive_family(p),
    }
}

/// Full expansion of `shape3` for each pair of algebras that can be merged
/// first. Groupings whose expansion needs an unavailable rule are skipped.
pub fn grouped_expansions(
    shape3: &Pattern,
    current: Option<&Rule>,
    ctx: &RuleSet,
) -> Result<Vec<([Algebra; 2], PolyExpr)>> {
    let algebras = shape3.algebras();
    let expander = Expander::new(ctx, current);
    let mut out = Vec::new();
    for i in 0..algebras.len() {
        for j in i + 1..algebras.len() {
            let merged = [algebras[i], algebras[j]];
            match expander.expand_grouped(shape3.symbol(), &merged) {
                Ok(e) => out.push((merged, e)),
                Err(Error::Staging { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Expand `shape3` under every available grouping and require all
/// expansions to agree coefficientwise.
pub fn associativity_constraints(shape3: &Pattern, current: &Ansatz, ctx: &RuleSet) -> Result<ConstraintSet> {
    if shape3.algebras().len() < 3 {
        return Err(Error::InvalidPattern {
            pattern: shape3.to_string(),
            reason: "associativity needs three algebras".into(),
        });
    }
    let rule = ansatz_rule(current);
    let expansions = grouped_expansions(shape3, Some(&rule), ctx)?;
    let mut out = ConstraintSet::new();
    if let Some(((_, first), rest)) = expansions.split_first() {
        for (_, e) in rest {
            out.extend(&match_coefficients(first, e));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_ansatz;
    use crate::expr::{parse_coeff, parse_expr};
    use crate::free::FirstOrderRule;
    use crate::rules::FirstOrderMode;

    fn flags() -> SymmetryFlags {
        SymmetryFlags::default()
    }

    fn pattern(src: &str) -> Pattern {
        Pattern::parse(src, flags()).unwrap()
    }

    fn set(items: &[&str]) -> ConstraintSet {
        items.iter().map(|s| parse_coeff(s).unwrap()).collect()
    }

    fn lower_rules() -> RuleSet {
        RuleSet::free()
            .with(Rule {
                lhs: pattern("phi2(a1, b1)").symbol().clone(),
                rhs: PolyExpr::zero(),
                label: "1,1".into(),
            })
            .with(Rule {
                lhs: pattern("phi2(a1 b1, a2)").symbol().clone(),
                rhs: parse_expr("phi2(a1, a2)*phi1(b1)", flags()).unwrap(),
                label: "2,1".into(),
            })
    }

    #[test]
    fn matching_examples() {
        let lhs = parse_expr("phi2(a1, a2)", flags()).unwrap();
        let rhs = parse_expr(
            "alpha1*phi2(a1, a2) + alpha2*phi1(a1 a2) + alpha3*phi1(a1)*phi1(a2)",
            flags(),
        )
        .unwrap();
        assert_eq!(match_coefficients(&lhs, &rhs), set(&["alpha1 - 1", "alpha2", "alpha3"]));
        assert!(match_coefficients(&lhs, &lhs).is_empty());
        let m = parse_expr("phi1(a1)", flags()).unwrap();
        let k = m.scale(&parse_coeff("alpha1*alpha2 + 1").unwrap());
        assert_eq!(match_coefficients(&m, &k), set(&["alpha1*alpha2"]));
    }

    #[test]
    fn unit_constraints_small_patterns() {
        let a = build_ansatz(&pattern("phi2(a1, b1)")).unwrap();
        assert_eq!(unit_constraints(&a, &RuleSet::free()).unwrap(), set(&["alpha1"]));
        let a = build_ansatz(&pattern("phi2(a1 b1, a2)")).unwrap();
        let ctx = lower_rules();
        let b1 = Letter::new('b', 1);
        assert_eq!(
            unit_constraints_for(&a, &ctx, b1).unwrap(),
            set(&["alpha1 - 1", "alpha2", "alpha3"])
        );
    }

    #[test]
    fn unit_constraints_nine_term_pattern() {
        let a = build_ansatz(&pattern("phi2(a1 b1, a2 b2)")).unwrap();
        let ctx = lower_rules();
        assert_eq!(
            unit_constraints_for(&a, &ctx, Letter::new('b', 2)).unwrap(),
            set(&["alpha2 + alpha3 - 1", "alpha6 + alpha7", "alpha8 + alpha9"])
        );
        assert_eq!(
            unit_constraints_for(&a, &ctx, Letter::new('a', 2)).unwrap(),
            set(&["alpha4 + alpha5 - 1", "alpha6 + alpha8", "alpha7 + alpha9"])
        );
    }

    #[test]
    fn missing_reduced_rule_is_a_staging_error() {
        let a = build_ansatz(&pattern("phi2(a1 b1, a2 b2)")).unwrap();
        let err = unit_constraints(&a, &RuleSet::free()).unwrap_err();
        assert_eq!(
            err,
            Error::Staging {
                shape: "phi2(a1 b1, a2)".into()
            }
        );
    }

    #[test]
    fn exchange_symmetry() {
        let a = build_ansatz(&pattern("phi2(a1 b1, a2 b2)")).unwrap();
        assert_eq!(
            exchange_symmetry_constraints(&a),
            Some(set(&["alpha2 - alpha4", "alpha3 - alpha5", "alpha7 - alpha8"]))
        );
        let a = build_ansatz(&pattern("phi2(a1, b1)")).unwrap();
        assert_eq!(exchange_symmetry_constraints(&a), Some(ConstraintSet::new()));
        let a = build_ansatz(&pattern("phi2(a1 b1, a2)")).unwrap();
        assert_eq!(exchange_symmetry_constraints(&a), None);
    }

    #[test]
    fn symmetry_generators_absorbed_by_canonical_forms() {
        for src in ["phi2(a1, b1)", "phi2(a1 b1, a2)", "phi2(a1 b1, a2 b2)"] {
            let a = build_ansatz(&pattern(src)).unwrap();
            assert!(phi2_symmetry_constraints(&a).is_empty());
            assert!(traciality_constraints(&a).is_empty());
        }
    }

    #[test]
    fn flags_off_identifications() {
        let none = SymmetryFlags::none();
        let a = build_ansatz(&Pattern::parse("phi2(a1 b1, a2)", none).unwrap()).unwrap();
        assert!(phi2_symmetry_constraints(&a).is_empty());
        assert!(traciality_constraints(&a).is_empty());
        let a = build_ansatz(&Pattern::parse("phi2(a1 b1, a2 b2)", none).unwrap()).unwrap();
        let m = |src: &str| {
            let e = parse_expr(src, none).unwrap();
            let u = a.unknown_for(e.monomials().next().unwrap()).unwrap();
            u
        };
        let forward = m("phi1(a1 a2)*phi1(b1 b2)");
        let backward = m("phi1(a2 a1)*phi1(b2 b1)");
        let identification = &CoeffPoly::var(forward) - &CoeffPoly::var(backward);
        assert!(phi2_symmetry_constraints(&a).contains(&identification));
    }

    #[test]
    fn shape3_split() {
        let p = pattern("phi2(a1 b1, a2 b2)");
        let fam: Vec<String> = shape3_family(&p, Shape3Family::Split)
            .iter()
            .map(|q| q.to_string())
            .collect();
        assert_eq!(fam, ["phi2(a1 c1 b1, a2 c2 b2)", "phi2(a1 b1 c1, a2 b2 c2)"]);
        let all = shape3_family(&p, Shape3Family::Exhaustive);
        assert!(all.iter().all(|q| q.algebras().len() == 3 && q.letter_count() <= 6));
        let shapes: BTreeSet<String> = all.iter().map(|q| shape_string(q.symbol(), flags())).collect();
        assert_eq!(shapes.len(), all.len());
        assert!(shapes.contains("phi2(a1 b1 c1, a2 b2 c2)"));
    }

    #[test]
    fn reference_coefficients_in_associativity_set() {
        let a = build_ansatz(&pattern("phi2(a1 b1, a2 b2)")).unwrap();
        let ctx = lower_rules();
        let shape3 = pattern("phi2(a1 b1 c1, a2 b2 c2)");
        let cs = associativity_constraints(&shape3, &a, &ctx).unwrap();
        assert!(!cs.is_empty());
        let tensor = RuleSet::new(flags(), FirstOrderMode::Factorize(FirstOrderRule::Tensor));
        let _ = tensor;
    }
}
