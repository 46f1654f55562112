//! Staged derivation pipelines.
//!
//! A pipeline builds the ansatz for a pattern, collects every applicable
//! constraint, solves, and turns each solved branch into a concrete rule
//! that later stages may use.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, Ansatz, Order, Pattern};
use crate::constraints::{
    associativity_constraints, exchange_symmetry_constraints, grouped_expansions,
    match_coefficients, phi2_symmetry_constraints, reduction_constraints, shape3_family,
    traciality_constraints, unit_constraints, unit_constraints_for, ConstraintSet, ConstraintSource,
    Shape3Family,
};
use crate::error::{Error, Result};
use crate::expr::{parse_coeff, parse_expr, CoeffPoly, Letter, PolyExpr, Rational, SymmetryFlags, Unknown, Word};
use crate::free::{factorize, FirstOrderRule};
use crate::rules::{FirstOrderMode, Rule, RuleSet};
use crate::solver::{normalize_branch, solve_with, verify_branch, SolutionBranch, SolverBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeriveOptions {
    pub family: Shape3Family,
    pub associativity: bool,
    pub bounds: SolverBounds,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        DeriveOptions {
            family: Shape3Family::Exhaustive,
            associativity: true,
            bounds: SolverBounds::default(),
        }
    }
}

/// A solved branch made concrete by setting its free parameters to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRule {
    pub path: String,
    /// The ansatz with the branch substituted, free parameters kept.
    pub parametric: PolyExpr,
    pub coefficients: BTreeMap<Unknown, Rational>,
    pub rule: Rule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// One branch, no free parameters.
    Forced,
    /// One branch with free parameters.
    Underdetermined,
    MultiBranch,
    /// Empty solution set.
    Contradictory,
    /// Some branch has constraints the solver could not resolve.
    Unresolved,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Forced => "forced",
            Status::Underdetermined => "underdetermined",
            Status::MultiBranch => "multi-branch",
            Status::Contradictory => "contradictory",
            Status::Unresolved => "unresolved",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivationReport {
    /// Branch path of the context this derivation ran in ("" for none).
    pub context: String,
    pub pattern: Pattern,
    pub ansatz: Ansatz,
    pub constraints: Vec<(ConstraintSource, ConstraintSet)>,
    pub branches: Vec<SolutionBranch>,
    pub rules: Vec<NormalizedRule>,
    pub status: Status,
    pub notes: Vec<String>,
}

impl DerivationReport {
    pub fn all_constraints(&self) -> ConstraintSet {
        ConstraintSet::union(self.constraints.iter().map(|(_, c)| c))
    }

    pub fn constraints_from(&self, source: ConstraintSource) -> ConstraintSet {
        ConstraintSet::union(self.constraints.iter().filter(|(s, _)| *s == source).map(|(_, c)| c))
    }

    /// Path of the `i`-th branch (0-based), e.g. `2,2:branch-1`.
    pub fn branch_path(&self, i: usize) -> String {
        branch_path(&self.context, &self.pattern, i)
    }
}

/// Argument lengths of a pattern, e.g. `2,2` for `phi2(a1 b1, a2 b2)`.
pub fn shape_label(p: &Pattern) -> String {
    p.symbol()
        .words()
        .iter()
        .map(|w| w.len().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn branch_path(context: &str, p: &Pattern, i: usize) -> String {
    let own = format!("{}:branch-{}", shape_label(p), i + 1);
    if context.is_empty() {
        own
    } else {
        format!("{context}/{own}")
    }
}

fn first_order_name(ctx: &RuleSet) -> &'static str {
    match ctx.first_order {
        FirstOrderMode::Factorize(FirstOrderRule::Free) => "free",
        FirstOrderMode::Factorize(FirstOrderRule::Tensor) => "tensor",
        FirstOrderMode::Rules => "staged first-order rules",
    }
}

fn status_of(branches: &[SolutionBranch]) -> Status {
    if branches.iter().any(|b| !b.is_solved()) {
        Status::Unresolved
    } else {
        match branches {
            [] => Status::Contradictory,
            [b] if b.free_params.is_empty() => Status::Forced,
            [_] => Status::Underdetermined,
            _ => Status::MultiBranch,
        }
    }
}

/// Build the ansatz for `p`, collect every applicable constraint, solve,
/// verify and normalize.
pub fn derive_rule(p: &Pattern, ctx: &RuleSet, opts: &DeriveOptions) -> Result<DerivationReport> {
    derive_in(p, ctx, "", opts)
}

fn derive_in(p: &Pattern, ctx: &RuleSet, context: &str, opts: &DeriveOptions) -> Result<DerivationReport> {
    let a = build_ansatz(p)?;
    let flags = p.flags();
    let mut notes = vec![
        format!("flags: {}", flags.to_cli()),
        format!("first order: {}", first_order_name(ctx)),
    ];
    let mut constraints = Vec::new();
    if p.algebras().len() >= 3 {
        // Determined by nested two-algebra rules: every available grouping
        // must reproduce the ansatz.
        let expansions = grouped_expansions(p, None, ctx)?;
        if expansions.is_empty() {
            return Err(Error::Staging {
                shape: crate::rules::shape_string(p.symbol(), flags),
            });
        }
        let mut cs = ConstraintSet::new();
        for (merged, e) in &expansions {
            cs.extend(&match_coefficients(&a.terms, e));
            notes.push(format!("grouping ({}{}) applied first", merged[0], merged[1]));
        }
        constraints.push((ConstraintSource::Associativity, cs));
    } else {
        constraints.push((ConstraintSource::Unit, unit_constraints(&a, ctx)?));
        match exchange_symmetry_constraints(&a) {
            Some(cs) => constraints.push((ConstraintSource::Exchange, cs)),
            None => notes.push("exchange symmetry: not applicable (shape not symmetric under exchanging algebras)".into()),
        }
        if p.order() == Order::Second && flags.phi2_symmetric {
            constraints.push((ConstraintSource::Phi2Symmetry, phi2_symmetry_constraints(&a)));
        }
        let tracial = match p.order() {
            Order::First => flags.phi1_tracial,
            Order::Second => flags.phi2_tracial_each_arg,
        };
        if tracial {
            constraints.push((ConstraintSource::Traciality, traciality_constraints(&a)));
        }
        if opts.associativity {
            let family = shape3_family(p, opts.family);
            let mut cs = ConstraintSet::new();
            for q in &family {
                cs.extend(&associativity_constraints(q, &a, ctx)?);
            }
            notes.push(format!(
                "associativity: {} three-algebra patterns ({})",
                family.len(),
                match opts.family {
                    Shape3Family::Split => "split",
                    Shape3Family::Exhaustive => "exhaustive",
                }
            ));
            constraints.push((ConstraintSource::Associativity, cs));
        }
        if let Some(cs) = reduction_constraints(&a, ctx) {
            constraints.push((ConstraintSource::Reduction, cs));
        }
    }
    let all = ConstraintSet::union(constraints.iter().map(|(_, c)| c));
    let branches = solve_with(&all, &a.unknowns, opts.bounds)?;
    for (i, b) in branches.iter().enumerate() {
        if !verify_branch(b, &all) {
            return Err(Error::Assertion(format!(
                "{}: branch does not satisfy its constraints: {b}",
                branch_path(context, p, i)
            )));
        }
    }
    notes.push(format!(
        "solver bounds: {} constraints, {} unknowns, {} branches",
        opts.bounds.max_constraints, opts.bounds.max_unknowns, opts.bounds.max_branches
    ));
    notes.push("normalization: free parameters set to 1 (a convention)".into());
    let mut rules = Vec::new();
    for (i, b) in branches.iter().enumerate() {
        if !b.is_solved() {
            continue;
        }
        let path = branch_path(context, p, i);
        let coefficients = normalize_branch(b, &a.unknowns)?;
        let parametric = a.terms.substitute_unknowns(&b.assignments);
        let constants: BTreeMap<Unknown, CoeffPoly> = coefficients
            .iter()
            .map(|(u, v)| (*u, CoeffPoly::constant(v.clone())))
            .collect();
        rules.push(NormalizedRule {
            path: path.clone(),
            parametric,
            coefficients,
            rule: Rule {
                lhs: p.symbol().clone(),
                rhs: a.terms.substitute_unknowns(&constants),
                label: path,
            },
        });
    }
    let status = status_of(&branches);
    Ok(DerivationReport {
        context: context.to_string(),
        pattern: p.clone(),
        ansatz: a,
        constraints,
        branches,
        rules,
        status,
        notes,
    })
}

/// Derive `p`, first deriving (recursively) every smaller shape its unit
/// constraints need. Prerequisites with several branches fork the context.
/// Returns prerequisite reports followed by the reports for `p`.
pub fn derive_staged(p: &Pattern, base: &RuleSet, opts: &DeriveOptions) -> Result<Vec<DerivationReport>> {
    let mut reports = Vec::new();
    let finished = staged_in(p, base, "", opts, &mut reports, 0)?;
    reports.extend(finished.into_iter().map(|(_, r)| r));
    Ok(reports)
}

/// Reports for `p`, one per forked context, each with the context it ran in.
fn staged_in(
    p: &Pattern,
    ctx: &RuleSet,
    context: &str,
    opts: &DeriveOptions,
    reports: &mut Vec<DerivationReport>,
    depth: usize,
) -> Result<Vec<(RuleSet, DerivationReport)>> {
    if depth > 4 * opts.bounds.max_branches {
        return Err(Error::BranchOverflow(opts.bounds.max_branches));
    }
    let shape = match derive_in(p, ctx, context, opts) {
        Ok(r) => return Ok(vec![(ctx.clone(), r)]),
        Err(Error::Staging { shape }) => shape,
        Err(e) => return Err(e),
    };
    let q = Pattern::parse(&shape, p.flags())?;
    if q.letter_count() >= p.letter_count() && q.algebras().len() <= p.algebras().len() {
        return Err(Error::Staging { shape });
    }
    let mut out = Vec::new();
    for (pre_ctx, pre) in staged_in(&q, ctx, context, opts, reports, depth + 1)? {
        // Only genuine forks extend the branch path.
        let forked = pre.rules.len() > 1;
        let forks: Vec<(RuleSet, String)> = pre
            .rules
            .iter()
            .map(|r| {
                let path = if forked { r.path.clone() } else { pre.context.clone() };
                (pre_ctx.clone().with(r.rule.clone()), path)
            })
            .collect();
        reports.push(pre);
        if forks.is_empty() {
            return Err(Error::Staging { shape });
        }
        for (c, path) in forks {
            out.extend(staged_in(p, &c, &path, opts, reports, depth + 1)?);
        }
    }
    Ok(out)
}

fn context_with(base: &RuleSet, reports: &[DerivationReport]) -> RuleSet {
    let mut ctx = base.clone();
    for r in reports {
        if let [only] = r.rules.as_slice() {
            ctx.insert(only.rule.clone());
        }
    }
    ctx
}

fn expect_members(stage: &str, what: &str, expected: &[&str], got: &ConstraintSet) -> Result<()> {
    for e in expected {
        let p = parse_coeff(e).expect("well-formed expectation");
        if !got.contains(&p) {
            return Err(Error::Assertion(format!(
                "{stage} {what}: missing constraint {} = 0; generated {got}",
                p.normalized()
            )));
        }
    }
    Ok(())
}

fn expect_equal(stage: &str, what: &str, expected: &str, got: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Assertion(format!("{stage} {what}: expected {expected}; got {got}")));
    }
    Ok(())
}

fn rule_text(r: &DerivationReport, i: usize) -> String {
    r.rules.get(i).map(|x| x.rule.rhs.to_string()).unwrap_or_default()
}

/// The second-order derivation for two algebras with default flags and free
/// first order, checking every intermediate result along the way.
pub fn reproduce_paper() -> Result<Vec<DerivationReport>> {
    let flags = SymmetryFlags::default();
    let opts = DeriveOptions::default();
    let base = RuleSet::free();
    let mut reports: Vec<DerivationReport> = Vec::new();

    let p11 = Pattern::parse("phi2(a1, b1)", flags)?;
    let r11 = derive_rule(&p11, &base, &opts)?;
    expect_members("1,1", "unit constraints", &["alpha1"], &r11.constraints_from(ConstraintSource::Unit))?;
    expect_equal("1,1", "status", "forced", &r11.status.to_string())?;
    expect_equal("1,1", "rule", "0", &rule_text(&r11, 0))?;
    reports.push(r11);

    let ctx = context_with(&base, &reports);
    let p21 = Pattern::parse("phi2(a1 b1, a2)", flags)?;
    let r21 = derive_rule(&p21, &ctx, &opts)?;
    let b1 = unit_constraints_for(&r21.ansatz, &ctx, Letter::new('b', 1))?;
    expect_members("2,1", "unit constraints (b1 = 1)", &["alpha1 - 1", "alpha2", "alpha3"], &b1)?;
    expect_equal("2,1", "status", "forced", &r21.status.to_string())?;
    expect_equal("2,1", "rule", "phi2(a1, a2)*phi1(b1)", &rule_text(&r21, 0))?;
    reports.push(r21);

    let ctx = context_with(&base, &reports);
    let p22 = Pattern::parse("phi2(a1 b1, a2 b2)", flags)?;
    let r22 = derive_rule(&p22, &ctx, &opts)?;
    expect_equal("2,2", "ansatz size", "9", &r22.ansatz.monomials.len().to_string())?;
    expect_equal(
        "2,2",
        "alpha6 monomial",
        "phi1(a1 a2)*phi1(b1 b2)",
        &r22.ansatz.monomials[5].to_string(),
    )?;
    let b2 = unit_constraints_for(&r22.ansatz, &ctx, Letter::new('b', 2))?;
    expect_members("2,2", "unit constraints (b2 = 1)", &["alpha2 + alpha3 - 1", "alpha6 + alpha7", "alpha8 + alpha9"], &b2)?;
    let a2 = unit_constraints_for(&r22.ansatz, &ctx, Letter::new('a', 2))?;
    expect_members("2,2", "unit constraints (a2 = 1)", &["alpha4 + alpha5 - 1", "alpha6 + alpha8", "alpha7 + alpha9"], &a2)?;
    expect_members(
        "2,2",
        "exchange constraints",
        &["alpha2 - alpha4", "alpha3 - alpha5", "alpha7 - alpha8"],
        &r22.constraints_from(ConstraintSource::Exchange),
    )?;
    let assoc = r22.constraints_from(ConstraintSource::Associativity);
    // The coefficient of phi1(a1 a2)phi1(b1 b2)phi2(c1, c2) also receives
    // alpha1*alpha6 from phi2(a1 b1, a2 b2)*phi2(c1, c2).
    expect_members("2,2", "associativity constraints", &["alpha4^2 - alpha1*alpha6"], &assoc)?;
    let linear = linear_reduction(&r22.all_constraints());
    expect_members("2,2", "associativity constraints after linear reduction", &["alpha1*alpha6"], &assoc.substitute(&linear))?;
    expect_equal("2,2", "status", "multi-branch", &r22.status.to_string())?;
    let shapes: Vec<String> = r22
        .branches
        .iter()
        .map(|b| b.free_params.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    expect_equal("2,2", "free parameters by branch", "alpha6 | alpha1", &shapes.join(" | "))?;
    expect_equal("2,2", "candidate 1", CANDIDATE_1, &rule_text(&r22, 0))?;
    expect_equal("2,2", "candidate 2", CANDIDATE_2, &rule_text(&r22, 1))?;
    reports.push(r22);
    Ok(reports)
}

/// Second-order freeness for `phi2(a1 b1, a2 b2)`.
pub const CANDIDATE_1: &str = "phi2(a1, a2)*phi1(b1)*phi1(b2) + phi1(a1)*phi1(a2)*phi2(b1, b2) + phi1(a1 a2)*phi1(b1 b2) - phi1(a1 a2)*phi1(b1)*phi1(b2) - phi1(a1)*phi1(a2)*phi1(b1 b2) + phi1(a1)*phi1(a2)*phi1(b1)*phi1(b2)";
/// The other surviving rule for `phi2(a1 b1, a2 b2)`.
pub const CANDIDATE_2: &str = "phi2(a1, a2)*phi2(b1, b2) + phi2(a1, a2)*phi1(b1)*phi1(b2) + phi1(a1)*phi1(a2)*phi2(b1, b2)";

/// Solution of the degree-one constraints of `cs`, as substitutions.
pub fn linear_reduction(cs: &ConstraintSet) -> BTreeMap<Unknown, CoeffPoly> {
    let linear: ConstraintSet = cs.iter().filter(|p| p.degree() == 1).cloned().collect();
    let unknowns: Vec<Unknown> = linear.unknowns().into_iter().collect();
    match solve_with(&linear, &unknowns, SolverBounds::default()) {
        Ok(b) if b.len() == 1 => b[0].assignments.clone(),
        _ => BTreeMap::new(),
    }
}

/// Base context plus the solved rules for `phi2(a, b)` and `phi2(a1 b, a2)`.
pub fn lower_context(flags: SymmetryFlags) -> Result<RuleSet> {
    let mut ctx = RuleSet::new(flags, FirstOrderMode::Factorize(FirstOrderRule::Free));
    ctx.insert(Rule {
        lhs: Pattern::parse("phi2(a1, b1)", flags)?.symbol().clone(),
        rhs: PolyExpr::zero(),
        label: "1,1:branch-1".into(),
    });
    ctx.insert(Rule {
        lhs: Pattern::parse("phi2(a1 b1, a2)", flags)?.symbol().clone(),
        rhs: parse_expr("phi2(a1, a2)*phi1(b1)", flags)?,
        label: "2,1:branch-1".into(),
    });
    Ok(ctx)
}

/// The two normalized candidates for `phi2(a1 b1, a2 b2)`, labelled by branch path.
pub fn candidates() -> Result<Vec<Rule>> {
    let flags = SymmetryFlags::default();
    let lhs = Pattern::parse("phi2(a1 b1, a2 b2)", flags)?.symbol().clone();
    Ok(vec![
        Rule {
            lhs: lhs.clone(),
            rhs: parse_expr(CANDIDATE_1, flags)?,
            label: "2,2:branch-1".into(),
        },
        Rule {
            lhs,
            rhs: parse_expr(CANDIDATE_2, flags)?,
            label: "2,2:branch-2".into(),
        },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchChoice {
    Candidate1,
    Candidate2,
    All,
}

/// Derive `p` in the context extended by the chosen candidate(s).
pub fn explore(p: &Pattern, choice: BranchChoice, opts: &DeriveOptions) -> Result<Vec<DerivationReport>> {
    let base = lower_context(p.flags())?;
    let all = candidates()?;
    let chosen: Vec<Rule> = match choice {
        BranchChoice::Candidate1 => vec![all[0].clone()],
        BranchChoice::Candidate2 => vec![all[1].clone()],
        BranchChoice::All => all,
    };
    let mut out = Vec::new();
    for c in chosen {
        let ctx = base.clone().with(c.clone());
        let mut r = derive_in(p, &ctx, &c.label, opts)?;
        r.notes.push(format!("context: candidate {}", c.label));
        out.push(r);
    }
    Ok(out)
}

/// A candidate substituted into the associativity constraints of the
/// `(2,2,2)`-letter three-algebra patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct Recheck {
    pub candidate: String,
    pub patterns: Vec<Pattern>,
    pub constraints: ConstraintSet,
    /// Constraints with a nonzero value at the candidate, with that value.
    pub violated: Vec<(CoeffPoly, Rational)>,
}

impl Recheck {
    pub fn satisfied(&self) -> bool {
        self.violated.is_empty()
    }
}

/// Patterns with two letters from each of three algebras.
pub fn two_two_two_patterns(flags: SymmetryFlags) -> Result<Vec<Pattern>> {
    let p = Pattern::parse("phi2(a1 b1, a2 b2)", flags)?;
    Ok(shape3_family(&p, Shape3Family::Exhaustive)
        .into_iter()
        .filter(|q| q.letter_count() == 6 && q.algebras().iter().all(|x| q.letters().iter().filter(|l| l.algebra == *x).count() == 2))
        .collect())
}

pub fn recheck_candidate(candidate: &Rule) -> Result<Recheck> {
    let flags = SymmetryFlags::default();
    let ctx = lower_context(flags)?;
    let p = Pattern::parse("phi2(a1 b1, a2 b2)", flags)?;
    let a = build_ansatz(&p)?;
    let patterns = two_two_two_patterns(flags)?;
    let mut constraints = ConstraintSet::new();
    for q in &patterns {
        constraints.extend(&associativity_constraints(q, &a, &ctx)?);
    }
    let point = coefficients_of(&a, &candidate.rhs).ok_or_else(|| {
        Error::Assertion(format!("{}: not an instance of the ansatz", candidate.label))
    })?;
    let violated = constraints
        .iter()
        .filter_map(|c| {
            let v = c.eval(&point).expect("all unknowns assigned");
            (!num_traits::Zero::is_zero(&v)).then(|| (c.clone(), v))
        })
        .collect();
    Ok(Recheck {
        candidate: candidate.label.clone(),
        patterns,
        constraints,
        violated,
    })
}

/// Read off the ansatz coefficients of a concrete rule.
pub fn coefficients_of(a: &Ansatz, rhs: &PolyExpr) -> Option<BTreeMap<Unknown, Rational>> {
    let mut point = BTreeMap::new();
    for (m, u) in a.monomials.iter().zip(&a.unknowns) {
        let c = rhs.coefficient_of(m);
        point.insert(*u, if c.is_zero() { num_traits::Zero::zero() } else { c.constant_value()? });
    }
    let covered = rhs.monomials().all(|m| a.unknown_for(m).is_some());
    covered.then_some(point)
}

/// Alternating two-algebra words `a1 b1 a2 b2 ...` of the given length.
fn alternating(len: usize, flags: SymmetryFlags) -> Result<Pattern> {
    let letters: Vec<Letter> = (0..len)
        .map(|i| Letter::new(if i % 2 == 0 { 'a' } else { 'b' }, (i / 2 + 1) as u32))
        .collect();
    Pattern::new(crate::expr::MomentSymbol::Phi1(Word::new(letters)), flags)
}

/// First-order classification at truncation level `max_letters`: derive the
/// rules for `phi1(a1 b1)`, `phi1(a1 b1 a2 b2)`, ... from unit, symmetry and
/// associativity constraints alone, forking on every branch.
pub fn classify_first_order(max_letters: usize) -> Result<Vec<DerivationReport>> {
    classify_first_order_with(max_letters, &classification_options())
}

/// The six-letter stage generates a few hundred constraints, so the
/// constraint cap is raised.
pub fn classification_options() -> DeriveOptions {
    DeriveOptions {
        bounds: SolverBounds {
            max_constraints: 1000,
            ..SolverBounds::default()
        },
        ..DeriveOptions::default()
    }
}

pub fn classify_first_order_with(max_letters: usize, opts: &DeriveOptions) -> Result<Vec<DerivationReport>> {
    if max_letters > 6 {
        return Err(Error::SizeLimit {
            what: "classification letters",
            actual: max_letters,
            bound: 6,
        });
    }
    let flags = SymmetryFlags::default();
    let mut contexts = vec![(RuleSet::new(flags, FirstOrderMode::Rules), String::new())];
    let mut reports = Vec::new();
    for len in (2..=max_letters).step_by(2) {
        let p = alternating(len, flags)?;
        let mut next = Vec::new();
        for (ctx, context) in &contexts {
            let mut r = derive_in(&p, ctx, context, opts)?;
            r.notes.push(format!("conclusions hold at truncation level {max_letters}"));
            for rule in &r.rules {
                next.push((ctx.clone().with(rule.rule.clone()), rule.path.clone()));
            }
            reports.push(r);
        }
        contexts = next;
    }
    Ok(reports)
}

/// Ansatz coefficients of the free or tensor product on a first-order pattern.
pub fn first_order_assignment(a: &Ansatz, rule: FirstOrderRule) -> Result<BTreeMap<Unknown, Rational>> {
    let crate::expr::MomentSymbol::Phi1(w) = a.pattern.symbol() else {
        return Err(Error::InvalidPattern {
            pattern: a.pattern.to_string(),
            reason: "not a first-order pattern".into(),
        });
    };
    let e = factorize(w, rule, a.pattern.flags())?;
    coefficients_of(a, &e).ok_or_else(|| Error::Assertion(format!("{rule:?} product is not multilinear on {}", a.pattern)))
}

/// Every rule of the report satisfies the unit constraints of its own shape.
pub fn check_unit_consistency(r: &DerivationReport, ctx: &RuleSet) -> Result<bool> {
    for rule in &r.rules {
        let point: BTreeMap<Unknown, CoeffPoly> = rule
            .coefficients
            .iter()
            .map(|(u, v)| (*u, CoeffPoly::constant(v.clone())))
            .collect();
        let cs = unit_constraints(&r.ansatz, ctx)?.substitute(&point);
        if !cs.is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces() {
        let reports = reproduce_paper().unwrap();
        assert_eq!(reports.len(), 3);
        assert_eq!(reports[2].branches.len(), 2);
    }

    #[test]
    fn staged_derivation_builds_prerequisites() {
        let p = Pattern::parse("phi2(a1 b1, a2 b2)", SymmetryFlags::default()).unwrap();
        let reports = derive_staged(&p, &RuleSet::free(), &DeriveOptions::default()).unwrap();
        let shapes: Vec<String> = reports.iter().map(|r| shape_label(&r.pattern)).collect();
        assert_eq!(shapes, ["1,1", "2,1", "2,2"]);
        assert_eq!(reports[2].branches.len(), 2);
    }

    #[test]
    fn split_family_leaves_a_cone() {
        let flags = SymmetryFlags::default();
        let ctx = lower_context(flags).unwrap();
        let p = Pattern::parse("phi2(a1 b1, a2 b2)", flags).unwrap();
        let opts = DeriveOptions {
            family: Shape3Family::Split,
            ..DeriveOptions::default()
        };
        let r = derive_rule(&p, &ctx, &opts).unwrap();
        assert_eq!(r.status, Status::Unresolved);
        assert!(r.branches[0]
            .residual
            .contains(&parse_coeff("alpha1*alpha6 - alpha2^2").unwrap()));
    }

    #[test]
    fn candidates_pass_recheck() {
        for c in candidates().unwrap() {
            let r = recheck_candidate(&c).unwrap();
            assert!(!r.constraints.is_empty());
            assert!(r.satisfied(), "{}: {:?}", c.label, r.violated);
        }
    }

    #[test]
    fn first_order_small() {
        let reports = classify_first_order(2).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].status, Status::Forced);
        assert_eq!(reports[0].rules[0].rule.rhs.to_string(), "phi1(a1)*phi1(b1)");
    }
}
