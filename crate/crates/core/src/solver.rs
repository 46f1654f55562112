//! Exact solving of polynomial constraint systems by linear elimination,
//! radical reduction and case splitting on rational factors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::expr::{CoeffPoly, PowerProduct, Rational, Unknown};

/// Bounds for [`solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverBounds {
    pub max_constraints: usize,
    pub max_unknowns: usize,
    pub max_branches: usize,
    /// Constraints with more irreducible factors than this are not split.
    pub max_factors: usize,
}

impl Default for SolverBounds {
    fn default() -> Self {
        SolverBounds {
            max_constraints: 200,
            max_unknowns: 64,
            max_branches: 64,
            max_factors: 3,
        }
    }
}

/// One component of a solution set: solved unknowns as polynomials in the
/// free parameters, plus whatever could not be solved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionBranch {
    pub assignments: BTreeMap<Unknown, CoeffPoly>,
    pub free_params: Vec<Unknown>,
    pub residual: ConstraintSet,
}

impl SolutionBranch {
    pub fn is_solved(&self) -> bool {
        self.residual.is_empty()
    }

    /// Value of `u` on this branch (a free parameter maps to itself).
    pub fn value_of(&self, u: Unknown) -> CoeffPoly {
        self.assignments
            .get(&u)
            .cloned()
            .unwrap_or_else(|| CoeffPoly::var(u))
    }
}

impl fmt::Display for SolutionBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .assignments
            .iter()
            .map(|(u, e)| format!("{u} = {e}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))?;
        if !self.free_params.is_empty() {
            let free: Vec<String> = self.free_params.iter().map(|u| u.to_string()).collect();
            write!(f, " free: {}", free.join(", "))?;
        }
        if !self.residual.is_empty() {
            write!(f, " residual: {}", self.residual)?;
        }
        Ok(())
    }
}

pub fn solve(cs: &ConstraintSet) -> Result<Vec<SolutionBranch>> {
    let unknowns: Vec<Unknown> = cs.unknowns().into_iter().collect();
    solve_with(cs, &unknowns, SolverBounds::default())
}

/// Solve `cs` over the given unknowns (unknowns not occurring in `cs` come
/// out as free parameters).
pub fn solve_with(cs: &ConstraintSet, unknowns: &[Unknown], bounds: SolverBounds) -> Result<Vec<SolutionBranch>> {
    if cs.len() > bounds.max_constraints {
        return Err(Error::SizeLimit {
            what: "constraints",
            actual: cs.len(),
            bound: bounds.max_constraints,
        });
    }
    let mut all: BTreeSet<Unknown> = unknowns.iter().copied().collect();
    all.extend(cs.unknowns());
    if all.len() > bounds.max_unknowns {
        return Err(Error::SizeLimit {
            what: "unknowns",
            actual: all.len(),
            bound: bounds.max_unknowns,
        });
    }
    let mut out: Vec<SolutionBranch> = Vec::new();
    let mut stack = vec![State {
        assignments: BTreeMap::new(),
        pending: cs.iter().cloned().collect(),
    }];
    while let Some(state) = stack.pop() {
        match step(state, bounds)? {
            Outcome::Contradiction => {}
            Outcome::Done(assignments, residual) => {
                let free_params = all
                    .iter()
                    .filter(|u| !assignments.contains_key(u))
                    .copied()
                    .collect();
                let b = SolutionBranch {
                    assignments,
                    free_params,
                    residual,
                };
                if !out.contains(&b) {
                    out.push(b);
                    if out.len() > bounds.max_branches {
                        return Err(Error::BranchOverflow(bounds.max_branches));
                    }
                }
            }
            Outcome::Split(children) => {
                if stack.len() + children.len() + out.len() > bounds.max_branches {
                    return Err(Error::BranchOverflow(bounds.max_branches));
                }
                // Reversed so the first factor is explored first.
                stack.extend(children.into_iter().rev());
            }
        }
    }
    Ok(out)
}

struct State {
    assignments: BTreeMap<Unknown, CoeffPoly>,
    pending: Vec<CoeffPoly>,
}

enum Outcome {
    Contradiction,
    Done(BTreeMap<Unknown, CoeffPoly>, ConstraintSet),
    Split(Vec<State>),
}

fn reduce(pending: &[CoeffPoly], assignments: &BTreeMap<Unknown, CoeffPoly>) -> Option<ConstraintSet> {
    let mut out = ConstraintSet::new();
    for p in pending {
        let q = p.substitute(assignments);
        if q.is_constant() && !q.is_zero() {
            return None;
        }
        out.insert(&q);
    }
    Some(out)
}

/// Record `u := value` and keep all assignments in terms of unassigned unknowns.
fn assign(assignments: &mut BTreeMap<Unknown, CoeffPoly>, u: Unknown, value: CoeffPoly) {
    let single = BTreeMap::from([(u, value.clone())]);
    for e in assignments.values_mut() {
        *e = e.substitute(&single);
    }
    assignments.insert(u, value);
}

fn step(mut state: State, bounds: SolverBounds) -> Result<Outcome> {
    loop {
        let Some(current) = reduce(&state.pending, &state.assignments) else {
            return Ok(Outcome::Contradiction);
        };
        if current.is_empty() {
            return Ok(Outcome::Done(state.assignments, current));
        }
        let linear: Vec<&CoeffPoly> = current.iter().filter(|p| p.degree() == 1).collect();
        if !linear.is_empty() {
            match eliminate(&linear) {
                None => return Ok(Outcome::Contradiction),
                Some(solved) => {
                    for (u, e) in solved {
                        assign(&mut state.assignments, u, e);
                    }
                }
            }
            state.pending = current.iter().cloned().collect();
            continue;
        }
        if let Some(u) = current.iter().find_map(pure_power) {
            assign(&mut state.assignments, u, CoeffPoly::zero());
            state.pending = current.iter().cloned().collect();
            continue;
        }
        for p in current.iter() {
            let factors = rational_factors(p);
            if factors.len() >= 2 && factors.len() <= bounds.max_factors {
                let rest: Vec<CoeffPoly> = current.iter().filter(|q| *q != p).cloned().collect();
                let children = factors
                    .into_iter()
                    .map(|f| {
                        let mut pending = rest.clone();
                        pending.push(f);
                        State {
                            assignments: state.assignments.clone(),
                            pending,
                        }
                    })
                    .collect();
                return Ok(Outcome::Split(children));
            }
        }
        return Ok(Outcome::Done(state.assignments, current));
    }
}

/// `c * u^n` with `n >= 1`.
fn pure_power(p: &CoeffPoly) -> Option<Unknown> {
    if p.len() != 1 {
        return None;
    }
    let (m, _) = p.leading()?;
    match m.pairs() {
        [(u, _)] => Some(*u),
        _ => None,
    }
}

/// Reduced row echelon form of the linear constraints, pivoting on the
/// highest-numbered unknown of each row. `None` if inconsistent.
fn eliminate(rows: &[&CoeffPoly]) -> Option<Vec<(Unknown, CoeffPoly)>> {
    // Each row: coefficients by unknown, and the constant term.
    let mut matrix: Vec<(BTreeMap<Unknown, Rational>, Rational)> = rows
        .iter()
        .map(|p| {
            let mut coeffs = BTreeMap::new();
            let mut constant = Rational::zero();
            for (m, c) in p.terms() {
                match m.pairs() {
                    [] => constant = c.clone(),
                    [(u, 1)] => {
                        coeffs.insert(*u, c.clone());
                    }
                    _ => unreachable!("linear rows only"),
                }
            }
            (coeffs, constant)
        })
        .collect();
    let mut pivots: Vec<(Unknown, usize)> = Vec::new();
    let mut done = vec![false; matrix.len()];
    loop {
        let candidate = (0..matrix.len())
            .filter(|&i| !done[i] && !matrix[i].0.is_empty())
            .map(|i| (*matrix[i].0.keys().next_back().expect("nonempty"), i))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let Some((u, r)) = candidate else { break };
        done[r] = true;
        let lead = matrix[r].0[&u].clone();
        let (coeffs, constant) = &mut matrix[r];
        for c in coeffs.values_mut() {
            *c = &*c / &lead;
        }
        *constant = &*constant / &lead;
        let pivot_row = matrix[r].clone();
        for (i, row) in matrix.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let Some(f) = row.0.get(&u).cloned() else { continue };
            for (v, c) in &pivot_row.0 {
                let entry = row.0.entry(*v).or_insert_with(Rational::zero);
                *entry = &*entry - &(&f * c);
            }
            row.0.retain(|_, c| !c.is_zero());
            row.1 = &row.1 - &(&f * &pivot_row.1);
        }
        pivots.push((u, r));
    }
    if matrix.iter().any(|(c, k)| c.is_empty() && !k.is_zero()) {
        return None;
    }
    Some(
        pivots
            .into_iter()
            .map(|(u, r)| {
                let (coeffs, constant) = &matrix[r];
                let mut value = CoeffPoly::constant(-constant.clone());
                for (v, c) in coeffs {
                    if *v != u {
                        value.add_term(PowerProduct::var(*v), -c.clone());
                    }
                }
                (u, value)
            })
            .collect(),
    )
}

/// Split `p` into factors over the rationals as far as cheaply possible:
/// unknowns dividing every term, then factors `A` of `p = A*u + B` with `A`
/// dividing `B`.
pub fn rational_factors(p: &CoeffPoly) -> Vec<CoeffPoly> {
    let mut out: Vec<CoeffPoly> = Vec::new();
    let content = p.monomial_content();
    for (u, _) in content.pairs() {
        out.push(CoeffPoly::var(*u));
    }
    let rest = p.div_power_product(&content).expect("content divides");
    split_linear(&rest, &mut out);
    out
}

fn split_linear(p: &CoeffPoly, out: &mut Vec<CoeffPoly>) {
    if p.is_constant() {
        return;
    }
    for u in p.unknowns() {
        let Some((a, b)) = p.linear_in(u) else { continue };
        if a.is_constant() {
            continue;
        }
        if let Some(q) = b.exact_div(&a) {
            // p = a * (u + q)
            let mut linear = q;
            linear.add_term(PowerProduct::var(u), Rational::one());
            split_linear(&a, out);
            split_linear(&linear, out);
            return;
        }
    }
    let n = p.normalized();
    if !out.contains(&n) {
        out.push(n);
    }
}

/// Every constraint vanishes identically after substitution, or lies in the
/// residual.
pub fn verify_branch(b: &SolutionBranch, cs: &ConstraintSet) -> bool {
    cs.iter().all(|p| {
        let q = p.substitute(&b.assignments);
        q.is_zero() || b.residual.contains(&q)
    })
}

/// Whether a rational point lies on the branch.
pub fn branch_contains(b: &SolutionBranch, point: &BTreeMap<Unknown, Rational>) -> bool {
    b.assignments.iter().all(|(u, e)| match (point.get(u), e.eval(point)) {
        (Some(x), Some(y)) => *x == y,
        _ => false,
    }) && b
        .residual
        .iter()
        .all(|p| p.eval(point).is_some_and(|v| v.is_zero()))
}

/// Concrete coefficients for `unknowns`: every free parameter set to 1.
pub fn normalize_branch(b: &SolutionBranch, unknowns: &[Unknown]) -> Result<BTreeMap<Unknown, Rational>> {
    if !b.is_solved() {
        return Err(Error::NotFullySolved(b.residual.len()));
    }
    let ones: BTreeMap<Unknown, Rational> = b.free_params.iter().map(|u| (*u, Rational::one())).collect();
    unknowns
        .iter()
        .map(|u| {
            let v = b
                .value_of(*u)
                .eval(&ones)
                .expect("assignments only use free parameters");
            Ok((*u, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_coeff;

    fn set(items: &[&str]) -> ConstraintSet {
        items.iter().map(|s| parse_coeff(s).unwrap()).collect()
    }

    fn u(k: u32) -> Unknown {
        Unknown(k)
    }

    #[test]
    fn square_gives_zero() {
        let b = solve(&set(&["alpha4^2"])).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].assignments, BTreeMap::from([(u(4), CoeffPoly::zero())]));
    }

    #[test]
    fn product_splits() {
        let b = solve(&set(&["alpha1*alpha2"])).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].assignments, BTreeMap::from([(u(1), CoeffPoly::zero())]));
        assert_eq!(b[0].free_params, vec![u(2)]);
        assert_eq!(b[1].assignments, BTreeMap::from([(u(2), CoeffPoly::zero())]));
        assert_eq!(b[1].free_params, vec![u(1)]);
    }

    #[test]
    fn linear_system_pivots_on_highest() {
        let cs = set(&["alpha1 + alpha2 - 1", "alpha2 - alpha3"]);
        let b = solve(&cs).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].free_params, vec![u(1)]);
        assert_eq!(b[0].value_of(u(3)), parse_coeff("1 - alpha1").unwrap());
        assert!(verify_branch(&b[0], &cs));
    }

    #[test]
    fn contradictions_are_pruned() {
        assert!(solve(&set(&["alpha1 - 1", "alpha1 - 2"])).unwrap().is_empty());
        let b = solve(&set(&["alpha1*alpha2", "alpha1 - 1"])).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].value_of(u(2)), CoeffPoly::zero());
    }

    #[test]
    fn factor_detection() {
        let f = rational_factors(&parse_coeff("alpha1*alpha3 + alpha2*alpha3").unwrap());
        assert_eq!(f.len(), 2);
        let f = rational_factors(&parse_coeff("alpha1*alpha2 + alpha1 + alpha2 + 1").unwrap());
        assert_eq!(f.len(), 2);
        let f = rational_factors(&parse_coeff("alpha1^2 + alpha2^2 + 1").unwrap());
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn irreducible_lands_in_residual() {
        let cs = set(&["alpha1^2 - 2"]);
        let b = solve(&cs).unwrap();
        assert_eq!(b.len(), 1);
        assert!(!b[0].is_solved());
        assert!(verify_branch(&b[0], &cs));
        assert_eq!(normalize_branch(&b[0], &[u(1)]), Err(Error::NotFullySolved(1)));
    }

    #[test]
    fn wrong_point_fails_verification() {
        let cs = set(&["alpha1*alpha2"]);
        let b = SolutionBranch {
            assignments: BTreeMap::from([(u(1), CoeffPoly::one()), (u(2), CoeffPoly::one())]),
            free_params: vec![],
            residual: ConstraintSet::new(),
        };
        assert!(!verify_branch(&b, &cs));
    }

    #[test]
    fn bounds() {
        let cs: ConstraintSet = (1..=7)
            .map(|k| parse_coeff(&format!("alpha{}*alpha{}", 2 * k - 1, 2 * k)).unwrap())
            .collect();
        let tight = SolverBounds {
            max_branches: 64,
            ..SolverBounds::default()
        };
        let unknowns: Vec<Unknown> = cs.unknowns().into_iter().collect();
        assert_eq!(solve_with(&cs, &unknowns, tight), Err(Error::BranchOverflow(64)));
        let few = SolverBounds {
            max_unknowns: 4,
            ..SolverBounds::default()
        };
        assert!(matches!(solve_with(&cs, &unknowns, few), Err(Error::SizeLimit { .. })));
    }
}
