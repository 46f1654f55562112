use std::cmp::{Ordering, Reverse};
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed};

use super::coeff::{fmt_rational, CoeffPoly, Rational, Unknown};
use super::symbol::{MomentSymbol, Reduced};
use super::word::{Algebra, Letter, SymmetryFlags};

/// A product of moment symbols (a multiset). The empty monomial is the scalar 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MomentMonomial(Vec<MomentSymbol>);

impl MomentMonomial {
    pub fn one() -> Self {
        MomentMonomial(Vec::new())
    }

    /// Symbols are stored grouped by algebra, `phi2` factors first.
    pub fn new(mut symbols: Vec<MomentSymbol>) -> Self {
        symbols.sort_by_cached_key(|s| (s.algebras(), !s.is_second_order(), s.clone()));
        MomentMonomial(symbols)
    }

    pub fn symbols(&self) -> &[MomentSymbol] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &MomentMonomial) -> MomentMonomial {
        let mut symbols = self.0.clone();
        symbols.extend_from_slice(&other.0);
        MomentMonomial::new(symbols)
    }

    pub fn second_order_count(&self) -> usize {
        self.0.iter().filter(|s| s.is_second_order()).count()
    }

    pub fn letter_count(&self) -> usize {
        self.0.iter().map(|s| s.letter_count()).sum()
    }

    pub fn letters(&self) -> Vec<Letter> {
        let mut out: Vec<Letter> = self.0.iter().flat_map(|s| s.letters()).collect();
        out.sort();
        out
    }

    /// Grouping used by the monomial order: symbols collected per algebra set.
    fn order_key(&self) -> (Reverse<usize>, Vec<GroupKey<'_>>) {
        let mut groups: BTreeMap<Vec<Algebra>, Vec<&MomentSymbol>> = BTreeMap::new();
        for s in &self.0 {
            groups.entry(s.algebras()).or_default().push(s);
        }
        let keys = groups
            .into_iter()
            .map(|(algebras, symbols)| GroupKey {
                algebras,
                second_order: Reverse(symbols.iter().filter(|s| s.is_second_order()).count()),
                count: symbols.len(),
                symbols,
            })
            .collect();
        (Reverse(self.second_order_count()), keys)
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey<'a> {
    algebras: Vec<Algebra>,
    second_order: Reverse<usize>,
    count: usize,
    symbols: Vec<&'a MomentSymbol>,
}

/// Monomials with more `phi2` factors come first; ties are broken algebra by
/// algebra, preferring `phi2` factors and then fewer (coarser) factors. On the
/// two-algebra patterns this lists monomials in the familiar textbook order.
impl Ord for MomentMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            return Ordering::Equal;
        }
        self.order_key().cmp(&other.order_key())
    }
}

impl PartialOrd for MomentMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MomentMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Linear combination of moment monomials with polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolyExpr {
    terms: BTreeMap<MomentMonomial, CoeffPoly>,
}

impl PolyExpr {
    pub fn zero() -> Self {
        PolyExpr::default()
    }

    pub fn scalar(c: CoeffPoly) -> Self {
        PolyExpr::term(MomentMonomial::one(), c)
    }

    pub fn one() -> Self {
        PolyExpr::scalar(CoeffPoly::one())
    }

    pub fn term(m: MomentMonomial, c: CoeffPoly) -> Self {
        let mut e = PolyExpr::zero();
        e.add_term(m, c);
        e
    }

    /// The expression represented by a canonicalization outcome.
    pub fn from_reduced(r: Reduced) -> Self {
        match r {
            Reduced::Zero => PolyExpr::zero(),
            Reduced::One => PolyExpr::one(),
            Reduced::Symbol(s) => PolyExpr::term(MomentMonomial::new(vec![s]), CoeffPoly::one()),
        }
    }

    /// Product of the given (already reduced) factors.
    pub fn product(factors: impl IntoIterator<Item = Reduced>) -> Self {
        let mut symbols = Vec::new();
        for r in factors {
            match r {
                Reduced::Zero => return PolyExpr::zero(),
                Reduced::One => {}
                Reduced::Symbol(s) => symbols.push(s),
            }
        }
        PolyExpr::term(MomentMonomial::new(symbols), CoeffPoly::one())
    }

    pub fn add_term(&mut self, m: MomentMonomial, c: CoeffPoly) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing = &*existing + &c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MomentMonomial, &CoeffPoly)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &MomentMonomial> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &PolyExpr) -> PolyExpr {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn negate(&self) -> PolyExpr {
        self.scale(&CoeffPoly::int(-1))
    }

    pub fn sub(&self, other: &PolyExpr) -> PolyExpr {
        self.add(&other.negate())
    }

    pub fn scale(&self, c: &CoeffPoly) -> PolyExpr {
        let mut out = PolyExpr::zero();
        for (m, k) in &self.terms {
            out.add_term(m.clone(), k * c);
        }
        out
    }

    pub fn mul(&self, other: &PolyExpr) -> PolyExpr {
        let mut out = PolyExpr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn coefficient_of(&self, m: &MomentMonomial) -> CoeffPoly {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Rewrite every symbol through `f` (which returns an expression for it)
    /// and collect.
    pub fn map_symbols<E>(
        &self,
        mut f: impl FnMut(&MomentSymbol) -> Result<PolyExpr, E>,
    ) -> Result<PolyExpr, E> {
        let mut out = PolyExpr::zero();
        for (m, c) in &self.terms {
            let mut acc = PolyExpr::scalar(c.clone());
            for s in m.symbols() {
                acc = acc.mul(&f(s)?);
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Apply a letter-level rewrite to every argument word and re-canonicalize.
    pub fn map_letters(&self, flags: SymmetryFlags, f: impl Fn(Letter) -> Letter) -> PolyExpr {
        self.map_symbols::<()>(|s| {
            Ok(PolyExpr::from_reduced(s.map_words(flags, |w| w.map_letters(&f))))
        })
        .expect("infallible")
    }

    /// Substitute unknowns inside the coefficients.
    pub fn substitute_unknowns(&self, map: &BTreeMap<Unknown, CoeffPoly>) -> PolyExpr {
        let mut out = PolyExpr::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.substitute(map));
        }
        out
    }

    /// Unknowns appearing in any coefficient.
    pub fn unknowns(&self) -> std::collections::BTreeSet<Unknown> {
        self.terms.values().flat_map(|c| c.unknowns()).collect()
    }
}

/// Delete every occurrence of `letter` (i.e. set it to the unit) and collect.
pub fn substitute_unit(e: &PolyExpr, letter: Letter, flags: SymmetryFlags) -> PolyExpr {
    e.map_symbols::<()>(|s| Ok(PolyExpr::from_reduced(s.map_words(flags, |w| w.without(letter)))))
        .expect("infallible")
}

fn fmt_coeff_factor(c: &CoeffPoly) -> (bool, Option<String>) {
    // Returns (negative, rendered magnitude or None for 1).
    if let Some(v) = c.constant_value() {
        let neg = v.is_negative();
        let abs = v.abs();
        return (neg, if abs.is_one() { None } else { Some(fmt_rational(&abs)) });
    }
    if c.len() == 1 {
        let (m, k) = c.leading().expect("nonzero");
        let neg = k.is_negative();
        let abs: Rational = k.abs();
        let body = if abs.is_one() {
            m.to_string()
        } else {
            format!("{}*{m}", fmt_rational(&abs))
        };
        return (neg, Some(body));
    }
    (false, Some(format!("({c})")))
}

/// Renders one signed term; used by both the plain and the grouped renderers.
pub(crate) fn fmt_term(m: &MomentMonomial, c: &CoeffPoly, first: bool) -> String {
    let (neg, body) = fmt_coeff_factor(c);
    let mut out = String::new();
    if first {
        if neg {
            out.push('-');
        }
    } else if neg {
        out.push_str(" - ");
    } else {
        out.push_str(" + ");
    }
    match (body, m.is_one()) {
        (None, true) => out.push('1'),
        (None, false) => out.push_str(&m.to_string()),
        (Some(b), true) => out.push_str(&b),
        (Some(b), false) => {
            out.push_str(&b);
            out.push('*');
            out.push_str(&m.to_string());
        }
    }
    out
}

impl fmt::Display for PolyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            write!(f, "{}", fmt_term(m, c, i == 0))?;
        }
        Ok(())
    }
}
