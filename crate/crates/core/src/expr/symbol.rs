use std::fmt;

use super::word::{canonicalize_word, Algebra, Letter, SymmetryFlags, Word};

/// An atomic moment: `phi1(w)` or `phi2(w, w')`.
///
/// Values built through [`MomentSymbol::phi1`] / [`MomentSymbol::phi2`] are
/// canonical; the raw constructors exist for pattern matching and tests.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MomentSymbol {
    Phi1(Word),
    Phi2(Word, Word),
}

/// Outcome of canonicalizing a symbol: the unit rules may turn it into a scalar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reduced {
    Zero,
    One,
    Symbol(MomentSymbol),
}

impl MomentSymbol {
    pub fn phi1(w: Word, flags: SymmetryFlags) -> Reduced {
        canonicalize_symbol(&MomentSymbol::Phi1(w), flags)
    }

    pub fn phi2(w1: Word, w2: Word, flags: SymmetryFlags) -> Reduced {
        canonicalize_symbol(&MomentSymbol::Phi2(w1, w2), flags)
    }

    pub fn is_second_order(&self) -> bool {
        matches!(self, MomentSymbol::Phi2(..))
    }

    pub fn words(&self) -> Vec<&Word> {
        match self {
            MomentSymbol::Phi1(w) => vec![w],
            MomentSymbol::Phi2(u, v) => vec![u, v],
        }
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.words()
            .into_iter()
            .flat_map(|w| w.letters().iter().copied())
    }

    pub fn letter_count(&self) -> usize {
        self.words().iter().map(|w| w.len()).sum()
    }

    /// Distinct algebras among all arguments, sorted.
    pub fn algebras(&self) -> Vec<Algebra> {
        let mut algebras: Vec<Algebra> = self.letters().map(|l| l.algebra).collect();
        algebras.sort();
        algebras.dedup();
        algebras
    }

    /// A symbol is mixed when its letters come from more than one algebra.
    pub fn is_mixed(&self) -> bool {
        self.algebras().len() > 1
    }

    /// Apply `f` to every argument word, then canonicalize.
    pub fn map_words(&self, flags: SymmetryFlags, f: impl Fn(&Word) -> Word) -> Reduced {
        match self {
            MomentSymbol::Phi1(w) => MomentSymbol::phi1(f(w), flags),
            MomentSymbol::Phi2(u, v) => MomentSymbol::phi2(f(u), f(v), flags),
        }
    }
}

/// Canonical form of a moment symbol under `flags`.
///
/// Argument words are replaced by their least rotation when the matching
/// traciality flag is set, the two arguments of `phi2` are sorted when it is
/// symmetric, and the unit rules `phi1(1) = 1`, `phi2(w, 1) = phi2(1, w) = 0`
/// are applied.
pub fn canonicalize_symbol(s: &MomentSymbol, flags: SymmetryFlags) -> Reduced {
    match s {
        MomentSymbol::Phi1(w) => {
            if w.is_empty() {
                Reduced::One
            } else {
                Reduced::Symbol(MomentSymbol::Phi1(canonicalize_word(w, flags.phi1_tracial)))
            }
        }
        MomentSymbol::Phi2(u, v) => {
            if u.is_empty() || v.is_empty() {
                return Reduced::Zero;
            }
            let mut u = canonicalize_word(u, flags.phi2_tracial_each_arg);
            let mut v = canonicalize_word(v, flags.phi2_tracial_each_arg);
            if flags.phi2_symmetric && v < u {
                std::mem::swap(&mut u, &mut v);
            }
            Reduced::Symbol(MomentSymbol::Phi2(u, v))
        }
    }
}

impl fmt::Display for MomentSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentSymbol::Phi1(w) => write!(f, "phi1({w})"),
            MomentSymbol::Phi2(u, v) => write!(f, "phi2({u}, {v})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(a: char, i: u32) -> Letter {
        Letter::new(a, i)
    }

    #[test]
    fn symmetric_argument_order() {
        let s = MomentSymbol::phi2(
            Word::new(vec![l('b', 1)]),
            Word::new(vec![l('a', 1)]),
            SymmetryFlags::default(),
        );
        assert_eq!(
            s,
            Reduced::Symbol(MomentSymbol::Phi2(
                Word::new(vec![l('a', 1)]),
                Word::new(vec![l('b', 1)])
            ))
        );
    }

    #[test]
    fn unit_rules() {
        let flags = SymmetryFlags::default();
        assert_eq!(
            MomentSymbol::phi2(Word::new(vec![l('a', 1)]), Word::unit(), flags),
            Reduced::Zero
        );
        assert_eq!(
            MomentSymbol::phi2(Word::unit(), Word::new(vec![l('a', 1)]), flags),
            Reduced::Zero
        );
        assert_eq!(MomentSymbol::phi1(Word::unit(), flags), Reduced::One);
    }

    #[test]
    fn flags_off_keeps_order() {
        let s = MomentSymbol::phi2(
            Word::new(vec![l('b', 1)]),
            Word::new(vec![l('a', 2), l('a', 1)]),
            SymmetryFlags::none(),
        );
        assert_eq!(
            s,
            Reduced::Symbol(MomentSymbol::Phi2(
                Word::new(vec![l('b', 1)]),
                Word::new(vec![l('a', 2), l('a', 1)])
            ))
        );
    }
}
