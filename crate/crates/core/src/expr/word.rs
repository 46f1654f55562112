use std::fmt;

use serde::{Deserialize, Serialize};

/// Label of one of the algebras entering a mixed moment (`a`, `b`, `c`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Algebra(char);

impl Algebra {
    pub fn new(label: char) -> Self {
        Algebra(label)
    }

    pub fn label(self) -> char {
        self.0
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One element of an algebra, e.g. `a2` is element 2 of algebra `a`.
///
/// Letters order by algebra label first, then by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub algebra: Algebra,
    pub index: u32,
}

impl Letter {
    /// Panics if `index` is zero; indices start at 1.
    pub fn new(algebra: char, index: u32) -> Self {
        assert!(index >= 1, "letter indices start at 1");
        Letter {
            algebra: Algebra(algebra),
            index,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.algebra, self.index)
    }
}

/// A product of letters. The empty word is the unit.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// Rotation moving position `k` to the front.
    pub fn rotated(&self, k: usize) -> Word {
        if self.0.is_empty() {
            return self.clone();
        }
        let k = k % self.0.len();
        let mut letters = self.0[k..].to_vec();
        letters.extend_from_slice(&self.0[..k]);
        Word(letters)
    }

    /// Word with every occurrence of `letter` deleted (replaced by the unit).
    pub fn without(&self, letter: Letter) -> Word {
        Word(self.0.iter().copied().filter(|l| *l != letter).collect())
    }

    pub fn map_letters(&self, f: impl Fn(Letter) -> Letter) -> Word {
        Word(self.0.iter().map(|l| f(*l)).collect())
    }

    /// Distinct algebras, sorted.
    pub fn algebras(&self) -> Vec<Algebra> {
        let mut algebras: Vec<Algebra> = self.0.iter().map(|l| l.algebra).collect();
        algebras.sort();
        algebras.dedup();
        algebras
    }

    pub fn is_single_algebra(&self) -> bool {
        self.0.windows(2).all(|w| w[0].algebra == w[1].algebra)
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Which symmetries the functionals are assumed to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetryFlags {
    pub phi1_tracial: bool,
    pub phi2_tracial_each_arg: bool,
    pub phi2_symmetric: bool,
}

impl Default for SymmetryFlags {
    fn default() -> Self {
        SymmetryFlags {
            phi1_tracial: true,
            phi2_tracial_each_arg: true,
            phi2_symmetric: true,
        }
    }
}

impl SymmetryFlags {
    pub fn none() -> Self {
        SymmetryFlags {
            phi1_tracial: false,
            phi2_tracial_each_arg: false,
            phi2_symmetric: false,
        }
    }

    /// Comma-separated list of enabled flags, in CLI spelling.
    pub fn to_cli(&self) -> String {
        let mut names = Vec::new();
        if self.phi1_tracial {
            names.push("tracial");
        }
        if self.phi2_tracial_each_arg {
            names.push("phi2tracial");
        }
        if self.phi2_symmetric {
            names.push("symmetric");
        }
        names.join(",")
    }

    /// Inverse of [`SymmetryFlags::to_cli`]; `none` or the empty string disables all.
    pub fn from_cli(s: &str) -> Option<Self> {
        let mut f = SymmetryFlags::none();
        for name in s.split(',').map(str::trim).filter(|x| !x.is_empty() && *x != "none") {
            match name {
                "tracial" => f.phi1_tracial = true,
                "phi2tracial" => f.phi2_tracial_each_arg = true,
                "symmetric" => f.phi2_symmetric = true,
                _ => return None,
            }
        }
        Some(f)
    }
}

/// Least cyclic rotation of `w` when `tracial` is set, `w` itself otherwise.
pub fn canonicalize_word(w: &Word, tracial: bool) -> Word {
    if !tracial || w.len() < 2 {
        return w.clone();
    }
    (1..w.len())
        .map(|k| w.rotated(k))
        .fold(w.clone(), |best, cand| if cand < best { cand } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(s: &str) -> Word {
        s.split_whitespace()
            .map(|t| {
                let mut c = t.chars();
                let alg = c.next().unwrap();
                Letter::new(alg, c.as_str().parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn least_rotation() {
        assert_eq!(canonicalize_word(&word("a2 a1"), true), word("a1 a2"));
        assert_eq!(canonicalize_word(&word("a1 b1"), true), word("a1 b1"));
        assert_eq!(canonicalize_word(&word("a2 a1"), false), word("a2 a1"));
        assert_eq!(
            canonicalize_word(&word("b2 a1 b1 a2"), true),
            word("a1 b1 a2 b2")
        );
    }

    #[test]
    fn unit_word() {
        let w = word("a1 b1");
        assert_eq!(w.concat(&Word::unit()), w);
        assert_eq!(Word::unit().to_string(), "1");
        assert_eq!(w.without(Letter::new('b', 1)), word("a1"));
    }
}
