//! Exact multivariate polynomials over the rationals in named unknowns.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Renders `p/q`, or `p` for integers.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// An ansatz coefficient, rendered `alpha<k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Unknown(pub u32);

impl fmt::Display for Unknown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha{}", self.0)
    }
}

impl Unknown {
    pub fn parse(s: &str) -> Option<Unknown> {
        s.strip_prefix("alpha")?.parse().ok().map(Unknown)
    }
}

/// Power product of unknowns, kept sorted by unknown with positive exponents.
///
/// Ordered by total degree (higher first), then lexicographically with lower
/// unknowns and higher exponents first. The first monomial of a polynomial in
/// this order is its leading term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PowerProduct(Vec<(Unknown, u32)>);

impl PowerProduct {
    pub fn one() -> Self {
        PowerProduct(Vec::new())
    }

    pub fn var(u: Unknown) -> Self {
        PowerProduct(vec![(u, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(Unknown, u32)>) -> Self {
        pairs.retain(|(_, e)| *e > 0);
        pairs.sort();
        let mut merged: Vec<(Unknown, u32)> = Vec::with_capacity(pairs.len());
        for (u, e) in pairs {
            match merged.last_mut() {
                Some((lu, le)) if *lu == u => *le += e,
                _ => merged.push((u, e)),
            }
        }
        PowerProduct(merged)
    }

    pub fn pairs(&self) -> &[(Unknown, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, u: Unknown) -> u32 {
        self.0
            .iter()
            .find(|(v, _)| *v == u)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &PowerProduct) -> PowerProduct {
        let mut pairs = self.0.clone();
        pairs.extend_from_slice(&other.0);
        PowerProduct::from_pairs(pairs)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &PowerProduct) -> Option<PowerProduct> {
        let mut out = Vec::new();
        for (u, e) in &self.0 {
            let d = other.exponent(*u);
            if d > *e {
                return None;
            }
            if e - d > 0 {
                out.push((*u, e - d));
            }
        }
        if other.0.iter().any(|(u, _)| self.exponent(*u) == 0) {
            return None;
        }
        Some(PowerProduct(out))
    }

    pub fn gcd(&self, other: &PowerProduct) -> PowerProduct {
        PowerProduct(
            self.0
                .iter()
                .filter_map(|(u, e)| {
                    let d = other.exponent(*u).min(*e);
                    (d > 0).then_some((*u, d))
                })
                .collect(),
        )
    }

    /// Exponent vector walk used by the ordering: lower unknowns first.
    fn lex_cmp(&self, other: &PowerProduct) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some((u, e)), Some((v, f))) => match u.cmp(v) {
                    Ordering::Less => return Ordering::Less,
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Equal => match f.cmp(e) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

impl Ord for PowerProduct {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then_with(|| self.lex_cmp(other))
    }
}

impl PartialOrd for PowerProduct {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PowerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, (u, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{u}")?;
            } else {
                write!(f, "{u}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial with exact rational coefficients. Zero has empty support.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CoeffPoly {
    terms: BTreeMap<PowerProduct, Rational>,
}

impl CoeffPoly {
    pub fn zero() -> Self {
        CoeffPoly::default()
    }

    pub fn one() -> Self {
        CoeffPoly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = CoeffPoly::zero();
        p.add_term(PowerProduct::one(), c);
        p
    }

    pub fn int(c: i64) -> Self {
        CoeffPoly::constant(rat(c))
    }

    pub fn var(u: Unknown) -> Self {
        let mut p = CoeffPoly::zero();
        p.add_term(PowerProduct::var(u), Rational::one());
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (PowerProduct, Rational)>) -> Self {
        let mut p = CoeffPoly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: PowerProduct, c: Rational) {
        if c.is_zero() {
            return;
        }
        let remove = {
            let entry = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
            *entry += c;
            entry.is_zero()
        };
        if remove {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PowerProduct, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_zero() {
            Some(Rational::zero())
        } else if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, u: Unknown) -> u32 {
        self.terms.keys().map(|m| m.exponent(u)).max().unwrap_or(0)
    }

    pub fn unknowns(&self) -> BTreeSet<Unknown> {
        self.terms
            .keys()
            .flat_map(|m| m.pairs().iter().map(|(u, _)| *u))
            .collect()
    }

    pub fn leading(&self) -> Option<(&PowerProduct, &Rational)> {
        self.terms.iter().next()
    }

    pub fn scale(&self, c: &Rational) -> CoeffPoly {
        if c.is_zero() {
            return CoeffPoly::zero();
        }
        CoeffPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn mul_power_product(&self, m: &PowerProduct) -> CoeffPoly {
        CoeffPoly {
            terms: self.terms.iter().map(|(p, k)| (p.mul(m), k.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> CoeffPoly {
        (0..e).fold(CoeffPoly::one(), |acc, _| &acc * self)
    }

    /// Replace unknowns by polynomials.
    pub fn substitute(&self, map: &BTreeMap<Unknown, CoeffPoly>) -> CoeffPoly {
        if self.unknowns().iter().all(|u| !map.contains_key(u)) {
            return self.clone();
        }
        let mut out = CoeffPoly::zero();
        for (m, c) in &self.terms {
            let mut kept = Vec::new();
            let mut factor = CoeffPoly::constant(c.clone());
            for (u, e) in m.pairs() {
                match map.get(u) {
                    Some(p) => factor = &factor * &p.pow(*e),
                    None => kept.push((*u, *e)),
                }
            }
            out = &out + &factor.mul_power_product(&PowerProduct::from_pairs(kept));
        }
        out
    }

    /// Evaluate at a point; `None` if some unknown has no value.
    pub fn eval(&self, point: &BTreeMap<Unknown, Rational>) -> Option<Rational> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (u, e) in m.pairs() {
                let x = point.get(u)?;
                for _ in 0..*e {
                    v *= x;
                }
            }
            total += v;
        }
        Some(total)
    }

    /// Scale to coprime integer coefficients with a positive leading term.
    pub fn normalized(&self) -> CoeffPoly {
        if self.is_zero() {
            return CoeffPoly::zero();
        }
        let lcm_den = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .terms
            .values()
            .map(|c| (c * Rational::from_integer(lcm_den.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let mut factor = Rational::new(lcm_den, g);
        if self.leading().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            factor = -factor;
        }
        self.scale(&factor)
    }

    /// Largest power product dividing every term.
    pub fn monomial_content(&self) -> PowerProduct {
        let mut it = self.terms.keys();
        let first = match it.next() {
            Some(m) => m.clone(),
            None => return PowerProduct::one(),
        };
        it.fold(first, |acc, m| acc.gcd(m))
    }

    pub fn div_power_product(&self, m: &PowerProduct) -> Option<CoeffPoly> {
        let mut out = CoeffPoly::zero();
        for (p, c) in &self.terms {
            out.add_term(p.div(m)?, c.clone());
        }
        Some(out)
    }

    /// Exact quotient `self / divisor`, if the division leaves no remainder.
    pub fn exact_div(&self, divisor: &CoeffPoly) -> Option<CoeffPoly> {
        let (lm, lc) = divisor.leading()?;
        let mut rem = self.clone();
        let mut quot = CoeffPoly::zero();
        while let Some((m, c)) = rem.leading() {
            let qm = m.div(lm)?;
            let qc = c / lc;
            let term = CoeffPoly::from_terms([(qm, qc)]);
            rem = &rem - &(&term * divisor);
            quot = &quot + &term;
        }
        Some(quot)
    }

    /// Split as `coefficient * u + rest` when `self` is linear in `u`.
    pub fn linear_in(&self, u: Unknown) -> Option<(CoeffPoly, CoeffPoly)> {
        if self.degree_in(u) != 1 {
            return None;
        }
        let mut coefficient = CoeffPoly::zero();
        let mut rest = CoeffPoly::zero();
        let unit = PowerProduct::var(u);
        for (m, c) in &self.terms {
            if m.exponent(u) == 1 {
                coefficient.add_term(m.div(&unit).expect("exponent checked"), c.clone());
            } else {
                rest.add_term(m.clone(), c.clone());
            }
        }
        Some((coefficient, rest))
    }
}

/// Lower degree first, then fewer terms, then term by term.
impl Ord for CoeffPoly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.len().cmp(&other.len()))
            .then_with(|| self.terms.iter().cmp(other.terms.iter()))
    }
}

impl PartialOrd for CoeffPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &CoeffPoly {
    type Output = CoeffPoly;
    fn add(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &CoeffPoly {
    type Output = CoeffPoly;
    fn sub(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &CoeffPoly {
    type Output = CoeffPoly;
    fn mul(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = CoeffPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &CoeffPoly {
    type Output = CoeffPoly;
    fn neg(self) -> CoeffPoly {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for CoeffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", fmt_rational(&abs))?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&abs))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(k: u32) -> CoeffPoly {
        CoeffPoly::var(Unknown(k))
    }

    #[test]
    fn render_and_leading_term() {
        let p = &(&a(3) + &a(2)) - &CoeffPoly::int(1);
        assert_eq!(p.to_string(), "alpha2 + alpha3 - 1");
        let q = &(&a(1) * &a(6)) + &(&a(2) * &a(2));
        assert_eq!(q.to_string(), "alpha1*alpha6 + alpha2^2");
    }

    #[test]
    fn normalization() {
        let p = &CoeffPoly::int(1) - &(&a(2) + &a(3));
        assert_eq!(p.normalized().to_string(), "alpha2 + alpha3 - 1");
        let q = a(1).scale(&ratio(-2, 3));
        assert_eq!(q.normalized().to_string(), "alpha1");
        let r = &a(1).scale(&ratio(1, 2)) + &a(2).scale(&ratio(1, 3));
        assert_eq!(r.normalized().to_string(), "3*alpha1 + 2*alpha2");
    }

    #[test]
    fn substitution_and_division() {
        let p = &(&a(1) * &a(6)) - &(&a(2) * &a(2));
        let mut map = BTreeMap::new();
        map.insert(Unknown(2), CoeffPoly::zero());
        assert_eq!(p.substitute(&map).to_string(), "alpha1*alpha6");
        let prod = &(&a(1) - &CoeffPoly::int(2)) * &(&a(2) + &a(3));
        let q = prod.exact_div(&(&a(2) + &a(3))).unwrap();
        assert_eq!(q, &a(1) - &CoeffPoly::int(2));
        assert!(prod.exact_div(&(&a(2) + &CoeffPoly::int(1))).is_none());
    }

    #[test]
    fn rational_text() {
        assert_eq!(fmt_rational(&ratio(-3, 6)), "-1/2");
        assert_eq!(parse_rational("-1/2"), Some(ratio(-1, 2)));
        assert_eq!(parse_rational("7"), Some(rat(7)));
        assert_eq!(parse_rational("1/0"), None);
    }
}
