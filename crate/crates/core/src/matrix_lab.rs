//! Monte Carlo checks with independent GUE matrices.
//!
//! `phi1` is estimated by the normalized trace `(1/n) Tr`, `phi2` by the
//! covariance of unnormalized traces, which has an order-one limit.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ansatz::Pattern;
use crate::derivations::{candidates, lower_context};
use crate::error::{Error, Result};
use crate::expr::{Algebra, Letter, MomentSymbol, PolyExpr, Rational, SymmetryFlags, Word};
use crate::rules::{instantiate, Expander, Rule};

pub type Matrix = Array2<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// Hermitian, entry variance `1/n`.
    Gue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub dimension: usize,
    /// Algebras not listed here default to GUE.
    pub ensembles: BTreeMap<Algebra, EnsembleKind>,
    /// Each letter stands for this power of its algebra's matrix (default 1).
    pub powers: BTreeMap<Letter, u32>,
}

impl EnsembleSpec {
    pub fn gue(dimension: usize) -> Self {
        EnsembleSpec {
            dimension,
            ensembles: BTreeMap::new(),
            powers: BTreeMap::new(),
        }
    }

    pub fn with_powers(mut self, powers: BTreeMap<Letter, u32>) -> Self {
        self.powers = powers;
        self
    }

    fn power(&self, l: Letter) -> u32 {
        self.powers.get(&l).copied().unwrap_or(1)
    }

    fn kind(&self, a: Algebra) -> EnsembleKind {
        self.ensembles.get(&a).copied().unwrap_or(EnsembleKind::Gue)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl fmt::Display for MomentEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ± {:.6} ({} samples, seed {})", self.value, self.standard_error, self.samples, self.seed)
    }
}

/// Substream of one (algebra, draw) pair. Pilot draws live in the upper half.
fn stream_id(algebra: Algebra, draw: u64, pilot: bool) -> u64 {
    (u64::from(pilot) << 63) | (draw << 21) | u64::from(algebra.label())
}

/// A GUE sample for `algebra` at `draw`, deterministic in `seed`.
pub fn sample_matrix(spec: &EnsembleSpec, algebra: Algebra, seed: u64, draw: u64) -> Result<Matrix> {
    sample_on_stream(spec, algebra, seed, stream_id(algebra, draw, false))
}

fn sample_on_stream(spec: &EnsembleSpec, algebra: Algebra, seed: u64, stream: u64) -> Result<Matrix> {
    let n = spec.dimension;
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let EnsembleKind::Gue = spec.kind(algebra);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let diag = (1.0 / n as f64).sqrt();
    let off = (0.5 / n as f64).sqrt();
    let mut m = Matrix::zeros((n, n));
    for i in 0..n {
        let x: f64 = StandardNormal.sample(&mut rng);
        m[[i, i]] = Complex64::new(diag * x, 0.0);
        for j in i + 1..n {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let z = Complex64::new(off * re, off * im);
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
        }
    }
    Ok(m)
}

/// A word as a sequence of (algebra, power) runs.
fn runs(w: &Word, spec: &EnsembleSpec) -> Vec<(Algebra, u32)> {
    let mut out: Vec<(Algebra, u32)> = Vec::new();
    for l in w.letters() {
        let p = spec.power(*l);
        match out.last_mut() {
            Some((a, q)) if *a == l.algebra => *q += p,
            _ => out.push((l.algebra, p)),
        }
    }
    if out.len() > 1 && out[0].0 == out[out.len() - 1].0 {
        // Rotate inside the trace so the wrap-around run is merged.
        let (a, p) = out.pop().expect("nonempty");
        out[0] = (a, out[0].1 + p);
    }
    out
}

/// Matrices and their powers for one draw.
struct Draw {
    powers: BTreeMap<(Algebra, u32), Matrix>,
}

impl Draw {
    fn new(spec: &EnsembleSpec, words: &[&[(Algebra, u32)]], seed: u64, draw: u64, pilot: bool) -> Result<Self> {
        let mut needed: BTreeMap<Algebra, u32> = BTreeMap::new();
        for w in words {
            for (a, p) in w.iter() {
                let e = needed.entry(*a).or_default();
                *e = (*e).max(*p);
            }
        }
        let mut powers = BTreeMap::new();
        for (a, max) in needed {
            let base = sample_on_stream(spec, a, seed, stream_id(a, draw, pilot))?;
            let mut cur = base.clone();
            for k in 1..=max {
                if k > 1 {
                    cur = cur.dot(&base);
                }
                powers.insert((a, k), cur.clone());
            }
        }
        Ok(Draw { powers })
    }

    fn trace(&self, w: &[(Algebra, u32)], n: usize) -> f64 {
        let mats: Vec<&Matrix> = w.iter().map(|k| &self.powers[k]).collect();
        match mats.as_slice() {
            [] => n as f64,
            [m] => m.diag().iter().map(|z| z.re).sum(),
            [init @ .., last] => {
                let mut p = init[0].clone();
                for m in &init[1..] {
                    p = p.dot(*m);
                }
                // Tr(P L) = sum_ij P_ij L_ji
                p.indexed_iter().map(|((i, j), z)| (z * last[[j, i]]).re).sum()
            }
        }
    }
}

/// Streaming mean and centered sums (Welford), accumulated in draw order.
#[derive(Default)]
struct Moments {
    count: usize,
    mean_x: f64,
    mean_y: f64,
    c_xy: f64,
}

impl Moments {
    fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        let k = self.count as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / k;
        self.mean_y += (y - self.mean_y) / k;
        self.c_xy += dx * (y - self.mean_y);
    }
}

fn mean_estimate(xs: &[f64], seed: u64) -> MomentEstimate {
    let mut m = Moments::default();
    for &x in xs {
        m.push(x, x);
    }
    let n = xs.len() as f64;
    let var = m.c_xy / (n - 1.0);
    MomentEstimate {
        value: m.mean_x,
        standard_error: (var / n).sqrt(),
        samples: xs.len(),
        seed,
    }
}

/// Sample covariance of paired values; the standard error is that of the
/// mean of the centered products.
fn covariance_estimate(pairs: &[(f64, f64)], seed: u64) -> MomentEstimate {
    let mut m = Moments::default();
    for &(x, y) in pairs {
        m.push(x, y);
    }
    let n = pairs.len() as f64;
    let value = m.c_xy / (n - 1.0);
    let products: Vec<f64> = pairs.iter().map(|(x, y)| (x - m.mean_x) * (y - m.mean_y)).collect();
    let mut p = Moments::default();
    for &z in &products {
        p.push(z, z);
    }
    MomentEstimate {
        value,
        standard_error: (p.c_xy / (n - 1.0) / n).sqrt(),
        samples: pairs.len(),
        seed,
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::SizeLimit {
            what: "samples (at least 2)",
            actual: samples,
            bound: 2,
        });
    }
    Ok(())
}

pub fn estimate_phi1(w: &Word, spec: &EnsembleSpec, samples: usize, seed: u64) -> Result<MomentEstimate> {
    check_samples(samples)?;
    let r = runs(w, spec);
    let n = spec.dimension;
    let mut xs = Vec::with_capacity(samples);
    for d in 0..samples as u64 {
        let draw = Draw::new(spec, &[&r], seed, d, false)?;
        xs.push(draw.trace(&r, n) / n as f64);
    }
    Ok(mean_estimate(&xs, seed))
}

pub fn estimate_phi2(w1: &Word, w2: &Word, spec: &EnsembleSpec, samples: usize, seed: u64) -> Result<MomentEstimate> {
    check_samples(samples)?;
    Ok(covariance_estimate(&trace_pairs(w1, w2, spec, samples, seed, false)?, seed))
}

fn trace_pairs(w1: &Word, w2: &Word, spec: &EnsembleSpec, samples: usize, seed: u64, pilot: bool) -> Result<Vec<(f64, f64)>> {
    let (r1, r2) = (runs(w1, spec), runs(w2, spec));
    let n = spec.dimension;
    let mut pairs = Vec::with_capacity(samples);
    for d in 0..samples as u64 {
        let draw = Draw::new(spec, &[&r1, &r2], seed, d, pilot)?;
        pairs.push((draw.trace(&r1, n), draw.trace(&r2, n)));
    }
    Ok(pairs)
}

/// Exact value of `rule` with every symbol replaced by its limit.
pub fn evaluate_rule(rule: &PolyExpr, limits: &BTreeMap<MomentSymbol, Rational>) -> Result<Rational> {
    let mut total = Rational::zero();
    for (m, c) in rule.terms() {
        let mut v = c
            .constant_value()
            .ok_or_else(|| Error::IncompleteLimits(format!("coefficient {c}")))?;
        for s in m.symbols() {
            v *= limits.get(s).ok_or_else(|| Error::IncompleteLimits(s.to_string()))?.clone();
        }
        total += v;
    }
    Ok(total)
}

fn binomial(n: u64, k: u64) -> BigInt {
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

/// `phi1(A^k)` for a standard semicircular `A`: Catalan numbers on even `k`.
pub fn semicircle_moment(k: u32) -> Rational {
    if k % 2 == 1 {
        return Rational::zero();
    }
    let m = u64::from(k / 2);
    Rational::new(binomial(2 * m, m), BigInt::from(m + 1))
}

/// `phi2(A^p, A^q)` for GUE: the number of non-crossing annular pairings
/// of a `p`-circle and a `q`-circle with at least one through string.
pub fn gue_fluctuation_moment(p: u32, q: u32) -> Rational {
    if p == 0 || q == 0 || (p + q) % 2 == 1 {
        return Rational::zero();
    }
    let (p, q) = (u64::from(p), u64::from(q));
    if p % 2 == 0 {
        let (k, l) = (p / 2, q / 2);
        Rational::new(BigInt::from(k * l) * binomial(2 * k, k) * binomial(2 * l, l), BigInt::from(k + l))
    } else {
        let (k, l) = ((p - 1) / 2, (q - 1) / 2);
        Rational::new(
            BigInt::from((k + 1) * (l + 1)) * binomial(2 * k + 1, k) * binomial(2 * l + 1, l),
            BigInt::from(k + l + 1),
        )
    }
}

fn single_letter_power(w: &Word) -> Option<u32> {
    let first = w.letters().first()?;
    w.letters().iter().all(|l| l == first).then(|| w.len() as u32)
}

/// GUE limits for every symbol in `e`, where each symbol is a power of a
/// single matrix letter.
pub fn gue_limits(e: &PolyExpr) -> Result<BTreeMap<MomentSymbol, Rational>> {
    let mut out = BTreeMap::new();
    for m in e.monomials() {
        for s in m.symbols() {
            let missing = || Error::IncompleteLimits(s.to_string());
            let v = match s {
                MomentSymbol::Phi1(w) => semicircle_moment(single_letter_power(w).ok_or_else(missing)?),
                MomentSymbol::Phi2(w1, w2) => {
                    let (p, q) = (
                        single_letter_power(w1).ok_or_else(missing)?,
                        single_letter_power(w2).ok_or_else(missing)?,
                    );
                    if w1.letters()[0] != w2.letters()[0] {
                        Rational::zero()
                    } else {
                        gue_fluctuation_moment(p, q)
                    }
                }
            };
            out.insert(s.clone(), v);
        }
    }
    Ok(out)
}

/// A mixed `phi2` with each pattern letter standing for a matrix power.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub pattern: Pattern,
    pub powers: BTreeMap<Letter, u32>,
}

/// Parse names like `a2b2-a2b2`: two words joined by `-`, each a sequence of
/// algebra labels with optional powers.
pub fn instance(name: &str) -> Result<Instance> {
    let bad = || Error::UnknownInstance(name.to_string());
    let (left, right) = name.split_once('-').ok_or_else(bad)?;
    let mut counters: BTreeMap<char, u32> = BTreeMap::new();
    let mut powers = BTreeMap::new();
    let mut word = |s: &str| -> Result<Word> {
        let mut letters = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            if !c.is_ascii_lowercase() {
                return Err(bad());
            }
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let p: u32 = if digits.is_empty() { 1 } else { digits.parse().map_err(|_| bad())? };
            if p == 0 || p > 8 {
                return Err(bad());
            }
            let i = counters.entry(c).or_default();
            *i += 1;
            let l = Letter::new(c, *i);
            powers.insert(l, p);
            letters.push(l);
        }
        if letters.is_empty() {
            return Err(bad());
        }
        Ok(Word::new(letters))
    };
    let (w1, w2) = (word(left)?, word(right)?);
    let pattern = Pattern::new(MomentSymbol::Phi2(w1, w2), SymmetryFlags::default())?;
    Ok(Instance {
        name: name.to_string(),
        pattern,
        powers,
    })
}

impl Instance {
    /// The rule's value on this instance with GUE limits.
    pub fn predict(&self, candidate: &Rule) -> Result<Rational> {
        let flags = self.pattern.flags();
        let ctx = lower_context(flags)?.with(candidate.clone());
        let expanded = Expander::new(&ctx, None).expand_symbol(self.pattern.symbol())?;
        let subst: BTreeMap<Letter, Word> = self
            .powers
            .iter()
            .map(|(l, p)| (*l, Word::new(vec![Letter::new(l.algebra.label(), 1); *p as usize])))
            .collect();
        let e = instantiate(&expanded, &subst, flags);
        evaluate_rule(&e, &gue_limits(&e)?)
    }

    pub fn words(&self) -> (Word, Word) {
        match self.pattern.symbol() {
            MomentSymbol::Phi2(w1, w2) => (w1.clone(), w2.clone()),
            MomentSymbol::Phi1(_) => unreachable!("instances are second order"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Within 3 standard errors.
    ConsistentWith,
    /// At least 6 standard errors away.
    Rejects,
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentWith => "consistent-with",
            Verdict::Rejects => "rejects",
            Verdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateCheck {
    pub candidate: String,
    pub prediction: String,
    pub z: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    pub instance: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub estimate: MomentEstimate,
    /// Standard error expected before the main run, from the pilot draws.
    pub a_priori_stderr: f64,
    pub checks: Vec<CandidateCheck>,
}

pub const PILOT_DRAWS: usize = 64;

/// Estimate the instance by Monte Carlo and compare with both candidates.
///
/// Fails with an inconclusive-instance error unless the predictions differ
/// by more than six a priori standard errors, where the a priori error is
/// the pilot's per-draw spread divided by `sqrt(samples)`.
pub fn discriminate(inst: &Instance, n: usize, samples: usize, seed: u64) -> Result<Discrimination> {
    check_samples(samples)?;
    let spec = EnsembleSpec::gue(n).with_powers(inst.powers.clone());
    let cands = candidates()?;
    let predictions: Vec<Rational> = cands.iter().map(|c| inst.predict(c)).collect::<Result<_>>()?;
    let (p1, p2) = (&predictions[0], &predictions[1]);
    let gap = (p1 - p2).to_f64().unwrap_or(f64::NAN).abs();
    let inconclusive = || Error::InconclusiveInstance {
        instance: inst.name.clone(),
        first: p1.to_string(),
        second: p2.to_string(),
    };
    if gap == 0.0 {
        return Err(inconclusive());
    }
    let (w1, w2) = inst.words();
    let pilot = covariance_estimate(&trace_pairs(&w1, &w2, &spec, PILOT_DRAWS, seed, true)?, seed);
    let a_priori = pilot.standard_error * (PILOT_DRAWS as f64 / samples as f64).sqrt();
    if gap <= 6.0 * a_priori {
        return Err(inconclusive());
    }
    let estimate = estimate_phi2(&w1, &w2, &spec, samples, seed)?;
    let checks = cands
        .iter()
        .zip(&predictions)
        .map(|(c, p)| {
            let z = (estimate.value - p.to_f64().unwrap_or(f64::NAN)) / estimate.standard_error;
            let verdict = if z.abs() <= 3.0 {
                Verdict::ConsistentWith
            } else if z.abs() >= 6.0 {
                Verdict::Rejects
            } else {
                Verdict::Undecided
            };
            CandidateCheck {
                candidate: c.label.clone(),
                prediction: p.to_string(),
                z,
                verdict,
            }
        })
        .collect();
    Ok(Discrimination {
        instance: inst.name.clone(),
        n,
        samples,
        seed,
        estimate,
        a_priori_stderr: a_priori,
        checks,
    })
}
