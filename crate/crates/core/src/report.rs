//! Report documents: structured JSON, plain text and LaTeX.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSource;
use crate::derivations::{DerivationReport, NormalizedRule, Recheck, Status};
use crate::expr::{fmt_rational, fmt_term, CoeffPoly, MomentMonomial, PolyExpr, PowerProduct, Rational};
use crate::matrix_lab::{Discrimination, MomentEstimate};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rendering {
    Text,
    Latex,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invocation {
    pub command: String,
    pub args: Vec<String>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub invocation: Invocation,
    pub rendering: Rendering,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "items", rename_all = "kebab-case")]
pub enum Payload {
    Derivations(Vec<DerivationDoc>),
    Rechecks(Vec<RecheckDoc>),
    MatrixLab(Vec<McRow>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialDoc {
    pub unknown: String,
    pub monomial: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintGroupDoc {
    pub source: ConstraintSource,
    pub polynomials: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchDoc {
    pub path: String,
    pub assignments: BTreeMap<String, String>,
    pub free_params: Vec<String>,
    pub residual: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDoc {
    pub path: String,
    pub lhs: String,
    /// Grouped rendering of the normalized rule.
    pub text: String,
    pub latex: String,
    pub parametric: String,
    pub coefficients: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationDoc {
    pub context: String,
    pub pattern: String,
    pub monomials: Vec<MonomialDoc>,
    pub constraints: Vec<ConstraintGroupDoc>,
    pub branches: Vec<BranchDoc>,
    pub rules: Vec<RuleDoc>,
    pub status: Status,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecheckDoc {
    pub candidate: String,
    pub patterns: Vec<String>,
    pub constraints: Vec<String>,
    /// Constraint and its nonzero value at the candidate.
    pub violated: Vec<(String, String)>,
    pub satisfied: bool,
}

/// One matrix-lab result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub instance: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub a_priori_stderr: f64,
    pub candidate_1_prediction: String,
    pub candidate_2_prediction: String,
    pub z: Vec<f64>,
    pub verdict: String,
}

impl ReportDocument {
    pub fn new(invocation: Invocation, rendering: Rendering, payload: Payload) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            invocation,
            rendering,
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn render(&self) -> String {
        match self.rendering {
            Rendering::Structured => self.to_json(),
            Rendering::Text => render_text(&self.payload),
            Rendering::Latex => render_latex(&self.payload),
        }
    }
}

fn strings<T: ToString>(xs: impl IntoIterator<Item = T>) -> Vec<String> {
    xs.into_iter().map(|x| x.to_string()).collect()
}

impl From<&DerivationReport> for DerivationDoc {
    fn from(r: &DerivationReport) -> Self {
        DerivationDoc {
            context: r.context.clone(),
            pattern: r.pattern.to_string(),
            monomials: r
                .ansatz
                .unknowns
                .iter()
                .zip(&r.ansatz.monomials)
                .map(|(u, m)| MonomialDoc {
                    unknown: u.to_string(),
                    monomial: m.to_string(),
                })
                .collect(),
            constraints: r
                .constraints
                .iter()
                .map(|(source, cs)| ConstraintGroupDoc {
                    source: *source,
                    polynomials: strings(cs.iter()),
                })
                .collect(),
            branches: r
                .branches
                .iter()
                .enumerate()
                .map(|(i, b)| BranchDoc {
                    path: r.branch_path(i),
                    assignments: b.assignments.iter().map(|(u, c)| (u.to_string(), c.to_string())).collect(),
                    free_params: strings(&b.free_params),
                    residual: strings(b.residual.iter()),
                })
                .collect(),
            rules: r.rules.iter().map(rule_doc).collect(),
            status: r.status,
            notes: r.notes.clone(),
        }
    }
}

fn rule_doc(r: &NormalizedRule) -> RuleDoc {
    let text = render_grouped(&r.parametric, Style::Text);
    RuleDoc {
        path: r.path.clone(),
        lhs: r.rule.lhs.to_string(),
        latex: format!("{} = {}", latex(&r.rule.lhs.to_string()), render_grouped(&r.parametric, Style::Latex)),
        text,
        parametric: r.parametric.to_string(),
        coefficients: r.coefficients.iter().map(|(u, v)| (u.to_string(), fmt_rational(v))).collect(),
    }
}

impl From<&Recheck> for RecheckDoc {
    fn from(r: &Recheck) -> Self {
        RecheckDoc {
            candidate: r.candidate.clone(),
            patterns: strings(&r.patterns),
            constraints: strings(r.constraints.iter()),
            violated: r.violated.iter().map(|(c, v)| (c.to_string(), fmt_rational(v))).collect(),
            satisfied: r.satisfied(),
        }
    }
}

impl From<&Discrimination> for McRow {
    fn from(d: &Discrimination) -> Self {
        McRow {
            instance: d.instance.clone(),
            n: d.n,
            samples: d.samples,
            seed: d.seed,
            estimate: d.estimate.value,
            stderr: d.estimate.standard_error,
            a_priori_stderr: d.a_priori_stderr,
            candidate_1_prediction: d.checks[0].prediction.clone(),
            candidate_2_prediction: d.checks[1].prediction.clone(),
            z: d.checks.iter().map(|c| c.z).collect(),
            verdict: d
                .checks
                .iter()
                .map(|c| format!("{} {}", c.verdict, c.candidate))
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

impl McRow {
    pub fn estimate(&self) -> MomentEstimate {
        MomentEstimate {
            value: self.estimate,
            standard_error: self.stderr,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

pub const CSV_HEADER: &str =
    "instance,n,samples,seed,estimate,stderr,candidate_1_prediction,candidate_2_prediction,verdict";

pub fn csv(rows: &[McRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.instance, r.n, r.samples, r.seed, r.estimate, r.stderr, r.candidate_1_prediction, r.candidate_2_prediction, r.verdict
        )
        .expect("string write");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Text,
    Latex,
}

/// Render a rule with free parameters set to 1, collecting the terms that
/// share a free parameter into one bracket.
///
/// ```
/// use uniprod::expr::{parse_expr, SymmetryFlags};
/// use uniprod::report::{render_grouped, Style};
/// let e = parse_expr("phi1(a1)*phi1(b1) + alpha6*phi1(a1 a2) - alpha6*phi1(b1 b2)", SymmetryFlags::default()).unwrap();
/// assert_eq!(render_grouped(&e, Style::Text), "phi1(a1)*phi1(b1) + [phi1(a1 a2) - phi1(b1 b2)]");
/// ```
pub fn render_grouped(parametric: &PolyExpr, style: Style) -> String {
    let mut plain: Vec<(&MomentMonomial, Rational)> = Vec::new();
    let mut groups: BTreeMap<PowerProduct, Vec<(&MomentMonomial, Rational)>> = BTreeMap::new();
    for (m, c) in parametric.terms() {
        match single_parameter_term(c) {
            Some((p, k)) => groups.entry(p).or_default().push((m, k)),
            None => plain.push((m, at_one(c))),
        }
    }
    let mut bracketed = Vec::new();
    for (_, members) in groups {
        if members.len() == 1 {
            plain.extend(members);
        } else {
            bracketed.push(members);
        }
    }
    plain.sort_by(|a, b| a.0.cmp(b.0));
    plain.retain(|(_, k)| !num_traits::Zero::is_zero(k));
    let mut out = String::new();
    for (m, k) in &plain {
        out.push_str(&term(m, k, out.is_empty(), style));
    }
    for members in bracketed {
        let inner: String = members
            .iter()
            .enumerate()
            .map(|(i, (m, k))| term(m, k, i == 0, style))
            .collect();
        out.push_str(if out.is_empty() { "[" } else { " + [" });
        out.push_str(&inner);
        out.push(']');
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// `c = k * P` for a non-constant power product `P`.
fn single_parameter_term(c: &CoeffPoly) -> Option<(PowerProduct, Rational)> {
    match c.leading() {
        Some((p, k)) if c.len() == 1 && !p.is_one() => Some((p.clone(), k.clone())),
        _ => None,
    }
}

fn at_one(c: &CoeffPoly) -> Rational {
    c.terms().map(|(_, k)| k.clone()).sum()
}

fn term(m: &MomentMonomial, k: &Rational, first: bool, style: Style) -> String {
    let t = fmt_term(m, &CoeffPoly::constant(k.clone()), first);
    match style {
        Style::Text => t,
        Style::Latex => latex(&t),
    }
}

/// Translate the plain-text notation into LaTeX.
///
/// ```
/// assert_eq!(uniprod::report::latex("phi2(a1 b1, a2)*phi1(b1)"), r"\varphi_2(a_1b_1,a_2)\varphi_1(b_1)");
/// assert_eq!(uniprod::report::latex("alpha4^2 - 1/2*alpha1"), r"\alpha_{4}^{2} - \frac{1}{2}\alpha_{1}");
/// ```
pub fn latex(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::new();
    let mut depth = 0;
    let mut i = 0;
    let digits_from = |j: usize| {
        let mut k = j;
        while k < chars.len() && chars[k].is_ascii_digit() {
            k += 1;
        }
        k
    };
    while i < chars.len() {
        let rest: String = chars[i..].iter().collect();
        if rest.starts_with("phi") {
            let end = digits_from(i + 3);
            let order: String = chars[i + 3..end].iter().collect();
            write!(out, r"\varphi_{order}").expect("string write");
            i = end;
        } else if rest.starts_with("alpha") {
            let end = digits_from(i + 5);
            let k: String = chars[i + 5..end].iter().collect();
            write!(out, r"\alpha_{{{k}}}").expect("string write");
            i = end;
        } else if chars[i].is_ascii_lowercase() {
            let end = digits_from(i + 1);
            let k: String = chars[i + 1..end].iter().collect();
            write!(out, "{}_{k}", chars[i]).expect("string write");
            i = end;
        } else if chars[i].is_ascii_digit() {
            let end = digits_from(i);
            let num: String = chars[i..end].iter().collect();
            if end < chars.len() && chars[end] == '/' {
                let dend = digits_from(end + 1);
                let den: String = chars[end + 1..dend].iter().collect();
                write!(out, r"\frac{{{num}}}{{{den}}}").expect("string write");
                i = dend;
            } else {
                out.push_str(&num);
                i = end;
            }
        } else if chars[i] == '^' {
            let end = digits_from(i + 1);
            let k: String = chars[i + 1..end].iter().collect();
            write!(out, "^{{{k}}}").expect("string write");
            i = end;
        } else {
            match chars[i] {
                '(' => {
                    depth += 1;
                    out.push('(');
                }
                ')' => {
                    depth -= 1;
                    out.push(')');
                }
                '*' => {}
                ' ' if depth > 0 => {}
                c => out.push(c),
            }
            i += 1;
        }
    }
    out
}

fn render_text(payload: &Payload) -> String {
    let mut out = String::new();
    match payload {
        Payload::Derivations(docs) => {
            for d in docs {
                write_derivation_text(&mut out, d);
            }
        }
        Payload::Rechecks(docs) => {
            for d in docs {
                writeln!(out, "recheck of candidate {}", d.candidate).ok();
                writeln!(out, "  patterns: {}", d.patterns.join("; ")).ok();
                writeln!(out, "  constraints ({}):", d.constraints.len()).ok();
                for c in &d.constraints {
                    writeln!(out, "    {c} = 0").ok();
                }
                if d.satisfied {
                    writeln!(out, "  all constraints satisfied").ok();
                } else {
                    for (c, v) in &d.violated {
                        writeln!(out, "  violated: {c} = {v}").ok();
                    }
                }
                out.push('\n');
            }
        }
        Payload::MatrixLab(rows) => {
            for r in rows {
                writeln!(
                    out,
                    "{} n={} samples={} seed={}: estimate {:.6} ± {:.6}; predictions {} / {}; {}",
                    r.instance,
                    r.n,
                    r.samples,
                    r.seed,
                    r.estimate,
                    r.stderr,
                    r.candidate_1_prediction,
                    r.candidate_2_prediction,
                    r.verdict
                )
                .ok();
            }
        }
    }
    out
}

fn write_derivation_text(out: &mut String, d: &DerivationDoc) {
    let context = if d.context.is_empty() { String::new() } else { format!(" [context {}]", d.context) };
    writeln!(out, "{}{context}: {}", d.pattern, d.status).ok();
    writeln!(out, "  ansatz ({} monomials):", d.monomials.len()).ok();
    for m in &d.monomials {
        writeln!(out, "    {}: {}", m.unknown, m.monomial).ok();
    }
    for g in &d.constraints {
        writeln!(out, "  {} constraints ({}):", g.source, g.polynomials.len()).ok();
        for p in &g.polynomials {
            writeln!(out, "    {p} = 0").ok();
        }
    }
    for b in &d.branches {
        let assigned: Vec<String> = b.assignments.iter().map(|(u, v)| format!("{u} = {v}")).collect();
        writeln!(out, "  {}: {}", b.path, assigned.join(", ")).ok();
        if !b.free_params.is_empty() {
            writeln!(out, "    free: {}", b.free_params.join(", ")).ok();
        }
        for r in &b.residual {
            writeln!(out, "    unresolved: {r} = 0").ok();
        }
    }
    for r in &d.rules {
        writeln!(out, "  rule {}: {} = {}", r.path, r.lhs, r.text).ok();
    }
    for n in &d.notes {
        writeln!(out, "  note: {n}").ok();
    }
    out.push('\n');
}

fn render_latex(payload: &Payload) -> String {
    let mut out = String::new();
    match payload {
        Payload::Derivations(docs) => {
            for d in docs {
                writeln!(out, "% {} {}", d.pattern, d.status).ok();
                for r in &d.rules {
                    writeln!(out, "% {}\n\\[\n{}\n\\]", r.path, r.latex).ok();
                }
                for g in &d.constraints {
                    for p in &g.polynomials {
                        writeln!(out, "% {}: ${} = 0$", g.source, latex(p)).ok();
                    }
                }
            }
        }
        Payload::Rechecks(docs) => {
            for d in docs {
                writeln!(out, "% recheck {}: {}", d.candidate, if d.satisfied { "satisfied" } else { "violated" }).ok();
                for c in &d.constraints {
                    writeln!(out, "${} = 0$", latex(c)).ok();
                }
            }
        }
        Payload::MatrixLab(rows) => {
            for r in rows {
                writeln!(
                    out,
                    "{} & {} & {} & ${:.4} \\pm {:.4}$ & {} & {} \\\\",
                    r.instance, r.n, r.samples, r.estimate, r.stderr, r.candidate_1_prediction, r.candidate_2_prediction
                )
                .ok();
            }
        }
    }
    out
}
