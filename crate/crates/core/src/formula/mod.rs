//! Quantifier-free literals in one variable `x` over explicit element parameters.
//!
//! Every literal has the shape `k·x R t(ā)` where `t` is an integer
//! combination of parameters. The relation is one of
//!
//! * `Cong`/`NCong`: `kx − t ∈ G_α + mG` and its negation (types I and II);
//! * `Ord`/`InCoset`: `kx ⋄ t` and `kx − t ∈ G_α` (type III);
//! * `Neq`/`NotInCoset`: `kx ≠ t` and `kx − t ∉ G_α` (type IV).
//!
//! `α` may be the cut `K`, which names `{0}`, so plain `≡_m` is `Cong` at cut `K`.

mod rewrite;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

pub use rewrite::{
    crt_split, normalize_type_i, reduce_k_prime, unit_normalize, Normalized, RewriteStep,
};

use crate::convex::{in_coset, in_subgroup, ConvexCut};
use crate::error::{OagError, Result};
use crate::group::{Element, GroupSpec};

/// Integer combination of parameters `a_i`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Term {
    coeffs: BTreeMap<usize, i64>,
}

impl Term {
    pub fn new<I: IntoIterator<Item = (usize, i64)>>(entries: I) -> Self {
        let mut coeffs = BTreeMap::new();
        for (i, c) in entries {
            *coeffs.entry(i).or_insert(0) += c;
        }
        coeffs.retain(|_, c| *c != 0);
        Term { coeffs }
    }

    pub fn param(i: usize) -> Self {
        Term::new([(i, 1)])
    }

    pub fn zero() -> Self {
        Term::default()
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, i64> {
        &self.coeffs
    }

    pub fn scaled(&self, s: i64) -> Self {
        Term::new(self.coeffs.iter().map(|(&i, &c)| (i, c * s)))
    }

    pub fn shifted(&self, offset: usize) -> Self {
        Term::new(self.coeffs.iter().map(|(&i, &c)| (i + offset, c)))
    }

    pub fn max_param(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn value(&self, g: &GroupSpec, params: &[Element]) -> Result<Element> {
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for (&i, &c) in &self.coeffs {
            let p = params.get(i).ok_or(OagError::UnresolvedParameter(i))?;
            terms.push((c, p));
        }
        g.combine(terms)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, (i, c)) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*a{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Cmp {
    pub fn holds(self, o: Ordering) -> bool {
        match self {
            Cmp::Lt => o.is_lt(),
            Cmp::Le => o.is_le(),
            Cmp::Eq => o.is_eq(),
            Cmp::Ge => o.is_ge(),
            Cmp::Gt => o.is_gt(),
        }
    }

    /// The relation `¬(a ⋄ b)` as a comparison, `None` for `=`.
    pub fn complement(self) -> Option<Cmp> {
        match self {
            Cmp::Lt => Some(Cmp::Ge),
            Cmp::Le => Some(Cmp::Gt),
            Cmp::Eq => None,
            Cmp::Ge => Some(Cmp::Lt),
            Cmp::Gt => Some(Cmp::Le),
        }
    }

    /// The relation obtained by multiplying both sides by a negative number.
    pub fn flipped(self) -> Cmp {
        match self {
            Cmp::Lt => Cmp::Gt,
            Cmp::Le => Cmp::Ge,
            Cmp::Eq => Cmp::Eq,
            Cmp::Ge => Cmp::Le,
            Cmp::Gt => Cmp::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Relation {
    Cong { modulus: u64, cut: ConvexCut },
    NCong { modulus: u64, cut: ConvexCut },
    Ord(Cmp),
    InCoset(ConvexCut),
    Neq,
    NotInCoset(ConvexCut),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LiteralType {
    I,
    II,
    III,
    IV,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub k: i64,
    pub relation: Relation,
    pub term: Term,
}

impl Literal {
    pub fn new(k: i64, relation: Relation, term: Term) -> Result<Self> {
        if k == 0 {
            return Err(OagError::InvalidInput("coefficient of x must be nonzero".into()));
        }
        if let Relation::Cong { modulus: 0, .. } | Relation::NCong { modulus: 0, .. } = relation {
            return Err(OagError::InvalidInput("modulus must be positive".into()));
        }
        Ok(Literal { k, relation, term })
    }

    /// `k·x ≡_{m,α} t`.
    pub fn cong(k: i64, modulus: u64, cut: ConvexCut, term: Term) -> Result<Self> {
        Literal::new(k, Relation::Cong { modulus, cut }, term)
    }

    pub fn ord(k: i64, cmp: Cmp, term: Term) -> Result<Self> {
        Literal::new(k, Relation::Ord(cmp), term)
    }

    /// Logical negation, staying inside the literal taxonomy.
    pub fn negated(&self) -> Literal {
        let relation = match &self.relation {
            Relation::Cong { modulus, cut } => Relation::NCong { modulus: *modulus, cut: *cut },
            Relation::NCong { modulus, cut } => Relation::Cong { modulus: *modulus, cut: *cut },
            Relation::Ord(c) => c.complement().map_or(Relation::Neq, Relation::Ord),
            Relation::Neq => Relation::Ord(Cmp::Eq),
            Relation::InCoset(c) => Relation::NotInCoset(*c),
            Relation::NotInCoset(c) => Relation::InCoset(*c),
        };
        Literal { relation, ..self.clone() }
    }

    pub fn cut(&self) -> Option<ConvexCut> {
        match self.relation {
            Relation::Cong { cut, .. }
            | Relation::NCong { cut, .. }
            | Relation::InCoset(cut)
            | Relation::NotInCoset(cut) => Some(cut),
            Relation::Ord(_) | Relation::Neq => None,
        }
    }

    pub fn modulus(&self) -> Option<u64> {
        match self.relation {
            Relation::Cong { modulus, .. } | Relation::NCong { modulus, .. } => Some(modulus),
            _ => None,
        }
    }

    pub fn with_term(&self, term: Term) -> Literal {
        Literal { term, ..self.clone() }
    }

    fn check_cut(&self, g: &GroupSpec) -> Result<()> {
        match self.cut() {
            Some(c) if c.index() > g.len() => Err(OagError::SpecMismatch(format!(
                "{c} exceeds the {} coordinates of {g}",
                g.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (k, t) = (self.k, &self.term);
        match &self.relation {
            Relation::Cong { modulus, cut } => write!(f, "cong[{modulus}, {cut}]({k}x, {t})"),
            Relation::NCong { modulus, cut } => write!(f, "!cong[{modulus}, {cut}]({k}x, {t})"),
            Relation::Ord(c) => write!(f, "{k}x {} {t}", c.symbol()),
            Relation::InCoset(cut) => write!(f, "ing[{cut}]({k}x, {t})"),
            Relation::Neq => write!(f, "!{k}x = {t}"),
            Relation::NotInCoset(cut) => write!(f, "!ing[{cut}]({k}x, {t})"),
        }
    }
}

pub fn classify(lit: &Literal) -> LiteralType {
    match lit.relation {
        Relation::Cong { .. } => LiteralType::I,
        Relation::NCong { .. } => LiteralType::II,
        Relation::Ord(_) | Relation::InCoset(_) => LiteralType::III,
        Relation::Neq | Relation::NotInCoset(_) => LiteralType::IV,
    }
}

/// Truth of `lit` at `x`, given the already evaluated term value.
pub fn holds_with_value(g: &GroupSpec, lit: &Literal, x: &Element, t_val: &Element) -> Result<bool> {
    let kx = g.scale(lit.k, x)?;
    let diff = || g.sub(&kx, t_val);
    Ok(match lit.relation {
        Relation::Cong { modulus, cut } => in_coset(g, &diff()?, cut, modulus),
        Relation::NCong { modulus, cut } => !in_coset(g, &diff()?, cut, modulus),
        Relation::Ord(c) => c.holds(g.compare(&kx, t_val)?),
        Relation::InCoset(cut) => in_subgroup(&diff()?, cut),
        Relation::Neq => kx != *t_val,
        Relation::NotInCoset(cut) => !in_subgroup(&diff()?, cut),
    })
}

pub fn evaluate(g: &GroupSpec, lit: &Literal, x: &Element, params: &[Element]) -> Result<bool> {
    lit.check_cut(g)?;
    let t = lit.term.value(g, params)?;
    holds_with_value(g, lit, x, &t)
}

/// A finite conjunction of literals with its parameter bank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Conjunction {
    pub literals: Vec<Literal>,
    pub params: Vec<Element>,
}

impl Conjunction {
    pub fn new(literals: Vec<Literal>, params: Vec<Element>) -> Self {
        Conjunction { literals, params }
    }

    /// Checks parameter resolution and cut ranges against `g`.
    pub fn validate(&self, g: &GroupSpec) -> Result<()> {
        for p in &self.params {
            g.check(p)?;
        }
        for lit in &self.literals {
            lit.check_cut(g)?;
            if let Some(i) = lit.term.max_param() {
                if i >= self.params.len() {
                    return Err(OagError::UnresolvedParameter(i));
                }
            }
        }
        Ok(())
    }

    /// Concatenates conjunctions, re-indexing each parameter bank.
    pub fn merge<'a, I: IntoIterator<Item = &'a Conjunction>>(parts: I) -> Conjunction {
        let mut out = Conjunction::default();
        for part in parts {
            let offset = out.params.len();
            out.params.extend(part.params.iter().cloned());
            out.literals.extend(
                part.literals
                    .iter()
                    .map(|l| l.with_term(l.term.shifted(offset))),
            );
        }
        out
    }
}

impl fmt::Display for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

pub fn evaluate_conj(g: &GroupSpec, conj: &Conjunction, x: &Element) -> Result<bool> {
    Ok(PreparedConj::new(g, conj)?.holds(g, x))
}

/// A conjunction with term values computed once, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PreparedConj {
    pub literals: Vec<(Literal, Element)>,
}

impl PreparedConj {
    pub fn new(g: &GroupSpec, conj: &Conjunction) -> Result<Self> {
        conj.validate(g)?;
        let literals = conj
            .literals
            .iter()
            .map(|l| Ok((l.clone(), l.term.value(g, &conj.params)?)))
            .collect::<Result<_>>()?;
        Ok(PreparedConj { literals })
    }

    pub fn holds(&self, g: &GroupSpec, x: &Element) -> bool {
        self.literals
            .iter()
            .all(|(l, t)| holds_with_value(g, l, x, t).unwrap_or(false))
    }
}
