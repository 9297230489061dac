//! Finite lexicographic sums of Archimedean blocks and exact element arithmetic.
//!
//! Coordinate 0 is the most significant. A `PSpan(p)` block is the
//! `Z_(p)`-span of the formal basis `b0, b1, ...` realized in the reals by
//! `b0 = 1` and `bk = sqrt(k-th prime)`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith::{self, is_p_integral, p_divisible, Rational, Span};
use crate::error::{OagError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BlockKind {
    /// The integers.
    Int,
    /// The rationals.
    Rat,
    /// Rationals whose denominator is coprime to `p`.
    PLocal(u64),
    /// `Z_(p)`-span of a countable independent basis containing 1.
    PSpan(u64),
}

impl BlockKind {
    pub fn prime(self) -> Option<u64> {
        match self {
            BlockKind::PLocal(p) | BlockKind::PSpan(p) => Some(p),
            BlockKind::Int | BlockKind::Rat => None,
        }
    }

    /// Whether `nB = B` for this block `B`.
    pub fn is_divisible_by(self, n: u64) -> bool {
        match self {
            BlockKind::Int => n == 1,
            BlockKind::Rat => true,
            BlockKind::PLocal(p) | BlockKind::PSpan(p) => n % p != 0,
        }
    }

    /// `[B : pB]` is infinite only for `PSpan(p)`.
    pub fn is_singular_for(self, p: u64) -> bool {
        self == BlockKind::PSpan(p)
    }

    fn validate(self) -> Result<()> {
        match self.prime() {
            Some(p) if !arith::is_prime(p) => Err(OagError::NotPrime(p)),
            _ => Ok(()),
        }
    }
}

/// An ordered list of blocks, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    blocks: Vec<BlockKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BlockElement {
    Int(BigInt),
    Rat(Rational),
    PLocal(Rational),
    /// Basis index to coefficient; zero coefficients are never stored.
    PSpan(Span),
}

impl BlockElement {
    pub fn zero(kind: BlockKind) -> Self {
        match kind {
            BlockKind::Int => BlockElement::Int(BigInt::zero()),
            BlockKind::Rat => BlockElement::Rat(Rational::zero()),
            BlockKind::PLocal(_) => BlockElement::PLocal(Rational::zero()),
            BlockKind::PSpan(_) => BlockElement::PSpan(Span::new()),
        }
    }

    /// Builds a span element, dropping zero coefficients.
    pub fn span<I: IntoIterator<Item = (usize, Rational)>>(coeffs: I) -> Self {
        let mut out = Span::new();
        for (k, v) in coeffs {
            let e = out.entry(k).or_insert_with(Rational::zero);
            *e += v;
        }
        out.retain(|_, v| !v.is_zero());
        BlockElement::PSpan(out)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BlockElement::Int(v) => v.is_zero(),
            BlockElement::Rat(v) | BlockElement::PLocal(v) => v.is_zero(),
            BlockElement::PSpan(m) => m.is_empty(),
        }
    }

    /// View as a sparse real combination of basis symbols (scalars use `b0`).
    pub fn to_span(&self) -> Span {
        let scalar = match self {
            BlockElement::Int(v) => Rational::from_integer(v.clone()),
            BlockElement::Rat(v) | BlockElement::PLocal(v) => v.clone(),
            BlockElement::PSpan(m) => return m.clone(),
        };
        let mut out = Span::new();
        if !scalar.is_zero() {
            out.insert(0, scalar);
        }
        out
    }

    /// Inverse of [`to_span`](Self::to_span); `None` when the value is not in the block.
    pub fn from_span(kind: BlockKind, span: &Span) -> Option<Self> {
        let scalar = || -> Option<Rational> {
            match span.len() {
                0 => Some(Rational::zero()),
                1 => span.get(&0).cloned(),
                _ => None,
            }
        };
        let out = match kind {
            BlockKind::Int => {
                let v = scalar()?;
                v.is_integer().then(|| BlockElement::Int(v.to_integer()))?
            }
            BlockKind::Rat => BlockElement::Rat(scalar()?),
            BlockKind::PLocal(_) => BlockElement::PLocal(scalar()?),
            BlockKind::PSpan(_) => BlockElement::span(span.clone()),
        };
        out.check(kind).ok()?;
        Some(out)
    }

    fn matches(&self, kind: BlockKind) -> bool {
        matches!(
            (self, kind),
            (BlockElement::Int(_), BlockKind::Int)
                | (BlockElement::Rat(_), BlockKind::Rat)
                | (BlockElement::PLocal(_), BlockKind::PLocal(_))
                | (BlockElement::PSpan(_), BlockKind::PSpan(_))
        )
    }

    pub fn check(&self, kind: BlockKind) -> Result<()> {
        if !self.matches(kind) {
            return Err(OagError::SpecMismatch(format!(
                "coordinate {self} does not belong to block {kind:?}"
            )));
        }
        match (self, kind) {
            (BlockElement::PLocal(v), BlockKind::PLocal(p)) if !is_p_integral(v, p) => Err(
                OagError::InvalidBlock(format!("{v} has a denominator divisible by {p}")),
            ),
            (BlockElement::PSpan(m), BlockKind::PSpan(p)) => {
                for (k, v) in m {
                    if v.is_zero() {
                        return Err(OagError::InvalidBlock(format!("stored zero at b{k}")));
                    }
                    if !is_p_integral(v, p) {
                        return Err(OagError::InvalidBlock(format!(
                            "coefficient {v} of b{k} has a denominator divisible by {p}"
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn map_scalar(&self, f: impl Fn(&Rational) -> Rational) -> Self {
        match self {
            BlockElement::Int(v) => {
                BlockElement::Int(f(&Rational::from_integer(v.clone())).to_integer())
            }
            BlockElement::Rat(v) => BlockElement::Rat(f(v)),
            BlockElement::PLocal(v) => BlockElement::PLocal(f(v)),
            BlockElement::PSpan(m) => BlockElement::span(m.iter().map(|(k, v)| (*k, f(v)))),
        }
    }

    fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (BlockElement::Int(a), BlockElement::Int(b)) => BlockElement::Int(a + b),
            (BlockElement::Rat(a), BlockElement::Rat(b)) => BlockElement::Rat(a + b),
            (BlockElement::PLocal(a), BlockElement::PLocal(b)) => BlockElement::PLocal(a + b),
            (BlockElement::PSpan(a), BlockElement::PSpan(b)) => {
                BlockElement::PSpan(arith::span_add(a, b))
            }
            _ => unreachable!("coordinates checked against the spec"),
        }
    }

    /// Divisibility by `n` inside the block of the given kind.
    pub fn is_divisible(&self, kind: BlockKind, n: u64) -> bool {
        match (self, kind) {
            (BlockElement::Int(v), _) => (v % BigInt::from(n)).is_zero(),
            (BlockElement::Rat(_), _) => true,
            (BlockElement::PLocal(v), BlockKind::PLocal(p)) => p_divisible(v, n, p),
            (BlockElement::PSpan(m), BlockKind::PSpan(p)) => {
                m.values().all(|v| p_divisible(v, n, p))
            }
            _ => false,
        }
    }

    fn cmp_value(&self, other: &Self) -> Ordering {
        match (self, other) {
            (BlockElement::Int(a), BlockElement::Int(b)) => a.cmp(b),
            (BlockElement::Rat(a), BlockElement::Rat(b))
            | (BlockElement::PLocal(a), BlockElement::PLocal(b)) => a.cmp(b),
            (BlockElement::PSpan(a), BlockElement::PSpan(b)) => arith::span_cmp(a, b),
            _ => unreachable!("coordinates checked against the spec"),
        }
    }
}

fn fmt_rational(r: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for BlockElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockElement::Int(v) => write!(f, "{v}"),
            BlockElement::Rat(v) | BlockElement::PLocal(v) => fmt_rational(v, f),
            BlockElement::PSpan(m) => {
                if m.is_empty() {
                    return write!(f, "0");
                }
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    if v.is_one() {
                        write!(f, "b{k}")?;
                    } else {
                        fmt_rational(v, f)?;
                        write!(f, "*b{k}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// A group element: one coordinate per block of its [`GroupSpec`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Element {
    coords: Vec<BlockElement>,
}

impl Element {
    /// Unchecked constructor; use [`GroupSpec::element`] to validate.
    pub fn from_coords(coords: Vec<BlockElement>) -> Self {
        Element { coords }
    }

    pub fn coords(&self) -> &[BlockElement] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &BlockElement {
        &self.coords[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(BlockElement::is_zero)
    }

    pub fn into_coords(self) -> Vec<BlockElement> {
        self.coords
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl GroupSpec {
    pub fn new(blocks: Vec<BlockKind>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(OagError::EmptySpec);
        }
        for b in &blocks {
            b.validate()?;
        }
        Ok(GroupSpec { blocks })
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> BlockKind {
        self.blocks[i]
    }

    /// Number of coordinates `K`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn zero(&self) -> Element {
        Element {
            coords: self.blocks.iter().map(|&b| BlockElement::zero(b)).collect(),
        }
    }

    /// Validated constructor.
    pub fn element(&self, coords: Vec<BlockElement>) -> Result<Element> {
        let e = Element { coords };
        self.check(&e)?;
        Ok(e)
    }

    /// Element with `b_symbol` (or 1 in a scalar block) at `coord`, zero elsewhere.
    pub fn unit(&self, coord: usize, symbol: usize) -> Element {
        self.basis_multiple(coord, symbol, Rational::one())
    }

    pub fn basis_multiple(&self, coord: usize, symbol: usize, c: Rational) -> Element {
        let mut e = self.zero();
        e.coords[coord] = match self.blocks[coord] {
            BlockKind::PSpan(_) => BlockElement::span([(symbol, c)]),
            BlockKind::Int => BlockElement::Int(c.to_integer()),
            BlockKind::Rat => BlockElement::Rat(c),
            BlockKind::PLocal(_) => BlockElement::PLocal(c),
        };
        e
    }

    pub fn check(&self, a: &Element) -> Result<()> {
        if a.coords.len() != self.blocks.len() {
            return Err(OagError::SpecMismatch(format!(
                "element has {} coordinates, spec has {}",
                a.coords.len(),
                self.blocks.len()
            )));
        }
        a.coords
            .iter()
            .zip(&self.blocks)
            .try_for_each(|(c, &k)| c.check(k))
    }

    fn check_shape(&self, a: &Element) -> Result<()> {
        if a.coords.len() != self.blocks.len()
            || !a.coords.iter().zip(&self.blocks).all(|(c, &k)| c.matches(k))
        {
            return Err(OagError::SpecMismatch(format!(
                "element {a} does not match spec {self}"
            )));
        }
        Ok(())
    }

    pub fn add(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        Ok(Element {
            coords: a.coords.iter().zip(&b.coords).map(|(x, y)| x.add(y)).collect(),
        })
    }

    pub fn neg(&self, a: &Element) -> Result<Element> {
        self.check_shape(a)?;
        Ok(Element {
            coords: a.coords.iter().map(|c| c.map_scalar(|v| -v)).collect(),
        })
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Result<Element> {
        self.add(a, &self.neg(b)?)
    }

    pub fn scale(&self, k: i64, a: &Element) -> Result<Element> {
        self.check_shape(a)?;
        let k = arith::int(k);
        Ok(Element {
            coords: a.coords.iter().map(|c| c.map_scalar(|v| v * &k)).collect(),
        })
    }

    /// Lexicographic order, leftmost coordinate first.
    pub fn compare(&self, a: &Element, b: &Element) -> Result<Ordering> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        Ok(a.coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| if x == y { Ordering::Equal } else { x.cmp_value(y) })
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal))
    }

    /// `a ∈ nG`.
    pub fn is_divisible(&self, a: &Element, n: u64) -> bool {
        assert!(n >= 1, "divisibility modulus must be positive");
        a.coords
            .iter()
            .zip(&self.blocks)
            .all(|(c, &k)| c.is_divisible(k, n))
    }

    /// The unique `y` with `n·y = a`.
    pub fn divide_exact(&self, a: &Element, n: u64) -> Result<Element> {
        self.check_shape(a)?;
        if n == 0 || !self.is_divisible(a, n) {
            return Err(OagError::NotDivisible(n));
        }
        let n = arith::int(n as i64);
        Ok(Element {
            coords: a.coords.iter().map(|c| c.map_scalar(|v| v / &n)).collect(),
        })
    }

    /// Integer combination `sum c_i * e_i`.
    pub fn combine<'a, I>(&self, terms: I) -> Result<Element>
    where
        I: IntoIterator<Item = (i64, &'a Element)>,
    {
        let mut acc = self.zero();
        for (c, e) in terms {
            if c != 0 {
                acc = self.add(&acc, &self.scale(c, e)?)?;
            }
        }
        Ok(acc)
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lex(")?;
        let mut first = true;
        for (kind, run) in runs(&self.blocks) {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            match kind {
                BlockKind::Int => write!(f, "Z")?,
                BlockKind::Rat => write!(f, "Q")?,
                BlockKind::PLocal(p) => write!(f, "Zloc({p})")?,
                BlockKind::PSpan(p) => write!(f, "Gp({p})")?,
            }
            if run > 1 {
                write!(f, "^{run}")?;
            }
        }
        write!(f, ")")
    }
}

fn runs(blocks: &[BlockKind]) -> Vec<(BlockKind, usize)> {
    let mut out: Vec<(BlockKind, usize)> = Vec::new();
    for &b in blocks {
        match out.last_mut() {
            Some((k, n)) if *k == b => *n += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}

/// Rational from `num/den`; panics on a zero denominator.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(blocks: &[BlockKind]) -> GroupSpec {
        GroupSpec::new(blocks.to_vec()).unwrap()
    }

    fn q_span2() -> GroupSpec {
        spec(&[BlockKind::Rat, BlockKind::PSpan(2)])
    }

    fn el(g: &GroupSpec, coords: Vec<BlockElement>) -> Element {
        g.element(coords).unwrap()
    }

    fn random_element(g: &GroupSpec, rng: &mut ChaCha8Rng) -> Element {
        let coords = g
            .blocks()
            .iter()
            .map(|&k| {
                let mut r = || {
                    let den = loop {
                        let d: i64 = rng.gen_range(1..=9);
                        if k.prime().map_or(true, |p| d % p as i64 != 0) {
                            break d;
                        }
                    };
                    q(rng.gen_range(-12..=12), den)
                };
                match k {
                    BlockKind::Int => BlockElement::Int(r().to_integer()),
                    BlockKind::Rat => BlockElement::Rat(r()),
                    BlockKind::PLocal(_) => BlockElement::PLocal(r()),
                    BlockKind::PSpan(_) => BlockElement::span((0..3).map(|s| (s, r()))),
                }
            })
            .collect();
        g.element(coords).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(GroupSpec::new(vec![]), Err(OagError::EmptySpec));
        assert_eq!(
            GroupSpec::new(vec![BlockKind::PSpan(4)]),
            Err(OagError::NotPrime(4))
        );
    }

    #[test]
    fn coordinatewise_addition() {
        let g = q_span2();
        let a = el(
            &g,
            vec![BlockElement::Rat(q(1, 2)), BlockElement::span([(0, q(1, 1))])],
        );
        let sum = g.add(&a, &a).unwrap();
        let expected = el(
            &g,
            vec![BlockElement::Rat(q(1, 1)), BlockElement::span([(0, q(2, 1))])],
        );
        assert_eq!(sum, expected);
        assert_eq!(g.scale(0, &a).unwrap(), g.zero());
    }

    #[test]
    fn mismatched_elements_are_rejected() {
        let g = q_span2();
        let h = spec(&[BlockKind::Int]);
        assert!(matches!(
            g.add(&g.zero(), &h.zero()),
            Err(OagError::SpecMismatch(_))
        ));
        assert!(g
            .element(vec![BlockElement::Rat(q(1, 1)), BlockElement::span([(0, q(1, 2))])])
            .is_err());
    }

    #[test]
    fn negation_distributes() {
        let g = spec(&[BlockKind::Int, BlockKind::PLocal(3), BlockKind::PSpan(2), BlockKind::Rat]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_element(&g, &mut rng);
            let b = random_element(&g, &mut rng);
            let lhs = g.neg(&g.add(&a, &b).unwrap()).unwrap();
            let rhs = g.add(&g.neg(&a).unwrap(), &g.neg(&b).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn order_examples() {
        let g = q_span2();
        let b1 = g.unit(1, 1);
        let two_b0 = g.basis_multiple(1, 0, q(2, 1));
        assert_eq!(g.compare(&b1, &two_b0).unwrap(), Ordering::Less);
        assert_eq!(g.compare(&b1, &b1).unwrap(), Ordering::Equal);
        let big = el(
            &g,
            vec![BlockElement::Rat(q(1, 1)), BlockElement::span([(0, q(-100, 1))])],
        );
        assert_eq!(g.compare(&big, &g.unit(1, 0)).unwrap(), Ordering::Greater);
    }

    #[test]
    fn order_is_translation_invariant() {
        let g = spec(&[BlockKind::PSpan(3), BlockKind::Int, BlockKind::PSpan(2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random_element(&g, &mut rng);
            let b = random_element(&g, &mut rng);
            let c = random_element(&g, &mut rng);
            let ab = g.compare(&a, &b).unwrap();
            let shifted = g
                .compare(&g.add(&a, &c).unwrap(), &g.add(&b, &c).unwrap())
                .unwrap();
            assert_eq!(ab, shifted);
            assert_eq!(ab == Ordering::Equal, a == b);
            assert_eq!(g.compare(&b, &a).unwrap(), ab.reverse());
        }
    }

    #[test]
    fn divisibility_examples() {
        let g = spec(&[BlockKind::PLocal(2)]);
        let third = el(&g, vec![BlockElement::PLocal(q(1, 3))]);
        assert!(g.is_divisible(&third, 3));
        let ninth = g.divide_exact(&third, 3).unwrap();
        assert_eq!(ninth, el(&g, vec![BlockElement::PLocal(q(1, 9))]));
        assert_eq!(g.scale(3, &ninth).unwrap(), third);

        let h = spec(&[BlockKind::PSpan(2)]);
        assert!(!h.is_divisible(&h.unit(0, 0), 2));
        assert!(h.is_divisible(&h.zero(), 6));
        assert_eq!(
            h.divide_exact(&h.unit(0, 0), 2),
            Err(OagError::NotDivisible(2))
        );
        let two_b1 = h.basis_multiple(0, 1, q(2, 1));
        assert_eq!(h.divide_exact(&two_b1, 2).unwrap(), h.unit(0, 1));
        assert_eq!(h.divide_exact(&h.zero(), 5).unwrap(), h.zero());
    }

    #[test]
    fn divide_exact_inverts_scale() {
        let g = spec(&[BlockKind::Int, BlockKind::PLocal(5), BlockKind::PSpan(3), BlockKind::Rat]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_element(&g, &mut rng);
            let n = rng.gen_range(1..=12u64);
            let na = g.scale(n as i64, &a).unwrap();
            assert!(g.is_divisible(&na, n));
            assert_eq!(g.divide_exact(&na, n).unwrap(), a);
            if g.is_divisible(&a, n) {
                let y = g.divide_exact(&a, n).unwrap();
                assert_eq!(g.scale(n as i64, &y).unwrap(), a);
            }
            let b = random_element(&g, &mut rng);
            if g.is_divisible(&a, n) && g.is_divisible(&b, n) {
                assert!(g.is_divisible(&g.add(&a, &b).unwrap(), n));
            }
        }
    }

    #[test]
    fn display_compresses_runs() {
        let g = spec(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(2), BlockKind::Int]);
        assert_eq!(g.to_string(), "lex(Q, Gp(2)^2, Z)");
        let e = g.basis_multiple(1, 2, q(-3, 2));
        assert_eq!(e.to_string(), "(0 | -3/2*b2 | 0 | 0)");
    }
}
