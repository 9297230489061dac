//! Text syntax for group specs, elements and formulas.
//!
//! ```text
//! spec    := "lex(" block ("," block)* ")"
//! block   := ("Z" | "Q" | "Zloc(" p ")" | "Gp(" p ")") ["^" k]
//! element := "(" coord ("|" coord)* ")"       coord := rational | span
//! span    := ["-"] [rational "*"] "b" int (("+"|"-") ...)*
//! conj    := literal ("&" literal)*
//! literal := ["!"] ( "cong[" int "," cut "](" int "x," term ")"
//!                  | "ing[" cut "](" int "x," term ")"
//!                  | int "x" cmp term )
//! term    := "0" | int "*a" int (("+"|"-") int "*a" int)*
//! ```

use num_bigint::BigInt;
use num_traits::Zero;

use crate::arith::{is_prime, Rational};
use crate::convex::ConvexCut;
use crate::error::{OagError, Result};
use crate::formula::{Cmp, Conjunction, Literal, Relation, Term};
use crate::group::{BlockElement, BlockKind, Element, GroupSpec};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(OagError::Parse { pos: self.pos, msg: msg.into() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(format!("expected `{tok}`"))
        }
    }

    fn end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    fn digits(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let len = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if len == 0 {
            return self.err("expected a number");
        }
        let s = &self.rest()[..len];
        self.pos += len;
        Ok(s)
    }

    fn uint<T: std::str::FromStr>(&mut self) -> Result<T> {
        let start = self.pos;
        let d = self.digits()?;
        d.parse().or_else(|_| {
            self.pos = start;
            self.err("number out of range")
        })
    }

    fn int(&mut self) -> Result<i64> {
        let neg = self.eat("-");
        if !neg {
            self.eat("+");
        }
        let v: i64 = self.uint()?;
        Ok(if neg { -v } else { v })
    }

    /// `[-]n[/d]`
    fn rational(&mut self) -> Result<Rational> {
        let neg = self.eat("-");
        let num: BigInt = self.digits()?.parse().expect("digits");
        let den = if self.eat("/") {
            let at = self.pos;
            let d: BigInt = self.digits()?.parse().expect("digits");
            if d.is_zero() {
                self.pos = at;
                return self.err("zero denominator");
            }
            d
        } else {
            BigInt::from(1)
        };
        let r = Rational::new(num, den);
        Ok(if neg { -r } else { r })
    }

    fn starts_with_number(&mut self) -> bool {
        self.skip_ws();
        let mut chars = self.rest().chars();
        match chars.next() {
            Some('-') | Some('+') => chars.next().is_some_and(|c| c.is_ascii_digit()),
            Some(c) => c.is_ascii_digit(),
            None => false,
        }
    }
}

pub fn parse_spec(text: &str) -> Result<GroupSpec> {
    let mut c = Cursor::new(text);
    c.expect("lex(")?;
    let mut blocks = Vec::new();
    loop {
        let kind = if c.eat("Zloc(") {
            BlockKind::PLocal(prime(&mut c)?)
        } else if c.eat("Gp(") {
            BlockKind::PSpan(prime(&mut c)?)
        } else if c.eat("Z") {
            BlockKind::Int
        } else if c.eat("Q") {
            BlockKind::Rat
        } else {
            return c.err("expected a block: Z, Q, Zloc(p) or Gp(p)");
        };
        let count = if c.eat("^") {
            let at = c.pos;
            let k: usize = c.uint()?;
            if k == 0 {
                c.pos = at;
                return c.err("block exponent must be positive");
            }
            k
        } else {
            1
        };
        blocks.extend(std::iter::repeat(kind).take(count));
        if !c.eat(",") {
            break;
        }
    }
    c.expect(")")?;
    c.end()?;
    GroupSpec::new(blocks)
}

fn prime(c: &mut Cursor) -> Result<u64> {
    let at = c.pos;
    let p: u64 = c.uint()?;
    if !is_prime(p) {
        c.pos = at;
        return c.err(format!("{p} is not prime"));
    }
    c.expect(")")?;
    Ok(p)
}

fn coordinate(c: &mut Cursor, kind: BlockKind) -> Result<BlockElement> {
    let start = c.pos;
    let mut coeffs = Vec::new();
    let mut first = true;
    loop {
        let neg = if first {
            c.eat("-")
        } else if c.eat("+") {
            c.eat("-")
        } else if c.eat("-") {
            true
        } else {
            break;
        };
        first = false;
        let mut coeff = Rational::from_integer(1.into());
        let mut symbol = None;
        if c.peek().is_some_and(|ch| ch.is_ascii_digit()) {
            coeff = c.rational()?;
            if c.eat("*") {
                c.expect("b")?;
                symbol = Some(c.uint::<usize>()?);
            }
        } else if c.eat("b") {
            symbol = Some(c.uint::<usize>()?);
        } else {
            return c.err("expected a rational or a basis symbol");
        }
        if neg {
            coeff = -coeff;
        }
        coeffs.push((symbol, coeff));
    }
    let scalar_only = coeffs.iter().all(|(s, _)| s.is_none());
    let elem = match kind {
        BlockKind::PSpan(_) => BlockElement::span(coeffs.into_iter().map(|(s, v)| (s.unwrap_or(0), v))),
        _ if !scalar_only || coeffs.len() != 1 => {
            c.pos = start;
            return c.err("scalar block expects a single rational");
        }
        BlockKind::Int => {
            let v = coeffs.pop().unwrap().1;
            if !v.is_integer() {
                c.pos = start;
                return c.err(format!("{v} is not an integer"));
            }
            BlockElement::Int(v.to_integer())
        }
        BlockKind::Rat => BlockElement::Rat(coeffs.pop().unwrap().1),
        BlockKind::PLocal(_) => BlockElement::PLocal(coeffs.pop().unwrap().1),
    };
    if let Err(e) = elem.check(kind) {
        c.pos = start;
        return c.err(e.to_string());
    }
    Ok(elem)
}

fn element(c: &mut Cursor, g: &GroupSpec) -> Result<Element> {
    c.expect("(")?;
    let mut coords = Vec::new();
    for (i, &kind) in g.blocks().iter().enumerate() {
        if i > 0 {
            c.expect("|")?;
        }
        coords.push(coordinate(c, kind)?);
    }
    c.expect(")")?;
    Ok(Element::from_coords(coords))
}

pub fn parse_element(g: &GroupSpec, text: &str) -> Result<Element> {
    let mut c = Cursor::new(text);
    let e = element(&mut c, g)?;
    c.end()?;
    Ok(e)
}

/// Elements separated by `;`; the empty string gives no parameters.
pub fn parse_params(g: &GroupSpec, text: &str) -> Result<Vec<Element>> {
    let mut c = Cursor::new(text);
    let mut out = Vec::new();
    if c.peek().is_none() {
        return Ok(out);
    }
    loop {
        out.push(element(&mut c, g)?);
        if !c.eat(";") {
            break;
        }
    }
    c.end()?;
    Ok(out)
}

fn term(c: &mut Cursor) -> Result<Term> {
    let mut entries: Vec<(usize, i64)> = Vec::new();
    let mut first = true;
    loop {
        let sign = if first {
            1
        } else if c.eat("+") {
            1
        } else if c.eat("-") {
            -1
        } else {
            break;
        };
        first = false;
        let k = c.int()?;
        if k == 0 && entries.is_empty() && !c.rest().trim_start().starts_with('*') {
            return Ok(Term::zero());
        }
        c.expect("*")?;
        c.expect("a")?;
        let i: usize = c.uint()?;
        entries.push((i, sign * k));
    }
    Ok(Term::new(entries))
}

fn cut(c: &mut Cursor) -> Result<ConvexCut> {
    c.expect("cut")?;
    Ok(ConvexCut(c.uint()?))
}

fn k_x(c: &mut Cursor) -> Result<i64> {
    let at = c.pos;
    let k = c.int()?;
    c.expect("x")?;
    if k == 0 {
        c.pos = at;
        return c.err("coefficient of x must be nonzero");
    }
    Ok(k)
}

fn literal(c: &mut Cursor) -> Result<Literal> {
    let negated = c.eat("!");
    let at = c.pos;
    let lit = if c.eat("cong[") {
        let modulus: u64 = c.uint()?;
        c.expect(",")?;
        let cut = cut(c)?;
        c.expect("](")?;
        let k = k_x(c)?;
        c.expect(",")?;
        let t = term(c)?;
        c.expect(")")?;
        Literal::cong(k, modulus, cut, t)
    } else if c.eat("ing[") {
        let cut = cut(c)?;
        c.expect("](")?;
        let k = k_x(c)?;
        c.expect(",")?;
        let t = term(c)?;
        c.expect(")")?;
        Literal::new(k, Relation::InCoset(cut), t)
    } else if c.starts_with_number() {
        let k = k_x(c)?;
        let rel = if c.eat("!=") {
            Relation::Neq
        } else if c.eat("<=") {
            Relation::Ord(Cmp::Le)
        } else if c.eat(">=") {
            Relation::Ord(Cmp::Ge)
        } else if c.eat("<") {
            Relation::Ord(Cmp::Lt)
        } else if c.eat(">") {
            Relation::Ord(Cmp::Gt)
        } else if c.eat("=") {
            Relation::Ord(Cmp::Eq)
        } else {
            return c.err("expected a comparison");
        };
        Literal::new(k, rel, term(c)?)
    } else {
        return c.err("expected `cong[`, `ing[` or `kx`");
    };
    let lit = lit.map_err(|e| OagError::Parse { pos: at, msg: e.to_string() })?;
    Ok(if negated { lit.negated() } else { lit })
}

/// Parses a conjunction; `params` supply the values of `a0, a1, ...`.
pub fn parse_formula(text: &str, params: Vec<Element>) -> Result<Conjunction> {
    let mut c = Cursor::new(text);
    let mut literals = vec![literal(&mut c)?];
    while c.eat("&") {
        literals.push(literal(&mut c)?);
    }
    c.end()?;
    Ok(Conjunction::new(literals, params))
}

/// Literals only, for callers that attach parameters later.
pub fn parse_literals(text: &str) -> Result<Vec<Literal>> {
    Ok(parse_formula(text, Vec::new())?.literals)
}
