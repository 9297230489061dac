//! Coordinate-by-coordinate decision procedure.
//!
//! Congruences only look at residues of the basis coefficients below their
//! cut, so each coordinate splits into independent residue cells (one per
//! basis symbol that matters). Order literals reduce to a lexicographic
//! interval `[L, U]`. A depth-first walk over the coordinates tracks which
//! bounds are still tight and which negated literals are already satisfied.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Certificate, CertificateEntry, SolveResult};
use crate::arith::{
    residue, span_cmp, span_enclosure, span_scale, span_sub, valuation_u64, Rational, Span,
};
use crate::formula::{Cmp, Literal, Relation};
use crate::group::{BlockElement, BlockKind, Element, GroupSpec};

const MAX_MODULUS: u64 = 1 << 20;
const MAX_OPTIONS: usize = 1 << 12;
const MAX_NEGATIVES: usize = 64;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Pos { m: u64 },
    Neg { m: u64, id: usize },
    NotIn { id: usize },
}

#[derive(Debug, Clone)]
struct Lit {
    k: i64,
    kind: Kind,
    /// Coordinates `< cut` are constrained.
    cut: usize,
    t: Vec<Span>,
    origin: usize,
}

#[derive(Debug, Clone)]
struct Bound {
    value: Vec<Span>,
    strict: bool,
}

#[derive(Debug, Clone)]
enum Choice {
    Exact(Span),
    Generic {
        modulus: u64,
        residues: Vec<(usize, u64)>,
        lo: Option<Span>,
        hi: Option<Span>,
    },
}

#[derive(Debug, Clone)]
struct Opt {
    choice: Choice,
    lt: bool,
    ut: bool,
    credit: u64,
}

#[derive(Debug, Default)]
struct Coord {
    pinned: Option<Span>,
    modulus: u64,
    /// `(credit, residue per cell)` for values away from the bounds.
    generic: Vec<(u64, Vec<(usize, u64)>)>,
    exclusions: Vec<Span>,
}

fn hull_cmp(a: &[Span], b: &[Span]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| span_cmp(x, y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn hull_string(v: &[Span], g: &GroupSpec) -> String {
    let coords = v
        .iter()
        .enumerate()
        .map(|(i, s)| match BlockElement::from_span(g.block(i), s) {
            Some(e) => e.to_string(),
            None => BlockElement::PSpan(s.clone()).to_string(),
        })
        .collect::<Vec<_>>();
    format!("({})", coords.join(" | "))
}

fn scalar(s: &Span) -> Rational {
    s.get(&0).cloned().unwrap_or_else(Rational::zero)
}

fn local_modulus(kind: BlockKind, m: u64) -> Option<u64> {
    match kind {
        BlockKind::Int => Some(m),
        BlockKind::Rat => Some(1),
        BlockKind::PLocal(p) | BlockKind::PSpan(p) => p.checked_pow(valuation_u64(m, p)),
    }
}

fn rat_residue(r: &Rational, m: u64) -> u64 {
    residue(r, m).expect("coefficients are integral at the block prime")
}

struct Problem<'a> {
    g: &'a GroupSpec,
    lits: Vec<Lit>,
    n_neg: usize,
    lower: Option<Bound>,
    upper: Option<Bound>,
    coords: Vec<Coord>,
}

enum Setup<'a> {
    Ready(Problem<'a>),
    Done(SolveResult),
}

fn setup<'a>(g: &'a GroupSpec, prepared: &[(Literal, Element, usize)]) -> Setup<'a> {
    let n = g.len();
    let mut lits = Vec::new();
    let mut lower: Option<Bound> = None;
    let mut upper: Option<Bound> = None;
    let mut pins: Vec<Option<(Span, usize)>> = vec![None; n];
    let mut n_neg = 0;
    let fail = |e: CertificateEntry| Setup::Done(SolveResult::unsat(Certificate { entries: vec![e] }));

    for (lit, t, origin) in prepared {
        let t: Vec<Span> = t.coords().iter().map(BlockElement::to_span).collect();
        let k = lit.k;
        match &lit.relation {
            Relation::Ord(cmp) => {
                let inv = Rational::new(BigInt::one(), BigInt::from(k));
                let value: Vec<Span> = t.iter().map(|s| span_scale(s, &inv)).collect();
                let cmp = if k < 0 { cmp.flipped() } else { *cmp };
                let (lo, hi) = match cmp {
                    Cmp::Lt => (None, Some(true)),
                    Cmp::Le => (None, Some(false)),
                    Cmp::Eq => (Some(false), Some(false)),
                    Cmp::Ge => (Some(false), None),
                    Cmp::Gt => (Some(true), None),
                };
                if let Some(strict) = lo {
                    merge_bound(&mut lower, &value, strict, Ordering::Greater);
                }
                if let Some(strict) = hi {
                    merge_bound(&mut upper, &value, strict, Ordering::Less);
                }
            }
            Relation::InCoset(cut) => {
                let inv = Rational::new(BigInt::one(), BigInt::from(k));
                for i in 0..cut.index() {
                    let v = span_scale(&t[i], &inv);
                    if BlockElement::from_span(g.block(i), &v).is_none() {
                        return fail(CertificateEntry::Pin {
                            coordinate: i,
                            detail: format!(
                                "literal {origin} forces coordinate {i} to {}, outside its block",
                                BlockElement::PSpan(v)
                            ),
                        });
                    }
                    match &pins[i] {
                        Some((w, o)) if span_cmp(w, &v).is_ne() => {
                            return fail(CertificateEntry::Pin {
                                coordinate: i,
                                detail: format!(
                                    "literals {o} and {origin} force different values at coordinate {i}"
                                ),
                            })
                        }
                        Some(_) => {}
                        None => pins[i] = Some((v, *origin)),
                    }
                }
            }
            Relation::Cong { modulus, cut } => lits.push(Lit {
                k,
                kind: Kind::Pos { m: *modulus },
                cut: cut.index(),
                t,
                origin: *origin,
            }),
            Relation::NCong { modulus, cut } => {
                lits.push(Lit {
                    k,
                    kind: Kind::Neg { m: *modulus, id: n_neg },
                    cut: cut.index(),
                    t,
                    origin: *origin,
                });
                n_neg += 1;
            }
            Relation::NotInCoset(cut) => {
                lits.push(Lit { k, kind: Kind::NotIn { id: n_neg }, cut: cut.index(), t, origin: *origin });
                n_neg += 1;
            }
            Relation::Neq => {
                lits.push(Lit { k, kind: Kind::NotIn { id: n_neg }, cut: n, t, origin: *origin });
                n_neg += 1;
            }
        }
    }

    if let (Some(l), Some(u)) = (&lower, &upper) {
        let c = hull_cmp(&l.value, &u.value);
        if c.is_gt() || (c.is_eq() && (l.strict || u.strict)) {
            return fail(CertificateEntry::Order {
                detail: format!(
                    "lower bound {}{} against upper bound {}{}",
                    hull_string(&l.value, g),
                    if l.strict { " (strict)" } else { "" },
                    hull_string(&u.value, g),
                    if u.strict { " (strict)" } else { "" },
                ),
            });
        }
    }
    if n_neg > MAX_NEGATIVES {
        return Setup::Done(SolveResult::unknown(format!(
            "more than {MAX_NEGATIVES} negated literals"
        )));
    }

    let mut problem = Problem { g, lits, n_neg, lower, upper, coords: Vec::new() };
    for (i, pin) in pins.into_iter().enumerate() {
        match problem.coordinate(i, pin.map(|p| p.0)) {
            Ok(c) => problem.coords.push(c),
            Err(done) => return Setup::Done(done),
        }
    }
    Setup::Ready(problem)
}

fn merge_bound(slot: &mut Option<Bound>, value: &[Span], strict: bool, tighter: Ordering) {
    match slot {
        None => *slot = Some(Bound { value: value.to_vec(), strict }),
        Some(b) => {
            let c = hull_cmp(value, &b.value);
            if c == tighter {
                *b = Bound { value: value.to_vec(), strict };
            } else if c.is_eq() {
                b.strict |= strict;
            }
        }
    }
}

impl<'a> Problem<'a> {
    fn relevant(&self, i: usize) -> impl Iterator<Item = &Lit> {
        self.lits.iter().filter(move |l| l.cut > i)
    }

    fn full(&self) -> u64 {
        if self.n_neg == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_neg) - 1
        }
    }

    fn coordinate(&self, i: usize, pinned: Option<Span>) -> Result<Coord, SolveResult> {
        let kind = self.g.block(i);
        let mut exclusions = Vec::new();
        let mut notin_credit = 0u64;
        for l in self.relevant(i) {
            if let Kind::NotIn { id } = l.kind {
                exclusions.push(span_scale(&l.t[i], &Rational::new(BigInt::one(), BigInt::from(l.k))));
                notin_credit |= 1 << id;
            }
        }
        if pinned.is_some() {
            return Ok(Coord { pinned, exclusions, ..Default::default() });
        }

        let mut modulus = 1u64;
        for l in self.relevant(i) {
            if let Kind::Pos { m } | Kind::Neg { m, .. } = l.kind {
                let lm = local_modulus(kind, m)
                    .ok_or_else(|| SolveResult::unknown("modulus overflow"))?;
                modulus = modulus.lcm(&lm);
                if modulus > MAX_MODULUS {
                    return Err(SolveResult::unknown(format!(
                        "residue modulus at coordinate {i} exceeds {MAX_MODULUS}"
                    )));
                }
            }
        }

        let cells: Vec<usize> = match kind {
            BlockKind::Rat => vec![],
            BlockKind::Int | BlockKind::PLocal(_) => vec![0],
            BlockKind::PSpan(_) => {
                let mut syms: Vec<usize> = self
                    .relevant(i)
                    .flat_map(|l| l.t[i].keys().copied())
                    .chain([0])
                    .collect();
                syms.sort_unstable();
                syms.dedup();
                let fresh = syms.last().copied().unwrap_or(0) + 1;
                syms.push(fresh);
                syms
            }
        };

        let mut acc: BTreeMap<u64, Vec<(usize, u64)>> = BTreeMap::from([(0, Vec::new())]);
        for &sym in &cells {
            let cell = self.cell(i, sym, modulus)?;
            let mut next = BTreeMap::new();
            for (a, ra) in &acc {
                for (b, rb) in &cell {
                    next.entry(a | b).or_insert_with(|| {
                        let mut r = ra.clone();
                        r.push((sym, *rb));
                        r
                    });
                }
            }
            if next.len() > MAX_OPTIONS {
                return Err(SolveResult::unknown(format!(
                    "too many residue combinations at coordinate {i}"
                )));
            }
            acc = next;
        }
        let generic = acc.into_iter().map(|(c, r)| (c | notin_credit, r)).collect();
        Ok(Coord { pinned: None, modulus, generic, exclusions })
    }

    /// Smallest residue of the `sym` coefficient for each set of negated
    /// congruences it satisfies; errors with a certificate when no residue
    /// meets the positive congruences.
    fn cell(&self, i: usize, sym: usize, modulus: u64) -> Result<BTreeMap<u64, u64>, SolveResult> {
        let kind = self.g.block(i);
        let zero = Rational::zero();
        let rows: Vec<(&Lit, u64, u64, u64)> = self
            .relevant(i)
            .filter_map(|l| {
                let m = match l.kind {
                    Kind::Pos { m } | Kind::Neg { m, .. } => m,
                    Kind::NotIn { .. } => return None,
                };
                let lm = local_modulus(kind, m)?;
                let tr = rat_residue(l.t[i].get(&sym).unwrap_or(&zero), lm);
                Some((l, lm, l.k.rem_euclid(lm as i64) as u64, tr))
            })
            .collect();
        let mut out = BTreeMap::new();
        let mut excluded = Vec::new();
        let mut killers = Vec::new();
        'r: for r in 0..modulus {
            let mut credit = 0u64;
            for (l, lm, kr, tr) in &rows {
                let ok = ((*kr as u128 * r as u128) % *lm as u128) as u64 == *tr;
                match l.kind {
                    Kind::Pos { .. } if !ok => {
                        excluded.push(r);
                        killers.push(l.origin);
                        continue 'r;
                    }
                    Kind::Neg { id, .. } if !ok => credit |= 1 << id,
                    _ => {}
                }
            }
            out.entry(credit).or_insert(r);
        }
        if out.is_empty() {
            return Err(SolveResult::unsat(Certificate {
                entries: vec![CertificateEntry::Residues {
                    coordinate: i,
                    symbol: matches!(kind, BlockKind::PSpan(_)).then_some(sym),
                    modulus,
                    excluded,
                    literals: killers,
                }],
            }));
        }
        Ok(out)
    }

    /// Credit earned by fixing coordinate `i` to `v`, or `None` when `v` is
    /// outside the block or breaks a congruence.
    fn exact_credit(&self, i: usize, v: &Span) -> Option<u64> {
        let kind = self.g.block(i);
        BlockElement::from_span(kind, v)?;
        let mut credit = 0;
        for l in self.relevant(i) {
            let diff = span_sub(&span_scale(v, &Rational::from_integer(l.k.into())), &l.t[i]);
            let d = BlockElement::from_span(kind, &diff)?;
            match l.kind {
                Kind::Pos { m } if !d.is_divisible(kind, m) => return None,
                Kind::Neg { m, id } if !d.is_divisible(kind, m) => credit |= 1 << id,
                Kind::NotIn { id } if !d.is_zero() => credit |= 1 << id,
                _ => {}
            }
        }
        Some(credit)
    }

    fn options(&self, i: usize, lt: bool, ut: bool) -> Vec<Opt> {
        let lo = lt.then(|| &self.lower.as_ref().unwrap().value[i]);
        let hi = ut.then(|| &self.upper.as_ref().unwrap().value[i]);
        let coord = &self.coords[i];
        let mut out = Vec::new();
        let exact = |v: &Span, out: &mut Vec<Opt>| {
            let cl = lo.map(|l| span_cmp(v, l));
            let cu = hi.map(|u| span_cmp(v, u));
            if cl.is_some_and(Ordering::is_lt) || cu.is_some_and(Ordering::is_gt) {
                return;
            }
            if let Some(credit) = self.exact_credit(i, v) {
                out.push(Opt {
                    choice: Choice::Exact(v.clone()),
                    lt: cl.is_some_and(Ordering::is_eq),
                    ut: cu.is_some_and(Ordering::is_eq),
                    credit,
                });
            }
        };
        if let Some(p) = &coord.pinned {
            exact(p, &mut out);
            return out;
        }
        if let Some(l) = lo {
            exact(l, &mut out);
        }
        if let Some(u) = hi {
            if lo.map_or(true, |l| span_cmp(l, u).is_ne()) {
                exact(u, &mut out);
            }
        }
        if let (Some(l), Some(u)) = (lo, hi) {
            if span_cmp(l, u).is_ge() {
                return out;
            }
        }
        let kind = self.g.block(i);
        for (credit, residues) in &coord.generic {
            if kind == BlockKind::Int {
                if let (Some(l), Some(u)) = (lo, hi) {
                    let r = Rational::from_integer(residues[0].1.into());
                    let m = Rational::from_integer(coord.modulus.into());
                    let ylo = ((scalar(l) - &r) / &m).floor().to_integer();
                    let yhi = ((scalar(u) - &r) / &m).ceil().to_integer();
                    let count = &yhi - &ylo - BigInt::one();
                    if count <= BigInt::from(coord.exclusions.len()) {
                        let mut y: BigInt = ylo + 1;
                        while y < yhi {
                            let v = r.clone() + &m * Rational::from_integer(y.clone());
                            let mut s = Span::new();
                            if !v.is_zero() {
                                s.insert(0, v);
                            }
                            exact(&s, &mut out);
                            y += 1;
                        }
                        continue;
                    }
                }
            }
            out.push(Opt {
                choice: Choice::Generic {
                    modulus: coord.modulus,
                    residues: residues.clone(),
                    lo: lo.cloned(),
                    hi: hi.cloned(),
                },
                lt: false,
                ut: false,
                credit: *credit,
            });
        }
        out
    }

    fn dfs(
        &self,
        i: usize,
        lt: bool,
        ut: bool,
        credit: u64,
        memo: &mut HashSet<(usize, bool, bool, u64)>,
        path: &mut Vec<Choice>,
    ) -> bool {
        if i == self.g.len() {
            let strict_left = (lt && self.lower.as_ref().unwrap().strict)
                || (ut && self.upper.as_ref().unwrap().strict);
            return !strict_left && credit == self.full();
        }
        if memo.contains(&(i, lt, ut, credit)) {
            return false;
        }
        for opt in self.options(i, lt, ut) {
            path.push(opt.choice);
            if self.dfs(i + 1, opt.lt, opt.ut, credit | opt.credit, memo, path) {
                return true;
            }
            path.pop();
        }
        memo.insert((i, lt, ut, credit));
        false
    }

    fn realize(&self, i: usize, choice: &Choice) -> Option<BlockElement> {
        let kind = self.g.block(i);
        let (modulus, residues, lo_b, hi_b) = match choice {
            Choice::Exact(v) => return BlockElement::from_span(kind, v),
            Choice::Generic { modulus, residues, lo, hi } => (*modulus, residues, lo, hi),
        };
        let m = Rational::from_integer(modulus.into());
        let mut base = Span::new();
        for (sym, r) in residues {
            if *r != 0 {
                base.insert(*sym, Rational::from_integer((*r).into()));
            }
        }
        let excl = &self.coords[i].exclusions;
        let value = |y: &Rational| {
            let mut s = base.clone();
            let e = s.entry(0).or_insert_with(Rational::zero);
            *e += &m * y;
            if e.is_zero() {
                s.remove(&0);
            }
            s
        };
        let accept = |y: &Rational| {
            let v = value(y);
            excl.iter().all(|x| span_cmp(x, &v).is_ne())
        };
        let shifted = |b: &Span| span_scale(&span_sub(b, &base), &(Rational::one() / &m));
        let lo = lo_b.as_ref().map(shifted);
        let hi = hi_b.as_ref().map(shifted);
        let y = match kind {
            BlockKind::Int => pick_integer(lo.as_ref().map(scalar), hi.as_ref().map(scalar), &accept)?,
            BlockKind::Rat => pick_rational(lo.as_ref().map(scalar), hi.as_ref().map(scalar), None, &accept)?,
            BlockKind::PLocal(p) => {
                pick_rational(lo.as_ref().map(scalar), hi.as_ref().map(scalar), Some(p), &accept)?
            }
            BlockKind::PSpan(p) => {
                let mut bits = 53;
                loop {
                    let l = lo.as_ref().map(|s| span_enclosure(s, bits).1);
                    let h = hi.as_ref().map(|s| span_enclosure(s, bits).0);
                    let room = match (&l, &h) {
                        (Some(l), Some(h)) => l < h,
                        _ => true,
                    };
                    if room {
                        let y = pick_rational(l, h, Some(p), &accept)?;
                        let v = value(&y);
                        if within(&v, lo_b, hi_b) {
                            break y;
                        }
                    }
                    bits *= 2;
                    if bits > 1 << 14 {
                        return None;
                    }
                }
            }
        };
        BlockElement::from_span(kind, &value(&y))
    }

}

fn within(v: &Span, lo: &Option<Span>, hi: &Option<Span>) -> bool {
    lo.as_ref().map_or(true, |l| span_cmp(v, l).is_gt())
        && hi.as_ref().map_or(true, |h| span_cmp(v, h).is_lt())
}

/// Some `y` strictly between the bounds with denominator coprime to `p`,
/// preferring small denominators and values close to the lower bound.
pub(crate) fn pick_rational(
    lo: Option<Rational>,
    hi: Option<Rational>,
    p: Option<u64>,
    accept: &dyn Fn(&Rational) -> bool,
) -> Option<Rational> {
    let base = BigInt::from(if p == Some(2) { 3 } else { 2 });
    let mut den = BigInt::one();
    for _ in 0..256 {
        let d = Rational::from_integer(den.clone());
        let inside = |c: &Rational| {
            lo.as_ref().map_or(true, |l| c > l) && hi.as_ref().map_or(true, |h| c < h)
        };
        let start = match (&lo, &hi) {
            (Some(l), _) => (l * &d).floor().to_integer() + 1,
            (None, Some(h)) => (h * &d).ceil().to_integer() - 1,
            (None, None) => BigInt::zero(),
        };
        for j in 0..64i64 {
            let n = match (&lo, &hi) {
                (Some(_), _) => &start + j,
                (None, Some(_)) => &start - j,
                (None, None) => BigInt::from(if j % 2 == 0 { -j / 2 } else { (j + 1) / 2 }),
            };
            let c = Rational::new(n, den.clone());
            if !inside(&c) {
                break;
            }
            if accept(&c) {
                return Some(c);
            }
        }
        den *= &base;
    }
    None
}

fn pick_integer(
    lo: Option<Rational>,
    hi: Option<Rational>,
    accept: &dyn Fn(&Rational) -> bool,
) -> Option<Rational> {
    let start = match (&lo, &hi) {
        (Some(l), _) => l.floor().to_integer() + 1,
        (None, Some(h)) => h.ceil().to_integer() - 1,
        (None, None) => BigInt::zero(),
    };
    for j in 0..4096i64 {
        let n = match (&lo, &hi) {
            (Some(_), _) => &start + j,
            (None, Some(_)) => &start - j,
            (None, None) => BigInt::from(if j % 2 == 0 { -j / 2 } else { (j + 1) / 2 }),
        };
        let c = Rational::from_integer(n);
        if hi.as_ref().is_some_and(|h| &c >= h) || lo.as_ref().is_some_and(|l| &c <= l) {
            return None;
        }
        if accept(&c) {
            return Some(c);
        }
    }
    None
}

/// Decides a conjunction given as `(literal, term value, input index)`.
pub(super) fn decide(g: &GroupSpec, prepared: &[(Literal, Element, usize)]) -> SolveResult {
    let problem = match setup(g, prepared) {
        Setup::Ready(p) => p,
        Setup::Done(r) => return r,
    };
    let mut memo = HashSet::new();
    let mut path = Vec::new();
    let lt = problem.lower.is_some();
    let ut = problem.upper.is_some();
    if !problem.dfs(0, lt, ut, 0, &mut memo, &mut path) {
        return SolveResult::unsat(Certificate {
            entries: vec![CertificateEntry::Exhausted { coordinates: g.len(), states: memo.len() }],
        });
    }
    let coords: Option<Vec<BlockElement>> =
        path.iter().enumerate().map(|(i, c)| problem.realize(i, c)).collect();
    match coords {
        Some(c) => SolveResult::sat(Element::from_coords(c)),
        None => SolveResult::unknown("could not realize a value in a generic residue class"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn rational_pick_respects_bounds_and_prime() {
        let y = pick_rational(Some(r(1, 1)), Some(r(3, 2)), Some(2), &|_| true).unwrap();
        assert!(y > r(1, 1) && y < r(3, 2));
        assert!(!y.denom().is_even());
        let y = pick_rational(Some(r(0, 1)), Some(r(1, 100)), Some(3), &|_| true).unwrap();
        assert!(y > r(0, 1) && y < r(1, 100));
        assert!(!(y.denom() % 3u32).is_zero());
        assert_eq!(pick_rational(None, None, None, &|_| true), Some(r(0, 1)));
        let y = pick_rational(None, Some(r(-5, 1)), None, &|c| c != &r(-6, 1)).unwrap();
        assert_eq!(y, r(-7, 1));
    }

    #[test]
    fn integer_pick() {
        assert_eq!(pick_integer(Some(r(1, 2)), Some(r(2, 1)), &|_| true), Some(r(1, 1)));
        assert_eq!(pick_integer(Some(r(1, 1)), Some(r(2, 1)), &|_| true), None);
        assert_eq!(pick_integer(None, None, &|c| !c.is_zero()), Some(r(1, 1)));
    }
}
