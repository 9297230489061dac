//! Brute-force witness search over small integer combinations.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::arith::{factorize, span_scale, Rational};
use crate::error::Result;
use crate::formula::{Conjunction, PreparedConj};
use crate::group::{BlockElement, BlockKind, Element, GroupSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Coefficients range over `[-radius, radius]`.
    pub radius: i64,
    /// Largest number of generators in one combination.
    pub max_support: usize,
    pub max_candidates: usize,
}

impl OracleConfig {
    pub fn new(radius: i64) -> Self {
        OracleConfig { radius, max_support: 2, max_candidates: 1 << 20 }
    }
}

fn scaled(g: &GroupSpec, a: &Element, c: &Rational) -> Option<Element> {
    let coords = a
        .coords()
        .iter()
        .zip(g.blocks())
        .map(|(e, &kind)| BlockElement::from_span(kind, &span_scale(&e.to_span(), c)))
        .collect::<Option<Vec<_>>>()?;
    Some(Element::from_coords(coords))
}

fn generators(g: &GroupSpec, conj: &Conjunction) -> Vec<Element> {
    let mut gens: Vec<Element> = Vec::new();
    let push = |e: Element, gens: &mut Vec<Element>| {
        if !e.is_zero() && !gens.contains(&e) {
            gens.push(e);
        }
    };
    for p in &conj.params {
        push(p.clone(), &mut gens);
    }
    for (i, kind) in g.blocks().iter().enumerate() {
        push(g.unit(i, 0), &mut gens);
        if let BlockKind::PSpan(_) = kind {
            let fresh = conj
                .params
                .iter()
                .filter_map(|p| match p.coord(i) {
                    BlockElement::PSpan(s) => s.keys().next_back().copied(),
                    _ => None,
                })
                .max()
                .unwrap_or(0)
                + 1;
            push(g.unit(i, fresh), &mut gens);
        }
    }
    let primes: BTreeSet<u64> = conj
        .literals
        .iter()
        .filter_map(|l| l.modulus())
        .flat_map(|m| factorize(m).into_iter().map(|(p, _)| p))
        .collect();
    let base = gens.clone();
    for p in primes {
        for d in 1..=2u32 {
            let c = Rational::new(BigInt::from(1), BigInt::from(p.pow(d)));
            for b in &base {
                if let Some(e) = scaled(g, b, &c) {
                    push(e, &mut gens);
                }
            }
        }
    }
    gens
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Searches `sum λ_i g_i` with `|λ_i| <= radius` over a fixed generator set
/// (parameters, basis units, a fresh irrational unit per span block and
/// their `p^-1`, `p^-2` multiples for primes dividing a modulus).
pub fn oracle_search(g: &GroupSpec, conj: &Conjunction, radius: i64) -> Result<Option<Element>> {
    oracle_search_with(g, conj, &OracleConfig::new(radius))
}

pub fn oracle_search_with(
    g: &GroupSpec,
    conj: &Conjunction,
    config: &OracleConfig,
) -> Result<Option<Element>> {
    let prepared = PreparedConj::new(g, conj)?;
    if prepared.holds(g, &g.zero()) {
        return Ok(Some(g.zero()));
    }
    let gens = generators(g, conj);
    let lambdas: Vec<i64> = (-config.radius..=config.radius).filter(|&l| l != 0).collect();
    let mut budget = config.max_candidates;
    for size in 1..=config.max_support.min(gens.len()) {
        for support in combinations(gens.len(), size) {
            let count = lambdas.len().pow(size as u32);
            if count > budget {
                return Ok(None);
            }
            budget -= count;
            let found = (0..count).into_par_iter().find_map_first(|mut idx| {
                let mut x = g.zero();
                for &s in &support {
                    let l = lambdas[idx % lambdas.len()];
                    idx /= lambdas.len();
                    x = g.add(&x, &g.scale(l, &gens[s]).ok()?).ok()?;
                }
                prepared.holds(g, &x).then_some(x)
            });
            if found.is_some() {
                return Ok(found);
            }
        }
    }
    Ok(None)
}
