//! Random pattern transformations for fuzzing the structural checks.
//!
//! [`perturb`] keeps every row's definable sets unchanged, so a verified
//! pattern stays verified. [`with_convex_row`] appends an extra interval row.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{InpPattern, PatternRow};
use crate::arith::int;
use crate::formula::{Cmp, Literal, Relation, Term};
use crate::group::{BlockElement, BlockKind, Element, GroupSpec};

/// Small random element supported on coordinates `>= from`.
pub fn random_element<R: Rng>(g: &GroupSpec, rng: &mut R, from: usize) -> Element {
    let coords = g
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            if i < from {
                return BlockElement::zero(kind);
            }
            let mut c = || int(rng.gen_range(-3..=3));
            match kind {
                BlockKind::Int => BlockElement::Int(c().to_integer()),
                BlockKind::Rat => BlockElement::Rat(c() / int(rng.gen_range(1..=4))),
                BlockKind::PLocal(_) => BlockElement::PLocal(c()),
                BlockKind::PSpan(_) => BlockElement::span((0..3).map(|s| (s, c()))),
            }
        })
        .collect();
    Element::from_coords(coords)
}

fn unit_mod<R: Rng>(m: u64, rng: &mut R) -> i64 {
    loop {
        let u = rng.gen_range(1..=7i64);
        if num_integer::gcd(u as u64, m) == 1 {
            return u;
        }
    }
}

/// Same-set rewrites: shifts parameters within their class modulo
/// `mG + G_α`, multiplies congruence rows through by units, and shuffles
/// rows and columns.
pub fn perturb<R: Rng>(pattern: &InpPattern, rng: &mut R) -> InpPattern {
    let g = &pattern.group;
    let mut rows: Vec<(PatternRow, Option<Vec<Element>>)> = pattern
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.clone(), pattern.witness_parts.as_ref().map(|w| w[i].clone())))
        .collect();

    for (row, parts) in rows.iter_mut() {
        if let [Literal { k: 1, relation: Relation::Cong { modulus, cut }, term }] =
            row.template.as_slice()
        {
            let (m, cut, term) = (*modulus, *cut, term.clone());
            if *term.coeffs() != *Term::param(0).coeffs() {
                continue;
            }
            let u = unit_mod(m, rng);
            for inst in row.instances.iter_mut() {
                let shift = g
                    .add(
                        &g.scale(m as i64, &random_element(g, rng, 0)).unwrap(),
                        &random_element(g, rng, cut.index()),
                    )
                    .unwrap();
                let c = g.add(&inst[0], &shift).unwrap();
                inst[0] = g.scale(u, &c).unwrap();
            }
            row.template = vec![Literal::cong(u, m, cut, Term::param(0)).unwrap()];
        }
        let mut order: Vec<usize> = (0..row.instances.len()).collect();
        order.shuffle(rng);
        row.instances = order.iter().map(|&j| row.instances[j].clone()).collect();
        if let Some(p) = parts {
            *p = order.iter().map(|&j| p[j].clone()).collect();
        }
    }
    rows.shuffle(rng);
    let witness_parts = pattern
        .witness_parts
        .as_ref()
        .map(|_| rows.iter().map(|(_, p)| p.clone().unwrap()).collect());
    InpPattern {
        group: g.clone(),
        rows: rows.into_iter().map(|(r, _)| r).collect(),
        witness_parts,
    }
}

/// Appends a row of `width` pairwise disjoint open intervals at a random
/// coordinate. Drops the constructed witnesses, which no longer apply.
pub fn with_convex_row<R: Rng>(pattern: &InpPattern, rng: &mut R, width: usize) -> InpPattern {
    let g = &pattern.group;
    let coord = rng.gen_range(0..g.len());
    let step = rng.gen_range(1..=3i64);
    let offset = rng.gen_range(-2..=2i64);
    let point = |v: i64| g.basis_multiple(coord, 0, int(v));
    let instances = (0..width as i64)
        .map(|s| {
            let lo = offset + 2 * step * s;
            vec![point(lo), point(lo + step)]
        })
        .collect();
    let mut rows = pattern.rows.clone();
    rows.push(PatternRow {
        template: vec![
            Literal::ord(1, Cmp::Gt, Term::param(0)).unwrap(),
            Literal::ord(1, Cmp::Lt, Term::param(1)).unwrap(),
        ],
        instances,
        k: 2,
    });
    InpPattern { group: g.clone(), rows, witness_parts: None }
}
