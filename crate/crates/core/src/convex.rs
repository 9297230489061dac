//! Definable convex subgroups of a finite lexicographic sum.
//!
//! Every convex subgroup is a coordinate suffix, named by a [`ConvexCut`]
//! `s`: the elements whose coordinates `0..s` vanish. `H_n(a)`, the sorts
//! `S_n`, and the bracket groups `G^[n]_α` all live in this lattice of `K+1`
//! cuts.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::arith;
use crate::error::{OagError, Result};
use crate::group::{BlockKind, Element, GroupSpec};

/// `G_s = { x : x_i = 0 for i < s }`. Cut 0 is `G`, cut `K` is `{0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ConvexCut(pub usize);

impl ConvexCut {
    pub fn index(self) -> usize {
        self.0
    }

    /// `G_self ⊆ G_other`.
    pub fn is_subgroup_of(self, other: ConvexCut) -> bool {
        self.0 >= other.0
    }

    pub fn is_proper_subgroup_of(self, other: ConvexCut) -> bool {
        self.0 > other.0
    }

    pub fn describe(self) -> String {
        format!("coords>={}", self.0)
    }
}

impl fmt::Display for ConvexCut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cut{}", self.0)
    }
}

/// An element `α` of the sort `S_p`, identified with the subgroup `G_α` it names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortElement {
    pub p: u64,
    pub cut: ConvexCut,
}

impl Serialize for SortElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SortElement", 3)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("cut", &self.cut.0)?;
        st.serialize_field("subgroup", &self.cut.describe())?;
        st.end()
    }
}

/// `x ∈ G_cut + mG`.
pub fn in_coset(g: &GroupSpec, x: &Element, cut: ConvexCut, m: u64) -> bool {
    (0..cut.0.min(g.len())).all(|i| x.coord(i).is_divisible(g.block(i), m))
}

/// `x ∈ G_cut` (exact membership, no modulus).
pub fn in_subgroup(x: &Element, cut: ConvexCut) -> bool {
    x.coords()[..cut.0].iter().all(|c| c.is_zero())
}

/// `H_n(a)`: the largest convex `H` with `a ∉ H + nG`, or `{0}` when `a ∈ nG`.
pub fn hsub(g: &GroupSpec, a: &Element, n: u64) -> ConvexCut {
    assert!(n >= 1);
    (0..g.len())
        .find(|&i| !a.coord(i).is_divisible(g.block(i), n))
        .map_or(ConvexCut(g.len()), |i| ConvexCut(i + 1))
}

/// Replaces `a` by an element of `G_target` in the same class modulo `pG`.
///
/// Requires the coordinates of `a` before `target` to be `p`-divisible.
pub fn project_into(g: &GroupSpec, a: &Element, target: ConvexCut, p: u64) -> Result<Element> {
    g.check(a)?;
    if target.0 > g.len() {
        return Err(OagError::Precondition(format!("{target} out of range")));
    }
    if !in_coset(g, a, target, p) {
        return Err(OagError::Precondition(format!(
            "{a} is not in {target} + {p}G"
        )));
    }
    let mut coords = a.coords().to_vec();
    for (i, c) in coords.iter_mut().enumerate().take(target.0) {
        *c = crate::group::BlockElement::zero(g.block(i));
    }
    Ok(Element::from_coords(coords))
}

/// Raw `S_n`: every value of `H_n`, smallest subgroup first.
pub fn sorts(g: &GroupSpec, n: u64) -> Vec<ConvexCut> {
    assert!(n >= 1);
    let mut cuts: BTreeSet<ConvexCut> = BTreeSet::new();
    cuts.insert(ConvexCut(g.len()));
    for (i, b) in g.blocks().iter().enumerate() {
        if !b.is_divisible_by(n) {
            cuts.insert(ConvexCut(i + 1));
        }
    }
    cuts.into_iter().rev().collect()
}

/// Raw `S_p` with cuts identified when every block between them is
/// `p`-divisible, so that `G_s + p^l G = G_s' + p^l G` for all `l`.
pub fn collapse_sorts(g: &GroupSpec, p: u64) -> Vec<Vec<ConvexCut>> {
    let mut classes: Vec<Vec<ConvexCut>> = Vec::new();
    for cut in sorts(g, p) {
        let merge = classes.last().is_some_and(|class| {
            let larger = class.last().unwrap().0;
            g.blocks()[cut.0..larger].iter().all(|b| b.is_divisible_by(p))
        });
        if merge {
            classes.last_mut().unwrap().push(cut);
        } else {
            classes.push(vec![cut]);
        }
    }
    classes
}

pub fn singular_primes(g: &GroupSpec) -> BTreeSet<u64> {
    g.blocks()
        .iter()
        .filter_map(|b| match b {
            BlockKind::PSpan(p) => Some(*p),
            _ => None,
        })
        .collect()
}

/// `x ∈ G^[n]_α`: membership in `G_α' + nG` for every sort `α'` of `S_n` strictly above `α`.
pub fn bracket_membership(g: &GroupSpec, x: &Element, alpha: SortElement, n: u64) -> bool {
    sorts(g, n)
        .into_iter()
        .filter(|beta| alpha.cut.is_proper_subgroup_of(*beta))
        .all(|beta| in_coset(g, x, beta, n))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeSorts {
    pub p: u64,
    pub raw: Vec<SortElement>,
    pub collapsed: Vec<Vec<SortElement>>,
}

impl PrimeSorts {
    pub fn raw_count(&self) -> usize {
        self.raw.len()
    }

    pub fn collapsed_count(&self) -> usize {
        self.collapsed.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankReport {
    pub singular_primes: Vec<u64>,
    pub sorts: Vec<PrimeSorts>,
    pub bound: usize,
    /// Finitely many singular primes and every `S_p` finite; always true for
    /// a finite block list.
    pub strongly_dependent: bool,
}

pub fn prime_sorts(g: &GroupSpec, p: u64) -> PrimeSorts {
    let tag = |cut| SortElement { p, cut };
    PrimeSorts {
        p,
        raw: sorts(g, p).into_iter().map(tag).collect(),
        collapsed: collapse_sorts(g, p)
            .into_iter()
            .map(|c| c.into_iter().map(tag).collect())
            .collect(),
    }
}

/// `1 + Σ |S_p|` over the singular primes, using collapsed sort counts.
pub fn dp_rank_bound(g: &GroupSpec) -> RankReport {
    let primes = singular_primes(g);
    let sorts: Vec<PrimeSorts> = primes.iter().map(|&p| prime_sorts(g, p)).collect();
    RankReport {
        singular_primes: primes.into_iter().collect(),
        bound: 1 + sorts.iter().map(PrimeSorts::collapsed_count).sum::<usize>(),
        sorts,
        strongly_dependent: true,
    }
}

pub fn strongly_dependent(g: &GroupSpec) -> bool {
    dp_rank_bound(g).strongly_dependent
}

/// Primes dividing `n`, for callers that reduce `S_n` to prime sorts.
pub fn prime_divisors(n: u64) -> Vec<u64> {
    arith::factorize(n).into_iter().map(|(p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{q, BlockElement};

    fn g(blocks: &[BlockKind]) -> GroupSpec {
        GroupSpec::new(blocks.to_vec()).unwrap()
    }

    fn q_span2_span2() -> GroupSpec {
        g(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(2)])
    }

    /// Largest `H` (smallest cut index) with `a ∉ H + nG`, by scanning every cut.
    fn hsub_by_scan(g: &GroupSpec, a: &Element, n: u64) -> ConvexCut {
        (0..=g.len())
            .map(ConvexCut)
            .find(|&c| !in_coset(g, a, c, n))
            .unwrap_or(ConvexCut(g.len()))
    }

    #[test]
    fn coset_examples() {
        let g = q_span2_span2();
        let x = g.unit(1, 0);
        assert!(in_coset(&g, &x, ConvexCut(0), 2));
        assert!(!in_coset(&g, &x, ConvexCut(2), 2));
        assert_eq!(in_coset(&g, &x, ConvexCut(3), 2), g.is_divisible(&x, 2));
    }

    #[test]
    fn hsub_examples() {
        let g = q_span2_span2();
        assert_eq!(hsub(&g, &g.unit(1, 0), 2), ConvexCut(2));
        assert_eq!(hsub(&g, &g.unit(2, 0), 2), ConvexCut(3));
        let two = g.basis_multiple(1, 0, q(2, 1));
        assert_eq!(hsub(&g, &two, 2), ConvexCut(3));
        for a in [g.unit(1, 0), g.unit(2, 0), two, g.unit(0, 0)] {
            assert_eq!(hsub(&g, &a, 2), hsub_by_scan(&g, &a, 2));
        }
    }

    #[test]
    fn projection_keeps_hsub() {
        let g = q_span2_span2();
        let a = g
            .element(vec![
                BlockElement::Rat(q(1, 2)),
                BlockElement::span([(0, q(2, 1))]),
                BlockElement::span([(1, q(1, 1))]),
            ])
            .unwrap();
        let p = project_into(&g, &a, ConvexCut(1), 2).unwrap();
        assert_eq!(p.coord(0), &BlockElement::Rat(q(0, 1)));
        assert_eq!(p.coord(1), a.coord(1));
        assert_eq!(hsub(&g, &p, 2), hsub(&g, &a, 2));
        assert_eq!(project_into(&g, &p, ConvexCut(1), 2).unwrap(), p);
        assert!(project_into(&g, &a, ConvexCut(3), 2).is_err());
    }

    #[test]
    fn sort_examples() {
        assert_eq!(sorts(&g(&[BlockKind::Rat]), 2), vec![ConvexCut(1)]);
        assert_eq!(sorts(&q_span2_span2(), 2), vec![ConvexCut(3), ConvexCut(2)]);
        assert_eq!(
            sorts(&g(&[BlockKind::Int, BlockKind::Int]), 2),
            vec![ConvexCut(2), ConvexCut(1)]
        );
    }

    #[test]
    fn collapse_examples() {
        let multi = g(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(3)]);
        assert_eq!(sorts(&multi, 2), vec![ConvexCut(3), ConvexCut(2)]);
        assert_eq!(collapse_sorts(&multi, 2), vec![vec![ConvexCut(3), ConvexCut(2)]]);
        assert_eq!(collapse_sorts(&q_span2_span2(), 2).len(), 2);
        for (spec, p) in [(multi, 3), (q_span2_span2(), 2)] {
            assert!(collapse_sorts(&spec, p)[0].contains(&ConvexCut(spec.len())));
        }
    }

    #[test]
    fn singular_prime_examples() {
        assert!(singular_primes(&g(&[BlockKind::Int, BlockKind::Rat])).is_empty());
        assert_eq!(
            singular_primes(&q_span2_span2()).into_iter().collect::<Vec<_>>(),
            vec![2]
        );
        assert_eq!(
            singular_primes(&g(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(3)]))
                .into_iter()
                .collect::<Vec<_>>(),
            vec![2, 3]
        );
    }

    #[test]
    fn bracket_examples() {
        let g = q_span2_span2();
        let x = g.unit(1, 0);
        let top = SortElement { p: 2, cut: ConvexCut(2) };
        let bottom = SortElement { p: 2, cut: ConvexCut(3) };
        assert!(bracket_membership(&g, &x, top, 2));
        assert!(!bracket_membership(&g, &x, bottom, 2));
        let div = g.basis_multiple(1, 3, q(4, 1));
        assert!(bracket_membership(&g, &div, bottom, 2));
    }

    #[test]
    fn rank_bounds() {
        assert_eq!(dp_rank_bound(&g(&[BlockKind::Int])).bound, 1);
        let r = dp_rank_bound(&q_span2_span2());
        assert_eq!((r.bound, r.sorts[0].collapsed_count()), (3, 2));
        let r = dp_rank_bound(&g(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(3)]));
        assert_eq!(r.bound, 3);
        assert_eq!(
            r.sorts.iter().map(|s| (s.raw_count(), s.collapsed_count())).collect::<Vec<_>>(),
            vec![(2, 1), (1, 1)]
        );
        assert!(r.strongly_dependent);
    }

    #[test]
    fn sorts_of_composite_modulus_are_union_of_prime_sorts() {
        let spec = g(&[BlockKind::Int, BlockKind::PSpan(2), BlockKind::PLocal(3), BlockKind::PSpan(5)]);
        for n in 1..=60u64 {
            let mut union: BTreeSet<ConvexCut> = BTreeSet::new();
            union.insert(ConvexCut(spec.len()));
            for p in prime_divisors(n) {
                union.extend(sorts(&spec, p));
            }
            let raw: BTreeSet<ConvexCut> = sorts(&spec, n).into_iter().collect();
            assert_eq!(raw, union, "n = {n}");
        }
    }

    #[test]
    fn serializes_sort_elements() {
        let s = SortElement { p: 2, cut: ConvexCut(2) };
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"p":2,"cut":2,"subgroup":"coords>=2"}"#
        );
    }
}
