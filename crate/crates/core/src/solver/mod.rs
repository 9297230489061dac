//! Consistency of one-variable conjunctions over a concrete group.
//!
//! [`solve`] returns a witness checked by the evaluator, an inconsistency
//! certificate, or `Unknown` when a resource limit is hit. [`oracle_search`]
//! is an independent, deliberately naive enumeration used to corroborate
//! verdicts.

mod oracle;
mod search;

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

pub use oracle::{oracle_search, oracle_search_with, OracleConfig};

use crate::error::Result;
use crate::formula::{
    evaluate_conj, normalize_type_i, Conjunction, Literal, PreparedConj, Relation,
};
use crate::group::{Element, GroupSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Status {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Sat => "SAT",
            Status::Unsat => "UNSAT",
            Status::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateEntry {
    /// Every residue of one basis coefficient modulo `modulus` violates some
    /// congruence; `literals[i]` rules out `excluded[i]`.
    Residues {
        coordinate: usize,
        symbol: Option<usize>,
        modulus: u64,
        excluded: Vec<u64>,
        literals: Vec<usize>,
    },
    /// The order literals bound `x` to an empty interval.
    Order { detail: String },
    /// Exact coset literals fix a coordinate to an impossible value.
    Pin { coordinate: usize, detail: String },
    /// Every per-coordinate choice was explored without meeting all
    /// negated literals and strict bounds.
    Exhausted { coordinates: usize, states: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Certificate {
    pub entries: Vec<CertificateEntry>,
}

impl Certificate {
    pub fn has_residue_entry(&self) -> bool {
        self.entries
            .iter()
            .any(|e| matches!(e, CertificateEntry::Residues { .. }))
    }
}

fn element_string<S: Serializer>(e: &Option<Element>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_str(&e.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolveResult {
    pub status: Status,
    #[serde(serialize_with = "element_string")]
    pub witness: Option<Element>,
    pub certificate: Option<Certificate>,
    pub reason: Option<String>,
}

impl SolveResult {
    pub fn sat(witness: Element) -> Self {
        SolveResult { status: Status::Sat, witness: Some(witness), certificate: None, reason: None }
    }

    pub fn unsat(certificate: Certificate) -> Self {
        SolveResult {
            status: Status::Unsat,
            witness: None,
            certificate: Some(certificate),
            reason: None,
        }
    }

    pub fn unknown(reason: impl Into<String>) -> Self {
        SolveResult {
            status: Status::Unknown,
            witness: None,
            certificate: None,
            reason: Some(reason.into()),
        }
    }
}

/// Literals used for the residue analysis, each tagged with the index of the
/// input literal it came from.
fn normalized(g: &GroupSpec, conj: &Conjunction) -> (Vec<(Literal, usize)>, Vec<Element>) {
    let mut params = conj.params.clone();
    let mut out = Vec::new();
    for (i, lit) in conj.literals.iter().enumerate() {
        if let Relation::Cong { .. } = lit.relation {
            if let Ok(n) = normalize_type_i(g, lit, &[], &mut params) {
                out.extend(n.literals.into_iter().map(|l| (l, i)));
                continue;
            }
        }
        out.push((lit.clone(), i));
    }
    (out, params)
}

/// Decides the conjunction over `g`.
pub fn solve(g: &GroupSpec, conj: &Conjunction) -> Result<SolveResult> {
    let original = PreparedConj::new(g, conj)?;

    // Cheap candidates first: 0 and every exact solution of `kx = t`.
    let mut candidates = vec![g.zero()];
    for (lit, t) in &original.literals {
        if let Ok(x) = g.divide_exact(t, lit.k.unsigned_abs()) {
            candidates.push(if lit.k < 0 { g.neg(&x)? } else { x });
        }
    }
    if let Some(x) = candidates.into_iter().find(|x| original.holds(g, x)) {
        return Ok(SolveResult::sat(x));
    }

    let (lits, params) = normalized(g, conj);
    let prepared = lits
        .iter()
        .map(|(l, origin)| Ok((l.clone(), l.term.value(g, &params)?, *origin)))
        .collect::<Result<Vec<_>>>()?;
    let result = search::decide(g, &prepared);
    if let Some(w) = &result.witness {
        if !evaluate_conj(g, conj, w)? {
            return Ok(SolveResult::unknown(format!(
                "internal: constructed witness {w} failed re-evaluation"
            )));
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KVerdict {
    Inconsistent,
    Consistent,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetResult {
    pub members: Vec<usize>,
    pub result: SolveResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KInconsistency {
    pub verdict: KVerdict,
    pub subsets: Vec<SubsetResult>,
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Whether every `k` of the given instances are jointly inconsistent.
///
/// Each instance is one formula `φ(x; ā_j)` with its own parameters.
pub fn check_k_inconsistent(
    g: &GroupSpec,
    instances: &[Conjunction],
    k: usize,
) -> Result<KInconsistency> {
    assert!(k >= 1, "inconsistency arity must be positive");
    let subsets = k_subsets(instances.len(), k)
        .into_par_iter()
        .map(|members| {
            let conj = Conjunction::merge(members.iter().map(|&i| &instances[i]));
            Ok(SubsetResult { result: solve(g, &conj)?, members })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = if subsets.iter().any(|s| s.result.status == Status::Sat) {
        KVerdict::Consistent
    } else if subsets.iter().any(|s| s.result.status == Status::Unknown) {
        KVerdict::Unknown
    } else {
        KVerdict::Inconsistent
    };
    Ok(KInconsistency { verdict, subsets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexCut;
    use crate::formula::{Cmp, Term};
    use crate::group::{q, BlockElement, BlockKind};

    fn spec(blocks: &[BlockKind]) -> GroupSpec {
        GroupSpec::new(blocks.to_vec()).unwrap()
    }

    fn cong(m: u64, cut: usize, param: usize) -> Literal {
        Literal::cong(1, m, ConvexCut(cut), Term::param(param)).unwrap()
    }

    fn assert_sat(g: &GroupSpec, conj: &Conjunction) -> Element {
        let r = solve(g, conj).unwrap();
        assert_eq!(r.status, Status::Sat, "{conj}: {r:?}");
        let w = r.witness.unwrap();
        assert!(evaluate_conj(g, conj, &w).unwrap());
        w
    }

    fn assert_unsat(g: &GroupSpec, conj: &Conjunction) -> Certificate {
        let r = solve(g, conj).unwrap();
        assert_eq!(r.status, Status::Unsat, "{conj}: {r:?}");
        r.certificate.unwrap()
    }

    #[test]
    fn parameter_is_a_witness() {
        let g = spec(&[BlockKind::Rat, BlockKind::PSpan(2)]);
        let a0 = g.unit(1, 0);
        let conj = Conjunction::new(vec![cong(2, 2, 0)], vec![a0.clone()]);
        assert_eq!(assert_sat(&g, &conj), a0);
    }

    #[test]
    fn incongruent_pair_is_unsat_with_residues() {
        let g = spec(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(2)]);
        let conj = Conjunction::new(
            vec![cong(2, 3, 0), cong(2, 3, 1)],
            vec![g.unit(1, 0), g.unit(1, 1)],
        );
        let cert = assert_unsat(&g, &conj);
        assert!(cert.has_residue_entry());
        assert!(oracle_search(&g, &conj, 3).unwrap().is_none());
    }

    #[test]
    fn congruent_pair_is_sat() {
        let g = spec(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(2)]);
        // b0 and b0 + 2 b1 agree modulo 2G
        let c1 = g.add(&g.unit(1, 0), &g.basis_multiple(1, 1, q(2, 1))).unwrap();
        let conj = Conjunction::new(vec![cong(2, 3, 0), cong(2, 3, 1)], vec![g.unit(1, 0), c1]);
        assert_sat(&g, &conj);
    }

    #[test]
    fn disjoint_intervals_are_unsat() {
        let g = spec(&[BlockKind::Rat, BlockKind::PSpan(2)]);
        let at = |v: i64| g.basis_multiple(0, 0, q(v, 2));
        let conj = Conjunction::new(
            vec![
                Literal::ord(1, Cmp::Gt, Term::param(0)).unwrap(),
                Literal::ord(1, Cmp::Lt, Term::param(1)).unwrap(),
                Literal::ord(1, Cmp::Gt, Term::param(2)).unwrap(),
                Literal::ord(1, Cmp::Lt, Term::param(3)).unwrap(),
            ],
            vec![at(0), at(1), at(2), at(3)],
        );
        let cert = assert_unsat(&g, &conj);
        assert!(matches!(cert.entries[0], CertificateEntry::Order { .. }));
    }

    #[test]
    fn interval_with_congruences() {
        let g = spec(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(3)]);
        let lo = g.basis_multiple(0, 0, q(1, 1));
        let hi = g.basis_multiple(0, 0, q(3, 2));
        let conj = Conjunction::new(
            vec![
                Literal::ord(1, Cmp::Gt, Term::param(0)).unwrap(),
                Literal::ord(1, Cmp::Lt, Term::param(1)).unwrap(),
                cong(2, 3, 2),
                cong(3, 3, 3),
            ],
            vec![lo, hi, g.unit(1, 4), g.unit(2, 2)],
        );
        assert_sat(&g, &conj);
    }

    #[test]
    fn tight_bound_inside_a_span_block() {
        // b1 < x < b1 + b0 inside the 2-span with x ≡ b2 (mod 2G): needs a
        // real-valued choice of the b0 coefficient strictly between the bounds.
        let g = spec(&[BlockKind::PSpan(2)]);
        let lo = g.unit(0, 1);
        let hi = g.add(&g.unit(0, 1), &g.unit(0, 0)).unwrap();
        let conj = Conjunction::new(
            vec![
                Literal::ord(1, Cmp::Gt, Term::param(0)).unwrap(),
                Literal::ord(1, Cmp::Lt, Term::param(1)).unwrap(),
                cong(4, 1, 2),
            ],
            vec![lo, hi, g.unit(0, 2)],
        );
        assert_sat(&g, &conj);
    }

    #[test]
    fn integer_block_with_narrow_interval() {
        let g = spec(&[BlockKind::Int]);
        let e = |v: i64| g.element(vec![BlockElement::Int(v.into())]).unwrap();
        // 3 < x < 8, x ≡ 1 (mod 4): only x = 5
        let conj = Conjunction::new(
            vec![
                Literal::ord(1, Cmp::Gt, Term::param(0)).unwrap(),
                Literal::ord(1, Cmp::Lt, Term::param(1)).unwrap(),
                Literal::cong(1, 4, ConvexCut(1), Term::param(2)).unwrap(),
            ],
            vec![e(3), e(8), e(1)],
        );
        assert_eq!(assert_sat(&g, &conj), e(5));
        // additionally x ≠ 5
        let mut blocked = conj.clone();
        blocked.literals.push(Literal::new(1, Relation::Neq, Term::param(3)).unwrap());
        blocked.params.push(e(5));
        assert_unsat(&g, &blocked);
    }

    #[test]
    fn negated_congruence_needs_fresh_symbol() {
        let g = spec(&[BlockKind::PSpan(2)]);
        // x ≡ b0 (mod 2G) and x ≢ b0 (mod 4G) and x ≢ b0 + 2b1 (mod 4G)
        let params = vec![g.unit(0, 0), g.add(&g.unit(0, 0), &g.basis_multiple(0, 1, q(2, 1))).unwrap()];
        let conj = Conjunction::new(
            vec![cong(2, 1, 0), cong(4, 1, 0).negated(), cong(4, 1, 1).negated()],
            params,
        );
        assert_sat(&g, &conj);
    }

    #[test]
    fn exact_coset_pins() {
        let g = spec(&[BlockKind::Int, BlockKind::PSpan(2)]);
        let p = g
            .element(vec![BlockElement::Int(3.into()), BlockElement::span([(0, q(1, 1))])])
            .unwrap();
        let ing = Literal::new(2, Relation::InCoset(ConvexCut(1)), Term::param(0)).unwrap();
        let conj = Conjunction::new(vec![ing.clone()], vec![p.clone()]);
        // 2·x_0 = 3 has no integer solution
        let cert = assert_unsat(&g, &conj);
        assert!(matches!(cert.entries[0], CertificateEntry::Pin { .. }));
        let conj = Conjunction::new(vec![ing.with_term(Term::new([(0, 2)]))], vec![p]);
        assert_sat(&g, &conj);
    }

    #[test]
    fn k_inconsistency() {
        let g = spec(&[BlockKind::Rat, BlockKind::PSpan(2)]);
        let row: Vec<Conjunction> = (0..3)
            .map(|j| Conjunction::new(vec![cong(2, 2, 0)], vec![g.unit(1, j)]))
            .collect();
        assert_eq!(check_k_inconsistent(&g, &row, 2).unwrap().verdict, KVerdict::Inconsistent);
        let same: Vec<Conjunction> = (0..3).map(|_| row[0].clone()).collect();
        assert_eq!(check_k_inconsistent(&g, &same, 2).unwrap().verdict, KVerdict::Consistent);
        let r = check_k_inconsistent(&g, &row, 4).unwrap();
        assert_eq!((r.verdict, r.subsets.len()), (KVerdict::Inconsistent, 0));
    }

    #[test]
    fn solving_is_deterministic() {
        let g = spec(&[BlockKind::Rat, BlockKind::PSpan(2), BlockKind::PSpan(3)]);
        let conj = Conjunction::new(
            vec![cong(4, 2, 0), cong(3, 3, 1), cong(2, 1, 0).negated()],
            vec![g.unit(1, 1), g.unit(2, 0)],
        );
        assert_eq!(solve(&g, &conj).unwrap(), solve(&g, &conj).unwrap());
    }
}
