//! Inp-patterns in one variable: rows of parameterized formulas, each row
//! `k`-inconsistent, every path through the rows consistent.

mod generate;
pub mod mutate;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use generate::{gen_chain_pattern, gen_optimal_pattern, optimal_shape};

use crate::arith::{factorize, valuation_u64};
use crate::convex::{sorts, ConvexCut};
use crate::error::{OagError, Result};
use crate::formula::{classify, evaluate_conj, Conjunction, Literal, LiteralType, Relation};
use crate::group::{Element, GroupSpec};
use crate::solver::{check_k_inconsistent, solve, KVerdict, Status, SubsetResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternRow {
    /// `φ_i(x; ȳ)`; parameter `a_r` of the template is `instance[r]`.
    pub template: Vec<Literal>,
    pub instances: Vec<Vec<Element>>,
    pub k: usize,
}

impl PatternRow {
    pub fn instance(&self, j: usize) -> Conjunction {
        Conjunction::new(self.template.clone(), self.instances[j].clone())
    }

    pub fn is_convex(&self) -> bool {
        self.template.iter().all(|l| classify(l) == LiteralType::III)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InpPattern {
    pub group: GroupSpec,
    pub rows: Vec<PatternRow>,
    /// `witness_parts[i][j]`: contribution of column `j` of row `i` to the
    /// constructed path witness.
    pub witness_parts: Option<Vec<Vec<Element>>>,
}

impl InpPattern {
    pub fn new(group: GroupSpec, rows: Vec<PatternRow>) -> Result<Self> {
        let p = InpPattern { group, rows, witness_parts: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.instances.is_empty() {
                return Err(OagError::InvalidInput(format!("row {i} has no instances")));
            }
            if row.k < 2 {
                return Err(OagError::InvalidInput(format!("row {i} has k = {} < 2", row.k)));
            }
            for j in 0..row.instances.len() {
                row.instance(j).validate(&self.group)?;
            }
        }
        if let Some(parts) = &self.witness_parts {
            let shape_ok = parts.len() == self.rows.len()
                && parts.iter().zip(&self.rows).all(|(p, r)| p.len() == r.instances.len());
            if !shape_ok {
                return Err(OagError::InvalidInput("witness parts do not match the grid".into()));
            }
            for e in parts.iter().flatten() {
                self.group.check(e)?;
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn path_count(&self) -> u128 {
        self.rows.iter().map(|r| r.instances.len() as u128).product()
    }

    pub fn path(&self, eta: &[usize]) -> Conjunction {
        Conjunction::merge(
            &self
                .rows
                .iter()
                .zip(eta)
                .map(|(r, &j)| r.instance(j))
                .collect::<Vec<_>>(),
        )
    }

    /// `Σ witness_parts[i][η(i)]`, when parts are attached.
    pub fn constructed_witness(&self, eta: &[usize]) -> Option<Element> {
        let parts = self.witness_parts.as_ref()?;
        let mut x = self.group.zero();
        for (row, &j) in parts.iter().zip(eta) {
            x = self.group.add(&x, &row[j]).ok()?;
        }
        Some(x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowReport {
    pub index: usize,
    pub k: usize,
    pub verdict: KVerdict,
    pub subsets: Vec<SubsetResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathReport {
    pub eta: Vec<usize>,
    pub status: Status,
    /// Solver witness, re-checked with the evaluator.
    pub witness: Option<String>,
    pub reevaluated: bool,
    pub constructed_witness: Option<String>,
    pub constructed_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Structural {
    pub sp_lemma: bool,
    pub convex_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub verified: bool,
    pub depth: usize,
    pub rows: Vec<RowReport>,
    pub paths: Vec<PathReport>,
    pub total_paths: String,
    pub sampled: bool,
    pub unknowns: usize,
    pub structural: Structural,
    pub seed: u64,
}

fn all_paths(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in shape {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    out
}

fn sample_paths(shape: &[usize], budget: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < budget {
        let eta: Vec<usize> = shape.iter().map(|&n| rng.gen_range(0..n)).collect();
        if seen.insert(eta.clone()) {
            out.push(eta);
        }
    }
    out
}

/// Checks every row for `k`-inconsistency and every path (or `path_budget`
/// seeded samples of them) for consistency.
pub fn verify(pattern: &InpPattern, path_budget: usize, seed: u64) -> Result<VerificationReport> {
    pattern.validate()?;
    let g = &pattern.group;
    let rows = pattern
        .rows
        .iter()
        .enumerate()
        .map(|(index, row)| {
            let instances: Vec<Conjunction> = (0..row.instances.len()).map(|j| row.instance(j)).collect();
            let r = check_k_inconsistent(g, &instances, row.k)?;
            Ok(RowReport { index, k: row.k, verdict: r.verdict, subsets: r.subsets })
        })
        .collect::<Result<Vec<_>>>()?;

    let shape: Vec<usize> = pattern.rows.iter().map(|r| r.instances.len()).collect();
    let total = pattern.path_count();
    let sampled = total > path_budget as u128;
    let etas = if sampled { sample_paths(&shape, path_budget, seed) } else { all_paths(&shape) };
    let paths = etas
        .into_par_iter()
        .map(|eta| {
            let conj = pattern.path(&eta);
            let result = solve(g, &conj)?;
            let reevaluated = match &result.witness {
                Some(w) => evaluate_conj(g, &conj, w)?,
                None => false,
            };
            let constructed = pattern.constructed_witness(&eta);
            let constructed_ok = constructed
                .as_ref()
                .map(|w| evaluate_conj(g, &conj, w))
                .transpose()?;
            Ok(PathReport {
                eta,
                status: result.status,
                witness: result.witness.map(|w| w.to_string()),
                reevaluated,
                constructed_witness: constructed.map(|w| w.to_string()),
                constructed_ok,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let unknowns = rows.iter().filter(|r| r.verdict == KVerdict::Unknown).count()
        + paths.iter().filter(|p| p.status == Status::Unknown).count();
    let verified = rows.iter().all(|r| r.verdict == KVerdict::Inconsistent)
        && paths.iter().all(|p| p.status == Status::Sat && p.reevaluated);
    Ok(VerificationReport {
        verified,
        depth: pattern.depth(),
        rows,
        paths,
        total_paths: total.to_string(),
        sampled,
        unknowns,
        structural: Structural {
            sp_lemma: check_sp_lemma(pattern),
            convex_rows: count_convex_rows(pattern),
        },
        seed,
    })
}

/// A row consisting of one congruence `kx ≡_{m,α} t`.
fn type_i_row(row: &PatternRow) -> Option<(u64, ConvexCut)> {
    match row.template.as_slice() {
        [Literal { relation: Relation::Cong { modulus, cut }, .. }] => Some((*modulus, *cut)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpViolation {
    pub rows: (usize, usize),
    pub p: u64,
    pub reason: String,
}

/// Pairs of single-congruence rows sharing a prime `p` with
/// `G_α ⊆ G_α'` but without `ℓ < ℓ'` or without a `p`-sort `β` satisfying
/// `G_α ⊆ G_β ⊊ G_α'`.
pub fn sp_lemma_violations(pattern: &InpPattern) -> Vec<SpViolation> {
    let g = &pattern.group;
    let rows: Vec<(usize, u64, ConvexCut)> = pattern
        .rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| type_i_row(r).map(|(m, c)| (i, m, c)))
        .collect();
    let mut out = Vec::new();
    for &(i, m, a) in &rows {
        for &(i2, m2, a2) in &rows {
            if i == i2 || !a.is_subgroup_of(a2) {
                continue;
            }
            for (p, l) in factorize(m) {
                let l2 = valuation_u64(m2, p);
                if l2 == 0 {
                    continue;
                }
                if l >= l2 {
                    out.push(SpViolation {
                        rows: (i, i2),
                        p,
                        reason: format!("exponents {l} and {l2} are not increasing"),
                    });
                    continue;
                }
                let found = sorts(g, p)
                    .into_iter()
                    .any(|b| a.is_subgroup_of(b) && b.is_proper_subgroup_of(a2));
                if !found {
                    out.push(SpViolation {
                        rows: (i, i2),
                        p,
                        reason: format!("no sort between {a} and {a2}"),
                    });
                }
            }
        }
    }
    out
}

pub fn check_sp_lemma(pattern: &InpPattern) -> bool {
    sp_lemma_violations(pattern).is_empty()
}

/// Rows whose template literals are all order or exact-coset literals.
pub fn count_convex_rows(pattern: &InpPattern) -> usize {
    pattern.rows.iter().filter(|r| r.is_convex()).count()
}
