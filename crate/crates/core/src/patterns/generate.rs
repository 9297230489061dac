use std::collections::BTreeSet;

use super::{InpPattern, PatternRow};
use crate::arith::{is_prime, int, Rational};
use crate::convex::{hsub, ConvexCut};
use crate::error::{OagError, Result};
use crate::formula::{Cmp, Literal, Term};
use crate::group::{q, BlockKind, GroupSpec};

fn pow(p: u64, e: u32) -> Result<u64> {
    p.checked_pow(e)
        .ok_or_else(|| OagError::InvalidInput(format!("{p}^{e} overflows")))
}

/// Chain pattern of depth `n` and width `m` over `PSPAN(p)^{(n+1)(m+1)}`.
///
/// Counting from the least significant coordinate, `e_1, f_{1,1..m}, e_2,
/// ...` are `b0` units. Row `i` is `x ≡_{p^{i+1}, H_p(e_i)} p^i f_{i,j}`.
pub fn gen_chain_pattern(p: u64, n: usize, m: usize) -> Result<(GroupSpec, InpPattern)> {
    if n == 0 || m == 0 {
        return Err(OagError::InvalidInput("depth and width must be positive".into()));
    }
    if !is_prime(p) {
        return Err(OagError::NotPrime(p));
    }
    let k = (n + 1) * (m + 1);
    let g = GroupSpec::new(vec![BlockKind::PSpan(p); k])?;
    let coord = |r: usize| k - 1 - r;
    let mut rows = Vec::new();
    let mut parts = Vec::new();
    for i in 1..=n {
        let r = (i - 1) * (m + 1);
        let e = g.unit(coord(r), 0);
        let alpha = hsub(&g, &e, p);
        let scale = i64::try_from(pow(p, i as u32)?)
            .map_err(|_| OagError::InvalidInput("chain too deep".into()))?;
        let cs = (1..=m)
            .map(|j| g.scale(scale, &g.unit(coord(r + j), 0)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(PatternRow {
            template: vec![Literal::cong(1, pow(p, i as u32 + 1)?, alpha, Term::param(0))?],
            instances: cs.iter().map(|c| vec![c.clone()]).collect(),
            k: 2,
        });
        parts.push(cs);
    }
    let mut pat = InpPattern::new(g.clone(), rows)?;
    pat.witness_parts = Some(parts);
    Ok((g, pat))
}

/// Pattern of depth `1 + Σ k_i` over `Q ⊕ ⊕_i PSPAN(p_i)^{k_i}` with
/// `grid` columns per row.
pub fn gen_optimal_pattern(
    primes: &[u64],
    mults: &[usize],
    grid: usize,
) -> Result<(GroupSpec, InpPattern)> {
    if primes.is_empty() || primes.len() != mults.len() {
        return Err(OagError::InvalidInput("need one multiplicity per prime".into()));
    }
    if grid < 2 {
        return Err(OagError::InvalidInput("grid must be at least 2".into()));
    }
    if primes.iter().collect::<BTreeSet<_>>().len() != primes.len() {
        return Err(OagError::InvalidInput("primes must be distinct".into()));
    }
    if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
        return Err(OagError::NotPrime(p));
    }
    if mults.contains(&0) {
        return Err(OagError::InvalidInput("multiplicities must be positive".into()));
    }
    let mut blocks = vec![BlockKind::Rat];
    for (&p, &k) in primes.iter().zip(mults) {
        blocks.extend(std::iter::repeat(BlockKind::PSpan(p)).take(k));
    }
    let g = GroupSpec::new(blocks)?;
    let n = g.len();

    let mut rows = Vec::new();
    let mut parts = Vec::new();
    let mut base = 1;
    for (&p, &k) in primes.iter().zip(mults) {
        for j in 0..k {
            let coordinate = base + k - 1 - j;
            let cut = if j == 0 { ConvexCut(n) } else { ConvexCut(base + k - j) };
            let scale = int(i64::try_from(pow(p, j as u32)?).expect("small power"));
            let es: Vec<_> = (0..grid).map(|s| g.basis_multiple(coordinate, s, scale.clone())).collect();
            rows.push(PatternRow {
                template: vec![Literal::cong(1, pow(p, j as u32 + 1)?, cut, Term::param(0))?],
                instances: es.iter().map(|e| vec![e.clone()]).collect(),
                k: 2,
            });
            parts.push(es);
        }
        base += k;
    }

    let rational = |v: Rational| g.basis_multiple(0, 0, v);
    let interval = PatternRow {
        template: vec![
            Literal::ord(1, Cmp::Gt, Term::param(0))?,
            Literal::ord(1, Cmp::Lt, Term::param(1))?,
        ],
        instances: (0..grid as i64)
            .map(|s| vec![rational(int(s)), rational(int(s) + q(1, 2))])
            .collect(),
        k: 2,
    };
    rows.push(interval);
    parts.push((0..grid as i64).map(|s| rational(int(s) + q(1, 4))).collect());

    let mut pat = InpPattern::new(g.clone(), rows)?;
    pat.witness_parts = Some(parts);
    Ok((g, pat))
}

/// Recovers `(p_i, k_i)` from a spec of the form `lex(Q, Gp(p_0)^k_0, ...)`.
pub fn optimal_shape(g: &GroupSpec) -> Result<(Vec<u64>, Vec<usize>)> {
    let bad = || OagError::InvalidInput(format!("{g} is not of the form lex(Q, Gp(p)^k, ...)"));
    let (first, rest) = g.blocks().split_first().ok_or_else(bad)?;
    if *first != BlockKind::Rat || rest.is_empty() {
        return Err(bad());
    }
    let mut primes: Vec<u64> = Vec::new();
    let mut mults: Vec<usize> = Vec::new();
    for b in rest {
        let BlockKind::PSpan(p) = *b else { return Err(bad()) };
        if primes.last() == Some(&p) {
            *mults.last_mut().unwrap() += 1;
        } else if primes.contains(&p) {
            return Err(bad());
        } else {
            primes.push(p);
            mults.push(1);
        }
    }
    Ok((primes, mults))
}
