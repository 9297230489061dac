//! Equivalence-preserving rewrites bringing a congruence `kx ≡_{m,α} t`
//! to the normal form `x ≡_{p^l,α} t'` (one literal per prime power).

use std::fmt;

use crate::arith::{self, prime_power};
use crate::convex::{in_coset, in_subgroup, ConvexCut};
use crate::error::{OagError, Result};
use crate::group::{BlockElement, Element, GroupSpec};

use super::{Literal, Relation, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteStep {
    CrtSplit { input: Literal, output: Vec<Literal> },
    ReduceKPrime { input: Literal, output: Literal, p: u64, witness: usize },
    UnitNormalize { input: Literal, output: Literal, s: i64 },
}

impl fmt::Display for RewriteStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewriteStep::CrtSplit { input, output } => {
                write!(f, "crt_split: {input} => [")?;
                for (i, l) in output.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{l}")?;
                }
                write!(f, "]")
            }
            RewriteStep::ReduceKPrime { input, output, p, witness } => {
                write!(f, "reduce_k_prime(p={p}, a{witness}): {input} => {output}")
            }
            RewriteStep::UnitNormalize { input, output, s } => {
                write!(f, "unit_normalize(s={s}): {input} => {output}")
            }
        }
    }
}

fn cong_parts(lit: &Literal) -> Result<(u64, ConvexCut)> {
    match lit.relation {
        Relation::Cong { modulus, cut } => Ok((modulus, cut)),
        _ => Err(OagError::InvalidInput(format!("{lit} is not a congruence"))),
    }
}

/// Splits the modulus into prime powers, smallest prime first. A modulus of
/// 1 gives the empty list.
pub fn crt_split(lit: &Literal) -> Result<Vec<Literal>> {
    let (m, cut) = cong_parts(lit)?;
    Ok(arith::factorize(m)
        .into_iter()
        .map(|(p, e)| Literal {
            relation: Relation::Cong { modulus: p.pow(e), cut },
            ..lit.clone()
        })
        .collect())
}

/// `kx ≡_{p^l,α} t  ⇔  (k/p)x ≡_{p^(l-1),α} a'` whenever `t − p·a' ∈ G_α`.
///
/// `a_prime` is appended to `params` and referenced by the returned literal.
pub fn reduce_k_prime(
    g: &GroupSpec,
    lit: &Literal,
    a_prime: &Element,
    params: &mut Vec<Element>,
) -> Result<Literal> {
    let (m, cut) = cong_parts(lit)?;
    let (p, _) = prime_power(m)
        .ok_or_else(|| OagError::Precondition(format!("modulus {m} is not a prime power")))?;
    if lit.k % p as i64 != 0 {
        return Err(OagError::Precondition(format!("{p} does not divide {}", lit.k)));
    }
    g.check(a_prime)?;
    let t = lit.term.value(g, params)?;
    let rest = g.sub(&t, &g.scale(p as i64, a_prime)?)?;
    if !in_subgroup(&rest, cut) {
        return Err(OagError::Precondition(format!(
            "term is not in {p}·{a_prime} + G_{cut}"
        )));
    }
    params.push(a_prime.clone());
    Literal::cong(lit.k / p as i64, m / p, cut, Term::param(params.len() - 1))
}

/// The `s` with `s·k ≡ 1 (mod p^l)`, taken in `[1, p^l)`.
fn unit_multiplier(lit: &Literal) -> Result<i64> {
    let (m, _) = cong_parts(lit)?;
    if m == 1 {
        return Ok(1);
    }
    if prime_power(m).is_none() {
        return Err(OagError::Precondition(format!("modulus {m} is not a prime power")));
    }
    arith::mod_inverse(lit.k as i128, m as i128)
        .map(|s| s as i64)
        .ok_or_else(|| OagError::Precondition(format!("{} is not a unit modulo {m}", lit.k)))
}

/// `kx ≡_{p^l,α} t  ⇔  x ≡_{p^l,α} s·t` where `s·k ≡ 1 (mod p^l)`.
pub fn unit_normalize(lit: &Literal) -> Result<Literal> {
    let (m, cut) = cong_parts(lit)?;
    let s = unit_multiplier(lit)?;
    Literal::cong(1, m, cut, lit.term.scaled(s))
}

/// A normalized congruence with the rewrite chain that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub literals: Vec<Literal>,
    pub steps: Vec<RewriteStep>,
}

/// `a'` with `t − p·a' ∈ G_cut`, read off from the value of `t`.
fn derive_witness(g: &GroupSpec, t: &Element, cut: ConvexCut, p: u64) -> Result<Element> {
    if !in_coset(g, t, cut, p) {
        return Err(OagError::NotNormalizable(format!(
            "term value {t} is not in {p}G + G_{cut}, so the literal is unsatisfiable"
        )));
    }
    let head: Vec<BlockElement> = t
        .coords()
        .iter()
        .enumerate()
        .map(|(i, c)| if i < cut.index() { c.clone() } else { BlockElement::zero(g.block(i)) })
        .collect();
    g.divide_exact(&Element::from_coords(head), p)
}

/// Composes [`crt_split`], repeated [`reduce_k_prime`] and [`unit_normalize`].
///
/// `hints` supply the `a'` elements consumed by `reduce_k_prime`, in order;
/// once they run out, witnesses are derived from the parameter values.
pub fn normalize_type_i(
    g: &GroupSpec,
    lit: &Literal,
    hints: &[Element],
    params: &mut Vec<Element>,
) -> Result<Normalized> {
    let (m, _) = cong_parts(lit)?;
    let mut steps = Vec::new();
    let pieces = if prime_power(m).is_some() {
        vec![lit.clone()]
    } else {
        let out = crt_split(lit)?;
        steps.push(RewriteStep::CrtSplit { input: lit.clone(), output: out.clone() });
        out
    };
    let mut hints = hints.iter();
    let mut literals = Vec::new();
    for piece in pieces {
        let mut cur = piece;
        loop {
            let (m, cut) = cong_parts(&cur)?;
            let Some((p, _)) = prime_power(m) else { break };
            if cur.k % p as i64 != 0 {
                break;
            }
            let witness = match hints.next() {
                Some(h) => h.clone(),
                None => derive_witness(g, &cur.term.value(g, params)?, cut, p)?,
            };
            let next = reduce_k_prime(g, &cur, &witness, params)?;
            steps.push(RewriteStep::ReduceKPrime {
                input: cur,
                output: next.clone(),
                p,
                witness: params.len() - 1,
            });
            cur = next;
        }
        if cur.k != 1 {
            let s = unit_multiplier(&cur)?;
            let next = unit_normalize(&cur)?;
            steps.push(RewriteStep::UnitNormalize { input: cur, output: next.clone(), s });
            cur = next;
        }
        literals.push(cur);
    }
    Ok(Normalized { literals, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::evaluate;
    use crate::group::{q, BlockKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec() -> GroupSpec {
        GroupSpec::new(vec![
            BlockKind::Rat,
            BlockKind::PSpan(2),
            BlockKind::PSpan(3),
            BlockKind::Int,
        ])
        .unwrap()
    }

    fn random_element(g: &GroupSpec, rng: &mut ChaCha8Rng) -> Element {
        let coords = g
            .blocks()
            .iter()
            .map(|&b| match b {
                BlockKind::Rat => BlockElement::Rat(q(rng.gen_range(-6..=6), rng.gen_range(1..=4))),
                BlockKind::Int => BlockElement::Int(rng.gen_range(-20..=20).into()),
                BlockKind::PSpan(_) => {
                    BlockElement::span((0..3).map(|s| (s, q(rng.gen_range(-9..=9), 1))))
                }
                BlockKind::PLocal(_) => BlockElement::PLocal(q(rng.gen_range(-9..=9), 1)),
            })
            .collect();
        g.element(coords).unwrap()
    }

    fn agree(g: &GroupSpec, a: &[Literal], b: &[Literal], x: &Element, params: &[Element]) -> bool {
        let all = |ls: &[Literal]| ls.iter().all(|l| evaluate(g, l, x, params).unwrap());
        all(a) == all(b)
    }

    #[test]
    fn crt_examples() {
        let cut = ConvexCut(2);
        let lit = Literal::cong(1, 12, cut, Term::param(0)).unwrap();
        let out = crt_split(&lit).unwrap();
        assert_eq!(out.iter().map(|l| l.modulus().unwrap()).collect::<Vec<_>>(), vec![4, 3]);
        let eight = Literal::cong(5, 8, cut, Term::param(0)).unwrap();
        assert_eq!(crt_split(&eight).unwrap(), vec![eight]);
        assert!(crt_split(&Literal::cong(1, 1, cut, Term::zero()).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn crt_is_sound() {
        let g = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let params = vec![random_element(&g, &mut rng), random_element(&g, &mut rng)];
            let m = rng.gen_range(1..=72);
            let lit = Literal::cong(
                rng.gen_range(1..=6),
                m,
                ConvexCut(rng.gen_range(0..=g.len())),
                Term::new([(0, rng.gen_range(-3..=3)), (1, rng.gen_range(-3..=3))]),
            )
            .unwrap();
            let split = crt_split(&lit).unwrap();
            let x = random_element(&g, &mut rng);
            assert!(agree(&g, &[lit], &split, &x, &params));
        }
    }

    #[test]
    fn reduce_examples() {
        let g = spec();
        let cut = ConvexCut(g.len());
        let a = g.unit(1, 1);
        let mut params = vec![g.scale(2, &a).unwrap()];
        let lit = Literal::cong(2, 4, cut, Term::param(0)).unwrap();
        let out = reduce_k_prime(&g, &lit, &a, &mut params).unwrap();
        assert_eq!(out, Literal::cong(1, 2, cut, Term::param(1)).unwrap());
        assert_eq!(params[1], a);

        let lit = Literal::cong(2, 2, ConvexCut(2), Term::param(0)).unwrap();
        let out = reduce_k_prime(&g, &lit, &a, &mut params).unwrap();
        assert_eq!(out.modulus(), Some(1));

        // t = b0 in the 2-span block is not 2·a' + G_K for a' = b1
        let mut params = vec![g.unit(1, 0)];
        let lit = Literal::cong(2, 4, cut, Term::param(0)).unwrap();
        assert!(matches!(
            reduce_k_prime(&g, &lit, &a, &mut params),
            Err(OagError::Precondition(_))
        ));
    }

    #[test]
    fn unit_examples() {
        let cut = ConvexCut(1);
        let t = Term::param(0);
        let l = unit_normalize(&Literal::cong(3, 2, cut, t.clone()).unwrap()).unwrap();
        assert_eq!(l, Literal::cong(1, 2, cut, t.clone()).unwrap());
        let l = unit_normalize(&Literal::cong(3, 4, cut, t.clone()).unwrap()).unwrap();
        assert_eq!(l, Literal::cong(1, 4, cut, t.scaled(3)).unwrap());
        let l = unit_normalize(&Literal::cong(5, 8, cut, t.clone()).unwrap()).unwrap();
        assert_eq!(l, Literal::cong(1, 8, cut, t.scaled(5)).unwrap());
        let id = Literal::cong(1, 9, cut, t.clone()).unwrap();
        assert_eq!(unit_normalize(&id).unwrap(), id);
        assert!(unit_normalize(&Literal::cong(2, 4, cut, t).unwrap()).is_err());
    }

    #[test]
    fn normalize_examples() {
        let g = spec();
        let cut = ConvexCut(2);
        let a_prime = g.basis_multiple(1, 1, q(1, 1));
        let inside = g.unit(2, 0);
        let t = g.add(&g.scale(2, &a_prime).unwrap(), &inside).unwrap();
        let mut params = vec![t];
        let lit = Literal::cong(6, 12, cut, Term::param(0)).unwrap();
        let n = normalize_type_i(&g, &lit, &[a_prime.clone()], &mut params).unwrap();
        assert!(n.literals.iter().all(|l| l.k == 1));
        assert_eq!(
            n.literals.iter().map(|l| l.modulus().unwrap()).collect::<Vec<_>>(),
            vec![2, 1]
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = random_element(&g, &mut rng);
            assert!(agree(&g, &[lit.clone()], &n.literals, &x, &params));
        }

        let normal = Literal::cong(1, 8, cut, Term::param(0)).unwrap();
        let n = normalize_type_i(&g, &normal, &[], &mut params).unwrap();
        assert_eq!(n.literals, vec![normal]);
        assert!(n.steps.is_empty());

        let five = Literal::cong(5, 8, cut, Term::param(0)).unwrap();
        let n = normalize_type_i(&g, &five, &[], &mut params).unwrap();
        assert_eq!(n.literals, vec![Literal::cong(1, 8, cut, Term::new([(0, 5)])).unwrap()]);
    }

    #[test]
    fn normalize_rejects_unsatisfiable_even_multiples() {
        let g = spec();
        let mut params = vec![g.unit(1, 0)];
        let lit = Literal::cong(2, 4, ConvexCut(g.len()), Term::param(0)).unwrap();
        assert!(matches!(
            normalize_type_i(&g, &lit, &[], &mut params),
            Err(OagError::NotNormalizable(_))
        ));
    }
}
