//! Poisson bracket.
//!
//! Convention used throughout the crate: the Hamiltonian flow of `H` is
//! `u̇_k = −i (∇H)_k = −2i ∂H/∂ū_k` (Wirtinger derivative), which is
//! `i∂_t u = ∇H` for the `L²` gradient and reproduces `i∂_t u + ∂_x² u = f(|u|²)u`
//! with `Z₂ = ½Σk²|u_k|²`. The bracket is fixed by `Ḟ = {F, H}`:
//!
//! ```text
//! {F, G} = 2i Σ_k ( ∂F/∂ū_k ∂G/∂u_k − ∂F/∂u_k ∂G/∂ū_k ),
//! ```
//!
//! so that `{Z₂, m} = iΩ_m m` with `Ω_m = Σ_j σ_j ℓ_j²`.
//!
//! Mass-power prefactors commute with every zero-mass monomial
//! (`{‖u‖², m} = 0`), so they simply add under the bracket.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::hamcore::coeff::{rat, Coeff};
use crate::hamcore::hamiltonian::{min_bound, Hamiltonian, Truncation};
use crate::hamcore::monomial::MonoKey;

/// `{a, b}` with the tighter of the two degree bounds.
pub fn poisson_bracket(a: &Hamiltonian, b: &Hamiltonian) -> Hamiltonian {
    poisson_bracket_bounded(a, b, min_bound(a.degree_bound(), b.degree_bound()))
}

/// `{a, b}` keeping only terms of degree `≤ bound`; the rest is counted in the
/// result's truncation record.
pub fn poisson_bracket_bounded(a: &Hamiltonian, b: &Hamiltonian, bound: Option<u32>) -> Hamiltonian {
    // Index b's terms by mode.
    let b_terms: Vec<(&MonoKey, &Coeff)> = b.terms().collect();
    let mut by_mode: HashMap<i32, Vec<usize>> = HashMap::new();
    for (idx, (key, _)) in b_terms.iter().enumerate() {
        for f in key.factors() {
            by_mode.entry(f.mode).or_default().push(idx);
        }
    }
    let two_i = Coeff::imag(rat(2));
    let a_terms: Vec<(&MonoKey, &Coeff)> = a.terms().collect();

    let (acc, trunc) = a_terms
        .par_iter()
        .fold(
            || (HashMap::<MonoKey, Coeff>::new(), Truncation::default()),
            |(mut acc, mut trunc), &(ka, ca)| {
                let ca2 = ca * &two_i;
                for fa in ka.factors() {
                    let Some(partners) = by_mode.get(&fa.mode) else { continue };
                    for &idx in partners {
                        let (kb, cb) = b_terms[idx];
                        let fb = kb.factor(fa.mode).expect("indexed mode present");
                        // ∂_ū a · ∂_u b − ∂_u a · ∂_ū b at this mode.
                        let weight = i64::from(fa.minus) * i64::from(fb.plus) - i64::from(fa.plus) * i64::from(fb.minus);
                        if weight == 0 {
                            continue;
                        }
                        let deg = ka.degree() + kb.degree() - 2;
                        if bound.is_some_and(|bd| deg > bd) {
                            trunc.record(deg);
                            continue;
                        }
                        let key = ka.contract(kb, fa.mode);
                        let c = (&ca2 * cb).scale(&rat(weight));
                        *acc.entry(key).or_default() += &c;
                    }
                }
                (acc, trunc)
            },
        )
        .reduce(
            || (HashMap::new(), Truncation::default()),
            |(mut a1, mut t1), (a2, t2)| {
                if a1.len() < a2.len() {
                    return merge_into(a2, a1, t2, t1);
                }
                for (k, c) in a2 {
                    *a1.entry(k).or_default() += &c;
                }
                t1.merge(&t2);
                (a1, t1)
            },
        );
    Hamiltonian::from_accumulator(acc, bound, trunc)
}

fn merge_into(
    mut big: HashMap<MonoKey, Coeff>,
    small: HashMap<MonoKey, Coeff>,
    mut t_big: Truncation,
    t_small: Truncation,
) -> (HashMap<MonoKey, Coeff>, Truncation) {
    for (k, c) in small {
        *big.entry(k).or_default() += &c;
    }
    t_big.merge(&t_small);
    (big, t_big)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Zero;

    #[test]
    fn bracket_of_actions_with_monomial() {
        // ∂_ū1|u1|² · ∂_u1(u1ū2) = u1ū2 and ∂_u1|u1|² · ∂_ū1(u1ū2) = 0, so the bracket is 2i·u1ū2.
        // The test monomial is not conservative, hence the unchecked insert.
        let a = Hamiltonian::mass(1).filter(|k, _| k.factors()[0].mode == 1);
        let mut b = Hamiltonian::new();
        b.insert_unchecked(MonoKey::from_pairs(&[(1, 1), (2, -1)], 0).unwrap(), Coeff::from_int(1));
        let br = poisson_bracket(&a, &b);
        assert_eq!(br.len(), 1);
        let (k, c) = br.terms().next().unwrap();
        assert_eq!(k.pairs(), vec![(2, -1), (1, 1)]);
        assert_eq!(*c, Coeff::imag(rat(2)));
    }

    #[test]
    fn z2_bracket_is_divisor_times_i() {
        let m = Hamiltonian::monomial(&[(3, 1), (1, -1), (-1, 1), (1, -1)], 0, Coeff::from_int(1)).unwrap();
        let br = poisson_bracket(&Hamiltonian::z2(4), &m);
        let (k, _) = m.terms().next().unwrap();
        assert_eq!(br.coeff(k), Coeff::imag(rat(k.divisor())));
        assert_eq!(br.len(), 1);
    }

    #[test]
    fn mass_commutes_with_conservative_monomials() {
        let m = Hamiltonian::monomial(&[(2, 1), (1, 1), (3, -1), (0, -1)], 1, Coeff::from_ratio(3, 5)).unwrap();
        assert!(poisson_bracket(&Hamiltonian::mass(4), &m).is_empty());
        let c = Hamiltonian::monomial(&[], 2, Coeff::from_int(1)).unwrap();
        assert!(poisson_bracket(&c, &m).is_empty());
    }

    #[test]
    fn bound_records_truncation() {
        let a = Hamiltonian::monomial(&[(2, 1), (1, 1), (3, -1), (0, -1)], 0, Coeff::from_int(1)).unwrap();
        let b = Hamiltonian::monomial(&[(3, 1), (0, 1), (2, -1), (1, -1)], 0, Coeff::from_int(1)).unwrap();
        let full = poisson_bracket_bounded(&a, &b, None);
        assert!(!full.is_empty());
        let cut = poisson_bracket_bounded(&a, &b, Some(4));
        assert!(cut.is_empty());
        assert!(cut.truncation().dropped_terms > 0);
        assert_eq!(cut.truncation().max_dropped_degree, 6);
        assert!(!full.coeff(full.terms().next().unwrap().0).is_zero());
    }
}
