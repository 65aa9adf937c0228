#![allow(dead_code)]

use std::collections::BTreeSet;

use nlsnf::hamcore::{rat, ratio, Coeff, Hamiltonian, MonoKey, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every conservative key of degree 2 or 4 with modes in `[-k, k]`.
pub fn keys(k: i32) -> Vec<MonoKey> {
    let mut out = BTreeSet::new();
    for a in -k..=k {
        out.insert(MonoKey::from_pairs(&[(a, 1), (a, -1)], 0).unwrap());
        for b in -k..=k {
            for c in -k..=k {
                let d = a + b - c;
                if d.abs() > k {
                    continue;
                }
                let key = MonoKey::from_pairs(&[(a, 1), (b, 1), (c, -1), (d, -1)], 0).unwrap();
                out.insert(key);
            }
        }
    }
    out.into_iter().collect()
}

/// Real Hamiltonian from picked keys: `c·m + c̄·m̄`.
pub fn build(pool: &[MonoKey], picks: &[(usize, i64, i64, bool)]) -> Hamiltonian {
    let mut h = Hamiltonian::new();
    for &(i, re, im, massive) in picks {
        let key = pool[i % pool.len()].clone();
        let key = if massive { key.with_mass_power(1) } else { key };
        let c = Coeff::new(rat(re), rat(im)).scale(&ratio(1, 4));
        let mut t = Hamiltonian::new();
        if key == key.conj() {
            t.insert(key, Coeff::real(c.re.clone() * rat(2))).unwrap();
        } else {
            t.insert(key.conj(), c.conj()).unwrap();
            t.insert(key, c).unwrap();
        }
        h.add_assign(&t);
    }
    h
}

/// `(pool index, re, im, carries ‖u‖²)` picks drawn from a seeded generator.
pub fn random_picks(rng: &mut ChaCha8Rng, massive: bool) -> Vec<(usize, i64, i64, bool)> {
    let n = rng.gen_range(1..5);
    (0..n).map(|_| (rng.gen_range(0..10_000), rng.gen_range(-4..=4), rng.gen_range(-4..=4), massive && rng.gen_bool(0.3))).collect()
}

pub fn state(k: usize, seed: u64, norm: f64) -> State {
    State::random(k, k, norm, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `½Σ(k² − |u_k|²/2)|u_k|² + ½(Σ|u_k|²)²`, assembled term by term.
pub fn quartic_target(cutoff: i32) -> Hamiltonian {
    let mut h = Hamiltonian::z2(cutoff);
    for k in -cutoff..=cutoff {
        h.insert(MonoKey::action(k, 2), Coeff::from_ratio(-1, 4)).unwrap();
    }
    h.add_assign(&Hamiltonian::mass(cutoff).pow(2).scale(&Coeff::from_ratio(1, 2)));
    h
}
