use std::f64::consts::PI;

use nlsnf::hamcore::{evaluate, State, C64};
use nlsnf::nlsham::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Trapezoidal rule for `∫|u|^{2q} dx/2π`, exact once the grid resolves frequency `2qK`.
fn quadrature_lp(state: &State, q: u32) -> f64 {
    let k = state.cutoff() as i32;
    let m = 4 * q as usize * k as usize + 1;
    let mut total = 0.0;
    for j in 0..m {
        let x = 2.0 * PI * j as f64 / m as f64;
        let mut u = C64::new(0.0, 0.0);
        for mode in -k..=k {
            u += state.get(mode) * C64::from_polar(1.0, mode as f64 * x);
        }
        total += u.norm_sqr().powi(q as i32);
    }
    total / m as f64
}

#[test]
fn lp_norm_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (q, k) in [(2, 8), (3, 5), (4, 4)] {
        let h = expand_lp_norm(q, k);
        for _ in 0..5 {
            let s = State::random(k as usize, k as usize, 1.3, &mut rng);
            let exact = quadrature_lp(&s, q);
            let val = evaluate(&h, &s).unwrap();
            assert!((val - exact).abs() <= 1e-10 * exact, "q={q}: {val} vs {exact}");
        }
    }
}

#[test]
fn wick_identity_is_exact_for_small_orders() {
    for p in 2..=3 {
        assert!(wick_identity_difference(p, 4).unwrap().is_empty(), "p = {p}");
    }
}

#[test]
fn wick_identity_numeric_p2() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let s = State::random(8, 4, 1.0, &mut rng);
        assert!(wick_identity_residual(2, 8, &s).unwrap() <= 1e-12);
    }
    assert_eq!(wick_identity_residual(3, 4, &State::zeros(4)).unwrap(), 0.0);
}

#[test]
fn wick_blocks_are_overpaired_and_bounded() {
    for p in 0..=3 {
        let b = wick_hamiltonian(p, 4);
        assert!(overpairing_report(&b).pass, "p = {p}");
        let r = coefficient_bound_report(&b);
        assert!(r.pass, "p = {p}: {r:?}");
    }
}

#[test]
fn cubic_quartic_part_at_zero_mode() {
    let h = build_nls_hamiltonian(&NonlinearitySpec::cubic(), 4, 2).unwrap();
    let mut s = State::zeros(4);
    s.set(0, C64::new(1.0, 0.0));
    assert!((evaluate(&h.homogeneous(4), &s).unwrap() - 0.25).abs() < 1e-15);
    let rotated = State::random(4, 4, 0.5, &mut ChaCha8Rng::seed_from_u64(9));
    let mut turned = rotated.clone();
    for z in turned.amplitudes_mut() {
        *z *= C64::from_polar(1.0, 0.7);
    }
    let (a, b) = (evaluate(&h, &rotated).unwrap(), evaluate(&h, &turned).unwrap());
    assert!((a - b).abs() < 1e-14);
}
