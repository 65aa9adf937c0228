mod common;

use common::{build, keys, state};
use nlsnf::hamcore::{poisson_bracket, rat, Coeff, Hamiltonian, NumericHamiltonian, C64};
use proptest::prelude::*;

fn picks(massive: bool) -> impl Strategy<Value = Vec<(usize, i64, i64, bool)>> {
    prop::collection::vec((0usize..10_000, -4i64..=4, -4i64..=4, prop::bool::weighted(if massive { 0.3 } else { 0.0 })), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_antisymmetric_and_conservative(a in picks(true), b in picks(true)) {
        let pool = keys(3);
        let (a, b) = (build(&pool, &a), build(&pool, &b));
        let ab = poisson_bracket(&a, &b);
        let ba = poisson_bracket(&b, &a);
        prop_assert!(ab.add(&ba).is_empty());
        for (key, c) in ab.terms() {
            prop_assert!(key.check_conservation().is_ok());
            prop_assert!(c.abs_f64() > 0.0);
        }
    }

    #[test]
    fn jacobi_identity(a in picks(false), b in picks(false), c in picks(false)) {
        let pool = keys(3);
        let (a, b, c) = (build(&pool, &a), build(&pool, &b), build(&pool, &c));
        let j = poisson_bracket(&a, &poisson_bracket(&b, &c))
            .add(&poisson_bracket(&b, &poisson_bracket(&c, &a)))
            .add(&poisson_bracket(&c, &poisson_bracket(&a, &b)));
        prop_assert!(j.is_empty());
    }

    #[test]
    fn bracket_is_the_derivative_along_the_flow(f in picks(true), h in picks(true), seed in 0u64..1000) {
        let pool = keys(3);
        let (f, h) = (build(&pool, &f), build(&pool, &h));
        let fb = NumericHamiltonian::compile(&poisson_bracket(&f, &h), 3).unwrap();
        let (fnum, hnum) = (NumericHamiltonian::compile(&f, 3).unwrap(), NumericHamiltonian::compile(&h, 3).unwrap());
        let u = state(3, seed, 0.8);
        let x = hnum.vector_field(&u).unwrap();
        let step = 1e-4;
        let shifted = |s: f64| {
            let mut v = u.clone();
            for (z, d) in v.amplitudes_mut().iter_mut().zip(x.amplitudes()) {
                *z += s * d;
            }
            fnum.evaluate(&v).unwrap()
        };
        let fd = (shifted(step) - shifted(-step)) / (2.0 * step);
        let exact = fb.evaluate(&u).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "fd {} exact {}", fd, exact);
    }

    #[test]
    fn gradient_matches_finite_differences(h in picks(true), seed in 0u64..1000) {
        let pool = keys(4);
        let h = NumericHamiltonian::compile(&build(&pool, &h), 4).unwrap();
        let u = state(4, seed, 1.0);
        let g = h.gradient(&u).unwrap().full;
        let step = 1e-6;
        let scale = g.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-3);
        for k in -4..=4 {
            let probe = |d: C64| {
                let mut v = u.clone();
                v.set(k, u.get(k) + d);
                h.evaluate(&v).unwrap()
            };
            let dx = (probe(C64::new(step, 0.0)) - probe(C64::new(-step, 0.0))) / (2.0 * step);
            let dy = (probe(C64::new(0.0, step)) - probe(C64::new(0.0, -step))) / (2.0 * step);
            // ∂/∂ū = ½(∂_x + i∂_y)
            let fd = C64::new(dx, dy) * 0.5;
            prop_assert!((fd - g.get(k)).norm() <= 1e-6 * scale, "mode {} fd {} got {}", k, fd, g.get(k));
        }
    }
}

#[test]
fn divisor_relation_up_to_degree_six() {
    let k = 3;
    let z2 = Hamiltonian::z2(k);
    let mut checked = 0;
    for a in -k..=k {
        for b in -k..=k {
            for c in -k..=k {
                for d in -k..=k {
                    for e in -k..=k {
                        let f = a + b + c - d - e;
                        if f.abs() > k {
                            continue;
                        }
                        let pairs = [(a, 1), (b, 1), (c, 1), (d, -1), (e, -1), (f, -1)];
                        let m = Hamiltonian::monomial(&pairs, 0, Coeff::from_int(1)).unwrap();
                        let key = m.terms().next().unwrap().0.clone();
                        let br = poisson_bracket(&z2, &m);
                        let want = m.scale(&Coeff::imag(rat(key.divisor())));
                        assert_eq!(br, want, "{pairs:?}");
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 1000);
}
