use nlsnf::birkhoff::{birkhoff_normal_form, Selection};
use nlsnf::hamcore::{rat, ratio, Coeff, Hamiltonian, MonoKey, State, C64};
use nlsnf::kamlab::*;
use nlsnf::nlsham::{build_nls_hamiltonian, NonlinearitySpec};
use nlsnf::Error;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(sites: &[i32], xi: &[f64], y_order: u32) -> OpeningSpec {
    OpeningSpec { sites: sites.to_vec(), xi: xi.to_vec(), window: None, y_order }
}

fn key(angle: &[i32], actions: &[u32], ext: &[(i32, i8)], xi_half: &[i32]) -> AAKey {
    AAKey {
        angle: angle.to_vec(),
        actions: actions.to_vec(),
        exterior: MonoKey::from_pairs(ext, 0).unwrap(),
        mass_power: 0,
        xi_half: xi_half.to_vec(),
    }
}

fn cubic(cutoff: i32, rmax: u32) -> Hamiltonian {
    build_nls_hamiltonian(&NonlinearitySpec::cubic(), cutoff, rmax).unwrap()
}

#[test]
fn opening_a_single_factor_is_a_binomial_series() {
    // u₁ ū₂ on its own is not conservative; u₁ u₁ ū₀ ū₂ opened at 1 and 0 carries the same series at site 1.
    let h = Hamiltonian::monomial(&[(1, 1), (0, -1), (2, -1)], 0, Coeff::one());
    assert!(h.is_err());
    let h = Hamiltonian::monomial(&[(1, 1), (1, 1), (0, -1), (2, -1)], 0, Coeff::one()).unwrap();
    let aa = open_sites(&h, &spec(&[0], &[0.1], 3)).unwrap();
    let want = [(1, 0, ratio(1, 1)), (-1, 1, ratio(1, 2)), (-3, 2, ratio(-1, 8)), (-5, 3, ratio(1, 16))];
    assert_eq!(aa.len(), want.len());
    for (h_, m, c) in want {
        let k = key(&[-1], &[m], &[(1, 1), (1, 1), (2, -1)], &[h_]);
        assert_eq!(aa.coeff(&k), Coeff::real(c));
    }
}

#[test]
fn opening_rejects_bad_specs() {
    let h = cubic(3, 2);
    let mut s = spec(&[1], &[0.07], 2);
    s.window = Some(RadiiWindow { r: 0.1, nu: 0.75 });
    assert!(matches!(open_sites(&h, &s), Err(Error::InvalidArgument(_))));
    s.xi = vec![0.04];
    assert!(open_sites(&h, &s).is_ok());
    assert!(matches!(open_sites(&h, &spec(&[5], &[0.1], 2)), Err(Error::ModeOutOfRange { .. })));
    assert!(matches!(open_sites(&h, &spec(&[1], &[0.1], 1)), Err(Error::InvalidArgument(_))));
    let once = open_sites(&h, &spec(&[1], &[0.1], 2)).unwrap();
    assert!(once.open(&spec(&[1], &[0.1], 2)).is_err());
    let twice = once.open(&spec(&[-2], &[0.1], 2)).unwrap();
    assert_eq!(twice.sites(), &[1, -2]);
    twice.check_conservation().unwrap();
}

#[test]
fn chained_opening_matches_joint_opening() {
    let h = cubic(3, 3);
    let joint = open_sites(&h, &spec(&[0, 2], &[0.1, 0.1], 3)).unwrap();
    let chained = open_sites(&h, &spec(&[0], &[0.1], 3)).unwrap().open(&spec(&[2], &[0.1], 3)).unwrap();
    assert_eq!(joint, chained);
}

fn reclose_error(y_order: u32, rho: f64) -> f64 {
    let h = cubic(3, 2);
    let sites = [0, 1];
    let aa = open_sites(&h, &spec(&sites, &[0.1, 0.1], y_order)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut u = State::random(3, 7, 0.6, &mut rng);
    for &s in &sites {
        u.set(s, C64::from_polar(0.3, rng.gen_range(0.0..6.0)));
    }
    let exact = nlsnf::hamcore::evaluate(&h, &u).unwrap();
    let mut ext = u.clone();
    let (mut xi, mut y, mut th) = (vec![], vec![], vec![]);
    for &s in &sites {
        let z = u.get(s);
        // ξ chosen so that y/ξ = rho.
        let a = z.norm_sqr();
        xi.push(a / (1.0 + rho));
        y.push(a - a / (1.0 + rho));
        th.push(z.arg());
        ext.set(s, C64::new(0.0, 0.0));
    }
    let v = aa.evaluate(&xi, &y, &th, &ext, u.mass()).unwrap();
    assert!(v.im.abs() < 1e-12, "imaginary part {}", v.im);
    (v.re - exact).abs()
}

#[test]
fn reclosing_error_scales_with_the_truncation_order() {
    for y_order in [2u32, 3] {
        let e1 = reclose_error(y_order, 0.1);
        let e2 = reclose_error(y_order, 0.05);
        let slope = (e1 / e2).log2();
        println!("yOrder {y_order}: err {e1:e} -> {e2:e}, slope {slope:.3}");
        assert!((slope - f64::from(y_order + 1)).abs() < 0.3, "slope {slope}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn opening_conserves_and_projections_partition(
        mask in 1u8..127,
        y_order in 2u32..4,
    ) {
        let h = cubic(3, 2);
        let sites: Vec<i32> = (-3..=3).filter(|j| mask & (1 << (j + 3)) != 0).take(3).collect();
        let xi = vec![0.1; sites.len()];
        let aa = open_sites(&h, &spec(&sites, &xi, y_order)).unwrap();
        aa.check_conservation().unwrap();
        let nor = project(&aa, Projection::Nor);
        let ajet = project(&aa, Projection::Ajet);
        let rem = project(&aa, Projection::Rem);
        prop_assert_eq!(nor.add(&ajet).add(&rem), aa.clone());
        let int = project(&aa, Projection::Int);
        prop_assert_eq!(project(&int, Projection::Int), int.clone());
        prop_assert!(project(&int, Projection::Ajet).is_empty());
    }
}

#[test]
fn projection_examples() {
    let mut a = AAHamiltonian::new(vec![1], 4);
    a.insert(AAKey { exterior: MonoKey::action(3, 1), ..key(&[0], &[2], &[], &[0]) }, Coeff::one());
    assert_eq!(project(&a, Projection::Int), a);
    let mut b = AAHamiltonian::new(vec![1], 4);
    b.insert(key(&[1], &[0], &[(2, -1), (3, 1)], &[1]), Coeff::one());
    assert_eq!(project(&b, Projection::Ajet), b);
    assert!(project(&b, Projection::Nor).is_empty());
    assert!("nope".parse::<Projection>().is_err());
}

#[test]
fn tbr_selects_by_exterior_degree_away_from_the_new_site() {
    let mut h = AAHamiltonian::new(vec![1], 4);
    let t = Projection::Tbr(TbrParams::new(3));
    // e^{iθ₁} u₃ ū₂ ū₂ : three factors in total, two away from the new site.
    let low = key(&[1], &[0], &[(3, 1), (2, -1), (2, -1)], &[1]);
    let high = key(&[1], &[0], &[(3, 1), (2, -1), (2, -1), (4, 1), (4, -1)], &[1]);
    h.insert(low.clone(), Coeff::one());
    h.insert(high, Coeff::one());
    let p = project(&h, t);
    assert_eq!(p.len(), 1);
    assert_eq!(p.coeff(&low), Coeff::one());
}

/// `½Σ ε^{-2}k²|u_k|² + c·Σ|u_k|⁴`.
fn quadratic_plus_quartic(cutoff: i32, eps: &BigRational, quartic: BigRational) -> Hamiltonian {
    let mut h = Hamiltonian::z2(cutoff).scale_rational(&(BigRational::one() / (eps * eps)));
    for k in -cutoff..=cutoff {
        h.insert(MonoKey::action(k, 2), Coeff::real(quartic.clone())).unwrap();
    }
    h
}

#[test]
fn lambda_vanishes_on_the_unperturbed_hamiltonian() {
    let eps = ratio(1, 100);
    let window: Vec<i32> = (-6..=6).collect();
    // Quadratic part plus ½Σ|u|⁴: frequencies ε^{-2}j² + 2ξ_j, so the default template.
    let h = quadratic_plus_quartic(6, &eps, ratio(1, 2));
    let aa = open_sites(&h, &spec(&[1, 3], &[0.1, 0.1], 2)).unwrap();
    let map = FrequencyMap::from_normal_form(&aa, &window, eps.clone(), rat(2)).unwrap();
    for j in map.modes() {
        assert!(map.lambda(j).unwrap().is_zero(), "λ_{j}");
    }
    // The literal ½Σ(ε^{-2}k² − |u_k|²/2)|u_k|² gives ω_j = ε^{-2}j² − ξ_j.
    let lit = quadratic_plus_quartic(6, &eps, ratio(-1, 4));
    let aa = open_sites(&lit, &spec(&[1, 3], &[0.1, 0.1], 2)).unwrap();
    let map = FrequencyMap::from_normal_form(&aa, &window, eps.clone(), rat(2)).unwrap();
    assert!(!map.lambda(1).unwrap().is_zero());
    let map = FrequencyMap::from_normal_form(&aa, &window, eps.clone(), rat(-1)).unwrap();
    for j in map.modes() {
        assert!(map.lambda(j).unwrap().is_zero(), "λ_{j}");
    }
    let m = lambda_lipschitz_matrix(&map, None, &[0.1, 0.1], 1e-4).unwrap();
    assert_eq!(twist_margin(&m.central), 0.0);
    assert!(LipschitzReport::standard(&m, 0.01).twist_pass);
}

#[test]
fn missing_quadratic_data() {
    let h = Hamiltonian::monomial(&[(1, 1), (2, 1), (0, -1), (3, -1)], 0, Coeff::one()).unwrap();
    let aa = open_sites(&h, &spec(&[1], &[0.1], 2)).unwrap();
    assert!(matches!(
        FrequencyMap::from_normal_form(&aa, &[0], ratio(1, 10), rat(2)),
        Err(Error::MissingQuadraticData(_))
    ));
}

/// Cubic NLS, degree-4 normal form, amplitudes rescaled by ε, opened at `{0}`.
fn nf4_opened(eps: &BigRational) -> (Hamiltonian, FrequencyMap) {
    let h = cubic(5, 2);
    let nf = birkhoff_normal_form(&h, 4, &Selection::default()).unwrap().normal_form;
    let nf = nf.amplitude_rescaled(eps);
    let aa = open_sites(&nf, &spec(&[0], &[0.1], 2)).unwrap();
    let window: Vec<i32> = (-5..=5).collect();
    let map = FrequencyMap::from_normal_form(&aa, &window, eps.clone(), rat(2)).unwrap();
    (nf, map)
}

#[test]
fn degree_four_frequencies_match_numeric_derivatives() {
    let eps = ratio(1, 10);
    let (nf, map) = nf4_opened(&eps);
    let xi = 0.3f64;
    let state = |a0: f64, j: i32, aj: f64| {
        let mut s = State::zeros(5);
        s.set(0, C64::new(a0, 0.0));
        if j != 0 {
            s.set(j, C64::new(aj, 0.0));
        }
        s
    };
    let hval = |s: &State| nlsnf::hamcore::evaluate(&nf, s).unwrap();
    // Site: ω₀ = 2 d/dy H(√(ξ+y)).
    let dy = 1e-5;
    let w0 = (hval(&state((xi + dy).sqrt(), 0, 0.0)) - hval(&state((xi - dy).sqrt(), 0, 0.0))) / dy;
    assert!((w0 - map.eval_omega(0, &[xi]).unwrap()).abs() < 1e-6, "{w0}");
    // Exterior: ω_j = 2 d/d|u_j|² at u_j = 0.
    for j in [-5, -2, 1, 4] {
        let (a, b) = (1e-3f64, 2e-3f64);
        let base = hval(&state(xi.sqrt(), j, 0.0));
        let da = (hval(&state(xi.sqrt(), j, a)) - base) / (a * a);
        let db = (hval(&state(xi.sqrt(), j, b)) - base) / (b * b);
        let wj = 2.0 * (4.0 * da - db) / 3.0;
        assert!((wj - map.eval_omega(j, &[xi]).unwrap()).abs() < 1e-6, "j={j}: {wj}");
    }
    // Frozen: λ₀ = −ξ₀/ε and λ_j = 2ξ₀/ε away from the site.
    let lam0 = map.lambda(0).unwrap();
    assert_eq!(lam0, XiPoly::linear(1, 0, rat(-10)));
    for j in [-5, 2, 3] {
        assert_eq!(map.lambda(j).unwrap(), XiPoly::linear(1, 0, rat(20)));
    }
    // Reassembly is exact.
    for j in map.modes() {
        let back = map.template(j).add(&map.lambda(j).unwrap().scale(&eps));
        assert_eq!(&back, map.omega(j).unwrap());
    }
}

#[test]
fn lipschitz_differences_agree_with_the_exact_derivative() {
    let eps = ratio(1, 10);
    let (_, map) = nf4_opened(&eps);
    let m = lambda_lipschitz_matrix(&map, None, &[0.3], 1e-4).unwrap();
    assert!(m.max_central_exact_gap() < 1e-6, "{}", m.max_central_exact_gap());
    assert!(m.max_central_forward_gap() < 1e-3);
    let rep = LipschitzReport::standard(&m, 0.1);
    assert!(rep.fitted_constant > 0.0);
    // Adding rows can only raise the margin; reordering keeps it.
    let few = lambda_lipschitz_matrix(&map, Some(&[0, 1, 2]), &[0.3], 1e-4).unwrap();
    let rev = lambda_lipschitz_matrix(&map, Some(&[2, 1, 0]), &[0.3], 1e-4).unwrap();
    assert!(twist_margin(&few.central) <= twist_margin(&m.central));
    assert!((twist_margin(&few.central) - twist_margin(&rev.central)).abs() < 1e-12);
}

fn resonance_line_map() -> FrequencyMap {
    let h = quadratic_plus_quartic(4, &rat(1), ratio(1, 2)).filter(|k, _| k.degree() == 4);
    let aa = open_sites(&h, &spec(&[1, 2], &[0.04, 0.04], 2)).unwrap();
    FrequencyMap::from_normal_form(&aa, &[], rat(1), rat(0)).unwrap()
}

fn line_config(gamma: f64, samples: u64) -> SmallDivisorConfig {
    SmallDivisorConfig {
        k_list: Some(vec![vec![1, -1]]),
        conservative_only: false,
        gamma,
        samples,
        seed: 5,
        ..SmallDivisorConfig::default()
    }
}

#[test]
fn small_divisor_measure_is_linear_on_a_resonance_line() {
    let map = resonance_line_map();
    assert_eq!(small_divisor_bad_measure(&map, &line_config(0.0, 2000)).unwrap().bad, 0);
    let gammas = [0.01, 0.02, 0.04, 0.08];
    let fr: Vec<f64> = gammas
        .iter()
        .map(|&g| small_divisor_bad_measure(&map, &line_config(g, 100_000)).unwrap().fraction)
        .collect();
    for w in fr.windows(2) {
        assert!(w[1] >= w[0]);
    }
    let (mx, my) = (gammas.iter().sum::<f64>() / 4.0, fr.iter().sum::<f64>() / 4.0);
    let slope = gammas.iter().zip(&fr).map(|(g, f)| (g - mx) * (f - my)).sum::<f64>()
        / gammas.iter().map(|g| (g - mx).powi(2)).sum::<f64>();
    println!("fractions {fr:?}, slope {slope:.3}");
    assert!(slope > 0.5 && slope < 2.0);
}

#[test]
fn small_divisor_sampling_is_reproducible() {
    let map = resonance_line_map();
    let a = small_divisor_bad_measure(&map, &line_config(0.05, 5000)).unwrap();
    let b = small_divisor_bad_measure(&map, &line_config(0.05, 5000)).unwrap();
    assert_eq!(a.bad, b.bad);
    assert_eq!(a.worst, b.worst);
    assert!(a.ci_low <= a.fraction && a.fraction <= a.ci_high);
    assert!(small_divisor_bad_measure(&map, &line_config(0.05, 0)).is_err());
}

#[test]
fn small_divisor_with_exterior_modes() {
    let eps = ratio(1, 10);
    let (_, map) = nf4_opened(&eps);
    let cfg = SmallDivisorConfig { d: 2, k_box: 2, gamma: 0.01, samples: 2000, seed: 1, ..SmallDivisorConfig::default() };
    let r = small_divisor_bad_measure(&map, &cfg).unwrap();
    assert!(r.candidates > 0);
    assert!(r.worst.is_some());
}

#[test]
fn sparsity_trends() {
    let v = sparsity_trend(&doubly_exponential(8)).unwrap();
    println!("doubly exponential: {:?}", v.values);
    assert!(v.increments_shrink());
    assert!(v.values[7] < 8.0 * v.values[0]);
    let arith: Vec<BigInt> = (1..=200).map(BigInt::from).collect();
    let a = sparsity_trend(&arith).unwrap();
    println!("arithmetic: P=50 {:.4}, P=100 {:.4}, P=200 {:.4}", a.values[49], a.values[99], a.values[199]);
    assert!(a.increments.iter().all(|&d| d > 0.0));
    assert!(a.values[199] - a.values[99] > 0.5);
}

#[test]
fn preconditioning_shrinks_the_terms_to_remove() {
    let h = cubic(4, 2);
    let site_xi = [0.01];
    let aa = open_sites(&h, &spec(&[1], &site_xi, 2)).unwrap();
    let window: Vec<i32> = (-4..=4).collect();
    let map = FrequencyMap::from_normal_form(&aa, &window, rat(1), rat(2)).unwrap();
    let point = XiPoint::new(vec![ratio(1, 10)]).unwrap();
    let next = spec(&[3], &[0.01], 2);
    let rep = precondition_and_open(&aa, &map, &point, TbrParams::new(3), &next, 2).unwrap();
    println!("tbr {:e} -> {:e}, ajet {:e} -> {:e}", rep.tbr_before, rep.tbr_after, rep.ajet_before, rep.ajet_after);
    assert!(rep.targeted_terms > 0);
    assert!(rep.tbr_after < rep.tbr_before);
    assert_eq!(rep.opened.sites(), &[1, 3]);
    rep.opened.check_conservation().unwrap();
}
