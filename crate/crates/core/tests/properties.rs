use nikishin::config::{Backend, RunConfig};
use nikishin::cubic_string::{check_concomitant, eigenvalues, propagate, spectral_measures, weyl_pair, weyl_problem_to_nikishin, DiscreteCubicString};
use nikishin::hermite_pade::{check_dr_ml_equivalence, solve, Formulation};
use nikishin::nikishin::{LinearFormCoeffs, NikishinSystem};
use nikishin::poly::Polynomial;
use nikishin::samples::{random_points, random_system, to_float};
use nikishin::scalar::{parse_rational, Scalar};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::{Float, Rational};

fn system(seed: u64, m: usize) -> NikishinSystem<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_system(&mut rng, m, 3..=5)
}

fn string_strategy(max: usize) -> impl Strategy<Value = Vec<(Rational, Rational)>> {
    prop::collection::btree_set(-31i64..=31, 1..=max).prop_flat_map(|ys| {
        let n = ys.len();
        (Just(ys), prop::collection::vec(1i64..=24, n)).prop_map(|(ys, gs)| {
            ys.into_iter().zip(gs).map(|(y, g)| (Rational::from((y, 32)), Rational::from((g, 8)))).collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn fundamental_and_reduction_identities_vanish(seed in 0u64..10_000, m in 2usize..=3, deg in 0usize..=4) {
        let sys = system(seed, m);
        let pts = random_points(seed ^ 0x5eed, 4);
        for j in 0..m - 1 {
            prop_assert!(sys.check_fundamental_identity(j, &pts).unwrap().is_zero());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let polys = (0..=m)
            .map(|_| {
                let cs: Vec<Rational> = (0..=deg).map(|_| Rational::from((rand::Rng::random_range(&mut rng, -9..=9), 1 + rand::Rng::random_range(&mut rng, 0..4)))).collect();
                Polynomial::from_rationals(&cs, 0)
            })
            .collect();
        let coeffs = LinearFormCoeffs { polys };
        for j in 0..m - 1 {
            for r in j + 1..m {
                prop_assert!(sys.check_reduction_identity(&coeffs, j, r, &pts).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn stieltjes_inverse_round_trip(seed in 0u64..10_000) {
        let sys = system(seed, 2);
        let pts = random_points(seed, 3);
        for g in sys.generators() {
            let (aff, tau) = g.stieltjes_inverse().unwrap();
            for z in &pts {
                let t = if tau.is_empty() { nikishin::scalar::Cx::zero(0) } else { tau.cauchy_transform(z).unwrap() };
                let r = aff.poly().eval_cx(z).add(&t).mul(&g.cauchy_transform(z).unwrap());
                prop_assert_eq!(r, nikishin::scalar::Cx::one(0));
            }
        }
    }

    #[test]
    fn ml_and_dr_agree(seed in 0u64..10_000, m in 2usize..=3, n in 1usize..=3) {
        let sys = system(seed, m);
        prop_assert!(check_dr_ml_equivalence(&sys, n).unwrap().is_zero());
        let sol = solve(&sys, n, Formulation::Ml).unwrap();
        prop_assert!(sol.orders_ok());
        prop_assert_eq!(sol.top().degree(), Some(n));
        prop_assert_eq!(sol.top().coeff(n), Rational::from(1));
    }

    #[test]
    fn float_solution_is_correctly_rounded(seed in 0u64..10_000, m in 2usize..=4, n in 1usize..=3, prec in prop::sample::select(vec![64u32, 128, 256])) {
        let sys = system(seed, m);
        let exact = solve(&sys, n, Formulation::Ml).unwrap();
        let fsys = to_float(&sys, prec).unwrap();
        let approx = solve(&fsys, n, Formulation::Ml).unwrap();
        for (p, q) in exact.polys.iter().zip(&approx.polys) {
            for i in 0..=n {
                let e = p.coeff(i);
                let err = Float::with_val(prec, Scalar::to_rational(&q.coeff(i)) - &e).abs();
                let ulp = Float::with_val(prec, Float::with_val(prec, &e).abs() + 1u32) >> (prec - 4);
                prop_assert!(err <= ulp, "coefficient {} of degree {}: error {} exceeds {}", i, n, err, ulp);
            }
        }
    }

    #[test]
    fn scaling_the_first_generator_scales_a0(seed in 0u64..10_000, m in 2usize..=3, n in 1usize..=3, c in 1i64..=9) {
        let sys = system(seed, m);
        let c = Rational::from((c, 4));
        let mut gens: Vec<_> = sys.generators().iter().map(|g| (**g).clone()).collect();
        gens[0] = gens[0].scaled(&c);
        let scaled = NikishinSystem::build(gens).unwrap();
        let a = solve(&sys, n, Formulation::Ml).unwrap();
        let b = solve(&scaled, n, Formulation::Ml).unwrap();
        prop_assert_eq!(b.polys[0].clone(), a.polys[0].scale(&c));
        prop_assert_eq!(&b.polys[1..], &a.polys[1..]);
    }

    #[test]
    fn scaling_any_generator_keeps_the_denominator(seed in 0u64..10_000, m in 2usize..=4, n in 1usize..=3, g in 0usize..4, c in 1i64..=9) {
        let sys = system(seed, m);
        let g = g % m;
        let mut gens: Vec<_> = sys.generators().iter().map(|x| (**x).clone()).collect();
        gens[g] = gens[g].scaled(&Rational::from((c, 3)));
        let scaled = NikishinSystem::build(gens).unwrap();
        let a = solve(&sys, n, Formulation::Dr).unwrap();
        let b = solve(&scaled, n, Formulation::Dr).unwrap();
        prop_assert_eq!(a.top(), b.top());
    }

    #[test]
    fn cubic_string_structure(atoms in string_strategy(6), conv in prop::sample::select(vec![1i32, -1])) {
        let s = DiscreteCubicString::new(atoms, conv).unwrap();
        let big_n = s.len();
        let end = propagate(&s);
        prop_assert_eq!(end.phi.degree(), Some(big_n));
        let ev = eigenvalues(&s).unwrap();
        prop_assert!(ev.all_real && ev.simple);
        prop_assert!(ev.all_positive || ev.all_negative);
        let pair = weyl_pair(&s);
        let pts = random_points(big_n as u64, 5);
        prop_assert!(check_concomitant(&pair, &pts).unwrap().is_zero());
        let data = spectral_measures(&pair).unwrap();
        prop_assert_eq!(data.mu.atom_count(), Some(big_n + 1));
    }

    #[test]
    fn cubic_string_reduces_to_nikishin(atoms in string_strategy(3), conv in prop::sample::select(vec![1i32, -1])) {
        let s = DiscreteCubicString::new(atoms, conv).unwrap();
        let pair = weyl_pair(&s);
        let data = spectral_measures(&pair).unwrap();
        for n in 1..=s.len() + 1 {
            let rep = weyl_problem_to_nikishin(&pair, &data, n).unwrap();
            prop_assert!(rep.passed, "n={} {:?}", n, rep);
        }
    }

    #[test]
    fn rational_repr_round_trip(p in -1_000_000i64..1_000_000, q in 1i64..100_000) {
        let r = Rational::from((p, q));
        prop_assert_eq!(parse_rational(&r.to_string()), Some(r.clone()));
        prop_assert_eq!(<Rational as Scalar>::parse_repr(&Scalar::to_repr(&r), 0), Some(r));
    }

    #[test]
    fn float_repr_round_trip(p in -1_000_000i64..1_000_000, q in 1i64..100_000, prec in prop::sample::select(vec![64u32, 256, 512])) {
        let x = Float::with_val(prec, Rational::from((p, q)));
        let back = <Float as Scalar>::parse_repr(&Scalar::to_repr(&x), prec).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn backend_display_round_trip(bits in 64u32..=4096) {
        let b = Backend::Float(bits);
        prop_assert_eq!(b.to_string().parse::<Backend>().unwrap(), b);
        prop_assert_eq!(format!("bigfloat({bits})").parse::<Backend>().unwrap(), b);
    }

    #[test]
    fn config_validates_string_positions(p in -500i64..500, q in 1i64..64) {
        let r = Rational::from((p, q));
        let text = format!(r#"{{"string":{{"atoms":[["{r}", 1]]}}, "n_max": 2}}"#);
        let cfg = RunConfig::parse(&text);
        let inside = r > -1 && r < 1;
        let built = cfg.ok().and_then(|c| c.string).map(|s| s.build());
        match built {
            Some(Ok(s)) => prop_assert!(inside && s.atoms[0].0 == r),
            Some(Err(_)) => prop_assert!(!inside),
            None => prop_assert!(false, "config did not parse"),
        }
    }
}
