use proptest::prelude::*;
use sympinv::gfpoly::{irreducibles_of_degree, Field, Poly};

fn monic(p: u32, tail: Vec<i64>) -> Poly {
    let f = Field::new(p).unwrap();
    let mut c = tail;
    c.push(1);
    Poly::new(f, &c)
}

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![3u32, 5, 7, 11, 101])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn reciprocal_is_an_involution(p in prime(), c0 in 1i64..100, tail in prop::collection::vec(0i64..101, 0..8)) {
        let mut coeffs = vec![c0];
        coeffs.extend(tail);
        let poly = monic(p, coeffs);
        prop_assume!(poly.constant_term() != 0);
        let r = poly.reciprocal().unwrap();
        prop_assert_eq!(r.reciprocal().unwrap(), poly.monic());
    }

    #[test]
    fn factorization_multiplies_back(p in prime(), tail in prop::collection::vec(0i64..101, 0..8)) {
        let poly = monic(p, tail);
        let f = poly.field();
        let product = poly.factorize().unwrap().iter().fold(Poly::one(f), |acc, (g, e)| &acc * &g.pow(*e));
        prop_assert_eq!(product, poly);
    }

    #[test]
    fn factors_are_irreducible_and_sorted(p in prime(), tail in prop::collection::vec(0i64..101, 1..8)) {
        let poly = monic(p, tail);
        let fac = poly.factorize().unwrap();
        for (g, _) in &fac {
            prop_assert!(g.is_irreducible().unwrap());
        }
        prop_assert!(fac.windows(2).all(|w| (w[0].0.deg(), w[0].0.coeffs()) < (w[1].0.deg(), w[1].0.coeffs())));
    }

    #[test]
    fn reciprocal_of_irreducible_is_irreducible(p in prime(), tail in prop::collection::vec(0i64..101, 1..6)) {
        let poly = monic(p, tail);
        prop_assume!(poly.constant_term() != 0 && poly.is_irreducible().unwrap());
        prop_assert!(poly.reciprocal().unwrap().is_irreducible().unwrap());
    }

    #[test]
    fn rabin_agrees_with_trial_division(p in prop::sample::select(vec![3u32, 5, 7]), tail in prop::collection::vec(0i64..7, 1..7)) {
        let poly = monic(p, tail);
        prop_assert_eq!(poly.is_irreducible_rabin(), poly.is_irreducible_trial());
    }
}

#[test]
fn irreducible_palindromials_have_even_degree_and_constant_one() {
    for p in [3, 5] {
        let f = Field::new(p).unwrap();
        for d in 1..=6 {
            for q in irreducibles_of_degree(f, d).iter() {
                if q.constant_term() == 0 || !q.is_palindromial().unwrap() {
                    continue;
                }
                if d == 1 {
                    assert!(*q == Poly::new(f, &[1, 1]) || *q == Poly::new(f, &[-1, 1]));
                } else {
                    assert_eq!(d % 2, 0, "{q} over F_{p}");
                    assert_eq!(q.constant_term(), 1, "{q} over F_{p}");
                }
            }
        }
    }
}
