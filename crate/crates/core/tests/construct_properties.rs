use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympinv::construct::{
    build_skewadjoint_pair, cell_fixture, cyclic_adapt, find_adapted_plane, find_pullback_subspace,
    residual_involutions, restricted_form, space_pullback, CellKind, CellSpec, PullbackProblem, PullbackWant,
    SearchMode,
};
use sympinv::gfpoly::{irreducibles_of_degree, monic_polys};
use sympinv::linalg::{in_span, rank_of};
use sympinv::wall::classify_quadratic;
use sympinv::{Error, Field, Mat, Poly, SPair, SympSpace};

/// Random valid pullback problems with a two-dimensional `W`.
fn random_problems(p: u32, two_m: usize, count: usize, seed: u64) -> Vec<PullbackProblem> {
    let f = Field::new(p).unwrap();
    let space = SympSpace::new(f, two_m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let pair = SPair::new(space.random_element(&mut rng)).unwrap();
        let g = space.random_element(&mut rng);
        let w: Vec<_> = (0..2).map(|i| g.mul_vec(&space.e(i))).collect();
        let c = f.elem(rng.gen_range(1..p as i64));
        let b_gram = Mat::from_rows(f, &[[0, c as i64], [-(c as i64), 0]]);
        let Ok((_, residuals)) = residual_involutions(&pair, &w) else { continue };
        let residual_involution = residuals[rng.gen_range(0..residuals.len())].clone();
        let problem = PullbackProblem { pair, w, b_gram, residual_involution };
        if problem.validate().is_ok() {
            out.push(problem);
        }
    }
    out
}

fn check_pullback(problem: &PullbackProblem) {
    let pb = space_pullback(problem).unwrap();
    let space = problem.pair.space;
    let f = space.field();
    let n = space.dim();
    let i = &pb.involution;
    assert!(space.is_symplectic_involution(i).unwrap());
    let uw: Vec<_> = problem.w.iter().map(|x| problem.pair.u.mul_vec(x)).collect();
    for x in &problem.w {
        assert!(in_span(f, n, &uw, &i.mul_vec(x)), "i(W) = u(W)");
    }
    let iu = i * &problem.pair.u;
    for x in &problem.w {
        assert!(in_span(f, n, &problem.w, &iu.mul_vec(x)), "i·u stabilizes W");
    }
    // s(x, u y) = b(x, v y) on W
    assert_eq!(restricted_form(&problem.pair, &problem.w), &problem.b_gram * &pb.v);
}

#[test]
fn pullbacks_in_sp4_f3() {
    for problem in random_problems(3, 4, 100, 1) {
        check_pullback(&problem);
    }
}

#[test]
fn pullbacks_in_sp6_f3() {
    for problem in random_problems(3, 6, 100, 2) {
        check_pullback(&problem);
    }
}

#[test]
fn pullbacks_in_sp4_f5() {
    for problem in random_problems(5, 4, 50, 3) {
        check_pullback(&problem);
    }
}

#[test]
fn trace_forms_of_even_irreducibles_are_not_hyperbolic() {
    for p in [3u32, 5] {
        let f = Field::new(p).unwrap();
        for d in [2, 4] {
            let evens: Vec<Poly> = irreducibles_of_degree(f, d).iter().filter(|q| q.is_even_poly()).cloned().collect();
            assert!(!evens.is_empty());
            for q in evens {
                let (b, v) = build_skewadjoint_pair(&q).unwrap();
                assert_eq!(b, b.transpose());
                assert!(b.is_invertible());
                assert_eq!(&b * &v, -&(&v.transpose() * &b), "{q} over F_{p}");
                assert_eq!(v.char_poly(), q);
                assert!(!classify_quadratic(&b).unwrap().is_hyperbolic(f), "{q} over F_{p}");
            }
        }
    }
}

#[test]
fn pullback_subspaces() {
    let f = Field::new(3).unwrap();
    let space = SympSpace::new(f, 4).unwrap();
    let none = find_pullback_subspace(&SPair::identity(space), 2, PullbackWant::default(), 0, 100);
    assert!(matches!(none, Err(Error::NotFound(_))));

    // quarter turn on (e₁, f₁) ⊥ identity
    let mut u = Mat::identity(f, 4);
    u.set(0, 0, 0);
    u.set(2, 2, 0);
    u.set(2, 0, 1);
    u.set(0, 2, 2);
    let pair = SPair::new(u).unwrap();
    let found = find_pullback_subspace(&pair, 2, PullbackWant::default(), 0, 100).unwrap();
    assert_eq!(found.mode, SearchMode::Exhaustive);
    assert!(space.is_totally_singular(&found.value));
    assert!(restricted_form(&pair, &found.value).is_invertible());

    let spec = CellSpec { kind: CellKind::UnipotentExtension, poly: None, n: 1, eta: 1, wall_disc_square: None };
    let cell = cell_fixture(f, &spec).unwrap();
    let want = PullbackWant { symmetric: true, hyperbolic: None };
    let line = find_pullback_subspace(&cell, 1, want, 0, 100).unwrap().value;
    assert_ne!(cell.space.form(&line[0], &cell.u.mul_vec(&line[0])), 0);
    assert_eq!(rank_of(f, 6, &line), 1);
}

#[test]
fn adapted_plane_in_a_sextic_cell() {
    let f = Field::new(3).unwrap();
    let q = irreducibles_of_degree(f, 6).iter().find(|q| q.is_palindromial().unwrap()).cloned().unwrap();
    let spec = CellSpec { kind: CellKind::PalindromialOdd, poly: Some(q), n: 0, eta: 1, wall_disc_square: None };
    let cell = cell_fixture(f, &spec).unwrap();
    let plane = find_adapted_plane(&cell, 0, 1000).unwrap().value;
    let s = cell.space;
    assert_ne!(s.form(&plane[0], &plane[1]), 0);
    for x in &plane {
        for y in &plane {
            assert_eq!(s.form(x, &cell.u.mul_vec(y)), 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cyclic_adaptation_hits_every_admissible_target(p in prop::sample::select(vec![3u32, 5]), n in 1usize..=3, a in 0usize..1000, b in 0usize..1000) {
        let f = Field::new(p).unwrap();
        let polys: Vec<Poly> = monic_polys(f, n).filter(|q| q.constant_term() != 0).collect();
        let q = &polys[a % polys.len()];
        let targets: Vec<Poly> = monic_polys(f, n)
            .filter(|r| r.constant_term() == f.neg(q.constant_term()) || (n % 2 == 1 && r.constant_term() == q.constant_term()))
            .collect();
        let r = &targets[b % targets.len()];
        let u = Mat::companion(q);
        let i = cyclic_adapt(&u, r, 0, 1000).unwrap_or_else(|e| panic!("{q} → {r}: {e}")).value;
        prop_assert!((&i * &i).is_identity());
        let iu = &i * &u;
        prop_assert_eq!(&iu.char_poly(), r);
        prop_assert!(iu.is_cyclic());
    }
}
