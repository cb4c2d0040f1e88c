//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sympinv::certs::{extract_certificate, verify, Certificate};
use sympinv::construct::{cell_fixture, named_fixture, space_pullback, CellKind, CellSpec, PullbackProblem};
use sympinv::gfpoly::{find_irreducible_const, irreducibles_of_degree};
use sympinv::linalg::rank_of;
use sympinv::reflengine::{
    census, census_with, conjugacy_orbit, nielsen_2refl, profile_buckets, random_elements, table2_expectations,
    two_involution_products, CensusMode, CensusOptions, CensusTable, InvolutionTable, LengthOracle,
};
use sympinv::sympcore::{enumerate_group, enumerate_involutions, generators, InvolutionMode, DEFAULT_CAP};
use sympinv::wall::profile;
use sympinv::{Field, Mat, Poly, SPair, SympSpace};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn f(p: u32) -> Field {
    Field::new(p).unwrap()
}

fn criterion_1() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_sympinv"))
        .args(["census", "--p", "3", "--n", "4", "--compare-table2"])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure!(out.status.code() == Some(0), "exit {:?}\n{text}", out.status.code());
    ensure!(text.contains("12 of 12 printed rows matched"), "report:\n{text}");
    let mut printed: Vec<usize> = table2_expectations().iter().filter(|e| e.printed).map(|e| e.length).collect();
    printed.sort_unstable();
    ensure!(printed == [2, 2, 3, 3, 3, 4, 4, 4, 4, 4, 5, 5], "printed lengths {printed:?}");
    Ok("12 of 12 printed rows matched, exit 0".into())
}

fn criterion_2(table: &CensusTable) -> Outcome {
    ensure!(table.max_length() == Some(5), "max length {:?}", table.max_length());
    let field = f(3);
    let t2m1_sq = Poly::new(field, &[-1, 0, 1]).pow(2);
    let t2p1 = Poly::new(field, &[1, 0, 1]);
    let mut count = 0;
    for row in table.rows.iter().filter(|r| r.refl_length == Some(5)) {
        let min = row.profile.min_poly();
        let opposite =
            row.profile.wall_class(1, 2).zip(row.profile.wall_class(-1, 2)).is_some_and(|(a, b)| a == b.negated(field));
        let mixed = [1, -1].iter().any(|&e| min == &t2p1 * &Poly::linear(field, field.elem(e)).pow(2));
        ensure!((min == t2m1_sq && opposite) || mixed, "unexpected length-5 class {}", row.profile);
        count += 1;
    }
    ensure!(count > 0, "no length-5 class");
    Ok(format!("max length 5 over Sp_4(F_3), {count} length-5 classes of the two expected shapes"))
}

fn criterion_3() -> Outcome {
    let opts = CensusOptions { mode: Some(CensusMode::ClassSearch), ..CensusOptions::default() };
    let table = census_with(4, 5, &opts).map_err(|e| e.to_string())?;
    ensure!(table.meta.involution_count == 652, "{} involutions", table.meta.involution_count);
    ensure!(table.rows.iter().map(|r| r.class_size).sum::<u64>() == 9_360_000, "class sizes do not sum to |G|");
    ensure!(table.max_length().is_some_and(|m| m <= 4), "max length {:?}", table.max_length());
    let invs = InvolutionTable::for_group(4, 5).map_err(|e| e.to_string())?;
    let oracle = LengthOracle::new(&invs);
    for row in &table.rows {
        let k = row.refl_length.unwrap();
        ensure!(oracle.at_most(&row.representative, k), "{}: not within {k}", row.profile);
        ensure!(k == 0 || !oracle.at_most(&row.representative, k - 1), "{}: shorter than {k}", row.profile);
    }
    Ok(format!("{} classes of Sp_4(F_5), every length ≤ 4, max {}", table.rows.len(), table.max_length().unwrap()))
}

fn three_reflectional_by_search(pair: &SPair, invs: &[Mat]) -> bool {
    invs.iter().any(|i| nielsen_2refl(&SPair::new(i * &pair.u).unwrap()))
}

fn criterion_4() -> Outcome {
    let f5 = f(5);
    let square = Poly::new(f5, &[1, 0, 1]).pow(2);
    let fx = named_fixture("lemma-t2plus1-squared(h=1,p=5)").map_err(|e| e.to_string())?;
    let u5 = SPair::new(&fx.involutions[0] * &fx.pair.u).unwrap();
    ensure!(u5.u.invariant_factors().factors == [square.clone()], "F_5 fixture is not C((t^2+1)^2)");
    ensure!(nielsen_2refl(&fx.pair), "M is not 2-reflectional");
    ensure!(!nielsen_2refl(&u5), "F_5 element is already 2-reflectional");
    let invs5 = InvolutionTable::for_group(4, 5).map_err(|e| e.to_string())?;
    ensure!(three_reflectional_by_search(&u5, invs5.mats()), "no involution over F_5");

    let f3 = f(3);
    let spec = CellSpec {
        kind: CellKind::PalindromialEven,
        poly: Some(Poly::new(f3, &[1, 0, 1])),
        n: 1,
        eta: 1,
        wall_disc_square: None,
    };
    let u3 = cell_fixture(f3, &spec).map_err(|e| e.to_string())?;
    ensure!(u3.u.invariant_factors().factors == [Poly::new(f3, &[1, 0, 1]).pow(2)], "F_3 cell is not C((t^2+1)^2)");
    let invs3 = InvolutionTable::for_group(4, 3).map_err(|e| e.to_string())?;
    ensure!(invs3.len() == 92, "{} involutions", invs3.len());
    ensure!(!nielsen_2refl(&u3) && !three_reflectional_by_search(&u3, invs3.mats()), "3-reflectional over F_3");
    Ok("3-reflectional over F_5 (652 involutions searched), not over F_3 (all 92 rejected)".into())
}

fn nielsen_equals_products(p: u32, two_m: usize) -> Result<usize, String> {
    let group = enumerate_group(two_m, p, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let invs = enumerate_involutions(two_m, p, InvolutionMode::Filter, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let products: BTreeSet<u128> = two_involution_products(&invs).into_iter().collect();
    let nielsen: BTreeSet<u128> =
        group.iter().filter(|u| nielsen_2refl(&SPair::new(u.clone()).unwrap())).map(|u| u.pack().unwrap()).collect();
    ensure!(nielsen == products, "Sp_{two_m}(F_{p}): {} Nielsen vs {} products", nielsen.len(), products.len());
    Ok(products.len())
}

fn criterion_5() -> Outcome {
    let sizes: Vec<String> = [(3, 2), (5, 2), (3, 4)]
        .into_iter()
        .map(|(p, n)| nielsen_equals_products(p, n).map(|k| format!("Sp_{n}(F_{p}) {k}")))
        .collect::<Result<_, _>>()?;
    Ok(format!("sets agree: {}", sizes.join(", ")))
}

fn criterion_6() -> Outcome {
    let space = SympSpace::new(f(3), 4).unwrap();
    let group = enumerate_group(4, 3, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let gens: Vec<(Vec<u8>, Vec<u8>)> =
        generators(&space).into_iter().map(|g| (g.data().to_vec(), g.inverse().unwrap().data().to_vec())).collect();
    let buckets = profile_buckets(&group);
    // orbits computed independently of the profiles
    let mut unseen: BTreeSet<u128> = group.codes().iter().copied().collect();
    let mut orbits: Vec<HashSet<u128>> = Vec::new();
    while let Some(&start) = unseen.iter().next() {
        let orbit = conjugacy_orbit(group.codec(), &gens, start);
        for c in &orbit {
            unseen.remove(c);
        }
        orbits.push(orbit);
    }
    ensure!(orbits.len() == buckets.len(), "{} orbits vs {} profiles", orbits.len(), buckets.len());
    for codes in buckets.values() {
        let cell: HashSet<u128> = codes.iter().copied().collect();
        ensure!(orbits.contains(&cell), "a profile cell is not an orbit");
    }
    Ok(format!("{} cells, identical membership", orbits.len()))
}

fn criterion_7() -> Outcome {
    for p in [3, 5, 7] {
        let field = f(p);
        for n in 2..=8 {
            let q = find_irreducible_const(field, n, field.elem(-1)).map_err(|e| format!("F_{p}, n={n}: {e}"))?;
            ensure!(q.deg() == n && q.is_monic() && q.constant_term() == field.elem(-1), "F_{p}, n={n}: {q}");
            ensure!(q.is_irreducible_rabin(), "F_{p}, n={n}: {q} is reducible");
        }
    }
    let mut seen = 0;
    for p in [3, 5] {
        let field = f(p);
        for d in 1..=6 {
            for q in irreducibles_of_degree(field, d).iter() {
                if q.constant_term() != 0 && q.is_even_poly() && q.is_palindromial().unwrap() {
                    ensure!(*q == Poly::new(field, &[1, 0, 1]), "{q} over F_{p} is even and palindromial");
                    seen += 1;
                }
            }
        }
    }
    // t^2+1 splits over F_5
    ensure!(seen == 1, "t^2+1 found {seen} times");
    Ok("irreducibles with constant −1 for n = 2..8 over F_3, F_5, F_7; only t^2+1 is even and palindromial".into())
}

fn criterion_8() -> Outcome {
    let f3 = f(3);
    let mut u = Mat::identity(f3, 4);
    u.set(0, 0, 0);
    u.set(2, 2, 0);
    u.set(2, 0, 1);
    u.set(0, 2, 2);
    let pair = SPair::new(u).unwrap();
    let problem = PullbackProblem {
        pair: pair.clone(),
        w: vec![vec![1, 1, 0, 0], vec![0, 0, 1, 2]],
        b_gram: Mat::from_rows(f3, &[[0, 1], [-1, 0]]),
        residual_involution: Mat::identity(f3, 0),
    };
    let pb = space_pullback(&problem).map_err(|e| e.to_string())?;
    let chi = pb.v.char_poly();
    ensure!(chi == Poly::new(f3, &[-1, -1, 1]), "v has characteristic polynomial {chi}");
    let iu = &pb.involution * &pair.u;
    ensure!(iu.char_poly() == Poly::new(f3, &[1, 0, 0, 0, 1]), "i·u has characteristic polynomial {}", iu.char_poly());
    let invs = InvolutionTable::for_group(4, 3).map_err(|e| e.to_string())?;
    let k = LengthOracle::new(&invs).length(&pair, 6).map_err(|e| e.to_string())?;
    ensure!(k == 4, "length {k}");
    Ok(format!("v has characteristic polynomial {chi}, i·u has t^4 + 1, length 4"))
}

fn criterion_9(table: &CensusTable) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for p in [3, 5, 7] {
        for q in irreducibles_of_degree(f(p), 3).iter().chain(irreducibles_of_degree(f(p), 4).iter()) {
            let r = q.reciprocal().unwrap();
            ensure!(r.reciprocal().unwrap() == *q, "reciprocal of {q}");
        }
    }
    for k in 0..200 {
        let p = [3, 5, 7][k % 3];
        let a = Mat::random(f(p), 1 + k % 6, 1 + k % 6, &mut rng);
        let mut expected = std::collections::BTreeMap::new();
        for d in &a.invariant_factors().factors {
            for (g, e) in d.factorize().unwrap() {
                *expected.entry((g, e)).or_insert(0usize) += 1;
            }
        }
        for (g, mult) in a.char_poly().factorize().unwrap() {
            for r in 1..=mult {
                let want = expected.get(&(g.clone(), r)).copied().unwrap_or(0);
                ensure!(a.jordan_number(&g, r) == want, "rank formula disagrees on sample {k}");
            }
        }
    }
    let space = SympSpace::new(f(3), 4).unwrap();
    let invs = InvolutionTable::for_group(4, 3).map_err(|e| e.to_string())?;
    for (k, g) in random_elements(&space, 500, 10).into_iter().enumerate() {
        let l: Vec<_> = space.standard_lagrangian().iter().map(|v| g.mul_vec(v)).collect();
        let i = &invs.mats()[k % invs.len()];
        let mut both = l.clone();
        both.extend(l.iter().map(|v| i.mul_vec(v)));
        let meet = 4 - rank_of(f(3), 4, &both);
        ensure!((2 - meet).is_multiple_of(2), "parity fails on sample {k}");
    }
    for row in table.rows.iter().filter(|r| r.refl_length == Some(3)) {
        ensure!(row.representative.trace() == 0, "length-3 class {} has nonzero trace", row.profile);
    }
    let oracle = LengthOracle::new(&invs);
    let field = f(3);
    let expectations = table2_expectations();
    let mut certified = 0;
    for row in &table.rows {
        if !expectations.iter().any(|e| e.printed && e.matches(field, &row.profile)) {
            continue;
        }
        let pair = SPair::new(row.representative.clone()).unwrap();
        let cert = extract_certificate(&pair, &oracle, 6).map_err(|e| e.to_string())?;
        ensure!(verify(&cert).is_ok() && Some(cert.len()) == row.refl_length, "certificate for {}", row.profile);
        ensure!(Certificate::from_json(&cert.to_json()).ok().as_ref() == Some(&cert), "round trip for {}", row.profile);
        ensure!(profile(&pair) == row.profile, "representative profile");
        certified += 1;
    }
    Ok(format!("property suites hold; {certified} table representatives certified and round-tripped"))
}

fn run(n: usize, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default())
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS criterion {n}: {detail} ({secs:.1}s)");
            true
        }
        Err(why) => {
            println!("FAIL criterion {n}: {why} ({secs:.1}s)");
            false
        }
    }
}

fn main() -> ExitCode {
    let table = census(4, 3).expect("census of Sp_4(F_3)");
    let results = [
        run(1, criterion_1),
        run(2, || criterion_2(&table)),
        run(3, criterion_3),
        run(4, criterion_4),
        run(5, criterion_5),
        run(6, criterion_6),
        run(7, criterion_7),
        run(8, criterion_8),
        run(9, || criterion_9(&table)),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed} of {} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
