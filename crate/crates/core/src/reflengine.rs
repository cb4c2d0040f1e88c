//! Reflectional length: Nielsen's test for products of two involutions, a
//! memoized search for single elements, and group censuses computed bottom-up
//! over conjugacy classes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfpoly::{Field, Poly};
use crate::linalg::{Mat, MatJson};
use crate::subspace::gaussian_binomial;
use crate::sympcore::{
    enumerate_group, enumerate_involutions, generators, group_order, orthogonal_sum, symplectic_extension, Codec,
    GroupTable, InvolutionMode, SPair, SympSpace, DEFAULT_CAP,
};
use crate::wall::{factored, profile, InvariantProfile, ProfileJson};

pub const DEFAULT_MAX_K: usize = 6;

/// Groups up to this order are censused by full enumeration; larger ones
/// (still under the cap) by class search.
pub const FULL_ENUMERATION_LIMIT: u128 = 1_000_000;

const CONSTRUCTIVE_SUBSPACE_LIMIT: u128 = 2_000_000;

/// Every Jordan number even and every quadratic Wall class hyperbolic.
pub fn nielsen_2refl(pair: &SPair) -> bool {
    profile(pair).is_two_reflectional()
}

/// The symplectic involutions of one group, sorted by packed encoding.
#[derive(Clone, Debug)]
pub struct InvolutionTable {
    space: SympSpace,
    mats: Vec<Mat>,
}

impl InvolutionTable {
    /// Builds the table constructively from s-regular subspaces.
    pub fn for_group(two_m: usize, p: u32) -> Result<InvolutionTable> {
        let field = Field::new(p)?;
        let space = SympSpace::new(field, two_m)?;
        let count: u128 = (0..=two_m).step_by(2).map(|k| gaussian_binomial(p as u128, two_m, k)).sum();
        if count > CONSTRUCTIVE_SUBSPACE_LIMIT {
            return Err(Error::TooLarge { order: count, cap: CONSTRUCTIVE_SUBSPACE_LIMIT });
        }
        let mats = enumerate_involutions(two_m, p, InvolutionMode::Constructive, DEFAULT_CAP)?;
        Ok(InvolutionTable { space, mats })
    }

    pub fn from_mats(space: SympSpace, mut mats: Vec<Mat>) -> Result<InvolutionTable> {
        for m in &mats {
            if !space.is_symplectic_involution(m)? {
                return Err(Error::NotSymplectic("involution table entry is not a symplectic involution".into()));
            }
        }
        mats.sort();
        mats.dedup();
        Ok(InvolutionTable { space, mats })
    }

    pub fn space(&self) -> SympSpace {
        self.space
    }

    pub fn mats(&self) -> &[Mat] {
        &self.mats
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }
}

/// Memoized length search on single elements. Lengths are cached per
/// invariant profile, which is sound because reflectional length is a class
/// function.
pub struct LengthOracle<'a> {
    table: &'a InvolutionTable,
    // profile -> k with "length > k" established
    above: Mutex<HashMap<InvariantProfile, usize>>,
    // profile -> k with "length <= k" established
    within: Mutex<HashMap<InvariantProfile, usize>>,
}

impl<'a> LengthOracle<'a> {
    pub fn new(table: &'a InvolutionTable) -> LengthOracle<'a> {
        LengthOracle { table, above: Mutex::new(HashMap::new()), within: Mutex::new(HashMap::new()) }
    }

    pub fn table(&self) -> &InvolutionTable {
        self.table
    }

    fn check(&self, pair: &SPair) -> Result<()> {
        if pair.space != self.table.space {
            return Err(Error::DimensionMismatch { expected: self.table.space.dim(), got: pair.dim() });
        }
        Ok(())
    }

    pub fn length(&self, pair: &SPair, max_k: usize) -> Result<usize> {
        self.check(pair)?;
        let prof = profile(pair);
        for k in 0..=max_k {
            if self.at_most_profiled(&pair.u, &prof, k) {
                return Ok(k);
            }
        }
        Err(Error::Exceeds(max_k))
    }

    /// Whether `u` is a product of at most `k` involutions.
    pub fn at_most(&self, u: &Mat, k: usize) -> bool {
        let pair = SPair { space: self.table.space, u: u.clone() };
        self.at_most_profiled(u, &profile(&pair), k)
    }

    fn at_most_profiled(&self, u: &Mat, prof: &InvariantProfile, k: usize) -> bool {
        if let Some(&w) = self.within.lock().unwrap().get(prof) {
            if w <= k {
                return true;
            }
        }
        if let Some(&a) = self.above.lock().unwrap().get(prof) {
            if a >= k {
                return false;
            }
        }
        let result = match k {
            0 => u.is_identity(),
            1 => (u * u).is_identity(),
            2 => prof.is_two_reflectional(),
            _ => self.table.mats.par_iter().any(|i| {
                let v = i * u;
                let pv = profile(&SPair { space: self.table.space, u: v.clone() });
                self.at_most_profiled(&v, &pv, k - 1)
            }),
        };
        if result {
            let mut w = self.within.lock().unwrap();
            let e = w.entry(prof.clone()).or_insert(k);
            *e = (*e).min(k);
        } else {
            let mut a = self.above.lock().unwrap();
            let e = a.entry(prof.clone()).or_insert(k);
            *e = (*e).max(k);
        }
        result
    }
}

/// Least `k` such that `pair.u` is a product of `k` symplectic involutions.
pub fn refl_length(pair: &SPair, max_k: usize, involutions: &InvolutionTable) -> Result<usize> {
    LengthOracle::new(involutions).length(pair, max_k)
}

/// First involution in table order with `predicate(i·u)`.
pub fn find_adjacent_witness(
    pair: &SPair,
    predicate: impl Fn(&SPair) -> bool,
    involutions: &InvolutionTable,
) -> Result<Mat> {
    involutions
        .mats
        .iter()
        .find(|i| predicate(&SPair { space: pair.space, u: *i * &pair.u }))
        .cloned()
        .ok_or_else(|| Error::NotFound("no involution satisfies the predicate".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensusMode {
    /// Enumerate every element and bucket by profile.
    Full,
    /// Discover classes from seeded and random candidates until the class
    /// sizes add up to the group order.
    ClassSearch,
}

#[derive(Clone, Debug)]
pub struct CensusOptions {
    pub cap: u128,
    pub max_k: usize,
    pub seed: u64,
    pub mode: Option<CensusMode>,
    /// Random elements re-profiled after a class search.
    pub sample_checks: usize,
    /// Random candidates tried by class search before giving up.
    pub search_budget: usize,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            cap: DEFAULT_CAP,
            max_k: DEFAULT_MAX_K,
            seed: 0,
            mode: None,
            sample_checks: 1000,
            search_budget: 5_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusRow {
    pub profile: InvariantProfile,
    pub class_size: u64,
    /// `None` when the class is not a product of involutions at all.
    pub refl_length: Option<usize>,
    pub representative: Mat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusMeta {
    pub p: u32,
    pub n: usize,
    pub group_order: u64,
    pub involution_count: usize,
    pub mode: CensusMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusTable {
    pub meta: CensusMeta,
    pub rows: Vec<CensusRow>,
}

pub fn census(two_m: usize, p: u32) -> Result<CensusTable> {
    census_with(two_m, p, &CensusOptions::default())
}

pub fn census_with(two_m: usize, p: u32, opts: &CensusOptions) -> Result<CensusTable> {
    let field = Field::new(p)?;
    let space = SympSpace::new(field, two_m)?;
    let order = group_order(two_m, p);
    if order > opts.cap {
        return Err(Error::TooLarge { order, cap: opts.cap });
    }
    let mode =
        opts.mode.unwrap_or(if order <= FULL_ENUMERATION_LIMIT { CensusMode::Full } else { CensusMode::ClassSearch });
    let (classes, involutions) = match mode {
        CensusMode::Full => full_classes(space, opts)?,
        CensusMode::ClassSearch => search_classes(space, opts)?,
    };
    let lengths = level_sets(space, &classes, &involutions, opts.max_k)?;
    let rows = classes
        .into_iter()
        .zip(lengths)
        .map(|(c, l)| CensusRow { profile: c.profile, class_size: c.size, refl_length: l, representative: c.rep })
        .collect();
    Ok(CensusTable {
        meta: CensusMeta { p, n: two_m, group_order: order as u64, involution_count: involutions.len(), mode },
        rows,
    })
}

struct ClassData {
    profile: InvariantProfile,
    size: u64,
    rep: Mat,
}

/// Conjugation closure of `start` under the generators; this is the full
/// conjugacy class because the generators generate the group.
pub fn conjugacy_orbit(codec: Codec, gens: &[(Vec<u8>, Vec<u8>)], start: u128) -> HashSet<u128> {
    let n2 = codec.n * codec.n;
    let mut seen = HashSet::new();
    seen.insert(start);
    let mut stack = vec![start];
    let (mut x, mut tmp, mut out) = (vec![0u8; n2], vec![0u8; n2], vec![0u8; n2]);
    while let Some(c) = stack.pop() {
        codec.unpack(c, &mut x);
        for (g, ginv) in gens {
            codec.mul(g, &x, &mut tmp);
            codec.mul(&tmp, ginv, &mut out);
            let code = codec.pack(&out);
            if seen.insert(code) {
                stack.push(code);
            }
        }
    }
    seen
}

fn generator_pairs(space: &SympSpace) -> Vec<(Vec<u8>, Vec<u8>)> {
    generators(space)
        .into_iter()
        .map(|g| {
            let inv = g.inverse().expect("transvections are invertible");
            (g.data().to_vec(), inv.data().to_vec())
        })
        .collect()
}

fn full_classes(space: SympSpace, opts: &CensusOptions) -> Result<(Vec<ClassData>, Vec<Mat>)> {
    let p = space.field().p();
    let group = enumerate_group(space.dim(), p, opts.cap)?;
    let involutions: Vec<Mat> = group.iter().filter(|u| (u * u).is_identity()).collect();
    let constructive = enumerate_involutions(space.dim(), p, InvolutionMode::Constructive, opts.cap)?;
    if constructive != involutions {
        return Err(Error::Mismatch(format!(
            "filtered involutions ({}) differ from constructed ones ({})",
            involutions.len(),
            constructive.len()
        )));
    }
    let buckets = profile_buckets(&group);
    let gens = generator_pairs(&space);
    let codec = group.codec();
    let failures: Vec<String> = buckets
        .par_iter()
        .filter_map(|(prof, codes)| {
            let orbit = conjugacy_orbit(codec, &gens, codes[0]);
            let same = orbit.len() == codes.len() && orbit.iter().all(|c| codes.binary_search(c).is_ok());
            (!same)
                .then(|| format!("profile {prof} buckets {} elements but its class has {}", codes.len(), orbit.len()))
        })
        .collect();
    if let Some(f) = failures.into_iter().next() {
        return Err(Error::Mismatch(f));
    }
    let classes = buckets
        .into_iter()
        .map(|(profile, codes)| ClassData { profile, size: codes.len() as u64, rep: codec.to_mat(codes[0]) })
        .collect();
    Ok((classes, involutions))
}

/// Elements grouped by invariant profile; codes within a bucket ascend.
pub fn profile_buckets(group: &GroupTable) -> BTreeMap<InvariantProfile, Vec<u128>> {
    let field = group.field();
    let space = SympSpace::new(field, group.dim()).expect("even dimension");
    let codec = group.codec();
    let profiles: Vec<InvariantProfile> =
        group.codes().par_iter().map(|&c| profile(&SPair { space, u: codec.to_mat(c) })).collect();
    let mut buckets: BTreeMap<InvariantProfile, Vec<u128>> = BTreeMap::new();
    for (prof, &code) in profiles.into_iter().zip(group.codes()) {
        buckets.entry(prof).or_default().push(code);
    }
    buckets
}

/// Structured candidates that reach classes random sampling hits rarely:
/// sums with a plane, symplectic extensions, and the ± identity.
fn seed_candidates(space: &SympSpace, cap: u128) -> Result<Vec<Mat>> {
    let field = space.field();
    let p = field.p();
    let m = space.m();
    let mut out = vec![space.identity(), -&space.identity()];
    if m >= 2 && group_order(2, p) * group_order(space.dim() - 2, p) <= 200_000 {
        let plane = enumerate_group(2, p, cap)?;
        let rest = enumerate_group(space.dim() - 2, p, cap)?;
        let s2 = SympSpace::new(field, 2)?;
        let sr = SympSpace::new(field, space.dim() - 2)?;
        for a in plane.iter() {
            for b in rest.iter() {
                out.push(orthogonal_sum(field, &[SPair { space: s2, u: a.clone() }, SPair { space: sr, u: b }]).u);
            }
        }
    }
    let pm = (p as u128).checked_pow((m * m) as u32).unwrap_or(u128::MAX);
    if pm <= 100_000 {
        for code in 0..pm {
            let a = Mat::unpack(field, m, code);
            if a.is_invertible() {
                out.push(symplectic_extension(&a)?);
            }
        }
    }
    Ok(out)
}

fn search_classes(space: SympSpace, opts: &CensusOptions) -> Result<(Vec<ClassData>, Vec<Mat>)> {
    let field = space.field();
    let order = group_order(space.dim(), field.p());
    let codec = Codec::new(field, space.dim()).ok_or(Error::TooLarge { order, cap: opts.cap })?;
    let table = InvolutionTable::for_group(space.dim(), field.p())?;
    let gens = generator_pairs(&space);
    let mut found: BTreeMap<InvariantProfile, ClassData> = BTreeMap::new();
    let mut total: u128 = 0;
    let absorb = |batch: Vec<Mat>, found: &mut BTreeMap<InvariantProfile, ClassData>, total: &mut u128| {
        let profiles: Vec<InvariantProfile> =
            batch.par_iter().map(|u| profile(&SPair { space, u: u.clone() })).collect();
        let mut fresh: Vec<(InvariantProfile, Mat)> = Vec::new();
        for (prof, u) in profiles.into_iter().zip(batch) {
            if !found.contains_key(&prof) && !fresh.iter().any(|(q, _)| *q == prof) {
                fresh.push((prof, u));
            }
        }
        let sizes: Vec<u64> =
            fresh.par_iter().map(|(_, u)| conjugacy_orbit(codec, &gens, codec.pack(u.data())).len() as u64).collect();
        for ((prof, rep), size) in fresh.into_iter().zip(sizes) {
            *total += size as u128;
            found.insert(prof.clone(), ClassData { profile: prof, size, rep });
        }
    };
    let seeds = seed_candidates(&space, opts.cap)?;
    for chunk in seeds.chunks(4096) {
        absorb(chunk.to_vec(), &mut found, &mut total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tried = 0usize;
    while total < order {
        if tried >= opts.search_budget {
            return Err(Error::SearchExhausted(format!(
                "{} classes covering {total} of {order} elements after {tried} random candidates",
                found.len()
            )));
        }
        let batch: Vec<Mat> = (0..4096).map(|_| space.random_element(&mut rng)).collect();
        tried += batch.len();
        absorb(batch, &mut found, &mut total);
    }
    if total != order {
        return Err(Error::Mismatch(format!("class sizes add up to {total}, group order is {order}")));
    }
    // spot check: random elements land in a discovered class
    let samples: Vec<Mat> = (0..opts.sample_checks).map(|_| space.random_element(&mut rng)).collect();
    if let Some(u) = samples.iter().find(|u| !found.contains_key(&profile(&SPair { space, u: (*u).clone() }))) {
        return Err(Error::Mismatch(format!("sampled element has an undiscovered profile:\n{u}")));
    }
    Ok((found.into_values().collect(), table.mats))
}

/// Lengths per class: 0, 1 and 2 directly, then `S_k` = classes with an
/// involution neighbour in `S_{k-1}`. Once a level adds nothing the sets are
/// stable and the remaining classes are unreachable.
fn level_sets(
    space: SympSpace,
    classes: &[ClassData],
    involutions: &[Mat],
    max_k: usize,
) -> Result<Vec<Option<usize>>> {
    let index: HashMap<&InvariantProfile, usize> = classes.iter().enumerate().map(|(i, c)| (&c.profile, i)).collect();
    let mut level: Vec<Option<usize>> = classes
        .iter()
        .map(|c| {
            if c.rep.is_identity() {
                Some(0)
            } else if (&c.rep * &c.rep).is_identity() {
                Some(1)
            } else if c.profile.is_two_reflectional() {
                Some(2)
            } else {
                None
            }
        })
        .collect();
    let pending: Vec<usize> = (0..classes.len()).filter(|&i| level[i].is_none()).collect();
    let neighbours: Vec<Result<BTreeSet<usize>>> = pending
        .par_iter()
        .map(|&c| {
            let mut set = BTreeSet::new();
            for i in involutions {
                let prof = profile(&SPair { space, u: i * &classes[c].rep });
                let idx = index
                    .get(&prof)
                    .ok_or_else(|| Error::Mismatch(format!("neighbour profile {prof} is missing from the census")))?;
                set.insert(*idx);
            }
            Ok(set)
        })
        .collect();
    let neighbours: Vec<BTreeSet<usize>> = neighbours.into_iter().collect::<Result<_>>()?;
    let mut stable = false;
    for k in 3..=max_k {
        let newly: Vec<usize> = pending
            .iter()
            .zip(&neighbours)
            .filter(|(&c, nb)| level[c].is_none() && nb.iter().any(|&j| level[j].is_some_and(|l| l < k)))
            .map(|(&c, _)| c)
            .collect();
        if newly.is_empty() {
            stable = true;
            break;
        }
        for c in newly {
            level[c] = Some(k);
        }
    }
    if !stable && level.iter().any(|l| l.is_none()) {
        return Err(Error::Exceeds(max_k));
    }
    Ok(level)
}

impl CensusTable {
    /// Largest length, or `None` if some class is unreachable.
    pub fn max_length(&self) -> Option<usize> {
        self.rows.iter().try_fold(0, |m, r| r.refl_length.map(|l| m.max(l)))
    }

    pub fn row_for(&self, prof: &InvariantProfile) -> Option<&CensusRow> {
        self.rows.iter().find(|r| r.profile == *prof)
    }

    pub fn to_json(&self) -> CensusJson {
        CensusJson {
            p: self.meta.p,
            n: self.meta.n,
            group_order: self.meta.group_order,
            involution_count: self.meta.involution_count,
            mode: self.meta.mode,
            rows: self
                .rows
                .iter()
                .map(|r| CensusRowJson {
                    profile: r.profile.to_json(),
                    class_size: r.class_size,
                    refl_length: r.refl_length,
                    representative: r.representative.to_json(),
                })
                .collect(),
        }
    }

    /// Aligned text table: invariant factors, Wall classes, length, class size.
    pub fn to_text(&self) -> String {
        let field = Field::new(self.meta.p).expect("valid modulus");
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                let inv: Vec<String> = r.profile.inv_factors.factors.iter().map(factored).collect();
                let wall: Vec<String> = r
                    .profile
                    .wall
                    .iter()
                    .map(|w| {
                        format!(
                            "(t{}1,{}): rank {} {}",
                            if w.eta > 0 { "-" } else { "+" },
                            w.r,
                            w.class.rank,
                            if w.class.is_hyperbolic(field) {
                                "hyperbolic".to_string()
                            } else if w.class.disc_is_square {
                                "disc square".to_string()
                            } else {
                                "disc nonsquare".to_string()
                            }
                        )
                    })
                    .collect();
                let len = r.refl_length.map_or("none".to_string(), |l| l.to_string());
                [inv.join(", "), wall.join("; "), len, r.class_size.to_string()]
            })
            .collect();
        let header = ["invariant factors", "wall invariants", "length", "class size"];
        let widths: Vec<usize> = (0..4)
            .map(|i| cells.iter().map(|c| c[i].chars().count()).chain([header[i].len()]).max().unwrap())
            .collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Sp_{}(F_{}): order {}, {} involutions, {} classes",
            self.meta.n,
            self.meta.p,
            self.meta.group_order,
            self.meta.involution_count,
            self.rows.len()
        );
        let line = |cols: [&str; 4]| -> String {
            format!(
                "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}",
                cols[0],
                cols[1],
                cols[2],
                cols[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            )
            .trim_end()
            .to_string()
        };
        let _ = writeln!(out, "{}", line(header));
        let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 6));
        for c in &cells {
            let _ = writeln!(out, "{}", line([&c[0], &c[1], &c[2], &c[3]]));
        }
        out
    }

    pub fn from_json(j: &CensusJson) -> Result<CensusTable> {
        let rows = j
            .rows
            .iter()
            .map(|r| {
                Ok(CensusRow {
                    profile: InvariantProfile::from_json(&r.profile)?,
                    class_size: r.class_size,
                    refl_length: r.refl_length,
                    representative: Mat::from_json(&r.representative)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CensusTable {
            meta: CensusMeta {
                p: j.p,
                n: j.n,
                group_order: j.group_order,
                involution_count: j.involution_count,
                mode: j.mode,
            },
            rows,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusJson {
    pub p: u32,
    pub n: usize,
    pub group_order: u64,
    pub involution_count: usize,
    pub mode: CensusMode,
    pub rows: Vec<CensusRowJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRowJson {
    pub profile: ProfileJson,
    pub class_size: u64,
    pub refl_length: Option<usize>,
    pub representative: MatJson,
}

#[derive(Clone, Debug)]
pub struct TheoremCheck {
    pub holds: bool,
    pub max_length: Option<usize>,
    /// First class (canonical order) whose length exceeds the bound.
    pub witness: Option<CensusRow>,
}

/// Whether every element of `Sp_{two_m}(F_p)` is a product of at most
/// `bound` involutions.
pub fn verify_theorem(p: u32, two_m: usize, bound: usize) -> Result<TheoremCheck> {
    verify_theorem_with(p, two_m, bound, &CensusOptions::default())
}

pub fn verify_theorem_with(p: u32, two_m: usize, bound: usize, opts: &CensusOptions) -> Result<TheoremCheck> {
    let table = census_with(two_m, p, opts)?;
    Ok(check_bound(&table, bound))
}

pub fn check_bound(table: &CensusTable, bound: usize) -> TheoremCheck {
    let witness = table.rows.iter().find(|r| r.refl_length.is_none_or(|l| l > bound)).cloned();
    TheoremCheck { holds: witness.is_none(), max_length: table.max_length(), witness }
}

/// Exact element-level lengths by breadth-first search in the Cayley graph
/// whose edges are left multiplications by involutions. Returns one entry
/// per group element, in table order (`u8::MAX` if unreachable).
pub fn cayley_lengths(group: &GroupTable, involutions: &[Mat]) -> Vec<u8> {
    let codec = group.codec();
    let n2 = group.dim() * group.dim();
    let codes = group.codes();
    let invs: Vec<Vec<u8>> = involutions.iter().map(|m| m.data().to_vec()).collect();
    let mut dist = vec![u8::MAX; codes.len()];
    let start = codes.binary_search(&codec.pack(Mat::identity(group.field(), group.dim()).data())).expect("identity");
    dist[start] = 0;
    let mut frontier = vec![start];
    let mut d = 0u8;
    while !frontier.is_empty() {
        d += 1;
        let next: Vec<usize> = frontier
            .par_iter()
            .flat_map_iter(|&idx| {
                let mut x = vec![0u8; n2];
                let mut y = vec![0u8; n2];
                codec.unpack(codes[idx], &mut x);
                invs.iter()
                    .map(|i| {
                        codec.mul(i, &x, &mut y);
                        codes.binary_search(&codec.pack(&y)).expect("closed under multiplication")
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut fresh = Vec::new();
        for j in next {
            if dist[j] == u8::MAX {
                dist[j] = d;
                fresh.push(j);
            }
        }
        frontier = fresh;
    }
    dist
}

/// The set `{i·j}` of products of two involutions, as sorted packed codes.
pub fn two_involution_products(involutions: &[Mat]) -> Vec<u128> {
    let mut out: Vec<u128> = involutions
        .par_iter()
        .flat_map_iter(|i| involutions.iter().map(move |j| (i * j).pack().expect("packable")))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// One line of the printed classification table for `Sp_4(F_3)`.
pub struct Table2Expectation {
    pub label: &'static str,
    pub length: usize,
    /// `false` for the classes the printed table leaves out.
    pub printed: bool,
    matcher: fn(Field, &InvariantProfile) -> bool,
}

impl Table2Expectation {
    pub fn matches(&self, field: Field, prof: &InvariantProfile) -> bool {
        (self.matcher)(field, prof)
    }
}

fn lin(f: Field, eta: i64) -> Poly {
    Poly::linear(f, f.elem(eta))
}

fn t2p1(f: Field) -> Poly {
    Poly::new(f, &[1, 0, 1])
}

fn factors_are(prof: &InvariantProfile, expected: &[Poly]) -> bool {
    prof.inv_factors.factors == expected
}

fn for_some_eta(f: Field, prof: &InvariantProfile, check: impl Fn(i8, &Poly, &Poly) -> bool) -> bool {
    [1i8, -1].into_iter().any(|eta| check(eta, &lin(f, eta as i64), &lin(f, -eta as i64)) && prof.p == f.p())
}

pub fn table2_expectations() -> Vec<Table2Expectation> {
    vec![
        Table2Expectation {
            label: "t^2+1, t^2+1",
            length: 2,
            printed: true,
            matcher: |f, pr| factors_are(pr, &[t2p1(f), t2p1(f)]),
        },
        Table2Expectation {
            label: "(t-η)^2, (t-η)^2; (s,u)_{t-η,2} hyperbolic",
            length: 2,
            printed: true,
            matcher: |f, pr| {
                for_some_eta(f, pr, |eta, l, _| {
                    factors_are(pr, &[l.pow(2), l.pow(2)]) && pr.wall_class(eta, 2).is_some_and(|c| c.is_hyperbolic(f))
                })
            },
        },
        Table2Expectation {
            label: "t^4+1",
            length: 3,
            printed: true,
            matcher: |f, pr| factors_are(pr, &[Poly::new(f, &[1, 0, 0, 0, 1])]),
        },
        Table2Expectation {
            label: "(t+η)^2(t-η), t-η",
            length: 3,
            printed: true,
            matcher: |f, pr| for_some_eta(f, pr, |_, l, lm| factors_are(pr, &[l.clone(), &lm.pow(2) * l])),
        },
        Table2Expectation {
            label: "(t^2-1)^2; (s,u)_{t-1,2} ≃ (s,u)_{t+1,2}",
            length: 3,
            printed: true,
            matcher: |f, pr| {
                factors_are(pr, &[Poly::new(f, &[-1, 0, 1]).pow(2)]) && pr.wall_class(1, 2) == pr.wall_class(-1, 2)
            },
        },
        Table2Expectation {
            label: "t^4+t^3+t^2+t+1",
            length: 4,
            printed: true,
            matcher: |f, pr| factors_are(pr, &[Poly::new(f, &[1, 1, 1, 1, 1])]),
        },
        Table2Expectation {
            label: "t^4-t^3+t^2-t+1",
            length: 4,
            printed: true,
            matcher: |f, pr| factors_are(pr, &[Poly::new(f, &[1, -1, 1, -1, 1])]),
        },
        Table2Expectation {
            label: "(t-η)^4",
            length: 4,
            printed: true,
            matcher: |f, pr| for_some_eta(f, pr, |_, l, _| factors_are(pr, &[l.pow(4)])),
        },
        Table2Expectation {
            label: "(t^2+1)^2",
            length: 4,
            printed: true,
            matcher: |f, pr| factors_are(pr, &[t2p1(f).pow(2)]),
        },
        Table2Expectation {
            label: "(t-η)^2, (t-η)^2; (s,u)_{t-η,2} non-hyperbolic",
            length: 4,
            printed: true,
            matcher: |f, pr| {
                for_some_eta(f, pr, |eta, l, _| {
                    factors_are(pr, &[l.pow(2), l.pow(2)]) && pr.wall_class(eta, 2).is_some_and(|c| !c.is_hyperbolic(f))
                })
            },
        },
        Table2Expectation {
            label: "(t^2-1)^2; (s,u)_{t-1,2} ≃ -(s,u)_{t+1,2}",
            length: 5,
            printed: true,
            matcher: |f, pr| {
                factors_are(pr, &[Poly::new(f, &[-1, 0, 1]).pow(2)])
                    && match (pr.wall_class(1, 2), pr.wall_class(-1, 2)) {
                        (Some(a), Some(b)) => a == b.negated(f),
                        _ => false,
                    }
            },
        },
        Table2Expectation {
            label: "(t^2+1)(t-η)^2",
            length: 5,
            printed: true,
            matcher: |f, pr| for_some_eta(f, pr, |_, l, _| factors_are(pr, &[&t2p1(f) * &l.pow(2)])),
        },
        // Classes of the form v ⊥ η·id with v in Sp_2 that the printed table omits.
        // Neither is 2-reflectional (odd Jordan number) nor 3-reflectional (nonzero trace),
        // and both are 4-reflectional as a plane cell summed with a type VI cell.
        Table2Expectation {
            label: "t-η, t-η, (t-η)^2",
            length: 4,
            printed: false,
            matcher: |f, pr| for_some_eta(f, pr, |_, l, _| factors_are(pr, &[l.clone(), l.clone(), l.pow(2)])),
        },
        Table2Expectation {
            label: "t-η, (t^2+1)(t-η)",
            length: 4,
            printed: false,
            matcher: |f, pr| for_some_eta(f, pr, |_, l, _| factors_are(pr, &[l.clone(), &t2p1(f) * l])),
        },
    ]
}

#[derive(Clone, Debug)]
pub struct ExpectationOutcome {
    pub label: &'static str,
    pub expected: usize,
    pub printed: bool,
    /// Census lengths of the matching classes, with their class sizes.
    pub matched: Vec<(String, Option<usize>, u64)>,
}

impl ExpectationOutcome {
    pub fn passed(&self) -> bool {
        !self.matched.is_empty() && self.matched.iter().all(|(_, l, _)| *l == Some(self.expected))
    }
}

#[derive(Clone, Debug)]
pub struct Table2Report {
    pub outcomes: Vec<ExpectationOutcome>,
    /// Non-involution classes that match no expectation.
    pub unmatched: Vec<String>,
    pub involution_classes: usize,
}

impl Table2Report {
    pub fn passed(&self) -> bool {
        self.unmatched.is_empty() && self.outcomes.iter().all(|o| o.passed())
    }

    pub fn printed_rows_passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.printed && o.passed()).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let got: Vec<String> =
                o.matched.iter().map(|(_, l, _)| l.map_or("none".into(), |l| l.to_string())).collect();
            let _ = writeln!(
                out,
                "{} {:<48} expected {}  census [{}] ({} classes){}",
                if o.passed() { "PASS" } else { "FAIL" },
                o.label,
                o.expected,
                got.join(","),
                o.matched.len(),
                if o.printed { "" } else { "  [not in printed table]" }
            );
        }
        for u in &self.unmatched {
            let _ = writeln!(out, "FAIL unmatched census class {u}");
        }
        let _ = writeln!(
            out,
            "{} of 12 printed rows matched; {} involution classes excluded",
            self.printed_rows_passed(),
            self.involution_classes
        );
        out
    }
}

pub fn table2_report(table: &CensusTable) -> Table2Report {
    let field = Field::new(table.meta.p).expect("valid modulus");
    let expectations = table2_expectations();
    let mut outcomes: Vec<ExpectationOutcome> = expectations
        .iter()
        .map(|e| ExpectationOutcome { label: e.label, expected: e.length, printed: e.printed, matched: Vec::new() })
        .collect();
    let mut unmatched = Vec::new();
    let mut involution_classes = 0;
    for row in &table.rows {
        if row.refl_length.is_some_and(|l| l <= 1) {
            involution_classes += 1;
            continue;
        }
        let hits: Vec<usize> =
            (0..expectations.len()).filter(|&i| expectations[i].matches(field, &row.profile)).collect();
        match hits.as_slice() {
            [i] => outcomes[*i].matched.push((row.profile.to_string(), row.refl_length, row.class_size)),
            [] => unmatched.push(format!("{} (length {:?})", row.profile, row.refl_length)),
            many => unmatched.push(format!("{} matches {} expectations", row.profile, many.len())),
        }
    }
    Table2Report { outcomes, unmatched, involution_classes }
}

pub fn compare_table2(table: &CensusTable) -> Result<Table2Report> {
    if table.meta.p != 3 || table.meta.n != 4 {
        return Err(Error::PreconditionViolated("the table describes Sp_4(F_3)".into()));
    }
    let report = table2_report(table);
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::Mismatch(report.render()))
    }
}

/// Random element sampler used by the sampled (non-exhaustive) checks.
pub fn random_elements(space: &SympSpace, count: usize, seed: u64) -> Vec<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| space.random_element(&mut rng)).collect()
}

/// Uniform random element of an enumerated group.
pub fn random_from_table<R: Rng + ?Sized>(group: &GroupTable, rng: &mut R) -> Mat {
    group.get(rng.gen_range(0..group.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Field {
        Field::new(3).unwrap()
    }

    #[test]
    fn base_cases() {
        let table = InvolutionTable::for_group(4, 3).unwrap();
        assert_eq!(table.len(), 92);
        let s = table.space();
        assert_eq!(refl_length(&SPair::identity(s), DEFAULT_MAX_K, &table).unwrap(), 0);
        assert_eq!(refl_length(&SPair::new(-&s.identity()).unwrap(), DEFAULT_MAX_K, &table).unwrap(), 1);
    }

    #[test]
    fn sp2_f3_order_three_elements_are_not_two_reflectional() {
        let table = InvolutionTable::for_group(2, 3).unwrap();
        let u = SPair::new(Mat::from_rows(f3(), &[[1, 1], [0, 1]])).unwrap();
        assert!(!nielsen_2refl(&u));
        assert_eq!(refl_length(&u, 3, &table), Err(Error::Exceeds(3)));
    }

    #[test]
    fn quarter_turn_is_two_reflectional() {
        for p in [3, 5, 7] {
            let f = Field::new(p).unwrap();
            let q = crate::sympcore::symplectic_extension(&Mat::companion(&Poly::new(f, &[1, 0, 1]))).unwrap();
            assert!(nielsen_2refl(&SPair::new(q).unwrap()), "p = {p}");
        }
    }

    #[test]
    fn sp2_f3_census() {
        let t = census(2, 3).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.class_size).sum::<u64>(), 24);
        // only ±I are involutions, so nothing else is reachable
        for r in &t.rows {
            let expected = if r.representative.is_identity() {
                Some(0)
            } else if (&r.representative * &r.representative).is_identity() {
                Some(1)
            } else {
                None
            };
            assert_eq!(r.refl_length, expected);
        }
        assert_eq!(t.max_length(), None);
        let check = verify_theorem(3, 2, 2).unwrap();
        assert!(!check.holds);
        assert_eq!(check.witness.unwrap().refl_length, None);
    }

    #[test]
    fn witness_predicate_identity() {
        let table = InvolutionTable::for_group(4, 3).unwrap();
        let i0 = table.mats()[17].clone();
        let pair = SPair::new(i0.clone()).unwrap();
        let w = find_adjacent_witness(&pair, |x| x.u.is_identity(), &table).unwrap();
        assert_eq!(w, i0);
    }
}
