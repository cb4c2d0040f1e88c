//! Symplectic spaces in the standard Gram convention, membership tests,
//! structural constructions, and exhaustive enumeration of small groups.
//!
//! Every space is `F_p^{2m}` with basis `(e_1..e_m, f_1..f_m)` and Gram
//! matrix `J = [[0, I_m], [-I_m, 0]]`, so `s(x, y) = xᵀ J y`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::PathBuf;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gfpoly::{Field, FieldElem, Poly};
use crate::linalg::{vec_add, vec_scale, vec_sub, Mat, Vector};
use crate::subspace::subspaces;

/// Identifier of the Gram convention used in serialized artifacts.
pub const GRAM_CONVENTION: &str = "J-std-v1";

/// Default element-count limit for exhaustive group enumeration.
pub const DEFAULT_CAP: u128 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SympSpace {
    field: Field,
    two_m: usize,
}

impl SympSpace {
    pub fn new(field: Field, two_m: usize) -> Result<SympSpace> {
        if !two_m.is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: two_m + 1, got: two_m });
        }
        Ok(SympSpace { field, two_m })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.two_m
    }

    pub fn m(&self) -> usize {
        self.two_m / 2
    }

    pub fn gram(&self) -> Mat {
        standard_gram(self.field, self.two_m)
    }

    pub fn form(&self, x: &[FieldElem], y: &[FieldElem]) -> FieldElem {
        let f = self.field;
        let m = self.m();
        (0..m).fold(0, |acc, i| f.add(acc, f.sub(f.mul(x[i], y[m + i]), f.mul(x[m + i], y[i]))))
    }

    pub fn e(&self, i: usize) -> Vector {
        crate::linalg::unit_vector(self.two_m, i)
    }

    pub fn f(&self, i: usize) -> Vector {
        crate::linalg::unit_vector(self.two_m, self.m() + i)
    }

    /// Gram matrix of `s` on the given family.
    pub fn gram_of(&self, basis: &[Vector]) -> Mat {
        let k = basis.len();
        Mat::from_fn(self.field, k, k, |i, j| self.form(&basis[i], &basis[j]) as i64)
    }

    pub fn is_regular(&self, basis: &[Vector]) -> bool {
        self.gram_of(basis).is_invertible()
    }

    /// `W^{⊥_s}` for a family spanning `W`, as an echelon kernel basis.
    pub fn orthogonal_complement(&self, basis: &[Vector]) -> Vec<Vector> {
        if basis.is_empty() {
            return (0..self.two_m).map(|i| crate::linalg::unit_vector(self.two_m, i)).collect();
        }
        let j = self.gram();
        let rows: Vec<Vector> = basis.iter().map(|w| j.transpose().mul_vec(w)).collect();
        // s(w, x) = wᵀ J x, so x ⊥ w iff (Jᵀ w) · x = 0
        let m = Mat::from_fn(self.field, rows.len(), self.two_m, |i, k| rows[i][k] as i64);
        m.kernel_basis()
    }

    fn check_dim(&self, u: &Mat) -> Result<()> {
        if !u.is_square() || u.rows() != self.two_m {
            return Err(Error::DimensionMismatch { expected: self.two_m, got: u.rows() });
        }
        Ok(())
    }

    pub fn is_symplectic(&self, u: &Mat) -> Result<bool> {
        self.check_dim(u)?;
        Ok(symplectic_defect(u).is_none())
    }

    /// Symplectic with `U² = I`; the identity counts.
    pub fn is_symplectic_involution(&self, u: &Mat) -> Result<bool> {
        Ok(self.is_symplectic(u)? && (u * u).is_identity())
    }

    /// `x ↦ x + λ s(x, v) v`.
    pub fn transvection(&self, v: &[FieldElem], lambda: FieldElem) -> Result<Mat> {
        if v.len() != self.two_m {
            return Err(Error::DimensionMismatch { expected: self.two_m, got: v.len() });
        }
        if v.iter().all(|&x| x == 0) {
            return Err(Error::ZeroVector);
        }
        let f = self.field;
        let jv = self.gram().mul_vec(v);
        let n = self.two_m;
        // s(x, v) = xᵀ J v = (J v) · x
        Ok(Mat::from_fn(f, n, n, |i, k| {
            let d = if i == k { 1 } else { 0 };
            (d + f.mul(lambda, f.mul(v[i], jv[k])) as i64) % f.p() as i64
        }))
    }

    pub fn standard_lagrangian(&self) -> Vec<Vector> {
        (0..self.m()).map(|i| self.e(i)).collect()
    }

    pub fn is_totally_singular(&self, basis: &[Vector]) -> bool {
        self.gram_of(basis).is_zero()
    }

    pub fn is_lagrangian(&self, basis: &[Vector]) -> bool {
        basis.len() == self.m()
            && crate::linalg::rank_of(self.field, self.two_m, basis) == self.m()
            && self.is_totally_singular(basis)
    }

    /// A Lagrangian `L'` with `L ⊕ L' = V`, given as a basis dual to the
    /// basis of `L` (`s(l_i, l'_j) = δ_ij`).
    pub fn transverse_complement(&self, lagrangian: &[Vector]) -> Result<Vec<Vector>> {
        if !self.is_lagrangian(lagrangian) {
            return Err(Error::NotLagrangian);
        }
        let f = self.field;
        let m = self.m();
        let j = self.gram();
        let a = Mat::from_fn(f, m, self.two_m, |i, k| {
            let row = &lagrangian[i];
            (0..self.two_m).fold(0u8, |acc, l| f.add(acc, f.mul(row[l], j.get(l, k)))) as i64
        });
        let mut duals = Vec::with_capacity(m);
        for i in 0..m {
            duals.push(a.solve(&crate::linalg::unit_vector(m, i))?);
        }
        let half = f.inv(2);
        let corrected = (0..m)
            .map(|i| {
                let mut g = duals[i].clone();
                for (k, l) in lagrangian.iter().enumerate() {
                    let c = f.neg(f.mul(half, self.form(&duals[i], &duals[k])));
                    g = vec_add(f, &g, &vec_scale(f, l, c));
                }
                g
            })
            .collect();
        Ok(corrected)
    }

    pub fn identity(&self) -> Mat {
        Mat::identity(self.field, self.two_m)
    }

    /// Random element as a product of random transvections.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let mut u = self.identity();
        let p = self.field.p() as u8;
        for _ in 0..(4 * self.two_m + 8) {
            let v: Vector = loop {
                let v: Vector = (0..self.two_m).map(|_| rng.gen_range(0..p)).collect();
                if v.iter().any(|&x| x != 0) {
                    break v;
                }
            };
            let lambda = rng.gen_range(1..p);
            u = &u * &self.transvection(&v, lambda).unwrap();
        }
        u
    }
}

pub fn standard_gram(field: Field, two_m: usize) -> Mat {
    let m = two_m / 2;
    Mat::from_fn(field, two_m, two_m, |i, j| {
        if i < m && j == i + m {
            1
        } else if i >= m && j + m == i {
            -1
        } else {
            0
        }
    })
}

/// First entry `(i, j)` where `uᵀ J u` differs from `J`.
pub fn symplectic_defect(u: &Mat) -> Option<(usize, usize)> {
    let n = u.rows();
    if !n.is_multiple_of(2) || !u.is_square() {
        return Some((0, 0));
    }
    let j = standard_gram(u.field(), n);
    let g = &(&u.transpose() * &j) * u;
    (0..n).flat_map(|i| (0..n).map(move |k| (i, k))).find(|&(i, k)| g.get(i, k) != j.get(i, k))
}

/// A symplectic space together with one of its isometries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SPair {
    pub space: SympSpace,
    pub u: Mat,
}

impl SPair {
    pub fn new(u: Mat) -> Result<SPair> {
        if !u.is_square() || !u.rows().is_multiple_of(2) {
            return Err(Error::NotSymplectic(format!(
                "a {}x{} matrix cannot preserve a symplectic form",
                u.rows(),
                u.cols()
            )));
        }
        if let Some((i, j)) = symplectic_defect(&u) {
            return Err(Error::NotSymplectic(format!("(UᵀJU)[{i}][{j}] != J[{i}][{j}]")));
        }
        let space = SympSpace::new(u.field(), u.rows())?;
        Ok(SPair { space, u })
    }

    pub fn identity(space: SympSpace) -> SPair {
        SPair { space, u: space.identity() }
    }

    pub fn field(&self) -> Field {
        self.space.field
    }

    pub fn dim(&self) -> usize {
        self.space.two_m
    }

    pub fn conjugate_by(&self, g: &Mat) -> SPair {
        let inv = g.inverse().expect("conjugator must be invertible");
        SPair { space: self.space, u: &(g * &self.u) * &inv }
    }

    pub fn inverse(&self) -> SPair {
        SPair { space: self.space, u: self.u.inverse().expect("isometries are invertible") }
    }
}

/// `A ⊕ A♯`, an isometry stabilizing both standard Lagrangians.
pub fn symplectic_extension(a: &Mat) -> Result<Mat> {
    let sharp = a.sharp()?;
    Ok(Mat::block_diag(a.field(), &[a.clone(), sharp]))
}

/// Orthogonal sum, re-indexed so the result uses the standard convention:
/// the `e`-vectors of every part come first, then all `f`-vectors.
pub fn orthogonal_sum(field: Field, pairs: &[SPair]) -> SPair {
    let total_m: usize = pairs.iter().map(|p| p.space.m()).sum();
    let n = 2 * total_m;
    let mut u = Mat::zero(field, n, n);
    let mut offset = 0;
    for pair in pairs {
        field.check_same(pair.field());
        let m = pair.space.m();
        let index = |i: usize| if i < m { offset + i } else { total_m + offset + (i - m) };
        for i in 0..2 * m {
            for j in 0..2 * m {
                u.set(index(i), index(j), pair.u.get(i, j));
            }
        }
        offset += m;
    }
    SPair { space: SympSpace { field, two_m: n }, u }
}

/// Symplectic basis for a nondegenerate alternating form given by its Gram
/// matrix `g`: returns `T` with `Tᵀ g T = J`.
pub fn symplectic_basis(g: &Mat) -> Result<Mat> {
    let f = g.field();
    let n = g.n();
    if !n.is_multiple_of(2) || !g.is_invertible() {
        return Err(Error::Singular);
    }
    let form = |x: &Vector, y: &Vector| -> FieldElem {
        let gy = g.mul_vec(y);
        x.iter().zip(&gy).fold(0, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
    };
    let mut pool: Vec<Vector> = (0..n).map(|i| crate::linalg::unit_vector(n, i)).collect();
    let mut es = Vec::new();
    let mut fs = Vec::new();
    while let Some(x) = pool.first().cloned() {
        pool.remove(0);
        let Some(pos) = pool.iter().position(|y| form(&x, y) != 0) else {
            return Err(Error::Singular);
        };
        let y = pool.remove(pos);
        let e = x;
        let fv = vec_scale(f, &y, f.inv(form(&e, &y)));
        pool = pool
            .into_iter()
            .map(|z| {
                let a = form(&z, &fv);
                let b = form(&z, &e);
                let z = vec_sub(f, &z, &vec_scale(f, &e, a));
                vec_add(f, &z, &vec_scale(f, &fv, b))
            })
            .collect();
        es.push(e);
        fs.push(fv);
    }
    es.extend(fs);
    Ok(Mat::from_columns(f, n, &es))
}

/// Summand of an orthogonal primary splitting: the restricted pair in the
/// standard convention, and its basis as columns in ambient coordinates.
#[derive(Clone, Debug)]
pub struct PrimarySummand {
    pub pair: SPair,
    pub basis: Mat,
    /// Irreducible factors of the summand's characteristic polynomial (`p`, and `p♯` when different).
    pub primes: Vec<Poly>,
}

/// Splits `V` into the generalized kernels of `p(u)` for each reciprocal
/// class `{p, p♯}` of irreducible factors of the characteristic polynomial.
pub fn orthogonal_primary_split(pair: &SPair) -> Result<Vec<PrimarySummand>> {
    let f = pair.field();
    let n = pair.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let chi = pair.u.char_poly();
    let factors = chi.factorize()?;
    let mut seen: Vec<Poly> = Vec::new();
    let mut out = Vec::new();
    for (p, e) in &factors {
        if seen.contains(p) {
            continue;
        }
        let mate = p.reciprocal()?;
        let mut group = vec![(p.clone(), *e)];
        if mate != *p {
            let e2 = factors
                .iter()
                .find(|(g, _)| *g == mate)
                .map(|(_, e)| *e)
                .ok_or_else(|| Error::NotSymplectic(format!("factor {p} appears without its reciprocal {mate}")))?;
            group.push((mate.clone(), e2));
        }
        seen.extend(group.iter().map(|(g, _)| g.clone()));
        let mut vecs = Vec::new();
        for (g, e) in &group {
            vecs.extend(pair.u.eval_poly(&g.pow(*e)).kernel_basis());
        }
        let gram = pair.space.gram_of(&vecs);
        let t = symplectic_basis(&gram)?;
        let b = Mat::from_columns(f, n, &vecs);
        let basis = &b * &t;
        let cols = basis.columns();
        let d = cols.len();
        let mut restricted = Mat::zero(f, d, d);
        for (j, c) in cols.iter().enumerate() {
            let coords = basis.solve(&pair.u.mul_vec(c))?;
            for i in 0..d {
                restricted.set(i, j, coords[i]);
            }
        }
        out.push(PrimarySummand {
            pair: SPair { space: SympSpace { field: f, two_m: d }, u: restricted },
            basis,
            primes: group.into_iter().map(|(g, _)| g).collect(),
        });
    }
    Ok(out)
}

/// `q^{m²} Π_{i=1}^{m} (q^{2i} − 1)`, saturating at `u128::MAX`.
pub fn group_order(two_m: usize, p: u32) -> u128 {
    let m = (two_m / 2) as u32;
    let q = p as u128;
    let mut order = q.checked_pow(m * m);
    for i in 1..=m {
        order = order.and_then(|o| q.checked_pow(2 * i).and_then(|x| o.checked_mul(x - 1)));
    }
    order.unwrap_or(u128::MAX)
}

/// Allocation-free arithmetic on packed square matrices.
#[derive(Clone, Copy, Debug)]
pub struct Codec {
    pub field: Field,
    pub n: usize,
}

impl Codec {
    pub fn new(field: Field, n: usize) -> Option<Codec> {
        let bits = (n * n) as f64 * (field.p() as f64).log2();
        (bits < 127.0).then_some(Codec { field, n })
    }

    #[inline]
    pub fn pack(&self, a: &[u8]) -> u128 {
        let p = self.field.p() as u128;
        a.iter().fold(0u128, |acc, &x| acc * p + x as u128)
    }

    #[inline]
    pub fn unpack(&self, mut code: u128, out: &mut [u8]) {
        let p = self.field.p() as u128;
        for x in out[..self.n * self.n].iter_mut().rev() {
            *x = (code % p) as u8;
            code /= p;
        }
    }

    #[inline]
    pub fn mul(&self, a: &[u8], b: &[u8], out: &mut [u8]) {
        let n = self.n;
        let p = self.field.p();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0u32;
                for k in 0..n {
                    s += a[i * n + k] as u32 * b[k * n + j] as u32;
                }
                out[i * n + j] = (s % p) as u8;
            }
        }
    }

    pub fn to_mat(&self, code: u128) -> Mat {
        Mat::unpack(self.field, self.n, code)
    }
}

/// All elements of `Sp_{2m}(F_p)` as sorted packed codes.
#[derive(Clone, Debug)]
pub struct GroupTable {
    codec: Codec,
    codes: Vec<u128>,
}

impl GroupTable {
    pub fn field(&self) -> Field {
        self.codec.field
    }

    pub fn dim(&self) -> usize {
        self.codec.n
    }

    pub fn codec(&self) -> Codec {
        self.codec
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[u128] {
        &self.codes
    }

    pub fn get(&self, i: usize) -> Mat {
        self.codec.to_mat(self.codes[i])
    }

    pub fn index_of(&self, m: &Mat) -> Option<usize> {
        self.codes.binary_search(&m.pack()?).ok()
    }

    pub fn contains(&self, m: &Mat) -> bool {
        self.index_of(m).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = Mat> + '_ {
        self.codes.iter().map(|&c| self.codec.to_mat(c))
    }
}

/// Transvection generators: unit vectors, `e_1 + f_1`, and `e_i + e_{i+1}`
/// to couple the hyperbolic planes. All with λ = 1.
pub fn generators(space: &SympSpace) -> Vec<Mat> {
    let f = space.field;
    let m = space.m();
    let mut vs: Vec<Vector> = (0..m).map(|i| space.e(i)).chain((0..m).map(|i| space.f(i))).collect();
    if m >= 1 {
        vs.push(vec_add(f, &space.e(0), &space.f(0)));
    }
    for i in 0..m.saturating_sub(1) {
        vs.push(vec_add(f, &space.e(i), &space.e(i + 1)));
    }
    vs.iter().map(|v| space.transvection(v, 1).unwrap()).collect()
}

fn cache_path(two_m: usize, p: u32) -> Option<PathBuf> {
    let dir = std::env::var_os("SYMPINV_CACHE_DIR")?;
    Some(PathBuf::from(dir).join(format!("sp{two_m}_f{p}.bin")))
}

fn load_cache(path: &PathBuf, expected: u128) -> Option<Vec<u128>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path).ok()?.read_to_end(&mut bytes).ok()?;
    if bytes.len() % 16 != 0 || (bytes.len() / 16) as u128 != expected {
        return None;
    }
    let codes: Vec<u128> = bytes.chunks_exact(16).map(|c| u128::from_le_bytes(c.try_into().unwrap())).collect();
    codes.windows(2).all(|w| w[0] < w[1]).then_some(codes)
}

fn store_cache(path: &PathBuf, codes: &[u128]) {
    let write = || -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("tmp");
        let mut file = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        for c in codes {
            file.write_all(&c.to_le_bytes())?;
        }
        file.flush()?;
        drop(file);
        std::fs::rename(&tmp, path)
    };
    // the cache is an optimization; failures to persist are not errors
    let _ = write();
}

/// Closure of the transvection generators under multiplication.
pub fn enumerate_group(two_m: usize, p: u32, cap: u128) -> Result<GroupTable> {
    let field = Field::new(p)?;
    let space = SympSpace::new(field, two_m)?;
    let order = group_order(two_m, p);
    if order > cap {
        return Err(Error::TooLarge { order, cap });
    }
    let codec = Codec::new(field, two_m).ok_or(Error::TooLarge { order, cap })?;
    let cache = cache_path(two_m, p);
    if let Some(codes) = cache.as_ref().and_then(|path| load_cache(path, order)) {
        return Ok(GroupTable { codec, codes });
    }
    let gens: Vec<Vec<u8>> = generators(&space).iter().map(|g| g.data().to_vec()).collect();
    let n2 = two_m * two_m;
    let start = codec.pack(space.identity().data());
    let mut seen: HashSet<u128> = HashSet::with_capacity(order.min(1 << 26) as usize);
    seen.insert(start);
    let mut frontier = vec![start];
    let mut cur = vec![0u8; n2];
    let mut prod = vec![0u8; n2];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &code in &frontier {
            codec.unpack(code, &mut cur);
            for g in &gens {
                codec.mul(g, &cur, &mut prod);
                let c = codec.pack(&prod);
                if seen.insert(c) {
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    let mut codes: Vec<u128> = seen.into_iter().collect();
    codes.sort_unstable();
    if codes.len() as u128 != order {
        return Err(Error::Mismatch(format!("closure has {} elements, order formula gives {order}", codes.len())));
    }
    if let Some(path) = cache {
        store_cache(&path, &codes);
    }
    Ok(GroupTable { codec, codes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvolutionMode {
    /// Filter an enumerated group table by `U² = I`.
    Filter,
    /// One involution per s-regular subspace (its −1 eigenspace).
    Constructive,
}

/// Involution with −1 eigenspace `W` and +1 eigenspace `W^{⊥_s}`.
pub fn involution_from_subspace(space: &SympSpace, w: &[Vector]) -> Result<Mat> {
    let f = space.field;
    let n = space.two_m;
    if w.is_empty() {
        return Ok(space.identity());
    }
    let b = Mat::from_columns(f, n, w);
    let g = space.gram_of(w);
    let ginv = g.inverse()?;
    // projection onto W along W^⊥: B G⁻¹ Bᵀ J
    let proj = &(&(&b * &ginv) * &b.transpose()) * &space.gram();
    Ok(&space.identity() - &proj.scale(2))
}

/// All symplectic involutions (including ±I), sorted by packed encoding.
pub fn enumerate_involutions(two_m: usize, p: u32, mode: InvolutionMode, cap: u128) -> Result<Vec<Mat>> {
    let field = Field::new(p)?;
    let space = SympSpace::new(field, two_m)?;
    let mut out = match mode {
        InvolutionMode::Filter => {
            let g = enumerate_group(two_m, p, cap)?;
            g.iter().filter(|u| (u * u).is_identity()).collect::<Vec<_>>()
        }
        InvolutionMode::Constructive => {
            let mut v = Vec::new();
            for k in (0..=two_m).step_by(2) {
                for w in subspaces(field, two_m, k) {
                    if space.is_regular(&w) {
                        v.push(involution_from_subspace(&space, &w)?);
                    }
                }
            }
            v
        }
    };
    out.sort();
    Ok(out)
}
