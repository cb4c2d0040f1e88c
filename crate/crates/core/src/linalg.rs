//! Dense matrices over F_p and similarity invariants.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfpoly::{Field, FieldElem, Poly};

pub type Vector = Vec<FieldElem>;

/// Row-major matrix over F_p. Most similarity operations require it to be
/// square; rectangular shapes appear as bases and Gram blocks.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat[F{}]{:?}", self.field.p(), self.to_rows())
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|&x| format!("{:>3}", self.field.signed(x))).collect();
            writeln!(f, "[{} ]", row.join(""))?;
        }
        Ok(())
    }
}

impl Mat {
    pub fn zero(field: Field, rows: usize, cols: usize) -> Mat {
        Mat { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> Mat {
        Mat::scalar(field, n, 1)
    }

    pub fn scalar(field: Field, n: usize, c: FieldElem) -> Mat {
        let mut m = Mat::zero(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn from_fn(field: Field, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(field.elem(f(i, j)));
            }
        }
        Mat { field, rows, cols, data }
    }

    /// Square or rectangular matrix from signed integer rows.
    pub fn from_rows<R: AsRef<[i64]>>(field: Field, rows: &[R]) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.as_ref().len());
        assert!(rows.iter().all(|x| x.as_ref().len() == c), "ragged matrix rows");
        Mat::from_fn(field, r, c, |i, j| rows[i].as_ref()[j])
    }

    /// Matrix whose columns are the given vectors (each of length `dim`).
    pub fn from_columns(field: Field, dim: usize, cols: &[Vector]) -> Mat {
        let mut m = Mat::zero(field, dim, cols.len());
        for (j, v) in cols.iter().enumerate() {
            assert_eq!(v.len(), dim, "column length");
            for i in 0..dim {
                m.data[i * cols.len() + j] = v[i];
            }
        }
        m
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Dimension of a square matrix.
    pub fn n(&self) -> usize {
        assert_eq!(self.rows, self.cols, "expected a square matrix");
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[FieldElem] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElem {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FieldElem) {
        self.data[i * self.cols + j] = v % self.field.p() as u8;
    }

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vector> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<FieldElem>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Mat::identity(self.field, self.rows)
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.field, self.cols, self.rows, |i, j| self.get(j, i) as i64)
    }

    pub fn scale(&self, c: FieldElem) -> Mat {
        let f = self.field;
        Mat { data: self.data.iter().map(|&x| f.mul(x, c)).collect(), ..self.clone() }
    }

    pub fn trace(&self) -> FieldElem {
        let f = self.field;
        (0..self.n()).fold(0, |acc, i| f.add(acc, self.get(i, i)))
    }

    pub fn mul_vec(&self, v: &[FieldElem]) -> Vector {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension");
        let p = self.field.p();
        (0..self.rows)
            .map(|i| {
                let s: u32 = self.row(i).iter().zip(v).map(|(&a, &b)| a as u32 * b as u32).sum();
                (s % p) as u8
            })
            .collect()
    }

    pub fn pow(&self, mut e: u64) -> Mat {
        let mut base = self.clone();
        let mut acc = Mat::identity(self.field, self.n());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// `p(A)` by Horner's rule.
    pub fn eval_poly(&self, poly: &Poly) -> Mat {
        self.field.check_same(poly.field());
        let n = self.n();
        let mut acc = Mat::zero(self.field, n, n);
        for &c in poly.coeffs().iter().rev() {
            acc = &(&acc * self) + &Mat::scalar(self.field, n, c);
        }
        acc
    }

    pub fn block_diag(field: Field, blocks: &[Mat]) -> Mat {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = Mat::zero(field, r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            field.check_same(b.field);
            m.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Mat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.data[(r0 + i) * self.cols + c0 + j] = b.get(i, j);
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat {
        Mat::from_fn(self.field, rows, cols, |i, j| self.get(r0 + i, c0 + j) as i64)
    }

    /// Companion matrix of a monic polynomial (ones on the subdiagonal,
    /// negated coefficients in the last column).
    pub fn companion(poly: &Poly) -> Mat {
        assert!(poly.is_monic(), "companion matrix needs a monic polynomial");
        let f = poly.field();
        let d = poly.deg();
        let mut m = Mat::zero(f, d, d);
        for i in 1..d {
            m.data[i * d + i - 1] = 1;
        }
        for i in 0..d {
            m.data[i * d + d - 1] = f.neg(poly.coeff(i));
        }
        m
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let f = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            m.swap_rows(r, pr);
            let inv = f.inv(m.get(r, c));
            for j in c..m.cols {
                let v = f.mul(m.get(r, j), inv);
                m.data[r * m.cols + j] = v;
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let factor = m.get(i, c);
                if factor != 0 {
                    for j in c..m.cols {
                        let v = f.sub(m.get(i, j), f.mul(factor, m.get(r, j)));
                        m.data[i * m.cols + j] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn det(&self) -> FieldElem {
        let f = self.field;
        let n = self.n();
        let mut m = self.clone();
        let mut det: FieldElem = 1;
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| m.get(i, c) != 0) else {
                return 0;
            };
            if pr != c {
                m.swap_rows(pr, c);
                det = f.neg(det);
            }
            let piv = m.get(c, c);
            det = f.mul(det, piv);
            let inv = f.inv(piv);
            for i in c + 1..n {
                let factor = f.mul(m.get(i, c), inv);
                if factor != 0 {
                    for j in c..n {
                        let v = f.sub(m.get(i, j), f.mul(factor, m.get(c, j)));
                        m.data[i * n + j] = v;
                    }
                }
            }
        }
        det
    }

    /// Basis of the right kernel, one vector per free column of the reduced
    /// echelon form, in increasing free-column order.
    pub fn kernel_basis(&self) -> Vec<Vector> {
        let f = self.field;
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![0u8; self.cols];
                v[free] = 1;
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = f.neg(r.get(row, free));
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Result<Mat> {
        let n = self.n();
        let mut aug = Mat::zero(self.field, n, 2 * n);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, &Mat::identity(self.field, n));
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Singular);
        }
        Ok(r.block(0, n, n, n))
    }

    /// One solution of `A x = b` (free variables set to zero).
    pub fn solve(&self, b: &[FieldElem]) -> Result<Vector> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        let mut aug = Mat::zero(self.field, self.rows, self.cols + 1);
        aug.set_block(0, 0, self);
        for (i, &x) in b.iter().enumerate() {
            aug.data[i * (self.cols + 1) + self.cols] = x;
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Err(Error::Inconsistent);
        }
        let mut x = vec![0u8; self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r.get(row, self.cols);
        }
        Ok(x)
    }

    /// `M♯ = (Mᵀ)⁻¹`.
    pub fn sharp(&self) -> Result<Mat> {
        self.transpose().inverse()
    }

    pub fn char_poly(&self) -> Poly {
        self.invariant_factors().product(self.field)
    }

    pub fn min_poly(&self) -> Poly {
        self.invariant_factors().factors.last().cloned().unwrap_or_else(|| Poly::one(self.field))
    }

    /// Characteristic polynomial through reduction to upper Hessenberg form.
    /// Independent of the Smith normal form route.
    pub fn char_poly_hessenberg(&self) -> Poly {
        let f = self.field;
        let n = self.n();
        let mut h = self.clone();
        for j in 0..n.saturating_sub(2) {
            let Some(pi) = (j + 1..n).find(|&i| h.get(i, j) != 0) else {
                continue;
            };
            if pi != j + 1 {
                h.swap_rows(pi, j + 1);
                for r in 0..n {
                    h.data.swap(r * n + pi, r * n + j + 1);
                }
            }
            let inv = f.inv(h.get(j + 1, j));
            for k in j + 2..n {
                let c = f.mul(h.get(k, j), inv);
                if c == 0 {
                    continue;
                }
                for col in 0..n {
                    let v = f.sub(h.get(k, col), f.mul(c, h.get(j + 1, col)));
                    h.data[k * n + col] = v;
                }
                for row in 0..n {
                    let v = f.add(h.get(row, j + 1), f.mul(c, h.get(row, k)));
                    h.data[row * n + j + 1] = v;
                }
            }
        }
        let t = Poly::t(f);
        let mut ps = vec![Poly::one(f)];
        for k in 0..n {
            let mut next = &(&t - &Poly::constant(f, h.get(k, k))) * &ps[k];
            let mut prod: FieldElem = 1;
            for i in (0..k).rev() {
                prod = f.mul(prod, h.get(i + 1, i));
                let c = f.mul(h.get(i, k), prod);
                if c != 0 {
                    next = &next - &ps[i].scale(c);
                }
            }
            ps.push(next);
        }
        ps.pop().unwrap()
    }

    /// Invariant factors via the Smith normal form of `tI − A` over F_p[t].
    pub fn invariant_factors(&self) -> InvariantFactors {
        let f = self.field;
        let n = self.n();
        let mut m: Vec<Vec<Poly>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let c = f.neg(self.get(i, j));
                        if i == j {
                            Poly::from_residues(f, vec![c, 1])
                        } else {
                            Poly::constant(f, c)
                        }
                    })
                    .collect()
            })
            .collect();
        let diag = smith_diagonal(&mut m);
        InvariantFactors { factors: diag.into_iter().filter(|d| d.deg() > 0).collect() }
    }

    pub fn is_cyclic(&self) -> bool {
        self.invariant_factors().factors.len() <= 1
    }

    /// `n_{p,r}(A)` through ranks of powers of `p(A)`.
    pub fn jordan_number(&self, p: &Poly, r: u32) -> usize {
        assert!(r >= 1, "Jordan numbers are indexed by r >= 1");
        let pa = self.eval_poly(p);
        let n = self.n();
        let rank_pow = |k: u32| if k == 0 { n } else { pa.pow(k as u64).rank() };
        let num = rank_pow(r - 1) + rank_pow(r + 1) - 2 * rank_pow(r);
        num / p.deg()
    }

    pub fn similar(&self, other: &Mat) -> Result<bool> {
        if self.rows != other.rows || !self.is_square() || !other.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, got: other.rows });
        }
        Ok(self.invariant_factors() == other.invariant_factors())
    }

    /// Base-p packing of the entries (row-major, first entry most
    /// significant). `None` when the matrix does not fit in 128 bits.
    pub fn pack(&self) -> Option<u128> {
        let p = self.field.p() as u128;
        let mut code: u128 = 0;
        for &x in &self.data {
            code = code.checked_mul(p)?.checked_add(x as u128)?;
        }
        Some(code)
    }

    pub fn unpack(field: Field, n: usize, mut code: u128) -> Mat {
        let p = field.p() as u128;
        let mut data = vec![0u8; n * n];
        for x in data.iter_mut().rev() {
            *x = (code % p) as u8;
            code /= p;
        }
        Mat { field, rows: n, cols: n, data }
    }

    pub fn random<R: Rng + ?Sized>(field: Field, rows: usize, cols: usize, rng: &mut R) -> Mat {
        let p = field.p() as u8;
        Mat { field, rows, cols, data: (0..rows * cols).map(|_| rng.gen_range(0..p)).collect() }
    }

    pub fn random_invertible<R: Rng + ?Sized>(field: Field, n: usize, rng: &mut R) -> Mat {
        loop {
            let m = Mat::random(field, n, n, rng);
            if m.is_invertible() {
                return m;
            }
        }
    }

    pub fn to_json(&self) -> MatJson {
        MatJson { p: self.field.p(), n: self.rows, entries: self.to_rows() }
    }

    pub fn from_json(j: &MatJson) -> Result<Mat> {
        let field = Field::new(j.p)?;
        if j.entries.len() != j.n || j.entries.iter().any(|r| r.len() != j.n) {
            return Err(Error::Parse(format!("expected a {0}x{0} entry array", j.n)));
        }
        if let Some(&bad) = j.entries.iter().flatten().find(|&&x| x >= j.p as FieldElem) {
            return Err(Error::Parse(format!("entry {bad} is not a residue mod {}", j.p)));
        }
        Ok(Mat { field, rows: j.n, cols: j.n, data: j.entries.iter().flatten().copied().collect() })
    }
}

/// Matrix interchange format: row-major residues.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatJson {
    pub p: u32,
    pub n: usize,
    pub entries: Vec<Vec<FieldElem>>,
}

/// Diagonal of a Smith normal form, each entry monic, in divisibility order.
fn smith_diagonal(m: &mut [Vec<Poly>]) -> Vec<Poly> {
    let n = m.len();
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        loop {
            let pivot = (k..n)
                .flat_map(|i| (k..n).map(move |j| (i, j)))
                .filter(|&(i, j)| !m[i][j].is_zero())
                .min_by_key(|&(i, j)| m[i][j].deg());
            let Some((pi, pj)) = pivot else {
                diag.extend((k..n).map(|_| Poly::zero(m[0][0].field())));
                return diag;
            };
            m.swap(k, pi);
            for row in m.iter_mut() {
                row.swap(k, pj);
            }
            let piv = m[k][k].clone();
            let mut reduced = true;
            for i in k + 1..n {
                if m[i][k].is_zero() {
                    continue;
                }
                let (q, r) = m[i][k].div_rem(&piv);
                if !r.is_zero() {
                    reduced = false;
                }
                for j in k..n {
                    let v = &m[i][j] - &(&q * &m[k][j]);
                    m[i][j] = v;
                }
            }
            for j in k + 1..n {
                if m[k][j].is_zero() {
                    continue;
                }
                let (q, r) = m[k][j].div_rem(&piv);
                if !r.is_zero() {
                    reduced = false;
                }
                for i in k..n {
                    let v = &m[i][j] - &(&m[i][k] * &q);
                    m[i][j] = v;
                }
            }
            if !reduced {
                continue;
            }
            let offender = (k + 1..n).find(|&i| (k + 1..n).any(|j| !piv.divides(&m[i][j])));
            if let Some(i) = offender {
                for j in k..n {
                    let v = &m[k][j] + &m[i][j];
                    m[k][j] = v;
                }
                continue;
            }
            diag.push(piv.monic());
            break;
        }
    }
    diag
}

/// Monic invariant factors, each dividing the next, units dropped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InvariantFactors {
    pub factors: Vec<Poly>,
}

impl InvariantFactors {
    pub fn product(&self, field: Field) -> Poly {
        self.factors.iter().fold(Poly::one(field), |acc, f| &acc * f)
    }

    /// Multiplicities of primary components: `(p, r) -> n_{p,r}`.
    pub fn jordan_numbers(&self) -> BTreeMap<(Poly, u32), usize> {
        let mut out = BTreeMap::new();
        for f in &self.factors {
            for (g, e) in f.factorize().expect("invariant factors are monic") {
                *out.entry((g, e)).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn is_chain(&self) -> bool {
        self.factors.windows(2).all(|w| w[0].divides(&w[1])) && self.factors.iter().all(|f| f.is_monic())
    }
}

impl fmt::Display for InvariantFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Row-reduced basis of the span of `vectors`.
pub fn span_basis(field: Field, dim: usize, vectors: &[Vector]) -> Vec<Vector> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = Mat::from_fn(field, vectors.len(), dim, |i, j| vectors[i][j] as i64);
    let (r, pivots) = m.rref();
    (0..pivots.len()).map(|i| r.row(i).to_vec()).collect()
}

pub fn rank_of(field: Field, dim: usize, vectors: &[Vector]) -> usize {
    span_basis(field, dim, vectors).len()
}

pub fn in_span(field: Field, dim: usize, vectors: &[Vector], v: &[FieldElem]) -> bool {
    let mut all = vectors.to_vec();
    all.push(v.to_vec());
    rank_of(field, dim, &all) == rank_of(field, dim, vectors)
}

/// Vectors from `candidates`, taken greedily, that extend `base` to an
/// independent family; stops once `target` vectors have been added.
pub fn extend_independent(
    field: Field,
    dim: usize,
    base: &[Vector],
    candidates: &[Vector],
    target: usize,
) -> Vec<Vector> {
    let mut acc = base.to_vec();
    let mut added = Vec::new();
    for c in candidates {
        if added.len() == target {
            break;
        }
        if !in_span(field, dim, &acc, c) {
            acc.push(c.clone());
            added.push(c.clone());
        }
    }
    added
}

pub fn vec_add(field: Field, a: &[FieldElem], b: &[FieldElem]) -> Vector {
    a.iter().zip(b).map(|(&x, &y)| field.add(x, y)).collect()
}

pub fn vec_sub(field: Field, a: &[FieldElem], b: &[FieldElem]) -> Vector {
    a.iter().zip(b).map(|(&x, &y)| field.sub(x, y)).collect()
}

pub fn vec_scale(field: Field, a: &[FieldElem], c: FieldElem) -> Vector {
    a.iter().map(|&x| field.mul(x, c)).collect()
}

pub fn unit_vector(dim: usize, i: usize) -> Vector {
    let mut v = vec![0; dim];
    v[i] = 1;
    v
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        self.field.check_same(rhs.field);
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix shape mismatch");
        let f = self.field;
        Mat { data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f.add(a, b)).collect(), ..self.clone() }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        self.field.check_same(rhs.field);
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix shape mismatch");
        let f = self.field;
        Mat { data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f.sub(a, b)).collect(), ..self.clone() }
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        let f = self.field;
        Mat { data: self.data.iter().map(|&a| f.neg(a)).collect(), ..self.clone() }
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        self.field.check_same(rhs.field);
        assert_eq!(self.cols, rhs.rows, "matrix product dimension");
        let p = self.field.p();
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut data = vec![0u8; n * m];
        let mut acc = vec![0u32; m];
        for i in 0..n {
            acc.iter_mut().for_each(|x| *x = 0);
            for l in 0..k {
                let a = self.data[i * k + l] as u32;
                if a == 0 {
                    continue;
                }
                for (j, x) in acc.iter_mut().enumerate() {
                    *x += a * rhs.data[l * m + j] as u32;
                }
            }
            for j in 0..m {
                data[i * m + j] = (acc[j] % p) as u8;
            }
        }
        Mat { field: self.field, rows: n, cols: m, data }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Mat {
            type Output = Mat;
            fn $m(self, rhs: Mat) -> Mat {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
