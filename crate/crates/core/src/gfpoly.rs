//! Arithmetic in the prime field F_p and in F_p[t].
//!
//! A [`Field`] is a small copyable context carrying the modulus. Scalars are
//! plain residues (`u8`) interpreted in that context; polynomials and matrices
//! carry their field and refuse to mix with values over another modulus.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A residue in `[0, p)`; only meaningful together with a [`Field`].
pub type FieldElem = u8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Field {
    p: u8,
}

impl TryFrom<u32> for Field {
    type Error = Error;
    fn try_from(p: u32) -> Result<Self> {
        Field::new(p)
    }
}

impl From<Field> for u32 {
    fn from(f: Field) -> u32 {
        f.p as u32
    }
}

impl Field {
    pub const MAX_MODULUS: u32 = 101;

    pub fn new(p: u32) -> Result<Field> {
        let prime = p >= 3 && p % 2 == 1 && (3..).step_by(2).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d));
        if !prime || p > Self::MAX_MODULUS {
            return Err(Error::InvalidModulus(p));
        }
        Ok(Field { p: p as u8 })
    }

    #[inline]
    pub fn p(self) -> u32 {
        self.p as u32
    }

    #[inline]
    pub fn elem(self, x: i64) -> FieldElem {
        x.rem_euclid(self.p as i64) as u8
    }

    #[inline]
    pub fn add(self, a: FieldElem, b: FieldElem) -> FieldElem {
        let s = a as u16 + b as u16;
        let p = self.p as u16;
        (if s >= p { s - p } else { s }) as u8
    }

    #[inline]
    pub fn sub(self, a: FieldElem, b: FieldElem) -> FieldElem {
        if a >= b {
            a - b
        } else {
            (a as u16 + self.p as u16 - b as u16) as u8
        }
    }

    #[inline]
    pub fn neg(self, a: FieldElem) -> FieldElem {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: FieldElem, b: FieldElem) -> FieldElem {
        ((a as u32 * b as u32) % self.p as u32) as u8
    }

    pub fn pow(self, a: FieldElem, mut e: u64) -> FieldElem {
        let mut base = a;
        let mut acc: FieldElem = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(self, a: FieldElem) -> FieldElem {
        assert!(!a.is_multiple_of(self.p), "inverse of zero in F_{}", self.p);
        self.pow(a, self.p as u64 - 2)
    }

    #[inline]
    pub fn div(self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.mul(a, self.inv(b))
    }

    /// Euler's criterion. Zero counts as a square.
    pub fn is_square(self, a: FieldElem) -> bool {
        a == 0 || self.pow(a, (self.p as u64 - 1) / 2) == 1
    }

    /// Signed representative in `(-p/2, p/2]`, handy for display.
    pub fn signed(self, a: FieldElem) -> i64 {
        if (a as u32) * 2 > self.p as u32 {
            a as i64 - self.p as i64
        } else {
            a as i64
        }
    }

    pub fn elements(self) -> impl Iterator<Item = FieldElem> {
        0..self.p
    }

    pub(crate) fn check_same(self, other: Field) {
        assert!(self == other, "{}", Error::FieldMismatch(self.p(), other.p()));
    }
}

/// Dense polynomial over F_p, lowest degree first, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    field: Field,
    coeffs: Vec<FieldElem>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[F{}]({})", self.field.p, self)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let s = self.field.signed(c);
            let (neg, mag) = (s < 0, s.unsigned_abs());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            match (i, mag) {
                (0, m) => write!(f, "{m}")?,
                (1, 1) => write!(f, "t")?,
                (1, m) => write!(f, "{m}t")?,
                (k, 1) => write!(f, "t^{k}")?,
                (k, m) => write!(f, "{m}t^{k}")?,
            }
        }
        Ok(())
    }
}

impl Poly {
    /// Builds a polynomial from integer coefficients (lowest degree first),
    /// reducing them mod p.
    pub fn new(field: Field, coeffs: &[i64]) -> Poly {
        let mut p = Poly { field, coeffs: coeffs.iter().map(|&c| field.elem(c)).collect() };
        p.normalize();
        p
    }

    pub fn from_residues(field: Field, coeffs: Vec<FieldElem>) -> Poly {
        let mut p = Poly { field, coeffs: coeffs.into_iter().map(|c| c % field.p).collect() };
        p.normalize();
        p
    }

    pub fn zero(field: Field) -> Poly {
        Poly { field, coeffs: Vec::new() }
    }

    pub fn one(field: Field) -> Poly {
        Poly::constant(field, 1)
    }

    pub fn constant(field: Field, c: FieldElem) -> Poly {
        Poly::from_residues(field, vec![c])
    }

    /// The indeterminate `t`.
    pub fn t(field: Field) -> Poly {
        Poly::from_residues(field, vec![0, 1])
    }

    /// `t - a`.
    pub fn linear(field: Field, a: FieldElem) -> Poly {
        Poly::from_residues(field, vec![field.neg(a), 1])
    }

    fn normalize(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FieldElem {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial mapped to 0. Use only where zero is excluded.
    pub fn deg(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn lead(&self) -> FieldElem {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn constant_term(&self) -> FieldElem {
        self.coeff(0)
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == 1
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() || self.is_monic() {
            return self.clone();
        }
        self.scale(self.field.inv(self.lead()))
    }

    pub fn scale(&self, c: FieldElem) -> Poly {
        let f = self.field;
        Poly::from_residues(f, self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn eval(&self, x: FieldElem) -> FieldElem {
        let f = self.field;
        self.coeffs.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c))
    }

    /// `p(-t)`.
    pub fn negate_var(&self) -> Poly {
        let f = self.field;
        Poly::from_residues(
            f,
            self.coeffs.iter().enumerate().map(|(i, &c)| if i % 2 == 1 { f.neg(c) } else { c }).collect(),
        )
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.field);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        self.field.check_same(divisor.field);
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let f = self.field;
        let dd = divisor.deg();
        if self.coeffs.len() <= dd {
            return (Poly::zero(f), self.clone());
        }
        let inv_lead = f.inv(divisor.lead());
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u8; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = f.mul(rem[i], inv_lead);
            if c == 0 {
                continue;
            }
            quot[i - dd] = c;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[i - dd + j] = f.sub(rem[i - dd + j], f.mul(c, d));
            }
        }
        rem.truncate(dd);
        (Poly::from_residues(f, quot), Poly::from_residues(f, rem))
    }

    pub fn rem(&self, divisor: &Poly) -> Poly {
        self.div_rem(divisor).1
    }

    pub fn divides(&self, other: &Poly) -> bool {
        other.rem(self).is_zero()
    }

    /// Monic gcd (zero if both inputs are zero).
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn mul_mod(&self, other: &Poly, modulus: &Poly) -> Poly {
        (self * other).rem(modulus)
    }

    pub fn pow_mod(&self, mut e: u128, modulus: &Poly) -> Poly {
        let mut base = self.rem(modulus);
        let mut acc = Poly::one(self.field).rem(modulus);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_mod(&base, modulus);
            }
            base = base.mul_mod(&base, modulus);
            e >>= 1;
        }
        acc
    }

    /// Reciprocal polynomial `p(0)^{-1} t^d p(1/t)`.
    pub fn reciprocal(&self) -> Result<Poly> {
        let c0 = self.constant_term();
        if c0 == 0 {
            return Err(Error::ZeroConstantTerm);
        }
        let inv = self.field.inv(c0);
        let f = self.field;
        Ok(Poly::from_residues(f, self.coeffs.iter().rev().map(|&c| f.mul(c, inv)).collect()))
    }

    pub fn is_palindromial(&self) -> Result<bool> {
        if !self.is_monic() {
            return Err(Error::NotMonic);
        }
        Ok(self.reciprocal()? == *self)
    }

    /// `p(-t) = p(t)`, i.e. every odd-degree coefficient vanishes.
    pub fn is_even_poly(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0)
    }

    pub fn is_irreducible(&self) -> Result<bool> {
        if !self.is_monic() {
            return Err(Error::NotMonic);
        }
        let d = self.deg();
        if d == 0 {
            return Ok(false);
        }
        if d <= TRIAL_DIVISION_MAX_DEGREE && trial_table_affordable(self.field, d / 2) {
            Ok(self.is_irreducible_trial())
        } else {
            Ok(self.is_irreducible_rabin())
        }
    }

    /// Irreducibility by trial division against the cached table of monic
    /// irreducibles of degree at most `deg/2`.
    pub fn is_irreducible_trial(&self) -> bool {
        let d = self.deg();
        if d == 0 {
            return false;
        }
        (1..=d / 2).all(|k| irreducibles_of_degree(self.field, k).iter().all(|g| !g.divides(self)))
    }

    /// Rabin's test: `t^{p^d} = t mod f` and `gcd(f, t^{p^{d/l}} - t) = 1`
    /// for every prime `l | d`.
    pub fn is_irreducible_rabin(&self) -> bool {
        let d = self.deg();
        if d == 0 {
            return false;
        }
        if d == 1 {
            return true;
        }
        let f = self.monic();
        let t = Poly::t(self.field);
        let frob = |k: usize| -> Poly {
            let mut x = t.rem(&f);
            for _ in 0..k {
                x = x.pow_mod(self.field.p() as u128, &f);
            }
            x
        };
        if frob(d) != t.rem(&f) {
            return false;
        }
        prime_divisors(d).into_iter().all(|l| (&frob(d / l) - &t).gcd(&f).is_one())
    }

    /// Factorization into monic irreducibles with multiplicities, sorted by
    /// (degree, coefficients).
    pub fn factorize(&self) -> Result<Vec<(Poly, u32)>> {
        if !self.is_monic() {
            return Err(Error::NotMonic);
        }
        let field = self.field;
        let mut rest = self.clone();
        let mut out: Vec<(Poly, u32)> = Vec::new();
        let t = Poly::t(field);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut k = 1usize;
        while rest.deg() >= 1 {
            if rest.deg() < 2 * k {
                // every irreducible factor has degree >= k, so what is left is irreducible
                out.push((rest.monic(), 1));
                break;
            }
            let mut frob = t.rem(&rest);
            for _ in 0..k {
                frob = frob.pow_mod(field.p() as u128, &rest);
            }
            let h = (&frob - &t).gcd(&rest);
            if h.deg() >= 1 {
                for g in equal_degree_split(&h, k, &mut rng) {
                    push_factor(&mut out, &mut rest, g);
                }
            }
            k += 1;
        }
        out.sort_by(|a, b| (a.0.deg(), &a.0.coeffs).cmp(&(b.0.deg(), &b.0.coeffs)));
        Ok(out)
    }
}

fn push_factor(out: &mut Vec<(Poly, u32)>, rest: &mut Poly, g: Poly) {
    let mut m = 0;
    loop {
        let (q, r) = rest.div_rem(&g);
        if !r.is_zero() {
            break;
        }
        *rest = q;
        m += 1;
    }
    debug_assert!(m > 0);
    out.push((g, m));
}

/// Splits a squarefree product of irreducibles of degree `k` (Cantor–Zassenhaus).
fn equal_degree_split(h: &Poly, k: usize, rng: &mut ChaCha8Rng) -> Vec<Poly> {
    let d = h.deg();
    if d == k {
        return vec![h.monic()];
    }
    let field = h.field;
    let q = (field.p() as u128).pow(k as u32);
    let exp = (q - 1) / 2;
    loop {
        let a = Poly::from_residues(field, (0..d).map(|_| rng.gen_range(0..field.p)).collect());
        if a.deg() < 1 {
            continue;
        }
        let g = a.gcd(h);
        let split = if g.deg() >= 1 && g.deg() < d {
            g
        } else {
            let b = &a.pow_mod(exp, h) - &Poly::one(field);
            b.gcd(h)
        };
        if split.deg() >= 1 && split.deg() < d {
            let other = h.div_rem(&split).0.monic();
            let mut v = equal_degree_split(&split, k, rng);
            v.extend(equal_degree_split(&other, k, rng));
            return v;
        }
    }
}

fn prime_divisors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

const TRIAL_DIVISION_MAX_DEGREE: usize = 8;
const TRIAL_TABLE_BUDGET: u64 = 1 << 14;

fn trial_table_affordable(field: Field, max_deg: usize) -> bool {
    (field.p() as u64).checked_pow(max_deg as u32).is_some_and(|n| n <= TRIAL_TABLE_BUDGET)
}

type IrrCache = Mutex<HashMap<(Field, usize), Arc<Vec<Poly>>>>;

/// All monic irreducible polynomials of degree `k` (including `t` when
/// `k = 1`), in lexicographic order. Built once per (field, degree) by trial
/// division against the lower-degree tables.
pub fn irreducibles_of_degree(field: Field, k: usize) -> Arc<Vec<Poly>> {
    static CACHE: OnceLock<IrrCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&(field, k)) {
        return v.clone();
    }
    let table: Vec<Poly> = if k == 1 {
        field.elements().map(|a| Poly::linear(field, field.neg(a))).map(|p| p.monic()).collect::<Vec<_>>()
    } else {
        let lower: Vec<Arc<Vec<Poly>>> = (1..=k / 2).map(|j| irreducibles_of_degree(field, j)).collect();
        monic_polys(field, k).filter(|p| lower.iter().all(|tab| tab.iter().all(|g| !g.divides(p)))).collect()
    };
    let table = Arc::new(table);
    cache.lock().unwrap().insert((field, k), table.clone());
    table
}

/// Monic polynomials of degree `d` in lexicographic order of the coefficient
/// vector read from the constant term upwards.
pub fn monic_polys(field: Field, d: usize) -> impl Iterator<Item = Poly> {
    let p = field.p() as u64;
    let total = p.pow(d as u32);
    (0..total).map(move |mut idx| {
        // constant term is the most significant digit
        let mut c = vec![0u8; d + 1];
        for i in (0..d).rev() {
            c[i] = (idx % p) as u8;
            idx /= p;
        }
        c[d] = 1;
        Poly::from_residues(field, c)
    })
}

/// Lexicographically least monic irreducible of degree `n` with constant term `c`.
pub fn find_irreducible_const(field: Field, n: usize, c: FieldElem) -> Result<Poly> {
    if n == 0 {
        return Err(Error::NotFound("degree must be at least 1".into()));
    }
    let p = field.p() as u64;
    let total = p.checked_pow(n as u32 - 1).ok_or_else(|| Error::NotFound("search space too large".into()))?;
    for mut idx in 0..total {
        let mut coeffs = vec![0u8; n + 1];
        coeffs[0] = c % field.p;
        for i in (1..n).rev() {
            coeffs[i] = (idx % p) as u8;
            idx /= p;
        }
        coeffs[n] = 1;
        let cand = Poly::from_residues(field, coeffs);
        if cand.is_irreducible()? {
            return Ok(cand);
        }
    }
    Err(Error::NotFound(format!("no monic irreducible of degree {n} with constant term {c} over F_{}", field.p())))
}

/// Lexicographically least even monic irreducible of degree `two_n`,
/// optionally different from `t^2 + 1`.
pub fn find_even_irreducible(field: Field, two_n: usize, avoid_t2_plus_1: bool) -> Result<Poly> {
    if two_n < 2 || !two_n.is_multiple_of(2) {
        return Err(Error::NotFound(format!("degree {two_n} is not a positive even number")));
    }
    let half = two_n / 2;
    let t2_plus_1 = Poly::new(field, &[1, 0, 1]);
    let p = field.p() as u64;
    for mut idx in 0..p.pow(half as u32) {
        let mut coeffs = vec![0u8; two_n + 1];
        for j in (0..half).rev() {
            coeffs[2 * j] = (idx % p) as u8;
            idx /= p;
        }
        coeffs[two_n] = 1;
        let cand = Poly::from_residues(field, coeffs);
        if avoid_t2_plus_1 && cand == t2_plus_1 {
            continue;
        }
        if cand.is_irreducible()? {
            return Ok(cand);
        }
    }
    Err(Error::NotFound(format!(
        "no even irreducible of degree {two_n} over F_{}{}",
        field.p(),
        if avoid_t2_plus_1 { " other than t^2+1" } else { "" }
    )))
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.field.check_same(rhs.field);
        let f = self.field;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_residues(f, (0..n).map(|i| f.add(self.coeff(i), rhs.coeff(i))).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.field.check_same(rhs.field);
        let f = self.field;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_residues(f, (0..n).map(|i| f.sub(self.coeff(i), rhs.coeff(i))).collect())
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        let f = self.field;
        Poly::from_residues(f, self.coeffs.iter().map(|&c| f.neg(c)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.field.check_same(rhs.field);
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero(self.field);
        }
        let p = self.field.p();
        let mut acc = vec![0u32; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                acc[i + j] = (acc[i + j] + a as u32 * b as u32) % p;
            }
        }
        Poly::from_residues(self.field, acc.into_iter().map(|c| c as u8).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
