//! Conjugacy invariants of s-pairs: quotient spaces `V_{p,r}`, the quadratic
//! Wall invariants at eigenvalues ±1, quadratic-form classes, and the full
//! invariant profile that decides conjugacy in the symplectic group.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfpoly::{Field, FieldElem, Poly};
use crate::linalg::{extend_independent, span_basis, InvariantFactors, Mat, Vector};
use crate::sympcore::SPair;

/// Isometry class of a symmetric bilinear form over F_p: rank and the square
/// class of the discriminant of its nondegenerate part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadFormClass {
    pub rank: usize,
    pub disc_is_square: bool,
}

impl QuadFormClass {
    pub const ZERO: QuadFormClass = QuadFormClass { rank: 0, disc_is_square: true };

    pub fn is_hyperbolic(&self, field: Field) -> bool {
        is_hyperbolic(field, *self)
    }

    /// Class of the negated form `-b`.
    pub fn negated(&self, field: Field) -> QuadFormClass {
        let flip = self.rank % 2 == 1 && !field.is_square(field.elem(-1));
        QuadFormClass { rank: self.rank, disc_is_square: self.disc_is_square ^ flip }
    }
}

/// Even rank with discriminant in the class of `(-1)^{rank/2}`.
pub fn is_hyperbolic(field: Field, class: QuadFormClass) -> bool {
    if !class.rank.is_multiple_of(2) {
        return false;
    }
    let sign = if (class.rank / 2).is_multiple_of(2) { 1 } else { field.elem(-1) };
    class.disc_is_square == field.is_square(sign)
}

/// Diagonalizes by congruence and keeps the nonzero diagonal entries.
pub fn diagonalize_symmetric(gram: &Mat) -> Result<Vec<FieldElem>> {
    if !gram.is_square() || *gram != gram.transpose() {
        return Err(Error::NotSymmetric);
    }
    let f = gram.field();
    let n = gram.n();
    let mut g = gram.clone();
    let mut diag = Vec::new();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let piv = match active.iter().copied().find(|&i| g.get(i, i) != 0) {
            Some(i) => i,
            None => {
                let pair =
                    active.iter().flat_map(|&i| active.iter().map(move |&j| (i, j))).find(|&(i, j)| g.get(i, j) != 0);
                let Some((i, j)) = pair else {
                    break;
                };
                // x_i := x_i + x_j makes the diagonal entry 2 g_ij != 0
                for k in 0..n {
                    let v = f.add(g.get(i, k), g.get(j, k));
                    g.set(i, k, v);
                }
                for k in 0..n {
                    let v = f.add(g.get(k, i), g.get(k, j));
                    g.set(k, i, v);
                }
                i
            }
        };
        let d = g.get(piv, piv);
        let inv = f.inv(d);
        active.retain(|&k| k != piv);
        for &k in &active {
            let c = f.mul(g.get(k, piv), inv);
            if c == 0 {
                continue;
            }
            for l in 0..n {
                let v = f.sub(g.get(k, l), f.mul(c, g.get(piv, l)));
                g.set(k, l, v);
            }
            for l in 0..n {
                let v = f.sub(g.get(l, k), f.mul(c, g.get(l, piv)));
                g.set(l, k, v);
            }
        }
        diag.push(d);
    }
    Ok(diag)
}

pub fn classify_quadratic(gram: &Mat) -> Result<QuadFormClass> {
    let f = gram.field();
    let diag = diagonalize_symmetric(gram)?;
    let disc = diag.iter().fold(1, |acc, &d| f.mul(acc, d));
    Ok(QuadFormClass { rank: diag.len(), disc_is_square: f.is_square(disc) })
}

/// `u⁻¹ = -J uᵀ J` for an isometry of the standard form.
fn symplectic_inverse(pair: &SPair) -> Mat {
    let j = pair.space.gram();
    -&(&(&j * &pair.u.transpose()) * &j)
}

/// Lifted basis of `V_{p,r} = Ker p(u)^r / (Ker p(u)^{r-1} + p(u) Ker p(u)^{r+1})`.
pub fn quotient_basis(pair: &SPair, p: &Poly, r: u32) -> Vec<Vector> {
    assert!(r >= 1);
    let f = pair.field();
    let n = pair.dim();
    let pu = pair.u.eval_poly(p);
    let kernel = |k: u32| -> Vec<Vector> {
        if k == 0 {
            Vec::new()
        } else {
            pu.pow(k as u64).kernel_basis()
        }
    };
    let top = kernel(r);
    if top.is_empty() {
        return Vec::new();
    }
    let mut sub = kernel(r - 1);
    sub.extend(kernel(r + 1).iter().map(|v| pu.mul_vec(v)));
    let sub = span_basis(f, n, &sub);
    let need = span_basis(f, n, &top).len() - sub.len();
    extend_independent(f, n, &sub, &top, need)
}

/// `(x, y) ↦ ½ s(x, (u − u⁻¹)(u + u⁻¹ − 2η)^k y)` with `r = 2k + 2`, on the
/// lifted basis of `V_{t−η, r}`.
pub fn quadratic_wall_invariant(pair: &SPair, eta: FieldElem, r: u32) -> Result<(Mat, QuadFormClass)> {
    if r < 2 || !r.is_multiple_of(2) {
        return Err(Error::PreconditionViolated(format!("Wall invariants need even r >= 2, got {r}")));
    }
    let f = pair.field();
    let basis = quotient_basis(pair, &Poly::linear(f, eta), r);
    let gram = wall_gram(pair, eta, r, &basis);
    let class = classify_quadratic(&gram)?;
    Ok((gram, class))
}

fn wall_gram(pair: &SPair, eta: FieldElem, r: u32, basis: &[Vector]) -> Mat {
    let f = pair.field();
    let n = pair.dim();
    if basis.is_empty() {
        return Mat::zero(f, 0, 0);
    }
    let uinv = symplectic_inverse(pair);
    let k = (r - 2) / 2;
    let inner = &(&pair.u + &uinv) - &Mat::scalar(f, n, f.mul(2, eta));
    let op = &(&pair.u - &uinv) * &inner.pow(k as u64);
    let half = f.inv(2);
    let images: Vec<Vector> = basis.iter().map(|y| op.mul_vec(y)).collect();
    Mat::from_fn(f, basis.len(), basis.len(), |i, j| f.mul(half, pair.space.form(&basis[i], &images[j])) as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WallEntry {
    /// Eigenvalue sign, `+1` or `-1`.
    pub eta: i8,
    pub r: u32,
    pub class: QuadFormClass,
}

/// Invariant factors together with all nonzero quadratic Wall classes.
/// The derived ordering is the canonical total order on profiles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InvariantProfile {
    pub p: u32,
    pub n: usize,
    pub inv_factors: InvariantFactors,
    pub wall: Vec<WallEntry>,
}

pub fn profile(pair: &SPair) -> InvariantProfile {
    let f = pair.field();
    let inv_factors = pair.u.invariant_factors();
    let jordan = inv_factors.jordan_numbers();
    let mut wall = Vec::new();
    for eta in [-1i8, 1] {
        let e = f.elem(eta as i64);
        let lin = Poly::linear(f, e);
        let mut rs: Vec<u32> = jordan.keys().filter(|(g, r)| *g == lin && r % 2 == 0).map(|(_, r)| *r).collect();
        rs.sort_unstable();
        for r in rs {
            let basis = quotient_basis(pair, &lin, r);
            let gram = wall_gram(pair, e, r, &basis);
            let class = classify_quadratic(&gram).expect("Wall forms are symmetric");
            wall.push(WallEntry { eta, r, class });
        }
    }
    InvariantProfile { p: f.p(), n: pair.dim(), inv_factors, wall }
}

pub fn is_conjugate(a: &SPair, b: &SPair) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if a.field() != b.field() {
        return Err(Error::FieldMismatch(a.field().p(), b.field().p()));
    }
    Ok(profile(a) == profile(b))
}

impl InvariantProfile {
    pub fn field(&self) -> Field {
        Field::new(self.p).expect("profiles carry a valid modulus")
    }

    /// Every Jordan number even and every Wall class hyperbolic.
    pub fn is_two_reflectional(&self) -> bool {
        let f = self.field();
        self.inv_factors.jordan_numbers().values().all(|&c| c % 2 == 0)
            && self.wall.iter().all(|w| w.class.is_hyperbolic(f))
    }

    pub fn min_poly(&self) -> Poly {
        self.inv_factors.factors.last().cloned().unwrap_or_else(|| Poly::one(self.field()))
    }

    pub fn wall_class(&self, eta: i8, r: u32) -> Option<QuadFormClass> {
        self.wall.iter().find(|w| w.eta == eta && w.r == r).map(|w| w.class)
    }

    pub fn to_json(&self) -> ProfileJson {
        ProfileJson {
            p: self.p,
            n: self.n,
            invariant_factors: self.inv_factors.factors.iter().map(|f| f.coeffs().to_vec()).collect(),
            wall: self
                .wall
                .iter()
                .map(|w| WallJson { eta: w.eta, r: w.r, rank: w.class.rank, disc_square: w.class.disc_is_square })
                .collect(),
        }
    }

    pub fn from_json(j: &ProfileJson) -> Result<InvariantProfile> {
        let field = Field::new(j.p)?;
        let mut factors = Vec::new();
        for c in &j.invariant_factors {
            if c.iter().any(|&x| x as u32 >= j.p) {
                return Err(Error::Parse(format!("coefficient out of range in {c:?}")));
            }
            let poly = Poly::from_residues(field, c.clone());
            if !poly.is_monic() || poly.coeffs().len() != c.len() {
                return Err(Error::Parse(format!("invariant factor {c:?} is not monic")));
            }
            factors.push(poly);
        }
        let inv_factors = InvariantFactors { factors };
        if !inv_factors.is_chain() {
            return Err(Error::Parse("invariant factors do not form a divisibility chain".into()));
        }
        let wall = j
            .wall
            .iter()
            .map(|w| {
                if w.eta != 1 && w.eta != -1 {
                    return Err(Error::Parse(format!("eta must be 1 or -1, got {}", w.eta)));
                }
                Ok(WallEntry {
                    eta: w.eta,
                    r: w.r,
                    class: QuadFormClass { rank: w.rank, disc_is_square: w.disc_square },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InvariantProfile { p: j.p, n: j.n, inv_factors, wall })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileJson {
    pub p: u32,
    pub n: usize,
    pub invariant_factors: Vec<Vec<FieldElem>>,
    pub wall: Vec<WallJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallJson {
    pub eta: i8,
    pub r: u32,
    pub rank: usize,
    pub disc_square: bool,
}

/// A polynomial written as a product of its irreducible factors, e.g.
/// `(t^2 + 1)(t - 1)^2`.
pub fn factored(poly: &Poly) -> String {
    let fac = poly.factorize().unwrap_or_default();
    if fac.len() == 1 && fac[0].1 == 1 {
        return poly.to_string();
    }
    let mut fac = fac;
    fac.sort_by(|a, b| b.0.deg().cmp(&a.0.deg()).then(a.0.cmp(&b.0)));
    fac.iter().map(|(g, e)| if *e == 1 { format!("({g})") } else { format!("({g})^{e}") }).collect::<Vec<_>>().join("")
}

impl fmt::Display for InvariantProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.inv_factors.factors.iter().map(factored).collect();
        write!(f, "[{}]", parts.join(", "))?;
        for w in &self.wall {
            write!(
                f,
                " W(t{}1,{})=rank {} {}",
                if w.eta > 0 { "-" } else { "+" },
                w.r,
                w.class.rank,
                if w.class.disc_is_square { "square" } else { "nonsquare" }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sympcore::{orthogonal_sum, symplectic_extension, SympSpace};

    fn f3() -> Field {
        Field::new(3).unwrap()
    }

    /// `[[I, S], [0, I]]`, an isometry when `S` is symmetric.
    fn u_s(s: &Mat) -> SPair {
        let f = s.field();
        let m = s.n();
        let mut u = Mat::identity(f, 2 * m);
        u.set_block(0, m, s);
        SPair::new(u).unwrap()
    }

    #[test]
    fn classify_examples() {
        let f = f3();
        let c = classify_quadratic(&Mat::from_rows(f, &[[1, 0], [0, -1]])).unwrap();
        assert_eq!(c, QuadFormClass { rank: 2, disc_is_square: false });
        assert!(c.is_hyperbolic(f));
        let c = classify_quadratic(&Mat::from_rows(f, &[[1, 1], [1, -1]])).unwrap();
        assert_eq!(c, QuadFormClass { rank: 2, disc_is_square: true });
        assert!(!c.is_hyperbolic(f));
        let c = classify_quadratic(&Mat::zero(f, 3, 3)).unwrap();
        assert_eq!(c.rank, 0);
        assert!(c.is_hyperbolic(f));
        assert_eq!(classify_quadratic(&Mat::from_rows(f, &[[0, 1], [0, 0]])), Err(Error::NotSymmetric));
        // zero diagonal still classifies: [[0,1],[1,0]] is the hyperbolic plane
        let c = classify_quadratic(&Mat::from_rows(f, &[[0, 1], [1, 0]])).unwrap();
        assert!(c.is_hyperbolic(f));
    }

    #[test]
    fn unipotent_2x2_has_nonsquare_wall_value() {
        let f = f3();
        let pair = SPair::new(Mat::from_rows(f, &[[1, 1], [0, 1]])).unwrap();
        let (gram, class) = quadratic_wall_invariant(&pair, 1, 2).unwrap();
        assert_eq!(gram, Mat::from_rows(f, &[[-1]]));
        assert_eq!(class, QuadFormClass { rank: 1, disc_is_square: false });
    }

    #[test]
    fn u_s_wall_gram_is_minus_s() {
        let f = f3();
        let s = Mat::from_rows(f, &[[1, 0], [0, -1]]);
        let pair = u_s(&s);
        assert_eq!(quotient_basis(&pair, &Poly::linear(f, 1), 2).len(), 2);
        let (gram, class) = quadratic_wall_invariant(&pair, 1, 2).unwrap();
        assert_eq!(class, classify_quadratic(&-&s).unwrap());
        assert!(class.is_hyperbolic(f));
        assert_eq!(gram, -&s);
        let prof = profile(&pair);
        let t1 = Poly::new(f, &[-1, 1]);
        assert_eq!(prof.inv_factors.factors, vec![t1.pow(2), t1.pow(2)]);
        assert_eq!(prof.wall.len(), 1);
        assert!(prof.is_two_reflectional());
    }

    #[test]
    fn u_s_hyperbolic_and_not_are_not_conjugate() {
        let f = f3();
        let a = u_s(&Mat::from_rows(f, &[[1, 0], [0, -1]]));
        let b = u_s(&Mat::from_rows(f, &[[1, 1], [1, -1]]));
        assert_eq!(a.u.invariant_factors(), b.u.invariant_factors());
        assert!(!is_conjugate(&a, &b).unwrap());
        assert!(!profile(&b).is_two_reflectional());
    }

    #[test]
    fn trivial_profiles() {
        let f = f3();
        let s4 = SympSpace::new(f, 4).unwrap();
        let id = SPair::identity(s4);
        let prof = profile(&id);
        assert_eq!(prof.inv_factors.factors.len(), 4);
        assert!(prof.wall.is_empty());
        assert_eq!(quotient_basis(&id, &Poly::linear(f, 1), 1).len(), 4);
        assert!(quotient_basis(&id, &Poly::new(f, &[1, 0, 1]), 1).is_empty());
        let (g, c) = quadratic_wall_invariant(&id, 2, 2).unwrap();
        assert_eq!((g.rows(), c.rank), (0, 0));
    }

    #[test]
    fn quarter_turn_profile() {
        let f = f3();
        let q = SPair::new(symplectic_extension(&Mat::companion(&Poly::new(f, &[1, 0, 1]))).unwrap()).unwrap();
        let prof = profile(&q);
        assert_eq!(prof.inv_factors.factors, vec![Poly::new(f, &[1, 0, 1]); 2]);
        assert!(prof.wall.is_empty());
        assert!(prof.is_two_reflectional());
    }

    #[test]
    fn opposite_unipotent_cells_differ() {
        let f = f3();
        let a = SPair::new(Mat::from_rows(f, &[[1, 1], [0, 1]])).unwrap();
        let b = SPair::new(Mat::from_rows(f, &[[-1, 1], [0, -1]])).unwrap();
        assert!(!is_conjugate(&a, &b).unwrap());
        let sum = orthogonal_sum(f, &[a, b]);
        assert_eq!(profile(&sum).wall.len(), 2);
    }

    #[test]
    fn profile_json_roundtrip() {
        let f = f3();
        let pair = u_s(&Mat::from_rows(f, &[[1, 1], [1, -1]]));
        let prof = profile(&pair);
        let j = prof.to_json();
        let text = serde_json::to_string(&j).unwrap();
        let back: ProfileJson = serde_json::from_str(&text).unwrap();
        assert_eq!(InvariantProfile::from_json(&back).unwrap(), prof);
    }

    #[test]
    fn factored_display() {
        let f = f3();
        let p = &Poly::new(f, &[1, 0, 1]) * &Poly::new(f, &[-1, 1]).pow(2);
        assert_eq!(factored(&p), "(t^2 + 1)(t - 1)^2");
        assert_eq!(factored(&Poly::new(f, &[1, 0, 0, 0, 1])), "(t^2 + t - 1)(t^2 - t - 1)");
    }
}
