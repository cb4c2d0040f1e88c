//! Constructions on s-pairs: space-pullback, adaptation pairs, cyclic
//! adaptation, subspace searches and fixture builders.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfpoly::{Field, FieldElem, Poly};
use crate::linalg::{rank_of, span_basis, vec_add, vec_scale, Mat, Vector};
use crate::subspace::{gaussian_binomial, subspaces};
use crate::sympcore::{
    enumerate_involutions, symplectic_basis, symplectic_extension, InvolutionMode, SPair, SympSpace, DEFAULT_CAP,
};
use crate::wall::{classify_quadratic, profile};

/// Searches switch from exhaustive to randomized above this many candidates.
pub const EXHAUSTIVE_LIMIT: u128 = 5_000_000;

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exhaustive,
    Randomized { seed: u64, budget: usize },
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchMode::Exhaustive => write!(f, "exhaustive"),
            SearchMode::Randomized { seed, budget } => write!(f, "randomized (seed {seed}, budget {budget})"),
        }
    }
}

/// A search result tagged with the mode that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Found<T> {
    pub value: T,
    pub mode: SearchMode,
}

fn not_found(what: &str, mode: SearchMode) -> Error {
    match mode {
        SearchMode::Exhaustive => Error::NotFound(format!("{what} (exhaustive search, definitive)")),
        SearchMode::Randomized { .. } => Error::NotFound(format!("{what} ({mode}, not definitive)")),
    }
}

/// Gram matrix of `(x, y) ↦ s(x, u y)` on the given basis of `W`.
pub fn restricted_form(pair: &SPair, w: &[Vector]) -> Mat {
    let uw: Vec<Vector> = w.iter().map(|x| pair.u.mul_vec(x)).collect();
    Mat::from_fn(pair.field(), w.len(), w.len(), |i, j| pair.space.form(&w[i], &uw[j]) as i64)
}

/// Symmetric and alternating parts `(S + Sᵀ)/2`, `(S − Sᵀ)/2` of a Gram matrix.
pub fn split_symmetric(g: &Mat) -> (Mat, Mat) {
    let f = g.field();
    let half = f.inv(2);
    let gt = g.transpose();
    ((g + &gt).scale(half), (g - &gt).scale(half))
}

/// Deterministic basis of `(W ⊕ u(W))^{⊥_s}`.
pub fn pullback_complement(pair: &SPair, w: &[Vector]) -> Vec<Vector> {
    let mut both: Vec<Vector> = w.to_vec();
    both.extend(w.iter().map(|x| pair.u.mul_vec(x)));
    pair.space.orthogonal_complement(&both)
}

#[derive(Clone, Debug)]
pub struct PullbackProblem {
    pub pair: SPair,
    /// Basis of a totally singular subspace with `W ∩ u(W) = 0`.
    pub w: Vec<Vector>,
    /// Alternating Gram matrix of `b` on the basis of `W`.
    pub b_gram: Mat,
    /// Symplectic involution of the complement, in the basis returned by
    /// [`pullback_complement`].
    pub residual_involution: Mat,
}

#[derive(Clone, Debug)]
pub struct Pullback {
    /// Involution of the whole space with `i(W) = u(W)`.
    pub involution: Mat,
    /// Matrix of `v` on the basis of `W`: `s(x, u y) = b(x, v y)`.
    pub v: Mat,
}

impl PullbackProblem {
    pub fn validate(&self) -> Result<()> {
        let space = self.pair.space;
        let f = space.field();
        let k = self.w.len();
        let bad = |s: &str| Err(Error::InvalidProblem(s.to_string()));
        if self.w.iter().any(|x| x.len() != space.dim()) {
            return bad("W vectors have the wrong length");
        }
        if rank_of(f, space.dim(), &self.w) != k {
            return bad("W basis is not linearly independent");
        }
        if !space.is_totally_singular(&self.w) {
            return bad("W is not totally singular");
        }
        let mut both = self.w.clone();
        both.extend(self.w.iter().map(|x| self.pair.u.mul_vec(x)));
        if rank_of(f, space.dim(), &both) != 2 * k {
            return bad("W meets u(W)");
        }
        if !restricted_form(&self.pair, &self.w).is_invertible() {
            return bad("the restricted form s(x, u y) is degenerate on W");
        }
        let b = &self.b_gram;
        if b.rows() != k || b.cols() != k {
            return bad("b_gram has the wrong size");
        }
        if !(b + &b.transpose()).is_zero() || (0..k).any(|i| b.get(i, i) != 0) || !b.is_invertible() {
            return bad("b_gram is not an invertible alternating matrix");
        }
        let comp = pullback_complement(&self.pair, &self.w);
        let r = &self.residual_involution;
        if r.rows() != comp.len() || r.cols() != comp.len() {
            return bad("residual involution has the wrong size");
        }
        let g = space.gram_of(&comp);
        if !(r * r).is_identity() || &(&r.transpose() * &g) * r != g {
            return bad("residual involution is not a symplectic involution of the complement");
        }
        Ok(())
    }
}

/// The pullback involution and the endomorphism `v` of `W`. The involution
/// sends `u(x)` to `v(x)` on `W`, so `i·u` stabilizes `W` with restriction `v`.
pub fn space_pullback(problem: &PullbackProblem) -> Result<Pullback> {
    problem.validate()?;
    let pair = &problem.pair;
    let space = pair.space;
    let f = space.field();
    let n = space.dim();
    let k = problem.w.len();
    let s = restricted_form(pair, &problem.w);
    let v = &problem.b_gram.inverse()? * &s;
    let v_inv = v.inverse()?;
    let uw: Vec<Vector> = problem.w.iter().map(|x| pair.u.mul_vec(x)).collect();
    let comb = |vecs: &[Vector], coeffs: Vec<FieldElem>| -> Vector {
        vecs.iter().zip(coeffs).fold(vec![0u8; n], |acc, (x, c)| vec_add(f, &acc, &vec_scale(f, x, c)))
    };
    let comp = pullback_complement(pair, &problem.w);
    let mut domain: Vec<Vector> = problem.w.clone();
    domain.extend(uw.iter().cloned());
    domain.extend(comp.iter().cloned());
    let mut image: Vec<Vector> = (0..k).map(|j| comb(&uw, v_inv.col(j))).collect();
    image.extend((0..k).map(|j| comb(&problem.w, v.col(j))));
    image.extend((0..comp.len()).map(|j| comb(&comp, problem.residual_involution.col(j))));
    let p = Mat::from_columns(f, n, &domain);
    let q = Mat::from_columns(f, n, &image);
    let involution = &q * &p.inverse()?;
    // postconditions
    let fail = |s: &str| Err(Error::InvalidProblem(format!("pullback postcondition failed: {s}")));
    if !space.is_symplectic_involution(&involution)? {
        return fail("not a symplectic involution");
    }
    let iu = &involution * &pair.u;
    for j in 0..k {
        if iu.mul_vec(&problem.w[j]) != comb(&problem.w, v.col(j)) {
            return fail("i(u(x)) != v(x)");
        }
        for a in 0..k {
            if space.form(&problem.w[a], &involution.mul_vec(&problem.w[j])) != problem.b_gram.get(a, j) {
                return fail("b(x, y) != s(x, i(y))");
            }
        }
    }
    Ok(Pullback { involution, v })
}

/// The complement basis and every symplectic involution of it, in that
/// basis's coordinates.
pub fn residual_involutions(pair: &SPair, w: &[Vector]) -> Result<(Vec<Vector>, Vec<Mat>)> {
    let comp = pullback_complement(pair, w);
    let f = pair.field();
    if comp.is_empty() {
        return Ok((comp, vec![Mat::identity(f, 0)]));
    }
    let g = pair.space.gram_of(&comp);
    let t = symplectic_basis(&g).map_err(|_| Error::InvalidProblem("W + u(W) is degenerate".into()))?;
    let t_inv = t.inverse()?;
    let std = enumerate_involutions(comp.len(), f.p(), InvolutionMode::Constructive, DEFAULT_CAP)?;
    Ok((comp, std.iter().map(|i| &(&t * i) * &t_inv).collect()))
}

/// Conditions on the restricted form wanted from a pullback subspace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PullbackWant {
    pub symmetric: bool,
    /// `Some(true)` for hyperbolic, `Some(false)` for non-hyperbolic.
    pub hyperbolic: Option<bool>,
}

fn pullback_ok(pair: &SPair, w: &[Vector], want: PullbackWant) -> bool {
    let space = pair.space;
    if !space.is_totally_singular(w) {
        return false;
    }
    let g = restricted_form(pair, w);
    if !g.is_invertible() {
        return false;
    }
    if want.symmetric && g != g.transpose() {
        return false;
    }
    match want.hyperbolic {
        None => true,
        Some(h) => {
            let sym = split_symmetric(&g).0;
            sym == g && classify_quadratic(&g).is_ok_and(|c| c.is_hyperbolic(space.field()) == h)
        }
    }
}

fn random_singular_subspace<R: Rng>(space: &SympSpace, k: usize, rng: &mut R) -> Option<Vec<Vector>> {
    let f = space.field();
    let mut w: Vec<Vector> = Vec::new();
    for _ in 0..k {
        let perp = space.orthogonal_complement(&w);
        let x = perp
            .iter()
            .fold(vec![0u8; space.dim()], |acc, b| vec_add(f, &acc, &vec_scale(f, b, rng.gen_range(0..f.p()) as u8)));
        w.push(x);
        if rank_of(f, space.dim(), &w) != w.len() {
            return None;
        }
    }
    Some(w)
}

/// A totally singular `W` of dimension `dim_w` on which `s(x, u y)` is
/// nondegenerate and meets `want`.
pub fn find_pullback_subspace(
    pair: &SPair,
    dim_w: usize,
    want: PullbackWant,
    seed: u64,
    budget: usize,
) -> Result<Found<Vec<Vector>>> {
    let space = pair.space;
    if dim_w > space.m() {
        return Err(Error::PreconditionViolated(format!("dim W = {dim_w} exceeds m = {}", space.m())));
    }
    let f = space.field();
    let count = gaussian_binomial(f.p() as u128, space.dim(), dim_w);
    let what = format!("no {dim_w}-dimensional pullback subspace with {want:?}");
    if space.dim() <= 6 && count <= EXHAUSTIVE_LIMIT {
        let mode = SearchMode::Exhaustive;
        return subspaces(f, space.dim(), dim_w)
            .find(|w| pullback_ok(pair, w, want))
            .map(|value| Found { value, mode })
            .ok_or_else(|| not_found(&what, mode));
    }
    let mode = SearchMode::Randomized { seed, budget };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        if let Some(w) = random_singular_subspace(&space, dim_w, &mut rng) {
            if pullback_ok(pair, &w, want) {
                return Ok(Found { value: w, mode });
            }
        }
    }
    Err(not_found(&what, mode))
}

/// For an even irreducible `p`: the trace form `b(x, y) = Tr(x• y)` on
/// `F[t]/(p)` (`x•` substitutes `−λ` for `λ`), which is non-hyperbolic, and
/// multiplication by `λ`, which is `b`-skew-adjoint. Basis `1, λ, …, λ^{d−1}`.
pub fn build_skewadjoint_pair(p: &Poly) -> Result<(Mat, Mat)> {
    if !p.is_monic() || !p.is_even_poly() || p.deg() == 0 || !p.is_irreducible()? {
        return Err(Error::InvalidPolynomial(format!("{p} is not a monic even irreducible polynomial")));
    }
    let f = p.field();
    let d = p.deg();
    let c = Mat::companion(p);
    let traces: Vec<FieldElem> = (0..2 * d - 1).map(|k| c.pow(k as u64).trace()).collect();
    let b = Mat::from_fn(f, d, d, |i, j| {
        let t = traces[i + j] as i64;
        if i % 2 == 1 {
            -t
        } else {
            t
        }
    });
    Ok((b, c))
}

/// `b = [[0, I], [I, 0]]` and `v = diag(λ I, −λ I)`.
pub fn build_split_pair(field: Field, lambda: FieldElem, n: usize) -> Result<(Mat, Mat)> {
    let lambda = lambda % field.p() as u8;
    if lambda == 0 || lambda == 1 || lambda == field.neg(1) {
        return Err(Error::InvalidScalar(format!("λ = {} must avoid 0 and ±1", field.signed(lambda))));
    }
    let b = Mat::from_fn(field, 2 * n, 2 * n, |i, j| (i + n == j || j + n == i) as i64);
    let v = Mat::from_fn(field, 2 * n, 2 * n, |i, j| {
        if i != j {
            0
        } else if i < n {
            lambda as i64
        } else {
            field.neg(lambda) as i64
        }
    });
    Ok((b, v))
}

fn involution_from_split(field: Field, plus: &[Vector], minus: &[Vector]) -> Option<Mat> {
    let n = plus.len() + minus.len();
    let mut cols = plus.to_vec();
    cols.extend(minus.iter().cloned());
    let p = Mat::from_columns(field, n, &cols);
    let p_inv = p.inverse().ok()?;
    let d = Mat::from_fn(field, n, n, |i, j| {
        if i != j {
            0
        } else if i < plus.len() {
            1
        } else {
            -1
        }
    });
    Some(&(&p * &d) * &p_inv)
}

/// An involution `i ∈ GL(V)` with `i·u` cyclic of characteristic polynomial `r`.
pub fn cyclic_adapt(u: &Mat, r: &Poly, seed: u64, budget: usize) -> Result<Found<Mat>> {
    let f = u.field();
    let n = u.n();
    let q = u.min_poly();
    if q.deg() != n {
        return Err(Error::PreconditionViolated("u is not cyclic".into()));
    }
    if !r.is_monic() || r.deg() != n {
        return Err(Error::PreconditionViolated(format!("r must be monic of degree {n}")));
    }
    let (q0, r0) = (q.constant_term(), r.constant_term());
    if q0 == 0 {
        return Err(Error::PreconditionViolated("q(0) = 0".into()));
    }
    if !(r0 == f.neg(q0) || (r0 == q0 && n % 2 == 1)) {
        return Err(Error::PreconditionViolated("need r(0) = −q(0), or r(0) = q(0) with odd degree".into()));
    }
    let good = |i: &Mat| {
        let iu = i * u;
        iu.char_poly() == *r && iu.is_cyclic()
    };
    let pairs: u128 =
        (0..=n).map(|a| gaussian_binomial(f.p() as u128, n, a) * gaussian_binomial(f.p() as u128, n, n - a)).sum();
    if n <= 3 && pairs <= EXHAUSTIVE_LIMIT {
        let mode = SearchMode::Exhaustive;
        for a in 0..=n {
            for plus in subspaces(f, n, a) {
                for minus in subspaces(f, n, n - a) {
                    if let Some(i) = involution_from_split(f, &plus, &minus) {
                        if good(&i) {
                            return Ok(Found { value: i, mode });
                        }
                    }
                }
            }
        }
        return Err(Error::SearchExhausted(format!("no involution adapts {q} to {r} ({mode})")));
    }
    let mode = SearchMode::Randomized { seed, budget };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let g = Mat::random_invertible(f, n, &mut rng);
        let a = rng.gen_range(0..=n);
        let d = Mat::from_fn(f, n, n, |i, j| {
            if i != j {
                0
            } else if i < a {
                1
            } else {
                -1
            }
        });
        let i = &(&g * &d) * &g.inverse()?;
        if good(&i) {
            return Ok(Found { value: i, mode });
        }
    }
    Err(Error::SearchExhausted(format!("no involution adapts {q} to {r} ({mode})")))
}

/// The six kinds of indecomposable s-pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    /// `C(p^{2n})`, `p` an irreducible palindromial other than `t ± 1`, `n ≥ 1`.
    PalindromialEven,
    /// `C(p^{2n+1})`, same `p`, `n ≥ 0`.
    PalindromialOdd,
    /// Symplectic extension of `C(q^{2n})`, `q` irreducible with `q ≠ q♯`, `n ≥ 1`.
    ExtensionEven,
    /// Symplectic extension of `C(q^{2n+1})`, `n ≥ 0`.
    ExtensionOdd,
    /// `C((t − η)^{2n})`, `n ≥ 1`.
    UnipotentCyclic,
    /// Symplectic extension of `C((t − η)^{2n+1})`, `n ≥ 0`.
    UnipotentExtension,
}

impl CellKind {
    pub const ALL: [CellKind; 6] = [
        CellKind::PalindromialEven,
        CellKind::PalindromialOdd,
        CellKind::ExtensionEven,
        CellKind::ExtensionOdd,
        CellKind::UnipotentCyclic,
        CellKind::UnipotentExtension,
    ];

    pub fn roman(self) -> &'static str {
        ["I", "II", "III", "IV", "V", "VI"][self as usize]
    }

    pub fn from_roman(s: &str) -> Result<CellKind> {
        CellKind::ALL
            .into_iter()
            .find(|k| k.roman().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown cell type {s:?} (expected I..VI)")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSpec {
    pub kind: CellKind,
    /// The irreducible `p` or `q`; ignored for the unipotent kinds.
    pub poly: Option<Poly>,
    pub n: u32,
    pub eta: i8,
    /// Requested Wall class for [`CellKind::UnipotentCyclic`]: whether its
    /// one-dimensional form takes square values.
    pub wall_disc_square: Option<bool>,
}

fn unrealizable(msg: impl Into<String>) -> Error {
    Error::Unrealizable(msg.into())
}

/// Basis of the alternating forms `G` with `Cᵀ G C = G`.
pub fn invariant_alternating_forms(c: &Mat) -> Vec<Mat> {
    let f = c.field();
    let n = c.n();
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let unit = |(i, j): (usize, usize)| {
        Mat::from_fn(f, n, n, |a, b| {
            if (a, b) == (i, j) {
                1
            } else if (a, b) == (j, i) {
                -1
            } else {
                0
            }
        })
    };
    let ct = c.transpose();
    let images: Vec<Mat> = slots.iter().map(|&s| &(&(&ct * &unit(s)) * c) - &unit(s)).collect();
    let system = Mat::from_fn(f, n * n, slots.len(), |r, k| images[k].data()[r] as i64);
    system
        .kernel_basis()
        .into_iter()
        .map(|x| slots.iter().zip(&x).fold(Mat::zero(f, n, n), |acc, (&s, &coef)| &acc + &unit(s).scale(coef)))
        .collect()
}

/// Some symplectic conjugate of `c`, found from a random invertible invariant
/// alternating form.
pub fn symplectic_realization(c: &Mat, seed: u64, budget: usize) -> Result<Mat> {
    let f = c.field();
    let forms = invariant_alternating_forms(c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let g = forms.iter().fold(Mat::zero(f, c.n(), c.n()), |acc, b| &acc + &b.scale(rng.gen_range(0..f.p()) as u8));
        if g.is_invertible() {
            let t = symplectic_basis(&g)?;
            return Ok(&(&t.inverse()? * c) * &t);
        }
    }
    Err(Error::SearchExhausted("no invertible invariant alternating form".into()))
}

/// `[[A, A·C], [0, A♯]]` with `A = I + N` (`N` the nilpotent Jordan block)
/// and `C = c·E_{n,n}`; negated for `η = −1`. It is `C((t − η)^{2n})`. For
/// `η = 1`, `s(f₁, (u − u⁻¹)(u + u⁻¹ − 2)^{n−1} f₁) = 2(−1)^n c`, so the Wall
/// form (which carries a factor ½) takes the value `(−1)^n c`.
pub fn unipotent_block(field: Field, eta: i8, n: usize, c: FieldElem) -> Result<Mat> {
    if n == 0 || c.is_multiple_of(field.p() as u8) {
        return Err(unrealizable("the block needs n ≥ 1 and c ≠ 0"));
    }
    let a = Mat::from_fn(field, n, n, |i, j| (i == j || j == i + 1) as i64);
    let corner = Mat::from_fn(field, n, n, |i, j| if i == n - 1 && j == n - 1 { c as i64 } else { 0 });
    let mut u = Mat::zero(field, 2 * n, 2 * n);
    u.set_block(0, 0, &a);
    u.set_block(0, n, &(&a * &corner));
    u.set_block(n, n, &a.sharp()?);
    Ok(if eta < 0 { -&u } else { u })
}

pub fn cell_fixture(field: Field, spec: &CellSpec) -> Result<SPair> {
    let eta_poly = || Poly::linear(field, field.elem(spec.eta as i64));
    if matches!(spec.kind, CellKind::UnipotentCyclic | CellKind::UnipotentExtension) && spec.eta.abs() != 1 {
        return Err(unrealizable("η must be ±1"));
    }
    let need_poly = || -> Result<Poly> {
        let p = spec.poly.clone().ok_or_else(|| unrealizable("this cell type needs a polynomial"))?;
        if p.field() != field {
            return Err(Error::FieldMismatch(p.field().p(), field.p()));
        }
        if !p.is_monic() || !p.is_irreducible()? {
            return Err(unrealizable(format!("{p} is not monic irreducible")));
        }
        Ok(p)
    };
    let pair = match spec.kind {
        CellKind::PalindromialEven | CellKind::PalindromialOdd => {
            let p = need_poly()?;
            if p.deg() == 1 || !p.is_palindromial()? {
                return Err(unrealizable(format!("{p} is not a palindromial other than t ± 1")));
            }
            let e = if spec.kind == CellKind::PalindromialEven {
                if spec.n == 0 {
                    return Err(unrealizable("the even exponent needs n ≥ 1"));
                }
                2 * spec.n
            } else {
                2 * spec.n + 1
            };
            SPair::new(symplectic_realization(&Mat::companion(&p.pow(e)), 0, 10_000)?)?
        }
        CellKind::ExtensionEven | CellKind::ExtensionOdd => {
            let q = need_poly()?;
            if q.constant_term() == 0 || q.reciprocal()? == q {
                return Err(unrealizable(format!("{q} must differ from its reciprocal")));
            }
            let e = if spec.kind == CellKind::ExtensionEven {
                if spec.n == 0 {
                    return Err(unrealizable("the even exponent needs n ≥ 1"));
                }
                2 * spec.n
            } else {
                2 * spec.n + 1
            };
            SPair::new(symplectic_extension(&Mat::companion(&q.pow(e)))?)?
        }
        CellKind::UnipotentExtension => {
            SPair::new(symplectic_extension(&Mat::companion(&eta_poly().pow(2 * spec.n + 1)))?)?
        }
        CellKind::UnipotentCyclic => {
            if spec.n == 0 {
                return Err(unrealizable("C((t − η)^{2n}) needs n ≥ 1"));
            }
            let n = spec.n as usize;
            let mut chosen = None;
            for c in 1..field.p() as u8 {
                let pair = SPair::new(unipotent_block(field, spec.eta, n, c)?)?;
                let class = profile(&pair).wall_class(spec.eta, 2 * spec.n);
                if spec.wall_disc_square.is_none_or(|want| class.is_some_and(|cl| cl.disc_is_square == want)) {
                    chosen = Some(pair);
                    break;
                }
            }
            chosen.ok_or_else(|| unrealizable("requested Wall class is not attained"))?
        }
    };
    Ok(pair)
}

/// Named matrices from the constructive lemmas, with the involutions their
/// constructions use.
#[derive(Clone, Debug)]
pub struct NamedFixture {
    pub name: String,
    pub pair: SPair,
    pub involutions: Vec<Mat>,
}

pub const FIXTURE_NAMES: [&str; 5] = [
    "lemma-t2plus1-squared(h=..,p=..)",
    "lemma-(t+1)2-identity(eps=..,p=..)",
    "U_S(S=..,p=..)",
    "involution-K(p=..)",
    "quarter-turn(p=..)",
];

/// Splits `name(args)` at the last balanced parenthesis group.
fn split_call(s: &str) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    if !s.ends_with(')') {
        return Ok((s, Vec::new()));
    }
    let bytes = s.as_bytes();
    let mut depth = 0i32;
    let mut open = None;
    for (i, &b) in bytes.iter().enumerate().rev() {
        match b {
            b')' => depth += 1,
            b'(' => {
                depth -= 1;
                if depth == 0 {
                    open = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let open = open.ok_or_else(|| Error::Parse(format!("unbalanced parentheses in {s:?}")))?;
    let inner = &s[open + 1..s.len() - 1];
    let mut args = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, ch) in inner.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                args.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if !inner.trim().is_empty() {
        args.push(inner[start..].trim());
    }
    Ok((&s[..open], args))
}

fn parse_int(s: &str) -> Result<i64> {
    s.trim().parse::<i64>().map_err(|_| Error::Parse(format!("expected an integer, got {s:?}")))
}

/// Parses `diag(a,b)` or `[[a,b],[c,d]]`.
fn parse_small_matrix(field: Field, s: &str) -> Result<Mat> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
        let d: Vec<i64> = inner.split(',').map(parse_int).collect::<Result<_>>()?;
        return Ok(Mat::from_fn(field, d.len(), d.len(), |i, j| if i == j { d[i] } else { 0 }));
    }
    let rows: Vec<Vec<i64>> =
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("bad matrix literal {s:?}: {e}")))?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
        return Err(Error::Parse(format!("matrix literal {s:?} is not square")));
    }
    Ok(Mat::from_rows(field, &rows))
}

fn quarter_turn_k(field: Field) -> Mat {
    Mat::from_rows(field, &[[0, -1], [1, 0]])
}

pub fn named_fixture(name: &str) -> Result<NamedFixture> {
    let (base, args) = split_call(name)?;
    let mut params: Vec<(String, String)> = Vec::new();
    for (idx, a) in args.iter().enumerate() {
        match a.split_once('=') {
            Some((k, v)) => params.push((k.trim().to_string(), v.trim().to_string())),
            None => params.push((format!("#{idx}"), a.trim().to_string())),
        }
    }
    let get = |keys: &[&str]| params.iter().find(|(k, _)| keys.contains(&k.as_str())).map(|(_, v)| v.clone());
    let p = get(&["p"]).ok_or_else(|| Error::Parse(format!("{name:?} needs p=..")))?;
    let field = Field::new(u32::try_from(parse_int(&p)?).map_err(|_| Error::Parse(format!("bad modulus {p}")))?)?;
    let k = quarter_turn_k(field);
    let (pair, involutions) = match base.trim() {
        "lemma-t2plus1-squared" => {
            let h = field.elem(parse_int(&get(&["h"]).unwrap_or_else(|| "1".into()))?);
            let excluded = [0, field.elem(2), field.elem(-2)];
            if field.elements().all(|x| excluded.contains(&x)) {
                return Err(Error::WrongField(format!("F_{} has no h outside {{0, 2, −2}}", field.p())));
            }
            if excluded.contains(&h) {
                return Err(Error::InvalidScalar(format!("h = {} must avoid 0 and ±2", field.signed(h))));
            }
            let mut m = Mat::zero(field, 4, 4);
            m.set_block(0, 2, &Mat::scalar(field, 2, field.neg(1)));
            m.set_block(2, 0, &Mat::identity(field, 2));
            m.set_block(2, 2, &Mat::scalar(field, 2, h));
            (SPair::new(m)?, vec![swap_involution(field, &k)?])
        }
        "lemma-(t+1)2-identity" => {
            let raw = get(&["eps", "ε", "epsilon", "#0"]).unwrap_or_else(|| "1".into());
            let eps = if raw == "ε" || raw == "eps" { 1 } else { field.elem(parse_int(&raw)?) };
            if eps == 0 {
                return Err(Error::InvalidScalar("ε must be nonzero".into()));
            }
            let d = Mat::from_rows(field, &[[-1, 1], [0, 1]]);
            let flip = symplectic_extension(&d)?;
            let delta = Mat::from_rows(field, &[[0, 1], [1, 0]]);
            let shear = shear(field, &delta.scale(eps));
            (SPair::new(&flip * &shear)?, vec![flip])
        }
        "U_S" => {
            let s =
                parse_small_matrix(field, &get(&["S", "#0"]).ok_or_else(|| Error::Parse("U_S needs S=..".into()))?)?;
            if s != s.transpose() || s.n() != 2 {
                return Err(Error::NotSymmetric);
            }
            (SPair::new(shear(field, &s))?, Vec::new())
        }
        "involution-K" => {
            let a = swap_involution(field, &k)?;
            (SPair::new(a.clone())?, vec![a])
        }
        "quarter-turn" => (SPair::new(symplectic_extension(&k)?)?, Vec::new()),
        other => {
            return Err(Error::UnknownName(format!("{other:?}; known fixtures: {}", FIXTURE_NAMES.join(", "))));
        }
    };
    Ok(NamedFixture { name: name.to_string(), pair, involutions })
}

/// `[[I, S], [0, I]]` for symmetric `S`.
pub fn shear(field: Field, s: &Mat) -> Mat {
    let n = s.n();
    let mut u = Mat::identity(field, 2 * n);
    u.set_block(0, n, s);
    u
}

/// `[[0, K], [K⁻¹, 0]]`.
fn swap_involution(field: Field, k: &Mat) -> Result<Mat> {
    let n = k.n();
    let mut a = Mat::zero(field, 2 * n, 2 * n);
    a.set_block(0, n, k);
    a.set_block(n, 0, &k.inverse()?);
    Ok(a)
}

fn adapted(pair: &SPair, plane: &[Vector]) -> bool {
    let space = pair.space;
    if plane.len() != 2 || space.form(&plane[0], &plane[1]) == 0 {
        return false;
    }
    let images: Vec<Vector> = plane.iter().map(|x| pair.u.mul_vec(x)).collect();
    plane.iter().all(|x| images.iter().all(|y| space.form(x, y) == 0))
}

/// An s-regular plane `P` with `u(P) ⊥ P`.
pub fn find_adapted_plane(pair: &SPair, seed: u64, budget: usize) -> Result<Found<Vec<Vector>>> {
    let space = pair.space;
    let f = space.field();
    if space.dim() < 2 {
        return Err(not_found("no plane in a space of dimension < 2", SearchMode::Exhaustive));
    }
    let count = gaussian_binomial(f.p() as u128, space.dim(), 2);
    if space.dim() <= 8 && count <= EXHAUSTIVE_LIMIT {
        let mode = SearchMode::Exhaustive;
        return subspaces(f, space.dim(), 2)
            .find(|p| adapted(pair, p))
            .map(|value| Found { value, mode })
            .ok_or_else(|| not_found("no adapted plane", mode));
    }
    let mode = SearchMode::Randomized { seed, budget };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let x = Mat::random(f, space.dim(), 1, &mut rng).col(0);
        let y = Mat::random(f, space.dim(), 1, &mut rng).col(0);
        let plane = span_basis(f, space.dim(), &[x, y]);
        if adapted(pair, &plane) {
            return Ok(Found { value: plane, mode });
        }
    }
    Err(not_found("no adapted plane", mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflengine::nielsen_2refl;

    fn f3() -> Field {
        Field::new(3).unwrap()
    }

    /// `C(t²+1) ⊥ I₂` with the quarter turn on `(e₁, f₁)`.
    fn quarter_plus_identity() -> SPair {
        let mut u = Mat::identity(f3(), 4);
        u.set(0, 0, 0);
        u.set(2, 2, 0);
        u.set(2, 0, 1);
        u.set(0, 2, 2);
        SPair::new(u).unwrap()
    }

    #[test]
    fn restricted_form_of_the_quarter_turn_configuration() {
        let pair = quarter_plus_identity();
        let w = vec![vec![1, 1, 0, 0], vec![0, 0, 1, 2]];
        assert_eq!(restricted_form(&pair, &w), Mat::from_rows(f3(), &[[1, -1], [1, 1]]));
        assert_eq!(restricted_form(&SPair::identity(pair.space), &w), Mat::zero(f3(), 2, 2));
        assert_eq!(restricted_form(&pair, &[]).rows(), 0);
    }

    #[test]
    fn pullback_replay() {
        let pair = quarter_plus_identity();
        let w = vec![vec![1, 1, 0, 0], vec![0, 0, 1, 2]];
        let b = Mat::from_rows(f3(), &[[0, 1], [-1, 0]]);
        let problem = PullbackProblem {
            pair: pair.clone(),
            w: w.clone(),
            b_gram: b,
            residual_involution: Mat::identity(f3(), 0),
        };
        let pb = space_pullback(&problem).unwrap();
        assert_eq!(pb.v, Mat::from_rows(f3(), &[[-1, -1], [1, -1]]));
        assert_eq!(pb.v.char_poly(), Poly::new(f3(), &[-1, -1, 1]));
        let iu = &pb.involution * &pair.u;
        assert_eq!(iu.char_poly(), Poly::new(f3(), &[1, 0, 0, 0, 1]));
    }

    #[test]
    fn pullback_rejects_bad_problems() {
        let pair = quarter_plus_identity();
        let b = Mat::from_rows(f3(), &[[0, 1], [-1, 0]]);
        let w = vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0]];
        let problem = PullbackProblem { pair, w, b_gram: b, residual_involution: Mat::identity(f3(), 0) };
        assert!(matches!(space_pullback(&problem), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn skewadjoint_pair_for_t2_plus_1() {
        let (b, v) = build_skewadjoint_pair(&Poly::new(f3(), &[1, 0, 1])).unwrap();
        assert_eq!(b, Mat::scalar(f3(), 2, 2));
        assert_eq!(v, Mat::from_rows(f3(), &[[0, -1], [1, 0]]));
        assert!(!classify_quadratic(&b).unwrap().is_hyperbolic(f3()));
        assert!(build_skewadjoint_pair(&Poly::new(f3(), &[2, 1, 1])).is_err());
    }

    #[test]
    fn split_pair() {
        let f5 = Field::new(5).unwrap();
        let (b, v) = build_split_pair(f5, 2, 1).unwrap();
        assert_eq!(b, Mat::from_rows(f5, &[[0, 1], [1, 0]]));
        assert_eq!(v, Mat::from_rows(f5, &[[2, 0], [0, -2]]));
        assert!(matches!(build_split_pair(f5, 1, 1), Err(Error::InvalidScalar(_))));
        assert!(matches!(build_split_pair(f5, 4, 1), Err(Error::InvalidScalar(_))));
    }

    #[test]
    fn cyclic_adaptation_examples() {
        let f = f3();
        let q = Mat::companion(&Poly::new(f, &[1, 0, 1]));
        let r = Poly::new(f, &[-1, -1, 1]);
        let i = cyclic_adapt(&q, &r, 0, 1000).unwrap().value;
        assert!((&i * &i).is_identity());
        assert_eq!((&i * &q).char_poly(), r);
        let q2 = Mat::companion(&Poly::new(f, &[-1, 0, 1]));
        assert!(cyclic_adapt(&q2, &Poly::new(f, &[1, 0, 1]), 0, 1000).is_ok());
        let q3 = Mat::companion(&Poly::new(f, &[1, -2, 1]));
        assert!(matches!(cyclic_adapt(&q3, &Poly::new(f, &[1, 0, 1]), 0, 1000), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn fixtures_for_every_cell_kind() {
        let f = f3();
        let id = cell_fixture(
            f,
            &CellSpec { kind: CellKind::UnipotentExtension, poly: None, n: 0, eta: 1, wall_disc_square: None },
        )
        .unwrap();
        assert_eq!(id.u, Mat::identity(f, 2));
        let q = Poly::new(f, &[1, 0, 1]);
        let c = cell_fixture(
            f,
            &CellSpec { kind: CellKind::PalindromialEven, poly: Some(q.clone()), n: 1, eta: 1, wall_disc_square: None },
        )
        .unwrap();
        assert_eq!(c.u.invariant_factors().factors, vec![q.pow(2)]);
        let bad = CellSpec {
            kind: CellKind::PalindromialEven,
            poly: Some(Poly::new(f, &[2, 1, 1])),
            n: 1,
            eta: 1,
            wall_disc_square: None,
        };
        assert!(matches!(cell_fixture(f, &bad), Err(Error::Unrealizable(_))));
        let vi = cell_fixture(
            f,
            &CellSpec { kind: CellKind::UnipotentExtension, poly: None, n: 1, eta: -1, wall_disc_square: None },
        )
        .unwrap();
        assert!(nielsen_2refl(&vi));
    }

    #[test]
    fn unipotent_block_wall_value() {
        for p in [3u32, 5, 7] {
            let f = Field::new(p).unwrap();
            for n in 1..=3usize {
                for c in 1..p as u8 {
                    let u = unipotent_block(f, 1, n, c).unwrap();
                    let pair = SPair::new(u.clone()).unwrap();
                    let prof = profile(&pair);
                    let t1 = Poly::linear(f, 1);
                    assert_eq!(prof.inv_factors.factors, vec![t1.pow(2 * n as u32)]);
                    let sign = if n % 2 == 0 { 1 } else { -1 };
                    // unhalved expression s(f₁, (u − u⁻¹)(u + u⁻¹ − 2)^{n−1} f₁)
                    let u_inv = u.inverse().unwrap();
                    let two = Mat::scalar(f, 2 * n, 2);
                    let op = &(&u - &u_inv) * &(&(&u + &u_inv) - &two).pow(n as u64 - 1);
                    let f1 = pair.space.f(0);
                    assert_eq!(pair.space.form(&f1, &op.mul_vec(&f1)), f.mul(f.elem(2 * sign), c));
                    // the Wall form itself carries the factor ½
                    let value = f.mul(f.elem(sign), c);
                    let class = prof.wall_class(1, 2 * n as u32).unwrap();
                    assert_eq!(class.disc_is_square, f.is_square(value), "p={p} n={n} c={c}");
                }
            }
        }
    }

    #[test]
    fn named_fixture_parsing() {
        let m = named_fixture("lemma-t2plus1-squared(h=1, p=5)").unwrap();
        let f5 = Field::new(5).unwrap();
        let quad = Poly::new(f5, &[1, -1, 1]);
        assert_eq!(m.pair.u.invariant_factors().factors, vec![quad.clone(), quad]);
        assert!(matches!(named_fixture("lemma-t2plus1-squared(h=1,p=3)"), Err(Error::WrongField(_))));
        let jv = named_fixture("lemma-(t+1)2-identity(ε,p=3)").unwrap();
        let f = f3();
        assert_eq!(jv.pair.u.char_poly(), &Poly::linear(f, 2).pow(2) * &Poly::linear(f, 1).pow(2));
        let us = named_fixture("U_S(S=diag(1,-1), p=3)").unwrap();
        assert!(nielsen_2refl(&us.pair));
        let us2 = named_fixture("U_S(S=[[1,1],[1,-1]],p=3)").unwrap();
        assert!(!nielsen_2refl(&us2.pair));
        assert!(matches!(named_fixture("nope(p=3)"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn adapted_planes() {
        let space = SympSpace::new(f3(), 4).unwrap();
        assert!(matches!(find_adapted_plane(&SPair::identity(space), 0, 10), Err(Error::NotFound(_))));
        assert!(find_adapted_plane(&SPair::new(-&space.identity()).unwrap(), 0, 10).is_err());
    }
}
