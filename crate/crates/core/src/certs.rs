//! Involution-decomposition certificates.
//!
//! Factors are stored left to right and multiply to the target as
//! `target = f₁·f₂·…·f_k`, matrices acting on column vectors.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfpoly::Field;
use crate::linalg::Mat;
use crate::reflengine::{nielsen_2refl, LengthOracle};
use crate::sympcore::{symplectic_defect, SPair, GRAM_CONVENTION};

pub const CERT_FORMAT: &str = "sympinv-cert-1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub p: u32,
    pub two_m: usize,
    pub target: Mat,
    pub factors: Vec<Mat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Clause {
    Modulus,
    TargetShape,
    FactorShape(usize),
    TargetSymplectic,
    FactorSymplectic(usize),
    FactorInvolution(usize),
    Product,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::Modulus => write!(f, "modulus is not a supported odd prime"),
            Clause::TargetShape => write!(f, "target has the wrong field or dimension"),
            Clause::FactorShape(i) => write!(f, "factor {i} has the wrong field or dimension"),
            Clause::TargetSymplectic => write!(f, "target is not symplectic"),
            Clause::FactorSymplectic(i) => write!(f, "factor {i} is not symplectic"),
            Clause::FactorInvolution(i) => write!(f, "factor {i} is not an involution"),
            Clause::Product => write!(f, "product of factors differs from target"),
        }
    }
}

/// `Ok(())` or the first violated clause.
pub fn verify(cert: &Certificate) -> std::result::Result<(), Clause> {
    let field = Field::new(cert.p).map_err(|_| Clause::Modulus)?;
    let n = cert.two_m;
    let shaped = |m: &Mat| m.field() == field && m.is_square() && m.rows() == n && n.is_multiple_of(2);
    if !shaped(&cert.target) {
        return Err(Clause::TargetShape);
    }
    if let Some(i) = cert.factors.iter().position(|m| !shaped(m)) {
        return Err(Clause::FactorShape(i));
    }
    if symplectic_defect(&cert.target).is_some() {
        return Err(Clause::TargetSymplectic);
    }
    if let Some(i) = cert.factors.iter().position(|m| symplectic_defect(m).is_some()) {
        return Err(Clause::FactorSymplectic(i));
    }
    if let Some(i) = cert.factors.iter().position(|m| !(m * m).is_identity()) {
        return Err(Clause::FactorInvolution(i));
    }
    let product = cert.factors.iter().fold(Mat::identity(field, n), |acc, m| &acc * m);
    if product != cert.target {
        return Err(Clause::Product);
    }
    Ok(())
}

/// A shortest decomposition of `pair.u`, walking down one level at a time:
/// at each step the first involution (table order) that lowers the length.
pub fn extract_certificate(pair: &SPair, oracle: &LengthOracle, max_k: usize) -> Result<Certificate> {
    let k = oracle.length(pair, max_k)?;
    let mats = oracle.table().mats();
    let mut factors = Vec::with_capacity(k);
    let mut rest = pair.u.clone();
    let mut level = k;
    while level > 2 {
        let (i, next) = mats
            .iter()
            .map(|i| (i, i * &rest))
            .find(|(_, next)| oracle.at_most(next, level - 1))
            .ok_or_else(|| Error::Mismatch(format!("no involution lowers the length below {level}")))?;
        factors.push(i.clone());
        rest = next;
        level -= 1;
    }
    match level {
        2 => {
            let (i, j) = mats
                .iter()
                .map(|i| (i, i * &rest))
                .find(|(_, j)| (j * j).is_identity())
                .ok_or_else(|| Error::Mismatch("2-reflectional element without an involution pair".into()))?;
            factors.push(i.clone());
            factors.push(j);
        }
        1 => factors.push(rest),
        _ => {}
    }
    let cert = Certificate { p: pair.field().p(), two_m: pair.dim(), target: pair.u.clone(), factors };
    verify(&cert).map_err(|c| Error::Mismatch(format!("extracted certificate fails: {c}")))?;
    Ok(cert)
}

/// Some decomposition of length at most `bound`, found by sampling
/// `bound − 2` involutions until the remainder passes Nielsen's test and then
/// splitting the remainder. Not minimal; failure within the budget proves
/// nothing.
pub fn sample_certificate(
    pair: &SPair,
    involutions: &[Mat],
    bound: usize,
    seed: u64,
    budget: usize,
) -> Result<Certificate> {
    let make =
        |factors: Vec<Mat>| Certificate { p: pair.field().p(), two_m: pair.dim(), target: pair.u.clone(), factors };
    if bound < 2 || involutions.is_empty() {
        return Err(Error::PreconditionViolated("sampling needs bound ≥ 2 and a nonempty involution table".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let prefix: Vec<&Mat> = (0..bound - 2).map(|_| &involutions[rng.gen_range(0..involutions.len())]).collect();
        // rest = i_k ⋯ i_1 · u, so u = i_1 ⋯ i_k · rest
        let rest = prefix.iter().fold(pair.u.clone(), |acc, i| *i * &acc);
        let rest_pair = SPair { space: pair.space, u: rest.clone() };
        if !nielsen_2refl(&rest_pair) {
            continue;
        }
        let Some((i, j)) = involutions.iter().map(|i| (i, i * &rest)).find(|(_, j)| (j * j).is_identity()) else {
            return Err(Error::Mismatch("Nielsen-positive element without an involution pair".into()));
        };
        let mut factors: Vec<Mat> = prefix.into_iter().cloned().collect();
        factors.push(i.clone());
        factors.push(j);
        let cert = make(factors);
        verify(&cert).map_err(|c| Error::Mismatch(format!("sampled certificate fails: {c}")))?;
        return Ok(cert);
    }
    Err(Error::SearchExhausted(format!("no length-{bound} decomposition within {budget} samples")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub format: String,
    pub p: u32,
    pub n: usize,
    pub gram: String,
    pub target: Vec<Vec<i64>>,
    pub factors: Vec<Vec<Vec<i64>>>,
}

fn rows_of(m: &Mat) -> Vec<Vec<i64>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(i64::from).collect()).collect()
}

fn mat_of(field: Field, n: usize, rows: &[Vec<i64>]) -> Result<Mat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("expected a {n}×{n} matrix")));
    }
    Ok(Mat::from_rows(field, rows))
}

impl Certificate {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            format: CERT_FORMAT.to_string(),
            p: self.p,
            n: self.two_m,
            gram: GRAM_CONVENTION.to_string(),
            target: rows_of(&self.target),
            factors: self.factors.iter().map(rows_of).collect(),
        }
    }

    pub fn from_json(j: &CertificateJson) -> Result<Certificate> {
        if j.format != CERT_FORMAT {
            return Err(Error::Parse(format!("unknown certificate format {:?}", j.format)));
        }
        if j.gram != GRAM_CONVENTION {
            return Err(Error::Parse(format!("unsupported Gram convention {:?}", j.gram)));
        }
        let field = Field::new(j.p)?;
        Ok(Certificate {
            p: j.p,
            two_m: j.n,
            target: mat_of(field, j.n, &j.target)?,
            factors: j.factors.iter().map(|f| mat_of(field, j.n, f)).collect::<Result<_>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflengine::InvolutionTable;
    use crate::sympcore::SympSpace;

    #[test]
    fn trivial_certificates() {
        let f = Field::new(3).unwrap();
        let id = Mat::identity(f, 4);
        assert_eq!(verify(&Certificate { p: 3, two_m: 4, target: id.clone(), factors: vec![] }), Ok(()));
        let neg = -&id;
        assert_eq!(verify(&Certificate { p: 3, two_m: 4, target: neg.clone(), factors: vec![neg.clone()] }), Ok(()));
        assert_eq!(verify(&Certificate { p: 3, two_m: 4, target: neg.clone(), factors: vec![] }), Err(Clause::Product));
        let mut bad = id.clone();
        bad.set(0, 1, 1);
        assert_eq!(
            verify(&Certificate { p: 3, two_m: 4, target: id, factors: vec![neg, bad] }),
            Err(Clause::FactorSymplectic(1))
        );
    }

    #[test]
    fn extraction_on_small_cases() {
        let table = InvolutionTable::for_group(4, 3).unwrap();
        let oracle = LengthOracle::new(&table);
        let s = SympSpace::new(Field::new(3).unwrap(), 4).unwrap();
        assert!(extract_certificate(&SPair::identity(s), &oracle, 6).unwrap().is_empty());
        let i = SPair::new(table.mats()[5].clone()).unwrap();
        let c = extract_certificate(&i, &oracle, 6).unwrap();
        assert_eq!(c.factors, vec![i.u.clone()]);
        let json = c.to_json();
        assert_eq!(Certificate::from_json(&json).unwrap(), c);
    }
}
