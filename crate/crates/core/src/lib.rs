//! Exact computations in symplectic groups over small odd prime fields:
//! conjugacy invariants, reflectional length, and involution-product
//! certificates.

#![allow(clippy::needless_range_loop)]

pub mod certs;
pub mod construct;
pub mod error;
pub mod gfpoly;
pub mod linalg;
pub mod reflengine;
pub mod subspace;
pub mod sympcore;
pub mod wall;

pub use error::{Error, Result};
pub use gfpoly::{Field, FieldElem, Poly};
pub use linalg::{InvariantFactors, Mat, Vector};
pub use sympcore::{SPair, SympSpace};
pub use wall::{InvariantProfile, QuadFormClass};
