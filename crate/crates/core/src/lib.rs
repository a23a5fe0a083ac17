//! Twisted L²-torsion functions of 3-manifold groups computed through
//! finite-by-free-abelian quotients, with degree extraction and comparison
//! against the Thurston norm.

pub mod catalog;
pub mod degree;
pub mod error;
pub mod fkdet;
pub mod foxcalc;
pub mod fpgroup;
pub mod groupring;
pub mod intmat;
pub mod torsion;

pub use error::{Error, NonAcyclicCertificate, Result};
