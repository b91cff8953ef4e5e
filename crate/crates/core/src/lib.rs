//! Structural matrix algebras `A_ρ = span{E_ij : (i,j) ∈ ρ}` over a
//! quasi-order `ρ`, Jordan embeddings of them, and a sampled harness for
//! commutativity and spectrum preservers.
pub mod cocycle;
pub mod error;
pub mod io;
pub mod jordan;
pub mod matalg;
pub mod preservers;
pub mod quasiorder;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
pub use matalg::CMatrix;
pub use quasiorder::{BlockTriangular, Closure, ConditionI, Partition, QuasiOrder};
