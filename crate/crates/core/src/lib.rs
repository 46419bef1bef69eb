//! Witness search for j, j′ and exp on free broad pairs, with the structural
//! predicate checkers that license each search.

pub mod config;
pub mod dd;
pub mod error;
pub mod expr;
pub mod halfplane;
pub mod modular;
pub mod poly;
pub mod problem;
pub mod scalar;
pub mod search;
pub mod torus;
pub mod varieties;

pub use config::SearchConfig;
pub use error::{Error, Result};
pub use halfplane::{HPoint, Jet2Point, Sl2Matrix, Sl2Z};
pub use poly::Poly;
pub use scalar::{ExactComplex, Quad};
