//! Computational model of the Robba ring over an unramified p-adic field, with
//! certified Gauss valuations, plus/minus matrix factorization, reduction of
//! Frobenius/connection modules to log models, and unit-root descent over
//! finite fields.

pub mod coeff;
pub mod doc;
pub mod error;
pub mod factor;
pub mod field;
pub mod fixtures;
pub mod pipeline;
pub mod selfcheck;
pub mod series;
pub mod sigma_nabla;
pub mod unitroot;

pub use coeff::{CoeffElem, CoeffRing};
pub use error::{Error, Result};
pub use field::FiniteField;
pub use series::{FrobeniusLift, GaussValue, LaurentSeries, SeriesCtx, SeriesMatrix, Tail};
