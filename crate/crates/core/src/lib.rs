//! High-precision evaluation of Lambert-type q-series.
//!
//! Each series is available through its defining, linearly convergent sum and
//! through a theta-convergent transform whose terms decay like `q^(n^2)`.
//! On top of that the crate computes reciprocal sums of Fibonacci-type
//! recurrences by several independent routes and numerically certifies the
//! classical identities connecting these series.
//!
//! - [`numerics`]: precision contexts, the [`BigReal`] scalar, parsing/formatting
//! - [`qcore`]: q-Pochhammer symbols, theta constant, summation engine
//! - [`lambert`]: Lambert, generalized Lambert and `sum t^n/(1 - x q^n)` series
//! - [`bilateral`]: the Jordan-Kronecker function and its theta forms
//! - [`recurrences`]: Horadam sequences and reciprocal sums
//! - [`gospermat`]: the 2x2 matrix-product form of Clausen's identity
//! - [`identities`]: identity registry and sampled verification
//! - [`bench`]: naive-vs-theta convergence reports

pub mod bench;
pub mod bilateral;
pub mod error;
pub mod gospermat;
pub mod identities;
pub mod lambert;
pub mod numerics;
pub mod qcore;
pub mod recurrences;

pub use error::{Error, Result};
pub use numerics::{format_real, make_context, parse_real, BigReal, RealContext};
pub use qcore::{Decay, SeriesValue, TermGenerator};
