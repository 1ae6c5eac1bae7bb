//! Recovery of low-rank Hermitian matrices from rank-one measurements
//! tr(Z a a*), by nuclear-norm or PSD trace minimization, together with
//! weighted complex projective designs and Monte Carlo checks of the
//! moment and small-ball quantities that govern recovery.

pub mod analysis;
pub mod designs;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod nnls;
pub mod rng;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{EigenDecomposition, HermitianMatrix, LowRankSignal};
