#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod bounds;
pub mod chain;
pub mod error;
pub mod exact;
pub mod heat;
pub mod io;
pub mod linalg;
pub mod profiles;
pub mod report;
pub mod scalar;
pub mod subset;
pub mod verify;
pub mod zoo;

pub use chain::{build_chain, ChainOptions, MarkovChain, Symmetrizations};
pub use error::{Error, Result};
pub use heat::{HeatKernelSnapshot, HeatMethod, SpectralDecomposition};
pub use scalar::Real;

pub type Chain = MarkovChain<f64>;
pub type Chain32 = MarkovChain<f32>;
