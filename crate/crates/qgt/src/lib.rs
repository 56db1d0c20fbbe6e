//! Markov kernels of the extended Gelfand–Tsetlin graph over the two-sided
//! q-lattice, q-B-splines and the q-Laplace transform.

pub mod boundary;
pub mod error;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod qcalc;
pub mod sampler;
pub mod scalar;
pub mod splines;
pub mod symfunc;
pub mod transforms;
pub mod validation;

pub use error::{Error, Result};
pub use lattice::{ClosedPoint, Config, ExtConfig, LatticePoint, QParams, Sign};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/qcalc.md")]
    mod qcalc {}
    #[doc = include_str!("../../../book/src/symfunc.md")]
    mod symfunc {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/boundary.md")]
    mod boundary {}
    #[doc = include_str!("../../../book/src/splines.md")]
    mod splines {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/sampler.md")]
    mod sampler {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
