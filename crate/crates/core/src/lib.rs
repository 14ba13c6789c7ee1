//! Spectral graph convolutions with a full channel-to-channel filter grid.
//!
//! The crate is organized bottom up:
//!
//! * [`dense`] and [`graph`]: small dense matrices, graphs, normalized
//!   Laplacians and sparse products;
//! * [`spectral`]: the Jacobi eigensolver and graph Fourier transforms;
//! * [`paradigms`]: the single-filter, mixed and per-channel convolution
//!   families, the 2-D filter grid that contains all three, and the
//!   construction floors that separate them;
//! * [`chebyshev`]: Chebyshev interpolation and the polynomial form of the
//!   2-D convolution;
//! * [`model`]: ChebNet2D with exact gradients, Adam and early stopping;
//! * [`failure_lab`]: adversarial `(F, Z*)` instances and a multi-start
//!   optimizer that measures what each family can reach;
//! * [`data_io`]: dataset files, synthetic tasks and canonical JSON;
//! * [`verify`] and [`cli`]: runtime self-checks and the `spectral2d` binary.

pub mod chebyshev;
pub mod cli;
pub mod data_io;
pub mod dense;
pub mod error;
pub mod failure_lab;
pub mod graph;
pub mod model;
pub mod paradigms;
pub mod spectral;
pub mod verify;

pub use dense::DenseMat;
pub use error::{Error, Result};
