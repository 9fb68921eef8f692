//! High-frequency Gaussianity diagnostics for subordinated isotropic fields
//! on the n-dimensional torus.
//!
//! A real isotropic Gaussian field on the torus is determined by its power
//! spectrum `C_k` on the dual lattice `Z^n`. Pushing the field through a
//! pointwise transform `F` mixes Fourier modes: the variance of the
//! subordinated coefficient at frequency `k` is governed by the convolution
//! powers `Chat_{k,m}` of the spectrum, weighted by the Hermite coefficients
//! of `F`, and whether the normalized coefficient becomes complex Gaussian at
//! high frequency is decided by sup/sum and contraction-norm criteria built
//! from the same convolution powers.
//!
//! The crate provides that tool chain end to end:
//!
//! * [`spectrum`] — band-limited spectra on a cutoff box, with algebraic and
//!   exponential decay families and JSON serialization;
//! * [`convolve`] — convolution powers with a direct-sum oracle path and an
//!   FFT path, plus the splitting-recursion residual check;
//! * [`cltcheck`] — the equivalent CLT criteria: contraction sums, sup/sum
//!   ratios, random-walk bridge laws, and general-transform reports;
//! * [`hermite`] — Hermite evaluation, expansions of polynomial and pointwise
//!   transforms, subordinated variances;
//! * [`kernels`] — discrete chaos-kernel algebra: contractions, the
//!   conjugate-contraction inequality, and the spectral kernel whose norm
//!   reproduces `Chat_{k,m}`;
//! * [`fieldsim`] — seeded Monte Carlo synthesis and moment estimation;
//! * [`experiments`] — case-study runners and CSV/manifest plumbing.
//!
//! The `examples/` directory walks through each capability; the `torus-chaos`
//! binary exposes the same runners as subcommands.

pub mod cltcheck;
pub mod convolve;
mod dft;
pub mod error;
pub mod experiments;
pub mod fieldsim;
pub mod hermite;
pub mod kernels;
pub mod lattice;
pub mod spectrum;

pub use error::{Error, Result};
pub use lattice::LatticeBox;
pub use spectrum::{Spectrum, SpectrumModel};
