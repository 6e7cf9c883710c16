//! Stochastic vector quantiser with constrained training and jammer nulling.
//!
//! The quantiser encodes an input vector `x` into one of `M` code indices by
//! sampling a sigmoid-derived posterior, and decodes by table lookup. Training
//! minimises the mean Euclidean reconstruction distortion of that probabilistic
//! round trip by gradient descent, optionally under three constraints
//! (bias tied to a detection threshold, fixed weight norm, reconstruction
//! vectors parallel to weights). A trained codebook's posterior is locally
//! sensitive only to the directions it learned to encode; projecting an input
//! onto the orthogonal complement of that sensitivity span suppresses the
//! dominant interference component while leaving weak unencoded structure
//! intact.
//!
//! Module map:
//!
//! - [`codebook`]: code entries, likelihood/posterior evaluation, stochastic
//!   encode, table decode
//! - [`objective`]: reconstruction distortion and its analytic gradients
//! - [`trainer`]: constrained minibatch gradient descent
//! - [`nulling`]: posterior-gradient span, orthogonal projector, nulling depth
//! - [`datagen`]: synthetic jammer-plus-weak-signal scenario sampler
//! - [`oracle`]: brute-force finite-state reference implementations used to
//!   validate the distortion identities
//! - [`io`]: binary codebook serialization

pub mod codebook;
pub mod data;
pub mod datagen;
mod error;
pub mod gradcheck;
pub mod io;
mod linalg;
pub mod nulling;
pub mod objective;
pub mod oracle;
mod par;
pub mod trainer;

pub use codebook::{CodeEntry, CodeSample, Codebook, CodebookMode, PosteriorVector};
pub use data::{Dataset, InputVector};
pub use error::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;
