//! Latent-vector representations of optimization landscapes.
//!
//! This crate learns compact feature vectors for black-box optimization
//! landscapes from design-of-experiments samples. A fixed Sobol design is
//! evaluated on an objective function, the values are normalized to `[0,1]`,
//! and a small dense (variational) autoencoder trained on randomly generated
//! functions encodes the resulting vector into a latent representation. The
//! latent vectors serve two downstream purposes: retrieving cheap surrogate
//! functions whose landscapes resemble an expensive target, and classifying
//! high-level landscape properties (multimodality, global structure, funnel
//! presence) of the 24 standard benchmark functions.
//!
//! Modules, in pipeline order:
//!
//! - [`sampling`]: Sobol designs, box rescaling, value normalization
//! - [`randfunc`]: random expression-tree objective functions
//! - [`bbob`]: the 24 benchmark functions and their property labels
//! - [`neuralnet`]: dense layers, backpropagation, Adam
//! - [`vae`]: model assembly, losses, training, encoding
//! - [`features`]: landscape features and feature-vector plumbing
//! - [`retrieval`]: latent-keyed function archives and nearest-neighbor search
//! - [`classify`]: random forest and macro-F1 over the property tasks
//! - [`analysis`]: sweeps, multidimensional scaling, latent traversal
//! - [`persistence`]: file formats and fingerprints
//!
//! Everything stochastic is driven by explicit 64-bit seeds through one
//! counter-based generator ([`rng::SplitMix64`]), so every pipeline output
//! is reproducible from its inputs.

pub mod analysis;
pub mod bbob;
pub mod classify;
pub mod error;
pub mod features;
pub mod linalg;
pub mod neuralnet;
pub mod persistence;
pub mod randfunc;
pub mod retrieval;
pub mod rng;
pub mod sampling;
pub mod vae;

pub use error::{Error, Result};
