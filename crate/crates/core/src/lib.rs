//! Reconstruct images from bag-of-visual-words (BoVW) histograms.
//!
//! A BoVW histogram keeps the identity of every visual word in an image but
//! throws away where each word was found. This crate recovers a plausible
//! spatial layout by treating the placement of words on the dense sampling
//! grid as a quadratic assignment problem:
//!
//! 1. [`pipeline`] runs the forward BoVW pipeline: dense gradient-histogram
//!    descriptors, k-means codebook training, hard quantization and sum
//!    pooling.
//! 2. [`costs`] learns a local adjacency cost (how likely word `j` is at a
//!    given offset from word `i`) and a global position cost (how likely word
//!    `i` is at grid place `k`) from a corpus of quantized images.
//! 3. [`qap`] minimizes the weighted sum of both costs over all layouts that
//!    pool back to the input histogram, using random, hill-climbing,
//!    simulated-annealing, exhaustive and hybrid genetic + hill-climbing
//!    solvers.
//! 4. [`render`] turns a layout back into pixels by averaging each word's
//!    representative patch into a canvas.
//! 5. [`metrics`] scores reconstructions (pixel correlation, direct and
//!    neighbor comparison), and [`apps`] builds BoVWs for morphing,
//!    classifier visualization and sentence-to-image generation.

pub mod apps;
pub mod costs;
mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod qap;
pub mod render;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use image::GrayImage;
pub use pipeline::{BovwHistogram, Codebook, Descriptor, SamplingSpec, WordGrid};
pub use qap::{Layout, QapInstance, Solver, SolverConfig};
