//! Benchmark harness comparing synaptic learning rules on a three-layer
//! leaky integrate-and-fire network.
//!
//! Binary sequences drawn from Bernoulli, two-state Markov and Poisson
//! sources are framed into spike rasters, propagated through the network,
//! decoded back into bit strings and classified by their normalized
//! Lempel-Ziv complexity. Each of the twelve learning rules in [`learning`]
//! shapes the network so that the two source classes end up with separable
//! output complexity.

pub mod bench;
pub mod complexity;
pub mod error;
pub mod learning;
pub mod network;
pub mod neuron;
pub mod pipeline;
pub mod rng;
pub mod sources;

pub use error::{Error, Result};
pub use sources::BinarySequence;
