//! Exact compression of fully-connected ReLU networks.
//!
//! The pipeline has two halves. [`stability`] finds every neuron whose
//! activation state cannot change over a bounded input domain, using one
//! mixed-integer program whose objective counts activation states not yet
//! observed and a branch-and-bound search ([`optcore`]) that lazily fixes
//! those counters to zero as witnesses are found. [`compress`] then rewrites
//! the network layer by layer: stably inactive neurons are removed, linearly
//! dependent stably active neurons are merged, fully stable layers are folded
//! into their successor, and a fully inactive layer collapses the network to
//! a constant.
//!
//! [`bounds`] supplies the big-M constants by interval arithmetic and
//! [`netio`] holds the network, domain and dataset types with their file
//! formats.

pub mod bounds;
pub mod compress;
pub mod error;
pub mod netio;
pub mod optcore;
pub mod stability;

pub use error::{Error, Result};
