//! Passive network tomography over linear-network-coded networks.
//!
//! The crate builds random linear network codes and network Reed-Solomon codes
//! on acyclic networks, pushes source generations through them under error,
//! erasure and delay models, and infers topology and faulty edges from what
//! the receiver observes.

pub mod channel;
pub mod codes;
pub mod field;
pub mod harness;
pub mod linalg;
pub mod netgraph;
pub mod rscode;
pub mod tomography;
