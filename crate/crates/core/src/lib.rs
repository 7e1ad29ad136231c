//! Combinatorial channel signature modulation (CCSM).
//!
//! Every user maps its message to a weighted choice of `l` out of `L` sparse
//! waveforms, transmits in short bursts and listens in the gaps. A receiver
//! cancels its own echo, treats the other users' codewords as one
//! group-sparse vector seen through a known linear map, and recovers it with
//! a group-structured sparse solver.
//!
//! Modules follow the signal path: [`cwc`] (bits to codeword), [`signaling`]
//! (codeword to waveform), [`channel`] (dispersion, erasures, noise),
//! [`receiver`] (cancellation, system matrix, decoding) and [`solvers`].
//! [`macbench`] holds the TDMA and CSMA/CA baselines and [`harness`] the
//! Monte-Carlo experiment drivers.

pub mod channel;
pub mod cwc;
pub mod error;
pub mod harness;
pub mod macbench;
pub mod receiver;
pub mod signaling;
pub mod solvers;

pub use error::{Error, Result};
