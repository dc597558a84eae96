//! Conservation laws with companion laws on periodic space-time lattices.

pub mod commutator;
pub mod dissipation;
pub mod error;
pub mod fft;
pub mod fields;
pub mod mollifier;
pub mod par;
pub mod rate;
pub mod systems;
pub mod testfn;

pub use error::{LabError, Result};
