//! Library for operating a memory-constrained quantum entanglement switch
//! in slotted time: the switch model, exact matching machinery, scheduling
//! policies, the capacity-region linear program and a reproducible
//! simulation harness.

pub mod capacity;
pub mod error;
pub mod lp;
pub mod matching;
pub mod policies;
pub mod sim;
pub mod model;

pub use error::{Error, Result};
