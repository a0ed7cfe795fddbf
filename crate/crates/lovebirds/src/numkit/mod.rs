//! Dense numeric kernel: arrays, deterministic RNG, the gradient tape,
//! Adam updates, gradient checking and the checkpoint container.

pub mod checkpoint;
pub mod dense;
pub mod gradcheck;
pub mod params;
pub mod rng;
pub mod tape;

pub use checkpoint::Checkpoint;
pub use dense::DenseArray;
pub use gradcheck::grad_check;
pub use params::{AdamConfig, ParamStore};
pub use rng::RngState;
pub use tape::{Mode, Tape, Var};
