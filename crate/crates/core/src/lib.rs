//! Modal analysis and simulation of linear and semilinear
//! partial differential-algebraic equations on boxes,
//! `E x_t = D Δx + A x + B u`.

pub mod eigenbasis;
pub mod error;
pub mod linalg;
pub mod modal_dae;
pub mod pencil;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
