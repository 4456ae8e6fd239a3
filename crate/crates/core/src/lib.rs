//! Numerics for the degenerate elliptic vector field `L = λ∂t − ir∂r` on the
//! cylinder `ℝ⁺ × S¹` and the operators built from it.

pub mod basic;
pub mod cylinder;
pub mod error;
pub mod expr;
pub mod floquet;
pub mod grid;
pub mod hill;
pub mod kernels;
pub mod normalizer;
pub mod operator;
pub mod oracle;
pub mod periodic;
pub mod second_order;
pub mod spectrum;

pub use error::{DcError, Result};
pub use periodic::{PeriodicFunction, C64, I};
