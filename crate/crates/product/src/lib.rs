//! Rotating-frame matrix products: the (X, Z) Schur-complement process, the
//! reduced transfer matrix of a strip and flag propagation.

pub mod flag;
pub mod frame;
pub mod process;
pub mod reduced;

pub use flag::{propagate_flag, stable_flag_angles, FlagSpectrum, FlagState};
pub use frame::Frame;
pub use process::{init_state, run_product, run_product_with, schur, step, trajectory_csv, ProductEngine, ProductState, ZEnvelope};
pub use reduced::{default_x0, reduced_transfer, reduced_transfer_bruteforce};
