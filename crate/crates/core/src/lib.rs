pub mod error;
pub mod finite_field;
pub mod network;
pub mod rng;

pub use error::{Error, Result};
pub mod rate_bounds;
pub mod lattice;
pub mod nested;
pub mod stats;
pub mod mac_sim;
pub mod net_sim;
pub mod verify;
