//! Column generation for vehicle routing (VRPTW) and bus driver scheduling
//! (BDSP) where the pricing network is pruned each iteration by one of five
//! low-level heuristics, selected either by a fixed policy or by a trainable
//! DDQN hyper-heuristic.

pub mod agent;
pub mod bench;
pub mod engine;
pub mod error;
pub mod heuristics;
pub mod instance;
pub mod labeling;
pub mod net;
pub mod rmp;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
