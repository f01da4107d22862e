//! Mixed-type Hermite-Pade approximants of Nikishin systems.

pub mod analysis;
pub mod config;
pub mod cubic_string;
pub mod error;
pub mod hermite_pade;
pub mod interval;
pub mod measures;
pub mod nikishin;
pub mod linalg;
pub mod par;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod roots;
pub mod samples;
pub mod scalar;
pub mod sturm;
pub mod verify;

pub use error::{Error, Result};
