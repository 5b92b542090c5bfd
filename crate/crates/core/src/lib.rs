pub mod analysis;
pub mod catchup;
pub mod config;
pub mod error;
pub mod generators;
pub mod io;
pub mod lattice;
pub mod leapfrog;
pub mod linalg;
pub mod qp;
pub mod sweep;
pub mod trajectory;

pub use error::{Error, Result};
