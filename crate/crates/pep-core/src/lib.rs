#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod nt;
pub mod places;

pub use error::{Error, Result};
pub mod lattice;
pub mod pep;
pub mod reduction;
pub mod heightnorm;
pub mod counting;
pub mod matrix;
