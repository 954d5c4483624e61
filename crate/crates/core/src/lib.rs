#![no_std]
extern crate alloc;

pub mod error;
pub mod evolution;
pub mod operator;
pub mod generator;
pub mod projection;
pub mod state;
pub mod twoband;

pub use error::{Error, Result};
pub use operator::{ComplexMatrix, DimPair};
