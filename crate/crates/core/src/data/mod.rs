//! Genotype and bit-level data model.

pub(crate) mod bits;
mod io;
pub(crate) mod matrix;
mod synth;

pub use bits::{decode, encode, BitMatrix};
pub use io::{read_dataset, write_dataset};
pub use matrix::{Genotype, SnpMatrix};
pub use synth::{generate_synthetic, SyntheticParams};
