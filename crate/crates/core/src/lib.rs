pub mod cli;
pub mod error;
pub mod fit;
pub mod geodesics;
pub mod hyperkahler;
pub mod jets;
pub mod kummer;
pub mod ma_radial;
pub mod metric;
pub mod potentials;

pub use error::{GeomError, Result};
