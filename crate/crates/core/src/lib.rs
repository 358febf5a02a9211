//! Quench-enhanced noise spectroscopy: dephasing and quench phase shifts of a
//! sensor qubit, inverse problems on the bath spectrum, and an exact
//! finite-dimensional oracle.

pub mod asymptotics;
pub mod bath;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod exactbath;
pub mod io;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
