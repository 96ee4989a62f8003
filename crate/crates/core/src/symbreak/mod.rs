//! Forced symmetry breaking S_k -> S_{k-1} by the perturbation -eta eps_1.

pub mod counts;
pub mod enumerate;
pub mod localize;
pub mod planar;
pub mod verify;

pub use counts::*;
pub use enumerate::*;
pub use localize::*;
pub use planar::*;
pub use verify::*;
