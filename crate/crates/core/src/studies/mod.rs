//! Convergence sweeps, published reference data, output and the verification battery.

mod output;
mod reference;
mod sweep;
mod verify;

pub use output::*;
pub use reference::*;
pub use sweep::*;
pub use verify::*;
