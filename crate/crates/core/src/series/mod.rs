//! Jet arithmetic and hbar-graded symbol algebra.

pub mod growth;
pub mod hbar;
pub mod index;
pub mod jet;
pub mod serial;

pub use growth::{growth_fit, GrowthFit};
pub use hbar::HbarSymbol;
pub use jet::{jet_invert_map, Jet, Reliability};
pub use serial::{HbarSymbolData, JetData};
