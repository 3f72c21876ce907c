pub mod error;
pub mod hom;
pub mod network;
pub mod params;
pub mod scenarios;
pub mod shaper;
pub mod comb;
pub mod dynamics;
pub mod waveform;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use waveform::{Envelope, SpectralBoxFilter, TimeGrid, C64};
