pub mod bath;
pub mod config;
pub mod driver;
pub mod dump;
pub mod error;
pub mod lindblad_family;
pub mod linalg;
pub mod pipeline;
pub mod quadrature;
pub mod redfield;
pub mod sdp;
pub mod spin_chain;

pub use error::{Error, Result};
