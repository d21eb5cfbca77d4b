pub mod bootstrap;
pub mod ckks;
pub mod encoding;
pub mod error;
pub mod keyswitch;
pub mod lr;
pub mod ntt;
pub mod params;
pub mod perf;
pub mod poly;
pub mod rns;
pub mod serialize;

pub use error::{Error, Result};
pub use params::{Context, SchemeParams};
pub use rns::{generate_modulus_chain, BasisConverter, Modulus, RnsBasis};
