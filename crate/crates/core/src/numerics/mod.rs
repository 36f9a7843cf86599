//! Deterministic numerical primitives shared by the rest of the crate.

mod exact;
mod normal;
mod rng;

pub use exact::{binom_exact, ExactRational};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
#[cfg(test)]
pub(crate) use normal::phi;
pub(crate) use normal::{phi_inv, phi_upper};
pub use rng::{derive_seed, derive_stream, RandomStream};
