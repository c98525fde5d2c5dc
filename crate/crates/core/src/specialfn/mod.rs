pub mod bessel;
pub mod estermann;
pub mod gamma;
pub mod hyper;
pub mod incgamma;
pub mod mellin;
pub mod quad;
pub mod zeta;

pub use gamma::{digamma, gamma_pair_factor, gamma_suite, ln_gamma, GammaSuite};
