pub mod acceptance;
pub mod arith;
pub mod cli;
pub mod error;
pub mod kernels;
pub mod lgreen;
pub mod linalg;
pub mod modforms;
pub mod moments;
pub mod mp;
pub mod specialfn;

pub use error::{Error, Result};
pub use mp::PrecisionContext;
