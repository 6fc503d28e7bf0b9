pub mod analysis;
pub mod drac;
pub mod dualgraph;
pub mod error;
pub mod experiment;
pub mod flatten;
pub mod generators;
pub mod ibp;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
