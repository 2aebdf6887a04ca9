pub mod bench;
pub mod completion;
pub mod decomposition;
pub mod error;
pub mod laurent;
pub mod metrics;
pub mod numlin;
pub mod optimize;
pub mod pipeline;
pub mod qspmodel;
pub mod specialfn;
pub mod target;

pub use error::{QspError, Result};
