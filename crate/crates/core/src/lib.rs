pub mod catalog;
pub mod error;
pub mod exterior;
pub mod hodge;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod report;

pub use error::{Error, Result};
