pub mod app;
pub mod bagging;
pub mod boost;
pub mod data;
pub mod error;
pub mod eval;
pub mod select;
pub mod shap;
pub mod tree;
pub mod voting;

pub use error::{Error, Result};
