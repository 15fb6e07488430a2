pub mod convex_fit;
pub mod disentangler;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod purenet;
pub mod qcore;
pub mod rng;
pub mod sepkit;
pub mod symsub;

pub use error::{DlabError, Result};
