pub mod cli;
pub mod codec;
pub mod conditioning;
pub mod entropy;
pub mod error;
pub mod exact_measures;
pub mod linalg;
pub mod optimize;
pub mod propositions;
pub mod states;
