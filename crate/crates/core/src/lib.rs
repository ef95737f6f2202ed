//! Diversity-driven synthesis of function-calling training data.

pub mod config;
pub mod distractors;
pub mod error;
pub mod evaluate;
pub mod metrics;
pub mod model;
pub mod paramgen;
pub mod pipeline;
pub mod preprocess;
pub mod providers;
pub mod querygen;
pub mod sampler;
pub mod text;

pub use config::RunConfig;
pub use error::{Error, ProviderError, Result};
pub use model::{
    ExecutionType, FunctionLibrary, FunctionSchema, GeneratedExample, Invocation, MISSING_SENTINEL, ParamCategory,
    ParameterSpec,
};
