#![allow(dead_code)]

use std::path::PathBuf;

use toolforge::preprocess::PreprocessArtifact;
use toolforge::providers::HashEmbedder;
use toolforge::{FunctionLibrary, RunConfig, model::load_function_library};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn travel_library() -> FunctionLibrary {
    load_function_library(fixture("travel_library.json")).expect("fixture library parses")
}

pub fn embedder() -> HashEmbedder {
    HashEmbedder::new(384)
}

pub fn artifact(cfg: &RunConfig) -> PreprocessArtifact {
    PreprocessArtifact::build(travel_library(), &embedder(), cfg).expect("preprocess")
}

pub fn lines(path: &std::path::Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}
