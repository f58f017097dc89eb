pub mod aspects;
pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod labels;
pub mod lexicon;
pub mod metrics;
pub mod models;
pub mod normalize;
pub mod pipeline;
pub mod table;
pub mod tensor;
pub mod trends;
