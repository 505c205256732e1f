pub mod cli;
pub mod dsl;
pub mod evolution;
pub mod llm;
pub mod problems;
