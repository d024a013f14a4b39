pub mod answer;
pub mod error;
pub mod formula;
pub mod llm;
pub mod sql;
pub mod table;
pub mod vote;
