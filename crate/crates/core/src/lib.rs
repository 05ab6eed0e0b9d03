//! Classification of version-control commits in Java projects as
//! security-relevant or not.

pub mod cli;
pub mod dataset;
pub mod embed;
pub mod eval;
pub mod lex;
pub mod models;
pub mod nn;
