//! Workbench for monotonic learning of recursively enumerable languages.

pub mod adversary;
pub mod canonical;
pub mod cli;
pub mod coding;
pub mod criteria;
pub mod hypospace;
pub mod learnkit;
pub mod textkit;
