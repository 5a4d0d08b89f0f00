//! Benchmark harness: data generators, runners for the closure, RBAC and
//! class-hierarchy benchmarks, a binary fact cache, and CSV/plot output.

pub mod cache;
pub mod gen;
pub mod output;
pub mod run;
pub mod timing;

use std::io;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("corrupt cache: {0}")]
    CorruptCache(String),
    #[error("cache format version {found}, expected {expected}")]
    CacheVersion { found: u32, expected: u32 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Engine(#[from] setrules_core::Error),
    #[error(transparent)]
    Rbac(#[from] setrules_rbac::RbacError),
    #[error(transparent)]
    Analysis(#[from] setrules_analysis::AnalysisError),
}

impl BenchError {
    /// Process exit code: 3 for invariant failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Invariant(_) => 3,
            _ => 2,
        }
    }
}
