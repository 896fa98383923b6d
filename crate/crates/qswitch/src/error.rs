use thiserror::Error;

/// Errors produced by the switch model, matching routines, capacity LP and
/// simulation harness.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The admissible-service enumeration would exceed the configured cap.
    /// Truncating the set silently would corrupt every argmax built on top of
    /// it, so we refuse instead.
    #[error("admissible service enumeration exceeded the cap of {cap} candidates")]
    ServiceCapExceeded { cap: usize },

    #[error("capacity LP would have {columns} columns, above the cap of {cap}")]
    LpColumnCap { columns: usize, cap: usize },

    #[error("policy precondition violated: {0}")]
    PolicyPrecondition(String),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("simplex did not converge within the iteration limit")]
    LpIterationLimit,

    #[error("{context} supports at most {max} vertices, got {vertices}")]
    GraphTooLarge {
        context: &'static str,
        vertices: usize,
        max: usize,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("slot {slot}: {source}")]
    Slot {
        slot: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {replication}: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
