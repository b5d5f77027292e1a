use thiserror::Error;

/// Errors surfaced by the simulator and optimizer.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field violated an invariant.
    #[error("invalid config: field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// Node placement could not satisfy the exclusion-zone constraint.
    #[error("geometry rejection sampling failed after {attempts} draws")]
    DegenerateGeometry { attempts: usize },

    /// An index referred to a user/file/SBS that does not exist.
    #[error("unknown {kind} index {index}")]
    UnknownIndex { kind: &'static str, index: usize },

    /// A conic subproblem could not be assembled from the local point.
    #[error("degenerate linearization: {0}")]
    DegenerateLinearization(String),

    /// The conic solver reported a non-optimal terminal status.
    #[error("conic solve failed: {0}")]
    SolveFailed(String),

    /// QoS could not be met in a slot for any candidate clustering.
    #[error("slot {slot} infeasible: QoS unattainable under power caps")]
    InfeasibleSlot { slot: usize },

    /// The brute-force oracle refuses instances beyond its enumeration cap.
    #[error("oracle instance too large: {0} binary variables (cap 12)")]
    InstanceTooLarge(usize),

    /// A multicast polish solve was requested without a linearization point.
    #[error("fixed-clustering beamforming needs a local point for multicast group of file {file}")]
    MissingLocalPoint { file: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}
