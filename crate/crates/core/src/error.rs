use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge set is not symmetric: edge {sender}->{receiver} has no reverse")]
    NonSymmetricGraph { sender: usize, receiver: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("feature width mismatch: {0}")]
    WidthMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("segment id {id} out of range for {segments} segments")]
    SegmentIdOutOfRange { id: usize, segments: usize },
    #[error("all vertices were removed")]
    EmptyGraph,
    #[error("no connected vertex pair found after {0} attempts")]
    DisconnectedPair(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("graph still disconnected after {0} attempts")]
    ConnectivityFailure(usize),
    #[error("image must be 28x28, got {0} pixels")]
    BadImageShape(usize),
    #[error("bad IDX magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { found: u32, expected: u32 },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("IDX file truncated: needed {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite loss at iteration {iteration}: {loss}")]
    NanLoss { iteration: usize, loss: f64 },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
