use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dyadic_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// `2` for anything wrong with the request, `3` when a valid run could
    /// not finish.
    pub fn exit_code(&self) -> i32 {
        use dyadic_core::Error as E;
        match self {
            LabError::Config(_) | LabError::Json(_) => 2,
            LabError::Core(
                E::NonConvergence { .. }
                | E::Io(_)
                | E::Json(_)
                | E::EmptyCollection
                | E::OverlappingStopCubes,
            ) => 3,
            LabError::Core(_) => 2,
            LabError::Io(_) => 3,
        }
    }
}
