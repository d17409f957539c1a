use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] banach_pd::Error),
    #[error("reference minimizer: {0}")]
    Reference(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    /// Process exit code: 2 for a diverging solver, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_divergence() {
            2
        } else {
            1
        }
    }

    pub fn is_divergence(&self) -> bool {
        fn diverged(e: &banach_pd::Error) -> bool {
            match e {
                banach_pd::Error::Divergence { .. } => true,
                banach_pd::Error::Resolvent { source, .. } => diverged(source),
                _ => false,
            }
        }
        matches!(self, Self::Solver(e) if diverged(e))
    }
}
