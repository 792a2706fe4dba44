use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Scenario failed validation. Each entry is a `/path: problem` line.
    #[error("invalid scenario:\n{}", problems.join("\n"))]
    InvalidScenario { problems: Vec<String> },

    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn invalid(problems: Vec<String>) -> Self {
        SimError::InvalidScenario { problems }
    }
}
