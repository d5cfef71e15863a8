use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] zndstab::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("trend checks failed: {0}")]
    Trend(String),
}

impl CliError {
    /// 2 usage or configuration, 3 numerical, 4 benchmark trend failure.
    pub fn exit_code(&self) -> u8 {
        use zndstab::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 2,
            CliError::Trend(_) => 4,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::InvalidConfig { .. }
                | E::InadmissibleState(_)
                | E::ChapmanJouguetOrSonic { .. }
                | E::InvalidIgnitionWindow(_)
                | E::InsideIgnitionWindow { .. }
                | E::SubsonicUpstream { .. }
                | E::Io(_) => 2,
                _ => 3,
            },
        }
    }

    pub fn hint(&self) -> Option<&'static str> {
        use zndstab::Error as E;
        match self {
            CliError::Core(E::ContourThroughRoot { .. }) => Some("perturb the radius; if it persists, tighten --tol"),
            CliError::Core(E::UnresolvedWinding { .. }) => Some("raise --density or tighten --tol"),
            CliError::Core(E::ExponentRange { .. }) => Some("use --method neutral"),
            CliError::Core(E::ContinuationBreakdown { .. }) => Some("refine the parameter list near the last good value"),
            _ => None,
        }
    }
}
