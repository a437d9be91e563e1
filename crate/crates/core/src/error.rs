use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A family or algorithm parameter is outside its domain.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Input data is empty, malformed, unreadable or non-finite.
    #[error("input error: {0}")]
    Input(String),
    /// A hypothesis required by the requested computation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A working set would exceed the configured memory cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A numerical routine did not converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Short stable tag, used for machine-parsable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Input(_) => "input",
            Error::Precondition(_) => "precondition",
            Error::Capacity(_) => "capacity",
            Error::Numerical(_) => "numerical",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
