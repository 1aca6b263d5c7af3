use std::fmt;

/// Errors produced anywhere in the pipeline.
#[derive(Debug)]
pub enum Error {
    /// Malformed input, bad parameters, or a length/id mismatch.
    Input(String),
    /// No assignment satisfies the constraints.
    Infeasible,
    /// An enumeration or simulation guard was exceeded.
    TooLarge { what: &'static str, size: u64, limit: u64 },
    /// The instance generator could not produce a feasible instance.
    GenerationFailed { attempts: usize },
    /// A quantity is undefined (e.g. zero variance).
    Undefined(String),
    /// Exact integer arithmetic would overflow the fixed-width kernel.
    Overflow(&'static str),
    Io(std::io::Error),
    Json(serde_json::Error),
    Csv(csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Input(msg) => write!(f, "invalid input: {msg}"),
            Error::Infeasible => write!(f, "no feasible assignment exists"),
            Error::TooLarge { what, size, limit } => {
                write!(f, "{what} too large: {size} exceeds limit {limit}")
            }
            Error::GenerationFailed { attempts } => {
                write!(f, "could not generate a feasible instance after {attempts} attempts")
            }
            Error::Undefined(msg) => write!(f, "undefined result: {msg}"),
            Error::Overflow(what) => write!(f, "integer overflow in {what}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
            Error::Csv(e) => write!(f, "csv error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            Error::Csv(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e)
    }
}
