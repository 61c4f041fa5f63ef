use thiserror::Error;

/// A single violated parameter invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join(.0))]
    Validation(Vec<Violation>),

    #[error("no lift-off: spring cannot support foot weight at amplitude (ratio {0:.6})")]
    NoLiftOff(f64),

    #[error("degenerate flight window (arccos argument {0:.6})")]
    DegenerateFlightWindow(f64),

    #[error("unreachable length {length} m: {bound}")]
    Unreachable { length: f64, bound: ReachBound },

    #[error("empty averaging window")]
    EmptyWindow,

    #[error("no flight apex after lift-off")]
    ApexNotFound,

    #[error("invalid setting {field}: {message}")]
    Setting {
        field: &'static str,
        message: String,
    },
}

/// Which side of the open reach interval a length fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachBound {
    /// Length at or below |L1 - L2|.
    Folded,
    /// Length at or above L1 + L2.
    Extended,
}

impl std::fmt::Display for ReachBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReachBound::Folded => f.write_str("at or below the folded limit |L1 - L2|"),
            ReachBound::Extended => f.write_str("at or beyond the reach L1 + L2"),
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
