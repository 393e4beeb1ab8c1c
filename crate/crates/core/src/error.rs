use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("drive current {i_on} A exceeds the {i_limit} A limit of the tether wires")]
    CurrentLimit { i_on: f64, i_limit: f64 },

    #[error("channel on-windows overlap (duty cycle {duty_cycle}, phase shift {phase_shift})")]
    Overlap { duty_cycle: f64, phase_shift: f64 },

    #[error("averaging window does not cover an integer number of periods ({periods} periods)")]
    Window { periods: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("equilibrium not bracketed: residual {lo} at lower bound, {hi} at upper bound")]
    Bracketing { lo: f64, hi: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual})")]
    Solver { iterations: usize, residual: f64 },

    #[error("wire clearance {clearance} m is not positive at beam angle {theta} rad")]
    DesignViolation { clearance: f64, theta: f64 },

    #[error("invalid filter: {0}")]
    FilterSpec(String),

    #[error("signal of {len} samples is too short for a {taps}-tap kernel")]
    Length { len: usize, taps: usize },

    #[error("only {periods} whole periods in the steady window, need at least 3")]
    InsufficientData { periods: usize },

    #[error("invalid calibration problem: {0}")]
    Calibration(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("csv schema mismatch at column `{column}`: {msg}")]
    Schema { column: String, msg: String },
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::CurrentLimit { .. }
            | Error::Overlap { .. }
            | Error::InvalidCircuit(_)
            | Error::FilterSpec(_)
            | Error::Calibration(_)
            | Error::DesignViolation { .. } => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
