use std::fmt;

use gestigo_eval::EvalError;
use gestigo_net::{NetError, TrainFailure};
use gestigo_service::ServiceError;

/// What went wrong, as reported by the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Numeric,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Numeric => 3,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Usage => "usage",
            Kind::Data => "data",
            Kind::Numeric => "numeric",
        })
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind,
            error: error.into(),
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self::new(Kind::Data, anyhow::anyhow!("{msg}"))
    }

    /// One line: `gestigo: error[<kind>]: <message chain>`.
    pub fn line(&self) -> String {
        format!("gestigo: error[{}]: {:#}", self.kind, self.error).replace('\n', " ")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn net_kind(e: &NetError) -> Kind {
    if e.is_numeric() {
        Kind::Numeric
    } else {
        Kind::Data
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        CliError::new(net_kind(&e), e)
    }
}

impl From<TrainFailure> for CliError {
    fn from(e: TrainFailure) -> Self {
        let kind = match e.error {
            NetError::Io { .. } => Kind::Data,
            _ => Kind::Numeric,
        };
        CliError::new(kind, e.error)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let kind = match &e {
            EvalError::Net(n) => net_kind(n),
            EvalError::Trainer { .. } => Kind::Numeric,
            _ => Kind::Data,
        };
        CliError::new(kind, e)
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        let kind = match &e {
            ServiceError::Net(n) => net_kind(n),
            _ => Kind::Data,
        };
        CliError::new(kind, e)
    }
}

impl From<gestigo_core::DatasetError> for CliError {
    fn from(e: gestigo_core::DatasetError) -> Self {
        CliError::new(Kind::Data, e)
    }
}

impl From<gestigo_core::CondenseError> for CliError {
    fn from(e: gestigo_core::CondenseError) -> Self {
        CliError::new(Kind::Data, e)
    }
}

/// Attaches a path to I/O failures.
pub fn io<T>(r: std::io::Result<T>, path: &std::path::Path) -> CliResult<T> {
    r.map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}
