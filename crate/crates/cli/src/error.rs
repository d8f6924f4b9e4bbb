use serde::Serialize;
use sip_effmass::families::Violation;
use sip_effmass::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Config,
    Numerical,
}

/// Failure reported to the user; serializes to the machine-readable record.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{kind:?} error: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Config, message: message.into(), violations: Vec::new() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Numerical, message: message.into(), violations: Vec::new() }
    }

    pub fn violations(v: &[Violation]) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: Error::InvalidModel(v.to_vec()).to_string(),
            violations: crate::config::violation_ids(v),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
        }
    }

    pub fn record(&self) -> serde_json::Value {
        serde_json::json!({
            "status": "error",
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
            "violations": self.violations,
        })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        use Error::*;
        match &e {
            InvalidModel(v) => CliError::violations(v),
            UnknownProfile(_) | MissingParam { .. } | UnexpectedParam { .. } | NonPositiveMass(_) | InvalidParam(_)
            | TableRequired | MalformedTable(_) | Unsupported(_) | Grid(_) | Io(_) => CliError::config(e.to_string()),
            OutsideDomain { .. } | MuOutOfRange { .. } | Quadrature { .. } | InverseMu(_) | Pole { .. } | Branch { .. }
            | NonPositiveMu { .. } | NotNormalizable(_) | Eigen(_) | TooCoarse { .. } => CliError::numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("i/o: {e}"))
    }
}
