use bt_core::{Error, ErrorClass};
use serde_json::json;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    /// A run that completed but whose checks did not hold.
    Failed {
        kind: &'static str,
        message: String,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    fn class(&self) -> ErrorClass {
        match self {
            CliError::Usage(_) => ErrorClass::Usage,
            CliError::Core(e) => e.class(),
            CliError::Failed { .. } => ErrorClass::Numerical,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Usage => EXIT_USAGE,
            ErrorClass::Data => EXIT_DATA,
            ErrorClass::Numerical => EXIT_NUMERICAL,
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("UsageError", m.clone()),
            CliError::Core(e) => (e.kind(), e.to_string()),
            CliError::Failed { kind, message } => (*kind, message.clone()),
        };
        let class = match self.class() {
            ErrorClass::Usage => "usage",
            ErrorClass::Data => "data",
            ErrorClass::Numerical => "numerical",
        };
        json!({ "error": kind, "class": class, "message": message }).to_string()
    }
}

/// Fails with a usage error unless a seed was given.
pub fn need_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::usage(format!("--seed is required for {what}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::usage("x").exit_code(), EXIT_USAGE);
        assert_eq!(
            CliError::from(Error::MissingClass(1)).exit_code(),
            EXIT_DATA
        );
        assert_eq!(
            CliError::from(Error::AllZeroMass).exit_code(),
            EXIT_NUMERICAL
        );
        assert_eq!(
            CliError::from(Error::SingularSystem("rank".into())).exit_code(),
            EXIT_NUMERICAL
        );
    }

    #[test]
    fn error_json_is_machine_readable() {
        let v: serde_json::Value =
            serde_json::from_str(&CliError::from(Error::AllZeroMass).to_json()).unwrap();
        assert_eq!(v["error"], "AllZeroMass");
        assert_eq!(v["class"], "numerical");
        assert!(v["message"].as_str().unwrap().contains("zero"));
    }
}
