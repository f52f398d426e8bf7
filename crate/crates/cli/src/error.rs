use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] duffing_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use duffing_core::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Core(
                E::Domain(_) | E::InvalidDimension { .. } | E::InvalidInput(_) | E::DegenerateLimit | E::UnsupportedBranch,
            ) => "domain",
            CliError::Core(_) => "solver",
            CliError::Io { .. } => "io",
        }
    }

    /// 2 for bad input (flags, config, parameters), 3 for numerical
    /// failures, 4 for file-system errors.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "config" | "domain" => 2,
            "solver" => 3,
            _ => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Core(e) = self {
            v["detail"] = serde_json::Value::String(format!("{e:?}"));
        }
        v
    }
}
