use noon_core::NoonError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] NoonError),
    #[error("bootstrapping is infeasible: sqrt(delta0) = {sqrt_delta:.6} is not below 2/e")]
    Infeasible { sqrt_delta: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Core(NoonError::Capacity { .. }) => "capacity",
            CliError::Core(NoonError::PhotonOverflow(_)) => "capacity",
            CliError::Core(NoonError::InvalidArgument(_)) => "invalid_argument",
            CliError::Core(_) => "computation",
            CliError::Infeasible { .. } => "infeasible",
            CliError::Io(_) => "io",
            CliError::Json(_) | CliError::Csv(_) => "serialization",
        }
    }

    /// 2 invalid input, 3 capacity, 4 infeasible, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" | "config" | "invalid_argument" => 2,
            "capacity" => 3,
            "infeasible" => 4,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: i32,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Wrapper {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
                exit_code: self.exit_code(),
            },
        })
        .unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", self.kind()))
    }
}
