use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use eventlens::corpus::SnapshotError;
use eventlens::cube::CubeError;
use eventlens::engine::EngineError;
use eventlens::evalkit::EvalError;
use eventlens::miner::MinerError;
use eventlens::search::SearchError;
use serde::{Deserialize, Serialize};

/// Error body returned by every failing endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    /// Index of the failing op, for pipeline requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op_index: Option<usize>,
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            op_index: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new("bad_request", message)
    }

    pub fn status(&self) -> StatusCode {
        match self.code.as_str() {
            "unknown_testbed" => StatusCode::NOT_FOUND,
            "no_events" | "no_such_member" | "already_finest" | "already_coarsest" | "below_leaf" | "bad_roll"
            | "empty_dice" | "parse_error" | "eval_error" | "reload_failed" => StatusCode::UNPROCESSABLE_ENTITY,
            "internal" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        }
    }
}

fn cube_code(e: &CubeError) -> &'static str {
    match e {
        CubeError::NoEvents => "no_events",
        CubeError::BelowLeaf { .. } => "below_leaf",
        CubeError::NoSuchMember { .. } => "no_such_member",
        CubeError::AlreadyFinest { .. } => "already_finest",
        CubeError::AlreadyCoarsest { .. } => "already_coarsest",
        CubeError::BadRoll(_) => "bad_roll",
        CubeError::EmptyDice => "empty_dice",
        CubeError::Parse(_) => "parse_error",
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        let code = match &e {
            EngineError::Search(s) => match s {
                SearchError::EmptyQuery => "empty_query",
                SearchError::BadQuery(_) => "bad_query",
                SearchError::UnknownEntity(_) => "unknown_entity",
                SearchError::InvalidBudget => "invalid_budget",
                SearchError::InvalidParams(_) => "invalid_params",
            },
            EngineError::Miner(m) => match m {
                MinerError::InvalidParams(_) | MinerError::Annotation(_) => "invalid_params",
                MinerError::Record { .. } => "bad_request",
            },
            EngineError::Cube(c) => cube_code(c),
            EngineError::Pipeline(p) => {
                return ApiError {
                    code: cube_code(&p.error).into(),
                    message,
                    op_index: Some(p.index),
                }
            }
            EngineError::Eval(EvalError::InvalidParams(_)) => "invalid_params",
            EngineError::Eval(_) => "eval_error",
            EngineError::UnknownTestbed(_) => "unknown_testbed",
            EngineError::Input { .. } => "bad_request",
        };
        ApiError::new(code, message)
    }
}

impl From<SnapshotError> for ApiError {
    fn from(e: SnapshotError) -> Self {
        ApiError::new("reload_failed", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}
