use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("invalid answer at item {item}: {message}")]
    InvalidAnswer { item: usize, message: String },
    #[error("{0}")]
    Unauthorized(String),
    #[error("unknown participant {0}")]
    UnknownParticipant(String),
    #[error("no stored corpus for query `{0}`")]
    QueryNotIndexed(String),
    #[error("unknown scale `{0}`")]
    UnknownScale(String),
    #[error("rank {rank} was not served for `{query}` in this session")]
    UnservedResult { query: String, rank: u32 },
    #[error("{scale} already submitted")]
    AlreadySubmitted { scale: String },
    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    item: Option<usize>,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) | ApiError::InvalidAnswer { .. } => StatusCode::BAD_REQUEST,
            ApiError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            ApiError::UnknownParticipant(_) | ApiError::QueryNotIndexed(_) | ApiError::UnknownScale(_) => {
                StatusCode::NOT_FOUND
            }
            ApiError::UnservedResult { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::AlreadySubmitted { .. } => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "BadRequest",
            ApiError::InvalidAnswer { .. } => "InvalidAnswer",
            ApiError::Unauthorized(_) => "Unauthorized",
            ApiError::UnknownParticipant(_) => "UnknownParticipant",
            ApiError::QueryNotIndexed(_) => "QueryNotIndexed",
            ApiError::UnknownScale(_) => "UnknownScale",
            ApiError::UnservedResult { .. } => "UnservedResult",
            ApiError::AlreadySubmitted { .. } => "AlreadySubmitted",
            ApiError::Internal(_) => "Internal",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let item = match &self {
            ApiError::InvalidAnswer { item, .. } => Some(*item),
            _ => None,
        };
        let body = ErrorBody {
            error: self.code(),
            message: self.to_string(),
            item,
        };
        (self.status(), Json(body)).into_response()
    }
}
