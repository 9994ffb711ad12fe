//! HTTP API: submit an attempt, list sentences, read the leaderboard.

use std::path::Path;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Multipart, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hangul_coach::assess::{AssessError, Assessor};
use hangul_coach::audio::CANONICAL_RATE;
use hangul_coach::corpus::load_catalog;
use hangul_coach::dsp::MfccExtractor;
use hangul_coach::hangul::HighlightedDiff;
use hangul_coach::scoring::{top_percent, AttemptStore, Level, NewAttempt, ScoringError};
use hangul_coach::siamese::load_model;
use hangul_coach::stt::SttError;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::config::ServeConfig;

/// Uploads up to a minute of 48 kHz stereo fit comfortably.
const MAX_UPLOAD_BYTES: usize = 16 * 1024 * 1024;

/// Shared, read-mostly service state. The store is the only thing written.
pub struct AppState {
    pub assessor: Assessor,
    pub store: AttemptStore,
    pub rank_per_sentence: bool,
}

impl AppState {
    /// Loads the model, catalog, STT backend and store named by `config`.
    pub fn from_config(config: &ServeConfig) -> Result<Self, String> {
        let model = load_model(&config.model).map_err(|e| format!("model {}: {e}", config.model.display()))?;
        let extractor = MfccExtractor::new(config.mfcc.clone(), CANONICAL_RATE).map_err(|e| format!("mfcc: {e}"))?;
        let catalog = load_catalog(&config.corpus, &extractor).map_err(|e| format!("corpus: {e}"))?;
        let stt = config.stt.build().map_err(|e| format!("stt: {e}"))?;
        let store = AttemptStore::open(&config.store).map_err(|e| e.to_string())?;
        Ok(Self {
            assessor: Assessor {
                catalog,
                model,
                extractor,
                stt,
                bands: config.levels,
            },
            store,
            rank_per_sentence: config.rank_per_sentence,
        })
    }
}

/// Body of a successful `POST /api/attempts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentResponse {
    pub attempt_id: u64,
    pub transcript: String,
    pub reference_text: String,
    pub similarity: f64,
    pub level: Level,
    pub top_percent: f64,
    pub diff: HighlightedDiff,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSummary {
    pub sentence_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub user_id: String,
    pub sentence_id: String,
    pub similarity: f64,
    pub level: Level,
}

/// A failed request: status, stable error name, message and, for speech
/// backend failures, which backend error it was.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub reason: Option<&'static str>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            kind: "BadRequest",
            message: message.into(),
            reason: None,
        }
    }
}

impl From<AssessError> for ApiError {
    fn from(e: AssessError) -> Self {
        let message = e.to_string();
        let (status, kind, reason) = match &e {
            AssessError::UnknownSentence(_) => (StatusCode::NOT_FOUND, "UnknownSentence", None),
            AssessError::Audio(_) | AssessError::Features(_) => (StatusCode::BAD_REQUEST, "MalformedAudio", None),
            AssessError::Stt(SttError::EmptyClip | SttError::ClipTooLong { .. }) => {
                (StatusCode::BAD_REQUEST, "MalformedAudio", None)
            }
            AssessError::Stt(SttError::NoSpeechRecognized) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "NoSpeechRecognized", None)
            }
            AssessError::Stt(other) => (StatusCode::BAD_GATEWAY, "SttUnavailable", Some(other.kind())),
            // the recognizer produced something that is not Hangul text
            AssessError::Alignment(_) => (StatusCode::UNPROCESSABLE_ENTITY, "UnsupportedTranscript", None),
            AssessError::Scoring(ScoringError::StorageFailure(_)) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "StorageFailure", None)
            }
            AssessError::Model(_) | AssessError::Scoring(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "InternalError", None)
            }
        };
        Self {
            status,
            kind,
            message,
            reason,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind, "message": self.message });
        if let Some(reason) = self.reason {
            body["reason"] = reason.into();
        }
        (self.status, Json(body)).into_response()
    }
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/sentences", get(list_sentences))
        .route("/api/leaderboard", get(leaderboard))
        .route("/api/attempts", post(submit_attempt))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn list_sentences(State(state): State<Arc<AppState>>) -> Json<Vec<SentenceSummary>> {
    let entries = state.assessor.catalog.entries();
    Json(
        entries
            .iter()
            .map(|e| SentenceSummary {
                sentence_id: e.sentence_id.clone(),
                text: e.text.clone(),
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct LeaderboardQuery {
    n: Option<usize>,
}

async fn leaderboard(
    State(state): State<Arc<AppState>>,
    Query(query): Query<LeaderboardQuery>,
) -> Result<Json<Vec<LeaderboardEntry>>, ApiError> {
    let n = query.n.unwrap_or(10);
    if n == 0 {
        return Err(ApiError::bad_request("n must be at least 1"));
    }
    let records = state
        .store
        .leaderboard(n)
        .map_err(|e| ApiError::from(AssessError::from(e)))?;
    Ok(Json(
        records
            .into_iter()
            .map(|r| LeaderboardEntry {
                user_id: r.user_id,
                sentence_id: r.sentence_id,
                similarity: r.similarity,
                level: r.level,
            })
            .collect(),
    ))
}

#[derive(Default, Deserialize)]
struct AttemptQuery {
    user_id: Option<String>,
    sentence_id: Option<String>,
}

async fn submit_attempt(
    State(state): State<Arc<AppState>>,
    Query(query): Query<AttemptQuery>,
    mut multipart: Multipart,
) -> Result<Json<AssessmentResponse>, ApiError> {
    let (mut audio, mut user_id, mut sentence_id) = (None, query.user_id, query.sentence_id);
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "audio" => audio = Some(field.bytes().await.map_err(|e| ApiError::bad_request(e.body_text()))?),
            "user_id" => user_id = Some(field.text().await.map_err(|e| ApiError::bad_request(e.body_text()))?),
            "sentence_id" => sentence_id = Some(field.text().await.map_err(|e| ApiError::bad_request(e.body_text()))?),
            _ => {}
        }
    }
    let user_id = user_id
        .filter(|u| !u.trim().is_empty())
        .ok_or_else(|| ApiError::bad_request("user_id is required"))?;
    let sentence_id = sentence_id.ok_or_else(|| ApiError::bad_request("sentence_id is required"))?;
    let audio = audio.ok_or_else(|| ApiError::bad_request("audio is required"))?;

    tokio::task::spawn_blocking(move || assess_and_record(&state, user_id, &sentence_id, &audio))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            kind: "InternalError",
            message: e.to_string(),
            reason: None,
        })?
        .map(Json)
}

/// The whole attempt pipeline. Nothing is written unless every stage before
/// the store succeeds.
pub fn assess_and_record(
    state: &AppState,
    user_id: String,
    sentence_id: &str,
    wav: &[u8],
) -> Result<AssessmentResponse, ApiError> {
    let evaluation = state.assessor.evaluate(sentence_id, wav)?;
    let record = state
        .store
        .record(NewAttempt {
            user_id,
            sentence_id: evaluation.sentence_id.clone(),
            transcript: evaluation.transcript.text.clone(),
            similarity: evaluation.similarity,
            level: evaluation.level,
            total_cost: evaluation.total_cost,
        })
        .map_err(AssessError::from)?;
    let filter = state.rank_per_sentence.then_some(sentence_id);
    let population = state.store.scores(filter).map_err(AssessError::from)?;
    let top_percent = top_percent(record.similarity, &population).map_err(AssessError::from)?;
    Ok(AssessmentResponse {
        attempt_id: record.id,
        transcript: evaluation.transcript.text,
        reference_text: evaluation.reference_text,
        similarity: evaluation.similarity,
        level: evaluation.level,
        top_percent,
        diff: evaluation.diff,
    })
}
