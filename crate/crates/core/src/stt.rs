//! Speech-to-text backends: the Google Cloud `speech:recognize` REST call and
//! an offline mock keyed on a hash of the clip's PCM bytes.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audio::{resample, AudioClip, CANONICAL_RATE};

/// Environment variable consulted for the Google API key when the config
/// carries none.
pub const API_KEY_ENV: &str = "HANGUL_COACH_STT_KEY";

pub const GOOGLE_ENDPOINT: &str = "https://speech.googleapis.com/v1/speech:recognize";

/// Longest clip accepted, in seconds.
pub const MAX_CLIP_SECONDS: f64 = 60.0;

#[derive(Debug, Error)]
pub enum SttError {
    #[error("clip is empty")]
    EmptyClip,
    #[error("clip is {seconds:.1} s long; the limit is {MAX_CLIP_SECONDS} s")]
    ClipTooLong { seconds: f64 },
    #[error("no speech recognized")]
    NoSpeechRecognized,
    #[error("speech backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("speech backend rejected the credentials: {0}")]
    AuthFailure(String),
    #[error("clip fingerprint {0} is not in the mock table")]
    FingerprintUnknown(String),
    #[error("invalid STT configuration: {0}")]
    InvalidConfig(String),
}

impl SttError {
    /// Variant name, stable for logs and API payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            SttError::EmptyClip => "EmptyClip",
            SttError::ClipTooLong { .. } => "ClipTooLong",
            SttError::NoSpeechRecognized => "NoSpeechRecognized",
            SttError::BackendUnavailable(_) => "BackendUnavailable",
            SttError::AuthFailure(_) => "AuthFailure",
            SttError::FingerprintUnknown(_) => "FingerprintUnknown",
            SttError::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub text: String,
    pub confidence: Option<f64>,
}

/// Anything that turns a clip into text.
pub trait Transcriber: Send + Sync {
    fn transcribe(&self, clip: &AudioClip) -> Result<Transcript, SttError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Mock,
    Google,
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SttConfig {
    pub backend: Backend,
    pub language_code: String,
    pub model_name: String,
    /// Falls back to [`API_KEY_ENV`] when absent.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_seconds: u64,
    pub mock_table_path: Option<PathBuf>,
    pub endpoint: String,
}

impl Default for SttConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Mock,
            language_code: "ko-KR".into(),
            model_name: "latest_short".into(),
            api_key: None,
            timeout_seconds: 10,
            mock_table_path: None,
            endpoint: GOOGLE_ENDPOINT.into(),
        }
    }
}

// the key must never end up in logs
impl fmt::Debug for SttConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SttConfig")
            .field("backend", &self.backend)
            .field("language_code", &self.language_code)
            .field("model_name", &self.model_name)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout_seconds", &self.timeout_seconds)
            .field("mock_table_path", &self.mock_table_path)
            .field("endpoint", &self.endpoint)
            .finish()
    }
}

impl SttConfig {
    /// Builds the configured backend. The Google backend needs a key, from
    /// the config or the environment.
    pub fn build(&self) -> Result<Box<dyn Transcriber>, SttError> {
        match self.backend {
            Backend::Mock => {
                let path = self
                    .mock_table_path
                    .as_ref()
                    .ok_or_else(|| SttError::InvalidConfig("mock backend needs mock_table_path".into()))?;
                Ok(Box::new(MockStt::load(path)?))
            }
            Backend::Google => {
                let key = self
                    .api_key
                    .clone()
                    .or_else(|| std::env::var(API_KEY_ENV).ok())
                    .filter(|k| !k.trim().is_empty())
                    .ok_or_else(|| {
                        SttError::AuthFailure(format!("no API key configured and {API_KEY_ENV} is unset"))
                    })?;
                Ok(Box::new(GoogleStt::new(self, key)))
            }
        }
    }
}

fn check_clip(clip: &AudioClip) -> Result<(), SttError> {
    if clip.is_empty() {
        return Err(SttError::EmptyClip);
    }
    let seconds = clip.duration_seconds();
    if seconds > MAX_CLIP_SECONDS {
        return Err(SttError::ClipTooLong { seconds });
    }
    Ok(())
}

fn canonical_pcm(clip: &AudioClip) -> Vec<u8> {
    if clip.sample_rate() == CANONICAL_RATE {
        clip.pcm16_le()
    } else {
        resample(clip, CANONICAL_RATE).pcm16_le()
    }
}

/// Lowercase hex SHA-256 of the clip's 16 kHz 16-bit little-endian PCM.
pub fn fingerprint(clip: &AudioClip) -> String {
    hex::encode(Sha256::digest(canonical_pcm(clip)))
}

/// Offline backend: a table from [`fingerprint`] to transcript text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockStt {
    table: HashMap<String, String>,
}

impl MockStt {
    pub fn new(table: HashMap<String, String>) -> Self {
        Self { table }
    }

    pub fn load(path: &Path) -> Result<Self, SttError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SttError::InvalidConfig(format!("mock table {}: {e}", path.display())))?;
        let table = serde_json::from_str(&text)
            .map_err(|e| SttError::InvalidConfig(format!("mock table {}: {e}", path.display())))?;
        Ok(Self { table })
    }

    pub fn table(&self) -> &HashMap<String, String> {
        &self.table
    }
}

impl Transcriber for MockStt {
    fn transcribe(&self, clip: &AudioClip) -> Result<Transcript, SttError> {
        check_clip(clip)?;
        let key = fingerprint(clip);
        match self.table.get(&key) {
            Some(text) if text.trim().is_empty() => Err(SttError::NoSpeechRecognized),
            Some(text) => Ok(Transcript {
                text: text.clone(),
                confidence: None,
            }),
            None => Err(SttError::FingerprintUnknown(key)),
        }
    }
}

/// Synchronous Google Cloud Speech-to-Text client.
pub struct GoogleStt {
    endpoint: String,
    language_code: String,
    model_name: String,
    api_key: String,
    timeout: Duration,
}

impl GoogleStt {
    pub fn new(config: &SttConfig, api_key: String) -> Self {
        Self {
            endpoint: config.endpoint.clone(),
            language_code: config.language_code.clone(),
            model_name: config.model_name.clone(),
            api_key,
            timeout: Duration::from_secs(config.timeout_seconds),
        }
    }

    /// The JSON body sent for `clip`.
    pub fn request_body(&self, clip: &AudioClip) -> serde_json::Value {
        let content = base64::engine::general_purpose::STANDARD.encode(canonical_pcm(clip));
        json!({
            "config": {
                "encoding": "LINEAR16",
                "sampleRateHertz": CANONICAL_RATE,
                "languageCode": self.language_code,
                "model": self.model_name,
            },
            "audio": { "content": content },
        })
    }
}

impl fmt::Debug for GoogleStt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GoogleStt")
            .field("endpoint", &self.endpoint)
            .finish_non_exhaustive()
    }
}

#[derive(Deserialize)]
struct RecognizeResponse {
    #[serde(default)]
    results: Vec<RecognitionResult>,
}

#[derive(Deserialize)]
struct RecognitionResult {
    #[serde(default)]
    alternatives: Vec<Alternative>,
}

#[derive(Deserialize)]
struct Alternative {
    #[serde(default)]
    transcript: String,
    confidence: Option<f64>,
}

impl Transcriber for GoogleStt {
    fn transcribe(&self, clip: &AudioClip) -> Result<Transcript, SttError> {
        check_clip(clip)?;
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| SttError::BackendUnavailable(e.to_string()))?;
        let url = reqwest::Url::parse_with_params(&self.endpoint, [("key", &self.api_key)])
            .map_err(|e| SttError::InvalidConfig(format!("endpoint: {e}")))?;
        let response = client
            .post(url)
            .json(&self.request_body(clip))
            .send()
            // strip the URL: it carries the key
            .map_err(|e| SttError::BackendUnavailable(e.without_url().to_string()))?;

        let status = response.status();
        let body = response
            .text()
            .map_err(|e| SttError::BackendUnavailable(e.without_url().to_string()))?;
        if status == 401 || status == 403 || (status == 400 && body.contains("API key")) {
            return Err(SttError::AuthFailure(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(SttError::BackendUnavailable(format!("HTTP {status}")));
        }
        let parsed: RecognizeResponse = serde_json::from_str(&body)
            .map_err(|e| SttError::BackendUnavailable(format!("unreadable response: {e}")))?;
        let best = parsed
            .results
            .into_iter()
            .next()
            .and_then(|r| r.alternatives.into_iter().next())
            .filter(|a| !a.transcript.trim().is_empty())
            .ok_or(SttError::NoSpeechRecognized)?;
        Ok(Transcript {
            text: best.transcript,
            confidence: best.confidence,
        })
    }
}
