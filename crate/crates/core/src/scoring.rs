//! Fluency levels, percentile rank and the attempt log.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scores strictly above this are native-like. Not configurable.
pub const NATIVE_LIKE_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("score {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("cannot rank against an empty population")]
    EmptyPopulation,
    #[error("attempt store failure: {0}")]
    StorageFailure(String),
}

/// Ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Beginner,
    Intermediate,
    Advanced,
    NativeLike,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::Beginner => "Beginner",
            Level::Intermediate => "Intermediate",
            Level::Advanced => "Advanced",
            Level::NativeLike => "NativeLike",
        })
    }
}

/// Lower band edges. Each edge is exclusive: a score must be strictly
/// greater to reach the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelBands {
    pub advanced: f64,
    pub intermediate: f64,
}

impl Default for LevelBands {
    fn default() -> Self {
        Self {
            advanced: 0.75,
            intermediate: 0.5,
        }
    }
}

impl LevelBands {
    pub fn level_of(&self, score: f64) -> Result<Level, ScoringError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(ScoringError::OutOfRange(score));
        }
        Ok(if score > NATIVE_LIKE_THRESHOLD {
            Level::NativeLike
        } else if score > self.advanced {
            Level::Advanced
        } else if score > self.intermediate {
            Level::Intermediate
        } else {
            Level::Beginner
        })
    }
}

/// Level under the default bands.
pub fn level_of(score: f64) -> Result<Level, ScoringError> {
    LevelBands::default().level_of(score)
}

/// Share of the population scoring at or above `score`, as a percentage
/// rounded to one decimal. The population is expected to include `score`
/// itself.
pub fn top_percent(score: f64, population: &[f64]) -> Result<f64, ScoringError> {
    if population.is_empty() {
        return Err(ScoringError::EmptyPopulation);
    }
    let at_or_above = population.iter().filter(|&&s| s >= score).count() as u64;
    let n = population.len() as u64;
    // tenths of a percent, rounded half up, in integer arithmetic
    let tenths = (2000 * at_or_above + n) / (2 * n);
    Ok(tenths as f64 / 10.0)
}

/// One persisted practice attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub id: u64,
    pub user_id: String,
    pub sentence_id: String,
    pub transcript: String,
    pub similarity: f64,
    pub level: Level,
    pub total_cost: f64,
    /// UTC seconds since the Unix epoch.
    pub timestamp: u64,
}

/// An attempt before the store assigns its id and timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct NewAttempt {
    pub user_id: String,
    pub sentence_id: String,
    pub transcript: String,
    pub similarity: f64,
    pub level: Level,
    pub total_cost: f64,
}

#[derive(Debug, Default)]
struct StoreState {
    count: u64,
    last_timestamp: u64,
}

/// Append-only JSON-lines attempt log. Writers are serialized; readers share
/// the lock and see a consistent snapshot of whole lines.
#[derive(Debug)]
pub struct AttemptStore {
    path: PathBuf,
    state: RwLock<StoreState>,
}

impl AttemptStore {
    /// Opens (without creating) the log at `path`. A missing file is an
    /// empty store; it is created by the first write.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, ScoringError> {
        let path = path.into();
        let records = read_records(&path)?;
        let state = StoreState {
            count: records.len() as u64,
            last_timestamp: records.iter().map(|r| r.timestamp).max().unwrap_or(0),
        };
        Ok(Self {
            path,
            state: RwLock::new(state),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends an attempt stamped with the current time.
    pub fn record(&self, attempt: NewAttempt) -> Result<AttemptRecord, ScoringError> {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.record_at(attempt, now)
    }

    /// Appends an attempt. The id is one more than the number of stored
    /// records; the timestamp is clamped so it never goes backwards within
    /// the file. The line is flushed to disk before returning.
    pub fn record_at(&self, attempt: NewAttempt, timestamp: u64) -> Result<AttemptRecord, ScoringError> {
        if !(0.0..=1.0).contains(&attempt.similarity) {
            return Err(ScoringError::OutOfRange(attempt.similarity));
        }
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        let record = AttemptRecord {
            id: state.count + 1,
            user_id: attempt.user_id,
            sentence_id: attempt.sentence_id,
            transcript: attempt.transcript,
            similarity: attempt.similarity,
            level: attempt.level,
            total_cost: attempt.total_cost,
            timestamp: timestamp.max(state.last_timestamp),
        };
        let mut line = serde_json::to_string(&record).map_err(|e| ScoringError::StorageFailure(e.to_string()))?;
        line.push('\n');

        let storage = |e: std::io::Error| ScoringError::StorageFailure(format!("{}: {e}", self.path.display()));
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(storage)?;
        file.write_all(line.as_bytes()).map_err(storage)?;
        file.sync_data().map_err(storage)?;

        state.count = record.id;
        state.last_timestamp = record.timestamp;
        Ok(record)
    }

    /// Snapshot of every stored record in file order.
    pub fn records(&self) -> Result<Vec<AttemptRecord>, ScoringError> {
        let _guard = self.state.read().unwrap_or_else(|e| e.into_inner());
        read_records(&self.path)
    }

    /// Similarity scores of all attempts, or only those for one sentence.
    pub fn scores(&self, sentence_id: Option<&str>) -> Result<Vec<f64>, ScoringError> {
        Ok(self
            .records()?
            .into_iter()
            .filter(|r| sentence_id.is_none_or(|id| r.sentence_id == id))
            .map(|r| r.similarity)
            .collect())
    }

    pub fn leaderboard(&self, n: usize) -> Result<Vec<AttemptRecord>, ScoringError> {
        Ok(leaderboard(self.records()?, n))
    }
}

fn read_records(path: &Path) -> Result<Vec<AttemptRecord>, ScoringError> {
    let storage = |e: String| ScoringError::StorageFailure(format!("{}: {e}", path.display()));
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(storage(e.to_string())),
    };
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| storage(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| storage(format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

/// Top `n` records by similarity, ties broken by earlier timestamp and then
/// by lower id.
pub fn leaderboard(mut records: Vec<AttemptRecord>, n: usize) -> Vec<AttemptRecord> {
    records.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.timestamp.cmp(&b.timestamp))
            .then(a.id.cmp(&b.id))
    });
    records.truncate(n);
    records
}
