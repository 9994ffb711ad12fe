//! The `hangul-coach` command line. [`run`] is the whole program minus
//! process exit, so tests can drive it with in-memory output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use hangul_coach::assess::{AssessError, Assessor};
use hangul_coach::audio::{canonicalize, CANONICAL_RATE};
use hangul_coach::corpus::{load_catalog, load_pairs};
use hangul_coach::dsp::{MfccConfig, MfccExtractor};
use hangul_coach::hangul::{align, highlight, Span};
use hangul_coach::scoring::LevelBands;
use hangul_coach::siamese::{load_model, save_model, train_with, SiameseModel, TrainConfig};
use hangul_coach::stt::{Backend, SttConfig};

use crate::config::ServeConfig;
use crate::service::{router, AppState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const RED: &str = "\x1b[31m";
const RESET: &str = "\x1b[0m";

#[derive(Debug, Parser)]
#[command(name = "hangul-coach", version, about = "Korean pronunciation assessment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SttChoice {
    Mock,
    Google,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the MFCC matrix of a WAV file as CSV.
    Mfcc {
        wav: PathBuf,
        /// TOML file with MFCC settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip cepstral mean normalization.
        #[arg(long)]
        no_cmn: bool,
    },
    /// Align two Hangul sentences and highlight the differences.
    Align {
        reference: String,
        hypothesis: String,
        /// Print the spans as JSON instead of coloured text.
        #[arg(long)]
        json: bool,
    },
    /// Assess one recording against a catalog sentence.
    Assess {
        wav: PathBuf,
        #[arg(long)]
        sentence_id: String,
        /// Directory holding sentences.json.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "mock")]
        stt: SttChoice,
        /// Fingerprint table for the mock recognizer.
        #[arg(long)]
        mock_table: Option<PathBuf>,
    },
    /// Train the similarity model from a directory with pairs.json.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
        #[arg(long, default_value_t = 16)]
        batch_size: usize,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

/// A failed command: the stage that failed, the error's name and its
/// message.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn new(stage: &'static str, kind: impl Into<String>, message: impl ToString) -> Self {
        Self {
            stage,
            kind: kind.into(),
            message: message.to_string(),
        }
    }
}

impl From<AssessError> for CliError {
    fn from(e: AssessError) -> Self {
        CliError::new(e.stage(), e.kind(), e)
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{}", e.render());
            return EXIT_USAGE;
        }
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error [{}] {}: {}", e.stage, e.kind, e.message);
            EXIT_FAILURE
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::new("output", "IoError", e);
    match command {
        Command::Mfcc {
            wav,
            config,
            out: target,
            no_cmn,
        } => {
            let mut mfcc_config = match config {
                Some(path) => read_toml::<MfccConfig>(&path)?,
                None => MfccConfig::default(),
            };
            if no_cmn {
                mfcc_config.apply_cmn = false;
            }
            let extractor = MfccExtractor::new(mfcc_config, CANONICAL_RATE)
                .map_err(|e| CliError::new("mfcc", "InvalidConfig", e))?;
            let bytes = read_file(&wav)?;
            let clip = canonicalize(&bytes).map_err(|e| CliError::from(AssessError::from(e)))?;
            let matrix = extractor
                .extract(&clip)
                .map_err(|e| CliError::from(AssessError::from(e)))?;
            match target {
                Some(path) => {
                    std::fs::write(&path, matrix.to_csv()).map_err(|e| CliError::new("output", "IoError", e))?
                }
                None => out.write_all(matrix.to_csv().as_bytes()).map_err(io)?,
            }
        }
        Command::Align {
            reference,
            hypothesis,
            json,
        } => {
            let align_err = |e: hangul_coach::hangul::HangulError| CliError::from(AssessError::from(e));
            let script = align(&reference, &hypothesis).map_err(align_err)?;
            let diff = highlight(&script, &reference, &hypothesis).map_err(align_err)?;
            if json {
                let text = serde_json::to_string(&diff).map_err(|e| CliError::new("output", "SerializeError", e))?;
                writeln!(out, "{text}").map_err(io)?;
            } else {
                writeln!(out, "reference:  {}", render_ansi(&diff.reference_spans)).map_err(io)?;
                writeln!(out, "hypothesis: {}", render_ansi(&diff.hypothesis_spans)).map_err(io)?;
                writeln!(out, "cost:       {:.4}", script.total_cost).map_err(io)?;
            }
        }
        Command::Assess {
            wav,
            sentence_id,
            corpus,
            model,
            stt,
            mock_table,
        } => {
            let stt_config = SttConfig {
                backend: match stt {
                    SttChoice::Mock => Backend::Mock,
                    SttChoice::Google => Backend::Google,
                },
                mock_table_path: mock_table,
                ..SttConfig::default()
            };
            let transcriber = stt_config.build().map_err(|e| CliError::new("stt", e.kind(), e))?;
            let model = load_model(&model).map_err(|e| CliError::new("model", "ModelError", e))?;
            let extractor = MfccExtractor::new(MfccConfig::default(), CANONICAL_RATE)
                .map_err(|e| CliError::new("mfcc", "InvalidConfig", e))?;
            let catalog = load_catalog(&corpus, &extractor).map_err(|e| CliError::new("corpus", "CorpusError", e))?;
            let assessor = Assessor {
                catalog,
                model,
                extractor,
                stt: transcriber,
                bands: LevelBands::default(),
            };
            let bytes = read_file(&wav)?;
            let e = assessor.evaluate(&sentence_id, &bytes)?;
            writeln!(out, "sentence:   {} {}", e.sentence_id, e.reference_text).map_err(io)?;
            writeln!(out, "transcript: {}", e.transcript.text).map_err(io)?;
            writeln!(out, "reference:  {}", render_ansi(&e.diff.reference_spans)).map_err(io)?;
            writeln!(out, "hypothesis: {}", render_ansi(&e.diff.hypothesis_spans)).map_err(io)?;
            writeln!(out, "cost:       {:.4}", e.total_cost).map_err(io)?;
            writeln!(out, "similarity: {:.4}", e.similarity).map_err(io)?;
            writeln!(out, "level:      {}", e.level).map_err(io)?;
        }
        Command::Train {
            data,
            epochs,
            seed,
            out: target,
            learning_rate,
            batch_size,
        } => {
            if learning_rate <= 0.0 || batch_size == 0 {
                return Err(CliError::new(
                    "train",
                    "InvalidConfig",
                    "learning rate and batch size must be positive",
                ));
            }
            let extractor = MfccExtractor::new(MfccConfig::default(), CANONICAL_RATE)
                .map_err(|e| CliError::new("mfcc", "InvalidConfig", e))?;
            let pairs = load_pairs(&data, &extractor).map_err(|e| CliError::new("corpus", "CorpusError", e))?;
            let config = TrainConfig {
                learning_rate,
                batch_size,
                epochs,
                seed,
                ..TrainConfig::default()
            };
            let mut log_error = None;
            let (model, _) = train_with(SiameseModel::init(seed), &pairs, &config, |epoch, loss| {
                if let Err(e) = writeln!(out, "epoch {} loss {loss:.6}", epoch + 1) {
                    log_error.get_or_insert(e);
                }
            })
            .map_err(|e| CliError::new("train", "TrainingFailure", e))?;
            if let Some(e) = log_error {
                return Err(io(e));
            }
            save_model(&model, &target).map_err(|e| CliError::new("model", "ModelError", e))?;
        }
        Command::Serve { config } => serve(&config, out)?,
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::new("input", "IoError", format!("{}: {e}", path.display())))
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|e| CliError::new("config", "InvalidConfig", format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::new("config", "InvalidConfig", format!("{}: {e}", path.display())))
}

/// Non-ok spans in red. Whitespace at either end of a span stays outside the
/// colour codes so that only syllables are painted.
pub fn render_ansi(spans: &[Span]) -> String {
    let mut line = String::new();
    for span in spans {
        let core = span.text.trim();
        if !span.flag.is_error() || core.is_empty() {
            line.push_str(&span.text);
            continue;
        }
        let lead = span.text.len() - span.text.trim_start().len();
        line.push_str(&span.text[..lead]);
        line.push_str(RED);
        line.push_str(core);
        line.push_str(RESET);
        line.push_str(&span.text[lead + core.len()..]);
    }
    line
}

fn serve(config_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let config = ServeConfig::load(config_path).map_err(|e| CliError::new("config", "InvalidConfig", e))?;
    // everything that can fail on bad files fails here, before binding
    let state = AppState::from_config(&config).map_err(|e| CliError::new("startup", "StartupFailure", e))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new("startup", "RuntimeFailure", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.bind)
            .await
            .map_err(|e| CliError::new("bind", "BindFailure", format!("{}: {e}", config.bind)))?;
        let addr = listener
            .local_addr()
            .map_err(|e| CliError::new("bind", "BindFailure", e))?;
        writeln!(out, "listening on http://{addr}")
            .and_then(|_| out.flush())
            .map_err(|e| CliError::new("output", "IoError", e))?;
        let app = router(Arc::new(state), config.static_dir.as_deref());
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::new("serve", "ServeFailure", e))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hangul_coach::hangul::SpanFlag;

    fn span(text: &str, flag: SpanFlag) -> Span {
        Span {
            text: text.into(),
            flag,
        }
    }

    #[test]
    fn ansi_keeps_whitespace_outside_codes() {
        let spans = [span("둘 ", SpanFlag::Mispronounced), span("다 청소", SpanFlag::Ok)];
        assert_eq!(render_ansi(&spans), "\x1b[31m둘\x1b[0m 다 청소");
        assert_eq!(
            render_ansi(&[span("  요일 ", SpanFlag::Extra)]),
            "  \x1b[31m요일\x1b[0m "
        );
        assert_eq!(render_ansi(&[span("다", SpanFlag::Ok)]), "다");
    }

    #[test]
    fn usage_errors_exit_with_two() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(
            run(["hangul-coach", "align", "--bogus"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(run(["hangul-coach"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["hangul-coach", "--help"], &mut out, &mut err), EXIT_OK);
    }
}
