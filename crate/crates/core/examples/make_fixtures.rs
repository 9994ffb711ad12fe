//! Regenerates the fixture tree used by the tests, the README walkthrough
//! and the demo service: synthetic answer recordings, a learner attempt,
//! the mock STT table, a small training set and a model trained on it.
//!
//! ```text
//! cargo run --release -p hangul-coach --example make_fixtures -- [out dir]
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hangul_coach::audio::{canonicalize, write_wav, AudioClip, CANONICAL_RATE};
use hangul_coach::corpus::{load_pairs, ManifestEntry, PairEntry, MANIFEST_NAME, PAIRS_NAME};
use hangul_coach::dsp::{MfccConfig, MfccExtractor};
use hangul_coach::siamese::{save_model, train, SiameseModel, TrainConfig};
use hangul_coach::stt::fingerprint;
use hangul_coach::synth::{synthesize_utterance, Voice};

const SENTENCES: [(&str, &str); 3] = [
    ("s1", "둘 다 청소하기 싫어 귀찮아"),
    ("s2", "오늘 날씨가 정말 좋네요"),
    ("s3", "한국어를 배우고 있어요"),
];
/// What the learner in the attempt clip actually said.
const ATTEMPT: &str = "요일 날 여기다 청소하기 싫어 귀찮아";

const NATIVE: Voice = Voice {
    pitch_hz: 120.0,
    vowel_seconds: 0.09,
    seed: 1,
};
const LEARNER: Voice = Voice {
    pitch_hz: 190.0,
    vowel_seconds: 0.11,
    seed: 2,
};
const TRAIN_VOICES: [Voice; 3] = [
    Voice {
        pitch_hz: 110.0,
        vowel_seconds: 0.085,
        seed: 11,
    },
    Voice {
        pitch_hz: 165.0,
        vowel_seconds: 0.1,
        seed: 12,
    },
    Voice {
        pitch_hz: 220.0,
        vowel_seconds: 0.095,
        seed: 13,
    },
];

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    let mut mock_table = BTreeMap::new();
    let mut write = |path: &Path, text: &str, voice: Voice| {
        let bytes = write_wav(&synthesize_utterance(text, voice));
        // the service hashes what it decodes, so hash the decoded file
        mock_table.insert(fingerprint(&canonicalize(&bytes).unwrap()), text.to_string());
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, bytes).unwrap();
    };

    let manifest: Vec<ManifestEntry> = SENTENCES
        .iter()
        .map(|(id, text)| {
            let audio = PathBuf::from(format!("{id}.wav"));
            write(&out.join("corpus").join(&audio), text, NATIVE);
            ManifestEntry {
                sentence_id: id.to_string(),
                text: text.to_string(),
                audio,
            }
        })
        .collect();
    write_json(&out.join("corpus").join(MANIFEST_NAME), &manifest);
    write(&out.join("attempts/f2.wav"), ATTEMPT, LEARNER);

    let train_dir = out.join("train");
    let texts: Vec<&str> = SENTENCES.iter().map(|(_, t)| *t).chain([ATTEMPT]).collect();
    let clip_name = |t: usize, v: usize| PathBuf::from(format!("t{t}_v{v}.wav"));
    for (t, text) in texts.iter().enumerate() {
        for (v, voice) in TRAIN_VOICES.iter().enumerate() {
            write(&train_dir.join(clip_name(t, v)), text, *voice);
        }
    }
    let mut pairs = Vec::new();
    for t in 0..texts.len() {
        for (v, w) in [(0, 1), (0, 2), (1, 2)] {
            pairs.push(PairEntry {
                a: clip_name(t, v),
                b: clip_name(t, w),
                label: 1,
            });
            let other = (t + 1 + v) % texts.len();
            let other = if other == t { (other + 1) % texts.len() } else { other };
            pairs.push(PairEntry {
                a: clip_name(t, v),
                b: clip_name(other, w),
                label: 0,
            });
        }
    }
    write_json(&train_dir.join(PAIRS_NAME), &pairs);

    // a clip the mock recognizes as containing no speech
    let quiet = write_wav(&AudioClip::new(vec![0.0; 8000], CANONICAL_RATE).unwrap());
    mock_table.insert(fingerprint(&canonicalize(&quiet).unwrap()), String::new());
    fs::write(out.join("attempts/silence.wav"), quiet).unwrap();
    write_json(&out.join("mock_table.json"), &mock_table);

    let extractor = MfccExtractor::new(MfccConfig::default(), CANONICAL_RATE).unwrap();
    let data = load_pairs(&train_dir, &extractor).unwrap();
    let config = TrainConfig {
        epochs: 60,
        seed: 7,
        ..TrainConfig::default()
    };
    let (model, history) = train(SiameseModel::init(config.seed), &data, &config).unwrap();
    save_model(&model, out.join("model.ksnm")).unwrap();
    println!(
        "wrote {} clips, {} training pairs; model loss {:.4} -> {:.4}",
        mock_table.len(),
        data.len(),
        history[0],
        history[history.len() - 1]
    );
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    let mut text = serde_json::to_string_pretty(value).unwrap();
    text.push('\n');
    fs::write(path, text).unwrap();
}
