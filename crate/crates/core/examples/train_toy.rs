//! Trains the similarity network on the synthetic two-tone corpus and reports
//! the loss curve and the positive/negative similarity gap.
//!
//! ```text
//! cargo run --release -p hangul-coach --example train_toy -- [epochs] [pairs per example]
//! ```

use std::time::Instant;

use hangul_coach::audio::CANONICAL_RATE;
use hangul_coach::dsp::{MfccConfig, MfccExtractor};
use hangul_coach::siamese::{train_with, SiameseModel, TrainConfig};
use hangul_coach::synth::{balanced_pairs, toy_features};

fn main() {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let extractor = MfccExtractor::new(MfccConfig::default(), CANONICAL_RATE).unwrap();
    let features = toy_features(&extractor, 40, 42);
    let per_example = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(1);
    let pairs = balanced_pairs(&features, per_example, 42).unwrap();
    let config = TrainConfig {
        epochs,
        seed: 42,
        ..TrainConfig::default()
    };

    let start = Instant::now();
    let (model, history) = train_with(SiameseModel::init(42), &pairs, &config, |epoch, loss| {
        if epoch % 10 == 0 {
            println!("epoch {epoch:4} loss {loss:.4} ({:.1}s)", start.elapsed().as_secs_f64());
        }
    })
    .unwrap();

    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for pair in &pairs {
        let p = model.similarity(&pair.a, &pair.b).unwrap();
        if pair.similar {
            pos.push(p)
        } else {
            neg.push(p)
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "final loss {:.4}, positive {:.4}, negative {:.4}, {} pairs, {:.1}s",
        history.last().copied().unwrap_or(f64::NAN),
        mean(&pos),
        mean(&neg),
        pairs.len(),
        start.elapsed().as_secs_f64()
    );
}
