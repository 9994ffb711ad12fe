//! End-to-end acceptance run. Prints one PASS or FAIL line per criterion,
//! with the measured quantities, and exits non-zero if any criterion fails.
//!
//! ```text
//! cargo test -p hangul-coach-server --test acceptance
//! ```

mod common;
#[path = "../../core/tests/support/gradcheck.rs"]
mod gradcheck;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use hangul_coach::audio::{AudioClip, CANONICAL_RATE};
use hangul_coach::dsp::{mfcc, power_spectrum, MfccConfig, MfccExtractor};
use hangul_coach::hangul::{align, compose, decompose, highlight, AlignOp, Span, SpanFlag};
use hangul_coach::scoring::{level_of, top_percent, Level};
use hangul_coach::siamese::{sigmoid, train, write_model, SiameseModel, TrainConfig};
use hangul_coach::synth::{balanced_pairs, toy_features};
use hangul_coach_oracles as oracle;
use hangul_coach_server::service::AssessmentResponse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(condition: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {:.2}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64())
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn oracle_params(config: &MfccConfig) -> oracle::mfcc::Params {
    oracle::mfcc::Params {
        sample_rate: CANONICAL_RATE,
        frame_len: config.frame_len,
        hop: config.hop,
        fft_size: config.fft_size,
        n_mels: config.n_mels,
        n_coeffs: config.n_coeffs,
        pre_emphasis: config.pre_emphasis,
        log_floor: config.log_floor,
        cmn: config.apply_cmn,
    }
}

fn dsp_oracle() -> Outcome {
    let start = Instant::now();
    let samples: Vec<f64> = (0..16_000)
        .map(|n| 0.5 * (2.0 * PI * 440.0 * n as f64 / 16_000.0).sin())
        .collect();
    let clip = AudioClip::new(samples.clone(), CANONICAL_RATE).unwrap();
    let mut worst = 0.0f64;
    for apply_cmn in [true, false] {
        let config = MfccConfig {
            apply_cmn,
            ..MfccConfig::default()
        };
        let fast = mfcc(&clip, &config).unwrap();
        let slow = oracle::mfcc::mfcc(&samples, &oracle_params(&config));
        ensure(fast.frames() == slow.len(), || {
            format!("{} frames vs {}", fast.frames(), slow.len())
        })?;
        worst = worst.max(max_abs_diff(fast.values(), &slow.concat()));
    }
    ensure(worst < 1e-9, || format!("max abs difference {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "max abs diff {worst:.1e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn fft() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut worst_parseval) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let frame: Vec<f64> = (0..512).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = power_spectrum(&frame, 512);
        worst = worst.max(max_abs_diff(&fast, &oracle::dft::power_spectrum(&frame, 512)));
        // the one-sided spectrum counts every bin but DC and Nyquist twice
        let freq = fast[0] + fast[256] + 2.0 * fast[1..256].iter().sum::<f64>();
        let time: f64 = frame.iter().map(|v| v * v).sum();
        worst_parseval = worst_parseval.max(((time - freq) / time).abs());
    }
    ensure(worst < 1e-9, || format!("spectra differ by {worst:e}"))?;
    ensure(worst_parseval < 1e-9, || {
        format!("Parseval relative error {worst_parseval:e}")
    })?;
    Ok(format!("max abs diff {worst:.1e}, Parseval {worst_parseval:.1e}"))
}

fn silence() -> Outcome {
    let wav = common::fixture("attempts/silence.wav");
    let clip = hangul_coach::audio::canonicalize(&wav).unwrap();
    let c0 = 1e-10f64.ln() * 26f64.sqrt();
    let raw = mfcc(
        &clip,
        &MfccConfig {
            apply_cmn: false,
            ..MfccConfig::default()
        },
    )
    .unwrap();
    let mut worst = 0.0f64;
    for t in 0..raw.frames() {
        let row = raw.row(t);
        worst = worst.max((row[0] - c0).abs());
        worst = row[1..].iter().fold(worst, |w, v| w.max(v.abs()));
    }
    ensure(worst < 1e-9, || format!("raw frames off by {worst:e}"))?;
    let normalized = mfcc(&clip, &MfccConfig::default()).unwrap();
    let largest = normalized.values().iter().fold(0.0f64, |w, v| w.max(v.abs()));
    ensure(largest < 1e-9, || format!("normalized matrix has {largest:e}"))?;
    Ok(format!(
        "{} frames at c0 = {c0:.2}, normalized max {largest:.1e}",
        raw.frames()
    ))
}

fn hangul_round_trip() -> Outcome {
    let start = Instant::now();
    let mut failures = 0;
    for code in 0xAC00u32..=0xD7A3 {
        let ch = char::from_u32(code).unwrap();
        let s = decompose(ch).unwrap();
        if compose(s.lead, s.vowel, s.tail).ok() != Some(ch) {
            failures += 1;
        }
    }
    ensure(failures == 0, || format!("{failures} syllables failed"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("11172 syllables, {:.3}s", start.elapsed().as_secs_f64()))
}

fn learner_example() -> Outcome {
    let (r, h) = (
        oracle::edit::syllables(common::ANSWER),
        oracle::edit::syllables(common::USER),
    );
    let script = align(common::ANSWER, common::USER).unwrap();
    let expected = 4.0 + 2.0 / 3.0;
    ensure((script.total_cost - expected).abs() < 1e-9, || {
        format!("total cost {}", script.total_cost)
    })?;
    let oracle_cost = oracle::edit::min_cost(&r, &h);
    ensure((oracle_cost - script.total_cost).abs() < 1e-9, || {
        format!("oracle table gives {oracle_cost}")
    })?;

    let matches: Vec<(usize, usize)> = script
        .ops
        .iter()
        .filter_map(|op| match *op {
            AlignOp::Match { ref_idx, hyp_idx } => Some((ref_idx, hyp_idx)),
            _ => None,
        })
        .collect();
    let wanted: Vec<(usize, usize)> = (1..11).map(|i| (i, i + 4)).collect();
    ensure(matches == wanted, || format!("matched pairs {matches:?}"))?;

    let diff = highlight(&script, common::ANSWER, common::USER).unwrap();
    let span = |text: &str, flag| Span {
        text: text.into(),
        flag,
    };
    let reference = vec![
        span("둘 ", SpanFlag::Mispronounced),
        span("다 청소하기 싫어 귀찮아", SpanFlag::Ok),
    ];
    let hypothesis = vec![
        span("요일 ", SpanFlag::Extra),
        span("날 ", SpanFlag::Mispronounced),
        span("여기", SpanFlag::Extra),
        span("다 청소하기 싫어 귀찮아", SpanFlag::Ok),
    ];
    ensure(diff.reference_spans == reference, || {
        format!("reference spans {:?}", diff.reference_spans)
    })?;
    ensure(diff.hypothesis_spans == hypothesis, || {
        format!("hypothesis spans {:?}", diff.hypothesis_spans)
    })?;
    Ok(format!("total cost {:.6}, 10 matches, 둘 flagged", script.total_cost))
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let model = gradcheck::random_model(11);
    let batch = gradcheck::random_batch(12, 4);
    let report = gradcheck::check(&model, &batch, 200, 13);
    ensure(report.accepted >= 200, || {
        format!("only {} parameters checked", report.accepted)
    })?;
    ensure(report.max_relative_error < 1e-4, || format!("{report:?}"))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "{} parameters, max relative error {:.1e}, {} kinks skipped, {:.1}s",
        report.accepted,
        report.max_relative_error,
        report.rejected,
        start.elapsed().as_secs_f64()
    ))
}

fn siamese_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = gradcheck::random_model(21);
    let own = sigmoid(model.head_bias());
    let (mut lo, mut hi) = (1.0f64, 0.0f64);
    for i in 0..100 {
        let a = gradcheck::random_matrix(&mut rng, 20.0);
        let b = gradcheck::random_matrix(&mut rng, 20.0);
        let aa = model.similarity(&a, &a).unwrap();
        ensure(aa == own, || {
            format!("input {i}: similarity(x, x) = {aa}, σ(b) = {own}")
        })?;
        let (ab, ba) = (model.similarity(&a, &b).unwrap(), model.similarity(&b, &a).unwrap());
        ensure(ab == ba, || format!("input {i}: {ab} vs {ba}"))?;
        ensure(ab > 0.0 && ab < 1.0, || format!("input {i}: {ab} outside (0, 1)"))?;
        lo = lo.min(ab);
        hi = hi.max(ab);
    }
    Ok(format!("100 inputs, self {own:.6}, cross range [{lo:.4}, {hi:.4}]"))
}

fn toy_training() -> Outcome {
    let extractor = MfccExtractor::new(MfccConfig::default(), CANONICAL_RATE).unwrap();
    let features = toy_features(&extractor, 40, 42);
    let pairs = balanced_pairs(&features, 1, 42).unwrap();
    let config = TrainConfig {
        epochs: 200,
        batch_size: 16,
        learning_rate: 1e-3,
        seed: 42,
        ..TrainConfig::default()
    };

    let run = || {
        let start = Instant::now();
        let (model, history) = train(SiameseModel::init(42), &pairs, &config).unwrap();
        let mut bytes = Vec::new();
        write_model(&model, &mut bytes).unwrap();
        (model, history, bytes, start.elapsed())
    };
    let (model, history, bytes, elapsed) = run();
    let loss = *history.last().unwrap();
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
    let gap = mean(&pos) - mean(&neg);
    let summary = format!(
        "loss {loss:.4}, separation {gap:.4}, {} pairs, {:.1}s",
        pairs.len(),
        elapsed.as_secs_f64()
    );
    ensure(loss < 0.3, || format!("final loss too high: {summary}"))?;
    ensure(gap > 0.3, || format!("classes not separated: {summary}"))?;
    within(elapsed, Duration::from_secs(300))?;

    let (_, _, again, _) = run();
    ensure(again == bytes, || {
        "rerun with the same seed wrote a different model".to_string()
    })?;
    Ok(format!("{summary}, rerun byte-identical"))
}

fn level_boundary() -> Outcome {
    let at = level_of(0.9).unwrap();
    let above = level_of(0.9 + 1e-9).unwrap();
    ensure(at == Level::Advanced, || format!("level_of(0.9) = {at}"))?;
    ensure(above == Level::NativeLike, || format!("level_of(0.9 + 1e-9) = {above}"))?;
    Ok("0.9 is Advanced, 0.9 + 1e-9 is NativeLike".to_string())
}

fn service_integration() -> Outcome {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    runtime.block_on(async {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("attempts.jsonl");
        let (app, state) = common::app(&store);

        // an earlier attempt so that the rank is computed over more than one score
        let (status, _) = common::post_attempt(&app, "native", "s1", &common::fixture("corpus/s1.wav")).await;
        ensure(status == StatusCode::OK, || format!("seed attempt returned {status}"))?;

        let (status, body) = common::post_attempt(&app, "learner", "s1", &common::fixture("attempts/f2.wav")).await;
        ensure(status == StatusCode::OK, || {
            format!("F2 returned {status}: {}", String::from_utf8_lossy(&body))
        })?;
        let r: AssessmentResponse = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        ensure(r.transcript == common::USER, || {
            format!("transcript {:?}", r.transcript)
        })?;
        let oracle_diff = highlight(
            &align(common::ANSWER, common::USER).unwrap(),
            common::ANSWER,
            common::USER,
        )
        .unwrap();
        ensure(r.diff == oracle_diff, || format!("diff {:?}", r.diff))?;
        ensure((0.0..=1.0).contains(&r.similarity), || {
            format!("similarity {}", r.similarity)
        })?;
        ensure(r.level == level_of(r.similarity).unwrap(), || {
            format!("level {} for {}", r.level, r.similarity)
        })?;
        let scores: Vec<f64> = state.store.records().unwrap().iter().map(|a| a.similarity).collect();
        let expected = oracle::rank::top_percent(r.similarity, &scores);
        ensure(r.top_percent == expected, || {
            format!("top_percent {} vs brute force {expected}", r.top_percent)
        })?;

        let before = common::store_lines(&store);
        let (status, _) = common::post_attempt(&app, "learner", "s1", b"definitely not RIFF").await;
        ensure(status == StatusCode::BAD_REQUEST, || {
            format!("malformed audio returned {status}")
        })?;
        let after = common::store_lines(&store);
        ensure(after == before, || format!("store grew from {before} to {after} lines"))?;
        Ok(format!(
            "similarity {:.4} ({}), top {}%, malformed audio 400 with store unchanged",
            r.similarity, r.level, r.top_percent
        ))
    })
}

fn percentile_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(1..=1000);
        // a coarse grid forces ties; a few scores fall between grid points
        let population: Vec<f64> = (0..n).map(|_| rng.random_range(0..=40) as f64 / 40.0).collect();
        let probes = population
            .iter()
            .copied()
            .chain((0..20).map(|_| rng.random_range(0.0..=1.0)));
        for score in probes {
            let got = top_percent(score, &population).unwrap();
            let want = oracle::rank::top_percent(score, &population);
            ensure(got == want, || format!("score {score} over {n}: {got} vs {want}"))?;
            checked += 1;
        }
    }
    Ok(format!("100 populations, {checked} scores exact"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("DSP oracle equivalence", dsp_oracle),
        ("FFT correctness", fft),
        ("Silence fixture", silence),
        ("Hangul round trip", hangul_round_trip),
        ("Learner example alignment", learner_example),
        ("Gradient check", gradient_check),
        ("Siamese laws", siamese_laws),
        ("Toy training separation", toy_training),
        ("Level boundary", level_boundary),
        ("Service integration", service_integration),
        ("Percentile oracle", percentile_oracle),
    ];
    // keep panic messages out of the report; they are folded into FAIL lines
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, criterion) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
