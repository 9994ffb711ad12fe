use std::sync::Arc;

use hangul_coach::scoring::{level_of, top_percent, AttemptStore, Level, NewAttempt};
use hangul_coach_oracles::rank;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn attempt(user: &str, similarity: f64) -> NewAttempt {
    NewAttempt {
        user_id: user.into(),
        sentence_id: "s1".into(),
        transcript: "둘 다".into(),
        similarity,
        level: level_of(similarity).unwrap(),
        total_cost: 1.0 / 3.0,
    }
}

#[test]
fn percentile_matches_brute_force_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let n = rng.random_range(1..=1000);
        // a coarse grid forces plenty of ties
        let population: Vec<f64> = (0..n).map(|_| rng.random_range(0..=40) as f64 / 40.0).collect();
        for &score in population.iter().step_by(7) {
            assert_eq!(
                top_percent(score, &population).unwrap(),
                rank::top_percent(score, &population)
            );
        }
    }
}

#[test]
fn level_bands_have_the_documented_order() {
    assert!(Level::NativeLike > Level::Advanced && Level::Advanced > Level::Intermediate);
    assert!(Level::Intermediate > Level::Beginner);
}

proptest! {
    #[test]
    fn level_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(level_of(lo).unwrap() <= level_of(hi).unwrap());
    }

    #[test]
    fn top_percent_is_antitone_and_bounded(
        population in prop::collection::vec(0.0f64..=1.0, 1..200),
        i in any::<prop::sample::Index>(),
        j in any::<prop::sample::Index>(),
    ) {
        let (a, b) = (population[i.index(population.len())], population[j.index(population.len())]);
        let (ta, tb) = (top_percent(a, &population).unwrap(), top_percent(b, &population).unwrap());
        prop_assert!(ta > 0.0 && ta <= 100.0);
        if a <= b {
            prop_assert!(ta >= tb);
        }
    }
}

#[test]
fn store_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("attempts.jsonl");
    let store = AttemptStore::open(&path).unwrap();
    let mut written = Vec::new();
    for (k, s) in [0.1, 0.95, 0.5, 0.75, 0.9].into_iter().enumerate() {
        written.push(store.record_at(attempt(&format!("u{k}"), s), 1_000 + k as u64).unwrap());
    }
    let reloaded = AttemptStore::open(&path).unwrap().records().unwrap();
    assert_eq!(reloaded, written);
    for r in &reloaded {
        assert_eq!(r.level, level_of(r.similarity).unwrap());
    }
    let top: Vec<f64> = store.leaderboard(3).unwrap().iter().map(|r| r.similarity).collect();
    assert_eq!(top, vec![0.95, 0.9, 0.75]);
    assert_eq!(store.scores(Some("s1")).unwrap().len(), 5);
    assert!(store.scores(Some("s2")).unwrap().is_empty());
}

#[test]
fn concurrent_writers_get_distinct_ids() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(AttemptStore::open(dir.path().join("a.jsonl")).unwrap());
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let store = Arc::clone(&store);
            std::thread::spawn(move || {
                (0..10)
                    .map(|k| store.record(attempt(&format!("t{t}"), (k as f64) / 10.0)).unwrap().id)
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let mut ids: Vec<u64> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
    ids.sort_unstable();
    assert_eq!(ids, (1..=80).collect::<Vec<_>>());
    let records = store.records().unwrap();
    assert!(records
        .windows(2)
        .all(|w| w[0].timestamp <= w[1].timestamp && w[0].id + 1 == w[1].id));
}
