/// Percentage of `population` at or above `score`, by counting one
/// comparison at a time, rounded to one decimal with halves rounded up.
pub fn top_percent(score: f64, population: &[f64]) -> f64 {
    let mut at_or_above = 0usize;
    for &s in population {
        if s >= score {
            at_or_above += 1;
        }
    }
    (1000.0 * at_or_above as f64 / population.len() as f64).round() / 10.0
}
