//! Syllable edit costs by full table and by brute-force enumeration.

fn components(ch: char) -> [u32; 3] {
    let index = ch as u32 - 0xAC00;
    assert!(index < 11_172, "{ch:?} is not a precomposed Hangul syllable");
    [index / (21 * 28), index / 28 % 21, index % 28]
}

/// Differing lead/vowel/tail components over three.
pub fn substitution_cost(a: char, b: char) -> f64 {
    let (x, y) = (components(a), components(b));
    x.iter().zip(&y).filter(|(p, q)| p != q).count() as f64 / 3.0
}

/// Hangul syllables of `text`; everything else is dropped.
pub fn syllables(text: &str) -> Vec<char> {
    text.chars().filter(|c| ('\u{AC00}'..='\u{D7A3}').contains(c)).collect()
}

/// The complete DP table; `table[i][j]` is the cheapest way to turn
/// `a[..i]` into `b[..j]`.
pub fn cost_table(a: &[char], b: &[char]) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; b.len() + 1]; a.len() + 1];
    for i in 0..=a.len() {
        for j in 0..=b.len() {
            t[i][j] = match (i, j) {
                (0, _) => j as f64,
                (_, 0) => i as f64,
                _ => (t[i - 1][j] + 1.0)
                    .min(t[i][j - 1] + 1.0)
                    .min(t[i - 1][j - 1] + substitution_cost(a[i - 1], b[j - 1])),
            };
        }
    }
    t
}

pub fn min_cost(a: &[char], b: &[char]) -> f64 {
    cost_table(a, b)[a.len()][b.len()]
}

/// Minimum over every edit script, found by trying all of them. Only for
/// short inputs: the number of scripts grows exponentially.
pub fn exhaustive_min_cost(a: &[char], b: &[char]) -> f64 {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len() as f64,
        (_, None) => a.len() as f64,
        (Some((x, ra)), Some((y, rb))) => {
            let diagonal = substitution_cost(*x, *y) + exhaustive_min_cost(ra, rb);
            let delete = 1.0 + exhaustive_min_cost(ra, b);
            let insert = 1.0 + exhaustive_min_cost(a, rb);
            diagonal.min(delete).min(insert)
        }
    }
}
