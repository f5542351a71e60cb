//! Input generators shared by the benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n x d` uniform features with the first `d / 20` columns shifted for positives.
pub fn dataset(seed: u64, n: usize, d: usize) -> (Array2<f64>, Vec<bool>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let informative = (d / 20).max(1);
    let x = Array2::from_shape_fn((n, d), |(i, j)| {
        let shift = if y[i] && j < informative { 0.5 } else { 0.0 };
        shift + r.random::<f64>()
    });
    (x, y)
}

const WORDS: &[&str] = &[
    "hey", "what's", "up", "tonight", "drinks", "at", "mine", "?", "lol", "sure", "see", "you", "there", "!",
];

/// `count` chat-like messages of 1 to 60 words.
pub fn messages(seed: u64, count: usize) -> Vec<String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = r.random_range(1..=60);
            (0..len)
                .map(|_| WORDS[r.random_range(0..WORDS.len())])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
