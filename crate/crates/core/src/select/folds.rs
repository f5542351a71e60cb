use rand::seq::SliceRandom;
use rand::Rng;

/// Test-index sets for `k` stratified folds. Each class is shuffled and dealt
/// round-robin, positives first, so fold sizes differ by at most one.
pub fn stratified_folds<R: Rng>(y: &[bool], k: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let k = k.max(1);
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i]).collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (slot, i) in pos.into_iter().chain(neg).enumerate() {
        folds[slot % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Indices not in `test`, ascending.
pub fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in test {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}
