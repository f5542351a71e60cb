use super::provider::Tokenizer;

/// A piece of one input text. Oversized inputs become several consecutive
/// chunks sharing `source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub source: usize,
    pub text: String,
}

pub type Batch = Vec<Chunk>;

/// Greedy token-budget packing.
///
/// Texts are appended to the open batch until the next one would push its
/// token total past `token_limit`, which opens a new batch. A text that alone
/// exceeds the limit closes the open batch and is cut into maximal chunks,
/// each placed in a batch of its own.
pub fn join_strings_list<T: Tokenizer + ?Sized>(
    texts: &[String],
    tokenizer: &T,
    token_limit: usize,
) -> Vec<Batch> {
    let mut batches = Vec::new();
    let mut current: Batch = Vec::new();
    let mut current_tokens = 0usize;

    for (source, text) in texts.iter().enumerate() {
        let n = tokenizer.count_tokens(text);
        if n > token_limit {
            if !current.is_empty() {
                batches.push(std::mem::take(&mut current));
                current_tokens = 0;
            }
            for piece in tokenizer.split_to_limit(text, token_limit) {
                batches.push(vec![Chunk { source, text: piece }]);
            }
            continue;
        }
        if current_tokens + n > token_limit && !current.is_empty() {
            batches.push(std::mem::take(&mut current));
            current_tokens = 0;
        }
        current.push(Chunk {
            source,
            text: text.clone(),
        });
        current_tokens += n;
    }
    if !current.is_empty() {
        batches.push(current);
    }
    batches
}

/// Reassembles the inputs from batches by concatenating chunks per source.
pub fn flatten(batches: &[Batch]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut last: Option<usize> = None;
    for chunk in batches.iter().flatten() {
        if last == Some(chunk.source) {
            out.last_mut().expect("previous chunk").push_str(&chunk.text);
        } else {
            out.push(chunk.text.clone());
            last = Some(chunk.source);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::provider::SimpleTokenizer;

    fn texts(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn batch_texts(batches: &[Batch]) -> Vec<Vec<&str>> {
        batches
            .iter()
            .map(|b| b.iter().map(|c| c.text.as_str()).collect())
            .collect()
    }

    #[test]
    fn greedy_four_four_four_limit_ten() {
        let input = texts(&["a b c d", "e f g h", "i j k l"]);
        let b = join_strings_list(&input, &SimpleTokenizer, 10);
        assert_eq!(
            batch_texts(&b),
            vec![vec!["a b c d", "e f g h"], vec!["i j k l"]]
        );
    }

    #[test]
    fn single_text_within_limit() {
        let input = texts(&["just one"]);
        let b = join_strings_list(&input, &SimpleTokenizer, 10);
        assert_eq!(batch_texts(&b), vec![vec!["just one"]]);
    }

    #[test]
    fn empty_input_no_batches() {
        assert!(join_strings_list(&[], &SimpleTokenizer, 10).is_empty());
    }

    #[test]
    fn exact_fill_stays_in_batch() {
        let input = texts(&["a b c d e", "f g h i j", "k"]);
        let b = join_strings_list(&input, &SimpleTokenizer, 10);
        assert_eq!(batch_texts(&b), vec![vec!["a b c d e", "f g h i j"], vec!["k"]]);
    }

    #[test]
    fn oversized_text_split_into_own_batches() {
        let input = texts(&["x", "a b c d e f g", "y"]);
        let b = join_strings_list(&input, &SimpleTokenizer, 3);
        assert_eq!(
            batch_texts(&b),
            vec![vec!["x"], vec!["a b c "], vec!["d e f "], vec!["g"], vec!["y"]]
        );
        assert_eq!(flatten(&b), input);
    }

    #[test]
    fn empty_strings_cost_nothing() {
        let input = texts(&["", "a b", ""]);
        let b = join_strings_list(&input, &SimpleTokenizer, 2);
        assert_eq!(b.len(), 1);
        assert_eq!(flatten(&b), input);
    }
}
