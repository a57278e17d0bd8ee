//! ROUGE-L F1 over lowercase alphanumeric tokens.

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Length of the longest common subsequence, two-row dynamic program.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Harmonic mean of LCS precision (over the prediction) and recall (over the
/// reference). Zero when either side has no tokens.
pub fn rouge_l_f1(prediction: &str, reference: &str) -> f64 {
    let pred = tokenize(prediction);
    let refs = tokenize(reference);
    if pred.is_empty() || refs.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&pred, &refs) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let precision = lcs / pred.len() as f64;
    let recall = lcs / refs.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
