//! Edit-distance, n-gram and frame-similarity metrics over sequences.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::vq::TokenSequence;

/// Default maximum n-gram order for [`speech_bleu`] on prosody tokens.
pub const DEFAULT_BLEU_MAX_N: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub distance: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

/// Unit-cost edit distance from `reference` to `hypothesis`.
///
/// The operation counts come from one optimal alignment; the backtrace
/// prefers substitution (or match), then deletion, then insertion.
pub fn levenshtein<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditCounts {
    let (n, m) = (reference.len(), hypothesis.len());
    let width = m + 1;
    let mut table = vec![0usize; (n + 1) * width];
    table.iter_mut().take(width).enumerate().for_each(|(j, v)| *v = j);
    for i in 1..=n {
        table[i * width] = i;
        for j in 1..=m {
            let sub = table[(i - 1) * width + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = table[(i - 1) * width + j] + 1;
            let ins = table[i * width + j - 1] + 1;
            table[i * width + j] = sub.min(del).min(ins);
        }
    }

    let mut counts = EditCounts { distance: table[n * width + m], ..Default::default() };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = table[i * width + j];
        if i > 0 && j > 0 {
            let mismatch = reference[i - 1] != hypothesis[j - 1];
            if here == table[(i - 1) * width + j - 1] + usize::from(mismatch) {
                counts.substitutions += usize::from(mismatch);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == table[(i - 1) * width + j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    counts
}

/// How transcripts are split into units for error-rate computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextUnit {
    /// Whitespace-separated words (WER).
    Word,
    /// Unicode scalar values other than whitespace (CER).
    Char,
}

/// NFKC, lowercase (word mode only), drop punctuation, collapse whitespace.
pub fn normalize_transcript(text: &str, unit: TextUnit) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.nfkc() {
        if c.general_category_group() == GeneralCategoryGroup::Punctuation {
            continue;
        }
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        match unit {
            TextUnit::Word => out.extend(c.to_lowercase()),
            TextUnit::Char => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRate {
    /// `100 * distance / reference_len`.
    pub percent: f64,
    pub counts: EditCounts,
    pub reference_len: usize,
}

/// Word or character error rate in percent.
pub fn error_rate(reference: &str, hypothesis: &str, unit: TextUnit) -> Result<ErrorRate> {
    let r = normalize_transcript(reference, unit);
    let h = normalize_transcript(hypothesis, unit);
    let counts = match unit {
        TextUnit::Word => {
            let rw: Vec<&str> = r.split(' ').filter(|w| !w.is_empty()).collect();
            let hw: Vec<&str> = h.split(' ').filter(|w| !w.is_empty()).collect();
            if rw.is_empty() {
                return Err(Error::EmptyReference);
            }
            (levenshtein(&rw, &hw), rw.len())
        }
        TextUnit::Char => {
            let rc: Vec<char> = r.chars().filter(|c| !c.is_whitespace()).collect();
            let hc: Vec<char> = h.chars().filter(|c| !c.is_whitespace()).collect();
            if rc.is_empty() {
                return Err(Error::EmptyReference);
            }
            (levenshtein(&rc, &hc), rc.len())
        }
    };
    let (counts, reference_len) = counts;
    Ok(ErrorRate { percent: 100.0 * counts.distance as f64 / reference_len as f64, counts, reference_len })
}

pub fn wer(reference: &str, hypothesis: &str) -> Result<ErrorRate> {
    error_rate(reference, hypothesis, TextUnit::Word)
}

pub fn cer(reference: &str, hypothesis: &str) -> Result<ErrorRate> {
    error_rate(reference, hypothesis, TextUnit::Char)
}

/// Normalized edit similarity `1 - lev(a, b) / max(|a|, |b|)`; two empty
/// sequences score 1.
pub fn speech_token_distance(a: &TokenSequence, b: &TokenSequence) -> Result<f64> {
    if a.k() != b.k() {
        return Err(Error::CodebookMismatch(a.k(), b.k()));
    }
    let longest = a.len().max(b.len());
    if longest == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - levenshtein(a.tokens(), b.tokens()).distance as f64 / longest as f64)
}

fn ngram_counts<T: Ord>(seq: &[T], n: usize) -> BTreeMap<&[T], usize> {
    let mut counts = BTreeMap::new();
    if seq.len() >= n {
        for g in seq.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU over symbol sequences.
///
/// Geometric mean of clipped n-gram precisions for `n = 1..=max_n` times the
/// brevity penalty `exp(min(0, 1 - |ref| / |hyp|))`. An order with no
/// clipped matches uses `(0 + 1) / (total + 1)`.
pub fn speech_bleu<T: Ord>(reference: &[T], hypothesis: &[T], max_n: usize) -> Result<f64> {
    if max_n == 0 {
        return Err(Error::InvalidParameter("BLEU max_n must be at least 1".into()));
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let hyp = ngram_counts(hypothesis, n);
        let refs = ngram_counts(reference, n);
        let total: usize = hyp.values().sum();
        let matched: usize = hyp.iter().map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0))).sum();
        let precision = if matched == 0 {
            1.0 / (total + 1) as f64
        } else {
            matched as f64 / total as f64
        };
        log_sum += libm::log(precision);
    }
    let ratio = reference.len() as f64 / hypothesis.len() as f64;
    let brevity = libm::exp((1.0 - ratio).min(0.0));
    Ok(brevity * libm::exp(log_sum / max_n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (libm::sqrt(na) * libm::sqrt(nb))
    }
}

/// Greedy max-cosine matching between reference and hypothesis frames.
///
/// Precision averages, over hypothesis frames, the best similarity to any
/// reference frame; recall does the converse. Frames with zero norm have
/// similarity 0 to everything.
pub fn speech_bert_score(reference: &FeatureMatrix, hypothesis: &FeatureMatrix) -> Result<BertScore> {
    if reference.cols() != hypothesis.cols() {
        return Err(Error::DimensionMismatch(reference.cols(), hypothesis.cols()));
    }
    let (nr, nh) = (reference.rows(), hypothesis.rows());
    if nr == 0 || nh == 0 {
        return Err(Error::EmptyMatrix { rows: nr.min(nh), cols: reference.cols() });
    }
    let mut best_for_ref = vec![f64::NEG_INFINITY; nr];
    let mut precision_sum = 0.0;
    for h in hypothesis.iter_rows() {
        let mut best = f64::NEG_INFINITY;
        for (i, r) in reference.iter_rows().enumerate() {
            let s = cosine(r, h);
            best = best.max(s);
            best_for_ref[i] = best_for_ref[i].max(s);
        }
        precision_sum += best;
    }
    let precision = precision_sum / nh as f64;
    let recall = best_for_ref.iter().sum::<f64>() / nr as f64;
    let f1 = if precision + recall <= 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(BertScore { precision, recall, f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSource;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn kitten_sitting() {
        let c = levenshtein(&chars("kitten"), &chars("sitting"));
        assert_eq!(c.distance, 3);
        assert_eq!((c.substitutions, c.insertions, c.deletions), (2, 1, 0));
    }

    #[test]
    fn boundary_cases() {
        assert_eq!(levenshtein(&chars("abc"), &chars("abc")).distance, 0);
        let c = levenshtein::<char>(&[], &chars("abcd"));
        assert_eq!((c.distance, c.insertions), (4, 4));
        let c = levenshtein::<char>(&chars("ab"), &[]);
        assert_eq!((c.distance, c.deletions), (2, 2));
    }

    #[test]
    fn backtrace_prefers_substitution() {
        // "ab" -> "ba" can be 2 substitutions or one deletion + one insertion
        let c = levenshtein(&chars("ab"), &chars("ba"));
        assert_eq!((c.substitutions, c.deletions, c.insertions), (2, 0, 0));
    }

    #[test]
    fn word_and_char_error_rates() {
        assert_eq!(wer("the cat sat", "the cat sat").unwrap().percent, 0.0);
        let r = wer("a b c", "a x c").unwrap();
        assert!((r.percent - 100.0 / 3.0).abs() < 1e-12);
        let r = cer("ねこ", "ねこだ").unwrap();
        assert_eq!(r.percent, 50.0);
        assert_eq!(r.counts.insertions, 1);
        assert_eq!(wer("  ...  ", "x"), Err(Error::EmptyReference));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_transcript("Hello,   World!", TextUnit::Word), "hello world");
        assert_eq!(wer("The Cat, sat.", "the cat sat").unwrap().percent, 0.0);
        // full-width letters fold under NFKC; char mode keeps case
        assert_eq!(normalize_transcript("ＡＢ。", TextUnit::Char), "AB");
        assert_eq!(cer("ね こ", "ねこ").unwrap().percent, 0.0);
    }

    fn tokens(v: &[u32]) -> TokenSequence {
        TokenSequence::new(v.to_vec(), 10, "u".into()).unwrap()
    }

    #[test]
    fn token_distance() {
        assert_eq!(speech_token_distance(&tokens(&[1, 2, 3]), &tokens(&[1, 2, 3])).unwrap(), 1.0);
        assert_eq!(speech_token_distance(&tokens(&[1, 2]), &tokens(&[3, 4])).unwrap(), 0.0);
        assert_eq!(speech_token_distance(&tokens(&[1, 2, 3, 4]), &tokens(&[1, 2, 9, 4])).unwrap(), 0.75);
        assert_eq!(speech_token_distance(&tokens(&[]), &tokens(&[])).unwrap(), 1.0);
        let other = TokenSequence::new(vec![1], 20, "v".into()).unwrap();
        assert_eq!(speech_token_distance(&tokens(&[1]), &other), Err(Error::CodebookMismatch(10, 20)));
    }

    #[test]
    fn bleu_examples() {
        assert_eq!(speech_bleu(&[1, 2, 3, 4], &[1, 2, 3, 4], 2).unwrap(), 1.0);
        assert_eq!(speech_bleu::<u32>(&[1, 2, 3], &[], 2).unwrap(), 0.0);
        // unigrams 3/3, bigrams 2/2, brevity exp(1 - 4/3)
        let got = speech_bleu(&[1, 2, 3, 4], &[1, 2, 3], 2).unwrap();
        assert!((got - libm::exp(1.0 - 4.0 / 3.0)).abs() < 1e-12);
        // no bigram matches: sqrt(2/2 * 1/(1+1)); lengths equal so no penalty
        let got = speech_bleu(&[1, 2], &[2, 1], 2).unwrap();
        assert!((got - libm::sqrt(0.5)).abs() < 1e-12);
        assert!(speech_bleu(&[1], &[1], 0).is_err());
    }

    /// Clipped-count BLEU computed by listing every n-gram position.
    fn bleu_oracle(r: &[u32], h: &[u32], max_n: usize) -> f64 {
        if h.is_empty() {
            return 0.0;
        }
        let mut logp = 0.0;
        for n in 1..=max_n {
            let hg: Vec<&[u32]> = if h.len() >= n { h.windows(n).collect() } else { Vec::new() };
            let rg: Vec<&[u32]> = if r.len() >= n { r.windows(n).collect() } else { Vec::new() };
            let mut used = vec![false; rg.len()];
            let mut matched = 0;
            for g in &hg {
                if let Some(pos) = rg.iter().enumerate().position(|(i, x)| !used[i] && x == g) {
                    used[pos] = true;
                    matched += 1;
                }
            }
            let p = if matched == 0 { 1.0 / (hg.len() + 1) as f64 } else { matched as f64 / hg.len() as f64 };
            logp += libm::log(p);
        }
        let bp = if h.len() >= r.len() { 1.0 } else { libm::exp(1.0 - r.len() as f64 / h.len() as f64) };
        bp * libm::exp(logp / max_n as f64)
    }

    fn matrix(rows: usize, cols: usize, v: Vec<f32>) -> FeatureMatrix {
        FeatureMatrix::new(rows, cols, v, FeatureSource::SslLayer9, 0.02).unwrap()
    }

    #[test]
    fn bert_score_identity_and_negation() {
        let r = matrix(3, 2, vec![1.0, 0.0, 0.5, 0.5, 0.0, 2.0]);
        let s = speech_bert_score(&r, &r).unwrap();
        assert!((s.f1 - 1.0).abs() < 1e-12);
        let single = matrix(1, 3, vec![1.0, -2.0, 0.5]);
        let neg = matrix(1, 3, vec![-1.0, 2.0, -0.5]);
        let s = speech_bert_score(&single, &neg).unwrap();
        assert!((s.precision + 1.0).abs() < 1e-12 && (s.recall + 1.0).abs() < 1e-12);
        assert_eq!(s.f1, 0.0);
    }

    #[test]
    fn bert_score_zero_norm_frames() {
        let r = matrix(2, 2, vec![0.0, 0.0, 1.0, 0.0]);
        let h = matrix(1, 2, vec![0.0, 0.0]);
        let s = speech_bert_score(&r, &h).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let bad = matrix(1, 3, vec![0.0; 3]);
        assert_eq!(speech_bert_score(&r, &bad), Err(Error::DimensionMismatch(2, 3)));
    }

    #[test]
    fn bert_score_matches_double_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let r = matrix(5, 3, (0..15).map(|_| rng.random_range(-1.0f32..1.0)).collect());
            let h = matrix(4, 3, (0..12).map(|_| rng.random_range(-1.0f32..1.0)).collect());
            let sim = |a: &[f32], b: &[f32]| {
                let dot: f64 = (0..3).map(|k| a[k] as f64 * b[k] as f64).sum();
                let na: f64 = (0..3).map(|k| (a[k] as f64).powi(2)).sum::<f64>().sqrt();
                let nb: f64 = (0..3).map(|k| (b[k] as f64).powi(2)).sum::<f64>().sqrt();
                dot / (na * nb)
            };
            let mut p = 0.0;
            for j in 0..4 {
                p += (0..5).map(|i| sim(r.row(i), h.row(j))).fold(f64::MIN, f64::max);
            }
            p /= 4.0;
            let mut rc = 0.0;
            for i in 0..5 {
                rc += (0..4).map(|j| sim(r.row(i), h.row(j))).fold(f64::MIN, f64::max);
            }
            rc /= 5.0;
            let f = if p + rc <= 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
            let s = speech_bert_score(&r, &h).unwrap();
            assert!((s.precision - p).abs() < 1e-6 && (s.recall - rc).abs() < 1e-6 && (s.f1 - f).abs() < 1e-6);
        }
    }

    #[test]
    fn bert_precision_ignores_hypothesis_frame_order() {
        let r = matrix(3, 2, vec![1.0, 0.2, -0.3, 0.9, 0.4, 0.4]);
        let h = matrix(3, 2, vec![0.1, 1.0, 1.0, -1.0, 0.5, 0.2]);
        let shuffled = matrix(3, 2, vec![0.5, 0.2, 0.1, 1.0, 1.0, -1.0]);
        let a = speech_bert_score(&r, &h).unwrap();
        let b = speech_bert_score(&r, &shuffled).unwrap();
        assert!((a.precision - b.precision).abs() < 1e-15);
    }

    fn seq() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..4, 0..=8)
    }

    proptest! {
        #[test]
        fn token_distance_is_bounded_and_symmetric(a in proptest::collection::vec(0u32..10, 0..20), b in proptest::collection::vec(0u32..10, 0..20)) {
            let d = speech_token_distance(&tokens(&a), &tokens(&b)).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, speech_token_distance(&tokens(&b), &tokens(&a)).unwrap());
        }

        #[test]
        fn bleu_matches_oracle(r in proptest::collection::vec(0u32..4, 0..12), h in proptest::collection::vec(0u32..4, 0..12), n in 1usize..=4) {
            let got = speech_bleu(&r, &h, n).unwrap();
            prop_assert!((got - bleu_oracle(&r, &h, n)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&got));
        }

        #[test]
        fn bleu_of_identity_is_one(r in proptest::collection::vec(0u32..6, 4..30), n in 1usize..=4) {
            prop_assert!((speech_bleu(&r, &r, n).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn edit_counts_add_up(a in seq(), b in seq()) {
            let c = levenshtein(&a, &b);
            prop_assert_eq!(c.distance, c.substitutions + c.insertions + c.deletions);
            prop_assert_eq!(a.len() + c.insertions, b.len() + c.deletions);
        }

        #[test]
        fn wer_of_identical_text_is_zero(words in proptest::collection::vec("[a-zA-Z]{1,6}", 1..8)) {
            let text = words.join(" ");
            prop_assert_eq!(wer(&text, &text).unwrap().percent, 0.0);
            prop_assert_eq!(wer(&text, &text.to_uppercase()).unwrap().percent, 0.0);
        }
    }
}
