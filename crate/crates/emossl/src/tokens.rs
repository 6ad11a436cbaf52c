//! Token files: one utterance per line, `utt_id<TAB>K<TAB>space-separated tokens`.

use std::path::Path;

use emossl_core::vq::TokenSequence;

use crate::error::{Error, Result};

pub fn format_tokens(seq: &TokenSequence) -> String {
    let tokens: Vec<String> = seq.tokens().iter().map(u32::to_string).collect();
    format!("{}\t{}\t{}", seq.utt_id(), seq.k(), tokens.join(" "))
}

pub fn parse_tokens(path: &Path, text: &str) -> Result<Vec<TokenSequence>> {
    let bad = |line: usize, msg: &str| Error::Report(format!("{}:{line}: {msg}", path.display()));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let [id, k, toks] = f[..] else {
            return Err(bad(i + 1, "expected utt_id, K and tokens separated by tabs"));
        };
        let k: usize = k.parse().map_err(|_| bad(i + 1, "K is not an integer"))?;
        let tokens: Vec<u32> = toks
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(i + 1, "token is not an integer"))?;
        out.push(TokenSequence::new(tokens, k, id.to_owned()).map_err(|e| Error::in_utterance(id, e))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let seqs = vec![
            TokenSequence::new(vec![3, 0, 199], 200, "u1".into()).unwrap(),
            TokenSequence::new(vec![], 200, "u2".into()).unwrap(),
        ];
        let text: String = seqs.iter().map(|s| format_tokens(s) + "\n").collect();
        assert_eq!(text, "u1\t200\t3 0 199\nu2\t200\t\n");
        assert_eq!(parse_tokens(Path::new("t"), &text).unwrap(), seqs);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(parse_tokens(Path::new("t"), "u\t4\t1 4\n").is_err());
        assert!(parse_tokens(Path::new("t"), "u\t4\n").is_err());
    }
}
