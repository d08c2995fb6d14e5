//! Small text utilities shared by the mock heuristics.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

static STOPWORDS_SRC: &str = include_str!("../../data/stopwords.txt");

pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_SRC.lines().filter(|l| !l.starts_with('#')).flat_map(str::split_whitespace).collect()
    })
}

pub fn is_stopword(w: &str) -> bool {
    stopwords().contains(w.to_lowercase().as_str())
}

/// Token with its character offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn char_offsets(text: &str) -> Vec<usize> {
    // byte offset -> char index
    let mut map = vec![0; text.len() + 1];
    let mut ci = 0;
    for (bi, ch) in text.char_indices() {
        for slot in map.iter_mut().skip(bi).take(ch.len_utf8()) {
            *slot = ci;
        }
        ci += 1;
    }
    map[text.len()] = ci;
    map
}

fn tokens_matching(text: &str, re: &Regex) -> Vec<Token> {
    let map = char_offsets(text);
    re.find_iter(text).map(|m| Token { text: m.as_str().to_string(), start: map[m.start()], end: map[m.end()] }).collect()
}

fn word_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r"[A-Za-z][A-Za-z'-]*").unwrap())
}

fn numeral_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r"\d+(?:[.,]\d+)*%?").unwrap())
}

/// Alphabetic words.
pub fn words(text: &str) -> Vec<Token> {
    tokens_matching(text, word_re())
}

/// Numerals, including decimal and percent forms.
pub fn numerals(text: &str) -> Vec<Token> {
    tokens_matching(text, numeral_re())
}

/// Lowercased content words.
pub fn keywords(text: &str) -> Vec<String> {
    words(text).into_iter().map(|t| t.text.to_lowercase()).filter(|w| w.len() > 2 && !is_stopword(w)).collect()
}

/// Rough stem for overlap counting.
pub fn stem(w: &str) -> &str {
    for suffix in ["ing", "ed", "es", "s"] {
        if w.len() > suffix.len() + 3 {
            if let Some(s) = w.strip_suffix(suffix) {
                return s;
            }
        }
    }
    w
}

/// Splits on `.`, `!` or `?` followed by whitespace or end of text.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        cur.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            push_trimmed(&mut out, &cur);
            cur.clear();
        }
    }
    push_trimmed(&mut out, &cur);
    out
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let t = s.split_whitespace().collect::<Vec<_>>().join(" ");
    if !t.is_empty() {
        out.push(t);
    }
}

/// Paragraphs separated by blank lines; each is a list of its lines.
pub fn paragraphs(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut cur: Vec<String> = Vec::new();
    for line in text.lines() {
        let l = line.trim();
        if l.is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(l.to_string());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// FNV-1a, 64 bit.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentence_split_keeps_decimals() {
        let s = sentences("61.9% of first class survived. Many died!  Why");
        assert_eq!(s, vec!["61.9% of first class survived.", "Many died!", "Why"]);
    }

    #[test]
    fn char_offsets_for_unicode() {
        let n = numerals("café 12 and 3.5%");
        assert_eq!((n[0].start, n[0].end), (5, 7));
        assert_eq!(n[1].text, "3.5%");
    }

    #[test]
    fn stopword_list_loaded() {
        assert!(is_stopword("The"));
        assert!(!is_stopword("women"));
        assert_eq!(keywords("The women on board"), vec!["women", "board"]);
    }
}
