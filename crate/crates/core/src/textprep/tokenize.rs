use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bundled English stopword list, one token per line.
pub const ENGLISH_STOPWORDS_V1: &str = include_str!("../../data/stopwords_en_v1.txt");

/// Ordered, lowercase tokens that survived normalization.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS_V1)
    }

    /// One token per line; blank lines and surrounding whitespace ignored.
    pub fn parse(list: &str) -> Self {
        let words = list
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Stopwords { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl FromIterator<String> for Stopwords {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Stopwords {
            words: iter.into_iter().map(|w| w.to_lowercase()).collect(),
        }
    }
}

fn in_alphabet(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\''
}

/// Lowercases and splits on maximal runs of characters outside `[a-z0-9']`.
/// A trailing possessive `'s` and any leading or trailing apostrophes are
/// removed from each token.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !in_alphabet(c))
        .filter_map(|raw| {
            let mut token = raw.trim_matches('\'');
            while let Some(rest) = token.strip_suffix("'s") {
                token = rest.trim_matches('\'');
            }
            (!token.is_empty()).then(|| token.to_string())
        })
        .collect()
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u'))
}

fn strip_plural(token: &str) -> &str {
    if let Some(rest) = token.strip_suffix("sses") {
        &token[..rest.len() + 2]
    } else if let Some(rest) = token.strip_suffix("ies") {
        &token[..rest.len() + 1]
    } else if token.len() > 1
        && token.ends_with('s')
        && !(token.ends_with("ss") || token.ends_with("is") || token.ends_with("us"))
    {
        &token[..token.len() - 1]
    } else {
        token
    }
}

/// Rule-ordered suffix stemmer.
///
/// Plural step (first match wins): `sses -> ss`, `ies -> i`, otherwise a
/// final `s` is dropped unless the token ends in `ss`, `is` or `us`.
/// Then `ing` or `ed` is dropped when the remaining stem contains a vowel,
/// ends in a letter or digit, and is itself left unchanged by the stemmer.
/// That last condition makes every output a fixed point.
pub fn stem(token: &str) -> String {
    let base = strip_plural(token);
    for suffix in ["ing", "ed"] {
        if let Some(rest) = base.strip_suffix(suffix) {
            let ends_clean = rest.chars().last().is_some_and(|c| c.is_ascii_alphanumeric());
            if has_vowel(rest) && ends_clean && stem(rest) == rest {
                return rest.to_string();
            }
        }
    }
    base.to_string()
}

/// Tokenize, drop stopwords, optionally stem, and drop tokens that stem into
/// a stopword. Survivor order is preserved.
pub fn preprocess(text: &str, stopwords: &Stopwords, stem_tokens: bool) -> TokenSequence {
    let tokens = tokenize(text)
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .map(|t| if stem_tokens { stem(&t) } else { t })
        .filter(|t| !stopwords.contains(t))
        .collect();
    TokenSequence { tokens }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn stems_worked_sentence() {
        let out = preprocess("Raised fair values, raising hopes.", &Stopwords::none(), true);
        assert_eq!(out.tokens, seq(&["rais", "fair", "value", "rais", "hope"]));
    }

    #[test]
    fn stopwords_then_stem() {
        let stop: Stopwords = ["the".to_string(), "of".to_string()].into_iter().collect();
        let out = preprocess("The company laid off tens of employees.", &stop, true);
        assert_eq!(out.tokens, seq(&["company", "laid", "off", "ten", "employee"]));
    }

    #[test]
    fn empty_text() {
        assert!(preprocess("", &Stopwords::english(), true).is_empty());
        assert!(preprocess("  ,;!  ", &Stopwords::english(), true).is_empty());
    }

    #[test]
    fn plural_rules() {
        assert_eq!(stem("dresses"), "dress");
        assert_eq!(stem("companies"), "compani");
        assert_eq!(stem("class"), "class");
        assert_eq!(stem("analysis"), "analysis");
        assert_eq!(stem("bonus"), "bonus");
        assert_eq!(stem("shares"), "share");
        assert_eq!(stem("s"), "s");
    }

    #[test]
    fn ing_ed_rules() {
        assert_eq!(stem("raising"), "rais");
        assert_eq!(stem("signed"), "sign");
        assert_eq!(stem("ring"), "ring");
        assert_eq!(stem("bed"), "bed");
        // "seed" would itself shrink further, so "seeded" is kept whole.
        assert_eq!(stem("seeded"), "seeded");
        assert_eq!(stem("based"), "based");
    }

    #[test]
    fn tokenizer_alphabet() {
        assert_eq!(
            tokenize("Neste Oil's 7,200 tons -- don't 'quote' M-REAL"),
            seq(&["neste", "oil", "7", "200", "tons", "don't", "quote", "m", "real"])
        );
    }

    #[test]
    fn bundled_list_has_thirty_words() {
        let stop = Stopwords::english();
        assert_eq!(stop.len(), 30);
        for w in ["yes", "in", "and", "the"] {
            assert!(stop.contains(w));
        }
    }

    proptest! {
        #[test]
        fn preprocess_is_idempotent(text in "[a-zA-Z0-9' ,.!-]{0,60}", stem_on in any::<bool>()) {
            let stop = Stopwords::english();
            let once = preprocess(&text, &stop, stem_on);
            let twice = preprocess(&once.join(), &stop, stem_on);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn suffix_heavy_words_are_fixed_points(word in "[a-z]{0,5}(s|es|ies|sses|ed|ing|eds|ings){1,3}") {
            let once = stem(&word);
            prop_assert_eq!(stem(&once), once);
        }

        #[test]
        fn tokens_respect_alphabet_and_stopwords(text in "\\PC{0,80}") {
            let stop = Stopwords::english();
            for t in preprocess(&text, &stop, true).iter() {
                prop_assert!(!t.is_empty() && t.chars().all(in_alphabet));
                prop_assert!(!stop.contains(t));
            }
        }
    }
}
