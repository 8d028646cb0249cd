//! Word segmentation and the lookup normalization shared by the lexicon and
//! the replacer.

use std::ops::Range;

use unicode_general_category::{get_general_category, GeneralCategory};

/// True for characters in any Unicode punctuation category (`P*`).
pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

fn trim_punctuation(s: &str) -> &str {
    s.trim_matches(is_punctuation)
}

/// Lookup form of a word: Unicode lowercase, leading and trailing
/// punctuation removed. No stemming.
pub fn normalize(word: &str) -> String {
    let lowered = word.to_lowercase();
    let trimmed = trim_punctuation(&lowered);
    if trimmed.len() == lowered.len() {
        lowered
    } else {
        trimmed.to_owned()
    }
}

/// Byte span of one word inside its text.
///
/// The span excludes any leading or trailing punctuation of the whitespace
/// run it came from; that punctuation stays in the text untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordSpan {
    pub start: usize,
    pub end: usize,
}

impl WordSpan {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.range()]
    }
}

/// Splits `text` into words: maximal non-whitespace runs with punctuation
/// trimmed from both ends. Runs made only of punctuation produce no word.
pub fn segment_words(text: &str) -> Vec<WordSpan> {
    let mut words = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(start) = run_start.take() {
                push_trimmed(text, start, i, &mut words);
            }
        } else if run_start.is_none() {
            run_start = Some(i);
        }
    }
    if let Some(start) = run_start {
        push_trimmed(text, start, text.len(), &mut words);
    }
    words
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<WordSpan>) {
    let run = &text[start..end];
    let lead = run.len() - run.trim_start_matches(is_punctuation).len();
    let core = trim_punctuation(run);
    if !core.is_empty() {
        let s = start + lead;
        out.push(WordSpan {
            start: s,
            end: s + core.len(),
        });
    }
}
