//! Lexical replacement of words by dictionary translations.
//!
//! For a document of `n` words, let `R` be the positions whose normalized
//! form is in the lexicon. A replacement at ratio `r` substitutes
//! `k_actual = min(floor(r * n), |R|)` positions chosen uniformly without
//! replacement from `R`, each by a translation drawn uniformly from its
//! entry. Everything outside the chosen word spans is left byte-identical.

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::lexicon::BilingualLexicon;
use crate::rng::{mix64, SplitMix64};
use crate::text::WordSpan;

/// A ratio in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Ratio(f64);

impl Ratio {
    pub const ZERO: Ratio = Ratio(0.0);
    pub const ONE: Ratio = Ratio(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Argument(format!("ratio must be in [0, 1], got {value}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `floor(self * n)`, tolerant of representation error in the product
    /// (0.29 * 100 must give 29).
    pub fn of(self, n: usize) -> usize {
        ((self.0 * n as f64 + 1e-9).floor() as usize).min(n)
    }
}

impl TryFrom<f64> for Ratio {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Ratio::new(value)
    }
}

impl From<Ratio> for f64 {
    fn from(r: Ratio) -> f64 {
        r.0
    }
}

/// One substitution performed in a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    /// Word index within the document.
    pub index: usize,
    pub original: String,
    pub substitute: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementOutcome {
    pub document: Document,
    pub n_words: usize,
    /// Words whose normalized form is in the lexicon.
    pub n_covered: usize,
    pub k_target: usize,
    pub k_actual: usize,
    /// Sorted by word index.
    pub replacements: Vec<Replacement>,
    pub ratio: Ratio,
    /// Identifies the (lexicon, ratio) configuration that produced this.
    pub config: u64,
}

impl ReplacementOutcome {
    pub fn actual_ratio(&self) -> f64 {
        if self.n_words == 0 {
            0.0
        } else {
            self.k_actual as f64 / self.n_words as f64
        }
    }
}

/// A document segmented once and checked against the lexicon, ready to be
/// replaced at any ratio.
#[derive(Debug, Clone)]
pub struct PreparedDocument<'d> {
    doc: &'d Document,
    words: Vec<WordSpan>,
    covered: Vec<usize>,
}

impl PreparedDocument<'_> {
    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_covered(&self) -> usize {
        self.covered.len()
    }
}

/// Replaces words using one lexicon.
#[derive(Debug)]
pub struct Replacer<'a> {
    lexicon: &'a BilingualLexicon,
    lexicon_fingerprint: u64,
}

impl<'a> Replacer<'a> {
    pub fn new(lexicon: &'a BilingualLexicon) -> Self {
        Self {
            lexicon,
            lexicon_fingerprint: lexicon.fingerprint(),
        }
    }

    pub fn lexicon(&self) -> &BilingualLexicon {
        self.lexicon
    }

    /// Fingerprint of `(lexicon, ratio)`.
    pub fn config_fingerprint(&self, ratio: Ratio) -> u64 {
        mix64(self.lexicon_fingerprint ^ mix64(ratio.get().to_bits()))
    }

    pub fn prepare<'d>(&self, doc: &'d Document) -> PreparedDocument<'d> {
        let words = doc.words();
        let covered = words
            .iter()
            .enumerate()
            .filter(|(_, w)| self.lexicon.contains(w.slice(&doc.text)))
            .map(|(i, _)| i)
            .collect();
        PreparedDocument {
            doc,
            words,
            covered,
        }
    }

    pub fn replace(&self, doc: &Document, ratio: Ratio, seed: u64) -> ReplacementOutcome {
        self.apply(&self.prepare(doc), ratio, seed)
    }

    /// Positions are picked by a partial Fisher–Yates shuffle of the covered
    /// positions; after each pick the translation is drawn from the same
    /// generator. The picks at a smaller ratio are therefore a prefix of the
    /// picks at a larger one.
    pub fn apply(&self, prepared: &PreparedDocument<'_>, ratio: Ratio, seed: u64) -> ReplacementOutcome {
        let text = &prepared.doc.text;
        let n_words = prepared.words.len();
        let k_target = ratio.of(n_words);
        let k_actual = k_target.min(prepared.covered.len());

        let mut rng = SplitMix64::new(seed);
        let mut pool = prepared.covered.clone();
        let mut replacements = Vec::with_capacity(k_actual);
        for i in 0..k_actual {
            let j = i + rng.index(pool.len() - i);
            pool.swap(i, j);
            let index = pool[i];
            let original = prepared.words[index].slice(text);
            let entry = self
                .lexicon
                .lookup(original)
                .expect("covered word is in the lexicon");
            let translations = entry.translations();
            let chosen = &translations[rng.index(translations.len())];
            replacements.push(Replacement {
                index,
                original: original.to_owned(),
                substitute: transfer_case(original, chosen),
            });
        }
        replacements.sort_unstable_by_key(|r| r.index);

        let mut document = prepared.doc.clone();
        if !replacements.is_empty() {
            let mut out = String::with_capacity(text.len() + 16 * replacements.len());
            let mut cursor = 0;
            for r in &replacements {
                let span = prepared.words[r.index];
                out.push_str(&text[cursor..span.start]);
                out.push_str(&r.substitute);
                cursor = span.end;
            }
            out.push_str(&text[cursor..]);
            document.text = out;
        }

        ReplacementOutcome {
            document,
            n_words,
            n_covered: prepared.covered.len(),
            k_target,
            k_actual,
            replacements,
            ratio,
            config: self.config_fingerprint(ratio),
        }
    }
}

/// Uppercases the first letter of `substitute` when `original` starts with
/// an uppercase letter. Nothing else about case is transferred.
pub fn transfer_case(original: &str, substitute: &str) -> String {
    let starts_upper = original.chars().next().is_some_and(char::is_uppercase);
    let mut chars = substitute.chars();
    match chars.next() {
        Some(first) if starts_upper && !first.is_uppercase() => {
            first.to_uppercase().chain(chars).collect()
        }
        _ => substitute.to_owned(),
    }
}

/// Replaces words of one document. Prefer [`Replacer`] when processing many
/// documents: this fingerprints the lexicon on every call.
pub fn replace(doc: &Document, lexicon: &BilingualLexicon, ratio: Ratio, seed: u64) -> ReplacementOutcome {
    Replacer::new(lexicon).replace(doc, ratio, seed)
}
