//! Replacement statistics: target-vs-actual ratios and lexicon coverage.
//!
//! The per-document actual ratio `k_actual / n_words` can never exceed the
//! document's own coverage, so raising the target past the coverage of a
//! corpus flattens the curve into a plateau.

use std::borrow::Borrow;
use std::io::{self, Write};

use serde::Serialize;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::intervene::{Ratio, ReplacementOutcome, Replacer};
use crate::lexicon::BilingualLexicon;
use crate::rng::derive_doc_seed;

/// Buckets of the per-document actual ratio histogram (0%..=100% by 1pp).
pub const HISTOGRAM_BUCKETS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementReport {
    pub config: u64,
    pub target_ratio: f64,
    pub n_docs: u64,
    /// Documents with at least one word; the per-document means run over these.
    pub n_nonempty_docs: u64,
    pub n_words: u64,
    pub n_covered: u64,
    pub n_target: u64,
    pub n_replaced: u64,
    /// Unweighted mean over documents of `k_actual / n_words`.
    pub mean_actual_ratio: f64,
    /// `n_replaced / n_words`.
    pub token_weighted_actual_ratio: f64,
    /// Share of word occurrences in the lexicon.
    pub coverage: f64,
    /// Unweighted mean over documents of per-document coverage.
    pub mean_doc_coverage: f64,
    pub min_doc_length: u64,
    /// Documents per 1pp bucket of actual ratio.
    pub per_doc_actual: Vec<u64>,
}

/// Constant-memory accumulator behind [`ReplacementReport`].
#[derive(Debug, Clone)]
pub struct ReplacementStats {
    config: Option<(u64, f64)>,
    n_docs: u64,
    n_nonempty_docs: u64,
    n_words: u64,
    n_covered: u64,
    n_target: u64,
    n_replaced: u64,
    sum_ratio: f64,
    sum_doc_coverage: f64,
    min_doc_length: Option<u64>,
    histogram: [u64; HISTOGRAM_BUCKETS],
}

impl Default for ReplacementStats {
    fn default() -> Self {
        Self {
            config: None,
            n_docs: 0,
            n_nonempty_docs: 0,
            n_words: 0,
            n_covered: 0,
            n_target: 0,
            n_replaced: 0,
            sum_ratio: 0.0,
            sum_doc_coverage: 0.0,
            min_doc_length: None,
            histogram: [0; HISTOGRAM_BUCKETS],
        }
    }
}

fn bucket(ratio: f64) -> usize {
    ((ratio * 100.0 + 1e-9).floor() as usize).min(HISTOGRAM_BUCKETS - 1)
}

impl ReplacementStats {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_config(&mut self, config: (u64, f64)) -> Result<()> {
        match self.config {
            None => {
                self.config = Some(config);
                Ok(())
            }
            Some(c) if c.0 == config.0 => Ok(()),
            Some(c) => Err(Error::Validation(format!(
                "replacement outcomes from different configurations ({:016x} at r={} vs {:016x} at r={})",
                c.0, c.1, config.0, config.1
            ))),
        }
    }

    /// Adds the counts of one document directly.
    pub fn add_counts(&mut self, config: u64, ratio: Ratio, n_words: usize, n_covered: usize, k_target: usize, k_actual: usize) -> Result<()> {
        self.check_config((config, ratio.get()))?;
        self.n_docs += 1;
        self.n_words += n_words as u64;
        self.n_covered += n_covered as u64;
        self.n_target += k_target as u64;
        self.n_replaced += k_actual as u64;
        if n_words > 0 {
            let ratio = k_actual as f64 / n_words as f64;
            self.n_nonempty_docs += 1;
            self.sum_ratio += ratio;
            self.sum_doc_coverage += n_covered as f64 / n_words as f64;
            self.histogram[bucket(ratio)] += 1;
            let len = n_words as u64;
            self.min_doc_length = Some(self.min_doc_length.map_or(len, |m| m.min(len)));
        }
        Ok(())
    }

    pub fn add(&mut self, outcome: &ReplacementOutcome) -> Result<()> {
        self.add_counts(
            outcome.config,
            outcome.ratio,
            outcome.n_words,
            outcome.n_covered,
            outcome.k_target,
            outcome.k_actual,
        )
    }

    /// Combines two partial accumulators. Counts merge exactly; the float
    /// sums are only bit-stable if merges happen in a fixed order.
    pub fn merge(&mut self, other: &ReplacementStats) -> Result<()> {
        if let Some(c) = other.config {
            self.check_config(c)?;
        }
        self.n_docs += other.n_docs;
        self.n_nonempty_docs += other.n_nonempty_docs;
        self.n_words += other.n_words;
        self.n_covered += other.n_covered;
        self.n_target += other.n_target;
        self.n_replaced += other.n_replaced;
        self.sum_ratio += other.sum_ratio;
        self.sum_doc_coverage += other.sum_doc_coverage;
        self.min_doc_length = match (self.min_doc_length, other.min_doc_length) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        for (a, b) in self.histogram.iter_mut().zip(other.histogram.iter()) {
            *a += b;
        }
        Ok(())
    }

    pub fn report(&self) -> ReplacementReport {
        let per_doc = |sum: f64| if self.n_nonempty_docs == 0 { 0.0 } else { sum / self.n_nonempty_docs as f64 };
        let per_word = |n: u64| if self.n_words == 0 { 0.0 } else { n as f64 / self.n_words as f64 };
        let (config, target_ratio) = self.config.unwrap_or((0, 0.0));
        ReplacementReport {
            config,
            target_ratio,
            n_docs: self.n_docs,
            n_nonempty_docs: self.n_nonempty_docs,
            n_words: self.n_words,
            n_covered: self.n_covered,
            n_target: self.n_target,
            n_replaced: self.n_replaced,
            mean_actual_ratio: per_doc(self.sum_ratio),
            token_weighted_actual_ratio: per_word(self.n_replaced),
            coverage: per_word(self.n_covered),
            mean_doc_coverage: per_doc(self.sum_doc_coverage),
            min_doc_length: self.min_doc_length.unwrap_or(0),
            per_doc_actual: self.histogram.to_vec(),
        }
    }
}

/// Aggregates outcomes produced under a single (lexicon, ratio) configuration.
pub fn measure_replacements<O: Borrow<ReplacementOutcome>>(outcomes: impl IntoIterator<Item = O>) -> Result<ReplacementReport> {
    let mut stats = ReplacementStats::new();
    for o in outcomes {
        stats.add(o.borrow())?;
    }
    Ok(stats.report())
}

/// One point of a target-vs-actual curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub target: f64,
    pub mean_actual: f64,
    pub token_weighted_actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementCurve {
    pub points: Vec<CurvePoint>,
    pub coverage: f64,
    pub mean_doc_coverage: f64,
    pub n_docs: u64,
    pub n_words: u64,
}

impl ReplacementCurve {
    /// `target,mean_actual` rows with a header line.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "target,mean_actual")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.target, p.mean_actual)?;
        }
        Ok(())
    }
}

/// Streams documents once and replaces each at every target ratio, with the
/// same per-document seed for all targets.
pub struct CurveBuilder<'a> {
    replacer: Replacer<'a>,
    targets: Vec<Ratio>,
    global_seed: u64,
    per_target: Vec<ReplacementStats>,
}

impl<'a> CurveBuilder<'a> {
    pub fn new(lexicon: &'a BilingualLexicon, targets: &[f64], global_seed: u64) -> Result<Self> {
        let targets = targets.iter().map(|&t| Ratio::new(t)).collect::<Result<Vec<_>>>()?;
        if targets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Argument("curve targets must be sorted ascending".into()));
        }
        let per_target = vec![ReplacementStats::new(); targets.len()];
        Ok(Self {
            replacer: Replacer::new(lexicon),
            targets,
            global_seed,
            per_target,
        })
    }

    /// Per-target `(n_words, n_covered, k_target, k_actual)` for one document.
    pub fn evaluate(&self, doc: &Document) -> Vec<(usize, usize, usize, usize)> {
        let prepared = self.replacer.prepare(doc);
        let seed = derive_doc_seed(self.global_seed, doc.id);
        self.targets
            .iter()
            .map(|&t| {
                let o = self.replacer.apply(&prepared, t, seed);
                (o.n_words, o.n_covered, o.k_target, o.k_actual)
            })
            .collect()
    }

    /// Folds in the result of [`CurveBuilder::evaluate`].
    pub fn add_evaluated(&mut self, counts: &[(usize, usize, usize, usize)]) -> Result<()> {
        for ((stats, &t), &(n, c, kt, ka)) in self.per_target.iter_mut().zip(&self.targets).zip(counts) {
            stats.add_counts(self.replacer.config_fingerprint(t), t, n, c, kt, ka)?;
        }
        Ok(())
    }

    pub fn add(&mut self, doc: &Document) -> Result<()> {
        let counts = self.evaluate(doc);
        self.add_evaluated(&counts)
    }

    pub fn finish(self) -> Result<ReplacementCurve> {
        self.finish_with_reports().map(|(curve, _)| curve)
    }

    /// The curve together with the full report at each target.
    pub fn finish_with_reports(self) -> Result<(ReplacementCurve, Vec<ReplacementReport>)> {
        let reports: Vec<ReplacementReport> = self.per_target.iter().map(ReplacementStats::report).collect();
        let first = reports.first();
        if first.is_none_or(|r| r.n_docs == 0) && !self.targets.is_empty() {
            return Err(Error::Argument("replacement curve needs a non-empty corpus".into()));
        }
        let (coverage, mean_doc_coverage, n_docs, n_words) =
            first.map_or((0.0, 0.0, 0, 0), |r| (r.coverage, r.mean_doc_coverage, r.n_docs, r.n_words));
        let curve = ReplacementCurve {
            points: self
                .targets
                .iter()
                .zip(&reports)
                .map(|(t, r)| CurvePoint {
                    target: t.get(),
                    mean_actual: r.mean_actual_ratio,
                    token_weighted_actual: r.token_weighted_actual_ratio,
                })
                .collect(),
            coverage,
            mean_doc_coverage,
            n_docs,
            n_words,
        };
        Ok((curve, reports))
    }
}

pub fn replacement_curve<D: Borrow<Document>>(
    corpus: impl IntoIterator<Item = D>,
    lexicon: &BilingualLexicon,
    targets: &[f64],
    global_seed: u64,
) -> Result<ReplacementCurve> {
    let mut builder = CurveBuilder::new(lexicon, targets, global_seed)?;
    for doc in corpus {
        builder.add(doc.borrow())?;
    }
    builder.finish()
}

/// Occurrence counter behind [`coverage`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CoverageCounter {
    pub n_words: u64,
    pub n_covered: u64,
}

impl CoverageCounter {
    pub fn add(&mut self, doc: &Document, lexicon: &BilingualLexicon) {
        for w in doc.words() {
            self.n_words += 1;
            self.n_covered += lexicon.contains(w.slice(&doc.text)) as u64;
        }
    }

    pub fn coverage(&self) -> f64 {
        if self.n_words == 0 {
            0.0
        } else {
            self.n_covered as f64 / self.n_words as f64
        }
    }
}

/// Share of word occurrences whose normalized form is in the lexicon.
pub fn coverage<D: Borrow<Document>>(corpus: impl IntoIterator<Item = D>, lexicon: &BilingualLexicon) -> f64 {
    let mut counter = CoverageCounter::default();
    for doc in corpus {
        counter.add(doc.borrow(), lexicon);
    }
    if counter.n_words == 0 {
        log::warn!("coverage of an empty corpus is reported as 0");
    }
    counter.coverage()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Role;
    use crate::intervene::replace;
    use proptest::prelude::*;

    fn doc(id: u64, text: &str) -> Document {
        Document::new(id, "en", Role::Hr, text)
    }

    #[test]
    fn ten_words_five_replaced() {
        let lex = BilingualLexicon::from_pairs("en", "de", [("a", "x"), ("b", "y"), ("c", "z"), ("d", "u"), ("e", "v")]);
        let o = replace(&doc(1, "a b c d e f g h i j"), &lex, Ratio::new(0.5).unwrap(), 3);
        let r = measure_replacements([&o]).unwrap();
        assert_eq!(r.mean_actual_ratio, 0.5);
        assert_eq!(r.n_replaced, 5);
        assert_eq!(r.per_doc_actual[50], 1);
        assert_eq!(r.coverage, 0.5);
    }

    #[test]
    fn zero_ratio_stream() {
        let lex = BilingualLexicon::from_pairs("en", "de", [("a", "x")]);
        let outcomes: Vec<_> = (0..5).map(|i| replace(&doc(i, "a a b"), &lex, Ratio::ZERO, i)).collect();
        let r = measure_replacements(&outcomes).unwrap();
        assert_eq!((r.n_replaced, r.mean_actual_ratio), (0, 0.0));
        assert_eq!(r.per_doc_actual[0], 5);
    }

    #[test]
    fn mixed_configurations_rejected() {
        let lex = BilingualLexicon::from_pairs("en", "de", [("a", "x")]);
        let a = replace(&doc(1, "a b"), &lex, Ratio::new(0.5).unwrap(), 1);
        let b = replace(&doc(2, "a b"), &lex, Ratio::ONE, 1);
        assert!(matches!(measure_replacements([a, b]), Err(Error::Validation(_))));
    }

    #[test]
    fn coverage_counts_occurrences() {
        let lex = BilingualLexicon::from_pairs("en", "de", [("a", "x")]);
        assert_eq!(coverage([doc(1, "a b a c")], &lex), 0.5);
        let disjoint = BilingualLexicon::from_pairs("en", "de", [("zzz", "x")]);
        assert_eq!(coverage([doc(1, "a b a c")], &disjoint), 0.0);
        let full = BilingualLexicon::from_pairs("en", "de", [("a", "x"), ("b", "y"), ("c", "z")]);
        assert_eq!(coverage([doc(1, "A b, a c.")], &full), 1.0);
        assert_eq!(coverage(Vec::<Document>::new(), &full), 0.0);
    }

    #[test]
    fn full_coverage_curve_tracks_targets() {
        let vocab: Vec<String> = (0..50).map(|i| format!("w{i}")).collect();
        let lex = BilingualLexicon::from_pairs("en", "de", vocab.iter().map(|w| (w.as_str(), "t")));
        let docs: Vec<Document> = (0..200).map(|i| doc(i, &vocab[..20 + (i as usize % 30)].join(" "))).collect();
        let curve = replacement_curve(&docs, &lex, &[0.0, 0.25, 0.5, 1.0], 7).unwrap();
        for p in &curve.points {
            assert!(p.mean_actual <= p.target + 1e-12);
            assert!(p.target - p.mean_actual < 1.0 / 20.0, "{p:?}");
        }
        assert_eq!(curve.points[3].mean_actual, 1.0);
    }

    #[test]
    fn empty_lexicon_curve_is_flat() {
        let lex = BilingualLexicon::new("en", "de", "empty");
        let docs = vec![doc(1, "a b c"), doc(2, "d e")];
        let curve = replacement_curve(&docs, &lex, &[0.0, 0.5, 1.0], 7).unwrap();
        assert!(curve.points.iter().all(|p| p.mean_actual == 0.0));
    }

    #[test]
    fn curve_argument_errors() {
        let lex = BilingualLexicon::new("en", "de", "empty");
        assert!(replacement_curve(Vec::<Document>::new(), &lex, &[0.5], 1).is_err());
        assert!(replacement_curve([doc(1, "a")], &lex, &[0.5, 0.2], 1).is_err());
        assert!(replacement_curve([doc(1, "a")], &lex, &[1.5], 1).is_err());
    }

    #[test]
    fn csv_format() {
        let lex = BilingualLexicon::from_pairs("en", "de", [("a", "x")]);
        let curve = replacement_curve([doc(1, "a b")], &lex, &[0.0, 1.0], 1).unwrap();
        let mut out = Vec::new();
        curve.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "target,mean_actual\n0,0\n1,0.5\n");
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<Document>> {
        prop::collection::vec(prop::collection::vec(0usize..6, 0..30), 1..20).prop_map(|docs| {
            docs.into_iter()
                .enumerate()
                .map(|(i, ws)| {
                    let text: Vec<String> = ws.iter().map(|w| format!("w{w}")).collect();
                    doc(i as u64, &text.join(" "))
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn curve_laws(docs in corpus_strategy(), covered in prop::collection::vec(any::<bool>(), 6), seed in any::<u64>()) {
            let pairs: Vec<(String, &str)> = covered.iter().enumerate().filter(|(_, c)| **c).map(|(i, _)| (format!("w{i}"), "t")).collect();
            let lex = BilingualLexicon::from_pairs("en", "de", pairs.iter().map(|(a, b)| (a.as_str(), *b)));
            let targets: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
            let curve = replacement_curve(&docs, &lex, &targets, seed).unwrap();
            for w in curve.points.windows(2) {
                prop_assert!(w[0].mean_actual <= w[1].mean_actual);
                prop_assert!(w[0].token_weighted_actual <= w[1].token_weighted_actual);
            }
            for p in &curve.points {
                prop_assert!(p.token_weighted_actual <= curve.coverage + 1e-12);
                prop_assert!(p.mean_actual <= curve.mean_doc_coverage + 1e-12);
                prop_assert!(p.mean_actual <= p.target + 1e-12);
            }
        }

        #[test]
        fn merge_equals_sequential(docs in corpus_strategy(), split in 0usize..20) {
            let lex = BilingualLexicon::from_pairs("en", "de", [("w0", "x"), ("w3", "y")]);
            let replacer = Replacer::new(&lex);
            let outcomes: Vec<_> = docs.iter().map(|d| replacer.replace(d, Ratio::new(0.6).unwrap(), d.id)).collect();
            let split = split.min(outcomes.len());
            let mut left = ReplacementStats::new();
            let mut right = ReplacementStats::new();
            for o in &outcomes[..split] { left.add(o).unwrap(); }
            for o in &outcomes[split..] { right.add(o).unwrap(); }
            left.merge(&right).unwrap();
            let whole = measure_replacements(&outcomes).unwrap();
            let merged = left.report();
            prop_assert_eq!(merged.n_replaced, whole.n_replaced);
            prop_assert_eq!(merged.n_words, whole.n_words);
            prop_assert_eq!(&merged.per_doc_actual, &whole.per_doc_actual);
            prop_assert!((merged.mean_actual_ratio - whole.mean_actual_ratio).abs() < 1e-12);
        }
    }
}
