//! Deterministic, streaming lexical interventions for bilingual pretraining
//! corpora: dictionary-driven word substitution, domain selection via
//! k-means over document embeddings, and ratio-controlled corpus mixing.

pub mod cluster;
pub mod compose;
pub mod corpus;
pub mod error;
pub mod intervene;
pub mod lexicon;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod text;

pub use cluster::{assign, kmeans_fit, ClusterModel, EmbeddingMatrix, KMeansParams};
pub use compose::{budget_mix, select_domain, select_non_domain, select_uniform, CorpusPartition, DomainSource, HrShare, InterventionPolicy, Selector, Strategy};
pub use corpus::{Document, DomainTag, Record, Role};
pub use error::{Error, Result};
pub use intervene::{replace, Ratio, Replacement, ReplacementOutcome, Replacer};
pub use lexicon::{load_lexicon, BilingualLexicon, LexiconEntry, LoadSummary};
pub use rng::{derive_doc_seed, SplitMix64};
pub use text::{normalize, segment_words, WordSpan};
pub use scalar::Scalar;
pub use stats::{coverage, measure_replacements, replacement_curve, ReplacementCurve, ReplacementReport};

pub type ClusterModel32 = ClusterModel<f32>;
pub type ClusterModel64 = ClusterModel<f64>;
pub type EmbeddingMatrix32 = EmbeddingMatrix<f32>;
pub type EmbeddingMatrix64 = EmbeddingMatrix<f64>;
