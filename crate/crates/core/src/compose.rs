//! Selection of the documents to intervene on and token-budgeted mixing of
//! the high- and low-resource streams.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cluster::{assign, ClusterModel, EmbeddingMatrix};
use crate::corpus::{token_count, Document, DomainTag, Record, Role};
use crate::error::{Error, Result};
use crate::intervene::Ratio;
use crate::rng::{stream_seed, SplitMix64, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// A random `mix_ratio` share of HR documents.
    #[default]
    Uniform,
    /// Only documents tagged `task`.
    Domain,
    /// Everything except documents tagged `task`.
    NonDomain,
    /// No intervention.
    None,
}

impl Strategy {
    pub fn needs_domain(self) -> bool {
        matches!(self, Strategy::Domain | Strategy::NonDomain)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Uniform => "uniform",
            Strategy::Domain => "domain",
            Strategy::NonDomain => "non-domain",
            Strategy::None => "none",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "domain" => Ok(Strategy::Domain),
            "non-domain" | "non_domain" => Ok(Strategy::NonDomain),
            "none" => Ok(Strategy::None),
            other => Err(Error::Argument(format!(
                "unknown strategy {other:?} (expected uniform, domain, non-domain or none)"
            ))),
        }
    }
}

/// Token share of HR data in the final mix, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HrShare(f64);

impl HrShare {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::Argument(format!("hr_share must be in (0, 1), got {value}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for HrShare {
    fn default() -> Self {
        Self(0.975)
    }
}

impl TryFrom<f64> for HrShare {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        HrShare::new(v)
    }
}

impl From<HrShare> for f64 {
    fn from(s: HrShare) -> f64 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterventionPolicy {
    pub strategy: Strategy,
    pub replacement_ratio: Ratio,
    /// Only used by [`Strategy::Uniform`]; the domain strategies intervene
    /// on their whole eligible subset.
    pub mix_ratio: Ratio,
    pub hr_share: HrShare,
    pub global_seed: u64,
}

impl Default for InterventionPolicy {
    fn default() -> Self {
        Self {
            strategy: Strategy::Uniform,
            replacement_ratio: Ratio::new(0.7).expect("valid"),
            mix_ratio: Ratio::new(0.9).expect("valid"),
            hr_share: HrShare::default(),
            global_seed: 0,
        }
    }
}

/// Resolves HR documents to task / non-task.
#[derive(Debug, Clone)]
pub enum DomainSource {
    /// Use each document's own `domain` field.
    Tags,
    /// Explicit per-id tags, e.g. derived from cluster assignments.
    Lookup(HashMap<u64, DomainTag>),
}

impl DomainSource {
    /// Tags every embedded document: `task` iff it is assigned to `domain_cluster`.
    pub fn from_clusters<T: Scalar>(
        emb: &EmbeddingMatrix<T>,
        model: &ClusterModel<T>,
        domain_cluster: usize,
    ) -> Result<Self> {
        Ok(Self::from_assignments(&assign(emb, model)?, domain_cluster))
    }

    pub fn from_assignments(assignments: &[(u64, usize)], domain_cluster: usize) -> Self {
        DomainSource::Lookup(
            assignments
                .iter()
                .map(|&(id, c)| {
                    let tag = if c == domain_cluster { DomainTag::Task } else { DomainTag::NonTask };
                    (id, tag)
                })
                .collect(),
        )
    }

    pub fn resolve(&self, doc: &Document) -> Option<DomainTag> {
        match self {
            DomainSource::Tags => doc.domain,
            DomainSource::Lookup(map) => map.get(&doc.id).copied(),
        }
    }
}

/// Where one document goes in the composed corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Intervened,
    UntouchedHr,
    Lr,
}

/// Per-document routing decision for one strategy. A pure function of the
/// document, so it can be evaluated in any order or in parallel.
#[derive(Debug, Clone)]
pub struct Selector {
    strategy: Strategy,
    mix_ratio: Ratio,
    global_seed: u64,
    domain: Option<DomainSource>,
}

impl Selector {
    pub fn new(strategy: Strategy, mix_ratio: Ratio, global_seed: u64, domain: Option<DomainSource>) -> Result<Self> {
        if strategy.needs_domain() && domain.is_none() {
            return Err(Error::Validation(format!(
                "strategy {strategy} needs a domain source (cluster assignments or document domain tags)"
            )));
        }
        Ok(Self {
            strategy,
            mix_ratio,
            global_seed,
            domain,
        })
    }

    pub fn uniform(mix_ratio: Ratio, global_seed: u64) -> Self {
        Self::new(Strategy::Uniform, mix_ratio, global_seed, None).expect("uniform needs no domain")
    }

    pub fn for_policy(policy: &InterventionPolicy, domain: Option<DomainSource>) -> Result<Self> {
        Self::new(policy.strategy, policy.mix_ratio, policy.global_seed, domain)
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// `Err(id)` when a domain strategy cannot resolve the document.
    pub fn route(&self, doc: &Document) -> std::result::Result<Route, u64> {
        if doc.role == Role::Lr {
            return Ok(Route::Lr);
        }
        let intervene = match self.strategy {
            Strategy::None => false,
            Strategy::Uniform => {
                SplitMix64::new(stream_seed(self.global_seed, doc.id, Stream::Select)).chance(self.mix_ratio.get())
            }
            Strategy::Domain | Strategy::NonDomain => {
                let source = self.domain.as_ref().expect("checked in new");
                let task = source.resolve(doc).ok_or(doc.id)? == DomainTag::Task;
                task == (self.strategy == Strategy::Domain)
            }
        };
        Ok(if intervene { Route::Intervened } else { Route::UntouchedHr })
    }
}

/// The three disjoint document sets of a composed corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusPartition {
    pub intervened: BTreeSet<u64>,
    pub untouched_hr: BTreeSet<u64>,
    pub lr: BTreeSet<u64>,
}

impl CorpusPartition {
    pub fn len(&self) -> usize {
        self.intervened.len() + self.untouched_hr.len() + self.lr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that the sets are pairwise disjoint and cover exactly `ids`.
    pub fn check_laws(&self, ids: impl IntoIterator<Item = u64>) -> Result<()> {
        let sets = [&self.intervened, &self.untouched_hr, &self.lr];
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                if let Some(id) = a.intersection(b).next() {
                    return Err(Error::Validation(format!("document {id} is in two partition sets")));
                }
            }
        }
        let all: BTreeSet<u64> = ids.into_iter().collect();
        let covered: BTreeSet<u64> = sets.iter().flat_map(|s| s.iter().copied()).collect();
        if all != covered {
            return Err(Error::Validation(format!(
                "partition covers {} documents, input has {}",
                covered.len(),
                all.len()
            )));
        }
        Ok(())
    }
}

/// Routes every document. Duplicate ids and unresolvable documents are
/// validation errors (the latter listing all offending ids).
pub fn partition<'a>(docs: impl IntoIterator<Item = &'a Document>, selector: &Selector) -> Result<CorpusPartition> {
    let mut out = CorpusPartition::default();
    let mut seen = HashSet::new();
    let mut unresolved = Vec::new();
    for doc in docs {
        if !seen.insert(doc.id) {
            return Err(Error::Validation(format!("duplicate document id {}", doc.id)));
        }
        match selector.route(doc) {
            Ok(Route::Intervened) => out.intervened.insert(doc.id),
            Ok(Route::UntouchedHr) => out.untouched_hr.insert(doc.id),
            Ok(Route::Lr) => out.lr.insert(doc.id),
            Err(id) => {
                unresolved.push(id);
                false
            }
        };
    }
    if !unresolved.is_empty() {
        return Err(unresolved_error(&unresolved));
    }
    Ok(out)
}

pub fn unresolved_error(ids: &[u64]) -> Error {
    const SHOWN: usize = 20;
    let mut list: Vec<String> = ids.iter().take(SHOWN).map(u64::to_string).collect();
    if ids.len() > SHOWN {
        list.push(format!("... ({} total)", ids.len()));
    }
    Error::Validation(format!("documents without a domain tag: {}", list.join(", ")))
}

/// Each HR document is intervened with probability `m`, by an independent
/// draw seeded from `(global_seed, doc id)`.
pub fn select_uniform<'a>(docs: impl IntoIterator<Item = &'a Document>, m: Ratio, global_seed: u64) -> Result<CorpusPartition> {
    partition(docs, &Selector::uniform(m, global_seed))
}

/// Intervenes on exactly the task documents.
pub fn select_domain<'a>(docs: impl IntoIterator<Item = &'a Document>, source: &DomainSource) -> Result<CorpusPartition> {
    partition(docs, &Selector::new(Strategy::Domain, Ratio::ONE, 0, Some(source.clone()))?)
}

/// Intervenes on exactly the non-task documents.
pub fn select_non_domain<'a>(docs: impl IntoIterator<Item = &'a Document>, source: &DomainSource) -> Result<CorpusPartition> {
    partition(docs, &Selector::new(Strategy::NonDomain, Ratio::ONE, 0, Some(source.clone()))?)
}

/// One document emitted by [`BudgetMix`].
#[derive(Debug, Clone)]
pub struct MixItem {
    pub source: Role,
    pub record: Record,
    pub tokens: u64,
}

/// Running totals of a [`BudgetMix`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MixProgress {
    pub hr_tokens: u64,
    pub lr_tokens: u64,
    pub hr_docs: u64,
    pub lr_docs: u64,
    /// Times the LR stream was restarted.
    pub lr_cycles: u64,
}

impl MixProgress {
    pub fn total_tokens(&self) -> u64 {
        self.hr_tokens + self.lr_tokens
    }

    pub fn hr_token_share(&self) -> f64 {
        if self.total_tokens() == 0 {
            0.0
        } else {
            self.hr_tokens as f64 / self.total_tokens() as f64
        }
    }
}

type RecordIter = Box<dyn Iterator<Item = Result<Record>>>;

/// Interleaves HR and LR documents until `token_budget` tokens are emitted.
///
/// Each step picks HR with probability `s * mean_lr / (s * mean_lr + (1 - s) *
/// mean_hr)`, where `s` is the HR share and the means are the running token
/// lengths of documents pulled from each stream so far. With equal lengths
/// this is `s`; in general it makes the expected token share `s`. The LR
/// stream is reopened when exhausted; running out of HR data is an error.
pub struct BudgetMix {
    hr: RecordIter,
    reopen_lr: Box<dyn FnMut() -> Result<RecordIter>>,
    lr: RecordIter,
    hr_next: Option<(Record, u64)>,
    lr_next: Option<(Record, u64)>,
    hr_pulled: (u64, u64),
    lr_pulled: (u64, u64),
    share: f64,
    budget: u64,
    rng: SplitMix64,
    count_tokens: fn(&Record) -> u64,
    progress: MixProgress,
    done: bool,
}

fn whitespace_tokens(r: &Record) -> u64 {
    token_count(&r.doc.text)
}

impl BudgetMix {
    pub fn new(
        hr: impl Iterator<Item = Result<Record>> + 'static,
        mut reopen_lr: impl FnMut() -> Result<RecordIter> + 'static,
        hr_share: HrShare,
        token_budget: u64,
        global_seed: u64,
    ) -> Result<Self> {
        if token_budget == 0 {
            return Err(Error::Argument("token budget must be positive".into()));
        }
        let lr = reopen_lr()?;
        Ok(Self {
            hr: Box::new(hr),
            reopen_lr: Box::new(reopen_lr),
            lr,
            hr_next: None,
            lr_next: None,
            hr_pulled: (0, 0),
            lr_pulled: (0, 0),
            share: hr_share.get(),
            budget: token_budget,
            rng: SplitMix64::new(global_seed),
            count_tokens: whitespace_tokens,
            progress: MixProgress::default(),
            done: false,
        })
    }

    /// Replaces the whitespace-word token counter.
    pub fn with_token_counter(mut self, f: fn(&Record) -> u64) -> Self {
        self.count_tokens = f;
        self
    }

    pub fn progress(&self) -> MixProgress {
        self.progress
    }

    fn fill_hr(&mut self) -> Result<bool> {
        if self.hr_next.is_none() {
            match self.hr.next().transpose()? {
                Some(rec) => {
                    let t = (self.count_tokens)(&rec);
                    self.hr_pulled = (self.hr_pulled.0 + 1, self.hr_pulled.1 + t);
                    self.hr_next = Some((rec, t));
                }
                None => return Ok(false),
            }
        }
        Ok(true)
    }

    fn fill_lr(&mut self) -> Result<()> {
        if self.lr_next.is_some() {
            return Ok(());
        }
        let mut restarted = false;
        loop {
            if let Some(rec) = self.lr.next().transpose()? {
                let t = (self.count_tokens)(&rec);
                self.lr_pulled = (self.lr_pulled.0 + 1, self.lr_pulled.1 + t);
                self.lr_next = Some((rec, t));
                return Ok(());
            }
            if restarted {
                return Err(Error::Data("LR stream is empty".into()));
            }
            self.lr = (self.reopen_lr)()?;
            self.progress.lr_cycles += 1;
            restarted = true;
        }
    }

    fn hr_probability(&self) -> f64 {
        let mean = |(n, t): (u64, u64)| if n == 0 { 0.0 } else { t as f64 / n as f64 };
        let (mh, ml) = (mean(self.hr_pulled), mean(self.lr_pulled));
        let s = self.share;
        let denom = s * ml + (1.0 - s) * mh;
        if denom > 0.0 && mh > 0.0 && ml > 0.0 {
            s * ml / denom
        } else {
            s
        }
    }

    fn step(&mut self) -> Result<Option<MixItem>> {
        if self.progress.total_tokens() >= self.budget {
            return Ok(None);
        }
        if !self.fill_hr()? {
            return Err(self.exhausted());
        }
        self.fill_lr()?;
        let item = if self.rng.chance(self.hr_probability()) {
            let (record, tokens) = self.hr_next.take().expect("filled");
            self.progress.hr_tokens += tokens;
            self.progress.hr_docs += 1;
            MixItem { source: Role::Hr, record, tokens }
        } else {
            let (record, tokens) = self.lr_next.take().expect("filled");
            self.progress.lr_tokens += tokens;
            self.progress.lr_docs += 1;
            MixItem { source: Role::Lr, record, tokens }
        };
        Ok(Some(item))
    }

    fn exhausted(&self) -> Error {
        let p = self.progress;
        Error::Data(format!(
            "HR stream exhausted after {} of {} budget tokens ({} HR docs / {} tokens, {} LR docs / {} tokens)",
            p.total_tokens(),
            self.budget,
            p.hr_docs,
            p.hr_tokens,
            p.lr_docs,
            p.lr_tokens
        ))
    }
}

impl Iterator for BudgetMix {
    type Item = Result<MixItem>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(item)) => Some(Ok(item)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Convenience wrapper over in-memory document lists.
pub fn budget_mix(
    hr: Vec<Document>,
    lr: Vec<Document>,
    hr_share: HrShare,
    token_budget: u64,
    global_seed: u64,
) -> Result<BudgetMix> {
    let hr = hr.into_iter().map(|d| Ok(Record::from_document(d)));
    let lr: std::rc::Rc<Vec<Record>> = std::rc::Rc::new(lr.into_iter().map(Record::from_document).collect());
    let reopen = move || -> Result<RecordIter> {
        let lr = lr.clone();
        Ok(Box::new((0..lr.len()).map(move |i| Ok(lr[i].clone()))))
    };
    BudgetMix::new(hr, reopen, hr_share, token_budget, global_seed)
}
