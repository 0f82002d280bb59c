//! Test-time search and training-time exploration.
//!
//! Every strategy expands its population with all valid actions, dedupes
//! offspring by canonical key, scores them, and subsamples. The output is the
//! best graph ever evaluated, the initial graph included, so the best-so-far
//! total never decreases. Ranking is by total (descending) and then canonical
//! key (ascending); evaluation order never matters.

mod beam;
mod smc;
mod training;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::expand;
use crate::error::{Error, Result};
use crate::geometry::{BuildingGraph, CanonicalKey};
use crate::scoring::{ScoreBreakdown, Scorer, Weights};

pub use beam::{beam_search, greedy_search};
pub use smc::smc_search;
pub use training::{explore_training, ExploreConfig, ExploreMode, TrainingSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Beam,
    Smc,
    Greedy,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beam" => Ok(Strategy::Beam),
            "smc" => Ok(Strategy::Smc),
            "greedy" => Ok(Strategy::Greedy),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Beam => "beam",
            Strategy::Smc => "smc",
            Strategy::Greedy => "greedy",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Beam width or SMC particle count. `usize::MAX` keeps every offspring.
    pub width: usize,
    pub depth: usize,
    /// Iterations at the start that only use addition actions.
    pub addition_only_prefix: usize,
    /// SMC softmax temperature.
    pub temperature: f64,
    pub seed: u64,
    pub weights: Weights,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Beam,
            width: 5,
            depth: 12,
            addition_only_prefix: 0,
            temperature: 1.0,
            seed: 0,
            weights: Weights::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::InvalidConfig("width must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidConfig(format!("temperature {} must be finite and > 0", self.temperature)));
        }
        self.weights.validate()
    }
}

/// One line of the search log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Digests of the population kept after this iteration.
    pub population: Vec<String>,
    pub offspring: usize,
    pub best_total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best: BuildingGraph,
    pub best_score: ScoreBreakdown,
    /// Iteration 0 is the initial graph.
    pub trace: Vec<TraceRecord>,
    /// Distinct graphs scored.
    pub evaluations: usize,
}

impl SearchResult {
    /// The trace as line-delimited JSON.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.trace {
            out.push_str(&serde_json::to_string(rec).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}

pub fn search(initial: &BuildingGraph, scorer: &dyn Scorer, config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    Ok(match config.strategy {
        Strategy::Beam => beam_search(initial, scorer, config),
        Strategy::Smc => smc_search(initial, scorer, config),
        Strategy::Greedy => greedy_search(initial, scorer, config),
    })
}

/// A scored graph.
#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub key: CanonicalKey,
    pub graph: BuildingGraph,
    pub total: f64,
}

/// Best first: higher total, then smaller key.
pub(crate) fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.total.total_cmp(&a.total).then_with(|| a.key.cmp(&b.key))
}

/// Scores graphs in parallel, memoized by canonical key.
pub(crate) struct Evaluator<'a> {
    scorer: &'a dyn Scorer,
    weights: Weights,
    memo: HashMap<CanonicalKey, f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scorer: &'a dyn Scorer, weights: Weights) -> Self {
        Self {
            scorer,
            weights,
            memo: HashMap::new(),
        }
    }

    pub fn evaluations(&self) -> usize {
        self.memo.len()
    }

    pub fn score_all(&mut self, graphs: Vec<(CanonicalKey, BuildingGraph)>) -> Vec<Candidate> {
        let memo = &self.memo;
        let scorer = self.scorer;
        let weights = self.weights;
        let scored: Vec<(Candidate, bool)> = graphs
            .into_par_iter()
            .map(|(key, graph)| match memo.get(&key) {
                Some(&total) => (Candidate { key, graph, total }, false),
                None => {
                    let total = scorer.score(&graph, &weights).total;
                    (Candidate { key, graph, total }, true)
                }
            })
            .collect();
        scored
            .into_iter()
            .map(|(c, fresh)| {
                if fresh {
                    self.memo.insert(c.key.clone(), c.total);
                }
                c
            })
            .collect()
    }

    pub fn breakdown(&self, graph: &BuildingGraph) -> ScoreBreakdown {
        self.scorer.score(graph, &self.weights)
    }
}

/// All offspring of a population, deduped by key and sorted by key.
pub(crate) fn expand_population(population: &[BuildingGraph], addition_only: bool) -> Vec<(CanonicalKey, BuildingGraph)> {
    let per_parent: Vec<Vec<(CanonicalKey, BuildingGraph)>> = population
        .par_iter()
        .map(|g| expand(g, addition_only).into_iter().map(|(_, child)| (child.canonical_key(), child)).collect())
        .collect();
    let mut unique: BTreeMap<CanonicalKey, BuildingGraph> = BTreeMap::new();
    for (key, graph) in per_parent.into_iter().flatten() {
        unique.entry(key).or_insert(graph);
    }
    unique.into_iter().collect()
}

/// Running global best plus trace bookkeeping shared by the strategies.
pub(crate) struct Tracker {
    pub best: Candidate,
    pub trace: Vec<TraceRecord>,
}

impl Tracker {
    pub fn start(initial: Candidate) -> Self {
        let trace = vec![TraceRecord {
            iteration: 0,
            population: vec![initial.key.digest()],
            offspring: 0,
            best_total: initial.total,
        }];
        Self { best: initial, trace }
    }

    pub fn observe(&mut self, candidates: &[Candidate]) {
        for c in candidates {
            if rank(c, &self.best) == Ordering::Less {
                self.best = c.clone();
            }
        }
    }

    pub fn record(&mut self, iteration: usize, offspring: usize, population: &[BuildingGraph]) {
        self.trace.push(TraceRecord {
            iteration,
            population: population.iter().map(|g| g.canonical_key().digest()).collect(),
            offspring,
            best_total: self.best.total,
        });
    }

    pub fn finish(self, evaluator: &Evaluator<'_>) -> SearchResult {
        let best_score = evaluator.breakdown(&self.best.graph);
        SearchResult {
            best: self.best.graph,
            best_score,
            trace: self.trace,
            evaluations: evaluator.evaluations(),
        }
    }
}

pub(crate) fn start(initial: &BuildingGraph, evaluator: &mut Evaluator<'_>) -> Tracker {
    let first = evaluator
        .score_all(vec![(initial.canonical_key(), initial.clone())])
        .pop()
        .expect("one candidate");
    Tracker::start(first)
}
