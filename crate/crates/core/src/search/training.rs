use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{apply, sample_per_type};
use crate::error::{Error, Result};
use crate::geometry::{BuildingGraph, CanonicalKey};
use crate::labeling::{label_graph, LabelSet};
use crate::rng;
use crate::scoring::{Scorer, Weights};

use super::{rank, Evaluator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExploreMode {
    /// Keep the top graphs by score, with epsilon-greedy replacement.
    Scored,
    /// Keep uniformly random offspring.
    Random,
}

impl std::str::FromStr for ExploreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scored" => Ok(ExploreMode::Scored),
            "random" => Ok(ExploreMode::Random),
            other => Err(Error::InvalidConfig(format!("unknown explore mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub mode: ExploreMode,
    pub iterations: usize,
    pub keep: usize,
    /// Chance of replacing the last kept graph with a random offspring.
    pub epsilon: f64,
    pub seed: u64,
    pub weights: Weights,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            mode: ExploreMode::Scored,
            iterations: 5,
            keep: 2,
            epsilon: 0.2,
            seed: 0,
            weights: Weights::default(),
        }
    }
}

impl ExploreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.keep == 0 {
            return Err(Error::InvalidConfig("keep must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        self.weights.validate()
    }
}

/// A kept graph with its classification labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    /// 1-based iteration that produced the graph.
    pub iteration: usize,
    pub graph: BuildingGraph,
    pub labels: LabelSet,
}

/// Training-time exploration: every kept graph emits one sampled action per
/// type, and `keep` offspring survive each iteration. Returns at most
/// `iterations * keep` labeled samples.
pub fn explore_training(
    initial: &BuildingGraph,
    gt: &BuildingGraph,
    scorer: &dyn Scorer,
    config: &ExploreConfig,
) -> Result<Vec<TrainingSample>> {
    config.validate()?;
    if initial.canvas() != gt.canvas() {
        let (a, b) = (initial.canvas(), gt.canvas());
        return Err(Error::DimensionMismatch {
            left: (a.width, a.height),
            right: (b.width, b.height),
        });
    }
    let mut evaluator = Evaluator::new(scorer, config.weights);
    let mut population = vec![initial.clone()];
    let mut samples = Vec::new();

    for it in 0..config.iterations {
        let mut offspring: BTreeMap<CanonicalKey, BuildingGraph> = BTreeMap::new();
        for (p, parent) in population.iter().enumerate() {
            let mut draws = rng::stream(config.seed, "explore.actions", ((it as u64) << 16) | p as u64);
            for action in sample_per_type(parent, &mut draws) {
                let child = apply(parent, &action).expect("sampled actions are valid");
                offspring.entry(child.canonical_key()).or_insert(child);
            }
        }
        if offspring.is_empty() {
            break;
        }
        let mut select = rng::stream(config.seed, "explore.select", it as u64);
        let offspring: Vec<_> = offspring.into_iter().collect();
        let kept = match config.mode {
            ExploreMode::Scored => keep_scored(&mut evaluator, offspring, config, &mut select),
            ExploreMode::Random => {
                let n = config.keep.min(offspring.len());
                let mut picks = index::sample(&mut select, offspring.len(), n).into_vec();
                picks.sort_unstable();
                picks.into_iter().map(|i| offspring[i].1.clone()).collect()
            }
        };
        for graph in &kept {
            samples.push(TrainingSample {
                iteration: it + 1,
                graph: graph.clone(),
                labels: label_graph(graph, gt),
            });
        }
        population = kept;
    }
    Ok(samples)
}

fn keep_scored(
    evaluator: &mut Evaluator<'_>,
    offspring: Vec<(CanonicalKey, BuildingGraph)>,
    config: &ExploreConfig,
    rng: &mut rng::StreamRng,
) -> Vec<BuildingGraph> {
    let mut scored = evaluator.score_all(offspring);
    scored.sort_by(rank);
    let n = config.keep.min(scored.len());
    // The replacement is drawn from offspring not already kept, so the kept
    // graphs stay distinct.
    if n >= 2 && rng.gen_bool(config.epsilon) {
        let i = rng.gen_range(n - 1..scored.len());
        scored.swap(n - 1, i);
    }
    scored.truncate(n);
    scored.into_iter().map(|c| c.graph).collect()
}
