use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};

use crate::geometry::BuildingGraph;
use crate::rng;
use crate::scoring::Scorer;

use super::{expand_population, start, Candidate, Evaluator, SearchConfig, SearchResult};

/// Resamples `width` particles with replacement, weight `exp(total / T)`,
/// then dedupes them for the next expansion.
pub fn smc_search(initial: &BuildingGraph, scorer: &dyn Scorer, config: &SearchConfig) -> SearchResult {
    let mut evaluator = Evaluator::new(scorer, config.weights);
    let mut tracker = start(initial, &mut evaluator);
    let mut population = vec![initial.clone()];

    for it in 0..config.depth {
        let offspring = expand_population(&population, it < config.addition_only_prefix);
        if offspring.is_empty() {
            break;
        }
        let count = offspring.len();
        let scored = evaluator.score_all(offspring);
        tracker.observe(&scored);
        let mut draws = rng::stream(config.seed, "smc", it as u64);
        population = resample(&scored, config.width.max(1), config.temperature, &mut draws);
        tracker.record(it + 1, count, &population);
    }
    tracker.finish(&evaluator)
}

/// `candidates` arrive sorted by key, so the draw is reproducible. Weights
/// are shifted by the maximum before exponentiation.
fn resample(candidates: &[Candidate], draws: usize, temperature: f64, rng: &mut rng::StreamRng) -> Vec<BuildingGraph> {
    let max = candidates.iter().map(|c| c.total).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = candidates.iter().map(|c| ((c.total - max) / temperature).exp()).collect();
    let dist = WeightedIndex::new(&weights).expect("the maximum has weight 1");
    let mut picked = BTreeSet::new();
    for _ in 0..draws.min(1 << 20) {
        picked.insert(dist.sample(rng));
    }
    picked.into_iter().map(|i| candidates[i].graph.clone()).collect()
}
