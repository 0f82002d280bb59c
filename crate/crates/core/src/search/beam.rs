use crate::geometry::BuildingGraph;
use crate::scoring::Scorer;

use super::{expand_population, rank, start, Evaluator, SearchConfig, SearchResult};

/// Keeps the top `width` offspring per iteration. The population holds
/// offspring only; the best graph ever scored is tracked separately.
pub fn beam_search(initial: &BuildingGraph, scorer: &dyn Scorer, config: &SearchConfig) -> SearchResult {
    let mut evaluator = Evaluator::new(scorer, config.weights);
    let mut tracker = start(initial, &mut evaluator);
    let mut population = vec![initial.clone()];

    for it in 0..config.depth {
        let offspring = expand_population(&population, it < config.addition_only_prefix);
        if offspring.is_empty() {
            break;
        }
        let count = offspring.len();
        let mut scored = evaluator.score_all(offspring);
        tracker.observe(&scored);
        scored.sort_by(rank);
        scored.truncate(config.width.max(1));
        population = scored.into_iter().map(|c| c.graph).collect();
        tracker.record(it + 1, count, &population);
    }
    tracker.finish(&evaluator)
}

/// Beam search with width 1.
pub fn greedy_search(initial: &BuildingGraph, scorer: &dyn Scorer, config: &SearchConfig) -> SearchResult {
    let config = SearchConfig { width: 1, ..*config };
    beam_search(initial, scorer, &config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Canvas, Edge};
    use crate::scoring::{OracleScorer, Weights};

    fn square() -> BuildingGraph {
        BuildingGraph::from_points(
            Canvas::default(),
            &[(40.0, 40.0), (120.0, 40.0), (120.0, 120.0), (40.0, 120.0)],
            &[(0, 1), (1, 2), (2, 3), (3, 0)],
        )
        .unwrap()
    }

    fn config(width: usize, depth: usize) -> SearchConfig {
        SearchConfig {
            width,
            depth,
            weights: Weights::BALANCED,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn zero_depth_returns_initial() {
        let gt = square();
        let mut initial = gt.clone();
        initial.remove_edge(Edge::new(0, 1).unwrap()).unwrap();
        let scorer = OracleScorer::new(gt);
        let result = beam_search(&initial, &scorer, &config(5, 0));
        assert_eq!(result.best, initial);
        assert_eq!(result.trace.len(), 1);
        assert_eq!(result.evaluations, 1);
    }

    #[test]
    fn restores_dropped_edge_in_one_step() {
        let gt = square();
        let mut initial = gt.clone();
        initial.remove_edge(Edge::new(2, 3).unwrap()).unwrap();
        let scorer = OracleScorer::new(gt.clone());
        let result = beam_search(&initial, &scorer, &config(1, 1));
        assert!(result.best.same_as(&gt));
        // four junctions, four edges and IoU 1 under (1, 1, 50)
        assert_eq!(result.best_score.total, 58.0);
    }

    #[test]
    fn greedy_matches_width_one() {
        let gt = square();
        let mut initial = gt.clone();
        initial.remove_corner(1).unwrap();
        let scorer = OracleScorer::new(gt);
        let a = greedy_search(&initial, &scorer, &config(5, 4));
        let b = beam_search(&initial, &scorer, &config(1, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn trace_is_monotone_and_bounded() {
        let gt = square();
        let mut initial = gt.clone();
        initial.remove_edge(Edge::new(0, 1).unwrap()).unwrap();
        initial.remove_edge(Edge::new(2, 3).unwrap()).unwrap();
        let scorer = OracleScorer::new(gt);
        let result = beam_search(&initial, &scorer, &config(3, 3));
        for pair in result.trace.windows(2) {
            assert!(pair[1].best_total >= pair[0].best_total);
            assert!(pair[1].population.len() <= 3);
        }
        assert_eq!(result.trace.last().unwrap().best_total, result.best_score.total);
    }
}
