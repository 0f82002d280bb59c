use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::strategy::Strategy;
use recon_core::actions::{apply, enumerate_actions, sample_per_type, Action};
use recon_core::geometry::polygon_mask;
use recon_core::io::{graph_from_json, graph_to_json, raster_from_pgm, raster_to_pgm};
use recon_core::labeling::{huber, label_graph, match_corners, Verdict};
use recon_core::metrics::aggregate;
use recon_core::rng::stream;
use recon_core::synth::{corrupt, synth, CorruptionSpec, SynthParams};
use recon_core::*;
use recon_core::Strategy as SearchStrategy;

fn canvas() -> Canvas {
    Canvas::default()
}

/// Up to `max` corners on an 8 px lattice with arbitrary edges.
fn small_graph(max: usize) -> impl Strategy<Value = BuildingGraph> {
    prop::collection::btree_set((2u32..30, 2u32..30), 1..=max)
        .prop_flat_map(|cells| {
            let points: Vec<(f64, f64)> = cells.into_iter().map(|(x, y)| (x as f64 * 8.0, y as f64 * 8.0)).collect();
            let n = points.len() as u32;
            let pairs: Vec<(u32, u32)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            let picks = prop::collection::vec(any::<bool>(), pairs.len());
            (Just(points), Just(pairs), picks)
        })
        .prop_map(|(points, pairs, picks)| {
            let edges: Vec<(u32, u32)> = pairs.into_iter().zip(picks).filter(|(_, p)| *p).map(|(e, _)| e).collect();
            BuildingGraph::from_points(canvas(), &points, &edges).expect("distinct lattice points")
        })
}

fn synthetic(rects: usize, seed: u64) -> recon_core::synth::Synthesized {
    synth(&SynthParams { rect_count: rects, seed, ..SynthParams::default() }).expect("default parameters are feasible")
}

fn relabeled(g: &BuildingGraph, offset: u32) -> BuildingGraph {
    let corners = g.corners().iter().rev().map(|c| Corner { id: c.id * 3 + offset, pos: c.pos });
    let edges = g.edges().iter().map(|e| (e.a() * 3 + offset, e.b() * 3 + offset));
    BuildingGraph::from_parts(g.canvas(), corners, edges).unwrap()
}

/// All actions over the graph's ids plus one unused id, in both orders.
fn raw_actions(g: &BuildingGraph) -> Vec<Action> {
    let mut ids: Vec<u32> = g.corners().iter().map(|c| c.id).collect();
    ids.push(g.next_id());
    let mut edges = g.edges().to_vec();
    edges.extend(ids.windows(2).filter_map(|w| Edge::new(w[0], w[1])).filter(|e| !g.has_edge(e.a(), e.b())).take(2));
    let mut out = Vec::new();
    for &a in &ids {
        out.extend(ids.iter().map(|&b| Action::AddEdge { a, b }));
        out.push(Action::RemoveCorner { corner: a });
        out.push(Action::DissolveDegree2 { corner: a });
        for &first in &edges {
            out.push(Action::AddOrthogonal { corner: a, edge: first });
            out.extend(edges.iter().map(|&second| Action::AddParallelogram { corner: a, first, second }));
        }
    }
    out.extend(edges.iter().map(|&edge| Action::RemoveEdge { edge }));
    out
}

fn components_4(mask: &Mask) -> usize {
    let (w, h) = mask.dims();
    let mut seen = vec![false; (w * h) as usize];
    let mut count = 0;
    for start in 0..(w * h) {
        if seen[start as usize] || !mask.get(start % w, start / w) {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start as usize] = true;
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            let near = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
            for (nx, ny) in near {
                if nx < w && ny < h && mask.get(nx, ny) && !seen[(ny * w + nx) as usize] {
                    seen[(ny * w + nx) as usize] = true;
                    stack.push(ny * w + nx);
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn json_round_trip(g in small_graph(10)) {
        let text = graph_to_json(&g);
        let back = graph_from_json(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.canonical_key(), g.canonical_key());
    }

    #[test]
    fn pgm_round_trip(levels in prop::collection::vec(0u8..=255, 12 * 7), kind in 0usize..3) {
        let (kind, data): (RasterKind, Vec<f64>) = match kind {
            0 => (RasterKind::Confidence, levels.iter().map(|&l| l as f64 / 255.0).collect()),
            1 => (RasterKind::Binary, levels.iter().map(|&l| (l % 2) as f64).collect()),
            _ => (RasterKind::Target, levels.iter().map(|&l| (l % 3) as f64 - 1.0).collect()),
        };
        let r = Raster::from_vec(12, 7, kind, data).unwrap();
        let bytes = raster_to_pgm(&r);
        let back = raster_from_pgm(&bytes).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(raster_to_pgm(&back), bytes);
    }

    #[test]
    fn canonical_key_ignores_ids(g in small_graph(8), offset in 0u32..5) {
        let h = relabeled(&g, offset);
        prop_assert_eq!(h.canonical_key(), g.canonical_key());
        prop_assert!(rasterize(&h, PrimitiveKind::Edges) == rasterize(&g, PrimitiveKind::Edges));
        prop_assert!(enclosed_mask(&h) == enclosed_mask(&g));
    }

    #[test]
    fn enumeration_matches_brute_force(g in small_graph(6)) {
        let listed: BTreeSet<Action> = enumerate_actions(&g, false).into_iter().collect();
        let valid: BTreeSet<Action> = raw_actions(&g).into_iter().filter(|a| apply(&g, a).is_ok()).collect();
        prop_assert_eq!(&listed, &valid);
        let additions: BTreeSet<Action> = enumerate_actions(&g, true).into_iter().collect();
        prop_assert!(additions.iter().all(|a| a.kind().is_addition() && listed.contains(a)));
    }

    #[test]
    fn samples_are_enumerated(g in small_graph(8), seed in any::<u64>()) {
        let listed: BTreeSet<Action> = enumerate_actions(&g, false).into_iter().collect();
        let mut rng = stream(seed, "prop.sample", 0);
        let sampled = sample_per_type(&g, &mut rng);
        let kinds: BTreeSet<_> = sampled.iter().map(|a| a.kind()).collect();
        prop_assert_eq!(kinds.len(), sampled.len());
        prop_assert!(sampled.iter().all(|a| listed.contains(a)));
    }

    #[test]
    fn apply_leaves_input_untouched(g in small_graph(6)) {
        let before = g.clone();
        for action in raw_actions(&g) {
            let _ = apply(&g, &action);
        }
        prop_assert_eq!(g, before);
    }

    #[test]
    fn edge_actions_invert(g in small_graph(7)) {
        for action in enumerate_actions(&g, false) {
            let child = apply(&g, &action).unwrap();
            let undo = match action {
                Action::AddEdge { a, b } => Action::RemoveEdge { edge: Edge::new(a, b).unwrap() },
                Action::RemoveEdge { edge } => Action::AddEdge { a: edge.a(), b: edge.b() },
                Action::AddParallelogram { .. } if child.corners().len() > g.corners().len() => {
                    Action::RemoveCorner { corner: g.next_id() }
                }
                _ => continue,
            };
            prop_assert!(apply(&child, &undo).unwrap().same_as(&g));
        }
    }

    #[test]
    fn corruption_is_recoverable(rects in 1usize..=4, seed in any::<u64>(), k in 0usize..=4) {
        let gt = synthetic(rects, seed).gt;
        let c = corrupt(&gt, &CorruptionSpec { k, seed, ..CorruptionSpec::default() }).unwrap();
        prop_assert_eq!(c.edits.len(), k);
        let mut g = c.initial.clone();
        for a in c.repair_plan() {
            g = apply(&g, &a).unwrap();
        }
        prop_assert_eq!(g.canonical_key(), gt.canonical_key());
    }

    #[test]
    fn synth_is_reproducible(rects in 1usize..=4, seed in any::<u64>()) {
        let params = SynthParams { rect_count: rects, seed, blur_radius: 1, flip_prob: 0.05, ..SynthParams::default() };
        prop_assert_eq!(synth(&params).unwrap(), synth(&params).unwrap());
    }

    #[test]
    fn synthetic_faces(rects in 1usize..=4, seed in any::<u64>()) {
        let g = synthetic(rects, seed).gt;
        let regions = extract_regions(&g);
        prop_assert!(!regions.has_crossings());
        // Euler on a connected crossing-free graph
        prop_assert_eq!(regions.regions.len() + g.corners().len(), g.edges().len() + 1);

        // components of the interior with the edge band removed
        let mut interior = enclosed_mask(&g);
        let band = rasterize(&g, PrimitiveKind::Edges);
        let mut fills = band.clone();
        for r in &regions.regions {
            fills.union_with(&polygon_mask(&r.polygon(&g), g.canvas()));
        }
        prop_assert!(fills == interior);
        let (w, h) = interior.dims();
        for y in 0..h {
            for x in 0..w {
                if band.get(x, y) {
                    interior.set(x, y, false);
                }
            }
        }
        prop_assert_eq!(components_4(&interior), regions.regions.len());
    }

    #[test]
    fn mask_iou_symmetric(a in prop::collection::vec(any::<bool>(), 64), b in prop::collection::vec(any::<bool>(), 64)) {
        let mask = |bits: &[bool]| {
            let mut m = Mask::empty(8, 8);
            for (i, &v) in bits.iter().enumerate() {
                m.set(i as u32 % 8, i as u32 / 8, v);
            }
            m
        };
        let (ma, mb) = (mask(&a), mask(&b));
        let iou = mask_iou(&ma, &mb).unwrap();
        prop_assert_eq!(iou, mask_iou(&mb, &ma).unwrap());
        prop_assert!((0.0..=1.0).contains(&iou));
        if a.iter().any(|&v| v) || b.iter().any(|&v| v) {
            prop_assert_eq!(iou == 1.0, a == b);
        }
    }

    #[test]
    fn self_labels_are_correct(g in small_graph(10)) {
        prop_assert!(label_graph(&g, &g).all_correct());
    }

    #[test]
    fn matching_is_injective_and_geometric(pred in small_graph(8), gt in small_graph(8)) {
        let m = match_corners(&pred, &gt);
        let targets: BTreeSet<u32> = m.pairs.values().map(|&(g, _)| g).collect();
        prop_assert_eq!(targets.len(), m.len());
        prop_assert!(m.pairs.values().all(|&(_, d)| d <= labeling::MATCH_RADIUS));
        let positions = |pred: &BuildingGraph, gt: &BuildingGraph, m: &MatchResult| -> BTreeSet<(i64, i64, i64, i64)> {
            m.pairs
                .iter()
                .map(|(&p, &(g, _))| {
                    let (a, b) = (pred.position(p).unwrap(), gt.position(g).unwrap());
                    (a.x as i64, a.y as i64, b.x as i64, b.y as i64)
                })
                .collect()
        };
        let (rp, rg) = (relabeled(&pred, 1), relabeled(&gt, 2));
        prop_assert_eq!(positions(&pred, &gt, &m), positions(&rp, &rg, &match_corners(&rp, &rg)));
    }

    #[test]
    fn adding_gt_edges_keeps_correct_edges(rects in 1usize..=4, seed in any::<u64>(), k in 1usize..=3) {
        let gt = synthetic(rects, seed).gt;
        let pred = corrupt(&gt, &CorruptionSpec { k, seed, ..CorruptionSpec::default() }).unwrap().initial;
        let before = label_graph(&pred, &gt);
        let m = match_corners(&pred, &gt);
        for a in pred.corners() {
            for b in pred.corners() {
                let (Some(ga), Some(gb)) = (m.gt_of(a.id), m.gt_of(b.id)) else { continue };
                if a.id >= b.id || pred.has_edge(a.id, b.id) || !gt.has_edge(ga, gb) {
                    continue;
                }
                let grown = apply(&pred, &Action::AddEdge { a: a.id, b: b.id }).unwrap();
                let after = label_graph(&grown, &gt);
                for (e, v) in &before.edges {
                    if *v == Verdict::Correct {
                        prop_assert_eq!(after.edges[e], Verdict::Correct);
                    }
                }
            }
        }
    }

    #[test]
    fn huber_gradient_matches_finite_differences(
        pred in prop::collection::vec(-0.99f64..0.99, 16),
        target in prop::collection::vec(0usize..3, 16),
    ) {
        let target: Vec<f64> = target.into_iter().map(|t| t as f64 - 1.0).collect();
        let t = Raster::from_vec(4, 4, RasterKind::Target, target.clone()).unwrap();
        let loss = |data: Vec<f64>| huber_loss(&Raster::from_vec(4, 4, RasterKind::Score, data).unwrap(), &t).unwrap();
        prop_assert!(loss(pred.clone()) >= 0.0);
        prop_assert_eq!(loss(target.iter().map(|v| v.clamp(-1.0, 1.0)).collect()), 0.0);
        let weights: Vec<f64> = target.iter().map(|&v| if v == 0.0 { 0.5 } else { 1.0 }).collect();
        let total: f64 = weights.iter().sum();
        let h = 1e-5;
        for i in 0..16 {
            let r = pred[i] - target[i];
            if (r.abs() - 1.0).abs() < 1e-3 {
                continue;
            }
            let mut up = pred.clone();
            up[i] += h;
            let mut down = pred.clone();
            down[i] -= h;
            let numeric = (loss(up) - loss(down)) / (2.0 * h);
            let analytic = weights[i] * r.clamp(-1.0, 1.0) / total;
            prop_assert!((numeric - analytic).abs() <= 1e-6, "pixel {}: {} vs {}", i, numeric, analytic);
        }
        prop_assert_eq!(huber(0.0), 0.0);
    }

    #[test]
    fn scaling_weights_scales_totals(g in small_graph(8), lambda in 0.01f64..100.0) {
        let gt = synthetic(2, 3).gt;
        let w = Weights::EDGE_HEAVY;
        let a = oracle_score(&g, &gt, &w).total;
        let b = oracle_score(&g, &gt, &w.scaled(lambda)).total;
        prop_assert!((b - lambda * a).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn oracle_total_is_sum_of_rewards(rects in 1usize..=4, seed in any::<u64>(), k in 0usize..=3) {
        let gt = synthetic(rects, seed).gt;
        let g = corrupt(&gt, &CorruptionSpec { k, seed, ..CorruptionSpec::default() }).unwrap().initial;
        let w = Weights::EDGE_HEAVY;
        let s = oracle_score(&g, &gt, &w);
        prop_assert!(s.in_range());
        let labels = label_graph(&g, &gt);
        for &(id, v) in &s.junctions {
            prop_assert_eq!(v, labels.junctions[&id].reward());
        }
        for &(e, v) in &s.edges {
            prop_assert_eq!(v, labels.edges[&e].reward());
        }
        let rewards = w.junction * s.junction_sum() + w.edge * s.edge_sum() + w.region * s.region;
        prop_assert_eq!(s.total, rewards);
        prop_assert_eq!(&s, &oracle_score(&g, &gt, &w));
    }

    #[test]
    fn ground_truth_dominates_neighbors(rects in 1usize..=3, seed in any::<u64>()) {
        let gt = synthetic(rects, seed).gt;
        let w = Weights::BALANCED;
        let best = oracle_score(&gt, &gt, &w).total;
        for action in enumerate_actions(&gt, false) {
            let g = apply(&gt, &action).unwrap();
            if g.canonical_key() != gt.canonical_key() {
                prop_assert!(oracle_score(&g, &gt, &w).total <= best);
            }
        }
    }

    #[test]
    fn metric_swap_exchanges_precision_and_recall(a in small_graph(8), b in small_graph(8)) {
        let cfg = MetricConfig::default();
        let ab = evaluate(&a, &b, &cfg).unwrap();
        let ba = evaluate(&b, &a, &cfg).unwrap();
        for ((_, x), (_, y)) in ab.levels().into_iter().zip(ba.levels()) {
            prop_assert_eq!(x.precision, y.recall);
            prop_assert_eq!(x.recall, y.precision);
            prop_assert_eq!(x.f1, y.f1);
        }
        prop_assert_eq!(aggregate(&[ab], Averaging::Micro), ab);
        prop_assert_eq!(evaluate(&relabeled(&a, 1), &b, &cfg).unwrap().corner, ab.corner);
    }

    #[test]
    fn self_evaluation_is_perfect(rects in 1usize..=4, seed in any::<u64>()) {
        let g = synthetic(rects, seed).gt;
        let r = evaluate(&g, &g, &MetricConfig::default()).unwrap();
        for (_, level) in r.levels() {
            prop_assert_eq!(level.f1, 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn search_traces_are_monotone(rects in 1usize..=3, seed in any::<u64>(), k in 1usize..=3, smc in any::<bool>()) {
        let gt = synthetic(rects, seed).gt;
        let initial = corrupt(&gt, &CorruptionSpec { k, seed, ..CorruptionSpec::default() }).unwrap().initial;
        let config = SearchConfig {
            strategy: if smc { SearchStrategy::Smc } else { SearchStrategy::Beam },
            width: 3,
            depth: 4,
            seed,
            ..SearchConfig::default()
        };
        let scorer = OracleScorer::new(gt);
        let result = search(&initial, &scorer, &config).unwrap();
        prop_assert_eq!(result.trace[0].best_total, scorer.score(&initial, &config.weights).total);
        for pair in result.trace.windows(2) {
            prop_assert!(pair[1].best_total >= pair[0].best_total);
            prop_assert!(pair[1].population.len() <= config.width);
        }
        prop_assert_eq!(result.trace.last().unwrap().best_total, result.best_score.total);
        prop_assert_eq!(&result, &search(&initial, &scorer, &config).unwrap());
    }
}
