use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;
use rayon::prelude::*;
use recon_core::io::{self, case};
use recon_core::metrics::{aggregate, evaluate, MetricConfig, MetricReport};
use recon_core::render::{render_svg, Overlay};
use recon_core::rng::derive_seed;
use recon_core::synth::{corrupt, synth, CaseMeta, CorruptionSpec, SynthParams};
use recon_core::{
    explore_training, label_graph, pixel_targets, search, BuildingGraph, Canvas, ConfidenceScorer, ExploreConfig,
    Mask, OracleScorer, PixelScoreScorer, PrimitiveKind, Raster, Scorer, SearchConfig, Weights,
};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::manifest::{self, RunInfo};
use crate::UsageError;

pub const CORNER_SCORE: &str = "corner_score.pgm";
pub const EDGE_SCORE: &str = "edge_score.pgm";

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn dispatch(command: Command, recorded: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let (name, out, info) = match command {
        Command::Replay(a) => return replay(&a),
        Command::Synth(a) => ("synth", a.out.clone(), run_synth(&a)?),
        Command::Corrupt(a) => ("corrupt", a.out.clone(), run_corrupt(&a)?),
        Command::Search(a) => ("search", a.out.clone(), run_search(&a)?),
        Command::Explore(a) => ("explore", a.out.clone(), run_explore(&a)?),
        Command::Label(a) => ("label", a.out.clone(), run_label(&a)?),
        Command::Score(a) => ("score", a.out.clone(), run_score(&a)?),
        Command::Eval(a) => ("eval", a.out.clone(), run_eval(&a)?),
        Command::Render(a) => ("render", a.out.clone(), run_render(&a)?),
    };
    manifest::write(name, recorded, &out, info, started.elapsed())?;
    Ok(())
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    io::write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &io::to_json_text(value)?)
}

fn read_graph(path: &Path) -> Result<BuildingGraph> {
    io::read_graph(path).with_context(|| format!("reading graph {}", path.display()))
}

fn read_raster(path: &Path) -> Result<Raster> {
    io::read_raster(path).with_context(|| format!("reading raster {}", path.display()))
}

fn cases(corpus: &Path) -> Result<Vec<PathBuf>> {
    let list = io::list_cases(corpus).with_context(|| format!("listing corpus {}", corpus.display()))?;
    if list.is_empty() {
        bail!("corpus {} holds no case directories with {}", corpus.display(), case::GT);
    }
    Ok(list)
}

fn case_name(dir: &Path) -> String {
    dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn corruption_spec(a: &CorruptionArgs, seed: u64) -> CorruptionSpec {
    CorruptionSpec {
        k: a.k,
        types: a.types.iter().map(|&t| t.into()).collect(),
        seed,
        jitter: a.jitter,
    }
}

fn check_corruption(a: &CorruptionArgs) -> Result<()> {
    if a.k > 0 && a.types.is_empty() {
        return Err(usage("--types: at least one corruption type is required when --k > 0"));
    }
    if !(a.jitter.is_finite() && a.jitter >= 0.0) {
        return Err(usage(format!("--jitter: {} must be finite and >= 0", a.jitter)));
    }
    Ok(())
}

fn run_synth(a: &SynthArgs) -> Result<RunInfo> {
    check_corruption(&a.corruption)?;
    let params = |i: usize| SynthParams {
        rect_count: a.rects.map_or(1 + i % 4, usize::from),
        grid_step: a.grid_step,
        margin: a.margin,
        seed: derive_seed(a.seed, "case", i as u64),
        blur_radius: a.blur,
        flip_prob: a.flip,
        canvas: Canvas::new(a.width, a.height),
    };
    for rects in 1..=4 {
        let p = SynthParams { rect_count: rects, ..params(0) };
        if a.rects.is_none_or(|r| usize::from(r) == rects) {
            p.validate().map_err(|e| usage(e.to_string()))?;
        }
    }
    prepare_out(&a.out)?;
    (0..a.count).into_par_iter().try_for_each(|i| -> Result<()> {
        let id = format!("case-{i:04}");
        let p = params(i);
        let s = synth(&p).with_context(|| format!("synthesizing {id}"))?;
        let spec = corruption_spec(&a.corruption, derive_seed(a.seed, "corrupt", i as u64));
        let c = corrupt(&s.gt, &spec).with_context(|| format!("corrupting {id}"))?;
        let dir = a.out.join(&id);
        prepare_out(&dir)?;
        io::write_graph(&dir.join(case::GT), &s.gt)?;
        io::write_graph(&dir.join(case::INITIAL), &c.initial)?;
        io::write_raster(&dir.join(case::CORNER), &s.corner_conf)?;
        io::write_raster(&dir.join(case::EDGE), &s.edge_conf)?;
        io::write_raster(&dir.join(case::REGION), &s.region_ref.to_raster())?;
        let meta = CaseMeta {
            case: id,
            synth: p,
            corruption: spec,
            rects: s.rects,
            edits: c.edits,
        };
        write_json(&dir.join(case::META), &meta)
    })?;
    eprintln!("synth: wrote {} cases to {}", a.count, a.out.display());
    Ok(RunInfo {
        config: json!({
            "count": a.count,
            "rects": a.rects,
            "grid_step": a.grid_step,
            "margin": a.margin,
            "canvas": [a.width, a.height],
            "blur": a.blur,
            "flip": a.flip,
            "k": a.corruption.k,
            "jitter": a.corruption.jitter,
        }),
        seeds: vec![a.seed],
        inputs: vec![],
        evaluations: 0,
    })
}

fn run_corrupt(a: &CorruptArgs) -> Result<RunInfo> {
    check_corruption(&a.corruption)?;
    let list = cases(&a.corpus)?;
    prepare_out(&a.out)?;
    list.par_iter().enumerate().try_for_each(|(i, src)| -> Result<()> {
        let id = case_name(src);
        let gt = read_graph(&src.join(case::GT))?;
        let spec = corruption_spec(&a.corruption, derive_seed(a.seed, "corrupt", i as u64));
        let c = corrupt(&gt, &spec).with_context(|| format!("corrupting {id}"))?;
        let dir = a.out.join(&id);
        prepare_out(&dir)?;
        io::write_graph(&dir.join(case::GT), &gt)?;
        io::write_graph(&dir.join(case::INITIAL), &c.initial)?;
        for name in [case::CORNER, case::EDGE, case::REGION, CORNER_SCORE, EDGE_SCORE] {
            let from = src.join(name);
            if from.is_file() {
                let bytes = fs::read(&from).with_context(|| format!("reading {}", from.display()))?;
                io::write_atomic(&dir.join(name), &bytes)?;
            }
        }
        let meta_path = src.join(case::META);
        let mut meta = if meta_path.is_file() {
            let text = fs::read_to_string(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", meta_path.display()))?
        } else {
            json!({ "case": id })
        };
        meta["corruption"] = serde_json::to_value(&spec)?;
        meta["edits"] = serde_json::to_value(&c.edits)?;
        write_json(&dir.join(case::META), &meta)
    })?;
    eprintln!("corrupt: wrote {} cases to {}", list.len(), a.out.display());
    Ok(RunInfo {
        config: json!({ "k": a.corruption.k, "jitter": a.corruption.jitter }),
        seeds: vec![a.seed],
        inputs: vec![a.corpus.display().to_string()],
        evaluations: 0,
    })
}

fn region_mask(dir: &Path) -> Result<Mask> {
    let path = dir.join(case::REGION);
    Ok(read_raster(&path)?.to_mask())
}

fn build_scorer(kind: ScorerKind, dir: &Path, gt: Option<&BuildingGraph>) -> Result<Box<dyn Scorer>> {
    Ok(match kind {
        ScorerKind::Oracle => {
            let gt = match gt {
                Some(g) => g.clone(),
                None => read_graph(&dir.join(case::GT))?,
            };
            Box::new(OracleScorer::new(gt))
        }
        ScorerKind::Confidence => Box::new(
            ConfidenceScorer::new(
                read_raster(&dir.join(case::CORNER))?,
                read_raster(&dir.join(case::EDGE))?,
                region_mask(dir)?,
            )
            .with_context(|| format!("confidence rasters in {}", dir.display()))?,
        ),
        ScorerKind::Raster => Box::new(
            PixelScoreScorer::new(
                read_raster(&dir.join(CORNER_SCORE))?,
                read_raster(&dir.join(EDGE_SCORE))?,
                region_mask(dir)?,
            )
            .with_context(|| format!("score rasters in {}", dir.display()))?,
        ),
    })
}

fn check_weights(w: &Weights) -> Result<()> {
    w.validate().map_err(|e| usage(format!("--wj/--we/--wr: {e}")))
}

fn check_canvas(graph: &BuildingGraph, gt: &BuildingGraph, what: &Path) -> Result<()> {
    if graph.canvas() != gt.canvas() {
        bail!(
            "{}: canvas {:?} differs from the ground truth canvas {:?}",
            what.display(),
            graph.canvas(),
            gt.canvas()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct CaseSummary {
    case: String,
    key: String,
    initial_total: f64,
    best_total: f64,
    iterations: usize,
    evaluations: usize,
}

fn run_search(a: &SearchArgs) -> Result<RunInfo> {
    let weights = a.weights.weights();
    check_weights(&weights)?;
    let base = SearchConfig {
        strategy: a.strategy.into(),
        width: usize::try_from(a.width).unwrap_or(usize::MAX),
        depth: a.depth,
        addition_only_prefix: a.addition_only_prefix,
        temperature: a.temperature,
        seed: a.seed,
        weights,
    };
    base.validate().map_err(|e| usage(format!("--temperature: {e}")))?;
    let list = cases(&a.corpus)?;
    prepare_out(&a.out)?;

    let summaries: Vec<CaseSummary> = list
        .par_iter()
        .enumerate()
        .map(|(i, dir)| -> Result<CaseSummary> {
            let id = case_name(dir);
            let input = dir.join(&a.input);
            let initial = read_graph(&input)?;
            let scorer = build_scorer(a.scorer, dir, None)?;
            if a.scorer != ScorerKind::Oracle {
                let c = initial.canvas();
                let dims = read_raster(&dir.join(case::REGION))?.dims();
                if (c.width, c.height) != dims {
                    bail!("{}: canvas {:?} differs from raster size {:?}", input.display(), c, dims);
                }
            }
            let config = SearchConfig {
                seed: derive_seed(a.seed, "search", i as u64),
                ..base
            };
            let result = search(&initial, scorer.as_ref(), &config).with_context(|| format!("searching {id}"))?;
            let out = a.out.join(&id);
            prepare_out(&out)?;
            io::write_graph(&out.join("pred.json"), &result.best)?;
            write_text(&out.join("trace.jsonl"), &result.trace_jsonl())?;
            write_json(&out.join("score.json"), &result.best_score)?;
            Ok(CaseSummary {
                case: id,
                key: result.best.canonical_key().digest(),
                initial_total: result.trace[0].best_total,
                best_total: result.best_score.total,
                iterations: result.trace.len() - 1,
                evaluations: result.evaluations,
            })
        })
        .collect::<Result<_>>()?;

    for s in &summaries {
        println!("{}", serde_json::to_string(s)?);
    }
    let evaluations: usize = summaries.iter().map(|s| s.evaluations).sum();
    let improved = summaries.iter().filter(|s| s.best_total > s.initial_total).count();
    eprintln!(
        "search: {} cases, {} improved, {} graphs scored ({} width {} depth {})",
        summaries.len(),
        improved,
        evaluations,
        base.strategy,
        a.width,
        a.depth
    );
    Ok(RunInfo {
        config: serde_json::to_value(base)?,
        seeds: vec![a.seed],
        inputs: vec![a.corpus.display().to_string()],
        evaluations,
    })
}

#[derive(Serialize)]
struct SampleRecord {
    sample: usize,
    iteration: usize,
    key: String,
    all_correct: bool,
}

fn run_explore(a: &ExploreArgs) -> Result<RunInfo> {
    let weights = a.weights.weights();
    check_weights(&weights)?;
    let base = ExploreConfig {
        mode: a.mode.into(),
        iterations: a.iterations,
        keep: usize::try_from(a.keep).unwrap_or(usize::MAX),
        epsilon: a.epsilon,
        seed: a.seed,
        weights,
    };
    base.validate().map_err(|e| usage(format!("--epsilon: {e}")))?;
    let list = cases(&a.corpus)?;
    prepare_out(&a.out)?;

    let counts: Vec<(String, usize)> = list
        .par_iter()
        .enumerate()
        .map(|(i, dir)| -> Result<(String, usize)> {
            let id = case_name(dir);
            let gt = read_graph(&dir.join(case::GT))?;
            let input = dir.join(&a.input);
            let initial = read_graph(&input)?;
            check_canvas(&initial, &gt, &input)?;
            let scorer = build_scorer(a.scorer, dir, Some(&gt))?;
            let config = ExploreConfig {
                seed: derive_seed(a.seed, "explore", i as u64),
                ..base
            };
            let samples = explore_training(&initial, &gt, scorer.as_ref(), &config)
                .with_context(|| format!("exploring {id}"))?;
            let out = a.out.join(&id);
            prepare_out(&out)?;
            let mut index = String::new();
            for (n, s) in samples.iter().enumerate() {
                io::write_graph(&out.join(format!("sample-{n:02}.json")), &s.graph)?;
                write_json(&out.join(format!("labels-{n:02}.json")), &s.labels)?;
                let record = SampleRecord {
                    sample: n,
                    iteration: s.iteration,
                    key: s.graph.canonical_key().digest(),
                    all_correct: s.labels.all_correct(),
                };
                index.push_str(&serde_json::to_string(&record)?);
                index.push('\n');
            }
            write_text(&out.join("samples.jsonl"), &index)?;
            Ok((id, samples.len()))
        })
        .collect::<Result<_>>()?;

    for (id, n) in &counts {
        println!("{}", json!({ "case": id, "samples": n }));
    }
    let total: usize = counts.iter().map(|(_, n)| n).sum();
    eprintln!("explore: {total} samples over {} cases", counts.len());
    Ok(RunInfo {
        config: serde_json::to_value(base)?,
        seeds: vec![a.seed],
        inputs: vec![a.corpus.display().to_string()],
        evaluations: 0,
    })
}

fn run_label(a: &LabelArgs) -> Result<RunInfo> {
    let graph = read_graph(&a.graph)?;
    let gt = read_graph(&a.gt)?;
    check_canvas(&graph, &gt, &a.graph)?;
    let labels = label_graph(&graph, &gt);
    prepare_out(&a.out)?;
    write_json(&a.out.join("labels.json"), &labels)?;
    io::write_raster(&a.out.join("corner_target.pgm"), &pixel_targets(&graph, &labels, PrimitiveKind::Corners))?;
    io::write_raster(&a.out.join("edge_target.pgm"), &pixel_targets(&graph, &labels, PrimitiveKind::Edges))?;
    let correct = labels.junctions.values().chain(labels.edges.values()).filter(|v| v.is_correct()).count();
    println!(
        "{}",
        json!({ "primitives": labels.junctions.len() + labels.edges.len(), "correct": correct })
    );
    Ok(RunInfo {
        config: json!({}),
        seeds: vec![],
        inputs: vec![a.graph.display().to_string(), a.gt.display().to_string()],
        evaluations: 0,
    })
}

fn run_score(a: &ScoreArgs) -> Result<RunInfo> {
    let weights = a.weights.weights();
    check_weights(&weights)?;
    let graph = read_graph(&a.graph)?;
    let scorer = build_scorer(a.scorer, &a.case, None)?;
    if a.scorer == ScorerKind::Oracle {
        let gt = read_graph(&a.case.join(case::GT))?;
        check_canvas(&graph, &gt, &a.graph)?;
    } else {
        let c = graph.canvas();
        let dims = read_raster(&a.case.join(case::REGION))?.dims();
        if (c.width, c.height) != dims {
            bail!("{}: canvas {:?} differs from raster size {:?}", a.graph.display(), c, dims);
        }
    }
    let breakdown = scorer.score(&graph, &weights);
    prepare_out(&a.out)?;
    write_json(&a.out.join("score.json"), &breakdown)?;
    println!("{}", json!({ "total": breakdown.total, "region": breakdown.region }));
    Ok(RunInfo {
        config: json!({ "weights": weights }),
        seeds: vec![],
        inputs: vec![a.graph.display().to_string(), a.case.display().to_string()],
        evaluations: 1,
    })
}

#[derive(Serialize)]
struct EvalReport {
    averaging: recon_core::Averaging,
    config: MetricConfig,
    corpus: MetricReport,
    cases: Vec<(String, MetricReport)>,
}

fn run_eval(a: &EvalArgs) -> Result<RunInfo> {
    if !(a.corner_tol.is_finite() && a.corner_tol >= 0.0) {
        return Err(usage(format!("--corner-tol: {} must be finite and >= 0", a.corner_tol)));
    }
    if !(0.0..=1.0).contains(&a.region_iou) {
        return Err(usage(format!("--region-iou: {} outside [0, 1]", a.region_iou)));
    }
    let config = MetricConfig {
        corner_tol: a.corner_tol,
        region_iou_tol: a.region_iou,
    };
    let list = cases(&a.gt)?;
    let cases: Vec<(String, MetricReport)> = list
        .par_iter()
        .map(|dir| -> Result<(String, MetricReport)> {
            let id = case_name(dir);
            let gt = read_graph(&dir.join(case::GT))?;
            let pred_path = a.pred.join(&id).join(&a.pred_name);
            let pred = read_graph(&pred_path)?;
            check_canvas(&pred, &gt, &pred_path)?;
            Ok((id, evaluate(&pred, &gt, &config)?))
        })
        .collect::<Result<_>>()?;
    let reports: Vec<MetricReport> = cases.iter().map(|(_, r)| *r).collect();
    let corpus = aggregate(&reports, a.averaging.into());
    prepare_out(&a.out)?;
    write_text(&a.out.join("report.txt"), &corpus.to_text())?;
    let report = EvalReport {
        averaging: a.averaging.into(),
        config,
        corpus,
        cases,
    };
    write_json(&a.out.join("report.json"), &report)?;
    println!(
        "{}",
        json!({
            "cases": report.cases.len(),
            "corner_f1": corpus.corner.f1,
            "edge_f1": corpus.edge.f1,
            "region_f1": corpus.region.f1,
        })
    );
    eprint!("{}", corpus.to_text());
    Ok(RunInfo {
        config: serde_json::to_value(config)?,
        seeds: vec![],
        inputs: vec![a.pred.display().to_string(), a.gt.display().to_string()],
        evaluations: 0,
    })
}

fn run_render(a: &RenderArgs) -> Result<RunInfo> {
    let graph = read_graph(&a.graph)?;
    let labels = match &a.gt {
        Some(path) => {
            let gt = read_graph(path)?;
            check_canvas(&graph, &gt, &a.graph)?;
            Some(label_graph(&graph, &gt))
        }
        None => None,
    };
    let svg = render_svg(&graph, labels.as_ref().map(Overlay::Labels));
    prepare_out(&a.out)?;
    write_text(&a.out.join("graph.svg"), &svg)?;
    let mut inputs = vec![a.graph.display().to_string()];
    inputs.extend(a.gt.iter().map(|p| p.display().to_string()));
    Ok(RunInfo {
        config: json!({ "overlay": a.gt.is_some() }),
        seeds: vec![],
        inputs,
        evaluations: 0,
    })
}

fn replay(a: &ReplayArgs) -> Result<()> {
    let recorded = manifest::read(&a.manifest)?;
    if a.out.exists() && fs::read_dir(&a.out)?.next().is_some() {
        return Err(usage(format!("--out: {} exists and is not empty", a.out.display())));
    }
    let cwd = std::env::current_dir()?;
    let out = cwd.join(&a.out);
    let args = manifest::redirect_out(&recorded.args, &out);
    // relative paths in the recorded arguments resolve against the original
    // working directory
    std::env::set_current_dir(&recorded.cwd)
        .with_context(|| format!("{}: recorded working directory {}", a.manifest.display(), recorded.cwd))?;
    let argv = std::iter::once("recon".to_string()).chain(args.iter().cloned());
    let cli = crate::args::Cli::try_parse_from(argv)
        .with_context(|| format!("{}: recorded arguments no longer parse", a.manifest.display()))?;
    if matches!(cli.command, Command::Replay(_)) {
        bail!("{}: a replay manifest cannot be replayed", a.manifest.display());
    }
    dispatch(cli.command, args)?;
    let replayed = manifest::digest_outputs(&out)?;
    let mut mismatches = Vec::new();
    for (path, digest) in &recorded.outputs {
        match replayed.get(path) {
            Some(d) if d == digest => {}
            Some(_) => mismatches.push(format!("{path}: content differs")),
            None => mismatches.push(format!("{path}: missing")),
        }
    }
    for path in replayed.keys().filter(|p| !recorded.outputs.contains_key(*p)) {
        mismatches.push(format!("{path}: not in the recorded run"));
    }
    println!(
        "{}",
        json!({ "files": recorded.outputs.len(), "identical": mismatches.is_empty(), "mismatches": mismatches })
    );
    if !mismatches.is_empty() {
        bail!("replay of {} differs in {} file(s)", a.manifest.display(), mismatches.len());
    }
    eprintln!("replay: {} files identical", recorded.outputs.len());
    Ok(())
}
