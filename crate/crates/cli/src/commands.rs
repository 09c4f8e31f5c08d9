use std::path::PathBuf;

use hieralign::benchgen::{line_spans_from_timeline, sample_schema, splice_performance, synth_piece, SchemaRecord};
use hieralign::bscore::{load_json, save_json};
use hieralign::{accuracy_with_collar, alignment_to_timeline, render_strips, LineTimeline};
use serde::Serialize;
use serde_json::json;

use crate::files::{self, AlignmentFile, Fixture};
use crate::manifest::{sibling_manifest_path, Context};
use crate::{AlignArgs, CliError, CliResult, CorpusArgs, EvaluateArgs, SynthArgs, VisualizeArgs};

pub const ALIGNMENT_FILE: &str = "alignment.json";
pub const TIMELINE_FILE: &str = "timeline.json";
pub const SCHEMA_FILE: &str = "schema.json";
pub const JUMPS_FILE: &str = "jumps.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn align(args: &AlignArgs, ctx: &Context) -> CliResult<()> {
    files::validate_params(&[args.algo], &args.params)?;
    let fragments = files::load_sheet(&args.sheet)?;
    let perf = files::load_perf(&args.perf)?;
    let timemap: hieralign::TimeMap = load_json(&args.timemap).map_err(CliError::data)?;
    if timemap.len() != perf.len() {
        return Err(CliError::data(anyhow::anyhow!(
            "time map has {} entries for {} performance columns",
            timemap.len(),
            perf.len()
        )));
    }
    let aln = files::run_algo(args.algo, &args.params, &fragments, &perf).map_err(CliError::data)?;
    let timeline = alignment_to_timeline(&aln, &timemap).map_err(CliError::internal)?;

    files::ensure_dir(&args.out)?;
    save_json(args.out.join(ALIGNMENT_FILE), &AlignmentFile::new(args.algo, &args.params, &aln))
        .map_err(CliError::internal)?;
    save_json(args.out.join(TIMELINE_FILE), &timeline).map_err(CliError::internal)?;
    ctx.manifest(
        "align",
        vec![args.sheet.clone(), args.perf.clone(), args.timemap.clone()],
        json!({ "algo": args.algo.name(), "params": files::algo_config(args.algo, &args.params) }),
        None,
    )
    .write(&args.out.join(MANIFEST_FILE))
}

pub fn synth(args: &SynthArgs, ctx: &Context) -> CliResult<()> {
    let piece = Fixture::load(&args.piece_dir)?;
    let spans = line_spans_from_timeline(&piece.gt, &piece.timemap).map_err(CliError::data)?;
    if spans.len() != piece.fragments.len() {
        return Err(CliError::data(anyhow::anyhow!(
            "ground truth plays {} line spans but the sheet has {} lines; synth needs an in-order performance",
            spans.len(),
            piece.fragments.len()
        )));
    }
    let schema = sample_schema(piece.fragments.len(), args.schema, args.seed).map_err(CliError::data)?;
    let spliced = splice_performance(&piece.perf, &piece.timemap, &piece.gt, &spans, &schema)
        .map_err(CliError::data)?;

    Fixture {
        fragments: piece.fragments,
        perf: spliced.perf,
        timemap: spliced.timemap,
        gt: spliced.gt,
    }
    .save(&args.out_dir)?;
    let record = SchemaRecord {
        kind: schema.kind(),
        boundaries: schema.boundaries().to_vec(),
        seed: args.seed,
    };
    save_json(args.out_dir.join(SCHEMA_FILE), &record).map_err(CliError::internal)?;
    save_json(args.out_dir.join(JUMPS_FILE), &spliced.jump_times).map_err(CliError::internal)?;
    ctx.manifest(
        "synth",
        Fixture::paths(&args.piece_dir),
        json!({ "schema": args.schema.name() }),
        Some(args.seed),
    )
    .write(&args.out_dir.join(MANIFEST_FILE))
}

/// Seed of piece `index` in a corpus generated from `seed`.
pub fn piece_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(index as u64)
}

pub fn piece_name(index: usize) -> String {
    format!("piece_{:03}", index)
}

pub fn corpus(args: &CorpusArgs, ctx: &Context) -> CliResult<()> {
    if args.lines == 0 || args.cols_per_line == 0 || !(args.density > 0.0 && args.density <= 1.0) {
        return Err(CliError::usage(anyhow::anyhow!(
            "need --lines >= 1, --cols-per-line >= 1 and 0 < --density <= 1"
        )));
    }
    files::ensure_dir(&args.out_dir)?;
    for p in 0..args.pieces {
        let piece = synth_piece(piece_seed(args.seed, p), args.lines, args.cols_per_line, args.density)
            .map_err(CliError::internal)?;
        Fixture {
            fragments: piece.fragments,
            perf: piece.perf,
            timemap: piece.timemap,
            gt: piece.gt,
        }
        .save(&args.out_dir.join(piece_name(p)))?;
    }
    ctx.manifest(
        "corpus",
        Vec::new(),
        json!({
            "pieces": args.pieces,
            "lines": args.lines,
            "cols_per_line": args.cols_per_line,
            "density": args.density,
        }),
        Some(args.seed),
    )
    .write(&args.out_dir.join(MANIFEST_FILE))
}

#[derive(Serialize)]
struct EvaluationFile {
    reports: Vec<hieralign::EvalReport>,
}

pub fn evaluate(args: &EvaluateArgs, ctx: &Context) -> CliResult<()> {
    if let Some(c) = args.collars.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(CliError::usage(anyhow::anyhow!("collar must be a finite value >= 0, got {}", c)));
    }
    let pred: LineTimeline = load_json(&args.pred).map_err(CliError::data)?;
    let gt: LineTimeline = load_json(&args.gt).map_err(CliError::data)?;
    if (pred.start(), pred.end()) != (gt.start(), gt.end()) {
        eprintln!(
            "warning: prediction covers {:?}..{:?} but ground truth covers {:?}..{:?}; uncovered time counts as wrong",
            pred.start(),
            pred.end(),
            gt.start(),
            gt.end()
        );
    }
    let reports = args
        .collars
        .iter()
        .map(|&c| accuracy_with_collar(&pred, &gt, c))
        .collect::<hieralign::Result<Vec<_>>>()
        .map_err(CliError::data)?;
    save_json(&args.out, &EvaluationFile { reports }).map_err(CliError::internal)?;
    ctx.manifest(
        "evaluate",
        vec![args.pred.clone(), args.gt.clone()],
        json!({ "collars": args.collars }),
        None,
    )
    .write(&sibling_manifest_path(&args.out))
}

fn parse_pred(spec: &str) -> CliResult<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(CliError::usage(anyhow::anyhow!("--preds expects NAME=PATH, got {:?}", spec))),
    }
}

pub fn visualize(args: &VisualizeArgs, ctx: &Context) -> CliResult<()> {
    let named = args.preds.iter().map(|s| parse_pred(s)).collect::<CliResult<Vec<_>>>()?;
    let gt: LineTimeline = load_json(&args.gt).map_err(CliError::data)?;
    let mut preds = Vec::with_capacity(named.len());
    for (name, path) in &named {
        preds.push((name.clone(), load_json::<LineTimeline>(path).map_err(CliError::data)?));
    }
    let jumps: Vec<f64> = match &args.jumps {
        Some(p) => load_json(p).map_err(CliError::data)?,
        None => Vec::new(),
    };
    files::write_text(&args.out, &render_strips(&preds, &gt, &jumps))?;
    let mut inputs: Vec<PathBuf> = named.into_iter().map(|(_, p)| p).collect();
    inputs.push(args.gt.clone());
    inputs.extend(args.jumps.clone());
    ctx.manifest("visualize", inputs, json!({ "preds": args.preds }), None)
        .write(&sibling_manifest_path(&args.out))
}
