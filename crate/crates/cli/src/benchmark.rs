//! Benchmark sweep over a corpus of in-order piece fixtures.
//!
//! Every (piece, schema, seed) query splices the piece's performance, runs
//! each algorithm and scores it at each collar. Queries run in parallel;
//! results are sorted before anything is written, so output bytes do not
//! depend on the number of workers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hieralign::benchgen::{
    corrupt_columns, line_spans_from_timeline, sample_schema, splice_performance, LineSpan, SchemaKind,
};
use hieralign::bscore::to_canonical_json;
use hieralign::{accuracy_with_collar, alignment_to_timeline, render_strips, EvalReport, LineMatch, LineTimeline};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::commands::MANIFEST_FILE;
use crate::files::{self, Fixture, SHEET_FILE};
use crate::manifest::Context;
use crate::{Algo, BenchmarkArgs, CliError, CliResult};

pub const RESULTS_FILE: &str = "results.csv";
pub const FAILURES_FILE: &str = "failures.json";
pub const QUERIES_DIR: &str = "queries";
pub const STRIPS_DIR: &str = "strips";
/// `piece` and `seed` value of aggregate rows.
pub const AGGREGATE: &str = "ALL";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Query {
    pub piece: String,
    pub schema: SchemaKind,
    pub seed: u64,
}

impl Query {
    pub fn stem(&self) -> String {
        format!("{}__{}__{}", self.piece, self.schema, self.seed)
    }
}

/// One line of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub piece: String,
    pub schema: String,
    pub seed: String,
    pub algo: String,
    pub collar: f64,
    pub accuracy: f64,
}

#[derive(Debug, Serialize)]
struct AlgoOutcome {
    algo: &'static str,
    score: Option<f64>,
    matches: Vec<LineMatch>,
    timeline: LineTimeline,
    reports: Vec<EvalReport>,
}

#[derive(Debug, Serialize)]
struct QueryReport {
    piece: String,
    schema: SchemaKind,
    seed: u64,
    schema_seed: u64,
    boundaries: Vec<usize>,
    corrupt: f64,
    jump_times: Vec<f64>,
    gt: LineTimeline,
    algos: Vec<AlgoOutcome>,
}

struct QueryResult {
    report: QueryReport,
    svg: String,
}

#[derive(Debug, Serialize)]
struct Failure {
    piece: String,
    schema: Option<SchemaKind>,
    seed: Option<u64>,
    error: String,
}

/// Stable 64-bit FNV-1a, used to derive per-query seeds from names.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn derive_seed(query: &Query, purpose: &str) -> u64 {
    fnv1a(&format!("{}/{}/{}/{}", query.piece, query.schema, query.seed, purpose))
}

/// Piece directories (those holding a sheet file), sorted by name.
pub fn piece_dirs(corpus: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    let entries = std::fs::read_dir(corpus)
        .map_err(|e| CliError::data(anyhow::anyhow!("cannot read corpus {}: {}", corpus.display(), e)))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(CliError::data)?.path();
        if path.join(SHEET_FILE).is_file() {
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            out.push((name, path));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(CliError::data(anyhow::anyhow!("no piece fixtures under {}", corpus.display())));
    }
    Ok(out)
}

/// Every query for one piece: schema `none` once, every other schema once
/// per seed.
pub fn queries_for(piece: &str, schemas: &[SchemaKind], seeds: &[u64]) -> Vec<Query> {
    let mut out = Vec::new();
    for &schema in schemas {
        let seeds = if schema == SchemaKind::None { &seeds[..1] } else { seeds };
        for &seed in seeds {
            out.push(Query {
                piece: piece.to_string(),
                schema,
                seed,
            });
        }
    }
    out
}

fn mean_density(perf: &hieralign::PerformanceSequence) -> f64 {
    let bits: u32 = perf.columns().iter().map(|c| c.count()).sum();
    (f64::from(bits) / (62.0 * perf.len() as f64)).clamp(1.0 / 62.0, 1.0)
}

fn run_query(
    query: &Query,
    piece: &Fixture,
    spans: &[LineSpan],
    args: &BenchmarkArgs,
) -> hieralign::Result<QueryResult> {
    let schema_seed = derive_seed(query, "schema");
    let schema = sample_schema(piece.fragments.len(), query.schema, schema_seed)?;
    let spliced = splice_performance(&piece.perf, &piece.timemap, &piece.gt, spans, &schema)?;
    let perf = if args.corrupt > 0.0 {
        corrupt_columns(&spliced.perf, args.corrupt, mean_density(&piece.perf), derive_seed(query, "corrupt"))?
    } else {
        spliced.perf.clone()
    };

    let mut algos = Vec::with_capacity(args.algos.len());
    for &algo in &args.algos {
        let aln = files::run_algo(algo, &args.params, &piece.fragments, &perf)?;
        let timeline = alignment_to_timeline(&aln, &spliced.timemap)?;
        let reports = args
            .collars
            .iter()
            .map(|&c| accuracy_with_collar(&timeline, &spliced.gt, c))
            .collect::<hieralign::Result<Vec<_>>>()?;
        algos.push(AlgoOutcome {
            algo: algo.name(),
            score: aln.score.is_finite().then_some(aln.score),
            matches: aln.matches,
            timeline,
            reports,
        });
    }
    let named: Vec<(String, LineTimeline)> =
        algos.iter().map(|a| (a.algo.to_string(), a.timeline.clone())).collect();
    let svg = render_strips(&named, &spliced.gt, &spliced.jump_times);
    Ok(QueryResult {
        report: QueryReport {
            piece: query.piece.clone(),
            schema: query.schema,
            seed: query.seed,
            schema_seed,
            boundaries: schema.boundaries().to_vec(),
            corrupt: args.corrupt,
            jump_times: spliced.jump_times,
            gt: spliced.gt,
            algos,
        },
        svg,
    })
}

fn per_query_rows(query: &Query, report: &QueryReport) -> Vec<Row> {
    let mut rows = Vec::new();
    for a in &report.algos {
        for r in &a.reports {
            rows.push(Row {
                piece: query.piece.clone(),
                schema: query.schema.to_string(),
                seed: query.seed.to_string(),
                algo: a.algo.to_string(),
                collar: r.collar,
                accuracy: r.accuracy,
            });
        }
    }
    rows
}

/// Mean accuracy per (algo, schema, collar), in argument order.
pub fn aggregate_rows(rows: &[Row], algos: &[Algo], schemas: &[SchemaKind], collars: &[f64]) -> Vec<Row> {
    let mut sums: BTreeMap<(String, String, u64), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = sums.entry((r.algo.clone(), r.schema.clone(), r.collar.to_bits())).or_insert((0.0, 0));
        e.0 += r.accuracy;
        e.1 += 1;
    }
    let mut out = Vec::new();
    for algo in algos {
        for schema in schemas {
            for &collar in collars {
                let key = (algo.name().to_string(), schema.to_string(), collar.to_bits());
                if let Some(&(sum, n)) = sums.get(&key) {
                    out.push(Row {
                        piece: AGGREGATE.to_string(),
                        schema: schema.to_string(),
                        seed: AGGREGATE.to_string(),
                        algo: algo.name().to_string(),
                        collar,
                        accuracy: sum / n as f64,
                    });
                }
            }
        }
    }
    out
}

fn dedup_keep_order<T: PartialEq + Clone>(items: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in items {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

fn validate(args: &BenchmarkArgs) -> CliResult<()> {
    let usage = |msg: String| Err(CliError::usage(anyhow::anyhow!(msg)));
    if args.algos.is_empty() || args.schemas.is_empty() || args.seeds.is_empty() || args.collars.is_empty() {
        return usage("--algos, --schemas, --seeds and --collar need at least one value".into());
    }
    if let Some(c) = args.collars.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return usage(format!("collar must be a finite value >= 0, got {}", c));
    }
    if !(0.0..=1.0).contains(&args.corrupt) {
        return usage(format!("--corrupt must lie in [0, 1], got {}", args.corrupt));
    }
    files::validate_params(&args.algos, &args.params)
}

pub fn run(args: &BenchmarkArgs, ctx: &Context) -> CliResult<()> {
    validate(args)?;
    let args = &BenchmarkArgs {
        algos: dedup_keep_order(&args.algos),
        schemas: dedup_keep_order(&args.schemas),
        seeds: dedup_keep_order(&args.seeds),
        collars: dedup_keep_order(&args.collars),
        corpus_dir: args.corpus_dir.clone(),
        corrupt: args.corrupt,
        params: args.params.clone(),
        out: args.out.clone(),
    };
    let pieces = piece_dirs(&args.corpus_dir)?;

    let mut failures = Vec::new();
    let mut work = Vec::new();
    let mut inputs = Vec::new();
    for (name, dir) in &pieces {
        inputs.extend(Fixture::paths(dir));
        let loaded = Fixture::load(dir).map_err(|e| e.to_string()).and_then(|f| {
            let spans = line_spans_from_timeline(&f.gt, &f.timemap).map_err(|e| e.to_string())?;
            if spans.len() != f.fragments.len() {
                return Err(format!(
                    "ground truth has {} line spans for {} sheet lines",
                    spans.len(),
                    f.fragments.len()
                ));
            }
            Ok((f, spans))
        });
        match loaded {
            Ok((fixture, spans)) => {
                for q in queries_for(name, &args.schemas, &args.seeds) {
                    work.push((q, fixture.clone(), spans.clone()));
                }
            }
            Err(error) => failures.push(Failure {
                piece: name.clone(),
                schema: None,
                seed: None,
                error,
            }),
        }
    }

    let mut results: Vec<(Query, Result<QueryResult, String>)> = work
        .par_iter()
        .map(|(q, fixture, spans)| (q.clone(), run_query(q, fixture, spans, args).map_err(|e| e.to_string())))
        .collect();
    results.sort_by(|a, b| a.0.cmp(&b.0));

    let queries_dir = args.out.join(QUERIES_DIR);
    let strips_dir = args.out.join(STRIPS_DIR);
    files::ensure_dir(&queries_dir)?;
    files::ensure_dir(&strips_dir)?;
    let mut rows = Vec::new();
    for (q, result) in &results {
        match result {
            Ok(r) => {
                rows.extend(per_query_rows(q, &r.report));
                files::write_text(&queries_dir.join(format!("{}.json", q.stem())), &to_canonical_json(&r.report))?;
                files::write_text(&strips_dir.join(format!("{}.svg", q.stem())), &r.svg)?;
            }
            Err(error) => failures.push(Failure {
                piece: q.piece.clone(),
                schema: Some(q.schema),
                seed: Some(q.seed),
                error: error.clone(),
            }),
        }
    }
    for f in &failures {
        eprintln!("warning: {} {:?} {:?} failed: {}", f.piece, f.schema, f.seed, f.error);
    }
    let aggregates = aggregate_rows(&rows, &args.algos, &args.schemas, &args.collars);
    write_csv(&args.out.join(RESULTS_FILE), rows.iter().chain(&aggregates))?;
    files::write_text(&args.out.join(FAILURES_FILE), &to_canonical_json(&failures))?;

    ctx.manifest(
        "benchmark",
        inputs,
        json!({
            "algos": args.algos.iter().map(|a| a.name()).collect::<Vec<_>>(),
            "schemas": args.schemas.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "seeds": args.seeds,
            "collars": args.collars,
            "corrupt": args.corrupt,
            "params": {
                "alpha": args.params.alpha,
                "gamma": args.params.gamma,
                "jump_penalty": args.params.jump_penalty,
                "allow_backward_jumps": !args.params.no_backward_jumps,
                "allow_forward_jumps": !args.params.no_forward_jumps,
            },
            "queries": results.len(),
            "failures": failures.len(),
        }),
        None,
    )
    .write(&args.out.join(MANIFEST_FILE))
}

fn write_csv<'a>(path: &Path, rows: impl Iterator<Item = &'a Row>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::internal(anyhow::anyhow!("cannot write {}: {}", path.display(), e)))?;
    for r in rows {
        w.serialize(r).map_err(CliError::internal)?;
    }
    w.flush().map_err(CliError::internal)
}
