//! Fixture directories and output file formats.

use std::path::{Path, PathBuf};

use hieralign::bscore::{load_json, save_json};
use hieralign::{
    hierarchical_align, jump_dtw_align, load_bscore, save_bscore, subseq_align, AlignConfig,
    BootlegFragment, Bscore, JumpConfig, LineMatch, LineTimeline, PerformanceSequence,
    SegmentAlignment, StepPattern, TimeMap,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{Algo, AlgoParams, CliError, CliResult};

pub const SHEET_FILE: &str = "sheet.bscore.json";
pub const PERF_FILE: &str = "perf.bscore.json";
pub const TIMEMAP_FILE: &str = "timemap.json";
pub const GT_FILE: &str = "gt.json";

/// One piece: sheet lines, performance, time map and ground truth.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub fragments: Vec<BootlegFragment>,
    pub perf: PerformanceSequence,
    pub timemap: TimeMap,
    pub gt: LineTimeline,
}

impl Fixture {
    pub fn paths(dir: &Path) -> Vec<PathBuf> {
        [SHEET_FILE, PERF_FILE, TIMEMAP_FILE, GT_FILE]
            .iter()
            .map(|f| dir.join(f))
            .collect()
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        let fixture = Fixture {
            fragments: load_sheet(&dir.join(SHEET_FILE))?,
            perf: load_perf(&dir.join(PERF_FILE))?,
            timemap: load_json(dir.join(TIMEMAP_FILE)).map_err(CliError::data)?,
            gt: load_json(dir.join(GT_FILE)).map_err(CliError::data)?,
        };
        if fixture.timemap.len() != fixture.perf.len() {
            return Err(CliError::data(anyhow::anyhow!(
                "{}: time map has {} entries for {} performance columns",
                dir.display(),
                fixture.timemap.len(),
                fixture.perf.len()
            )));
        }
        Ok(fixture)
    }

    pub fn save(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::internal(anyhow::anyhow!("{}: {}", dir.display(), e)))?;
        save_bscore(dir.join(SHEET_FILE), &Bscore::Sheet(self.fragments.clone())).map_err(CliError::internal)?;
        save_bscore(dir.join(PERF_FILE), &Bscore::Performance(self.perf.clone())).map_err(CliError::internal)?;
        save_json(dir.join(TIMEMAP_FILE), &self.timemap).map_err(CliError::internal)?;
        save_json(dir.join(GT_FILE), &self.gt).map_err(CliError::internal)?;
        Ok(())
    }
}

pub fn load_sheet(path: &Path) -> CliResult<Vec<BootlegFragment>> {
    load_bscore(path)
        .map_err(CliError::data)?
        .into_sheet()
        .map_err(|e| CliError::data(anyhow::anyhow!("{}: {}", path.display(), e)))
}

pub fn load_perf(path: &Path) -> CliResult<PerformanceSequence> {
    load_bscore(path)
        .map_err(CliError::data)?
        .into_performance()
        .map_err(|e| CliError::data(anyhow::anyhow!("{}: {}", path.display(), e)))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::internal(anyhow::anyhow!("cannot create {}: {}", dir.display(), e)))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::internal(anyhow::anyhow!("cannot write {}: {}", path.display(), e)))
}

/// Alignment output file. `score` is `null` when nothing could be matched.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentFile {
    pub algo: String,
    pub score: Option<f64>,
    pub matches: Vec<LineMatch>,
    pub config: serde_json::Value,
}

impl AlignmentFile {
    pub fn new(algo: Algo, params: &AlgoParams, aln: &SegmentAlignment) -> Self {
        AlignmentFile {
            algo: algo.name().to_string(),
            score: aln.score.is_finite().then_some(aln.score),
            matches: aln.matches.clone(),
            config: algo_config(algo, params),
        }
    }
}

pub fn align_config(params: &AlgoParams) -> AlignConfig {
    AlignConfig {
        alpha: params.alpha,
        gamma: params.gamma,
        allow_backward_jumps: !params.no_backward_jumps,
        allow_forward_jumps: !params.no_forward_jumps,
    }
}

/// The settings that influence `algo`'s output.
pub fn algo_config(algo: Algo, params: &AlgoParams) -> serde_json::Value {
    match algo {
        Algo::Subseq => json!({}),
        Algo::Jump => json!({ "jump_penalty": params.jump_penalty }),
        Algo::Hier => json!({
            "alpha": params.alpha,
            "gamma": params.gamma,
            "allow_backward_jumps": !params.no_backward_jumps,
            "allow_forward_jumps": !params.no_forward_jumps,
        }),
    }
}

/// Checks hyperparameters up front so bad flags are usage errors.
pub fn validate_params(algos: &[Algo], params: &AlgoParams) -> CliResult<()> {
    if algos.contains(&Algo::Hier) {
        align_config(params).validate().map_err(CliError::usage)?;
    }
    if algos.contains(&Algo::Jump) {
        JumpConfig::with_penalty(params.jump_penalty).validate().map_err(CliError::usage)?;
    }
    Ok(())
}

pub fn run_algo(
    algo: Algo,
    params: &AlgoParams,
    fragments: &[BootlegFragment],
    perf: &PerformanceSequence,
) -> hieralign::Result<SegmentAlignment> {
    match algo {
        Algo::Subseq => subseq_align(fragments, perf, &StepPattern::default()),
        Algo::Jump => jump_dtw_align(fragments, perf, &JumpConfig::with_penalty(params.jump_penalty)),
        Algo::Hier => hierarchical_align(fragments, perf, &align_config(params)),
    }
}
