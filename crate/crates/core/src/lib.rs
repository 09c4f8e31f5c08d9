//! Structure-aware offline alignment of a performance's bootleg score
//! features against per-line sheet music features.
//!
//! The main entry point is [`hierarchical_align`], which aligns every sheet
//! line with subsequence DTW and then aligns whole lines with a jump-aware
//! dynamic program. [`subseq_align`] and [`jump_dtw_align`] are the
//! baselines. [`benchgen`] builds synthetic pieces with repeats, and
//! [`eval`] / [`viz`] score and draw the resulting timelines.

pub mod benchgen;
pub mod bscore;
pub mod dtw;
pub mod error;
pub mod eval;
pub mod hier;
pub mod jump;
pub mod viz;

pub use bscore::{
    load_bscore, pack_column, save_bscore, unpack_column, AlignConfig, BootlegFragment, Bscore,
    LineMatch, LineTimeline, PackedColumn, PerformanceSequence, SegmentAlignment, TimeMap,
    TimelineSegment,
};
pub use dtw::{pairwise_cost, recover_start_positions, subsequence_dtw, CostMatrix, StepPattern, SubseqResult};
pub use error::{Error, Result};
pub use eval::{accuracy_with_collar, alignment_to_timeline, EvalReport};
pub use hier::{build_segment_matrices, hierarchical_align, segment_dp, transition_weight, PAvg, SegmentMatrices};
pub use jump::{jump_dtw_align, subseq_align, JumpConfig};
pub use viz::render_strips;
