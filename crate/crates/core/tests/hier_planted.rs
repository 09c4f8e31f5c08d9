use hieralign::benchgen::{sample_schema, splice_performance, synth_piece, SchemaKind};
use hieralign::hier::build_segment_matrices;
use hieralign::{
    accuracy_with_collar, alignment_to_timeline, hierarchical_align, AlignConfig, BootlegFragment,
    PerformanceSequence,
};

fn concat(fragments: &[BootlegFragment], order: &[usize]) -> PerformanceSequence {
    PerformanceSequence::new(order.iter().flat_map(|&i| fragments[i].columns.clone()).collect()).unwrap()
}

fn spans(aln: &hieralign::SegmentAlignment) -> Vec<(usize, usize)> {
    aln.matches.iter().map(|m| (m.ref_start, m.ref_end)).collect()
}

#[test]
fn planted_repeat() {
    let piece = synth_piece(1, 4, 8, 0.1).unwrap();
    let perf = concat(&piece.fragments, &[0, 1, 0, 1, 2, 3]);
    let aln = hierarchical_align(&piece.fragments, &perf, &AlignConfig::default()).unwrap();
    assert_eq!(aln.line_sequence(), vec![0, 1, 0, 1, 2, 3]);
    assert_eq!(spans(&aln), (0..6).map(|k| (8 * k, 8 * k + 7)).collect::<Vec<_>>());
    // Five exact lines at -8 each, one backward jump costing -p_avg = 8.
    assert_eq!(aln.score, -48.0 + 8.0);
}

#[test]
fn in_order_performance() {
    let piece = synth_piece(2, 6, 8, 0.1).unwrap();
    let aln = hierarchical_align(&piece.fragments, &piece.perf, &AlignConfig::default()).unwrap();
    assert_eq!(aln.line_sequence(), (0..6).collect::<Vec<i64>>());
    assert_eq!(aln.score, -48.0);
}

#[test]
fn starts_mid_piece() {
    let piece = synth_piece(3, 8, 8, 0.1).unwrap();
    let perf = concat(&piece.fragments, &[2, 3, 4, 5]);
    let aln = hierarchical_align(&piece.fragments, &perf, &AlignConfig::default()).unwrap();
    assert_eq!(aln.line_sequence(), vec![2, 3, 4, 5]);
}

#[test]
fn identical_fragments_give_identical_rows() {
    let piece = synth_piece(4, 3, 5, 0.2).unwrap();
    let same = vec![piece.fragments[0].clone(); 3];
    let inputs = build_segment_matrices(&same, &piece.perf).unwrap();
    for i in 1..3 {
        assert_eq!(inputs.cost_row(i), inputs.cost_row(0));
    }
    assert!(build_segment_matrices(&[], &piece.perf).is_err());
}

#[test]
fn p_avg_is_mean_of_line_minima() {
    let piece = synth_piece(5, 2, 8, 0.1).unwrap();
    let mut fragments = piece.fragments.clone();
    fragments[1].columns.truncate(6);
    let inputs = build_segment_matrices(&fragments, &piece.perf).unwrap();
    assert_eq!(inputs.p_avg().0, -7.0);
}

#[test]
fn recovers_every_schema() {
    for kind in SchemaKind::ALL {
        for seed in 0..3 {
            let piece = synth_piece(100 + seed, 8, 8, 0.1).unwrap();
            let schema = sample_schema(8, kind, seed).unwrap();
            let s = splice_performance(&piece.perf, &piece.timemap, &piece.gt, &piece.spans, &schema).unwrap();
            let aln = hierarchical_align(&piece.fragments, &s.perf, &AlignConfig::default()).unwrap();
            aln.validate().unwrap();
            let pred = alignment_to_timeline(&aln, &s.timemap).unwrap();
            let report = accuracy_with_collar(&pred, &s.gt, 0.0).unwrap();
            assert_eq!(report.accuracy, 1.0, "{} seed {}", kind, seed);
            let expected: Vec<i64> = schema.line_sequence().into_iter().map(|l| l as i64).collect();
            assert_eq!(aln.line_sequence(), expected);
        }
    }
}
