mod oracles;

use hieralign::dtw::{start_positions_by_backtrace, subsequence_dtw, CostMatrix};
use hieralign::{pack_column, pairwise_cost, recover_start_positions, unpack_column, PackedColumn};
use oracles::{random_int_costs, subseq_enumerate};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 0..1200 {
        let rows = rng.gen_range(1..=6);
        let cols = rng.gen_range(1..=10);
        let cost = random_int_costs(&mut rng, rows, cols);
        let result = subsequence_dtw(&CostMatrix::from_rows(&cost).unwrap());
        let oracle = subseq_enumerate(&cost);
        for i in 0..rows {
            for j in 0..cols {
                assert_eq!(result.cumulative(i, j), oracle.d[i][j], "case {} cell ({}, {})", n, i, j);
            }
        }
        let best = |row: &[f64]| row.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(best(result.last_row()), best(&oracle.d[rows - 1]));
        assert_eq!(recover_start_positions(&result), oracle.start[rows - 1], "case {}", n);
    }
}

fn cost_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=8, 1usize..=14).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec((-30i32..=30).prop_map(|v| f64::from(v) / 10.0), c), r)
    })
}

proptest! {
    #[test]
    fn first_row_is_the_cost_row(cost in cost_matrix()) {
        let result = subsequence_dtw(&CostMatrix::from_rows(&cost).unwrap());
        for (j, &c) in cost[0].iter().enumerate() {
            prop_assert_eq!(result.cumulative(0, j), c);
        }
    }

    #[test]
    fn starts_precede_ends_and_agree_with_backtrace(cost in cost_matrix()) {
        let result = subsequence_dtw(&CostMatrix::from_rows(&cost).unwrap());
        let starts = recover_start_positions(&result);
        for (j, s) in starts.iter().enumerate() {
            prop_assert_eq!(s.is_some(), result.last_row()[j].is_finite());
            if let Some(s) = s {
                prop_assert!(*s <= j);
            }
        }
        prop_assert_eq!(starts, start_positions_by_backtrace(&result));
    }

    #[test]
    fn pack_unpack_roundtrip(bits in 0u64..(1 << 62)) {
        let col = PackedColumn::from_bits(bits).unwrap();
        prop_assert_eq!(pack_column(unpack_column(col)).unwrap(), col);
        prop_assert_eq!(PackedColumn::from_hex(&col.to_hex()).unwrap(), col);
    }

    #[test]
    fn costs_lie_in_unit_interval(a in 0u64..(1 << 62), b in 0u64..(1 << 62)) {
        let x = PackedColumn::from_bits(a).unwrap();
        let y = PackedColumn::from_bits(b).unwrap();
        let c = pairwise_cost(&[x], &[y]).unwrap().get(0, 0);
        prop_assert!((-1.0..=0.0).contains(&c));
        if a == b && a != 0 {
            prop_assert_eq!(c, -1.0);
        }
    }
}
