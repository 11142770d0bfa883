//! Property tests for the structural invariants.

use nalgebra::DMatrix;
use proptest::prelude::*;

use eclab_core::complexity::rescale_minmax;
use eclab_core::dynamics::{detect_events, EventKind, SpecializationPanel};
use eclab_core::relatedness::{proximity, relatedness_density};
use eclab_core::specialization::{
    binarize, margins, nested_sort, rca, CountMatrix, SpecializationMatrix,
};

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

/// Count matrices with no zero row/column, up to 8x7.
fn count_matrix_strategy() -> impl Strategy<Value = CountMatrix> {
    (2usize..=8, 2usize..=7)
        .prop_flat_map(|(n, m)| {
            proptest::collection::vec(1.0f64..500.0, n * m).prop_map(move |values| {
                let counts = DMatrix::from_row_slice(n, m, &values);
                CountMatrix::new(labels("c", n), labels("l", m), counts, 2020).unwrap()
            })
        })
}

/// Binary matrices with no zero row/column.
fn binary_matrix_strategy() -> impl Strategy<Value = SpecializationMatrix> {
    (3usize..=8, 3usize..=7)
        .prop_flat_map(|(n, m)| {
            proptest::collection::vec(proptest::bool::weighted(0.45), n * m).prop_filter_map(
                "no zero margins",
                move |bits| {
                    let entries = DMatrix::from_fn(n, m, |i, j| u8::from(bits[i * m + j]));
                    let matrix =
                        SpecializationMatrix::from_binary(labels("c", n), labels("l", m), entries, None)
                            .ok()?;
                    if matrix.diversity().iter().all(|&k| k > 0)
                        && matrix.ubiquity().iter().all(|&k| k > 0)
                    {
                        Some(matrix)
                    } else {
                        None
                    }
                },
            )
        })
}

proptest! {
    #[test]
    fn rca_scale_invariant(x in count_matrix_strategy(), alpha in 0.01f64..100.0) {
        let scaled = CountMatrix::new(
            x.countries().to_vec(),
            x.activities().to_vec(),
            x.counts() * alpha,
            x.year(),
        ).unwrap();
        let base = rca(&x);
        let scaled = rca(&scaled);
        for (a, b) in base.values().iter().zip(scaled.values().iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn binarize_monotone_in_threshold(x in count_matrix_strategy(), t1 in 0.2f64..2.0, dt in 0.0f64..1.0) {
        let r = rca(&x);
        let t2 = t1 + dt;
        let low = binarize(&r, t1);
        let high = binarize(&r, t2);
        // Raising the threshold never turns a 0 into a 1; both calls may
        // legitimately report a degenerate (empty-margin) matrix instead.
        if let (Ok(low), Ok(high)) = (low, high) {
            for (a, b) in low.entries().iter().zip(high.entries().iter()) {
                prop_assert!(b <= a);
            }
        }
    }

    #[test]
    fn margin_totals_match(m in binary_matrix_strategy()) {
        let (diversity, ubiquity) = margins(&m);
        let ones: u32 = m.entries().iter().map(|&e| u32::from(e)).sum();
        prop_assert_eq!(diversity.iter().sum::<u32>(), ones);
        prop_assert_eq!(ubiquity.iter().sum::<u32>(), ones);
    }

    #[test]
    fn nested_sort_margins_are_sorted(m in binary_matrix_strategy()) {
        let sorted = nested_sort(&m);
        prop_assert!(sorted.matrix.diversity().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sorted.matrix.ubiquity().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rescale_maps_to_unit_interval_and_preserves_order(values in proptest::collection::vec(-100.0f64..100.0, 2..40)) {
        prop_assume!(values.iter().any(|v| (v - values[0]).abs() > 1e-9));
        let rescaled = rescale_minmax(&values).unwrap();
        let min = rescaled.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = rescaled.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((min + 1.0).abs() < 1e-12 && (max - 1.0).abs() < 1e-12);
        for (a, b) in values.iter().zip(values.iter().skip(1)) {
            let (ra, rb) = (
                rescaled.values[values.iter().position(|v| v == a).unwrap()],
                rescaled.values[values.iter().position(|v| v == b).unwrap()],
            );
            if a < b {
                prop_assert!(ra <= rb);
            }
        }
    }

    #[test]
    fn density_monotone_under_added_specialization(
        m in binary_matrix_strategy(),
        country in 0usize..8,
        activity in 0usize..7,
    ) {
        let country = country % m.countries().len();
        let activity = activity % m.activities().len();
        prop_assume!(m.entries()[(country, activity)] == 0);
        let phi = proximity(&m).unwrap();
        let before = relatedness_density(&m, &phi).unwrap();
        let mut entries = m.entries().clone();
        entries[(country, activity)] = 1;
        let richer = SpecializationMatrix::from_binary(
            m.countries().to_vec(),
            m.activities().to_vec(),
            entries,
            None,
        ).unwrap();
        let after = relatedness_density(&richer, &phi).unwrap();
        for l in 0..m.activities().len() {
            prop_assert!(after.values()[(country, l)] >= before.values()[(country, l)] - 1e-15);
        }
    }

    #[test]
    fn constant_panel_has_no_events_and_events_are_exclusive(
        m in binary_matrix_strategy(),
        flips in proptest::collection::vec((0usize..8, 0usize..7), 0..6),
    ) {
        // Constant panel: no events at all.
        let years = [2020, 2021, 2022, 2023];
        let constant = SpecializationPanel::from_yearly(
            years.iter().map(|&y| (y, m.clone())).collect(),
        ).unwrap();
        let events = detect_events(&constant, &[2020, 2021], &[2022, 2023]).unwrap();
        prop_assert!(events.records.is_empty());

        // Randomly flipped post-period matrix: entries and exits never
        // collide, and event counts partition the at-risk sets.
        let mut post_entries = m.entries().clone();
        for (i, j) in &flips {
            let i = i % m.countries().len();
            let j = j % m.activities().len();
            post_entries[(i, j)] = 1 - post_entries[(i, j)];
        }
        let post = SpecializationMatrix::from_binary(
            m.countries().to_vec(),
            m.activities().to_vec(),
            post_entries,
            None,
        ).unwrap();
        let panel = SpecializationPanel::from_yearly(vec![
            (2020, m.clone()),
            (2021, m.clone()),
            (2022, post.clone()),
            (2023, post),
        ]).unwrap();
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        let mut seen = std::collections::HashSet::new();
        for record in &events.records {
            prop_assert!(seen.insert((record.country.clone(), record.activity.clone())));
        }
        let entries = events.records.iter().filter(|r| r.kind == EventKind::Entry).count();
        let at_risk_zero = m.entries().iter().filter(|&&e| e == 0).count();
        prop_assert!(entries <= at_risk_zero);
    }
}
