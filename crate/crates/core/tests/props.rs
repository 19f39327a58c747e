//! Property tests backed by independent oracles.

use std::collections::HashMap;

use proptest::prelude::*;

use tokenforge_core::eval::edit_distance;
use tokenforge_core::fsq::{
    bounded_round, decode_index, encode_index, resample_token_features, QuantizedVector,
};
use tokenforge_core::mat::Mat;
use tokenforge_core::textproc::{
    augment_pronunciation, AugmentPolicy, PhonemeMode, PronDict, ReplacementScope,
};

/// Independent memoized-recursion edit distance.
fn naive_edit(a: &[String], b: &[String]) -> usize {
    fn rec(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let cost = usize::from(a[i] != b[j]);
        let v = (rec(a, b, i + 1, j + 1, memo) + cost)
            .min(rec(a, b, i + 1, j, memo) + 1)
            .min(rec(a, b, i, j + 1, memo) + 1);
        memo.insert((i, j), v);
        v
    }
    rec(a, b, 0, 0, &mut HashMap::new())
}

fn token_seq() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..8)
        .prop_map(|v| v.into_iter().map(str::to_owned).collect())
}

proptest! {
    #[test]
    fn edit_distance_matches_naive_recursion(a in token_seq(), b in token_seq()) {
        prop_assert_eq!(edit_distance(&a, &b).distance, naive_edit(&a, &b));
    }

    #[test]
    fn edit_distance_is_symmetric(a in token_seq(), b in token_seq()) {
        prop_assert_eq!(edit_distance(&a, &b).distance, edit_distance(&b, &a).distance);
    }

    #[test]
    fn edit_distance_identity(a in token_seq()) {
        prop_assert_eq!(edit_distance(&a, &a).distance, 0);
    }

    #[test]
    fn edit_distance_triangle(a in token_seq(), b in token_seq(), c in token_seq()) {
        let ab = edit_distance(&a, &b).distance;
        let bc = edit_distance(&b, &c).distance;
        let ac = edit_distance(&a, &c).distance;
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn edit_decomposition_sums(a in token_seq(), b in token_seq()) {
        let counts = edit_distance(&a, &b);
        prop_assert_eq!(counts.distance, counts.substitutions + counts.insertions + counts.deletions);
    }

    #[test]
    fn encode_decode_roundtrip(
        d in 1usize..5,
        k in 1u32..4,
        seed in any::<u64>(),
    ) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state
        };
        let values: Vec<i32> = (0..d)
            .map(|_| ((next() % u64::from(2 * k + 1)) as i64 - i64::from(k)) as i32)
            .collect();
        let q = QuantizedVector::new(values, k).unwrap();
        let token = encode_index(&q, k).unwrap();
        let back = decode_index(token, d, k).unwrap();
        prop_assert_eq!(q, back);
    }

    #[test]
    fn bounded_round_stays_in_range(xs in prop::collection::vec(-100.0f64..100.0, 1..6), k in 1u32..5) {
        let q = bounded_round(&xs, k).unwrap();
        prop_assert!(q.values().iter().all(|&v| v.unsigned_abs() <= k));
    }

    #[test]
    fn resample_equal_rates_is_identity(
        rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..6),
        rate in 1.0f64..100.0,
    ) {
        let seq = Mat::from_rows(&rows).unwrap();
        let out = resample_token_features(&seq, rate, rate).unwrap();
        prop_assert_eq!(out, seq);
    }

    #[test]
    fn resample_doubling_preserves_row_multiset(
        rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..6),
    ) {
        let seq = Mat::from_rows(&rows).unwrap();
        let out = resample_token_features(&seq, 10.0, 20.0).unwrap();
        prop_assert_eq!(out.rows(), 2 * seq.rows());
        let count = |m: &Mat<f64>, row: &[f64]| {
            (0..m.rows()).filter(|&i| m.row(i) == row).count()
        };
        for i in 0..seq.rows() {
            prop_assert_eq!(count(&out, seq.row(i)), 2 * count(&seq, seq.row(i)));
        }
    }
}

fn arb_dict() -> impl Strategy<Value = PronDict> {
    prop::collection::btree_map(
        "[A-Z]{1,5}",
        prop::collection::vec(prop::collection::vec("[A-Z]{1,2}[0-2]?", 1..4), 1..3),
        1..12,
    )
    .prop_map(|entries| {
        let mut dict = PronDict::new();
        for (word, prons) in entries {
            for p in prons {
                dict.insert(&word, p);
            }
        }
        dict
    })
}

proptest! {
    #[test]
    fn rep_mono_never_touches_polyphones(
        dict in arb_dict(),
        words in prop::collection::vec("[A-Z]{1,5}", 0..12),
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let policy = AugmentPolicy {
            scope: ReplacementScope::RepMono,
            mode: PhonemeMode::MixPhn,
            replace_prob: 1.0,
            corrupt_prob: 0.0,
            seed,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let out = augment_pronunciation(&words, &dict, &policy, &mut rng).unwrap();
        prop_assert_eq!(out.len(), words.len());
        for (orig, got) in words.iter().zip(&out) {
            let polyphonic = dict.get(orig).map(|p| p.len() >= 2).unwrap_or(false);
            if polyphonic {
                prop_assert_eq!(got, orig);
            }
        }
    }

    #[test]
    fn mix_replaces_and_cat_keeps(
        dict in arb_dict(),
        words in prop::collection::vec("[A-Z]{1,5}", 1..10),
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let mix = AugmentPolicy {
            scope: ReplacementScope::RepAll,
            mode: PhonemeMode::MixPhn,
            replace_prob: 1.0,
            corrupt_prob: 0.0,
            seed,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let out = augment_pronunciation(&words, &dict, &mix, &mut rng).unwrap();
        for (orig, got) in words.iter().zip(&out) {
            if dict.contains(orig) {
                let braced = got.starts_with('{') && got.ends_with('}');
                prop_assert!(braced, "expected a braced phoneme run, got {:?}", got);
                prop_assert!(got != orig);
            } else {
                prop_assert_eq!(got, orig);
            }
        }

        let cat = AugmentPolicy { mode: PhonemeMode::CatPhn, ..mix };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let out = augment_pronunciation(&words, &dict, &cat, &mut rng).unwrap();
        let mut cursor = out.iter();
        for orig in &words {
            let got = cursor.next().unwrap();
            prop_assert_eq!(got, orig);
            if dict.contains(orig) {
                let phon = cursor.next().unwrap();
                let bracketed = phon.starts_with('⟦') && phon.ends_with('⟧');
                prop_assert!(bracketed, "expected a bracketed phoneme run, got {:?}", phon);
            }
        }
    }
}
