use indexmap::IndexMap;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use toolforge::distractors::elbow_cutoff;
use toolforge::metrics::cluster::{Assignment, DistanceMetric, dbscan, entropy_bits};
use toolforge::metrics::stats::{MCNEMAR_EXACT_THRESHOLD, subsample_indices};
use toolforge::metrics::{holm_bonferroni, mcnemar, ranks_descending, rrf_fuse};
use toolforge::providers::Signature;

fn field_value() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 _#\\[\\]{}:,\"\n-]{1,60}"
        .prop_map(|s| s.trim().to_string())
        .prop_filter("non-empty, no marker", |s| !s.is_empty() && !s.contains("[[ ## "))
}

fn signature_and_values() -> impl Strategy<Value = (Signature, IndexMap<String, String>)> {
    (1usize..6, 1usize..6).prop_flat_map(|(ni, no)| {
        (
            prop::collection::vec(field_value(), ni + no),
            prop::collection::vec(field_value(), no),
        )
            .prop_map(move |(descs, values)| {
                let names: Vec<String> = (0..ni + no).map(|i| format!("field_{i}")).collect();
                let pairs: Vec<(&str, &str)> = names.iter().map(String::as_str).zip(descs.iter().map(String::as_str)).collect();
                let sig = Signature::new("Prop", "Answer.", &pairs[..ni], &pairs[ni..]).unwrap();
                let out = sig.output_names().map(str::to_string).zip(values).collect();
                (sig, out)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn formatted_outputs_parse_back((sig, values) in signature_and_values()) {
        prop_assert_eq!(sig.parse(&sig.format_output(&values)).unwrap(), values);
    }

    #[test]
    fn rendered_prompt_lists_every_input((sig, values) in signature_and_values()) {
        let inputs: IndexMap<String, String> = sig.input_names().map(|n| (n.to_string(), values[0].clone())).collect();
        let prompt = sig.render(&inputs).unwrap();
        for name in sig.input_names().chain(sig.output_names()) {
            let marker = format!("[[ ## {name} ## ]]");
            prop_assert!(prompt.system.contains(&marker));
            prop_assert!(prompt.user.contains(&marker));
        }
    }

    #[test]
    fn dbscan_partition_is_consistent(
        points in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..40),
        eps in 0.05f64..0.6,
        min_samples in 1usize..5,
    ) {
        let part = dbscan(&points, eps, min_samples, DistanceMetric::Euclidean).unwrap();
        prop_assert_eq!(part.assignments.len(), points.len());
        prop_assert_eq!(part.cluster_sizes.iter().sum::<usize>() + part.noise_count(), points.len());
        prop_assert!(part.cluster_sizes.iter().all(|&s| s >= 1));
        let sizes = part.sizes_with_singletons();
        let h = entropy_bits(&sizes);
        prop_assert!(h >= -1e-12 && h <= (points.len() as f64).log2() + 1e-9);
        if min_samples == 1 {
            prop_assert_eq!(part.noise_count(), 0);
        }
        // Noise points have no core point within eps; core points are never noise.
        let d = |i: usize, j: usize| ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
        let n = points.len();
        let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| d(i, j) <= eps).count() >= min_samples).collect();
        for (i, a) in part.assignments.iter().enumerate() {
            if *a == Assignment::Noise {
                prop_assert!(!core[i]);
                prop_assert!((0..n).all(|j| !core[j] || d(i, j) > eps));
            }
        }
    }

    #[test]
    fn dbscan_ignores_input_order(
        points in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 2..30),
        eps in 0.05f64..0.6,
        seed in any::<u64>(),
    ) {
        let part = dbscan(&points, eps, 2, DistanceMetric::Euclidean).unwrap();
        let perm = {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            subsample_indices(&mut rng, points.len(), points.len())
        };
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| points[i].clone()).collect();
        let part2 = dbscan(&shuffled, eps, 2, DistanceMetric::Euclidean).unwrap();
        // Border points reachable from two clusters may switch sides, so only
        // the core structure is compared: same noise set and cluster count.
        prop_assert_eq!(part.cluster_sizes.len(), part2.cluster_sizes.len());
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(part.assignments[i] == Assignment::Noise, part2.assignments[k] == Assignment::Noise);
        }
    }

    #[test]
    fn rrf_order_survives_monotone_transforms(
        scores in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 1..9),
        scale in 0.1f64..10.0,
        shift in -10.0f64..10.0,
    ) {
        let ranks = |s: &Vec<Vec<f64>>| s.iter().map(|m| ranks_descending(m)).collect::<Vec<_>>();
        let transformed: Vec<Vec<f64>> = scores
            .iter()
            .map(|m| m.iter().map(|x| (scale * x + shift).exp()).collect())
            .collect();
        let a = rrf_fuse(&ranks(&scores), 60).unwrap();
        let b = rrf_fuse(&ranks(&transformed), 60).unwrap();
        prop_assert_eq!(a.order, b.order);
    }

    #[test]
    fn rrf_follows_candidate_permutation(
        scores in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 7), 1..9),
        seed in any::<u64>(),
    ) {
        let perm = subsample_indices(&mut ChaCha8Rng::seed_from_u64(seed), 7, 7);
        let permuted: Vec<Vec<f64>> = scores.iter().map(|m| perm.iter().map(|&i| m[i]).collect()).collect();
        let a = rrf_fuse(&scores.iter().map(|m| ranks_descending(m)).collect::<Vec<_>>(), 60).unwrap();
        let b = rrf_fuse(&permuted.iter().map(|m| ranks_descending(m)).collect::<Vec<_>>(), 60).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((a.scores[i] - b.scores[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn elbow_stays_in_bounds(
        mut scores in prop::collection::vec(0.0f64..1.0, 0..30),
        min_keep in 0usize..10,
    ) {
        scores.sort_by(|a, b| b.total_cmp(a));
        let keep = elbow_cutoff(&scores, min_keep);
        if scores.len() < 3 {
            prop_assert_eq!(keep, scores.len());
        } else {
            prop_assert!(keep >= min_keep.max(1).min(scores.len()));
            prop_assert!(keep <= scores.len());
        }
    }

    #[test]
    fn holm_rejections_are_a_prefix_of_sorted_pvalues(p in prop::collection::vec(0.0f64..0.2, 1..12)) {
        let reject = holm_bonferroni(&p, 0.05);
        for i in 0..p.len() {
            for j in 0..p.len() {
                if reject[i] && p[j] < p[i] {
                    prop_assert!(reject[j]);
                }
            }
        }
        let bonferroni: Vec<bool> = p.iter().map(|&x| x <= 0.05 / p.len() as f64).collect();
        for (h, b) in reject.iter().zip(&bonferroni) {
            prop_assert!(!b || *h);
        }
    }

    #[test]
    fn mcnemar_is_symmetric_probability(b in 0u64..60, c in 0u64..60) {
        let p = mcnemar(b, c, MCNEMAR_EXACT_THRESHOLD);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, mcnemar(c, b, MCNEMAR_EXACT_THRESHOLD));
    }

    #[test]
    fn subsample_indices_are_distinct(n in 1usize..200, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let m = (frac * n as f64).floor() as usize;
        let idx = subsample_indices(&mut ChaCha8Rng::seed_from_u64(seed), n, m);
        let set: std::collections::HashSet<_> = idx.iter().collect();
        prop_assert_eq!(idx.len(), m);
        prop_assert_eq!(set.len(), m);
        prop_assert!(idx.iter().all(|&i| i < n));
    }
}
