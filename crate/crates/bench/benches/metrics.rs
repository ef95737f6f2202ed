use criterion::{Criterion, criterion_group, criterion_main};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use toolforge::ParamCategory;
use toolforge::metrics::cluster::{DistanceMetric, dbscan};
use toolforge::metrics::{
    Bootstrap, Metric, ShallowChunker, avg_tree_edit_distance, bootstrap_std, compute_metric, ncd_diversity,
    value_cluster_entropy, vendi_score,
};
use toolforge::paramgen::select_diverse_value;
use toolforge::providers::{Embedder, HashEmbedder};
use toolforge::querygen::rank_candidates_by_diversity;
use toolforge_bench::{queries, region_values};

fn clustering(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<Vec<f64>> = (0..50).map(|_| (0..384).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    c.bench_function("dbscan_cosine_50x384", |b| {
        b.iter(|| dbscan(black_box(&points), 0.1, 2, DistanceMetric::Cosine).unwrap())
    });
    let emb = HashEmbedder::default();
    let values = region_values(45, 20);
    c.bench_function("value_cluster_entropy_string_45", |b| {
        b.iter(|| value_cluster_entropy(black_box(&values), ParamCategory::String, &emb).unwrap())
    });
    let committed = region_values(20, 12);
    let candidates = region_values(25, 20);
    c.bench_function("select_diverse_value_25_of_5", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            select_diverse_value(black_box(&candidates), &committed, ParamCategory::String, &emb, 5, &mut rng).unwrap()
        })
    });
}

fn battery(c: &mut Criterion) {
    let emb = HashEmbedder::default();
    let texts = queries(40);
    let embeddings = emb.embed(&texts).unwrap();
    let analyzer = ShallowChunker;
    let mut group = c.benchmark_group("metric_40_queries");
    for metric in Metric::ALL {
        group.bench_function(metric.name(), |b| {
            b.iter(|| compute_metric(metric, black_box(&texts), &embeddings, &analyzer).unwrap())
        });
    }
    group.finish();
    c.bench_function("vendi_40", |b| b.iter(|| vendi_score(black_box(&embeddings)).unwrap()));
    c.bench_function("tree_edit_distance_40", |b| {
        b.iter(|| avg_tree_edit_distance(black_box(&texts), &analyzer).unwrap())
    });
    let values = region_values(20, 20);
    c.bench_function("ncd_diversity_20", |b| b.iter(|| ncd_diversity(black_box(&values)).unwrap()));
    c.bench_function("bootstrap_ttr_100x", |b| {
        b.iter(|| {
            bootstrap_std(
                black_box(&texts),
                |s| compute_metric(Metric::TypeTokenRatio, s, &[], &analyzer),
                Bootstrap::default(),
            )
            .unwrap()
        })
    });
}

fn ranking(c: &mut Criterion) {
    let emb = HashEmbedder::default();
    let refs = queries(10);
    let ref_emb = emb.embed(&refs).unwrap();
    let cands: Vec<String> = queries(60).into_iter().skip(40).take(25).collect();
    let cand_emb = emb.embed(&cands).unwrap();
    c.bench_function("rank_25_candidates_against_10", |b| {
        b.iter(|| rank_candidates_by_diversity(&refs, &ref_emb, black_box(&cands), &cand_emb, &ShallowChunker, 60).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = clustering, battery, ranking
}
criterion_main!(benches);
