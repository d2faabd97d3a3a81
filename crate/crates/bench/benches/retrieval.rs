use criterion::{black_box, criterion_group, criterion_main, Criterion};
use repoctx_bench::{query_chunk, synthetic_repo};
use repoctx_core::analogy::{retrieve_analogy, SimilarityFn};
use repoctx_core::analyzer::analyze_repo;
use repoctx_core::chunk::ChunkCover;
use repoctx_core::rationale::retrieve_rationale;
use repoctx_core::rtg::{build_tdc, CandidateSource, ScoredItem};
use repoctx_core::similarity::{edit_similarity, jaccard, token_set};
use repoctx_core::CodeKnowledgeGraph;

fn bench_indexing(c: &mut Criterion) {
    let files = synthetic_repo(100, 40);
    let mut group = c.benchmark_group("indexing");
    group.sample_size(20);
    group.bench_function("extract_facts_100_files", |b| {
        b.iter(|| analyze_repo(black_box(&files)))
    });
    let facts = analyze_repo(&files);
    group.bench_function("build_graph", |b| {
        b.iter(|| CodeKnowledgeGraph::build(black_box(&facts.entities), black_box(&facts.relations)).unwrap())
    });
    group.bench_function("build_cover", |b| {
        b.iter(|| ChunkCover::build(black_box(&files), 10, 5).unwrap())
    });
    group.finish();
}

fn bench_similarity(c: &mut Criterion) {
    let files = synthetic_repo(40, 20);
    let cover = ChunkCover::build(&files, 10, 5).unwrap();
    let query = query_chunk();
    let query_tokens = token_set(&query);
    let mut group = c.benchmark_group("similarity");
    group.bench_function("jaccard_per_chunk", |b| {
        b.iter(|| {
            cover
                .chunks
                .iter()
                .map(|ck| jaccard(&token_set(&ck.text), &query_tokens))
                .sum::<f64>()
        })
    });
    group.bench_function("edit_per_chunk", |b| {
        b.iter(|| {
            cover
                .chunks
                .iter()
                .map(|ck| edit_similarity(&ck.text, &query))
                .sum::<f64>()
        })
    });
    group.bench_function("retrieve_analogy_jaccard", |b| {
        b.iter(|| retrieve_analogy(&query, &cover, SimilarityFn::Jaccard, 0.1, 10, "pkg/mod_000.py"))
    });
    group.bench_function("retrieve_analogy_bm25", |b| {
        b.iter(|| {
            retrieve_analogy(
                &query,
                &cover,
                SimilarityFn::bm25_default(),
                0.0,
                10,
                "pkg/mod_000.py",
            )
        })
    });
    group.finish();
}

fn bench_rank_truncation(c: &mut Criterion) {
    let items: Vec<ScoredItem> = (0..5000)
        .map(|i| ScoredItem {
            item_id: format!("item-{i}"),
            source: if i % 3 == 0 {
                CandidateSource::Analogy
            } else {
                CandidateSource::RationaleMethod
            },
            origin_path: format!("pkg/mod_{:03}.py", i % 100),
            text: String::new(),
            score: ((i * 2654435761_usize) % 10_000) as f64 / 10_000.0,
            token_len: (i * 31) % 120,
        })
        .collect();
    c.bench_function("build_tdc_5000_items", |b| {
        b.iter(|| build_tdc(black_box(&items), 4096))
    });
}

fn bench_rationale(c: &mut Criterion) {
    let files = synthetic_repo(100, 10);
    let facts = analyze_repo(&files);
    let graph = CodeKnowledgeGraph::build(&facts.entities, &facts.relations).unwrap();
    c.bench_function("retrieve_rationale", |b| {
        b.iter(|| retrieve_rationale(black_box(&graph), "pkg/mod_000.py", 9).unwrap())
    });
}

criterion_group!(
    benches,
    bench_indexing,
    bench_similarity,
    bench_rank_truncation,
    bench_rationale
);
criterion_main!(benches);
