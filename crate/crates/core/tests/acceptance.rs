//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p repoctx-core --test acceptance -- --nocapture`.

use rand::{Rng, SeedableRng};
use repoctx_core::analyzer::analyze_repo;
use repoctx_core::chunk::{unfinished_chunk, ChunkCover, CodeChunk};
use repoctx_core::config::PipelineConfig;
use repoctx_core::metrics::{code_es, identifier_metrics, IdentifierProfile};
use repoctx_core::pipeline::{self, ContextQuery};
use repoctx_core::prompt::{assemble, PromptOrder};
use repoctx_core::rationale::retrieve_rationale;
use repoctx_core::rtg::{build_tdc, rank_order, CandidateSource, CodeTokenCounter, ScoredItem, TruncatedDualContext};
use repoctx_core::similarity::edit_similarity;
use repoctx_core::{CodeKnowledgeGraph, EdgeRelation, ScorerKind, SourceFile};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

/// Run a criterion body, printing one PASS/FAIL line either way.
fn criterion<F: FnOnce() + std::panic::UnwindSafe>(number: u32, label: &str, body: F) {
    let start = Instant::now();
    let result = std::panic::catch_unwind(body);
    let elapsed = start.elapsed();
    match result {
        Ok(()) => println!("PASS criterion {number}: {label} ({elapsed:.2?})"),
        Err(payload) => {
            println!("FAIL criterion {number}: {label} ({elapsed:.2?})");
            std::panic::resume_unwind(payload);
        }
    }
}

fn load_fixture_files(root: &Path) -> Vec<SourceFile> {
    let scan = repoctx_core::source::scan_repo(root, &["*.py".to_string()]).unwrap();
    scan.files
}

#[test]
fn c1_appendix_fixture_relation_set() {
    criterion(1, "appendix fixture reproduces the sample-graph relations", || {
        let start = Instant::now();
        let files = load_fixture_files(&fixture("appendix_repo"));
        let facts = analyze_repo(&files);
        let graph = CodeKnowledgeGraph::build(&facts.entities, &facts.relations).unwrap();
        assert!(graph.node_count() >= 5, "nodes: {}", graph.node_count());
        assert!(graph.edge_count() >= 3, "edges: {}", graph.edge_count());

        let mut relations: Vec<(EdgeRelation, String, String)> = graph
            .edges()
            .iter()
            .map(|e| {
                let name = |id: &str| id.split(':').next().unwrap().to_string();
                (e.relation, name(&e.from_id), name(&e.to_id))
            })
            .collect();
        relations.sort();
        assert_eq!(
            relations,
            vec![
                (EdgeRelation::Imports, "module_b".into(), "ClassX".into()),
                (EdgeRelation::Instantiates, "build_worker".into(), "ClassX".into()),
                (EdgeRelation::Instantiates, "function_F".into(), "ClassX".into()),
                (EdgeRelation::Uses, "function_F".into(), "variable_V".into()),
            ],
            "relation multiset must be exactly Imports, Instantiates x2, Uses"
        );
        assert!(
            start.elapsed().as_secs_f64() < 1.0,
            "indexing took {:?}",
            start.elapsed()
        );
    });
}

#[test]
fn c2_worked_example_rationale_and_tdc() {
    criterion(2, "worked example yields the expected triple and tight-budget TDC", || {
        let root = fixture("worked_example");
        let config = PipelineConfig {
            top_k: 2,
            budget: 78,
            ..PipelineConfig::default()
        };
        let (artifacts, _, diagnostics) = pipeline::index_repo(&root, &config).unwrap();
        // stdlib imports in sibling files may be unresolved; the edited file
        // must analyze cleanly
        assert!(
            diagnostics.iter().all(|d| d.path != "app/main.py"),
            "{diagnostics:?}"
        );

        let rationale = retrieve_rationale(&artifacts.graph, "app/main.py", 11).unwrap();
        let names = |ids: Vec<&str>| -> BTreeSet<String> {
            ids.iter().map(|id| id.split(':').next().unwrap().to_string()).collect()
        };
        assert_eq!(
            names(rationale.methods.iter().map(|i| i.node_id.as_str()).collect()),
            BTreeSet::from(["format_user".to_string()])
        );
        assert_eq!(
            names(rationale.classes.iter().map(|i| i.node_id.as_str()).collect()),
            BTreeSet::from(["UidTok".to_string(), "UserService".to_string()])
        );
        assert!(rationale.packages.is_empty());

        let query = ContextQuery::new(&artifacts, &config);
        let (report, tdc, _) = query.context(&root, "app/main.py", 11).unwrap();
        // the analogy context mirrors the example: two admitted chunks
        assert_eq!(report.analogy.len(), 2);
        assert_eq!(report.analogy[0].file, "handlers/auth_handler.py");
        assert!(report.analogy[0].text.contains("validate_user(user.uid, user.token)"));
        assert_eq!(report.analogy[1].file, "handlers/session_handler.py");

        let selected: BTreeSet<String> = tdc
            .selected
            .iter()
            .map(|item| {
                if item.source == CandidateSource::Analogy {
                    item.item_id.clone()
                } else {
                    item.item_id.split(':').next().unwrap().to_string()
                }
            })
            .collect();
        assert_eq!(
            selected,
            BTreeSet::from([
                "UserService".to_string(),
                "UidTok".to_string(),
                "analogy:handlers/auth_handler.py:1".to_string(),
            ]),
            "tight-budget TDC must be exactly {{rc1, rc2, ec1}}"
        );
    });
}

#[test]
fn c3_chunk_cover_property_suite() {
    criterion(3, "chunk cover properties on 1000 random instances", || {
        let start = Instant::now();
        let mut rng = rand::rngs::StdRng::seed_from_u64(0xc3);
        for case in 0..1000 {
            let total = rng.gen_range(0..=80u32);
            let ell = rng.gen_range(1..=14u32);
            let eta = rng.gen_range(1..=ell);
            let text: String = (1..=total).map(|i| format!("line {i}\n")).collect();
            let file = SourceFile::new("f.py", text);
            let cover = ChunkCover::build(std::slice::from_ref(&file), ell, eta).unwrap();

            // completeness: every line appears in at least one chunk
            let mut covered = BTreeSet::new();
            for chunk in &cover.chunks {
                covered.extend(chunk.start_line..=chunk.end_line());
            }
            let expected: BTreeSet<u32> = (1..=total).collect();
            assert_eq!(covered, expected, "case {case}: total={total} ell={ell} eta={eta}");

            // successor uniqueness: start lines are unique per file, so at
            // most one chunk sits at start + eta
            let starts: Vec<u32> = cover.chunks.iter().map(|c| c.start_line).collect();
            let unique: BTreeSet<u32> = starts.iter().copied().collect();
            assert_eq!(starts.len(), unique.len(), "case {case}: duplicate starts");

            // overlap law
            for pair in cover.chunks.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                let overlap = (a.end_line() + 1).saturating_sub(b.start_line);
                if b.start_line == a.start_line + eta {
                    assert_eq!(overlap, ell - eta, "case {case}");
                    assert_eq!(
                        cover.successor(a).map(|s| s.start_line),
                        Some(b.start_line),
                        "case {case}"
                    );
                } else {
                    // back-shifted final chunk: overlap may only grow
                    assert!(overlap >= ell - eta, "case {case}");
                    assert!(cover.successor(a).is_none(), "case {case}");
                }
            }
        }
        assert!(start.elapsed().as_secs_f64() < 5.0, "took {:?}", start.elapsed());
    });
}

fn random_items(rng: &mut rand::rngs::StdRng, max_n: usize) -> Vec<ScoredItem> {
    let n = rng.gen_range(0..=max_n);
    (0..n)
        .map(|i| ScoredItem {
            item_id: format!("item-{i}"),
            source: if rng.gen_bool(0.5) {
                CandidateSource::Analogy
            } else {
                CandidateSource::RationaleMethod
            },
            origin_path: format!("src/m{i}.py"),
            text: "x = 1".repeat(rng.gen_range(0..4)),
            score: rng.gen_range(0.0..1.0),
            token_len: rng.gen_range(0..40),
        })
        .collect()
}

#[test]
fn c4_tdc_brute_force_equivalence() {
    criterion(4, "TDC equals the maximal rank-prefix oracle on 10000 sets", || {
        let start = Instant::now();
        let mut rng = rand::rngs::StdRng::seed_from_u64(0xc4);
        for case in 0..10_000 {
            let items = random_items(&mut rng, 12);
            let budget = rng.gen_range(0..250usize);
            let tdc = build_tdc(&items, budget);

            // budget safety on every fuzz case
            assert!(tdc.used_tokens <= budget, "case {case}");

            // independent oracle: enumerate prefixes of the canonical order
            // and keep the longest one that fits
            let ranked = rank_order(&items);
            let mut best: Vec<&str> = Vec::new();
            for len in 0..=ranked.len() {
                let sum: usize = ranked[..len].iter().map(|i| i.token_len).sum();
                if sum <= budget {
                    best = ranked[..len].iter().map(|i| i.item_id.as_str()).collect();
                }
            }
            let got: Vec<&str> = tdc.selected.iter().map(|i| i.item_id.as_str()).collect();
            assert_eq!(got, best, "case {case}: budget={budget}");
        }
        assert!(start.elapsed().as_secs_f64() < 30.0, "took {:?}", start.elapsed());
    });
}

/// Independent full-matrix Levenshtein for the metric oracle.
fn levenshtein_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in dp[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            dp[i][j] = (dp[i - 1][j] + 1)
                .min(dp[i][j - 1] + 1)
                .min(dp[i - 1][j - 1] + cost);
        }
    }
    dp[a.len()][b.len()]
}

#[test]
fn c5_metric_oracle_equivalence() {
    criterion(5, "metrics match DP Levenshtein and multiset arithmetic", || {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0xc5);
        let alphabet = [' ', 'a', 'b', 'c', '_', '(', ')', '1'];
        for case in 0..1000 {
            let mk = |rng: &mut rand::rngs::StdRng| -> String {
                let len = rng.gen_range(0..30);
                (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);

            let max_len = a.trim().chars().count().max(b.trim().chars().count());
            let expected = if max_len == 0 {
                1.0
            } else {
                1.0 - levenshtein_oracle(a.trim(), b.trim()) as f64 / max_len as f64
            };
            assert_eq!(code_es(&a, &b), expected, "case {case}: {a:?} vs {b:?}");

            let max_raw = a.chars().count().max(b.chars().count());
            let expected_raw = if max_raw == 0 {
                1.0
            } else {
                1.0 - levenshtein_oracle(&a, &b) as f64 / max_raw as f64
            };
            assert_eq!(edit_similarity(&a, &b), expected_raw, "case {case}");
        }

        // identifier metrics against independent multiset arithmetic
        let profile = IdentifierProfile::python();
        for case in 0..1000 {
            let mk = |rng: &mut rand::rngs::StdRng| -> Vec<String> {
                let n = rng.gen_range(0..10);
                (0..n).map(|_| format!("name{}", rng.gen_range(0..6))).collect()
            };
            let pred_ids = mk(&mut rng);
            let gt_ids = mk(&mut rng);
            let pred = pred_ids.join(" + ");
            let gt = gt_ids.join(" + ");

            let mut inter = 0usize;
            let mut gt_pool = gt_ids.clone();
            for id in &pred_ids {
                if let Some(pos) = gt_pool.iter().position(|g| g == id) {
                    gt_pool.remove(pos);
                    inter += 1;
                }
            }
            let p = if pred_ids.is_empty() { 0.0 } else { inter as f64 / pred_ids.len() as f64 };
            let r = if gt_ids.is_empty() { 0.0 } else { inter as f64 / gt_ids.len() as f64 };
            let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            let em = u32::from(pred_ids == gt_ids);

            assert_eq!(identifier_metrics(&pred, &gt, &profile), (em, p, r, f1), "case {case}");
        }
    });
}

#[test]
fn c6_rationale_monotonicity_and_filters() {
    criterion(6, "rationale is cursor-monotone with cross-file/before-cursor filters", || {
        for name in ["appendix_repo", "worked_example"] {
            let files = load_fixture_files(&fixture(name));
            let facts = analyze_repo(&files);
            let graph = CodeKnowledgeGraph::build(&facts.entities, &facts.relations).unwrap();
            for file in &files {
                let mut previous: BTreeSet<String> = BTreeSet::new();
                for line in 1..=file.line_count {
                    let ctx = retrieve_rationale(&graph, &file.path, line).unwrap();
                    let ids: BTreeSet<String> =
                        ctx.node_ids().iter().map(|s| s.to_string()).collect();
                    assert!(
                        previous.is_subset(&ids),
                        "{name}/{}: line {line} lost items",
                        file.path
                    );
                    // cross-file filter: no item originates from the query file
                    for id in &ids {
                        let node = graph.node(id).expect("item node exists");
                        assert_ne!(node.location.path, file.path);
                    }
                    previous = ids;
                }
            }
        }
    });
}

#[test]
fn c7_end_to_end_determinism() {
    criterion(7, "index+context+prompt are byte-identical across runs", || {
        let root = fixture("worked_example");
        let run = |dir: &Path| -> (String, String, String, String) {
            let config = PipelineConfig {
                scorer: ScorerKind::Random,
                order: PromptOrder::Random,
                seed: 42,
                budget: 120,
                top_k: 4,
                graph_path: dir.join("graph.json").display().to_string(),
                chunk_index_path: dir.join("chunks.json").display().to_string(),
                ..PipelineConfig::default()
            };
            let (artifacts, _, _) = pipeline::index_repo(&root, &config).unwrap();
            pipeline::save_artifacts(&artifacts, &root, &config).unwrap();
            let loaded = pipeline::load_artifacts(&root, &config).unwrap();
            let query = ContextQuery::new(&loaded, &config);
            let (report, _, _) = query.context(&root, "app/main.py", 11).unwrap();
            let bundle = query.prompt(&root, "app/main.py", 11).unwrap();
            (
                std::fs::read_to_string(dir.join("graph.json")).unwrap(),
                std::fs::read_to_string(dir.join("chunks.json")).unwrap(),
                serde_json::to_string(&report).unwrap(),
                serde_json::to_string(&bundle).unwrap(),
            )
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = run(dir_a.path());
        let b = run(dir_b.path());
        assert_eq!(a.0, b.0, "graph artifact must be byte-identical");
        assert_eq!(a.1, b.1, "chunk index must be byte-identical");
        assert_eq!(a.2, b.2, "context report must be byte-identical");
        assert_eq!(a.3, b.3, "prompt bundle must be byte-identical");
    });
}

#[test]
fn c8_scorer_rank_invariance() {
    criterion(8, "affine score transform leaves selection and order unchanged", || {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0xc8);
        let edited = "def f():\n    return 1";
        for case in 0..100 {
            let items = random_items(&mut rng, 14);
            let budget = rng.gen_range(0..300usize);
            let base = build_tdc(&items, budget);
            let transformed: Vec<ScoredItem> = items
                .iter()
                .map(|item| {
                    let mut t = item.clone();
                    t.score = 2.0 * t.score + 1.0;
                    t
                })
                .collect();
            let shifted = build_tdc(&transformed, budget);

            let ids = |t: &TruncatedDualContext| -> Vec<String> {
                t.selected.iter().map(|i| i.item_id.clone()).collect()
            };
            assert_eq!(ids(&base), ids(&shifted), "case {case}");

            let render = |t: &TruncatedDualContext| {
                assemble(t, edited, 2, PromptOrder::HighToLow, 0, 2048, &CodeTokenCounter)
                    .unwrap()
                    .full_prompt
            };
            assert_eq!(render(&base), render(&shifted), "case {case}: prompt order changed");
        }
    });
}

/// Deterministic 20-file repo with cross-imports and recurring idioms.
fn sweep_fixture() -> Vec<SourceFile> {
    (0..20)
        .map(|i: u32| {
            let next = (i + 1) % 20;
            let text = format!(
                "from pkg.mod_{next:02} import Service{next:02}\n\n\nclass Service{i:02}:\n    retries = {i}\n\n    def fetch(self, request):\n        backend = Service{next:02}()\n        payload = backend.prepare(request)\n        return payload\n\n    def prepare(self, request):\n        envelope = dict(request=request, owner={i})\n        return envelope\n\n\ndef run_{i:02}(request):\n    worker = Service{i:02}()\n    return worker.fetch(request)\n"
            );
            SourceFile::new(format!("pkg/mod_{i:02}.py"), text)
        })
        .collect()
}

#[test]
fn c9_truncation_size_sweep() {
    criterion(9, "budget sweep is monotone and never exceeds budget", || {
        let files = sweep_fixture();
        let dir = tempfile::tempdir().unwrap();
        for file in &files {
            let path = dir.path().join(&file.path);
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &file.text).unwrap();
        }

        let mut previous = 0usize;
        for &budget in &repoctx_core::BUDGET_PRESETS {
            let config = PipelineConfig {
                budget,
                top_k: 50,
                epsilon: 0.05,
                ..PipelineConfig::default()
            };
            let (artifacts, summary, _) = pipeline::index_repo(dir.path(), &config).unwrap();
            assert_eq!(summary.n_files, 20);
            let query = ContextQuery::new(&artifacts, &config);
            let (report, tdc, _) = query.context(dir.path(), "pkg/mod_00.py", 19).unwrap();
            assert!(tdc.used_tokens <= budget, "budget={budget}");
            assert!(
                tdc.selected.len() >= previous,
                "budget={budget}: selected {} < previous {previous}",
                tdc.selected.len()
            );
            assert_eq!(report.tdc.len(), tdc.selected.len());
            previous = tdc.selected.len();
        }
        assert!(previous > 0, "largest budget should select items");
    });
}

// The unfinished chunk used across criteria stays consistent with the
// cover's chunk shape: last min(ell, cursor) lines.
#[test]
fn unfinished_chunk_matches_cover_window_shape() {
    let files = sweep_fixture();
    let cover = ChunkCover::build(&files, 10, 5).unwrap();
    let text = &files[0].text;
    let cursor = files[0].line_count;
    let ck = unfinished_chunk(text, cursor, 10).unwrap();
    assert_eq!(ck.lines().count(), 10);
    let chunk_shape: BTreeSet<u32> = cover.chunks.iter().map(|c: &CodeChunk| c.n_lines).collect();
    assert!(chunk_shape.contains(&10));
}
