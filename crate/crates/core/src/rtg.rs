//! Rank truncated generation: score the fused candidate set against the
//! unfinished chunk and keep the maximal rank-prefix that fits the token
//! budget.
//!
//! The candidate set U is the union of rationale items (methods, classes,
//! packages) and analogy items. Selection depends only on the rank order of
//! scores, never their magnitudes; ties break rationale-before-analogy, then
//! by item ID. Truncation stops at the first item that would overflow the
//! budget — the rank constraint forbids skipping ahead to a smaller,
//! lower-ranked item, so the result may be smaller than the largest feasible
//! subset.

use crate::analogy::AnalogyContext;
use crate::error::{Error, Result};
use crate::rationale::RationaleContext;
use crate::similarity::{edit_similarity, jaccard, token_set};
use crate::stablehash::unit_score;
use crate::token::token_count;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Where a candidate came from. Rationale kinds outrank analogy on ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CandidateSource {
    #[serde(rename = "rationale-method")]
    RationaleMethod,
    #[serde(rename = "rationale-class")]
    RationaleClass,
    #[serde(rename = "rationale-package")]
    RationalePackage,
    #[serde(rename = "analogy")]
    Analogy,
}

impl CandidateSource {
    /// 0 for rationale sources, 1 for analogy: the tie-break priority.
    fn priority(&self) -> u8 {
        match self {
            CandidateSource::Analogy => 1,
            _ => 0,
        }
    }

    pub fn is_analogy(&self) -> bool {
        matches!(self, CandidateSource::Analogy)
    }
}

/// An unscored member of the fused candidate set U.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub item_id: String,
    pub source: CandidateSource,
    /// Repo path the item originated from.
    pub origin_path: String,
    pub text: String,
}

/// A candidate with its relevance score and token length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item_id: String,
    pub source: CandidateSource,
    pub origin_path: String,
    pub text: String,
    pub score: f64,
    pub token_len: usize,
}

/// Counts tokens for budget accounting. The default is the deterministic
/// code tokenizer, so budgets are meaningful without any model tokenizer.
pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

/// Default counter backed by the code tokenizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct CodeTokenCounter;

impl TokenCounter for CodeTokenCounter {
    fn count(&self, text: &str) -> usize {
        token_count(text)
    }
}

/// External embedding backend for the semantic scorer.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// The scoring function induced by the unfinished chunk.
pub enum Scorer {
    LexicalJaccard,
    LexicalEdit,
    Semantic(Box<dyn EmbeddingProvider>),
    Random { seed: u64 },
    Oracle { table: BTreeMap<String, f64> },
}

impl Scorer {
    /// Load an oracle score table: a JSON map item_id → score.
    pub fn oracle_from_json(origin: &str, text: &str) -> Result<Scorer> {
        let table: BTreeMap<String, f64> =
            serde_json::from_str(text).map_err(|e| Error::corrupt(origin, text, &e))?;
        Ok(Scorer::Oracle { table })
    }

    fn score(&self, candidate: &Candidate, ck_star: &str) -> Result<f64> {
        match self {
            Scorer::LexicalJaccard => Ok(jaccard(
                &token_set(&candidate.text),
                &token_set(ck_star),
            )),
            Scorer::LexicalEdit => Ok(edit_similarity(&candidate.text, ck_star)),
            Scorer::Semantic(provider) => {
                let a = provider.embed(&candidate.text)?;
                let b = provider.embed(ck_star)?;
                Ok(cosine(&a, &b))
            }
            Scorer::Random { seed } => Ok(unit_score(*seed, &candidate.item_id)),
            Scorer::Oracle { table } => table
                .get(&candidate.item_id)
                .copied()
                .ok_or_else(|| Error::OracleMissing(candidate.item_id.clone())),
        }
    }
}

/// Cosine similarity; zero vectors score 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Score every candidate against `ck_star`. Order-independent: each item's
/// score depends only on (scorer, item), so permuting the input permutes the
/// output.
pub fn score_candidates(
    candidates: &[Candidate],
    ck_star: &str,
    scorer: &Scorer,
    counter: &dyn TokenCounter,
) -> Result<Vec<ScoredItem>> {
    candidates
        .iter()
        .map(|candidate| {
            Ok(ScoredItem {
                item_id: candidate.item_id.clone(),
                source: candidate.source,
                origin_path: candidate.origin_path.clone(),
                text: candidate.text.clone(),
                score: scorer.score(candidate, ck_star)?,
                token_len: counter.count(&candidate.text),
            })
        })
        .collect()
}

/// The budget-bounded rank-prefix of the candidate set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncatedDualContext {
    /// Selected items in rank order (most relevant first).
    pub selected: Vec<ScoredItem>,
    pub budget: usize,
    pub used_tokens: usize,
}

impl TruncatedDualContext {
    pub fn analogy_count(&self) -> usize {
        self.selected.iter().filter(|i| i.source.is_analogy()).count()
    }

    pub fn rationale_count(&self) -> usize {
        self.selected.len() - self.analogy_count()
    }
}

/// Canonical rank order: score desc, rationale before analogy, item ID asc.
pub fn rank_order(scored: &[ScoredItem]) -> Vec<ScoredItem> {
    let mut items = scored.to_vec();
    items.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.source.priority().cmp(&b.source.priority()))
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
    items
}

/// Keep the maximal rank-prefix whose cumulative token length fits `budget`.
pub fn build_tdc(scored: &[ScoredItem], budget: usize) -> TruncatedDualContext {
    let ranked = rank_order(scored);
    let mut selected = Vec::new();
    let mut used_tokens = 0usize;
    for item in ranked {
        if used_tokens + item.token_len > budget {
            break;
        }
        used_tokens += item.token_len;
        selected.push(item);
    }
    TruncatedDualContext {
        selected,
        budget,
        used_tokens,
    }
}

/// Flatten rationale + analogy contexts into the fused candidate set U.
///
/// Rationale items are identified by their node ID; analogy items by
/// `analogy:<file>:<start_line>` of the source chunk.
pub fn fuse_candidates(rationale: &RationaleContext, analogy: &AnalogyContext) -> Vec<Candidate> {
    let mut out = Vec::new();
    let buckets = [
        (&rationale.methods, CandidateSource::RationaleMethod),
        (&rationale.classes, CandidateSource::RationaleClass),
        (&rationale.packages, CandidateSource::RationalePackage),
    ];
    for (items, source) in buckets {
        for item in items.iter() {
            let origin_path = item
                .node_id
                .split('@')
                .nth(1)
                .and_then(|loc| loc.rsplit_once(':'))
                .map(|(path, _)| path.to_string())
                .unwrap_or_default();
            out.push(Candidate {
                item_id: item.node_id.clone(),
                source,
                origin_path,
                text: item.text.clone(),
            });
        }
    }
    for item in &analogy.items {
        out.push(Candidate {
            item_id: format!("analogy:{}:{}", item.source.file, item.source.start_line),
            source: CandidateSource::Analogy,
            origin_path: item.source.file.clone(),
            text: item.text.clone(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate(id: &str, source: CandidateSource, text: &str) -> Candidate {
        Candidate {
            item_id: id.to_string(),
            source,
            origin_path: "x.py".to_string(),
            text: text.to_string(),
        }
    }

    fn item(id: &str, score: f64, token_len: usize) -> ScoredItem {
        ScoredItem {
            item_id: id.to_string(),
            source: CandidateSource::Analogy,
            origin_path: "x.py".to_string(),
            text: String::new(),
            score,
            token_len,
        }
    }

    #[test]
    fn jaccard_scores_identical_text_as_one() {
        let cands = vec![candidate("a", CandidateSource::Analogy, "user = service.get()")];
        let scored = score_candidates(
            &cands,
            "user = service.get()",
            &Scorer::LexicalJaccard,
            &CodeTokenCounter,
        )
        .unwrap();
        assert_eq!(scored[0].score, 1.0);
        assert_eq!(scored[0].token_len, 7);
    }

    #[test]
    fn random_scorer_is_order_independent() {
        let a = candidate("a", CandidateSource::Analogy, "one");
        let b = candidate("b", CandidateSource::Analogy, "two");
        let scorer = Scorer::Random { seed: 9 };
        let fwd = score_candidates(&[a.clone(), b.clone()], "", &scorer, &CodeTokenCounter).unwrap();
        let rev = score_candidates(&[b, a], "", &scorer, &CodeTokenCounter).unwrap();
        let find = |items: &[ScoredItem], id: &str| -> f64 {
            items.iter().find(|i| i.item_id == id).unwrap().score
        };
        assert_eq!(find(&fwd, "a"), find(&rev, "a"));
        assert_eq!(find(&fwd, "b"), find(&rev, "b"));
    }

    #[test]
    fn oracle_reads_back_verbatim_and_errors_on_missing() {
        let scorer = Scorer::oracle_from_json("t", r#"{"A": 0.9, "B": 0.1}"#).unwrap();
        let cands = vec![
            candidate("A", CandidateSource::RationaleClass, "x"),
            candidate("B", CandidateSource::Analogy, "y"),
        ];
        let scored = score_candidates(&cands, "", &scorer, &CodeTokenCounter).unwrap();
        assert_eq!(scored[0].score, 0.9);
        assert_eq!(scored[1].score, 0.1);
        let missing = vec![candidate("C", CandidateSource::Analogy, "z")];
        let err = score_candidates(&missing, "", &scorer, &CodeTokenCounter).unwrap_err();
        assert!(err.to_string().contains('C'));
    }

    struct OneHotProvider;
    impl EmbeddingProvider for OneHotProvider {
        fn embed(&self, text: &str) -> Result<Vec<f64>> {
            // dimension = token count bucket, hand-computable cosines
            let n = token_count(text).min(3);
            let mut v = vec![0.0; 4];
            v[n] = 1.0;
            Ok(v)
        }
    }

    #[test]
    fn semantic_scorer_uses_provider_cosine() {
        let scorer = Scorer::Semantic(Box::new(OneHotProvider));
        let cands = vec![
            candidate("same-bucket", CandidateSource::Analogy, "a b"),
            candidate("other-bucket", CandidateSource::Analogy, "a b c"),
        ];
        let scored = score_candidates(&cands, "x y", &scorer, &CodeTokenCounter).unwrap();
        assert!((scored[0].score - 1.0).abs() < 1e-6);
        assert_eq!(scored[1].score, 0.0);
    }

    #[test]
    fn zero_vector_scores_zero() {
        struct ZeroProvider;
        impl EmbeddingProvider for ZeroProvider {
            fn embed(&self, _: &str) -> Result<Vec<f64>> {
                Ok(vec![0.0; 3])
            }
        }
        let scorer = Scorer::Semantic(Box::new(ZeroProvider));
        let cands = vec![candidate("z", CandidateSource::Analogy, "text")];
        let scored = score_candidates(&cands, "text", &scorer, &CodeTokenCounter).unwrap();
        assert_eq!(scored[0].score, 0.0);
    }

    #[test]
    fn tdc_takes_all_when_budget_is_large() {
        let items = vec![item("a", 0.9, 10), item("b", 0.5, 20)];
        let tdc = build_tdc(&items, 1000);
        assert_eq!(tdc.selected.len(), 2);
        assert_eq!(tdc.used_tokens, 30);
    }

    #[test]
    fn tdc_zero_budget_is_empty() {
        let items = vec![item("a", 0.9, 10)];
        let tdc = build_tdc(&items, 0);
        assert!(tdc.selected.is_empty());
        assert_eq!(tdc.used_tokens, 0);
    }

    #[test]
    fn rank_constraint_blocks_skip_ahead() {
        // scores 0.9/0.8/0.7 with lengths 100/300/50 at budget 250: the 0.8
        // item overflows and the rank constraint blocks the 0.7 item.
        let items = vec![
            item("a", 0.9, 100),
            item("b", 0.8, 300),
            item("c", 0.7, 50),
        ];
        let tdc = build_tdc(&items, 250);
        let ids: Vec<&str> = tdc.selected.iter().map(|i| i.item_id.as_str()).collect();
        assert_eq!(ids, vec!["a"]);
        assert_eq!(tdc.used_tokens, 100);
    }

    #[test]
    fn ties_prefer_rationale_then_id() {
        let mut a = item("zz", 0.5, 1);
        a.source = CandidateSource::RationaleMethod;
        let b = item("aa", 0.5, 1);
        let ranked = rank_order(&[b, a]);
        assert_eq!(ranked[0].item_id, "zz");
        assert_eq!(ranked[1].item_id, "aa");
    }

    #[test]
    fn tdc_matches_brute_force_prefix_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x7dc0);
        for _ in 0..500 {
            let n = rng.gen_range(0..=12usize);
            let items: Vec<ScoredItem> = (0..n)
                .map(|i| {
                    let mut it = item(&format!("i{i}"), rng.gen_range(0.0..1.0), rng.gen_range(0..40));
                    if rng.gen_bool(0.5) {
                        it.source = CandidateSource::RationaleClass;
                    }
                    it
                })
                .collect();
            let budget = rng.gen_range(0..200usize);
            let tdc = build_tdc(&items, budget);

            // Oracle: the longest prefix of the canonical order within budget.
            let ranked = rank_order(&items);
            let mut best_len = 0usize;
            let mut sum = 0usize;
            for (idx, it) in ranked.iter().enumerate() {
                sum += it.token_len;
                if sum <= budget {
                    best_len = idx + 1;
                } else {
                    break;
                }
            }
            assert_eq!(tdc.selected.len(), best_len);
            assert!(tdc.used_tokens <= budget);
            let expected: Vec<&str> = ranked[..best_len].iter().map(|i| i.item_id.as_str()).collect();
            let got: Vec<&str> = tdc.selected.iter().map(|i| i.item_id.as_str()).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn selection_is_invariant_under_monotone_score_transform() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(31);
        for _ in 0..100 {
            let n = rng.gen_range(0..=10usize);
            let items: Vec<ScoredItem> = (0..n)
                .map(|i| item(&format!("i{i}"), rng.gen_range(0.0..1.0), rng.gen_range(1..30)))
                .collect();
            let budget = rng.gen_range(0..150usize);
            let base = build_tdc(&items, budget);
            let transformed: Vec<ScoredItem> = items
                .iter()
                .map(|it| {
                    let mut t = it.clone();
                    t.score = 2.0 * t.score + 1.0;
                    t
                })
                .collect();
            let shifted = build_tdc(&transformed, budget);
            let ids = |t: &TruncatedDualContext| -> Vec<String> {
                t.selected.iter().map(|i| i.item_id.clone()).collect()
            };
            assert_eq!(ids(&base), ids(&shifted));
        }
    }

    struct WhitespaceCounter;
    impl TokenCounter for WhitespaceCounter {
        fn count(&self, text: &str) -> usize {
            text.split_whitespace().count()
        }
    }

    #[test]
    fn budget_invariants_hold_under_any_counter() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        let words = ["alpha", "beta()", "x=1", "if a:", "return foo.bar"];
        for _ in 0..100 {
            let candidates: Vec<Candidate> = (0..rng.gen_range(0..10usize))
                .map(|i| {
                    let n = rng.gen_range(0..6);
                    let text = (0..n)
                        .map(|_| words[rng.gen_range(0..words.len())])
                        .collect::<Vec<_>>()
                        .join(" ");
                    candidate(&format!("i{i}"), CandidateSource::Analogy, &text)
                })
                .collect();
            let budget = rng.gen_range(0..40usize);
            for counter in [&CodeTokenCounter as &dyn TokenCounter, &WhitespaceCounter] {
                let scored =
                    score_candidates(&candidates, "alpha beta", &Scorer::LexicalJaccard, counter)
                        .unwrap();
                let tdc = build_tdc(&scored, budget);
                assert!(tdc.used_tokens <= budget);
                // rank-prefix: selected IDs are the head of the canonical order
                let ranked = rank_order(&scored);
                for (selected, ranked_item) in tdc.selected.iter().zip(&ranked) {
                    assert_eq!(selected.item_id, ranked_item.item_id);
                }
            }
        }
    }

    #[test]
    fn fuse_derives_ids_and_origins() {
        let rationale = RationaleContext {
            methods: vec![crate::rationale::RationaleItem {
                node_id: "f:FUNCTION@utils/helpers.py:1.1-2.14".into(),
                text: "def f():".into(),
            }],
            classes: vec![],
            packages: vec![],
        };
        let analogy = AnalogyContext {
            items: vec![crate::analogy::AnalogyItem {
                source: crate::chunk::CodeChunk {
                    file: "handlers/auth.py".into(),
                    start_line: 3,
                    n_lines: 4,
                    text: "chunk".into(),
                },
                text: "succ".into(),
                score: 0.7,
            }],
        };
        let fused = fuse_candidates(&rationale, &analogy);
        assert_eq!(fused.len(), 2);
        assert_eq!(fused[0].origin_path, "utils/helpers.py");
        assert_eq!(fused[1].item_id, "analogy:handlers/auth.py:3");
        assert_eq!(fused[1].origin_path, "handlers/auth.py");
    }
}
