//! Analogy context retrieval: successors of cover chunks similar to the
//! unfinished chunk at the cursor.

use crate::chunk::{ChunkCover, CodeChunk};
use crate::similarity::{edit_similarity, jaccard, token_set, Bm25Index};
use serde::{Deserialize, Serialize};

/// Which similarity scores chunks against the unfinished chunk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SimilarityFn {
    /// Jaccard over code token sets; range [0, 1].
    Jaccard,
    /// Normalized character edit similarity; range [0, 1].
    Edit,
    /// Okapi BM25 over the chunk corpus; unnormalized, >= 0.
    Bm25 { k1: f64, b: f64 },
}

impl SimilarityFn {
    pub fn bm25_default() -> SimilarityFn {
        SimilarityFn::Bm25 { k1: 1.2, b: 0.75 }
    }
}

/// One retrieved exemplar: a similar chunk and the text that followed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyItem {
    /// The chunk that matched the unfinished chunk.
    pub source: CodeChunk,
    /// Text of its successor chunk; tail chunks with no successor
    /// contribute their own text.
    pub text: String,
    pub score: f64,
}

/// The analogy context: threshold-passing matches, best first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalogyContext {
    pub items: Vec<AnalogyItem>,
}

/// Score every cover chunk outside `exclude_file` against `ck_star`, admit
/// those with `sim >= threshold`, and return up to `top_k` successors ordered
/// by (score desc, file asc, start_line asc).
pub fn retrieve_analogy(
    ck_star: &str,
    cover: &ChunkCover,
    sim: SimilarityFn,
    threshold: f64,
    top_k: usize,
    exclude_file: &str,
) -> AnalogyContext {
    let bm25 = match sim {
        SimilarityFn::Bm25 { k1, b } => {
            let docs: Vec<&str> = cover.chunks.iter().map(|c| c.text.as_str()).collect();
            Some(Bm25Index::build(&docs, k1, b))
        }
        _ => None,
    };
    let star_tokens = token_set(ck_star);

    let mut scored: Vec<(usize, f64)> = Vec::new();
    for (idx, chunk) in cover.chunks.iter().enumerate() {
        if chunk.file == exclude_file {
            continue;
        }
        let score = match sim {
            SimilarityFn::Jaccard => jaccard(&token_set(&chunk.text), &star_tokens),
            SimilarityFn::Edit => edit_similarity(&chunk.text, ck_star),
            SimilarityFn::Bm25 { .. } => bm25.as_ref().expect("index built").score(idx, ck_star),
        };
        if score >= threshold {
            scored.push((idx, score));
        }
    }

    scored.sort_by(|(ia, sa), (ib, sb)| {
        let a = &cover.chunks[*ia];
        let b = &cover.chunks[*ib];
        sb.total_cmp(sa)
            .then_with(|| a.file.cmp(&b.file))
            .then_with(|| a.start_line.cmp(&b.start_line))
    });
    scored.truncate(top_k);

    let items = scored
        .into_iter()
        .map(|(idx, score)| {
            let chunk = &cover.chunks[idx];
            let text = cover
                .successor(chunk)
                .map(|succ| succ.text.clone())
                .unwrap_or_else(|| chunk.text.clone());
            AnalogyItem {
                source: chunk.clone(),
                text,
                score,
            }
        })
        .collect();
    AnalogyContext { items }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SourceFile;

    fn cover_for(files: Vec<SourceFile>, ell: u32, eta: u32) -> ChunkCover {
        ChunkCover::build(&files, ell, eta).unwrap()
    }

    #[test]
    fn shared_tokens_rank_first_and_return_successor() {
        let edited = "def login(self, user):\n    token = self.user_service.";
        let similar = SourceFile::new(
            "auth.py",
            "def login(self, user):\n    token = self.user_service.validate(user)\n    return token\n    # trailing\n",
        );
        let unrelated = SourceFile::new(
            "math_util.py",
            "x1 = 3.14159\nmatrix = [[1, 0], [0, 1]]\ntotals = sum(map(abs, vec))\nprint(totals)\n",
        );
        let cover = cover_for(vec![similar, unrelated], 2, 1);
        let ctx = retrieve_analogy(edited, &cover, SimilarityFn::Jaccard, 0.2, 5, "app.py");
        assert!(!ctx.items.is_empty());
        assert_eq!(ctx.items[0].source.file, "auth.py");
        // the top match starts at line 1, so its successor begins at line 2
        assert_eq!(ctx.items[0].source.start_line, 1);
        assert!(ctx.items[0].text.contains("validate"));
    }

    #[test]
    fn threshold_admitting_nothing_is_empty() {
        let files = vec![SourceFile::new("a.py", "alpha beta\ngamma delta\n")];
        let cover = cover_for(files, 2, 1);
        let ctx = retrieve_analogy("zeta eta", &cover, SimilarityFn::Jaccard, 0.9, 5, "b.py");
        assert!(ctx.items.is_empty());
    }

    #[test]
    fn top_k_keeps_the_higher_scored_chunk() {
        let close = SourceFile::new("close.py", "user service token\nresult line close\n");
        let far = SourceFile::new("far.py", "user unrelated words\nresult line far\n");
        let cover = cover_for(vec![close, far], 2, 2);
        let ctx = retrieve_analogy(
            "user service token",
            &cover,
            SimilarityFn::Jaccard,
            0.01,
            1,
            "edited.py",
        );
        assert_eq!(ctx.items.len(), 1);
        assert_eq!(ctx.items[0].source.file, "close.py");
    }

    #[test]
    fn excluded_file_never_contributes() {
        let a = SourceFile::new("a.py", "same tokens here\nsame tokens here\n");
        let b = SourceFile::new("b.py", "same tokens here\nsame tokens here\n");
        let cover = cover_for(vec![a, b], 2, 2);
        let ctx = retrieve_analogy(
            "same tokens here",
            &cover,
            SimilarityFn::Jaccard,
            0.1,
            10,
            "a.py",
        );
        assert!(!ctx.items.is_empty());
        assert!(ctx.items.iter().all(|item| item.source.file == "b.py"));
    }

    #[test]
    fn ordering_is_score_then_file_then_line() {
        let a = SourceFile::new("a.py", "one two\none two\n");
        let b = SourceFile::new("b.py", "one two\none two\n");
        let cover = cover_for(vec![a, b], 2, 2);
        let ctx = retrieve_analogy("one two", &cover, SimilarityFn::Jaccard, 0.1, 10, "x.py");
        let order: Vec<(&str, u32)> = ctx
            .items
            .iter()
            .map(|i| (i.source.file.as_str(), i.source.start_line))
            .collect();
        assert_eq!(order, vec![("a.py", 1), ("b.py", 1)]);
    }

    #[test]
    fn bm25_retrieval_scores_are_nonnegative() {
        let files = vec![
            SourceFile::new("a.py", "def validate_user(uid):\n    return uid\n"),
            SourceFile::new("b.py", "class Other:\n    pass\n"),
        ];
        let cover = cover_for(files, 2, 1);
        let ctx = retrieve_analogy(
            "validate_user(uid)",
            &cover,
            SimilarityFn::bm25_default(),
            0.0,
            10,
            "edited.py",
        );
        assert!(ctx.items.iter().all(|i| i.score >= 0.0));
        assert_eq!(ctx.items[0].source.file, "a.py");
    }
}
