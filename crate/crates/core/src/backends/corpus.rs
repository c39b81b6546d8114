//! In-memory document corpus ranked by unigram Jaccard overlap.

use std::collections::BTreeSet;
use std::path::Path;

use super::{BackendError, Document, SearchBackend};
use crate::text::word_tokens;

#[derive(Debug, Clone, Default)]
pub struct LocalCorpus {
    docs: Vec<Document>,
    tokens: Vec<BTreeSet<String>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid document {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("duplicate doc_id {0}")]
    DuplicateId(String),
}

impl LocalCorpus {
    pub fn new(docs: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for d in &docs {
            if !seen.insert(d.doc_id.clone()) {
                return Err(CorpusError::DuplicateId(d.doc_id.clone()));
            }
        }
        let tokens = docs.iter().map(doc_tokens).collect();
        Ok(Self { docs, tokens })
    }

    /// Load every `*.json` file in `dir` as one document. Files are read in
    /// name order.
    pub fn from_dir(dir: &Path) -> Result<Self, CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut docs = Vec::with_capacity(paths.len());
        for path in paths {
            let raw = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let doc = serde_json::from_str(&raw).map_err(|source| CorpusError::Json {
                path: path.display().to_string(),
                source,
            })?;
            docs.push(doc);
        }
        Self::new(docs)
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.docs.iter().find(|d| d.doc_id == doc_id)
    }

    /// Jaccard similarity between the query's and each document's token sets.
    pub fn score(&self, query: &str) -> Vec<(usize, f64)> {
        let q: BTreeSet<String> = word_tokens(query).into_iter().collect();
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, d)| (i, jaccard(&q, d)))
            .collect()
    }

    /// Documents with non-zero overlap, score descending then doc_id
    /// ascending, truncated to `top_k`.
    pub fn rank(&self, query: &str, top_k: usize) -> Vec<Document> {
        let mut scored: Vec<(usize, f64)> =
            self.score(query).into_iter().filter(|&(_, s)| s > 0.0).collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.docs[a.0].doc_id.cmp(&self.docs[b.0].doc_id))
        });
        scored
            .into_iter()
            .take(top_k)
            .map(|(i, _)| self.docs[i].clone())
            .collect()
    }
}

fn doc_tokens(doc: &Document) -> BTreeSet<String> {
    word_tokens(&doc.title)
        .into_iter()
        .chain(word_tokens(&doc.content))
        .collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    if inter == 0 {
        return 0.0;
    }
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

impl SearchBackend for LocalCorpus {
    fn name(&self) -> String {
        format!("local-corpus({} docs)", self.docs.len())
    }

    fn search(&self, subquery: &str, top_k: usize) -> Result<Vec<Document>, BackendError> {
        Ok(self.rank(subquery, top_k))
    }
}
