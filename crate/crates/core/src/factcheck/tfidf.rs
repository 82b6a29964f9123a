use std::collections::BTreeMap;

use super::normalize;

/// Sparse vector sorted by term id.
pub(crate) type SparseVec = Vec<(usize, f64)>;

/// Document-frequency table and normalized tf-idf vectors for a corpus.
///
/// Uses raw term counts and the smoothed idf `ln((1 + N) / (1 + df)) + 1`,
/// so terms absent from the corpus still get a finite weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfIndex {
    terms: BTreeMap<String, usize>,
    df: Vec<usize>,
    doc_ids: Vec<String>,
    doc_vectors: Vec<SparseVec>,
}

impl TfIdfIndex {
    /// Indexes `(doc_id, text)` pairs; they are kept in the given order.
    pub fn build<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut terms = BTreeMap::new();
        let mut df: Vec<usize> = Vec::new();
        let mut doc_ids = Vec::new();
        let mut doc_terms = Vec::new();
        for (id, text) in docs {
            let counts = term_counts(&normalize(text));
            for term in counts.keys() {
                let next = terms.len();
                let t = *terms.entry(term.clone()).or_insert(next);
                if t == df.len() {
                    df.push(0);
                }
                df[t] += 1;
            }
            doc_ids.push(id.to_string());
            doc_terms.push(counts);
        }
        let mut index = Self {
            terms,
            df,
            doc_ids,
            doc_vectors: Vec::new(),
        };
        index.doc_vectors = doc_terms
            .iter()
            .map(|counts| index.weigh(counts).0)
            .collect();
        index
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Smoothed inverse document frequency of a (normalized) term.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.terms.get(term).map_or(0, |&t| self.df[t]);
        ((1.0 + self.num_docs() as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    /// Unit tf-idf vector of `text`; out-of-corpus terms only affect its norm.
    pub(crate) fn vectorize(&self, text: &str) -> SparseVec {
        self.weigh(&term_counts(&normalize(text))).0
    }

    fn weigh(&self, counts: &BTreeMap<String, usize>) -> (SparseVec, f64) {
        let mut known = Vec::new();
        let mut norm_sq = 0.0;
        for (term, &tf) in counts {
            let w = tf as f64 * self.idf(term);
            norm_sq += w * w;
            if let Some(&t) = self.terms.get(term) {
                known.push((t, w));
            }
        }
        let norm = norm_sq.sqrt();
        if norm > 0.0 {
            for (_, w) in &mut known {
                *w /= norm;
            }
        }
        known.sort_by_key(|&(t, _)| t);
        (known, norm)
    }

    /// Cosine similarity of `query` against every indexed document, in index order.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let q = self.vectorize(query);
        self.doc_vectors.iter().map(|d| cosine(&q, d)).collect()
    }

    /// Cosine similarity of two texts under this index's idf table.
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        cosine(&self.vectorize(a), &self.vectorize(b))
    }
}

fn term_counts(terms: &[String]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for t in terms {
        *counts.entry(t.clone()).or_insert(0) += 1;
    }
    counts
}

/// Dot product of unit sparse vectors, clamped to `[0, 1]`.
pub(crate) fn cosine(a: &SparseVec, b: &SparseVec) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut dot = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idf_smoothing() {
        let idx = TfIdfIndex::build([("a", "apple pie"), ("b", "apple tart")]);
        assert!((idx.idf("apple") - 1.0).abs() < 1e-15);
        assert!((idx.idf("pie") - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-15);
        assert!((idx.idf("zebra") - (3.0f64.ln() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn self_similarity_and_orthogonality() {
        let idx = TfIdfIndex::build([("a", "apple pie recipe"), ("b", "zebra stripes")]);
        assert!((idx.similarity("apple pie recipe", "apple pie recipe") - 1.0).abs() < 1e-9);
        assert_eq!(idx.similarity("apple", "zebra"), 0.0);
        assert_eq!(idx.similarity("the of", "apple"), 0.0);
    }
}
