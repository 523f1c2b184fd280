//! Sentence featurizers: TF-IDF and averaged pretrained word vectors.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of in-table tokens averaged per sentence.
pub const DEFAULT_TOKEN_CAP: usize = 100;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("corpus contains no tokens")]
    EmptyVocabulary,
    #[error("word vectors: missing or malformed `count dimension` header")]
    MissingHeader,
    #[error("word vectors line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("word vectors line {line}: cannot parse `{value}` as a number")]
    BadFloat { line: usize, value: String },
    #[error("word vectors line {line}: non-finite component")]
    NonFinite { line: usize },
    #[error("vocabulary document is inconsistent: {0}")]
    InvalidVocabulary(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Lowercase tokens with no empty entries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenList(Vec<String>);

impl TokenList {
    /// Lowercases each token and drops empty ones.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TokenList(
            tokens
                .into_iter()
                .map(|t| t.as_ref().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl AsRef<[String]> for TokenList {
    fn as_ref(&self) -> &[String] {
        &self.0
    }
}

/// Lowercase, split on whitespace, strip leading and trailing
/// non-alphanumeric characters from each piece and drop what becomes empty.
pub fn tokenize(text: &str) -> TokenList {
    TokenList(
        text.split_whitespace()
            .map(|w| {
                w.trim_matches(|c: char| !c.is_alphanumeric())
                    .to_lowercase()
            })
            .filter(|w| !w.is_empty())
            .collect(),
    )
}

/// Dense, finite feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(components: Vec<f64>) -> Self {
        debug_assert!(components.iter().all(|c| c.is_finite()));
        FeatureVector(components)
    }

    pub fn zeros(dimension: usize) -> Self {
        FeatureVector(vec![0.0; dimension])
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub id: usize,
    pub df: usize,
}

/// Fitted TF-IDF state. Term ids follow lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: BTreeMap<String, TermEntry>,
    document_count: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyDocument {
    terms: Vec<String>,
    dfs: Vec<usize>,
    document_count: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn get(&self, term: &str) -> Option<TermEntry> {
        self.terms.get(term).copied()
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf_for_df(&self, df: usize) -> f64 {
        ((1.0 + self.document_count as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.get(term).map(|e| self.idf_for_df(e.df))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, TermEntry)> {
        self.terms.iter().map(|(t, e)| (t.as_str(), *e))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_document()).expect("vocabulary serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self, FeatureError> {
        let doc: VocabularyDocument = serde_json::from_value(value)
            .map_err(|e| FeatureError::InvalidVocabulary(e.to_string()))?;
        Self::from_document(doc)
    }

    fn to_document(&self) -> VocabularyDocument {
        VocabularyDocument {
            terms: self.terms.keys().cloned().collect(),
            dfs: self.terms.values().map(|e| e.df).collect(),
            document_count: self.document_count,
        }
    }

    fn from_document(doc: VocabularyDocument) -> Result<Self, FeatureError> {
        if doc.terms.len() != doc.dfs.len() {
            return Err(FeatureError::InvalidVocabulary(
                "terms and dfs differ in length".into(),
            ));
        }
        if doc.document_count == 0 {
            return Err(FeatureError::InvalidVocabulary(
                "document_count is 0".into(),
            ));
        }
        let mut terms = BTreeMap::new();
        for (term, df) in doc.terms.into_iter().zip(doc.dfs) {
            if df == 0 || df > doc.document_count {
                return Err(FeatureError::InvalidVocabulary(format!(
                    "df {df} for `{term}` outside 1..={}",
                    doc.document_count
                )));
            }
            terms.insert(term, TermEntry { id: 0, df });
        }
        for (id, entry) in terms.values_mut().enumerate() {
            entry.id = id;
        }
        Ok(Vocabulary {
            terms,
            document_count: doc.document_count,
        })
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = VocabularyDocument::deserialize(d)?;
        Vocabulary::from_document(doc).map_err(serde::de::Error::custom)
    }
}

pub fn fit_tfidf(documents: &[TokenList]) -> Result<Vocabulary, FeatureError> {
    if documents.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut terms: BTreeMap<String, TermEntry> = BTreeMap::new();
    for doc in documents {
        let mut seen: Vec<&str> = doc.tokens().iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for term in seen {
            terms
                .entry(term.to_string())
                .or_insert(TermEntry { id: 0, df: 0 })
                .df += 1;
        }
    }
    if terms.is_empty() {
        return Err(FeatureError::EmptyVocabulary);
    }
    for (id, entry) in terms.values_mut().enumerate() {
        entry.id = id;
    }
    Ok(Vocabulary {
        terms,
        document_count: documents.len(),
    })
}

/// Term-count × idf, L2-normalized. Unknown tokens are ignored; a document
/// with no known tokens maps to the zero vector.
pub fn transform_tfidf(vocab: &Vocabulary, doc: &TokenList) -> FeatureVector {
    let mut components = vec![0.0; vocab.len()];
    for token in doc.tokens() {
        if let Some(entry) = vocab.get(token) {
            components[entry.id] += 1.0;
        }
    }
    for (_, entry) in vocab.iter() {
        if components[entry.id] != 0.0 {
            components[entry.id] *= vocab.idf_for_df(entry.df);
        }
    }
    let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in &mut components {
            *c /= norm;
        }
    }
    FeatureVector(components)
}

/// Pretrained word vectors loaded from the FastText text export.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "word vector dimension must be positive");
        WordVectorTable {
            dimension,
            vectors: HashMap::new(),
        }
    }

    /// Insert or replace a vector. Panics if its length differs from the table dimension.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dimension, "vector dimension mismatch");
        self.vectors.insert(word.into(), vector);
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn load_path(path: &Path) -> Result<Self, FeatureError> {
        let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        load_word_vectors(&text)
    }
}

/// Parse `count dimension` followed by `word v1 ... vd` rows. Later rows for
/// the same word replace earlier ones.
pub fn load_word_vectors(input: &str) -> Result<WordVectorTable, FeatureError> {
    let mut lines = input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(FeatureError::MissingHeader)?;
    let mut fields = header.split_whitespace();
    let (Some(count), Some(dim), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(FeatureError::MissingHeader);
    };
    let _count: usize = count.parse().map_err(|_| FeatureError::MissingHeader)?;
    let dimension: usize = dim.parse().map_err(|_| FeatureError::MissingHeader)?;
    if dimension == 0 {
        return Err(FeatureError::MissingHeader);
    }

    let mut table = WordVectorTable::new(dimension);
    for (n, line) in lines {
        let line_no = n + 1;
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-blank line has a field");
        let values = fields
            .map(|v| {
                v.parse::<f64>().map_err(|_| FeatureError::BadFloat {
                    line: line_no,
                    value: v.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != dimension {
            return Err(FeatureError::DimensionMismatch {
                line: line_no,
                expected: dimension,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite { line: line_no });
        }
        table.vectors.insert(word.to_string(), values);
    }
    Ok(table)
}

/// Mean of the vectors of the first `token_cap` tokens that the table knows.
/// Returns the zero vector when none are known.
pub fn embed_average(table: &WordVectorTable, doc: &TokenList, token_cap: usize) -> FeatureVector {
    let mut sum = vec![0.0; table.dimension];
    let mut used = 0usize;
    for vector in doc
        .tokens()
        .iter()
        .filter_map(|t| table.get(t))
        .take(token_cap)
    {
        for (s, v) in sum.iter_mut().zip(vector) {
            *s += v;
        }
        used += 1;
    }
    if used > 0 {
        let n = used as f64;
        for s in &mut sum {
            *s /= n;
        }
    }
    FeatureVector(sum)
}
