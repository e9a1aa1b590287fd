//! Tokenization, vocabulary, word-vector loading and batch encoding.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::corpus::{Paragraph, NUM_CATEGORIES};
use crate::error::{Error, Result};
use crate::nncore::{Mask, Tensor};
use crate::seed::{self, Stream};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Upper bound on sequence length when nothing else is configured.
pub const DEFAULT_MAX_LEN: usize = 500;

const STOPWORDS_EN: &str = include_str!("../assets/stopwords_en.txt");

static DEFAULT_STOPWORDS: LazyLock<StopWords> = LazyLock::new(|| StopWords::parse(STOPWORDS_EN));

#[derive(Clone, Debug, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The bundled English list.
    pub fn english() -> &'static StopWords {
        &DEFAULT_STOPWORDS
    }

    /// One token per line; `#` starts a comment line.
    pub fn parse(raw: &str) -> Self {
        StopWords(
            raw.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(
            &fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        ))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercases, then splits on every character that is not alphanumeric.
pub fn tokenize(text: &str, remove_stopwords: bool) -> Vec<String> {
    tokenize_with(text, remove_stopwords.then(StopWords::english))
}

pub fn tokenize_with(text: &str, stopwords: Option<&StopWords>) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| stopwords.map_or(true, |sw| !sw.contains(t)))
        .map(str::to_string)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            tokens: vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()],
            index: HashMap::new(),
        };
        v.index.insert(PAD_TOKEN.to_string(), PAD_INDEX);
        v.index.insert(UNK_TOKEN.to_string(), UNK_INDEX);
        for t in tokens {
            let t = t.into();
            if v.index.contains_key(&t) {
                // Leading specials are allowed so that saved token lists reload.
                if (t == PAD_TOKEN && v.tokens.len() == 2)
                    || (t == UNK_TOKEN && v.tokens.len() == 2)
                {
                    continue;
                }
                return Err(Error::InvalidArgument(format!(
                    "duplicate vocabulary token `{t}`"
                )));
            }
            v.index.insert(t.clone(), v.tokens.len());
            v.tokens.push(t);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or the unknown index.
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK_INDEX)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Short stable hash of the token list in index order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Tokens seen at least `min_count` times, most frequent first, ties
/// broken lexicographically.
pub fn build_vocab(corpus: &[Vec<String>], min_count: usize) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::InvalidArgument(
            "min_count must be at least 1".into(),
        ));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for doc in corpus {
        for t in doc {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = freq
        .into_iter()
        .filter(|&(t, n)| n >= min_count && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    /// Shape `[vocab.len(), dim]`.
    pub vectors: Tensor,
    pub dim: usize,
    pub vocab: Vocabulary,
    /// Vocabulary rows copied from the vector file.
    pub found: usize,
}

impl EmbeddingTable {
    pub fn row(&self, index: usize) -> &[f64] {
        &self.vectors.data()[index * self.dim..(index + 1) * self.dim]
    }
}

/// Half-width of the uniform range used for tokens missing from the file.
pub const OOV_INIT_RANGE: f64 = 0.05;

pub fn load_embeddings(path: &Path, vocab: &Vocabulary, seed: u64) -> Result<EmbeddingTable> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&raw, path, vocab, seed)
}

/// Parses `token v1 .. vd` lines. A leading word2vec-style `count dim`
/// header line is skipped.
pub fn parse_embeddings(
    raw: &str,
    path: &Path,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<EmbeddingTable> {
    let bad = |line: usize, msg: String| Error::MalformedEmbedding {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut dim: Option<usize> = None;
    let mut rows: HashMap<usize, Vec<f64>> = HashMap::new();
    for (n, line) in raw.lines().enumerate() {
        let lineno = n + 1;
        let mut fields = line.split_ascii_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if n == 0
            && values.len() == 1
            && token.parse::<usize>().is_ok()
            && values[0].parse::<usize>().is_ok()
        {
            continue;
        }
        if values.is_empty() {
            return Err(bad(
                lineno,
                format!("token `{token}` has no vector components"),
            ));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(bad(
                    lineno,
                    format!("expected {d} components, found {}", values.len()),
                ))
            }
            Some(_) => {}
        }
        let Some(idx) = vocab.get(token) else {
            // Still validate numerics so corrupt files fail loudly.
            for v in &values {
                v.parse::<f64>()
                    .map_err(|_| bad(lineno, format!("unparsable float `{v}`")))?;
            }
            continue;
        };
        if idx == PAD_INDEX || rows.contains_key(&idx) {
            continue;
        }
        let mut vec = Vec::with_capacity(values.len());
        for v in &values {
            let x: f64 = v
                .parse()
                .map_err(|_| bad(lineno, format!("unparsable float `{v}`")))?;
            if !x.is_finite() {
                return Err(bad(lineno, format!("non-finite component `{v}`")));
            }
            vec.push(x);
        }
        rows.insert(idx, vec);
    }
    let dim = dim.ok_or_else(|| bad(0, "file contains no vectors".into()))?;
    let found = rows.len();

    let mut rng = seed::rng(seed, Stream::Embedding, 0);
    let mut data = vec![0.0; vocab.len() * dim];
    for idx in 1..vocab.len() {
        let dst = &mut data[idx * dim..(idx + 1) * dim];
        match rows.get(&idx) {
            Some(v) => dst.copy_from_slice(v),
            None => dst
                .iter_mut()
                .for_each(|x| *x = rng.gen_range(-OOV_INIT_RANGE..OOV_INIT_RANGE)),
        }
    }
    Ok(EmbeddingTable {
        vectors: Tensor::new(vec![vocab.len(), dim], data)?,
        dim,
        vocab: vocab.clone(),
        found,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights {
        positive: 1.0,
        negative: 1.0,
    };

    pub fn new(positive: f64, negative: f64) -> Result<Self> {
        if !(positive > 0.0 && negative > 0.0 && positive.is_finite() && negative.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "class weights must be strictly positive, got ({positive}, {negative})"
            )));
        }
        Ok(ClassWeights { positive, negative })
    }

    pub fn for_label(&self, label: bool) -> f64 {
        if label {
            self.positive
        } else {
            self.negative
        }
    }
}

/// What the label columns of an encoded batch hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// One column: the PCL flag.
    Binary,
    /// Seven columns in taxonomy order; non-PCL rows are all zero.
    Categories,
}

impl Target {
    pub fn width(self) -> usize {
        match self {
            Target::Binary => 1,
            Target::Categories => NUM_CATEGORIES,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedBatch {
    pub paragraph_ids: Vec<String>,
    /// Row-major `[batch, max_len]`.
    pub token_ids: Vec<usize>,
    pub mask: Mask,
    /// Row-major `[batch, label_width]`.
    pub labels: Vec<f64>,
    pub label_width: usize,
    pub weights: Vec<f64>,
}

impl EncodedBatch {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.mask.cols()
    }

    pub fn row_ids(&self, row: usize) -> &[usize] {
        let l = self.max_len();
        &self.token_ids[row * l..(row + 1) * l]
    }

    /// Sub-batch of the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> EncodedBatch {
        let l = self.max_len();
        let w = self.label_width;
        let mut token_ids = Vec::with_capacity(rows.len() * l);
        let mut bits = Vec::with_capacity(rows.len() * l);
        let mut labels = Vec::with_capacity(rows.len() * w);
        for &r in rows {
            token_ids.extend_from_slice(self.row_ids(r));
            bits.extend_from_slice(self.mask.row(r));
            labels.extend_from_slice(&self.labels[r * w..(r + 1) * w]);
        }
        EncodedBatch {
            paragraph_ids: rows
                .iter()
                .map(|&r| self.paragraph_ids[r].clone())
                .collect(),
            token_ids,
            mask: Mask::from_bits(rows.len(), l, bits),
            labels,
            label_width: w,
            weights: rows.iter().map(|&r| self.weights[r]).collect(),
        }
    }

    /// Drops trailing columns that are padding in every row.
    pub fn trimmed(&self) -> EncodedBatch {
        let l = self.max_len();
        let used = (0..self.len())
            .map(|r| self.mask.row_count(r))
            .max()
            .unwrap_or(0)
            .max(1);
        if used == l {
            return self.clone();
        }
        let mut token_ids = Vec::with_capacity(self.len() * used);
        let mut bits = Vec::with_capacity(self.len() * used);
        for r in 0..self.len() {
            token_ids.extend_from_slice(&self.row_ids(r)[..used]);
            bits.extend_from_slice(&self.mask.row(r)[..used]);
        }
        EncodedBatch {
            paragraph_ids: self.paragraph_ids.clone(),
            token_ids,
            mask: Mask::from_bits(self.len(), used, bits),
            labels: self.labels.clone(),
            label_width: self.label_width,
            weights: self.weights.clone(),
        }
    }
}

/// Text-to-ids settings shared by training and prediction.
#[derive(Clone, Debug)]
pub struct Encoder<'v> {
    pub vocab: &'v Vocabulary,
    pub max_len: usize,
    pub stopwords: Option<&'v StopWords>,
    pub target: Target,
}

impl<'v> Encoder<'v> {
    pub fn new(vocab: &'v Vocabulary, max_len: usize) -> Self {
        Encoder {
            vocab,
            max_len,
            stopwords: None,
            target: Target::Binary,
        }
    }

    pub fn remove_stopwords(mut self, flag: bool) -> Self {
        self.stopwords = flag.then(StopWords::english);
        self
    }

    pub fn target(mut self, target: Target) -> Self {
        self.target = target;
        self
    }

    pub fn encode(&self, paragraphs: &[Paragraph], weights: ClassWeights) -> Result<EncodedBatch> {
        if self.max_len == 0 {
            return Err(Error::InvalidArgument("max_len must be at least 1".into()));
        }
        let l = self.max_len;
        let width = self.target.width();
        let mut token_ids = vec![PAD_INDEX; paragraphs.len() * l];
        let mut bits = vec![0u8; paragraphs.len() * l];
        let mut labels = Vec::with_capacity(paragraphs.len() * width);
        let mut empty = Vec::new();
        let mut unlabelled = Vec::new();
        for (r, p) in paragraphs.iter().enumerate() {
            let tokens = tokenize_with(&p.text, self.stopwords);
            if tokens.is_empty() {
                empty.push(p.id.clone());
            }
            for (j, t) in tokens.iter().take(l).enumerate() {
                token_ids[r * l + j] = self.vocab.lookup(t);
                bits[r * l + j] = 1;
            }
            match self.target {
                Target::Binary => labels.push(p.label as u8 as f64),
                Target::Categories => match p.category_targets() {
                    Some(c) => labels.extend(c.iter().map(|&b| b as u8 as f64)),
                    None => {
                        unlabelled.push(p.id.clone());
                        labels.extend([0.0; NUM_CATEGORIES]);
                    }
                },
            }
        }
        if !empty.is_empty() {
            return Err(Error::EmptyParagraphs(empty));
        }
        if !unlabelled.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "PCL paragraphs without category annotations: {}",
                unlabelled.join(", ")
            )));
        }
        Ok(EncodedBatch {
            paragraph_ids: paragraphs.iter().map(|p| p.id.clone()).collect(),
            token_ids,
            mask: Mask::from_bits(paragraphs.len(), l, bits),
            labels,
            label_width: width,
            weights: paragraphs
                .iter()
                .map(|p| weights.for_label(p.label))
                .collect(),
        })
    }
}

/// Binary-target encoding without stop-word removal.
pub fn encode_batch(
    paragraphs: &[Paragraph],
    vocab: &Vocabulary,
    max_len: usize,
    class_weights: ClassWeights,
) -> Result<EncodedBatch> {
    Encoder::new(vocab, max_len).encode(paragraphs, class_weights)
}
