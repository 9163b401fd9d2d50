//! Tokenization, vocabularies and static word embeddings.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tensor::Tensor;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const RESERVED: [&str; 4] = [PAD, UNK, CLS, SEP];

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const CLS_ID: usize = 2;
pub const SEP_ID: usize = 3;

pub const DEFAULT_MAX_LEN: usize = 64;
pub const DEFAULT_EMBEDDING_DIM: usize = 300;
const MISSING_INIT: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TextError>;

/// Splits raw text into surface tokens. Framing and id lookup happen in
/// [`Vocabulary::encode`], so any subword scheme can be plugged in here.
pub trait Tokenizer: Send + Sync {
    fn split(&self, text: &str) -> Vec<String>;
}

/// Lowercases, splits on Unicode whitespace and isolates every punctuation
/// character as its own token. Reserved tokens written literally
/// (`[UNK]`, `[SEP]`, ...) survive as single tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct BasicTokenizer;

impl Tokenizer for BasicTokenizer {
    fn split(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            let mut rest = word;
            while !rest.is_empty() {
                if let Some(special) = RESERVED.iter().find(|s| rest.starts_with(**s)) {
                    out.push((*special).to_owned());
                    rest = &rest[special.len()..];
                    continue;
                }
                let c = rest.chars().next().unwrap();
                if c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace()) {
                    out.push(c.to_string());
                    rest = &rest[c.len_utf8()..];
                    continue;
                }
                let end = rest
                    .char_indices()
                    .find(|&(i, ch)| {
                        i > 0 && (ch.is_ascii_punctuation() || !ch.is_alphanumeric() || RESERVED.iter().any(|s| rest[i..].starts_with(s)))
                    })
                    .map_or(rest.len(), |(i, _)| i);
                out.push(rest[..end].to_lowercase());
                rest = &rest[end..];
            }
        }
        out
    }
}

/// Token ids framed by `[CLS]` and `[SEP]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
    pub tokens: Vec<String>,
    pub text: String,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids between the framing tokens.
    pub fn inner_ids(&self) -> &[usize] {
        &self.ids[1..self.ids.len() - 1]
    }

    /// The inner tokens joined by spaces; re-encoding this string yields
    /// the same ids.
    pub fn inner_text(&self) -> String {
        self.tokens[1..self.tokens.len() - 1].join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_tokens(std::iter::empty::<String>())
    }
}

impl Vocabulary {
    /// Reserved tokens first, then `tokens` in order (duplicates ignored).
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary { tokens: Vec::new(), index: HashMap::new() };
        for t in RESERVED {
            v.insert(t.to_owned());
        }
        for t in tokens {
            v.insert(t.into());
        }
        v
    }

    fn insert(&mut self, token: String) {
        if !self.index.contains_key(&token) {
            self.index.insert(token.clone(), self.tokens.len());
            self.tokens.push(token);
        }
    }

    /// Counts tokens over `corpus` and keeps those seen at least
    /// `min_count` times, most frequent first, ties in lexicographic order.
    pub fn build<S: AsRef<str>>(corpus: &[S], min_count: usize, tokenizer: &dyn Tokenizer) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for doc in corpus {
            for tok in tokenizer.split(doc.as_ref()) {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut kept: Vec<(String, usize)> =
            counts.into_iter().filter(|(t, c)| *c >= min_count && !RESERVED.contains(&t.as_str())).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_tokens(kept.into_iter().map(|(t, _)| t))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Tokenizes and frames `text`, truncating so the result holds at most
    /// `max_len` ids (the trailing `[SEP]` is always kept).
    pub fn encode(&self, text: &str, tokenizer: &dyn Tokenizer, max_len: usize) -> TokenSequence {
        let budget = max_len.max(2) - 2;
        let mut ids = vec![CLS_ID];
        let mut tokens = vec![CLS.to_owned()];
        for tok in tokenizer.split(text).into_iter().take(budget) {
            let id = self.id(&tok);
            ids.push(id);
            tokens.push(self.tokens[id].clone());
        }
        ids.push(SEP_ID);
        tokens.push(SEP.to_owned());
        TokenSequence { ids, tokens, text: text.to_owned() }
    }

    /// Writes `token<TAB>id` lines.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (id, tok) in self.tokens.iter().enumerate() {
            writeln!(w, "{tok}\t{id}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (tok, id) =
                line.rsplit_once('\t').ok_or_else(|| TextError::Parse { line: i + 1, message: "expected token<TAB>id".into() })?;
            let id: usize = id.parse().map_err(|_| TextError::Parse { line: i + 1, message: format!("bad id {id:?}") })?;
            pairs.push((id, tok.to_owned()));
        }
        pairs.sort_by_key(|p| p.0);
        for (expected, (id, _)) in pairs.iter().enumerate() {
            if *id != expected {
                return Err(TextError::Config(format!("vocabulary ids not dense at {expected}")));
            }
        }
        for (i, r) in RESERVED.iter().enumerate() {
            if pairs.get(i).map(|p| p.1.as_str()) != Some(r) {
                return Err(TextError::Config(format!("reserved token {r} must have id {i}")));
            }
        }
        Ok(Self::from_tokens(pairs.into_iter().skip(RESERVED.len()).map(|p| p.1)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// One row per vocabulary id.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub vocab: Vocabulary,
    pub matrix: Tensor,
    /// Fraction of non-reserved vocabulary words found in the source file.
    pub coverage: f64,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.matrix.shape()[1]
    }

    /// Seeded `uniform(-0.05, 0.05)` rows with a zero `[PAD]` row.
    pub fn random(vocab: Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data: Vec<f64> = (0..vocab.len() * dim).map(|_| rng.gen_range(-MISSING_INIT..MISSING_INIT)).collect();
        data[PAD_ID * dim..(PAD_ID + 1) * dim].fill(0.0);
        let matrix = Tensor::new(data, &[vocab.len(), dim]).expect("shape matches");
        EmbeddingTable { vocab, matrix, coverage: 0.0 }
    }

    pub fn set_trainable(&self, on: bool) {
        self.matrix.set_requires_grad(on);
    }

    pub fn row(&self, token: &str) -> Vec<f64> {
        let id = self.vocab.id(token);
        let d = self.dim();
        self.matrix.data()[id * d..(id + 1) * d].to_vec()
    }
}

/// Reads a word2vec text file (`count dim` header, then `word v1 .. vdim`).
/// Vocabulary words present in the file get their vectors; every other
/// non-`[PAD]` row is seeded `uniform(-0.05, 0.05)`.
pub fn load_embeddings(path: &Path, vocab: &Vocabulary, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path)?;
    read_embeddings(std::io::BufReader::new(file), vocab, dim, seed)
}

pub fn read_embeddings<R: BufRead>(reader: R, vocab: &Vocabulary, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or(TextError::Parse { line: 1, message: "missing header".into() })??;
    let mut fields = header.split_whitespace();
    let parse_header = |f: Option<&str>| -> Result<usize> {
        f.and_then(|v| v.parse().ok())
            .ok_or_else(|| TextError::Parse { line: 1, message: format!("header must be \"count dim\", got {header:?}") })
    };
    let count = parse_header(fields.next())?;
    let file_dim = parse_header(fields.next())?;
    if fields.next().is_some() {
        return Err(TextError::Parse { line: 1, message: format!("header must be \"count dim\", got {header:?}") });
    }
    if file_dim != dim {
        return Err(TextError::Config(format!("embedding file has dimension {file_dim}, configured {dim}")));
    }
    let table = EmbeddingTable::random(vocab.clone(), dim, seed);
    let mut found = vec![false; vocab.len()];
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let mut parts = line.split(' ').filter(|s| !s.is_empty());
        let word = parts.next().unwrap();
        let values: Vec<f64> = parts
            .map(|v| v.parse::<f64>().map_err(|_| TextError::Parse { line: line_no, message: format!("bad number {v:?}") }))
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(TextError::Parse { line: line_no, message: format!("expected {dim} values, got {}", values.len()) });
        }
        if let Some(&id) = vocab.index.get(word) {
            if id == PAD_ID {
                continue;
            }
            table.matrix.update(|d| d[id * dim..(id + 1) * dim].copy_from_slice(&values));
            found[id] = true;
        }
    }
    if rows != count {
        return Err(TextError::Parse { line: 1, message: format!("header announces {count} vectors, file has {rows}") });
    }
    let words = vocab.len() - RESERVED.len();
    let hits = found[RESERVED.len()..].iter().filter(|f| **f).count();
    Ok(EmbeddingTable { coverage: if words == 0 { 1.0 } else { hits as f64 / words as f64 }, ..table })
}
