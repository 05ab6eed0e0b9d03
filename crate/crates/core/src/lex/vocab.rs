use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::tokenizer::{TokenStream, NUM_TOKEN};

pub const PAD: &str = "<PAD>";
pub const UNK: &str = "<UNK>";
pub const ADD: &str = "<ADD>";
pub const DEL: &str = "<DEL>";
pub const SEP: &str = "<SEP>";

/// Reserved tokens, in id order. `<PAD>` is always id 0.
pub const SPECIALS: [&str; 6] = [PAD, UNK, NUM_TOKEN, ADD, DEL, SEP];

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const NUM_ID: u32 = 2;
pub const ADD_ID: u32 = 3;
pub const DEL_ID: u32 = 4;
pub const SEP_ID: u32 = 5;

pub const DEFAULT_MIN_COUNT: u64 = 3;
pub const DEFAULT_MAX_SIZE: usize = 100_000;

const HEADER_MAGIC: &str = "CSENT-VOCAB";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("invalid vocabulary parameters: {0}")]
    InvalidParams(String),
    #[error("vocabulary file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Token counts gathered from one or more streams. Partial counts built on
/// separate workers are combined with [`TokenCounts::merge`].
#[derive(Debug, Clone, Default)]
pub struct TokenCounts(HashMap<String, u64>);

impl TokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_stream(&mut self, stream: &TokenStream) {
        for text in stream.texts() {
            self.add(text, 1);
        }
    }

    pub fn add(&mut self, token: &str, n: u64) {
        if let Some(c) = self.0.get_mut(token) {
            *c += n;
        } else {
            self.0.insert(token.to_owned(), n);
        }
    }

    pub fn merge(&mut self, other: TokenCounts) {
        for (tok, n) in other.0 {
            *self.0.entry(tok).or_insert(0) += n;
        }
    }

    pub fn get(&self, token: &str) -> u64 {
        self.0.get(token).copied().unwrap_or(0)
    }
}

/// Dense token ↔ id mapping with corpus counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    min_count: u64,
    max_size: usize,
}

/// Tokens that cannot be written to the tab-separated vocabulary file.
fn storable(token: &str) -> bool {
    !token.contains(['\t', '\n', '\r'])
}

pub fn build_vocabulary<'a>(
    streams: impl IntoIterator<Item = &'a TokenStream>,
    min_count: u64,
    max_size: usize,
) -> Result<Vocabulary, VocabError> {
    let mut counts = TokenCounts::new();
    for s in streams {
        counts.add_stream(s);
    }
    Vocabulary::from_counts(&counts, min_count, max_size)
}

impl Vocabulary {
    pub fn from_counts(counts: &TokenCounts, min_count: u64, max_size: usize) -> Result<Self, VocabError> {
        if min_count < 1 {
            return Err(VocabError::InvalidParams("min_count must be at least 1".into()));
        }
        if max_size < SPECIALS.len() {
            return Err(VocabError::InvalidParams(format!(
                "max_size must be at least {} (the number of reserved tokens)",
                SPECIALS.len()
            )));
        }
        let mut kept: Vec<(&str, u64)> = counts
            .0
            .iter()
            .filter(|(tok, &n)| n >= min_count && !SPECIALS.contains(&tok.as_str()) && storable(tok))
            .map(|(tok, &n)| (tok.as_str(), n))
            .collect();
        kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        kept.truncate(max_size - SPECIALS.len());

        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        let mut token_counts: Vec<u64> = SPECIALS.iter().map(|s| counts.get(s)).collect();
        for (tok, n) in kept {
            tokens.push(tok.to_owned());
            token_counts.push(n);
        }
        Ok(Self::from_parts(tokens, token_counts, min_count, max_size))
    }

    fn from_parts(tokens: Vec<String>, counts: Vec<u64>, min_count: u64, max_size: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            counts,
            index,
            min_count,
            max_size,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < SPECIALS.len()
    }

    /// Iterates `(id, token, count)` in id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str, u64)> {
        self.tokens
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(i, (t, &c))| (i as u32, t.as_str(), c))
    }

    pub fn encode(&self, stream: &TokenStream) -> Vec<u32> {
        stream.texts().map(|t| self.id_or_unk(t)).collect()
    }

    pub fn encode_texts<'a>(&self, texts: impl IntoIterator<Item = &'a str>) -> Vec<u32> {
        texts.into_iter().map(|t| self.id_or_unk(t)).collect()
    }

    /// Maps ids back to token text; ids outside the vocabulary become `<UNK>`.
    pub fn decode(&self, ids: &[u32]) -> Vec<&str> {
        ids.iter().map(|&id| self.token(id).unwrap_or(UNK)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{HEADER_MAGIC} {FORMAT_VERSION} {} {}\n",
            self.min_count, self.max_size
        );
        for (id, tok, count) in self.iter() {
            writeln!(out, "{tok}\t{id}\t{count}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, VocabError> {
        let err = |line: usize, message: &str| VocabError::Format {
            line,
            message: message.to_owned(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 4 || fields[0] != HEADER_MAGIC {
            return Err(err(1, "expected `CSENT-VOCAB <version> <min_count> <max_size>`"));
        }
        if fields[1] != FORMAT_VERSION.to_string() {
            return Err(err(1, "unsupported vocabulary version"));
        }
        let min_count: u64 = fields[2].parse().map_err(|_| err(1, "bad min_count"))?;
        let max_size: usize = fields[3].parse().map_err(|_| err(1, "bad max_size"))?;

        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let mut parts = line.rsplitn(3, '\t');
            let (Some(count), Some(id), Some(tok)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(lineno, "expected `<token>\\t<id>\\t<count>`"));
            };
            let id: usize = id.parse().map_err(|_| err(lineno, "bad id"))?;
            let count: u64 = count.parse().map_err(|_| err(lineno, "bad count"))?;
            if id != tokens.len() {
                return Err(err(lineno, "ids must be dense and ascending"));
            }
            if id < SPECIALS.len() && tok != SPECIALS[id] {
                return Err(err(lineno, "reserved tokens must come first, in order"));
            }
            tokens.push(tok.to_owned());
            counts.push(count);
        }
        if tokens.len() < SPECIALS.len() {
            return Err(err(tokens.len() + 2, "missing reserved tokens"));
        }
        if tokens.len() > max_size {
            return Err(err(1, "more entries than max_size"));
        }
        let vocab = Self::from_parts(tokens, counts, min_count, max_size);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(err(1, "duplicate token"));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<(), VocabError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// SHA-256 of the serialized vocabulary, hex encoded. Binds embeddings
    /// and checkpoints to the exact vocabulary they were trained with.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}
