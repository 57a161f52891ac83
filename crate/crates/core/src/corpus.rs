//! Vocabulary, center/context pair extraction and binary word targets.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Sentence = Vec<String>;

pub const PAD_TOKEN: &str = "<pad>";

/// Lowercases, drops punctuation and splits on whitespace.
pub fn tokenize(line: &str) -> Sentence {
    line.chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

/// Reads one sentence per line; blank lines are skipped.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut sentences = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let tokens = tokenize(&line?);
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    Ok(sentences)
}

pub fn write_corpus(path: impl AsRef<Path>, sentences: &[Sentence]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    for s in sentences {
        writeln!(out, "{}", s.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

/// Bijection between tokens and `0..|V|`, assigned in first-appearance order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    word_to_index: HashMap<String, usize>,
    index_to_word: Vec<String>,
    pad: Option<usize>,
}

impl Vocabulary {
    pub fn build(sentences: &[Sentence]) -> Result<Self> {
        Self::build_inner(sentences, false)
    }

    /// Like [`Vocabulary::build`] but reserves index 0 for [`PAD_TOKEN`].
    pub fn build_with_pad(sentences: &[Sentence]) -> Result<Self> {
        Self::build_inner(sentences, true)
    }

    fn build_inner(sentences: &[Sentence], with_pad: bool) -> Result<Self> {
        if sentences.iter().all(|s| s.is_empty()) {
            return Err(Error::InvalidInput("corpus has no tokens".into()));
        }
        let mut vocab = Self {
            word_to_index: HashMap::new(),
            index_to_word: Vec::new(),
            pad: None,
        };
        if with_pad {
            vocab.pad = Some(vocab.insert(PAD_TOKEN));
        }
        for token in sentences.iter().flatten() {
            vocab.insert(token);
        }
        Ok(vocab)
    }

    fn insert(&mut self, token: &str) -> usize {
        if let Some(&idx) = self.word_to_index.get(token) {
            return idx;
        }
        let idx = self.index_to_word.len();
        self.word_to_index.insert(token.to_owned(), idx);
        self.index_to_word.push(token.to_owned());
        idx
    }

    pub fn len(&self) -> usize {
        self.index_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_word.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.word_to_index.get(token).copied()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.index_to_word.get(index).map(String::as_str)
    }

    pub fn pad_index(&self) -> Option<usize> {
        self.pad
    }

    pub fn words(&self) -> &[String] {
        &self.index_to_word
    }
}

/// How contexts are formed near sentence edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Shorter contexts at sentence edges.
    #[default]
    Truncate,
    /// Fill missing neighbours with the reserved pad index.
    Pad,
}

/// A center word and its ordered neighbours.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainPair {
    pub center: usize,
    pub context: Vec<usize>,
}

/// One pair per token position; the context holds up to `radius` words on
/// each side, left to right.
pub fn extract_pairs(
    sentences: &[Sentence],
    vocab: &Vocabulary,
    radius: usize,
    boundary: Boundary,
) -> Result<Vec<TrainPair>> {
    if radius == 0 {
        return Err(Error::Config("window radius must be at least 1".into()));
    }
    let pad = match boundary {
        Boundary::Truncate => None,
        Boundary::Pad => Some(vocab.pad_index().ok_or_else(|| {
            Error::Config("pad boundary requires a vocabulary with a pad token".into())
        })?),
    };
    let mut pairs = Vec::new();
    for sentence in sentences {
        let ids = sentence
            .iter()
            .map(|t| {
                vocab
                    .index_of(t)
                    .ok_or_else(|| Error::InvalidInput(format!("token '{t}' not in vocabulary")))
            })
            .collect::<Result<Vec<_>>>()?;
        for (pos, &center) in ids.iter().enumerate() {
            let mut context = Vec::with_capacity(2 * radius);
            for offset in (1..=radius).rev() {
                match pos.checked_sub(offset) {
                    Some(p) => context.push(ids[p]),
                    None => context.extend(pad),
                }
            }
            for offset in 1..=radius {
                match ids.get(pos + offset) {
                    Some(&id) => context.push(id),
                    None => context.extend(pad),
                }
            }
            pairs.push(TrainPair { center, context });
        }
    }
    Ok(pairs)
}

/// Writes pairs as `center<TAB>ctx ctx ...` lines.
pub fn write_pairs<W: Write>(mut out: W, pairs: &[TrainPair]) -> Result<()> {
    for p in pairs {
        let ctx: Vec<String> = p.context.iter().map(usize::to_string).collect();
        writeln!(out, "{}\t{}", p.center, ctx.join(" "))?;
    }
    Ok(())
}

/// `m = ⌈log₂|V|⌉`, at least 1.
pub fn qubits_for_vocab(vocab_size: usize) -> usize {
    if vocab_size <= 2 {
        1
    } else {
        (usize::BITS - (vocab_size - 1).leading_zeros()) as usize
    }
}

/// Big-endian binary expansion of a word index: `bits[0]` is the most
/// significant bit and is compared with qubit 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TargetBits(Vec<u8>);

impl TargetBits {
    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hamming(&self, other: &[u8]) -> usize {
        self.0.iter().zip(other).filter(|(a, b)| a != b).count()
            + self.0.len().abs_diff(other.len())
    }
}

pub fn target_bits(center: usize, num_qubits: usize) -> Result<TargetBits> {
    if num_qubits >= usize::BITS as usize || center >> num_qubits != 0 {
        return Err(Error::Capacity {
            what: "word index",
            value: center,
            num_qubits,
        });
    }
    Ok(TargetBits(
        (0..num_qubits)
            .rev()
            .map(|shift| ((center >> shift) & 1) as u8)
            .collect(),
    ))
}

/// Parameters of the synthetic corpus generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub num_sentences: usize,
    pub vocab_size: usize,
    pub sentence_len: usize,
}

impl SyntheticSpec {
    /// 300 four-word sentences over 34 words: 1200 tokens and pairs.
    pub fn table_scale(seed: u64) -> Self {
        Self {
            seed,
            num_sentences: 300,
            vocab_size: 34,
            sentence_len: 4,
        }
    }

    /// 32 four-word sentences over 27 words: 128 pairs.
    pub fn low_resource_scale(seed: u64) -> Self {
        Self {
            seed,
            num_sentences: 32,
            vocab_size: 27,
            sentence_len: 4,
        }
    }
}

/// Probability of following a token's preferred successors instead of
/// drawing from the unigram distribution.
const FOLLOW_PROB: f64 = 0.6;
const SUCCESSORS: usize = 2;

/// Seeded synthetic text with Zipf-like unigram frequencies and a sparse
/// first-order transition structure, so that contexts carry information
/// about the center word. Every one of the `vocab_size` tokens appears.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<Vec<Sentence>> {
    let SyntheticSpec {
        seed,
        num_sentences,
        vocab_size,
        sentence_len,
    } = *spec;
    if vocab_size < 2 {
        return Err(Error::InvalidInput(format!(
            "synthetic vocabulary needs at least 2 words, got {vocab_size}"
        )));
    }
    if sentence_len == 0 || num_sentences * sentence_len < vocab_size {
        return Err(Error::InvalidInput(format!(
            "{num_sentences} sentences of {sentence_len} tokens cannot hold {vocab_size} distinct words"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = WeightedIndex::new((1..=vocab_size).map(|r| 1.0 / r as f64))
        .expect("weights are positive");
    let successors: Vec<Vec<usize>> = (0..vocab_size)
        .map(|_| (0..SUCCESSORS).map(|_| zipf.sample(&mut rng)).collect())
        .collect();

    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(num_sentences);
    for _ in 0..num_sentences {
        let mut sentence = Vec::with_capacity(sentence_len);
        let mut prev = zipf.sample(&mut rng);
        sentence.push(prev);
        for _ in 1..sentence_len {
            prev = if rng.gen_bool(FOLLOW_PROB) {
                *successors[prev].choose(&mut rng).expect("non-empty")
            } else {
                zipf.sample(&mut rng)
            };
            sentence.push(prev);
        }
        ids.push(sentence);
    }

    // Rare ranks may never be drawn; overwrite occurrences of the most
    // frequent word until every rank is present.
    let mut counts = vec![0usize; vocab_size];
    for &t in ids.iter().flatten() {
        counts[t] += 1;
    }
    for missing in 0..vocab_size {
        if counts[missing] > 0 {
            continue;
        }
        let donor = (0..vocab_size)
            .max_by_key(|&t| (counts[t], std::cmp::Reverse(t)))
            .expect("non-empty vocabulary");
        let slots: Vec<(usize, usize)> = ids
            .iter()
            .enumerate()
            .flat_map(|(s, sent)| {
                sent.iter()
                    .enumerate()
                    .filter(move |(_, &t)| t == donor)
                    .map(move |(p, _)| (s, p))
            })
            .collect();
        let &(s, p) = slots.choose(&mut rng).expect("donor occurs");
        ids[s][p] = missing;
        counts[donor] -= 1;
        counts[missing] += 1;
    }

    let width = (vocab_size - 1).to_string().len().max(2);
    Ok(ids
        .into_iter()
        .map(|s| s.into_iter().map(|t| format!("w{t:0width$}")).collect())
        .collect())
}
