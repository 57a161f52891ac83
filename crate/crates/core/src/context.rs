//! Context encodings: turn a window of word indices into rotation angles.
//!
//! Every method maps word index `idx_i` to the angle `θ_i = idx_i · 2π/|V|`.
//! Window positions `i, j` are 0-based and relative to the window. The four
//! matrix methods return an `n × n` matrix; the angular-shift method returns
//! a length-`n` vector. Either is flattened row-major and cut into layers of
//! `2m` angles by [`reshape_to_schedule`].

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered vocabulary indices of the words surrounding a center word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextWindow {
    word_indices: Vec<usize>,
    vocab_size: usize,
}

impl ContextWindow {
    pub fn new(word_indices: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::InvalidContext("vocabulary size must be positive".into()));
        }
        if word_indices.is_empty() {
            return Err(Error::InvalidContext("context window is empty".into()));
        }
        if let Some(&bad) = word_indices.iter().find(|&&idx| idx >= vocab_size) {
            return Err(Error::InvalidContext(format!(
                "word index {bad} outside vocabulary of size {vocab_size}"
            )));
        }
        Ok(Self {
            word_indices,
            vocab_size,
        })
    }

    pub fn word_indices(&self) -> &[usize] {
        &self.word_indices
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.word_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_indices.is_empty()
    }

    /// `θ_i = idx_i · 2π / |V|`
    pub fn angle(&self, position: usize) -> f64 {
        self.word_indices[position] as f64 * TAU / self.vocab_size as f64
    }
}

/// Free parameters shared by the context encodings.
///
/// The defaults are `α = 0.5`, `ω = 1`, `δ = 1`, `p = 31`, `N = 2^16`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodingHyperparams {
    /// Exponential decay rate with positional distance.
    pub alpha: f64,
    /// Angular frequency of the sinusoidal terms.
    pub omega: f64,
    /// Scale of the word-specific phase shift.
    pub delta: f64,
    /// Prime multiplier of the index hash.
    pub prime_p: u64,
    /// Hash space size.
    pub hash_space_n: u64,
}

impl Default for EncodingHyperparams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            omega: 1.0,
            delta: 1.0,
            prime_p: 31,
            hash_space_n: 1 << 16,
        }
    }
}

impl EncodingHyperparams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("omega", self.omega),
            ("delta", self.delta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !is_prime(self.prime_p) {
            return Err(Error::Config(format!(
                "hash multiplier {} is not prime",
                self.prime_p
            )));
        }
        if self.hash_space_n < 2 {
            return Err(Error::Config(format!(
                "hash space size must be at least 2, got {}",
                self.hash_space_n
            )));
        }
        Ok(())
    }

    /// `h = (idx · p) mod N`
    pub fn hash(&self, idx: usize) -> u64 {
        ((idx as u128 * self.prime_p as u128) % self.hash_space_n as u128) as u64
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Square `n × n` matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl ContextMatrix {
    fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextVector {
    entries: Vec<f64>,
}

impl ContextVector {
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }
}

/// Output of a context encoding.
#[derive(Clone, Debug, PartialEq)]
pub enum ContextFeatures {
    Matrix(ContextMatrix),
    Vector(ContextVector),
}

impl ContextFeatures {
    /// Row-major flattening.
    pub fn values(&self) -> &[f64] {
        match self {
            ContextFeatures::Matrix(m) => m.entries(),
            ContextFeatures::Vector(v) => v.entries(),
        }
    }
}

/// `c_ij = e^{-α|i-j|} sin(ωθ_i) cos(ωθ_j) + θ_i`
pub fn exp_decay_sinusoidal(w: &ContextWindow, h: &EncodingHyperparams) -> ContextMatrix {
    ContextMatrix::from_fn(w.len(), |i, j| {
        let (ti, tj) = (w.angle(i), w.angle(j));
        decay(h.alpha, i, j) * (h.omega * ti).sin() * (h.omega * tj).cos() + ti
    })
}

/// `c_ii = ln(1 + idx_i)`, off-diagonal `c_ij = e^{-α|i-j|} sin(ωθ_i) + θ_i`
pub fn index_diagonal(w: &ContextWindow, h: &EncodingHyperparams) -> ContextMatrix {
    ContextMatrix::from_fn(w.len(), |i, j| {
        if i == j {
            (w.word_indices()[i] as f64).ln_1p()
        } else {
            let ti = w.angle(i);
            decay(h.alpha, i, j) * (h.omega * ti).sin() + ti
        }
    })
}

/// `c_ij = e^{-α|i-j|} sin(ω i + δθ_i) + θ_i`
pub fn positional_phase_shift(w: &ContextWindow, h: &EncodingHyperparams) -> ContextMatrix {
    ContextMatrix::from_fn(w.len(), |i, j| {
        let ti = w.angle(i);
        decay(h.alpha, i, j) * (h.omega * i as f64 + h.delta * ti).sin() + ti
    })
}

/// `c_ij = e^{-α|i-j|} sin(ω i + h_i) + θ_i` with `h_i = (idx_i · p) mod N`.
///
/// The integer hash is used directly as a phase in radians.
pub fn hash_modulation(w: &ContextWindow, h: &EncodingHyperparams) -> ContextMatrix {
    let hashes: Vec<f64> = w.word_indices().iter().map(|&idx| h.hash(idx) as f64).collect();
    ContextMatrix::from_fn(w.len(), |i, j| {
        decay(h.alpha, i, j) * (h.omega * i as f64 + hashes[i]).sin() + w.angle(i)
    })
}

/// `v_i = ωθ_i`
pub fn angular_shift_vector(w: &ContextWindow, h: &EncodingHyperparams) -> ContextVector {
    ContextVector {
        entries: (0..w.len()).map(|i| h.omega * w.angle(i)).collect(),
    }
}

fn decay(alpha: f64, i: usize, j: usize) -> f64 {
    (-alpha * i.abs_diff(j) as f64).exp()
}

/// The five context encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextEncoding {
    ExpDecaySin,
    IndexDiagonal,
    PositionalPhase,
    HashModulation,
    AngularShift,
}

impl ContextEncoding {
    pub const ALL: [ContextEncoding; 5] = [
        ContextEncoding::ExpDecaySin,
        ContextEncoding::IndexDiagonal,
        ContextEncoding::PositionalPhase,
        ContextEncoding::HashModulation,
        ContextEncoding::AngularShift,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ContextEncoding::ExpDecaySin => "exp-decay-sin",
            ContextEncoding::IndexDiagonal => "index-diagonal",
            ContextEncoding::PositionalPhase => "positional-phase",
            ContextEncoding::HashModulation => "hash-modulation",
            ContextEncoding::AngularShift => "angular-shift",
        }
    }

    pub fn encode(&self, w: &ContextWindow, h: &EncodingHyperparams) -> ContextFeatures {
        match self {
            ContextEncoding::ExpDecaySin => ContextFeatures::Matrix(exp_decay_sinusoidal(w, h)),
            ContextEncoding::IndexDiagonal => ContextFeatures::Matrix(index_diagonal(w, h)),
            ContextEncoding::PositionalPhase => {
                ContextFeatures::Matrix(positional_phase_shift(w, h))
            }
            ContextEncoding::HashModulation => ContextFeatures::Matrix(hash_modulation(w, h)),
            ContextEncoding::AngularShift => ContextFeatures::Vector(angular_shift_vector(w, h)),
        }
    }

    /// Number of encoding layers produced for a window of `n` words on `m` qubits.
    pub fn num_layers(&self, n: usize, m: usize) -> usize {
        let values = match self {
            ContextEncoding::AngularShift => n,
            _ => n * n,
        };
        values.div_ceil(2 * m)
    }
}

impl fmt::Display for ContextEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContextEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let found = match key.as_str() {
            "1" | "exp-decay-sin" | "exp-decay-sinusoidal" => ContextEncoding::ExpDecaySin,
            "2" | "index-diagonal" => ContextEncoding::IndexDiagonal,
            "3" | "positional-phase" | "phase-shift" => ContextEncoding::PositionalPhase,
            "4" | "hash-modulation" | "hash" => ContextEncoding::HashModulation,
            "5" | "angular-shift" | "angular-vector" => ContextEncoding::AngularShift,
            _ => {
                return Err(Error::Config(format!(
                    "unknown context encoding '{s}' (expected one of {})",
                    ContextEncoding::ALL.map(|e| e.name()).join(", ")
                )))
            }
        };
        Ok(found)
    }
}

/// Context angles cut into encoding layers of `2m` values each.
///
/// For qubit `q` in layer `l`, `layers[l][2q]` drives `RX_q` and
/// `layers[l][2q + 1]` drives `RZ_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingSchedule {
    num_qubits: usize,
    layers: Vec<Vec<f64>>,
}

impl EncodingSchedule {
    /// Builds a schedule from explicit layers; each must hold `2m` angles.
    pub fn from_layers(num_qubits: usize, layers: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = layers.iter().find(|l| l.len() != 2 * num_qubits) {
            return Err(Error::Shape(format!(
                "encoding layer has {} angles, expected {}",
                bad.len(),
                2 * num_qubits
            )));
        }
        Ok(Self { num_qubits, layers })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn rx_angle(&self, layer: usize, qubit: usize) -> f64 {
        self.layers[layer][2 * qubit]
    }

    pub fn rz_angle(&self, layer: usize, qubit: usize) -> f64 {
        self.layers[layer][2 * qubit + 1]
    }
}

/// Row-major values → `⌈len/2m⌉` layers of `2m` angles, zero padded at the end.
pub fn reshape_to_schedule(values: &[f64], num_qubits: usize) -> Result<EncodingSchedule> {
    if num_qubits < 2 {
        return Err(Error::Config(format!(
            "encoding needs at least 2 qubits, got {num_qubits}"
        )));
    }
    if values.is_empty() {
        return Err(Error::InvalidContext("no context values to encode".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidContext(format!("non-finite context value {bad}")));
    }
    let width = 2 * num_qubits;
    let layers = values
        .chunks(width)
        .map(|chunk| {
            let mut layer = chunk.to_vec();
            layer.resize(width, 0.0);
            layer
        })
        .collect();
    Ok(EncodingSchedule { num_qubits, layers })
}
