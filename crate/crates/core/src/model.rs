//! The embedding circuit: Hadamard preparation, layered context encoding
//! with CNOT cascades, a trainable RX/RZ/CRZ ansatz and per-qubit readout.
//!
//! Qubits are 0-based here; entangling gates link qubit `q` to `q + 1`
//! without wrap-around.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::context::{reshape_to_schedule, ContextEncoding, ContextWindow, EncodingHyperparams, EncodingSchedule};
use crate::corpus::qubits_for_vocab;
use crate::error::{Error, Result};
use crate::qsim::{GateOp, StateVector, MAX_QUBITS};

/// Shape and encoding choice of a model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_qubits: usize,
    pub ansatz_layers: usize,
    pub method: ContextEncoding,
    #[serde(default)]
    pub hyperparams: EncodingHyperparams,
}

impl ModelConfig {
    pub fn new(num_qubits: usize, ansatz_layers: usize, method: ContextEncoding) -> Self {
        Self {
            num_qubits,
            ansatz_layers,
            method,
            hyperparams: EncodingHyperparams::default(),
        }
    }

    /// Checks the configuration on its own and against a vocabulary size.
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if !(2..=MAX_QUBITS).contains(&self.num_qubits) {
            return Err(Error::Config(format!(
                "qubit count {} outside supported range 2..={MAX_QUBITS}",
                self.num_qubits
            )));
        }
        if self.ansatz_layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        self.hyperparams.validate()?;
        if qubits_for_vocab(vocab_size) > self.num_qubits {
            return Err(Error::Capacity {
                what: "vocabulary size",
                value: vocab_size,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    pub fn params_per_layer(&self) -> usize {
        params_per_layer(self.num_qubits)
    }

    pub fn num_params(&self) -> usize {
        self.ansatz_layers * self.params_per_layer()
    }
}

/// `3m - 1`: `2m` single-qubit rotations plus `m - 1` entanglers.
pub fn params_per_layer(num_qubits: usize) -> usize {
    3 * num_qubits - 1
}

/// Trainable angles of one ansatz layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzLayer {
    /// `rot[2q]` drives `RX_q`, `rot[2q + 1]` drives `RZ_q`.
    pub rot: Vec<f64>,
    /// `crz[q]` drives `CRZ(q, q + 1)`.
    pub crz: Vec<f64>,
}

/// Trainable ansatz angles, `M · (3m - 1)` scalars in total.
///
/// The flat ordering used by [`AnsatzParams::to_flat`] is layer by layer,
/// `rot` before `crz`, which matches the gate order of
/// [`build_ansatz_ops`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    num_qubits: usize,
    layers: Vec<AnsatzLayer>,
}

impl AnsatzParams {
    pub fn zeros(num_qubits: usize, num_layers: usize) -> Self {
        let layer = AnsatzLayer {
            rot: vec![0.0; 2 * num_qubits],
            crz: vec![0.0; num_qubits.saturating_sub(1)],
        };
        Self {
            num_qubits,
            layers: vec![layer; num_layers],
        }
    }

    /// Angles drawn uniformly from `[-π, π)`.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, num_layers: usize, rng: &mut R) -> Self {
        let n = num_layers * params_per_layer(num_qubits);
        let flat: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        Self::from_flat(num_qubits, num_layers, &flat).expect("length matches")
    }

    pub fn from_flat(num_qubits: usize, num_layers: usize, flat: &[f64]) -> Result<Self> {
        let per = params_per_layer(num_qubits);
        if flat.len() != per * num_layers {
            return Err(Error::Shape(format!(
                "{} parameters for {num_layers} layers of {per}",
                flat.len()
            )));
        }
        let layers = flat
            .chunks_exact(per.max(1))
            .map(|c| AnsatzLayer {
                rot: c[..2 * num_qubits].to_vec(),
                crz: c[2 * num_qubits..].to_vec(),
            })
            .collect();
        Ok(Self { num_qubits, layers })
    }

    pub fn from_layers(num_qubits: usize, layers: Vec<AnsatzLayer>) -> Result<Self> {
        for l in &layers {
            if l.rot.len() != 2 * num_qubits || l.crz.len() + 1 != num_qubits {
                return Err(Error::Shape(format!(
                    "ansatz layer with {} rotations and {} entanglers on {num_qubits} qubits",
                    l.rot.len(),
                    l.crz.len()
                )));
            }
        }
        Ok(Self { num_qubits, layers })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.rot.iter().chain(&l.crz).copied())
            .collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[AnsatzLayer] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.len() * params_per_layer(self.num_qubits)
    }
}

/// Per-qubit `P(|1⟩_q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probs_one: Vec<f64>,
}

impl Prediction {
    /// Thresholded bitstring; ties at exactly 0.5 round to 1.
    pub fn bits(&self) -> Vec<u8> {
        self.probs_one.iter().map(|&p| u8::from(p >= 0.5)).collect()
    }
}

/// Hadamards on every qubit, then per layer `RX_q`, `RZ_q` on every qubit
/// followed by the `CNOT(q, q + 1)` cascade.
pub fn build_encoding_ops(schedule: &EncodingSchedule, num_qubits: usize) -> Result<Vec<GateOp>> {
    if schedule.num_qubits() != num_qubits {
        return Err(Error::Shape(format!(
            "schedule built for {} qubits, circuit has {num_qubits}",
            schedule.num_qubits()
        )));
    }
    let mut ops = Vec::with_capacity(num_qubits + schedule.num_layers() * params_per_layer(num_qubits));
    ops.extend((0..num_qubits).map(GateOp::H));
    for l in 0..schedule.num_layers() {
        for q in 0..num_qubits {
            ops.push(GateOp::RX(q, schedule.rx_angle(l, q)));
            ops.push(GateOp::RZ(q, schedule.rz_angle(l, q)));
        }
        ops.extend((0..num_qubits - 1).map(|q| GateOp::CNOT {
            control: q,
            target: q + 1,
        }));
    }
    Ok(ops)
}

/// One gate per trainable angle, in flat-parameter order.
pub fn build_ansatz_ops(params: &AnsatzParams) -> Vec<GateOp> {
    let m = params.num_qubits();
    let mut ops = Vec::with_capacity(params.num_params());
    for layer in params.layers() {
        for q in 0..m {
            ops.push(GateOp::RX(q, layer.rot[2 * q]));
            ops.push(GateOp::RZ(q, layer.rot[2 * q + 1]));
        }
        for (q, &angle) in layer.crz.iter().enumerate() {
            ops.push(GateOp::CRZ {
                control: q,
                target: q + 1,
                angle,
            });
        }
    }
    ops
}

/// Encoding schedule for a window under a model configuration.
pub fn schedule_for(window: &ContextWindow, cfg: &ModelConfig) -> Result<EncodingSchedule> {
    let features = cfg.method.encode(window, &cfg.hyperparams);
    reshape_to_schedule(features.values(), cfg.num_qubits)
}

/// State after the context-encoding block.
pub fn encode_context(window: &ContextWindow, cfg: &ModelConfig) -> Result<StateVector> {
    let schedule = schedule_for(window, cfg)?;
    let mut state = StateVector::new_zero(cfg.num_qubits)?;
    state.apply_all(&build_encoding_ops(&schedule, cfg.num_qubits)?)?;
    Ok(state)
}

/// Runs the ansatz on an already encoded state and reads out `P(|1⟩_q)`.
pub fn forward_from_encoded(encoded: &StateVector, params: &AnsatzParams) -> Result<Prediction> {
    if encoded.num_qubits() != params.num_qubits() {
        return Err(Error::Shape(format!(
            "encoded state has {} qubits, parameters expect {}",
            encoded.num_qubits(),
            params.num_qubits()
        )));
    }
    let mut state = encoded.clone();
    state.apply_all(&build_ansatz_ops(params))?;
    Ok(Prediction {
        probs_one: state.qubit_probabilities(),
    })
}

/// Full model: encode the context, apply the ansatz, measure.
pub fn forward(window: &ContextWindow, params: &AnsatzParams, cfg: &ModelConfig) -> Result<Prediction> {
    if params.num_qubits() != cfg.num_qubits || params.num_layers() != cfg.ansatz_layers {
        return Err(Error::Shape(format!(
            "parameters shaped {}x{} do not match model {}x{}",
            params.num_layers(),
            params.num_qubits(),
            cfg.ansatz_layers,
            cfg.num_qubits
        )));
    }
    forward_from_encoded(&encode_context(window, cfg)?, params)
}

/// Gate counts for `m` qubits, `M` ansatz layers and `L` encoding layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateCounts {
    pub context: usize,
    pub ansatz: usize,
    pub total: usize,
}

/// `G_context = (3m-1)L`, `G_ansatz = (3m-1)M`, `G_total = (3m-1)(M+L) + m`.
pub fn count_gates(num_qubits: usize, ansatz_layers: usize, encoding_layers: usize) -> GateCounts {
    let per = params_per_layer(num_qubits);
    GateCounts {
        context: per * encoding_layers,
        ansatz: per * ansatz_layers,
        total: per * (ansatz_layers + encoding_layers) + num_qubits,
    }
}

pub const PARAMS_FORMAT_VERSION: u32 = 1;

/// On-disk form of trained parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub version: u32,
    pub m: usize,
    #[serde(rename = "M")]
    pub ansatz_layers: usize,
    pub method: ContextEncoding,
    pub hyperparams: EncodingHyperparams,
    pub layers: Vec<AnsatzLayer>,
}

impl ParamsDocument {
    pub fn new(cfg: &ModelConfig, params: &AnsatzParams) -> Self {
        Self {
            version: PARAMS_FORMAT_VERSION,
            m: cfg.num_qubits,
            ansatz_layers: cfg.ansatz_layers,
            method: cfg.method,
            hyperparams: cfg.hyperparams,
            layers: params.layers().to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(ModelConfig, AnsatzParams)> {
        if self.version != PARAMS_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported parameter file version {}",
                self.version
            )));
        }
        if self.layers.len() != self.ansatz_layers {
            return Err(Error::Shape(format!(
                "document declares {} layers but holds {}",
                self.ansatz_layers,
                self.layers.len()
            )));
        }
        let cfg = ModelConfig {
            num_qubits: self.m,
            ansatz_layers: self.ansatz_layers,
            method: self.method,
            hyperparams: self.hyperparams,
        };
        let params = AnsatzParams::from_layers(self.m, self.layers)?;
        Ok((cfg, params))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
