//! Dense statevector simulator.
//!
//! Basis states are labelled little-endian: qubit 0 is the least significant
//! bit of the amplitude index. Gates are applied by strided in-place updates
//! over amplitude pairs (single-qubit) or quadruples (two-qubit), so a gate
//! costs O(2^m) rather than the O(4^m) of a dense matrix product.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 20;

const NORM_TOLERANCE: f64 = 1e-10;

/// Gate kinds supported by the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    RX,
    RZ,
    CNOT,
    CZ,
    CRZ,
}

/// A gate placed on specific qubits.
///
/// Rotation angles are in radians and follow `R_P(θ) = exp(-i θ P / 2)`.
/// Two-qubit gates are written `(control, target)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    RX(usize, f64),
    RZ(usize, f64),
    CNOT { control: usize, target: usize },
    CZ { control: usize, target: usize },
    CRZ { control: usize, target: usize, angle: f64 },
}

impl GateOp {
    pub fn kind(&self) -> GateKind {
        match self {
            GateOp::H(_) => GateKind::H,
            GateOp::X(_) => GateKind::X,
            GateOp::Y(_) => GateKind::Y,
            GateOp::Z(_) => GateKind::Z,
            GateOp::RX(..) => GateKind::RX,
            GateOp::RZ(..) => GateKind::RZ,
            GateOp::CNOT { .. } => GateKind::CNOT,
            GateOp::CZ { .. } => GateKind::CZ,
            GateOp::CRZ { .. } => GateKind::CRZ,
        }
    }

    /// Qubits touched by the gate; for two-qubit gates `[control, target]`.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            GateOp::H(q) | GateOp::X(q) | GateOp::Y(q) | GateOp::Z(q) => vec![q],
            GateOp::RX(q, _) | GateOp::RZ(q, _) => vec![q],
            GateOp::CNOT { control, target }
            | GateOp::CZ { control, target }
            | GateOp::CRZ { control, target, .. } => vec![control, target],
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateOp::RX(_, a) | GateOp::RZ(_, a) | GateOp::CRZ { angle: a, .. } => Some(a),
            _ => None,
        }
    }

    /// Checks that the gate is well formed for a register of `num_qubits`.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let (a, b) = match *self {
            GateOp::H(q) | GateOp::X(q) | GateOp::Y(q) | GateOp::Z(q) => (q, None),
            GateOp::RX(q, _) | GateOp::RZ(q, _) => (q, None),
            GateOp::CNOT { control, target }
            | GateOp::CZ { control, target }
            | GateOp::CRZ { control, target, .. } => (control, Some(target)),
        };
        for q in std::iter::once(a).chain(b) {
            if q >= num_qubits {
                return Err(Error::Index {
                    index: q,
                    num_qubits,
                });
            }
        }
        if b == Some(a) {
            return Err(Error::InvalidGate(format!(
                "{:?} control and target are both qubit {a}",
                self.kind()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateOp::H(q) => write!(f, "H({q})"),
            GateOp::X(q) => write!(f, "X({q})"),
            GateOp::Y(q) => write!(f, "Y({q})"),
            GateOp::Z(q) => write!(f, "Z({q})"),
            GateOp::RX(q, a) => write!(f, "RX({q}, {a})"),
            GateOp::RZ(q, a) => write!(f, "RZ({q}, {a})"),
            GateOp::CNOT { control, target } => write!(f, "CNOT({control}, {target})"),
            GateOp::CZ { control, target } => write!(f, "CZ({control}, {target})"),
            GateOp::CRZ {
                control,
                target,
                angle,
            } => write!(f, "CRZ({control}, {target}, {angle})"),
        }
    }
}

/// Pure state of an `m`-qubit register as `2^m` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros basis state `|0…0⟩`.
    pub fn new_zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count {num_qubits} outside supported range 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index⟩` (little-endian labelling).
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut state = Self::new_zero(num_qubits)?;
        if index >= state.amplitudes.len() {
            return Err(Error::Capacity {
                what: "basis index",
                value: index,
                num_qubits,
            });
        }
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// Wraps raw amplitudes; the length must be a power of two and the
    /// vector must be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count {num_qubits} exceeds {MAX_QUBITS}"
            )));
        }
        let state = Self {
            num_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "state is not normalized (|psi|^2 = {norm})"
            )));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies every gate in order.
    pub fn apply_all<'a, I>(&mut self, ops: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a GateOp>,
    {
        for op in ops {
            self.apply(op)?;
        }
        Ok(())
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.num_qubits)?;
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match *op {
            GateOp::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                self.apply_single(q, [[s.into(), s.into()], [s.into(), (-s).into()]]);
            }
            GateOp::X(q) => self.for_each_pair(q, std::mem::swap),
            GateOp::Y(q) => self.apply_single(q, [[zero, -i], [i, zero]]),
            GateOp::Z(q) => self.apply_diagonal(q, one, -one),
            GateOp::RX(q, theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                // [[c, -is], [-is, c]] in real arithmetic
                self.for_each_pair(q, |a, b| {
                    let (x, y) = (*a, *b);
                    *a = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
                    *b = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
                });
            }
            GateOp::RZ(q, theta) => {
                let (lo, hi) = rz_phases(theta);
                self.apply_diagonal(q, lo, hi);
            }
            GateOp::CNOT { control, target } => {
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for idx in 0..self.amplitudes.len() {
                    if idx & cmask != 0 && idx & tmask == 0 {
                        self.amplitudes.swap(idx, idx | tmask);
                    }
                }
            }
            GateOp::CZ { control, target } => {
                let mask = (1usize << control) | (1usize << target);
                for (idx, amp) in self.amplitudes.iter_mut().enumerate() {
                    if idx & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            GateOp::CRZ {
                control,
                target,
                angle,
            } => {
                let (lo, hi) = rz_phases(angle);
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for (idx, amp) in self.amplitudes.iter_mut().enumerate() {
                    if idx & cmask != 0 {
                        *amp *= if idx & tmask == 0 { lo } else { hi };
                    }
                }
            }
        }
        Ok(())
    }

    /// `⟨Z_q⟩ = Σ_i |a_i|² (±1)`, with `+1` when bit `q` of `i` is clear.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.num_qubits {
            return Err(Error::Index {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(self.expectation_z_unchecked(qubit))
    }

    fn expectation_z_unchecked(&self, qubit: usize) -> f64 {
        let mask = 1usize << qubit;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let p = a.norm_sqr();
                if idx & mask == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }

    /// Per-qubit `⟨Z_q⟩` for every qubit, in one pass over the amplitudes.
    pub fn expectations_z(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_qubits];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, e) in out.iter_mut().enumerate() {
                if idx >> q & 1 == 0 {
                    *e += p;
                } else {
                    *e -= p;
                }
            }
        }
        out
    }

    /// `P(|1⟩_q) = (1 - ⟨Z_q⟩) / 2` for every qubit.
    pub fn qubit_probabilities(&self) -> Vec<f64> {
        self.expectations_z()
            .into_iter()
            .map(prob_one_from_z)
            .collect()
    }

    fn for_each_pair(&mut self, qubit: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let stride = 1usize << qubit;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                f(a, b);
            }
        }
    }

    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        self.for_each_pair(qubit, |a, b| {
            let (x, y) = (*a, *b);
            *a = m[0][0] * x + m[0][1] * y;
            *b = m[1][0] * x + m[1][1] * y;
        });
    }

    fn apply_diagonal(&mut self, qubit: usize, d0: Complex64, d1: Complex64) {
        self.for_each_pair(qubit, |a, b| {
            *a *= d0;
            *b *= d1;
        });
    }
}

/// `(e^{-iθ/2}, e^{iθ/2})`, the diagonal of `RZ(θ)`.
fn rz_phases(theta: f64) -> (Complex64, Complex64) {
    let half = theta / 2.0;
    (
        Complex64::from_polar(1.0, -half),
        Complex64::from_polar(1.0, half),
    )
}

/// Clamped to `[0, 1]` against rounding in `⟨Z⟩`.
pub fn prob_one_from_z(z: f64) -> f64 {
    ((1.0 - z) / 2.0).clamp(0.0, 1.0)
}

pub fn prob_zero_from_z(z: f64) -> f64 {
    ((1.0 + z) / 2.0).clamp(0.0, 1.0)
}
