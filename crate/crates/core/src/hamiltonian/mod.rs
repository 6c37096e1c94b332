//! Weighted Pauli-term Hamiltonians, their energies, the verifier's term
//! distribution and the closed-form acceptance probability.

mod clock;
mod spectrum;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::{PauliString, WeightedTerm};
use crate::statevector::{MixedState, PureState};

pub use clock::{
    build_history_hamiltonian, history_state, history_state_with_flipped_output, ClockLayout,
};
pub use spectrum::{
    dense_matrix, energy_report, ground_energy, EnergyReport, GroundState, DEFAULT_ORACLE_CAP,
};

/// Block weights `(J_in, J_clock, J_prop, J_out)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub input: f64,
    pub clock: f64,
    pub propagation: f64,
    pub output: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            input: 1.0,
            clock: 1.0,
            propagation: 1.0,
            output: 1.0,
        }
    }
}

impl Weights {
    pub fn new(input: f64, clock: f64, propagation: f64, output: f64) -> Result<Self> {
        let w = Weights {
            input,
            clock,
            propagation,
            output,
        };
        if w.as_array().iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        Ok(w)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.input, self.clock, self.propagation, self.output]
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.input, self.clock, self.propagation, self.output
        )
    }
}

impl FromStr for Weights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad weights `{s}`: {e}")))?;
        match parts[..] {
            [a, b, c, d] => Weights::new(a, b, c, d),
            _ => Err(Error::InvalidArgument(format!(
                "expected four comma-separated weights, got `{s}`"
            ))),
        }
    }
}

/// Whether the identity component of `H` is part of the sampled term set.
///
/// With the identity kept, an identity term is drawn with probability
/// `|d_I| / sum|d_S|` and measures to +1 deterministically. Without it, the
/// verifier samples only the non-identity terms and the acceptance formula
/// is taken relative to `H - d_I I`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    WithIdentity,
    WithoutIdentity,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::WithIdentity => "with_identity",
            Normalization::WithoutIdentity => "without_identity",
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with-identity" | "with_identity" => Ok(Normalization::WithIdentity),
            "without-identity" | "without_identity" => Ok(Normalization::WithoutIdentity),
            other => Err(Error::InvalidArgument(format!(
                "unknown normalization `{other}` (expected with-identity|without-identity)"
            ))),
        }
    }
}

/// Anything with Pauli expectation values: pure states and ensembles.
pub trait QuantumState {
    fn qubits(&self) -> usize;
    fn pauli_expectation(&self, p: &PauliString) -> Result<f64>;
}

impl QuantumState for PureState {
    fn qubits(&self) -> usize {
        PureState::qubits(self)
    }

    fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        PureState::pauli_expectation(self, p)
    }
}

impl QuantumState for MixedState {
    fn qubits(&self) -> usize {
        MixedState::qubits(self)
    }

    fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        MixedState::pauli_expectation(self, p)
    }
}

/// `H = sum_S d_S S` on a fixed register, with cached `sum_S |d_S|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalHamiltonian {
    qubits: usize,
    terms: Vec<WeightedTerm>,
    sum_abs: f64,
    layout: Option<ClockLayout>,
    branch: Option<Circuit>,
    weights: Option<Weights>,
}

impl LocalHamiltonian {
    /// Hand-built Hamiltonian. Repeated strings are merged into their first
    /// occurrence and zero coefficients dropped; term order is otherwise kept.
    pub fn from_terms(qubits: usize, terms: Vec<WeightedTerm>) -> Result<Self> {
        let mut merged: Vec<WeightedTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient on {}",
                    t.string
                )));
            }
            if let Some(q) = t.string.max_qubit().filter(|&q| q >= qubits) {
                return Err(Error::QubitOutOfRange { index: q, qubits });
            }
            match merged.iter_mut().find(|m| m.string == t.string) {
                Some(m) => m.coefficient += t.coefficient,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coefficient != 0.0);
        Ok(Self::assemble(qubits, merged, None, None, None))
    }

    pub(crate) fn assemble(
        qubits: usize,
        terms: Vec<WeightedTerm>,
        layout: Option<ClockLayout>,
        branch: Option<Circuit>,
        weights: Option<Weights>,
    ) -> Self {
        let sum_abs = terms.iter().map(|t| t.coefficient.abs()).sum();
        LocalHamiltonian {
            qubits,
            terms,
            sum_abs,
            layout,
            branch,
            weights,
        }
    }

    /// Same Hamiltonian with its term list replaced; used for fault injection.
    pub fn with_terms(&self, terms: Vec<WeightedTerm>) -> Self {
        Self::assemble(
            self.qubits,
            terms,
            self.layout,
            self.branch.clone(),
            self.weights,
        )
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn terms(&self) -> &[WeightedTerm] {
        &self.terms
    }

    /// `sum_S |d_S|`, identity component included.
    pub fn sum_abs(&self) -> f64 {
        self.sum_abs
    }

    pub fn layout(&self) -> Option<&ClockLayout> {
        self.layout.as_ref()
    }

    /// The circuit whose history the Hamiltonian encodes (already
    /// complemented for a nonmember claim).
    pub fn branch_circuit(&self) -> Option<&Circuit> {
        self.branch.as_ref()
    }

    pub fn weights(&self) -> Option<&Weights> {
        self.weights.as_ref()
    }

    /// Clock length `T`, for Hamiltonians built from a circuit.
    pub fn steps(&self) -> Option<usize> {
        self.layout.map(|l| l.steps)
    }

    /// Net coefficient of the identity string.
    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.string.is_identity())
            .map(|t| t.coefficient)
            .sum()
    }

    pub fn max_locality(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.string.locality())
            .max()
            .unwrap_or(0)
    }

    /// Indices of the terms the verifier samples under `norm`.
    pub fn sampled_indices(&self, norm: Normalization) -> Vec<usize> {
        (0..self.terms.len())
            .filter(|&i| norm == Normalization::WithIdentity || !self.terms[i].string.is_identity())
            .collect()
    }

    /// The normalizer `sum |d_S|` over the sampled terms.
    pub fn sampled_sum_abs(&self, norm: Normalization) -> f64 {
        match norm {
            Normalization::WithIdentity => self.sum_abs,
            Normalization::WithoutIdentity => self
                .terms
                .iter()
                .filter(|t| !t.string.is_identity())
                .map(|t| t.coefficient.abs())
                .sum(),
        }
    }
}

fn check_dims(h: &LocalHamiltonian, found: usize) -> Result<()> {
    if h.qubits != found {
        return Err(Error::DimensionMismatch {
            expected: h.qubits,
            found,
        });
    }
    Ok(())
}

/// `Tr(H rho) = sum_S d_S <S>`.
pub fn energy<S: QuantumState + ?Sized>(h: &LocalHamiltonian, s: &S) -> Result<f64> {
    check_dims(h, s.qubits())?;
    h.terms
        .iter()
        .map(|t| Ok(t.coefficient * s.pauli_expectation(&t.string)?))
        .sum()
}

/// `pi_S = |d_S| / sum |d_S|` over every term, identity included.
pub fn term_distribution(h: &LocalHamiltonian) -> Result<Vec<(usize, f64)>> {
    sampling_distribution(h, Normalization::WithIdentity)
}

/// `pi_S` over the terms sampled under `norm`.
pub fn sampling_distribution(
    h: &LocalHamiltonian,
    norm: Normalization,
) -> Result<Vec<(usize, f64)>> {
    let idx = h.sampled_indices(norm);
    let total = h.sampled_sum_abs(norm);
    if idx.is_empty() || total <= 0.0 {
        return Err(Error::EmptyTermList);
    }
    Ok(idx
        .into_iter()
        .map(|i| (i, h.terms[i].coefficient.abs() / total))
        .collect())
}

/// Acceptance probability of a state with energy `e`:
/// `1 - (e + sum|d_S|) / (2 sum|d_S|)`, with the identity component moved
/// out of `e` and the normalizer for [`Normalization::WithoutIdentity`].
pub fn p_acc_from_energy(h: &LocalHamiltonian, e: f64, norm: Normalization) -> Result<f64> {
    let total = h.sampled_sum_abs(norm);
    if total <= 0.0 {
        return Err(Error::EmptyTermList);
    }
    let shifted = match norm {
        Normalization::WithIdentity => e,
        Normalization::WithoutIdentity => e - h.identity_coefficient(),
    };
    Ok(1.0 - (shifted + total) / (2.0 * total))
}

/// Closed-form acceptance probability for the state `s`.
pub fn p_acc_exact<S: QuantumState + ?Sized>(
    h: &LocalHamiltonian,
    s: &S,
    norm: Normalization,
) -> Result<f64> {
    let e = energy(h, s)?;
    Ok(p_acc_from_energy(h, e, norm)?.clamp(0.0, 1.0))
}

/// `sum_S pi_S Tr((I - P_S) rho)` with `P_S = (I + sign(d_S) S) / 2`,
/// evaluated term by term.
pub fn p_acc_by_terms<S: QuantumState + ?Sized>(
    h: &LocalHamiltonian,
    s: &S,
    norm: Normalization,
) -> Result<f64> {
    check_dims(h, s.qubits())?;
    sampling_distribution(h, norm)?
        .into_iter()
        .map(|(i, pi)| {
            let t = &h.terms[i];
            let sign = t.coefficient.signum();
            Ok(pi * 0.5 * (1.0 - sign * s.pauli_expectation(&t.string)?))
        })
        .sum()
}

/// Acceptance probabilities implied by reference energies `a_ref <= b_ref`,
/// under both normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcceptanceBounds {
    pub a_ref: f64,
    pub b_ref: f64,
    pub p_if_energy_a: f64,
    pub p_if_energy_b: f64,
    /// `p_if_energy_a - p_if_energy_b = (b_ref - a_ref) / (2 sum|d_S|)`.
    pub gap: f64,
    pub without_identity: Option<NormalizedBounds>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedBounds {
    pub p_if_energy_a: f64,
    pub p_if_energy_b: f64,
    pub gap: f64,
}

pub fn acceptance_bounds(h: &LocalHamiltonian, a_ref: f64, b_ref: f64) -> Result<AcceptanceBounds> {
    if a_ref.is_nan() || b_ref.is_nan() || a_ref > b_ref {
        return Err(Error::InvalidArgument(format!(
            "reference energies must satisfy a <= b, got a = {a_ref}, b = {b_ref}"
        )));
    }
    let with = Normalization::WithIdentity;
    let p_a = p_acc_from_energy(h, a_ref, with)?;
    let p_b = p_acc_from_energy(h, b_ref, with)?;
    let without_identity = if h.sampled_sum_abs(Normalization::WithoutIdentity) > 0.0 {
        let wo = Normalization::WithoutIdentity;
        let (qa, qb) = (
            p_acc_from_energy(h, a_ref, wo)?,
            p_acc_from_energy(h, b_ref, wo)?,
        );
        Some(NormalizedBounds {
            p_if_energy_a: qa,
            p_if_energy_b: qb,
            gap: qa - qb,
        })
    } else {
        None
    };
    Ok(AcceptanceBounds {
        a_ref,
        b_ref,
        p_if_energy_a: p_a,
        p_if_energy_b: p_b,
        gap: p_a - p_b,
        without_identity,
    })
}

/// Maps an identity-excluded acceptance probability to the identity-kept
/// one: the identity term is drawn with probability `|d_I| / sum|d_S|` and
/// accepts exactly when `d_I < 0`.
pub fn with_identity_from_without(h: &LocalHamiltonian, p_without: f64) -> f64 {
    let total = h.sum_abs();
    let rest = h.sampled_sum_abs(Normalization::WithoutIdentity);
    let id = h.identity_coefficient();
    let identity_accepts = if id < 0.0 { id.abs() } else { 0.0 };
    (rest * p_without + identity_accepts) / total
}

/// True iff no term carries a Y factor.
pub fn xz_only_check(h: &LocalHamiltonian) -> bool {
    h.terms.iter().all(|t| !t.string.has_y())
}
