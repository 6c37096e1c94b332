//! The one-way verification protocol: a prover emits a witness state, the
//! verifier repeatedly samples a Hamiltonian term, measures it qubit by
//! qubit in the X or Z basis and accepts on outcome `-sign(d_S)`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Circuit, Claim};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_history_hamiltonian, energy, ground_energy, history_state,
    history_state_with_flipped_output, p_acc_exact, p_acc_from_energy, sampling_distribution,
    LocalHamiltonian, Normalization, Weights,
};
use crate::statevector::{output_probability, MixedState, PureState};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProverStrategy {
    /// History state of the claim's branch circuit.
    Honest,
    /// Exact ground state of the claim Hamiltonian: the best any prover can do.
    GroundState,
    /// History state of the opposite answer, folded into the same clock.
    ComplementHistory,
    MaximallyMixed,
    /// Pure state read from a state file.
    FixedState(PathBuf),
}

impl fmt::Display for ProverStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProverStrategy::Honest => f.write_str("honest"),
            ProverStrategy::GroundState => f.write_str("ground_state"),
            ProverStrategy::ComplementHistory => f.write_str("complement_history"),
            ProverStrategy::MaximallyMixed => f.write_str("maximally_mixed"),
            ProverStrategy::FixedState(p) => write!(f, "fixed_state,{}", p.display()),
        }
    }
}

impl FromStr for ProverStrategy {
    type Err = Error;

    /// `NAME` or `fixed_state,PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, path) = match s.split_once(',') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        match (name.replace('-', "_").as_str(), path) {
            ("honest", None) => Ok(ProverStrategy::Honest),
            ("ground_state", None) => Ok(ProverStrategy::GroundState),
            ("complement_history", None) => Ok(ProverStrategy::ComplementHistory),
            ("maximally_mixed", None) => Ok(ProverStrategy::MaximallyMixed),
            ("fixed_state", Some(p)) if !p.is_empty() => Ok(ProverStrategy::FixedState(PathBuf::from(p))),
            ("fixed_state", _) => Err(Error::InvalidArgument("fixed_state needs a path: fixed_state,PATH".into())),
            _ => Err(Error::InvalidArgument(format!(
                "unknown strategy `{s}` (expected honest|ground_state|complement_history|maximally_mixed|fixed_state,PATH)"
            ))),
        }
    }
}

/// Produces the witness. A prover sees only the public Hamiltonian, never
/// which term the verifier will draw.
pub trait Prover {
    fn witness(&self, h: &LocalHamiltonian) -> Result<MixedState>;
}

/// A [`ProverStrategy`] bound to its instance.
pub struct StrategyProver<'a> {
    pub strategy: &'a ProverStrategy,
    pub oracle_cap: usize,
}

impl Prover for StrategyProver<'_> {
    fn witness(&self, h: &LocalHamiltonian) -> Result<MixedState> {
        let branch = h.branch_circuit().ok_or_else(|| {
            Error::InvalidArgument("prover strategies need a circuit-built Hamiltonian".into())
        })?;
        Ok(match self.strategy {
            ProverStrategy::Honest => history_state(branch)?.into(),
            ProverStrategy::GroundState => ground_energy(h, self.oracle_cap)?.state.into(),
            ProverStrategy::ComplementHistory => history_state_with_flipped_output(branch)?.into(),
            ProverStrategy::MaximallyMixed => MixedState::maximally_mixed(h.qubits())?,
            ProverStrategy::FixedState(path) => {
                let state = PureState::load(&std::fs::read_to_string(path)?)?;
                if state.qubits() != h.qubits() {
                    return Err(Error::DimensionMismatch {
                        expected: h.qubits(),
                        found: state.qubits(),
                    });
                }
                state.into()
            }
        })
    }
}

/// The state `strategy` sends for the instance `(c, claim)`; `h` must be the
/// Hamiltonian built from that pair.
pub fn prover_state(
    strategy: &ProverStrategy,
    c: &Circuit,
    claim: Claim,
    h: &LocalHamiltonian,
    oracle_cap: usize,
) -> Result<MixedState> {
    if h.branch_circuit() != Some(&c.branch(claim)) {
        return Err(Error::InvalidArgument(
            "Hamiltonian was not built from this circuit and claim".into(),
        ));
    }
    StrategyProver {
        strategy,
        oracle_cap,
    }
    .witness(h)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RoundRecord {
    pub term_index: usize,
    pub per_qubit_outcomes: Vec<i8>,
    pub product: i8,
    pub accepted: bool,
}

/// Verifier state for one Hamiltonian: the term sampler is built once and
/// shared read-only across rounds.
pub struct Verifier<'a> {
    h: &'a LocalHamiltonian,
    indices: Vec<usize>,
    sampler: WeightedIndex<f64>,
}

impl<'a> Verifier<'a> {
    pub fn new(h: &'a LocalHamiltonian, norm: Normalization) -> Result<Self> {
        if let Some((q, _)) = h
            .terms()
            .iter()
            .flat_map(|t| t.string.iter())
            .find(|(_, a)| *a == crate::pauli::Axis::Y)
        {
            return Err(Error::YMeasurement { qubit: q });
        }
        let dist = sampling_distribution(h, norm)?;
        let sampler = WeightedIndex::new(dist.iter().map(|(_, p)| *p))
            .map_err(|e| Error::InvalidArgument(format!("term distribution: {e}")))?;
        Ok(Verifier {
            h,
            indices: dist.into_iter().map(|(i, _)| i).collect(),
            sampler,
        })
    }

    /// One round. The witness member is fixed before the term is drawn.
    pub fn round<R: Rng + ?Sized>(&self, witness: &MixedState, rng: &mut R) -> Result<RoundRecord> {
        if witness.qubits() != self.h.qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.h.qubits(),
                found: witness.qubits(),
            });
        }
        let member = witness.sample_member(rng);
        let term_index = self.indices[self.sampler.sample(rng)];
        let term = &self.h.terms()[term_index];
        let (product, per_qubit_outcomes) = member.measure_pauli_product(&term.string, rng)?;
        let accept_on = if term.coefficient > 0.0 { -1 } else { 1 };
        Ok(RoundRecord {
            term_index,
            per_qubit_outcomes,
            product,
            accepted: product == accept_on,
        })
    }
}

/// A single verifier round against `s`.
pub fn verifier_round<R: Rng + ?Sized>(
    h: &LocalHamiltonian,
    s: &MixedState,
    norm: Normalization,
    rng: &mut R,
) -> Result<RoundRecord> {
    Verifier::new(h, norm)?.round(s, rng)
}

/// Independent random stream for round `index` under `master_seed`.
pub fn round_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub rounds: usize,
    pub seed: u64,
    pub normalization: Normalization,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub rounds: usize,
    pub accept_count: usize,
    pub p_hat: f64,
    pub p_exact: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub seed: u64,
    pub records: Vec<RoundRecord>,
}

/// Runs `cfg.rounds` independent rounds against `witness`. Round `i` draws
/// from `round_rng(seed, i)` and gets its own copy of the witness, so the
/// report does not depend on scheduling or worker count.
pub fn run_protocol(
    h: &LocalHamiltonian,
    witness: &MixedState,
    cfg: &ProtocolConfig,
) -> Result<ProtocolReport> {
    if cfg.rounds == 0 {
        return Err(Error::InvalidArgument(
            "at least one round is required".into(),
        ));
    }
    let verifier = Verifier::new(h, cfg.normalization)?;
    let p_exact = p_acc_exact(h, witness, cfg.normalization)?;
    let records = (0..cfg.rounds as u64)
        .into_par_iter()
        .map(|i| verifier.round(witness, &mut round_rng(cfg.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let accept_count = records.iter().filter(|r| r.accepted).count();
    let p_hat = accept_count as f64 / cfg.rounds as f64;
    Ok(ProtocolReport {
        rounds: cfg.rounds,
        accept_count,
        p_hat,
        p_exact,
        threshold: cfg.threshold,
        verdict: decide(p_hat, cfg.threshold),
        seed: cfg.seed,
        records,
    })
}

/// Prepares the strategy's witness first, then runs the rounds.
pub fn run_with_strategy(
    h: &LocalHamiltonian,
    strategy: &ProverStrategy,
    c: &Circuit,
    claim: Claim,
    cfg: &ProtocolConfig,
    oracle_cap: usize,
) -> Result<ProtocolReport> {
    let witness = prover_state(strategy, c, claim, h, oracle_cap)?;
    run_protocol(h, &witness, cfg)
}

/// Hoeffding repetition count `ceil(2 ln(2/eps) / gap^2)` for telling apart
/// two acceptance probabilities `gap` apart with a midpoint threshold.
pub fn amplification_rounds(gap: f64, error: f64) -> Result<usize> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gap must lie in (0, 1], got {gap}"
        )));
    }
    if !(error > 0.0 && error < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "error must lie in (0, 1), got {error}"
        )));
    }
    Ok((2.0 * (2.0 / error).ln() / (gap * gap)).ceil() as usize)
}

/// Accept iff `p_hat >= threshold`; a tie accepts.
pub fn decide(p_hat: f64, threshold: f64) -> Verdict {
    if p_hat >= threshold {
        Verdict::Accept
    } else {
        Verdict::Reject
    }
}

/// Which instance circuit plays the yes-world for a claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum World {
    Instance,
    Complement,
}

/// Desk-scale stand-ins for the promise energies `a` and `b`.
///
/// For claim `k` on circuit `c`, the two possible worlds are `c` itself and
/// its complement, each with its own claim Hamiltonian. The yes-world is
/// the one whose branch circuit outputs 1 more often. `a_ref` is the honest
/// history energy there; `b_ref` is the exact ground energy in the other
/// world, i.e. the best a cheating prover can reach.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferencePoints {
    pub yes_world: World,
    pub a_ref: f64,
    pub b_ref: f64,
    pub p_yes: f64,
    pub p_no: f64,
    pub gap: f64,
    pub threshold: f64,
    pub yes_sum_abs: f64,
    pub no_sum_abs: f64,
}

pub struct ReferenceWorlds {
    pub yes: LocalHamiltonian,
    pub no: LocalHamiltonian,
    pub points: ReferencePoints,
}

pub fn reference_worlds(
    c: &Circuit,
    claim: Claim,
    weights: Weights,
    norm: Normalization,
    oracle_cap: usize,
) -> Result<ReferenceWorlds> {
    let instance = build_history_hamiltonian(c, weights, claim)?;
    let complement = build_history_hamiltonian(&c.complement(), weights, claim)?;
    let p_instance = output_probability(&c.branch(claim))?;
    let p_complement = output_probability(&c.complement().branch(claim))?;
    let (yes_world, yes, no) = if p_instance >= p_complement {
        (World::Instance, instance, complement)
    } else {
        (World::Complement, complement, instance)
    };
    let a_ref = energy(
        &yes,
        &history_state(yes.branch_circuit().expect("built from a circuit"))?,
    )?;
    let b_ref = ground_energy(&no, oracle_cap)?.energy;
    let p_yes = p_acc_from_energy(&yes, a_ref, norm)?;
    let p_no = p_acc_from_energy(&no, b_ref, norm)?;
    let points = ReferencePoints {
        yes_world,
        a_ref,
        b_ref,
        p_yes,
        p_no,
        gap: p_yes - p_no,
        threshold: 0.5 * (p_yes + p_no),
        yes_sum_abs: yes.sampled_sum_abs(norm),
        no_sum_abs: no.sampled_sum_abs(norm),
    };
    Ok(ReferenceWorlds { yes, no, points })
}
