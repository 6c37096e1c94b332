//! Dense pure-state simulation and the verifier's single-qubit measurements.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliString};

/// Default register cap for dense simulation.
pub const DEFAULT_QUBIT_CAP: usize = 20;

const NORM_TOL: f64 = 1e-10;
const DEGENERATE_PROB: f64 = 1e-15;

/// Single-qubit bases available to the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    /// Maps a Pauli axis to a measurement basis; there is no Y basis.
    pub fn from_axis(axis: Axis, qubit: usize) -> Result<Self> {
        match axis {
            Axis::X => Ok(Basis::X),
            Axis::Z => Ok(Basis::Z),
            Axis::Y => Err(Error::YMeasurement { qubit }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// `|0...0>` on `m` qubits.
pub fn zero_state(m: usize) -> Result<PureState> {
    basis_state(m, 0)
}

/// Computational basis state `|index>` on `m` qubits.
pub fn basis_state(m: usize, index: usize) -> Result<PureState> {
    check_cap(m)?;
    if index >> m != 0 {
        return Err(Error::InvalidArgument(format!(
            "basis index {index} needs more than {m} qubits"
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << m];
    amplitudes[index] = Complex64::new(1.0, 0.0);
    Ok(PureState {
        qubits: m,
        amplitudes,
    })
}

fn check_cap(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "a state needs at least one qubit".into(),
        ));
    }
    if m > DEFAULT_QUBIT_CAP {
        return Err(Error::QubitCap {
            requested: m,
            cap: DEFAULT_QUBIT_CAP,
        });
    }
    Ok(())
}

impl PureState {
    /// Wraps an amplitude vector whose length is a power of two and whose
    /// norm is 1 within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {len} is not 2^m with m >= 1"
            )));
        }
        let qubits = len.trailing_zeros() as usize;
        check_cap(qubits)?;
        let state = PureState { qubits, amplitudes };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&self, g: &Gate) -> Result<PureState> {
        let mut next = self.clone();
        next.apply_gate_in_place(g)?;
        Ok(next)
    }

    pub(crate) fn apply_gate_in_place(&mut self, g: &Gate) -> Result<()> {
        if let Some(&index) = g.targets().iter().find(|&&t| t >= self.qubits) {
            return Err(Error::QubitOutOfRange {
                index,
                qubits: self.qubits,
            });
        }
        let t = g.targets();
        let amps = &mut self.amplitudes;
        match g.kind() {
            GateKind::X => {
                let bit = 1 << t[0];
                for i in (0..amps.len()).filter(|i| i & bit == 0) {
                    amps.swap(i, i | bit);
                }
            }
            GateKind::Z => {
                let bit = 1 << t[0];
                amps.iter_mut()
                    .enumerate()
                    .filter(|(i, _)| i & bit != 0)
                    .for_each(|(_, a)| *a = -*a);
            }
            GateKind::H => {
                let bit = 1 << t[0];
                let r = std::f64::consts::FRAC_1_SQRT_2;
                for i in (0..amps.len()).filter(|i| i & bit == 0) {
                    let (a0, a1) = (amps[i], amps[i | bit]);
                    amps[i] = (a0 + a1) * r;
                    amps[i | bit] = (a0 - a1) * r;
                }
            }
            GateKind::Cnot | GateKind::Toffoli => {
                let (controls, target) = t.split_at(t.len() - 1);
                let cmask = controls.iter().fold(0, |m, &q| m | (1 << q));
                let bit = 1 << target[0];
                for i in (0..amps.len()).filter(|i| i & bit == 0 && i & cmask == cmask) {
                    amps.swap(i, i | bit);
                }
            }
            GateKind::Cz => {
                let mask = (1 << t[0]) | (1 << t[1]);
                amps.iter_mut()
                    .enumerate()
                    .filter(|(i, _)| i & mask == mask)
                    .for_each(|(_, a)| *a = -*a);
            }
        }
        Ok(())
    }

    /// Probability that `qubit` reads 1 in the computational basis.
    pub fn probability_of_one(&self, qubit: usize) -> f64 {
        let bit = 1 << qubit;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// `<psi|S|psi>` for any Pauli string, including Y factors.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        if let Some(q) = p.max_qubit().filter(|&q| q >= self.qubits) {
            return Err(Error::QubitOutOfRange {
                index: q,
                qubits: self.qubits,
            });
        }
        let act = p.action();
        let amps = &self.amplitudes;
        let value: Complex64 = amps
            .iter()
            .enumerate()
            .map(|(x, a)| amps[x ^ act.flip_mask].conj() * act.phase(x) * a)
            .sum();
        Ok(value.re.clamp(-1.0, 1.0))
    }

    /// Projects `qubit` onto the `outcome` eigenspace of `basis`; returns the
    /// branch probability and the unnormalized projected state.
    fn project(&self, qubit: usize, basis: Basis, outcome: i8) -> (f64, PureState) {
        let bit = 1 << qubit;
        let mut out = self.clone();
        match basis {
            Basis::Z => {
                let keep = if outcome > 0 { 0 } else { bit };
                for (i, a) in out.amplitudes.iter_mut().enumerate() {
                    if i & bit != keep {
                        *a = Complex64::new(0.0, 0.0);
                    }
                }
            }
            Basis::X => {
                let s = f64::from(outcome);
                for i in (0..out.amplitudes.len()).filter(|i| i & bit == 0) {
                    let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
                    // (I + sX)/2 on the (|0>, |1>) pair
                    let lo = (a0 + a1 * s) * 0.5;
                    out.amplitudes[i] = lo;
                    out.amplitudes[i | bit] = lo * s;
                }
            }
        }
        (out.norm_sqr(), out)
    }

    fn renormalized(mut self, prob: f64) -> PureState {
        let scale = 1.0 / prob.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= scale);
        self
    }

    /// Measures one qubit, returning the ±1 eigenvalue and collapsed state.
    pub fn measure_single_qubit<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(i8, PureState)> {
        if qubit >= self.qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                qubits: self.qubits,
            });
        }
        let (p_plus, plus) = self.project(qubit, basis, 1);
        let draw: f64 = rng.random();
        let (outcome, prob, branch) =
            if p_plus >= 1.0 - DEGENERATE_PROB || (p_plus > DEGENERATE_PROB && draw < p_plus) {
                (1, p_plus, plus)
            } else {
                let (p_minus, minus) = self.project(qubit, basis, -1);
                (-1, p_minus, minus)
            };
        Ok((outcome, branch.renormalized(prob)))
    }

    /// Measures each support qubit of `p` in turn, threading the collapsed
    /// state, and returns the product with the per-qubit outcomes.
    pub fn measure_pauli_product<R: Rng + ?Sized>(
        &self,
        p: &PauliString,
        rng: &mut R,
    ) -> Result<(i8, Vec<i8>)> {
        let bases = measurement_plan(p, self.qubits)?;
        let mut state = self.clone();
        let mut outcomes = Vec::with_capacity(bases.len());
        for (qubit, basis) in bases {
            let (o, next) = state.measure_single_qubit(qubit, basis, rng)?;
            outcomes.push(o);
            state = next;
        }
        Ok((outcomes.iter().product(), outcomes))
    }

    /// Exact `(P(+1), P(-1))` of the sequential product measurement,
    /// obtained by enumerating every measurement branch.
    pub fn product_distribution(&self, p: &PauliString) -> Result<(f64, f64)> {
        let bases = measurement_plan(p, self.qubits)?;
        let mut dist = (0.0, 0.0);
        fn walk(
            state: &PureState,
            weight: f64,
            parity: i8,
            rest: &[(usize, Basis)],
            dist: &mut (f64, f64),
        ) {
            let Some((&(qubit, basis), tail)) = rest.split_first() else {
                if parity > 0 {
                    dist.0 += weight;
                } else {
                    dist.1 += weight;
                }
                return;
            };
            for outcome in [1i8, -1] {
                let (prob, branch) = state.project(qubit, basis, outcome);
                if prob > DEGENERATE_PROB {
                    walk(
                        &branch.renormalized(prob),
                        weight * prob,
                        parity * outcome,
                        tail,
                        dist,
                    );
                }
            }
        }
        walk(self, 1.0, 1, &bases, &mut dist);
        Ok(dist)
    }

    /// `qubits <m>` header followed by `index real imaginary` lines for
    /// every nonzero amplitude.
    pub fn dump(&self) -> String {
        let mut out = format!("qubits {}\n", self.qubits);
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.re != 0.0 || a.im != 0.0 {
                let _ = writeln!(out, "{i} {} {}", a.re, a.im);
            }
        }
        out
    }

    /// Inverse of [`PureState::dump`]. Unlisted indices are zero; the
    /// result is renormalized after checking the norm to within `1e-6`.
    pub fn load(text: &str) -> Result<PureState> {
        let mut qubits = None;
        let mut amplitudes: Vec<Complex64> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let bad = |message: String| Error::StateFile { line, message };
            let fields: Vec<&str> = raw
                .split('#')
                .next()
                .unwrap_or("")
                .split_whitespace()
                .collect();
            match (fields.as_slice(), qubits) {
                ([], _) => {}
                (["qubits", m], None) => {
                    let m: usize = m
                        .parse()
                        .map_err(|_| bad(format!("bad qubit count `{m}`")))?;
                    check_cap(m)?;
                    qubits = Some(m);
                    amplitudes = vec![Complex64::new(0.0, 0.0); 1 << m];
                }
                (_, None) => return Err(bad("expected `qubits <m>` header".into())),
                ([i, re, im], Some(_)) => {
                    let i: usize = i
                        .parse()
                        .map_err(|_| bad(format!("bad basis index `{i}`")))?;
                    let re: f64 = re
                        .parse()
                        .map_err(|_| bad(format!("bad real part `{re}`")))?;
                    let im: f64 = im
                        .parse()
                        .map_err(|_| bad(format!("bad imaginary part `{im}`")))?;
                    let slot = amplitudes
                        .get_mut(i)
                        .ok_or_else(|| bad(format!("basis index {i} out of range")))?;
                    *slot = Complex64::new(re, im);
                }
                _ => {
                    return Err(bad(format!(
                        "expected `index real imaginary`, got `{}`",
                        raw.trim()
                    )))
                }
            }
        }
        if qubits.is_none() {
            return Err(Error::StateFile {
                line: 0,
                message: "empty state file".into(),
            });
        }
        let state = PureState {
            qubits: qubits.unwrap_or_default(),
            amplitudes,
        };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state.renormalized(norm_sqr))
    }
}

fn measurement_plan(p: &PauliString, qubits: usize) -> Result<Vec<(usize, Basis)>> {
    p.iter()
        .map(|(q, a)| {
            if q >= qubits {
                return Err(Error::QubitOutOfRange { index: q, qubits });
            }
            Ok((q, Basis::from_axis(a, q)?))
        })
        .collect()
}

/// `V|0...0>` over the circuit's full `n + w` register.
pub fn run_circuit(c: &Circuit) -> Result<PureState> {
    let mut s = zero_state(c.qubits())?;
    for g in c.gates() {
        s.apply_gate_in_place(g)?;
    }
    Ok(s)
}

/// Probability of reading 1 on the circuit's output qubit.
pub fn output_probability(c: &Circuit) -> Result<f64> {
    Ok(run_circuit(c)?.probability_of_one(c.output()))
}

#[derive(Debug, Clone, PartialEq)]
enum Ensemble {
    Members(Vec<(f64, PureState)>),
    /// `I / 2^m`, sampled one uniform basis state at a time.
    Uniform {
        qubits: usize,
    },
}

/// A density operator given as a convex mixture of pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    ensemble: Ensemble,
}

impl From<PureState> for MixedState {
    fn from(s: PureState) -> Self {
        MixedState {
            ensemble: Ensemble::Members(vec![(1.0, s)]),
        }
    }
}

impl MixedState {
    pub fn ensemble(members: Vec<(f64, PureState)>) -> Result<Self> {
        let Some(qubits) = members.first().map(|(_, s)| s.qubits) else {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        };
        if let Some((_, s)) = members.iter().find(|(_, s)| s.qubits != qubits) {
            return Err(Error::DimensionMismatch {
                expected: qubits,
                found: s.qubits,
            });
        }
        if members.iter().any(|(w, _)| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "ensemble weights must be nonnegative".into(),
            ));
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "ensemble weights sum to {total}, not 1"
            )));
        }
        Ok(MixedState {
            ensemble: Ensemble::Members(members),
        })
    }

    pub fn maximally_mixed(m: usize) -> Result<Self> {
        check_cap(m)?;
        Ok(MixedState {
            ensemble: Ensemble::Uniform { qubits: m },
        })
    }

    pub fn qubits(&self) -> usize {
        match &self.ensemble {
            Ensemble::Members(m) => m[0].1.qubits,
            Ensemble::Uniform { qubits } => *qubits,
        }
    }

    pub fn is_maximally_mixed(&self) -> bool {
        matches!(self.ensemble, Ensemble::Uniform { .. })
    }

    /// The single member of a weight-one ensemble.
    pub fn as_pure(&self) -> Option<&PureState> {
        match &self.ensemble {
            Ensemble::Members(m) if m.len() == 1 => Some(&m[0].1),
            _ => None,
        }
    }

    /// `Tr(S rho)`.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        match &self.ensemble {
            Ensemble::Members(members) => members
                .iter()
                .map(|(w, s)| Ok(w * s.pauli_expectation(p)?))
                .sum(),
            Ensemble::Uniform { qubits } => {
                if let Some(q) = p.max_qubit().filter(|q| q >= qubits) {
                    return Err(Error::QubitOutOfRange {
                        index: q,
                        qubits: *qubits,
                    });
                }
                Ok(if p.is_identity() { 1.0 } else { 0.0 })
            }
        }
    }

    /// Draws one ensemble member by weight. Each call returns an owned copy,
    /// so collapse in one round never reaches another.
    pub fn sample_member<R: Rng + ?Sized>(&self, rng: &mut R) -> PureState {
        match &self.ensemble {
            Ensemble::Members(members) => {
                let draw: f64 = rng.random();
                let mut acc = 0.0;
                for (w, s) in members {
                    acc += w;
                    if draw < acc {
                        return s.clone();
                    }
                }
                members
                    .iter()
                    .rev()
                    .find(|(w, _)| *w > 0.0)
                    .unwrap_or(&members[0])
                    .1
                    .clone()
            }
            Ensemble::Uniform { qubits } => {
                let index = rng.random_range(0..1usize << qubits);
                basis_state(*qubits, index).expect("cap checked at construction")
            }
        }
    }
}
