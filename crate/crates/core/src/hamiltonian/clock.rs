//! Feynman-Kitaev clock Hamiltonian with a unary clock.
//!
//! The register holds the circuit's `n + w` qubits first, then `T` clock
//! qubits `c_1..c_T`. Time `t` is encoded as `c_1..c_t = 1`, the rest 0.
//!
//! ```text
//! H_in    = sum_q |1><1|_q (x) |0><0|_{c_1}
//! H_clock = sum_{t<T} |0><0|_{c_t} (x) |1><1|_{c_{t+1}}
//! H_out   = |0><0|_out (x) |1><1|_{c_T}
//! H_prop,t = 1/2 |1><1|_{c_{t-1}} (x) |0><0|_{c_{t+1}} (x) (I - X_{c_t} (x) U_t)
//! ```
//!
//! The `c_{t-1}` and `c_{t+1}` factors are dropped at `t = 1` and `t = T`.
//! Every gate is real and Hermitian, so `U_t = U_t^dagger` and each block
//! is real symmetric, which keeps its Pauli expansion Y-free.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

use super::{LocalHamiltonian, Weights};
use crate::circuit::{Circuit, Claim, Gate};
use crate::error::{Error, Result};
use crate::pauli::{decompose_hermitian, PauliString, WeightedTerm, DEFAULT_PRUNE_TOL};
use crate::statevector::{zero_state, PureState, DEFAULT_QUBIT_CAP};

/// Where the data and clock registers live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockLayout {
    /// Data plus witness qubits, indices `0..data`.
    pub data: usize,
    /// Clock qubits, indices `data..data + steps`.
    pub steps: usize,
}

impl ClockLayout {
    pub fn qubits(&self) -> usize {
        self.data + self.steps
    }

    /// Register index of clock qubit `c_j`, `1 <= j <= steps`.
    pub fn clock_qubit(&self, j: usize) -> usize {
        debug_assert!((1..=self.steps).contains(&j));
        self.data + j - 1
    }

    /// Basis-index bits of the legal clock state for time `t`.
    pub fn clock_bits(&self, t: usize) -> usize {
        ((1usize << t) - 1) << self.data
    }
}

struct Accumulator {
    terms: BTreeMap<PauliString, f64>,
}

impl Accumulator {
    /// Decomposes a local block acting on `qubits` (local qubit `i` is
    /// `qubits[i]`) and adds `weight` times it.
    fn add_block(
        &mut self,
        weight: f64,
        qubits: &[usize],
        entry: impl Fn(usize, usize) -> f64,
    ) -> Result<()> {
        if weight == 0.0 {
            return Ok(());
        }
        let k = qubits.len();
        let dim = 1usize << k;
        let m = DMatrix::from_fn(dim, dim, |r, c| Complex64::new(entry(r, c), 0.0));
        for t in decompose_hermitian(&m, k, 0.0)? {
            let global = t.string.remap(|q| qubits[q]);
            *self.terms.entry(global).or_insert(0.0) += weight * t.coefficient;
        }
        Ok(())
    }

    fn finish(self) -> Vec<WeightedTerm> {
        self.terms
            .into_iter()
            .filter(|(_, c)| c.abs() >= DEFAULT_PRUNE_TOL)
            .map(|(s, c)| WeightedTerm::new(c, s))
            .collect()
    }
}

/// Diagonal projector that is 1 where local bit `i` equals `pattern[i]`.
fn projector(pattern: &'static [usize]) -> impl Fn(usize, usize) -> f64 {
    move |r, c| {
        let hit = pattern.iter().enumerate().all(|(i, &b)| (r >> i) & 1 == b);
        if r == c && hit {
            1.0
        } else {
            0.0
        }
    }
}

/// Local block `1/2 P_neighbours (x) (I - X_{c_t} (x) U)` on
/// `[gate targets.., c_{t-1}?, c_t, c_{t+1}?]`.
fn propagation_block(gate: &Gate, has_prev: bool, has_next: bool) -> impl Fn(usize, usize) -> f64 {
    let arity = gate.kind().arity();
    let u = gate.kind().matrix();
    let gdim = 1usize << arity;
    let prev = has_prev.then_some(arity);
    let active = arity + usize::from(has_prev);
    let next = has_next.then_some(active + 1);
    move |r, c| {
        let bit = |x: usize, i: usize| (x >> i) & 1;
        let neighbours_ok =
            |x: usize| prev.is_none_or(|p| bit(x, p) == 1) && next.is_none_or(|n| bit(x, n) == 0);
        if !neighbours_ok(r) || !neighbours_ok(c) {
            return 0.0;
        }
        // Neighbour bits are fixed by the projector, so they must agree.
        let others = !((gdim - 1) | (1 << active));
        if r & others != c & others {
            return 0.0;
        }
        let diagonal = if r == c { 0.5 } else { 0.0 };
        let hop = if bit(r, active) != bit(c, active) {
            0.5 * u[(r & (gdim - 1)) * gdim + (c & (gdim - 1))]
        } else {
            0.0
        };
        diagonal - hop
    }
}

/// Builds the clock Hamiltonian for `c`, complementing it first when the
/// claim is `nonmember`. Terms are merged per Pauli string and returned in
/// canonical string order, identity first.
pub fn build_history_hamiltonian(
    c: &Circuit,
    weights: Weights,
    claim: Claim,
) -> Result<LocalHamiltonian> {
    let branch = c.branch(claim);
    let layout = ClockLayout {
        data: branch.qubits(),
        steps: branch.steps(),
    };
    let m = layout.qubits();
    if m > DEFAULT_QUBIT_CAP {
        return Err(Error::QubitCap {
            requested: m,
            cap: DEFAULT_QUBIT_CAP,
        });
    }
    let t_max = layout.steps;
    let clock = |j| layout.clock_qubit(j);
    let mut acc = Accumulator {
        terms: BTreeMap::new(),
    };

    for q in 0..layout.data {
        acc.add_block(weights.input, &[q, clock(1)], projector(&[1, 0]))?;
    }
    for t in 1..t_max {
        acc.add_block(weights.clock, &[clock(t), clock(t + 1)], projector(&[0, 1]))?;
    }
    acc.add_block(
        weights.output,
        &[branch.output(), clock(t_max)],
        projector(&[0, 1]),
    )?;

    for (i, gate) in branch.gates().iter().enumerate() {
        let t = i + 1;
        let (has_prev, has_next) = (t > 1, t < t_max);
        let mut qubits = gate.targets().to_vec();
        if has_prev {
            qubits.push(clock(t - 1));
        }
        qubits.push(clock(t));
        if has_next {
            qubits.push(clock(t + 1));
        }
        acc.add_block(
            weights.propagation,
            &qubits,
            propagation_block(gate, has_prev, has_next),
        )?;
    }

    Ok(LocalHamiltonian::assemble(
        m,
        acc.finish(),
        Some(layout),
        Some(branch),
        Some(weights),
    ))
}

/// `(T + 1)^{-1/2} sum_t |t>_clock (x) U_t..U_1 |0..0>`, where step `t`
/// applies every gate in `steps[t - 1]`.
fn history_of_steps(data: usize, steps: &[Vec<&Gate>]) -> Result<PureState> {
    let layout = ClockLayout {
        data,
        steps: steps.len(),
    };
    let m = layout.qubits();
    if m > DEFAULT_QUBIT_CAP {
        return Err(Error::QubitCap {
            requested: m,
            cap: DEFAULT_QUBIT_CAP,
        });
    }
    let scale = 1.0 / ((steps.len() + 1) as f64).sqrt();
    let mut register = zero_state(data)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << m];
    for t in 0..=steps.len() {
        if t > 0 {
            for g in &steps[t - 1] {
                register.apply_gate_in_place(g)?;
            }
        }
        let clock = layout.clock_bits(t);
        for (x, a) in register.amplitudes().iter().enumerate() {
            amps[clock | x] = a * scale;
        }
    }
    PureState::from_amplitudes(amps)
}

/// The honest prover's history state for `c` with the trivial witness.
pub fn history_state(c: &Circuit) -> Result<PureState> {
    let steps: Vec<Vec<&Gate>> = c.gates().iter().map(|g| vec![g]).collect();
    history_of_steps(c.qubits(), &steps)
}

/// History state of `c` whose final clock step also flips the output
/// qubit: the complemented computation folded into `T` steps, so it lives
/// on the same register as `c`'s Hamiltonian.
pub fn history_state_with_flipped_output(c: &Circuit) -> Result<PureState> {
    let flip = Gate::x(c.output());
    let mut steps: Vec<Vec<&Gate>> = c.gates().iter().map(|g| vec![g]).collect();
    steps
        .last_mut()
        .expect("circuits have at least one gate")
        .push(&flip);
    history_of_steps(c.qubits(), &steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::hamiltonian::energy;
    use crate::statevector::output_probability;

    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn circuit(s: &str) -> Circuit {
        parse_circuit(s).unwrap()
    }

    #[test]
    fn hadamard_term_list() {
        let h = build_history_hamiltonian(
            &circuit("qubits 1\noutput 0\nH 0"),
            Weights::default(),
            Claim::Member,
        )
        .unwrap();
        let expect = [
            (1.0, "I"),
            (-0.5 * R, "X0*X1"),
            (-0.5 * R, "Z0*X1"),
            (-0.5, "Z0*Z1"),
        ];
        assert_eq!(h.terms().len(), expect.len());
        for (c, s) in expect {
            let p: PauliString = s.parse().unwrap();
            let t = h
                .terms()
                .iter()
                .find(|t| t.string == p)
                .unwrap_or_else(|| panic!("missing {s}"));
            assert!(
                (t.coefficient - c).abs() < 1e-14,
                "{s}: {} vs {c}",
                t.coefficient
            );
        }
        assert!((h.sum_abs() - (1.5 + R)).abs() < 1e-14);
        assert_eq!(h.steps(), Some(1));
        assert!(h.terms()[0].string.is_identity());
    }

    #[test]
    fn nonmember_builds_the_complement() {
        let c = circuit("qubits 1\noutput 0\nX 0");
        let a = build_history_hamiltonian(&c, Weights::default(), Claim::Nonmember).unwrap();
        let b = build_history_hamiltonian(
            &circuit("qubits 1\noutput 0\nX 0\nX 0"),
            Weights::default(),
            Claim::Member,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hadamard_history_state() {
        let s = history_state(&circuit("qubits 1\noutput 0\nH 0")).unwrap();
        // index = data + 2 * clock
        let expect = [R, 0.0, 0.5, 0.5];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert!((a - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn history_energy_identity() {
        for src in [
            "qubits 1\noutput 0\nX 0",
            "qubits 1\noutput 0\nH 0",
            "qubits 2\noutput 1\nH 0\nCNOT 0 1",
            "qubits 3\noutput 2\nH 0\nH 1\nTOFFOLI 0 1 2\nZ 2\nH 2",
            "qubits 2\nwitness 1\noutput 0\nH 1\nCZ 1 0\nH 0",
        ] {
            let c = circuit(src);
            let h = build_history_hamiltonian(&c, Weights::default(), Claim::Member).unwrap();
            let e = energy(&h, &history_state(&c).unwrap()).unwrap();
            let expect = (1.0 - output_probability(&c).unwrap()) / (c.steps() as f64 + 1.0);
            assert!((e - expect).abs() < 1e-10, "{src}: {e} vs {expect}");
        }
    }

    #[test]
    fn locality_and_xz() {
        let c = circuit("qubits 3\noutput 2\nTOFFOLI 0 1 2\nTOFFOLI 2 0 1\nTOFFOLI 1 2 0");
        let h = build_history_hamiltonian(&c, Weights::default(), Claim::Member).unwrap();
        assert!(h.max_locality() <= 6);
        assert!(crate::hamiltonian::xz_only_check(&h));
    }

    #[test]
    fn zero_weights_drop_blocks() {
        let c = circuit("qubits 1\noutput 0\nH 0");
        let w = Weights::new(0.0, 0.0, 0.0, 1.0).unwrap();
        let h = build_history_hamiltonian(&c, w, Claim::Member).unwrap();
        // |0><0|_0 |1><1|_c = (I + Z0 - Z1 - Z0 Z1) / 4
        assert_eq!(h.terms().len(), 4);
        assert!((h.sum_abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flipped_history_state_lives_on_same_register() {
        let c = circuit("qubits 1\noutput 0\nX 0");
        let s = history_state_with_flipped_output(&c).unwrap();
        // The final step applies X then X: the output stays |0> at every time.
        let expect = [R, 0.0, R, 0.0];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert!((a - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
        let wide = circuit("qubits 2\nwitness 1\noutput 1\nH 0\nCNOT 0 1");
        assert_eq!(
            history_state_with_flipped_output(&wide).unwrap().qubits(),
            5
        );
    }
}
