//! Cross-checks that recompute the same quantities a second way.
//!
//! The reference matrix here is assembled straight from the projector
//! blocks on the full register, gate action included, without going
//! through the Pauli decomposition. Pauli strings are applied qubit by
//! qubit rather than through the packed bit masks used elsewhere.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::{Circuit, Claim};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_history_hamiltonian, energy, ground_energy, history_state,
    history_state_with_flipped_output, p_acc_by_terms, p_acc_exact, with_identity_from_without,
    xz_only_check, LocalHamiltonian, Normalization, Weights,
};
use crate::pauli::{to_matrix, Axis, PauliString, WeightedTerm};
use crate::statevector::{basis_state, output_probability, MixedState, PureState};

/// Largest register for which full dense matrices are materialized.
pub const DENSE_MATRIX_QUBITS: usize = 10;

pub const MATRIX_TOL: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-10;

/// `S|x> = phase |y>`, one factor at a time.
pub fn pauli_column(p: &PauliString, x: usize) -> (usize, Complex64) {
    let mut y = x;
    let mut phase = Complex64::new(1.0, 0.0);
    for (q, axis) in p.iter() {
        let one = (x >> q) & 1 == 1;
        match axis {
            Axis::X => y ^= 1 << q,
            Axis::Z => {
                if one {
                    phase = -phase;
                }
            }
            Axis::Y => {
                y ^= 1 << q;
                phase *= if one { -Complex64::i() } else { Complex64::i() };
            }
        }
    }
    (y, phase)
}

/// Nonzero entries of column `x` of the weighted projector-form clock
/// Hamiltonian for `branch`, as `(row, value)` pairs.
pub fn projector_column(
    branch: &Circuit,
    weights: &Weights,
    x: usize,
) -> Result<Vec<(usize, f64)>> {
    let d = branch.qubits();
    let steps = branch.steps();
    let data_mask = (1usize << d) - 1;
    let clock = |j: usize| d + j - 1;
    let bit = |q: usize| (x >> q) & 1;

    let mut diag = 0.0;
    if bit(clock(1)) == 0 {
        diag += weights.input * (x & data_mask).count_ones() as f64;
    }
    for t in 1..steps {
        if bit(clock(t)) == 0 && bit(clock(t + 1)) == 1 {
            diag += weights.clock;
        }
    }
    if bit(branch.output()) == 0 && bit(clock(steps)) == 1 {
        diag += weights.output;
    }

    let mut entries = Vec::new();
    for (i, gate) in branch.gates().iter().enumerate() {
        let t = i + 1;
        let prev_ok = t == 1 || bit(clock(t - 1)) == 1;
        let next_ok = t == steps || bit(clock(t + 1)) == 0;
        if !(prev_ok && next_ok) {
            continue;
        }
        diag += 0.5 * weights.propagation;
        let moved = basis_state(d, x & data_mask)?.apply_gate(gate)?;
        let rest = (x & !data_mask) ^ (1 << clock(t));
        for (y, a) in moved.amplitudes().iter().enumerate() {
            if a.norm_sqr() > 0.0 {
                entries.push((rest | y, -0.5 * weights.propagation * a.re));
            }
        }
    }
    entries.push((x, diag));
    Ok(entries)
}

fn branch_and_weights(h: &LocalHamiltonian) -> Result<(&Circuit, &Weights)> {
    match (h.branch_circuit(), h.weights()) {
        (Some(c), Some(w)) => Ok((c, w)),
        _ => Err(Error::InvalidArgument(
            "oracle checks need a circuit-built Hamiltonian".into(),
        )),
    }
}

fn check_dense(m: usize) -> Result<()> {
    if m > DENSE_MATRIX_QUBITS {
        return Err(Error::TooManyQubits {
            what: "dense oracle matrix",
            qubits: m,
            max: DENSE_MATRIX_QUBITS,
        });
    }
    Ok(())
}

/// `J_in M_in + J_clock M_clock + J_prop M_prop + J_out M_out` as a dense matrix.
pub fn projector_matrix(branch: &Circuit, weights: &Weights) -> Result<DMatrix<f64>> {
    let m = branch.qubits() + branch.steps();
    check_dense(m)?;
    let dim = 1usize << m;
    let mut out = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        for (y, v) in projector_column(branch, weights, x)? {
            out[(y, x)] += v;
        }
    }
    Ok(out)
}

/// `sum_S d_S S` from Kronecker products.
pub fn term_list_matrix(h: &LocalHamiltonian) -> Result<DMatrix<Complex64>> {
    check_dense(h.qubits())?;
    let dim = 1usize << h.qubits();
    let mut out = DMatrix::zeros(dim, dim);
    for t in h.terms() {
        out += to_matrix(&t.string, h.qubits())? * Complex64::new(t.coefficient, 0.0);
    }
    Ok(out)
}

/// Largest entrywise difference between the term list and the projector form.
pub fn matrix_deviation(h: &LocalHamiltonian) -> Result<f64> {
    let (branch, weights) = branch_and_weights(h)?;
    let m = h.qubits();
    if m <= DENSE_MATRIX_QUBITS {
        let terms = term_list_matrix(h)?;
        let reference = projector_matrix(branch, weights)?;
        return Ok(terms
            .iter()
            .zip(reference.iter())
            .map(|(a, &b)| (a - b).norm())
            .fold(0.0, f64::max));
    }
    // Column by column for registers too large to hold densely.
    let dim = 1usize << m;
    let mut column = vec![Complex64::new(0.0, 0.0); dim];
    let mut worst: f64 = 0.0;
    for x in 0..dim {
        column
            .iter_mut()
            .for_each(|v| *v = Complex64::new(0.0, 0.0));
        for t in h.terms() {
            let (y, phase) = pauli_column(&t.string, x);
            column[y] += phase * t.coefficient;
        }
        for (y, v) in projector_column(branch, weights, x)? {
            column[y] -= v;
        }
        worst = column.iter().map(|v| v.norm()).fold(worst, f64::max);
    }
    Ok(worst)
}

/// `<psi|S|psi>` by the factor-wise action.
pub fn pauli_expectation_direct(psi: &PureState, p: &PauliString) -> f64 {
    let a = psi.amplitudes();
    (0..a.len())
        .map(|x| {
            let (y, phase) = pauli_column(p, x);
            (a[y].conj() * phase * a[x]).re
        })
        .sum()
}

/// `<psi|H|psi>` using the projector form of `h`'s circuit.
pub fn projector_energy(h: &LocalHamiltonian, psi: &PureState) -> Result<f64> {
    let (branch, weights) = branch_and_weights(h)?;
    if psi.qubits() != h.qubits() {
        return Err(Error::DimensionMismatch {
            expected: h.qubits(),
            found: psi.qubits(),
        });
    }
    let a = psi.amplitudes();
    let mut e = 0.0;
    for x in 0..a.len() {
        if a[x].norm_sqr() == 0.0 {
            continue;
        }
        for (y, v) in projector_column(branch, weights, x)? {
            e += (a[y].conj() * a[x]).re * v;
        }
    }
    Ok(e)
}

/// A deliberate corruption of the Hamiltonian, for exercising the suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fault {
    /// Adds `0.25 Y_0`.
    YTerm,
    /// Shifts the first non-identity coefficient by the given amount.
    Tamper(f64),
}

pub fn inject(h: &LocalHamiltonian, fault: Fault) -> LocalHamiltonian {
    let mut terms = h.terms().to_vec();
    match fault {
        Fault::YTerm => terms.push(WeightedTerm::new(0.25, PauliString::single(0, Axis::Y))),
        Fault::Tamper(delta) => {
            if let Some(t) = terms.iter_mut().find(|t| !t.string.is_identity()) {
                t.coefficient += delta;
            }
        }
    }
    h.with_terms(terms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub qubits: usize,
    pub terms: usize,
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&OracleCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn check(name: &'static str, worst: f64, tol: f64) -> OracleCheck {
    OracleCheck {
        name,
        passed: worst <= tol,
        detail: format!("max deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn failed(name: &'static str, e: Error) -> OracleCheck {
    OracleCheck {
        name,
        passed: false,
        detail: e.to_string(),
    }
}

/// Runs every check on the claim Hamiltonian of `c`, optionally corrupted
/// by `fault`. Errors only on bad input; failed checks are reported.
pub fn run_oracle_suite(
    c: &Circuit,
    claim: Claim,
    weights: Weights,
    oracle_cap: usize,
    fault: Option<Fault>,
) -> Result<OracleReport> {
    let built = build_history_hamiltonian(c, weights, claim)?;
    if built.qubits() > oracle_cap {
        return Err(Error::TooManyQubits {
            what: "oracle suite",
            qubits: built.qubits(),
            max: oracle_cap,
        });
    }
    let h = match fault {
        Some(f) => inject(&built, f),
        None => built,
    };
    let branch = h.branch_circuit().expect("built from a circuit").clone();
    let history = history_state(&branch)?;
    let ground = ground_energy(&h, oracle_cap)?;
    let battery = [
        history.clone(),
        history_state_with_flipped_output(&branch)?,
        ground.state.clone(),
    ];

    let mut checks = Vec::new();

    let y_terms = h.terms().iter().filter(|t| t.string.has_y()).count();
    checks.push(OracleCheck {
        name: "xz_only",
        passed: xz_only_check(&h),
        detail: format!("{y_terms} of {} terms carry a Y factor", h.terms().len()),
    });

    checks.push(match matrix_deviation(&h) {
        Ok(dev) => check("matrix_reconstruction", dev, MATRIX_TOL),
        Err(e) => failed("matrix_reconstruction", e),
    });

    checks.push(
        (|| -> Result<OracleCheck> {
            let steps = branch.steps() as f64;
            let expected = weights.output * (1.0 - output_probability(&branch)?) / (steps + 1.0);
            let by_terms = energy(&h, &history)?;
            let by_projectors = projector_energy(&h, &history)?;
            let worst = (by_terms - expected)
                .abs()
                .max((by_projectors - expected).abs());
            Ok(check("history_energy_identity", worst, IDENTITY_TOL))
        })()
        .unwrap_or_else(|e| failed("history_energy_identity", e)),
    );

    checks.push(
        (|| -> Result<OracleCheck> {
            let mut worst: f64 = 0.0;
            for psi in &battery {
                for t in h.terms() {
                    let (plus, minus) = psi.product_distribution(&t.string)?;
                    let z = pauli_expectation_direct(psi, &t.string);
                    worst = worst
                        .max((plus - 0.5 * (1.0 + z)).abs())
                        .max((minus - 0.5 * (1.0 - z)).abs());
                }
            }
            Ok(check("sequential_vs_joint", worst, IDENTITY_TOL))
        })()
        .unwrap_or_else(|e| failed("sequential_vs_joint", e)),
    );

    checks.push(
        (|| -> Result<OracleCheck> {
            let mut states: Vec<MixedState> =
                battery.iter().cloned().map(MixedState::from).collect();
            states.push(MixedState::maximally_mixed(h.qubits())?);
            let mut worst: f64 = 0.0;
            for s in &states {
                for norm in [Normalization::WithIdentity, Normalization::WithoutIdentity] {
                    if h.sampled_sum_abs(norm) == 0.0 {
                        continue;
                    }
                    worst =
                        worst.max((p_acc_exact(&h, s, norm)? - p_acc_by_terms(&h, s, norm)?).abs());
                }
                if h.sampled_sum_abs(Normalization::WithoutIdentity) > 0.0 {
                    let without = p_acc_by_terms(&h, s, Normalization::WithoutIdentity)?;
                    let with = p_acc_by_terms(&h, s, Normalization::WithIdentity)?;
                    worst = worst.max((with_identity_from_without(&h, without) - with).abs());
                }
            }
            Ok(check("p_acc_cross_form", worst, IDENTITY_TOL))
        })()
        .unwrap_or_else(|e| failed("p_acc_cross_form", e)),
    );

    let history_energy = energy(&h, &history)?;
    let ground_direct = projector_energy(&h, &ground.state).unwrap_or(f64::NAN);
    let ok = ground.energy <= history_energy + IDENTITY_TOL
        && ground.energy >= -h.sum_abs() - IDENTITY_TOL
        && ground.residual <= 1e-8;
    checks.push(OracleCheck {
        name: "variational",
        passed: ok,
        detail: format!(
            "ground {:.12} (projector form {:.12}), history {:.12}, residual {:.1e}",
            ground.energy, ground_direct, history_energy, ground.residual
        ),
    });

    Ok(OracleReport {
        qubits: h.qubits(),
        terms: h.terms().len(),
        checks,
    })
}
