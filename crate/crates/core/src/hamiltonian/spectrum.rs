//! Exact diagonalization of small Hamiltonians.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{energy, history_state, xz_only_check, LocalHamiltonian};
use crate::error::{Error, Result};
use crate::statevector::PureState;

/// Largest register the dense eigensolver accepts by default (4096 states).
pub const DEFAULT_ORACLE_CAP: usize = 12;

/// Dense `sum_S d_S S`, built from the bit-level Pauli action.
pub fn dense_matrix(h: &LocalHamiltonian, cap: usize) -> Result<DMatrix<Complex64>> {
    check_oracle_cap(h, cap)?;
    let dim = 1usize << h.qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for t in h.terms() {
        let act = t.string.action();
        for x in 0..dim {
            m[(x ^ act.flip_mask, x)] += act.phase(x) * t.coefficient;
        }
    }
    Ok(m)
}

fn dense_real(h: &LocalHamiltonian) -> DMatrix<f64> {
    let dim = 1usize << h.qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for t in h.terms() {
        let act = t.string.action();
        for x in 0..dim {
            m[(x ^ act.flip_mask, x)] += act.sign(x) * t.coefficient;
        }
    }
    m
}

fn check_oracle_cap(h: &LocalHamiltonian, cap: usize) -> Result<()> {
    if h.qubits() > cap {
        return Err(Error::TooManyQubits {
            what: "exact diagonalization",
            qubits: h.qubits(),
            max: cap,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    pub state: PureState,
    /// `||H v - lambda v||`.
    pub residual: f64,
}

/// Lowest eigenpair of `h` by dense diagonalization. Y-free Hamiltonians
/// are real symmetric and take the real solver.
pub fn ground_energy(h: &LocalHamiltonian, cap: usize) -> Result<GroundState> {
    check_oracle_cap(h, cap)?;
    if xz_only_check(h) {
        let m = dense_real(h);
        let eig = m.clone().symmetric_eigen();
        let (i, &lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        let v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let residual = (&m * &v - &v * lambda).norm();
        let amps = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok(GroundState {
            energy: lambda,
            state: normalized(amps)?,
            residual,
        })
    } else {
        let m = dense_matrix(h, cap)?;
        let eig = m.clone().symmetric_eigen();
        let (i, &lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        let v: DVector<Complex64> = eig.eigenvectors.column(i).into_owned();
        let residual = (&m * &v - &v * Complex64::new(lambda, 0.0)).norm();
        Ok(GroundState {
            energy: lambda,
            state: normalized(v.iter().copied().collect())?,
            residual,
        })
    }
}

fn normalized(mut amps: Vec<Complex64>) -> Result<PureState> {
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    PureState::from_amplitudes(amps)
}

/// Ground and history energies of a circuit-built Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub ground_energy: f64,
    #[serde(skip)]
    pub ground_state: PureState,
    pub history_energy: f64,
    /// `history_energy - ground_energy`, nonnegative up to round-off.
    pub gap_witness: f64,
}

pub fn energy_report(h: &LocalHamiltonian, cap: usize) -> Result<EnergyReport> {
    let branch = h.branch_circuit().ok_or_else(|| {
        Error::InvalidArgument("energy report needs a circuit-built Hamiltonian".into())
    })?;
    let ground = ground_energy(h, cap)?;
    let history_energy = energy(h, &history_state(branch)?)?;
    Ok(EnergyReport {
        ground_energy: ground.energy,
        ground_state: ground.state,
        history_energy,
        gap_witness: history_energy - ground.energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, Claim};
    use crate::hamiltonian::{build_history_hamiltonian, Weights};
    use crate::pauli::{Axis, PauliString, WeightedTerm};

    fn term(c: f64, s: &str) -> WeightedTerm {
        WeightedTerm::new(c, s.parse().unwrap())
    }

    #[test]
    fn single_z_ground_state() {
        let h = LocalHamiltonian::from_terms(1, vec![term(-1.0, "Z0")]).unwrap();
        let g = ground_energy(&h, DEFAULT_ORACLE_CAP).unwrap();
        assert!((g.energy + 1.0).abs() < 1e-12);
        assert!((g.state.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
        assert!(g.residual < 1e-8);
    }

    #[test]
    fn diagonal_with_constant() {
        let h = LocalHamiltonian::from_terms(2, vec![term(1.0, "I"), term(-0.5, "Z0*Z1")]).unwrap();
        assert!((ground_energy(&h, DEFAULT_ORACLE_CAP).unwrap().energy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn complex_path_handles_y() {
        let h = LocalHamiltonian::from_terms(
            1,
            vec![WeightedTerm::new(1.0, PauliString::single(0, Axis::Y))],
        )
        .unwrap();
        let g = ground_energy(&h, DEFAULT_ORACLE_CAP).unwrap();
        assert!((g.energy + 1.0).abs() < 1e-12);
        assert!((energy(&h, &g.state).unwrap() + 1.0).abs() < 1e-12);
        assert!(g.residual < 1e-8);
    }

    #[test]
    fn hadamard_spectrum_below_history() {
        let c = parse_circuit("qubits 1\noutput 0\nH 0").unwrap();
        let h = build_history_hamiltonian(&c, Weights::default(), Claim::Member).unwrap();
        let r = energy_report(&h, DEFAULT_ORACLE_CAP).unwrap();
        assert!((r.history_energy - 0.25).abs() < 1e-12);
        assert!(r.ground_energy <= r.history_energy + 1e-10);
        assert!(r.ground_energy >= -h.sum_abs());
        assert!((energy(&h, &r.ground_state).unwrap() - r.ground_energy).abs() < 1e-10);
    }

    #[test]
    fn accepting_circuit_has_zero_ground_energy() {
        let c = parse_circuit("qubits 1\noutput 0\nX 0").unwrap();
        let h = build_history_hamiltonian(&c, Weights::default(), Claim::Member).unwrap();
        let r = energy_report(&h, DEFAULT_ORACLE_CAP).unwrap();
        assert!(r.history_energy.abs() < 1e-12);
        assert!(r.ground_energy.abs() < 1e-10);
    }

    #[test]
    fn cap_is_enforced() {
        let h = LocalHamiltonian::from_terms(3, vec![term(1.0, "Z2")]).unwrap();
        assert!(matches!(
            ground_energy(&h, 2),
            Err(Error::TooManyQubits { qubits: 3, .. })
        ));
        assert!(energy_report(&h, 12).is_err());
    }
}
