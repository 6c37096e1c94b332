//! Pauli strings and decomposition of small Hermitian blocks into them.
//!
//! Qubit 0 is the least-significant bit of every basis index, here and in
//! the rest of the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest block handed to [`decompose_hermitian`].
pub const MAX_DECOMPOSE_QUBITS: usize = 6;
/// Largest register for the Kronecker-product [`to_matrix`].
pub const MAX_MATRIX_QUBITS: usize = 12;
/// Default magnitude below which decomposed coefficients are dropped.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::X => [[o, l], [l, o]],
            Axis::Y => [[o, -i], [i, o]],
            Axis::Z => [[l, o], [o, -l]],
        }
    }

    fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis, stored sparsely; absent qubits
/// carry the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    axes: BTreeMap<usize, Axis>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, axis: Axis) -> Self {
        Self::from_pairs([(qubit, axis)])
    }

    /// Later pairs overwrite earlier ones on the same qubit.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Axis)>) -> Self {
        PauliString {
            axes: pairs.into_iter().collect(),
        }
    }

    pub fn axis(&self, qubit: usize) -> Option<Axis> {
        self.axes.get(&qubit).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Axis)> + '_ {
        self.axes.iter().map(|(&q, &a)| (q, a))
    }

    pub fn locality(&self) -> usize {
        self.axes.len()
    }

    pub fn is_identity(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn has_y(&self) -> bool {
        self.axes.values().any(|&a| a == Axis::Y)
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.axes.keys().next_back().copied()
    }

    /// Relabels every qubit through `map`.
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Self {
        Self::from_pairs(self.iter().map(|(q, a)| (map(q), a)))
    }

    /// Bit-level action: `S|x> = phase(x) |x ^ flip_mask>`.
    pub fn action(&self) -> PauliAction {
        let mut flip = 0u64;
        let mut sign = 0u64;
        let mut ys = 0u32;
        for (q, a) in self.iter() {
            let bit = 1u64 << q;
            match a {
                Axis::X => flip |= bit,
                Axis::Z => sign |= bit,
                Axis::Y => {
                    flip |= bit;
                    sign |= bit;
                    ys += 1;
                }
            }
        }
        PauliAction {
            flip_mask: flip as usize,
            sign_mask: sign as usize,
            i_power: Complex64::new(0.0, 1.0).powu(ys),
        }
    }
}

/// Precomputed masks for applying a [`PauliString`] to basis states.
#[derive(Debug, Clone, Copy)]
pub struct PauliAction {
    pub flip_mask: usize,
    pub sign_mask: usize,
    i_power: Complex64,
}

impl PauliAction {
    /// Phase picked up by `|x>`; the image index is `x ^ flip_mask`.
    #[inline]
    pub fn phase(&self, x: usize) -> Complex64 {
        if (x & self.sign_mask).count_ones() % 2 == 1 {
            -self.i_power
        } else {
            self.i_power
        }
    }

    /// Real sign for Y-free strings.
    #[inline]
    pub fn sign(&self, x: usize) -> f64 {
        if (x & self.sign_mask).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Sorted support of the string; empty for the identity.
pub fn support(p: &PauliString) -> Vec<usize> {
    p.axes.keys().copied().collect()
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("I");
        }
        for (i, (q, a)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{}{}", a.letter(), q)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(Self::identity());
        }
        let mut axes = BTreeMap::new();
        for factor in s.split('*') {
            let bad = || Error::InvalidArgument(format!("malformed Pauli factor `{factor}`"));
            let mut chars = factor.chars();
            let axis = match chars.next() {
                Some('X') => Axis::X,
                Some('Y') => Axis::Y,
                Some('Z') => Axis::Z,
                _ => return Err(bad()),
            };
            let qubit: usize = chars.as_str().parse().map_err(|_| bad())?;
            if axes.insert(qubit, axis).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "qubit {qubit} repeated in `{s}`"
                )));
            }
        }
        Ok(PauliString { axes })
    }
}

/// A Pauli string with its real coefficient `d_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

impl WeightedTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Self {
        WeightedTerm {
            coefficient,
            string,
        }
    }
}

/// Dense `2^m x 2^m` matrix of `p` as a Kronecker product.
pub fn to_matrix(p: &PauliString, m: usize) -> Result<DMatrix<Complex64>> {
    if m > MAX_MATRIX_QUBITS {
        return Err(Error::TooManyQubits {
            what: "to_matrix",
            qubits: m,
            max: MAX_MATRIX_QUBITS,
        });
    }
    if let Some(q) = p.max_qubit().filter(|&q| q >= m) {
        return Err(Error::QubitOutOfRange {
            index: q,
            qubits: m,
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let mut acc = DMatrix::from_element(1, 1, one);
    // Highest qubit is the leftmost tensor factor.
    for q in (0..m).rev() {
        let factor = match p.axis(q) {
            None => DMatrix::identity(2, 2),
            Some(a) => {
                let e = a.matrix();
                DMatrix::from_row_slice(2, 2, &[e[0][0], e[0][1], e[1][0], e[1][1]])
            }
        };
        acc = acc.kronecker(&factor);
    }
    Ok(acc)
}

fn string_from_digits(mut digits: usize, k: usize) -> PauliString {
    let mut pairs = Vec::new();
    for q in 0..k {
        match digits & 3 {
            1 => pairs.push((q, Axis::X)),
            2 => pairs.push((q, Axis::Y)),
            3 => pairs.push((q, Axis::Z)),
            _ => {}
        }
        digits >>= 2;
    }
    PauliString::from_pairs(pairs)
}

/// Writes a Hermitian `2^k x 2^k` matrix as `sum_S d_S S` with
/// `d_S = Tr(M S) / 2^k`, dropping coefficients with `|d_S| < tol`.
/// Terms come back in canonical string order.
pub fn decompose_hermitian(
    matrix: &DMatrix<Complex64>,
    k: usize,
    tol: f64,
) -> Result<Vec<WeightedTerm>> {
    if k > MAX_DECOMPOSE_QUBITS {
        return Err(Error::TooManyQubits {
            what: "decompose_hermitian",
            qubits: k,
            max: MAX_DECOMPOSE_QUBITS,
        });
    }
    let dim = 1usize << k;
    if matrix.nrows() != dim || matrix.ncols() != dim {
        return Err(Error::InvalidArgument(format!(
            "expected a {dim}x{dim} matrix for {k} qubits, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let mut deviation: f64 = 0.0;
    for i in 0..dim {
        for j in 0..=i {
            deviation = deviation.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    if deviation > 1e-10 {
        return Err(Error::NonHermitian { deviation });
    }

    let scale = 1.0 / dim as f64;
    let mut terms = Vec::new();
    for digits in 0..(1usize << (2 * k)) {
        let string = string_from_digits(digits, k);
        let act = string.action();
        // S|y> = phase(y)|y ^ flip>, so Tr(S M) = sum_y phase(y) M[y, y ^ flip].
        let trace: Complex64 = (0..dim)
            .map(|y| act.phase(y) * matrix[(y, y ^ act.flip_mask)])
            .sum();
        let coefficient = (trace * scale).re;
        if coefficient.abs() >= tol {
            terms.push(WeightedTerm {
                coefficient,
                string,
            });
        }
    }
    terms.sort_by(|a, b| a.string.cmp(&b.string));
    Ok(terms)
}

/// `coefficient,string` CSV with shortest round-trip decimals.
pub fn terms_to_csv(terms: &[WeightedTerm]) -> String {
    let mut out = String::from("coefficient,string\n");
    for t in terms {
        out.push_str(&format!("{},{}\n", t.coefficient, t.string));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real_matrix(dim: usize, entries: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(dim, dim, &entries.iter().map(|&x| c(x)).collect::<Vec<_>>())
    }

    fn reconstruct(terms: &[WeightedTerm], k: usize) -> DMatrix<Complex64> {
        let dim = 1 << k;
        let mut acc = DMatrix::zeros(dim, dim);
        for t in terms {
            acc += to_matrix(&t.string, k).unwrap() * c(t.coefficient);
        }
        acc
    }

    fn lookup(terms: &[WeightedTerm], s: &str) -> f64 {
        let p: PauliString = s.parse().unwrap();
        terms
            .iter()
            .find(|t| t.string == p)
            .map(|t| t.coefficient)
            .unwrap_or(0.0)
    }

    #[test]
    fn hadamard_is_x_plus_z_over_root_two() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let terms =
            decompose_hermitian(&real_matrix(2, &[r, r, r, -r]), 1, DEFAULT_PRUNE_TOL).unwrap();
        assert_eq!(terms.len(), 2);
        assert!((lookup(&terms, "X0") - r).abs() < 1e-15);
        assert!((lookup(&terms, "Z0") - r).abs() < 1e-15);
    }

    #[test]
    fn cnot_decomposition() {
        let m = crate::circuit::GateKind::Cnot.matrix();
        let terms = decompose_hermitian(&real_matrix(4, &m), 2, DEFAULT_PRUNE_TOL).unwrap();
        assert_eq!(terms.len(), 4);
        // control is local qubit 0, target is local qubit 1
        assert!((lookup(&terms, "I") - 0.5).abs() < 1e-15);
        assert!((lookup(&terms, "Z0") - 0.5).abs() < 1e-15);
        assert!((lookup(&terms, "X1") - 0.5).abs() < 1e-15);
        assert!((lookup(&terms, "Z0*X1") + 0.5).abs() < 1e-15);
        let back = reconstruct(&terms, 2);
        assert!((back - real_matrix(4, &m)).norm() < 1e-14);
    }

    #[test]
    fn identity_decomposes_to_identity_string() {
        let terms = decompose_hermitian(&DMatrix::identity(4, 4), 2, DEFAULT_PRUNE_TOL).unwrap();
        assert_eq!(terms, vec![WeightedTerm::new(1.0, PauliString::identity())]);
    }

    #[test]
    fn rejects_non_hermitian_and_oversized() {
        let m = real_matrix(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            decompose_hermitian(&m, 1, 1e-12),
            Err(Error::NonHermitian { .. })
        ));
        let big = DMatrix::identity(128, 128);
        assert!(matches!(
            decompose_hermitian(&big, 7, 1e-12),
            Err(Error::TooManyQubits { .. })
        ));
    }

    #[test]
    fn to_matrix_ordering() {
        let z = to_matrix(&"Z0".parse().unwrap(), 1).unwrap();
        assert_eq!(z, real_matrix(2, &[1.0, 0.0, 0.0, -1.0]));
        let x = to_matrix(&"X0".parse().unwrap(), 2).unwrap();
        #[rustfmt::skip]
        let expect = real_matrix(4, &[
            0.0, 1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        assert_eq!(x, expect);
        assert!(to_matrix(&"X3".parse().unwrap(), 2).is_err());
        assert!(to_matrix(&PauliString::identity(), 13).is_err());
    }

    #[test]
    fn support_and_rendering() {
        let p: PauliString = "Z0*Z3".parse().unwrap();
        assert_eq!(support(&p), vec![0, 3]);
        assert_eq!(support(&PauliString::identity()), Vec::<usize>::new());
        assert_eq!(support(&"X1".parse().unwrap()), vec![1]);
        assert_eq!(p.to_string(), "Z0*Z3");
        assert_eq!(PauliString::identity().to_string(), "I");
        assert!("Q1".parse::<PauliString>().is_err());
        assert!("X1*Z1".parse::<PauliString>().is_err());
    }

    #[test]
    fn csv_export() {
        let terms = vec![
            WeightedTerm::new(1.0, PauliString::identity()),
            WeightedTerm::new(-0.1, "X0*Z3".parse().unwrap()),
        ];
        assert_eq!(
            terms_to_csv(&terms),
            "coefficient,string\n1,I\n-0.1,X0*Z3\n"
        );
    }

    #[test]
    fn gate_matrices_are_y_free() {
        for kind in crate::circuit::GateKind::ALL {
            let k = kind.arity();
            let terms =
                decompose_hermitian(&real_matrix(1 << k, &kind.matrix()), k, 1e-12).unwrap();
            assert!(terms.iter().all(|t| !t.string.has_y()), "{kind}");
        }
    }

    fn hermitian(k: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
        let dim = 1usize << k;
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
            let a = DMatrix::from_iterator(
                dim,
                dim,
                v.into_iter().map(|(re, im)| Complex64::new(re, im)),
            );
            (&a + a.adjoint()) * c(0.5)
        })
    }

    fn real_symmetric(k: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
        let dim = 1usize << k;
        prop::collection::vec(-1.0f64..1.0, dim * dim).prop_map(move |v| {
            let a = DMatrix::from_iterator(dim, dim, v.into_iter().map(c));
            (&a + a.transpose()) * c(0.5)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn decomposition_reconstructs(m in (1usize..=4).prop_flat_map(hermitian)) {
            let k = m.nrows().trailing_zeros() as usize;
            let terms = decompose_hermitian(&m, k, 0.0).unwrap();
            let back = reconstruct(&terms, k);
            let worst = (back - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(worst < 1e-10);
        }

        #[test]
        fn real_symmetric_inputs_have_even_y_parity(m in real_symmetric(3)) {
            // A string with an odd number of Y factors is imaginary, so it
            // cannot appear in a real matrix; Y0*Y1 and friends can.
            let terms = decompose_hermitian(&m, 3, 1e-12).unwrap();
            prop_assert!(terms.iter().all(|t| t.string.iter().filter(|(_, a)| *a == Axis::Y).count() % 2 == 0));
        }

        #[test]
        fn single_strings_square_to_identity(digits in 0usize..256) {
            let p = string_from_digits(digits, 4);
            let m = to_matrix(&p, 4).unwrap();
            let sq = &m * &m;
            prop_assert!((sq - DMatrix::<Complex64>::identity(16, 16)).norm() < 1e-12);
        }
    }
}
