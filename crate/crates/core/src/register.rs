//! Qubit-register bookkeeping: computational basis states, named states and
//! spin-flip paths between basis states.
//!
//! Bit convention: `up ↦ 0`, `down ↦ 1`, qubit 1 is the most significant
//! digit of the basis index. Basis states print as strings over `u`/`d`
//! with qubit 1 leftmost, e.g. `"udd"`.

use std::fmt;
use std::str::FromStr;

use nalgebra::linalg::SymmetricEigen;

use crate::error::{Error, Result};
use crate::tensor::{ComplexMatrix, Tolerances, C64, ZERO};

/// Largest register handled by the analytic (rate-table) paths.
pub const MAX_ANALYTIC_QUBITS: usize = 10;
/// Largest register handled by numerical integration.
pub const MAX_DYNAMICS_QUBITS: usize = 6;

/// Eigenvalue slack for the positivity check on density matrices.
pub const POSITIVITY_SLACK: f64 = 1e-8;

pub(crate) fn check_qubits(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::QubitCount { n, max });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    fn bit(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    bits: Vec<Spin>,
}

impl BasisState {
    pub fn new(bits: Vec<Spin>) -> Result<Self> {
        check_qubits(bits.len(), MAX_ANALYTIC_QUBITS)?;
        Ok(BasisState { bits })
    }

    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        check_qubits(n, MAX_ANALYTIC_QUBITS)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let bits = (0..n)
            .map(|k| {
                if (index >> (n - 1 - k)) & 1 == 0 {
                    Spin::Up
                } else {
                    Spin::Down
                }
            })
            .collect();
        Ok(BasisState { bits })
    }

    pub fn uniform(n: usize, spin: Spin) -> Result<Self> {
        BasisState::new(vec![spin; n])
    }

    pub fn n_qubits(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[Spin] {
        &self.bits
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, s| (acc << 1) | s.bit())
    }

    pub fn up_count(&self) -> usize {
        self.bits.iter().filter(|&&s| s == Spin::Up).count()
    }

    /// Copy with the spin of `qubit` (0-based, leftmost = 0) flipped.
    pub fn flip(&self, qubit: usize) -> BasisState {
        let mut bits = self.bits.clone();
        bits[qubit] = bits[qubit].flipped();
        BasisState { bits }
    }

    pub fn hamming_distance(&self, other: &BasisState) -> Result<usize> {
        if self.n_qubits() != other.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                found: other.n_qubits(),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.bits {
            f.write_str(match s {
                Spin::Up => "u",
                Spin::Down => "d",
            })?;
        }
        Ok(())
    }
}

impl FromStr for BasisState {
    type Err = Error;

    /// Accepts `u`/`d` (or `↑`/`↓`); whitespace is ignored, so `"ud d"`
    /// parses as `"udd"`.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'u' | 'U' | '↑' => Ok(Spin::Up),
                'd' | 'D' | '↓' => Ok(Spin::Down),
                _ => Err(Error::BadBasisState(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() {
            return Err(Error::BadBasisState(s.to_string()));
        }
        BasisState::new(bits)
    }
}

impl serde::Serialize for BasisState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BasisState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pure state of an `n`-qubit register. Normalization is checked where it
/// matters (see [`density_from_pure`]), not at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(n: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n, MAX_ANALYTIC_QUBITS)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: amplitudes.len(),
            });
        }
        Ok(StateVector { n, amplitudes })
    }

    pub fn basis(state: &BasisState) -> Self {
        let mut amplitudes = vec![ZERO; 1 << state.n_qubits()];
        amplitudes[state.index()] = C64::from(1.0);
        StateVector {
            n: state.n_qubits(),
            amplitudes,
        }
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Unnormalized {
                norm_sqr: self.norm_sqr(),
            });
        }
        for a in &mut self.amplitudes {
            *a /= norm;
        }
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// `(|↑⟩^⊗n + |↓⟩^⊗n)/√2`.
pub fn ghz_state(n: usize) -> Result<StateVector> {
    check_qubits(n, MAX_ANALYTIC_QUBITS)?;
    let dim = 1usize << n;
    let mut amplitudes = vec![ZERO; dim];
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    amplitudes[0] = h;
    amplitudes[dim - 1] = h;
    StateVector::new(n, amplitudes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiPlus,
        BellState::PsiMinus,
        BellState::PhiPlus,
        BellState::PhiMinus,
    ];

    /// Basis indices `(i, j)` of the coherence element carrying the
    /// superposition: `(↑↓, ↓↑)` for ψ±, `(↑↑, ↓↓)` for φ±.
    pub fn coherence_indices(self) -> (usize, usize) {
        match self {
            BellState::PsiPlus | BellState::PsiMinus => (1, 2),
            BellState::PhiPlus | BellState::PhiMinus => (0, 3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellState::PsiPlus => "psi_plus",
            BellState::PsiMinus => "psi_minus",
            BellState::PhiPlus => "phi_plus",
            BellState::PhiMinus => "phi_minus",
        }
    }
}

pub fn bell_state(which: BellState) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (i, j) = which.coherence_indices();
    let sign = match which {
        BellState::PsiPlus | BellState::PhiPlus => 1.0,
        BellState::PsiMinus | BellState::PhiMinus => -1.0,
    };
    let mut amplitudes = vec![ZERO; 4];
    amplitudes[i] = C64::from(h);
    amplitudes[j] = C64::from(sign * h);
    StateVector { n: 2, amplitudes }
}

/// Sequence of basis states in which consecutive entries differ by exactly
/// one spin flip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinFlipPath {
    states: Vec<BasisState>,
}

impl SpinFlipPath {
    pub fn new(states: Vec<BasisState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::PathTooShort { min: 1 });
        }
        for w in states.windows(2) {
            if w[0].hamming_distance(&w[1])? != 1 {
                return Err(Error::NotAdjacent {
                    from: w[0].to_string(),
                    to: w[1].to_string(),
                });
            }
        }
        Ok(SpinFlipPath { states })
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    /// Number of spin flips, i.e. one less than the number of states.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn indices(&self) -> Vec<usize> {
        self.states.iter().map(BasisState::index).collect()
    }
}

/// `p_k = |↑⟩^⊗k ⊗ |↓⟩^⊗(n−k)` for `k = 0..=n`.
pub fn ghz_chain(n: usize) -> Result<SpinFlipPath> {
    check_qubits(n, MAX_ANALYTIC_QUBITS)?;
    let states = (0..=n)
        .map(|k| {
            let bits = (0..n)
                .map(|q| if q < k { Spin::Up } else { Spin::Down })
                .collect();
            BasisState { bits }
        })
        .collect();
    Ok(SpinFlipPath { states })
}

/// Shortest path from `from` to `to`, flipping the differing qubits in
/// ascending order.
pub fn hamming_path(from: &BasisState, to: &BasisState) -> Result<SpinFlipPath> {
    from.hamming_distance(to)?;
    let mut states = vec![from.clone()];
    let mut current = from.clone();
    for q in 0..from.n_qubits() {
        if current.bits[q] != to.bits[q] {
            current = current.flip(q);
            states.push(current.clone());
        }
    }
    Ok(SpinFlipPath { states })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking dimension, Hermiticity and unit trace.
    pub fn from_matrix(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let dim = matrix.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch {
                expected: dim.next_power_of_two().max(2),
                found: dim,
            });
        }
        let n = dim.trailing_zeros() as usize;
        check_qubits(n, MAX_ANALYTIC_QUBITS)?;
        let deviation = matrix.hermiticity_error();
        if deviation > tol.atol_herm {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = matrix.trace();
        if (trace - C64::from(1.0)).norm() > tol.rtol_rate {
            return Err(Error::BadTrace { trace: trace.re });
        }
        Ok(DensityMatrix { n, matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = self.matrix.hermitian_part().into_inner();
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Full physical validation, including positivity.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        DensityMatrix::from_matrix(self.matrix.clone(), tol)?;
        let eigenvalue = self.min_eigenvalue();
        if eigenvalue < -POSITIVITY_SLACK {
            return Err(Error::NotPositive { eigenvalue });
        }
        Ok(())
    }
}

/// `|ψ⟩⟨ψ|`; rejects input whose norm deviates from 1 beyond `rtol_rate`.
pub fn density_from_pure(psi: &StateVector, tol: &Tolerances) -> Result<DensityMatrix> {
    let norm_sqr = psi.norm_sqr();
    if (norm_sqr - 1.0).abs() > tol.rtol_rate {
        return Err(Error::Unnormalized { norm_sqr });
    }
    let a = &psi.amplitudes;
    let matrix = ComplexMatrix::from_fn(a.len(), |i, j| a[i] * a[j].conj());
    Ok(DensityMatrix { n: psi.n, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn s(text: &str) -> BasisState {
        text.parse().unwrap()
    }

    fn real(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::from(x)).collect()
    }

    #[test]
    fn index_and_bits_are_inverse_up_to_ten_qubits() {
        for n in 1..=MAX_ANALYTIC_QUBITS {
            for idx in 0..(1usize << n) {
                let b = BasisState::from_index(n, idx).unwrap();
                assert_eq!(b.index(), idx);
                assert_eq!(b.to_string().parse::<BasisState>().unwrap(), b);
            }
        }
    }

    #[test]
    fn index_convention() {
        assert_eq!(s("uu").index(), 0);
        assert_eq!(s("ud").index(), 1);
        assert_eq!(s("du").index(), 2);
        assert_eq!(s("udd").index(), 3);
        assert_eq!(s("ud d").to_string(), "udd");
        assert!("uxd".parse::<BasisState>().is_err());
        assert!("".parse::<BasisState>().is_err());
        assert!(BasisState::from_index(2, 4).is_err());
        assert!(BasisState::from_index(0, 0).is_err());
        assert!(BasisState::from_index(11, 0).is_err());
    }

    #[test]
    fn ghz_states() {
        assert_eq!(ghz_state(2).unwrap().amplitudes(), real(&[H, 0.0, 0.0, H]).as_slice());
        assert_eq!(ghz_state(2).unwrap(), bell_state(BellState::PhiPlus));
        assert_eq!(ghz_state(1).unwrap().amplitudes(), real(&[H, H]).as_slice());
        let g3 = ghz_state(3).unwrap();
        let nonzero: Vec<usize> = (0..8).filter(|&k| g3.amplitudes()[k] != ZERO).collect();
        assert_eq!(nonzero, vec![0, 7]);
        assert!(ghz_state(0).is_err());
    }

    #[test]
    fn bell_states() {
        assert_eq!(bell_state(BellState::PhiPlus).amplitudes(), real(&[H, 0.0, 0.0, H]).as_slice());
        assert_eq!(bell_state(BellState::PsiMinus).amplitudes(), real(&[0.0, H, -H, 0.0]).as_slice());
        let overlap = bell_state(BellState::PsiPlus)
            .inner(&bell_state(BellState::PsiMinus))
            .unwrap();
        assert!(overlap.norm() < 1e-15);
        for b in BellState::ALL {
            assert!((bell_state(b).norm_sqr() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ghz_chain_indices() {
        assert_eq!(ghz_chain(2).unwrap().indices(), vec![3, 1, 0]);
        assert_eq!(
            ghz_chain(1).unwrap().states(),
            &[s("d"), s("u")]
        );
        assert_eq!(ghz_chain(3).unwrap().indices(), vec![7, 3, 1, 0]);
        for n in 1..=MAX_ANALYTIC_QUBITS {
            let chain = ghz_chain(n).unwrap();
            assert_eq!(chain.steps(), n);
            assert!(SpinFlipPath::new(chain.states().to_vec()).is_ok());
        }
    }

    #[test]
    fn hamming_paths() {
        let p = hamming_path(&s("udu"), &s("ddd")).unwrap();
        assert_eq!(p.states(), &[s("udu"), s("ddu"), s("ddd")]);

        let same = hamming_path(&s("ud"), &s("ud")).unwrap();
        assert_eq!(same.states(), &[s("ud")]);
        assert_eq!(same.steps(), 0);

        assert_eq!(hamming_path(&s("dd"), &s("uu")).unwrap(), ghz_chain(2).unwrap());
        assert!(hamming_path(&s("ud"), &s("udd")).is_err());
    }

    #[test]
    fn spin_flip_path_rejects_jumps() {
        assert!(matches!(
            SpinFlipPath::new(vec![s("uu"), s("dd")]),
            Err(Error::NotAdjacent { .. })
        ));
        assert!(SpinFlipPath::new(vec![]).is_err());
    }

    #[test]
    fn pure_density_matrices() {
        let tol = Tolerances::default();
        let up = density_from_pure(&StateVector::basis(&s("u")), &tol).unwrap();
        assert_eq!(up.matrix(), &ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));

        let rho = density_from_pure(&bell_state(BellState::PhiPlus), &tol).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if [0, 3].contains(&i) && [0, 3].contains(&j) { 0.5 } else { 0.0 };
                assert!((rho.matrix()[(i, j)] - C64::from(expected)).norm() < 1e-15);
            }
        }
        assert!((rho.matrix().trace() - C64::from(1.0)).norm() < 1e-15);
        rho.validate(&tol).unwrap();

        let bad = StateVector::new(1, real(&[1.0, 1.0])).unwrap();
        assert!(matches!(density_from_pure(&bad, &tol), Err(Error::Unnormalized { .. })));
        assert!(density_from_pure(&bad.normalized().unwrap(), &tol).is_ok());
    }

    #[test]
    fn density_validation_catches_negative_eigenvalues() {
        let tol = Tolerances::default();
        let m = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        let rho = DensityMatrix::from_matrix(m, &tol).unwrap();
        assert!(matches!(rho.validate(&tol), Err(Error::NotPositive { .. })));
        assert!(DensityMatrix::from_matrix(ComplexMatrix::identity(2), &tol).is_err());
        assert!(DensityMatrix::from_matrix(ComplexMatrix::identity(3).scale(C64::from(1.0 / 3.0)), &tol).is_err());
    }
}
