//! Lindblad channels, the dissipator and master-equation right-hand side,
//! and closed-form dephasing rates for operators diagonal in the preferred
//! basis.
//!
//! Units: ħ = 1, so energies are angular frequencies and rates are 1/time.

use crate::error::{Error, Result};
use crate::tensor::{ComplexMatrix, Tolerances, C64, I, ZERO};

fn check_rate(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::NonPositiveRate(gamma));
    }
    Ok(())
}

/// A rate `γ` paired with a Lindblad operator `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    gamma: f64,
    operator: ComplexMatrix,
}

impl Channel {
    pub fn new(gamma: f64, operator: ComplexMatrix) -> Result<Self> {
        check_rate(gamma)?;
        Ok(Channel { gamma, operator })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn operator(&self) -> &ComplexMatrix {
        &self.operator
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Extracts the eigenvalues, provided the operator passes the
    /// diagonality check.
    pub fn to_diagonal(&self, tol: &Tolerances) -> Result<DiagonalChannel> {
        let check = self.operator.is_diagonal(tol);
        if let Some(w) = check.witness {
            return Err(Error::NotDiagonal {
                i: w.i,
                j: w.j,
                magnitude: w.magnitude,
            });
        }
        DiagonalChannel::new(self.gamma, self.operator.diagonal())
    }
}

/// Channel whose operator is diagonal in the preferred basis, stored as its
/// eigenvalue list.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalChannel {
    gamma: f64,
    eigenvalues: Vec<C64>,
}

impl DiagonalChannel {
    pub fn new(gamma: f64, eigenvalues: Vec<C64>) -> Result<Self> {
        check_rate(gamma)?;
        if eigenvalues.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(DiagonalChannel { gamma, eigenvalues })
    }

    pub fn real(gamma: f64, eigenvalues: &[f64]) -> Result<Self> {
        Self::new(gamma, eigenvalues.iter().map(|&x| C64::from(x)).collect())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn to_channel(&self) -> Channel {
        Channel {
            gamma: self.gamma,
            operator: ComplexMatrix::from_diagonal(&self.eigenvalues),
        }
    }
}

/// Diagonal Hamiltonian given by its energies (angular frequencies).
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    energies: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if let Some(&bad) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::Scenario(format!("energy {bad} is not finite")));
        }
        Ok(HamiltonianSpec { energies })
    }

    pub fn zero(dim: usize) -> Self {
        HamiltonianSpec {
            energies: vec![0.0; dim],
        }
    }

    /// Reads the energies off a diagonal Hermitian matrix.
    pub fn from_matrix(h: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if let Some(w) = h.is_diagonal(tol).witness {
            return Err(Error::NotDiagonal {
                i: w.i,
                j: w.j,
                magnitude: w.magnitude,
            });
        }
        let deviation = h.hermiticity_error();
        if deviation > tol.atol_herm {
            return Err(Error::NotHermitian { deviation });
        }
        HamiltonianSpec::new(h.diagonal().iter().map(|e| e.re).collect())
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&self.energies)
    }
}

/// Closed-form coherence rates over the preferred basis: decay `Γ_ij`,
/// dissipative shift `Δ_ij` and total rotation frequency `ω_ij`, so that
/// `dρ_ij/dt = (iω_ij − Γ_ij) ρ_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    dim: usize,
    gamma: Vec<f64>,
    delta: Vec<f64>,
    omega: Vec<f64>,
}

impl RateTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, i: usize, j: usize) {
        assert!(
            i < self.dim && j < self.dim,
            "rate index ({i}, {j}) out of range for dim {}",
            self.dim
        );
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.check(i, j);
        self.gamma[i * self.dim + j]
    }

    pub fn delta(&self, i: usize, j: usize) -> f64 {
        self.check(i, j);
        self.delta[i * self.dim + j]
    }

    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.check(i, j);
        self.omega[i * self.dim + j]
    }

    /// Row `i` of the selected table.
    pub fn gamma_row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.dim..(i + 1) * self.dim]
    }

    pub fn delta_row(&self, i: usize) -> &[f64] {
        &self.delta[i * self.dim..(i + 1) * self.dim]
    }

    pub fn omega_row(&self, i: usize) -> &[f64] {
        &self.omega[i * self.dim..(i + 1) * self.dim]
    }
}

fn check_channel_dims(dim: usize, channels: &[DiagonalChannel]) -> Result<()> {
    for c in channels {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
    }
    Ok(())
}

/// `(Γ_ij, Δ_ij)` for one pair of basis indices.
pub fn pair_rates(channels: &[DiagonalChannel], i: usize, j: usize) -> (f64, f64) {
    let mut gamma = 0.0;
    let mut delta = 0.0;
    for c in channels {
        let (li, lj) = (c.eigenvalues[i], c.eigenvalues[j]);
        gamma += 0.5 * c.gamma * (li - lj).norm_sqr();
        delta += c.gamma * (li * lj.conj()).im;
    }
    (gamma, delta)
}

pub fn analytic_rates(h: &HamiltonianSpec, channels: &[DiagonalChannel]) -> Result<RateTable> {
    let dim = h.dim();
    check_channel_dims(dim, channels)?;
    let mut gamma = vec![0.0; dim * dim];
    let mut delta = vec![0.0; dim * dim];
    let mut omega = vec![0.0; dim * dim];
    let e = h.energies();
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let (g, d) = pair_rates(channels, i, j);
            let k = i * dim + j;
            gamma[k] = g;
            delta[k] = d;
            omega[k] = (e[j] - e[i]) + d;
        }
    }
    Ok(RateTable {
        dim,
        gamma,
        delta,
        omega,
    })
}

/// `ρ_ij(t) = ρ_ij(0)·exp((iω_ij − Γ_ij) t)`.
pub fn coherence_closed_form(table: &RateTable, rho0_ij: C64, i: usize, j: usize, t: f64) -> C64 {
    let exponent = C64::new(-table.gamma(i, j), table.omega(i, j)) * t;
    rho0_ij * exponent.exp()
}

/// Dissipator acting on a single element when every operator is diagonal:
/// `Σ_m (γ_m/2)(2 λ_i λ_j* − |λ_i|² − |λ_j|²) ρ_ij`.
pub fn dissipator_element_closed_form(
    channels: &[DiagonalChannel],
    i: usize,
    j: usize,
    rho_ij: C64,
) -> C64 {
    let mut acc = ZERO;
    for c in channels {
        let (li, lj) = (c.eigenvalues[i], c.eigenvalues[j]);
        acc += 0.5 * c.gamma * (2.0 * li * lj.conj() - li.norm_sqr() - lj.norm_sqr());
    }
    acc * rho_ij
}

/// Hamiltonian and channels with the operator products the dissipator
/// needs precomputed. Used by the integrator, which evaluates the
/// right-hand side many times.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    hamiltonian: ComplexMatrix,
    terms: Vec<DissipatorTerm>,
}

#[derive(Clone, Debug)]
struct DissipatorTerm {
    gamma: f64,
    a: ComplexMatrix,
    a_dag: ComplexMatrix,
    a_dag_a: ComplexMatrix,
}

impl MasterEquation {
    pub fn new(hamiltonian: &ComplexMatrix, channels: &[Channel]) -> Result<Self> {
        let dim = hamiltonian.dim();
        Self::build(dim, Some(hamiltonian), channels)
    }

    pub fn dissipator_only(dim: usize, channels: &[Channel]) -> Result<Self> {
        Self::build(dim, None, channels)
    }

    fn build(dim: usize, h: Option<&ComplexMatrix>, channels: &[Channel]) -> Result<Self> {
        let terms = channels
            .iter()
            .map(|c| {
                if c.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: c.dim(),
                    });
                }
                let a_dag = c.operator.dagger();
                let a_dag_a = &a_dag * &c.operator;
                Ok(DissipatorTerm {
                    gamma: c.gamma,
                    a: c.operator.clone(),
                    a_dag,
                    a_dag_a,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MasterEquation {
            hamiltonian: h.cloned().unwrap_or_else(|| ComplexMatrix::zeros(dim)),
            terms,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    fn check(&self, rho: &ComplexMatrix) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        Ok(())
    }

    pub fn dissipator(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(rho)?;
        let mut out = ComplexMatrix::zeros(self.dim());
        for t in &self.terms {
            let jump = &(&t.a * rho) * &t.a_dag;
            let anti = &(&t.a_dag_a * rho) + &(rho * &t.a_dag_a);
            let term = &jump.scale(C64::from(2.0)) - &anti;
            out = &out + &term.scale(C64::from(0.5 * t.gamma));
        }
        Ok(out)
    }

    /// `−i[H, ρ] + 𝒟ρ`.
    pub fn rhs(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let unitary = self.hamiltonian.commutator(rho)?.scale(-I);
        let dissipative = self.dissipator(rho)?;
        Ok(&unitary + &dissipative)
    }
}

/// `𝒟ρ = Σ_m (γ_m/2)(2 A ρ A† − A†A ρ − ρ A†A)`, evaluated by matrix
/// products for arbitrary (not necessarily diagonal) operators.
pub fn dissipator_apply(channels: &[Channel], rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    MasterEquation::dissipator_only(rho.dim(), channels)?.dissipator(rho)
}

/// Full master-equation right-hand side with ħ = 1.
pub fn rhs(h: &ComplexMatrix, channels: &[Channel], rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    MasterEquation::new(h, channels)?.rhs(rho)
}
