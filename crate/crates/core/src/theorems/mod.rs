//! Population-preservation checks, the chain bound on dephasing rates and
//! its equality condition, and the GHZ special case.
//!
//! For basis states `p_0 … p_n`, the decay rates obey
//! `Γ(p_0, p_n) ≤ n · Σ_k Γ(p_{k−1}, p_k)`, with equality exactly when every
//! channel's eigenvalue step `λ(p_{k−1}) − λ(p_k)` is the same for all `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{pair_rates, Channel, DiagonalChannel, MasterEquation, RateTable};
use crate::register::{ghz_chain, BasisState, SpinFlipPath};
use crate::tensor::{ComplexMatrix, Tolerances, C64};

mod random;

pub use random::{
    verify_preservation_random, verify_theorem1_random, verify_theorem3_random, EigenvalueKind,
    OracleConfig, OracleSummary, PreservationConfig, PreservationSummary, Theorem3Config,
    Theorem3Summary,
};

/// Scale below which `rhs` no longer sets the tightness threshold.
pub const TIGHT_FLOOR: f64 = 1e-12;

/// Anything that can report `Γ_ij` over a basis of fixed dimension.
pub trait DecayRates {
    fn dim(&self) -> usize;
    fn decay(&self, i: usize, j: usize) -> f64;
}

impl DecayRates for RateTable {
    fn dim(&self) -> usize {
        RateTable::dim(self)
    }

    fn decay(&self, i: usize, j: usize) -> f64 {
        self.gamma(i, j)
    }
}

/// Rates computed on demand from diagonal channels, without building the
/// full table.
#[derive(Clone, Copy, Debug)]
pub struct ChannelRates<'a> {
    channels: &'a [DiagonalChannel],
    dim: usize,
}

impl<'a> ChannelRates<'a> {
    pub fn new(dim: usize, channels: &'a [DiagonalChannel]) -> Result<Self> {
        if let Some(c) = channels.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
        Ok(ChannelRates { channels, dim })
    }
}

impl DecayRates for ChannelRates<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn decay(&self, i: usize, j: usize) -> f64 {
        pair_rates(self.channels, i, j).0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorId {
    Hamiltonian,
    Channel(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralWitness {
    pub operator: OperatorId,
    pub i: usize,
    pub j: usize,
    pub magnitude: f64,
}

/// Initial state used to expose population leakage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// `ρ = |state⟩⟨state|`.
    BasisProjector,
    /// `ρ = |ψ⟩⟨ψ|`, `ψ = (|state⟩ + e^{iφ}|partner⟩)/√2`.
    Superposition { partner: usize, phase: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageWitness {
    /// Basis index whose population changes.
    pub state: usize,
    pub probe: Probe,
    /// `−(d/dt)ρ_ii` at the probe state.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub verdict: bool,
    pub structural_witness: Option<StructuralWitness>,
    pub leakage_witness: Option<LeakageWitness>,
}

/// Decides population preservation from operator structure: the evolution
/// preserves populations iff `H` and every `A_m` are diagonal. When the
/// answer is no, the report also carries a probe state whose population
/// visibly moves under the full right-hand side.
pub fn check_population_preserving(
    h: &ComplexMatrix,
    channels: &[Channel],
    tol: &Tolerances,
) -> Result<PreservationReport> {
    let eq = MasterEquation::new(h, channels)?;
    let dim = h.dim();

    let mut worst: Option<StructuralWitness> = None;
    for (m, c) in channels.iter().enumerate() {
        if let Some(w) = c.operator().is_diagonal(tol).witness {
            if worst.is_none_or(|b| w.magnitude > b.magnitude) {
                worst = Some(StructuralWitness {
                    operator: OperatorId::Channel(m),
                    i: w.i,
                    j: w.j,
                    magnitude: w.magnitude,
                });
            }
        }
    }

    if worst.is_some() {
        // Column j leaks at Σ_m γ_m Σ_{k≠j} |A_kj|² from the projector |j⟩⟨j|.
        let leak = |j: usize| -> f64 {
            channels
                .iter()
                .map(|c| {
                    let a = c.operator();
                    c.gamma() * (0..dim).filter(|&k| k != j).map(|k| a[(k, j)].norm_sqr()).sum::<f64>()
                })
                .sum()
        };
        let j = (0..dim)
            .max_by(|&a, &b| leak(a).total_cmp(&leak(b)).then(b.cmp(&a)))
            .unwrap_or(0);
        let probe = ComplexMatrix::matrix_unit(dim, j, j);
        let rate = -eq.rhs(&probe)?[(j, j)].re;
        return Ok(PreservationReport {
            verdict: false,
            structural_witness: worst,
            leakage_witness: Some(LeakageWitness {
                state: j,
                probe: Probe::BasisProjector,
                rate,
            }),
        });
    }

    if let Some(w) = h.is_diagonal(tol).witness {
        let (i, j) = (w.i, w.j);
        let mut best: Option<LeakageWitness> = None;
        for phase in [0.0, std::f64::consts::FRAC_PI_2] {
            let mut amps = vec![C64::from(0.0); dim];
            amps[i] = C64::from(std::f64::consts::FRAC_1_SQRT_2);
            amps[j] = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phase);
            let rho = ComplexMatrix::from_fn(dim, |a, b| amps[a] * amps[b].conj());
            let rate = -eq.rhs(&rho)?[(i, i)].re;
            if best.as_ref().is_none_or(|b| rate.abs() > b.rate.abs()) {
                best = Some(LeakageWitness {
                    state: i,
                    probe: Probe::Superposition { partner: j, phase },
                    rate,
                });
            }
        }
        return Ok(PreservationReport {
            verdict: false,
            structural_witness: Some(StructuralWitness {
                operator: OperatorId::Hamiltonian,
                i,
                j,
                magnitude: w.magnitude,
            }),
            leakage_witness: best,
        });
    }

    Ok(PreservationReport {
        verdict: true,
        structural_witness: None,
        leakage_witness: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `Γ(p_0, p_n)`.
    pub lhs: f64,
    /// `Γ(p_{k−1}, p_k)` for `k = 1..=n`.
    pub link_rates: Vec<f64>,
    pub n: usize,
    /// `n · Σ link_rates`.
    pub rhs: f64,
    pub tight: bool,
    /// `rhs − lhs`.
    pub margin: f64,
}

fn tight_threshold(rhs: f64, tol: &Tolerances) -> f64 {
    tol.rtol_rate * rhs.max(TIGHT_FLOOR)
}

/// Evaluates the chain bound along an arbitrary sequence of basis states.
/// A one-state sequence gives the trivial `0 ≤ 0`.
pub fn chain_bound<R: DecayRates + ?Sized>(
    rates: &R,
    path: &[BasisState],
    tol: &Tolerances,
) -> Result<BoundReport> {
    let idx = path_indices(rates.dim(), path)?;
    bound_from_indices(rates, &idx, tol)
}

fn path_indices(dim: usize, path: &[BasisState]) -> Result<Vec<usize>> {
    if path.is_empty() {
        return Err(Error::PathTooShort { min: 1 });
    }
    path.iter()
        .map(|s| {
            let index = s.index();
            if index >= dim || (1usize << s.n_qubits()) != dim {
                Err(Error::IndexOutOfRange { index, dim })
            } else {
                Ok(index)
            }
        })
        .collect()
}

pub(crate) fn bound_from_indices<R: DecayRates + ?Sized>(
    rates: &R,
    idx: &[usize],
    tol: &Tolerances,
) -> Result<BoundReport> {
    let n = idx.len() - 1;
    let lhs = rates.decay(idx[0], idx[n]);
    let link_rates: Vec<f64> = idx.windows(2).map(|w| rates.decay(w[0], w[1])).collect();
    let rhs = n as f64 * link_rates.iter().sum::<f64>() + 0.0;
    let margin = rhs - lhs;
    if margin < -tol.rtol_rate * rhs.max(TIGHT_FLOOR) {
        return Err(Error::BoundViolation { lhs, rhs });
    }
    Ok(BoundReport {
        lhs,
        link_rates,
        n,
        rhs,
        tight: margin <= tight_threshold(rhs, tol),
        margin,
    })
}

/// True iff, for every channel, the eigenvalue steps along the path are
/// all equal (within `atol_zero`).
pub fn equality_condition(channels: &[DiagonalChannel], path: &[BasisState], tol: &Tolerances) -> bool {
    let idx: Vec<usize> = path.iter().map(BasisState::index).collect();
    equality_from_indices(channels, &idx, tol)
}

pub(crate) fn equality_from_indices(channels: &[DiagonalChannel], idx: &[usize], tol: &Tolerances) -> bool {
    channels.iter().all(|c| {
        let lam = c.eigenvalues();
        let mut steps = idx.windows(2).map(|w| lam[w[0]] - lam[w[1]]);
        match steps.next() {
            None => true,
            Some(first) => steps.all(|s| (s - first).norm() <= tol.atol_zero),
        }
    })
}

/// Chain bound along the GHZ chain `|↓…↓⟩ → |↑…↑⟩`: the left side is the
/// GHZ coherence rate, the links are single-qubit rates.
pub fn ghz_bound<R: DecayRates + ?Sized>(rates: &R, n: usize, tol: &Tolerances) -> Result<BoundReport> {
    let chain = ghz_chain(n)?;
    if rates.dim() != 1 << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: rates.dim(),
        });
    }
    chain_bound(rates, chain.states(), tol)
}

/// Among all shortest spin-flip paths from `from` to `to`, the one with the
/// smallest bound. Implementation-defined convenience: the inequality holds
/// for every path, and this picks the sharpest shortest one.
pub fn best_hamming_bound<R: DecayRates + ?Sized>(
    rates: &R,
    from: &BasisState,
    to: &BasisState,
    tol: &Tolerances,
) -> Result<(SpinFlipPath, BoundReport)> {
    from.hamming_distance(to)?;
    path_indices(rates.dim(), &[from.clone(), to.clone()])?;
    let differing: Vec<usize> = (0..from.n_qubits())
        .filter(|&q| from.bits()[q] != to.bits()[q])
        .collect();
    let d = differing.len();
    let state_of = |mask: usize| -> BasisState {
        let mut s = from.clone();
        for (bit, &q) in differing.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                s = s.flip(q);
            }
        }
        s
    };
    let index_of: Vec<usize> = (0..1usize << d).map(|m| state_of(m).index()).collect();

    // Cheapest sum of link rates reaching each subset of flipped qubits.
    let mut cost = vec![f64::INFINITY; 1 << d];
    let mut prev = vec![usize::MAX; 1 << d];
    cost[0] = 0.0;
    for mask in 1..(1usize << d) {
        for bit in 0..d {
            if mask & (1 << bit) == 0 {
                continue;
            }
            let before = mask ^ (1 << bit);
            let c = cost[before] + rates.decay(index_of[before], index_of[mask]);
            if c < cost[mask] {
                cost[mask] = c;
                prev[mask] = before;
            }
        }
    }
    let mut masks = vec![(1usize << d) - 1];
    while let Some(&m) = masks.last() {
        if m == 0 {
            break;
        }
        masks.push(prev[m]);
    }
    masks.reverse();
    let path = SpinFlipPath::new(masks.into_iter().map(state_of).collect())?;
    let report = chain_bound(rates, path.states(), tol)?;
    Ok((path, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{analytic_rates, HamiltonianSpec};
    use crate::tensor::{ONE, ZERO};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn table(channels: &[DiagonalChannel]) -> RateTable {
        analytic_rates(&HamiltonianSpec::zero(channels[0].dim()), channels).unwrap()
    }

    fn collective() -> Vec<DiagonalChannel> {
        vec![DiagonalChannel::real(1.0, &[1.0, 0.0, 0.0, -1.0]).unwrap()]
    }

    fn split() -> Vec<DiagonalChannel> {
        vec![
            DiagonalChannel::real(1.0, &[1.0, 0.0, 0.0, 0.0]).unwrap(),
            DiagonalChannel::real(1.0, &[0.0, 0.0, 0.0, 1.0]).unwrap(),
        ]
    }

    #[test]
    fn diagonal_scenarios_preserve_populations() {
        let channels: Vec<Channel> = collective().iter().map(DiagonalChannel::to_channel).collect();
        let h = ComplexMatrix::from_real_diagonal(&[0.1, 0.2, -0.3, 0.0]);
        let report = check_population_preserving(&h, &channels, &tol()).unwrap();
        assert!(report.verdict);
        assert!(report.structural_witness.is_none() && report.leakage_witness.is_none());
    }

    #[test]
    fn spin_flip_operator_leaks_population() {
        let x = ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let c = Channel::new(1.0, x).unwrap();
        let report = check_population_preserving(&ComplexMatrix::zeros(2), &[c], &tol()).unwrap();
        assert!(!report.verdict);
        let s = report.structural_witness.unwrap();
        assert_eq!((s.operator, s.i, s.j), (OperatorId::Channel(0), 0, 1));
        let leak = report.leakage_witness.unwrap();
        assert_eq!(leak.state, 0);
        assert_eq!(leak.probe, Probe::BasisProjector);
        assert!((leak.rate - 1.0).abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_hamiltonian_moves_population() {
        let mut h = ComplexMatrix::zeros(2);
        h[(0, 1)] = C64::from(0.3);
        h[(1, 0)] = C64::from(0.3);
        let report = check_population_preserving(&h, &[], &tol()).unwrap();
        assert!(!report.verdict);
        assert_eq!(report.structural_witness.unwrap().operator, OperatorId::Hamiltonian);
        let leak = report.leakage_witness.unwrap();
        assert!((leak.rate.abs() - 0.3).abs() < 1e-15);
        match leak.probe {
            Probe::Superposition { partner, phase } => {
                assert_eq!(partner, 1);
                assert!((phase - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
            }
            other => panic!("unexpected probe {other:?}"),
        }
    }

    #[test]
    fn constant_eigenvalues_give_trivial_bound() {
        let c = vec![DiagonalChannel::real(0.8, &[0.5; 8]).unwrap()];
        let path: Vec<BasisState> = ["ddd", "udd", "uud", "uuu"].iter().map(|s| s.parse().unwrap()).collect();
        let r = chain_bound(&table(&c), &path, &tol()).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.tight);
        assert!(equality_condition(&c, &path, &tol()));
    }

    #[test]
    fn collective_operator_saturates_ghz_bound() {
        let c = collective();
        let r = ghz_bound(&table(&c), 2, &tol()).unwrap();
        assert_eq!(r.link_rates, vec![0.5, 0.5]);
        assert_eq!((r.lhs, r.rhs, r.n), (2.0, 2.0, 2));
        assert!(r.tight);
        assert!(equality_condition(&c, ghz_chain(2).unwrap().states(), &tol()));
    }

    #[test]
    fn split_operators_miss_ghz_bound() {
        let c = split();
        let r = ghz_bound(&table(&c), 2, &tol()).unwrap();
        assert_eq!(r.link_rates, vec![0.5, 0.5]);
        assert_eq!((r.lhs, r.rhs), (1.0, 2.0));
        assert!(!r.tight);
        assert_eq!(r.margin, r.rhs / 2.0);
        assert!(!equality_condition(&c, ghz_chain(2).unwrap().states(), &tol()));
    }

    #[test]
    fn single_step_paths_are_always_equal_and_tight() {
        let c = vec![DiagonalChannel::new(0.3, vec![C64::new(0.2, 0.9), C64::new(-0.4, 0.1)]).unwrap()];
        let path: Vec<BasisState> = vec!["u".parse().unwrap(), "d".parse().unwrap()];
        assert!(equality_condition(&c, &path, &tol()));
        let r = chain_bound(&ChannelRates::new(2, &c).unwrap(), &path, &tol()).unwrap();
        assert!(r.tight);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn chain_bound_rejects_foreign_states() {
        let c = collective();
        let path: Vec<BasisState> = vec!["ddd".parse().unwrap(), "udd".parse().unwrap()];
        assert!(chain_bound(&table(&c), &path, &tol()).is_err());
        assert!(chain_bound(&table(&c), &[], &tol()).is_err());
        assert!(ghz_bound(&table(&c), 3, &tol()).is_err());
    }

    #[test]
    fn bound_violation_is_an_error() {
        struct Broken;
        impl DecayRates for Broken {
            fn dim(&self) -> usize {
                4
            }
            fn decay(&self, i: usize, j: usize) -> f64 {
                if (i, j) == (3, 0) {
                    10.0
                } else {
                    0.1
                }
            }
        }
        assert!(matches!(
            ghz_bound(&Broken, 2, &tol()),
            Err(Error::BoundViolation { .. })
        ));
    }

    #[test]
    fn best_hamming_path_minimises_bound() {
        // Flipping qubit 2 first is cheaper than the ascending order.
        let c = vec![DiagonalChannel::real(1.0, &[5.0, 0.0, 1.0, 0.0]).unwrap()];
        let t = table(&c);
        let from: BasisState = "dd".parse().unwrap();
        let to: BasisState = "uu".parse().unwrap();
        let (path, best) = best_hamming_bound(&t, &from, &to, &tol()).unwrap();
        let ascending = chain_bound(&t, crate::register::hamming_path(&from, &to).unwrap().states(), &tol()).unwrap();
        assert!(best.rhs < ascending.rhs);
        assert_eq!(path.states()[1].to_string(), "du");
        assert_eq!(path.steps(), 2);
        for q in 0..2 {
            let mut order = vec![from.clone()];
            order.push(from.flip(q));
            order.push(to.clone());
            let r = chain_bound(&t, &order, &tol()).unwrap();
            assert!(best.rhs <= r.rhs);
        }

        let (same, r) = best_hamming_bound(&t, &from, &from, &tol()).unwrap();
        assert_eq!(same.steps(), 0);
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }
}
