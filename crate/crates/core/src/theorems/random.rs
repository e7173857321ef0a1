//! Randomized verification suites. Every trial draws from its own ChaCha
//! stream (`seed`, stream = trial index), so any failure reproduces from the
//! reported seed and trial alone, regardless of thread scheduling.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bound_from_indices, check_population_preserving, equality_from_indices, ChannelRates};
use crate::dynamics::{evolve_tracked, required_steps};
use crate::error::{Error, Result};
use crate::lindblad::{
    analytic_rates, dissipator_apply, dissipator_element_closed_form, Channel, DiagonalChannel,
    HamiltonianSpec,
};
use crate::register::{density_from_pure, StateVector, MAX_ANALYTIC_QUBITS, MAX_DYNAMICS_QUBITS};
use crate::tensor::{ComplexMatrix, Tolerances, C64, I};

/// Largest drift of any population allowed for diagonal scenarios.
pub const POPULATION_DRIFT_LIMIT: f64 = 1e-8;
/// Smallest off-diagonal magnitude injected into mutants.
pub const MUTANT_MIN_MAGNITUDE: f64 = 1e-3;

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Rate in `(0, 1]`.
fn draw_rate(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenvalueKind {
    /// Real and imaginary parts uniform in `[0, 1)`.
    Complex,
    /// Uniform in `[0, 1)`.
    Real,
}

fn draw_eigenvalue(rng: &mut ChaCha8Rng, kind: EigenvalueKind) -> C64 {
    match kind {
        EigenvalueKind::Complex => C64::new(rng.gen(), rng.gen()),
        EigenvalueKind::Real => C64::new(rng.gen(), 0.0),
    }
}

fn draw_channels(rng: &mut ChaCha8Rng, dim: usize, count: usize, kind: EigenvalueKind) -> Vec<DiagonalChannel> {
    (0..count)
        .map(|_| {
            let gamma = draw_rate(rng);
            let eig = (0..dim).map(|_| draw_eigenvalue(rng, kind)).collect();
            DiagonalChannel::new(gamma, eig).expect("rate drawn in (0, 1]")
        })
        .collect()
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

// ----------------------------------------------------------------------------
// Dissipator vs. closed form

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub instances: usize,
    pub max_qubits: usize,
    pub max_channels: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            instances: 1000,
            max_qubits: 4,
            max_channels: 4,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub instances: usize,
    pub elements: usize,
    pub max_relative_error: f64,
}

/// Relative error scaled by the size of the individual dissipator terms, so
/// that exact cancellations (diagonal elements, equal eigenvalues) compare
/// against rounding of the terms rather than against zero.
fn relative_error(a: C64, b: C64, scale: f64) -> f64 {
    let diff = (a - b).norm();
    if diff == 0.0 {
        return 0.0;
    }
    diff / b.norm().max(scale).max(f64::MIN_POSITIVE)
}

/// Random diagonal channels and a random complex matrix: the matrix-product
/// dissipator, the per-element closed form and `(iΔ − Γ)ρ_ij` from the rate
/// table must agree at every position.
pub fn verify_theorem1_random(config: &OracleConfig, tol: &Tolerances) -> Result<OracleSummary> {
    let max_qubits = config.max_qubits.clamp(1, MAX_DYNAMICS_QUBITS);
    let max_channels = config.max_channels.max(1);
    let outcomes: Vec<Result<(usize, f64)>> = (0..config.instances as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, trial);
            let n = rng.gen_range(1..=max_qubits);
            let dim = 1usize << n;
            let m = rng.gen_range(1..=max_channels);
            let channels = draw_channels(&mut rng, dim, m, EigenvalueKind::Complex);
            let rho = ComplexMatrix::from_fn(dim, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let full: Vec<Channel> = channels.iter().map(DiagonalChannel::to_channel).collect();
            let brute = dissipator_apply(&full, &rho)?;
            let table = analytic_rates(&HamiltonianSpec::zero(dim), &channels)?;

            let mut worst = 0.0_f64;
            for i in 0..dim {
                for j in 0..dim {
                    let rho_ij = rho[(i, j)];
                    let closed = dissipator_element_closed_form(&channels, i, j, rho_ij);
                    let from_rates = (I * table.delta(i, j) - table.gamma(i, j)) * rho_ij;
                    let scale = rho_ij.norm()
                        * channels
                            .iter()
                            .map(|c| {
                                let l = c.eigenvalues();
                                c.gamma() * (l[i].norm_sqr() + l[j].norm_sqr())
                            })
                            .sum::<f64>();
                    let err = relative_error(brute[(i, j)], closed, scale)
                        .max(relative_error(brute[(i, j)], from_rates, scale))
                        .max(relative_error(closed, from_rates, scale));
                    worst = worst.max(err);
                }
            }
            if worst > tol.rtol_rate {
                return Err(Error::TheoremViolation {
                    suite: "dissipator_closed_form",
                    seed: config.seed,
                    trial,
                    detail: format!("relative error {worst:e} on {n} qubits, {m} channels"),
                });
            }
            Ok((dim * dim, worst))
        })
        .collect();
    let per_instance = first_error(outcomes)?;
    Ok(OracleSummary {
        instances: per_instance.len(),
        elements: per_instance.iter().map(|p| p.0).sum(),
        max_relative_error: per_instance.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}

// ----------------------------------------------------------------------------
// Population preservation in both directions

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreservationConfig {
    /// Number of diagonal scenarios, and separately of mutants.
    pub scenarios: usize,
    pub max_qubits: usize,
    pub t_max: f64,
    pub seed: u64,
}

impl Default for PreservationConfig {
    fn default() -> Self {
        PreservationConfig {
            scenarios: 100,
            max_qubits: 3,
            t_max: 1.0,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreservationSummary {
    pub diagonal_scenarios: usize,
    pub max_population_drift: f64,
    pub mutants: usize,
    pub detected: usize,
    pub min_leakage_rate: Option<f64>,
}

struct RandomScenario {
    h: ComplexMatrix,
    channels: Vec<Channel>,
}

fn draw_scenario(rng: &mut ChaCha8Rng, dim: usize) -> RandomScenario {
    let energies: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m = rng.gen_range(1..=3);
    let channels = draw_channels(rng, dim, m, EigenvalueKind::Complex)
        .iter()
        .map(DiagonalChannel::to_channel)
        .collect();
    RandomScenario {
        h: ComplexMatrix::from_real_diagonal(&energies),
        channels,
    }
}

fn draw_pure_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let amps = (0..1usize << n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    StateVector::new(n, amps)
        .and_then(StateVector::normalized)
        .expect("random amplitudes are nonzero")
}

/// Forward direction: random diagonal scenarios integrated to `t_max` keep
/// every population fixed. Converse: a single injected off-diagonal entry
/// (in one channel or, Hermitian-symmetrised, in `H`) is always flagged with
/// a nonzero leakage witness.
pub fn verify_preservation_random(config: &PreservationConfig, tol: &Tolerances) -> Result<PreservationSummary> {
    let max_qubits = config.max_qubits.clamp(1, MAX_DYNAMICS_QUBITS);
    let forward: Vec<Result<f64>> = (0..config.scenarios as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, trial);
            let n = rng.gen_range(1..=max_qubits);
            let s = draw_scenario(&mut rng, 1 << n);
            let rho0 = density_from_pure(&draw_pure_state(&mut rng, n), tol)?;
            let steps = required_steps(&s.h, &s.channels, config.t_max);
            let traj = evolve_tracked(&s.h, &s.channels, &rho0, config.t_max, steps, &[])?;
            let drift = traj.max_population_drift();
            let verdict = check_population_preserving(&s.h, &s.channels, tol)?.verdict;
            if drift > POPULATION_DRIFT_LIMIT || !verdict {
                return Err(Error::TheoremViolation {
                    suite: "population_preservation",
                    seed: config.seed,
                    trial,
                    detail: format!("diagonal scenario: drift {drift:e}, verdict {verdict}"),
                });
            }
            Ok(drift)
        })
        .collect();
    let drifts = first_error(forward)?;

    // Mutants use streams after the forward scenarios.
    let offset = config.scenarios as u64;
    let converse: Vec<Result<f64>> = (0..config.scenarios as u64)
        .into_par_iter()
        .map(|k| {
            let trial = offset + k;
            let mut rng = trial_rng(config.seed, trial);
            let n = rng.gen_range(1..=max_qubits);
            let dim = 1usize << n;
            let mut s = draw_scenario(&mut rng, dim);
            let i = rng.gen_range(0..dim);
            let j = (i + rng.gen_range(1..dim)) % dim;
            let magnitude = rng.gen_range(MUTANT_MIN_MAGNITUDE..1.0);
            let entry = C64::from_polar(magnitude, rng.gen_range(0.0..std::f64::consts::TAU));
            let target = rng.gen_range(0..=s.channels.len());
            if target == s.channels.len() {
                s.h[(i, j)] += entry;
                s.h[(j, i)] += entry.conj();
            } else {
                let c = &s.channels[target];
                let mut a = c.operator().clone();
                a[(i, j)] += entry;
                s.channels[target] = Channel::new(c.gamma(), a)?;
            }
            let report = check_population_preserving(&s.h, &s.channels, tol)?;
            let rate = report.leakage_witness.map_or(0.0, |w| w.rate);
            if report.verdict || rate == 0.0 {
                return Err(Error::TheoremViolation {
                    suite: "population_preservation",
                    seed: config.seed,
                    trial,
                    detail: format!("mutant at ({i}, {j}) with |entry| {magnitude:e} not detected"),
                });
            }
            Ok(rate.abs())
        })
        .collect();
    let leaks = first_error(converse)?;

    Ok(PreservationSummary {
        diagonal_scenarios: drifts.len(),
        max_population_drift: drifts.iter().copied().fold(0.0, f64::max),
        mutants: leaks.len(),
        detected: leaks.len(),
        min_leakage_rate: leaks.iter().copied().reduce(f64::min),
    })
}

// ----------------------------------------------------------------------------
// Chain bound universality and tightness

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Config {
    pub n_qubits: usize,
    pub n_channels: usize,
    pub n_trials: usize,
    pub seed: u64,
    /// Longest chain drawn; each trial picks a length in `1..=max_chain`.
    pub max_chain: usize,
    pub eigenvalues: EigenvalueKind,
    /// Force every channel's eigenvalues along the path into an arithmetic
    /// progression, which must make every trial tight.
    pub inject_equal_steps: bool,
}

impl Theorem3Config {
    pub fn new(n_qubits: usize, n_channels: usize, n_trials: usize, seed: u64) -> Self {
        Theorem3Config {
            n_qubits,
            n_channels,
            n_trials,
            seed,
            max_chain: 10,
            eigenvalues: EigenvalueKind::Complex,
            inject_equal_steps: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Summary {
    pub trials: usize,
    pub violations: usize,
    pub tight: usize,
    pub equality_condition: usize,
    pub mismatches: usize,
    /// Smallest `margin / rhs` over trials with `rhs > 0`.
    pub min_relative_margin: Option<f64>,
}

struct TrialOutcome {
    tight: bool,
    relative_margin: Option<f64>,
}

fn draw_path(rng: &mut ChaCha8Rng, n_qubits: usize, len: usize, distinct: bool) -> Vec<usize> {
    let dim = 1usize << n_qubits;
    if distinct {
        return sample(rng, dim, len + 1).into_vec();
    }
    let mut path = vec![rng.gen_range(0..dim)];
    let spin_flips = rng.gen_bool(0.5);
    for _ in 0..len {
        let last = *path.last().unwrap();
        let next = if spin_flips {
            last ^ (1 << rng.gen_range(0..n_qubits))
        } else {
            rng.gen_range(0..dim)
        };
        path.push(next);
    }
    path
}

/// Random diagonal channels and random basis-state sequences: the chain
/// bound must hold on every trial, and `tight` must coincide with the
/// equality condition.
pub fn verify_theorem3_random(config: &Theorem3Config, tol: &Tolerances) -> Result<Theorem3Summary> {
    let n = config.n_qubits;
    if n == 0 || n > MAX_ANALYTIC_QUBITS {
        return Err(Error::QubitCount {
            n,
            max: MAX_ANALYTIC_QUBITS,
        });
    }
    let dim = 1usize << n;
    let n_channels = config.n_channels.max(1);
    let max_chain = config.max_chain.max(1);

    let outcomes: Vec<Result<TrialOutcome>> = (0..config.n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, trial);
            let mut len = rng.gen_range(1..=max_chain);
            if config.inject_equal_steps {
                len = len.min(dim - 1);
            }
            let path = draw_path(&mut rng, n, len, config.inject_equal_steps);
            let mut channels = draw_channels(&mut rng, dim, n_channels, config.eigenvalues);
            if config.inject_equal_steps {
                channels = channels
                    .into_iter()
                    .map(|c| {
                        let mut eig = c.eigenvalues().to_vec();
                        let start = draw_eigenvalue(&mut rng, config.eigenvalues);
                        let step = draw_eigenvalue(&mut rng, config.eigenvalues);
                        for (k, &p) in path.iter().enumerate() {
                            eig[p] = start + step * k as f64;
                        }
                        DiagonalChannel::new(c.gamma(), eig)
                    })
                    .collect::<Result<_>>()?;
            }

            let violation = |detail: String| Error::TheoremViolation {
                suite: "chain_bound",
                seed: config.seed,
                trial,
                detail,
            };
            let rates = ChannelRates::new(dim, &channels)?;
            let report = bound_from_indices(&rates, &path, tol).map_err(|e| violation(e.to_string()))?;
            let equal = equality_from_indices(&channels, &path, tol);
            if report.tight != equal || (config.inject_equal_steps && !report.tight) {
                return Err(violation(format!(
                    "tight = {} but equality condition = {equal} (margin {:e}, rhs {:e}, path {path:?})",
                    report.tight, report.margin, report.rhs
                )));
            }
            Ok(TrialOutcome {
                tight: report.tight,
                relative_margin: (report.rhs > 0.0).then(|| report.margin / report.rhs),
            })
        })
        .collect();
    let outcomes = first_error(outcomes)?;
    let tight = outcomes.iter().filter(|o| o.tight).count();
    Ok(Theorem3Summary {
        trials: outcomes.len(),
        violations: 0,
        tight,
        equality_condition: tight,
        mismatches: 0,
        min_relative_margin: outcomes.iter().filter_map(|o| o.relative_margin).reduce(f64::min),
    })
}
