use serde::{Deserialize, Serialize};

use super::scenario::System;
use crate::dynamics::{evolve_tracked, fit_decay_rate, fmt_sig, required_steps, FitResult, Trajectory, MAGNITUDE_FLOOR};
use crate::error::{Error, Result};
use crate::lindblad::{analytic_rates, DiagonalChannel, HamiltonianSpec, RateTable};
use crate::register::{ghz_chain, hamming_path, BasisState, MAX_DYNAMICS_QUBITS};
use crate::tensor::Tolerances;
use crate::theorems::{
    best_hamming_bound, chain_bound, check_population_preserving, equality_condition, verify_preservation_random,
    verify_theorem1_random, verify_theorem3_random, BoundReport, ChannelRates, OracleConfig, OracleSummary,
    PreservationConfig, PreservationReport, PreservationSummary, Theorem3Config, Theorem3Summary,
};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_VERIFY_QUBITS: usize = 4;

/// Diagonal parts of a scenario, or the refusal explaining why there are none.
pub fn diagonal_parts(system: &System, tol: &Tolerances) -> Result<(HamiltonianSpec, Vec<DiagonalChannel>)> {
    let report = check_population_preserving(&system.hamiltonian, &system.channels, tol)?;
    if !report.verdict {
        return Err(Error::NotPopulationPreserving(Box::new(report)));
    }
    let h = HamiltonianSpec::from_matrix(&system.hamiltonian, tol)?;
    let channels = system
        .channels
        .iter()
        .map(|c| c.to_diagonal(tol))
        .collect::<Result<Vec<_>>>()?;
    Ok((h, channels))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub i: BasisState,
    pub j: BasisState,
    pub gamma: f64,
    pub delta: f64,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTableJson {
    pub n_qubits: usize,
    pub entries: Vec<RateEntry>,
}

impl RateTableJson {
    pub fn from_table(n_qubits: usize, table: &RateTable) -> Result<Self> {
        let dim = table.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            let bi = BasisState::from_index(n_qubits, i)?;
            for j in 0..dim {
                entries.push(RateEntry {
                    i: bi.clone(),
                    j: BasisState::from_index(n_qubits, j)?,
                    gamma: table.gamma(i, j),
                    delta: table.delta(i, j),
                    omega: table.omega(i, j),
                });
            }
        }
        Ok(RateTableJson { n_qubits, entries })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,gamma,delta,omega\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{:?},{:?},{:?}\n",
                e.i,
                e.j,
                e.gamma + 0.0,
                e.delta + 0.0,
                e.omega + 0.0
            ));
        }
        out
    }

    pub fn get(&self, i: &BasisState, j: &BasisState) -> Option<&RateEntry> {
        let dim = 1usize << self.n_qubits;
        self.entries.get(i.index() * dim + j.index())
    }
}

pub fn cmd_rates(system: &System, tol: &Tolerances) -> Result<RateTableJson> {
    let (h, channels) = diagonal_parts(system, tol)?;
    let table = analytic_rates(&h, &channels)?;
    RateTableJson::from_table(system.n_qubits, &table)
}

/// Allowed disagreement between fitted and analytic rates:
/// `max(abs, rel · |analytic|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for FitTolerance {
    fn default() -> Self {
        FitTolerance { abs: 1e-3, rel: 1e-3 }
    }
}

impl FitTolerance {
    pub fn allows(&self, fitted: f64, analytic: f64) -> bool {
        (fitted - analytic).abs() <= self.abs.max(self.rel * analytic.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticComparison {
    pub gamma: f64,
    pub omega: f64,
    pub gamma_error: f64,
    pub omega_error: f64,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub i: BasisState,
    pub j: BasisState,
    pub fit: FitResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticComparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_table: Option<RateTableJson>,
    pub fits: Vec<FitEntry>,
    pub bounds: Vec<BoundReport>,
    pub preservation: PreservationReport,
    pub fit_tolerance: FitTolerance,
}

impl Report {
    /// Every fit with an analytic counterpart lies within `fit_tolerance`.
    pub fn is_consistent(&self) -> bool {
        self.fits.iter().all(|f| match (&f.analytic, &self.rate_table) {
            (Some(a), Some(t)) => {
                let entry = t.get(&f.i, &f.j);
                entry.is_some_and(|e| e.gamma == a.gamma && e.omega == a.omega)
                    && self.fit_tolerance.allows(f.fit.gamma_hat, a.gamma)
                    && self.fit_tolerance.allows(f.fit.omega_hat, a.omega)
            }
            (None, _) => true,
            (Some(_), None) => false,
        })
    }

    pub fn fits_csv(&self) -> String {
        let mut out = String::from("i,j,gamma_hat,omega_hat,residual,n_points");
        let analytic = self.fits.iter().any(|f| f.analytic.is_some());
        if analytic {
            out.push_str(",gamma_analytic,omega_analytic,gamma_error,omega_error,within_tolerance");
        }
        out.push('\n');
        for f in &self.fits {
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                f.i,
                f.j,
                fmt_sig(f.fit.gamma_hat),
                fmt_sig(f.fit.omega_hat),
                fmt_sig(f.fit.residual),
                f.fit.n_points
            ));
            if let Some(a) = &f.analytic {
                out.push_str(&format!(
                    ",{},{},{},{},{}",
                    fmt_sig(a.gamma),
                    fmt_sig(a.omega),
                    fmt_sig(a.gamma_error),
                    fmt_sig(a.omega_error),
                    a.within_tolerance
                ));
            } else if analytic {
                out.push_str(",,,,,");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct EvolveOutput {
    pub trajectory: Trajectory,
    pub tracked: Vec<(BasisState, BasisState)>,
    pub report: Report,
}

impl EvolveOutput {
    pub fn trajectory_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.trajectory.write_csv(&mut buf, &self.tracked)?;
        Ok(String::from_utf8(buf).expect("csv output is ascii"))
    }
}

/// Scenario track list, or every pair `i < j` with a visible initial coherence.
fn tracked_pairs(system: &System) -> Result<Vec<(BasisState, BasisState)>> {
    if !system.track.is_empty() {
        return Ok(system.track.clone());
    }
    let rho = system.rho0.matrix();
    let dim = rho.dim();
    let mut pairs = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            if rho[(i, j)].norm() > MAGNITUDE_FLOOR {
                pairs.push((
                    BasisState::from_index(system.n_qubits, i)?,
                    BasisState::from_index(system.n_qubits, j)?,
                ));
            }
        }
    }
    Ok(pairs)
}

pub fn cmd_evolve(system: &System, tol: &Tolerances) -> Result<EvolveOutput> {
    if system.n_qubits > MAX_DYNAMICS_QUBITS {
        return Err(Error::QubitCount {
            n: system.n_qubits,
            max: MAX_DYNAMICS_QUBITS,
        });
    }
    let preservation = check_population_preserving(&system.hamiltonian, &system.channels, tol)?;
    let steps = system
        .steps
        .unwrap_or_else(|| required_steps(&system.hamiltonian, &system.channels, system.t_max));
    let tracked = tracked_pairs(system)?;
    let idx: Vec<(usize, usize)> = tracked.iter().map(|(a, b)| (a.index(), b.index())).collect();
    let trajectory = evolve_tracked(
        &system.hamiltonian,
        &system.channels,
        &system.rho0,
        system.t_max,
        steps,
        &idx,
    )?;

    let fit_tolerance = FitTolerance::default();
    let (rate_table, bounds, diag) = if preservation.verdict {
        let (h, channels) = diagonal_parts(system, tol)?;
        let table = analytic_rates(&h, &channels)?;
        let mut bounds = Vec::new();
        for (a, b) in &tracked {
            let path = hamming_path(a, b)?;
            bounds.push(chain_bound(&table, path.states(), tol)?);
        }
        let json = RateTableJson::from_table(system.n_qubits, &table)?;
        (Some(json), bounds, Some(table))
    } else {
        (None, Vec::new(), None)
    };

    let fits = tracked
        .iter()
        .map(|(a, b)| {
            let fit = fit_decay_rate(&trajectory, a, b)?;
            let analytic = diag.as_ref().map(|t| {
                let (gamma, omega) = (t.gamma(a.index(), b.index()), t.omega(a.index(), b.index()));
                AnalyticComparison {
                    gamma,
                    omega,
                    gamma_error: fit.gamma_hat - gamma,
                    omega_error: fit.omega_hat - omega,
                    within_tolerance: fit_tolerance.allows(fit.gamma_hat, gamma)
                        && fit_tolerance.allows(fit.omega_hat, omega),
                }
            });
            Ok(FitEntry {
                i: a.clone(),
                j: b.clone(),
                fit,
                analytic,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EvolveOutput {
        trajectory,
        tracked,
        report: Report {
            rate_table,
            fits,
            bounds,
            preservation,
            fit_tolerance,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundTarget {
    Ghz,
    Pair(BasisState, BasisState),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPath {
    pub path: Vec<BasisState>,
    pub bound: BoundReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOutput {
    pub path: Vec<BasisState>,
    pub bound: BoundReport,
    pub equality_condition: bool,
    /// Sharpest bound over all shortest spin-flip paths between the same
    /// endpoints. Implementation-defined; not part of the inequality itself.
    pub implementation_defined_min_over_hamming_paths: BestPath,
}

pub fn cmd_bound(system: &System, target: &BoundTarget, tol: &Tolerances) -> Result<BoundOutput> {
    let (_, channels) = diagonal_parts(system, tol)?;
    let rates = ChannelRates::new(1 << system.n_qubits, &channels)?;
    let path = match target {
        BoundTarget::Ghz => ghz_chain(system.n_qubits)?,
        BoundTarget::Pair(a, b) => {
            for s in [a, b] {
                if s.n_qubits() != system.n_qubits {
                    return Err(Error::Scenario(format!(
                        "endpoint {s} does not match {} qubits",
                        system.n_qubits
                    )));
                }
            }
            hamming_path(a, b)?
        }
    };
    let bound = chain_bound(&rates, path.states(), tol)?;
    let equality = equality_condition(&channels, path.states(), tol);
    let states = path.states();
    let (best_path, best_bound) = best_hamming_bound(&rates, &states[0], &states[states.len() - 1], tol)?;
    Ok(BoundOutput {
        path: states.to_vec(),
        bound,
        equality_condition: equality,
        implementation_defined_min_over_hamming_paths: BestPath {
            path: best_path.states().to_vec(),
            bound: best_bound,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    pub n_qubits: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            n_qubits: DEFAULT_VERIFY_QUBITS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub options: VerifyOptions,
    pub dissipator_oracle: OracleSummary,
    pub population_preservation: PreservationSummary,
    pub chain_bound: Theorem3Summary,
    /// Same as `chain_bound` with eigenvalue steps forced equal along
    /// each path, so every trial must come out tight.
    pub chain_bound_equal_steps: Theorem3Summary,
}

/// Runs the three randomized suites. Any counterexample aborts with a
/// [`Error::TheoremViolation`] carrying the seed and trial to replay.
pub fn cmd_verify(options: &VerifyOptions, tol: &Tolerances) -> Result<VerifySummary> {
    let n = options.n_qubits;
    if n == 0 {
        return Err(Error::QubitCount {
            n,
            max: crate::register::MAX_ANALYTIC_QUBITS,
        });
    }
    let dissipator_oracle = verify_theorem1_random(
        &OracleConfig {
            instances: options.trials,
            max_qubits: n.min(MAX_DYNAMICS_QUBITS),
            max_channels: 4,
            seed: options.seed,
        },
        tol,
    )?;
    let population_preservation = verify_preservation_random(
        &PreservationConfig {
            scenarios: options.trials.min(100),
            max_qubits: n.min(3),
            t_max: 1.0,
            seed: options.seed,
        },
        tol,
    )?;
    let chain = verify_theorem3_random(&Theorem3Config::new(n, 3, options.trials, options.seed), tol)?;
    let mut equal = Theorem3Config::new(n, 3, options.trials, options.seed);
    equal.inject_equal_steps = true;
    let chain_equal = verify_theorem3_random(&equal, tol)?;
    Ok(VerifySummary {
        options: *options,
        dissipator_oracle,
        population_preservation,
        chain_bound: chain,
        chain_bound_equal_steps: chain_equal,
    })
}
