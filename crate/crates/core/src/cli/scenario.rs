//! Scenario files: JSON descriptions of a register, its Hamiltonian and
//! channels, an initial state and the integration window.
//!
//! Complex numbers are `[re, im]` pairs. A minimal example:
//!
//! ```json
//! {
//!   "n_qubits": 2,
//!   "channels": [{ "gamma": 1.0, "operator": { "preset": { "name": "collective_updown" } } }],
//!   "initial_state": "phi_plus",
//!   "t_max": 2.0,
//!   "steps": 2000,
//!   "track": [["uu", "dd"]]
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::Channel;
use crate::presets::{build_preset, PresetName, PresetSpec};
use crate::register::{
    bell_state, check_qubits, density_from_pure, ghz_state, BasisState, BellState, DensityMatrix, StateVector,
    MAX_ANALYTIC_QUBITS,
};
use crate::tensor::{ComplexMatrix, Tolerances, C64};

pub type ComplexPair = [f64; 2];

fn to_c64(p: &ComplexPair) -> C64 {
    C64::new(p[0], p[1])
}

fn matrix_from_pairs(rows: &[Vec<ComplexPair>]) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(to_c64).collect()).collect();
    ComplexMatrix::from_rows(&rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianInput {
    /// Diagonal energies, one per basis state.
    Energies(Vec<f64>),
    /// Explicit Hermitian matrix, row-major.
    Matrix(Vec<Vec<ComplexPair>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorInput {
    /// Operator `index` of a named preset on this register.
    Preset {
        name: PresetName,
        #[serde(default)]
        index: usize,
    },
    Matrix(Vec<Vec<ComplexPair>>),
    /// Eigenvalues of a diagonal operator.
    Diagonal(Vec<ComplexPair>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelInput {
    pub gamma: f64,
    pub operator: OperatorInput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    /// `ghz`, a Bell state name (`psi_plus`, ...), or a product bitstring
    /// such as `"udd"`.
    Named(String),
    /// Explicit amplitudes; rescaled to unit norm.
    Amplitudes { amplitudes: Vec<ComplexPair> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n_qubits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianInput>,
    #[serde(default)]
    pub channels: Vec<ChannelInput>,
    pub initial_state: InitialState,
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default)]
    pub track: Vec<(BasisState, BasisState)>,
}

/// A validated scenario, ready for the commands.
#[derive(Clone, Debug)]
pub struct System {
    pub n_qubits: usize,
    pub hamiltonian: ComplexMatrix,
    pub channels: Vec<Channel>,
    pub rho0: DensityMatrix,
    pub t_max: f64,
    pub steps: Option<usize>,
    pub track: Vec<(BasisState, BasisState)>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Scenario whose channels are the operators of a preset, each with the
    /// rate the preset assigns it.
    pub fn from_preset(spec: &PresetSpec, initial_state: InitialState, t_max: f64) -> Result<Self> {
        let (h, channels) = build_preset(spec)?;
        let hamiltonian = spec.energies.as_ref().map(|_| HamiltonianInput::Energies(h.energies().to_vec()));
        Ok(Scenario {
            n_qubits: spec.n_qubits,
            hamiltonian,
            channels: channels
                .iter()
                .enumerate()
                .map(|(index, c)| ChannelInput {
                    gamma: c.gamma(),
                    operator: OperatorInput::Preset { name: spec.name, index },
                })
                .collect(),
            initial_state,
            t_max,
            steps: None,
            track: Vec::new(),
        })
    }

    pub fn build(&self, tol: &Tolerances) -> Result<System> {
        let n = self.n_qubits;
        check_qubits(n, MAX_ANALYTIC_QUBITS)?;
        let dim = 1usize << n;
        let check_dim = |found: usize| -> Result<()> {
            if found != dim {
                return Err(Error::DimensionMismatch { expected: dim, found });
            }
            Ok(())
        };

        let hamiltonian = match &self.hamiltonian {
            None => ComplexMatrix::zeros(dim),
            Some(HamiltonianInput::Energies(e)) => {
                check_dim(e.len())?;
                if e.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Scenario("energies must be finite".into()));
                }
                ComplexMatrix::from_real_diagonal(e)
            }
            Some(HamiltonianInput::Matrix(rows)) => {
                let m = matrix_from_pairs(rows)?;
                check_dim(m.dim())?;
                let deviation = m.hermiticity_error();
                if deviation > tol.atol_herm {
                    return Err(Error::NotHermitian { deviation });
                }
                m
            }
        };

        let channels = self
            .channels
            .iter()
            .map(|c| {
                let op = match &c.operator {
                    OperatorInput::Preset { name, index } => {
                        let spec = PresetSpec::new(*name, n, vec![1.0; name.rate_count(n)]);
                        let (_, ops) = build_preset(&spec)?;
                        ops.get(*index)
                            .ok_or_else(|| {
                                Error::Scenario(format!(
                                    "preset {name} has {} operator(s), index {index} requested",
                                    ops.len()
                                ))
                            })?
                            .operator()
                            .clone()
                    }
                    OperatorInput::Matrix(rows) => matrix_from_pairs(rows)?,
                    OperatorInput::Diagonal(eig) => {
                        ComplexMatrix::from_diagonal(&eig.iter().map(to_c64).collect::<Vec<_>>())
                    }
                };
                check_dim(op.dim())?;
                Channel::new(c.gamma, op)
            })
            .collect::<Result<Vec<_>>>()?;

        let psi = match &self.initial_state {
            InitialState::Named(name) => named_state(name, n)?,
            InitialState::Amplitudes { amplitudes } => {
                StateVector::new(n, amplitudes.iter().map(to_c64).collect())?.normalized()?
            }
        };
        let rho0 = density_from_pure(&psi, tol)?;

        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::BadDuration(self.t_max));
        }
        for (a, b) in &self.track {
            if a.n_qubits() != n || b.n_qubits() != n {
                return Err(Error::Scenario(format!("tracked pair ({a}, {b}) does not match {n} qubits")));
            }
        }

        Ok(System {
            n_qubits: n,
            hamiltonian,
            channels,
            rho0,
            t_max: self.t_max,
            steps: self.steps,
            track: self.track.clone(),
        })
    }
}

fn named_state(name: &str, n: usize) -> Result<StateVector> {
    let bell = BellState::ALL.into_iter().find(|b| b.name() == name);
    if let Some(b) = bell {
        if n != 2 {
            return Err(Error::Scenario(format!("{name} needs 2 qubits, scenario has {n}")));
        }
        return Ok(bell_state(b));
    }
    if name == "ghz" {
        return ghz_state(n);
    }
    let basis: BasisState = name
        .parse()
        .map_err(|_| Error::Scenario(format!("unknown initial state {name:?}")))?;
    if basis.n_qubits() != n {
        return Err(Error::Scenario(format!("initial state {name:?} does not match {n} qubits")));
    }
    Ok(StateVector::basis(&basis))
}
