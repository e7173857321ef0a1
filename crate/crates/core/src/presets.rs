//! Named dephasing models.
//!
//! | name                  | qubits | rates | operators                                   |
//! |-----------------------|--------|-------|---------------------------------------------|
//! | `local_projectors`    | 2      | 2     | `|↑⟩⟨↑| ⊗ 𝟙`, `𝟙 ⊗ |↑⟩⟨↑|`                    |
//! | `collective_updown`   | 2      | 1     | `|↑↑⟩⟨↑↑| − |↓↓⟩⟨↓↓|`                        |
//! | `split_updown`        | 2      | 1     | `|↑↑⟩⟨↑↑|`, `|↓↓⟩⟨↓↓|` sharing one rate      |
//! | `local_dephasing_n`   | n      | n     | `|↑⟩⟨↑|` on qubit k, identity elsewhere     |
//! | `collective_linear_n` | n      | 1     | number of up spins                          |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{Channel, HamiltonianSpec};
use crate::register::{check_qubits, BasisState, MAX_ANALYTIC_QUBITS};
use crate::tensor::ComplexMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    LocalProjectors,
    CollectiveUpdown,
    SplitUpdown,
    LocalDephasingN,
    CollectiveLinearN,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::LocalProjectors,
        PresetName::CollectiveUpdown,
        PresetName::SplitUpdown,
        PresetName::LocalDephasingN,
        PresetName::CollectiveLinearN,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::LocalProjectors => "local_projectors",
            PresetName::CollectiveUpdown => "collective_updown",
            PresetName::SplitUpdown => "split_updown",
            PresetName::LocalDephasingN => "local_dephasing_n",
            PresetName::CollectiveLinearN => "collective_linear_n",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetName::LocalProjectors => "2 qubits, rates [g1, g2]: independent up-projectors on each qubit",
            PresetName::CollectiveUpdown => "2 qubits, rate [g]: one operator |uu><uu| - |dd><dd|",
            PresetName::SplitUpdown => "2 qubits, rate [g]: separate |uu><uu| and |dd><dd| with equal rates",
            PresetName::LocalDephasingN => "n qubits, n rates: up-projector on each qubit",
            PresetName::CollectiveLinearN => "n qubits, rate [g]: one operator counting up spins",
        }
    }

    /// Number of qubits the preset is fixed to, if any.
    pub fn fixed_qubits(self) -> Option<usize> {
        match self {
            PresetName::LocalProjectors | PresetName::CollectiveUpdown | PresetName::SplitUpdown => Some(2),
            PresetName::LocalDephasingN | PresetName::CollectiveLinearN => None,
        }
    }

    /// Number of rates expected for an `n`-qubit register.
    pub fn rate_count(self, n: usize) -> usize {
        match self {
            PresetName::LocalProjectors => 2,
            PresetName::CollectiveUpdown | PresetName::SplitUpdown | PresetName::CollectiveLinearN => 1,
            PresetName::LocalDephasingN => n,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetSpec {
    pub name: PresetName,
    pub n_qubits: usize,
    pub rates: Vec<f64>,
    /// Optional diagonal energies; the Hamiltonian is zero otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
}

impl PresetSpec {
    pub fn new(name: PresetName, n_qubits: usize, rates: Vec<f64>) -> Self {
        PresetSpec {
            name,
            n_qubits,
            rates,
            energies: None,
        }
    }
}

fn up_projector() -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[1.0, 0.0])
}

/// `|↑⟩⟨↑|` on `qubit` (0-based) of an `n`-qubit register.
fn local_projector(n: usize, qubit: usize) -> ComplexMatrix {
    (0..n)
        .map(|q| if q == qubit { up_projector() } else { ComplexMatrix::identity(2) })
        .reduce(|acc, m| acc.kron(&m))
        .expect("n >= 1")
}

fn real_diagonal_by_state(n: usize, f: impl Fn(&BasisState) -> f64) -> ComplexMatrix {
    let diag: Vec<f64> = (0..1usize << n)
        .map(|i| f(&BasisState::from_index(n, i).expect("index in range")))
        .collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

pub fn build_preset(spec: &PresetSpec) -> Result<(HamiltonianSpec, Vec<Channel>)> {
    let name = spec.name;
    let n = spec.n_qubits;
    if let Some(fixed) = name.fixed_qubits() {
        if n != fixed {
            return Err(Error::PresetArity {
                name: name.as_str(),
                expected: format!("{fixed} qubits"),
                found: format!("{n} qubits"),
            });
        }
    }
    check_qubits(n, MAX_ANALYTIC_QUBITS)?;
    let expected = name.rate_count(n);
    if spec.rates.len() != expected {
        return Err(Error::PresetArity {
            name: name.as_str(),
            expected: format!("{expected} rate(s)"),
            found: format!("{} rate(s)", spec.rates.len()),
        });
    }
    let r = &spec.rates;

    let channels = match name {
        PresetName::LocalProjectors | PresetName::LocalDephasingN => (0..n)
            .map(|k| Channel::new(r[k], local_projector(n, k)))
            .collect::<Result<Vec<_>>>()?,
        PresetName::CollectiveUpdown => {
            vec![Channel::new(r[0], ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, -1.0]))?]
        }
        PresetName::SplitUpdown => vec![
            Channel::new(r[0], ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]))?,
            Channel::new(r[0], ComplexMatrix::from_real_diagonal(&[0.0, 0.0, 0.0, 1.0]))?,
        ],
        PresetName::CollectiveLinearN => {
            vec![Channel::new(r[0], real_diagonal_by_state(n, |s| s.up_count() as f64))?]
        }
    };

    let dim = 1usize << n;
    let h = match &spec.energies {
        None => HamiltonianSpec::zero(dim),
        Some(e) if e.len() == dim => HamiltonianSpec::new(e.clone())?,
        Some(e) => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.len(),
            })
        }
    };
    Ok((h, channels))
}
