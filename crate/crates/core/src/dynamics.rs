//! Fixed-step RK4 integration of the master equation and least-squares
//! extraction of decay rates and frequencies from coherence traces.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::lindblad::{Channel, MasterEquation};
use crate::register::{BasisState, DensityMatrix, MAX_DYNAMICS_QUBITS};
use crate::tensor::{ComplexMatrix, C64};

/// Largest allowed `h_t · max(‖H‖_F, Σ γ‖A‖_F²)`.
pub const STEP_SAFETY: f64 = 0.05;
/// Coherence magnitudes at or below this are excluded from fits.
pub const MAGNITUDE_FLOOR: f64 = 1e-8;
pub const TRACE_TOLERANCE: f64 = 1e-6;
pub const HERMITICITY_TOLERANCE: f64 = 1e-8;

/// `max(‖H‖_F, Σ_m γ_m ‖A_m‖_F²)`, the rate scale that bounds the step.
pub fn stiffness(h: &ComplexMatrix, channels: &[Channel]) -> f64 {
    let dissipative: f64 = channels
        .iter()
        .map(|c| c.gamma() * c.operator().frobenius_norm().powi(2))
        .sum();
    h.frobenius_norm().max(dissipative)
}

/// Largest stable step, or `None` when the generator vanishes.
pub fn max_step(h: &ComplexMatrix, channels: &[Channel]) -> Option<f64> {
    let scale = stiffness(h, channels);
    (scale > 0.0).then(|| STEP_SAFETY / scale)
}

/// Smallest step count that honours the stability bound (at least 1).
pub fn required_steps(h: &ComplexMatrix, channels: &[Channel], t_max: f64) -> usize {
    match max_step(h, channels) {
        Some(hmax) => ((t_max / hmax) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
        None => 1,
    }
}

#[derive(Clone, Debug)]
enum Samples {
    Full(Vec<ComplexMatrix>),
    Tracked {
        pairs: Vec<(usize, usize)>,
        /// `values[p][k]` is element `pairs[p]` at `times[k]`.
        values: Vec<Vec<C64>>,
    },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    samples: Samples,
    population_drift: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Full snapshots, if the trajectory recorded them.
    pub fn snapshots(&self) -> Option<&[ComplexMatrix]> {
        match &self.samples {
            Samples::Full(s) => Some(s),
            Samples::Tracked { .. } => None,
        }
    }

    /// Largest `|ρ_ii(t) − ρ_ii(0)|` seen over the whole run.
    pub fn max_population_drift(&self) -> f64 {
        self.population_drift
    }

    /// Time series of element `(i, j)`.
    pub fn coherence(&self, i: usize, j: usize) -> Result<Vec<C64>> {
        match &self.samples {
            Samples::Full(s) if i < self.dim && j < self.dim => Ok(s.iter().map(|m| m[(i, j)]).collect()),
            Samples::Full(_) => Err(Error::NotTracked { i, j }),
            Samples::Tracked { pairs, values } => {
                if let Some(p) = pairs.iter().position(|&q| q == (i, j)) {
                    Ok(values[p].clone())
                } else if let Some(p) = pairs.iter().position(|&q| q == (j, i)) {
                    Ok(values[p].iter().map(|z| z.conj()).collect())
                } else {
                    Err(Error::NotTracked { i, j })
                }
            }
        }
    }

    /// Writes `t, re(rho_ij), im(rho_ij), abs(rho_ij), ...` with 12
    /// significant digits, one row per time sample.
    pub fn write_csv<W: Write>(&self, out: &mut W, pairs: &[(BasisState, BasisState)]) -> Result<()> {
        let mut series = Vec::with_capacity(pairs.len());
        let mut header = String::from("t");
        for (a, b) in pairs {
            series.push(self.coherence(a.index(), b.index())?);
            let label = format!("rho_{a}_{b}");
            header.push_str(&format!(",re({label}),im({label}),abs({label})"));
        }
        writeln!(out, "{header}")?;
        for (k, t) in self.times.iter().enumerate() {
            let mut line = fmt_sig(*t);
            for s in &series {
                let z = s[k];
                line.push(',');
                line.push_str(&fmt_sig(z.re));
                line.push(',');
                line.push_str(&fmt_sig(z.im));
                line.push(',');
                line.push_str(&fmt_sig(z.norm()));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// 12 significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    // `+ 0.0` folds -0.0 into 0.0
    format!("{:.11e}", x + 0.0)
}

fn validate_run(h: &ComplexMatrix, channels: &[Channel], rho0: &DensityMatrix, t_max: f64, steps: usize) -> Result<()> {
    let n = rho0.n_qubits();
    if n > MAX_DYNAMICS_QUBITS {
        return Err(Error::QubitCount {
            n,
            max: MAX_DYNAMICS_QUBITS,
        });
    }
    if h.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            found: h.dim(),
        });
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::BadDuration(t_max));
    }
    if steps == 0 {
        return Err(Error::StepTooLarge {
            step: f64::INFINITY,
            max_step: max_step(h, channels).unwrap_or(f64::INFINITY),
            required_steps: required_steps(h, channels, t_max),
        });
    }
    let step = t_max / steps as f64;
    if let Some(hmax) = max_step(h, channels) {
        if step > hmax * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge {
                step,
                max_step: hmax,
                required_steps: required_steps(h, channels, t_max),
            });
        }
    }
    Ok(())
}

fn integrate(
    h: &ComplexMatrix,
    channels: &[Channel],
    rho0: &DensityMatrix,
    t_max: f64,
    steps: usize,
    mut record: impl FnMut(f64, &ComplexMatrix),
) -> Result<f64> {
    validate_run(h, channels, rho0, t_max, steps)?;
    let eq = MasterEquation::new(h, channels)?;
    let dt = t_max / steps as f64;
    let half = C64::from(dt / 2.0);
    let full = C64::from(dt);
    let sixth = C64::from(dt / 6.0);
    let two = C64::from(2.0);

    let populations0 = rho0.matrix().diagonal();
    let mut rho = rho0.matrix().clone();
    let mut drift = 0.0_f64;
    record(0.0, &rho);

    for step in 1..=steps {
        let k1 = eq.rhs(&rho)?;
        let k2 = eq.rhs(&(&rho + &k1.scale(half)))?;
        let k3 = eq.rhs(&(&rho + &k2.scale(half)))?;
        let k4 = eq.rhs(&(&rho + &k3.scale(full)))?;
        let incr = &(&(&k1 + &k2.scale(two)) + &k3.scale(two)) + &k4;
        let next = &rho + &incr.scale(sixth);
        let t = step as f64 * dt;

        if !next.is_finite() {
            return Err(Error::InvariantBreach {
                time: t,
                what: "non-finite density matrix".into(),
            });
        }
        let herm = next.hermiticity_error();
        if herm > HERMITICITY_TOLERANCE {
            return Err(Error::InvariantBreach {
                time: t,
                what: format!("Hermiticity error {herm:e}"),
            });
        }
        rho = next.hermitian_part();
        let trace = rho.trace();
        if (trace - C64::from(1.0)).norm() > TRACE_TOLERANCE {
            return Err(Error::InvariantBreach {
                time: t,
                what: format!("trace {trace}"),
            });
        }
        for (i, p0) in populations0.iter().enumerate() {
            drift = drift.max((rho[(i, i)] - p0).norm());
        }
        record(t, &rho);
    }
    Ok(drift)
}

/// Integrates from `rho0` to `t_max` in `steps` equal RK4 steps, keeping
/// every snapshot.
pub fn evolve(
    h: &ComplexMatrix,
    channels: &[Channel],
    rho0: &DensityMatrix,
    t_max: f64,
    steps: usize,
) -> Result<Trajectory> {
    let mut times = Vec::with_capacity(steps + 1);
    let mut snaps = Vec::with_capacity(steps + 1);
    let drift = integrate(h, channels, rho0, t_max, steps, |t, rho| {
        times.push(t);
        snaps.push(rho.clone());
    })?;
    Ok(Trajectory {
        dim: rho0.dim(),
        times,
        samples: Samples::Full(snaps),
        population_drift: drift,
    })
}

/// Same integration as [`evolve`], recording only the listed elements.
pub fn evolve_tracked(
    h: &ComplexMatrix,
    channels: &[Channel],
    rho0: &DensityMatrix,
    t_max: f64,
    steps: usize,
    pairs: &[(usize, usize)],
) -> Result<Trajectory> {
    let dim = rho0.dim();
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= dim || j >= dim) {
        return Err(Error::IndexOutOfRange { index: i.max(j), dim });
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = vec![Vec::with_capacity(steps + 1); pairs.len()];
    let drift = integrate(h, channels, rho0, t_max, steps, |t, rho| {
        times.push(t);
        for (v, &(i, j)) in values.iter_mut().zip(pairs) {
            v.push(rho[(i, j)]);
        }
    })?;
    Ok(Trajectory {
        dim,
        times,
        samples: Samples::Tracked {
            pairs: pairs.to_vec(),
            values,
        },
        population_drift: drift,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitResult {
    pub gamma_hat: f64,
    pub omega_hat: f64,
    /// RMS residual of the log-magnitude fit.
    pub residual: f64,
    pub n_points: usize,
}

/// Ordinary least squares `y ≈ a + b·x`; returns `(a, b)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Continues each phase to the nearest multiple of 2π of its predecessor.
fn unwrap_phases(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (k, &p) in raw.iter().enumerate() {
        if k > 0 {
            let prev = raw[k - 1] + offset;
            offset += -2.0 * PI * (((p + offset) - prev) / (2.0 * PI)).round();
        }
        out.push(p + offset);
    }
    out
}

/// Fits `ρ(t) ≈ ρ(0)·exp((iω − Γ)t)` to a sampled coherence.
/// `Γ̂` comes from a log-magnitude line, `ω̂` from the unwrapped phase.
pub fn fit_coherence(times: &[f64], values: &[C64]) -> Result<FitResult> {
    fit_series(times, values, 0, 0)
}

fn fit_series(times: &[f64], values: &[C64], i: usize, j: usize) -> Result<FitResult> {
    let first = values.first().map_or(0.0, |z| z.norm());
    if first <= MAGNITUDE_FLOOR {
        return Err(Error::NoSignal { i, j, magnitude: first });
    }
    let kept: Vec<(f64, C64)> = times
        .iter()
        .zip(values)
        .filter(|(_, z)| z.norm() > MAGNITUDE_FLOOR)
        .map(|(&t, &z)| (t, z))
        .collect();
    if kept.len() < 2 {
        return Err(Error::TooFewSamples { usable: kept.len() });
    }
    let t: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let log_mag: Vec<f64> = kept.iter().map(|p| p.1.norm().ln()).collect();
    let phase = unwrap_phases(&kept.iter().map(|p| p.1.arg()).collect::<Vec<_>>());

    let (a, b) = linear_fit(&t, &log_mag);
    let (_, omega) = linear_fit(&t, &phase);
    let rss: f64 = t
        .iter()
        .zip(&log_mag)
        .map(|(x, y)| (y - (a + b * x)).powi(2))
        .sum();
    Ok(FitResult {
        gamma_hat: -b,
        omega_hat: omega,
        residual: (rss / t.len() as f64).sqrt(),
        n_points: t.len(),
    })
}

/// Decay rate and frequency of element `(i, j)` of a trajectory.
pub fn fit_decay_rate(traj: &Trajectory, i: &BasisState, j: &BasisState) -> Result<FitResult> {
    let (a, b) = (i.index(), j.index());
    let series = traj.coherence(a, b)?;
    fit_series(&traj.times, &series, a, b)
}
