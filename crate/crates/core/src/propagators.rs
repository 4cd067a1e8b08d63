//! Kick operator, one-period Floquet step, the split-step oracle, and
//! multi-kick evolution with energy recording.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{KhoError, Result, Truncation};
use crate::fft::{dft_centered_in_place, idft_centered_in_place};
use crate::frft::{FrftPlan, TransformAngle};
use crate::phase_space::ClassicalEnsemble;
use crate::qstate::{observables_with_tail, GridSpec, SystemParams, WaveFunction};

/// Evolution aborts once more than this fraction of probability sits in the
/// outer 5% of the grid.
pub const TAIL_MASS_LIMIT: f64 = 1e-6;

/// Mean energies recorded before the first kick and after every period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySeries {
    pub quantum: Vec<f64>,
    pub classical: Option<Vec<f64>>,
}

impl EnergySeries {
    /// Number of recorded entries, `n_kicks + 1` for a complete run.
    pub fn len(&self) -> usize {
        self.quantum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quantum.is_empty()
    }

    pub fn kicks(&self) -> impl Iterator<Item = usize> {
        0..self.quantum.len()
    }
}

fn kick_phases(grid: &GridSpec, params: &SystemParams) -> Vec<Complex64> {
    (0..grid.len())
        .map(|a| {
            let x = grid.point(a);
            Complex64::from_polar(1.0, -params.mu * (params.k * x).cos() / params.hbar)
        })
        .collect()
}

/// `psi(x) -> exp(-i mu cos(k x) / hbar) psi(x)`.
pub fn apply_kick(psi: &WaveFunction, params: &SystemParams) -> Result<WaveFunction> {
    params.validate()?;
    let mut out = psi.clone();
    if params.mu == 0.0 {
        return Ok(out);
    }
    for (z, c) in out
        .amplitudes_mut()
        .iter_mut()
        .zip(kick_phases(psi.grid(), params))
    {
        *z *= c;
    }
    Ok(out)
}

/// Precomputed one-period Floquet operator
/// `U = exp(-i theta/2) frft(-theta) exp(-i mu cos(k q)/hbar)`, where
/// `theta` is the rotation angle per period.
///
/// The global phase is folded into the kick table; the kick is applied first.
#[derive(Debug, Clone)]
pub struct FloquetStepper {
    grid: GridSpec,
    kick: Vec<Complex64>,
    rotation: FrftPlan,
}

impl FloquetStepper {
    pub fn new(grid: &GridSpec, params: &SystemParams) -> Result<Self> {
        params.validate()?;
        check_hbar(grid, params)?;
        let theta = params.theta_rot();
        let phase = Complex64::from_polar(1.0, -theta / 2.0);
        let kick = kick_phases(grid, params).into_iter().map(|c| c * phase).collect();
        Ok(FloquetStepper {
            grid: *grid,
            kick,
            rotation: FrftPlan::new(grid.len(), TransformAngle(-theta))?,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Applies one period in place to raw grid amplitudes.
    pub fn apply(&self, values: &mut [Complex64]) {
        for (z, c) in values.iter_mut().zip(&self.kick) {
            *z *= c;
        }
        self.rotation.apply(values);
    }

    pub fn step(&self, psi: &mut WaveFunction) {
        self.apply(psi.amplitudes_mut());
    }
}

fn check_hbar(grid: &GridSpec, params: &SystemParams) -> Result<()> {
    if (grid.hbar() - params.hbar).abs() > 1e-12 * params.hbar {
        return Err(KhoError::Domain(format!(
            "grid hbar {} differs from system hbar {}",
            grid.hbar(),
            params.hbar
        )));
    }
    Ok(())
}

/// One kick followed by free rotation over a full period.
pub fn floquet_step(psi: &WaveFunction, params: &SystemParams) -> Result<WaveFunction> {
    let stepper = FloquetStepper::new(psi.grid(), params)?;
    let mut out = psi.clone();
    stepper.step(&mut out);
    Ok(out)
}

/// Applies `n_kicks` Floquet steps and returns the final state, checking grid
/// confinement after every step.
pub fn evolve(psi0: &WaveFunction, params: &SystemParams, n_kicks: usize) -> Result<WaveFunction> {
    run(psi0, params, n_kicks, None).map(|(_, psi)| psi)
}

/// Evolves `psi0` through `n_kicks` periods, recording the mean energy before
/// the first kick and after each period. A supplied ensemble is co-evolved
/// with the classical map on the same schedule.
///
/// On a confinement breach the error carries the series up to the last good
/// kick.
pub fn evolve_record(
    psi0: &WaveFunction,
    params: &SystemParams,
    n_kicks: usize,
    ensemble: Option<&ClassicalEnsemble>,
) -> Result<EnergySeries> {
    run(psi0, params, n_kicks, ensemble).map(|(series, _)| series)
}

fn run(
    psi0: &WaveFunction,
    params: &SystemParams,
    n_kicks: usize,
    ensemble: Option<&ClassicalEnsemble>,
) -> Result<(EnergySeries, WaveFunction)> {
    let stepper = FloquetStepper::new(psi0.grid(), params)?;
    let mut psi = psi0.clone();
    let (obs, initial_tail) = observables_with_tail(&psi)?;
    if initial_tail > TAIL_MASS_LIMIT {
        return Err(KhoError::Domain(format!(
            "initial state is not confined: tail mass {initial_tail:.3e}"
        )));
    }
    let mut quantum = Vec::with_capacity(n_kicks + 1);
    quantum.push(obs.energy);

    let mut cloud = ensemble.cloned();
    let mut classical = cloud.as_ref().map(|c| {
        let mut v = Vec::with_capacity(n_kicks + 1);
        v.push(c.mean_energy());
        v
    });

    for kick in 0..n_kicks {
        stepper.step(&mut psi);
        let (obs, tail) = observables_with_tail(&psi)?;
        if tail > TAIL_MASS_LIMIT {
            return Err(KhoError::Truncated(Box::new(Truncation {
                kick,
                tail_mass: tail,
                partial: EnergySeries { quantum, classical },
            })));
        }
        quantum.push(obs.energy);
        if let (Some(c), Some(series)) = (cloud.as_mut(), classical.as_mut()) {
            c.step(params, kick + 1)?;
            series.push(c.mean_energy());
        }
    }
    Ok((EnergySeries { quantum, classical }, psi))
}

/// Largest stable split-step size, `spacing^2 / pi`.
pub fn split_step_bound(grid: &GridSpec) -> f64 {
    grid.spacing() * grid.spacing() / PI
}

/// Strang split-step evolution under `(p^2 + q^2)/2` for duration `t`:
/// `exp(-i dt p^2/(4 hbar)) exp(-i dt q^2/(2 hbar)) exp(-i dt p^2/(4 hbar))`
/// repeated `ceil(t/dt)` times, the last step shortened to land on `t`.
///
/// Requires `0 < dt < spacing^2 / pi`.
pub fn split_step_sho(psi: &WaveFunction, t: f64, dt: f64) -> Result<WaveFunction> {
    let grid = *psi.grid();
    let bound = split_step_bound(&grid);
    if !(dt > 0.0 && dt < bound) {
        return Err(KhoError::Precondition(format!(
            "split-step requires 0 < dt < spacing^2/pi = {bound:.6e}, got dt = {dt:.6e}"
        )));
    }
    if !(t.is_finite() && t >= dt) {
        return Err(KhoError::Precondition(format!(
            "split-step duration t = {t} must be at least dt = {dt}"
        )));
    }
    let steps = ((t / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let last = t - (steps - 1) as f64 * dt;
    let mut amp = psi.amplitudes().to_vec();
    let mut stepper = StrangStepper::new(&grid, dt);
    for _ in 0..steps - 1 {
        stepper.step(&mut amp);
    }
    if (last - dt).abs() > 1e-15 * t {
        stepper = StrangStepper::new(&grid, last);
    }
    stepper.step(&mut amp);
    Ok(WaveFunction::from_parts_unchecked(grid, amp))
}

/// Split-step counterpart of [`floquet_step`]: kick, then `n_sub` Strang steps
/// over the rotation angle, with the same global phase convention (the
/// Strang product carries the `exp(-i t/2)` zero-point phase already).
pub fn split_step_floquet_step(
    psi: &WaveFunction,
    params: &SystemParams,
    n_sub: usize,
) -> Result<WaveFunction> {
    check_hbar(psi.grid(), params)?;
    let theta = params.theta_rot();
    if n_sub == 0 {
        return Err(KhoError::Precondition("need at least one sub-step".into()));
    }
    let kicked = apply_kick(psi, params)?;
    if theta == 0.0 {
        return Ok(kicked);
    }
    split_step_sho(&kicked, theta, theta / n_sub as f64)
}

struct StrangStepper {
    half_kinetic: Vec<Complex64>,
    potential: Vec<Complex64>,
}

impl StrangStepper {
    fn new(grid: &GridSpec, dt: f64) -> Self {
        let hbar = grid.hbar();
        let table = |scale: f64| -> Vec<Complex64> {
            (0..grid.len())
                .map(|a| {
                    let x = grid.point(a);
                    Complex64::from_polar(1.0, -scale * dt * x * x / hbar)
                })
                .collect()
        };
        StrangStepper {
            half_kinetic: table(0.25),
            potential: table(0.5),
        }
    }

    fn step(&self, amp: &mut [Complex64]) {
        idft_centered_in_place(amp);
        for (z, c) in amp.iter_mut().zip(&self.half_kinetic) {
            *z *= c;
        }
        dft_centered_in_place(amp);
        for (z, c) in amp.iter_mut().zip(&self.potential) {
            *z *= c;
        }
        idft_centered_in_place(amp);
        for (z, c) in amp.iter_mut().zip(&self.half_kinetic) {
            *z *= c;
        }
        dft_centered_in_place(amp);
    }
}
