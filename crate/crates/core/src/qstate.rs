//! Grids, wavefunctions, coherent states and their observables.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KhoError, Result};
use crate::fft::{dft_centered_in_place, idft_centered_in_place};

/// Gaussian tails this many standard deviations out must stay on the grid.
pub const CONFINEMENT_SIGMAS: f64 = 6.0;

/// Centered grid `x_j = j * spacing`, `j = -n/2 .. n/2 - 1`, with
/// `spacing^2 * n = 2 pi hbar` so that position and momentum share it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    hbar: f64,
    spacing: f64,
}

impl GridSpec {
    pub fn new(n: usize, hbar: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(KhoError::Domain(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(KhoError::Domain(format!("hbar must be positive, got {hbar}")));
        }
        Ok(GridSpec {
            n,
            hbar,
            spacing: (2.0 * PI * hbar / n as f64).sqrt(),
        })
    }

    pub fn from_log2(log2n: u32, hbar: f64) -> Result<Self> {
        if log2n >= usize::BITS {
            return Err(KhoError::Domain(format!("log2 grid size {log2n} too large")));
        }
        Self::new(1usize << log2n, hbar)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Coordinate at array position `a` (grid index `a - n/2`).
    pub fn point(&self, a: usize) -> f64 {
        (a as f64 - (self.n / 2) as f64) * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|a| self.point(a)).collect()
    }

    /// Largest `|x_j|`, attained at the one-sided endpoint `j = -n/2`.
    /// Also the largest representable momentum.
    pub fn max_coordinate(&self) -> f64 {
        (self.n / 2) as f64 * self.spacing
    }
}

/// Complex amplitudes in the position representation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    amp: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(KhoError::Domain(format!(
                "amplitude count {} does not match grid size {}",
                amp.len(),
                grid.len()
            )));
        }
        if let Some(index) = amp.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(KhoError::NonFinite { index });
        }
        Ok(WaveFunction { grid, amp })
    }

    pub(crate) fn from_parts_unchecked(grid: GridSpec, amp: Vec<Complex64>) -> Self {
        debug_assert_eq!(amp.len(), grid.len());
        WaveFunction { grid, amp }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amp
    }

    /// `sqrt(sum |amp|^2 * spacing)`.
    pub fn norm(&self) -> f64 {
        (sum_sq(&self.amp) * self.grid.spacing).sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(KhoError::Domain("cannot normalize a zero-norm state".into()));
        }
        let s = 1.0 / norm;
        for z in &mut self.amp {
            *z *= s;
        }
        Ok(())
    }

    /// Grid-measure inner product `<self|other>`.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.spacing
    }

    /// `|psi(x_j)|^2` per grid point.
    pub fn density(&self) -> Vec<f64> {
        self.amp.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Physical momentum amplitudes on the shared grid, unit-preserving
    /// (`sum |phi_m|^2 = sum |psi_j|^2`).
    pub fn momentum_amplitudes(&self) -> Vec<Complex64> {
        let mut phi = self.amp.clone();
        idft_centered_in_place(&mut phi);
        phi
    }

    /// Fraction of probability with `|x| >= 0.95 max|x|`, in position or in
    /// momentum, whichever is larger.
    pub fn tail_mass(&self) -> f64 {
        let phi = self.momentum_amplitudes();
        tail_fraction(&self.grid, &self.amp).max(tail_fraction(&self.grid, &phi))
    }
}

fn sum_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn tail_fraction(grid: &GridSpec, v: &[Complex64]) -> f64 {
    let edge = 0.95 * grid.max_coordinate();
    let total = sum_sq(v);
    if total == 0.0 {
        return 0.0;
    }
    let tail: f64 = v
        .iter()
        .enumerate()
        .filter(|(a, _)| grid.point(*a).abs() >= edge)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    tail / total
}

/// Physical parameters of the kicked oscillator
/// `H = omega (p^2 + q^2)/2 + mu cos(k q) sum_n delta(t - n T_K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega: f64,
    /// `omega / omega_K`; `1/R` for the integer resonances.
    pub ratio: f64,
    pub mu: f64,
    pub k: f64,
    pub hbar: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            omega: 1.0,
            ratio: 0.25,
            mu: 0.0,
            k: 1.0,
            hbar: 1.0,
        }
    }
}

/// `(sqrt 5 + 1) / 2`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

impl SystemParams {
    /// Integer resonance `omega_K = R omega`.
    pub fn resonant(resonance: u32, mu: f64) -> Self {
        SystemParams {
            ratio: 1.0 / resonance as f64,
            mu,
            ..Default::default()
        }
    }

    /// Frequency ratio `omega / omega_K = (sqrt 5 + 1)/2`.
    pub fn golden(mu: f64) -> Self {
        SystemParams {
            ratio: GOLDEN_RATIO,
            mu,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(KhoError::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("omega", self.omega)?;
        positive("ratio", self.ratio)?;
        positive("k", self.k)?;
        positive("hbar", self.hbar)?;
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(KhoError::Domain(format!("mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }

    /// Rotation angle per kick period, `2 pi ratio` reduced to `[0, 2 pi)`.
    pub fn theta_rot(&self) -> f64 {
        let frac = self.ratio - self.ratio.floor();
        let theta = 2.0 * PI * frac;
        if theta >= 2.0 * PI {
            0.0
        } else {
            theta
        }
    }

    /// Kick period `T_K = 2 pi ratio / omega`.
    pub fn t_kick(&self) -> f64 {
        2.0 * PI * self.ratio / self.omega
    }
}

/// Minimum-uncertainty Gaussian centred at `(q0, p0)` with width set by
/// `omega0`, normalized on the grid.
///
/// Uses `alpha = (sqrt(omega0) q0 + i p0 / sqrt(omega0)) / sqrt(2 hbar)`, which
/// for `omega0 = 1` is `(q0 + i p0)/sqrt(2 hbar)`, in
/// `psi(q) = (omega0/(pi hbar))^{1/4}
///   exp(-omega0 q^2/(2 hbar) + sqrt(2 omega0/hbar) alpha q - |alpha|^2/2 - alpha^2/2)`.
pub fn coherent_state(grid: &GridSpec, q0: f64, p0: f64, omega0: f64) -> Result<WaveFunction> {
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(KhoError::Domain(format!("omega0 must be positive, got {omega0}")));
    }
    if !(q0.is_finite() && p0.is_finite()) {
        return Err(KhoError::Domain("coherent state centre must be finite".into()));
    }
    check_confined(grid, q0, p0, omega0)?;
    let hbar = grid.hbar();
    let alpha = Complex64::new(omega0.sqrt() * q0, p0 / omega0.sqrt()) / (2.0 * hbar).sqrt();
    let prefactor = (omega0 / (PI * hbar)).powf(0.25);
    let lin = (2.0 * omega0 / hbar).sqrt() * alpha;
    let offset = -alpha.norm_sqr() / 2.0 - alpha * alpha / 2.0;
    let amp = grid
        .points()
        .into_iter()
        .map(|x| prefactor * (-omega0 * x * x / (2.0 * hbar) + lin * x + offset).exp())
        .collect();
    let mut psi = WaveFunction::from_parts_unchecked(*grid, amp);
    psi.normalize()?;
    Ok(psi)
}

/// Checks that a coherent state at `(q0, p0)` keeps its 6-sigma tails on the grid.
pub fn check_confined(grid: &GridSpec, q0: f64, p0: f64, omega0: f64) -> Result<()> {
    let hbar = grid.hbar();
    let max = grid.max_coordinate();
    let sq = CONFINEMENT_SIGMAS * (hbar / omega0).sqrt();
    let sp = CONFINEMENT_SIGMAS * (hbar * omega0).sqrt();
    if q0.abs() + sq >= max || p0.abs() + sp >= max {
        return Err(KhoError::Domain(format!(
            "coherent state at ({q0}, {p0}) is not confined to the grid (max |x| = {max:.4})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub norm: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub mean_q2: f64,
    pub mean_p2: f64,
    /// `(<p^2> + <q^2>) / 2`.
    pub energy: f64,
}

pub fn observables(psi: &WaveFunction) -> Result<Observables> {
    observables_with_tail(psi).map(|(o, _)| o)
}

/// [`observables`] together with [`WaveFunction::tail_mass`], sharing one transform.
pub fn observables_with_tail(psi: &WaveFunction) -> Result<(Observables, f64)> {
    let grid = psi.grid();
    let total = sum_sq(psi.amplitudes());
    if !(total > 0.0 && total.is_finite()) {
        return Err(KhoError::Domain("observables of a zero-norm state".into()));
    }
    let moments = |v: &[Complex64]| {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (a, z) in v.iter().enumerate() {
            let x = grid.point(a);
            let w = z.norm_sqr();
            m1 += x * w;
            m2 += x * x * w;
        }
        (m1 / total, m2 / total)
    };
    let phi = psi.momentum_amplitudes();
    let (mean_q, mean_q2) = moments(psi.amplitudes());
    let (mean_p, mean_p2) = moments(&phi);
    let tail = tail_fraction(grid, psi.amplitudes()).max(tail_fraction(grid, &phi));
    let obs = Observables {
        norm: (total * grid.spacing()).sqrt(),
        mean_q,
        mean_p,
        mean_q2,
        mean_p2,
        energy: 0.5 * (mean_p2 + mean_q2),
    };
    Ok((obs, tail))
}

/// Kinetic term `<psi| -hbar^2 d^2/dq^2 |psi> / 2` via spectral differentiation,
/// normalized by `<psi|psi>`.
pub fn kinetic_by_differentiation(psi: &WaveFunction) -> f64 {
    let grid = psi.grid();
    let n = grid.len();
    // wavenumber of grid mode m is m * 2 pi / (n spacing) = m spacing / hbar
    let mut d2 = psi.amplitudes().to_vec();
    idft_centered_in_place(&mut d2);
    for (a, z) in d2.iter_mut().enumerate() {
        let kappa = grid.point(a) / grid.hbar();
        *z *= -kappa * kappa;
    }
    dft_centered_in_place(&mut d2);
    let total = sum_sq(psi.amplitudes());
    let hbar2 = grid.hbar() * grid.hbar();
    let val: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(&d2)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert_eq!(d2.len(), n);
    -0.5 * hbar2 * val.re / total
}
