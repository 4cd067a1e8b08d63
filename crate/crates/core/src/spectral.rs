//! Floquet matrix construction, diagonalization and spectral statistics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KhoError, Result};
use crate::frft::DEFAULT_MATRIX_CAP;
use crate::matrix::CMatrix;
use crate::propagators::FloquetStepper;
use crate::qstate::{observables, GridSpec, SystemParams, WaveFunction};

/// Largest `| ||U e_j|| - 1 |` accepted by [`eigendecompose`].
pub const UNITARITY_TOLERANCE: f64 = 1e-5;

/// Eigenpairs are certified when `||U v - lambda v|| <= RESIDUAL_TOLERANCE * ||U||`
/// for unit `v`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-7;

/// Dense one-period Floquet matrix; column `j` is the Floquet step of `e_j`.
pub fn build_floquet_matrix(params: &SystemParams, grid: &GridSpec) -> Result<CMatrix> {
    build_floquet_matrix_capped(params, grid, DEFAULT_MATRIX_CAP)
}

pub fn build_floquet_matrix_capped(
    params: &SystemParams,
    grid: &GridSpec,
    cap: usize,
) -> Result<CMatrix> {
    let n = grid.len();
    if n > cap {
        return Err(KhoError::ResourceCap { n, cap });
    }
    let stepper = FloquetStepper::new(grid, params)?;
    let mut m = CMatrix::zeros(n);
    m.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, col)| {
            col[j] = Complex64::new(1.0, 0.0);
            stepper.apply(col);
        });
    Ok(m)
}

/// Diagonalized Floquet operator. Eigenpairs are sorted by ascending
/// eigenstate mean energy, ties broken by quasi-energy.
#[derive(Debug, Clone)]
pub struct FloquetEigensystem {
    pub eigenvalues: Vec<Complex64>,
    /// `epsilon_j` in `(-pi, pi]` with `lambda_j = exp(-i epsilon_j)`.
    pub quasi_energies: Vec<f64>,
    /// Normalized on the grid measure.
    pub eigenvectors: Vec<WaveFunction>,
    /// `||U v - lambda v||` for the Euclidean-unit eigenvector.
    pub residuals: Vec<f64>,
    /// Mean energy of each eigenvector, the sort key.
    pub mean_energies: Vec<f64>,
}

impl FloquetEigensystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Maps `arg`-style angles into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

pub fn quasi_energy(lambda: Complex64) -> f64 {
    wrap_phase(-lambda.arg())
}

/// Full eigendecomposition of an approximately unitary matrix, with every
/// eigenpair's residual computed from `U` directly.
pub fn eigendecompose(u: &CMatrix, grid: &GridSpec) -> Result<FloquetEigensystem> {
    let n = u.dim();
    if n != grid.len() {
        return Err(KhoError::Domain(format!(
            "matrix dimension {n} does not match grid size {}",
            grid.len()
        )));
    }
    let worst = u
        .column_norms()
        .iter()
        .map(|c| (c - 1.0).abs())
        .fold(0.0, f64::max);
    if !(worst <= UNITARITY_TOLERANCE) {
        return Err(KhoError::Precondition(format!(
            "matrix is not unitary enough: column norm defect {worst:.3e}"
        )));
    }

    let a = u.to_faer();
    let evd = a
        .eigen()
        .map_err(|_| KhoError::NoConvergence { certified: 0, total: n })?;
    let vecs = evd.U();
    let vals: Vec<Complex64> = (0..n).map(|k| evd.S().column_vector()[k]).collect();

    // residual matrix U V - V diag(lambda), column by column
    let product = &a * vecs;
    let u_norm = u.column_norms().iter().cloned().fold(0.0, f64::max);
    let mut pairs: Vec<Pair> = (0..n)
        .into_par_iter()
        .map(|k| {
            let col: Vec<Complex64> = (0..n).map(|i| vecs[(i, k)]).collect();
            let len = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let lambda = vals[k];
            let res = (0..n)
                .map(|i| (product[(i, k)] - lambda * col[i]).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / len;
            let mut psi = WaveFunction::from_parts_unchecked(*grid, col);
            psi.normalize().expect("eigenvector has nonzero norm");
            let energy = observables(&psi).map(|o| o.energy).unwrap_or(f64::INFINITY);
            Pair {
                lambda,
                quasi: quasi_energy(lambda),
                psi,
                residual: res,
                energy,
            }
        })
        .collect();

    let certified = pairs
        .iter()
        .filter(|p| p.residual <= RESIDUAL_TOLERANCE * u_norm)
        .count();
    if certified < n {
        return Err(KhoError::NoConvergence { certified, total: n });
    }

    pairs.sort_by(|x, y| x.energy.total_cmp(&y.energy).then(x.quasi.total_cmp(&y.quasi)));
    Ok(FloquetEigensystem {
        eigenvalues: pairs.iter().map(|p| p.lambda).collect(),
        quasi_energies: pairs.iter().map(|p| p.quasi).collect(),
        residuals: pairs.iter().map(|p| p.residual).collect(),
        mean_energies: pairs.iter().map(|p| p.energy).collect(),
        eigenvectors: pairs.into_iter().map(|p| p.psi).collect(),
    })
}

struct Pair {
    lambda: Complex64,
    quasi: f64,
    psi: WaveFunction,
    residual: f64,
    energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenstateMetrics {
    pub mean_energy: f64,
    pub ipr: f64,
}

/// `sum |v|^4 / (sum |v|^2)^2` over grid points.
pub fn ipr(v: &[Complex64]) -> f64 {
    let (s2, s4) = v.iter().fold((0.0, 0.0), |(s2, s4), z| {
        let w = z.norm_sqr();
        (s2 + w, s4 + w * w)
    });
    if s2 == 0.0 {
        return 0.0;
    }
    s4 / (s2 * s2)
}

pub fn eigenstate_metrics(sys: &FloquetEigensystem) -> Vec<EigenstateMetrics> {
    sys.eigenvectors
        .iter()
        .zip(&sys.mean_energies)
        .map(|(v, &mean_energy)| EigenstateMetrics {
            mean_energy,
            ipr: ipr(v.amplitudes()),
        })
        .collect()
}

/// Mean IPR of the `count` lowest-energy eigenstates.
pub fn mean_low_energy_ipr(sys: &FloquetEigensystem, count: usize) -> f64 {
    let m = eigenstate_metrics(sys);
    let take = count.min(m.len()).max(1);
    m.iter().take(take).map(|x| x.ipr).sum::<f64>() / take as f64
}

/// Gaps between consecutive quasi-energies around the circle, including the
/// wrap-around gap; they sum to `2 pi`.
pub fn level_spacings(sys: &FloquetEigensystem) -> Vec<f64> {
    spacings_on_circle(&sys.quasi_energies)
}

pub fn spacings_on_circle(phases: &[f64]) -> Vec<f64> {
    if phases.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = phases.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(sorted[0] + 2.0 * PI - sorted[sorted.len() - 1]);
    gaps
}
