//! Classical kicked map, Gaussian ensembles, Poincaré sections and Husimi
//! functions.
//!
//! The map is one kick `p -> p + mu k sin(k q)` followed by the exact
//! harmonic flow over one period, a clockwise rotation by `theta_rot`
//! (`q' = q cos + p sin`, `p' = -q sin + p cos`), the same order as the
//! quantum Floquet step.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KhoError, Result};
use crate::qstate::{check_confined, GridSpec, SystemParams, WaveFunction};

/// Default ensemble size.
pub const DEFAULT_ENSEMBLE_SIZE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub const fn new(q: f64, p: f64) -> Self {
        PhasePoint { q, p }
    }

    /// `(q^2 + p^2) / 2`.
    pub fn energy(&self) -> f64 {
        0.5 * (self.q * self.q + self.p * self.p)
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }
}

/// `cos` and `sin` of the per-period rotation.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    cos: f64,
    sin: f64,
}

impl Rotation {
    fn of(params: &SystemParams) -> Self {
        let theta = params.theta_rot();
        Rotation {
            cos: theta.cos(),
            sin: theta.sin(),
        }
    }
}

#[inline]
fn step_with(pt: PhasePoint, params: &SystemParams, rot: Rotation) -> PhasePoint {
    let q = pt.q;
    let p = pt.p + params.mu * params.k * (params.k * q).sin();
    PhasePoint {
        q: q * rot.cos + p * rot.sin,
        p: -q * rot.sin + p * rot.cos,
    }
}

pub fn classical_map_step(pt: PhasePoint, params: &SystemParams) -> PhasePoint {
    step_with(pt, params, Rotation::of(params))
}

/// Inverse of [`classical_map_step`]: rotate back, then undo the kick.
pub fn classical_map_inverse(pt: PhasePoint, params: &SystemParams) -> PhasePoint {
    let rot = Rotation::of(params);
    let q = pt.q * rot.cos - pt.p * rot.sin;
    let p = pt.q * rot.sin + pt.p * rot.cos;
    PhasePoint {
        q,
        p: p - params.mu * params.k * (params.k * q).sin(),
    }
}

/// Seeded Gaussian cloud of phase-space points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    points: Vec<PhasePoint>,
    seed: u64,
    center: PhasePoint,
    sigma: f64,
}

impl ClassicalEnsemble {
    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn center(&self) -> PhasePoint {
        self.center
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean of `(q^2 + p^2)/2`, summed in index order.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(PhasePoint::energy).sum::<f64>() / self.points.len() as f64
    }

    /// Advances every point by one period. `kick` only labels overflow errors.
    pub fn step(&mut self, params: &SystemParams, kick: usize) -> Result<()> {
        let rot = Rotation::of(params);
        self.points
            .par_iter_mut()
            .for_each(|pt| *pt = step_with(*pt, params, rot));
        if self.points.iter().any(|pt| !pt.is_finite()) {
            return Err(KhoError::Overflow { kick });
        }
        Ok(())
    }
}

/// I.i.d. Gaussian points around `center` with per-axis standard deviation
/// `sqrt(hbar)`, the marginal width of a coherent state's Husimi function.
pub fn sample_ensemble(center: PhasePoint, m: usize, hbar: f64, seed: u64) -> Result<ClassicalEnsemble> {
    if m == 0 {
        return Err(KhoError::Domain("ensemble needs at least one point".into()));
    }
    if !(hbar.is_finite() && hbar > 0.0) || !center.is_finite() {
        return Err(KhoError::Domain("ensemble centre and hbar must be finite".into()));
    }
    let sigma = hbar.sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| KhoError::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..m)
        .map(|_| {
            let dq = normal.sample(&mut rng);
            let dp = normal.sample(&mut rng);
            PhasePoint::new(center.q + dq, center.p + dp)
        })
        .collect();
    Ok(ClassicalEnsemble {
        points,
        seed,
        center,
        sigma,
    })
}

/// Mean ensemble energy before the first kick and after each of `n_kicks`.
pub fn ensemble_energy_series(
    ens: &ClassicalEnsemble,
    params: &SystemParams,
    n_kicks: usize,
) -> Result<Vec<f64>> {
    params.validate()?;
    let mut cloud = ens.clone();
    let mut out = Vec::with_capacity(n_kicks + 1);
    out.push(cloud.mean_energy());
    for kick in 1..=n_kicks {
        cloud.step(params, kick)?;
        out.push(cloud.mean_energy());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareCloud {
    pub points: Vec<PhasePoint>,
    /// Visited points dropped for lying outside the clip box.
    pub clipped: usize,
}

/// Iterates the map `n_iter` times from each initial point and keeps every
/// visited point (initial ones included) with `|q|, |p| <= clip`.
pub fn poincare_section(
    initials: &[PhasePoint],
    params: &SystemParams,
    n_iter: usize,
    clip: f64,
) -> Result<PoincareCloud> {
    if n_iter == 0 {
        return Err(KhoError::Domain("poincare section needs n_iter >= 1".into()));
    }
    if !(clip > 0.0) {
        return Err(KhoError::Domain(format!("clip must be positive, got {clip}")));
    }
    params.validate()?;
    let rot = Rotation::of(params);
    let orbits: Vec<(Vec<PhasePoint>, usize)> = initials
        .par_iter()
        .map(|&start| {
            let mut kept = Vec::with_capacity(n_iter + 1);
            let mut clipped = 0;
            let mut pt = start;
            for i in 0..=n_iter {
                if i > 0 {
                    pt = step_with(pt, params, rot);
                }
                if pt.is_finite() && pt.q.abs() <= clip && pt.p.abs() <= clip {
                    kept.push(pt);
                } else {
                    clipped += 1;
                }
            }
            (kept, clipped)
        })
        .collect();
    let clipped = orbits.iter().map(|o| o.1).sum();
    let points = orbits.into_iter().flat_map(|o| o.0).collect();
    Ok(PoincareCloud { points, clipped })
}

/// Husimi function sampled on a rectangular `(q, p)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// Row-major, `values[i * p_axis.len() + j]` at `(q_axis[i], p_axis[j])`.
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p_axis.len() + j]
    }

    fn step(axis: &[f64]) -> f64 {
        if axis.len() < 2 {
            1.0
        } else {
            (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
        }
    }

    pub fn cell_area(&self) -> f64 {
        Self::step(&self.q_axis) * Self::step(&self.p_axis)
    }

    /// Riemann sum of the values times the cell area.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// `(q, p)` of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (idx, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        let np = self.p_axis.len();
        (self.q_axis[idx / np], self.p_axis[idx % np])
    }

    /// Fraction of cells needed, taking the largest first, to hold `fraction`
    /// of the total mass.
    pub fn concentration(&self, fraction: f64) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = sorted.iter().sum();
        if total <= 0.0 {
            return 1.0;
        }
        let target = fraction * total;
        let mut acc = 0.0;
        for (i, v) in sorted.iter().enumerate() {
            acc += v;
            if acc >= target {
                return (i + 1) as f64 / sorted.len() as f64;
            }
        }
        1.0
    }
}

/// Evenly spaced axis of `count` points over `[lo, hi]`.
pub fn axis(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Coherent states further out than this many widths are treated as zero.
const WINDOW_SIGMAS: f64 = 10.0;

/// `Q(q, p) = |<coherent(q, p)|psi>|^2 / (2 pi hbar)` with unit-width
/// coherent states and the grid-measure inner product.
pub fn husimi(psi: &WaveFunction, q_axis: &[f64], p_axis: &[f64]) -> Result<HusimiGrid> {
    let grid = *psi.grid();
    for &q in q_axis {
        check_confined(&grid, q, 0.0, 1.0)?;
    }
    for &p in p_axis {
        check_confined(&grid, 0.0, p, 1.0)?;
    }
    let hbar = grid.hbar();
    let dx = grid.spacing();
    let norm_sq = psi.norm().powi(2);
    if !(norm_sq > 0.0) {
        return Err(KhoError::Domain("husimi of a zero-norm state".into()));
    }
    let amp = psi.amplitudes();
    let prefactor = (1.0 / (PI * hbar)).powf(0.25);
    let half_width = WINDOW_SIGMAS * hbar.sqrt();
    let scale = 1.0 / (2.0 * PI * hbar);

    let rows: Vec<Vec<f64>> = q_axis
        .par_iter()
        .map(|&q| {
            let (lo, hi) = window(&grid, q, half_width);
            // <coh(q,p)|psi> = sum_j g(x_j - q) e^{-i p (x_j - q/2)/hbar} psi_j dx
            let weighted: Vec<(f64, Complex64)> = (lo..hi)
                .map(|a| {
                    let x = grid.point(a);
                    let g = prefactor * (-(x - q) * (x - q) / (2.0 * hbar)).exp();
                    (x - q / 2.0, amp[a] * g)
                })
                .collect();
            p_axis
                .iter()
                .map(|&p| {
                    let overlap: Complex64 = weighted
                        .iter()
                        .map(|&(shift, w)| w * Complex64::from_polar(1.0, -p * shift / hbar))
                        .sum();
                    (overlap * dx).norm_sqr() * scale / norm_sq
                })
                .collect()
        })
        .collect();
    Ok(HusimiGrid {
        q_axis: q_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values: rows.into_iter().flatten().collect(),
    })
}

fn window(grid: &GridSpec, q: f64, half_width: f64) -> (usize, usize) {
    let n = grid.len() as f64;
    let to_index = |x: f64| x / grid.spacing() + n / 2.0;
    let lo = to_index(q - half_width).floor().max(0.0) as usize;
    let hi = (to_index(q + half_width).ceil() + 1.0).min(n) as usize;
    (lo, hi)
}
