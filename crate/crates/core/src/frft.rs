//! Fast fractional Fourier transform on the self-Fourier grid.
//!
//! The transform of angle `theta` acts on Hermite functions as
//! `h_n -> exp(i n theta) h_n`, so `theta = pi/2` is [`dft_centered`] and
//! `theta = pi` is parity. Harmonic evolution over time `t` is
//! `exp(-i t / 2) * frft(-t)`.
//!
//! Any angle is first folded as `theta = m * pi/2 + r` with `|r| <= pi/4`; the
//! integer part is applied exactly with quarter transforms and the residual
//! with the chirp / chirp-convolution / chirp decomposition
//!
//! ```text
//! frft(r) = exp(-i r/2) C(tan(r/2)) P(sin r) C(tan(r/2))
//! C(a): psi(q) *= exp(+i a q^2 / (2 hbar))
//! P(b): phi(p) *= exp(+i b p^2 / (2 hbar))
//! ```
//!
//! The convolution with the chirp is done in the conjugate representation,
//! two FFTs per residual. Every factor is unitary, so the discrete operator is
//! unitary to rounding for all inputs. On grid indices the phases reduce to
//! `a * pi * j^2 / N`, independent of `hbar`.
//!
//! [`dft_centered`]: crate::fft::dft_centered

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection};

use crate::error::{KhoError, Result};
use crate::fft::{
    centered_scale, check_signal, dft_centered_in_place, idft_centered_in_place, parity_in_place, plan,
};
use crate::matrix::CMatrix;

/// Default largest dimension for dense transform matrices.
pub const DEFAULT_MATRIX_CAP: usize = 4096;

/// Residual angles below this are treated as an exact quarter power.
pub const RESIDUAL_EPS: f64 = 1e-9;

/// Fractional transform angle in radians, interpreted modulo `2 pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformAngle(pub f64);

impl TransformAngle {
    pub fn radians(self) -> f64 {
        self.0
    }
}

impl From<f64> for TransformAngle {
    fn from(theta: f64) -> Self {
        TransformAngle(theta)
    }
}

/// Complex samples on the centered grid; even length of at least 4, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal(Vec<Complex64>);

impl SampledSignal {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        check_signal(&values)?;
        Ok(SampledSignal(values))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Precomputed tables for one `(N, theta)` pair.
///
/// Reusing a plan across many applications avoids recomputing the chirps; the
/// result is bitwise identical to calling [`frft`] each time.
#[derive(Debug, Clone)]
pub struct FrftPlan {
    n: usize,
    quarters: u8,
    shear: Option<Shear>,
}

// The tables absorb the (-1)^j modulation and the scale of the centered
// transforms, so `apply` is three diagonal passes around two raw FFTs.
#[derive(Clone)]
struct Shear {
    chirp: Vec<Complex64>,
    // outer chirp with the exp(-i r/2) phase folded in
    chirp_out: Vec<Complex64>,
    propagator: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Shear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Shear").field("len", &self.chirp.len()).finish()
    }
}

thread_local! {
    static SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

impl FrftPlan {
    pub fn new(n: usize, theta: TransformAngle) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(KhoError::InvalidLength { len: n });
        }
        let theta = theta.radians();
        if !theta.is_finite() {
            return Err(KhoError::Domain("transform angle must be finite".into()));
        }
        let m = (theta / FRAC_PI_2).round();
        let residual = theta - m * FRAC_PI_2;
        let quarters = (m as i64).rem_euclid(4) as u8;
        let shear = (residual.abs() >= RESIDUAL_EPS).then(|| Shear::new(n, residual));
        Ok(FrftPlan { n, quarters, shear })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Applies the transform in place. The slice length must equal the plan size.
    pub fn apply(&self, values: &mut [Complex64]) {
        assert_eq!(values.len(), self.n, "plan size mismatch");
        match self.quarters {
            0 => {}
            1 => dft_centered_in_place(values),
            2 => parity_in_place(values),
            _ => idft_centered_in_place(values),
        }
        if let Some(shear) = &self.shear {
            shear.apply(values);
        }
    }
}

fn index_phase(n: usize, coeff: f64) -> Vec<Complex64> {
    let half = (n / 2) as i64;
    (0..n as i64)
        .map(|a| {
            let j = (a - half) as f64;
            Complex64::from_polar(1.0, coeff * PI * j * j / n as f64)
        })
        .collect()
}

impl Shear {
    fn new(n: usize, residual: f64) -> Self {
        let alternate = |a: usize, c: Complex64| if a % 2 == 1 { -c } else { c };
        let scale = centered_scale(n);
        let inner = index_phase(n, (residual / 2.0).tan());
        let phase = Complex64::from_polar(scale, -residual / 2.0);
        let chirp_out = inner
            .iter()
            .enumerate()
            .map(|(a, &c)| alternate(a, c * phase))
            .collect();
        let chirp = inner.into_iter().enumerate().map(|(a, c)| alternate(a, c)).collect();
        let propagator = index_phase(n, residual.sin())
            .into_iter()
            .map(|c| c * scale)
            .collect();
        Shear {
            chirp,
            chirp_out,
            propagator,
            forward: plan(n, FftDirection::Forward),
            inverse: plan(n, FftDirection::Inverse),
        }
    }

    fn apply(&self, values: &mut [Complex64]) {
        SCRATCH.with_borrow_mut(|scratch| {
            let need = self
                .forward
                .get_inplace_scratch_len()
                .max(self.inverse.get_inplace_scratch_len());
            if scratch.len() < need {
                scratch.resize(need, Complex64::new(0.0, 0.0));
            }
            for (z, c) in values.iter_mut().zip(&self.chirp) {
                *z *= c;
            }
            self.forward.process_with_scratch(values, &mut scratch[..need]);
            for (z, c) in values.iter_mut().zip(&self.propagator) {
                *z *= c;
            }
            self.inverse.process_with_scratch(values, &mut scratch[..need]);
            for (z, c) in values.iter_mut().zip(&self.chirp_out) {
                *z *= c;
            }
        });
    }
}

/// Fractional Fourier transform of angle `theta`, `O(N log N)`.
///
/// `theta = 0` returns the input unchanged.
pub fn frft(signal: &SampledSignal, theta: TransformAngle) -> Result<SampledSignal> {
    let plan = FrftPlan::new(signal.len(), theta)?;
    let mut out = signal.values().to_vec();
    plan.apply(&mut out);
    Ok(SampledSignal(out))
}

/// Dense matrix whose column `j` is `frft(e_j, theta)`.
pub fn frft_matrix(n: usize, theta: TransformAngle) -> Result<CMatrix> {
    frft_matrix_capped(n, theta, DEFAULT_MATRIX_CAP)
}

pub fn frft_matrix_capped(n: usize, theta: TransformAngle, cap: usize) -> Result<CMatrix> {
    if n > cap {
        return Err(KhoError::ResourceCap { n, cap });
    }
    let plan = FrftPlan::new(n, theta)?;
    let mut m = CMatrix::zeros(n);
    m.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, col)| {
            col[j] = Complex64::new(1.0, 0.0);
            plan.apply(col);
        });
    Ok(m)
}
