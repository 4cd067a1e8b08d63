//! Centered unitary DFT on the self-Fourier grid.
//!
//! Samples live at `x_j = j * spacing` for `j = -N/2 .. N/2 - 1`, stored at
//! array position `j + N/2`. With `spacing^2 * N = 2 pi hbar` the same grid
//! serves position and momentum, and
//!
//! ```text
//! dft_centered(v)_m = N^{-1/2} sum_j v_j exp(+2 pi i j m / N)
//! ```
//!
//! is the quarter-turn fractional transform. Its inverse (kernel sign `-`) maps
//! a position amplitude to the physical momentum amplitude.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{KhoError, Result};

type PlanKey = (usize, bool);

pub(crate) fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let key = (n, direction == FftDirection::Forward);
    if let Some(p) = guard.1.get(&key) {
        return Arc::clone(p);
    }
    let p = guard.0.plan_fft(n, direction);
    guard.1.insert(key, Arc::clone(&p));
    p
}

/// Validates the length contract shared by every transform on the grid.
pub fn check_signal(values: &[Complex64]) -> Result<()> {
    let len = values.len();
    if len < 4 || len % 2 != 0 {
        return Err(KhoError::InvalidLength { len });
    }
    if let Some(index) = values
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(KhoError::NonFinite { index });
    }
    Ok(())
}

// The centered transform is the plain FFT conjugated by the (-1)^j
// modulation on both sides, times (-1)^{N/2}.
fn centered_in_place(values: &mut [Complex64], direction: FftDirection) {
    let n = values.len();
    for z in values.iter_mut().skip(1).step_by(2) {
        *z = -*z;
    }
    plan(n, direction).process(values);
    let scale = centered_scale(n);
    for (a, z) in values.iter_mut().enumerate() {
        *z *= if a % 2 == 1 { -scale } else { scale };
    }
}

/// Output factor of the centered transform at even positions; odd positions
/// take the opposite sign.
pub(crate) fn centered_scale(n: usize) -> f64 {
    let scale = 1.0 / (n as f64).sqrt();
    if (n / 2) % 2 == 1 {
        -scale
    } else {
        scale
    }
}

/// In-place [`dft_centered`] without validation.
pub fn dft_centered_in_place(values: &mut [Complex64]) {
    centered_in_place(values, FftDirection::Inverse);
}

/// In-place inverse of [`dft_centered`] without validation.
pub fn idft_centered_in_place(values: &mut [Complex64]) {
    centered_in_place(values, FftDirection::Forward);
}

/// Unitary centered DFT, kernel `exp(+2 pi i j m / N) / sqrt(N)`.
pub fn dft_centered(values: &[Complex64]) -> Result<Vec<Complex64>> {
    check_signal(values)?;
    let mut out = values.to_vec();
    dft_centered_in_place(&mut out);
    Ok(out)
}

/// Inverse of [`dft_centered`]; maps position amplitudes to momentum amplitudes.
pub fn idft_centered(values: &[Complex64]) -> Result<Vec<Complex64>> {
    check_signal(values)?;
    let mut out = values.to_vec();
    idft_centered_in_place(&mut out);
    Ok(out)
}

/// Index reversal `v_j -> v_{-j}` on the centered grid; `j = -N/2` maps to itself.
pub fn parity_in_place(values: &mut [Complex64]) {
    let n = values.len();
    values[1..].reverse();
    debug_assert!(n % 2 == 0);
}
