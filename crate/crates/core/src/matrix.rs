//! Minimal dense square complex matrix, column-major.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    /// Builds a matrix from `n` columns of length `n`.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let n = columns.len();
        let mut data = Vec::with_capacity(n * n);
        for c in columns {
            assert_eq!(c.len(), n, "column length must equal column count");
            data.extend_from_slice(c);
        }
        CMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.n + row]
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn scale(&mut self, factor: Complex64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        for (col, &x) in self.data.chunks_exact(self.n).zip(v) {
            for (o, a) in out.iter_mut().zip(col) {
                *o += a * x;
            }
        }
        out
    }

    /// Euclidean norms of the columns.
    pub fn column_norms(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.n.max(1))
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// `max |(M^H M - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            let ci = self.column(i);
            for j in i..n {
                let cj = self.column(j);
                let dot: Complex64 = ci.iter().zip(cj).map(|(a, b)| a.conj() * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<Complex64> {
        faer::Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}
