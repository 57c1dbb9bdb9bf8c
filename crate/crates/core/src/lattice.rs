//! Projection-method geometry.
//!
//! A d-dimensional quasiperiodic function is carried as an n-dimensional
//! periodic one: the integer index `h` of a lifted Fourier mode maps to the
//! physical wavevector `k = P·B·h`. Modes are stored on a truncated box with
//! `N_j` entries per axis, each axis in FFT frequency order
//! (`0, 1, …, N_j/2 - 1, -N_j/2, …, -1`) and axes laid out row-major.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fft::NdFft;

/// Default bound below which `|det B|` counts as singular.
pub const DEFAULT_DET_THRESHOLD: f64 = 1e-12;

const NO_PARTNER: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct PMLattice {
    dim: usize,
    lattice_dim: usize,
    projection: Vec<f64>,
    basis: Vec<f64>,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    // P·B, d×n row-major
    pb: Vec<f64>,
    k_sq: Vec<f64>,
    partner: Vec<usize>,
    fft: NdFft,
    padded_fft: OnceLock<NdFft>,
}

impl PMLattice {
    /// Builds a lattice from row lists: `projection` is d×n, `basis` n×n.
    pub fn new(projection: &[Vec<f64>], basis: &[Vec<f64>], sizes: &[usize]) -> Result<Self> {
        Self::with_det_threshold(projection, basis, sizes, DEFAULT_DET_THRESHOLD)
    }

    pub fn with_det_threshold(
        projection: &[Vec<f64>],
        basis: &[Vec<f64>],
        sizes: &[usize],
        det_threshold: f64,
    ) -> Result<Self> {
        let dim = projection.len();
        let n = sizes.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!(
                "physical dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if n < dim {
            return Err(Error::Config(format!(
                "lattice dimension {n} is smaller than physical dimension {dim}"
            )));
        }
        if let Some(bad) = sizes.iter().find(|&&s| s < 2 || s % 2 != 0) {
            return Err(Error::Config(format!(
                "truncation sizes must be even and >= 2, got {bad}"
            )));
        }
        if projection.iter().any(|row| row.len() != n) {
            return Err(Error::Config(format!("projection matrix must be {dim}x{n}")));
        }
        if basis.len() != n || basis.iter().any(|row| row.len() != n) {
            return Err(Error::Config(format!("basis matrix must be {n}x{n}")));
        }
        let projection: Vec<f64> = projection.iter().flatten().copied().collect();
        let basis: Vec<f64> = basis.iter().flatten().copied().collect();
        if projection.iter().chain(&basis).any(|v| !v.is_finite()) {
            return Err(Error::Config("lattice matrices contain non-finite entries".into()));
        }
        let det = determinant(&basis, n);
        if det.abs() < det_threshold {
            return Err(Error::Config(format!(
                "basis matrix is singular (|det| = {:e} < {det_threshold:e})",
                det.abs()
            )));
        }

        let mut pb = vec![0.0; dim * n];
        for r in 0..dim {
            for c in 0..n {
                pb[r * n + c] = (0..n).map(|k| projection[r * n + k] * basis[k * n + c]).sum();
            }
        }

        let mut strides = vec![1usize; n];
        for a in (0..n.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * sizes[a + 1];
        }
        let total: usize = sizes.iter().product();

        let mut lat = Self {
            dim,
            lattice_dim: n,
            projection,
            basis,
            sizes: sizes.to_vec(),
            strides,
            pb,
            k_sq: Vec::new(),
            partner: Vec::new(),
            fft: NdFft::new(sizes),
            padded_fft: OnceLock::new(),
        };

        let mut k_sq = Vec::with_capacity(total);
        let mut partner = Vec::with_capacity(total);
        let mut h = vec![0i64; n];
        for flat in 0..total {
            lat.unravel_into(flat, &mut h);
            let k = lat.wavevector_unchecked(&h);
            k_sq.push(k.iter().map(|x| x * x).sum());
            if lat.has_nyquist(&h) {
                partner.push(NO_PARTNER);
            } else {
                let neg: Vec<i64> = h.iter().map(|x| -x).collect();
                partner.push(lat.ravel(&neg));
            }
        }
        lat.k_sq = k_sq;
        lat.partner = partner;
        Ok(lat)
    }

    /// Ordinary periodic grid: `P = B = I`, one physical axis per lattice axis.
    pub fn periodic(sizes: &[usize]) -> Result<Self> {
        let id = identity(sizes.len());
        Self::new(&id, &id, sizes)
    }

    /// The 4D lift of the planar dodecagonal quasicrystal with `B = I₄` and
    /// columns of `P` at 0°, 30°, 60° and 90°.
    pub fn dodecagonal(sizes: &[usize]) -> Result<Self> {
        use std::f64::consts::PI;
        let p = vec![
            vec![1.0, (PI / 6.0).cos(), (PI / 3.0).cos(), 0.0],
            vec![0.0, (PI / 6.0).sin(), (PI / 3.0).sin(), 1.0],
        ];
        Self::new(&p, &identity(4), sizes)
    }

    /// Physical dimension d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lifted lattice dimension n.
    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_modes(&self) -> usize {
        self.partner.len()
    }

    pub fn projection_rows(&self) -> Vec<Vec<f64>> {
        self.projection.chunks(self.lattice_dim).map(<[f64]>::to_vec).collect()
    }

    pub fn basis_rows(&self) -> Vec<Vec<f64>> {
        self.basis.chunks(self.lattice_dim).map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn fft(&self) -> &NdFft {
        &self.fft
    }

    /// Plans for the 3/2-padded grid (`3N_j/2` points per axis), built on first use.
    pub(crate) fn padded_fft(&self) -> &NdFft {
        self.padded_fft.get_or_init(|| {
            let dims: Vec<usize> = self.sizes.iter().map(|s| 3 * s / 2).collect();
            NdFft::new(&dims)
        })
    }

    /// Same geometry and truncation.
    pub fn compatible(&self, other: &PMLattice) -> bool {
        std::ptr::eq(self, other)
            || (self.dim == other.dim
                && self.sizes == other.sizes
                && self.projection == other.projection
                && self.basis == other.basis)
    }

    /// `k = P·B·h`. Components may reach `±N_j/2`.
    pub fn wavevector(&self, h: &[i64]) -> Result<Vec<f64>> {
        self.check_bounds(h, true)?;
        Ok(self.wavevector_unchecked(h))
    }

    fn wavevector_unchecked(&self, h: &[i64]) -> Vec<f64> {
        let n = self.lattice_dim;
        (0..self.dim)
            .map(|r| {
                self.pb[r * n..(r + 1) * n]
                    .iter()
                    .zip(h)
                    .map(|(m, &hj)| m * hj as f64)
                    .sum()
            })
            .collect()
    }

    /// Symbol of `∏ (Δ + q_j²)` at mode `h`: `∏ (q_j² - |k|²)`.
    pub fn g_symbol(&self, scales: &[f64], h: &[i64]) -> Result<f64> {
        let k = self.wavevector(h)?;
        let k2: f64 = k.iter().map(|x| x * x).sum();
        Ok(symbol_from_k_sq(scales, k2))
    }

    /// `|k|²` of the mode stored at `flat`.
    pub fn k_squared(&self, flat: usize) -> f64 {
        self.k_sq[flat]
    }

    /// Storage position of `h`; every `h_j` must lie in `[-N_j/2, N_j/2)`.
    pub fn index_of(&self, h: &[i64]) -> Result<usize> {
        self.check_bounds(h, false)?;
        Ok(self.ravel(h))
    }

    /// Lattice index stored at `flat`.
    pub fn mode(&self, flat: usize) -> Vec<i64> {
        let mut h = vec![0; self.lattice_dim];
        self.unravel_into(flat, &mut h);
        h
    }

    /// Every index of the truncation set, in storage order.
    pub fn modes(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.num_modes()).map(move |flat| self.mode(flat))
    }

    /// Storage position of `-h`, or `None` when `h` touches the unmatched
    /// Nyquist index `-N_j/2` on some axis.
    pub fn partner(&self, flat: usize) -> Option<usize> {
        match self.partner[flat] {
            NO_PARTNER => None,
            p => Some(p),
        }
    }

    fn has_nyquist(&self, h: &[i64]) -> bool {
        h.iter().zip(&self.sizes).any(|(&x, &s)| x == -(s as i64 / 2))
    }

    fn check_bounds(&self, h: &[i64], allow_upper: bool) -> Result<()> {
        let in_range = h.len() == self.lattice_dim
            && h.iter().zip(&self.sizes).all(|(&x, &s)| {
                let half = s as i64 / 2;
                x >= -half && (x < half || (allow_upper && x == half))
            });
        if in_range {
            Ok(())
        } else {
            Err(Error::Range {
                index: h.to_vec(),
                sizes: self.sizes.clone(),
            })
        }
    }

    fn ravel(&self, h: &[i64]) -> usize {
        h.iter()
            .zip(&self.sizes)
            .zip(&self.strides)
            .map(|((&x, &s), &st)| x.rem_euclid(s as i64) as usize * st)
            .sum()
    }

    fn unravel_into(&self, mut flat: usize, h: &mut [i64]) {
        for a in (0..self.lattice_dim).rev() {
            let s = self.sizes[a];
            let i = flat % s;
            flat /= s;
            h[a] = if i < s / 2 { i as i64 } else { i as i64 - s as i64 };
        }
    }
}

pub(crate) fn symbol_from_k_sq(scales: &[f64], k_sq: f64) -> f64 {
    scales.iter().map(|q| q * q - k_sq).product()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

// Gaussian elimination with partial pivoting.
fn determinant(m: &[f64], n: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..n {
                a.swap(pivot * n + c, col * n + c);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
        }
    }
    det
}
