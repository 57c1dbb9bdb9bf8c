//! Real quasiperiodic fields stored as lifted Fourier coefficients.
//!
//! The physical field is `φ(r) = Σ_h φ̂(h) exp(i (P·B·h)·r)`. On the lifted
//! torus the collocation point with grid index `x` sits at lattice
//! coordinates `θ_j = 2π x_j / N_j`, so `to_collocation` is an unnormalized
//! inverse DFT and `from_collocation` a forward DFT divided by `∏ N_j`.
//!
//! Coefficients of real fields are kept exactly Hermitian: every transform
//! back to coefficient space symmetrizes `φ̂(h)` against `conj(φ̂(-h))` and
//! zeroes indices that touch the unmatched Nyquist frequency `-N_j/2`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::NdFft;
use crate::lattice::PMLattice;

/// Zero padding applied when nonlinear terms are evaluated on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dealias {
    /// Plain pseudospectral products on the native `N_j` grid.
    #[default]
    Off,
    /// Evaluate on a `3N_j/2` grid and truncate back.
    ThreeHalves,
}

const IMAG_RESIDUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralField {
    lattice: Arc<PMLattice>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(lattice: Arc<PMLattice>) -> Self {
        let coeffs = vec![Complex64::default(); lattice.num_modes()];
        Self { lattice, coeffs }
    }

    /// Wraps raw coefficients after validating length, finiteness, the
    /// Nyquist rule and Hermitian symmetry (1e-12 relative).
    pub fn from_coeffs(lattice: Arc<PMLattice>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.num_modes() {
            return Err(Error::Shape(format!(
                "{} coefficients for a lattice with {} modes",
                coeffs.len(),
                lattice.num_modes()
            )));
        }
        let field = Self { lattice, coeffs };
        field.check_finite()?;
        for flat in 0..field.coeffs.len() {
            if field.lattice.partner(flat).is_none() && field.coeffs[flat] != Complex64::default() {
                return Err(Error::Data(format!(
                    "nonzero coefficient at unmatched Nyquist index {:?}",
                    field.lattice.mode(flat)
                )));
            }
        }
        let defect = field.hermitian_defect();
        if defect > 1e-12 {
            return Err(Error::Data(format!(
                "coefficients are not Hermitian (relative defect {defect:e})"
            )));
        }
        Ok(field)
    }

    pub fn lattice(&self) -> &Arc<PMLattice> {
        &self.lattice
    }

    /// Coefficients in storage order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn get(&self, h: &[i64]) -> Result<Complex64> {
        Ok(self.coeffs[self.lattice.index_of(h)?])
    }

    /// Sets `φ̂(h) = value` and `φ̂(-h) = conj(value)`. At `h = 0` only the
    /// real part is kept.
    pub fn set_pair(&mut self, h: &[i64], value: Complex64) -> Result<()> {
        let flat = self.lattice.index_of(h)?;
        match self.lattice.partner(flat) {
            None => Err(Error::Range {
                index: h.to_vec(),
                sizes: self.lattice.sizes().to_vec(),
            }),
            Some(p) if p == flat => {
                self.coeffs[flat] = Complex64::new(value.re, 0.0);
                Ok(())
            }
            Some(p) => {
                self.coeffs[flat] = value;
                self.coeffs[p] = value.conj();
                Ok(())
            }
        }
    }

    /// Mean value, i.e. the `h = 0` coefficient.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Data("non-finite spectral coefficient".into()))
        }
    }

    fn check_same_lattice(&self, other: &SpectralField) -> Result<()> {
        if self.lattice.compatible(&other.lattice) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "fields live on different lattices ({:?} vs {:?})",
                self.lattice.sizes(),
                other.lattice.sizes()
            )))
        }
    }

    /// Largest `|φ̂(h) - conj(φ̂(-h))|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..self.coeffs.len())
            .filter_map(|i| self.lattice.partner(i).map(|p| (self.coeffs[i] - self.coeffs[p].conj()).norm()))
            .fold(0.0, f64::max);
        worst / scale
    }

    /// Values on the lifted collocation grid (row-major, `∏ N_j` points).
    pub fn to_collocation(&self) -> Result<Vec<f64>> {
        self.to_collocation_with(Dealias::Off)
    }

    /// Values on the native grid, or on the 3/2-padded grid.
    pub fn to_collocation_with(&self, dealias: Dealias) -> Result<Vec<f64>> {
        self.check_finite()?;
        let mut buf = match dealias {
            Dealias::Off => self.coeffs.clone(),
            Dealias::ThreeHalves => self.embed_padded(),
        };
        grid_fft(&self.lattice, dealias).inverse(&mut buf);
        Ok(buf.into_iter().map(|c| c.re).collect())
    }

    pub fn from_collocation(lattice: Arc<PMLattice>, values: &[f64]) -> Result<Self> {
        Self::from_collocation_with(lattice, values, Dealias::Off)
    }

    pub fn from_collocation_with(
        lattice: Arc<PMLattice>,
        values: &[f64],
        dealias: Dealias,
    ) -> Result<Self> {
        let fft = grid_fft(&lattice, dealias);
        if values.len() != fft.len() {
            return Err(Error::Shape(format!(
                "{} collocation values for a grid of {} points",
                values.len(),
                fft.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite collocation value".into()));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut buf);
        let norm = 1.0 / fft.len() as f64;
        let coeffs = match dealias {
            Dealias::Off => buf.into_iter().map(|c| c * norm).collect(),
            Dealias::ThreeHalves => {
                let padded = padded_positions(&lattice);
                padded.into_iter().map(|p| buf[p] * norm).collect()
            }
        };
        let mut field = Self { lattice, coeffs };
        field.symmetrize();
        Ok(field)
    }

    fn embed_padded(&self) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); self.lattice.padded_fft().len()];
        for (c, p) in self.coeffs.iter().zip(padded_positions(&self.lattice)) {
            buf[p] = *c;
        }
        buf
    }

    /// Restores exact Hermitian symmetry and zeroes unmatched Nyquist modes.
    fn symmetrize(&mut self) {
        for i in 0..self.coeffs.len() {
            match self.lattice.partner(i) {
                None => self.coeffs[i] = Complex64::default(),
                Some(p) if p == i => self.coeffs[i].im = 0.0,
                Some(p) if p > i => {
                    let avg = (self.coeffs[i] + self.coeffs[p].conj()) * 0.5;
                    self.coeffs[i] = avg;
                    self.coeffs[p] = avg.conj();
                }
                Some(_) => {}
            }
        }
    }

    /// Almost-periodic inner product `Σ_h f̂(h) conj(ĝ(h))`, exact for
    /// band-limited fields. Summed pairwise in storage order.
    pub fn inner_product_ap(&self, other: &SpectralField) -> Result<f64> {
        self.check_same_lattice(other)?;
        let (a, b) = (&self.coeffs, &other.coeffs);
        let re = pairwise_sum(a.len(), &|i| a[i].re * b[i].re + a[i].im * b[i].im);
        let im = pairwise_sum(a.len(), &|i| a[i].im * b[i].re - a[i].re * b[i].im);
        let scale = (self.norm_sq() * other.norm_sq()).sqrt();
        if im.abs() > IMAG_RESIDUE_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Data(format!(
                "inner product has imaginary residue {im:e}; fields are not real"
            )));
        }
        Ok(re)
    }

    /// `‖f‖²_AP`.
    pub fn norm_sq(&self) -> f64 {
        let a = &self.coeffs;
        pairwise_sum(a.len(), &|i| a[i].norm_sqr())
    }

    pub fn norm_ap(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ_h w(h) |f̂(h)|²` for a real per-mode weight.
    pub fn weighted_norm_sq(&self, weights: &[f64]) -> f64 {
        let a = &self.coeffs;
        pairwise_sum(a.len(), &|i| weights[i] * a[i].norm_sqr())
    }

    /// Pointwise product of 2 or more factors evaluated on the collocation grid.
    pub fn pseudo_product(factors: &[&SpectralField]) -> Result<SpectralField> {
        Self::pseudo_product_with(factors, Dealias::Off)
    }

    pub fn pseudo_product_with(factors: &[&SpectralField], dealias: Dealias) -> Result<SpectralField> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::Shape("pseudo_product needs at least one factor".into()))?;
        let mut acc = first.to_collocation_with(dealias)?;
        for f in rest {
            first.check_same_lattice(f)?;
            let vals = f.to_collocation_with(dealias)?;
            acc.iter_mut().zip(&vals).for_each(|(a, v)| *a *= v);
        }
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in pseudospectral product".into()));
        }
        Self::from_collocation_with(first.lattice.clone(), &acc, dealias)
    }

    /// Copy with the mean coefficient set to exactly zero.
    pub fn project_mean_zero(&self) -> SpectralField {
        let mut out = self.clone();
        out.set_mean_zero();
        out
    }

    pub fn set_mean_zero(&mut self) {
        self.coeffs[0] = Complex64::default();
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * x`. Panics if the lattices differ.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        self.assert_same(x);
        self.coeffs.iter_mut().zip(&x.coeffs).for_each(|(c, v)| *c += v * a);
    }

    /// `a * x + b * y`. Panics if the lattices differ.
    pub fn lin_comb(a: f64, x: &SpectralField, b: f64, y: &SpectralField) -> SpectralField {
        x.assert_same(y);
        let coeffs = x.coeffs.iter().zip(&y.coeffs).map(|(u, v)| u * a + v * b).collect();
        SpectralField {
            lattice: x.lattice.clone(),
            coeffs,
        }
    }

    /// Multiplies each coefficient by a real per-mode factor.
    pub fn mul_diagonal(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.coeffs.len());
        self.coeffs.iter_mut().zip(diag).for_each(|(c, d)| *c *= *d);
    }

    /// Divides each coefficient by a real per-mode factor.
    pub fn div_diagonal(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.coeffs.len());
        self.coeffs.iter_mut().zip(diag).for_each(|(c, d)| *c /= *d);
    }

    fn assert_same(&self, other: &SpectralField) {
        assert!(
            self.lattice.compatible(&other.lattice),
            "field arithmetic across different lattices"
        );
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &SpectralField) -> Result<f64> {
        self.check_same_lattice(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

fn grid_fft(lattice: &PMLattice, dealias: Dealias) -> &NdFft {
    match dealias {
        Dealias::Off => lattice.fft(),
        Dealias::ThreeHalves => lattice.padded_fft(),
    }
}

// Storage position of each native mode inside the padded buffer.
fn padded_positions(lattice: &PMLattice) -> Vec<usize> {
    let dims = lattice.padded_fft().dims().to_vec();
    lattice
        .modes()
        .map(|h| {
            h.iter()
                .zip(&dims)
                .fold(0usize, |acc, (&x, &m)| acc * m + x.rem_euclid(m as i64) as usize)
        })
        .collect()
}

/// Pairwise (cascade) summation of `term(0..n)`; fixed reduction tree.
pub(crate) fn pairwise_sum(n: usize, term: &dyn Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, term: &dyn Fn(usize) -> f64) -> f64 {
        if hi - lo <= 64 {
            (lo..hi).map(term).sum()
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, n, term)
}
