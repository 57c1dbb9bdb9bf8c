//! The rescaled iPFC free energy
//!
//! ```text
//! F[φ] = ½‖Gφ‖²_AP + ⟨N(φ), 1⟩_AP,   G = ∏_j (Δ + q_j²),
//! N(φ) = ε/2 φ² − α/3 φ³ + ¼ φ⁴,
//! ```
//!
//! and its variational derivative `W(φ) = G²φ + N'(φ)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{pairwise_sum, Dealias, SpectralField};
use crate::lattice::{symbol_from_k_sq, PMLattice};

/// SAV shift used when none is configured.
pub const DEFAULT_C1: f64 = 1e16;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Characteristic length-scales `q_1..q_m`.
    pub scales: Vec<f64>,
    pub epsilon: f64,
    pub alpha: f64,
    /// Shift keeping `F₁ = ⟨N(φ),1⟩ + C₁` positive.
    pub c1: f64,
}

impl ModelParams {
    pub fn new(scales: Vec<f64>, epsilon: f64, alpha: f64, c1: f64) -> Result<Self> {
        let p = Self {
            scales,
            epsilon,
            alpha,
            c1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::Config("at least one length-scale is required".into()));
        }
        if self.scales.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
            return Err(Error::Config(format!(
                "length-scales must be positive, got {:?}",
                self.scales
            )));
        }
        if !(self.epsilon.is_finite() && self.alpha.is_finite()) {
            return Err(Error::Config("epsilon and alpha must be finite".into()));
        }
        if !(self.c1.is_finite() && self.c1 > 0.0) {
            return Err(Error::Config(format!("C1 must be positive, got {}", self.c1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub total: f64,
    /// `½‖Gφ‖²_AP`
    pub gradient_part: f64,
    /// `⟨N(φ), 1⟩_AP`
    pub bulk_part: f64,
}

/// Bulk nonlinearity evaluated in one collocation pass.
#[derive(Debug, Clone)]
pub struct Nonlinear {
    /// `N'(φ)`
    pub derivative: SpectralField,
    /// `⟨N(φ), 1⟩_AP`
    pub bulk: f64,
}

/// Model parameters bound to a lattice, with the symbol of `G` tabulated.
#[derive(Debug, Clone)]
pub struct IpfcModel {
    params: ModelParams,
    lattice: Arc<PMLattice>,
    symbol: Vec<f64>,
    symbol_sq: Vec<f64>,
    dealias: Dealias,
}

impl IpfcModel {
    pub fn new(params: ModelParams, lattice: Arc<PMLattice>) -> Result<Self> {
        params.validate()?;
        let symbol: Vec<f64> = (0..lattice.num_modes())
            .map(|i| symbol_from_k_sq(&params.scales, lattice.k_squared(i)))
            .collect();
        let symbol_sq = symbol.iter().map(|l| l * l).collect();
        Ok(Self {
            params,
            lattice,
            symbol,
            symbol_sq,
            dealias: Dealias::Off,
        })
    }

    pub fn with_dealias(mut self, dealias: Dealias) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lattice(&self) -> &Arc<PMLattice> {
        &self.lattice
    }

    pub fn dealias(&self) -> Dealias {
        self.dealias
    }

    /// `λ(h)` per stored mode.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// `λ(h)²` per stored mode.
    pub fn symbol_sq(&self) -> &[f64] {
        &self.symbol_sq
    }

    fn check(&self, f: &SpectralField) -> Result<()> {
        if self.lattice.compatible(f.lattice()) {
            Ok(())
        } else {
            Err(Error::Shape("field lattice does not match the model lattice".into()))
        }
    }

    pub fn apply_g(&self, f: &SpectralField) -> Result<SpectralField> {
        self.check(f)?;
        let mut out = f.clone();
        out.mul_diagonal(&self.symbol);
        Ok(out)
    }

    pub fn apply_g_squared(&self, f: &SpectralField) -> Result<SpectralField> {
        self.check(f)?;
        let mut out = f.clone();
        out.mul_diagonal(&self.symbol_sq);
        Ok(out)
    }

    /// `N'(φ)` together with `⟨N(φ),1⟩`, from one trip to the grid.
    pub fn nonlinear(&self, f: &SpectralField) -> Result<Nonlinear> {
        self.check(f)?;
        let (eps, alpha) = (self.params.epsilon, self.params.alpha);
        let u = f.to_collocation_with(self.dealias)?;
        let bulk = pairwise_sum(u.len(), &|i| {
            let v = u[i];
            let v2 = v * v;
            0.5 * eps * v2 - alpha / 3.0 * v2 * v + 0.25 * v2 * v2
        }) / u.len() as f64;
        if !bulk.is_finite() {
            return Err(Error::Data("non-finite bulk energy".into()));
        }
        // the linear part is added in coefficient space, where it is exact
        let quad_cubic: Vec<f64> = u.iter().map(|&v| v * v * (v - alpha)).collect();
        if quad_cubic.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in bulk derivative".into()));
        }
        let mut derivative =
            SpectralField::from_collocation_with(self.lattice.clone(), &quad_cubic, self.dealias)?;
        derivative.axpy(eps, f);
        Ok(Nonlinear { derivative, bulk })
    }

    /// `N'(φ) = εφ − αφ² + φ³`.
    pub fn bulk_derivative(&self, f: &SpectralField) -> Result<SpectralField> {
        Ok(self.nonlinear(f)?.derivative)
    }

    /// `⟨N(φ),1⟩_AP`, the mean of the pointwise bulk density.
    pub fn bulk_energy(&self, f: &SpectralField) -> Result<f64> {
        self.check(f)?;
        let (eps, alpha) = (self.params.epsilon, self.params.alpha);
        let u = f.to_collocation_with(self.dealias)?;
        let bulk = pairwise_sum(u.len(), &|i| {
            let v2 = u[i] * u[i];
            0.5 * eps * v2 - alpha / 3.0 * v2 * u[i] + 0.25 * v2 * v2
        }) / u.len() as f64;
        if bulk.is_finite() {
            Ok(bulk)
        } else {
            Err(Error::Data("non-finite bulk energy".into()))
        }
    }

    /// `½‖Gφ‖²_AP`.
    pub fn gradient_energy(&self, f: &SpectralField) -> Result<f64> {
        self.check(f)?;
        Ok(0.5 * f.weighted_norm_sq(&self.symbol_sq))
    }

    pub fn energy(&self, f: &SpectralField) -> Result<Energy> {
        let gradient_part = self.gradient_energy(f)?;
        let bulk_part = self.bulk_energy(f)?;
        Ok(Energy {
            total: gradient_part + bulk_part,
            gradient_part,
            bulk_part,
        })
    }

    /// `F₁(φ) = ⟨N(φ),1⟩ + C₁`, required to be strictly positive.
    pub fn f1(&self, f: &SpectralField) -> Result<f64> {
        self.f1_from_bulk(self.bulk_energy(f)?)
    }

    pub(crate) fn f1_from_bulk(&self, bulk: f64) -> Result<f64> {
        let f1 = bulk + self.params.c1;
        if f1 > 0.0 {
            Ok(f1)
        } else {
            Err(Error::Config(format!(
                "F1 = <N(phi),1> + C1 = {f1:e} is not positive; raise C1 (currently {:e})",
                self.params.c1
            )))
        }
    }

    /// `W(φ) = G²φ + N'(φ)`.
    pub fn variational_derivative(&self, f: &SpectralField) -> Result<SpectralField> {
        let mut w = self.bulk_derivative(f)?;
        w.axpy(1.0, &self.apply_g_squared(f)?);
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn two_scale_1d_model(n: usize) -> IpfcModel {
        let lat = Arc::new(PMLattice::periodic(&[n]).unwrap());
        let p = ModelParams::new(vec![2f64.sqrt(), 3f64.sqrt()], 10.0, 4.0, DEFAULT_C1).unwrap();
        IpfcModel::new(p, lat).unwrap()
    }

    #[test]
    fn zero_field_is_fixed() {
        let m = two_scale_1d_model(16);
        let z = SpectralField::zeros(m.lattice().clone());
        assert_eq!(m.apply_g(&z).unwrap().norm_sq(), 0.0);
        assert_eq!(m.bulk_derivative(&z).unwrap().norm_sq(), 0.0);
        assert_eq!(m.variational_derivative(&z).unwrap().norm_sq(), 0.0);
        assert_eq!(m.energy(&z).unwrap().total, 0.0);
        assert_eq!(m.f1(&z).unwrap(), DEFAULT_C1);
    }

    #[test]
    fn g_scales_mode_by_symbol() {
        let m = two_scale_1d_model(16);
        let mut f = SpectralField::zeros(m.lattice().clone());
        f.set_pair(&[1], Complex64::new(1.0, 0.0)).unwrap();
        let g = m.apply_g(&f).unwrap();
        assert!((g.get(&[1]).unwrap() - 2.0).norm() < 1e-14);
        assert!((g.get(&[-1]).unwrap() - 2.0).norm() < 1e-14);
    }

    #[test]
    fn annihilated_mode_has_no_gradient_energy() {
        let lat = Arc::new(PMLattice::periodic(&[16, 16]).unwrap());
        let p = ModelParams::new(vec![1.0, 2.0], -2.0, 2.0, DEFAULT_C1).unwrap();
        let m = IpfcModel::new(p, lat.clone()).unwrap();
        let mut f = SpectralField::zeros(lat);
        f.set_pair(&[0, 2], Complex64::new(0.7, 0.0)).unwrap();
        assert_eq!(m.apply_g(&f).unwrap().norm_sq(), 0.0);
        assert_eq!(m.energy(&f).unwrap().gradient_part, 0.0);
    }

    #[test]
    fn constant_field_bulk_derivative() {
        let m = two_scale_1d_model(8);
        let c = 0.7;
        let mut f = SpectralField::zeros(m.lattice().clone());
        f.set_pair(&[0], Complex64::new(c, 0.0)).unwrap();
        let d = m.bulk_derivative(&f).unwrap();
        let want = 10.0 * c - 4.0 * c * c + c * c * c;
        assert!((d.mean() - want).abs() < 1e-13);
    }

    #[test]
    fn single_mode_energy_closed_form() {
        // f = 2a cos(x): <f²> = 2a², <f³> = 0, <f⁴> = 6a⁴
        let m = two_scale_1d_model(32);
        let a = 0.3;
        let mut f = SpectralField::zeros(m.lattice().clone());
        f.set_pair(&[1], Complex64::new(a, 0.0)).unwrap();
        let e = m.energy(&f).unwrap();
        let lambda = 2.0;
        let want = lambda * lambda * a * a + 10.0 * a * a + 1.5 * a.powi(4);
        assert!((e.total - want).abs() < 1e-13);
        let f1 = m.f1(&f).unwrap();
        assert!((f1 - (DEFAULT_C1 + 10.0 * a * a + 1.5 * a.powi(4))).abs() <= 2.0);
    }

    #[test]
    fn nonpositive_f1_is_a_config_error() {
        let lat = Arc::new(PMLattice::periodic(&[8]).unwrap());
        let p = ModelParams::new(vec![1.0], -10.0, 0.0, 1e-3).unwrap();
        let m = IpfcModel::new(p, lat.clone()).unwrap();
        let mut f = SpectralField::zeros(lat);
        f.set_pair(&[1], Complex64::new(0.2, 0.0)).unwrap();
        assert!(matches!(m.f1(&f), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(vec![], 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(vec![-1.0], 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(vec![1.0], 1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(vec![1.0], f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn tiny_mode_without_bulk_coefficients() {
        // ε = α = 0: W(φ) = λ²φ + φ³, the cubic overtone is O(a³)
        let lat = Arc::new(PMLattice::periodic(&[16]).unwrap());
        let p = ModelParams::new(vec![2f64.sqrt(), 3f64.sqrt()], 0.0, 0.0, DEFAULT_C1).unwrap();
        let m = IpfcModel::new(p, lat.clone()).unwrap();
        let a = 1e-4;
        let mut f = SpectralField::zeros(lat);
        f.set_pair(&[2], Complex64::new(a, 0.0)).unwrap();
        let w = m.variational_derivative(&f).unwrap();
        let lambda = (2.0 - 4.0) * (3.0 - 4.0);
        // φ = 2a cos 2x, φ³ = 2a³(3cos 2x + cos 6x): coefficient 3a³ at ±2, a³ at ±6
        assert!((w.get(&[2]).unwrap().re - (lambda * lambda * a + 3.0 * a.powi(3))).abs() < 1e-18);
        assert!((w.get(&[6]).unwrap().re - a.powi(3)).abs() < 1e-20);
    }
}
