//! Spectral deferred correction of the SAV/CN trajectory.
//!
//! A provisional solution `φ₀` is computed by SAV/CN on the Chebyshev grid
//! `tⁿ = T/2 − T/2·cos(nπ/NT)`. The error `ε = φ − φ₀` then satisfies
//!
//! ```text
//! (I + τ/2 G²) εⁿ⁺¹ = (I − τ/2 G²) εⁿ − ∫ W(φ₀) − φ₀ⁿ⁺¹ + φ₀ⁿ
//!                     − τ ρ {N'(φ̄₀ + ε̄) − N'(φ̄₀)}
//! ```
//!
//! with `ρ = Rⁿ⁺¹ᐟ²/√F₁(φ̄₀)` frozen from the provisional step and the
//! integral taken by interpolatory quadrature over all `NT+1` nodes. One
//! sweep lifts the second-order scheme to fourth order.
//!
//! The whole trajectory is kept in memory: `NT + 1` fields for each of the
//! provisional, evaluated, and corrected solutions.

pub mod quadrature;

use std::sync::Arc;

pub use quadrature::{integration_weights, IntegrationWeights};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::model::IpfcModel;
use crate::sav::{self, AuxScalar};

/// `tⁿ = T/2 − T/2·cos(nπ/NT)` for `n = 0..=NT`, with exact endpoints.
pub fn chebyshev_nodes(t_end: f64, nt: usize) -> Result<Vec<f64>> {
    if nt < 2 {
        return Err(Error::Config(format!("SDC needs NT >= 2, got {nt}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Config(format!("final time must be positive, got {t_end}")));
    }
    Ok((0..=nt)
        .map(|n| quadrature::chebyshev_point(0.0, t_end, n, nt))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdcConfig {
    pub t_end: f64,
    pub nt: usize,
    pub sweeps: usize,
}

impl SdcConfig {
    pub fn new(t_end: f64, nt: usize) -> Self {
        Self {
            t_end,
            nt,
            sweeps: 1,
        }
    }

    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        chebyshev_nodes(self.t_end, self.nt).map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct SdcTrajectory {
    pub nodes: Vec<f64>,
    pub phi_prov: Vec<SpectralField>,
    pub r_prov: Vec<AuxScalar>,
    /// `G²φ + N'(φ)` at every node, mean-zero, for the latest trajectory.
    pub w_eval: Vec<SpectralField>,
    pub eps: Vec<SpectralField>,
    pub phi_corr: Vec<SpectralField>,
    /// `Rⁿ⁺¹ᐟ²/√F₁(φ̄ⁿ⁺¹ᐟ²)` per interval, from the provisional sweep.
    pub ratio: Vec<f64>,
}

impl SdcTrajectory {
    /// Best available solution at the final node.
    pub fn final_field(&self) -> &SpectralField {
        self.phi_corr
            .last()
            .or(self.phi_prov.last())
            .expect("trajectory has at least one node")
    }
}

/// `W(φ) = G²φ + N'(φ)` projected onto mean-zero fields.
fn evaluate_w(model: &IpfcModel, phi: &SpectralField) -> Result<SpectralField> {
    let mut w = model.apply_g_squared(phi)?;
    w.axpy(1.0, &model.bulk_derivative(phi)?);
    w.set_mean_zero();
    Ok(w)
}

/// SAV/CN over the Chebyshev grid, keeping what the correction needs.
pub fn provisional_sweep(
    model: &IpfcModel,
    phi0: &SpectralField,
    cfg: &SdcConfig,
) -> Result<SdcTrajectory> {
    let nodes = chebyshev_nodes(cfg.t_end, cfg.nt)?;
    let init = sav::init_state(model, phi0)?;
    let mut phi_prov = Vec::with_capacity(nodes.len());
    let mut r_prov = Vec::with_capacity(nodes.len());
    let mut ratio = Vec::with_capacity(cfg.nt);
    phi_prov.push(init.phi.clone());
    r_prov.push(init.r);
    sav::integrate_nodes(model, phi0, &nodes, |state, detail| {
        phi_prov.push(state.phi.clone());
        r_prov.push(state.r);
        ratio.push(detail.r_half / detail.sqrt_f1);
        Ok(())
    })?;
    let w_eval = phi_prov
        .iter()
        .map(|phi| evaluate_w(model, phi))
        .collect::<Result<Vec<_>>>()?;
    let zero = SpectralField::zeros(Arc::clone(model.lattice()));
    Ok(SdcTrajectory {
        nodes,
        eps: vec![zero; phi_prov.len()],
        phi_corr: phi_prov.clone(),
        phi_prov,
        r_prov,
        w_eval,
        ratio,
    })
}

/// Runs `cfg.sweeps` correction passes. Each pass treats the latest
/// corrected trajectory as the one being corrected; `R` and the frozen
/// ratios stay at their provisional values.
pub fn correction_sweep(
    model: &IpfcModel,
    traj: &SdcTrajectory,
    cfg: &SdcConfig,
) -> Result<SdcTrajectory> {
    let nt = traj.nodes.len() - 1;
    if traj.phi_prov.len() != nt + 1 || traj.ratio.len() != nt || traj.w_eval.len() != nt + 1 {
        return Err(Error::Shape("incomplete provisional trajectory".into()));
    }
    let weights = integration_weights(&traj.nodes)?;
    let mut out = traj.clone();
    for sweep in 0..cfg.sweeps {
        if sweep > 0 {
            out.w_eval = out
                .phi_corr
                .iter()
                .map(|phi| evaluate_w(model, phi))
                .collect::<Result<Vec<_>>>()?;
        }
        let base = out.phi_corr.clone();
        let eps = correct_once(model, &base, &out.w_eval, &out.ratio, &traj.nodes, &weights)?;
        out.phi_corr = base
            .iter()
            .zip(&eps)
            .map(|(phi, e)| SpectralField::lin_comb(1.0, phi, 1.0, e))
            .collect();
        out.eps = eps;
    }
    Ok(out)
}

fn correct_once(
    model: &IpfcModel,
    base: &[SpectralField],
    w_eval: &[SpectralField],
    ratio: &[f64],
    nodes: &[f64],
    weights: &IntegrationWeights,
) -> Result<Vec<SpectralField>> {
    let nt = nodes.len() - 1;
    let mu = model.symbol_sq();
    let lattice = Arc::clone(model.lattice());
    let mut eps = Vec::with_capacity(nt + 1);
    eps.push(SpectralField::zeros(Arc::clone(&lattice)));
    let blowup = |n: usize| {
        move |e: Error| match e {
            Error::Data(detail) => Error::Blowup { step: n, detail },
            other => other,
        }
    };

    for n in 0..nt {
        let tau = nodes[n + 1] - nodes[n];
        let bar = if n == 0 {
            base[0].clone()
        } else {
            SpectralField::lin_comb(1.5, &base[n], -0.5, &base[n - 1])
        };
        let eps_bar = if n == 0 {
            eps[0].clone()
        } else {
            SpectralField::lin_comb(1.5, &eps[n], -0.5, &eps[n - 1])
        };

        let mut rhs = eps[n].clone();
        let explicit: Vec<f64> = mu.iter().map(|m| 1.0 - 0.5 * tau * m).collect();
        rhs.mul_diagonal(&explicit);

        // − ∫ W(φ₀) over [tⁿ, tⁿ⁺¹]
        for (j, w) in w_eval.iter().enumerate() {
            let s = weights.get(n, j);
            if s != 0.0 {
                rhs.axpy(-s, w);
            }
        }
        rhs.axpy(-1.0, &base[n + 1]);
        rhs.axpy(1.0, &base[n]);

        let shifted = SpectralField::lin_comb(1.0, &bar, 1.0, &eps_bar);
        let mut diff = model.bulk_derivative(&shifted).map_err(blowup(n))?;
        diff.axpy(-1.0, &model.bulk_derivative(&bar).map_err(blowup(n))?);
        diff.set_mean_zero();
        rhs.axpy(-tau * ratio[n], &diff);

        let implicit: Vec<f64> = mu.iter().map(|m| 1.0 + 0.5 * tau * m).collect();
        rhs.div_diagonal(&implicit);
        rhs.set_mean_zero();
        if !rhs.is_finite() {
            return Err(Error::Blowup {
                step: n + 1,
                detail: format!("non-finite correction at node {}", n + 1),
            });
        }
        eps.push(rhs);
    }
    Ok(eps)
}

/// Provisional sweep followed by the configured number of corrections.
pub fn integrate(model: &IpfcModel, phi0: &SpectralField, cfg: &SdcConfig) -> Result<SdcTrajectory> {
    cfg.validate()?;
    let traj = provisional_sweep(model, phi0, cfg)?;
    if cfg.sweeps == 0 {
        return Ok(traj);
    }
    correction_sweep(model, &traj, cfg)
}
