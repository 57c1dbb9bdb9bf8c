//! Second-order SAV/Crank–Nicolson stepper.
//!
//! With the auxiliary scalar `R = √F₁(φ)` the flow `φ_t = -W(φ)` is advanced by
//!
//! ```text
//! (φⁿ⁺¹ − φⁿ)/τ = −[G²(φⁿ⁺¹ + φⁿ)/2 + (Rⁿ⁺¹ + Rⁿ)/2 · ū]
//! Rⁿ⁺¹ − Rⁿ     = ½ ⟨ū, φⁿ⁺¹ − φⁿ⟩
//! ū = N'(φ̄)/√F₁(φ̄),  φ̄ = (3φⁿ − φⁿ⁻¹)/2
//! ```
//!
//! which is linear in `φⁿ⁺¹` with a rank-one coupling; it is solved with two
//! diagonal solves and one scalar equation. `ū` is projected onto mean-zero
//! fields so the dynamics stay on the mass-conserving subspace.
//!
//! The first step has no `φⁿ⁻¹` and uses `φ̄ = φ⁰`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::PMLattice;
use crate::model::IpfcModel;

/// `R` stored as `s·(√C₁ + dev)` with a sign `s = ±1`.
///
/// With `C₁ = 1e16` the scalar itself is ~1e8 while per-step increments are
/// ~1e-8, below one ulp of `R`. Carrying the deviation separately keeps
/// those increments and the modified energy `R² − C₁` at full precision.
/// The sign covers steps so large that `R` is reflected through zero
/// (`Rⁿ⁺¹ ≈ −Rⁿ`), where a plain deviation from `√C₁` would grow to `2√C₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxScalar {
    base: f64,
    // base² − C₁, exact
    base_residual: f64,
    dev: f64,
    negative: bool,
}

impl AuxScalar {
    /// `R = √(bulk + C₁)` given `bulk = ⟨N(φ),1⟩`.
    pub fn from_bulk(bulk: f64, c1: f64) -> Self {
        let base = c1.sqrt();
        let base_residual = base.mul_add(base, -c1);
        let dev = (bulk - base_residual) / ((bulk + c1).sqrt() + base);
        Self {
            base,
            base_residual,
            dev,
            negative: false,
        }
    }

    fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn value(&self) -> f64 {
        self.sign() * (self.base + self.dev)
    }

    /// `|R| − √C₁` (up to the rounding of `√C₁`).
    pub fn deviation(&self) -> f64 {
        self.dev
    }

    /// `R² − C₁`.
    pub fn squared_minus_c1(&self) -> f64 {
        self.base_residual + self.dev * (2.0 * self.base + self.dev)
    }

    /// The next value given both `Rⁿ⁺¹ − Rⁿ` and `Rⁿ⁺¹ + Rⁿ`. Whichever is
    /// smaller is the one known to full precision and is used.
    pub fn advanced(&self, difference: f64, sum: f64) -> Self {
        if difference.abs() <= sum.abs() || !sum.is_finite() {
            Self {
                dev: self.dev + self.sign() * difference,
                ..*self
            }
        } else {
            let negative = !self.negative;
            let sign = if negative { -1.0 } else { 1.0 };
            Self {
                dev: self.dev + sign * sum,
                negative,
                ..*self
            }
        }
    }

    /// `R_b² − R_a²`, formed without cancellation.
    pub fn squared_increment(&self, next: &AuxScalar) -> f64 {
        (next.dev - self.dev) * (2.0 * self.base + next.dev + self.dev)
    }

    pub fn is_finite(&self) -> bool {
        self.dev.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct SavState {
    pub phi: SpectralField,
    pub phi_prev: Option<SpectralField>,
    pub r: AuxScalar,
    pub t: f64,
    pub step_index: usize,
}

impl SavState {
    pub fn lattice(&self) -> &Arc<PMLattice> {
        self.phi.lattice()
    }
}

/// Quantities frozen during one step; the deferred correction reuses them.
#[derive(Debug, Clone)]
pub struct StepDetail {
    pub tau: f64,
    /// `φ̄ⁿ⁺¹ᐟ²`
    pub extrapolant: SpectralField,
    /// `√F₁(φ̄ⁿ⁺¹ᐟ²)`
    pub sqrt_f1: f64,
    /// `ū = N'(φ̄)/√F₁(φ̄)`, mean-zero
    pub ubar: SpectralField,
    /// `Rⁿ⁺¹ᐟ²`
    pub r_half: f64,
}

pub fn init_state(model: &IpfcModel, phi0: &SpectralField) -> Result<SavState> {
    let phi = phi0.project_mean_zero();
    let bulk = model.bulk_energy(&phi)?;
    model.f1_from_bulk(bulk)?;
    Ok(SavState {
        phi,
        phi_prev: None,
        r: AuxScalar::from_bulk(bulk, model.params().c1),
        t: 0.0,
        step_index: 0,
    })
}

/// `φ̄ⁿ⁺¹ᐟ² = (3φⁿ − φⁿ⁻¹)/2`, or `φⁿ` before the first step.
pub fn extrapolant(state: &SavState) -> SpectralField {
    match &state.phi_prev {
        Some(prev) => SpectralField::lin_comb(1.5, &state.phi, -0.5, prev),
        None => state.phi.clone(),
    }
}

pub fn cn_step(model: &IpfcModel, state: &SavState, tau: f64) -> Result<SavState> {
    cn_step_detailed(model, state, tau).map(|(s, _)| s)
}

pub fn cn_step_detailed(
    model: &IpfcModel,
    state: &SavState,
    tau: f64,
) -> Result<(SavState, StepDetail)> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {tau}")));
    }
    let step = state.step_index;
    let blowup = |e: Error| match e {
        Error::Data(detail) => Error::Blowup { step, detail },
        other => other,
    };

    let bar = extrapolant(state);
    let nl = model.nonlinear(&bar).map_err(blowup)?;
    let sqrt_f1 = model.f1_from_bulk(nl.bulk)?.sqrt();
    let mut ubar = nl.derivative;
    ubar.set_mean_zero();
    ubar.scale(1.0 / sqrt_f1);

    // Solved for the increment δ = φⁿ⁺¹ − φⁿ:
    //   (I + τ/2 G²) δ = −τ (G²φⁿ + Rⁿ⁺¹ᐟ² ū),  Rⁿ⁺¹ᐟ² = Rⁿ + ¼⟨ū,δ⟩.
    // Working with δ instead of φⁿ⁺¹ avoids cancelling the large
    // ⟨ū,φⁿ⟩ū terms when φ grows along the kernel of G.
    let mu = model.symbol_sq();
    let implicit: Vec<f64> = mu.iter().map(|m| 1.0 + 0.5 * tau * m).collect();
    let phi = &state.phi;
    let r = state.r.value();

    let mut ainv_u = ubar.clone();
    ainv_u.div_diagonal(&implicit);
    let gamma = ubar.inner_product_ap(&ainv_u).map_err(blowup)?;
    let mut ainv_mu_phi = phi.clone();
    let ratio: Vec<f64> = mu.iter().zip(&implicit).map(|(m, a)| m / a).collect();
    ainv_mu_phi.mul_diagonal(&ratio);
    let u_mu_phi = ubar.inner_product_ap(&ainv_mu_phi).map_err(blowup)?;
    // ⟨ū,δ⟩ = −τ⟨ū,A⁻¹G²φ⟩ − τRⁿ⁺¹ᐟ²γ closes the scalar equation. The
    // increment of R is taken from its closed form rather than from the
    // inner product with δ, which loses digits once φ is large.
    // Rⁿ⁺¹ᐟ² is also solved for directly: forming it as a midpoint cancels
    // when γ is large and Rⁿ⁺¹ ≈ −Rⁿ.
    let denom = 1.0 + 0.25 * tau * gamma;
    let dr = -0.5 * tau * (u_mu_phi + r * gamma) / denom;
    let r_half = (r - 0.25 * tau * u_mu_phi) / denom;
    let r_next = state.r.advanced(dr, 2.0 * r_half);

    let mut increment = ainv_mu_phi;
    increment.scale(-tau);
    increment.axpy(-tau * r_half, &ainv_u);
    increment.set_mean_zero();
    let next = SpectralField::lin_comb(1.0, phi, 1.0, &increment);

    if !(next.is_finite() && r_next.is_finite()) {
        return Err(Error::Blowup {
            step,
            detail: "non-finite solution".into(),
        });
    }

    let detail = StepDetail {
        tau,
        extrapolant: bar,
        sqrt_f1,
        ubar,
        r_half,
    };
    let new_state = SavState {
        phi: next,
        phi_prev: Some(state.phi.clone()),
        r: r_next,
        t: state.t + tau,
        step_index: step + 1,
    };
    Ok((new_state, detail))
}

/// `½‖Gφⁿ‖² + (Rⁿ)² − C₁`, the energy the scheme dissipates.
pub fn modified_energy(model: &IpfcModel, state: &SavState) -> Result<f64> {
    Ok(model.gradient_energy(&state.phi)? + state.r.squared_minus_c1())
}

/// Steps through the time nodes `nodes[0] < nodes[1] < …`, calling
/// `observe` after every step.
pub fn integrate_nodes<F>(
    model: &IpfcModel,
    phi0: &SpectralField,
    nodes: &[f64],
    mut observe: F,
) -> Result<SavState>
where
    F: FnMut(&SavState, &StepDetail) -> Result<()>,
{
    let mut state = init_state(model, phi0)?;
    if let Some(&t0) = nodes.first() {
        state.t = t0;
    }
    for w in nodes.windows(2) {
        let (next, detail) = cn_step_detailed(model, &state, w[1] - w[0])?;
        state = next;
        state.t = w[1];
        observe(&state, &detail)?;
    }
    Ok(state)
}

/// Uniform nodes `0, T/steps, …, T`.
pub fn uniform_nodes(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| {
            if i == steps {
                t_end
            } else {
                t_end * i as f64 / steps as f64
            }
        })
        .collect()
}

/// Plain SAV/CN with `steps` uniform steps to `t_end`.
pub fn integrate_uniform(
    model: &IpfcModel,
    phi0: &SpectralField,
    t_end: f64,
    steps: usize,
) -> Result<SavState> {
    if steps == 0 || !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::Config("need steps >= 1 and T > 0".into()));
    }
    integrate_nodes(model, phi0, &uniform_nodes(t_end, steps), |_, _| Ok(()))
}
