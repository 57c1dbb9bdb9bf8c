#![allow(dead_code)]

use std::sync::Arc;

use ipfc::{IpfcModel, ModelParams, PMLattice, SpectralField};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn lattice(sizes: &[usize]) -> Arc<PMLattice> {
    Arc::new(PMLattice::periodic(sizes).unwrap())
}

/// Random real grid values mapped to a Hermitian coefficient field.
pub fn random_field(lattice: &Arc<PMLattice>, rng: &mut ChaCha8Rng, amp: f64) -> SpectralField {
    let values: Vec<f64> = (0..lattice.num_modes())
        .map(|_| amp * rng.gen_range(-1.0..1.0))
        .collect();
    SpectralField::from_collocation(Arc::clone(lattice), &values).unwrap()
}

/// Keeps only modes with every `|h_j| <= band`.
pub fn band_limit(f: &SpectralField, band: i64) -> SpectralField {
    let lattice = Arc::clone(f.lattice());
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if lattice.mode(i).iter().all(|h| h.abs() <= band) {
                *c
            } else {
                Default::default()
            }
        })
        .collect();
    SpectralField::from_coeffs(lattice, coeffs).unwrap()
}

pub fn two_scale_1d_model(n: usize) -> IpfcModel {
    let params = ModelParams::new(vec![2f64.sqrt(), 3f64.sqrt()], 10.0, 4.0, 1e16).unwrap();
    IpfcModel::new(params, lattice(&[n])).unwrap()
}

pub fn diff_norm(a: &SpectralField, b: &SpectralField) -> f64 {
    SpectralField::lin_comb(1.0, a, -1.0, b).norm_ap()
}
