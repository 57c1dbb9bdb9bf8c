//! Initial conditions.

use std::sync::Arc;

use ipfc::{PMLattice, SpectralField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::spectrum::in_positive_half;

pub const DDQC_AMPLITUDE: f64 = 0.3;

/// `amplitude · sin(k·r)` along the first lattice axis; `sin x` on the
/// plain 1D lattice.
pub fn sine(lattice: &Arc<PMLattice>, amplitude: f64) -> Result<SpectralField> {
    let mut f = SpectralField::zeros(Arc::clone(lattice));
    let mut h = vec![0; lattice.lattice_dim()];
    h[0] = 1;
    f.set_pair(&h, Complex64::new(0.0, -0.5 * amplitude))?;
    Ok(f)
}

/// The twelve unit directions of the dodecagonal lift, 30° apart.
pub fn ddqc_unit_modes() -> Vec<[i64; 4]> {
    let half = [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [-1, 0, 1, 0],
        [0, -1, 0, 1],
    ];
    let mut all = half.to_vec();
    all.extend(half.iter().map(|h| h.map(|x| -x)));
    all
}

/// The 24 seed indices: twelve on the unit ring, then twelve sums of
/// neighbouring unit directions on the ring of radius `2cos(π/12)`.
pub fn ddqc_seed_modes() -> Vec<[i64; 4]> {
    let unit = ddqc_unit_modes();
    let mut modes = unit.clone();
    for j in 0..12 {
        let (a, b) = (unit[j], unit[(j + 1) % 12]);
        modes.push([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
    }
    modes
}

/// Index permutation rotating the dodecagonal wavevectors by π/6.
pub fn ddqc_rotate(h: &[i64]) -> [i64; 4] {
    [-h[3], h[0], h[1] + h[3], h[2]]
}

/// Real coefficient `amplitude` on all 24 seed modes.
pub fn ddqc_seed(lattice: &Arc<PMLattice>, amplitude: f64) -> Result<SpectralField> {
    let mut f = SpectralField::zeros(Arc::clone(lattice));
    for h in ddqc_seed_modes() {
        f.set_pair(&h, Complex64::new(amplitude, 0.0))?;
    }
    Ok(f)
}

/// Hermitian, mean-zero, i.i.d. uniform coefficients on `|h_j| <= N_j/4`.
pub fn random(lattice: &Arc<PMLattice>, amplitude: f64, seed: u64) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(Arc::clone(lattice));
    let sizes = lattice.sizes().to_vec();
    for h in lattice.modes() {
        let in_band = h.iter().zip(&sizes).all(|(x, &n)| x.unsigned_abs() as usize <= n / 4);
        if in_band && in_positive_half(&h) {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            f.set_pair(&h, amplitude * c)?;
        }
    }
    Ok(f)
}
