//! Dominant-mode listing.

use ipfc::SpectralField;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub h: Vec<i64>,
    pub wavevector: Vec<f64>,
    pub magnitude: f64,
}

/// First nonzero component positive.
pub fn in_positive_half(h: &[i64]) -> bool {
    h.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// The `top_k` largest coefficients over the half-space `h > 0`; equal
/// magnitudes are ordered lexicographically by index.
pub fn spectrum_report(f: &SpectralField, top_k: usize) -> Vec<SpectrumEntry> {
    let lattice = f.lattice();
    let mut entries: Vec<SpectrumEntry> = f
        .coeffs()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let h = lattice.mode(i);
            // Nyquist modes have no partner and are always zero
            if !in_positive_half(&h) || lattice.partner(i).is_none() {
                return None;
            }
            let wavevector = lattice.wavevector(&h).ok()?;
            Some(SpectrumEntry {
                h,
                wavevector,
                magnitude: c.norm(),
            })
        })
        .collect();
    entries.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude).then_with(|| a.h.cmp(&b.h)));
    entries.truncate(top_k);
    entries
}

pub fn format_report(entries: &[SpectrumEntry]) -> String {
    let mut out = String::from("h\tk\t|coeff|\n");
    for e in entries {
        let h: Vec<String> = e.h.iter().map(|x| x.to_string()).collect();
        let k: Vec<String> = e.wavevector.iter().map(|x| format!("{x:.6}")).collect();
        out.push_str(&format!("({})\t({})\t{:.16e}\n", h.join(","), k.join(","), e.magnitude));
    }
    out
}
