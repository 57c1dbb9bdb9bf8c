//! Physical-space rendering by direct summation of the quasiperiodic series.

use std::path::Path;

use ipfc::SpectralField;
use num_complex::Complex64;

use crate::config::RenderSection;
use crate::error::{CliError, Result};
use crate::spectrum::in_positive_half;

/// Grayscale image with the value range it was scaled from.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
    pub min: f64,
    pub max: f64,
}

/// `φ(r) = Σ ĉ(h) e^{i k(h)·r}` at every pixel centre, row-major with the
/// top row (largest `y`) first. 1D fields give a single row.
pub fn sample_physical(f: &SpectralField, spec: &RenderSection) -> Result<(usize, usize, Vec<f64>)> {
    let lattice = f.lattice();
    let d = lattice.dim();
    if d > 2 {
        return Err(CliError::Config(format!(
            "cannot render a {d}D field; use the spectral dump instead"
        )));
    }
    if spec.bbox.len() != 2 * d {
        return Err(CliError::Config(format!("render bbox needs {} numbers", 2 * d)));
    }
    let width = spec.resolution[0];
    let height = if d == 1 { 1 } else { spec.resolution[1] };
    let centres = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| lo + (i as f64 + 0.5) * (hi - lo) / n as f64).collect()
    };
    let xs = centres(spec.bbox[0], spec.bbox[1], width);
    let mut ys = if d == 2 {
        centres(spec.bbox[2], spec.bbox[3], height)
    } else {
        vec![0.0]
    };
    ys.reverse();

    let mut values = vec![0.0; width * height];
    let mut ex = vec![Complex64::default(); width];
    let mut ey = vec![Complex64::default(); height];
    for (i, c) in f.coeffs().iter().enumerate() {
        if c.norm() <= spec.threshold {
            continue;
        }
        let h = lattice.mode(i);
        let weight = if h.iter().all(|&x| x == 0) {
            1.0
        } else if in_positive_half(&h) && lattice.partner(i).is_some() {
            // the partner −h contributes the complex conjugate
            2.0
        } else {
            continue;
        };
        let k = lattice.wavevector(&h)?;
        for (e, x) in ex.iter_mut().zip(&xs) {
            *e = Complex64::from_polar(1.0, k[0] * x);
        }
        for (e, y) in ey.iter_mut().zip(&ys) {
            *e = if d == 2 {
                weight * c * Complex64::from_polar(1.0, k[1] * y)
            } else {
                weight * c
            };
        }
        for (row, e_y) in values.chunks_mut(width).zip(&ey) {
            for (v, e_x) in row.iter_mut().zip(&ex) {
                *v += (e_y * e_x).re;
            }
        }
    }
    Ok((width, height, values))
}

/// Samples the field and maps `[min, max]` linearly onto `0..=255`.
pub fn render_physical(f: &SpectralField, spec: &RenderSection) -> Result<Image> {
    let (width, height, values) = sample_physical(f, spec)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) {
        return Err(CliError::Blowup("non-finite values in rendered field".into()));
    }
    let span = max - min;
    let pixels = values
        .iter()
        .map(|v| {
            if span > 0.0 {
                ((v - min) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    Ok(Image {
        width,
        height,
        pixels,
        min,
        max,
    })
}

impl Image {
    /// Binary PGM with a `# min=… max=…` comment.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!(
            "P5\n# min={:.17e} max={:.17e}\n{} {}\n255\n",
            self.min, self.max, self.width, self.height
        )
        .into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let bad = |what: &str| CliError::Config(format!("malformed PGM: {what}"));
        let mut lines = Vec::new();
        let mut pos = 0;
        while lines.len() < 4 {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("truncated header"))?;
            lines.push(std::str::from_utf8(&bytes[pos..pos + end]).map_err(|_| bad("header"))?);
            pos += end + 1;
        }
        if lines[0] != "P5" || lines[3] != "255" {
            return Err(bad("expected P5 with maxval 255"));
        }
        let mut range = lines[1].trim_start_matches('#').split_whitespace().map(|kv| {
            kv.split_once('=')
                .and_then(|(_, v)| v.parse::<f64>().ok())
                .ok_or_else(|| bad("min/max comment"))
        });
        let min = range.next().ok_or_else(|| bad("min/max comment"))??;
        let max = range.next().ok_or_else(|| bad("min/max comment"))??;
        let dims: Vec<usize> = lines[2]
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("dimensions")))
            .collect::<Result<_>>()?;
        let [width, height] = dims[..] else {
            return Err(bad("dimensions"));
        };
        let pixels = bytes[pos..].to_vec();
        if pixels.len() != width * height {
            return Err(bad("pixel count"));
        }
        Ok(Image {
            width,
            height,
            pixels,
            min,
            max,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm()).map_err(|e| CliError::io(path, e))
    }
}
