//! Interpolatory quadrature over the subintervals of a node set.
//!
//! Row `n` of the weight matrix integrates the degree-`NT` interpolant of
//! nodal data over `[tⁿ, tⁿ⁺¹]`. Chebyshev–Lobatto node sets take a fast
//! path (Chebyshev coefficients of each Lagrange basis polynomial, exact
//! antiderivative, evaluation by a DCT-I); any other distinct node set is
//! integrated with Gauss–Legendre points and the barycentric interpolant,
//! which is exact for polynomials of degree `NT` as well.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// `NT × (NT+1)` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationWeights {
    intervals: usize,
    data: Vec<f64>,
}

impl IntegrationWeights {
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let w = self.intervals + 1;
        &self.data[n * w..(n + 1) * w]
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.row(n)[j]
    }

    /// `Σ_j S[n][j] f(t^j)`.
    pub fn integrate(&self, n: usize, values: &[f64]) -> f64 {
        self.row(n).iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Quadrature weights for strictly increasing `nodes`.
pub fn integration_weights(nodes: &[f64]) -> Result<IntegrationWeights> {
    if nodes.len() < 2 {
        return Err(Error::Config("need at least two quadrature nodes".into()));
    }
    if nodes.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("quadrature nodes must be finite".into()));
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "quadrature nodes must be distinct and strictly increasing".into(),
        ));
    }
    if is_chebyshev_lobatto(nodes) {
        Ok(chebyshev_weights(nodes[0], nodes[nodes.len() - 1], nodes.len() - 1))
    } else {
        Ok(direct_weights(nodes))
    }
}

fn is_chebyshev_lobatto(nodes: &[f64]) -> bool {
    let nt = nodes.len() - 1;
    let (a, b) = (nodes[0], nodes[nt]);
    let tol = 64.0 * f64::EPSILON * (b - a).abs().max(a.abs()).max(b.abs());
    nodes
        .iter()
        .enumerate()
        .all(|(n, &t)| (t - chebyshev_point(a, b, n, nt)).abs() <= tol)
}

pub(crate) fn chebyshev_point(a: f64, b: f64, n: usize, nt: usize) -> f64 {
    if n == 0 {
        a
    } else if n == nt {
        b
    } else {
        let half = 0.5 * (b - a);
        a + half - half * (n as f64 * PI / nt as f64).cos()
    }
}

/// Fast path for `tⁿ = a + (b−a)(1 − cos(nπ/NT))/2`.
///
/// With `x = (2t − a − b)/(b − a)`, node `n` sits at the Lobatto point
/// `y_m = cos(mπ/NT)`, `m = NT − n`.
fn chebyshev_weights(a: f64, b: f64, nt: usize) -> IntegrationWeights {
    let half_len = 0.5 * (b - a);
    let gamma = |k: usize| if k == 0 || k == nt { 2.0 } else { 1.0 };
    let fft = FftPlanner::new().plan_fft_forward(2 * nt);
    let mut buf = vec![Complex64::default(); 2 * nt];
    // cumulative[n][j] = ∫_a^{tⁿ} ℓ_j
    let mut cumulative = vec![0.0; (nt + 1) * (nt + 1)];
    let mut c = vec![0.0; nt + 3];
    let mut anti = vec![0.0; nt + 2];

    for j in 0..=nt {
        let m_j = nt - j;
        for (k, ck) in c.iter_mut().enumerate().take(nt + 1) {
            let angle = ((k * m_j) % (2 * nt)) as f64 * PI / nt as f64;
            *ck = 2.0 * angle.cos() / (nt as f64 * gamma(k) * gamma(m_j));
        }
        // antiderivative coefficients
        anti[1] = c[0] - 0.5 * c[2];
        for k in 2..=nt + 1 {
            anti[k] = (c[k - 1] - c[k + 1]) / (2.0 * k as f64);
        }
        anti[0] = -(1..=nt + 1)
            .map(|k| if k % 2 == 0 { anti[k] } else { -anti[k] })
            .sum::<f64>();
        // T_{NT+1} = T_{NT-1} on the Lobatto grid
        let folded_top = anti[nt + 1];
        anti[nt - 1] += folded_top;

        // DCT-I: I(y_m) = Σ_k anti[k] cos(kmπ/NT) via the even extension
        for k in 0..=nt {
            buf[k] = Complex64::new(anti[k], 0.0);
        }
        for k in 1..nt {
            buf[2 * nt - k] = Complex64::new(anti[k], 0.0);
        }
        fft.process(&mut buf);
        for (m, b) in buf.iter().enumerate().take(nt + 1) {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let value = 0.5 * (b.re + anti[0] + sign * anti[nt]);
            let n = nt - m;
            cumulative[n * (nt + 1) + j] = half_len * value;
        }
        anti[nt - 1] -= folded_top;
    }
    // the integral up to the first node is zero by construction
    cumulative[..=nt].fill(0.0);

    let mut data = vec![0.0; nt * (nt + 1)];
    for n in 0..nt {
        for j in 0..=nt {
            data[n * (nt + 1) + j] =
                cumulative[(n + 1) * (nt + 1) + j] - cumulative[n * (nt + 1) + j];
        }
    }
    IntegrationWeights {
        intervals: nt,
        data,
    }
}

/// Gauss–Legendre on each subinterval applied to the barycentric interpolant.
fn direct_weights(nodes: &[f64]) -> IntegrationWeights {
    let nt = nodes.len() - 1;
    let (a, b) = (nodes[0], nodes[nt]);
    // work on [-1, 1]; the factor 2 keeps the products near unity
    let x: Vec<f64> = nodes.iter().map(|t| (2.0 * t - a - b) / (b - a)).collect();
    let bary: Vec<f64> = (0..=nt)
        .map(|j| {
            1.0 / (0..=nt)
                .filter(|&k| k != j)
                .map(|k| 2.0 * (x[j] - x[k]))
                .product::<f64>()
        })
        .collect();
    let (gl_x, gl_w) = gauss_legendre(nt / 2 + 1);

    let mut data = vec![0.0; nt * (nt + 1)];
    let mut basis = vec![0.0; nt + 1];
    for n in 0..nt {
        let (lo, hi) = (x[n], x[n + 1]);
        let half = 0.5 * (hi - lo);
        let row = &mut data[n * (nt + 1)..(n + 1) * (nt + 1)];
        for (&s, &w) in gl_x.iter().zip(&gl_w) {
            let xs = lo + half * (s + 1.0);
            let mut denom = 0.0;
            for j in 0..=nt {
                basis[j] = bary[j] / (xs - x[j]);
                denom += basis[j];
            }
            for j in 0..=nt {
                row[j] += w * half * basis[j] / denom;
            }
        }
        // back to t: dt = (b − a)/2 dx
        row.iter_mut().for_each(|v| *v *= 0.5 * (b - a));
    }
    IntegrationWeights {
        intervals: nt,
        data,
    }
}

/// Gauss–Legendre points and weights on `[-1, 1]` (Newton on `P_m`).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; m];
    let mut ws = vec![0.0; m];
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}
