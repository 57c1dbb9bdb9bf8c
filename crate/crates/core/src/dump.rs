//! `IPFC1` spectral dumps.
//!
//! Layout: the ASCII header `IPFC1 <n> <N_1> … <N_n>\n`, then `∏ N_j`
//! little-endian `(re, im)` f64 pairs in storage order. The lattice geometry
//! is not part of the file; the reader supplies a lattice with matching sizes.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::PMLattice;

const MAGIC: &str = "IPFC1";

pub fn write_dump<W: Write>(mut out: W, field: &SpectralField) -> Result<()> {
    let mut header = String::from(MAGIC);
    let sizes = field.lattice().sizes();
    header.push_str(&format!(" {}", sizes.len()));
    for s in sizes {
        header.push_str(&format!(" {s}"));
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(field.coeffs().len() * 16);
    for c in field.coeffs() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

/// Reads only the header, returning the truncation sizes.
pub fn read_header<R: BufRead>(input: &mut R) -> Result<Vec<usize>> {
    let mut line = Vec::new();
    input.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Data("truncated dump header".into()));
    }
    let text = std::str::from_utf8(&line[..line.len() - 1])
        .map_err(|_| Error::Data("dump header is not ASCII".into()))?;
    let mut parts = text.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::Data("not an IPFC1 dump".into()));
    }
    let parse = |s: Option<&str>| -> Result<usize> {
        s.and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("malformed dump header {text:?}")))
    };
    let n = parse(parts.next())?;
    let sizes = (0..n).map(|_| parse(parts.next())).collect::<Result<Vec<_>>>()?;
    if parts.next().is_some() || n == 0 {
        return Err(Error::Data(format!("malformed dump header {text:?}")));
    }
    Ok(sizes)
}

/// Reads a dump onto `lattice`, whose truncation must match the header.
pub fn read_dump<R: BufRead>(mut input: R, lattice: Arc<PMLattice>) -> Result<SpectralField> {
    let sizes = read_header(&mut input)?;
    if sizes != lattice.sizes() {
        return Err(Error::Shape(format!(
            "dump has sizes {sizes:?}, lattice has {:?}",
            lattice.sizes()
        )));
    }
    let mut bytes = vec![0u8; lattice.num_modes() * 16];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Data(format!("truncated dump payload: {e}")))?;
    let mut extra = [0u8; 1];
    if input.read(&mut extra)? != 0 {
        return Err(Error::Data("trailing bytes after dump payload".into()));
    }
    let coeffs = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    SpectralField::from_coeffs(lattice, coeffs)
}
