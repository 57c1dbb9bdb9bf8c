//! Configuration-driven harness around the `ipfc` solver: initial-condition
//! presets, evolution and convergence drivers, physical-space rendering and
//! spectrum reports.

pub mod config;
pub mod drivers;
pub mod error;
pub mod presets;
pub mod render;
pub mod spectrum;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use ipfc::{PMLattice, SpectralField};

pub use config::RunConfig;
pub use error::{CliError, Result};

/// Reads an `IPFC1` dump. The lattice geometry comes from `cfg` when given
/// (its sizes must match the file), otherwise a periodic lattice is assumed.
pub fn load_dump(path: &Path, cfg: Option<&RunConfig>) -> Result<SpectralField> {
    let open = || -> Result<BufReader<File>> {
        Ok(BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?))
    };
    let sizes = ipfc::dump::read_header(&mut open()?)?;
    let lattice = match cfg {
        Some(cfg) => {
            let lattice = cfg.build_lattice()?;
            if lattice.sizes() != sizes.as_slice() {
                return Err(CliError::Config(format!(
                    "dump sizes {sizes:?} do not match the configured lattice {:?}",
                    lattice.sizes()
                )));
            }
            lattice
        }
        None => PMLattice::periodic(&sizes)?,
    };
    Ok(ipfc::dump::read_dump(open()?, Arc::new(lattice))?)
}
