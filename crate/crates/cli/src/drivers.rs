//! Evolution and convergence drivers.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ipfc::sav::{self, SavState};
use ipfc::sdc::{self, SdcConfig};
use ipfc::{AuxScalar, IpfcModel, SpectralField};
use log::{info, warn};

use crate::config::{check_convergence_steps, RunConfig, Scheme};
use crate::error::{CliError, Result};
use crate::render::render_physical;

pub const CSV_HEADER: &str = "step,t,original_energy,modified_energy,R,mass_abs";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub step: usize,
    pub t: f64,
    pub original_energy: f64,
    pub modified_energy: f64,
    pub r: f64,
    pub mass_abs: f64,
}

impl EnergyRow {
    fn new(model: &IpfcModel, step: usize, t: f64, phi: &SpectralField, r: &AuxScalar) -> Result<Self> {
        Ok(EnergyRow {
            step,
            t,
            original_energy: model.energy(phi)?.total,
            modified_energy: model.gradient_energy(phi)? + r.squared_minus_c1(),
            r: r.value(),
            mass_abs: phi.coeffs()[0].norm(),
        })
    }

    fn is_finite(&self) -> bool {
        [self.original_energy, self.modified_energy, self.r]
            .iter()
            .all(|v| v.is_finite())
    }

    /// 17 significant digits.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.step, self.t, self.original_energy, self.modified_energy, self.r, self.mass_abs
        )
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub rows: Vec<EnergyRow>,
    pub final_field: SpectralField,
    pub dumps: Vec<PathBuf>,
}

/// Node indices to dump: every `every` steps (plus the last node) and the
/// node nearest to each requested time.
pub fn dump_steps(nodes: &[f64], every: Option<usize>, times: &[f64]) -> BTreeSet<usize> {
    let last = nodes.len() - 1;
    let mut steps = BTreeSet::new();
    if let Some(k) = every {
        steps.extend((0..=last).step_by(k.max(1)));
        steps.insert(last);
    }
    for &t in times {
        let nearest = (0..=last)
            .min_by(|&a, &b| (nodes[a] - t).abs().total_cmp(&(nodes[b] - t).abs()))
            .unwrap_or(0);
        if (nodes[nearest] - t).abs() > 0.0 {
            info!("dump time {t} snapped to node t = {}", nodes[nearest]);
        }
        steps.insert(nearest);
    }
    steps
}

/// CSV rows, dumps and renders for one run.
struct Recorder<'a> {
    cfg: &'a RunConfig,
    csv: Option<(PathBuf, BufWriter<File>)>,
    dump_at: BTreeSet<usize>,
    rows: Vec<EnergyRow>,
    dumps: Vec<PathBuf>,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a RunConfig, nodes: &[f64]) -> Result<Self> {
        let out = &cfg.output;
        let csv = match &out.energy_csv {
            Some(path) => {
                create_parent(path)?;
                let file = File::create(path).map_err(|e| CliError::io(path, e))?;
                let mut w = BufWriter::new(file);
                writeln!(w, "{CSV_HEADER}").map_err(|e| CliError::io(path, e))?;
                Some((path.clone(), w))
            }
            None => None,
        };
        if let Some(dir) = &out.dump_dir {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let dump_at = if out.dump_dir.is_some() {
            dump_steps(nodes, out.dump_every, &out.dump_times)
        } else {
            BTreeSet::new()
        };
        Ok(Recorder {
            cfg,
            csv,
            dump_at,
            rows: Vec::new(),
            dumps: Vec::new(),
        })
    }

    fn record(&mut self, row: EnergyRow, phi: &SpectralField) -> Result<()> {
        if let Some((path, w)) = &mut self.csv {
            writeln!(w, "{}", row.to_csv()).map_err(|e| CliError::io(&*path, e))?;
        }
        if self.dump_at.contains(&row.step) {
            self.dump(phi, &format!("phi_{:06}", row.step))?;
        }
        self.rows.push(row);
        Ok(())
    }

    fn dump(&mut self, phi: &SpectralField, stem: &str) -> Result<()> {
        let Some(dir) = &self.cfg.output.dump_dir else {
            return Ok(());
        };
        let path = dir.join(format!("{stem}.ipfc"));
        write_dump_file(&path, phi)?;
        if let Some(spec) = &self.cfg.output.render {
            render_physical(phi, spec)?.write(&dir.join(format!("{stem}.pgm")))?;
        }
        self.dumps.push(path);
        Ok(())
    }

    fn finish(mut self, final_field: SpectralField) -> Result<EvolveOutcome> {
        if let Some((path, w)) = &mut self.csv {
            w.flush().map_err(|e| CliError::io(&*path, e))?;
        }
        Ok(EvolveOutcome {
            rows: self.rows,
            final_field,
            dumps: self.dumps,
        })
    }

    /// Keeps the last finite state on disk, then reports the blow-up.
    fn blowup(mut self, last_good: &SpectralField, step: usize, detail: String) -> CliError {
        if let Some((path, w)) = &mut self.csv {
            if let Err(e) = w.flush() {
                warn!("could not flush {}: {e}", path.display());
            }
        }
        if let Err(e) = self.dump(last_good, "last_good") {
            warn!("could not write the last good state: {e}");
        }
        CliError::Blowup(format!("step {step}: {detail}"))
    }
}

pub fn write_dump_file(path: &Path, phi: &SpectralField) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    ipfc::dump::write_dump(BufWriter::new(file), phi).map_err(|e| match e {
        ipfc::Error::Io(io) => CliError::io(path, io),
        other => other.into(),
    })
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
        }
        _ => Ok(()),
    }
}

pub fn run_evolve(cfg: &RunConfig) -> Result<EvolveOutcome> {
    let model = cfg.build_model()?;
    let phi0 = cfg.initial_field(&model)?;
    let time = cfg.time()?;
    info!(
        "evolve: {} modes, scheme {:?}, T = {}, {} steps",
        model.lattice().num_modes(),
        time.scheme,
        time.t_end,
        time.steps
    );
    match time.scheme {
        Scheme::Cn => evolve_cn(cfg, &model, &phi0, &sav::uniform_nodes(time.t_end, time.steps)),
        Scheme::CnSdc => evolve_sdc(
            cfg,
            &model,
            &phi0,
            SdcConfig::new(time.t_end, time.steps).with_sweeps(time.sweeps),
        ),
    }
}

fn evolve_cn(cfg: &RunConfig, model: &IpfcModel, phi0: &SpectralField, nodes: &[f64]) -> Result<EvolveOutcome> {
    let mut rec = Recorder::new(cfg, nodes)?;
    let mut state: SavState = sav::init_state(model, phi0)?;
    let row = EnergyRow::new(model, 0, nodes[0], &state.phi, &state.r)?;
    rec.record(row, &state.phi)?;
    let report_every = (nodes.len() / 10).max(1);
    for (n, w) in nodes.windows(2).enumerate() {
        let next = match sav::cn_step(model, &state, w[1] - w[0]) {
            Ok(next) => next,
            Err(ipfc::Error::Blowup { detail, .. }) => return Err(rec.blowup(&state.phi, n + 1, detail)),
            Err(e) => return Err(e.into()),
        };
        let row = EnergyRow::new(model, n + 1, w[1], &next.phi, &next.r)?;
        if !row.is_finite() {
            return Err(rec.blowup(&state.phi, n + 1, "energy overflow".into()));
        }
        state = next;
        state.t = w[1];
        rec.record(row, &state.phi)?;
        if (n + 1) % report_every == 0 {
            info!(
                "step {} t = {:.6}: E = {:.10e}, modified = {:.10e}",
                n + 1,
                row.t,
                row.original_energy,
                row.modified_energy
            );
        }
    }
    rec.finish(state.phi)
}

/// Rows report the corrected field's original energy and the provisional
/// sweep's modified energy and `R`, which is what the scheme dissipates.
fn evolve_sdc(cfg: &RunConfig, model: &IpfcModel, phi0: &SpectralField, sdc_cfg: SdcConfig) -> Result<EvolveOutcome> {
    let nodes = sdc::chebyshev_nodes(sdc_cfg.t_end, sdc_cfg.nt)?;
    let mut rec = Recorder::new(cfg, &nodes)?;
    let traj = match sdc::integrate(model, phi0, &sdc_cfg) {
        Ok(traj) => traj,
        Err(ipfc::Error::Blowup { step, detail }) => {
            return Err(rec.blowup(&phi0.project_mean_zero(), step, detail))
        }
        Err(e) => return Err(e.into()),
    };
    let fields = if traj.phi_corr.is_empty() {
        &traj.phi_prov
    } else {
        &traj.phi_corr
    };
    for (n, phi) in fields.iter().enumerate() {
        let mut row = EnergyRow::new(model, n, nodes[n], phi, &traj.r_prov[n])?;
        row.modified_energy = model.gradient_energy(&traj.phi_prov[n])? + traj.r_prov[n].squared_minus_c1();
        if !row.is_finite() {
            let last = if n > 0 { &fields[n - 1] } else { phi };
            return Err(rec.blowup(last, n, "energy overflow".into()));
        }
        rec.record(row, phi)?;
    }
    let last = traj.final_field().clone();
    rec.finish(last)
}

/// Solution at `t_end` with `nt` steps of the chosen scheme.
pub fn solve_final(
    model: &IpfcModel,
    phi0: &SpectralField,
    scheme: Scheme,
    t_end: f64,
    nt: usize,
    sweeps: usize,
) -> Result<SpectralField> {
    Ok(match scheme {
        Scheme::Cn => sav::integrate_uniform(model, phi0, t_end, nt)?.phi,
        Scheme::CnSdc => {
            let cfg = SdcConfig::new(t_end, nt).with_sweeps(sweeps);
            sdc::integrate(model, phi0, &cfg)?.final_field().clone()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub nt: usize,
    pub error: f64,
    /// `log₂(e_prev / e)` against the previous row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub scheme: Scheme,
    pub reference: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn to_text(&self) -> String {
        let mut out = format!("scheme {:?}, reference NT = {}\nNT\terror\trate\n", self.scheme, self.reference);
        for r in &self.rows {
            let rate = r.rate.map_or("-".to_string(), |v| format!("{v:.4}"));
            out.push_str(&format!("{}\t{:.6e}\t{rate}\n", r.nt, r.error));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("nt,error,rate\n");
        for r in &self.rows {
            let rate = r.rate.map_or(String::new(), |v| format!("{v:.16e}"));
            out.push_str(&format!("{},{:.16e},{rate}\n", r.nt, r.error));
        }
        out
    }
}

/// Errors `‖φ_NT(T) − φ_ref(T)‖_AP` without checking that the reference is
/// finer than the tested resolutions.
pub fn convergence_table_unchecked(
    model: &IpfcModel,
    phi0: &SpectralField,
    scheme: Scheme,
    t_end: f64,
    steps: &[usize],
    reference: usize,
    sweeps: usize,
) -> Result<ConvergenceTable> {
    let exact = solve_final(model, phi0, scheme, t_end, reference, sweeps)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(steps.len());
    for &nt in steps {
        let phi = solve_final(model, phi0, scheme, t_end, nt, sweeps)?;
        let error = SpectralField::lin_comb(1.0, &phi, -1.0, &exact).norm_ap();
        let rate = rows.last().map(|prev| {
            (prev.error / error).log2() / (nt as f64 / prev.nt as f64).log2()
        });
        rows.push(ConvergenceRow { nt, error, rate });
    }
    Ok(ConvergenceTable {
        scheme,
        reference,
        rows,
    })
}

pub fn run_converge(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let conv = cfg
        .converge
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [converge] section".into()))?;
    check_convergence_steps(&conv.steps, conv.reference)?;
    let time = cfg.time()?;
    let model = cfg.build_model()?;
    let phi0 = cfg.initial_field(&model)?;
    let table = convergence_table_unchecked(
        &model,
        &phi0,
        time.scheme,
        time.t_end,
        &conv.steps,
        conv.reference,
        time.sweeps,
    )?;
    if let Some(path) = &conv.csv {
        create_parent(path)?;
        std::fs::write(path, table.to_csv()).map_err(|e| CliError::io(path, e))?;
    }
    Ok(table)
}
