use std::io::Write;
use std::path::{Path, PathBuf};

use quenchspec::asymptotics::{coeff_phi, coeff_zeta, AsymptoticLaw};
use quenchspec::bath::{CompositeSpectrum, NoiseModel, Spectral};
use quenchspec::control::{PulseSequence, SequenceConfig};
use quenchspec::dynamics::{CoherenceRecord, CoherenceTrace, Scenario, ScheduleShape};
use quenchspec::estimation::{
    reconstruct_spectral_function, thermometry_from_trace, Measurement, ReconstructionPlan,
};
use quenchspec::exactbath::{exact_coherence, gaussian_coherence, zeta_phi, DecomposeOptions, FiniteBath, SubspaceSchedule};
use quenchspec::io::{fmt_num, read_trace_csv, write_reconstruction_csv, write_trace_csv};
use quenchspec::quad::QuadOptions;
use quenchspec::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load, ReconstructManifest, ResolvedBath, ScenarioConfig};

/// Global options shared by all subcommands.
pub struct Global {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub oracle: bool,
}

impl Global {
    fn config_path(&self) -> Result<&Path> {
        self.config
            .as_deref()
            .ok_or_else(|| Error::Config("this command needs --config <path>".into()))
    }

    fn scenario(&self) -> Result<(ScenarioConfig, PathBuf)> {
        let path = self.config_path()?;
        let cfg: ScenarioConfig = load(path)?;
        cfg.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    fn writer(&self, out: Option<&Path>) -> Result<Box<dyn Write>> {
        Ok(match out {
            Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        })
    }
}

/// Output path for bath `i` of `n`: `stem_i.ext` when several baths are swept.
fn indexed(out: &Path, i: usize, n: usize) -> PathBuf {
    if n == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_{i}.{ext}"))
}

fn sidecar(out: &Path) -> PathBuf {
    out.with_extension("overlay.json")
}

fn switching_for(cfg: &ScenarioConfig, t_f: f64) -> Result<(PulseSequence, Option<SubspaceSchedule>)> {
    if let Some(plan) = cfg.sequence.nv_plan_at(t_f)? {
        return Ok((plan.sequence()?, Some(SubspaceSchedule::from_nv_plan(&plan))));
    }
    let seq = cfg.sequence.at(t_f)?;
    let sub = cfg
        .finite_bath
        .as_ref()
        .and_then(|f| f.subspace.clone())
        .map(|[up, down]| SubspaceSchedule::constant(&up, &down, t_f));
    Ok((seq, sub))
}

fn finite_bath(cfg: &ScenarioConfig, base: &Path) -> Result<FiniteBath> {
    cfg.finite_bath
        .as_ref()
        .ok_or_else(|| Error::Config("the exact oracle needs a `finite_bath` block".into()))?
        .build(base)
}

fn exact_trace(cfg: &ScenarioConfig, base: &Path, grid: &[f64]) -> Result<CoherenceTrace> {
    let bath = finite_bath(cfg, base)?;
    let records: Result<Vec<_>> = grid
        .par_iter()
        .map(|&t| {
            let (seq, sub) = switching_for(cfg, t)?;
            let (z, p) = zeta_phi(exact_coherence(&bath, &seq, sub.as_ref())?);
            Ok(CoherenceRecord::new(t, z, p, 0.0))
        })
        .collect();
    Ok(CoherenceTrace { records: records? })
}

fn schedule_of(cfg: &ScenarioConfig) -> Result<(ScheduleShape, f64)> {
    if let Some(plan) = cfg.sequence.nv_plan_at(1.0)? {
        let q = plan.quench();
        return Ok((ScheduleShape::Fractional { segments: q.eta.segments }, q.beta_v));
    }
    let sc = cfg.schedule.clone().unwrap_or_default();
    Ok((sc.shape()?, sc.beta_v()))
}

fn gaussian_trace(cfg: &ScenarioConfig, bath: &ResolvedBath, grid: &[f64], quad: QuadOptions) -> Result<CoherenceTrace> {
    let (schedule, beta_v) = schedule_of(cfg)?;
    let scen = Scenario {
        fractions: cfg.sequence.fractions()?,
        noise: bath.noise,
        spectral: bath.spectral.as_ref().map(|m| m as &dyn Spectral),
        schedule,
        beta_v,
        field: cfg.field.unwrap_or_default(),
        opts: quad,
    };
    scen.trace(grid)
}

type BathTrace = (Option<ResolvedBath>, CoherenceTrace);

/// Traces for every bath in the config (or one exact trace with --oracle).
fn traces(g: &Global) -> Result<(ScenarioConfig, Vec<BathTrace>)> {
    let (cfg, base) = g.scenario()?;
    let grid = cfg.grid()?;
    if g.oracle {
        let t = exact_trace(&cfg, &base, &grid)?;
        return Ok((cfg, vec![(None, t)]));
    }
    let baths = cfg.resolved_baths()?;
    if baths.is_empty() {
        return Err(Error::Config("missing `bath` block (or pass --oracle with `finite_bath`)".into()));
    }
    let quad = cfg.quad(g.tol);
    let mut out = Vec::new();
    for b in baths {
        let t = gaussian_trace(&cfg, &b, &grid, quad)?;
        out.push((Some(b), t));
    }
    Ok((cfg, out))
}

#[derive(Serialize)]
struct LawOverlay {
    #[serde(flatten)]
    law: AsymptoticLaw,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct Overlay {
    t_f: Vec<f64>,
    zeta: Option<LawOverlay>,
    phi_q: Option<LawOverlay>,
    notes: Vec<String>,
}

fn overlay(cfg: &ScenarioConfig, bath: &ResolvedBath, grid: &[f64]) -> Result<Overlay> {
    let seq = cfg.sequence.at(1.0)?;
    let mut notes = Vec::new();
    let law_values = |law: AsymptoticLaw| LawOverlay {
        values: grid.iter().map(|&t| law.eval(t)).collect(),
        law,
    };
    let zeta_law = match bath.noise {
        Some(NoiseModel::Freeform { p, s0, omega_ir: None, .. }) => Some((p, s0)),
        Some(NoiseModel::Thermal { spectral, kt }) => {
            Some((spectral.s - 1.0, 2.0 * kt * spectral.a0() * spectral.cutoff.phi(0.0)))
        }
        _ => None,
    };
    let zeta = match zeta_law.map(|(p, s0)| AsymptoticLaw::dephasing(p, s0, &seq)) {
        Some(Ok(l)) => Some(law_values(l)),
        Some(Err(e)) => {
            notes.push(format!("no dephasing overlay: {e}"));
            None
        }
        None => None,
    };
    let (shape, beta_v) = schedule_of(cfg)?;
    let phi_q = match (&bath.spectral, shape, cfg.sequence.nv_plan.is_some()) {
        (Some(m), ScheduleShape::Step, false) => match AsymptoticLaw::qps(m, beta_v, &seq) {
            Ok(l) => Some(law_values(l)),
            Err(e) => {
                notes.push(format!("no QPS overlay: {e}"));
                None
            }
        },
        (Some(_), _, _) => {
            notes.push("QPS overlay only defined for a step quench".into());
            None
        }
        _ => None,
    };
    Ok(Overlay {
        t_f: grid.to_vec(),
        zeta,
        phi_q,
        notes,
    })
}

pub fn trace(g: &Global) -> Result<()> {
    let (cfg, runs) = traces(g)?;
    let n = runs.len();
    if n > 1 && g.out.is_none() {
        return Err(Error::Config("several baths need --out to name the output files".into()));
    }
    for (i, (bath, tr)) in runs.iter().enumerate() {
        let path = g.out.as_ref().map(|o| indexed(o, i, n));
        write_trace_csv(tr, g.writer(path.as_deref())?)?;
        if let (Some(p), Some(b)) = (path, bath) {
            let ov = overlay(&cfg, b, &tr.t_f())?;
            std::fs::write(sidecar(&p), serde_json::to_string_pretty(&ov)? + "\n")?;
        }
    }
    Ok(())
}

pub fn nmeas(g: &Global) -> Result<()> {
    let (_, runs) = traces(g)?;
    let n = runs.len();
    if n > 1 && g.out.is_none() {
        return Err(Error::Config("several baths need --out to name the output files".into()));
    }
    for (i, (_, tr)) in runs.iter().enumerate() {
        let path = g.out.as_ref().map(|o| indexed(o, i, n));
        let mut w = g.writer(path.as_deref())?;
        writeln!(w, "t_f,zeta,phi,n_meas")?;
        for r in &tr.records {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_num(r.t_f),
                fmt_num(r.zeta),
                fmt_num(r.phi_q + r.phi_ext),
                fmt_num(r.n_meas)
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn thermometry(g: &Global, trace_csv: Option<&Path>) -> Result<()> {
    let (trace, window) = match (trace_csv, &g.config) {
        (Some(p), _) => {
            let f = std::fs::File::open(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            let window = match &g.config {
                Some(c) => load::<ScenarioConfig>(c)?.window(),
                None => Default::default(),
            };
            (read_trace_csv(f)?, window)
        }
        (None, Some(_)) => {
            let (cfg, mut runs) = traces(g)?;
            if runs.len() != 1 {
                return Err(Error::Config("thermometry takes a single bath".into()));
            }
            (runs.remove(0).1, cfg.window())
        }
        (None, None) => return Err(Error::Config("thermometry needs --trace <csv> or --config <path>".into())),
    };
    let res = thermometry_from_trace(&trace, &window)?;
    let mut w = g.writer(g.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&res)?)?;
    w.flush()?;
    Ok(())
}

pub fn reconstruct(g: &Global) -> Result<()> {
    let path = g.config_path()?;
    let man: ReconstructManifest = load(path)?;
    if man.plans.is_empty() {
        return Err(Error::Config("manifest has no plans".into()));
    }
    let truth = match &man.bath {
        Some(b) => {
            let parts: Result<Vec<_>> = b
                .to_vec()
                .iter()
                .map(|c| c.spectral()?.ok_or_else(|| Error::Config("manifest bath needs `alpha`".into())))
                .collect();
            Some(CompositeSpectrum { parts: parts? })
        }
        None => None,
    };
    let mut quad = QuadOptions::default();
    if let Some(q) = man.quadrature {
        quad.abs_tol = q.abs_tol.unwrap_or(quad.abs_tol);
        quad.rel_tol = q.rel_tol.unwrap_or(quad.rel_tol);
    }
    if let Some(t) = g.tol {
        quad.rel_tol = t;
    }
    let meas: Result<Vec<Measurement>> = man
        .plans
        .par_iter()
        .map(|p| {
            let nv = quenchspec::control::build_nv_plan(p.m, p.t)?;
            let rp = match (p.harmonics.as_ref().or(man.harmonics.as_ref()), man.omega_max) {
                (Some(h), _) => ReconstructionPlan::new(nv, h.clone())?,
                (None, Some(w)) => ReconstructionPlan::odd_harmonics_up_to(nv, w)?,
                (None, None) => ReconstructionPlan::new(nv, vec![1, 3, 5])?,
            };
            let phi_q = match (p.phi_q, &truth) {
                (Some(v), _) => v,
                (None, Some(m)) => rp.forward(m, &quad)?,
                (None, None) => {
                    return Err(Error::Config(
                        "plans without `phi_q` need a `bath` to synthesize it".into(),
                    ))
                }
            };
            Ok(Measurement { plan: rp, phi_q })
        })
        .collect();
    let rec = reconstruct_spectral_function(&meas?, &man.options())?;
    let jt = truth.as_ref().map(|m| move |w: f64| m.j(w));
    let w = g.writer(g.out.as_deref())?;
    match &jt {
        Some(f) => write_reconstruction_csv(&rec, Some(f), w)?,
        None => write_reconstruction_csv(&rec, None, w)?,
    }
    Ok(())
}

pub fn oracle(g: &Global) -> Result<()> {
    let (cfg, base) = g.scenario()?;
    let grid = cfg.grid()?;
    let bath = finite_bath(&cfg, &base)?;
    let rows: Result<Vec<[f64; 5]>> = grid
        .par_iter()
        .map(|&t| {
            let (seq, sub) = switching_for(&cfg, t)?;
            let (ze, pe) = zeta_phi(exact_coherence(&bath, &seq, sub.as_ref())?);
            let (zg, pg) = zeta_phi(gaussian_coherence(&bath, &seq, sub.as_ref(), &DecomposeOptions::default())?);
            Ok([t, ze, pe, zg, pg])
        })
        .collect();
    let rows = rows?;
    let mut w = g.writer(g.out.as_deref())?;
    writeln!(w, "t_f,zeta_exact,phi_exact,zeta_gaussian,phi_gaussian,abs_dzeta,abs_dphi")?;
    let (mut mz, mut mp) = (0.0f64, 0.0f64);
    for [t, ze, pe, zg, pg] in rows {
        let (dz, dp) = ((ze - zg).abs(), (pe - pg).abs());
        mz = mz.max(dz);
        mp = mp.max(dp);
        let cols = [t, ze, pe, zg, pg, dz, dp].map(fmt_num);
        writeln!(w, "{}", cols.join(","))?;
    }
    w.flush()?;
    eprintln!("{}", serde_json::json!({ "max_abs_dzeta": mz, "max_abs_dphi": mp }));
    Ok(())
}

pub fn coeffs(g: &Global, p_grid: &[f64], s_grid: &[f64], sequence: &str) -> Result<()> {
    let seq = match &g.config {
        Some(c) => load::<ScenarioConfig>(c)?.sequence.at(1.0)?,
        None => SequenceConfig {
            preset: Some(sequence.into()),
            ..Default::default()
        }
        .at(1.0)?,
    };
    if p_grid.is_empty() && s_grid.is_empty() {
        return Err(Error::Config("coeffs needs --p and/or --s values".into()));
    }
    let mut w = g.writer(g.out.as_deref())?;
    writeln!(w, "quantity,exponent,coefficient")?;
    for &p in p_grid {
        writeln!(w, "C_zeta,{},{}", fmt_num(p), fmt_num(coeff_zeta(p, &seq)?))?;
    }
    for &s in s_grid {
        writeln!(w, "C_phi,{},{}", fmt_num(s), fmt_num(coeff_phi(s, &seq)?))?;
    }
    w.flush()?;
    Ok(())
}
