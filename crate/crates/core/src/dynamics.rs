//! Dephasing ζ(t_f), quench phase shift Φ_q(t_f), external phase, coherence
//! and measurement cost, plus a time-domain evaluation of Φ_q.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{self, NoiseModel, Spectral};
use crate::control::{filter_freq, quench_freq, Piecewise, PulseSequence, QuenchSchedule, Segment};
use crate::error::{Error, Result};
use crate::quad::{self, OscProblem, OscTerm, QuadOptions, TrigKernel};

const MAX_DENOMINATOR: u64 = 1 << 14;

/// Exponential sum Σ c_j e^{iω t_j} mapped onto integer multiples of τ₀.
struct ExpSum {
    tau0: f64,
    kernel: TrigKernel,
}

fn exp_sum(terms: &[(f64, Complex64)], t_ref: f64) -> Option<ExpSum> {
    let fracs: Vec<f64> = terms.iter().map(|(t, _)| t / t_ref).collect();
    let q = quad::common_denominator(&fracs, MAX_DENOMINATOR, 1e-11)?;
    let tau0 = t_ref / q as f64;
    let mut merged: Vec<(i64, Complex64)> = Vec::new();
    for ((_, c), x) in terms.iter().zip(&fracs) {
        let k = (x * q as f64).round() as i64;
        match merged.iter_mut().find(|(j, _)| *j == k) {
            Some(e) => e.1 += c,
            None => merged.push((k, *c)),
        }
    }
    merged.retain(|(_, c)| c.norm() > 1e-14);
    merged.sort_by_key(|(k, _)| *k);
    Some(ExpSum {
        tau0,
        kernel: TrigKernel { terms: merged },
    })
}

fn jump_products(a: &[(f64, f64)], b: &[(f64, f64)], factor: Complex64) -> Vec<(f64, Complex64)> {
    // conj(Σ a_j e^{iωt_j}) · Σ b_k e^{iωs_k} = Σ a_j b_k e^{iω(s_k − t_j)}
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (t, ca) in a {
        for (s, cb) in b {
            out.push((s - t, factor * (ca * cb)));
        }
    }
    out
}

/// Re of Σ c_j e^{iωΔ_j} folded to non-negative Δ: returns true when it vanishes identically.
fn real_part_vanishes(terms: &[(f64, Complex64)], scale: f64) -> bool {
    let mut folded: Vec<(f64, f64)> = Vec::new();
    for (d, c) in terms {
        let key = d.abs();
        match folded.iter_mut().find(|(k, _)| (k - key).abs() <= 1e-12 * scale) {
            Some(e) => e.1 += c.re,
            None => folded.push((key, c.re)),
        }
    }
    let total: f64 = terms.iter().map(|(_, c)| c.norm()).sum();
    folded.iter().all(|(_, v)| v.abs() <= 1e-13 * total.max(1e-300))
}

/// Jump sum Σ c_j e^{iω n_j τ₀} on an integer grid, evaluated by a power recurrence.
struct GridSum {
    tau0: f64,
    offset: i64,
    coefs: Vec<f64>,
}

impl GridSum {
    fn new(jumps: &[(f64, f64)], tau0: f64) -> Option<Self> {
        let idx: Vec<i64> = jumps.iter().map(|(t, _)| (t / tau0).round() as i64).collect();
        for ((t, _), k) in jumps.iter().zip(&idx) {
            if (t / tau0 - *k as f64).abs() > 1e-9 {
                return None;
            }
        }
        let lo = *idx.iter().min()?;
        let hi = *idx.iter().max()?;
        let mut coefs = vec![0.0; (hi - lo + 1) as usize];
        for ((_, c), k) in jumps.iter().zip(&idx) {
            coefs[(k - lo) as usize] += c;
        }
        Some(GridSum { tau0, offset: lo, coefs })
    }

    fn eval(&self, w: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, w * self.tau0);
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coefs.iter().rev() {
            acc = acc * z + c;
        }
        acc * Complex64::from_polar(1.0, self.offset as f64 * w * self.tau0)
    }
}

fn check_low_frequency(exponent: f64, order: f64, what: &str) -> Result<()> {
    if exponent + order <= -1.0 {
        return Err(Error::NonIntegrable(format!(
            "{what}: integrand behaves as ω^{} near ω = 0",
            exponent + order
        )));
    }
    Ok(())
}

/// ζ(t_f) = (1/2π)∫₀^∞ |F[ω]|² S̄[ω] dω.
pub fn dephasing(seq: &PulseSequence, noise: &NoiseModel, opts: &QuadOptions) -> Result<f64> {
    let t_f = seq.t_f;
    let balanced = crate::control::check_balanced(seq);
    check_low_frequency(noise.low_exponent(), if balanced { 2.0 } else { 0.0 }, "dephasing")?;
    if !balanced {
        noise.at_zero().or_else(|e| {
            if noise.low_exponent() > -1.0 {
                Ok(0.0)
            } else {
                Err(e)
            }
        })?;
    }
    let jumps = seq.segments().jumps();
    let terms = jump_products(&jumps, &jumps, Complex64::new(1.0, 0.0));
    let es = exp_sum(&terms, t_f);
    let direct = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        filter_freq(seq, w).norm_sqr() * noise.eval(w) / (2.0 * PI)
    };
    let env = |w: f64| noise.eval(w) / (2.0 * PI * w * w);
    let l1: f64 = jumps.iter().map(|(_, c)| c.abs()).sum();
    let bound = |w: f64| l1 * l1 * noise.tail_bound(w, 2.0) / (2.0 * PI);
    let (tau0, kernel) = match es {
        Some(e) => (Some(e.tau0), e.kernel),
        None => (None, TrigKernel::default()),
    };
    let prob = OscProblem {
        direct: &direct,
        terms: vec![OscTerm {
            kernel,
            envelope: &env,
        }],
        tau0,
        cap: PI / (4.0 * t_f),
        knots: noise.knots(),
        scale: noise.scale(),
    };
    let r = quad::integrate_oscillatory(&prob, &bound, opts)?;
    Ok(r.value.max(0.0))
}

/// Φ_q for the step quench η = Θ(t)Θ(t_f − t):
/// 2β_V ∫₀^∞ (Re F[ω] − F[0]) 𝒥[ω]/ω dω.
pub fn qps_static<S: Spectral + ?Sized>(
    seq: &PulseSequence,
    model: &S,
    beta_v: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    if beta_v == 0.0 {
        return Ok(0.0);
    }
    let t_f = seq.t_f;
    let f0 = seq.f0();
    let balanced = crate::control::check_balanced(seq);
    let s = model.low_exponent();
    if s <= -2.0 {
        return Err(Error::NonIntegrable(format!(
            "quench phase diverges at low frequency for s = {s} ≤ −2"
        )));
    }
    if !balanced && s <= 0.0 {
        return Err(Error::NonIntegrable(format!(
            "unbalanced sequence needs ∫𝒥/ω < ∞, violated for s = {s}"
        )));
    }
    let jumps = seq.segments().jumps();
    let terms: Vec<(f64, Complex64)> = jumps
        .iter()
        .map(|(t, c)| (*t, Complex64::new(0.0, -c)))
        .collect();
    let es = exp_sum(&terms, t_f);
    let direct = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        2.0 * beta_v * (filter_freq(seq, w).re - f0) * model.j(w) / w
    };
    let env_osc = |w: f64| 2.0 * beta_v * model.j(w) / (w * w);
    let env_const = |w: f64| 2.0 * beta_v * model.j(w) / w;
    let l1: f64 = jumps.iter().map(|(_, c)| c.abs()).sum();
    let bound = |w: f64| {
        let mut b = l1 * model.tail_bound(w, 2.0);
        if f0 != 0.0 && !balanced {
            b += f0.abs() * model.tail_bound(w, 1.0);
        }
        2.0 * beta_v.abs() * b
    };
    let (tau0, kernel) = match es {
        Some(e) => (Some(e.tau0), e.kernel),
        None => (None, TrigKernel::default()),
    };
    let mut osc_terms = vec![OscTerm {
        kernel,
        envelope: &env_osc,
    }];
    if f0 != 0.0 && !balanced {
        osc_terms.push(OscTerm {
            kernel: TrigKernel::constant(-f0),
            envelope: &env_const,
        });
    }
    let prob = OscProblem {
        direct: &direct,
        terms: osc_terms,
        tau0,
        cap: PI / (4.0 * t_f),
        knots: model.knots(),
        scale: model.scale(),
    };
    Ok(quad::integrate_oscillatory(&prob, &bound, opts)?.value)
}

/// Φ_q for a general schedule: (β_V/π)∫₀^∞ [Re(F*η) Re G^R − Im(F*η) Im G^R] dω.
pub fn qps_general<S: Spectral + ?Sized>(
    seq: &PulseSequence,
    sched: &QuenchSchedule,
    model: &S,
    opts: &QuadOptions,
) -> Result<f64> {
    let beta = sched.beta_v;
    if beta == 0.0 || sched.eta.segments.is_empty() {
        return Ok(0.0);
    }
    let fj = seq.segments().jumps();
    let ej = sched.eta.jumps();
    let t_ref = seq
        .t_f
        .max(sched.eta.support_end())
        .max(fj.iter().chain(&ej).map(|(t, _)| t.abs()).fold(0.0, f64::max));
    let prod = jump_products(&fj, &ej, Complex64::new(1.0, 0.0));
    let skip_re = real_part_vanishes(&prod, t_ref);
    let s = model.low_exponent();
    if s <= -2.0 || (!skip_re && s <= 0.0) {
        return Err(Error::NonIntegrable(format!(
            "quench phase integrand not integrable at low frequency for s = {s}"
        )));
    }
    // Im(N̄_F N_η) 𝒥/ω² part
    let im_terms: Vec<(f64, Complex64)> = prod.iter().map(|(d, c)| (*d, c * Complex64::new(0.0, -1.0))).collect();
    let re_terms: Vec<(f64, Complex64)> = prod.clone();
    let grid = exp_sum(&prod, t_ref).and_then(|e| {
        let tau0 = e.tau0;
        Some((GridSum::new(&fj, tau0)?, GridSum::new(&ej, tau0)?))
    });
    let fe = |w: f64| match &grid {
        Some((gf, ge)) if w * t_ref > 4.0 => gf.eval(w).conj() * ge.eval(w) / (w * w),
        _ => filter_freq(seq, w).conj() * quench_freq(sched, w),
    };
    let kk_opts = QuadOptions {
        abs_tol: opts.abs_tol * 1e-2,
        rel_tol: opts.rel_tol * 1e-2,
        max_panels: opts.max_panels,
    };
    let re_g = |w: f64| bath::kramers_kronig_re(model, w, &kk_opts).unwrap_or(f64::NAN);
    let direct = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        let p = fe(w);
        let mut v = beta * p.im * model.j(w);
        if !skip_re {
            v += beta / PI * p.re * re_g(w);
        }
        v
    };
    let env_im = |w: f64| beta * model.j(w) / (w * w);
    let env_re = |w: f64| beta / PI * re_g(w) / (w * w);
    let l1_im: f64 = im_terms.iter().map(|(_, c)| c.norm()).sum();
    let l1_re: f64 = re_terms.iter().map(|(_, c)| c.norm()).sum();
    let scale = model.scale();
    let bound = |w: f64| {
        let mut b = beta.abs() * l1_im * model.tail_bound(w, 2.0);
        if !skip_re {
            if w < 2.0 * scale {
                return f64::INFINITY;
            }
            b += beta.abs() / PI * l1_re * 2.0 * re_g(w).abs() / w;
        }
        b
    };
    let mut all: Vec<(f64, Complex64)> = im_terms.clone();
    all.extend(re_terms.iter().copied());
    let es_im = exp_sum(&im_terms, t_ref);
    let es_re = exp_sum(&re_terms, t_ref);
    let es_all = exp_sum(&all, t_ref);
    let (tau0, kim, kre) = match (es_all, es_im, es_re) {
        (Some(a), Some(i), Some(r)) => {
            // re-express both kernels on the common grid
            let ratio_i = (i.tau0 / a.tau0).round() as i64;
            let ratio_r = (r.tau0 / a.tau0).round() as i64;
            let rescale = |k: TrigKernel, m: i64| TrigKernel {
                terms: k.terms.into_iter().map(|(j, c)| (j * m, c)).collect(),
            };
            (Some(a.tau0), rescale(i.kernel, ratio_i), rescale(r.kernel, ratio_r))
        }
        _ => (None, TrigKernel::default(), TrigKernel::default()),
    };
    let mut terms = vec![OscTerm {
        kernel: kim,
        envelope: &env_im,
    }];
    if !skip_re {
        terms.push(OscTerm {
            kernel: kre,
            envelope: &env_re,
        });
    }
    let prob = OscProblem {
        direct: &direct,
        terms,
        tau0,
        cap: PI / (4.0 * t_ref),
        knots: model.knots(),
        scale,
    };
    let value = quad::integrate_oscillatory(&prob, &bound, opts)?.value;
    if !value.is_finite() {
        return Err(Error::Numeric("Kramers–Kronig evaluation failed inside qps_general".into()));
    }
    imaginary_residue_check(seq, sched, model, value, &re_g, skip_re, opts)?;
    Ok(value)
}

/// Im of the full-line integrand must cancel between ±ω.
fn imaginary_residue_check<S: Spectral + ?Sized>(
    seq: &PulseSequence,
    sched: &QuenchSchedule,
    model: &S,
    value: f64,
    re_g: &dyn Fn(f64) -> f64,
    skip_re: bool,
    opts: &QuadOptions,
) -> Result<()> {
    let beta = sched.beta_v;
    let g = |w: f64| {
        let re = if skip_re { 0.0 } else { re_g(w) };
        Complex64::new(re, bath::im_green(model, w))
    };
    let integrand = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        let plus = filter_freq(seq, w).conj() * quench_freq(sched, w) * g(w);
        let minus = filter_freq(seq, -w).conj() * quench_freq(sched, -w) * g(-w);
        beta / (2.0 * PI) * (plus + minus).im
    };
    let t_f = seq.t_f.max(sched.eta.support_end());
    let head = (32.0 * PI / t_f).min(4.0 * model.scale());
    let r = quad::integrate(&integrand, &[0.0, head], PI / (4.0 * t_f), &QuadOptions { abs_tol: 1e-14, ..*opts })?;
    let limit = 1e-6 * value.abs();
    if r.value.abs() > limit.max(opts.abs_tol) {
        return Err(Error::ImaginaryResidue {
            residue: r.value.abs(),
            limit,
        });
    }
    Ok(())
}

/// Exact correlation C(τ) = ∫ F(t+τ) η(t) dt of two piecewise functions.
pub fn overlap_correlation(f: &Piecewise, eta: &Piecewise, tau: f64) -> f64 {
    let mut acc = 0.0;
    for a in &f.segments {
        for b in &eta.segments {
            let lo = (a.start - tau).max(b.start);
            let hi = (a.end - tau).min(b.end);
            if hi > lo {
                acc += a.level * b.level * (hi - lo);
            }
        }
    }
    acc
}

/// Φ_q = β_V ∫dt₁ F(t₁) ∫dt₂ η(t₂) G^R(t₁ − t₂), evaluated as ∫ G^R(τ) C(τ) dτ.
pub fn qps_time_domain<S: Spectral + ?Sized>(
    seq: &PulseSequence,
    sched: &QuenchSchedule,
    model: &S,
    opts: &QuadOptions,
) -> Result<f64> {
    let beta = sched.beta_v;
    if beta == 0.0 || sched.eta.segments.is_empty() {
        return Ok(0.0);
    }
    let f = seq.segments();
    let eta = &sched.eta;
    let tau_max = f.support_end() - eta.segments.iter().map(|s| s.start).fold(f64::INFINITY, f64::min);
    if tau_max <= 0.0 {
        return Ok(0.0);
    }
    let mut br = vec![0.0, tau_max];
    for (t, _) in f.jumps() {
        for (s, _) in eta.jumps() {
            let d = t - s;
            if d > 0.0 && d < tau_max {
                br.push(d);
            }
        }
    }
    let g_opts = QuadOptions {
        abs_tol: opts.abs_tol * 1e-2,
        rel_tol: opts.rel_tol * 1e-2,
        max_panels: opts.max_panels,
    };
    let failed = std::sync::atomic::AtomicBool::new(false);
    let integrand = |tau: f64| {
        let c = overlap_correlation(&f, eta, tau);
        if c == 0.0 {
            return 0.0;
        }
        match bath::retarded_green_time(model, tau, &g_opts) {
            Ok(g) => beta * g * c,
            Err(_) => {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                0.0
            }
        }
    };
    let r = quad::integrate(&integrand, &br, f64::INFINITY, opts)?;
    if failed.load(std::sync::atomic::Ordering::Relaxed) {
        return Err(Error::NonConvergent {
            value: r.value,
            error: f64::INFINITY,
            detail: "retarded response quadrature failed".into(),
        });
    }
    Ok(r.value)
}

/// Classical field applied to the qubit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExternalField {
    #[default]
    None,
    /// b(t) = b0
    Dc { b0: f64 },
    /// b(t) = amplitude·cos(omega·t + phase)
    Ac { amplitude: f64, omega: f64, phase: f64 },
}

impl ExternalField {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ExternalField::None => 0.0,
            ExternalField::Dc { b0 } => b0,
            ExternalField::Ac {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).cos(),
        }
    }
}

/// Φ_ext = ∫ dω/2π F*[ω] B_ext[ω] = ∫ F(t) b(t) dt.
pub fn external_phase(seq: &PulseSequence, field: &ExternalField) -> f64 {
    match *field {
        ExternalField::None => 0.0,
        ExternalField::Dc { b0 } => b0 * seq.f0(),
        ExternalField::Ac {
            amplitude,
            omega,
            phase,
        } => amplitude * (Complex64::from_polar(1.0, phase) * filter_freq(seq, omega)).re,
    }
}

/// Φ_ext for a field given by its spectrum B[ω] (full line), integrated on [−w_max, w_max].
pub fn external_phase_spectrum(
    seq: &PulseSequence,
    b: &(dyn Fn(f64) -> Complex64 + Sync),
    w_max: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    let f = |w: f64| (filter_freq(seq, w).conj() * b(w)).re / (2.0 * PI);
    Ok(quad::integrate(&f, &[-w_max, 0.0, w_max], PI / (4.0 * seq.t_f), opts)?.value)
}

/// ⟨σ₋(t_f)⟩ = ½ e^{−ζ} e^{−iΦ}.
pub fn coherence(zeta: f64, phi: f64) -> Complex64 {
    0.5 * (-zeta).exp() * Complex64::from_polar(1.0, -phi)
}

/// ⟨σ_y(t_f)⟩ = −e^{−ζ} sin Φ.
pub fn sigma_y(zeta: f64, phi: f64) -> f64 {
    -(-zeta).exp() * phi.sin()
}

/// N_meas = |⟨σ_y⟩|⁻².
pub fn n_meas(zeta: f64, phi: f64) -> Result<f64> {
    let sy = sigma_y(zeta, phi);
    if phi.sin().abs() <= 4.0 * f64::EPSILON * phi.abs().max(1.0) || sy == 0.0 {
        return Err(Error::PhaseUnresolvable);
    }
    Ok(1.0 / (sy * sy))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRecord {
    pub t_f: f64,
    pub zeta: f64,
    pub phi_q: f64,
    pub phi_ext: f64,
    pub re_coh: f64,
    pub im_coh: f64,
    /// Infinite when the phase is unresolvable.
    pub n_meas: f64,
}

impl CoherenceRecord {
    pub fn new(t_f: f64, zeta: f64, phi_q: f64, phi_ext: f64) -> Self {
        let c = coherence(zeta, phi_q + phi_ext);
        CoherenceRecord {
            t_f,
            zeta,
            phi_q,
            phi_ext,
            re_coh: c.re,
            im_coh: c.im,
            n_meas: n_meas(zeta, phi_q + phi_ext).unwrap_or(f64::INFINITY),
        }
    }

    pub fn coherence(&self) -> Complex64 {
        Complex64::new(self.re_coh, self.im_coh)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTrace {
    pub records: Vec<CoherenceRecord>,
}

impl CoherenceTrace {
    pub fn t_f(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t_f).collect()
    }
    pub fn zeta(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.zeta).collect()
    }
    pub fn phi_q(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.phi_q).collect()
    }
}

/// How the quench profile scales with the protocol length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleShape {
    /// No quench.
    None,
    /// η = Θ(t)Θ(t_f − t).
    Step,
    /// Segments given as fractions of t_f.
    Fractional { segments: Vec<Segment> },
}

impl ScheduleShape {
    pub fn at(&self, t_f: f64, beta_v: f64) -> Result<Option<QuenchSchedule>> {
        let state = if beta_v >= 0.0 {
            crate::control::QubitState::Down
        } else {
            crate::control::QubitState::Up
        };
        Ok(match self {
            ScheduleShape::None => None,
            ScheduleShape::Step => {
                let mut s = QuenchSchedule::step(t_f, state);
                s.beta_v = beta_v;
                Some(s)
            }
            ScheduleShape::Fractional { segments } => Some(QuenchSchedule::new(
                segments
                    .iter()
                    .map(|s| Segment {
                        start: s.start * t_f,
                        end: s.end * t_f,
                        level: s.level,
                    })
                    .collect(),
                beta_v,
                state,
            )?),
        })
    }
}

/// Everything needed to evaluate one coherence record at a given t_f.
pub struct Scenario<'a> {
    /// Pulse fractions (the sequence is rescaled to each t_f).
    pub fractions: Vec<f64>,
    pub noise: Option<NoiseModel>,
    pub spectral: Option<&'a (dyn Spectral + 'a)>,
    pub schedule: ScheduleShape,
    pub beta_v: f64,
    pub field: ExternalField,
    pub opts: QuadOptions,
}

impl Scenario<'_> {
    pub fn record(&self, t_f: f64) -> Result<CoherenceRecord> {
        let seq = PulseSequence::new(self.fractions.clone(), t_f)?;
        let zeta = match &self.noise {
            Some(n) => dephasing(&seq, n, &self.opts)?,
            None => 0.0,
        };
        let phi_q = match (self.spectral, self.schedule.at(t_f, self.beta_v)?) {
            (Some(m), Some(s)) => {
                if s.is_step(t_f) {
                    qps_static(&seq, m, s.beta_v, &self.opts)?
                } else {
                    qps_general(&seq, &s, m, &self.opts)?
                }
            }
            _ => 0.0,
        };
        let phi_ext = external_phase(&seq, &self.field);
        Ok(CoherenceRecord::new(t_f, zeta, phi_q, phi_ext))
    }

    /// Records over a t_f grid, computed in parallel and returned in grid order.
    pub fn trace(&self, grid: &[f64]) -> Result<CoherenceTrace> {
        let records: Result<Vec<_>> = grid.par_iter().map(|&t| self.record(t)).collect();
        Ok(CoherenceTrace { records: records? })
    }
}

/// Linear or logarithmic t_f grid.
pub fn time_grid(t_min: f64, t_max: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Config("grid must contain at least one point".into()));
    }
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) {
        return Err(Error::Config(format!(
            "grid needs 0 < t_f_min ≤ t_f_max, got [{t_min}, {t_max}]"
        )));
    }
    if points == 1 {
        return Ok(vec![t_min]);
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = i as f64 / n;
            if log {
                (t_min.ln() + x * (t_max.ln() - t_min.ln())).exp()
            } else {
                t_min + x * (t_max - t_min)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{Cutoff, SpectralModel};

    #[test]
    fn coherence_and_nmeas_identities() {
        assert!((n_meas(0.0, PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((n_meas(1.0, PI / 2.0).unwrap() - (2.0f64).exp()).abs() < 1e-12);
        assert!(matches!(n_meas(0.3, 0.0), Err(Error::PhaseUnresolvable)));
        assert!(matches!(n_meas(0.3, PI), Err(Error::PhaseUnresolvable)));
        let c = coherence(0.2, 0.4);
        assert!((c.norm() - 0.5 * (-0.2f64).exp()).abs() < 1e-15);
        assert!((-c.arg() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn external_phase_examples() {
        let r = PulseSequence::ramsey(2.0).unwrap();
        let h = PulseSequence::hahn(2.0).unwrap();
        let dc = ExternalField::Dc { b0: 0.3 };
        assert!((external_phase(&r, &dc) - 0.6).abs() < 1e-15);
        assert_eq!(external_phase(&h, &dc), 0.0);
        assert_eq!(external_phase(&h, &ExternalField::None), 0.0);
    }

    #[test]
    fn correlation_is_exact() {
        let f = PulseSequence::hahn(2.0).unwrap().segments();
        let eta = QuenchSchedule::step(2.0, crate::control::QubitState::Down).eta;
        // C(τ) = ∫_0^{2−τ} F(t+τ) dt
        assert!((overlap_correlation(&f, &eta, 0.0)).abs() < 1e-15);
        assert!((overlap_correlation(&f, &eta, 1.0) + 1.0).abs() < 1e-15);
        assert!((overlap_correlation(&f, &eta, 0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_inputs_give_zero() {
        let h = PulseSequence::hahn(10.0).unwrap();
        let m = SpectralModel::ohmic(0.1, 1.0, Cutoff::Gaussian);
        let o = QuadOptions::default();
        assert_eq!(qps_static(&h, &m, 0.0, &o).unwrap(), 0.0);
        assert_eq!(qps_general(&h, &QuenchSchedule::empty(), &m, &o).unwrap(), 0.0);
        let n = NoiseModel::freeform(0.0, 0.0, 1.0, Cutoff::Gaussian);
        assert_eq!(dephasing(&h, &n, &o).unwrap(), 0.0);
    }

    #[test]
    fn grid_validation() {
        assert!(time_grid(1.0, 10.0, 0, true).is_err());
        let g = time_grid(1.0, 100.0, 3, true).unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
    }
}
