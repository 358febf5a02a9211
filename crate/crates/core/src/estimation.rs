//! Inverse problems: Ohmic thermometry from Hahn traces, equilibrium
//! diagnosis through T_eff[ω], T1 relaxometry, and comb-filter
//! reconstruction of 𝒥[ω] from NV switching plans.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bath::{effective_temperature, NoiseModel, Spectral};
use crate::control::{validate_symmetry, PeriodicNvPlan};
use crate::dynamics::{qps_general, CoherenceTrace};
use crate::error::{Error, Result};
use crate::quad::QuadOptions;
use crate::special::coth;

/// kT = 1/(2·T₂·Φ_q(∞)).
pub fn ohmic_thermometry(t2: f64, phi_inf: f64) -> Result<f64> {
    if !(t2 > 0.0 && t2.is_finite()) {
        return Err(Error::InvalidInput(format!("T2 must be positive, got {t2}")));
    }
    if !(phi_inf > 0.0 && phi_inf.is_finite()) {
        return Err(Error::InvalidInput(format!("plateau phase must be positive, got {phi_inf}")));
    }
    Ok(1.0 / (2.0 * t2 * phi_inf))
}

/// Thresholds for the asymptotic-window detectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowOptions {
    /// Allowed deviation of d ln ζ / d ln t_f from 1.
    pub slope_tol: f64,
    /// Allowed magnitude of d ln|Φ_q| / d ln t_f.
    pub plateau_tol: f64,
    /// Minimum number of trace points inside a window.
    pub min_points: usize,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            slope_tol: 0.05,
            plateau_tol: 0.02,
            min_points: 3,
        }
    }
}

/// Trace window used by a fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
    /// Largest local deviation from the target slope inside the window.
    pub max_slope_deviation: f64,
    /// Relative RMS residual of the fit.
    pub residual: f64,
}

/// Largest trailing run (clipped to the last decade) whose local log-slopes
/// stay within `tol` of `target`. Returns the index range.
fn trailing_window(t: &[f64], y: &[f64], target: f64, tol: f64, min_points: usize) -> Option<(usize, usize, f64)> {
    let n = t.len();
    if n < 2 || n < min_points {
        return None;
    }
    let slope = |i: usize| -> Option<f64> {
        let (a, b) = (y[i], y[i + 1]);
        if a == b {
            return Some(0.0);
        }
        if !(a * b > 0.0) || !(t[i] > 0.0 && t[i + 1] > t[i]) {
            return None;
        }
        Some((b / a).ln() / (t[i + 1] / t[i]).ln())
    };
    let t_end = t[n - 1];
    let mut start = n - 1;
    let mut worst: f64 = 0.0;
    while start > 0 && t[start - 1] >= t_end / 10.0 * (1.0 - 1e-12) {
        match slope(start - 1) {
            Some(s) if (s - target).abs() <= tol => {
                worst = worst.max((s - target).abs());
                start -= 1;
            }
            _ => break,
        }
    }
    let count = n - start;
    (count >= min_points.max(2)).then_some((start, n, worst))
}

fn check_trace(t: &[f64]) -> Result<()> {
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("trace t_f values must be strictly increasing".into()));
    }
    Ok(())
}

/// T₂ from the asymptotic linear regime of ζ(t_f): the inverse regression slope.
pub fn extract_t2(trace: &CoherenceTrace, opts: &WindowOptions) -> Result<(f64, FitWindow)> {
    let t = trace.t_f();
    let z = trace.zeta();
    check_trace(&t)?;
    let (a, b, worst) = trailing_window(&t, &z, 1.0, opts.slope_tol, opts.min_points).ok_or_else(|| {
        Error::WindowNotReached(format!(
            "no trailing window with d ln ζ/d ln t_f within 1 ± {} over ≥ {} points",
            opts.slope_tol, opts.min_points
        ))
    })?;
    let (xs, ys) = (&t[a..b], &z[a..b]);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::WindowNotReached("ζ is not increasing in the fit window".into()));
    }
    let icpt = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| ((y - icpt - slope * x) / y).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((
        1.0 / slope,
        FitWindow {
            t_start: xs[0],
            t_end: xs[xs.len() - 1],
            points: xs.len(),
            max_slope_deviation: worst,
            residual: rms,
        },
    ))
}

/// Φ_q(∞) as the mean of Φ_q over the trailing plateau window.
pub fn extract_plateau(trace: &CoherenceTrace, opts: &WindowOptions) -> Result<(f64, FitWindow)> {
    let t = trace.t_f();
    let p = trace.phi_q();
    check_trace(&t)?;
    let (a, b, worst) = trailing_window(&t, &p, 0.0, opts.plateau_tol, opts.min_points).ok_or_else(|| {
        Error::WindowNotReached(format!(
            "no trailing window with d ln|Φ_q|/d ln t_f within ±{} over ≥ {} points",
            opts.plateau_tol, opts.min_points
        ))
    })?;
    let ys = &p[a..b];
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let rms = if mean == 0.0 {
        0.0
    } else {
        (ys.iter().map(|y| ((y - mean) / mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    Ok((
        mean,
        FitWindow {
            t_start: t[a],
            t_end: t[b - 1],
            points: ys.len(),
            max_slope_deviation: worst,
            residual: rms,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermometryDiagnostics {
    pub t2_window: FitWindow,
    pub plateau_window: FitWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermometryResult {
    #[serde(rename = "kT")]
    pub kt: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub phi_inf: f64,
    pub diagnostics: ThermometryDiagnostics,
}

/// Full pipeline on a Hahn trace: T₂ from ζ, Φ_q(∞) from the plateau, then kT.
pub fn thermometry_from_trace(trace: &CoherenceTrace, opts: &WindowOptions) -> Result<ThermometryResult> {
    let (t2, t2_window) = extract_t2(trace, opts)?;
    let (phi_inf, plateau_window) = extract_plateau(trace, opts)?;
    let kt = ohmic_thermometry(t2, phi_inf)?;
    Ok(ThermometryResult {
        kt,
        t2,
        phi_inf,
        diagnostics: ThermometryDiagnostics {
            t2_window,
            plateau_window,
        },
    })
}

/// Outcome of the T_eff[ω] flatness test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub omegas: Vec<f64>,
    /// T_eff at each frequency; `None` where S̄ < π𝒥 (sub-vacuum).
    pub t_eff: Vec<Option<f64>>,
    /// max T_eff / min T_eff − 1 over the probed frequencies.
    pub variation: f64,
    pub equilibrium: bool,
}

/// Evaluate T_eff[ω] on `omegas` and flag equilibrium when its relative
/// variation stays below `tol`.
pub fn diagnose_equilibrium<S: Spectral + ?Sized>(
    noise: &NoiseModel,
    spectral: &S,
    omegas: &[f64],
    tol: f64,
) -> Result<EquilibriumReport> {
    if omegas.is_empty() || omegas.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidInput("probe frequencies must be positive and non-empty".into()));
    }
    let mut t_eff = Vec::with_capacity(omegas.len());
    for &w in omegas {
        match effective_temperature(noise.eval(w), spectral.j(w), w) {
            Ok(t) => t_eff.push(Some(t)),
            Err(Error::SubVacuum { .. }) => t_eff.push(None),
            Err(e) => return Err(e),
        }
    }
    let variation = if t_eff.iter().any(Option::is_none) {
        f64::INFINITY
    } else {
        let v: Vec<f64> = t_eff.iter().flatten().copied().collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    };
    Ok(EquilibriumReport {
        omegas: omegas.to_vec(),
        t_eff,
        equilibrium: variation < tol,
        variation,
    })
}

/// Qubit relaxation observables for a thermal bath.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relaxometry {
    /// Γ_tot = 2S̄[Ω].
    pub gamma_total: f64,
    /// ⟨σ_z⟩_ss = Im G^R[Ω]/S̄[Ω].
    pub sigma_z_ss: f64,
}

pub fn t1_relaxometry<S: Spectral + ?Sized>(model: &S, kt: f64, omega: f64) -> Result<Relaxometry> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidInput(format!("qubit frequency must be positive, got {omega}")));
    }
    if !(kt >= 0.0) {
        return Err(Error::InvalidInput(format!("kT must be non-negative, got {kt}")));
    }
    let c = if kt == 0.0 { 1.0 } else { coth(omega / (2.0 * kt)) };
    let pj = std::f64::consts::PI * model.j(omega);
    let nsd = pj * c;
    let sigma_z_ss = if nsd > 0.0 && nsd.is_finite() { -pj / nsd } else { -1.0 / c };
    Ok(Relaxometry {
        gamma_total: 2.0 * nsd,
        sigma_z_ss,
    })
}

/// A_ℓ = −(ω₀²/4)·Im(F₀*[ℓω₀] η₀[ℓω₀]) from the base templates.
pub fn comb_weights(plan: &PeriodicNvPlan, harmonics: &[u32]) -> Result<Vec<f64>> {
    validate_symmetry(plan)?;
    let w0 = plan.omega0();
    Ok(harmonics
        .iter()
        .map(|&l| {
            let w = l as f64 * w0;
            let p = plan.base_filter.transform(w).conj() * plan.base_quench.transform(w);
            let a = -0.25 * w0 * w0 * p.im;
            if a.abs() < 1e-13 {
                0.0
            } else {
                a
            }
        })
        .collect())
}

/// An NV plan together with the harmonics used in the comb model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionPlan {
    pub nv_plan: PeriodicNvPlan,
    pub harmonics: Vec<u32>,
    pub comb_weights: Vec<f64>,
    pub target_freqs: Vec<f64>,
}

impl ReconstructionPlan {
    pub fn new(nv_plan: PeriodicNvPlan, harmonics: Vec<u32>) -> Result<Self> {
        if harmonics.is_empty() || harmonics.contains(&0) {
            return Err(Error::InvalidInput("harmonics must be a non-empty list of positive integers".into()));
        }
        let comb_weights = comb_weights(&nv_plan, &harmonics)?;
        let w0 = nv_plan.omega0();
        let target_freqs = harmonics.iter().map(|&l| l as f64 * w0).collect();
        Ok(ReconstructionPlan {
            nv_plan,
            harmonics,
            comb_weights,
            target_freqs,
        })
    }

    /// Every odd harmonic ℓω₀ ≤ ω_max.
    pub fn odd_harmonics_up_to(nv_plan: PeriodicNvPlan, omega_max: f64) -> Result<Self> {
        let w0 = nv_plan.omega0();
        let top = (omega_max / w0 * (1.0 + 1e-9)).floor() as u32;
        let harmonics: Vec<u32> = (1..=top.max(1)).step_by(2).collect();
        Self::new(nv_plan, harmonics)
    }

    /// Row of the comb model: (ℓω₀, W) with Φ_q ≈ Σ W·𝒥(ℓω₀),
    /// W = −(4β_V M/ω₀)·A_ℓ.
    pub fn row(&self) -> Vec<(f64, f64)> {
        let p = &self.nv_plan;
        let scale = -4.0 * p.beta_v * p.repetitions as f64 / p.omega0();
        self.target_freqs
            .iter()
            .zip(&self.comb_weights)
            .map(|(w, a)| (*w, scale * a))
            .collect()
    }

    /// Comb-limit prediction of Φ_q for a given spectral function.
    pub fn predict<S: Spectral + ?Sized>(&self, model: &S) -> f64 {
        self.row().iter().map(|(w, c)| c * model.j(*w)).sum()
    }

    /// Exact finite-M Φ_q of the plan.
    pub fn forward<S: Spectral + ?Sized>(&self, model: &S, opts: &QuadOptions) -> Result<f64> {
        let seq = self.nv_plan.sequence()?;
        qps_general(&seq, &self.nv_plan.quench(), model, opts)
    }
}

/// One measured plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub plan: ReconstructionPlan,
    pub phi_q: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    /// Tikhonov weight λ in ‖WJ − Φ‖² + λ‖J‖².
    pub ridge: f64,
    /// Singular values below `rank_tol·σ_max` count as zero.
    pub rank_tol: f64,
    /// Relative tolerance for identifying equal target frequencies.
    pub freq_tol: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            ridge: 0.0,
            rank_tol: 1e-10,
            freq_tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub omega: f64,
    pub j_hat: f64,
    /// ‖row j of the solution operator‖₂: error in 𝒥̂ per unit phase error.
    pub amplification: f64,
    /// Largest |Φ residual| among the measurements that involve this frequency.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub estimates: Vec<FrequencyEstimate>,
    /// Φ_k − (W𝒥̂)_k per measurement.
    pub residuals: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub condition_number: f64,
}

impl Reconstruction {
    pub fn estimate_at(&self, omega: f64) -> Option<&FrequencyEstimate> {
        self.estimates
            .iter()
            .find(|e| (e.omega - omega).abs() <= 1e-9 * omega.abs().max(1e-300))
    }
}

/// Assemble W with unknowns at the union of all target frequencies.
pub fn design_matrix(plans: &[&ReconstructionPlan], freq_tol: f64) -> (Vec<f64>, DMatrix<f64>) {
    let mut omegas: Vec<f64> = Vec::new();
    for p in plans {
        for &w in &p.target_freqs {
            if !omegas.iter().any(|o| (o - w).abs() <= freq_tol * w) {
                omegas.push(w);
            }
        }
    }
    omegas.sort_by(f64::total_cmp);
    let mut mat = DMatrix::zeros(plans.len(), omegas.len());
    for (k, p) in plans.iter().enumerate() {
        for (w, c) in p.row() {
            let j = omegas
                .iter()
                .position(|o| (o - w).abs() <= freq_tol * w)
                .expect("frequency registered above");
            mat[(k, j)] += c;
        }
    }
    (omegas, mat)
}

/// Least-squares (optionally ridge-regularised) solution of Φ = W𝒥.
pub fn reconstruct_spectral_function(
    measurements: &[Measurement],
    opts: &ReconstructionOptions,
) -> Result<Reconstruction> {
    if measurements.is_empty() {
        return Err(Error::InsufficientCoverage("no measurements".into()));
    }
    if !(opts.ridge >= 0.0) {
        return Err(Error::InvalidInput(format!("ridge weight must be ≥ 0, got {}", opts.ridge)));
    }
    for m in measurements {
        validate_symmetry(&m.plan.nv_plan)?;
    }
    let plans: Vec<&ReconstructionPlan> = measurements.iter().map(|m| &m.plan).collect();
    let (omegas, w) = design_matrix(&plans, opts.freq_tol);
    let phi = DVector::from_iterator(measurements.len(), measurements.iter().map(|m| m.phi_q));
    let (rows, cols) = w.shape();
    let svd = w.clone().svd(true, true);
    let sv = svd.singular_values.clone();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > opts.rank_tol * smax).count();
    if opts.ridge == 0.0 && (rank < cols || smax == 0.0) {
        return Err(Error::InsufficientCoverage(format!(
            "{cols} unknown frequencies but the {rows}×{cols} comb matrix has rank {rank}"
        )));
    }
    let u = svd.u.as_ref().ok_or_else(|| Error::Numeric("SVD failed to produce U".into()))?;
    let vt = svd.v_t.as_ref().ok_or_else(|| Error::Numeric("SVD failed to produce Vᵀ".into()))?;
    let gain: Vec<f64> = sv
        .iter()
        .map(|&s| if s > opts.rank_tol * smax { s / (s * s + opts.ridge) } else { 0.0 })
        .collect();
    // pseudo-inverse P = V diag(gain) Uᵀ
    let mut pinv = DMatrix::zeros(cols, rows);
    for (i, g) in gain.iter().enumerate() {
        if *g == 0.0 {
            continue;
        }
        pinv += vt.row(i).transpose() * u.column(i).transpose() * *g;
    }
    let j_hat = &pinv * &phi;
    let resid = &phi - &w * &j_hat;
    let estimates = omegas
        .iter()
        .enumerate()
        .map(|(j, &om)| {
            let residual = (0..rows)
                .filter(|&k| w[(k, j)] != 0.0)
                .map(|k| resid[k].abs())
                .fold(0.0, f64::max);
            FrequencyEstimate {
                omega: om,
                j_hat: j_hat[j],
                amplification: pinv.row(j).norm(),
                residual,
            }
        })
        .collect();
    let smin = sv.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    Ok(Reconstruction {
        estimates,
        residuals: resid.iter().copied().collect(),
        singular_values: sv.iter().copied().collect(),
        condition_number: smax / smin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{Cutoff, SpectralModel};
    use crate::control::build_nv_plan;
    use crate::dynamics::CoherenceRecord;
    use approx::assert_relative_eq;

    fn trace_from(f: impl Fn(f64) -> (f64, f64)) -> CoherenceTrace {
        let grid = crate::dynamics::time_grid(1.0, 1e4, 81, true).unwrap();
        CoherenceTrace {
            records: grid
                .iter()
                .map(|&t| {
                    let (z, p) = f(t);
                    CoherenceRecord::new(t, z, p, 0.0)
                })
                .collect(),
        }
    }

    #[test]
    fn thermometry_algebra() {
        assert_relative_eq!(ohmic_thermometry(1000.0, 0.05).unwrap(), 0.01, max_relative = 1e-15);
        assert!(ohmic_thermometry(0.0, 0.05).is_err());
        assert!(ohmic_thermometry(10.0, -0.1).is_err());
    }

    #[test]
    fn windows_on_synthetic_traces() {
        let s0 = 0.004;
        let tr = trace_from(|t| (0.5 * s0 * t, 0.05));
        let (t2, w) = extract_t2(&tr, &WindowOptions::default()).unwrap();
        assert_relative_eq!(t2, 2.0 / s0, max_relative = 1e-12);
        assert!(w.t_start >= 999.0);
        let (p, _) = extract_plateau(&tr, &WindowOptions::default()).unwrap();
        assert_relative_eq!(p, 0.05, max_relative = 1e-15);
        let bad = trace_from(|t| (t * t, 1.0 / t));
        assert!(matches!(extract_t2(&bad, &WindowOptions::default()), Err(Error::WindowNotReached(_))));
        assert!(matches!(
            extract_plateau(&bad, &WindowOptions::default()),
            Err(Error::WindowNotReached(_))
        ));
    }

    #[test]
    fn relaxometry_limits() {
        let m = SpectralModel::ohmic(0.1, 1.0, Cutoff::Gaussian);
        let r = t1_relaxometry(&m, 0.25, 0.5).unwrap();
        assert_relative_eq!(r.sigma_z_ss, -(1.0f64).tanh(), max_relative = 1e-14);
        assert_relative_eq!(r.sigma_z_ss, -0.761594155955765, max_relative = 1e-14);
        assert_eq!(t1_relaxometry(&m, 0.0, 0.5).unwrap().sigma_z_ss, -1.0);
        assert!(t1_relaxometry(&m, 1e9, 0.5).unwrap().sigma_z_ss.abs() < 1e-9);
        assert!(t1_relaxometry(&m, 0.1, 0.0).is_err());
    }

    #[test]
    fn comb_weights_closed_form() {
        let p = build_nv_plan(4, 1.7).unwrap();
        let a = comb_weights(&p, &[1, 2, 3, 4, 5, 6, 7]).unwrap();
        let expect = [4.0, 0.0, -4.0 / 9.0, 0.0, 4.0 / 25.0, 0.0, -4.0 / 49.0];
        for (x, y) in a.iter().zip(expect) {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn one_by_one_system() {
        let p = ReconstructionPlan::new(build_nv_plan(8, 2.0).unwrap(), vec![1]).unwrap();
        let m = Measurement { plan: p.clone(), phi_q: -1.3 };
        let r = reconstruct_spectral_function(&[m], &ReconstructionOptions::default()).unwrap();
        assert_relative_eq!(r.estimates[0].j_hat, -1.3 / p.row()[0].1, max_relative = 1e-14);
        assert!(r.residuals[0].abs() < 1e-14);
    }

    #[test]
    fn coverage_is_checked() {
        let p = ReconstructionPlan::new(build_nv_plan(8, 2.0).unwrap(), vec![1, 3]).unwrap();
        let m = Measurement { plan: p, phi_q: 1.0 };
        assert!(matches!(
            reconstruct_spectral_function(std::slice::from_ref(&m), &ReconstructionOptions::default()),
            Err(Error::InsufficientCoverage(_))
        ));
        let ridge = ReconstructionOptions { ridge: 1e-3, ..Default::default() };
        assert!(reconstruct_spectral_function(&[m], &ridge).is_ok());
    }
}
