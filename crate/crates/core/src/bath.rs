//! Spectral functions 𝒥[ω], noise spectra S̄[ω], the fluctuation–dissipation
//! link between them, and the Kramers–Kronig transform of Im G^R.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, OscProblem, OscTerm, QuadOptions, TrigKernel};
use crate::special::{arccoth, coth};

/// High-frequency cutoff shape φ(x), x = ω/ω_c.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Cutoff {
    Gaussian,
    Exponential,
    Lorentzian,
    Step,
    LorentzianPeak { epsilon: f64 },
}

impl Cutoff {
    pub fn from_name(name: &str, epsilon: Option<f64>) -> Result<Self> {
        let c = match name {
            "gaussian" => Cutoff::Gaussian,
            "exponential" => Cutoff::Exponential,
            "lorentzian" => Cutoff::Lorentzian,
            "step" => Cutoff::Step,
            "lorentzian_peak" => {
                let eps = epsilon.ok_or_else(|| {
                    Error::Config("cutoff `lorentzian_peak` requires `epsilon`".into())
                })?;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::Config(format!("epsilon must lie in (0,1), got {eps}")));
                }
                Cutoff::LorentzianPeak { epsilon: eps }
            }
            other => return Err(Error::Config(format!("unknown cutoff family `{other}`"))),
        };
        Ok(c)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Cutoff::Gaussian => "gaussian",
            Cutoff::Exponential => "exponential",
            Cutoff::Lorentzian => "lorentzian",
            Cutoff::Step => "step",
            Cutoff::LorentzianPeak { .. } => "lorentzian_peak",
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        match *self {
            Cutoff::Gaussian => (-x * x).exp(),
            Cutoff::Exponential => (-x).exp(),
            Cutoff::Lorentzian => 1.0 / (1.0 + x * x),
            Cutoff::Step => {
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Cutoff::LorentzianPeak { epsilon: e } => {
                let e2 = e * e;
                (1.0 + e2) * (1.0 + e2) / (((x - 1.0).powi(2) + e2) * ((x + 1.0).powi(2) + e2))
            }
        }
    }

    /// Upper bound on ∫_{x0}^∞ x^m φ(x) dx for x0 > 0 (infinite when no bound applies).
    pub fn tail_bound(&self, x0: f64, m: f64) -> f64 {
        if x0 <= 0.0 {
            return f64::INFINITY;
        }
        match *self {
            Cutoff::Gaussian => {
                let rate = 2.0 * x0 - m.max(0.0) / x0;
                if rate <= 0.0 {
                    f64::INFINITY
                } else {
                    x0.powf(m) * (-x0 * x0).exp() / rate
                }
            }
            Cutoff::Exponential => {
                let rate = 1.0 - m.max(0.0) / x0;
                if rate <= 0.0 {
                    f64::INFINITY
                } else {
                    x0.powf(m) * (-x0).exp() / rate
                }
            }
            Cutoff::Lorentzian => {
                if m < 1.0 {
                    x0.powf(m - 1.0) / (1.0 - m)
                } else {
                    f64::INFINITY
                }
            }
            Cutoff::Step => {
                if x0 >= 1.0 {
                    0.0
                } else {
                    (1.0 - x0) * x0.powf(m).max(1.0)
                }
            }
            Cutoff::LorentzianPeak { epsilon: e } => {
                if x0 < 2.0 || m >= 3.0 {
                    f64::INFINITY
                } else {
                    let c = 16.0 / 9.0 * (1.0 + e * e).powi(2);
                    c * x0.powf(m - 3.0) / (3.0 - m)
                }
            }
        }
    }

    /// Points (in units of x) where φ is not smooth or varies sharply.
    pub fn knots(&self) -> Vec<f64> {
        match self {
            Cutoff::Step => vec![1.0],
            Cutoff::LorentzianPeak { epsilon } => vec![1.0, 1.0 + 4.0 * epsilon],
            _ => vec![],
        }
    }
}

/// amplitude · ω^exponent · φ(ω/ω_c) · φ_IR(ω_IR/ω)
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub amplitude: f64,
    pub exponent: f64,
    pub omega_c: f64,
    pub cutoff: Cutoff,
    pub omega_ir: Option<f64>,
}

impl PowerLaw {
    pub fn eval(&self, w: f64) -> f64 {
        let w = w.abs();
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let ir = match self.omega_ir {
            Some(wir) if wir > 0.0 => {
                if w == 0.0 {
                    return 0.0;
                }
                self.cutoff.phi(wir / w)
            }
            _ => 1.0,
        };
        if w == 0.0 {
            return match self.exponent {
                e if e > 0.0 => 0.0,
                e if e == 0.0 => self.amplitude * self.cutoff.phi(0.0),
                _ => f64::INFINITY,
            };
        }
        self.amplitude * w.powf(self.exponent) * self.cutoff.phi(w / self.omega_c) * ir
    }

    /// Bound on ∫_W^∞ f(ω) ω^{-k} dω.
    pub fn tail_bound(&self, w: f64, k: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let m = self.exponent - k;
        self.amplitude.abs()
            * self.omega_c.powf(m + 1.0)
            * self.cutoff.tail_bound(w / self.omega_c, m)
    }

    pub fn knots(&self) -> Vec<f64> {
        self.cutoff.knots().into_iter().map(|x| x * self.omega_c).collect()
    }
}

/// Anything usable as a spectral function 𝒥[ω] on ω ≥ 0.
pub trait Spectral: Sync {
    fn j(&self, w: f64) -> f64;
    /// Bound on ∫_W^∞ 𝒥(ω) ω^{-k} dω.
    fn tail_bound(&self, w: f64, k: f64) -> f64;
    fn knots(&self) -> Vec<f64>;
    /// Characteristic high-frequency scale.
    fn scale(&self) -> f64;
    /// Smallest low-frequency exponent among the components.
    fn low_exponent(&self) -> f64;
    /// d𝒥/dω at 0⁺ (finite only when the lowest exponent is 1).
    fn slope_at_zero(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub s: f64,
    pub alpha: f64,
    pub omega_c: f64,
    pub cutoff: Cutoff,
}

impl SpectralModel {
    pub fn new(s: f64, alpha: f64, omega_c: f64, cutoff: Cutoff) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!("exponent s must be finite, got {s}")));
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidInput(format!("alpha must be ≥ 0, got {alpha}")));
        }
        if !(omega_c > 0.0) {
            return Err(Error::InvalidInput(format!("omega_c must be > 0, got {omega_c}")));
        }
        Ok(SpectralModel {
            s,
            alpha,
            omega_c,
            cutoff,
        })
    }

    pub fn ohmic(alpha: f64, omega_c: f64, cutoff: Cutoff) -> Self {
        SpectralModel {
            s: 1.0,
            alpha,
            omega_c,
            cutoff,
        }
    }

    /// Low-frequency amplitude A0 = α ω_c^{1−s}.
    pub fn a0(&self) -> f64 {
        self.alpha * self.omega_c.powf(1.0 - self.s)
    }

    pub fn power_law(&self) -> PowerLaw {
        PowerLaw {
            amplitude: self.a0() / PI,
            exponent: self.s,
            omega_c: self.omega_c,
            cutoff: self.cutoff,
            omega_ir: None,
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        SpectralModel { alpha, ..*self }
    }
}

impl Spectral for SpectralModel {
    fn j(&self, w: f64) -> f64 {
        self.power_law().eval(w)
    }
    fn tail_bound(&self, w: f64, k: f64) -> f64 {
        self.power_law().tail_bound(w, k)
    }
    fn knots(&self) -> Vec<f64> {
        self.power_law().knots()
    }
    fn scale(&self) -> f64 {
        self.omega_c
    }
    fn low_exponent(&self) -> f64 {
        self.s
    }
    fn slope_at_zero(&self) -> f64 {
        if self.alpha == 0.0 {
            0.0
        } else if self.s == 1.0 {
            self.a0() / PI
        } else if self.s > 1.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Sum of spectral models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpectrum {
    pub parts: Vec<SpectralModel>,
}

impl Spectral for CompositeSpectrum {
    fn j(&self, w: f64) -> f64 {
        self.parts.iter().map(|p| p.j(w)).sum()
    }
    fn tail_bound(&self, w: f64, k: f64) -> f64 {
        self.parts.iter().map(|p| p.tail_bound(w, k)).sum()
    }
    fn knots(&self) -> Vec<f64> {
        self.parts.iter().flat_map(|p| p.knots()).collect()
    }
    fn scale(&self) -> f64 {
        self.parts.iter().map(|p| p.omega_c).fold(0.0, f64::max)
    }
    fn low_exponent(&self) -> f64 {
        self.parts
            .iter()
            .filter(|p| p.alpha > 0.0)
            .map(|p| p.s)
            .fold(f64::INFINITY, f64::min)
    }
    fn slope_at_zero(&self) -> f64 {
        self.parts.iter().map(|p| p.slope_at_zero()).sum()
    }
}

impl<T: Spectral + ?Sized> Spectral for &T {
    fn j(&self, w: f64) -> f64 {
        (**self).j(w)
    }
    fn tail_bound(&self, w: f64, k: f64) -> f64 {
        (**self).tail_bound(w, k)
    }
    fn knots(&self) -> Vec<f64> {
        (**self).knots()
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
    fn low_exponent(&self) -> f64 {
        (**self).low_exponent()
    }
    fn slope_at_zero(&self) -> f64 {
        (**self).slope_at_zero()
    }
}

/// 𝒥[ω] for ω ≥ 0.
pub fn eval_spectral_function(model: &SpectralModel, w: f64) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "spectral function is defined for ω ≥ 0, got {w}"
        )));
    }
    Ok(model.j(w))
}

/// Im G^R_ξξ[ω] = −π sgn(ω) 𝒥[|ω|].
pub fn im_green<S: Spectral + ?Sized>(model: &S, w: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        -PI * w.signum() * model.j(w.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Thermal {
        spectral: SpectralModel,
        kt: f64,
    },
    Freeform {
        p: f64,
        s0: f64,
        omega_c: f64,
        cutoff: Cutoff,
        omega_ir: Option<f64>,
    },
}

impl NoiseModel {
    pub fn thermal(spectral: SpectralModel, kt: f64) -> Result<Self> {
        if !(kt > 0.0) {
            return Err(Error::InvalidInput(format!("kT must be > 0, got {kt}")));
        }
        Ok(NoiseModel::Thermal { spectral, kt })
    }

    pub fn freeform(p: f64, s0: f64, omega_c: f64, cutoff: Cutoff) -> Self {
        NoiseModel::Freeform {
            p,
            s0,
            omega_c,
            cutoff,
            omega_ir: None,
        }
    }

    fn freeform_law(&self) -> Option<PowerLaw> {
        match *self {
            NoiseModel::Freeform {
                p,
                s0,
                omega_c,
                cutoff,
                omega_ir,
            } => Some(PowerLaw {
                amplitude: s0,
                exponent: p,
                omega_c,
                cutoff,
                omega_ir,
            }),
            _ => None,
        }
    }

    /// S̄[ω] for ω ≠ 0; at ω = 0 the limit (possibly infinite) is returned.
    pub fn eval(&self, w: f64) -> f64 {
        let aw = w.abs();
        match self {
            NoiseModel::Thermal { spectral, kt } => {
                if aw == 0.0 {
                    let s = spectral.s;
                    if spectral.alpha == 0.0 || s > 1.0 {
                        0.0
                    } else if s == 1.0 {
                        2.0 * PI * spectral.slope_at_zero() * kt
                    } else {
                        f64::INFINITY
                    }
                } else {
                    PI * spectral.j(aw) * coth(aw / (2.0 * kt))
                }
            }
            NoiseModel::Freeform { .. } => self.freeform_law().map_or(0.0, |l| l.eval(aw)),
        }
    }

    /// S̄[0], failing for spectra that are not integrable at the origin.
    pub fn at_zero(&self) -> Result<f64> {
        if let NoiseModel::Freeform { p, omega_ir, .. } = *self {
            if p <= -1.0 && omega_ir.is_none() {
                return Err(Error::NonIntegrable(format!(
                    "freeform noise with p = {p} ≤ −1 needs an IR cutoff"
                )));
            }
        }
        let v = self.eval(0.0);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonIntegrable("S̄ diverges at ω = 0".into()))
        }
    }

    /// Bound on ∫_W^∞ S̄(ω) ω^{-k} dω.
    pub fn tail_bound(&self, w: f64, k: f64) -> f64 {
        match self {
            NoiseModel::Thermal { spectral, kt } => {
                PI * (1.0 + 2.0 * kt / w) * spectral.tail_bound(w, k)
            }
            NoiseModel::Freeform { .. } => self.freeform_law().map_or(0.0, |l| l.tail_bound(w, k)),
        }
    }

    pub fn knots(&self) -> Vec<f64> {
        match self {
            NoiseModel::Thermal { spectral, .. } => spectral.knots(),
            NoiseModel::Freeform { .. } => self.freeform_law().map_or(vec![], |l| l.knots()),
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            NoiseModel::Thermal { spectral, .. } => spectral.omega_c,
            NoiseModel::Freeform { omega_c, .. } => *omega_c,
        }
    }

    /// Low-frequency exponent p of S̄ ∝ |ω|^p.
    pub fn low_exponent(&self) -> f64 {
        match self {
            NoiseModel::Thermal { spectral, .. } => spectral.s - 1.0,
            NoiseModel::Freeform { p, omega_ir, .. } => {
                if omega_ir.is_some() {
                    f64::INFINITY
                } else {
                    *p
                }
            }
        }
    }
}

/// S̄[ω] (even in ω).
pub fn eval_nsd(model: &NoiseModel, w: f64) -> Result<f64> {
    if w == 0.0 {
        model.at_zero()
    } else {
        Ok(model.eval(w))
    }
}

/// kT_eff = ω / (2 arccoth(S̄/(π𝒥))).
pub fn effective_temperature(nsd: f64, j: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::InvalidInput(format!("ω must be > 0, got {w}")));
    }
    if !(j > 0.0) {
        return Err(Error::InvalidInput(format!("𝒥 must be > 0, got {j}")));
    }
    let ratio = nsd / (PI * j);
    if !(ratio > 1.0) {
        return Err(Error::SubVacuum { ratio });
    }
    Ok(w / (2.0 * arccoth(ratio)))
}

fn pv_opts(opts: &QuadOptions) -> QuadOptions {
    QuadOptions {
        abs_tol: opts.abs_tol * 1e-2,
        rel_tol: opts.rel_tol * 1e-2,
        max_panels: opts.max_panels,
    }
}

fn semi_infinite<F, B>(f: &F, start: f64, scale: f64, knots: &[f64], bound: &B, opts: &QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
    B: Fn(f64) -> f64,
{
    let shifted = |x: f64| f(x + start);
    let env = |x: f64| f(x + start);
    let prob = OscProblem {
        direct: &shifted,
        terms: vec![OscTerm {
            kernel: TrigKernel::constant(1.0),
            envelope: &env,
        }],
        tau0: Some(2.0 * PI * 16.0 / scale),
        cap: f64::INFINITY,
        knots: knots.iter().filter(|&&k| k > start).map(|k| k - start).collect(),
        scale,
    };
    let b = |x: f64| bound(x + start);
    Ok(quad::integrate_oscillatory(&prob, &b, opts)?.value)
}

/// Re G^R_ξξ[ω] from the Kramers–Kronig principal value of Im G^R.
pub fn kramers_kronig_re<S: Spectral + ?Sized>(model: &S, w: f64, opts: &QuadOptions) -> Result<f64> {
    let w = w.abs();
    let scale = model.scale();
    let knots = model.knots();
    let o = pv_opts(opts);
    if model.low_exponent() <= 0.0 && model.j(scale * 1e-300).abs() > 0.0 {
        return Err(Error::NonIntegrable(
            "𝒥/ω is not integrable at the origin (s ≤ 0)".into(),
        ));
    }
    if w == 0.0 {
        let f = |x: f64| if x > 0.0 { model.j(x) / x } else { 0.0 };
        let bound = |x: f64| model.tail_bound(x, 1.0);
        let v = semi_infinite(&f, 0.0, scale, &knots, &bound, &o)?;
        return Ok(-2.0 * v);
    }
    let jump = |k: f64| (model.j(k * (1.0 - 1e-9)) - model.j(k * (1.0 + 1e-9))).abs() > 1e-6 * model.j(k * (1.0 - 1e-9)).abs();
    if knots.iter().any(|&k| (k - w).abs() <= 1e-12 * w && jump(k)) {
        return Err(Error::NonIntegrable(format!(
            "principal value diverges logarithmically at the cutoff discontinuity ω = {w}"
        )));
    }
    let h = 0.5 * scale.min(w);
    let jw = model.j(w);
    // [0, w−h]
    let left = |x: f64| model.j(x) / (x - w) + model.j(x) / (x + w);
    let mut br = vec![0.0, w - h];
    br.extend(knots.iter().copied().filter(|&k| k > 0.0 && k < w - h));
    let a = quad::integrate(&left, &br, f64::INFINITY, &o)?.value;
    // symmetric window around the pole
    let win = |u: f64| (model.j(w + u) - model.j(w - u)) / u + model.j(w + u) / (2.0 * w + u) + model.j(w - u) / (2.0 * w - u);
    let mut br = vec![0.0, h];
    br.extend(knots.iter().map(|k| (k - w).abs()).filter(|&u| u > 0.0 && u < h));
    let b = quad::integrate(&win, &br, f64::INFINITY, &o)?.value;
    let _ = jw;
    // [w+h, ∞)
    let right = |x: f64| {
        let j = model.j(x);
        2.0 * x * j / (x * x - w * w)
    };
    let bound = |x: f64| {
        if x >= 2.0 * w {
            4.0 * model.tail_bound(x, 1.0)
        } else {
            f64::INFINITY
        }
    };
    let c = semi_infinite(&right, w + h, scale, &knots, &bound, &o)?;
    Ok(-(a + b + c))
}

/// Retarded response in time, G^R(t) = −2Θ(t)∫₀^∞ 𝒥[ω] sin(ωt) dω.
pub fn retarded_green_time<S: Spectral + ?Sized>(model: &S, t: f64, opts: &QuadOptions) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("time must be finite, got {t}")));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let direct = |w: f64| model.j(w) * (w * t).sin();
    let env = |w: f64| model.j(w);
    let scale = model.scale();
    let prob = OscProblem {
        direct: &direct,
        terms: vec![OscTerm {
            kernel: TrigKernel {
                terms: vec![(1, num_complex::Complex64::new(0.0, -1.0))],
            },
            envelope: &env,
        }],
        tau0: Some(t),
        cap: PI / (4.0 * t),
        knots: model.knots(),
        scale,
    };
    let bound = |w: f64| {
        let abs = model.tail_bound(w, 0.0);
        if w >= 2.0 * scale {
            abs.min(2.0 * model.j(w) / t)
        } else {
            abs
        }
    };
    Ok(-2.0 * quad::integrate_oscillatory(&prob, &bound, opts)?.value)
}

/// Bath block of a scenario configuration.
///
/// `alpha` enables the spectral function; `kT` adds thermal noise on top of it,
/// while `p` and `S0` describe a free-form noise spectrum instead.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(rename = "kT", default, skip_serializing_if = "Option::is_none")]
    pub kt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "S0", default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
}

impl BathConfig {
    pub fn omega_c(&self) -> f64 {
        self.omega_c.unwrap_or(1.0)
    }

    pub fn cutoff(&self) -> Result<Cutoff> {
        Cutoff::from_name(self.cutoff.as_deref().unwrap_or("gaussian"), self.epsilon)
    }

    pub fn spectral(&self) -> Result<Option<SpectralModel>> {
        match self.alpha {
            None => Ok(None),
            Some(alpha) => SpectralModel::new(self.s.unwrap_or(1.0), alpha, self.omega_c(), self.cutoff()?).map(Some),
        }
    }

    pub fn noise(&self) -> Result<Option<NoiseModel>> {
        match (self.kt, self.p, self.s0) {
            (None, None, None) => Ok(None),
            (Some(kt), None, None) => {
                let spectral = self
                    .spectral()?
                    .ok_or_else(|| Error::Config("`kT` requires `alpha` for a thermal bath".into()))?;
                NoiseModel::thermal(spectral, kt).map(Some)
            }
            (None, Some(p), Some(s0)) => {
                if !(s0 >= 0.0) {
                    return Err(Error::Config(format!("`S0` must be ≥ 0, got {s0}")));
                }
                Ok(Some(NoiseModel::freeform(p, s0, self.omega_c(), self.cutoff()?)))
            }
            (Some(_), _, _) => Err(Error::Config("`kT` cannot be combined with `p`/`S0`".into())),
            _ => Err(Error::Config("free-form noise needs both `p` and `S0`".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_ohmic(alpha: f64) -> SpectralModel {
        SpectralModel::ohmic(alpha, 1.0, Cutoff::Gaussian)
    }

    #[test]
    fn spectral_function_examples() {
        let m = gauss_ohmic(0.1);
        let v = eval_spectral_function(&m, 1.0).unwrap();
        assert!((v - 0.1 / PI * (-1f64).exp()).abs() < 1e-16);
        let half = SpectralModel::new(0.5, 0.3, 2.0, Cutoff::Lorentzian).unwrap();
        assert_eq!(eval_spectral_function(&half, 0.0).unwrap(), 0.0);
        let peak = SpectralModel::ohmic(1.0, 1.0, Cutoff::LorentzianPeak { epsilon: 0.1 });
        let expect = (1.0 / PI) * 1.01 * 1.01 / (0.01 * 4.01);
        assert!((peak.j(1.0) - expect).abs() < 1e-12);
        assert!((peak.j(1.0) - 8.097_454_236_810_1).abs() < 1e-9);
        assert!(eval_spectral_function(&m, -1.0).is_err());
        let step = SpectralModel::ohmic(0.1, 1.0, Cutoff::Step);
        assert_eq!(step.j(1.0), 0.0);
        assert!(step.j(1.0 - 1e-12) > 0.0);
    }

    #[test]
    fn nsd_limits() {
        let m = gauss_ohmic(0.1);
        let n = NoiseModel::thermal(m, 0.01).unwrap();
        assert!((eval_nsd(&n, 0.0).unwrap() - 2.0 * 0.1 * 0.01).abs() < 1e-15);
        assert!((n.eval(1e-7) - 0.002).abs() < 1e-10);
        let hi = n.eval(2.0);
        assert!((hi / (PI * m.j(2.0)) - 1.0).abs() < 1e-15);
        assert_eq!(n.eval(-0.3), n.eval(0.3));
        let bad = NoiseModel::freeform(-1.5, 1.0, 1.0, Cutoff::Gaussian);
        assert!(bad.at_zero().is_err());
    }

    #[test]
    fn effective_temperature_examples() {
        let m = gauss_ohmic(0.1);
        let n = NoiseModel::thermal(m, 0.37).unwrap();
        for &w in &[1e-3, 0.1, 1.0, 3.0] {
            let t = effective_temperature(n.eval(w), m.j(w), w).unwrap();
            assert!((t / 0.37 - 1.0).abs() < 1e-12);
        }
        let free = NoiseModel::freeform(0.0, 0.002, 1.0, Cutoff::Gaussian);
        let w = 1e-4;
        let t = effective_temperature(free.eval(w), m.j(w), w).unwrap();
        assert!((t - 0.01).abs() < 1e-6);
        assert!(matches!(
            effective_temperature(0.5, 1.0, 1.0),
            Err(Error::SubVacuum { .. })
        ));
    }

    #[test]
    fn kramers_kronig_closed_form_at_zero() {
        let m = gauss_ohmic(0.1);
        let v = kramers_kronig_re(&m, 0.0, &QuadOptions::default()).unwrap();
        let exact = -0.1 / PI.sqrt();
        assert!((v / exact - 1.0).abs() < 1e-8, "{v} vs {exact}");
        assert_eq!(kramers_kronig_re(&m.with_alpha(0.0), 0.7, &QuadOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn kramers_kronig_gaussian_ohmic_dawson() {
        // Re G(ω) = −(α/√π)(1 − 2x D(x)) for 𝒥 = (α/π) ω e^{−ω²}, D the Dawson function
        let m = gauss_ohmic(0.1);
        let dawson = |x: f64| {
            let f = |t: f64| (t * t - x * x).exp();
            x.signum() * quad::integrate(&f, &[0.0, x.abs()], f64::INFINITY, &QuadOptions::default()).unwrap().value
        };
        for &w in &[0.3, 1.0, 2.5] {
            let v = kramers_kronig_re(&m, w, &QuadOptions::default()).unwrap();
            let exact = -(0.1 / PI.sqrt()) * (1.0 - 2.0 * w * dawson(w));
            assert!((v - exact).abs() < 1e-9, "ω={w}: {v} vs {exact}");
        }
    }

    #[test]
    fn green_time_causal_and_gaussian_closed_form() {
        let m = gauss_ohmic(0.1);
        let o = QuadOptions::default();
        assert_eq!(retarded_green_time(&m, -1.0, &o).unwrap(), 0.0);
        assert_eq!(retarded_green_time(&m, 0.0, &o).unwrap(), 0.0);
        for &t in &[0.1, 1.0, 5.0] {
            let g = retarded_green_time(&m, t, &o).unwrap();
            let exact = -2.0 * (0.1 / PI) * (PI.sqrt() / 4.0) * t * (-t * t / 4.0).exp();
            assert!((g - exact).abs() < 1e-11, "t={t}: {g} vs {exact}");
        }
    }
}
