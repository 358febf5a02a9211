//! Long-time power laws ζ ~ C_ζ S0 t_f^{1−p} and Φ_q ~ C_Φ A0 t_f^{1−s}, the
//! Ohmic plateau, and closed-form Hahn phases for s = 5/2.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{self, Cutoff, SpectralModel};
use crate::control::{check_balanced, PulseSequence};
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::special::{gamma, gamma_pole_expansion};

/// Σ c_k b_k^{1−x}.
struct PowerSum(Vec<(f64, f64)>);

impl PowerSum {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().map(|(c, b)| c * b.powf(1.0 - x)).sum()
    }
    fn deriv(&self, x: f64) -> f64 {
        self.0.iter().map(|(c, b)| -c * b.ln() * b.powf(1.0 - x)).sum()
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn zeta_bracket(seq: &PulseSequence) -> PowerSum {
    let a = &seq.fractions;
    let l = a.len();
    let mut terms = Vec::new();
    for i in 0..l {
        for j in 0..i {
            // ℓ = i+1 > ℓ' = j+1
            terms.push((4.0 * sign(i + j), a[i] - a[j]));
        }
    }
    for (i, &ai) in a.iter().enumerate() {
        let s = sign(i + 1);
        terms.push((2.0 * s * sign(l + 1), 1.0 - ai));
        terms.push((2.0 * s, ai));
    }
    terms.push((sign(l + 1), 1.0));
    PowerSum(terms)
}

fn phi_bracket(seq: &PulseSequence) -> PowerSum {
    let l = seq.fractions.len();
    let mut terms: Vec<(f64, f64)> = seq
        .fractions
        .iter()
        .enumerate()
        .map(|(i, &a)| (2.0 * sign(i + 1), a))
        .collect();
    terms.push((sign(l + 1), 1.0));
    PowerSum(terms)
}

/// Γ(x−1)·B(x)·trig(x)/π, with the removable poles of Γ handled by the
/// first-order expansion Γ(−n+δ) = r/δ + c.
fn gamma_product(x: f64, bracket: &PowerSum, trig: &dyn Fn(f64) -> f64, dtrig: &dyn Fn(f64) -> f64) -> Result<f64> {
    let g_arg = x - 1.0;
    let n = (-g_arg).round();
    if n >= 0.0 && (g_arg + n).abs() < 1e-9 {
        let x0 = 1.0 - n;
        let p0 = bracket.eval(x0) * trig(x0);
        let dp = bracket.deriv(x0) * trig(x0) + bracket.eval(x0) * dtrig(x0);
        if p0.abs() > 1e-10 * (dp.abs() + 1.0) {
            return Err(Error::InvalidInput(format!(
                "coefficient diverges at exponent {x0}"
            )));
        }
        let (r, _) = gamma_pole_expansion(n as u32);
        let delta = g_arg + n;
        // second-order bracket term keeps the expansion accurate for tiny δ ≠ 0
        let h = 1e-4;
        let p = |y: f64| bracket.eval(y) * trig(y);
        let d2 = (p(x0 + h) - 2.0 * p0 + p(x0 - h)) / (h * h);
        let (_, c) = gamma_pole_expansion(n as u32);
        return Ok((r * dp + delta * (c * dp + 0.5 * r * d2)) / PI);
    }
    Ok(gamma(g_arg) * bracket.eval(x) * trig(x) / PI)
}

fn require_balanced(seq: &PulseSequence) -> Result<()> {
    if !check_balanced(seq) {
        return Err(Error::InvalidInput(
            "asymptotic coefficients require a balanced sequence (F[0] = 0)".into(),
        ));
    }
    Ok(())
}

/// C_ζ(p) for a balanced sequence, −3 < p < 1.
pub fn coeff_zeta(p: f64, seq: &PulseSequence) -> Result<f64> {
    require_balanced(seq)?;
    if !(p > -3.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!(
            "p = {p} lies in the cutoff-dependent regime (need −3 < p < 1)"
        )));
    }
    let trig = |x: f64| (0.5 * PI * x).sin();
    let dtrig = |x: f64| 0.5 * PI * (0.5 * PI * x).cos();
    gamma_product(p, &zeta_bracket(seq), &trig, &dtrig)
}

/// C_Φ(s) for a balanced sequence, −2 < s < 2, normalized so Φ_q ~ C_Φ A0 t_f^{1−s}.
pub fn coeff_phi(s: f64, seq: &PulseSequence) -> Result<f64> {
    require_balanced(seq)?;
    if !(s > -2.0 && s < 2.0) {
        return Err(Error::InvalidInput(format!(
            "s = {s} lies in the cutoff-dependent regime (need −2 < s < 2)"
        )));
    }
    let trig = |x: f64| (0.5 * PI * x).cos();
    let dtrig = |x: f64| -0.5 * PI * (0.5 * PI * x).sin();
    gamma_product(s, &phi_bracket(seq), &trig, &dtrig)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Dephasing,
    Qps,
}

/// value(t_f) = coefficient · t_f^{1−exponent}
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLaw {
    pub kind: LawKind,
    pub exponent: f64,
    pub coefficient: f64,
}

impl AsymptoticLaw {
    /// ζ ~ C_ζ(p) S0 t_f^{1−p}.
    pub fn dephasing(p: f64, s0: f64, seq: &PulseSequence) -> Result<Self> {
        Ok(AsymptoticLaw {
            kind: LawKind::Dephasing,
            exponent: p,
            coefficient: coeff_zeta(p, seq)? * s0,
        })
    }

    /// Φ_q ~ C_Φ(s) A0 t_f^{1−s}, scaled by 2β_V.
    pub fn qps(model: &SpectralModel, beta_v: f64, seq: &PulseSequence) -> Result<Self> {
        Ok(AsymptoticLaw {
            kind: LawKind::Qps,
            exponent: model.s,
            coefficient: coeff_phi(model.s, seq)? * model.a0() * 2.0 * beta_v,
        })
    }

    pub fn eval(&self, t_f: f64) -> f64 {
        self.coefficient * t_f.powf(1.0 - self.exponent)
    }
}

pub fn asymptotic_qps(law: &AsymptoticLaw, t_f: f64) -> f64 {
    law.eval(t_f)
}

pub fn asymptotic_zeta(law: &AsymptoticLaw, t_f: f64) -> f64 {
    law.eval(t_f)
}

/// Φ_q(∞) = (F[0]/2) Re G^R[0] + (π/2) 𝒥'(0) for an Ohmic model and β_V = ½.
pub fn ohmic_plateau(model: &SpectralModel, f0: f64, opts: &QuadOptions) -> Result<f64> {
    if model.s != 1.0 {
        return Err(Error::InvalidInput(format!(
            "the plateau exists only for s = 1, got s = {}",
            model.s
        )));
    }
    if model.alpha == 0.0 {
        return Ok(0.0);
    }
    let static_shift = if f0 != 0.0 {
        0.5 * f0 * bath::kramers_kronig_re(model, 0.0, opts)?
    } else {
        0.0
    };
    Ok(static_shift + 0.5 * model.a0())
}

/// Hahn Φ_q for s = 5/2 with exponential cutoff (closed form).
pub fn hahn_qps_exp_cutoff_s52(alpha: f64, omega_c: f64, t_f: f64) -> f64 {
    let a0 = alpha * omega_c.powf(-1.5);
    let x = omega_c * t_f;
    let e = Complex64::from_polar(1.0, PI / 4.0);
    let z = 2f64.powf(1.5) * e * Complex64::new(1.0, 2.0 / x).powf(-1.5)
        - 0.5 * e * Complex64::new(1.0, 1.0 / x).powf(-1.5);
    a0 / (2.0 * PI.sqrt()) * t_f.powf(-1.5) * 2.0 * z.re
}

/// Hahn Φ_q for s = 5/2 with step cutoff (closed form up to a smooth 1D integral).
pub fn hahn_qps_step_cutoff_s52(alpha: f64, omega_c: f64, t_f: f64) -> Result<f64> {
    let a0 = alpha * omega_c.powf(-1.5);
    let a = 0.25 * omega_c * t_f;
    // ∫₀¹ x^{−1/2} sin⁴(a x) dx = 2∫₀¹ sin⁴(a u²) du
    let f = |u: f64| 2.0 * (a * u * u).sin().powi(4);
    let cap = if a > 1.0 { PI / (8.0 * a) } else { f64::INFINITY };
    let integral = quad::integrate(&f, &[0.0, 1.0], cap, &QuadOptions::default())?.value;
    let sq = omega_c.sqrt();
    Ok(8.0 * a0 / PI * (sq / t_f * a.sin().powi(4) - sq / (2.0 * t_f) * integral))
}

/// Model used by the closed forms above, for cross-checks.
pub fn s52_model(alpha: f64, omega_c: f64, cutoff: Cutoff) -> SpectralModel {
    SpectralModel {
        s: 2.5,
        alpha,
        omega_c,
        cutoff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hahn() -> PulseSequence {
        PulseSequence::hahn(1.0).unwrap()
    }

    #[test]
    fn hahn_phi_coefficients() {
        assert!((coeff_phi(1.0, &hahn()).unwrap() - 0.5).abs() < 1e-12);
        let half = (1.0 - 2f64.sqrt()) * (-2.0 * PI.sqrt()) * (PI / 4.0).cos() / PI;
        assert!((coeff_phi(0.5, &hahn()).unwrap() - half).abs() < 1e-12);
        assert!((coeff_phi(0.5, &hahn()).unwrap() - 0.330_494_606_292_647_3).abs() < 1e-13);
        assert!((coeff_phi(1.5, &hahn()).unwrap() - 0.729_436_886_694_079_9).abs() < 1e-13);
        assert!((coeff_phi(0.5, &hahn()).unwrap() - 0.33047).abs() < 1e-4);
        assert!((coeff_phi(1.5, &hahn()).unwrap() - 0.72945).abs() < 1e-4);
    }

    #[test]
    fn hahn_zeta_coefficients() {
        assert!((coeff_zeta(0.0, &hahn()).unwrap() - 0.5).abs() < 1e-12);
        for &p in &[-2.5, -1.5, -0.5, 0.5] {
            let closed = (1.0 - 2f64.powf(p + 1.0)) * gamma(p - 1.0) * (0.5 * PI * p).sin() / PI;
            assert!((coeff_zeta(p, &hahn()).unwrap() - closed).abs() < 1e-12 * closed.abs().max(1.0));
        }
    }

    #[test]
    fn coefficients_are_continuous_at_poles() {
        for seq in [hahn(), PulseSequence::cpmg(4, 1.0).unwrap()] {
            for &p0 in &[-2.0, -1.0, 0.0] {
                let c = coeff_zeta(p0, &seq).unwrap();
                for d in [1e-6, -1e-6] {
                    assert!((coeff_zeta(p0 + d, &seq).unwrap() - c).abs() < 1e-4, "p0={p0}");
                }
            }
            for &s0 in &[-1.0, 0.0, 1.0] {
                let c = coeff_phi(s0, &seq).unwrap();
                for d in [1e-6, -1e-6] {
                    assert!((coeff_phi(s0 + d, &seq).unwrap() - c).abs() < 1e-4, "s0={s0}");
                }
            }
        }
    }

    #[test]
    fn window_and_balance_enforced() {
        assert!(coeff_phi(2.5, &hahn()).is_err());
        assert!(coeff_zeta(1.0, &hahn()).is_err());
        assert!(coeff_phi(1.0, &PulseSequence::ramsey(1.0).unwrap()).is_err());
    }

    #[test]
    fn law_scaling() {
        let m = SpectralModel::new(0.5, 0.1, 1.0, Cutoff::Gaussian).unwrap();
        let law = AsymptoticLaw::qps(&m, 0.5, &hahn()).unwrap();
        assert!((law.eval(400.0) / law.eval(100.0) - 2.0).abs() < 1e-14);
        let ohm = SpectralModel::ohmic(0.1, 1.0, Cutoff::Gaussian);
        let law = AsymptoticLaw::qps(&ohm, 0.5, &hahn()).unwrap();
        assert_eq!(law.eval(10.0), law.eval(1e4));
        assert!((law.eval(1.0) - 0.05).abs() < 1e-14);
    }

    #[test]
    fn plateau_examples() {
        let o = QuadOptions::default();
        let m = SpectralModel::ohmic(0.1, 1.0, Cutoff::Gaussian);
        assert!((ohmic_plateau(&m, 0.0, &o).unwrap() - 0.05).abs() < 1e-15);
        let ramsey = ohmic_plateau(&m, 10.0, &o).unwrap();
        assert!((ramsey - (5.0 * (-0.1 / PI.sqrt()) + 0.05)).abs() < 1e-9);
        assert_eq!(ohmic_plateau(&m.with_alpha(0.0), 3.0, &o).unwrap(), 0.0);
        assert!(ohmic_plateau(&SpectralModel::new(0.5, 0.1, 1.0, Cutoff::Gaussian).unwrap(), 0.0, &o).is_err());
    }

    #[test]
    fn s52_closed_forms() {
        // arbitrary-precision values of (4A0/π)∫ω^{1/2}φ(ω) sin(ωt/2) sin²(ωt/4) dω
        assert!((hahn_qps_exp_cutoff_s52(1.0, 1.0, 1.0) - 0.150_827_800_115_503).abs() < 1e-14);
        assert!((hahn_qps_exp_cutoff_s52(1.0, 1.0, 10.0) - 0.036_126_589_938_631_4).abs() < 1e-15);
        assert!((hahn_qps_exp_cutoff_s52(1.0, 1.0, 100.0) - 0.000_958_939_589_871_205).abs() < 1e-16);
        assert!((hahn_qps_step_cutoff_s52(1.0, 1.0, 10.0).unwrap() + 0.044_897_761_858_772_6).abs() < 1e-12);
        assert!((hahn_qps_step_cutoff_s52(1.0, 1.0, 37.3).unwrap() + 0.021_675_956_665_567).abs() < 1e-12);
        assert_eq!(hahn_qps_exp_cutoff_s52(0.0, 1.0, 5.0), 0.0);
    }
}
