//! Pulse sequences, filter functions F(t)/F[ω], quench schedules η(t)/η[ω],
//! and the periodic NV switching construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::sinc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub level: f64,
}

/// Piecewise-constant function of time, a sum of weighted indicator segments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Piecewise {
    pub segments: Vec<Segment>,
}

impl Piecewise {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let mut sorted = segments;
        sorted.retain(|s| s.level != 0.0 && s.end > s.start);
        sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
        for s in &sorted {
            if !(s.start.is_finite() && s.end.is_finite() && s.level.is_finite()) {
                return Err(Error::InvalidInput("segment bounds must be finite".into()));
            }
        }
        for w in sorted.windows(2) {
            if w[1].start < w[0].end - 1e-12 * w[0].end.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "overlapping segments [{}, {}] and [{}, {}]",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        Ok(Piecewise { segments: sorted })
    }

    /// Value on [start, end) of the covering segment, 0 elsewhere.
    pub fn eval(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.start <= t && t < s.end)
            .map_or(0.0, |s| s.level)
    }

    /// ∫ f(t) dt.
    pub fn integral(&self) -> f64 {
        self.segments.iter().map(|s| s.level * (s.end - s.start)).sum()
    }

    /// ∫ f(t) e^{iωt} dt, evaluated per segment without cancellation at small ω.
    pub fn transform(&self, w: f64) -> Complex64 {
        self.segments
            .iter()
            .map(|s| {
                let len = s.end - s.start;
                Complex64::from_polar(s.level * len * sinc(0.5 * w * len), 0.5 * w * (s.start + s.end))
            })
            .sum()
    }

    /// Jump representation: iω·transform(ω) = Σ c_j e^{iω t_j}.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(2 * self.segments.len());
        for s in &self.segments {
            out.push((s.start, -s.level));
            out.push((s.end, s.level));
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(out.len());
        for (t, c) in out {
            match merged.last_mut() {
                Some(last) if (last.0 - t).abs() <= 1e-14 * t.abs().max(1.0) => last.1 += c,
                _ => merged.push((t, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        merged
    }

    pub fn shifted(&self, dt: f64) -> Piecewise {
        Piecewise {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    start: s.start + dt,
                    end: s.end + dt,
                    level: s.level,
                })
                .collect(),
        }
    }

    pub fn scaled(&self, k: f64) -> Piecewise {
        Piecewise {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    level: s.level * k,
                    ..*s
                })
                .collect(),
        }
    }

    pub fn support_end(&self) -> f64 {
        self.segments.iter().map(|s| s.end).fold(0.0, f64::max)
    }

    /// Breakpoints of the function, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.jumps().into_iter().map(|(t, _)| t).collect()
    }
}

/// π-pulse sequence: fractions 0 < α_1 < … < α_L < 1 of the total time t_f.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub fractions: Vec<f64>,
    pub t_f: f64,
}

impl PulseSequence {
    pub fn new(fractions: Vec<f64>, t_f: f64) -> Result<Self> {
        if !(t_f > 0.0 && t_f.is_finite()) {
            return Err(Error::InvalidInput(format!("t_f must be positive, got {t_f}")));
        }
        let mut prev = 0.0;
        for &a in &fractions {
            if !(a > prev && a < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "pulse fractions must be strictly increasing in (0,1), got {fractions:?}"
                )));
            }
            prev = a;
        }
        Ok(PulseSequence { fractions, t_f })
    }

    pub fn ramsey(t_f: f64) -> Result<Self> {
        Self::new(vec![], t_f)
    }

    pub fn hahn(t_f: f64) -> Result<Self> {
        Self::new(vec![0.5], t_f)
    }

    /// CPMG-n: pulses at (k − ½)/n.
    pub fn cpmg(n: usize, t_f: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("CPMG needs at least one pulse".into()));
        }
        Self::new((1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect(), t_f)
    }

    /// `ramsey`, `hahn` or `cpmg:<n>`.
    pub fn preset(name: &str, t_f: f64) -> Result<Self> {
        match name {
            "ramsey" => Self::ramsey(t_f),
            "hahn" => Self::hahn(t_f),
            _ => {
                if let Some(n) = name.strip_prefix("cpmg:") {
                    let n: usize = n
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad CPMG pulse count in `{name}`")))?;
                    Self::cpmg(n, t_f)
                } else {
                    Err(Error::Config(format!("unknown sequence preset `{name}`")))
                }
            }
        }
    }

    pub fn with_total_time(&self, t_f: f64) -> Result<Self> {
        Self::new(self.fractions.clone(), t_f)
    }

    pub fn pulse_count(&self) -> usize {
        self.fractions.len()
    }

    /// F(t) as a piecewise function on (0, t_f).
    pub fn segments(&self) -> Piecewise {
        let mut edges = Vec::with_capacity(self.fractions.len() + 2);
        edges.push(0.0);
        edges.extend(self.fractions.iter().map(|a| a * self.t_f));
        edges.push(self.t_f);
        let segments = edges
            .windows(2)
            .enumerate()
            .map(|(i, w)| Segment {
                start: w[0],
                end: w[1],
                level: if i % 2 == 0 { 1.0 } else { -1.0 },
            })
            .collect();
        Piecewise { segments }
    }

    /// 2Σ(−1)^ℓ α_ℓ + (−1)^{L+1}, equal to F[0]/t_f.
    pub fn balance_residual(&self) -> f64 {
        let l = self.fractions.len();
        let sum: f64 = self
            .fractions
            .iter()
            .enumerate()
            .map(|(i, a)| if i % 2 == 0 { -a } else { *a })
            .sum();
        2.0 * sum + if l.is_multiple_of(2) { -1.0 } else { 1.0 }
    }

    /// F[0] = ∫F(t)dt.
    pub fn f0(&self) -> f64 {
        -self.balance_residual() * self.t_f
    }
}

/// F(t): +1 before the first pulse, alternating at each pulse, 0 outside (0, t_f).
pub fn filter_time(seq: &PulseSequence, t: f64) -> f64 {
    if t <= 0.0 || t >= seq.t_f {
        return 0.0;
    }
    let flips = seq.fractions.iter().filter(|&&a| a * seq.t_f <= t).count();
    if flips % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// F[ω] = ∫ F(t) e^{iωt} dt.
pub fn filter_freq(seq: &PulseSequence, w: f64) -> Complex64 {
    if w == 0.0 {
        return Complex64::new(seq.f0(), 0.0);
    }
    seq.segments().transform(w)
}

pub fn check_balanced(seq: &PulseSequence) -> bool {
    seq.balance_residual().abs() < 1e-12
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitState {
    Down,
    Up,
}

impl QubitState {
    pub fn flipped(self) -> Self {
        match self {
            QubitState::Down => QubitState::Up,
            QubitState::Up => QubitState::Down,
        }
    }

    /// Quench coefficient of the proportional form V = β_V ξ.
    pub fn beta_v(self) -> f64 {
        match self {
            QubitState::Down => 0.5,
            QubitState::Up => -0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchSchedule {
    pub eta: Piecewise,
    pub beta_v: f64,
    pub initial_state: QubitState,
}

impl QuenchSchedule {
    /// η = Θ(t)Θ(t_f − t) with β_V set by the initial qubit state.
    pub fn step(t_f: f64, initial_state: QubitState) -> Self {
        QuenchSchedule {
            eta: Piecewise {
                segments: vec![Segment {
                    start: 0.0,
                    end: t_f,
                    level: 1.0,
                }],
            },
            beta_v: initial_state.beta_v(),
            initial_state,
        }
    }

    pub fn empty() -> Self {
        QuenchSchedule {
            eta: Piecewise::default(),
            beta_v: 0.5,
            initial_state: QubitState::Down,
        }
    }

    pub fn new(segments: Vec<Segment>, beta_v: f64, initial_state: QubitState) -> Result<Self> {
        for s in &segments {
            if ![-1.0, 0.0, 1.0].contains(&s.level) {
                return Err(Error::InvalidInput(format!(
                    "quench levels must be −1, 0 or +1, got {}",
                    s.level
                )));
            }
        }
        Ok(QuenchSchedule {
            eta: Piecewise::new(segments)?,
            beta_v,
            initial_state,
        })
    }

    /// Same schedule prepared in the opposite qubit state: β_V → −β_V.
    pub fn flipped(&self) -> Self {
        QuenchSchedule {
            eta: self.eta.clone(),
            beta_v: -self.beta_v,
            initial_state: self.initial_state.flipped(),
        }
    }

    pub fn eta_time(&self, t: f64) -> f64 {
        self.eta.eval(t)
    }

    pub fn is_step(&self, t_f: f64) -> bool {
        let s = &self.eta.segments;
        s.len() == 1 && s[0].start == 0.0 && (s[0].end - t_f).abs() <= 1e-14 * t_f && s[0].level == 1.0
    }
}

/// η[ω] = Σ level·(e^{iω·end} − e^{iω·start})/(iω).
pub fn quench_freq(sched: &QuenchSchedule, w: f64) -> Complex64 {
    if w == 0.0 {
        return Complex64::new(sched.eta.integral(), 0.0);
    }
    sched.eta.transform(w)
}

/// Periodic NV switching plan: templates F₀, η₀ on [0, 2T] repeated M times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicNvPlan {
    pub half_period: f64,
    pub repetitions: usize,
    pub base_filter: Piecewise,
    pub base_quench: Piecewise,
    pub beta_v: f64,
}

impl PeriodicNvPlan {
    pub fn t_f(&self) -> f64 {
        2.0 * self.repetitions as f64 * self.half_period
    }

    pub fn omega0(&self) -> f64 {
        std::f64::consts::PI / self.half_period
    }

    fn repeat(&self, base: &Piecewise) -> Piecewise {
        let period = 2.0 * self.half_period;
        let mut segs: Vec<Segment> = Vec::new();
        for k in 0..self.repetitions {
            for s in &base.shifted(k as f64 * period).segments {
                match segs.last_mut() {
                    Some(last)
                        if last.level == s.level
                            && (last.end - s.start).abs() <= 1e-12 * period =>
                    {
                        last.end = s.end
                    }
                    _ => segs.push(*s),
                }
            }
        }
        Piecewise { segments: segs }
    }

    /// Full filter F(t) over [0, t_f].
    pub fn filter(&self) -> Piecewise {
        self.repeat(&self.base_filter)
    }

    /// Full quench η(t) over [0, t_f].
    pub fn quench(&self) -> QuenchSchedule {
        QuenchSchedule {
            eta: self.repeat(&self.base_quench),
            beta_v: self.beta_v,
            initial_state: QubitState::Down,
        }
    }

    /// Pulse sequence equivalent to the repeated filter template.
    pub fn sequence(&self) -> Result<PulseSequence> {
        let f = self.filter();
        let t_f = self.t_f();
        let jumps = f.jumps();
        let interior: Vec<f64> = jumps
            .iter()
            .filter(|(t, _)| *t > 1e-12 * t_f && *t < t_f * (1.0 - 1e-12))
            .map(|(t, _)| t / t_f)
            .collect();
        let seq = PulseSequence::new(interior, t_f)?;
        if (seq.segments().integral() - f.integral()).abs() > 1e-9 * t_f {
            return Err(Error::InvalidInput(
                "filter template is not a ±1 toggling function starting at +1".into(),
            ));
        }
        Ok(seq)
    }
}

/// The switching plan with π-pulses at ℓT/2 (odd ℓ) and η alternating −1/+1 every T.
pub fn build_nv_plan(m: usize, t_half: f64) -> Result<PeriodicNvPlan> {
    if m == 0 {
        return Err(Error::InvalidInput("M must be ≥ 1".into()));
    }
    if !(t_half > 0.0 && t_half.is_finite()) {
        return Err(Error::InvalidInput(format!("T must be positive, got {t_half}")));
    }
    let t = t_half;
    let seg = |a: f64, b: f64, level: f64| Segment { start: a, end: b, level };
    Ok(PeriodicNvPlan {
        half_period: t,
        repetitions: m,
        base_filter: Piecewise {
            segments: vec![
                seg(0.0, 0.5 * t, 1.0),
                seg(0.5 * t, 1.5 * t, -1.0),
                seg(1.5 * t, 2.0 * t, 1.0),
            ],
        },
        base_quench: Piecewise {
            segments: vec![seg(0.0, t, -1.0), seg(t, 2.0 * t, 1.0)],
        },
        beta_v: 0.5,
    })
}

fn mirror_parity(f: &Piecewise, period: f64) -> Option<i8> {
    const N: usize = 4096;
    let mut even = true;
    let mut odd = true;
    let mut nonzero = false;
    for i in 0..N {
        let t = period * (i as f64 + 0.382_683_432_365_089_8) / N as f64;
        let a = f.eval(t);
        let b = f.eval(period - t);
        nonzero |= a != 0.0;
        even &= (a - b).abs() < 1e-12;
        odd &= (a + b).abs() < 1e-12;
    }
    match (nonzero, even, odd) {
        (true, true, false) => Some(1),
        (true, false, true) => Some(-1),
        _ => None,
    }
}

/// Mirror parities (s_F, s_η) of the templates; fails unless s_F·s_η = −1.
pub fn validate_symmetry(plan: &PeriodicNvPlan) -> Result<(i8, i8)> {
    let period = 2.0 * plan.half_period;
    for (name, f) in [("filter", &plan.base_filter), ("quench", &plan.base_quench)] {
        if f.segments.iter().any(|s| s.start < -1e-12 * period || s.end > period * (1.0 + 1e-12)) {
            return Err(Error::Symmetry(format!("{name} template extends outside [0, 2T]")));
        }
    }
    let sf = mirror_parity(&plan.base_filter, period)
        .ok_or_else(|| Error::Symmetry("filter template has no definite mirror parity".into()))?;
    let se = mirror_parity(&plan.base_quench, period)
        .ok_or_else(|| Error::Symmetry("quench template has no definite mirror parity".into()))?;
    if sf * se != -1 {
        return Err(Error::Symmetry(format!(
            "templates share mirror parity (s_F = {sf}, s_η = {se}); opposite parities are required"
        )));
    }
    Ok((sf, se))
}

/// `nv_plan` block: M repetitions of half-period T.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NvPlanConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

/// Sequence block: exactly one of `preset`, `pulses` or `nv_plan`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulses: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nv_plan: Option<NvPlanConfig>,
}

impl SequenceConfig {
    pub fn validate(&self) -> Result<()> {
        let set = [self.preset.is_some(), self.pulses.is_some(), self.nv_plan.is_some()];
        if set.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::Config(
                "sequence needs exactly one of `preset`, `pulses`, `nv_plan`".into(),
            ));
        }
        if let Some(p) = &self.preset {
            PulseSequence::preset(p, 1.0)?;
        }
        if let Some(f) = &self.pulses {
            PulseSequence::new(f.clone(), 1.0)?;
        }
        if let Some(nv) = self.nv_plan {
            build_nv_plan(nv.m, nv.t.unwrap_or(1.0))?;
        }
        Ok(())
    }

    /// NV plan whose total duration is `t_f` (T = t_f/2M), if this is an NV block.
    pub fn nv_plan_at(&self, t_f: f64) -> Result<Option<PeriodicNvPlan>> {
        match self.nv_plan {
            Some(nv) => build_nv_plan(nv.m, t_f / (2.0 * nv.m as f64)).map(Some),
            None => Ok(None),
        }
    }

    /// The fixed NV plan when `T` is given.
    pub fn fixed_nv_plan(&self) -> Result<Option<PeriodicNvPlan>> {
        match self.nv_plan {
            Some(NvPlanConfig { m, t: Some(t) }) => build_nv_plan(m, t).map(Some),
            _ => Ok(None),
        }
    }

    /// Pulse fractions of t_f.
    pub fn fractions(&self) -> Result<Vec<f64>> {
        self.validate()?;
        if let Some(p) = &self.preset {
            return Ok(PulseSequence::preset(p, 1.0)?.fractions);
        }
        if let Some(f) = &self.pulses {
            return Ok(f.clone());
        }
        Ok(self.nv_plan_at(1.0)?.expect("validated").sequence()?.fractions)
    }

    pub fn at(&self, t_f: f64) -> Result<PulseSequence> {
        PulseSequence::new(self.fractions()?, t_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn filter_time_examples() {
        let h = PulseSequence::hahn(1.0).unwrap();
        assert_eq!(filter_time(&h, 0.25), 1.0);
        assert_eq!(filter_time(&h, 0.75), -1.0);
        assert_eq!(filter_time(&h, 1.5), 0.0);
        assert_eq!(filter_time(&h, -0.1), 0.0);
    }

    #[test]
    fn filter_freq_examples() {
        let t_f = 3.0;
        let r = PulseSequence::ramsey(t_f).unwrap();
        assert_eq!(filter_freq(&r, 0.0), Complex64::new(t_f, 0.0));
        let h = PulseSequence::hahn(t_f).unwrap();
        assert_eq!(filter_freq(&h, 0.0).norm(), 0.0);
        let w = 2.0 * PI / t_f;
        let f = filter_freq(&h, w);
        assert!((f - Complex64::new(0.0, 4.0 / w)).norm() < 1e-14);
        assert!((f.norm_sqr() - 16.0 / (w * w)).abs() < 1e-12);
    }

    #[test]
    fn filter_matches_closed_form() {
        // F[ω] = [2Σ(−1)^{ℓ−1}e^{iα_ℓωt_f} − 1 + (−1)^L e^{iωt_f}]/(iω)
        let seq = PulseSequence::new(vec![0.1, 0.35, 0.4, 0.8], 2.5).unwrap();
        for &w in &[1e-3, 0.7, 3.3, 41.0] {
            let mut n = Complex64::new(-1.0, 0.0);
            for (i, a) in seq.fractions.iter().enumerate() {
                let sign = if i % 2 == 0 { 2.0 } else { -2.0 };
                n += sign * Complex64::from_polar(1.0, a * w * seq.t_f);
            }
            n += Complex64::from_polar(1.0, w * seq.t_f);
            let exact = n / Complex64::new(0.0, w);
            assert!((filter_freq(&seq, w) - exact).norm() < 1e-12 * exact.norm().max(1.0));
        }
    }

    #[test]
    fn balance_flags() {
        assert!(check_balanced(&PulseSequence::hahn(1.0).unwrap()));
        assert!(!check_balanced(&PulseSequence::ramsey(1.0).unwrap()));
        assert!(check_balanced(&PulseSequence::cpmg(4, 1.0).unwrap()));
        assert_eq!(PulseSequence::preset("cpmg:3", 1.0).unwrap().fractions.len(), 3);
        assert!(PulseSequence::preset("udd:3", 1.0).is_err());
        assert!(PulseSequence::new(vec![0.5, 0.4], 1.0).is_err());
    }

    #[test]
    fn quench_examples() {
        let s = QuenchSchedule::step(2.0, QubitState::Down);
        assert_eq!(quench_freq(&s, 0.0), Complex64::new(2.0, 0.0));
        assert_eq!(s.beta_v, 0.5);
        assert_eq!(s.flipped().beta_v, -0.5);
        assert_eq!(s.flipped().initial_state, QubitState::Up);
        let e = QuenchSchedule::empty();
        assert_eq!(quench_freq(&e, 1.3), Complex64::new(0.0, 0.0));
        assert!(QuenchSchedule::new(vec![Segment { start: 0.0, end: 1.0, level: 0.5 }], 0.5, QubitState::Down).is_err());
    }

    #[test]
    fn nv_plan_structure() {
        let p = build_nv_plan(1, 1.0).unwrap();
        let seq = p.sequence().unwrap();
        assert_eq!(seq.fractions, vec![0.25, 0.75]);
        let q = p.quench();
        assert_eq!(q.eta_time(0.5), -1.0);
        assert_eq!(q.eta_time(1.5), 1.0);
        assert_eq!(validate_symmetry(&p).unwrap(), (1, -1));
        let p3 = build_nv_plan(3, 0.7).unwrap();
        assert!(check_balanced(&p3.sequence().unwrap()));
        assert_eq!(p3.filter().segments.len(), 2 * 3 + 1);
    }

    #[test]
    fn nv_plan_matches_closed_forms() {
        for &m in &[1usize, 2, 5] {
            let p = build_nv_plan(m, 0.9).unwrap();
            let t_f = p.t_f();
            let f_seg = p.filter();
            let q = p.quench();
            for k in 0..50 {
                let w = 0.037 + 0.71 * k as f64;
                let x = w * t_f;
                let ph = Complex64::from_polar(1.0, 0.5 * x);
                let f_closed = -(4.0 / w) * ph * (0.5 * x).sin() * (x / (8.0 * m as f64)).sin().powi(2)
                    / (x / (4.0 * m as f64)).cos();
                let e_closed = Complex64::new(0.0, 2.0 / w) * ph * (0.5 * x).sin() * (x / (4.0 * m as f64)).tan();
                let f = f_seg.transform(w);
                let e = quench_freq(&q, w);
                assert!((f - f_closed).norm() <= 1e-10 * f_closed.norm().max(1e-3), "F m={m} w={w}");
                assert!((e - e_closed).norm() <= 1e-10 * e_closed.norm().max(1e-3), "η m={m} w={w}");
            }
        }
    }

    #[test]
    fn symmetry_violations_are_refused() {
        let mut p = build_nv_plan(2, 1.0).unwrap();
        p.base_quench = Piecewise {
            segments: vec![Segment { start: 0.0, end: 2.0, level: 1.0 }],
        };
        assert!(matches!(validate_symmetry(&p), Err(Error::Symmetry(_))));
        p.base_quench = Piecewise {
            segments: vec![Segment { start: 0.0, end: 0.3, level: 1.0 }],
        };
        assert!(matches!(validate_symmetry(&p), Err(Error::Symmetry(_))));
    }
}

#[cfg(test)]
mod config_tests {
    use super::*;

    #[test]
    fn sequence_config_forms() {
        let h: SequenceConfig = serde_json::from_str(r#"{"preset": "cpmg:2"}"#).unwrap();
        assert_eq!(h.fractions().unwrap(), vec![0.25, 0.75]);
        let nv: SequenceConfig = serde_json::from_str(r#"{"nv_plan": {"M": 1, "T": 2.0}}"#).unwrap();
        assert_eq!(nv.fractions().unwrap(), vec![0.25, 0.75]);
        assert_eq!(nv.fixed_nv_plan().unwrap().unwrap().t_f(), 4.0);
        let both: SequenceConfig = serde_json::from_str(r#"{"preset": "hahn", "pulses": [0.5]}"#).unwrap();
        assert!(both.validate().is_err());
        assert!(serde_json::from_str::<SequenceConfig>(r#"{"preset": "hahn", "n": 1}"#).is_err());
        let bad: SequenceConfig = serde_json::from_str(r#"{"pulses": [0.6, 0.4]}"#).unwrap();
        assert!(bad.validate().is_err());
    }
}
