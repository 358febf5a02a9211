//! Adaptive Gauss–Kronrod quadrature and a product-integration scheme for
//! semi-infinite integrals of the form ∫ h(ω) g(ω) dω, where h is a periodic
//! trigonometric polynomial and g a smooth envelope.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_panels: 4_000_000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, rel: f64) -> Self {
        self.rel_tol = rel;
        self
    }

    pub fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, o: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + o.value,
            error: self.error + o.error,
            evaluations: self.evaluations + o.evaluations,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: bool,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error
            .total_cmp(&o.error)
            .then_with(|| o.a.total_cmp(&self.a))
    }
}

/// 15-point Kronrod rule with embedded 7-point Gauss estimate.
pub fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    let mut rabs = fc.abs() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        rk += WGK[j] * (f1 + f2);
        rabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    (rk * h, ((rk - rg) * h).abs(), rabs * h.abs())
}

fn make_panel<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Panel {
    let (value, err, rabs) = gk15(f, a, b);
    let floor_err = 50.0 * f64::EPSILON * rabs;
    let floor = err <= floor_err;
    Panel {
        a,
        b,
        value,
        error: err.max(floor_err),
        floor,
    }
}

/// Globally adaptive integration over the union of `[breaks[i], breaks[i+1]]`,
/// with initial panels no wider than `cap`.
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    breaks: &[f64],
    cap: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = if cap.is_finite() && cap > 0.0 {
            ((b - a) / cap).ceil().max(1.0)
        } else {
            1.0
        };
        if n as usize + heap.len() > opts.max_panels {
            return Err(Error::NonConvergent {
                value: f64::NAN,
                error: f64::INFINITY,
                detail: format!("initial partition needs {n} panels on [{a}, {b}]"),
            });
        }
        let n = n as usize;
        for i in 0..n {
            let pa = a + (b - a) * i as f64 / n as f64;
            let pb = if i + 1 == n { b } else { a + (b - a) * (i + 1) as f64 / n as f64 };
            heap.push(make_panel(f, pa, pb));
            evals += 15;
        }
    }
    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut err: f64 = heap.iter().map(|p| p.error).sum();
    while err > opts.tolerance(total) {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        if worst.floor || heap.len() + 2 > opts.max_panels {
            heap.push(worst);
            if !worst.floor {
                return Err(Error::NonConvergent {
                    value: total,
                    error: err,
                    detail: format!("panel budget {} exhausted", opts.max_panels),
                });
            }
            break;
        }
        let m = 0.5 * (worst.a + worst.b);
        let l = make_panel(f, worst.a, m);
        let r = make_panel(f, m, worst.b);
        evals += 30;
        total += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = kahan(panels.iter().map(|p| p.value));
    let error = panels.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations: evals,
    })
}

fn kahan<I: Iterator<Item = f64>>(it: I) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for x in it {
        let y = x - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// Real trigonometric polynomial h(ω) = Re Σ_k c_k e^{i k τ₀ ω}.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigKernel {
    pub terms: Vec<(i64, Complex64)>,
}

impl TrigKernel {
    pub fn constant(c: f64) -> Self {
        TrigKernel {
            terms: vec![(0, Complex64::new(c, 0.0))],
        }
    }

    pub fn eval(&self, tau0: f64, w: f64) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| (c * Complex64::from_polar(1.0, *k as f64 * tau0 * w)).re)
            .sum()
    }

    pub fn l1(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    pub fn max_index(&self) -> i64 {
        self.terms.iter().map(|(k, _)| k.abs()).max().unwrap_or(0)
    }
}

/// One h·g product term.
pub struct OscTerm<'a> {
    pub kernel: TrigKernel,
    pub envelope: &'a (dyn Fn(f64) -> f64 + Sync),
}

/// ∫₀^∞ Σ h_i(ω) g_i(ω) dω, with a numerically stable `direct` evaluation of
/// the full integrand used near the origin and around envelope knots.
pub struct OscProblem<'a> {
    pub direct: &'a (dyn Fn(f64) -> f64 + Sync),
    pub terms: Vec<OscTerm<'a>>,
    /// Base time of the kernels; `None` disables product integration.
    pub tau0: Option<f64>,
    /// Maximum width of head panels.
    pub cap: f64,
    /// Points where envelopes are not smooth.
    pub knots: Vec<f64>,
    /// Frequency scale used for the first truncation guess.
    pub scale: f64,
}

const CHEB_NODES: usize = 10;
const HEAD_PERIODS: f64 = 16.0;

struct TailWeights {
    mean: f64,
    s: [f64; CHEB_NODES],
}

fn tail_weights(kernel: &TrigKernel, tau0: f64) -> TailWeights {
    let mut mean = 0.0;
    let mut s = [0.0; CHEB_NODES];
    for (k, c) in &kernel.terms {
        if *k == 0 {
            mean += c.re;
            continue;
        }
        let il = Complex64::new(0.0, *k as f64 * tau0);
        let mut pw = il;
        for (j, sj) in s.iter_mut().enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *sj += (c * sign / pw).re;
            pw *= il;
        }
    }
    TailWeights { mean, s }
}

fn deriv_table() -> [[f64; CHEB_NODES]; CHEB_NODES] {
    let mut t = [[0.0; CHEB_NODES]; CHEB_NODES];
    for (j, row) in t.iter_mut().enumerate() {
        for (n, v) in row.iter_mut().enumerate() {
            let mut p = 1.0;
            for k in 0..j {
                p *= ((n * n) as f64 - (k * k) as f64) / (2 * k + 1) as f64;
            }
            *v = p;
        }
    }
    t
}

struct TailCtx<'p, 'a> {
    prob: &'p OscProblem<'a>,
    weights: Vec<TailWeights>,
    dtab: [[f64; CHEB_NODES]; CHEB_NODES],
    period: f64,
    evals: usize,
}

impl TailCtx<'_, '_> {
    fn estimate(&mut self, a: f64, b: f64) -> f64 {
        let m = CHEB_NODES;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut total = 0.0;
        for (term, w) in self.prob.terms.iter().zip(&self.weights) {
            let mut fv = [0.0; CHEB_NODES];
            for (i, v) in fv.iter_mut().enumerate() {
                let x = (PI * (i as f64 + 0.5) / m as f64).cos();
                *v = (term.envelope)(mid + half * x);
            }
            self.evals += m;
            let mut coef = [0.0; CHEB_NODES];
            for (n, c) in coef.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, v) in fv.iter().enumerate() {
                    acc += v * (PI * n as f64 * (i as f64 + 0.5) / m as f64).cos();
                }
                *c = 2.0 * acc / m as f64;
            }
            coef[0] *= 0.5;
            let mut integral = 0.0;
            for n in (0..m).step_by(2) {
                integral += coef[n] * 2.0 / (1.0 - (n * n) as f64);
            }
            total += w.mean * integral * half;
            let mut scale = 1.0;
            for j in 0..m {
                let mut dp = 0.0;
                for n in 0..m {
                    let par = if (n + j) % 2 == 0 { 1.0 } else { -1.0 };
                    dp += coef[n] * self.dtab[j][n] * (1.0 - par);
                }
                total += w.s[j] * dp * scale;
                scale /= half;
            }
        }
        total
    }

    fn direct_block(&mut self, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
        let r = integrate(self.prob.direct, &[a, b], self.prob.cap, opts)?;
        self.evals += r.evaluations;
        Ok(r)
    }

    fn block(&mut self, a: f64, n: u64, opts: &QuadOptions, depth: u32) -> Result<QuadResult> {
        let b = a + n as f64 * self.period;
        if n < 2 {
            return self.direct_block(a, b, opts);
        }
        let whole = self.estimate(a, b);
        let m = a + (n / 2) as f64 * self.period;
        let split = self.estimate(a, m) + self.estimate(m, b);
        let diff = (whole - split).abs();
        let tol = (1e-2 * opts.abs_tol).max(1e-3 * opts.rel_tol * split.abs());
        if diff <= tol || depth > 60 {
            return Ok(QuadResult {
                value: split,
                error: diff,
                evaluations: 0,
            });
        }
        let l = self.block(a, n / 2, opts, depth + 1)?;
        let r = self.block(m, n - n / 2, opts, depth + 1)?;
        Ok(l + r)
    }
}

/// Integrate an [`OscProblem`] over [0, ∞). `tail_bound(W)` must bound
/// ∫_W^∞ |integrand| dω; the domain is truncated once it drops below 10⁻³ of
/// the requested tolerance.
pub fn integrate_oscillatory(
    prob: &OscProblem<'_>,
    tail_bound: &dyn Fn(f64) -> f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let max_knot = prob.knots.iter().copied().fold(0.0, f64::max);
    let find_upper = |start: f64, target: f64| -> Result<f64> {
        let mut w = start.max(f64::MIN_POSITIVE);
        for _ in 0..400 {
            let b = tail_bound(w);
            if b.is_nan() {
                return Err(Error::NonIntegrable(format!("tail bound undefined at ω = {w}")));
            }
            if b <= target {
                return Ok(w);
            }
            w *= 2.0;
        }
        Err(Error::NonIntegrable(format!(
            "tail bound stays above {target:e} up to ω = {w:e}"
        )))
    };
    let mut knots: Vec<f64> = prob.knots.clone();
    knots.push(0.0);

    let tau0 = match prob.tau0 {
        Some(t) if t > 0.0 && t.is_finite() => t,
        _ => {
            let pilot_w = find_upper(prob.scale.max(max_knot), 1e3 * opts.abs_tol)?;
            let mut br = knots.clone();
            br.retain(|&k| k < pilot_w);
            br.push(pilot_w);
            let pilot = integrate(prob.direct, &br, prob.cap, opts)?;
            let upper = find_upper(pilot_w, 1e-3 * opts.tolerance(pilot.value))?;
            if upper <= pilot_w {
                return Ok(pilot);
            }
            let more = integrate(prob.direct, &[pilot_w, upper], prob.cap, opts)?;
            return Ok(pilot + more);
        }
    };
    let period = 2.0 * PI / tau0;
    let head_end = ((HEAD_PERIODS * period).max(max_knot * (1.0 + 1e-9)) / period).ceil() * period;
    let pilot_upper = find_upper(prob.scale.max(max_knot), 1e3 * opts.abs_tol)?;
    let head_limit = head_end.min(pilot_upper);
    let mut br: Vec<f64> = knots.iter().copied().filter(|&k| k < head_limit).collect();
    br.push(head_limit);
    let mut head = integrate(prob.direct, &br, prob.cap, opts)?;
    let upper = find_upper(head_limit, 1e-3 * opts.tolerance(head.value))?;
    let mid_end = upper.min(head_end);
    if mid_end > head_limit {
        head = head + integrate(prob.direct, &[head_limit, mid_end], prob.cap, opts)?;
    }
    if upper <= head_end {
        return Ok(head);
    }
    let weights = prob
        .terms
        .iter()
        .map(|t| tail_weights(&t.kernel, tau0))
        .collect();
    let mut ctx = TailCtx {
        prob,
        weights,
        dtab: deriv_table(),
        period,
        evals: 0,
    };
    let tail_opts = QuadOptions {
        abs_tol: opts.abs_tol,
        rel_tol: opts.rel_tol,
        max_panels: opts.max_panels,
    };
    let mut a = head_end;
    let mut tail = QuadResult::default();
    while a < upper {
        let max_n = ((a / 8.0) / period).floor().max(1.0);
        let n = if max_n >= 2.0 {
            1u64 << (max_n.log2().floor() as u32).min(62)
        } else {
            1
        };
        let blk = ctx.block(a, n, &tail_opts, 0)?;
        tail = tail + blk;
        a += n as f64 * period;
    }
    tail.evaluations += ctx.evals;
    Ok(head + tail)
}

/// Smallest integer q ≤ `max_den` with every `x·q` integral within `tol`.
pub fn common_denominator(xs: &[f64], max_den: u64, tol: f64) -> Option<u64> {
    'outer: for q in 1..=max_den {
        for &x in xs {
            let y = x * q as f64;
            if (y - y.round()).abs() > tol * q as f64 {
                continue 'outer;
            }
        }
        return Some(q);
    }
    None
}
