//! Exact finite-dimensional oracle: dense propagators for level-conditioned
//! bath Hamiltonians, projector-based quench decomposition, the second-order
//! cumulant (Gaussian) prediction for the same bath, and a truncated
//! squeezed-thermal boson.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::control::{filter_time, PeriodicNvPlan, PulseSequence};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Eigenpairs of a Hermitian matrix, ascending.
fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()) * c(0.5);
    let e = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), idx.len(), |r, k| e.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

/// exp(−iHt) for Hermitian H from its eigendecomposition.
fn evolve(vals: &[f64], vecs: &CMatrix, t: f64) -> CMatrix {
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -l * t);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= ph;
        }
    }
    scaled * vecs.adjoint()
}

/// Thermal state e^{−H/kT}/Z.
pub fn thermal_state(h: &CMatrix, kt: f64) -> Result<CMatrix> {
    if !(kt > 0.0) {
        return Err(Error::InvalidInput(format!("kT must be positive, got {kt}")));
    }
    let (vals, vecs) = eigh(h);
    let e0 = vals[0];
    let w: Vec<f64> = vals.iter().map(|l| (-(l - e0) / kt).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut scaled = vecs.clone();
    for (k, wk) in w.iter().enumerate() {
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= c(wk / z);
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// Bath with level-conditioned Hamiltonians and an initial density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteBath {
    pub dim: usize,
    pub hamiltonians: BTreeMap<String, CMatrix>,
    pub rho: CMatrix,
}

impl FiniteBath {
    pub fn new(hamiltonians: BTreeMap<String, CMatrix>, rho: CMatrix) -> Result<Self> {
        let dim = rho.nrows();
        if dim == 0 || rho.ncols() != dim {
            return Err(Error::InvalidInput("ρ must be a non-empty square matrix".into()));
        }
        if hamiltonians.is_empty() {
            return Err(Error::InvalidInput("no conditioned Hamiltonians given".into()));
        }
        for (label, h) in &hamiltonians {
            if h.shape() != (dim, dim) {
                return Err(Error::InvalidInput(format!("H[{label}] is not {dim}×{dim}")));
            }
            let d = hermitian_defect(h);
            if d >= HERMITIAN_TOL {
                return Err(Error::InvalidInput(format!("H[{label}] is not Hermitian (‖H − H†‖ = {d:e})")));
            }
        }
        let d = hermitian_defect(&rho);
        if d >= HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("ρ is not Hermitian (‖ρ − ρ†‖ = {d:e})")));
        }
        let tr = rho.trace();
        if (tr - c(1.0)).norm() >= HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("tr ρ = {tr} ≠ 1")));
        }
        let (vals, _) = eigh(&rho);
        if vals[0] < -HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("ρ has negative eigenvalue {:e}", vals[0])));
        }
        Ok(FiniteBath {
            dim,
            hamiltonians,
            rho,
        })
    }

    /// Qubit bath with levels "down" and "up".
    pub fn qubit(h_down: CMatrix, h_up: CMatrix, rho: CMatrix) -> Result<Self> {
        let mut map = BTreeMap::new();
        map.insert("down".to_string(), h_down);
        map.insert("up".to_string(), h_up);
        Self::new(map, rho)
    }

    /// Spin-1 bath with levels "-1", "0", "+1".
    pub fn nv(h_minus: CMatrix, h_zero: CMatrix, h_plus: CMatrix, rho: CMatrix) -> Result<Self> {
        let mut map = BTreeMap::new();
        map.insert("-1".to_string(), h_minus);
        map.insert("0".to_string(), h_zero);
        map.insert("+1".to_string(), h_plus);
        Self::new(map, rho)
    }

    pub fn hamiltonian(&self, label: &str) -> Result<&CMatrix> {
        self.hamiltonians
            .get(label)
            .ok_or_else(|| Error::InvalidInput(format!("bath has no Hamiltonian for level '{label}'")))
    }

    /// H₊₁ − H₀ = H₀ − H₋₁ (linear magnetic coupling).
    pub fn check_magnetic_model(&self, tol: f64) -> Result<()> {
        let hm = self.hamiltonian("-1")?;
        let h0 = self.hamiltonian("0")?;
        let hp = self.hamiltonian("+1")?;
        let d = ((hp - h0) - (h0 - hm)).norm();
        if d > tol {
            return Err(Error::InvalidInput(format!(
                "H(+1) − H(0) differs from H(0) − H(−1) by {d:e}"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BathFile = serde_json::from_str(text)?;
        file.into_bath()
    }

    pub fn to_json(&self) -> Result<String> {
        let enc = |m: &CMatrix| -> Vec<Vec<[f64; 2]>> {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect())
                .collect()
        };
        let file = BathFile {
            dim: self.dim,
            h: self.hamiltonians.iter().map(|(k, v)| (k.clone(), enc(v))).collect(),
            rho: enc(&self.rho),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

/// On-disk bath container.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathFile {
    pub dim: usize,
    #[serde(rename = "H")]
    pub h: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    pub rho: Vec<Vec<[f64; 2]>>,
}

impl BathFile {
    pub fn into_bath(self) -> Result<FiniteBath> {
        let n = self.dim;
        let dec = |name: &str, rows: &[Vec<[f64; 2]>]| -> Result<CMatrix> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!("{name}: expected a {n}×{n} array of [re, im] pairs")));
            }
            Ok(CMatrix::from_fn(n, n, |r, k| Complex64::new(rows[r][k][0], rows[r][k][1])))
        };
        let mut map = BTreeMap::new();
        for (label, rows) in &self.h {
            map.insert(label.clone(), dec(&format!("H.{label}"), rows)?);
        }
        let rho = dec("rho", &self.rho)?;
        FiniteBath::new(map, rho)
    }
}

/// Pair of levels acting as (up, down) during [start, end).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceInterval {
    pub start: f64,
    pub end: f64,
    pub up: String,
    pub down: String,
}

/// Piecewise choice of the two-level subspace used by the sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSchedule {
    pub intervals: Vec<SubspaceInterval>,
}

impl SubspaceSchedule {
    pub fn constant(up: &str, down: &str, t_f: f64) -> Self {
        SubspaceSchedule {
            intervals: vec![SubspaceInterval {
                start: 0.0,
                end: t_f,
                up: up.into(),
                down: down.into(),
            }],
        }
    }

    /// Map the plan's quench levels onto spin-1 subspaces:
    /// η = −1 → {0, −1}, η = +1 → {+1, 0}, η = 0 → {+1, −1}.
    pub fn from_nv_plan(plan: &PeriodicNvPlan) -> Self {
        let q = plan.quench();
        let intervals = q
            .eta
            .segments
            .iter()
            .map(|s| {
                let (up, down) = match s.level as i32 {
                    -1 => ("0", "-1"),
                    1 => ("+1", "0"),
                    _ => ("+1", "-1"),
                };
                SubspaceInterval {
                    start: s.start,
                    end: s.end,
                    up: up.into(),
                    down: down.into(),
                }
            })
            .collect();
        SubspaceSchedule { intervals }
    }

    fn at(&self, t: f64) -> Option<&SubspaceInterval> {
        self.intervals.iter().find(|i| t >= i.start && t < i.end)
    }
}

/// One constant piece of the two branch Hamiltonians.
struct BranchSegment<'a> {
    start: f64,
    end: f64,
    a: &'a str,
    b: &'a str,
    up: &'a str,
    down: &'a str,
    f: f64,
}

fn branch_segments<'a>(
    bath: &FiniteBath,
    seq: &PulseSequence,
    switching: Option<&'a SubspaceSchedule>,
) -> Result<Vec<BranchSegment<'a>>> {
    let t_f = seq.t_f;
    let mut cuts: Vec<f64> = vec![0.0, t_f];
    cuts.extend(seq.fractions.iter().map(|a| a * t_f));
    if let Some(s) = switching {
        for i in &s.intervals {
            if i.start < -1e-12 * t_f || i.end > t_f * (1.0 + 1e-12) || i.end < i.start {
                return Err(Error::InvalidInput(format!(
                    "switching interval [{}, {}) outside [0, t_f]",
                    i.start, i.end
                )));
            }
            cuts.push(i.start.max(0.0));
            cuts.push(i.end.min(t_f));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * t_f.max(1.0));
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        let mid = 0.5 * (t0 + t1);
        let f = filter_time(seq, mid);
        let (up, down): (&'a str, &'a str) = match switching {
            Some(s) => match s.at(mid) {
                Some(i) => (i.up.as_str(), i.down.as_str()),
                None => {
                    return Err(Error::InvalidInput(format!(
                        "switching schedule does not cover t = {mid}"
                    )))
                }
            },
            None => ("up", "down"),
        };
        bath.hamiltonian(up)?;
        bath.hamiltonian(down)?;
        let (a, b) = if f > 0.0 { (up, down) } else { (down, up) };
        out.push(BranchSegment {
            start: t0,
            end: t1,
            a,
            b,
            up,
            down,
            f,
        });
    }
    Ok(out)
}

/// ⟨σ₋(t_f)⟩ = ½ Tr(U_a ρ U_b†), where branch a follows the `up` level while
/// F(t) = +1 and branch b the complementary one.
pub fn exact_coherence(
    bath: &FiniteBath,
    seq: &PulseSequence,
    switching: Option<&SubspaceSchedule>,
) -> Result<Complex64> {
    let segs = branch_segments(bath, seq, switching)?;
    let mut eig: BTreeMap<&str, (Vec<f64>, CMatrix)> = BTreeMap::new();
    for s in &segs {
        for l in [s.a, s.b] {
            if !eig.contains_key(l) {
                eig.insert(l, eigh(bath.hamiltonian(l)?));
            }
        }
    }
    let n = bath.dim;
    let mut ua = CMatrix::identity(n, n);
    let mut ub = CMatrix::identity(n, n);
    for s in &segs {
        let dt = s.end - s.start;
        let (va, qa) = &eig[s.a];
        let (vb, qb) = &eig[s.b];
        ua = evolve(va, qa, dt) * ua;
        ub = evolve(vb, qb, dt) * ub;
    }
    let id = CMatrix::identity(n, n);
    let drift = (ua.adjoint() * &ua - &id).norm().max((ub.adjoint() * &ub - &id).norm());
    if drift > 1e-8 {
        return Err(Error::Numeric(format!("propagator unitarity drift {drift:e}")));
    }
    Ok((ua * &bath.rho * ub.adjoint()).trace() * c(0.5))
}

/// (ζ, Φ) from ⟨σ₋⟩ = ½e^{−ζ}e^{−iΦ}.
pub fn zeta_phi(coh: Complex64) -> (f64, f64) {
    let z = coh * c(2.0);
    (-z.norm().ln(), -z.arg())
}

/// One eigenvalue group of ρ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenGroup {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuenchDecomposition {
    pub h_prime: CMatrix,
    pub v_prime: CMatrix,
    pub eigen_groups: Vec<EigenGroup>,
    /// Orthonormal eigenvectors, grouped in the order of `eigen_groups`.
    pub basis: CMatrix,
    pub warnings: Vec<String>,
}

impl QuenchDecomposition {
    /// Column ranges of each group inside `basis`.
    pub fn group_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.eigen_groups
            .iter()
            .map(|g| {
                let r = start..start + g.multiplicity;
                start += g.multiplicity;
                r
            })
            .collect()
    }

    pub fn projector(&self, group: usize) -> CMatrix {
        let r = self.group_ranges()[group].clone();
        let q = self.basis.columns(r.start, r.len());
        q * q.adjoint()
    }
}

#[derive(Clone, Debug, Default)]
pub struct DecomposeOptions {
    /// Eigenvalue grouping tolerance; defaults to 10⁻⁸·‖ρ‖.
    pub degeneracy_tol: Option<f64>,
    /// Hermitian operator commuting with ρ whose eigenvectors replace those
    /// of ρ (e.g. a modular generator with better separated spectrum).
    pub generator: Option<CMatrix>,
}

/// Split `h_avg` into H' = Σ P_n h_avg P_n (commuting with ρ) and V' = h_avg − H'.
pub fn quench_decompose(rho: &CMatrix, h_avg: &CMatrix, opts: &DecomposeOptions) -> Result<QuenchDecomposition> {
    let n = rho.nrows();
    if h_avg.shape() != (n, n) {
        return Err(Error::InvalidInput("ρ and H have different dimensions".into()));
    }
    let (rvals, rvecs) = eigh(rho);
    let norm = rvals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut warnings = Vec::new();
    // (value used for grouping, ρ population, eigenvector column)
    let (keys, pops, vecs, tol) = match &opts.generator {
        Some(k) => {
            if k.shape() != (n, n) {
                return Err(Error::InvalidInput("generator has wrong dimension".into()));
            }
            let comm = (k * rho - rho * k).norm();
            if comm > 1e-8 * k.norm().max(1.0) {
                warnings.push(format!("generator does not commute with ρ (‖[K, ρ]‖ = {comm:e})"));
            }
            let (kv, kq) = eigh(k);
            let pops: Vec<f64> = (0..n)
                .map(|i| {
                    let col = kq.column(i);
                    (col.adjoint() * rho * col)[(0, 0)].re
                })
                .collect();
            let kn = kv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tol = opts.degeneracy_tol.unwrap_or(1e-8 * kn.max(1e-300));
            (kv, pops, kq, tol)
        }
        None => {
            let tol = opts.degeneracy_tol.unwrap_or(1e-8 * norm.max(1e-300));
            (rvals.clone(), rvals.clone(), rvecs, tol)
        }
    };
    // descending order; explicit zero group for the ρ null space
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut zero: Vec<usize> = Vec::new();
    let mut last_key: Option<f64> = None;
    for &i in &order {
        if opts.generator.is_none() && keys[i].abs() <= tol {
            zero.push(i);
            continue;
        }
        match (last_key, groups.last_mut()) {
            (Some(lk), Some(g)) if (lk - keys[i]).abs() <= tol => {
                g.1.push(i);
            }
            _ => {
                if let Some(lk) = last_key {
                    let gap = (lk - keys[i]).abs();
                    if gap <= 10.0 * tol {
                        warnings.push(format!(
                            "eigenvalue gap {gap:e} is within 10× of the grouping tolerance {tol:e}; kept separate"
                        ));
                    }
                }
                groups.push((pops[i], vec![i]));
            }
        }
        last_key = Some(keys[i]);
    }
    if !zero.is_empty() {
        if let Some(&(p, _)) = groups.last() {
            if p.abs() <= 10.0 * tol {
                warnings.push(format!(
                    "smallest non-zero group {p:e} is within 10× of the zero threshold {tol:e}"
                ));
            }
        }
        groups.push((0.0, zero));
    }
    let mut basis = CMatrix::zeros(n, n);
    let mut h_prime = CMatrix::zeros(n, n);
    let mut eigen_groups = Vec::with_capacity(groups.len());
    let mut col = 0;
    for (_, idx) in &groups {
        let q = CMatrix::from_fn(n, idx.len(), |r, k| vecs[(r, idx[k])]);
        let p = &q * q.adjoint();
        h_prime += &p * h_avg * &p;
        let value = idx.iter().map(|&i| pops[i]).sum::<f64>() / idx.len() as f64;
        eigen_groups.push(EigenGroup {
            value,
            multiplicity: idx.len(),
        });
        basis.columns_mut(col, idx.len()).copy_from(&q);
        col += idx.len();
    }
    let v_prime = h_avg - &h_prime;
    Ok(QuenchDecomposition {
        h_prime,
        v_prime,
        eigen_groups,
        basis,
        warnings,
    })
}

impl FiniteBath {
    /// Decomposition of the qubit-averaged Hamiltonian (H_up + H_down)/2.
    pub fn decompose(&self, opts: &DecomposeOptions) -> Result<QuenchDecomposition> {
        let h_avg = (self.hamiltonian("up")? + self.hamiltonian("down")?) * c(0.5);
        quench_decompose(&self.rho, &h_avg, opts)
    }
}

/// ∫_a^b e^{iνt} dt.
fn seg_transform(nu: f64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    let x = 0.5 * nu * len;
    let s = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(len * s, 0.5 * nu * (a + b))
}

/// Second antiderivative of Θ(x)e^{iμx}: (1 + iμx − e^{iμx})/μ² for x > 0.
fn h2(mu: f64, x: f64) -> Complex64 {
    if x <= 0.0 {
        return c(0.0);
    }
    let th = mu * x;
    if th.abs() < 1e-2 {
        // x²/2 · Σ (iθ)^k · 2/(k+2)!
        let it = Complex64::new(0.0, th);
        let mut term = c(1.0);
        let mut sum = c(0.0);
        let mut fact = 2.0;
        for k in 0..12 {
            sum += term * c(2.0 / fact);
            term *= it;
            fact *= (k + 3) as f64;
        }
        return sum * c(0.5 * x * x);
    }
    (c(1.0) + Complex64::new(0.0, th) - Complex64::from_polar(1.0, th)) / c(mu * mu)
}

/// ∫_{[a1,b1]}dt₁ ∫_{[a2,b2]}dt₂ Θ(t₂ − t₁) e^{iν(t₁ − t₂)}.
fn ordered_pair(nu: f64, a1: f64, b1: f64, a2: f64, b2: f64) -> Complex64 {
    let mu = -nu;
    h2(mu, b2 - a1) - h2(mu, b2 - b1) - h2(mu, a2 - a1) + h2(mu, a2 - b1)
}

/// Second-order cumulant prediction of ⟨σ₋⟩ for a finite bath, expanded
/// around H' (the ρ-commuting part of the first segment's averaged Hamiltonian).
pub fn gaussian_coherence(
    bath: &FiniteBath,
    seq: &PulseSequence,
    switching: Option<&SubspaceSchedule>,
    opts: &DecomposeOptions,
) -> Result<Complex64> {
    let segs = branch_segments(bath, seq, switching)?;
    let first = segs
        .first()
        .ok_or_else(|| Error::InvalidInput("empty protocol".into()))?;
    let h_avg0 = (bath.hamiltonian(first.up)? + bath.hamiltonian(first.down)?) * c(0.5);
    let dec = quench_decompose(&bath.rho, &h_avg0, opts)?;
    let n = bath.dim;
    // eigenbasis of H' inside each ρ group
    let mut q = CMatrix::zeros(n, n);
    let mut energies = vec![0.0; n];
    for r in dec.group_ranges() {
        let qg = dec.basis.columns(r.start, r.len()).into_owned();
        let hg = qg.adjoint() * &dec.h_prime * &qg;
        let (ev, evec) = eigh(&hg);
        let rot = &qg * evec;
        q.columns_mut(r.start, r.len()).copy_from(&rot);
        energies[r.start..r.end].copy_from_slice(&ev);
    }
    let p: Vec<f64> = (0..n)
        .map(|i| {
            let col = q.column(i);
            (col.adjoint() * &bath.rho * col)[(0, 0)].re
        })
        .collect();
    let to_eig = |m: &CMatrix| q.adjoint() * m * &q;
    let h_ref = to_eig(&dec.h_prime);
    // A_k = H_avg,k − H', B_k = F_k ξ_k / 2, all in the eigenbasis
    let mut a_ops: Vec<CMatrix> = Vec::with_capacity(segs.len());
    let mut b_ops: Vec<CMatrix> = Vec::with_capacity(segs.len());
    for s in &segs {
        let hu = to_eig(bath.hamiltonian(s.up)?);
        let hd = to_eig(bath.hamiltonian(s.down)?);
        a_ops.push((&hu + &hd) * c(0.5) - &h_ref);
        b_ops.push((&hu - &hd) * c(0.5 * s.f));
    }
    let i = Complex64::new(0.0, 1.0);
    let mut mean_b = c(0.0);
    for (s, b) in segs.iter().zip(&b_ops) {
        let tr: Complex64 = (0..n).map(|k| b[(k, k)] * p[k]).sum();
        mean_b += tr * c(s.end - s.start);
    }
    let mut bb = c(0.0);
    let mut cross = c(0.0);
    for nn in 0..n {
        if p[nn] == 0.0 {
            continue;
        }
        for m in 0..n {
            let nu = energies[nn] - energies[m];
            let tk: Vec<Complex64> = segs.iter().map(|s| seg_transform(nu, s.start, s.end)).collect();
            let mut x = c(0.0);
            let mut y = c(0.0);
            for (k, t) in tk.iter().enumerate() {
                x += b_ops[k][(nn, m)] * t;
                y += b_ops[k][(m, nn)] * t.conj();
            }
            bb += x * y * c(p[nn]);
            let mut acc = c(0.0);
            for (k, sk) in segs.iter().enumerate() {
                let anm = a_ops[k][(nn, m)];
                let amn = a_ops[k][(m, nn)];
                if anm == c(0.0) && amn == c(0.0) {
                    continue;
                }
                for (l, sl) in segs.iter().enumerate().skip(k) {
                    let bmn = b_ops[l][(m, nn)];
                    let bnm = b_ops[l][(nn, m)];
                    if bmn == c(0.0) && bnm == c(0.0) {
                        continue;
                    }
                    let jp = ordered_pair(nu, sk.start, sk.end, sl.start, sl.end);
                    let jm = ordered_pair(-nu, sk.start, sk.end, sl.start, sl.end);
                    acc += anm * bmn * jp - bnm * amn * jm;
                }
            }
            cross += acc * c(p[nn]);
        }
    }
    let log2c = -i * mean_b * c(2.0) - (bb - mean_b * mean_b) * c(2.0) + cross * c(2.0);
    Ok(log2c.exp() * c(0.5))
}

/// Closed-form Gaussian (ζ, Φ) for a single linearly coupled mode with
/// 𝒥 = g²δ(ω − Ω) and ρ thermal in the qubit-down Hamiltonian.
pub fn single_mode_gaussian(omega: f64, g: f64, kt: f64, seq: &PulseSequence) -> (f64, f64) {
    let f = crate::control::filter_freq(seq, omega);
    let zeta = 0.5 * g * g * crate::special::coth(omega / (2.0 * kt)) * f.norm_sqr();
    let phi = g * g * (f.re - seq.f0()) / omega;
    (zeta, phi)
}

fn ladder(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |r, k| if k == r + 1 { c((k as f64).sqrt()) } else { c(0.0) })
}

/// Qubit bath of one mode: H_down = Ωb†b, H_up = H_down + g(b + b†), ρ thermal in H_down.
pub fn build_boson(omega: f64, g: f64, kt: f64, n_max: usize) -> Result<FiniteBath> {
    let dim = n_max + 1;
    let b = ladder(dim);
    let bd = b.adjoint();
    let h_down = &bd * &b * c(omega);
    let h_up = &h_down + (&b + &bd) * c(g);
    let rho = thermal_state(&h_down, kt)?;
    let tail = rho[(n_max, n_max)].re;
    if tail > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "thermal occupation of the last Fock level is {tail:e}; increase n_max"
        )));
    }
    FiniteBath::qubit(h_down, h_up, rho)
}

/// Squeezed-thermal single mode in a truncated Fock space.
#[derive(Clone, Debug)]
pub struct SqueezedThermal {
    pub bath: FiniteBath,
    /// S b†b S† restricted to the truncated space (commutes with ρ up to truncation).
    pub generator: CMatrix,
    /// Largest of the thermal and squeezed occupation masses beyond n_max.
    pub tail_mass: f64,
}

/// ρ = S e^{−H_down/kT} S†/Z with S = exp(r(b² − b†²)/2), H_down = Ωb†b,
/// H_up = H_down + g(b + b†).
pub fn build_squeezed_thermal(omega: f64, g: f64, r: f64, kt: f64, n_max: usize) -> Result<SqueezedThermal> {
    if !(omega > 0.0 && kt > 0.0) {
        return Err(Error::InvalidInput("Ω and kT must be positive".into()));
    }
    let dim = n_max + 1;
    let big = 4 * dim + 40;
    let b = ladder(big);
    let bd = b.adjoint();
    let num = &bd * &b;
    // S = exp(G), G = r(b² − b†²)/2 anti-Hermitian; G = −iK with K = iG Hermitian
    let gen = (&b * &b - &bd * &bd) * c(0.5 * r);
    let k = gen * i_unit();
    let (kv, kq) = eigh(&k);
    let s = evolve(&kv, &kq, 1.0);
    let rho_th = thermal_state(&(&num * c(omega)), kt)?;
    let rho_big = &s * &rho_th * s.adjoint();
    let thermal_tail: f64 = (dim..big).map(|i| rho_th[(i, i)].re).sum();
    let squeezed_tail: f64 = (dim..big).map(|i| rho_big[(i, i)].re).sum();
    let tail_mass = thermal_tail.max(squeezed_tail);
    if tail_mass >= 1e-8 {
        return Err(Error::InvalidInput(format!(
            "occupation beyond n_max = {n_max} is {tail_mass:e} (≥ 1e-8); increase n_max"
        )));
    }
    let mut rho = rho_big.view((0, 0), (dim, dim)).into_owned();
    let tr = rho.trace();
    rho /= tr;
    rho = (&rho + rho.adjoint()) * c(0.5);
    let generator_big = &s * &num * s.adjoint();
    let generator = generator_big.view((0, 0), (dim, dim)).into_owned();
    let bs = ladder(dim);
    let bsd = bs.adjoint();
    let h_down = &bsd * &bs * c(omega);
    let h_up = &h_down + (&bs + &bsd) * c(g);
    Ok(SqueezedThermal {
        bath: FiniteBath::qubit(h_down, h_up, rho)?,
        generator: (&generator + generator.adjoint()) * c(0.5),
        tail_mass,
    })
}

fn i_unit() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// V' in the closed form −Ω b†b sinh²2r + ¼(−Ω sinh4r b†² + 2g b† + H.c.),
/// shifted by the constant −(Ω/2) sinh²2r that the projector prescription produces.
pub fn squeezed_v_prime_closed_form(omega: f64, g: f64, r: f64, n_max: usize) -> CMatrix {
    let dim = n_max + 1;
    let b = ladder(dim);
    let bd = b.adjoint();
    let sh2 = (2.0 * r).sinh().powi(2);
    let s4 = (4.0 * r).sinh();
    let pair = &bd * &bd * c(-omega * s4) + &bd * c(2.0 * g);
    let mut v = &bd * &b * c(-omega * sh2) + (&pair + pair.adjoint()) * c(0.25);
    for i in 0..dim {
        v[(i, i)] -= c(0.5 * omega * sh2);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_fn(v.len(), v.len(), |r, k| if r == k { c(v[r]) } else { c(0.0) })
    }

    #[test]
    fn equal_hamiltonians_give_half() {
        let h = CMatrix::from_fn(3, 3, |r, k| c((r + k) as f64 * 0.3));
        let rho = diag(&[0.5, 0.3, 0.2]);
        let bath = FiniteBath::qubit(h.clone(), h, rho).unwrap();
        for &t in &[0.1, 3.0, 40.0] {
            let v = exact_coherence(&bath, &PulseSequence::hahn(t).unwrap(), None).unwrap();
            assert!((v - c(0.5)).norm() < 1e-13);
        }
    }

    #[test]
    fn commuting_spin_case() {
        // H_down = 0, H_up = gσ_z, ρ = 1/2 → ⟨σ₋⟩ = ½ cos(g t_f)
        let g = 0.7;
        let bath = FiniteBath::qubit(CMatrix::zeros(2, 2), diag(&[g, -g]), diag(&[0.5, 0.5])).unwrap();
        for &t in &[0.3, 1.1, 5.0] {
            let v = exact_coherence(&bath, &PulseSequence::ramsey(t).unwrap(), None).unwrap();
            assert!((v - c(0.5 * (g * t).cos())).norm() < 1e-13);
        }
    }

    #[test]
    fn validation() {
        let h = diag(&[1.0, 2.0]);
        assert!(FiniteBath::qubit(h.clone(), h.clone(), diag(&[0.6, 0.6])).is_err());
        assert!(FiniteBath::qubit(h.clone(), h.clone(), diag(&[1.2, -0.2])).is_err());
        let mut nh = h.clone();
        nh[(0, 1)] = c(1.0);
        assert!(FiniteBath::qubit(nh, h, diag(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn decomposition_trivial_cases() {
        let h = CMatrix::from_fn(3, 3, |r, k| Complex64::new((r * k) as f64, r as f64 - k as f64));
        let id = diag(&[1.0 / 3.0; 3]);
        let d = quench_decompose(&id, &h, &DecomposeOptions::default()).unwrap();
        assert!(d.v_prime.norm() < 1e-12);
        assert_eq!(d.eigen_groups.len(), 1);
        let rho = diag(&[0.5, 0.3, 0.2]);
        let d = quench_decompose(&rho, &h, &DecomposeOptions::default()).unwrap();
        for r in 0..3 {
            for k in 0..3 {
                let want = if r == k { h[(r, k)] } else { c(0.0) };
                assert!((d.h_prime[(r, k)] - want).norm() < 1e-12);
            }
        }
        let rank1 = diag(&[1.0, 0.0, 0.0]);
        let d = quench_decompose(&rank1, &h, &DecomposeOptions::default()).unwrap();
        assert_eq!(d.eigen_groups.last().unwrap().value, 0.0);
        assert_eq!(d.eigen_groups.last().unwrap().multiplicity, 2);
    }

    #[test]
    fn ordered_pair_matches_brute_force() {
        let nu = 1.7;
        let (a1, b1, a2, b2) = (0.2, 1.5, 0.9, 2.4);
        let n = 1200;
        let mut acc = c(0.0);
        for i in 0..n {
            let t1 = a1 + (b1 - a1) * (i as f64 + 0.5) / n as f64;
            for j in 0..n {
                let t2 = a2 + (b2 - a2) * (j as f64 + 0.5) / n as f64;
                if t2 > t1 {
                    acc += Complex64::from_polar(1.0, nu * (t1 - t2));
                }
            }
        }
        acc *= c((b1 - a1) * (b2 - a2) / (n * n) as f64);
        let v = ordered_pair(nu, a1, b1, a2, b2);
        assert!((v - acc).norm() < 2e-3, "{v} vs {acc}");
        let small = ordered_pair(1e-9, 0.0, 1.0, 0.0, 1.0);
        assert!((small - c(0.5)).norm() < 1e-8);
    }

    #[test]
    fn json_round_trip() {
        let bath = build_boson(1.0, 0.05, 0.2, 6).unwrap();
        let back = FiniteBath::from_json(&bath.to_json().unwrap()).unwrap();
        assert!((back.rho - &bath.rho).norm() < 1e-15);
        assert!(FiniteBath::from_json(r#"{"dim": 1, "H": {}, "rho": [[[1,0]]], "x": 1}"#).is_err());
    }
}
