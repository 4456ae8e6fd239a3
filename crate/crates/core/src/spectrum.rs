//! Spectral values `σ_j^±`: the spectral function, its large-`|j|`
//! asymptotics, a windowed solver with index labelling, multiplicity
//! classification and continuation in `ε`.
//!
//! Roots are computed as eigenvalues of the Fourier–Galerkin truncation
//! ([`crate::hill`]). The reported residual is the relative Galerkin residual;
//! roots it does not certify are checked against `F` and polished by Newton's
//! method when the monodromy is well conditioned. The monodromy grows like
//! `exp(2π|Im(σ/λ)|)`, so `|F|` is never used for large `|σ|`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basic::{dominance, winding_grid, winding_number, Dominant};
use crate::error::{DcError, Result};
use crate::floquet::monodromy;
use crate::hill::{hill_clusters, HillCluster, HillMode};
use crate::operator::OperatorSpec;
use crate::periodic::{PeriodicFunction, C64, I};

/// Two roots closer than this are one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Largest `|j|` handled by one symmetric window; beyond it each index gets its own window.
const FULL_WINDOW_LIMIT: i64 = 24;

/// Newton polishing is attempted only below this growth exponent.
const POLISH_GROWTH: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn sign(self) -> &'static str {
        match self {
            Branch::Minus => "-",
            Branch::Plus => "+",
        }
    }
}

/// Coefficients of a normalized periodic solution `(φ, ψ)` on `[lo, lo + len)`.
#[derive(Clone, Debug)]
pub struct ModeData {
    pub lo: i64,
    pub phi: Vec<C64>,
    pub psi: Vec<C64>,
}

impl ModeData {
    pub fn hi(&self) -> i64 {
        self.lo + self.phi.len() as i64 - 1
    }

    pub fn band(&self) -> i64 {
        self.lo.abs().max(self.hi().abs())
    }

    pub fn functions(&self, m: usize) -> Result<(PeriodicFunction, PeriodicFunction)> {
        let modes = |v: &[C64]| -> Vec<(i64, C64)> {
            v.iter().enumerate().map(|(i, z)| (self.lo + i as i64, *z)).collect()
        };
        Ok((
            PeriodicFunction::from_modes(m, &modes(&self.phi))?,
            PeriodicFunction::from_modes(m, &modes(&self.psi))?,
        ))
    }

    fn from_hill(mode: &HillMode) -> Self {
        Self { lo: mode.lo, phi: mode.phi.clone(), psi: mode.psi.clone() }
    }

    pub(crate) fn scaled(&self, s: C64) -> Self {
        Self {
            lo: self.lo,
            phi: self.phi.iter().map(|z| z * s).collect(),
            psi: self.psi.iter().map(|z| z * s).collect(),
        }
    }

    fn phi_at_zero(&self) -> C64 {
        self.phi.iter().sum()
    }

    /// Coefficients of `f = φ + ψ̄` on the symmetric range `[−N, N]`.
    pub(crate) fn real_part_function(&self) -> Vec<C64> {
        let n = self.band();
        let mut f = vec![C64::new(0.0, 0.0); (2 * n + 1) as usize];
        for (i, z) in self.phi.iter().enumerate() {
            f[(self.lo + i as i64 + n) as usize] += z;
        }
        // conj(ψ) has coefficient conj(ψ_{−l}) at l.
        for (i, z) in self.psi.iter().enumerate() {
            f[(-(self.lo + i as i64) + n) as usize] += z.conj();
        }
        f
    }

    /// The pair `(f/2, f̄/2)` for a real exponent, from the coefficients of `f` on `[−N, N]`.
    pub(crate) fn from_real_function(f: &[C64]) -> Self {
        let n = (f.len() as i64 - 1) / 2;
        let phi: Vec<C64> = f.iter().map(|z| z * 0.5).collect();
        let psi: Vec<C64> = (0..f.len()).map(|i| f[f.len() - 1 - i].conj() * 0.5).collect();
        Self { lo: -n, phi, psi }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralValue {
    pub sigma: C64,
    pub j: i64,
    pub branch: Branch,
    /// 2 when `B(σ) = I`, so that both branches share `σ` and a two-dimensional solution space.
    pub multiplicity: u8,
    /// Relative Galerkin residual, or relative `|F(σ)|` after a monodromy check.
    pub residual: f64,
    pub is_real: bool,
    /// Second member of a coalesced real pair whose monodromy is a Jordan block:
    /// `σ` is a double root of `F` but carries a single basic solution.
    pub defective: bool,
    #[serde(skip)]
    pub solution: Option<ModeData>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Gap {
    pub j: i64,
    pub found: usize,
    pub reason: String,
    /// `(Re min, Re max, Im min, Im max)` of the rectangle scanned for seeds.
    pub rectangle: (f64, f64, f64, f64),
    /// Local minima of `|F|` found by the coarse scan.
    pub scan_minima: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumWindow {
    pub values: Vec<SpectralValue>,
    pub j_min: i64,
    pub j_max: i64,
    /// `γ = (1/4aπ)∫|c|²`.
    pub gamma: f64,
    /// Smallest `|j|` with `|γ/j²| < a/4`.
    pub j0: i64,
    pub gaps: Vec<Gap>,
}

impl SpectrumWindow {
    pub fn is_complete(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn get(&self, j: i64, branch: Branch) -> Option<&SpectralValue> {
        self.values.iter().find(|v| v.j == j && v.branch == branch)
    }

    pub fn at(&self, j: i64) -> Vec<&SpectralValue> {
        self.values.iter().filter(|v| v.j == j).collect()
    }
}

/// `F = tr B − 1 − exp(4πbεσ/|λ_ε|²)` and `∂F/∂σ`.
pub fn spectral_function(spec: &OperatorSpec, sigma: C64) -> Result<(C64, C64)> {
    let m = monodromy(spec, sigma, 1e-12)?;
    let lam = spec.lambda();
    let rate = 4.0 * PI * spec.b * spec.epsilon / lam.norm_sqr();
    let e = (sigma * rate).exp();
    let f = m.b.trace() - 1.0 - e;
    let fs = m.b_sigma.trace() - e * rate;
    Ok((f, fs))
}

/// `|F| / (1 + |tr B| + |det B|)`.
pub fn relative_spectral_residual(spec: &OperatorSpec, sigma: C64) -> Result<f64> {
    let m = monodromy(spec, sigma, 1e-12)?;
    let lam = spec.lambda();
    let e = (sigma * (4.0 * PI * spec.b * spec.epsilon / lam.norm_sqr())).exp();
    let tr = m.b.trace();
    Ok((tr - 1.0 - e).norm() / (1.0 + tr.norm() + e.norm()))
}

/// Exponent `2π·max|Re(diagonal of M)|` bounding the growth of the monodromy.
pub fn growth_exponent(spec: &OperatorSpec, sigma: C64) -> f64 {
    let lam = spec.lambda();
    let d1 = (I * (sigma - lam * spec.nu) / lam).re.abs();
    let d2 = (I * (sigma - lam.conj() * spec.nu) / lam.conj()).re.abs();
    let c: f64 = spec.c_modes().iter().map(|(_, z)| z.norm()).sum();
    2.0 * PI * (d1.max(d2) + c / lam.norm())
}

/// `λ_ε(j+ν) + γ/j`.
pub fn asymptotic_sigma(spec: &OperatorSpec, j: i64) -> Result<C64> {
    if j == 0 {
        return Err(DcError::InvalidInput("the asymptotic formula needs j ≠ 0".into()));
    }
    Ok(spec.lambda() * (j as f64 + spec.nu) + spec.gamma() / j as f64)
}

/// Smallest `|j| ≥ 1` with `|γ/j²| < a/4`.
pub fn asymptotic_threshold(spec: &OperatorSpec) -> i64 {
    let g = spec.gamma().abs();
    let mut j = 1i64;
    while g / (j * j) as f64 >= spec.a / 4.0 {
        j += 1;
    }
    j
}

fn margin(spec: &OperatorSpec) -> i64 {
    let cmax: f64 = spec.c_modes().iter().map(|(_, z)| z.norm()).sum();
    24 + 4 * spec.c_bandwidth() + (4.0 * cmax / spec.a).ceil() as i64
}

/// Provisional entry before branch assignment.
#[derive(Clone, Debug)]
struct Entry {
    sigma: C64,
    j: i64,
    kind: Kind,
    residual: f64,
    solution: Option<ModeData>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Complex(Branch),
    RealSimple,
    RealDouble(Branch),
    RealDefective,
}

/// Real-linear rank reduction of complex coefficient vectors: returns a basis.
pub(crate) fn real_basis(cands: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let scale = cands.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    // Largest first keeps the Gram–Schmidt well conditioned.
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|a, b| norm(&cands[*b]).total_cmp(&norm(&cands[*a])));
    for i in order {
        let mut v = cands[i].clone();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= y * dot);
            }
        }
        let n = norm(&v);
        if n > 1e-6 * scale {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    basis
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn index_of(coeffs: &[C64], lo: i64) -> Result<i64> {
    let band = lo.abs().max((lo + coeffs.len() as i64 - 1).abs());
    let modes: Vec<(i64, C64)> = coeffs.iter().enumerate().map(|(i, z)| (lo + i as i64, *z)).collect();
    winding_number(&PeriodicFunction::from_modes(winding_grid(band), &modes)?)
}

/// Entries generated by one cluster of Galerkin eigenvalues.
///
/// `twin_absent`: the conjugate twin `(ψ̄, φ̄)` of each mode lies outside the
/// truncation, so a real root is double.
fn cluster_entries(cl: &HillCluster, twin_absent: bool) -> Result<Vec<Entry>> {
    let real_tol = 1e-9 * (1.0 + cl.sigma.norm());
    let residual = cl.modes.iter().map(|m| m.residual / (1.0 + cl.sigma.norm()) + m.edge_mass.sqrt()).fold(0.0, f64::max);
    let mut out = Vec::new();
    if cl.sigma.im.abs() > real_tol.max(if cl.size > 1 { CLUSTER_TOL } else { 0.0 }) {
        for mode in &cl.modes {
            let data = ModeData::from_hill(mode);
            let band = data.band();
            let (phi, psi) = data.functions(winding_grid(band))?;
            if dominance(&phi, &psi) != Some(Dominant::Phi) {
                continue;
            }
            let j = winding_number(&phi)?;
            let p0 = data.phi_at_zero();
            out.push(Entry {
                sigma: cl.sigma,
                j,
                kind: Kind::Complex(Branch::Plus),
                residual,
                solution: Some(data.scaled(C64::new(1.0, 0.0) / p0)),
            });
            out.push(Entry {
                sigma: cl.sigma,
                j,
                kind: Kind::Complex(Branch::Minus),
                residual,
                solution: Some(data.scaled(I / p0)),
            });
        }
        return Ok(out);
    }
    let sigma = C64::new(cl.sigma.re, 0.0);
    let mut cands = Vec::new();
    for mode in &cl.modes {
        let data = ModeData::from_hill(mode);
        cands.push(data.real_part_function());
        cands.push(data.scaled(I).real_part_function());
    }
    let basis = real_basis(&cands);
    let n = (basis.first().map_or(1, |v| v.len()) as i64 - 1) / 2;
    let at0 = |v: &[C64]| -> C64 { v.iter().sum() };
    match basis.len() {
        0 => {}
        1 => {
            let f0 = at0(&basis[0]);
            // Real multiples only: fix |f(0)| = 1 and Re f(0) ≥ 0.
            let mut s = 1.0 / f0.norm();
            if f0.re < 0.0 || (f0.re == 0.0 && f0.im < 0.0) {
                s = -s;
            }
            let f: Vec<C64> = basis[0].iter().map(|z| z * s).collect();
            let j = index_of(&f, -n)?;
            out.push(Entry {
                sigma,
                j,
                kind: Kind::RealSimple,
                residual,
                solution: Some(ModeData::from_real_function(&f)),
            });
            if cl.size >= 2 || twin_absent {
                out.push(Entry { sigma, j, kind: Kind::RealDefective, residual, solution: None });
            }
        }
        _ => {
            let (f1, f2) = (&basis[0], &basis[1]);
            let (a, b) = (at0(f1), at0(f2));
            let det = a.re * b.im - a.im * b.re;
            if det.abs() < 1e-10 {
                return Err(DcError::Numeric(format!(
                    "real solution space at σ = {sigma} cannot be normalized at t = 0"
                )));
            }
            // Solve α·a + β·b = target with α, β real.
            for (branch, target) in [(Branch::Plus, C64::new(1.0, 0.0)), (Branch::Minus, I)] {
                let alpha = (target.re * b.im - target.im * b.re) / det;
                let beta = (a.re * target.im - a.im * target.re) / det;
                let f: Vec<C64> = f1.iter().zip(f2).map(|(x, y)| x * alpha + y * beta).collect();
                let j = index_of(&f, -n)?;
                out.push(Entry {
                    sigma,
                    j,
                    kind: Kind::RealDouble(branch),
                    residual,
                    solution: Some(ModeData::from_real_function(&f)),
                });
            }
        }
    }
    Ok(out)
}

/// Newton on `F` from a Galerkin root when the monodromy is well conditioned.
fn polish(spec: &OperatorSpec, entry: &mut Entry) {
    if !matches!(entry.kind, Kind::RealSimple | Kind::Complex(_)) {
        return;
    }
    if growth_exponent(spec, entry.sigma) > POLISH_GROWTH {
        return;
    }
    let Ok(mut best) = relative_spectral_residual(spec, entry.sigma) else {
        return;
    };
    let mut sigma = entry.sigma;
    for _ in 0..3 {
        let Ok((f, fs)) = spectral_function(spec, sigma) else {
            break;
        };
        if fs.norm() == 0.0 {
            break;
        }
        let mut step = f / fs;
        if matches!(entry.kind, Kind::RealSimple) {
            step = C64::new(step.re, 0.0);
        }
        if step.norm() > 1e-6 {
            break;
        }
        let cand = sigma - step;
        let Ok(r) = relative_spectral_residual(spec, cand) else {
            break;
        };
        if r < 0.5 * best {
            best = r;
            sigma = cand;
        } else {
            break;
        }
    }
    entry.sigma = sigma;
    entry.residual = best;
}

/// Monodromy check and Newton polish, only for roots the Galerkin residual does not certify.
fn refine(spec: &OperatorSpec, entry: &mut Entry, tol: f64) {
    if entry.residual <= tol {
        return;
    }
    polish(spec, entry);
    if growth_exponent(spec, entry.sigma) <= POLISH_GROWTH {
        if let Ok(r) = relative_spectral_residual(spec, entry.sigma) {
            entry.residual = entry.residual.min(r);
        }
    }
}

/// Entries from the symmetric window covering indices `[lo, hi]`.
fn window_entries(spec: &OperatorSpec, lo: i64, hi: i64, w: i64) -> Result<Vec<Entry>> {
    let n = lo.abs().max(hi.abs()) + w;
    let a = spec.a;
    let cmax: f64 = spec.c_modes().iter().map(|(_, z)| z.norm()).sum();
    let slack = 2.0 * a + 2.0 * cmax + spec.gamma().abs() + 1.0;
    let (re_lo, re_hi) = (a * (lo as f64 + spec.nu) - slack, a * (hi as f64 + spec.nu) + slack);
    let clusters = hill_clusters(spec, -n, n, false, CLUSTER_TOL, |s| s.re >= re_lo && s.re <= re_hi)?;
    let mut out = Vec::new();
    for cl in &clusters {
        if cl.modes.iter().any(|m| m.edge_mass > 1e-24) {
            continue;
        }
        out.extend(cluster_entries(cl, false)?);
    }
    Ok(out)
}

/// Entries for a single large index from a local window `[j − h, j + h]`, `h ≤ w`.
///
/// The window starts narrow and doubles until both branches pass the edge-mass check.
fn local_entries(spec: &OperatorSpec, j: i64, w: i64) -> Result<Vec<Entry>> {
    let target = asymptotic_sigma(spec, j)?;
    let radius = 0.45 * spec.a;
    let mut h = (8 + 2 * spec.c_bandwidth()).min(w);
    loop {
        let clusters = hill_clusters(spec, j - h, j + h, false, CLUSTER_TOL, |s| (s - target).norm() < radius)?;
        let mut out = Vec::new();
        for cl in &clusters {
            if cl.modes.iter().any(|m| m.edge_mass > 1e-24) {
                continue;
            }
            out.extend(cluster_entries(cl, true)?);
        }
        if h >= w || out.iter().filter(|e| e.j == j).count() >= 2 {
            return Ok(out);
        }
        h = (2 * h).min(w);
    }
}

/// Assign branches per index and collect gaps.
fn assemble(spec: &OperatorSpec, entries: Vec<Entry>, indices: &[i64], tol: f64) -> (Vec<SpectralValue>, Vec<Gap>) {
    let mut values = Vec::new();
    let mut gaps = Vec::new();
    for &j in indices {
        let mut here: Vec<&Entry> = entries.iter().filter(|e| e.j == j).collect();
        here.sort_by(|a, b| a.sigma.re.total_cmp(&b.sigma.re).then(a.sigma.im.total_cmp(&b.sigma.im)));
        let mut labelled: Vec<(Branch, &Entry)> = Vec::new();
        let simple: Vec<&&Entry> = here.iter().filter(|e| e.kind == Kind::RealSimple).collect();
        let defective = here.iter().any(|e| e.kind == Kind::RealDefective);
        for e in &here {
            match e.kind {
                Kind::Complex(b) | Kind::RealDouble(b) => labelled.push((b, e)),
                Kind::RealDefective => labelled.push((Branch::Minus, e)),
                Kind::RealSimple => {}
            }
        }
        match (simple.len(), defective) {
            (0, _) => {}
            (1, true) => labelled.push((Branch::Plus, simple[0])),
            (2, false) => {
                labelled.push((Branch::Minus, simple[0]));
                labelled.push((Branch::Plus, simple[1]));
            }
            _ => {
                for e in &simple {
                    labelled.push((Branch::Plus, e));
                }
            }
        }
        let ok = labelled.len() == 2
            && labelled[0].0 != labelled[1].0
            && labelled.iter().all(|(_, e)| e.residual <= tol || e.kind == Kind::RealDefective);
        if !ok {
            let reason = if labelled.len() > 2 {
                format!("index conflict: {} roots claim index {j}", labelled.len())
            } else if labelled.len() == 2 && labelled[0].0 == labelled[1].0 {
                format!("index conflict: two roots claim ({j}, {})", labelled[0].0.sign())
            } else if labelled.len() < 2 {
                "missing root".to_string()
            } else {
                "root residual above tolerance".to_string()
            };
            gaps.push(gap_report(spec, j, labelled.len(), reason));
            continue;
        }
        labelled.sort_by_key(|(b, _)| *b);
        for (branch, e) in labelled {
            let double = matches!(e.kind, Kind::RealDouble(_));
            values.push(SpectralValue {
                sigma: e.sigma,
                j,
                branch,
                multiplicity: if double { 2 } else { 1 },
                residual: e.residual,
                is_real: !matches!(e.kind, Kind::Complex(_)),
                defective: e.kind == Kind::RealDefective,
                solution: e.solution.clone(),
            });
        }
    }
    (values, gaps)
}

/// Gap without scan data; `scan_gap` fills it in once the gap is final.
fn gap_report(spec: &OperatorSpec, j: i64, found: usize, reason: String) -> Gap {
    let a = spec.a;
    let h = spec.b.abs() * (j.abs() as f64 + 2.0) + 2.0 * spec.gamma().abs() + 1.0;
    let rect = (a * (j as f64 - 2.0), a * (j as f64 + 2.0), -h, h);
    Gap { j, found, reason, rectangle: rect, scan_minima: Vec::new() }
}

fn scan_gap(spec: &OperatorSpec, g: &mut Gap) {
    g.scan_minima = coarse_scan(spec, g.rectangle, 24, 24).unwrap_or_default();
}

/// Local minima of `|F|` on an `nr × ni` grid over the rectangle, skipped where the monodromy overflows.
pub fn coarse_scan(spec: &OperatorSpec, rect: (f64, f64, f64, f64), nr: usize, ni: usize) -> Result<Vec<C64>> {
    let (r0, r1, i0, i1) = rect;
    let pts: Vec<C64> = (0..ni)
        .flat_map(|q| {
            (0..nr).map(move |p| {
                C64::new(
                    r0 + (r1 - r0) * p as f64 / (nr - 1) as f64,
                    i0 + (i1 - i0) * q as f64 / (ni - 1) as f64,
                )
            })
        })
        .collect();
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|s| {
            if growth_exponent(spec, *s) > 30.0 {
                f64::INFINITY
            } else {
                relative_spectral_residual(spec, *s).unwrap_or(f64::INFINITY)
            }
        })
        .collect();
    let mut minima = Vec::new();
    for q in 1..ni - 1 {
        for p in 1..nr - 1 {
            let v = vals[q * nr + p];
            if !v.is_finite() {
                continue;
            }
            let neighbours = [(q - 1) * nr + p, (q + 1) * nr + p, q * nr + p - 1, q * nr + p + 1];
            if neighbours.iter().all(|k| vals[*k] > v) {
                minima.push(pts[q * nr + p]);
            }
        }
    }
    Ok(minima)
}

/// Spectral values with indices in `[j_min, j_max]`, two branch entries per index.
///
/// Indices that cannot be resolved are listed in `gaps`, never filled in.
pub fn find_spectral_values(spec: &OperatorSpec, j_min: i64, j_max: i64, tol: f64) -> Result<SpectrumWindow> {
    if j_max < j_min {
        return Err(DcError::InvalidInput(format!("empty index range [{j_min}, {j_max}]")));
    }
    if !(tol > 0.0) {
        return Err(DcError::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let w = margin(spec);
    let limit = FULL_WINDOW_LIMIT.max(2 * asymptotic_threshold(spec) + 8);
    let (full_lo, full_hi) = (j_min.max(-limit), j_max.min(limit));
    let mut entries = Vec::new();
    if full_lo <= full_hi {
        entries = window_entries(spec, full_lo, full_hi, w)?;
        // Beyond the seam the local windows own the indices.
        entries.retain(|e| e.j >= full_lo && e.j <= full_hi);
    }
    let far: Vec<i64> = (j_min..=j_max).filter(|j| j.abs() > limit).collect();
    let far_entries: Vec<Vec<Entry>> = far.par_iter().map(|j| local_entries(spec, *j, w)).collect::<Result<_>>()?;
    entries.extend(far_entries.into_iter().flatten());
    entries.retain(|e| e.j >= j_min && e.j <= j_max);
    entries.par_iter_mut().for_each(|e| {
        refine(spec, e, tol);
    });
    let all: Vec<i64> = (j_min..=j_max).collect();
    let (mut values, mut gaps) = assemble(spec, entries, &all, tol);
    if !gaps.is_empty() {
        // One retry with a doubled margin for the unresolved indices.
        let retry: Vec<i64> = gaps.iter().map(|g| g.j).collect();
        let mut extra = Vec::new();
        for j in &retry {
            let mut e = if j.abs() > limit {
                local_entries(spec, *j, 2 * w)?
            } else {
                window_entries(spec, *j, *j, 2 * w + j.abs())?
            };
            e.retain(|x| x.j == *j);
            e.iter_mut().for_each(|x| {
                refine(spec, x, tol);
            });
            extra.extend(e);
        }
        let (v2, g2) = assemble(spec, extra, &retry, tol);
        values.extend(v2);
        gaps = g2;
        values.sort_by_key(|v| (v.j, v.branch));
        for g in &mut gaps {
            scan_gap(spec, g);
        }
    }
    Ok(SpectrumWindow {
        values,
        j_min,
        j_max,
        gamma: spec.gamma(),
        j0: asymptotic_threshold(spec),
        gaps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MultiplicityClass {
    Simple,
    Double,
    Indeterminate,
}

/// `Double` iff `‖B(σ) − I‖ ≤ cluster_tol`; within a factor 10 of the threshold the verdict is
/// `Indeterminate`. Large-growth values fall back to the Galerkin multiplicity.
pub fn classify_multiplicity(spec: &OperatorSpec, sv: &SpectralValue, cluster_tol: f64) -> Result<MultiplicityClass> {
    if growth_exponent(spec, sv.sigma) > 20.0 {
        return Ok(if sv.multiplicity == 2 { MultiplicityClass::Double } else { MultiplicityClass::Simple });
    }
    let b = monodromy(spec, sv.sigma, 1e-12)?.b;
    let dev = (b - crate::floquet::Mat2::identity()).norm() / (1.0 + b.norm());
    Ok(if dev <= cluster_tol / 10.0 {
        MultiplicityClass::Double
    } else if dev <= cluster_tol * 10.0 {
        MultiplicityClass::Indeterminate
    } else {
        MultiplicityClass::Simple
    })
}

/// Local behaviour of a tracked pair through a collision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HomotopyCase {
    /// One non-real value for `ε ≠ 0` (both branches share it).
    ComplexPair,
    /// Two distinct real values.
    RealPairSplit,
    /// One real value persisting.
    SingleReal,
}

#[derive(Clone, Debug, Serialize)]
pub struct HomotopyTrack {
    pub points: Vec<(f64, C64)>,
    /// `ε` values where the two branches of the index come within the cluster tolerance or
    /// change between real and complex.
    pub collisions: Vec<f64>,
    /// Behaviour at the end of the path.
    pub case: Option<HomotopyCase>,
}

/// Follow `σ_j^{branch}(ε)` along `eps_path`, which must start at 0.
pub fn track_epsilon_homotopy(spec: &OperatorSpec, j: i64, branch: Branch, eps_path: &[f64]) -> Result<HomotopyTrack> {
    if eps_path.first().copied() != Some(0.0) {
        return Err(DcError::InvalidInput("the ε path must start at 0".into()));
    }
    let pair_at = |eps: f64| -> Result<(SpectralValue, SpectralValue)> {
        let w = find_spectral_values(&spec.with_epsilon(eps), j, j, 1e-6)?;
        match (w.get(j, Branch::Minus), w.get(j, Branch::Plus)) {
            (Some(m), Some(p)) => Ok((m.clone(), p.clone())),
            _ => Err(DcError::Numeric(format!("index {j} unresolved at ε = {eps}"))),
        }
    };
    let mut points = Vec::new();
    let mut collisions = Vec::new();
    let mut prev: Option<(f64, C64, bool)> = None;
    let mut last_pair = None;
    for &eps in eps_path {
        let mut target = eps;
        let mut tries = 0;
        let pair = loop {
            match pair_at(target) {
                Ok(p) => break p,
                Err(e) => {
                    let Some((e0, _, _)) = prev else { return Err(e) };
                    tries += 1;
                    if tries > 8 {
                        return Err(DcError::Numeric(format!(
                            "continuation of σ_{j} failed beyond ε = {e0}: {e}"
                        )));
                    }
                    target = 0.5 * (e0 + target);
                }
            }
        };
        let (m, p) = &pair;
        let chosen = match prev {
            // Continuity: the branch nearest the previous value.
            Some((_, s, _)) if (m.sigma - s).norm() < (p.sigma - s).norm() => m,
            Some(_) => p,
            None => {
                if branch == Branch::Minus {
                    m
                } else {
                    p
                }
            }
        };
        let is_real = m.is_real && p.is_real;
        if let Some((_, _, was_real)) = prev {
            if was_real != is_real || (m.sigma - p.sigma).norm() <= CLUSTER_TOL {
                collisions.push(target);
            }
        }
        points.push((target, chosen.sigma));
        prev = Some((target, chosen.sigma, is_real));
        last_pair = Some(pair.clone());
    }
    let case = last_pair.map(|(m, p)| {
        if !m.is_real {
            HomotopyCase::ComplexPair
        } else if (m.sigma - p.sigma).norm() > CLUSTER_TOL {
            HomotopyCase::RealPairSplit
        } else {
            HomotopyCase::SingleReal
        }
    });
    Ok(HomotopyTrack { points, collisions, case })
}
