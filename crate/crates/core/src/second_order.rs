//! The second-order operator `P = LL̄ + λ̄βL + λβ̄L̄` and its reduction to
//! `ℒw = Lw − c w̄` through the `L`-potential `w = B L̄u`, with
//! `B = exp∫₀ᵗ β̄` and `c = −λ̄βB/B̄`.
//!
//! In `s = log r`,
//! `Pu = |λ|²u_tt − 2b u_st + u_ss + |λ|²(β+β̄)u_t − i(λ̄β − λβ̄)u_s`.

use serde::Serialize;

use crate::basic::{basic_solution, winding_number, BasicSolution};
use crate::cylinder::{cumulative_quintic, SolveReport, TPlan};
use crate::error::{DcError, Result};
use crate::grid::CylinderFunction;
use crate::kernels::{KernelContext, KernelMode};
use crate::operator::OperatorSpec;
use crate::periodic::{nodes, PeriodicFunction, C64, I};
use crate::spectrum::{asymptotic_threshold, Branch, SpectralValue, SpectrumWindow};

use std::f64::consts::PI;

/// Tolerance on the integrality of `(1/2πi)∫β`.
const INTEGRALITY_TOL: f64 = 1e-10;

/// Largest angular grid tried when resolving `B`.
const MAX_B_GRID: usize = 4097;

#[derive(Clone, Debug)]
pub struct SecondOrderSpec {
    pub lambda: C64,
    pub beta: PeriodicFunction,
    /// `(1/2πi)∫β`; `Ind B = −k`.
    pub k: i64,
    pub b_fn: PeriodicFunction,
    pub c: PeriodicFunction,
    /// `ℒ` with `ν = 0`, `ε = 1`.
    pub operator: OperatorSpec,
    /// `max |LB − λβ̄B|`.
    pub lb_residual: f64,
}

fn significant(f: &PeriodicFunction, rel: f64) -> Result<PeriodicFunction> {
    let scale = f.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let modes: Vec<(i64, C64)> = f.modes(rel * scale.max(1e-300));
    let band = modes.iter().map(|(l, _)| l.abs()).max().unwrap_or(0);
    PeriodicFunction::from_modes((2 * band as usize + 1).max(3), &modes)
}

/// `P` from `λ` and `β`, with `B`, `c` and the associated `ℒ`.
pub fn build_p(lambda: C64, beta: &PeriodicFunction) -> Result<SecondOrderSpec> {
    if !(lambda.re > 0.0) || !lambda.im.is_finite() {
        return Err(DcError::InvalidInput(format!("Re λ must be positive, got {lambda}")));
    }
    let kc = beta.mean() / I;
    let k = kc.re.round();
    if (kc - k).norm() > INTEGRALITY_TOL {
        return Err(DcError::InvalidInput(format!("(1/2πi)∫β = {kc} is not an integer")));
    }
    let k = k as i64;
    let beta = significant(beta, 1e-15)?;
    // B = e^{−ikt} exp(∫₀ᵗ (β̄ − mean β̄)); refine until its Fourier tail is negligible.
    let mut m = (8 * beta.band_limit() as usize + 33) | 1;
    let b_fn = loop {
        let g = beta.resample(m).conj().primitive_zero_mean();
        let ts = nodes(m);
        let samples: Vec<C64> =
            g.samples().iter().zip(&ts).map(|(z, t)| (z - I * (k as f64 * t)).exp()).collect();
        let b = PeriodicFunction::from_samples(samples)?;
        let kk = b.band_limit();
        let scale = b.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let edge = (0..=kk / 8).map(|d| b.coeff(kk - d).norm().max(b.coeff(-kk + d).norm())).fold(0.0, f64::max);
        if edge <= 1e-15 * scale {
            break b;
        }
        if m >= MAX_B_GRID {
            return Err(DcError::Numeric(format!("B = exp∫β̄ is not resolved on {m} angular nodes")));
        }
        m = 2 * m + 1;
    };
    let ind = winding_number(&b_fn)?;
    if ind != -k {
        return Err(DcError::Invariant(format!("Ind B = {ind}, expected {}", -k)));
    }
    let bs = b_fn.samples();
    let betas = beta.samples_on(m);
    let c_raw: Vec<C64> =
        (0..m).map(|i| -lambda.conj() * betas[i] * bs[i] / bs[i].conj()).collect();
    let c = significant(&PeriodicFunction::from_samples(c_raw)?, 1e-14)?;
    // LB = λB' for a function of t alone.
    let db = b_fn.derivative();
    let lb_residual = (0..m)
        .map(|i| (lambda * db.samples()[i] - lambda * betas[i].conj() * bs[i]).norm())
        .fold(0.0, f64::max);
    let scale = b_fn.max_abs() * lambda.norm() * (1.0 + beta.max_abs());
    if lb_residual > 1e-10 * scale {
        return Err(DcError::Invariant(format!("LB − λβ̄B = {lb_residual:.3e}")));
    }
    let cs = c.samples_on(m);
    let c_identity = (0..m)
        .map(|i| (lambda * db.samples()[i] + cs[i].conj() * bs[i] * bs[i] / bs[i].conj()).norm())
        .fold(0.0, f64::max);
    if c_identity > 1e-9 * scale {
        return Err(DcError::Invariant(format!("LB + c̄B²/B̄ = {c_identity:.3e}")));
    }
    let operator = OperatorSpec::new(lambda.re, lambda.im, 0.0, 1.0, c.clone())?;
    Ok(SecondOrderSpec { lambda, beta, k, b_fn, c, operator, lb_residual })
}

impl SecondOrderSpec {
    pub fn a(&self) -> f64 {
        self.lambda.re
    }

    pub fn b_at(&self, t: f64) -> C64 {
        self.b_fn.eval(t)
    }
}

fn require_rows(u: &CylinderFunction, n: usize) -> Result<()> {
    u.validate()?;
    if u.p() < n {
        return Err(DcError::InvalidInput(format!("the radial stencil needs at least {n} radii, got {}", u.p())));
    }
    Ok(())
}

/// `Pu` with spectral `∂t` and finite differences in `s`.
pub fn apply_p(p: &SecondOrderSpec, u: &CylinderFunction) -> Result<CylinderFunction> {
    require_rows(u, 7)?;
    let lam = p.lambda;
    let l2 = lam.norm_sqr();
    let b = lam.im;
    let ut = u.dt();
    let utt = ut.dt();
    let us = u.r_dr();
    let uss = us.r_dr();
    let ust = us.dt();
    let beta = p.beta.samples_on(u.m);
    let mut out = CylinderFunction::zeros(u.radii.clone(), u.m);
    for (idx, z) in out.values.iter_mut().enumerate() {
        let be = beta[idx % u.m];
        *z = utt.values[idx] * l2 - ust.values[idx] * (2.0 * b)
            + uss.values[idx]
            + ut.values[idx] * (l2 * 2.0 * be.re)
            - I * (lam.conj() * be - lam * be.conj()) * us.values[idx];
    }
    Ok(out)
}

/// `Lu = λu_t − i r u_r`.
pub fn apply_l(p: &SecondOrderSpec, u: &CylinderFunction) -> CylinderFunction {
    let ut = u.dt();
    let us = u.r_dr();
    ut.zip(&us, |a, b| p.lambda * a - I * b)
}

/// The `L`-potential `w = B(t)(λ̄u_t + i r u_r)`.
pub fn l_potential(p: &SecondOrderSpec, u: &CylinderFunction) -> Result<CylinderFunction> {
    require_rows(u, 7)?;
    if u.values.iter().any(|z| z.im.abs() > 1e-12 * (1.0 + z.re.abs())) {
        return Err(DcError::InvalidInput("u must be real-valued".into()));
    }
    let ut = u.dt();
    let us = u.r_dr();
    let bs = p.b_fn.samples_on(u.m);
    let mut w = CylinderFunction::zeros(u.radii.clone(), u.m);
    for (idx, z) in w.values.iter_mut().enumerate() {
        *z = bs[idx % u.m] * (p.lambda.conj() * ut.values[idx] + I * us.values[idx]);
    }
    Ok(w)
}

#[derive(Clone, Debug, Serialize)]
pub struct Reconstruction {
    #[serde(skip)]
    pub u: CylinderFunction,
    /// `max_r |Re ∮ w/B dθ| / a`: the integral around each circle.
    pub loop_residual: f64,
    /// `max |u_{t then r} − u_{r then t}|` over the grid.
    pub path_residual: f64,
}

fn node_index(m: usize, t: f64) -> Result<usize> {
    let x = t.rem_euclid(2.0 * PI) * m as f64 / (2.0 * PI);
    let k = x.round();
    if (x - k).abs() > 1e-9 {
        return Err(DcError::InvalidInput(format!("t₀ = {t} is not an angular node")));
    }
    Ok(k as usize % m)
}

/// `u = Re ∫ w/B dζ/(iaζ)` with `ζ = r^λ e^{it}`, integrated from the base point
/// along `r = r₀` and then along `t = const`; `u(r₀, t₀) = 0`.
///
/// The opposite path order is evaluated as well and the two must agree.
pub fn reconstruct_u(p: &SecondOrderSpec, w: &CylinderFunction, r0: f64, t0: f64, tol: f64) -> Result<Reconstruction> {
    require_rows(w, 2)?;
    let (np, m) = (w.p(), w.m);
    let i0 = w
        .radii
        .iter()
        .position(|x| (x - r0).abs() <= 1e-12 * r0.max(1.0))
        .ok_or_else(|| DcError::InvalidInput(format!("r₀ = {r0} is not a grid radius")))?;
    let k0 = node_index(m, t0)?;
    let a = p.a();
    let ts = nodes(m);
    let bs = p.b_fn.samples_on(m);
    let s: Vec<f64> = w.radii.iter().map(|r| r.ln()).collect();
    // Angular primitives (1/a)∫_{t₀}^t w/B dθ on every circle.
    let mut t_part = CylinderFunction::zeros(w.radii.clone(), m);
    let mut loop_residual: f64 = 0.0;
    for i in 0..np {
        let g = PeriodicFunction::from_samples((0..m).map(|k| w.get(i, k) / bs[k]).collect())?;
        let mean = g.mean();
        loop_residual = loop_residual.max((2.0 * PI * mean.re / a).abs());
        let prim = g.primitive_zero_mean();
        let row = t_part.row_mut(i);
        for k in 0..m {
            let v = mean * (ts[k] - ts[k0]) + prim.samples()[k] - prim.samples()[k0];
            row[k] = C64::new(v.re / a, 0.0);
        }
    }
    // Radial primitives Re[(λ/(iaB(t))) ∫_{s₀}^s w ds] on every ray.
    let mut r_part = CylinderFunction::zeros(w.radii.clone(), m);
    for k in 0..m {
        let col: Vec<C64> = (0..np).map(|i| w.get(i, k)).collect();
        let cum = cumulative_quintic(&s, &col);
        let f = p.lambda / (I * a * bs[k]);
        for i in 0..np {
            r_part.values[i * m + k] = C64::new((f * (cum[i] - cum[i0])).re, 0.0);
        }
    }
    let mut u = CylinderFunction::zeros(w.radii.clone(), m);
    let mut path_residual: f64 = 0.0;
    for i in 0..np {
        for k in 0..m {
            let t_then_r = t_part.get(i0, k) + r_part.get(i, k);
            let r_then_t = r_part.get(i, k0) + t_part.get(i, k);
            path_residual = path_residual.max((t_then_r - r_then_t).norm());
            u.values[i * m + k] = t_then_r;
        }
    }
    let scale = 1.0 + u.max_abs();
    if loop_residual > tol * scale || path_residual > tol * scale {
        return Err(DcError::Numeric(format!(
            "w is not an L-potential: loop integral {loop_residual:.3e}, path defect {path_residual:.3e}"
        )));
    }
    Ok(Reconstruction { u, loop_residual, path_residual })
}

/// `q` attached to a basic solution of `ℒ`.
///
/// Real `σ`: `λf/(iaσB)` with `f = φ + ψ̄`. Complex `σ`: `(λφ/B − λ̄ψ/B̄)/(iaσ)`,
/// so that `Re(r^σ q) = Re ∫₀¹ λw(sr,t)/(iaB) ds/s`. The minus branch carries `(iφ, iψ)`,
/// which makes `q⁻ = (λφ/B − λ̄ψ/B̄)/(aσ)` in terms of the plus components.
pub fn q_function(p: &SecondOrderSpec, w: &BasicSolution, m: usize) -> Result<PeriodicFunction> {
    if w.sigma.norm() <= 1e-12 {
        return Err(DcError::InvalidInput("q is undefined at σ = 0; that term belongs to the constant".into()));
    }
    let (lam, a) = (p.lambda, p.a());
    let bs = p.b_fn.samples_on(m);
    let phi = w.phi.samples_on(m);
    let psi = w.psi.samples_on(m);
    let samples = (0..m)
        .map(|k| {
            if w.is_real() {
                lam * (phi[k] + psi[k].conj()) / (I * a * w.sigma * bs[k])
            } else {
                (lam * phi[k] / bs[k] - lam.conj() * psi[k] / bs[k].conj()) / (I * a * w.sigma)
            }
        })
        .collect();
    PeriodicFunction::from_samples(samples)
}

/// [`q_function`] for the basic solution of `sv` on `branch`.
pub fn q_functions(p: &SecondOrderSpec, sv: &SpectralValue, branch: Branch, m: usize) -> Result<PeriodicFunction> {
    let w = basic_solution(&p.operator, sv, branch)?;
    q_function(p, &w, m)
}

/// `e^{ijt}/(iajB)` for the plus branch and `e^{ijt}/(ajB)` for the minus branch.
pub fn q_asymptotic(p: &SecondOrderSpec, j: i64, branch: Branch, m: usize) -> Result<PeriodicFunction> {
    if j == 0 {
        return Err(DcError::InvalidInput("the asymptotic form needs j ≠ 0".into()));
    }
    let a = p.a();
    let scale = match branch {
        Branch::Plus => I * a * j as f64,
        Branch::Minus => C64::new(a * j as f64, 0.0),
    };
    let bs = p.b_fn.samples_on(m);
    let ts = nodes(m);
    PeriodicFunction::from_samples((0..m).map(|k| C64::from_polar(1.0, j as f64 * ts[k]) / (scale * bs[k])).collect())
}

#[derive(Clone, Debug)]
pub struct SeriesTerm {
    pub sigma: C64,
    pub q: PeriodicFunction,
    pub coefficient: f64,
}

/// `u₀ + Σ u_j Re[r^{σ_j} q_j(t)]`.
#[derive(Clone, Debug)]
pub struct PSeries {
    pub u0: f64,
    pub terms: Vec<SeriesTerm>,
}

/// The series with coefficients `u_j` on the given basic solutions; every order must be positive.
pub fn p_series(p: &SecondOrderSpec, u0: f64, coefficients: &[(BasicSolution, f64)], m: usize) -> Result<PSeries> {
    let mut terms = Vec::new();
    for (w, u) in coefficients {
        if w.sigma.re <= 1e-12 {
            return Err(DcError::InvalidInput(format!(
                "coefficient at σ = {} of nonpositive order; constants belong to u₀",
                w.sigma
            )));
        }
        if *u != 0.0 {
            terms.push(SeriesTerm { sigma: w.sigma, q: q_function(p, w, m)?, coefficient: *u });
        }
    }
    Ok(PSeries { u0, terms })
}

impl PSeries {
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        if r == 0.0 {
            return self.u0;
        }
        let ls = r.ln();
        self.u0 + self.terms.iter().map(|x| x.coefficient * ((x.sigma * ls).exp() * x.q.eval(t)).re).sum::<f64>()
    }

    /// Samples on the grid, with `u₀` on `r = 0`.
    pub fn on_grid(&self, radii: &[f64], m: usize) -> CylinderFunction {
        let qs: Vec<Vec<C64>> = self.terms.iter().map(|x| x.q.samples_on(m)).collect();
        let mut u = CylinderFunction::zeros(radii.to_vec(), m);
        for (i, r) in radii.iter().enumerate() {
            let ls = r.ln();
            let row = u.row_mut(i);
            for (k, z) in row.iter_mut().enumerate() {
                let mut acc = self.u0;
                for (x, q) in self.terms.iter().zip(&qs) {
                    acc += x.coefficient * ((x.sigma * ls).exp() * q[k]).re;
                }
                *z = C64::new(acc, 0.0);
            }
        }
        u.origin = Some(vec![C64::new(self.u0, 0.0); m]);
        u
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RadialKind {
    /// `C₁ log r + C₂`.
    Log,
    /// `C₁ r^{exponent} + C₂` with `exponent = 2an`.
    Power { exponent: f64 },
}

/// `β = (λ/a)p(t) − in` with real zero-mean `p`; then `Ind B = n`.
#[derive(Clone, Debug, Serialize)]
pub struct RadialForm {
    pub n: i64,
    pub kind: RadialKind,
}

/// Detects the radial form of `β` on its sample grid.
pub fn radial_form(lambda: C64, beta: &PeriodicFunction) -> Option<RadialForm> {
    let tol = 1e-10 * (1.0 + beta.max_abs());
    let slope = lambda.im / lambda.re;
    let p_mean = beta.samples().iter().map(|z| z.re).sum::<f64>() / beta.len() as f64;
    if p_mean.abs() > tol {
        return None;
    }
    let shifted: Vec<f64> = beta.samples().iter().map(|z| z.im - slope * z.re).collect();
    let c = shifted[0];
    if shifted.iter().any(|x| (x - c).abs() > tol) {
        return None;
    }
    let n = (-c).round();
    if (-c - n).abs() > tol {
        return None;
    }
    let n = n as i64;
    let kind = if n == 0 { RadialKind::Log } else { RadialKind::Power { exponent: 2.0 * lambda.re * n as f64 } };
    Some(RadialForm { n, kind })
}

pub fn radial_solutions(p: &SecondOrderSpec) -> Option<RadialForm> {
    radial_form(p.lambda, &p.beta)
}

impl RadialForm {
    /// The nonconstant radial solution (`C₁ = 1`, `C₂ = 0`).
    pub fn u(&self, r: f64) -> f64 {
        match self.kind {
            RadialKind::Log => r.ln(),
            RadialKind::Power { exponent } => r.powf(exponent),
        }
    }

    /// Its `L`-potential: `iB` or `i·2an·r^{2an}B`.
    pub fn w(&self, p: &SecondOrderSpec, r: f64, t: f64) -> C64 {
        match self.kind {
            RadialKind::Log => I * p.b_at(t),
            RadialKind::Power { exponent } => I * exponent * r.powf(exponent) * p.b_at(t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HVerdict {
    Satisfied,
    Violated,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct HWitness {
    /// 1 or 2.
    pub condition: u8,
    pub sigma: C64,
    pub j: i64,
    /// The second value of an `𝓗₂` pair.
    pub partner: Option<(C64, i64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HReport {
    pub verdict: HVerdict,
    pub witness: Option<HWitness>,
    pub reason: String,
    /// Indices beyond this are settled by the asymptotic certificate.
    pub tail_from: i64,
}

/// Hypothesis `𝓗`: basic solutions of positive order have winding number `j > −k`
/// (`𝓗₁`, the form the maximum principle uses), and distinct spectral values have
/// distinct real parts (`𝓗₂`).
///
/// Indices past the window are certified with `Re σ_j ∈ a(j+ν) ± 2|γ/j|`.
pub fn hypothesis_h_check(p: &SecondOrderSpec, window: &SpectrumWindow) -> HReport {
    let k = p.k;
    let tol = |z: C64| 1e-8 * (1.0 + z.norm());
    let values = &window.values;
    for v in values {
        if v.sigma.re > tol(v.sigma) && v.j <= -k {
            return HReport {
                verdict: HVerdict::Violated,
                witness: Some(HWitness { condition: 1, sigma: v.sigma, j: v.j, partner: None }),
                reason: format!("σ = {} has positive order and winding {} ≤ −k = {}", v.sigma, v.j, -k),
                tail_from: window.j_max,
            };
        }
    }
    for (x, v) in values.iter().enumerate() {
        for u in &values[x + 1..] {
            let t = tol(v.sigma).max(tol(u.sigma));
            if (v.sigma.re - u.sigma.re).abs() <= t && (v.sigma - u.sigma).norm() > t {
                return HReport {
                    verdict: HVerdict::Violated,
                    witness: Some(HWitness { condition: 2, sigma: v.sigma, j: v.j, partner: Some((u.sigma, u.j)) }),
                    reason: format!("σ = {} and σ = {} share the real part", v.sigma, u.sigma),
                    tail_from: window.j_max,
                };
            }
        }
    }
    let indeterminate = |reason: String| HReport { verdict: HVerdict::Indeterminate, witness: None, reason, tail_from: window.j_max };
    if !window.is_complete() {
        let gaps: Vec<String> = window.gaps.iter().map(|g| g.j.to_string()).collect();
        return indeterminate(format!("window has gaps at j = {}", gaps.join(", ")));
    }
    let spec = &p.operator;
    let big_j = window.j_max.min(-window.j_min);
    let j0 = asymptotic_threshold(spec);
    if big_j < j0 || big_j < k.abs() + 1 {
        return indeterminate(format!("window |j| ≤ {big_j} does not reach the asymptotic region (J₀ = {j0}, |k| + 1 = {})", k.abs() + 1));
    }
    let (a, nu, gamma) = (spec.a, spec.nu, spec.gamma().abs());
    let half = |j: i64| 2.0 * gamma / j.abs() as f64;
    if 2.0 * half(big_j + 1) >= a {
        return indeterminate("tail intervals overlap; enlarge the window".into());
    }
    // Positive tail: Re σ ≥ a(j+ν) − 2|γ/j| > 0 and j > J ≥ |k| + 1 > −k.
    // Negative tail: Re σ < 0 imposes nothing on 𝓗₁.
    let reach = values.iter().map(|v| v.sigma.re.abs()).fold(0.0, f64::max) / a + 2.0;
    for jj in (big_j + 1)..=(big_j + 1 + reach.ceil() as i64) {
        for j in [jj, -jj] {
            let centre = a * (j as f64 + nu);
            if let Some(v) = values.iter().find(|v| (v.sigma.re - centre).abs() <= half(j) + tol(v.sigma)) {
                return indeterminate(format!("σ = {} is not separated from the tail interval at j = {j}", v.sigma));
            }
        }
    }
    HReport {
        verdict: HVerdict::Satisfied,
        witness: None,
        reason: format!("window |j| ≤ {big_j} checked; tail certified by the asymptotic intervals"),
        tail_from: big_j + 1,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KReport {
    #[serde(flatten)]
    pub report: SolveReport,
    /// `max |T(BF)(0,t)|` of the inner solve.
    pub t_origin: f64,
}

fn check_context(p: &SecondOrderSpec, ctx: &KernelContext) -> Result<()> {
    let s = &ctx.spec;
    let same = (s.a - p.operator.a).abs() <= 1e-14
        && (s.b - p.operator.b).abs() <= 1e-14
        && s.nu == 0.0
        && (s.epsilon - 1.0).abs() <= 1e-14
        && s.c.sup_distance(&p.c) <= 1e-12;
    if !same {
        return Err(DcError::InvalidInput("the kernel context does not belong to the operator ℒ of P".into()));
    }
    Ok(())
}

/// `𝕂F = Re[(λ/ia) ∫₀¹ T(BF)(sr,t)/B(t) ds/s]` with `T = T̂` (hat) or `T^{j₀±}` (modified).
struct KPlan<'a> {
    p: &'a SecondOrderSpec,
    plan: TPlan,
    s: Vec<f64>,
    b: Vec<C64>,
}

impl<'a> KPlan<'a> {
    fn new(p: &'a SecondOrderSpec, ctx: &KernelContext, radii: &[f64], m: usize, mode: KernelMode) -> Result<Self> {
        check_context(p, ctx)?;
        if let KernelMode::Plain = mode {
            return Err(DcError::InvalidInput("𝕂 is built on the hat or the modified kernels".into()));
        }
        Ok(Self {
            p,
            plan: TPlan::new(ctx, radii, m, mode)?,
            s: radii.iter().map(|r| r.ln()).collect(),
            b: p.b_fn.samples_on(m),
        })
    }

    fn apply(&self, f: &CylinderFunction) -> Result<(CylinderFunction, f64)> {
        let mut bf = f.clone();
        bf.origin = None;
        for (idx, z) in bf.values.iter_mut().enumerate() {
            *z = self.b[idx % f.m] * z.re;
        }
        let (v, tail) = self.plan.apply_with_tail(&bf)?;
        let t_origin = v.origin.as_ref().map(|o| o.iter().map(|z| z.norm()).fold(0.0, f64::max)).unwrap_or(f64::NAN);
        let (np, m) = (f.p(), f.m);
        let a = self.p.a();
        let mut out = CylinderFunction::zeros(f.radii.clone(), m);
        for k in 0..m {
            let col: Vec<C64> = (0..np).map(|i| v.get(i, k)).collect();
            let cum = cumulative_quintic(&self.s, &col);
            let factor = self.p.lambda / (I * a * self.b[k]);
            for i in 0..np {
                out.values[i * m + k] = C64::new((factor * (tail[k] + cum[i])).re, 0.0);
            }
        }
        // The s-integral over an empty interval.
        out.origin = Some(vec![C64::new(0.0, 0.0); m]);
        Ok((out, t_origin))
    }
}

/// `max |Pv − F|` over radial rows at least four cells from either end.
pub fn p_residual(p: &SecondOrderSpec, v: &CylinderFunction, f: &CylinderFunction) -> Result<f64> {
    let pv = apply_p(p, v)?;
    let mut worst: f64 = 0.0;
    for i in 4..v.p().saturating_sub(4) {
        for (x, y) in pv.row(i).iter().zip(f.row(i)) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(worst)
}

/// `𝕂F` on the grid of `F`; `F` real, taken as zero below the first radius.
pub fn solve_k(p: &SecondOrderSpec, ctx: &KernelContext, f: &CylinderFunction, mode: KernelMode, tol: f64) -> Result<KReport> {
    require_rows(f, 9)?;
    if f.values.iter().any(|z| z.im.abs() > 1e-12 * (1.0 + z.re.abs())) {
        return Err(DcError::InvalidInput("F must be real-valued".into()));
    }
    let plan = KPlan::new(p, ctx, &f.radii, f.m, mode)?;
    let (solution, t_origin) = plan.apply(f)?;
    let residual = p_residual(p, &solution, f)?;
    let report = SolveReport { solution, residual, iterations: 1, bound_check: f64::NAN, p: f64::NAN, flagged: !(residual <= tol) };
    Ok(KReport { report, t_origin })
}

pub type Coefficient = Box<dyn Fn(f64, f64) -> C64 + Send + Sync>;

/// `H(r,t,u,w) = u f₀ + w f₁ + w̄ f₂ + |u|^{1+α} g₁ + |w|^{1+α} g₂`.
pub struct HData {
    pub f0: Coefficient,
    pub f1: Coefficient,
    pub f2: Coefficient,
    pub g1: Coefficient,
    pub g2: Coefficient,
    pub alpha: f64,
}

impl HData {
    pub fn constant(f: [C64; 5], alpha: f64) -> Self {
        let c = |z: C64| -> Coefficient { Box::new(move |_, _| z) };
        Self { f0: c(f[0]), f1: c(f[1]), f2: c(f[2]), g1: c(f[3]), g2: c(f[4]), alpha }
    }

    pub fn eval(&self, r: f64, t: f64, u: f64, w: C64) -> C64 {
        let e = 1.0 + self.alpha;
        (self.f0)(r, t) * u
            + (self.f1)(r, t) * w
            + (self.f2)(r, t) * w.conj()
            + (self.g1)(r, t) * u.abs().powf(e)
            + (self.g2)(r, t) * w.norm().powf(e)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PSemilinearReport {
    #[serde(flatten)]
    pub report: SolveReport,
    pub changes: Vec<f64>,
    /// `(min, max)` of `m = v/u₀` over the nodes where `|u₀|` is at least 5% of its row maximum.
    pub similarity: (f64, f64),
}

#[derive(Clone, Copy, Debug)]
pub struct PSemilinearOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Allowed `max |Pu₀| / max |u₀|`.
    pub homogeneous_tol: f64,
}

impl Default for PSemilinearOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 30, homogeneous_tol: 1e-4 }
    }
}

fn rhs(h: &HData, eps: f64, v: &CylinderFunction, lv: &CylinderFunction) -> CylinderFunction {
    let ts = nodes(v.m);
    let mut out = CylinderFunction::zeros(v.radii.clone(), v.m);
    for (i, r) in v.radii.iter().enumerate() {
        for k in 0..v.m {
            let idx = i * v.m + k;
            out.values[idx] = C64::new(r.powf(eps) * h.eval(*r, ts[k], v.values[idx].re, lv.values[idx]).re, 0.0);
        }
    }
    out
}

/// Picard iteration `v ← u₀ + 𝕂(r^ε Re H(r,t,v,Lv))` for `Pv = r^ε Re H(r,t,v,Lv)`.
pub fn p_semilinear_solve(
    p: &SecondOrderSpec,
    ctx: &KernelContext,
    h: &HData,
    eps: f64,
    u0: &CylinderFunction,
    mode: KernelMode,
    opts: PSemilinearOptions,
) -> Result<PSemilinearReport> {
    require_rows(u0, 9)?;
    if !(eps > 0.0) {
        return Err(DcError::InvalidInput(format!("ε must be positive, got {eps}")));
    }
    if !(h.alpha > 0.0) {
        return Err(DcError::InvalidInput(format!("α must be positive, got {}", h.alpha)));
    }
    let scale = u0.max_abs();
    let zero = CylinderFunction::zeros(u0.radii.clone(), u0.m);
    let hom = p_residual(p, u0, &zero)?;
    if hom > opts.homogeneous_tol * scale.max(1e-300) {
        return Err(DcError::InvalidInput(format!("u₀ does not solve Pu = 0: residual {hom:.3e}")));
    }
    if let Some(o) = &u0.origin {
        if o.iter().any(|z| z.norm() > opts.homogeneous_tol * scale) {
            return Err(DcError::InvalidInput("u₀ must vanish on S₀".into()));
        }
    }
    let plan = KPlan::new(p, ctx, &u0.radii, u0.m, mode)?;
    let mut base = u0.clone();
    base.origin = None;
    let mut v = base.clone();
    let mut changes = Vec::new();
    let mut rising = 0;
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let f = rhs(h, eps, &v, &apply_l(p, &v));
        let (kf, _) = plan.apply(&f)?;
        let mut next = base.zip(&kf, |x, y| x + y);
        next.origin = None;
        let change = next.zip(&v, |x, y| x - y).max_abs();
        if let Some(last) = changes.last() {
            rising = if change >= *last { rising + 1 } else { 0 };
        }
        changes.push(change);
        v = next;
        if change <= opts.tol * (1.0 + v.max_abs()) {
            converged = true;
            break;
        }
        if rising >= 3 {
            let r_max = u0.radii.last().copied().unwrap_or(f64::NAN);
            return Err(DcError::Numeric(format!(
                "Picard iteration does not contract (changes {:?}); try R = {:.3e}",
                &changes[changes.len() - 4..],
                r_max / 2.0
            )));
        }
    }
    if !converged {
        return Err(DcError::Numeric(format!(
            "Picard iteration did not converge in {} steps (last change {:.3e})",
            opts.max_iterations,
            changes.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let f = rhs(h, eps, &v, &apply_l(p, &v));
    let residual = p_residual(p, &v, &f)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..v.p() {
        let row_max = u0.row(i).iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        for k in 0..v.m {
            let x = u0.get(i, k).re;
            if x.abs() >= 0.05 * row_max && x != 0.0 {
                let ratio = v.get(i, k).re / x;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
    }
    v.origin = Some(vec![C64::new(0.0, 0.0); v.m]);
    let report = SolveReport {
        solution: v,
        residual,
        iterations: changes.len(),
        bound_check: f64::NAN,
        p: f64::NAN,
        flagged: !(residual <= 1e-3),
    };
    Ok(PSemilinearReport { report, changes, similarity: (lo, hi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::log_radii;
    use crate::kernels::DEFAULT_ETA;
    use crate::oracle::RadialPair;
    use crate::spectrum::find_spectral_values;

    fn constant(z: C64) -> PeriodicFunction {
        PeriodicFunction::constant(3, z).unwrap()
    }

    fn interior_max(f: &CylinderFunction, skip: usize) -> f64 {
        (skip..f.p() - skip).flat_map(|i| f.row(i).iter().map(|z| z.norm())).fold(0.0, f64::max)
    }

    #[test]
    fn build_examples() {
        let p = build_p(C64::new(1.0, 0.5), &constant(C64::new(0.0, 0.0))).unwrap();
        assert_eq!(p.k, 0);
        assert!(p.c.max_abs() == 0.0);
        assert!((p.b_fn.sub(&constant(C64::new(1.0, 0.0)))).max_abs() < 1e-15);

        let p = build_p(C64::new(1.0, 0.5), &constant(-I)).unwrap();
        assert_eq!(p.k, -1);
        assert_eq!(winding_number(&p.b_fn).unwrap(), 1);
        assert!((p.b_at(0.7) - C64::from_polar(1.0, 0.7)).norm() < 1e-13);
        assert!(p.lb_residual < 1e-10);

        let bad = build_p(C64::new(1.0, 0.0), &constant(C64::new(0.0, 0.3)));
        assert!(matches!(bad, Err(DcError::InvalidInput(_))));
    }

    #[test]
    fn nonconstant_beta_keeps_the_invariants() {
        let beta = PeriodicFunction::from_modes(9, &[(0, 2.0 * I), (1, C64::new(0.3, 0.1)), (-2, C64::new(0.0, 0.2))]).unwrap();
        let p = build_p(C64::new(1.2, -0.4), &beta).unwrap();
        assert_eq!(p.k, 2);
        assert_eq!(winding_number(&p.b_fn).unwrap(), -2);
        assert!(p.lb_residual < 1e-10);
    }

    #[test]
    fn radial_pairs_solve_both_equations() {
        let radii = log_radii(0.05, 1.0, 129);
        for k in 0..3 {
            let lam = C64::new(1.0, 0.5);
            let oracle = RadialPair::new(lam, k).unwrap();
            let p = build_p(lam, &constant(-I * k as f64)).unwrap();
            let u = CylinderFunction::from_fn(radii.clone(), 33, |r, _| C64::new(oracle.u(r), 0.0));
            let w = CylinderFunction::from_fn(radii.clone(), 33, |r, t| oracle.w(r, t));
            let pu = apply_p(&p, &u).unwrap();
            let lw = p.operator.apply(&w);
            assert!(interior_max(&pu, 4) < 1e-6, "k = {k}: Pu = {}", interior_max(&pu, 4));
            assert!(interior_max(&lw, 4) < 1e-6, "k = {k}: ℒw = {}", interior_max(&lw, 4));
            let lp = l_potential(&p, &u).unwrap();
            let err = lp.zip(&w, |x, y| x - y);
            assert!(interior_max(&err, 0) < 1e-6, "k = {k}: w error {}", interior_max(&err, 0));
            let form = radial_solutions(&p).unwrap();
            assert_eq!(form.n, k);
            assert!((form.w(&p, 0.3, 1.1) - oracle.w(0.3, 1.1)).norm() < 1e-12);
        }
    }

    #[test]
    fn radial_form_detection() {
        assert_eq!(radial_form(C64::new(1.0, 0.0), &constant(C64::new(0.0, 0.0))).unwrap().kind, RadialKind::Log);
        let f = radial_form(C64::new(2.0, 1.0), &constant(-I)).unwrap();
        assert_eq!(f.kind, RadialKind::Power { exponent: 4.0 });
        assert!(radial_form(C64::new(1.0, 0.0), &constant(C64::new(0.0, 0.3))).is_none());
        // p = cos t with λ = 1 + i: β = (1 + i)cos t − 2i.
        let beta = PeriodicFunction::from_fn(9, |t| C64::new(1.0, 1.0) * t.cos() - 2.0 * I).unwrap();
        assert_eq!(radial_form(C64::new(1.0, 1.0), &beta).unwrap().n, 2);
    }

    #[test]
    fn reconstruction_round_trip() {
        let lam = C64::new(1.0, 0.5);
        let beta = PeriodicFunction::from_modes(5, &[(1, C64::new(0.2, 0.1)), (-1, C64::new(0.1, 0.0))]).unwrap();
        let p = build_p(lam, &beta).unwrap();
        let radii = log_radii(0.1, 1.0, 97);
        let m = 33;
        let u = CylinderFunction::from_fn(radii.clone(), m, |r, t| {
            C64::new(r * r * (1.0 + 0.3 * t.cos()) + r.powf(1.5) * (2.0 * t).sin(), 0.0)
        });
        let w = l_potential(&p, &u).unwrap();
        let ts = nodes(m);
        let rec = reconstruct_u(&p, &w, radii[10], ts[3], 1e-6).unwrap();
        let shift = u.get(10, 3).re;
        let err = rec.u.zip(&u, |x, y| x - y + shift);
        assert!(err.max_abs() < 1e-6, "round trip {}", err.max_abs());
        let w2 = l_potential(&p, &rec.u).unwrap();
        let err = w2.zip(&w, |x, y| x - y);
        assert!(interior_max(&err, 0) < 1e-6);
    }

    #[test]
    fn reconstruction_of_the_radial_potential() {
        let lam = C64::new(1.0, 0.0);
        let p = build_p(lam, &constant(-I)).unwrap();
        let radii = log_radii(0.1, 1.0, 65);
        let w = CylinderFunction::from_fn(radii.clone(), 17, |r, t| 2.0 * I * r * r * C64::from_polar(1.0, t));
        let rec = reconstruct_u(&p, &w, 1.0, 0.0, 1e-8).unwrap();
        let exact = CylinderFunction::from_fn(radii, 17, |r, _| C64::new(r * r - 1.0, 0.0));
        assert!(rec.u.zip(&exact, |x, y| x - y).max_abs() < 1e-8);
    }

    #[test]
    fn non_potential_is_rejected() {
        let p = build_p(C64::new(1.0, 0.0), &constant(C64::new(0.0, 0.0))).unwrap();
        let radii = log_radii(0.1, 1.0, 33);
        let w = CylinderFunction::from_fn(radii, 9, |_, _| C64::new(1.0, 0.0));
        assert!(matches!(reconstruct_u(&p, &w, 1.0, 0.0, 1e-6), Err(DcError::Numeric(_))));
    }

    #[test]
    fn decoupled_q_functions() {
        let a = 1.5;
        let p = build_p(C64::new(a, 0.0), &constant(C64::new(0.0, 0.0))).unwrap();
        let win = find_spectral_values(&p.operator, 1, 3, 1e-10).unwrap();
        for sv in &win.values {
            let w = basic_solution(&p.operator, sv, sv.branch).unwrap();
            let q = q_function(&p, &w, 17).unwrap();
            // With f = z e^{ijt}: q = z e^{ijt}/(iaj).
            let z = w.phi.coeff(sv.j) + w.psi.coeff(-sv.j).conj();
            let expect = PeriodicFunction::from_modes(17, &[(sv.j, z / (I * a * sv.j as f64))]).unwrap();
            assert!(q.sup_distance(&expect) < 1e-12);
        }
    }

    #[test]
    fn q_functions_approach_their_asymptotics() {
        let lam = C64::new(1.0, 0.7);
        let beta = PeriodicFunction::from_modes(5, &[(1, C64::new(0.3, 0.0)), (-1, C64::new(0.2, 0.1))]).unwrap();
        let p = build_p(lam, &beta).unwrap();
        let m = 257;
        let gap = |j: i64| {
            let win = find_spectral_values(&p.operator, j, j, 1e-10).unwrap();
            let sv = win.get(j, Branch::Plus).unwrap();
            let w = basic_solution(&p.operator, sv, Branch::Plus).unwrap();
            let q = q_function(&p, &w, m).unwrap().scale(1.0 / w.phi.coeff(j));
            q.sup_distance(&q_asymptotic(&p, j, Branch::Plus, m).unwrap())
        };
        let (g1, g2) = (gap(16), gap(32));
        assert!(g1 < 5e-3 && g2 < g1 / 3.0, "gaps {g1:.3e} {g2:.3e}");
    }

    #[test]
    fn hypothesis_examples() {
        let zero = constant(C64::new(0.0, 0.0));
        let p = build_p(C64::new(1.0, 0.0), &zero).unwrap();
        let win = find_spectral_values(&p.operator, -8, 8, 1e-10).unwrap();
        assert_eq!(hypothesis_h_check(&p, &win).verdict, HVerdict::Satisfied);

        // Characters of c ≡ 0 are (λj, j) on both branches, so b ≠ 0 is harmless.
        let p = build_p(C64::new(1.0, 1.0), &zero).unwrap();
        let mut win = find_spectral_values(&p.operator, -8, 8, 1e-10).unwrap();
        assert_eq!(hypothesis_h_check(&p, &win).verdict, HVerdict::Satisfied);
        // A symmetric pair σ, σ̄ breaks 𝓗₂.
        let mut twin = win.get(2, Branch::Minus).unwrap().clone();
        twin.sigma = twin.sigma.conj();
        win.values.retain(|v| !(v.j == 2 && v.branch == Branch::Minus));
        win.values.push(twin);
        let rep = hypothesis_h_check(&p, &win);
        assert_eq!(rep.verdict, HVerdict::Violated);
        let w = rep.witness.unwrap();
        assert_eq!(w.condition, 2);
        assert!((w.sigma - w.partner.unwrap().0.conj()).norm() < 1e-12);

        let p = build_p(C64::new(1.0, 0.0), &constant(-I)).unwrap();
        let win = find_spectral_values(&p.operator, -8, 8, 1e-10).unwrap();
        let rep = hypothesis_h_check(&p, &win);
        assert_eq!(rep.verdict, HVerdict::Violated);
        let w = rep.witness.unwrap();
        assert_eq!((w.condition, w.j), (1, 1));
        assert!((w.sigma - 2.0).norm() < 1e-8);

        let narrow = find_spectral_values(&p.operator, -1, 1, 1e-10).unwrap();
        let zero_p = build_p(C64::new(1.0, 0.0), &zero).unwrap();
        let narrow0 = find_spectral_values(&zero_p.operator, 0, 0, 1e-10).unwrap();
        assert_eq!(hypothesis_h_check(&zero_p, &narrow0).verdict, HVerdict::Indeterminate);
        assert_eq!(hypothesis_h_check(&p, &narrow).verdict, HVerdict::Violated);
    }

    fn bump(s: f64, lo: f64, hi: f64) -> [f64; 3] {
        // sin⁸ profile in s and its first two s-derivatives.
        if s <= lo || s >= hi {
            return [0.0; 3];
        }
        let l = hi - lo;
        let x = PI * (s - lo) / l;
        let (sn, cs) = x.sin_cos();
        let d = PI / l;
        [
            sn.powi(8),
            8.0 * sn.powi(7) * cs * d,
            (56.0 * sn.powi(6) * cs * cs - 8.0 * sn.powi(8)) * d * d,
        ]
    }

    #[test]
    fn k_operator_inverts_p_on_compact_support() {
        let lam = C64::new(1.0, 0.0);
        let beta = PeriodicFunction::from_modes(3, &[(1, C64::new(0.1, 0.0)), (-1, C64::new(0.1, 0.0))]).unwrap();
        let p = build_p(lam, &beta).unwrap();
        let ctx = KernelContext::new(&p.operator, 32, DEFAULT_ETA).unwrap();
        let radii = log_radii(0.005, 1.0, 128);
        let m = 65;
        let (lo, hi) = (0.01f64.ln(), 0.9f64.ln());
        let l2 = lam.norm_sqr();
        let b = lam.im;
        let exact = |r: f64, t: f64| {
            let [g, gs, gss] = bump(r.ln(), lo, hi);
            let (h, ht, htt) = (1.0 + 0.5 * t.cos() + 0.3 * (2.0 * t).sin(), -0.5 * t.sin() + 0.6 * (2.0 * t).cos(), -0.5 * t.cos() - 1.2 * (2.0 * t).sin());
            let be = beta.eval(t);
            let pu = l2 * g * htt - 2.0 * b * gs * ht + gss * h + l2 * 2.0 * be.re * g * ht
                - (I * (lam.conj() * be - lam * be.conj()) * gs * h).re;
            (g * h, pu)
        };
        let u = CylinderFunction::from_fn(radii.clone(), m, |r, t| C64::new(exact(r, t).0, 0.0));
        let f = CylinderFunction::from_fn(radii.clone(), m, |r, t| C64::new(exact(r, t).1, 0.0));
        let rep = solve_k(&p, &ctx, &f, KernelMode::Hat, 1e-3).unwrap();
        assert!(!rep.report.flagged, "residual {}", rep.report.residual);
        assert_eq!(rep.t_origin, 0.0);
        let err = rep.report.solution.zip(&u, |x, y| x - y).max_abs();
        assert!(err < 1e-5, "𝕂F − u = {err:.3e}");
        assert!(rep.report.solution.origin.as_ref().unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn semilinear_similarity_with_the_radial_solution() {
        // β = −i, λ = 1: u₀ = r² solves Pu = 0 and vanishes on S₀.
        let p = build_p(C64::new(1.0, 0.0), &constant(-I)).unwrap();
        let ctx = KernelContext::new(&p.operator, 24, DEFAULT_ETA).unwrap();
        let radii = log_radii(1e-4, 0.2, 96);
        let m = 33;
        let mut u0 = CylinderFunction::from_fn(radii, m, |r, _| C64::new(r * r, 0.0));
        u0.origin = Some(vec![C64::new(0.0, 0.0); m]);
        let h = HData::constant([C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)], 0.5);
        let rep = p_semilinear_solve(&p, &ctx, &h, 0.5, &u0, KernelMode::Hat, PSemilinearOptions::default()).unwrap();
        assert!(rep.report.iterations <= 30);
        assert!(rep.report.residual < 1e-3, "residual {}", rep.report.residual);
        let (lo, hi) = rep.similarity;
        assert!(0.1 <= lo && lo <= hi && hi <= 10.0, "similarity ({lo}, {hi})");

        let zero = HData::constant([C64::new(0.0, 0.0); 5], 0.5);
        let rep = p_semilinear_solve(&p, &ctx, &zero, 0.5, &u0, KernelMode::Hat, PSemilinearOptions::default()).unwrap();
        assert!(rep.report.solution.zip(&u0, |x, y| x - y).max_abs() < 1e-14);
    }
}
