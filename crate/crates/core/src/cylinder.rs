//! Solutions of `ℒu = 0` and `ℒu = F` on the cylinder: Laurent series, the
//! Cauchy integral over boundary circles, the operator `T` with its variants
//! `T̂` and `T^j`, and the semilinear fixed point.
//!
//! `T` is evaluated term by term. With `Ω₁F + conj(Ω₂)F̄ = ±Σ w_j(z) Re(w*_j(ζ)F(ζ))`
//! the double integral splits into angular moments `P_j(ρ) = ∫(X_j F + Z_j F̄)dθ`
//! and one radial integral per term, `∫ Re(ρ^{μ_j} P_j) dρ/ρ`, taken from `r` to `R`
//! for the `r < ρ` sum and from `0` to `r` for the `r > ρ` sum.

use rayon::prelude::*;
use serde::Serialize;

use crate::basic::BasicSolution;
use crate::error::{DcError, Result};
use crate::grid::{gregory_weights, CylinderFunction};
use crate::kernels::{kernel_decomposed, kernel_omega, KernelContext, KernelMode, IMAGINARY_TOL};
use crate::periodic::{C64, I};
use crate::spectrum::Branch;

use std::f64::consts::PI;

/// Coefficients below this are treated as absent when evaluating at `r = 0`.
const COEFFICIENT_FLOOR: f64 = 1e-12;

fn grid_row(u: &CylinderFunction, r: f64) -> Result<usize> {
    u.radii
        .iter()
        .position(|x| (x - r).abs() <= 1e-12 * r.max(1.0))
        .ok_or_else(|| DcError::InvalidInput(format!("R₀ = {r} is not a grid radius")))
}

#[derive(Clone, Debug, Serialize)]
pub struct LaurentCoefficient {
    pub j: i64,
    pub branch: Branch,
    pub sigma: C64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LaurentExpansion {
    pub coefficients: Vec<LaurentCoefficient>,
    pub r0: f64,
    pub order: i64,
    /// `max |a_j^±| R₀^{Re σ} / (C_j max|u(R₀,·)|)` with `C_j = sup(|X| + |Z|)`; at most 1.
    pub bound_ratio: f64,
    #[serde(skip)]
    solutions: Vec<BasicSolution>,
}

impl LaurentExpansion {
    pub fn get(&self, j: i64, branch: Branch) -> Option<f64> {
        self.coefficients.iter().find(|c| c.j == j && c.branch == branch).map(|c| c.value)
    }
}

/// `a_j^± = −(1/2π) Re ∫ w*_{−j}(R₀,θ) u(R₀,θ) i dθ` for `|j| ≤ order`, trapezoid rule on the grid row at `R₀`.
pub fn laurent_coefficients(ctx: &KernelContext, u: &CylinderFunction, r0: f64, order: i64) -> Result<LaurentExpansion> {
    u.validate()?;
    if order > ctx.order || order < 0 {
        return Err(DcError::InvalidInput(format!("order {order} outside the kernel window 0..={}", ctx.order)));
    }
    let row = u.row(grid_row(u, r0)?);
    let umax = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let m = u.m;
    let mut coefficients = Vec::new();
    let mut solutions = Vec::new();
    let mut bound_ratio: f64 = 0.0;
    for term in ctx.terms.iter().filter(|x| x.j.abs() <= order) {
        let ws = term.w_star.row(r0, m);
        let s: C64 = ws.iter().zip(row).map(|(a, b)| I * a * b).sum();
        let value = -s.re / m as f64;
        let cj = term
            .w_star
            .phi
            .samples_on(m)
            .iter()
            .zip(term.w_star.psi.samples_on(m))
            .map(|(x, z)| x.norm() + z.norm())
            .fold(0.0, f64::max);
        if umax > 0.0 && cj > 0.0 {
            bound_ratio = bound_ratio.max(value.abs() * r0.powf(term.sigma.re) / (cj * umax));
        }
        coefficients.push(LaurentCoefficient { j: term.j, branch: term.branch, sigma: term.sigma, value });
        solutions.push(term.w.clone());
    }
    Ok(LaurentExpansion { coefficients, r0, order, bound_ratio, solutions })
}

#[derive(Clone, Debug, Serialize)]
pub struct LaurentCheck {
    pub expansion: LaurentExpansion,
    /// `max |a_j^±(R₀) − a_j^±(R₁)|`.
    pub dependence: f64,
    /// The data is not a solution within `tol`.
    pub warning: bool,
}

/// Coefficients at `r0`, compared against those at `r1`.
pub fn laurent_check(ctx: &KernelContext, u: &CylinderFunction, r0: f64, r1: f64, order: i64, tol: f64) -> Result<LaurentCheck> {
    let e0 = laurent_coefficients(ctx, u, r0, order)?;
    let e1 = laurent_coefficients(ctx, u, r1, order)?;
    let dependence = e0
        .coefficients
        .iter()
        .zip(&e1.coefficients)
        .map(|(a, b)| (a.value - b.value).abs())
        .fold(0.0, f64::max);
    Ok(LaurentCheck { expansion: e0, dependence, warning: dependence > tol })
}

/// `Σ a_j^± w_j^±(r,t)`; with `bounded` only the terms with `Re σ ≥ 0` are summed.
pub fn laurent_evaluate(expansion: &LaurentExpansion, r: f64, t: f64, bounded: bool) -> Result<C64> {
    if !(r >= 0.0) {
        return Err(DcError::InvalidInput(format!("r must be ≥ 0, got {r}")));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (c, w) in expansion.coefficients.iter().zip(&expansion.solutions) {
        if bounded && c.sigma.re < -IMAGINARY_TOL {
            continue;
        }
        if r == 0.0 {
            if c.value.abs() <= COEFFICIENT_FLOOR {
                continue;
            }
            if c.sigma.norm() <= IMAGINARY_TOL {
                let (p, q) = w.components_at(t);
                acc += (p + q.conj()) * c.value;
            } else if c.sigma.re <= IMAGINARY_TOL {
                return Err(DcError::InvalidInput(format!(
                    "term ({}, {}) with σ = {} has a pole or no limit at r = 0",
                    c.j,
                    c.branch.sign(),
                    c.sigma
                )));
            }
            continue;
        }
        acc += w.eval(r, t) * c.value;
    }
    Ok(acc)
}

/// Samples of `u` at the nodes `2πk/m` of the circle `r = radius`.
#[derive(Clone, Debug)]
pub struct CircleData {
    pub radius: f64,
    pub values: Vec<C64>,
}

impl CircleData {
    pub fn from_fn(radius: f64, m: usize, f: impl Fn(f64, f64) -> C64) -> Self {
        let values = crate::periodic::nodes(m).into_iter().map(|t| f(radius, t)).collect();
        Self { radius, values }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CauchyValue {
    pub value: C64,
    /// The target is close enough to a boundary circle for the trapezoid rule to lose accuracy.
    pub near_boundary: bool,
}

/// `−(1/2π)∮_{∂₀U} Ω₁u dζ/ζ + conj(Ω₂)ū dζ̄/ζ̄` over the outer circle and, if given, the inner one.
///
/// On `ρ = const`, `dζ/ζ = i dθ`, so each circle contributes `∫ (iΩ₁u + conj(iΩ₂u)) dθ`,
/// with the inner circle traversed clockwise. Without an inner circle the domain is
/// `A(0, R)` and `r = 0` is admitted.
pub fn cauchy_integral(ctx: &KernelContext, outer: &CircleData, inner: Option<&CircleData>, r: f64, t: f64) -> Result<CauchyValue> {
    let r_in = inner.map(|c| c.radius).unwrap_or(0.0);
    if !(r >= r_in && r < outer.radius) || (inner.is_some() && r == r_in) {
        return Err(DcError::InvalidInput(format!("target r = {r} is not inside the domain")));
    }
    let mut near = false;
    let mut circle = |c: &CircleData| -> Result<C64> {
        let m = c.values.len();
        if m < 8 {
            return Err(DcError::InvalidInput("boundary circles need at least 8 nodes".into()));
        }
        if r > 0.0 {
            let d = (r / c.radius).ln().abs();
            near |= d < ctx.eta || (-(m as f64) * ctx.spec.a * d).exp() > 1e-10;
        }
        let nodes = crate::periodic::nodes(m);
        let parts: Vec<C64> = nodes
            .par_iter()
            .zip(&c.values)
            .map(|(th, u)| -> Result<C64> {
                let k = if r == 0.0 { kernel_omega(ctx, r, t, c.radius, *th)? } else { kernel_decomposed(ctx, r, t, c.radius, *th)? };
                Ok(I * k.omega1 * u + (I * k.omega2 * u).conj())
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().sum::<C64>() * (2.0 * PI / m as f64))
    };
    let mut total = circle(outer)?;
    if let Some(c) = inner {
        total -= circle(c)?;
    }
    Ok(CauchyValue { value: -total / (2.0 * PI), near_boundary: near })
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Nodes of the local interpolant of the angular moments.
const STENCIL: usize = 6;

/// `∫ e^{μ(s − s_ref)} P(s) ds` over `[s_i, s_{i+1}]` with `P` the quintic through six neighbouring nodes.
fn cell_integral(s: &[f64], p: &[C64], i: usize, mu: C64, s_ref: f64, gl: &(Vec<f64>, Vec<f64>)) -> C64 {
    let n = s.len();
    let start = if n < STENCIL { 0 } else { i.saturating_sub(STENCIL / 2 - 1).min(n - STENCIL) };
    let idx: Vec<usize> = (start..(start + STENCIL).min(n)).collect();
    let (a, b) = (s[i], s[i + 1]);
    let h = b - a;
    let mut acc = C64::new(0.0, 0.0);
    for (xq, wq) in gl.0.iter().zip(&gl.1) {
        let x = a + h * xq;
        let mut val = C64::new(0.0, 0.0);
        for &k in &idx {
            let mut l = 1.0;
            for &q in &idx {
                if q != k {
                    l *= (x - s[q]) / (s[k] - s[q]);
                }
            }
            val += p[k] * l;
        }
        acc += (mu * (x - s_ref)).exp() * val * *wq;
    }
    acc * h
}

/// `G_i = ∫_{s_0}^{s_i} g ds` with the quintic cell rule.
pub(crate) fn cumulative_quintic(s: &[f64], g: &[C64]) -> Vec<C64> {
    let gl = gauss_legendre(8);
    let mut out = vec![C64::new(0.0, 0.0); g.len()];
    for i in 1..g.len() {
        out[i] = out[i - 1] + cell_integral(s, g, i - 1, C64::new(0.0, 0.0), 0.0, &gl);
    }
    out
}

struct PlanTerm {
    sigma: C64,
    mu: C64,
    inner: bool,
    zero: bool,
    x: Vec<C64>,
    z: Vec<C64>,
    phi: Vec<C64>,
    psi: Vec<C64>,
}

/// `T`, `T̂` or `T^j` on a fixed grid, ready to be applied repeatedly.
pub struct TPlan {
    radii: Vec<f64>,
    s: Vec<f64>,
    m: usize,
    terms: Vec<PlanTerm>,
    gl: (Vec<f64>, Vec<f64>),
    origin_defined: bool,
}

impl TPlan {
    pub fn new(ctx: &KernelContext, radii: &[f64], m: usize, mode: KernelMode) -> Result<Self> {
        if radii.len() < 4 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
            return Err(DcError::InvalidInput("T needs at least four positive increasing radii".into()));
        }
        if ctx.has_imaginary_exponents() && mode != KernelMode::Hat {
            let nonzero = ctx.terms.iter().any(|x| x.is_imaginary() && x.sigma.norm() > IMAGINARY_TOL);
            if nonzero {
                return Err(DcError::InvalidInput(
                    "spectral values in iℝ* make the plain kernels unbounded at S₀; use the hat mode".into(),
                ));
            }
        }
        let thr = ctx.split_level(mode)?;
        let mut origin_defined = true;
        let terms = ctx
            .terms
            .iter()
            .map(|term| {
                let inner = ctx.is_inner(term, mode, thr);
                if inner && term.sigma.re < -IMAGINARY_TOL {
                    origin_defined = false;
                }
                PlanTerm {
                    sigma: term.sigma,
                    mu: term.w_star.sigma,
                    inner,
                    zero: term.sigma.norm() <= IMAGINARY_TOL,
                    x: term.w_star.phi.samples_on(m),
                    z: term.w_star.psi.samples_on(m),
                    phi: term.w.phi.samples_on(m),
                    psi: term.w.psi.samples_on(m),
                }
            })
            .collect();
        Ok(Self {
            radii: radii.to_vec(),
            s: radii.iter().map(|r| r.ln()).collect(),
            m,
            terms,
            gl: gauss_legendre(16),
            origin_defined,
        })
    }

    /// `TF` on the plan grid; `F` is taken as zero below the first radius.
    pub fn apply(&self, f: &CylinderFunction) -> Result<CylinderFunction> {
        self.check_grid(f)?;
        let weights = self.weights(f);
        Ok(self.assemble(&weights))
    }

    /// `TF` together with `∫_{−∞}^{log r₀} TF ds` at the angular nodes, `r₀` the first radius.
    ///
    /// Below `r₀` only the `r < ρ` terms survive and each is `c(r₀)(r/r₀)^σ`, so the
    /// tail is `Σ c(r₀)/σ φ + conj(c(r₀)/σ ψ)`; it diverges unless those terms have `Re σ > 0`.
    pub fn apply_with_tail(&self, f: &CylinderFunction) -> Result<(CylinderFunction, Vec<C64>)> {
        self.check_grid(f)?;
        let weights = self.weights(f);
        let scale = weights.iter().flat_map(|(c, _)| c.iter()).map(|z| z.norm()).fold(0.0, f64::max);
        let mut tail = vec![C64::new(0.0, 0.0); self.m];
        for (term, (c, _)) in self.terms.iter().zip(&weights) {
            if !term.inner || c[0].norm() <= 1e-14 * scale {
                continue;
            }
            if term.sigma.re <= IMAGINARY_TOL {
                return Err(DcError::Numeric(format!(
                    "the s-integral diverges at S₀: the r < ρ term at σ = {} has Re σ ≤ 0",
                    term.sigma
                )));
            }
            let q = c[0] / term.sigma;
            for k in 0..self.m {
                tail[k] += q * term.phi[k] + (q * term.psi[k]).conj();
            }
        }
        Ok((self.assemble(&weights), tail))
    }

    fn check_grid(&self, f: &CylinderFunction) -> Result<()> {
        if f.radii != self.radii || f.m != self.m {
            return Err(DcError::InvalidInput("F must live on the plan grid".into()));
        }
        Ok(())
    }

    /// Per term: the complex radial weights `c_i` with `TF += c_i φ + conj(c_i ψ)`, and the origin weight.
    fn weights(&self, f: &CylinderFunction) -> Vec<(Vec<C64>, C64)> {
        let (p, m) = (self.radii.len(), self.m);
        let dth = 2.0 * PI / m as f64;
        self.terms
            .par_iter()
            .map(|term| {
                let moments: Vec<C64> = (0..p)
                    .map(|i| {
                        let row = f.row(i);
                        (0..m).map(|k| term.x[k] * row[k] + term.z[k] * row[k].conj()).sum::<C64>() * dth
                    })
                    .collect();
                let mut e = vec![C64::new(0.0, 0.0); p];
                if term.inner {
                    for i in (0..p - 1).rev() {
                        let h = self.s[i + 1] - self.s[i];
                        e[i] = cell_integral(&self.s, &moments, i, term.mu, self.s[i], &self.gl)
                            + (term.mu * h).exp() * e[i + 1];
                    }
                } else {
                    for i in 1..p {
                        let h = self.s[i] - self.s[i - 1];
                        e[i] = cell_integral(&self.s, &moments, i - 1, term.mu, self.s[i], &self.gl)
                            + (-term.mu * h).exp() * e[i - 1];
                    }
                }
                // r^σ Re(r^μ E) = ½(r^{σ+μ}E + r^{σ+μ̄}Ē), free of overflow for μ ≈ −σ.
                let sign = if term.inner { -1.0 } else { 1.0 } / (2.0 * PI);
                let c: Vec<C64> = (0..p)
                    .map(|i| {
                        let s = self.s[i];
                        let v = ((term.sigma + term.mu) * s).exp() * e[i]
                            + ((term.sigma + term.mu.conj()) * s).exp() * e[i].conj();
                        v * 0.5 * sign
                    })
                    .collect();
                // At r = 0 only the σ = 0 terms of the r < ρ sum survive, with the full integral.
                let origin = if term.inner && term.zero {
                    let v = (term.mu * self.s[0]).exp() * e[0];
                    C64::new(v.re * sign, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                (c, origin)
            })
            .collect()
    }

    fn assemble(&self, weights: &[(Vec<C64>, C64)]) -> CylinderFunction {
        let (p, m) = (self.radii.len(), self.m);
        let mut out = CylinderFunction::zeros(self.radii.clone(), m);
        for (term, (c, _)) in self.terms.iter().zip(weights) {
            for i in 0..p {
                let ci = c[i];
                if ci == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = out.row_mut(i);
                for k in 0..m {
                    row[k] += ci * term.phi[k] + (ci * term.psi[k]).conj();
                }
            }
        }
        if self.origin_defined {
            let mut origin = vec![C64::new(0.0, 0.0); m];
            for (term, (_, o)) in self.terms.iter().zip(weights) {
                if *o != C64::new(0.0, 0.0) {
                    for k in 0..m {
                        origin[k] += term.phi[k] * o + (term.psi[k] * o).conj();
                    }
                }
            }
            out.origin = Some(origin);
        }
        out
    }
}

/// `‖F‖_{p,a} = (∬ |F/r^a|^p r^{2a−1} dr dt)^{1/p}` by the trapezoid rule in `log r`.
///
/// The radii must be equispaced in `log r`.
pub fn weighted_norm(f: &CylinderFunction, a: f64, p: f64) -> Result<f64> {
    f.validate()?;
    let n = f.p();
    if n < 2 {
        return Err(DcError::InvalidInput("weighted norm needs at least two radii".into()));
    }
    let h = (f.radii[n - 1].ln() - f.radii[0].ln()) / (n - 1) as f64;
    let w = gregory_weights(n, h);
    let dth = 2.0 * PI / f.m as f64;
    let mut acc = 0.0;
    for (i, r) in f.radii.iter().enumerate() {
        let row: f64 = f.row(i).iter().map(|z| (z.norm() / r.powf(a)).powf(p)).sum();
        acc += w[i] * row * dth * r.powf(2.0 * a);
    }
    let norm = acc.max(0.0).powf(1.0 / p);
    if !norm.is_finite() {
        return Err(DcError::InvalidInput("F/r^a is not p-integrable on the grid".into()));
    }
    Ok(norm)
}

/// Exponent used for `‖·‖_{p,a}`: `max(2/(1−ν) + 1, 3)`.
pub fn default_exponent(nu: f64) -> Result<f64> {
    if !(nu < 1.0) {
        return Err(DcError::InvalidInput(format!("ν = {nu} ≥ 1 admits no integrability exponent p > 2/(1−ν)")));
    }
    Ok((2.0 / (1.0 - nu) + 1.0).max(3.0))
}

/// `max |ℒv − F|` over the radial nodes at least two cells from either end.
pub fn interior_residual(ctx: &KernelContext, v: &CylinderFunction, f: &CylinderFunction) -> f64 {
    let lv = ctx.spec.apply(v);
    let p = v.p();
    let mut worst: f64 = 0.0;
    for i in 2..p.saturating_sub(2) {
        for (a, b) in lv.row(i).iter().zip(f.row(i)) {
            worst = worst.max((a - b).norm());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: CylinderFunction,
    /// `‖ℒu − F‖∞` at interior nodes.
    pub residual: f64,
    pub iterations: usize,
    /// Observed `‖TF‖∞ / ‖F‖_{p,a}`.
    pub bound_check: f64,
    pub p: f64,
    /// Residual above the requested tolerance.
    pub flagged: bool,
}

/// `TF` (plain), `T̂F` (hat) or `T^{j₀±}F` (modified) on the grid of `F`, which spans `[r_min, R]`.
pub fn solve_t(ctx: &KernelContext, f: &CylinderFunction, mode: KernelMode, tol: f64) -> Result<SolveReport> {
    f.validate()?;
    let p = default_exponent(ctx.spec.nu)?;
    let norm = weighted_norm(f, ctx.spec.a, p)?;
    let plan = TPlan::new(ctx, &f.radii, f.m, mode)?;
    let solution = plan.apply(f)?;
    let residual = interior_residual(ctx, &solution, f);
    let bound_check = if norm > 0.0 { solution.max_abs() / norm } else { 0.0 };
    Ok(SolveReport { solution, residual, iterations: 1, bound_check, p, flagged: !(residual <= tol) })
}

#[derive(Clone, Debug, Serialize)]
pub struct SemilinearReport {
    pub report: SolveReport,
    /// `‖v_{n+1} − v_n‖∞` per iteration.
    pub changes: Vec<f64>,
    /// `(min, max)` of `|v/u₀|` over nodes with `u₀ ≠ 0`.
    pub similarity: (f64, f64),
}

#[derive(Clone, Copy, Debug)]
pub struct SemilinearOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Relative tolerance for `ℒu₀ = 0` at interior nodes.
    pub homogeneous_tol: f64,
}

impl Default for SemilinearOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 30, homogeneous_tol: 1e-4 }
    }
}

/// Picard iteration `v ← u₀ + T(r^τ|v|G(v,r,t))` for `ℒv = r^τ|v|G(v,r,t)`.
///
/// `mode` selects `T` (plain or hat) or, for a similarity solution, the kernels split
/// at the order of `u₀`.
pub fn semilinear_solve<G>(
    ctx: &KernelContext,
    g: G,
    tau: f64,
    u0: &CylinderFunction,
    mode: KernelMode,
    opts: SemilinearOptions,
) -> Result<SemilinearReport>
where
    G: Fn(C64, f64, f64) -> C64 + Sync,
{
    u0.validate()?;
    let a = ctx.spec.a;
    if !(tau > a * ctx.spec.nu) {
        return Err(DcError::InvalidInput(format!("τ = {tau} must exceed aν = {}", a * ctx.spec.nu)));
    }
    let zero = CylinderFunction::zeros(u0.radii.clone(), u0.m);
    let hom = interior_residual(ctx, u0, &zero);
    if hom > opts.homogeneous_tol * (1.0 + u0.max_abs()) {
        return Err(DcError::InvalidInput(format!("u₀ does not solve ℒu = 0: interior residual {hom:.3e}")));
    }
    let nodes = crate::periodic::nodes(u0.m);
    let rhs = |v: &CylinderFunction| -> CylinderFunction {
        let mut out = v.clone();
        out.origin = None;
        for (i, r) in v.radii.iter().enumerate() {
            let rt = r.powf(tau);
            for (k, t) in nodes.iter().enumerate() {
                let z = v.get(i, k);
                out.values[i * v.m + k] = g(z, *r, *t) * (rt * z.norm());
            }
        }
        out
    };
    let plan = TPlan::new(ctx, &u0.radii, u0.m, mode)?;
    let mut v = u0.clone();
    v.origin = None;
    let mut changes: Vec<f64> = Vec::new();
    let mut growing = 0;
    let r_max = *u0.radii.last().unwrap_or(&0.0);
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let tf = plan.apply(&rhs(&v))?;
        let mut next = u0.zip(&tf, |x, y| x + y);
        next.origin = None;
        let change = next.values.iter().zip(&v.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        if let Some(prev) = changes.last() {
            growing = if change >= *prev && change > opts.tol { growing + 1 } else { 0 };
        }
        changes.push(change);
        v = next;
        if growing >= 3 {
            return Err(DcError::Numeric(format!(
                "Picard iteration does not contract (changes {:?}); try R ≤ {}",
                &changes[changes.len() - 4..],
                r_max / 2.0
            )));
        }
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DcError::Numeric(format!(
            "Picard iteration did not converge in {} iterations (last change {:.3e})",
            opts.max_iterations,
            changes.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let f = rhs(&v);
    let residual = interior_residual(ctx, &v, &f);
    let p = default_exponent(ctx.spec.nu)?;
    let norm = weighted_norm(&f, a, p)?;
    let diff = v.zip(u0, |x, y| x - y);
    let bound_check = if norm > 0.0 { diff.max_abs() / norm } else { 0.0 };
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (x, y) in v.values.iter().zip(&u0.values) {
        if y.norm() > 0.0 {
            let q = x.norm() / y.norm();
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    Ok(SemilinearReport {
        report: SolveReport {
            solution: v,
            residual,
            iterations: changes.len(),
            bound_check,
            p,
            flagged: !(residual <= 1e-3),
        },
        changes,
        similarity: (lo, hi),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchReport {
    pub continuous: bool,
    /// Which case of the patching statement applied: 1 when 0 is not a spectral value, 2 otherwise.
    pub item: u8,
    /// `|Re∫g^±u(δ,·) − Re∫g^±u(−δ,·)|` per exponent-0 adjoint solution.
    pub differences: Vec<f64>,
}

/// Whether solutions on `r > 0` and `r < 0` glue continuously across `S₀`.
///
/// `u_minus` is sampled at `|r|`. Both grids must contain the radius `delta`.
pub fn patch_check(ctx: &KernelContext, u_minus: &CylinderFunction, u_plus: &CylinderFunction, delta: f64, tol: f64) -> Result<PatchReport> {
    if ctx.terms.iter().any(|x| x.is_imaginary() && x.sigma.norm() > IMAGINARY_TOL) {
        return Err(DcError::InvalidInput("patching needs Spec(ℒ) ∩ iℝ* = ∅".into()));
    }
    let g: Vec<&BasicSolution> = ctx.terms.iter().filter(|x| x.sigma.norm() <= IMAGINARY_TOL).map(|x| &x.w_star).collect();
    if g.is_empty() {
        return Ok(PatchReport { continuous: true, item: 1, differences: Vec::new() });
    }
    if u_minus.m != u_plus.m {
        return Err(DcError::InvalidInput("both sides must share the angular grid".into()));
    }
    let m = u_plus.m;
    let a = u_minus.row(grid_row(u_minus, delta)?);
    let b = u_plus.row(grid_row(u_plus, delta)?);
    let differences: Vec<f64> = g
        .iter()
        .map(|gs| {
            let row = gs.row(delta, m);
            let pa: C64 = row.iter().zip(a).map(|(x, y)| x * y).sum();
            let pb: C64 = row.iter().zip(b).map(|(x, y)| x * y).sum();
            (pa.re - pb.re).abs() * 2.0 * PI / m as f64
        })
        .collect();
    Ok(PatchReport { continuous: differences.iter().all(|d| *d <= tol), item: 2, differences })
}
