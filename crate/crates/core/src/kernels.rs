//! Cauchy-type kernels `Ω₁, Ω₂` built from basic solutions of `ℒ` and `ℒ*`.
//!
//! The raw series converges geometrically in `(r/ρ)^a` and not at all on the
//! diagonal. The decomposed form adds the closed-form singular part
//! `i(r/ρ)^{λν}[ζ/(ζ−z) + iK L]` (and its `Ω₂` analogue) to the difference
//! between the truncated raw series and the truncated series of the singular
//! part, whose terms are `O(j⁻²)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::basic::{adjoint_basis, basic_solution, k_function, BasicSolution};
use crate::error::{DcError, Result};
use crate::operator::OperatorSpec;
use crate::periodic::{PeriodicFunction, C64, I};
use crate::spectrum::{find_spectral_values, Branch, SpectrumWindow};

/// `|Re σ|` below this counts as a purely imaginary exponent.
pub const IMAGINARY_TOL: f64 = 1e-9;

/// Default half-width of the diagonal band reserved for the decomposed path.
pub const DEFAULT_ETA: f64 = 1e-3;

/// Default truncation order.
pub const DEFAULT_ORDER: i64 = 64;

/// One product `w_j^± ⊗ w*_{−j}^±` of the kernel series.
#[derive(Clone, Debug)]
pub struct KernelTerm {
    pub j: i64,
    pub branch: Branch,
    pub sigma: C64,
    pub w: BasicSolution,
    pub w_star: BasicSolution,
}

impl KernelTerm {
    pub fn is_imaginary(&self) -> bool {
        self.sigma.re.abs() <= IMAGINARY_TOL
    }

    /// Member of the `r < ρ` sum at split level `threshold`.
    fn inner(&self, threshold: f64) -> bool {
        self.sigma.re >= threshold - IMAGINARY_TOL
    }
}

pub struct KernelContext {
    pub spec: OperatorSpec,
    pub window: SpectrumWindow,
    pub terms: Vec<KernelTerm>,
    /// Truncation order `J`: terms with `|j| ≤ J`.
    pub order: i64,
    pub eta: f64,
    k: PeriodicFunction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `r < ρ`.
    Inner,
    /// `r > ρ`.
    Outer,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelValue {
    pub omega1: C64,
    pub omega2: C64,
    pub singular1: C64,
    pub singular2: C64,
    pub remainder1: C64,
    pub remainder2: C64,
    pub regime: Regime,
    /// Estimate of the neglected tail `|j| > J`.
    pub tail_bound: f64,
}

/// Which terms a kernel keeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelMode {
    Plain,
    /// `Ω − ½Σ w w*` over the exponents in `iℝ`: those terms move to the `r > ρ` sum.
    Hat,
    /// Split at `Re σ_{j₀}^{branch}`.
    Modified { j0: i64, branch: Branch },
}

impl KernelContext {
    /// Spectral window `|j| ≤ order`, basic solutions and biorthonormal adjoint partners.
    pub fn new(spec: &OperatorSpec, order: i64, eta: f64) -> Result<Self> {
        if order < 1 {
            return Err(DcError::InvalidInput(format!("truncation order must be ≥ 1, got {order}")));
        }
        if !(eta > 0.0) {
            return Err(DcError::InvalidInput(format!("η must be positive, got {eta}")));
        }
        let window = find_spectral_values(spec, -order, order, 1e-8)?;
        if !window.is_complete() {
            let list: Vec<String> = window.gaps.iter().map(|g| format!("{} ({})", g.j, g.reason)).collect();
            return Err(DcError::Numeric(format!("spectral window is incomplete at j = {}", list.join(", "))));
        }
        let per_index: Vec<Vec<KernelTerm>> =
            (-order..=order).into_par_iter().map(|j| index_terms(spec, &window, j)).collect::<Result<_>>()?;
        let terms = per_index.into_iter().flatten().collect();
        let k = k_function(spec, 4 * spec.c.len() + 1);
        Ok(Self { spec: spec.clone(), window, terms, order, eta, k })
    }

    pub fn term(&self, j: i64, branch: Branch) -> Option<&KernelTerm> {
        self.terms.iter().find(|t| t.j == j && t.branch == branch)
    }

    pub fn has_imaginary_exponents(&self) -> bool {
        self.terms.iter().any(|t| t.is_imaginary())
    }

    fn threshold(&self, mode: KernelMode) -> Result<f64> {
        match mode {
            KernelMode::Modified { j0, branch } => self
                .term(j0, branch)
                .map(|t| t.sigma.re)
                .ok_or_else(|| DcError::InvalidInput(format!("σ_{j0}^{} is not in the window", branch.sign()))),
            _ => Ok(0.0),
        }
    }

    /// Whether `term` belongs to the `r < ρ` sum. Hat mode moves the `iℝ` terms to the `r > ρ` sum.
    pub(crate) fn is_inner(&self, term: &KernelTerm, mode: KernelMode, threshold: f64) -> bool {
        match mode {
            KernelMode::Hat => term.sigma.re > IMAGINARY_TOL,
            _ => term.inner(threshold),
        }
    }

    pub(crate) fn split_level(&self, mode: KernelMode) -> Result<f64> {
        self.threshold(mode)
    }

    /// `k(t) − k(θ)`.
    pub fn big_k(&self, t: f64, theta: f64) -> C64 {
        self.k.eval(t) - self.k.eval(theta)
    }

    /// Raw truncated series at one point pair.
    fn raw(&self, r: f64, t: f64, rho: f64, theta: f64, mode: KernelMode) -> Result<(C64, C64, Regime)> {
        if !(r >= 0.0 && rho > 0.0) {
            return Err(DcError::InvalidInput(format!("radii must satisfy r ≥ 0, ρ > 0, got {r}, {rho}")));
        }
        if r == rho {
            return Err(DcError::InvalidInput("kernel series diverge on r = ρ; use the decomposed path".into()));
        }
        let thr = self.threshold(mode)?;
        let regime = if r < rho { Regime::Inner } else { Regime::Outer };
        let (mut o1, mut o2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for term in &self.terms {
            let inner = self.is_inner(term, mode, thr);
            if inner != (regime == Regime::Inner) {
                continue;
            }
            let w = if r == 0.0 {
                if term.sigma.norm() <= IMAGINARY_TOL {
                    let (p, q) = term.w.components_at(t);
                    p + q.conj()
                } else if term.sigma.re > IMAGINARY_TOL {
                    continue;
                } else {
                    return Err(DcError::Numeric(format!(
                        "r^σ has no limit at r = 0 for σ = {}; use the hat kernels",
                        term.sigma
                    )));
                }
            } else {
                term.w.eval(r, t)
            };
            let ws = term.w_star.eval(rho, theta);
            let s = if inner { 0.5 } else { -0.5 };
            o1 += w * ws * s;
            o2 += w.conj() * ws * s;
        }
        Ok((o1, o2, regime))
    }

    /// `i(r/ρ)^{λν}[ζ/(ζ−z) + iKL]` and `(c̄(t)/2a)(r/ρ)^{λν}L + (c̄(θ)/2a)·conj((r/ρ)^{λν}L)`,
    /// closed form and truncated to `n ≤ J`.
    fn singular(&self, r: f64, t: f64, rho: f64, theta: f64) -> ((C64, C64), (C64, C64)) {
        let lam = self.spec.lambda();
        let lr = (r / rho).ln();
        let q = (lam * self.spec.nu * lr).exp();
        let x = (lam * lr + I * (t - theta)).exp();
        let inner = r < rho;
        let u = if inner { x } else { 1.0 / x };
        let one = C64::new(1.0, 0.0);
        let (cauchy, log) = if inner { (one / (one - u), -(one - u).ln()) } else { (u / (u - one), -(one - u).ln()) };
        let kk = self.big_k(t, theta);
        let ct = self.spec.c_at(t).conj() / (2.0 * self.spec.a);
        let cth = self.spec.c_at(theta).conj() / (2.0 * self.spec.a);
        let s1 = I * q * (cauchy + I * kk * log);
        let s2 = ct * q * log + cth * (q * log).conj();
        // Partial sums with the same index range as the raw series.
        let (mut pc, mut pl) = (if inner { one } else { C64::new(0.0, 0.0) }, C64::new(0.0, 0.0));
        let mut pw = one;
        for n in 1..=self.order {
            pw *= u;
            pl += pw / n as f64;
            pc += if inner { pw } else { -pw };
        }
        let t1 = I * q * (pc + I * kk * pl);
        let t2 = ct * q * pl + cth * (q * pl).conj();
        ((s1, s2), (t1, t2))
    }

    /// Tail estimate `2q^{J+1}/(1−q)` with `q = (min/max ratio)^a`, enlarged by the coupling strength.
    fn raw_tail(&self, r: f64, rho: f64) -> f64 {
        let q = (-self.spec.a * (r / rho).ln().abs()).exp();
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let cmax: f64 = self.spec.c_modes().iter().map(|(_, z)| z.norm()).sum();
        2.0 * q.powi(self.order as i32 + 1) / (1.0 - q) * (1.0 + cmax / self.spec.a)
    }
}

fn index_terms(spec: &OperatorSpec, window: &SpectrumWindow, j: i64) -> Result<Vec<KernelTerm>> {
    let entries = window.at(j);
    if entries.iter().any(|v| v.defective) {
        return Err(DcError::Numeric(format!(
            "index {j} carries a Jordan-block double root; the kernel series needs logarithmic terms there"
        )));
    }
    let sols: Vec<BasicSolution> = entries.iter().map(|v| basic_solution(spec, v, v.branch)).collect::<Result<_>>()?;
    let same = sols.len() == 2 && (sols[0].sigma - sols[1].sigma).norm() <= 1e-8 * (1.0 + sols[0].sigma.norm());
    let stars = if same {
        adjoint_basis(spec, &[&sols[0], &sols[1]])?
    } else {
        sols.iter().map(|w| adjoint_basis(spec, &[w]).map(|mut v| v.remove(0))).collect::<Result<_>>()?
    };
    Ok(sols
        .into_iter()
        .zip(stars)
        .map(|(w, w_star)| KernelTerm { j, branch: w.branch, sigma: w.sigma, w, w_star })
        .collect())
}

/// Raw truncated series `Ω₁, Ω₂` at `(r,t)`, `(ρ,θ)`.
pub fn kernel_omega(ctx: &KernelContext, r: f64, t: f64, rho: f64, theta: f64) -> Result<KernelValue> {
    omega_with(ctx, r, t, rho, theta, KernelMode::Plain)
}

fn omega_with(ctx: &KernelContext, r: f64, t: f64, rho: f64, theta: f64, mode: KernelMode) -> Result<KernelValue> {
    if r > 0.0 && (r / rho).ln().abs() < ctx.eta {
        return Err(DcError::InvalidInput(format!(
            "|log(r/ρ)| < η = {}: only the decomposed kernel is accurate here",
            ctx.eta
        )));
    }
    let (o1, o2, regime) = ctx.raw(r, t, rho, theta, mode)?;
    let zero = C64::new(0.0, 0.0);
    // Rounding in the partial sums is part of the truncation budget.
    let rounding = 1e-14 * ctx.terms.len() as f64 * (1.0 + o1.norm() + o2.norm());
    let tail = if r == 0.0 { rounding } else { ctx.raw_tail(r, rho) + rounding };
    Ok(KernelValue {
        omega1: o1,
        omega2: o2,
        singular1: zero,
        singular2: zero,
        remainder1: o1,
        remainder2: o2,
        regime,
        tail_bound: tail,
    })
}

/// `Ω = singular part + C`, with `C` summed as a difference series of `O(j⁻²)` terms.
pub fn kernel_decomposed(ctx: &KernelContext, r: f64, t: f64, rho: f64, theta: f64) -> Result<KernelValue> {
    decomposed_with(ctx, r, t, rho, theta, KernelMode::Plain)
}

fn decomposed_with(ctx: &KernelContext, r: f64, t: f64, rho: f64, theta: f64, mode: KernelMode) -> Result<KernelValue> {
    if !(r > 0.0) {
        return Err(DcError::InvalidInput("the decomposed kernel needs r > 0".into()));
    }
    let lam = ctx.spec.lambda();
    let x = (lam * (r / rho).ln() + I * (t - theta)).exp();
    if (x - 1.0).norm() < 1e-14 {
        return Err(DcError::InvalidInput("z = ζ: the kernel is singular".into()));
    }
    let (o1, o2, regime) = ctx.raw(r, t, rho, theta, mode)?;
    let ((s1, s2), (t1, t2)) = ctx.singular(r, t, rho, theta);
    let (c1, c2) = (o1 - t1, o2 - t2);
    // O(j⁻²) envelope of the difference terms, scaled by the remaining geometric factor.
    let q = (-ctx.spec.a * (r / rho).ln().abs()).exp();
    let jf = ctx.order as f64;
    let tail = (c1.norm() + c2.norm() + 1.0) * q.powf(jf) / jf;
    Ok(KernelValue {
        omega1: s1 + c1,
        omega2: s2 + c2,
        singular1: s1,
        singular2: s2,
        remainder1: c1,
        remainder2: c2,
        regime,
        tail_bound: tail,
    })
}

/// `Ω_{j₀,1}^±, Ω_{j₀,2}^±`: the sums split at `Re σ_{j₀}^±`.
///
/// The singular part is `i(r/ρ)^{σ_{j₀}}e^{ij₀(t−θ)}[ζ/(ζ−z) + iKL]` and
/// `(c̄(t)/2a)(r/ρ)^{σ_{j₀}}L + conj((c(θ)/2a)(r/ρ)^{σ_{j₀}}L)`; the remainder is
/// only `O(1/j)` per term, so the raw values are returned as `omega`.
pub fn modified_kernels(
    ctx: &KernelContext,
    j0: i64,
    branch: Branch,
    r: f64,
    t: f64,
    rho: f64,
    theta: f64,
) -> Result<KernelValue> {
    let mode = KernelMode::Modified { j0, branch };
    let mut v = omega_with(ctx, r, t, rho, theta, mode)?;
    let s0 = ctx.term(j0, branch).map(|x| x.sigma).unwrap_or_default();
    let lam = ctx.spec.lambda();
    let lr = (r / rho).ln();
    let pref = (s0 * lr).exp();
    let x = (lam * lr + I * (t - theta)).exp();
    let one = C64::new(1.0, 0.0);
    let (cauchy, log) = if r < rho { (one / (one - x), -(one - x).ln()) } else { (one / (one - x), -(one - 1.0 / x).ln()) };
    let kk = ctx.big_k(t, theta);
    v.singular1 = I * pref * C64::from_polar(1.0, j0 as f64 * (t - theta)) * (cauchy + I * kk * log);
    let a2 = 2.0 * ctx.spec.a;
    v.singular2 = ctx.spec.c_at(t).conj() / a2 * pref * log + (ctx.spec.c_at(theta) / a2 * pref * log).conj();
    v.remainder1 = v.omega1 - v.singular1;
    v.remainder2 = v.omega2 - v.singular2;
    Ok(v)
}

/// `Ω̂ = Ω − ½Σ_{σ∈iℝ} w w*`, so that `ℒT̂F = F` and `Ω̂(0,t,ζ) = 0`.
pub fn hat_kernels(ctx: &KernelContext, r: f64, t: f64, rho: f64, theta: f64) -> Result<KernelValue> {
    if r == 0.0 {
        return omega_with(ctx, r, t, rho, theta, KernelMode::Hat);
    }
    if (r / rho).ln().abs() < ctx.eta {
        let mut v = decomposed_with(ctx, r, t, rho, theta, KernelMode::Hat)?;
        // The moved terms are smooth, so the decomposition is unchanged.
        v.remainder1 = v.omega1 - v.singular1;
        v.remainder2 = v.omega2 - v.singular2;
        return Ok(v);
    }
    omega_with(ctx, r, t, rho, theta, KernelMode::Hat)
}

/// `max_θ |L*Ω₁ − iλνΩ₁ + c̄(θ)Ω̄₂|` along the circle `ρ`, relative to `max|Ω₁|`.
///
/// `∂_θ` is spectral on `m` nodes (`m > 2J` avoids aliasing); `ρ∂_ρ` is a fourth-order
/// centred difference in `log ρ`.
pub fn kernel_pde_residual(ctx: &KernelContext, r: f64, t: f64, rho: f64, m: usize) -> Result<f64> {
    let lam = ctx.spec.lambda();
    let h: f64 = 1e-3;
    let nodes = crate::periodic::nodes(m);
    let eval = |rr: f64| -> Result<(Vec<C64>, Vec<C64>)> {
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for th in &nodes {
            let v = kernel_decomposed(ctx, r, t, rr, *th)?;
            a.push(v.omega1);
            b.push(v.omega2);
        }
        Ok((a, b))
    };
    let (o1, o2) = eval(rho)?;
    let (p1, _) = eval(rho * h.exp())?;
    let (m1, _) = eval(rho * (-h).exp())?;
    let (p2, _) = eval(rho * (2.0 * h).exp())?;
    let (m2, _) = eval(rho * (-2.0 * h).exp())?;
    let f1 = PeriodicFunction::from_samples(o1.clone())?;
    let d1 = f1.derivative();
    let scale = o1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for k in 0..m {
        let rdr = (m2[k] - p2[k] + (p1[k] - m1[k]) * 8.0) / (12.0 * h);
        let lstar = lam * d1.samples()[k] - I * rdr;
        let res = lstar - I * lam * ctx.spec.nu * o1[k] + ctx.spec.c_at(nodes[k]).conj() * o2[k].conj();
        worst = worst.max(res.norm());
    }
    Ok(worst / scale.max(1e-300))
}
