//! The operator family `ℒ_ε u = λ_ε u_t − i r u_r + iλ_ε ν u − c ū`, its
//! adjoint for the pairing `⟨f, g⟩ = Re ∬ f g dr dt / r`, the reduction of
//! `Lu = Au + Bū` to that form, and the Green identity residual.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{DcError, Result};
use crate::grid::{gregory_weights, CylinderDomain, CylinderFunction};
use crate::periodic::{eval_modes, PeriodicFunction, C64, I};

#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub c: PeriodicFunction,
    c_modes: Vec<(i64, C64)>,
}

impl OperatorSpec {
    pub fn new(a: f64, b: f64, nu: f64, epsilon: f64, c: PeriodicFunction) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(DcError::InvalidInput(format!("Re λ must be positive, got {a}")));
        }
        if !(0.0..1.0).contains(&nu) {
            return Err(DcError::InvalidInput(format!("ν must lie in [0, 1), got {nu}")));
        }
        if !b.is_finite() || !epsilon.is_finite() {
            return Err(DcError::InvalidInput("non-finite operator parameter".into()));
        }
        let c_modes = c.modes(1e-15);
        Ok(Self { a, b, nu, epsilon, c, c_modes })
    }

    /// The decoupled operator with `c ≡ 0`.
    pub fn decoupled(a: f64, b: f64, nu: f64, epsilon: f64) -> Result<Self> {
        Self::new(a, b, nu, epsilon, PeriodicFunction::zero(3)?)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    /// `λ_ε = a + ibε`.
    pub fn lambda(&self) -> C64 {
        C64::new(self.a, self.b * self.epsilon)
    }

    pub fn c_at(&self, t: f64) -> C64 {
        eval_modes(&self.c_modes, t)
    }

    pub fn c_modes(&self) -> &[(i64, C64)] {
        &self.c_modes
    }

    /// Largest Fourier index of `c`.
    pub fn c_bandwidth(&self) -> i64 {
        self.c_modes.iter().map(|(l, _)| l.abs()).max().unwrap_or(0)
    }

    /// `γ = (1/4aπ) ∫ |c|²`.
    pub fn gamma(&self) -> f64 {
        let mean_sq: f64 = self.c_modes.iter().map(|(_, z)| z.norm_sqr()).sum();
        mean_sq * 2.0 * PI / (4.0 * self.a * PI)
    }

    /// `ℒ_ε u` with spectral `∂t` and finite-difference `r∂r`.
    pub fn apply(&self, u: &CylinderFunction) -> CylinderFunction {
        let lam = self.lambda();
        let ut = u.dt();
        let us = u.r_dr();
        let c = self.c.samples_on(u.m);
        let mut out = u.clone();
        out.origin = None;
        for i in 0..u.p() {
            for k in 0..u.m {
                let idx = i * u.m + k;
                let z = u.values[idx];
                out.values[idx] =
                    lam * ut.values[idx] - I * us.values[idx] + I * lam * self.nu * z - c[k] * z.conj();
            }
        }
        out
    }

    /// `ℒ_ε* v = −(λ_ε v_t − i r v_r − iλ_ε ν v + c̄ v̄)`.
    pub fn apply_adjoint(&self, v: &CylinderFunction) -> CylinderFunction {
        let lam = self.lambda();
        let vt = v.dt();
        let vs = v.r_dr();
        let c = self.c.samples_on(v.m);
        let mut out = v.clone();
        out.origin = None;
        for i in 0..v.p() {
            for k in 0..v.m {
                let idx = i * v.m + k;
                let z = v.values[idx];
                out.values[idx] = -(lam * vt.values[idx] - I * vs.values[idx] - I * lam * self.nu * z
                    + c[k].conj() * z.conj());
            }
        }
        out
    }
}

/// Output of [`reduce_to_normal_form`].
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub nu: f64,
    pub m: PeriodicFunction,
    pub c: PeriodicFunction,
    /// `λ(Re(A₀/λ) − iν)`, the coefficient of `w` after the substitution `w = u/m`.
    pub linear_coefficient: C64,
    /// `Re(A₀/λ)`; the normalized model requires it to vanish.
    pub re_a0_over_lambda: f64,
}

impl NormalForm {
    pub fn is_normalized(&self) -> bool {
        self.re_a0_over_lambda.abs() <= 1e-10
    }
}

/// Reduce `Lu = A u + B ū` to `Lw = λ(Re(A₀/λ) − iν) w + C w̄` with `w = u/m`.
///
/// `ν = ⌈x⌉ − x` for `x = Im(A₀/λ)`, so `ν = 0` when `x` is an integer, and
/// `m(t) = exp(i⌈x⌉t + (1/λ)∫₀ᵗ(A − A₀))`.
pub fn reduce_to_normal_form(
    a_coef: &PeriodicFunction,
    b_coef: &PeriodicFunction,
    lambda: C64,
) -> Result<NormalForm> {
    if !(lambda.re > 0.0) {
        return Err(DcError::InvalidInput(format!("Re λ must be positive, got {}", lambda.re)));
    }
    let mgrid = a_coef.len().max(b_coef.len());
    let a_coef = a_coef.resample(mgrid);
    let b_coef = b_coef.resample(mgrid);
    let a0 = a_coef.mean();
    let ratio = a0 / lambda;
    let x = ratio.im;
    let nearest = x.round();
    let ceil = if (x - nearest).abs() <= 1e-12 { nearest } else { x.ceil() };
    let nu = ceil - x;
    let nu = if nu.abs() < 1e-12 { 0.0 } else { nu };
    let primitive = a_coef.primitive_zero_mean();
    let m = PeriodicFunction::from_samples(
        crate::periodic::nodes(mgrid)
            .iter()
            .zip(primitive.samples())
            .map(|(t, p)| (I * ceil * t + p / lambda).exp())
            .collect(),
    )?;
    let c = b_coef.mul(&m.map(|z| z.conj() / z));
    // The band-limited m is exact at the nodes; check it is resolved.
    let tail = m.coeff(m.band_limit()).norm() + m.coeff(-m.band_limit()).norm();
    if tail > 1e-10 * m.max_abs() {
        return Err(DcError::Numeric(
            "m(t) is not resolved on the coefficient grid; refine A".into(),
        ));
    }
    Ok(NormalForm {
        nu,
        m,
        c,
        linear_coefficient: lambda * C64::new(ratio.re, -nu),
        re_a0_over_lambda: ratio.re,
    })
}

/// `z_ε = r^{λ_ε} e^{it}`.
pub fn first_integral_map(spec: &OperatorSpec, r: f64, t: f64) -> Result<C64> {
    if !(r > 0.0) {
        return Err(DcError::InvalidInput(format!("first integral needs r > 0, got {r}")));
    }
    Ok((spec.lambda() * r.ln() + I * t).exp())
}

/// Inverse of [`first_integral_map`]; `t` is returned in `[0, 2π)`.
pub fn first_integral_inverse(spec: &OperatorSpec, z: C64) -> Result<(f64, f64)> {
    if z.norm() == 0.0 {
        return Err(DcError::InvalidInput("z = 0 is not in the image".into()));
    }
    let lam = spec.lambda();
    let log_r = z.norm().ln() / lam.re;
    let t = (z.arg() - lam.im * log_r).rem_euclid(2.0 * PI);
    Ok((log_r.exp(), t))
}

#[derive(Clone, Debug, Serialize)]
pub struct GreenReport {
    pub boundary_term: f64,
    pub volume_term: f64,
    pub residual: f64,
    /// Residual recomputed on every other radial node.
    pub coarse_residual: f64,
    pub coarse_warning: bool,
}

/// `|Re ∮_{∂U} u v dz/z − (⟨u, ℒ*v⟩ − ⟨ℒu, v⟩)|` on the annulus spanned by the
/// grid, whose radii must be equispaced in `log r` and cover the domain.
pub fn green_residual(
    u: &CylinderFunction,
    v: &CylinderFunction,
    spec: &OperatorSpec,
    domain: &CylinderDomain,
) -> Result<GreenReport> {
    u.validate()?;
    v.validate()?;
    if u.radii != v.radii || u.m != v.m {
        return Err(DcError::InvalidInput("u and v must share a grid".into()));
    }
    let p = u.p();
    if p < 9 {
        return Err(DcError::InvalidInput("green residual needs at least 9 radii".into()));
    }
    let (r0, r1) = (u.radii[0], u.radii[p - 1]);
    let tol = 1e-12 * r1;
    if (r0 - domain.r_min).abs() > tol || (r1 - domain.r_max).abs() > tol {
        return Err(DcError::InvalidInput(
            "grid radii must start and end on the domain boundary".into(),
        ));
    }
    let fine = green_terms(u, v, spec);
    let coarse = if p % 2 == 1 {
        let pick = |f: &CylinderFunction| {
            let radii: Vec<f64> = f.radii.iter().step_by(2).copied().collect();
            let mut values = Vec::new();
            for i in (0..p).step_by(2) {
                values.extend_from_slice(f.row(i));
            }
            CylinderFunction { radii, m: f.m, values, origin: None }
        };
        green_terms(&pick(u), &pick(v), spec)
    } else {
        fine
    };
    let residual = (fine.0 - fine.1).abs();
    let coarse_residual = (coarse.0 - coarse.1).abs();
    let scale = 1.0 + fine.0.abs() + fine.1.abs();
    Ok(GreenReport {
        boundary_term: fine.0,
        volume_term: fine.1,
        residual,
        coarse_residual,
        coarse_warning: residual > 1e-10 * scale && coarse_residual < 4.0 * residual,
    })
}

fn green_terms(u: &CylinderFunction, v: &CylinderFunction, spec: &OperatorSpec) -> (f64, f64) {
    let p = u.p();
    let m = u.m;
    let dt = 2.0 * PI / m as f64;
    // Outer circle traversed with t increasing, inner with t decreasing; dz/z = i dt.
    let circle = |i: usize| -> C64 {
        u.row(i).iter().zip(v.row(i)).map(|(a, b)| a * b).sum::<C64>() * I * dt
    };
    let boundary = (circle(p - 1) - circle(0)).re;
    let lu = spec.apply(u);
    let lsv = spec.apply_adjoint(v);
    let h = (u.radii[p - 1].ln() - u.radii[0].ln()) / (p - 1) as f64;
    let w = gregory_weights(p, h);
    let mut vol = 0.0;
    for i in 0..p {
        let row: f64 = (0..m)
            .map(|k| {
                let idx = i * m + k;
                (u.values[idx] * lsv.values[idx] - lu.values[idx] * v.values[idx]).re
            })
            .sum();
        vol += w[i] * row * dt;
    }
    (boundary, vol)
}
