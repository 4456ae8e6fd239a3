//! Planar operators `𝔻u = a₁₁u_xx + 2a₁₂u_xy + a₂₂u_yy + a₁u_x + a₂u_y`
//! with coefficients vanishing at the origin and
//! `C₁ ≤ (a₁₁a₂₂ − a₁₂²)/(x²+y²)² ≤ C₂`: polar form, the invariant
//! `μ = (1/2π) lim ∮ (A − iB) dθ` and the first-order data of `X = ∂θ − ρg∂ρ`.
//!
//! In polar coordinates `𝔻u = Pu_θθ + 2Nu_ρθ + Mu_ρρ + Qu_ρ + Tu_θ` with
//! `T = (2/ρ²)[a₁₁sc + a₁₂(s² − c²) − a₂₂sc] − (a₁s − a₂c)/ρ`.
//! With `g = −N₁ + i√(M₁ − N₁²)` one has `2𝔻u/P = XX̄u + X̄Xu + BXu + B̄X̄u`, where
//! `f = −|g|² + X(ḡ)` and `B = T₁ + i(T₁ Re g + Q₁ + Re f)/Im g`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DcError, Result};
use crate::expr::{parse_expression, Vars};
use crate::periodic::C64;

pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Floor for `P` and for `M₁ − N₁²`.
const POSITIVITY_FLOOR: f64 = 1e-12;

#[derive(Clone)]
pub struct PlaneOperator {
    pub a11: Field,
    pub a12: Field,
    pub a22: Field,
    pub a1: Field,
    pub a2: Field,
}

fn constant_field(c: f64) -> Field {
    Arc::new(move |_, _| c)
}

fn expression_field(name: &str, src: &str) -> Result<Field> {
    let e = parse_expression(src).map_err(|err| err.context(name))?;
    Ok(Arc::new(move |x, y| e.eval(&Vars::plane(x, y)).re))
}

impl PlaneOperator {
    pub fn new(a11: Field, a12: Field, a22: Field, a1: Field, a2: Field) -> Self {
        Self { a11, a12, a22, a1, a2 }
    }

    /// Coefficients from expressions in `x`, `y` (and `rho`, `theta`); the real part is used.
    pub fn from_expressions(a11: &str, a12: &str, a22: &str, a1: &str, a2: &str) -> Result<Self> {
        Ok(Self {
            a11: expression_field("a11", a11)?,
            a12: expression_field("a12", a12)?,
            a22: expression_field("a22", a22)?,
            a1: expression_field("a1", a1)?,
            a2: expression_field("a2", a2)?,
        })
    }

    /// `(x² + y²)Δ`.
    pub fn laplacian() -> Self {
        let r2: Field = Arc::new(|x, y| x * x + y * y);
        Self::new(r2.clone(), constant_field(0.0), r2, constant_field(0.0), constant_field(0.0))
    }

    /// `a₁₁ = c₁y² + c₂x²`, `a₂₂ = c₁x² + c₂y²`, `a₁₂ = (c₂ − c₁)xy`.
    pub fn c1c2_family(c1: f64, c2: f64) -> Self {
        Self::new(
            Arc::new(move |x, y| c1 * y * y + c2 * x * x),
            Arc::new(move |x, y| (c2 - c1) * x * y),
            Arc::new(move |x, y| c1 * x * x + c2 * y * y),
            constant_field(0.0),
            constant_field(0.0),
        )
    }

    /// `LL̄` with `L = λ∂t − ir∂r` written in Cartesian coordinates `x = r cos t`, `y = r sin t`.
    pub fn model(lambda: C64) -> Self {
        let (b, l2) = (lambda.im, lambda.norm_sqr());
        Self::new(
            Arc::new(move |x, y| x * x + 2.0 * b * x * y + l2 * y * y),
            Arc::new(move |x, y| x * y - b * (x * x - y * y) - l2 * x * y),
            Arc::new(move |x, y| y * y - 2.0 * b * x * y + l2 * x * x),
            Arc::new(move |x, y| x * (1.0 - l2) + 2.0 * b * y),
            Arc::new(move |x, y| y * (1.0 - l2) - 2.0 * b * x),
        )
    }

    /// All coefficients multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let f = |g: &Field| -> Field {
            let g = g.clone();
            Arc::new(move |x, y| s * g(x, y))
        };
        Self::new(f(&self.a11), f(&self.a12), f(&self.a22), f(&self.a1), f(&self.a2))
    }

    /// The operator conjugated by the rotation of the plane by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let op = self.clone();
        // At the rotated point, A' = R A Rᵀ and a' = R a, evaluated at R⁻¹(x, y).
        let back = move |x: f64, y: f64| (c * x + s * y, -s * x + c * y);
        let entry = move |i: usize| -> Field {
            let op = op.clone();
            Arc::new(move |x, y| {
                let (u, v) = back(x, y);
                let (a11, a12, a22) = ((op.a11)(u, v), (op.a12)(u, v), (op.a22)(u, v));
                let (a1, a2) = ((op.a1)(u, v), (op.a2)(u, v));
                match i {
                    0 => c * c * a11 - 2.0 * s * c * a12 + s * s * a22,
                    1 => s * c * (a11 - a22) + (c * c - s * s) * a12,
                    2 => s * s * a11 + 2.0 * s * c * a12 + c * c * a22,
                    3 => c * a1 - s * a2,
                    _ => s * a1 + c * a2,
                }
            })
        };
        Self::new(entry(0), entry(1), entry(2), entry(3), entry(4))
    }

    /// `𝔻` applied to `u` given through its Cartesian derivatives `(u_x, u_y, u_xx, u_xy, u_yy)`.
    pub fn apply(&self, x: f64, y: f64, d: [f64; 5]) -> f64 {
        (self.a11)(x, y) * d[2] + 2.0 * (self.a12)(x, y) * d[3] + (self.a22)(x, y) * d[4] + (self.a1)(x, y) * d[0] + (self.a2)(x, y) * d[1]
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PolarData {
    pub p: f64,
    pub n: f64,
    pub m: f64,
    pub q: f64,
    pub t: f64,
    pub m1: f64,
    pub n1: f64,
    pub q1: f64,
    pub t1: f64,
}

/// Polar coefficients and their normalized ratios at `(ρ, θ)`.
pub fn polar_reduce(op: &PlaneOperator, rho: f64, theta: f64) -> Result<PolarData> {
    if !(rho > 0.0) {
        return Err(DcError::InvalidInput(format!("ρ must be positive, got {rho}")));
    }
    let (s, c) = theta.sin_cos();
    let (x, y) = (rho * c, rho * s);
    let (a11, a12, a22, a1, a2) = ((op.a11)(x, y), (op.a12)(x, y), (op.a22)(x, y), (op.a1)(x, y), (op.a2)(x, y));
    let inner = a11 * s * s - 2.0 * a12 * s * c + a22 * c * c;
    let p = inner / (rho * rho);
    let n = (-a11 * s * c + a12 * (c * c - s * s) + a22 * c * s) / rho;
    let m = a11 * c * c + 2.0 * a12 * s * c + a22 * s * s;
    let q = inner / rho + a1 * c + a2 * s;
    let t = 2.0 * (a11 * s * c + a12 * (s * s - c * c) - a22 * s * c) / (rho * rho) - (a1 * s - a2 * c) / rho;
    if !(p > POSITIVITY_FLOOR) {
        return Err(DcError::Invariant(format!("P = {p:.3e} at (ρ, θ) = ({rho}, {theta}) violates the degeneracy bounds")));
    }
    Ok(PolarData { p, n, m, q, t, m1: m / (rho * rho * p), n1: n / (rho * p), q1: q / (rho * p), t1: t / p })
}

/// `(min, max)` of `(a₁₁a₂₂ − a₁₂²)/(x²+y²)²` on `[r_in, r_out] × S¹`, sampled on `nr × nt` points.
pub fn ellipticity_bounds(op: &PlaneOperator, r_in: f64, r_out: f64, nr: usize, nt: usize) -> Result<(f64, f64)> {
    if !(r_in > 0.0 && r_out > r_in) || nr < 2 || nt < 3 {
        return Err(DcError::InvalidInput("the sampling annulus must satisfy 0 < r_in < r_out".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..nr {
        let rho = r_in * (r_out / r_in).powf(i as f64 / (nr - 1) as f64);
        for k in 0..nt {
            let th = 2.0 * PI * k as f64 / nt as f64;
            let (x, y) = (rho * th.cos(), rho * th.sin());
            let (a11, a12, a22) = ((op.a11)(x, y), (op.a12)(x, y), (op.a22)(x, y));
            if a11 < 0.0 {
                return Err(DcError::Invariant(format!("a₁₁ = {a11:.3e} < 0 at ({x:.3e}, {y:.3e})")));
            }
            let d = (a11 * a22 - a12 * a12) / rho.powi(4);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    if !(lo > POSITIVITY_FLOOR) || !hi.is_finite() {
        return Err(DcError::Invariant(format!(
            "(a₁₁a₂₂ − a₁₂²)/ρ⁴ ranges over [{lo:.3e}, {hi:.3e}]: the operator is degenerate beyond the model"
        )));
    }
    Ok((lo, hi))
}

/// `(1/2π)∮_{C_ρ} (A − iB) dθ` by the trapezoid rule on `m` nodes.
pub fn circle_mu(op: &PlaneOperator, rho: f64, m: usize) -> Result<C64> {
    let vals: Vec<C64> = (0..m)
        .into_par_iter()
        .map(|k| {
            let th = 2.0 * PI * k as f64 / m as f64;
            let d = polar_reduce(op, rho, th)?;
            let disc = d.m1 - d.n1 * d.n1;
            if !(disc > POSITIVITY_FLOOR) {
                return Err(DcError::Invariant(format!("M₁ − N₁² = {disc:.3e} at (ρ, θ) = ({rho}, {th})")));
            }
            Ok(C64::new(disc.sqrt(), -d.n1))
        })
        .collect::<Result<_>>()?;
    Ok(vals.iter().sum::<C64>() / m as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct MuEstimate {
    pub mu: C64,
    pub radii: Vec<f64>,
    pub circle_values: Vec<C64>,
    /// Successive difference ratios `|μ(ρ_i) − μ(ρ_{i+1})| / |μ(ρ_{i+1}) − μ(ρ_{i+2})|`; 2 for a first-order rate.
    pub ratios: Vec<f64>,
    /// Difference of the last two extrapolants.
    pub error_estimate: f64,
}

/// `μ` from circles `ρ₀, ρ₀/2, …` and Richardson extrapolation in `ρ`.
pub fn invariant_mu(op: &PlaneOperator, rho0: f64, terms: usize, m: usize, tol: f64) -> Result<MuEstimate> {
    if terms < 2 || !(rho0 > 0.0) || m < 8 {
        return Err(DcError::InvalidInput("μ needs ρ₀ > 0, at least two radii and eight angular nodes".into()));
    }
    let radii: Vec<f64> = (0..terms).map(|i| rho0 / 2f64.powi(i as i32)).collect();
    let vals: Vec<C64> = radii.iter().map(|r| circle_mu(op, *r, m)).collect::<Result<_>>()?;
    let ratios = vals
        .windows(3)
        .map(|w| {
            let (d0, d1) = ((w[0] - w[1]).norm(), (w[1] - w[2]).norm());
            if d1 == 0.0 { f64::NAN } else { d0 / d1 }
        })
        .collect();
    // Neville table for an expansion in integer powers of ρ.
    let mut table = vals.clone();
    let mut last = vals[terms - 1];
    let mut prev = vals[terms - 2];
    for level in 1..terms {
        let f = 2f64.powi(level as i32);
        for i in 0..terms - level {
            table[i] = (table[i + 1] * f - table[i]) / (f - 1.0);
        }
        prev = if terms - level >= 2 { table[terms - level - 2] } else { last };
        last = table[terms - level - 1];
    }
    let mu = table[0];
    let error_estimate = (mu - prev).norm();
    if !(mu.re > 0.0) {
        return Err(DcError::Invariant(format!("Re μ = {} must be positive", mu.re)));
    }
    if error_estimate > tol * (1.0 + mu.norm()) {
        return Err(DcError::Numeric(format!("the circle averages do not settle: last extrapolants differ by {error_estimate:.3e}")));
    }
    Ok(MuEstimate { mu, radii, circle_values: vals, ratios, error_estimate })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FirstOrderData {
    pub g: C64,
    pub f: C64,
    pub b: C64,
}

fn g_at(op: &PlaneOperator, rho: f64, theta: f64) -> Result<(C64, PolarData)> {
    let d = polar_reduce(op, rho, theta)?;
    let disc = d.m1 - d.n1 * d.n1;
    if !(disc > POSITIVITY_FLOOR) {
        return Err(DcError::Invariant(format!("M₁ − N₁² = {disc:.3e} at (ρ, θ) = ({rho}, {theta})")));
    }
    Ok((C64::new(-d.n1, disc.sqrt()), d))
}

/// `g`, `f = −|g|² + X(ḡ)` and `B` at `(ρ, θ)`; `∂θ` is spectral on `m` nodes, `∂ρ` a fourth-order difference.
pub fn first_order_data(op: &PlaneOperator, rho: f64, theta: f64, m: usize) -> Result<FirstOrderData> {
    if m < 5 || m % 2 == 0 {
        return Err(DcError::InvalidInput(format!("angular grid must be odd and at least 5, got {m}")));
    }
    let (g, d) = g_at(op, rho, theta)?;
    let ring: Vec<C64> = (0..m).map(|k| g_at(op, rho, theta + 2.0 * PI * k as f64 / m as f64).map(|x| x.0.conj())).collect::<Result<_>>()?;
    let coeffs = crate::periodic::dft(&ring);
    let half = ((m - 1) / 2) as i64;
    let dtheta: C64 = coeffs.iter().enumerate().map(|(i, c)| c * C64::new(0.0, (i as i64 - half) as f64)).sum();
    let h = 1e-3 * rho;
    let gb = |r: f64| g_at(op, r, theta).map(|x| x.0.conj());
    let drho = (gb(rho - 2.0 * h)? - gb(rho + 2.0 * h)? + (gb(rho + h)? - gb(rho - h)?) * 8.0) / (12.0 * h);
    let xgbar = dtheta - g * rho * drho;
    let f = -g.norm_sqr() + xgbar;
    let b = C64::new(d.t1, (d.t1 * g.re + d.q1 + f.re) / g.im);
    Ok(FirstOrderData { g, f, b })
}

#[derive(Clone, Debug, Serialize)]
pub struct PolarSample {
    pub rho: f64,
    pub theta: f64,
    pub polar: PolarData,
    pub first_order: FirstOrderData,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizationReport {
    /// `μ` by the circle-average formula.
    pub mu: C64,
    pub lambda: C64,
    /// `(1/2π)∮(√(M₁ − N₁²) + iN₁)dθ = (1/2π)∮ −ig dθ`, the invariant of `X`; the conjugate of `μ`.
    pub mu_vector_field: C64,
    pub c1_est: f64,
    pub c2_est: f64,
    pub estimate: MuEstimate,
    pub samples: Vec<PolarSample>,
}

#[derive(Clone, Copy, Debug)]
pub struct NormalizeOptions {
    pub rho0: f64,
    pub terms: usize,
    pub m: usize,
    pub tol: f64,
    /// Radii and angles of the reported samples.
    pub sample_radii: usize,
    pub sample_angles: usize,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self { rho0: 0.1, terms: 4, m: 65, tol: 1e-8, sample_radii: 3, sample_angles: 8 }
    }
}

pub fn normalize(op: &PlaneOperator, opts: NormalizeOptions) -> Result<NormalizationReport> {
    let r_in = opts.rho0 / 2f64.powi(opts.terms as i32 - 1);
    let (c1_est, c2_est) = ellipticity_bounds(op, r_in, opts.rho0, 2 * opts.terms, opts.m)?;
    let estimate = invariant_mu(op, opts.rho0, opts.terms, opts.m, opts.tol)?;
    let mu = estimate.mu;
    let mut samples = Vec::new();
    for i in 0..opts.sample_radii {
        let rho = opts.rho0 / 2f64.powi(i as i32);
        for k in 0..opts.sample_angles {
            let theta = 2.0 * PI * k as f64 / opts.sample_angles as f64;
            samples.push(PolarSample {
                rho,
                theta,
                polar: polar_reduce(op, rho, theta)?,
                first_order: first_order_data(op, rho, theta, opts.m)?,
            });
        }
    }
    Ok(NormalizationReport { mu, lambda: C64::new(1.0, 0.0) / mu, mu_vector_field: mu.conj(), c1_est, c2_est, estimate, samples })
}

/// `X v = v_θ − ρg v_ρ` for a function of `(ρ, θ)`, by fourth-order differences with step `h`.
#[cfg(test)]
fn x_apply(g: C64, rho: f64, theta: f64, h: f64, v: &dyn Fn(f64, f64) -> C64) -> C64 {
    let d = |f: &dyn Fn(f64) -> C64, x: f64| (f(x - 2.0 * h) - f(x + 2.0 * h) + (f(x + h) - f(x - h)) * 8.0) / (12.0 * h);
    let vt = d(&|t| v(rho, t), theta);
    let vr = d(&|r| v(r, theta), rho);
    vt - g * rho * vr
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::I;

    fn perturbed() -> PlaneOperator {
        // c₁ = 1, c₂ = 4 plus cubic terms and first-order terms, so that N₁ ≠ 0 and g varies.
        PlaneOperator::from_expressions(
            "y^2 + 4*x^2 + 0.3*x^3",
            "3*x*y + 0.2*x^2 + 0.1*y^3",
            "x^2 + 4*y^2 - 0.2*x*y^2",
            "0.5*x - 0.7*y + x^2",
            "0.4*y + 0.3*x",
        )
        .unwrap()
    }

    #[test]
    fn laplacian_polar_form() {
        let d = polar_reduce(&PlaneOperator::laplacian(), 0.3, 1.1).unwrap();
        assert!((d.p - 1.0).abs() < 1e-14 && d.n.abs() < 1e-14 && (d.m - 0.09).abs() < 1e-14);
        assert!((d.m1 - 1.0).abs() < 1e-13 && d.n1.abs() < 1e-13 && (d.q1 - 1.0).abs() < 1e-13 && d.t1.abs() < 1e-13);
    }

    #[test]
    fn c1c2_polar_form_is_angle_free() {
        let op = PlaneOperator::c1c2_family(1.0, 4.0);
        for th in [0.0, 0.4, 2.0, 5.5] {
            let d = polar_reduce(&op, 0.2, th).unwrap();
            assert!((d.m1 - 4.0).abs() < 1e-13 && d.n1.abs() < 1e-13);
        }
    }

    #[test]
    fn polar_form_matches_cartesian_operator() {
        let op = perturbed();
        // u = x³y + 2xy² − y and its Cartesian derivatives.
        let u = |x: f64, y: f64| x.powi(3) * y + 2.0 * x * y * y - y;
        let du = |x: f64, y: f64| {
            [3.0 * x * x * y + 2.0 * y * y, x.powi(3) + 4.0 * x * y - 1.0, 6.0 * x * y, 3.0 * x * x + 4.0 * y, 4.0 * x]
        };
        let h = 1e-3;
        for (rho, th) in [(0.05, 0.3), (0.1, 2.2), (0.02, 4.0)] {
            let up = |r: f64, t: f64| u(r * t.cos(), r * t.sin());
            let hr = h * rho;
            let d1 = |f: &dyn Fn(f64) -> f64, x: f64, h: f64| (f(x - 2.0 * h) - f(x + 2.0 * h) + 8.0 * (f(x + h) - f(x - h))) / (12.0 * h);
            let ur = d1(&|r| up(r, th), rho, hr);
            let ut = d1(&|t| up(rho, t), th, h);
            let urr = d1(&|r| d1(&|s| up(s, th), r, hr), rho, hr);
            let utt = d1(&|t| d1(&|s| up(rho, s), t, h), th, h);
            let urt = d1(&|t| d1(&|s| up(s, t), rho, hr), th, h);
            let d = polar_reduce(&op, rho, th).unwrap();
            let polar = d.p * utt + 2.0 * d.n * urt + d.m * urr + d.q * ur + d.t * ut;
            let (x, y) = (rho * th.cos(), rho * th.sin());
            let cart = op.apply(x, y, du(x, y));
            assert!((polar - cart).abs() < 1e-8 * (1.0 + cart.abs()), "{polar} vs {cart}");
        }
    }

    #[test]
    fn first_order_decomposition_reproduces_the_operator() {
        for op in [perturbed(), PlaneOperator::model(C64::new(1.0, 0.6)), PlaneOperator::laplacian()] {
            let u = |r: f64, t: f64| C64::new((r * t.cos()).powi(2) * r * t.sin() + (r * t.sin()).powi(3) + r * t.cos(), 0.0);
            let h = 1e-3;
            for (rho, th) in [(0.05, 0.7), (0.08, 3.9)] {
                let fd = first_order_data(&op, rho, th, 33).unwrap();
                let gfn = |r: f64, t: f64| g_at(&op, r, t).unwrap().0;
                // XX̄u + X̄Xu + 2Re(B Xu), with X̄ = ∂θ − ρḡ∂ρ.
                let xbar_u = |r: f64, t: f64| x_apply(gfn(r, t).conj(), r, t, h * r.min(rho), &u);
                let x_u = |r: f64, t: f64| x_apply(gfn(r, t), r, t, h * r.min(rho), &u);
                let g = gfn(rho, th);
                let hh = 1e-2;
                let xxbar = x_apply(g, rho, th, hh * rho, &xbar_u);
                let xbarx = x_apply(g.conj(), rho, th, hh * rho, &x_u);
                let xu = x_u(rho, th);
                let rhs = xxbar + xbarx + fd.b * xu + (fd.b * xu).conj();
                // 2𝔻u/P from the polar form.
                let d = polar_reduce(&op, rho, th).unwrap();
                let d1 = |f: &dyn Fn(f64) -> f64, x: f64, h: f64| (f(x - 2.0 * h) - f(x + 2.0 * h) + 8.0 * (f(x + h) - f(x - h))) / (12.0 * h);
                let up = |r: f64, t: f64| u(r, t).re;
                let hr = h * rho;
                let ur = d1(&|r| up(r, th), rho, hr);
                let ut = d1(&|t| up(rho, t), th, h);
                let urr = d1(&|r| d1(&|s| up(s, th), r, hr), rho, hr);
                let utt = d1(&|t| d1(&|s| up(rho, s), t, h), th, h);
                let urt = d1(&|t| d1(&|s| up(s, t), rho, hr), th, h);
                let lhs = 2.0 * (utt + 2.0 * rho * d.n1 * urt + rho * rho * d.m1 * urr + rho * d.q1 * ur + d.t1 * ut);
                assert!((rhs - lhs).norm() < 1e-5 * (1.0 + lhs.abs()), "{rhs} vs {lhs}");
            }
        }
    }

    #[test]
    fn laplacian_first_order_data() {
        let fd = first_order_data(&PlaneOperator::laplacian(), 0.1, 0.5, 17).unwrap();
        assert!((fd.g - I).norm() < 1e-12);
        assert!((fd.f + 1.0).norm() < 1e-9);
        assert!(fd.b.norm() < 1e-9);
        let fd = first_order_data(&PlaneOperator::c1c2_family(1.0, 4.0), 0.1, 0.5, 17).unwrap();
        assert!((fd.g - 2.0 * I).norm() < 1e-12);
    }

    #[test]
    fn model_pushforward() {
        let lam = C64::new(1.3, -0.7);
        let op = PlaneOperator::model(lam);
        let d = polar_reduce(&op, 0.05, 1.0).unwrap();
        let l2 = lam.norm_sqr();
        assert!((d.n1 + lam.im / l2).abs() < 1e-12);
        assert!((d.m1 - 1.0 / l2).abs() < 1e-12);
        assert!((d.q1 - 1.0 / l2).abs() < 1e-12 && d.t1.abs() < 1e-12);
        let rep = normalize(&op, NormalizeOptions::default()).unwrap();
        assert!((rep.mu.norm() - 1.0 / lam.norm()).abs() < 1e-10);
        assert!((rep.mu.re - lam.re / l2).abs() < 1e-10);
        // With this orientation the circle average is 1/λ̄; the vector field X = L/λ gives 1/λ.
        assert!((rep.mu - C64::new(1.0, 0.0) / lam.conj()).norm() < 1e-10);
        assert!((rep.mu_vector_field - C64::new(1.0, 0.0) / lam).norm() < 1e-10);
        for s in &rep.samples {
            assert!((s.first_order.g - I / lam).norm() < 1e-10);
        }
    }

    #[test]
    fn mu_examples_and_invariance() {
        let lap = normalize(&PlaneOperator::laplacian(), NormalizeOptions::default()).unwrap();
        assert!((lap.mu - 1.0).norm() < 1e-8);
        assert!((lap.c1_est - 1.0).abs() < 1e-12 && (lap.c2_est - 1.0).abs() < 1e-12);
        let fam = PlaneOperator::c1c2_family(1.0, 4.0);
        let rep = normalize(&fam, NormalizeOptions::default()).unwrap();
        assert!((rep.mu - 2.0).norm() < 1e-8 && (rep.lambda - 0.5).norm() < 1e-8);
        assert!((rep.c1_est - 4.0).abs() < 1e-12 && (rep.c2_est - 4.0).abs() < 1e-12);

        let op = perturbed();
        let base = invariant_mu(&op, 0.1, 4, 65, 1e-6).unwrap();
        let scaled = invariant_mu(&op.scaled(5.0), 0.1, 4, 65, 1e-6).unwrap();
        assert!((base.mu - scaled.mu).norm() < 1e-12);
        let rotated = invariant_mu(&op.rotated(0.9), 0.1, 4, 65, 1e-6).unwrap();
        assert!((base.mu - rotated.mu).norm() < 1e-8, "{} vs {}", base.mu, rotated.mu);
        // The rotation leaves the discriminant samples in place, up to the moved angle.
        let d0 = polar_reduce(&op, 0.05, 0.3).unwrap();
        let d1 = polar_reduce(&op.rotated(0.9), 0.05, 1.2).unwrap();
        assert!(((d0.m1 - d0.n1 * d0.n1) - (d1.m1 - d1.n1 * d1.n1)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_operators_are_rejected() {
        let bad = PlaneOperator::from_expressions("(x^2+y^2)*cos(3*theta)", "0", "x^2+y^2", "0", "0").unwrap();
        assert!(matches!(ellipticity_bounds(&bad, 0.01, 0.1, 4, 32), Err(DcError::Invariant(_))));
        let flat = PlaneOperator::from_expressions("x^2", "0", "x^2", "0", "0").unwrap();
        assert!(ellipticity_bounds(&flat, 0.01, 0.1, 4, 32).is_err());
    }
}
