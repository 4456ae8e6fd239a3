//! Basic solutions `w = r^σ φ(t) + conj(r^σ ψ(t))`, their winding numbers and
//! characters, adjoint basic solutions and the large-`|j|` asymptotic forms.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{DcError, Result};
use crate::floquet::coefficient_matrix;
use crate::hill::hill_matrix;
use crate::operator::OperatorSpec;
use crate::periodic::{PeriodicFunction, C64, I};
use crate::spectrum::{find_spectral_values, real_basis, Branch, ModeData, SpectralValue};

/// Winding number of a nonvanishing periodic function.
///
/// The argument is unwrapped on the sample grid, refined until consecutive
/// samples differ in argument by less than `π/2`.
pub fn winding_number(f: &PeriodicFunction) -> Result<i64> {
    winding_with_threshold(f, 1e-10)
}

pub fn winding_with_threshold(f: &PeriodicFunction, threshold: f64) -> Result<i64> {
    let scale = f.max_abs();
    if scale == 0.0 || f.min_abs() <= threshold * scale {
        return Err(DcError::Numeric(format!(
            "winding number is indeterminate: min |f| = {:.3e}",
            f.min_abs()
        )));
    }
    let mut g = f.clone();
    for _ in 0..6 {
        let s = g.samples();
        let m = s.len();
        let mut total = 0.0;
        let mut coarse = false;
        for k in 0..m {
            let d = (s[(k + 1) % m] / s[k]).arg();
            if d.abs() > PI / 2.0 {
                coarse = true;
                break;
            }
            total += d;
        }
        if !coarse {
            let w = total / (2.0 * PI);
            let n = w.round();
            if (w - n).abs() > 0.1 {
                return Err(DcError::Numeric(format!("winding defect {:.3}", (w - n).abs())));
            }
            return Ok(n as i64);
        }
        g = g.resample(4 * g.len() + 1);
    }
    Err(DcError::Numeric("winding number did not resolve on refined grids".into()))
}

/// Which component of `(φ, ψ)` dominates pointwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Dominant {
    Phi,
    Psi,
    /// Real exponent: `w = r^σ f` with `f = φ + ψ̄`.
    Real,
}

/// `Phi` if `|φ| > |ψ|` at every node, `Psi` if the reverse, `None` otherwise.
pub fn dominance(phi: &PeriodicFunction, psi: &PeriodicFunction) -> Option<Dominant> {
    let m = phi.len().max(psi.len());
    let (a, b) = (phi.samples_on(m), psi.samples_on(m));
    if a.iter().zip(&b).all(|(x, y)| x.norm() > y.norm()) {
        Some(Dominant::Phi)
    } else if a.iter().zip(&b).all(|(x, y)| x.norm() < y.norm()) {
        Some(Dominant::Psi)
    } else {
        None
    }
}

/// Odd grid size of at least `8·(n + 1)`, enough to unwrap a function of band limit `n`.
pub fn winding_grid(n: i64) -> usize {
    (8 * (n.unsigned_abs() as usize + 1)) | 1
}

/// A basic solution of `ℒ_ε` or, when `adjoint`, of `ℒ*_ε` (then `φ, ψ` hold `X, Z`).
#[derive(Clone, Debug, Serialize)]
pub struct BasicSolution {
    pub sigma: C64,
    pub branch: Branch,
    #[serde(skip)]
    pub phi: PeriodicFunction,
    #[serde(skip)]
    pub psi: PeriodicFunction,
    /// Winding number: `Ind φ`, `Ind ψ̄` or `Ind f` according to `dominant`.
    pub j: i64,
    pub dominant: Dominant,
    /// Real exponent with a two-dimensional solution space.
    pub double: bool,
    pub adjoint: bool,
    #[serde(skip)]
    pub data: ModeData,
}

impl BasicSolution {
    fn from_data(sigma: C64, branch: Branch, data: ModeData, real: bool, double: bool, adjoint: bool) -> Result<Self> {
        let m = winding_grid(data.band() + 1);
        let (phi, psi) = data.functions(m)?;
        let (dominant, j) = if real {
            (Dominant::Real, winding_number(&phi)?)
        } else {
            match dominance(&phi, &psi) {
                Some(Dominant::Phi) => (Dominant::Phi, winding_number(&phi)?),
                Some(_) => (Dominant::Psi, winding_number(&psi.conj())?),
                None => {
                    return Err(DcError::Invariant(format!(
                        "|φ| − |ψ| changes sign for the solution at σ = {sigma}"
                    )))
                }
            }
        };
        Ok(Self { sigma, branch, phi, psi, j, dominant, double, adjoint, data })
    }

    pub fn is_real(&self) -> bool {
        self.dominant == Dominant::Real
    }

    /// `r^σ`.
    pub fn r_pow(&self, r: f64) -> C64 {
        (self.sigma * r.ln()).exp()
    }

    /// `(φ(t), ψ(t))` from the coefficients.
    pub fn components_at(&self, t: f64) -> (C64, C64) {
        let e = C64::from_polar(1.0, t);
        let mut z = C64::from_polar(1.0, self.data.lo as f64 * t);
        let (mut p, mut q) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (a, b) in self.data.phi.iter().zip(&self.data.psi) {
            p += a * z;
            q += b * z;
            z *= e;
        }
        (p, q)
    }

    pub fn eval(&self, r: f64, t: f64) -> C64 {
        let (p, q) = self.components_at(t);
        let s = self.r_pow(r);
        s * p + (s * q).conj()
    }

    /// `w(r, ·)` on an `m`-point grid.
    pub fn row(&self, r: f64, m: usize) -> Vec<C64> {
        let s = self.r_pow(r);
        self.phi
            .samples_on(m)
            .iter()
            .zip(self.psi.samples_on(m))
            .map(|(p, q)| s * p + (s * q).conj())
            .collect()
    }

    /// `min_t |w(r, t)|` on an `m`-point grid.
    pub fn min_modulus(&self, r: f64, m: usize) -> f64 {
        self.row(r, m).iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }
}

/// The basic solution of `sv` on `branch`: `φ⁺(0) = 1`, `φ⁻(0) = i`; for real `σ` the pair `(f/2, f̄/2)`.
pub fn basic_solution(spec: &OperatorSpec, sv: &SpectralValue, branch: Branch) -> Result<BasicSolution> {
    if sv.defective {
        return Err(DcError::Numeric(format!(
            "σ = {} is a Jordan-block double root on this branch and has no basic solution",
            sv.sigma
        )));
    }
    let double = sv.multiplicity == 2;
    let data = match (&sv.solution, sv.branch == branch) {
        (Some(d), true) => d.clone(),
        // Complex values: the two branches differ by the factor i.
        (Some(d), false) if !sv.is_real => d.scaled(if branch == Branch::Minus { I } else { -I }),
        _ => {
            let w = find_spectral_values(spec, sv.j, sv.j, 1e-6)?;
            let other = w
                .get(sv.j, branch)
                .filter(|v| (v.sigma - sv.sigma).norm() <= 1e-8 * (1.0 + sv.sigma.norm()) || !double)
                .ok_or_else(|| DcError::Numeric(format!("no ({}, {}) entry near σ = {}", sv.j, branch.sign(), sv.sigma)))?;
            if other.defective {
                return Err(DcError::Numeric(format!("({}, {}) has no basic solution", sv.j, branch.sign())));
            }
            other.solution.clone().ok_or_else(|| DcError::Numeric("entry carries no solution data".into()))?
        }
    };
    BasicSolution::from_data(sv.sigma, branch, data, sv.is_real, double, false)
}

/// `Char(w)`: `(σ, Ind φ)`, `(σ̄, Ind ψ̄)` or, for real `σ`, `(σ, Ind f)`.
pub fn character(w: &BasicSolution) -> Result<(C64, i64)> {
    match w.dominant {
        Dominant::Real => Ok((w.sigma, winding_number(&w.phi)?)),
        _ => match dominance(&w.phi, &w.psi) {
            Some(Dominant::Phi) => Ok((w.sigma, winding_number(&w.phi)?)),
            Some(_) => Ok((w.sigma.conj(), winding_number(&w.psi.conj())?)),
            None => Err(DcError::Invariant(format!("|φ| − |ψ| changes sign at σ = {}", w.sigma))),
        },
    }
}

/// `−(1/2π) Re ∫ i w*(R,θ) w(R,θ) dθ` by the trapezoid rule on `m` nodes.
pub fn pairing(w_star: &BasicSolution, w: &BasicSolution, r: f64, m: usize) -> f64 {
    let a = w_star.row(r, m);
    let b = w.row(r, m);
    let s: C64 = a.iter().zip(&b).map(|(x, y)| I * x * y).sum();
    -s.re / m as f64
}

/// `−i Σ_n (φ_n X_{−n} − ψ_n Z_{−n})`, the complex pairing of coefficient data.
fn complex_pairing(v: &ModeData, y: &ModeData) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for (i, (p, q)) in v.phi.iter().zip(&v.psi).enumerate() {
        let n = v.lo + i as i64;
        let k = -n - y.lo;
        if k >= 0 && (k as usize) < y.phi.len() {
            s += p * y.phi[k as usize] - q * y.psi[k as usize];
        }
    }
    -I * s
}

/// `Re[−i Σ_n f_n g_{−n}]` for coefficient vectors on symmetric ranges.
fn real_pairing(f: &[C64], g: &[C64]) -> f64 {
    let (nf, ng) = ((f.len() as i64 - 1) / 2, (g.len() as i64 - 1) / 2);
    let mut s = C64::new(0.0, 0.0);
    for (i, x) in f.iter().enumerate() {
        let n = i as i64 - nf;
        let k = -n + ng;
        if k >= 0 && (k as usize) < g.len() {
            s += x * g[k as usize];
        }
    }
    (-I * s).re
}

fn edge_share(x: &DVector<C64>, n: usize) -> f64 {
    let total: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    let edge: f64 = [0, 1, 2, 3, n - 4, n - 3, n - 2, n - 1, n, n + 1, n + 2, n + 3, 2 * n - 4, 2 * n - 3, 2 * n - 2, 2 * n - 1]
        .iter()
        .map(|i| x[*i].norm_sqr())
        .sum();
    edge / total
}

fn to_data(x: &DVector<C64>, lo: i64) -> ModeData {
    let n = x.len() / 2;
    ModeData { lo, phi: x.rows(0, n).iter().copied().collect(), psi: x.rows(n, n).iter().copied().collect() }
}

/// Kernel vectors of the adjoint truncation at `μ` on `[lo, hi]`.
fn adjoint_kernel(spec: &OperatorSpec, mu: C64, lo: i64, hi: i64, real: bool) -> Result<Vec<ModeData>> {
    let h = hill_matrix(spec, lo, hi, true)?;
    let dim = h.nrows();
    let n = dim / 2;
    let scale = 1.0 + mu.norm();
    let mut a = h.clone();
    for i in 0..dim {
        a[(i, i)] -= mu;
    }
    let vecs: Vec<DVector<C64>> = if real {
        let svd = a.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| DcError::Numeric("SVD failed".into()))?;
        let smax = svd.singular_values.max();
        (0..dim)
            .filter(|i| svd.singular_values[*i] <= 1e-8 * smax.max(scale))
            .map(|i| vt.row(i).transpose().map(|z| z.conj()))
            .collect()
    } else {
        // Inverse iteration with a tiny shift off the eigenvalue.
        let shift = C64::new(1.0, 1.0) * (1e-11 * scale);
        let mut b = a.clone();
        for i in 0..dim {
            b[(i, i)] -= shift;
        }
        let lu = b.lu();
        let mut x = DVector::<C64>::from_fn(dim, |i, _| C64::new(1.0, 0.3 * i as f64 / dim as f64));
        for _ in 0..3 {
            x = lu.solve(&x).ok_or_else(|| DcError::Numeric("inverse iteration failed".into()))?;
            let nx = x.norm();
            x /= C64::from(nx);
        }
        let res = (&a * &x).norm();
        if res > 1e-6 * scale {
            return Err(DcError::Numeric(format!("no adjoint eigenvector at μ = {mu} (residual {res:.2e})")));
        }
        vec![x]
    };
    if vecs.is_empty() {
        return Err(DcError::Numeric(format!("adjoint truncation has no kernel at μ = {mu}")));
    }
    for v in &vecs {
        if edge_share(v, n) > 1e-16 {
            return Err(DcError::Numeric(format!("adjoint solution at μ = {mu} is not resolved by [{lo}, {hi}]")));
        }
    }
    Ok(vecs.iter().map(|v| to_data(v, lo)).collect())
}

/// Adjoint basic solutions paired with `sols`, which must share one exponent.
///
/// The result is biorthonormal: the coefficient pairing of `w*_{−j}^s` against `w_j^{s'}` is `δ_{ss'}`.
pub fn adjoint_basis(spec: &OperatorSpec, sols: &[&BasicSolution]) -> Result<Vec<BasicSolution>> {
    let first = sols.first().ok_or_else(|| DcError::InvalidInput("no solutions to pair".into()))?;
    if sols.iter().any(|w| w.adjoint || (w.sigma - first.sigma).norm() > 1e-8 * (1.0 + first.sigma.norm())) {
        return Err(DcError::InvalidInput("adjoint pairing needs direct solutions with one exponent".into()));
    }
    let mu = -first.sigma;
    let lo = sols.iter().map(|w| -w.data.hi()).min().unwrap_or(0);
    let hi = sols.iter().map(|w| -w.data.lo).max().unwrap_or(0);
    let mut out = Vec::new();
    if !first.is_real() {
        let y = adjoint_kernel(spec, mu, lo, hi, false)?.remove(0);
        for w in sols {
            let plus = if w.branch == Branch::Plus { w.data.clone() } else { w.data.scaled(-I) };
            let b = complex_pairing(&plus, &y);
            if b.norm() < 1e-12 {
                return Err(DcError::Numeric(format!("degenerate adjoint pairing at σ = {}", w.sigma)));
            }
            let alpha = -I / b;
            let s = if w.branch == Branch::Plus { I * alpha } else { alpha };
            out.push(BasicSolution::from_data(mu, w.branch, y.scaled(s), false, false, true)?);
        }
        return Ok(out);
    }
    let ys = adjoint_kernel(spec, mu, lo, hi, true)?;
    let mut cands = Vec::new();
    for y in &ys {
        cands.push(y.real_part_function());
        cands.push(y.scaled(I).real_part_function());
    }
    let gs = real_basis(&cands);
    let fs: Vec<Vec<C64>> = sols.iter().map(|w| w.data.real_part_function()).collect();
    let (e, d) = (gs.len(), fs.len());
    if e < d {
        return Err(DcError::Numeric(format!("adjoint space at μ = {mu} has dimension {e} < {d}")));
    }
    // Q[a, s] = P(g_a, f_s); find α^s with Qᵀα^s = e_s, minimal norm when e > d.
    let q = DMatrix::<f64>::from_fn(e, d, |a, s| real_pairing(&fs[s], &gs[a]));
    let qtq = q.transpose() * &q;
    let inv = qtq.try_inverse().ok_or_else(|| DcError::Numeric(format!("singular adjoint pairing at μ = {mu}")))?;
    let coef = &q * inv;
    let len = gs.iter().map(|g| g.len()).max().unwrap_or(1);
    for (s, w) in sols.iter().enumerate() {
        let mut g = vec![C64::new(0.0, 0.0); len];
        for (a, ga) in gs.iter().enumerate() {
            let off = (len - ga.len()) / 2;
            for (i, z) in ga.iter().enumerate() {
                g[off + i] += z * coef[(a, s)];
            }
        }
        out.push(BasicSolution::from_data(mu, w.branch, ModeData::from_real_function(&g), true, w.double, true)?);
    }
    Ok(out)
}

/// The adjoint basic solution with character `(−σ, −j)` paired with `w`.
pub fn adjoint_basic_solution(spec: &OperatorSpec, w: &BasicSolution) -> Result<BasicSolution> {
    if w.adjoint {
        return Err(DcError::InvalidInput("expected a basic solution of ℒ, got one of ℒ*".into()));
    }
    if w.double {
        let win = find_spectral_values(spec, w.j, w.j, 1e-6)?;
        let other_branch = if w.branch == Branch::Plus { Branch::Minus } else { Branch::Plus };
        let sv = win
            .get(w.j, other_branch)
            .ok_or_else(|| DcError::Numeric(format!("partner of ({}, {}) not found", w.j, w.branch.sign())))?;
        let partner = basic_solution(spec, sv, other_branch)?;
        let mut pair = adjoint_basis(spec, &[w, &partner])?;
        return Ok(pair.remove(0));
    }
    Ok(adjoint_basis(spec, &[w])?.remove(0))
}

/// `k(t) = (1/λ)[γt − (1/2a)∫₀ᵗ|c|²]` on `m` nodes.
pub fn k_function(spec: &OperatorSpec, m: usize) -> PeriodicFunction {
    let c = spec.c.resample(m);
    let c2 = c.map(|z| C64::new(z.norm_sqr(), 0.0));
    let p = c2.primitive_zero_mean();
    let p0 = p.eval(0.0);
    let k = C64::new(-1.0 / (2.0 * spec.a), 0.0) / spec.lambda();
    p.map(|z| (z - p0) * k)
}

fn asymptotic_grid(spec: &OperatorSpec, j: i64) -> usize {
    winding_grid(j.abs() + 2 * spec.c_bandwidth() + 2)
}

/// `φ_j ≈ e^{ijt}(1 + ik(t)/j)`, `ψ_j ≈ −i e^{ijt} c̄(t)/(2aj)`.
pub fn asymptotic_forms(spec: &OperatorSpec, j: i64) -> Result<(PeriodicFunction, PeriodicFunction)> {
    check_asymptotic_index(spec, j)?;
    let m = asymptotic_grid(spec, j);
    let k = k_function(spec, m);
    let e = PeriodicFunction::from_modes(m, &[(j, C64::new(1.0, 0.0))])?;
    let jf = j as f64;
    let phi = e.mul(&k.map(|z| 1.0 + I * z / jf));
    let psi = e.mul(&spec.c.resample(m).conj()).scale(-I / (2.0 * spec.a * jf));
    Ok((phi, psi))
}

/// `X_{−j} ≈ e^{−ijt}(1 − ik(t)/j)`, `Z_{−j} ≈ −i e^{−ijt} c(t)/(2aj)`.
pub fn adjoint_asymptotic_forms(spec: &OperatorSpec, j: i64) -> Result<(PeriodicFunction, PeriodicFunction)> {
    check_asymptotic_index(spec, j)?;
    let m = asymptotic_grid(spec, j);
    let k = k_function(spec, m);
    let e = PeriodicFunction::from_modes(m, &[(-j, C64::new(1.0, 0.0))])?;
    let jf = j as f64;
    let x = e.mul(&k.map(|z| 1.0 - I * z / jf));
    let z = e.mul(&spec.c.resample(m)).scale(-I / (2.0 * spec.a * jf));
    Ok((x, z))
}

fn check_asymptotic_index(spec: &OperatorSpec, j: i64) -> Result<()> {
    let j0 = crate::spectrum::asymptotic_threshold(spec);
    if j.abs() < j0 {
        return Err(DcError::InvalidInput(format!("asymptotic forms need |j| ≥ {j0}, got {j}")));
    }
    Ok(())
}

/// `max_t |v' − M(t)v| / ((1 + |σ/λ|)·max|v|)` for `v = (φ, ψ)` on the solution grid.
pub fn system_residual(spec: &OperatorSpec, w: &BasicSolution) -> f64 {
    let m = w.phi.len();
    let (dp, dq) = (w.phi.derivative(), w.psi.derivative());
    let (p, q) = (w.phi.samples(), w.psi.samples());
    let ts = crate::periodic::nodes(m);
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for k in 0..m {
        let a = coefficient_matrix(spec, w.sigma, ts[k], w.adjoint);
        let r1 = dp.samples()[k] - (a[(0, 0)] * p[k] + a[(0, 1)] * q[k]);
        let r2 = dq.samples()[k] - (a[(1, 0)] * p[k] + a[(1, 1)] * q[k]);
        worst = worst.max(r1.norm()).max(r2.norm());
        size = size.max(p[k].norm()).max(q[k].norm());
    }
    worst / ((1.0 + (w.sigma / spec.lambda()).norm()) * size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SingleMode;

    #[test]
    fn winding_of_exponentials() {
        let f = PeriodicFunction::from_modes(33, &[(5, C64::new(1.0, 0.0))]).unwrap();
        assert_eq!(winding_number(&f).unwrap(), 5);
        let one = PeriodicFunction::constant(5, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(winding_number(&one).unwrap(), 0);
        let g = PeriodicFunction::from_modes(7, &[(-2, I), (1, C64::new(0.1, 0.0))]).unwrap();
        assert_eq!(winding_number(&g).unwrap(), -2);
    }

    #[test]
    fn winding_refines_coarse_grids() {
        let f = PeriodicFunction::from_modes(13, &[(6, C64::new(1.0, 0.0)), (0, C64::new(0.2, 0.0))]).unwrap();
        assert_eq!(winding_number(&f).unwrap(), 6);
    }

    #[test]
    fn vanishing_function_is_rejected() {
        let f = PeriodicFunction::from_modes(9, &[(1, C64::new(1.0, 0.0)), (0, C64::new(1.0, 0.0))]).unwrap();
        // 1 + e^{it} vanishes at t = π, which is not a node of a 9-point grid,
        // but the minimum over a refined grid is tiny.
        let fine = f.resample(9 * 101);
        assert!(winding_number(&fine).is_err());
    }

    #[test]
    fn decoupled_basic_and_adjoint_solutions() {
        let spec = OperatorSpec::decoupled(1.0, 1.0, 0.0, 1.0).unwrap();
        let win = find_spectral_values(&spec, 2, 2, 1e-8).unwrap();
        let sv = win.get(2, Branch::Plus).unwrap();
        let w = basic_solution(&spec, sv, Branch::Plus).unwrap();
        assert_eq!(character(&w).unwrap().1, 2);
        assert!((w.eval(1.0, 0.3) - C64::from_polar(1.0, 0.6)).norm() < 1e-12);
        let ws = adjoint_basic_solution(&spec, &w).unwrap();
        assert_eq!(character(&ws).unwrap(), (-sv.sigma, -2));
        // X⁺ = i e^{−2it}.
        assert!((ws.components_at(0.0).0 - I).norm() < 1e-12);
        assert!((pairing(&ws, &w, 0.7, 33) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_mode_pairing_is_biorthonormal_and_radius_free() {
        let ex = SingleMode::new(1.0, 1.0, C64::new(1.0, 0.5), 1, 0.5).unwrap();
        let spec = ex.spec().unwrap();
        let win = find_spectral_values(&spec, -3, 3, 1e-8).unwrap();
        for j in -3..=3 {
            let ws: Vec<BasicSolution> =
                win.at(j).iter().map(|sv| basic_solution(&spec, sv, sv.branch).unwrap()).collect();
            for w in &ws {
                assert!(system_residual(&spec, w) < 1e-10, "j={j}");
                let star = adjoint_basic_solution(&spec, w).unwrap();
                assert_eq!(character(&star).unwrap().1, -j);
                for v in &ws {
                    let want = if v.branch == w.branch { 1.0 } else { 0.0 };
                    for r in [0.5, 1.7] {
                        let p = pairing(&star, v, r, 129);
                        if (v.sigma - w.sigma).norm() < 1e-9 {
                            assert!((p - want).abs() < 1e-9, "j={j} r={r} p={p}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn asymptotic_forms_match_the_closed_form() {
        let ex = SingleMode::new(1.0, 1.0, C64::new(0.5, 0.0), 1, 1.0).unwrap();
        let spec = ex.spec().unwrap();
        let gap = |j: i64| {
            let (phi, psi) = ex.solution(j, asymptotic_grid(&spec, j)).unwrap();
            let (pa, qa) = asymptotic_forms(&spec, j).unwrap();
            phi.sup_distance(&pa).max(psi.sup_distance(&qa))
        };
        let (g1, g2) = (gap(32), gap(64));
        let slope = (g2 / g1).log2();
        assert!((slope + 2.0).abs() < 0.3, "g32={g1:e} g64={g2:e}");
    }
}
