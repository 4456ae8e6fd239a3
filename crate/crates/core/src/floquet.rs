//! Fundamental and monodromy matrices of the periodic systems
//!
//! ```text
//! φ' = i(σ − λν)φ/λ + cψ/λ          X' =  i(μ + λν)X/λ − c̄Z/λ
//! ψ' = −i(σ − λ̄ν)ψ/λ̄ + c̄φ/λ̄        Z' = −i(μ + λ̄ν)Z/λ̄ − cX/λ̄
//! ```
//!
//! integrated jointly with their σ-derivative by an adaptive Dormand–Prince
//! 5(4) pair.

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::error::{DcError, Result};
use crate::operator::OperatorSpec;
use crate::periodic::{eval_modes, C64, I};

pub type Mat2 = Matrix2<C64>;

/// `M(t, σ, ε)` of the direct system, or `M̃(t, μ, ε)` of the adjoint one.
pub fn coefficient_matrix(spec: &OperatorSpec, sigma: C64, t: f64, adjoint: bool) -> Mat2 {
    coefficient_from_c(spec.lambda(), spec.nu, spec.c_at(t), sigma, adjoint)
}

fn coefficient_from_c(lam: C64, nu: f64, c: C64, sigma: C64, adjoint: bool) -> Mat2 {
    let lb = lam.conj();
    if adjoint {
        Mat2::new(
            I * (sigma + lam * nu) / lam,
            -c.conj() / lam,
            -c / lb,
            -I * (sigma + lb * nu) / lb,
        )
    } else {
        Mat2::new(I * (sigma - lam * nu) / lam, c / lam, c.conj() / lb, -I * (sigma - lb * nu) / lb)
    }
}

/// `∂M/∂σ`, independent of `t` and the same for both systems.
fn coefficient_sigma(lam: C64) -> Mat2 {
    Mat2::new(I / lam, C64::new(0.0, 0.0), C64::new(0.0, 0.0), -I / lam.conj())
}

struct Variational {
    lam: C64,
    nu: f64,
    modes: Vec<(i64, C64)>,
    sigma: C64,
    adjoint: bool,
    m_sigma: Mat2,
}

/// `(V, V_σ)`.
type State = (Mat2, Mat2);

impl Variational {
    fn at(&self, t: f64) -> Mat2 {
        coefficient_from_c(self.lam, self.nu, eval_modes(&self.modes, t), self.sigma, self.adjoint)
    }

    fn rhs(&self, m: &Mat2, y: &State) -> State {
        (m * y.0, m * y.1 + self.m_sigma * y.0)
    }

    /// Bound on `‖M(t)‖` used to pick the step.
    fn scale(&self) -> f64 {
        let c: f64 = self.modes.iter().map(|(_, c)| c.norm()).sum();
        let d = (self.sigma.norm() + self.lam.norm() * self.nu) / self.lam.norm();
        d + c / self.lam.norm() + 1.0
    }
}

#[derive(Clone, Debug)]
pub struct FundamentalMatrix {
    pub sigma: C64,
    pub epsilon: f64,
    pub adjoint: bool,
    pub nodes: Vec<f64>,
    pub v: Vec<Mat2>,
    pub v_sigma: Vec<Mat2>,
}

#[derive(Clone, Debug)]
pub struct Monodromy {
    pub sigma: C64,
    pub epsilon: f64,
    pub b: Mat2,
    pub b_sigma: Mat2,
}

fn initial_state() -> State {
    (Mat2::identity(), Mat2::zeros())
}

fn make_system(spec: &OperatorSpec, sigma: C64, adjoint: bool) -> Variational {
    let lam = spec.lambda();
    Variational {
        lam,
        nu: spec.nu,
        modes: spec.c_modes().to_vec(),
        sigma,
        adjoint,
        m_sigma: coefficient_sigma(lam),
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(DcError::InvalidInput(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    Ok(())
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (w, k) in terms {
        if *w != 0.0 {
            let s = C64::from(w * h);
            out.0 += k.0 * s;
            out.1 += k.1 * s;
        }
    }
    out
}

fn entries(y: &State) -> impl Iterator<Item = &C64> {
    y.0.iter().chain(y.1.iter())
}

/// Adaptive Dormand–Prince 5(4) on `[t0, t1]`, relative and absolute tolerance `tol`.
fn run(sys: &Variational, t0: f64, t1: f64, y0: State, tol: f64) -> Result<State> {
    const MAX_STEPS: usize = 2_000_000;
    let mut t = t0;
    let mut y = y0;
    let mut h = ((t1 - t0) * 0.5).min(0.1 * tol.powf(0.2) / sys.scale());
    let mut k1 = sys.rhs(&sys.at(t), &y);
    for _ in 0..MAX_STEPS {
        if t >= t1 {
            break;
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let mut k = [k1, k1, k1, k1, k1, k1, k1];
        for s in 1..7 {
            let terms: Vec<(f64, &State)> = (0..s).map(|q| (A[s][q], &k[q])).collect();
            let ys = axpy(&y, &terms, h);
            k[s] = sys.rhs(&sys.at(t + C[s] * h), &ys);
        }
        // Row 6 of A holds the fifth-order weights, so stage 7 is evaluated at the new point.
        let terms: Vec<(f64, &State)> = (0..6).map(|q| (A[6][q], &k[q])).collect();
        let y_new = axpy(&y, &terms, h);
        let terms: Vec<(f64, &State)> = (0..7).map(|q| (E[q], &k[q])).collect();
        let err_vec = axpy(&(Mat2::zeros(), Mat2::zeros()), &terms, h);
        let mut acc = 0.0;
        for ((e, a), b) in entries(&err_vec).zip(entries(&y)).zip(entries(&y_new)) {
            let sc = tol * (1.0 + a.norm().max(b.norm()));
            acc += (e.norm() / sc).powi(2);
        }
        let err = (acc / 8.0).sqrt();
        if !err.is_finite() {
            return Err(DcError::Numeric(format!("fundamental matrix overflowed at σ = {}", sys.sigma)));
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k[6];
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * (t1 - t0) {
            return Err(DcError::Numeric(format!("step size underflow at t = {t}, σ = {}", sys.sigma)));
        }
    }
    if t < t1 {
        return Err(DcError::Numeric(format!(
            "step budget exhausted at t = {t}, σ = {}; use the Galerkin solver for large |σ|",
            sys.sigma
        )));
    }
    Ok(y)
}

/// Fundamental matrix at the nodes `2πk/m`, `k = 0..=m`, with its σ-derivative.
pub fn fundamental_matrix_on(
    spec: &OperatorSpec,
    sigma: C64,
    tol: f64,
    m: usize,
    adjoint: bool,
) -> Result<FundamentalMatrix> {
    check_tol(tol)?;
    if m == 0 {
        return Err(DcError::InvalidInput("need at least one segment".into()));
    }
    let nodes: Vec<f64> = (0..=m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    let sys = make_system(spec, sigma, adjoint);
    let mut y = initial_state();
    let mut v = vec![Mat2::identity()];
    let mut v_sigma = vec![Mat2::zeros()];
    for w in nodes.windows(2) {
        y = run(&sys, w[0], w[1], y, tol)?;
        v.push(y.0);
        v_sigma.push(y.1);
    }
    Ok(FundamentalMatrix { sigma, epsilon: spec.epsilon, adjoint, nodes, v, v_sigma })
}

/// Fundamental matrix on the default 64-segment grid.
pub fn fundamental_matrix(spec: &OperatorSpec, sigma: C64, tol: f64) -> Result<FundamentalMatrix> {
    fundamental_matrix_on(spec, sigma, tol, 64, false)
}

pub fn monodromy(spec: &OperatorSpec, sigma: C64, tol: f64) -> Result<Monodromy> {
    monodromy_of(spec, sigma, tol, false)
}

/// Monodromy of the direct (`adjoint = false`) or adjoint system.
pub fn monodromy_of(spec: &OperatorSpec, sigma: C64, tol: f64, adjoint: bool) -> Result<Monodromy> {
    check_tol(tol)?;
    let sys = make_system(spec, sigma, adjoint);
    let (b, b_sigma) = run(&sys, 0.0, 2.0 * PI, initial_state(), tol)?;
    Ok(Monodromy { sigma, epsilon: spec.epsilon, b, b_sigma })
}

/// `exp(2bεσt/|λ_ε|²)`, the Liouville–Jacobi value of `det V(t)`.
pub fn liouville_det(spec: &OperatorSpec, sigma: C64, t: f64) -> C64 {
    let lam = spec.lambda();
    (sigma * (2.0 * lam.im * t / lam.norm_sqr())).exp()
}

const D: [f64; 2] = [1.0, -1.0];

fn d_conj_d(m: &Mat2) -> Mat2 {
    Mat2::from_fn(|i, j| m[(i, j)].conj() * (D[i] * D[j]))
}

/// `Ṽ(t, −σ̄, −ε) = D V̄(t, σ, ε) D`, `D = diag(1, −1)`.
pub fn adjoint_transform(v: &FundamentalMatrix) -> FundamentalMatrix {
    FundamentalMatrix {
        sigma: -v.sigma.conj(),
        epsilon: -v.epsilon,
        adjoint: !v.adjoint,
        nodes: v.nodes.clone(),
        v: v.v.iter().map(d_conj_d).collect(),
        // d/dμ of D conj(V(−μ̄)) D is −D conj(V_σ) D.
        v_sigma: v.v_sigma.iter().map(|m| -d_conj_d(m)).collect(),
    }
}

/// `B̃(μ, ε) = D B̄(−μ̄, −ε) D` computed from the direct monodromy.
pub fn adjoint_monodromy_from_direct(b: &Monodromy) -> Monodromy {
    Monodromy {
        sigma: -b.sigma.conj(),
        epsilon: -b.epsilon,
        b: d_conj_d(&b.b),
        b_sigma: -d_conj_d(&b.b_sigma),
    }
}

/// `J V̄ J` with `J` the antidiagonal ones matrix.
pub fn j_conj_j(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)].conj(), m[(1, 0)].conj(), m[(0, 1)].conj(), m[(0, 0)].conj())
}

/// Residual of the structure `V(t,σ) = [[f(σ), conj(λg(σ̄))], [λg(σ), conj(f(σ̄))]]·E(σ)`
/// with `E(σ) = exp(εbσt/|λ|²)`, together with `f(σ)f̄(σ̄) − |λ|²g(σ)ḡ(σ̄) = 1`.
///
/// `v` and `v_bar` are the fundamental matrices at `σ` and `σ̄` on the same nodes.
pub fn structure_residual(spec: &OperatorSpec, v: &FundamentalMatrix, v_bar: &FundamentalMatrix) -> f64 {
    let lam = spec.lambda();
    let rate = spec.epsilon * spec.b / lam.norm_sqr();
    let mut worst: f64 = 0.0;
    for ((t, a), b) in v.nodes.iter().zip(&v.v).zip(&v_bar.v) {
        let e = (v.sigma * rate * *t).exp();
        let e_bar = (v_bar.sigma * rate * *t).exp();
        let f = a[(0, 0)] / e;
        let lg = a[(1, 0)] / e;
        let f_sb = b[(0, 0)] / e_bar;
        let lg_sb = b[(1, 0)] / e_bar;
        let scale = a.norm() / e.norm() + 1.0;
        worst = worst.max((a[(0, 1)] / e - lg_sb.conj()).norm() / scale);
        worst = worst.max((a[(1, 1)] / e - f_sb.conj()).norm() / scale);
        // Relative to the size of the products: E(σ) can make f large while V stays O(1).
        let size = 1.0 + (f * f_sb.conj()).norm() + (lg * lg_sb.conj()).norm();
        worst = worst.max((f * f_sb.conj() - lg * lg_sb.conj() - 1.0).norm() / size);
    }
    worst
}

/// `max_t ‖V(t, σ̄) − J V̄(t, σ) J‖ / ‖V(t, σ)‖`.
pub fn symmetry_residual(v: &FundamentalMatrix, v_bar: &FundamentalMatrix) -> f64 {
    v.v.iter()
        .zip(&v_bar.v)
        .map(|(a, b)| (b - j_conj_j(a)).norm() / a.norm())
        .fold(0.0, f64::max)
}

/// Largest relative deviation of `det V(t)` from the Liouville–Jacobi value.
pub fn liouville_residual(spec: &OperatorSpec, v: &FundamentalMatrix) -> f64 {
    v.nodes
        .iter()
        .zip(&v.v)
        .map(|(t, m)| {
            let lj = liouville_det(spec, v.sigma, *t);
            (m.determinant() - lj).norm() / lj.norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::PeriodicFunction;

    fn example3(c0: C64, k: i64) -> OperatorSpec {
        let c = PeriodicFunction::from_modes(2 * k.unsigned_abs() as usize + 3, &[(k, I * c0)]).unwrap();
        OperatorSpec::new(1.0, 1.0, 0.0, 1.0, c).unwrap()
    }

    #[test]
    fn decoupled_monodromy_is_diagonal_exponential() {
        let spec = OperatorSpec::decoupled(1.0, 1.0, 0.0, 1.0).unwrap();
        let sigma = C64::new(0.3, -0.2);
        let b = monodromy(&spec, sigma, 1e-11).unwrap();
        let lam = spec.lambda();
        let e1 = (I * sigma * 2.0 * PI / lam).exp();
        let e2 = (-I * sigma * 2.0 * PI / lam.conj()).exp();
        assert!((b.b[(0, 0)] - e1).norm() < 1e-9);
        assert!((b.b[(1, 1)] - e2).norm() < 1e-9);
        assert!(b.b[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn b_sigma_matches_finite_difference() {
        let spec = example3(C64::new(0.5, 0.0), 1);
        let sigma = C64::new(0.7, 0.4);
        let h = 1e-5;
        let b = monodromy(&spec, sigma, 1e-12).unwrap();
        let bp = monodromy(&spec, sigma + h, 1e-12).unwrap().b;
        let bm = monodromy(&spec, sigma - h, 1e-12).unwrap().b;
        let fd = (bp - bm) / C64::new(2.0 * h, 0.0);
        let rel = (fd - b.b_sigma).norm() / b.b_sigma.norm();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn fundamental_matrix_satisfies_liouville() {
        let spec = example3(C64::new(1.0, 0.0), 2);
        let v = fundamental_matrix(&spec, C64::new(-0.4, 0.9), 1e-11).unwrap();
        assert!(liouville_residual(&spec, &v) < 1e-9);
    }
}
