//! Fourier–Galerkin (Hill) truncation of the periodic systems.
//!
//! Writing `φ = Σ φ_n e^{int}`, `ψ = Σ ψ_n e^{int}`, periodic solutions of the
//! direct system are eigenvectors of
//!
//! ```text
//! σφ_n =  λ(n+ν)φ_n + i(c⋆ψ)_n
//! σψ_n = −λ̄(n−ν)ψ_n − i(c̄⋆φ)_n,       (c̄)_l = conj(c_{−l})
//! ```
//!
//! and of the adjoint system
//!
//! ```text
//! μX_n =  λ(n−ν)X_n − i(c̄⋆Z)_n
//! μZ_n = −λ̄(n+ν)Z_n + i(c⋆X)_n
//! ```
//!
//! truncated to `n ∈ [lo, hi]`. At `ε = 0` the direct matrix is Hermitian.
//! Unlike the monodromy, nothing here grows exponentially in `σ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{DcError, Result};
use crate::operator::OperatorSpec;
use crate::periodic::{PeriodicFunction, C64, I};

/// One eigenvector of the truncated system.
#[derive(Clone, Debug)]
pub struct HillMode {
    pub sigma: C64,
    pub lo: i64,
    /// `phi[n - lo]` (or `X_n` for the adjoint system).
    pub phi: Vec<C64>,
    /// `psi[n - lo]` (or `Z_n`).
    pub psi: Vec<C64>,
    /// Share of `ℓ²` mass on the four outermost indices of each component.
    pub edge_mass: f64,
    /// `‖(H − σ)x‖ / ‖x‖`.
    pub residual: f64,
}

/// Eigenvalues of the truncation within `cluster_tol` of each other.
#[derive(Clone, Debug)]
pub struct HillCluster {
    /// Mean of the member eigenvalues.
    pub sigma: C64,
    /// Number of member eigenvalues.
    pub size: usize,
    /// Orthonormal basis of the kernel of `H − σ`.
    pub modes: Vec<HillMode>,
}

impl HillMode {
    pub fn hi(&self) -> i64 {
        self.lo + self.phi.len() as i64 - 1
    }

    /// Smallest odd grid that resolves every retained index.
    pub fn min_grid(&self) -> usize {
        let k = self.lo.unsigned_abs().max(self.hi().unsigned_abs()) as usize;
        2 * k + 1
    }

    /// `(φ, ψ)` sampled on an `m`-point grid, `m ≥ min_grid()`.
    pub fn functions(&self, m: usize) -> Result<(PeriodicFunction, PeriodicFunction)> {
        if m < self.min_grid() {
            return Err(DcError::InvalidInput(format!(
                "grid of {m} points cannot hold indices [{}, {}]",
                self.lo,
                self.hi()
            )));
        }
        let modes = |v: &[C64]| -> Vec<(i64, C64)> {
            v.iter().enumerate().map(|(i, z)| (self.lo + i as i64, *z)).collect()
        };
        Ok((
            PeriodicFunction::from_modes(m, &modes(&self.phi))?,
            PeriodicFunction::from_modes(m, &modes(&self.psi))?,
        ))
    }

    pub fn scale(&mut self, s: C64) {
        self.phi.iter_mut().chain(self.psi.iter_mut()).for_each(|z| *z *= s);
    }

    /// `ℓ²` norms of the `φ` and `ψ` coefficient vectors.
    pub fn component_norms(&self) -> (f64, f64) {
        let n = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (n(&self.phi), n(&self.psi))
    }
}

/// The truncated matrix on `n ∈ [lo, hi]`; `φ_n` sits at row `n − lo`, `ψ_n` at `N + n − lo`.
pub fn hill_matrix(spec: &OperatorSpec, lo: i64, hi: i64, adjoint: bool) -> Result<DMatrix<C64>> {
    if hi < lo {
        return Err(DcError::InvalidInput(format!("empty index window [{lo}, {hi}]")));
    }
    let n = (hi - lo + 1) as usize;
    let lam = spec.lambda();
    let lb = lam.conj();
    let nu = spec.nu;
    let modes = spec.c_modes();
    let mut h = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for p in 0..n {
        let idx = lo as f64 + p as f64;
        if adjoint {
            h[(p, p)] = lam * (idx - nu);
            h[(n + p, n + p)] = -lb * (idx + nu);
        } else {
            h[(p, p)] = lam * (idx + nu);
            h[(n + p, n + p)] = -lb * (idx - nu);
        }
    }
    for &(l, cl) in modes {
        // (c⋆v)_p couples p to q = p − l with weight c_l; (c̄⋆v)_p couples p to q = p + l with conj(c_l).
        for p in 0..n as i64 {
            let q = p - l;
            if (0..n as i64).contains(&q) {
                let (p, q) = (p as usize, q as usize);
                if adjoint {
                    h[(n + p, q)] += I * cl;
                } else {
                    h[(p, n + q)] += I * cl;
                }
            }
            let q = p + l;
            if (0..n as i64).contains(&q) {
                let (p, q) = (p as usize, q as usize);
                if adjoint {
                    h[(p, n + q)] += -I * cl.conj();
                } else {
                    h[(n + p, q)] += -I * cl.conj();
                }
            }
        }
    }
    Ok(h)
}

fn is_hermitian(h: &DMatrix<C64>) -> bool {
    let n = h.nrows();
    (0..n).all(|i| (i..n).all(|j| (h[(i, j)] - h[(j, i)].conj()).norm() == 0.0))
}

fn make_mode(h: &DMatrix<C64>, sigma: C64, x: &DVector<C64>, lo: i64) -> HillMode {
    let n = h.nrows() / 2;
    let norm = x.norm();
    let x = x / C64::from(norm);
    let r = (h * &x - &x * sigma).norm();
    let phi: Vec<C64> = x.rows(0, n).iter().copied().collect();
    let psi: Vec<C64> = x.rows(n, n).iter().copied().collect();
    let edge = 4.min(n);
    let edge_mass: f64 = [&phi, &psi]
        .iter()
        .map(|v| {
            v[..edge].iter().chain(v[n - edge..].iter()).map(|z| z.norm_sqr()).sum::<f64>()
        })
        .sum();
    HillMode { sigma, lo, phi, psi, edge_mass, residual: r }
}

/// Null vectors of `H − σ` by singular value decomposition.
fn kernel(h: &DMatrix<C64>, sigma: C64, max_dim: usize) -> Vec<DVector<C64>> {
    let n = h.nrows();
    let shifted = h - DMatrix::<C64>::identity(n, n) * sigma;
    let scale = h.norm().max(1.0);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*a].total_cmp(&svd.singular_values[*b]));
    let smallest = svd.singular_values[order[0]];
    order
        .iter()
        .take(max_dim)
        .enumerate()
        .filter(|(rank, i)| *rank == 0 || svd.singular_values[**i] <= (1e-9 * scale).max(1e3 * smallest))
        .map(|(_, i)| v_t.row(*i).adjoint())
        .collect()
}

/// Eigenvector of the upper-triangular `t` for its `k`-th diagonal entry.
fn triangular_eigenvector(t: &DMatrix<C64>, k: usize) -> DVector<C64> {
    let n = t.nrows();
    let tiny = 1e-14 * t.norm().max(1.0);
    let mut y = DVector::<C64>::zeros(n);
    y[k] = C64::new(1.0, 0.0);
    for i in (0..k).rev() {
        let mut acc = C64::new(0.0, 0.0);
        for l in i + 1..=k {
            acc += t[(i, l)] * y[l];
        }
        let mut d = t[(i, i)] - t[(k, k)];
        if d.norm() < tiny {
            d = C64::new(tiny, 0.0);
        }
        y[i] = -acc / d;
    }
    y
}

/// Eigen-decomposition of the truncation on `[lo, hi]`, grouped into clusters.
///
/// Only eigenvalues accepted by `keep` are returned.
pub fn hill_clusters(
    spec: &OperatorSpec,
    lo: i64,
    hi: i64,
    adjoint: bool,
    cluster_tol: f64,
    keep: impl Fn(C64) -> bool,
) -> Result<Vec<HillCluster>> {
    let h = hill_matrix(spec, lo, hi, adjoint)?;
    let dim = h.nrows();
    let values: Vec<C64>;
    let mut vectors: Vec<Option<DVector<C64>>> = vec![None; dim];
    let hermitian = is_hermitian(&h);
    let mut factors = None;
    if hermitian {
        let eig = h.clone().symmetric_eigen();
        values = eig.eigenvalues.iter().map(|v| C64::new(*v, 0.0)).collect();
        for (i, v) in vectors.iter_mut().enumerate() {
            *v = Some(eig.eigenvectors.column(i).into_owned());
        }
    } else {
        let (q, t) = h.clone().schur().unpack();
        values = (0..dim).map(|i| t[(i, i)]).collect();
        factors = Some((q, t));
    }
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(DcError::Numeric("Galerkin eigenvalues are not finite".into()));
    }
    let mut order: Vec<usize> = (0..dim).filter(|i| keep(values[*i])).collect();
    // Eigenvectors only for the kept eigenvalues.
    if let Some((q, t)) = &factors {
        for &k in &order {
            vectors[k] = Some(q * triangular_eigenvector(t, k));
        }
    }
    order.sort_by(|a, b| values[*a].re.total_cmp(&values[*b].re).then(values[*a].im.total_cmp(&values[*b].im)));
    let mut used = vec![false; dim];
    let mut clusters = Vec::new();
    for &i in &order {
        if used[i] {
            continue;
        }
        let members: Vec<usize> = order
            .iter()
            .copied()
            .filter(|k| !used[*k] && (values[*k] - values[i]).norm() <= cluster_tol)
            .collect();
        members.iter().for_each(|k| used[*k] = true);
        let size = members.len();
        let sigma = members.iter().map(|k| values[*k]).sum::<C64>() / size as f64;
        let modes = if size == 1 {
            vec![make_mode(&h, sigma, vectors[i].as_ref().expect("kept"), lo)]
        } else if hermitian {
            members.iter().map(|k| make_mode(&h, sigma, vectors[*k].as_ref().expect("kept"), lo)).collect()
        } else {
            kernel(&h, sigma, size).iter().map(|x| make_mode(&h, sigma, x, lo)).collect()
        };
        clusters.push(HillCluster { sigma, size, modes });
    }
    Ok(clusters)
}
