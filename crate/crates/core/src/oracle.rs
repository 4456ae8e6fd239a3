//! Closed-form reference data: the single-mode coefficient `c = ic₀e^{ikt}`
//! with `ν = 0`, the decoupled spectrum `c ≡ 0`, and the radial solutions of
//! the second-order model.

use serde::Serialize;

use crate::error::{DcError, Result};
use crate::operator::OperatorSpec;
use crate::periodic::{PeriodicFunction, C64, I};

/// Parameters of the single-mode example.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SingleMode {
    pub a: f64,
    pub b: f64,
    pub c0: C64,
    pub k: i64,
    pub epsilon: f64,
}

/// Closed-form data at one index `j`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SingleModeLevel {
    pub j: i64,
    /// Root taken with the principal square root.
    pub sigma: C64,
    /// The partner root of the same quadratic.
    pub partner: C64,
    /// `ψ = D e^{i(j−k)t}` when `φ = e^{ijt}`.
    pub d: C64,
    /// Character of the basic solution: `(σ, j)` if `|D| < 1`, `(σ̄, k − j)` if `|D| > 1`.
    pub character: Option<(C64, i64)>,
}

impl SingleMode {
    pub fn new(a: f64, b: f64, c0: C64, k: i64, epsilon: f64) -> Result<Self> {
        if c0.norm() == 0.0 {
            return Err(DcError::InvalidInput("c₀ must be nonzero".into()));
        }
        if !(a > 0.0) {
            return Err(DcError::InvalidInput(format!("Re λ must be positive, got {a}")));
        }
        Ok(Self { a, b, c0, k, epsilon })
    }

    pub fn lambda(&self) -> C64 {
        C64::new(self.a, self.b * self.epsilon)
    }

    /// The operator with `c(t) = ic₀e^{ikt}`, `ν = 0`, sampled on `m` points.
    pub fn spec_on(&self, m: usize) -> Result<OperatorSpec> {
        let c = PeriodicFunction::from_modes(m, &[(self.k, I * self.c0)])?;
        OperatorSpec::new(self.a, self.b, 0.0, self.epsilon, c)
    }

    pub fn spec(&self) -> Result<OperatorSpec> {
        self.spec_on(2 * self.k.unsigned_abs() as usize + 3)
    }

    /// `σ_j = ibεj + (a − ibε)k/2 + √((aj − (a − ibε)k/2)² + |c₀|²)`.
    pub fn level(&self, j: i64) -> Result<SingleModeLevel> {
        let lam = self.lambda();
        let lb = lam.conj();
        let (jf, kf) = (j as f64, self.k as f64);
        let centre = I * (self.b * self.epsilon * jf) + lb * (kf / 2.0);
        let x = self.a * jf - lb * (kf / 2.0);
        let root = (x * x + self.c0.norm_sqr()).sqrt();
        let sigma = centre + root;
        let partner = centre - root;
        let d = (lam * jf - sigma) / self.c0;
        let gap = d.norm() - 1.0;
        let character = if gap.abs() <= 1e-10 {
            if self.k % 2 != 0 {
                return Err(DcError::Invariant(format!(
                    "|D_{j}| = 1 with k = {} odd, which the closed form excludes",
                    self.k
                )));
            }
            // |φ| = |ψ|: only the level j = k/2 is real and carries index j.
            if 2 * j == self.k {
                Some((sigma, j))
            } else {
                None
            }
        } else if gap < 0.0 {
            Some((sigma, j))
        } else {
            Some((sigma.conj(), self.k - j))
        };
        Ok(SingleModeLevel { j, sigma, partner, d, character })
    }

    /// Residual of the defining quadratic
    /// `σ² − [(λ−λ̄)j + kλ̄]σ − [j(j−k)|λ|² + |c₀|²]` at `σ`.
    pub fn quadratic_residual(&self, j: i64, sigma: C64) -> f64 {
        let lam = self.lambda();
        let lb = lam.conj();
        let (jf, kf) = (j as f64, self.k as f64);
        let p = (lam - lb) * jf + lb * kf;
        let q = jf * (jf - kf) * lam.norm_sqr() + self.c0.norm_sqr();
        (sigma * sigma - p * sigma - q).norm()
    }

    /// `(φ, ψ) = (e^{ijt}, D_j e^{i(j−k)t})` on an `m`-point grid.
    pub fn solution(&self, j: i64, m: usize) -> Result<(PeriodicFunction, PeriodicFunction)> {
        let lvl = self.level(j)?;
        Ok((
            PeriodicFunction::from_modes(m, &[(j, C64::new(1.0, 0.0))])?,
            PeriodicFunction::from_modes(m, &[(j - self.k, lvl.d)])?,
        ))
    }
}

/// One value of the decoupled spectrum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecoupledValue {
    pub sigma: C64,
    /// Fourier index of the nonzero component.
    pub mode: i64,
    /// `true` for `(φ, ψ) = (e^{ijt}, 0)`, `false` for `(0, e^{imt})`.
    pub phi_branch: bool,
}

/// `{λ_ε(j+ν)}` with `(e^{ijt}, 0)` and `{−λ̄_ε(m−ν)}` with `(0, e^{imt})` for indices in `range`.
pub fn decoupled_spectrum(a: f64, b: f64, nu: f64, epsilon: f64, range: std::ops::RangeInclusive<i64>) -> Vec<DecoupledValue> {
    let lam = C64::new(a, b * epsilon);
    let mut out = Vec::new();
    for j in range {
        out.push(DecoupledValue { sigma: lam * (j as f64 + nu), mode: j, phi_branch: true });
        out.push(DecoupledValue { sigma: -lam.conj() * (j as f64 - nu), mode: j, phi_branch: false });
    }
    out
}

/// Radial solution pair `(u, w)` of the second-order model with `β = −ik`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadialPair {
    pub lambda: C64,
    pub k: i64,
}

impl RadialPair {
    pub fn new(lambda: C64, k: i64) -> Result<Self> {
        if !(lambda.re > 0.0) {
            return Err(DcError::InvalidInput(format!("Re λ must be positive, got {lambda}")));
        }
        Ok(Self { lambda, k })
    }

    /// `B(t) = e^{ikt}`.
    pub fn b_at(&self, t: f64) -> C64 {
        C64::from_polar(1.0, self.k as f64 * t)
    }

    /// `log r` for `k = 0`, `r^{2ak}` otherwise.
    pub fn u(&self, r: f64) -> f64 {
        if self.k == 0 {
            r.ln()
        } else {
            r.powf(2.0 * self.lambda.re * self.k as f64)
        }
    }

    /// `iB(t)` for `k = 0`, `2iak r^{2ak} B(t)` otherwise.
    pub fn w(&self, r: f64, t: f64) -> C64 {
        if self.k == 0 {
            I * self.b_at(t)
        } else {
            let two_ak = 2.0 * self.lambda.re * self.k as f64;
            I * two_ak * r.powf(two_ak) * self.b_at(t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_of_constant_coefficient() {
        let ex = SingleMode::new(1.0, 1.0, C64::new(1.0, 0.0), 0, 1.0).unwrap();
        let lvl = ex.level(0).unwrap();
        assert!((lvl.sigma - 1.0).norm() < 1e-15);
        assert!((lvl.d + 1.0).norm() < 1e-15);
    }

    #[test]
    fn roots_solve_the_quadratic() {
        for k in 0..4 {
            for eps in [0.0, 0.5, 1.0] {
                let ex = SingleMode::new(1.0, 1.0, C64::new(2.0, 1.0), k, eps).unwrap();
                for j in -10..=10 {
                    let lvl = ex.level(j).unwrap();
                    let scale = 1.0 + lvl.sigma.norm_sqr();
                    assert!(ex.quadratic_residual(j, lvl.sigma) / scale < 1e-12);
                    assert!(ex.quadratic_residual(j, lvl.partner) / scale < 1e-12);
                }
            }
        }
    }

    #[test]
    fn resonant_level_formula() {
        // k = 2j₀: σ_{j₀} = aj₀ + √(|c₀|² − b²ε²j₀²).
        let ex = SingleMode::new(1.0, 1.0, C64::new(1.5, 0.0), 2, 0.5).unwrap();
        let lvl = ex.level(1).unwrap();
        let expect = 1.0 + (1.5f64.powi(2) - 0.25).sqrt();
        assert!((lvl.sigma - expect).norm() < 1e-14);
    }

    #[test]
    fn decoupled_families_are_disjoint_for_generic_nu() {
        // The families are conjugate to each other (j ↔ −m) and meet only on the real axis.
        let vals = decoupled_spectrum(1.0, 1.0, 0.3, 1.0, -5..=5);
        for x in vals.iter().filter(|v| v.phi_branch) {
            for y in vals.iter().filter(|v| !v.phi_branch) {
                assert!((x.sigma - y.sigma).norm() > 1e-3);
                if x.mode == -y.mode {
                    assert!((x.sigma - y.sigma.conj()).norm() < 1e-14);
                }
            }
        }
    }
}
