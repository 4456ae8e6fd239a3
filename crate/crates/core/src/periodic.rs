//! Band-limited 2π-periodic complex functions.
//!
//! A [`PeriodicFunction`] holds `M` equispaced samples at `t_k = 2πk/M`
//! (`M` odd) together with the Fourier coefficients `c_l`, `|l| ≤ (M-1)/2`,
//! so that `f(t) = Σ c_l e^{ilt}` interpolates the samples exactly.

use std::f64::consts::PI;

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{DcError, Result};

pub type C64 = Complex<f64>;

pub const I: C64 = Complex { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFunction {
    samples: Vec<C64>,
    /// `coeffs[l + K]` is `c_l`.
    coeffs: Vec<C64>,
}

fn check_m(m: usize) -> Result<()> {
    if m < 3 || m % 2 == 0 {
        return Err(DcError::InvalidInput(format!(
            "grid size M must be odd and at least 3, got {m}"
        )));
    }
    Ok(())
}

pub(crate) fn dft(samples: &[C64]) -> Vec<C64> {
    let m = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let k = (m - 1) / 2;
    let scale = 1.0 / m as f64;
    (0..m)
        .map(|idx| {
            let l = idx as i64 - k as i64;
            buf[l.rem_euclid(m as i64) as usize] * scale
        })
        .collect()
}

pub(crate) fn idft(coeffs: &[C64]) -> Vec<C64> {
    let m = coeffs.len();
    let k = (m - 1) / 2;
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (idx, c) in coeffs.iter().enumerate() {
        let l = idx as i64 - k as i64;
        buf[l.rem_euclid(m as i64) as usize] = *c;
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf
}

/// Sample nodes `2πk/M`.
pub fn nodes(m: usize) -> Vec<f64> {
    (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect()
}

impl PeriodicFunction {
    pub fn from_samples(samples: Vec<C64>) -> Result<Self> {
        check_m(samples.len())?;
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DcError::InvalidInput("non-finite sample".into()));
        }
        let coeffs = dft(&samples);
        Ok(Self { samples, coeffs })
    }

    /// Build from centered coefficients `coeffs[l + K]`, `K = (len-1)/2`.
    pub fn from_coeffs(coeffs: Vec<C64>) -> Result<Self> {
        check_m(coeffs.len())?;
        let samples = idft(&coeffs);
        Ok(Self { samples, coeffs })
    }

    /// Build on an `m`-point grid from sparse modes `(l, c_l)`.
    pub fn from_modes(m: usize, modes: &[(i64, C64)]) -> Result<Self> {
        check_m(m)?;
        let k = ((m - 1) / 2) as i64;
        let mut coeffs = vec![C64::new(0.0, 0.0); m];
        for &(l, c) in modes {
            if l.abs() > k {
                return Err(DcError::InvalidInput(format!(
                    "mode {l} exceeds the band limit {k} of an {m}-point grid"
                )));
            }
            coeffs[(l + k) as usize] += c;
        }
        Self::from_coeffs(coeffs)
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        check_m(m)?;
        Self::from_samples(nodes(m).into_iter().map(f).collect())
    }

    pub fn constant(m: usize, z: C64) -> Result<Self> {
        Self::from_modes(m, &[(0, z)])
    }

    pub fn zero(m: usize) -> Result<Self> {
        Self::constant(m, C64::new(0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn band_limit(&self) -> i64 {
        ((self.len() - 1) / 2) as i64
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, l: i64) -> C64 {
        let k = self.band_limit();
        if l.abs() > k {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(l + k) as usize]
        }
    }

    /// Nonzero modes with `|c_l| > tol · max|c|`.
    pub fn modes(&self, tol: f64) -> Vec<(i64, C64)> {
        let k = self.band_limit();
        let cmax = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > tol * cmax && c.norm() > 0.0)
            .map(|(i, c)| (i as i64 - k, *c))
            .collect()
    }

    /// Largest `|l|` carrying a coefficient above `tol · max|c|`.
    pub fn bandwidth(&self, tol: f64) -> i64 {
        self.modes(tol).iter().map(|(l, _)| l.abs()).max().unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> C64 {
        eval_modes(&self.modes(0.0), t)
    }

    pub fn mean(&self) -> C64 {
        self.coeff(0)
    }

    /// Trapezoid value of `∫₀^{2π} f dt`.
    pub fn integral(&self) -> C64 {
        self.mean() * (2.0 * PI)
    }

    pub fn derivative(&self) -> Self {
        let k = self.band_limit();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::new(0.0, (i as i64 - k) as f64))
            .collect();
        Self::from_coeffs(coeffs).expect("same grid")
    }

    /// `∫₀ᵗ (f − f̄₀) ds`, the periodic primitive of the zero-mean part.
    pub fn primitive_zero_mean(&self) -> Self {
        let k = self.band_limit();
        let mut coeffs: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let l = i as i64 - k;
                if l == 0 {
                    C64::new(0.0, 0.0)
                } else {
                    c / C64::new(0.0, l as f64)
                }
            })
            .collect();
        let at0: C64 = coeffs.iter().sum();
        coeffs[k as usize] -= at0;
        Self::from_coeffs(coeffs).expect("same grid")
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self::from_samples(self.samples.iter().map(|z| f(*z)).collect()).expect("same grid")
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        Self::from_coeffs(coeffs).expect("same grid")
    }

    fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        let m = self.len().max(other.len());
        let a = self.resample(m);
        let b = other.resample(m);
        Self::from_samples(
            a.samples
                .iter()
                .zip(b.samples.iter())
                .map(|(x, y)| f(*x, *y))
                .collect(),
        )
        .expect("same grid")
    }

    /// Pointwise sum on the finer of the two grids.
    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |x, y| x - y)
    }

    /// Pointwise product on the finer grid (aliasing is the caller's concern).
    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |x, y| x * y)
    }

    /// Zero-pad or truncate the Fourier series onto an `m`-point grid.
    pub fn resample(&self, m: usize) -> Self {
        if m == self.len() {
            return self.clone();
        }
        check_m(m).expect("resample target must be odd");
        let k_new = ((m - 1) / 2) as i64;
        let coeffs = (-k_new..=k_new).map(|l| self.coeff(l)).collect();
        Self::from_coeffs(coeffs).expect("odd grid")
    }

    /// Values at the nodes of an `m`-point grid, exact for any `m`.
    pub fn samples_on(&self, m: usize) -> Vec<C64> {
        if m == self.len() {
            return self.samples.clone();
        }
        if m > self.len() && m % 2 == 1 {
            return self.resample(m).samples;
        }
        let modes = self.modes(0.0);
        nodes(m).into_iter().map(|t| eval_modes(&modes, t)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_abs(&self) -> f64 {
        self.samples
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm distance sampled on the finer grid.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}

/// `Σ c_l e^{ilt}` for a sparse list of modes.
pub fn eval_modes(modes: &[(i64, C64)], t: f64) -> C64 {
    modes
        .iter()
        .map(|(l, c)| c * C64::from_polar(1.0, *l as f64 * t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_eval() {
        let f = PeriodicFunction::from_modes(
            17,
            &[(2, C64::new(1.0, 0.5)), (-3, C64::new(0.0, 2.0)), (0, C64::new(0.3, 0.0))],
        )
        .unwrap();
        let g = PeriodicFunction::from_samples(f.samples().to_vec()).unwrap();
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
        let t = 0.77;
        let exact = C64::new(1.0, 0.5) * C64::from_polar(1.0, 2.0 * t)
            + C64::new(0.0, 2.0) * C64::from_polar(1.0, -3.0 * t)
            + 0.3;
        assert!((f.eval(t) - exact).norm() < 1e-13);
    }

    #[test]
    fn primitive_vanishes_at_zero_and_differentiates_back() {
        let f = PeriodicFunction::from_fn(33, |t| C64::new(t.sin(), (2.0 * t).cos() + 1.0)).unwrap();
        let p = f.primitive_zero_mean();
        assert!(p.samples()[0].norm() < 1e-14);
        let back = p.derivative();
        let centered = f.map(|z| z - f.mean());
        assert!(back.sup_distance(&centered) < 1e-13);
    }

    #[test]
    fn even_grid_rejected() {
        assert!(PeriodicFunction::zero(16).is_err());
    }
}
