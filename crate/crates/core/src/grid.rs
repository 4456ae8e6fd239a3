//! Tensor grids on the cylinder and the discrete calculus used on them.
//!
//! Radial work is done in `s = log r`, where `r∂r = ∂s`. Angular derivatives
//! are spectral; radial derivatives use seven-point finite differences.

use crate::error::{DcError, Result};
use crate::periodic::{dft, idft, nodes, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderFunction {
    pub radii: Vec<f64>,
    pub m: usize,
    /// Row-major `P × M` samples, row `i` at radius `radii[i]`.
    pub values: Vec<C64>,
    /// Optional samples on the circle `r = 0`.
    pub origin: Option<Vec<C64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderDomain {
    pub r_min: f64,
    pub r_max: f64,
    /// Excluded radial bands `(r1, r2)`.
    pub exclusions: Vec<(f64, f64)>,
}

impl CylinderDomain {
    pub fn annulus(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_min >= 0.0 && r_max > r_min) {
            return Err(DcError::InvalidInput(format!(
                "annulus needs 0 <= r_min < r_max, got ({r_min}, {r_max})"
            )));
        }
        Ok(Self { r_min, r_max, exclusions: Vec::new() })
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.r_min
            && r < self.r_max
            && !self.exclusions.iter().any(|(a, b)| r >= *a && r <= *b)
    }
}

/// `p` radii equispaced in `log r` on `[r0, r1]`.
pub fn log_radii(r0: f64, r1: f64, p: usize) -> Vec<f64> {
    assert!(r0 > 0.0 && r1 > r0 && p >= 2);
    let (s0, s1) = (r0.ln(), r1.ln());
    (0..p)
        .map(|i| (s0 + (s1 - s0) * i as f64 / (p - 1) as f64).exp())
        .collect()
}

impl CylinderFunction {
    pub fn zeros(radii: Vec<f64>, m: usize) -> Self {
        let n = radii.len() * m;
        Self { radii, m, values: vec![C64::new(0.0, 0.0); n], origin: None }
    }

    pub fn from_fn(radii: Vec<f64>, m: usize, f: impl Fn(f64, f64) -> C64) -> Self {
        let ts = nodes(m);
        let mut values = Vec::with_capacity(radii.len() * m);
        for &r in &radii {
            for &t in &ts {
                values.push(f(r, t));
            }
        }
        Self { radii, m, values, origin: None }
    }

    pub fn p(&self) -> usize {
        self.radii.len()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn get(&self, i: usize, k: usize) -> C64 {
        self.values[i * self.m + k]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.radii.len() * self.m {
            return Err(DcError::InvalidInput("value array does not match grid".into()));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) || self.radii.first().is_some_and(|r| *r <= 0.0)
        {
            return Err(DcError::InvalidInput("radii must be positive and increasing".into()));
        }
        if self.values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DcError::InvalidInput("non-finite cylinder sample".into()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z = f(*z));
        if let Some(o) = out.origin.as_mut() {
            o.iter_mut().for_each(|z| *z = f(*z));
        }
        out
    }

    pub fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        let mut out = self.clone();
        for (z, w) in out.values.iter_mut().zip(&other.values) {
            *z = f(*z, *w);
        }
        out.origin = match (&self.origin, &other.origin) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()),
            _ => None,
        };
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral `∂t` of every row.
    pub fn dt(&self) -> Self {
        let mut out = self.clone();
        let k = ((self.m - 1) / 2) as i64;
        let deriv = |row: &[C64]| -> Vec<C64> {
            let c = dft(row);
            let d: Vec<C64> = c
                .iter()
                .enumerate()
                .map(|(i, z)| z * C64::new(0.0, (i as i64 - k) as f64))
                .collect();
            idft(&d)
        };
        for i in 0..self.p() {
            let d = deriv(self.row(i));
            out.row_mut(i).copy_from_slice(&d);
        }
        out.origin = self.origin.as_ref().map(|o| deriv(o));
        out
    }

    /// `r∂r = ∂s` by seven-point finite differences in `s = log r`.
    pub fn r_dr(&self) -> Self {
        let s: Vec<f64> = self.radii.iter().map(|r| r.ln()).collect();
        let mut out = self.clone();
        out.origin = None;
        let p = self.p();
        let width = 7.min(p);
        for i in 0..p {
            let start = i.saturating_sub(width / 2).min(p - width);
            let w = fornberg_weights(s[i], &s[start..start + width], 1);
            for k in 0..self.m {
                let mut acc = C64::new(0.0, 0.0);
                for (j, wj) in w.iter().enumerate() {
                    acc += self.get(start + j, k) * wj;
                }
                out.values[i * self.m + k] = acc;
            }
        }
        out
    }
}

/// Finite-difference weights for the `order`-th derivative at `x0` on `xs`.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Fourth-order quadrature weights for `∫ g ds` on an equispaced grid.
pub fn gregory_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2);
    if n < 8 {
        // Composite trapezoid is the best that fits.
        let mut w = vec![h; n];
        w[0] = h / 2.0;
        w[n - 1] = h / 2.0;
        return w;
    }
    let mut w = vec![h; n];
    let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    for (i, e) in ends.iter().enumerate() {
        w[i] = h * e;
        w[n - 1 - i] = h * e;
    }
    w
}

/// Fourth-order cumulative integral `G_i = ∫_{s_0}^{s_i} g ds` on an
/// equispaced grid.
pub fn cumulative_integral(g: &[C64], h: f64) -> Vec<C64> {
    let n = g.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + (g[i - 1] + g[i]) * (h / 2.0);
        }
        return out;
    }
    for i in 0..n - 1 {
        let piece = if i == 0 {
            (g[0] * 9.0 + g[1] * 19.0 - g[2] * 5.0 + g[3]) * (h / 24.0)
        } else if i == n - 2 {
            (g[n - 1] * 9.0 + g[n - 2] * 19.0 - g[n - 3] * 5.0 + g[n - 4]) * (h / 24.0)
        } else {
            (-g[i - 1] + g[i] * 13.0 + g[i + 1] * 13.0 - g[i + 2]) * (h / 24.0)
        };
        out[i + 1] = out[i] + piece;
    }
    out
}
