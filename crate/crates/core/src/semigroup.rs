//! The damped heat semigroup `S(t) = exp(t (d^2/dx^2 - mu))` on the periodic box.
//!
//! Fields are transformed with a complex FFT and each Fourier mode with
//! wavenumber `xi` is multiplied by `exp(-(mu + xi^2) t)`. The step is exact
//! for the truncated problem, so the only time-discretization error left in
//! the solver comes from the quadrature of the delayed terms.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::model::Grid;

/// Real samples on the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub grid: Grid,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.points],
            grid,
        }
    }

    pub fn constant(grid: Grid, a: f64) -> Self {
        Self {
            values: vec![a; grid.points],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: (0..grid.points).map(|j| f(grid.node(j))).collect(),
            grid,
        }
    }

    /// Grid-weighted L2 norm, `sqrt(h * sum u_j^2)`.
    pub fn norm(&self) -> f64 {
        norm_of(&self.values, self.grid.spacing())
    }

    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn sub(&self, other: &Field) -> Field {
        Field {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            grid: self.grid,
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        Field {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            grid: self.grid,
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            values: self.values.iter().map(|v| v * s).collect(),
            grid: self.grid,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn norm_of(values: &[f64], h: f64) -> f64 {
    (h * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Angular wavenumbers of the discrete Fourier modes in FFT order.
pub fn wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.points;
    let base = std::f64::consts::PI / grid.half_length;
    (0..n)
        .map(|k| {
            let kk = if k <= n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            base * kk
        })
        .collect()
}

/// FFT plans and wavenumbers for one grid. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct HeatSemigroup {
    grid: Grid,
    mu: f64,
    xi2: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for HeatSemigroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatSemigroup")
            .field("grid", &self.grid)
            .field("mu", &self.mu)
            .finish()
    }
}

impl HeatSemigroup {
    pub fn new(grid: Grid, mu: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points);
        let inverse = planner.plan_fft_inverse(grid.points);
        let xi2 = wavenumbers(&grid).into_iter().map(|k| k * k).collect();
        Self {
            grid,
            mu,
            xi2,
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Fourier multiplier of `S(t)` in FFT order.
    pub fn multiplier(&self, t: f64) -> Vec<f64> {
        self.xi2.iter().map(|x| (-(self.mu + x) * t).exp()).collect()
    }

    /// Multiply the spectrum of `values` by `mult` in place. `buf` is scratch
    /// of length `points`.
    pub fn apply_multiplier(&self, mult: &[f64], values: &mut [f64], buf: &mut Vec<Complex64>) {
        let n = values.len();
        buf.clear();
        buf.extend(values.iter().map(|&v| Complex64::new(v, 0.0)));
        self.forward.process(buf);
        for (c, m) in buf.iter_mut().zip(mult) {
            *c *= *m;
        }
        self.inverse.process(buf);
        let scale = 1.0 / n as f64;
        for (v, c) in values.iter_mut().zip(buf.iter()) {
            *v = c.re * scale;
        }
    }

    pub fn apply(&self, t: f64, phi: &Field) -> Result<Field> {
        if !(t >= 0.0) {
            return Err(argument(format!("semigroup time must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(phi.clone());
        }
        let mut out = phi.clone();
        let mut buf = Vec::with_capacity(phi.values.len());
        self.apply_multiplier(&self.multiplier(t), &mut out.values, &mut buf);
        Ok(out)
    }

    /// L2 norm of the spatial derivative, computed spectrally.
    pub fn gradient_norm(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        // Parseval: h * sum |u'_j|^2 = (h / n) * sum xi^2 |u_hat_k|^2. The
        // Nyquist mode has no well-defined derivative of a real field; drop it.
        let s: f64 = buf
            .iter()
            .zip(&self.xi2)
            .enumerate()
            .filter(|(k, _)| *k != n / 2)
            .map(|(_, (c, x))| x * c.norm_sqr())
            .sum();
        (self.grid.spacing() / n as f64 * s).sqrt()
    }
}

/// `S(t) phi` with damping rate `mu`.
pub fn apply_semigroup(t: f64, phi: &Field, mu: f64) -> Result<Field> {
    HeatSemigroup::new(phi.grid, mu).apply(t, phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Compare `‖S(t) phi‖` against `e^{-mu t} ‖phi‖`.
pub fn semigroup_decay_check(phi: &Field, t: f64, mu: f64) -> Result<DecayCheck> {
    let lhs = apply_semigroup(t, phi, mu)?.norm();
    let rhs = (-mu * t).exp() * phi.norm();
    Ok(DecayCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-10),
    })
}
