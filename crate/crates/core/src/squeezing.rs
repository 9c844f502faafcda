//! Three-way splitting of segment differences and contraction bounds.
//!
//! `P` keeps the first `k_m` discrete Dirichlet sine modes of the part of a
//! field inside `|x| < K`, `Q` keeps the remaining inside part, and `R` is
//! the part on `|x| >= K`. The sine basis lives on the `M` grid nodes with
//! `|x| < K`; it is exactly orthonormal for the grid inner product, so the
//! three pieces are orthogonal and add up to the input.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::estimates::{EstimateSet, DISCRETIZATION_ALLOWANCE};
use crate::model::{Grid, ProblemParameters};
use crate::semigroup::{Field, HeatSemigroup};
use crate::solver::{integrate_with, segment_norm, HistorySegment};
use crate::spectrum::SpectralData;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub grid: Grid,
    pub cutoff_radius: f64,
    /// Half-length of the interval on which the discrete sine modes vanish:
    /// `(M + 1) h / 2`. Equals `cutoff_radius` when it is a multiple of `h`.
    pub effective_radius: f64,
    pub k_m: usize,
    first_inside: usize,
    inside: usize,
    /// `basis[m][i]`, `m < min(k_m, M)`, `i < M`.
    basis: Vec<Vec<f64>>,
}

impl ProjectionSet {
    pub fn new(grid: Grid, cutoff_radius: f64, k_m: usize) -> Result<Self> {
        if !(cutoff_radius > 0.0 && cutoff_radius < grid.half_length) {
            return Err(argument("cutoff radius must lie inside the box"));
        }
        let inside_idx: Vec<usize> = (0..grid.points)
            .filter(|&j| grid.node(j).abs() < cutoff_radius)
            .collect();
        let m_inside = inside_idx.len();
        if m_inside == 0 {
            return Err(argument("no grid node lies inside the cutoff radius"));
        }
        let first_inside = inside_idx[0];
        let h = grid.spacing();
        let np1 = (m_inside + 1) as f64;
        let norm = (2.0 / (np1 * h)).sqrt();
        let kept = k_m.min(m_inside);
        let basis = (1..=kept)
            .map(|m| {
                (1..=m_inside)
                    .map(|i| norm * (std::f64::consts::PI * (m * i) as f64 / np1).sin())
                    .collect()
            })
            .collect();
        Ok(Self {
            grid,
            cutoff_radius,
            effective_radius: 0.5 * np1 * h,
            k_m,
            first_inside,
            inside: m_inside,
            basis,
        })
    }

    /// Number of grid nodes strictly inside the cutoff.
    pub fn inside_nodes(&self) -> usize {
        self.inside
    }

    fn inside_range(&self) -> std::ops::Range<usize> {
        self.first_inside..self.first_inside + self.inside
    }

    /// Sine coefficients of the inside part, modes `1..=min(k_m, M)`.
    pub fn coefficients(&self, u: &Field) -> Vec<f64> {
        let h = self.grid.spacing();
        let inside = &u.values[self.inside_range()];
        self.basis
            .iter()
            .map(|e| h * e.iter().zip(inside).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    pub fn p_field(&self, u: &Field) -> Field {
        let c = self.coefficients(u);
        let mut out = Field::zeros(self.grid);
        let r = self.inside_range();
        for (cm, e) in c.iter().zip(&self.basis) {
            for (o, b) in out.values[r.clone()].iter_mut().zip(e) {
                *o += cm * b;
            }
        }
        out
    }

    pub fn q_field(&self, u: &Field) -> Field {
        let p = self.p_field(u);
        let mut out = Field::zeros(self.grid);
        for j in self.inside_range() {
            out.values[j] = u.values[j] - p.values[j];
        }
        out
    }

    pub fn r_field(&self, u: &Field) -> Field {
        let mut out = u.clone();
        for j in self.inside_range() {
            out.values[j] = 0.0;
        }
        out
    }

    /// Discrete Dirichlet mode `m` (1-based) embedded in the full grid.
    pub fn mode_field(&self, m: usize) -> Field {
        let np1 = (self.inside + 1) as f64;
        let norm = (2.0 / (np1 * self.grid.spacing())).sqrt();
        let mut out = Field::zeros(self.grid);
        for (i, j) in self.inside_range().enumerate() {
            out.values[j] = norm * (std::f64::consts::PI * (m * (i + 1)) as f64 / np1).sin();
        }
        out
    }
}

pub fn project_p(seg: &HistorySegment, ps: &ProjectionSet) -> HistorySegment {
    seg.map_samples(|u| ps.p_field(u))
}

pub fn project_q(seg: &HistorySegment, ps: &ProjectionSet) -> HistorySegment {
    seg.map_samples(|u| ps.q_field(u))
}

pub fn project_r(seg: &HistorySegment, ps: &ProjectionSet) -> HistorySegment {
    seg.map_samples(|u| ps.r_field(u))
}

/// Scalars entering the contraction factors and the dimension formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionInputs {
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    pub lf: f64,
    pub rho1: f64,
    pub rho_m: f64,
    /// Dichotomy constant `K_m`.
    pub km: f64,
    pub c2: f64,
}

impl ContractionInputs {
    /// Collect inputs; the spectral data must carry a dichotomy constant.
    pub fn new(p: &ProblemParameters, spectral: &SpectralData, est: &EstimateSet) -> Result<Self> {
        let km = spectral
            .dichotomy
            .ok_or_else(|| argument("spectral data has no dichotomy constant"))?;
        Ok(Self {
            mu: p.mu,
            sigma: p.sigma,
            tau: p.tau,
            lf: p.lf,
            rho1: spectral.rho1,
            rho_m: spectral.rho_m,
            km,
            c2: est.c2,
        })
    }

    /// Inputs given directly; `c2 = e^{(mu - sigma - 1) tau}`.
    pub fn synthetic(mu: f64, sigma: f64, tau: f64, lf: f64, rho1: f64, rho_m: f64, km: f64) -> Self {
        Self {
            mu,
            sigma,
            tau,
            lf,
            rho1,
            rho_m,
            km,
            c2: ((mu - sigma - 1.0) * tau).exp(),
        }
    }

    /// `rho1 + L_f - rho_m`.
    pub fn gap(&self) -> f64 {
        self.rho1 + self.lf - self.rho_m
    }

    /// `K_m L_f / (rho1 + L_f - rho_m)`, zero when `L_f = 0`. Fails when the
    /// gap vanishes with `L_f > 0`.
    pub fn coupling(&self) -> Result<f64> {
        if self.lf == 0.0 {
            return Ok(0.0);
        }
        let gap = self.gap();
        if gap.abs() <= 1e-12 * (self.rho1.abs() + self.lf + self.rho_m.abs()) {
            return Err(Error::Infeasible(
                "rho1 + L_f - rho_m vanishes".into(),
            ));
        }
        Ok(self.km * self.lf / gap)
    }

    /// Exponent `(c2 (sigma + L_f^2) - (mu - sigma - 1)) / 2` of the outer factor.
    pub fn outer_rate(&self) -> f64 {
        0.5 * (self.c2 * (self.sigma + self.lf * self.lf) - (self.mu - self.sigma - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBounds {
    pub t: f64,
    /// Retained-mode factor with coefficient 1.
    pub bound_p: f64,
    /// Retained-mode factor with coefficient 2.
    pub bound_p_doubled: f64,
    pub bound_q: f64,
    pub bound_r: f64,
}

/// Multiplicative factors bounding `‖P d‖_C`, `‖Q d‖_C`, `‖R d‖_C` at time
/// `t` in terms of the initial difference `‖d‖_C`.
pub fn analytic_bounds(t: f64, inp: &ContractionInputs) -> Result<AnalyticBounds> {
    let grow = ((inp.lf + inp.rho1) * t).exp();
    let coupling = inp.coupling()?;
    Ok(AnalyticBounds {
        t,
        bound_p: grow,
        bound_p_doubled: 2.0 * grow,
        bound_q: inp.km * (inp.rho_m * t).exp() + coupling * grow,
        bound_r: inp.c2.sqrt() * (inp.outer_rate() * t).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionStatus {
    Measured,
    /// The two initial histories coincide, so no ratio exists.
    ZeroDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRow {
    pub t: f64,
    pub status: ContractionStatus,
    pub initial_difference: f64,
    pub measured_p: Option<f64>,
    pub measured_q: Option<f64>,
    pub measured_r: Option<f64>,
    pub bounds: AnalyticBounds,
}

impl ContractionRow {
    /// Whether each measured ratio is within its bound plus the allowance.
    /// `P` is compared with the coefficient-1 factor.
    pub fn within(&self) -> [bool; 3] {
        let tol = 1.0 + DISCRETIZATION_ALLOWANCE;
        let ok = |m: Option<f64>, b: f64| m.map_or(true, |m| m <= b * tol);
        [
            ok(self.measured_p, self.bounds.bound_p),
            ok(self.measured_q, self.bounds.bound_q),
            ok(self.measured_r, self.bounds.bound_r),
        ]
    }
}

/// Integrate both histories to the largest requested time and compare the
/// projected segment differences with the analytic factors at each time.
pub fn measure_contraction(
    phi: &HistorySegment,
    psi: &HistorySegment,
    times: &[f64],
    p: &ProblemParameters,
    ps: &ProjectionSet,
    inp: &ContractionInputs,
) -> Result<Vec<ContractionRow>> {
    if phi.grid() != psi.grid() || phi.steps_per_delay != psi.steps_per_delay {
        return Err(argument("histories must share grid and step"));
    }
    let d0 = segment_norm(&phi.sub(psi));
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(times.len());
    if d0 == 0.0 {
        for &t in times {
            rows.push(ContractionRow {
                t,
                status: ContractionStatus::ZeroDifference,
                initial_difference: 0.0,
                measured_p: None,
                measured_q: None,
                measured_r: None,
                bounds: analytic_bounds(t, inp)?,
            });
        }
        return Ok(rows);
    }
    let sg = HeatSemigroup::new(phi.grid(), p.mu);
    let a = integrate_with(&sg, phi, horizon, p)?;
    let b = integrate_with(&sg, psi, horizon, p)?;
    for &t in times {
        let n = a.index_of(t)?;
        let diff = a.segment_at_index(n).sub(&b.segment_at_index(n));
        rows.push(ContractionRow {
            t,
            status: ContractionStatus::Measured,
            initial_difference: d0,
            measured_p: Some(segment_norm(&project_p(&diff, ps)) / d0),
            measured_q: Some(segment_norm(&project_q(&diff, ps)) / d0),
            measured_r: Some(segment_norm(&project_r(&diff, ps)) / d0),
            bounds: analytic_bounds(t, inp)?,
        });
    }
    Ok(rows)
}
