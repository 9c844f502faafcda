//! Closed-form a-priori constants and their empirical checks.
//!
//! Constants that depend on a sign condition are `None` when that condition
//! fails; the flags record which condition it was. Nothing here panics or
//! errors on an infeasible parameter set except [`absorbing_time`], which has
//! no meaningful value to return.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::model::{check_dissipativity, ProblemParameters};
use crate::semigroup::HeatSemigroup;
use crate::solver::Trajectory;

/// Relative allowance granted to simulation-versus-certificate comparisons.
pub const DISCRETIZATION_ALLOWANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateFlags {
    /// `beta < mu`.
    pub dissipative: bool,
    /// `mu - sigma - 1 > 0`, needed by the energy constants.
    pub energy_gap_positive: bool,
    /// `mu - sigma - 1 - c3 > 0`, needed by the alternative energy constant.
    pub alt_energy_gap_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub beta: f64,
    pub norm_g: f64,
    pub norm_f0: f64,
    pub norm_phi0: f64,
    pub c1: Option<f64>,
    pub c2: f64,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    /// The second, far-field form `2 c1 (mu-sigma-1) / (mu-sigma-1-c3)`.
    pub c4_alt: Option<f64>,
    pub c5: Option<f64>,
    /// Bound on the squared gradient segment norm after absorption.
    pub gradient_bound: Option<f64>,
    /// Radius of the absorbing ball in the segment norm (equals `c3`).
    pub absorbing_radius: Option<f64>,
    pub flags: EstimateFlags,
}

impl EstimateSet {
    pub fn dissipative(&self) -> bool {
        self.flags.dissipative
    }
}

/// Evaluate every constant for the given parameters.
///
/// `norm_g` is the L2 norm of the forcing and `norm_phi0` that of the initial
/// field `phi(0)`, which enters `c4`. The nonlinearity catalog has `f(0) = 0`.
pub fn compute_estimates(p: &ProblemParameters, norm_g: f64, norm_phi0: f64) -> EstimateSet {
    let (mu, sigma, tau, lf) = (p.mu, p.sigma, p.tau, p.lf);
    let norm_f0 = 0.0;
    let beta = check_dissipativity(p).beta;
    let dissipative = beta < mu;
    let gap = mu - sigma - 1.0;
    let energy_gap_positive = gap > 0.0;

    let c2 = (gap * tau).exp();
    let c1 = energy_gap_positive.then(|| (norm_g * norm_g / mu + 2.0 * norm_f0 * norm_f0) / gap);
    let c3 = dissipative.then(|| 2.0 * (norm_g / mu + norm_g * beta / (mu * (mu - beta))));

    let c4 = match (c1, c3) {
        (Some(c1), Some(c3)) => Some(
            0.5 * c2 * norm_phi0 * norm_phi0 + (sigma + lf * lf) * c3 * c3 / gap + 0.5 * c1,
        ),
        _ => None,
    };
    let alt_energy_gap_positive = c3.is_some_and(|c3| gap - c3 > 0.0);
    let c4_alt = match (c1, c3) {
        (Some(c1), Some(c3)) if alt_energy_gap_positive => Some(2.0 * c1 * gap / (gap - c3)),
        _ => None,
    };
    let c5 = match (c3, c4) {
        (Some(c3), Some(c4)) => {
            Some(c4.sqrt() + ((mu + sigma + lf) * c3 + norm_f0 + norm_g) * (1.0 + tau))
        }
        _ => None,
    };
    let gradient_bound = match (c3, c4) {
        (Some(c3), Some(c4)) => {
            Some(c4 + 2.0 * (sigma * sigma + lf * lf) * c3 * c3 + 2.0 * norm_g * norm_g)
        }
        _ => None,
    };

    EstimateSet {
        beta,
        norm_g,
        norm_f0,
        norm_phi0,
        c1,
        c2,
        c3,
        c4,
        c4_alt,
        c5,
        gradient_bound,
        absorbing_radius: c3,
        flags: EstimateFlags {
            dissipative,
            energy_gap_positive,
            alt_energy_gap_positive,
        },
    }
}

/// Left side of the entry condition: the part of the Gronwall bound that
/// remembers an initial segment of norm `d`.
fn transient(mu: f64, beta: f64, tau: f64, d: f64, t: f64) -> f64 {
    (mu * (tau - t)).exp() * d + (mu * tau).exp() * d * ((beta - mu) * t).exp()
}

/// Smallest `T >= 0` at which the transient left by any initial segment of
/// norm at most `norm_d` falls below `c3 / 2`, so that the segment norm is
/// within `c3` afterwards.
pub fn absorbing_time(p: &ProblemParameters, est: &EstimateSet, norm_d: f64) -> Result<f64> {
    let c3 = est
        .c3
        .ok_or_else(|| Error::Infeasible("sigma(L_f+1)e^{mu tau} - mu < 0 fails".into()))?;
    if !(norm_d >= 0.0 && norm_d.is_finite()) {
        return Err(argument("norm_D must be finite and nonnegative"));
    }
    if norm_d == 0.0 {
        return Ok(0.0);
    }
    if c3 == 0.0 {
        return Err(Error::Infeasible(
            "zero forcing: the absorbing radius is zero and is only reached asymptotically".into(),
        ));
    }
    let (mu, beta, tau) = (p.mu, est.beta, p.tau);
    let target = 0.5 * c3;
    let ok = |t: f64| transient(mu, beta, tau, norm_d, t) <= target;
    if ok(0.0) {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Infeasible("absorbing time overflow".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionReport {
    pub t_from: f64,
    pub max_segment_norm: f64,
    pub bound: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Largest segment norm over step times `t >= t_from`, against `c3`.
pub fn verify_absorption(
    traj: &Trajectory,
    est: &EstimateSet,
    t_from: f64,
) -> Result<AbsorptionReport> {
    let bound = est
        .c3
        .ok_or_else(|| Error::Infeasible("no absorbing radius".into()))?;
    let first = first_index_at_or_after(traj, t_from)?;
    let max_segment_norm = traj.segment_norms()[first..]
        .iter()
        .copied()
        .fold(0.0, f64::max);
    Ok(AbsorptionReport {
        t_from,
        max_segment_norm,
        bound,
        ratio: if bound > 0.0 {
            max_segment_norm / bound
        } else if max_segment_norm == 0.0 {
            0.0
        } else {
            f64::INFINITY
        },
        holds: max_segment_norm <= bound * (1.0 + DISCRETIZATION_ALLOWANCE),
    })
}

fn first_index_at_or_after(traj: &Trajectory, t: f64) -> Result<usize> {
    let end = traj.end_time();
    if t > end + 1e-12 {
        return Err(Error::Range { t, horizon: end });
    }
    let n = ((t / traj.dt) - 1e-9).ceil().max(0.0) as usize;
    Ok(n.min(traj.steps()))
}

/// `sup_theta ‖u_x(t_n + theta)‖²` for every step index `n`.
pub fn gradient_segment_series(traj: &Trajectory, semigroup: &HeatSemigroup) -> Vec<f64> {
    let s = traj.steps_per_delay();
    let pointwise: Vec<f64> = traj.history.samples[..s]
        .iter()
        .chain(&traj.fields)
        .map(|f| semigroup.gradient_norm(&f.values).powi(2))
        .collect();
    (0..=traj.steps())
        .map(|n| pointwise[n..=n + s].iter().copied().fold(0.0, f64::max))
        .collect()
}

/// Trapezoidal `int_t^{t+1} sup_theta ‖u_x(s + theta)‖² ds` for each window
/// start `t = t_n >= t_from` whose window fits in the trajectory. Returns
/// `(t, integral)` pairs.
pub fn energy_integral(
    traj: &Trajectory,
    semigroup: &HeatSemigroup,
    t_from: f64,
) -> Result<Vec<(f64, f64)>> {
    let series = gradient_segment_series(traj, semigroup);
    let dt = traj.dt;
    let width = (1.0 / dt).round() as usize;
    if ((width as f64) * dt - 1.0).abs() > 1e-9 {
        return Err(argument(format!(
            "step {dt} does not divide the unit integration window"
        )));
    }
    let first = first_index_at_or_after(traj, t_from)?;
    if first + width > traj.steps() {
        return Err(argument("trajectory too short for a unit energy window"));
    }
    Ok((first..=traj.steps() - width)
        .map(|n| {
            let w = &series[n..=n + width];
            let inner: f64 = w[1..width].iter().sum();
            (traj.time(n), dt * (0.5 * (w[0] + w[width]) + inner))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t_from: f64,
    pub max_integral: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Largest unit-window energy integral after `t_from`, against `c4`.
pub fn verify_energy_integral(
    traj: &Trajectory,
    est: &EstimateSet,
    semigroup: &HeatSemigroup,
    t_from: f64,
) -> Result<EnergyReport> {
    let bound = est
        .c4
        .ok_or_else(|| Error::Infeasible("c4 undefined for these parameters".into()))?;
    let max_integral = energy_integral(traj, semigroup, t_from)?
        .into_iter()
        .map(|(_, v)| v)
        .fold(0.0, f64::max);
    Ok(EnergyReport {
        t_from,
        max_integral,
        bound,
        holds: max_integral <= bound * (1.0 + DISCRETIZATION_ALLOWANCE),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarFieldStatus {
    Found,
    /// No radius on the grid settles below `eps` at least one delay before
    /// the end of the run.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldReport {
    pub eps: f64,
    pub status: FarFieldStatus,
    pub t_emp: Option<f64>,
    pub r_emp: Option<f64>,
    /// `sup_{t >= T}` far-field mass outside `R` at the returned pair.
    pub tail_mass: Option<f64>,
    pub radii: Vec<f64>,
}

/// Radii `k0, 2 k0, 4 k0, ...` up to half the box.
pub fn doubling_radii(k0: f64, half_length: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = k0;
    while k <= 0.5 * half_length {
        out.push(k);
        k *= 2.0;
    }
    out
}

/// Scan radii in increasing order; for the first radius whose segment
/// far-field mass stays at or below `eps` from some time `T` on, return that
/// radius and the earliest such `T`. A time `T` only counts when at least one
/// delay of the run remains after it.
pub fn verify_far_field(traj: &Trajectory, eps: f64, radii: &[f64]) -> Result<FarFieldReport> {
    if !(eps > 0.0) {
        return Err(argument("eps must be positive"));
    }
    let latest = traj.steps() as isize - traj.steps_per_delay() as isize;
    let mut report = FarFieldReport {
        eps,
        status: FarFieldStatus::Inconclusive,
        t_emp: None,
        r_emp: None,
        tail_mass: None,
        radii: radii.to_vec(),
    };
    if latest < 0 {
        return Ok(report);
    }
    for &k in radii {
        let series = traj.far_field_series(k);
        // Earliest n such that series[j] <= eps for all j >= n.
        let mut n = series.len();
        while n > 0 && series[n - 1] <= eps {
            n -= 1;
        }
        if (n as isize) <= latest {
            let tail = series[n..].iter().copied().fold(0.0, f64::max);
            report.status = FarFieldStatus::Found;
            report.t_emp = Some(traj.time(n));
            report.r_emp = Some(k);
            report.tail_mass = Some(tail);
            return Ok(report);
        }
    }
    Ok(report)
}
