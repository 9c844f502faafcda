//! Method-of-steps integration of the delayed equation and the segment
//! functionals built on top of it.
//!
//! The time step is `dt = tau / steps_per_delay`, so the delayed value needed
//! at step `n` is always a stored sample: the initial history for `n < s`
//! and the computed field `n - s` afterwards. One step is the
//! exponential-trapezoid rule
//!
//! ```text
//! u[n+1] = S(dt) (u[n] + dt/2 F[n]) + dt/2 F[n+1],
//! F[n]   = sigma u(t_n - tau) + f(u(t_n - tau)) + g
//! ```
//!
//! which is the trapezoidal quadrature of the Duhamel integral over one step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::model::{Grid, InitialHistorySpec, ProblemParameters};
use crate::rng::SeededRng;
use crate::semigroup::{norm_of, Field, HeatSemigroup};

/// `sup |chi'|` for the cubic ramp used by [`smooth_cutoff`].
pub const CUTOFF_DERIVATIVE_BOUND: f64 = 1.5;

/// A history `phi(theta)`, `theta in [-tau, 0]`, sampled at
/// `theta_j = -tau + j * tau / steps_per_delay`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    pub samples: Vec<Field>,
    pub steps_per_delay: usize,
    pub tau: f64,
}

impl HistorySegment {
    pub fn new(samples: Vec<Field>, tau: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(argument("a history needs at least two samples"));
        }
        if !(tau > 0.0) {
            return Err(argument("tau must be positive"));
        }
        let grid = samples[0].grid;
        if samples.iter().any(|s| s.grid != grid || s.values.len() != grid.points) {
            return Err(argument("history samples live on different grids"));
        }
        let steps_per_delay = samples.len() - 1;
        Ok(Self {
            samples,
            steps_per_delay,
            tau,
        })
    }

    /// The same field at every history time.
    pub fn constant(field: Field, tau: f64, steps_per_delay: usize) -> Self {
        Self {
            samples: vec![field; steps_per_delay + 1],
            steps_per_delay,
            tau,
        }
    }

    pub fn from_fn(
        grid: Grid,
        tau: f64,
        steps_per_delay: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let dt = tau / steps_per_delay as f64;
        let samples = (0..=steps_per_delay)
            .map(|j| {
                let theta = -tau + j as f64 * dt;
                Field::from_fn(grid, |x| f(theta, x))
            })
            .collect();
        Self {
            samples,
            steps_per_delay,
            tau,
        }
    }

    /// Build a history from its configuration. Only `RandomBumps` consumes
    /// randomness.
    pub fn from_spec(
        spec: &InitialHistorySpec,
        grid: Grid,
        tau: f64,
        steps_per_delay: usize,
        rng: &mut SeededRng,
    ) -> Self {
        match *spec {
            InitialHistorySpec::Zero => Self::constant(Field::zeros(grid), tau, steps_per_delay),
            InitialHistorySpec::Constant { value } => {
                Self::constant(Field::constant(grid, value), tau, steps_per_delay)
            }
            InitialHistorySpec::GaussianBump {
                amplitude,
                center,
                width,
            } => Self::constant(
                Field::from_fn(grid, |x| {
                    let s = (x - center) / width;
                    amplitude * (-0.5 * s * s).exp()
                }),
                tau,
                steps_per_delay,
            ),
            InitialHistorySpec::RandomBumps {
                max_norm,
                support,
                bumps,
            } => random_bumps(grid, tau, steps_per_delay, rng, max_norm, support, bumps),
        }
    }

    pub fn grid(&self) -> Grid {
        self.samples[0].grid
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.steps_per_delay as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        -self.tau + j as f64 * self.dt()
    }

    /// The value at `theta = 0`.
    pub fn last(&self) -> &Field {
        self.samples.last().expect("non-empty history")
    }

    /// Piecewise-linear interpolation in `theta`.
    pub fn at(&self, theta: f64) -> Result<Field> {
        if !(theta >= -self.tau - 1e-12 && theta <= 1e-12) {
            return Err(argument(format!("theta = {theta} outside [-tau, 0]")));
        }
        let x = ((theta + self.tau) / self.dt()).clamp(0.0, self.steps_per_delay as f64);
        let j = (x.floor() as usize).min(self.steps_per_delay - 1);
        let w = x - j as f64;
        let (a, b) = (&self.samples[j], &self.samples[j + 1]);
        Ok(Field {
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(p, q)| (1.0 - w) * p + w * q)
                .collect(),
            grid: a.grid,
        })
    }

    pub fn norm(&self) -> f64 {
        segment_norm(self)
    }

    pub fn sub(&self, other: &HistorySegment) -> HistorySegment {
        HistorySegment {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a.sub(b))
                .collect(),
            steps_per_delay: self.steps_per_delay,
            tau: self.tau,
        }
    }

    pub fn add(&self, other: &HistorySegment) -> HistorySegment {
        HistorySegment {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a.add(b))
                .collect(),
            steps_per_delay: self.steps_per_delay,
            tau: self.tau,
        }
    }

    pub fn scaled(&self, s: f64) -> HistorySegment {
        HistorySegment {
            samples: self.samples.iter().map(|a| a.scaled(s)).collect(),
            steps_per_delay: self.steps_per_delay,
            tau: self.tau,
        }
    }

    pub fn map_samples(&self, f: impl Fn(&Field) -> Field) -> HistorySegment {
        HistorySegment {
            samples: self.samples.iter().map(f).collect(),
            steps_per_delay: self.steps_per_delay,
            tau: self.tau,
        }
    }
}

fn random_bumps(
    grid: Grid,
    tau: f64,
    steps_per_delay: usize,
    rng: &mut SeededRng,
    max_norm: f64,
    support: f64,
    bumps: usize,
) -> HistorySegment {
    let mut shapes = Vec::with_capacity(bumps);
    for _ in 0..bumps {
        let w = support * rng.uniform_in(0.15, 0.4);
        let c = rng.uniform_in(-(support - w), support - w);
        let a = rng.normal();
        let d = 0.5 * rng.normal();
        shapes.push((c, w, a, d));
    }
    let target = max_norm * rng.uniform_in(0.5, 1.0);
    let seg = HistorySegment::from_fn(grid, tau, steps_per_delay, |theta, x| {
        shapes
            .iter()
            .map(|&(c, w, a, d)| {
                let s = (x - c) / w;
                let b = if s.abs() < 1.0 { (1.0 - s * s).powi(2) } else { 0.0 };
                (a + d * theta / tau) * b
            })
            .sum()
    });
    let n = seg.norm();
    if n > 0.0 {
        seg.scaled(target / n)
    } else {
        seg
    }
}

/// `sup_j ‖phi(theta_j)‖`.
pub fn segment_norm(seg: &HistorySegment) -> f64 {
    seg.samples.iter().map(Field::norm).fold(0.0, f64::max)
}

/// The solution on `[0, T]` at the step times together with its history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub history: HistorySegment,
    /// `fields[n]` is `u(n dt)`; `fields[0]` equals the last history sample.
    pub fields: Vec<Field>,
    pub dt: f64,
}

impl Trajectory {
    pub fn steps_per_delay(&self) -> usize {
        self.history.steps_per_delay
    }

    pub fn tau(&self) -> f64 {
        self.history.tau
    }

    pub fn grid(&self) -> Grid {
        self.history.grid()
    }

    /// Number of computed steps.
    pub fn steps(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn end_time(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// `u` at step index `n`, which may be negative down to `-s`.
    pub fn field_at(&self, n: isize) -> &Field {
        if n >= 0 {
            &self.fields[n as usize]
        } else {
            &self.history.samples[(n + self.steps_per_delay() as isize) as usize]
        }
    }

    /// Step index of an aligned time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let end = self.end_time();
        if !(t >= -1e-12) || t > end + 1e-9 * end.max(1.0) {
            return Err(Error::Range { t, horizon: end });
        }
        let x = t / self.dt;
        let n = x.round();
        if (x - n).abs() > 1e-6 {
            return Err(argument(format!(
                "t = {t} is not on the step grid (dt = {})",
                self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Segment at step index `n`.
    pub fn segment_at_index(&self, n: usize) -> HistorySegment {
        let s = self.steps_per_delay() as isize;
        let samples = (0..=s)
            .map(|j| self.field_at(n as isize - s + j).clone())
            .collect();
        HistorySegment {
            samples,
            steps_per_delay: self.steps_per_delay(),
            tau: self.tau(),
        }
    }

    /// `‖u(t_n)‖` for `n = -s, ..., N`.
    fn pointwise_norms_with_history(&self) -> Vec<f64> {
        let h = self.grid().spacing();
        self.history.samples[..self.steps_per_delay()]
            .iter()
            .chain(&self.fields)
            .map(|f| norm_of(&f.values, h))
            .collect()
    }

    /// `‖u(t_n)‖` for `n = 0, ..., N`.
    pub fn norms(&self) -> Vec<f64> {
        self.fields.iter().map(Field::norm).collect()
    }

    /// `‖u_{t_n}‖_C` for `n = 0, ..., N`.
    pub fn segment_norms(&self) -> Vec<f64> {
        sliding_max(&self.pointwise_norms_with_history(), self.steps_per_delay())
    }

    /// Far-field mass outside `|x| >= k` of the segment at each step index.
    pub fn far_field_series(&self, k: f64) -> Vec<f64> {
        let grid = self.grid();
        let outside = outside_mask(&grid, k);
        let h = grid.spacing();
        let pointwise: Vec<f64> = self.history.samples[..self.steps_per_delay()]
            .iter()
            .chain(&self.fields)
            .map(|f| masked_mass(&f.values, &outside, h))
            .collect();
        sliding_max(&pointwise, self.steps_per_delay())
    }

    /// Largest fraction of squared mass found in the outer eighth of the box
    /// over all stored fields. Periodic truncation is trustworthy while this
    /// stays tiny.
    pub fn max_boundary_fraction(&self) -> f64 {
        self.history
            .samples
            .iter()
            .chain(&self.fields)
            .map(boundary_mass_fraction)
            .fold(0.0, f64::max)
    }
}

/// Share of `‖u‖²` located in `|x| >= 7L/8`. Zero fields report zero.
pub fn boundary_mass_fraction(u: &Field) -> f64 {
    let mask = outside_mask(&u.grid, 0.875 * u.grid.half_length);
    let total: f64 = u.values.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 0.0;
    }
    masked_mass(&u.values, &mask, 1.0) / total
}

/// `out[i] = max(v[i], ..., v[i + w])`, i.e. windows of `w + 1` entries.
fn sliding_max(v: &[f64], w: usize) -> Vec<f64> {
    if v.len() <= w {
        return Vec::new();
    }
    (0..v.len() - w)
        .map(|i| v[i..=i + w].iter().copied().fold(0.0, f64::max))
        .collect()
}

fn outside_mask(grid: &Grid, k: f64) -> Vec<bool> {
    (0..grid.points).map(|j| grid.node(j).abs() >= k).collect()
}

fn masked_mass(values: &[f64], mask: &[bool], h: f64) -> f64 {
    h * values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v * v)
        .sum::<f64>()
}

/// Integrate from `phi` up to the first step time `>= horizon`.
pub fn integrate(phi: &HistorySegment, horizon: f64, p: &ProblemParameters) -> Result<Trajectory> {
    let semigroup = HeatSemigroup::new(phi.grid(), p.mu);
    integrate_with(&semigroup, phi, horizon, p)
}

/// As [`integrate`] with a prepared semigroup (reused across ensembles).
pub fn integrate_with(
    semigroup: &HeatSemigroup,
    phi: &HistorySegment,
    horizon: f64,
    p: &ProblemParameters,
) -> Result<Trajectory> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(argument(format!("horizon must be nonnegative, got {horizon}")));
    }
    let grid = phi.grid();
    if *semigroup.grid() != grid {
        return Err(argument("semigroup and history grids differ"));
    }
    if phi.samples.iter().any(|s| s.grid != grid) {
        return Err(argument("history samples live on different grids"));
    }
    let s = phi.steps_per_delay;
    let dt = phi.dt();
    let nsteps = (horizon / dt - 1e-9).ceil().max(0.0) as usize;
    let mult = semigroup.multiplier(dt);
    let g: Vec<f64> = (0..grid.points).map(|j| p.forcing.eval(grid.node(j))).collect();
    let nl = p.nonlinearity;
    let sigma = p.sigma;
    let half = 0.5 * dt;

    let mut fields = Vec::with_capacity(nsteps + 1);
    fields.push(phi.last().clone());
    let mut buf: Vec<Complex64> = Vec::with_capacity(grid.points);
    let mut work = vec![0.0; grid.points];

    for n in 0..nsteps {
        let (next, finite) = {
            let d_now = if n < s { &phi.samples[n] } else { &fields[n - s] };
            let d_next = if n + 1 < s {
                &phi.samples[n + 1]
            } else {
                &fields[n + 1 - s]
            };
            let u = &fields[n].values;
            for j in 0..grid.points {
                let dn = d_now.values[j];
                work[j] = u[j] + half * (sigma * dn + nl.eval(dn) + g[j]);
            }
            semigroup.apply_multiplier(&mult, &mut work, &mut buf);
            let mut finite = true;
            let next: Vec<f64> = (0..grid.points)
                .map(|j| {
                    let dn = d_next.values[j];
                    let v = work[j] + half * (sigma * dn + nl.eval(dn) + g[j]);
                    finite &= v.is_finite();
                    v
                })
                .collect();
            (next, finite)
        };
        if !finite {
            return Err(Error::Divergence {
                step: n + 1,
                time: (n + 1) as f64 * dt,
            });
        }
        fields.push(Field { values: next, grid });
    }
    Ok(Trajectory {
        history: phi.clone(),
        fields,
        dt,
    })
}

/// The segment `u_t` on `[t - tau, t]`.
pub fn segment_at(traj: &Trajectory, t: f64) -> Result<HistorySegment> {
    Ok(traj.segment_at_index(traj.index_of(t)?))
}

/// Cutoff radius and whether the smooth ramp replaces the sharp indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffRadius {
    pub k: f64,
    pub smooth: bool,
}

impl CutoffRadius {
    pub fn new(k: f64, smooth: bool) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(argument("cutoff radius must be positive"));
        }
        Ok(Self { k, smooth })
    }

    /// Checks `4K <= L` for the given grid.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if 4.0 * self.k > grid.half_length {
            return Err(argument(format!(
                "cutoff radius {} exceeds a quarter of the box half-length {}",
                self.k, grid.half_length
            )));
        }
        Ok(())
    }

    /// Weight of the outer part at `x`: the indicator of `|x| >= K`, or the
    /// smooth ramp.
    #[inline]
    pub fn outer_weight(&self, x: f64) -> f64 {
        if self.smooth {
            smooth_cutoff(x, self.k)
        } else if x.abs() >= self.k {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitFields {
    /// Inner part.
    pub v: Field,
    /// Outer part.
    pub w: Field,
}

/// Split `u = v + w` into inner and outer parts.
pub fn split_fields(u: &Field, k: &CutoffRadius) -> SplitFields {
    let grid = u.grid;
    let mut v = Vec::with_capacity(grid.points);
    let mut w = Vec::with_capacity(grid.points);
    for (j, &x) in u.values.iter().enumerate() {
        let wj = x * k.outer_weight(grid.node(j));
        w.push(wj);
        v.push(x - wj);
    }
    SplitFields {
        v: Field { values: v, grid },
        w: Field { values: w, grid },
    }
}

/// `sup_j` of the squared L2 mass of `seg(theta_j)` on `|x| >= k`.
pub fn far_field_mass(seg: &HistorySegment, k: f64) -> f64 {
    let grid = seg.grid();
    let mask = outside_mask(&grid, k);
    let h = grid.spacing();
    seg.samples
        .iter()
        .map(|f| masked_mass(&f.values, &mask, h))
        .fold(0.0, f64::max)
}

/// `chi(|x|^2 / K^2)` where `chi(s)` is 0 for `s <= 1`, 1 for `s >= 2`, and
/// `3r^2 - 2r^3` with `r = s - 1` in between.
pub fn smooth_cutoff(x: f64, k: f64) -> f64 {
    let r = ((x * x) / (k * k) - 1.0).clamp(0.0, 1.0);
    r * r * (3.0 - 2.0 * r)
}
